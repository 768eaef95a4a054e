//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::Instant;

use epidyn::dynamics::{draw_sample, social_learning_for};
use epidyn::experiments::{execute, fit_decay_rate, preset, Overrides, Preset};
use epidyn::metrics::{apply_lambda, standard_metrics};
use epidyn::rng::RngStreams;
use epidyn::spectral::wielandt_bound;
use epidyn::{
    communicates, compute_credibility, consensus_distance, dobrushin_coefficient, is_primitive,
    nearest_individual_distance, normalize_rows, run, step, ConceptSpace, KnowledgeFunction,
    KnowledgeSetting, LikelihoodLandscape, MetricVariant, Model, PopulationState,
    SimulationConfig, StructureMatrix,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn earth() -> (KnowledgeSetting, Vec<KnowledgeFunction>, LikelihoodLandscape) {
    let s = KnowledgeSetting::integer_range(1, 5, ConceptSpace::labelled(&[("F", 1.0), ("R", 2.0)]))
        .unwrap();
    let c = s.concepts();
    let (z, f, r) = (c.point("0").unwrap(), c.point("F").unwrap(), c.point("R").unwrap());
    let mk = |vals: [&[f64]; 5]| {
        KnowledgeFunction::new(&s, vals.iter().map(|v| v.to_vec()).collect()).unwrap()
    };
    // experiences f1, f2, f3, r1, r2
    let pop = vec![
        mk([f, z, z, z, z]),
        mk([f, z, z, f, z]),
        mk([r, z, z, r, z]),
        mk([f, z, z, r, z]),
    ];
    let flat = vec![0.5, 1.0, 1.0];
    let round = vec![0.5, 0.0, 1.0];
    let l = LikelihoodLandscape::Tabular {
        table: vec![flat.clone(), flat.clone(), flat, round.clone(), round],
    };
    (s, pop, l)
}

fn credibility_example() -> Outcome {
    let (s, pop, l) = earth();
    let c = compute_credibility(&s, &pop, &l, 0.0).map_err(|e| e.to_string())?;
    #[rustfmt::skip]
    let printed = [
        [1.0, 1.0, 1.0, 1.0],
        [0.5, 0.0, 1.0, 1.0],
        [0.5, 0.0, 1.0, 0.5],
        [0.5, 0.0, 1.0, 1.0],
    ];
    let mut matches = 0;
    let mut mismatched = Vec::new();
    for (i, row) in printed.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if c.matrix()[(i, j)] == *v {
                matches += 1;
            } else {
                mismatched.push((i + 1, j + 1));
            }
        }
    }
    let n = normalize_rows(c.matrix());
    let rows = [
        (0, [0.25, 0.25, 0.25, 0.25]),
        (2, [0.25, 0.0, 0.5, 0.25]),
        (3, [0.2, 0.0, 0.4, 0.4]),
    ];
    let rows_ok = rows
        .iter()
        .all(|(i, r)| (0..4).all(|j| n[(*i, j)] == r[j]));
    check(
        matches == 15 && mismatched == [(2, 4)] && c.matrix()[(1, 3)] == 0.5 && rows_ok,
        format!("{matches}/16 entries match, differing at {mismatched:?}; normalized rows 1, 3, 4 exact: {rows_ok}"),
    )
}

fn primitivity() -> Outcome {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        1.0, 1.0, 0.0, 0.0,
        1.0, 1.0, 1.0, 0.0,
        0.0, 1.0, 1.0, 1.0,
        0.0, 0.0, 1.0, 1.0,
    ]);
    let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let ra = is_primitive(&a).map_err(|e| e.to_string())?;
    let rb = is_primitive(&b).map_err(|e| e.to_string())?;
    check(
        ra == (true, Some(3)) && rb == (false, None),
        format!("A -> {ra:?}, B -> {rb:?}"),
    )
}

fn professor() -> Outcome {
    let start = Instant::now();
    let mut spec = preset(Preset::Professor, &Overrides::default()).map_err(|e| e.to_string())?;
    spec.replicates = 100;
    spec.horizon = 25;
    spec.sample_size = 50;
    let exp = spec.resolve().map_err(|e| e.to_string())?;
    let res = execute(&exp).map_err(|e| e.to_string())?;
    let d0 = res.output.trace.means[0].d_nearest;
    let prof = res.deltas[0];
    let students = &res.deltas[1..];
    let secs = start.elapsed().as_secs_f64();
    check(
        prof <= 0.2
            && students.iter().all(|d| (8.4..=9.5).contains(d))
            && (d0 - 8.94427190999917).abs() <= 1e-9
            && secs < 10.0,
        format!("delta professor {prof:.4}, students {students:.4?}, d(0) = {d0}, {secs:.2} s"),
    )
}

fn language() -> Outcome {
    let start = Instant::now();
    let mut spec = preset(Preset::Language, &Overrides::default()).map_err(|e| e.to_string())?;
    spec.horizon = 400;
    spec.replicates = 20;
    let exp = spec.resolve().map_err(|e| e.to_string())?;
    let res = execute(&exp).map_err(|e| e.to_string())?;
    let d0 = res.output.trace.means[0].d_nearest;
    let reached = (0..20)
        .filter(|&r| {
            let fin = nearest_individual_distance(&res.output.finals[r]);
            fin < 0.05 || res.output.trace.replicate(r).iter().any(|row| row.d_nearest < 0.05)
        })
        .count();
    let secs = start.elapsed().as_secs_f64();
    check(
        (d0 - 6.32455532033676).abs() <= 1e-9 && reached * 10 >= 9 * 20 && secs < 30.0,
        format!("d(0) = {d0}, {reached}/20 replicates below 0.05 by t = 400, {secs:.2} s"),
    )
}

/// Mean relative entropy at `k T / 10` for `k = 0..=10`.
fn relative_entropy_checkpoints(horizon: u64) -> Result<(Vec<f64>, f64), String> {
    let start = Instant::now();
    let mut spec = preset(Preset::Creation, &Overrides::default()).map_err(|e| e.to_string())?;
    spec.horizon = horizon;
    spec.replicates = 10;
    let exp = spec.resolve().map_err(|e| e.to_string())?;
    let res = execute(&exp).map_err(|e| e.to_string())?;
    let means = res.output.trace.mean_relative_entropy().ok_or("no relative entropy")?;
    let mut points: Vec<f64> = (0..10).map(|k| means[(k * horizon / 10) as usize]).collect();
    points.push(res.final_relative_entropy.ok_or("no final relative entropy")?);
    Ok((points, start.elapsed().as_secs_f64()))
}

fn violations(points: &[f64]) -> usize {
    points.windows(2).filter(|w| w[1] <= w[0]).count()
}

fn creation() -> Outcome {
    let (scaled, scaled_secs) = relative_entropy_checkpoints(2_500)?;
    let (full, _) = relative_entropy_checkpoints(25_000)?;
    let (vs, vf) = (violations(&scaled), violations(&full));
    let re_end = *scaled.last().unwrap();
    check(
        scaled[0] == -1.0
            && full[0] == -1.0
            && re_end >= -0.5
            && vs <= 1
            && vf <= 1
            && scaled_secs < 60.0,
        format!(
            "RE(0) = {}; T=2500: RE(T) = {re_end:.4}, {vs}/10 violations, {scaled_secs:.1} s; \
             T=25000 checkpoints {:.4?}, {vf}/10 violations",
            scaled[0], full
        ),
    )
}

fn exponential_convergence() -> Outcome {
    let rate = |alpha: f64| -> Result<f64, String> {
        let o = Overrides {
            alpha: Some(alpha),
            ..Default::default()
        };
        let exp = preset(Preset::SelfInertia, &o)
            .and_then(|s| s.resolve())
            .map_err(|e| e.to_string())?;
        let res = execute(&exp).map_err(|e| e.to_string())?;
        fit_decay_rate(&res.output.trace.mean_nearest()).map_err(|e| e.to_string())
    };
    let rates: Vec<f64> = [0.1, 0.5, 0.9, 1.0]
        .into_iter()
        .map(rate)
        .collect::<Result<_, _>>()?;
    check(
        rates[..3].iter().all(|r| *r < 1.0)
            && rates[1] < rates[2]
            && (rates[3] - 1.0).abs() <= 1e-9,
        format!("rates for alpha 0.1, 0.5, 0.9, 1: {rates:.4?}"),
    )
}

fn random_population(rng: &mut ChaCha8Rng, s: &KnowledgeSetting, n: usize) -> PopulationState {
    let fs = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..s.num_experiences())
                .map(|_| rng.random_range(-10.0..10.0))
                .collect();
            KnowledgeFunction::from_scalars(s, &v).unwrap()
        })
        .collect();
    PopulationState::new(s, fs).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng, s: &KnowledgeSetting, n: usize) -> Model {
    let gamma = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.01..1.0));
    let landscape = LikelihoodLandscape::GaussianPeak {
        center: vec![rng.random_range(-5.0..5.0)],
        width: rng.random_range(1.0..50.0),
    };
    Model::new(s.clone(), StructureMatrix::new(gamma).unwrap(), landscape).unwrap()
}

fn one_step_contraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let s = KnowledgeSetting::integer_range(1, 5, ConceptSpace::interval(-10.0, 10.0)).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let state = random_population(&mut rng, &s, n);
        let model = random_model(&mut rng, &s, n);
        let c_min = rng.random_range(0.01..1.0);
        let lambda = social_learning_for(&state, &model, c_min).map_err(|e| e.to_string())?;
        let delta = dobrushin_coefficient(lambda.matrix()).map_err(|e| e.to_string())?;
        let next = apply_lambda(&state, &lambda).map_err(|e| e.to_string())?;
        let excess = consensus_distance(&next) - delta * consensus_distance(&state);
        worst = worst.max(excess);
        if excess > 1e-9 {
            failures += 1;
        }
    }
    check(
        failures == 0,
        format!("{failures}/100 populations exceed the bound; worst excess {worst:.3e}"),
    )
}

fn bool_power_positive(a: &[Vec<bool>], k: usize) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut p = a.to_vec();
    for _ in 1..k {
        p = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|l| p[i][l] && a[l][j])).collect())
            .collect();
    }
    p
}

fn brute_primitive(a: &[Vec<bool>]) -> (bool, Option<usize>) {
    let n = a.len();
    for k in 1..=wielandt_bound(n) {
        if bool_power_positive(a, k).iter().all(|r| r.iter().all(|x| *x)) {
            return (true, Some(k));
        }
    }
    (false, None)
}

fn brute_communicates(a: &[Vec<bool>], i: usize, j: usize) -> bool {
    (1..=a.len()).any(|k| bool_power_positive(a, k)[i][j])
}

fn graph_oracles_agree(a: &[Vec<bool>]) -> Result<bool, String> {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| if a[i][j] { 1.0 } else { 0.0 });
    let ours = is_primitive(&m).map_err(|e| e.to_string())?;
    if ours != brute_primitive(a) {
        return Ok(false);
    }
    for i in 0..n {
        for j in 0..n {
            if communicates(&m, i, j).map_err(|e| e.to_string())? != brute_communicates(a, i, j) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = KnowledgeSetting::integer_range(1, 5, ConceptSpace::interval(-10.0, 10.0)).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;

    // row-stochastic Λ
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let state = random_population(&mut rng, &s, n);
        let mut model = random_model(&mut rng, &s, n);
        if rng.random_bool(0.2) {
            let g = DMatrix::from_fn(n, n, |_, _| if rng.random_bool(0.5) { 0.0 } else { 1.0 });
            model.gamma = StructureMatrix::new(g).unwrap();
        }
        let c_min = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) };
        let lambda = social_learning_for(&state, &model, c_min).map_err(|e| e.to_string())?;
        for row in lambda.matrix().row_iter() {
            worst = worst.max((row.sum() - 1.0).abs());
            ok &= row.iter().all(|v| *v >= 0.0);
        }
    }
    ok &= worst <= 1e-12;
    notes.push(format!("row sums within {worst:.1e}"));

    // absorbing consensus
    let mut absorbing = true;
    for seed in 0..20 {
        let n = rng.random_range(1..=6);
        let shared = random_population(&mut rng, &s, 1).functions.remove(0);
        let state = PopulationState::new(&s, vec![shared; n]).unwrap();
        let model = random_model(&mut rng, &s, n);
        let cfg = SimulationConfig {
            tau: 0.0,
            sample_size: 30,
            sigma_e: 1.0,
            sigma_c: 0.1,
            c_min: 0.1,
            horizon: 10,
            seed,
            replicates: 1,
            metric_variant: MetricVariant::NearestIndividual,
            filter_zero_social: false,
        };
        let streams = RngStreams::new(seed, 0);
        let mut cur = state.clone();
        for _ in 0..10 {
            cur = step(&cur, &cfg, &model, &streams).map_err(|e| e.to_string())?;
            absorbing &= cur.functions == state.functions;
        }
    }
    ok &= absorbing;
    notes.push(format!("consensus absorbing: {absorbing}"));

    // byte-exact determinism across runs and thread counts
    let exp = preset(Preset::Language, &Overrides::default())
        .and_then(|mut sp| {
            sp.horizon = 50;
            sp.replicates = 6;
            sp.resolve()
        })
        .map_err(|e| e.to_string())?;
    let csv_with = |threads: usize| -> Result<Vec<u8>, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let out = pool
            .install(|| run(&exp.config, &exp.model, &exp.initial, standard_metrics(None)))
            .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        out.trace.write_csv(&mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (a, b, c) = (csv_with(1)?, csv_with(1)?, csv_with(4)?);
    let deterministic = a == b && a == c;
    ok &= deterministic;
    notes.push(format!("byte-identical traces: {deterministic}"));

    // graph oracles
    let mut agree = true;
    for n in 1..=3usize {
        for bits in 0u32..(1 << (n * n)) {
            let a: Vec<Vec<bool>> = (0..n)
                .map(|i| (0..n).map(|j| bits >> (i * n + j) & 1 == 1).collect())
                .collect();
            agree &= graph_oracles_agree(&a)?;
        }
    }
    for _ in 0..500 {
        let n = rng.random_range(1..=6);
        let density = rng.random_range(0.1..0.9);
        let a: Vec<Vec<bool>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_bool(density)).collect())
            .collect();
        agree &= graph_oracles_agree(&a)?;
    }
    ok &= agree;
    notes.push(format!("graph oracles agree: {agree}"));

    // regression function: per-experience sample means approach Λk
    let state = random_population(&mut rng, &s, 4);
    let model = random_model(&mut rng, &s, 4);
    let lambda = social_learning_for(&state, &model, 0.1).map_err(|e| e.to_string())?;
    let cfg = SimulationConfig {
        tau: 0.0,
        sample_size: 100_000,
        sigma_e: 1.0,
        sigma_c: 0.1,
        c_min: 0.1,
        horizon: 1,
        seed: 0,
        replicates: 1,
        metric_variant: MetricVariant::NearestIndividual,
        filter_zero_social: false,
    };
    let sample = draw_sample(0, &state, &s, &cfg, &lambda, &mut ChaCha8Rng::seed_from_u64(99));
    let mut worst_z = 0.0f64;
    for e in 0..s.num_experiences() {
        let obs: Vec<f64> = sample.pairs().filter(|(x, _)| *x == e).map(|(_, c)| c[0]).collect();
        let mean = obs.iter().sum::<f64>() / obs.len() as f64;
        let target: f64 = (0..4).map(|j| lambda.matrix()[(0, j)] * state.agent(j).value(e)[0]).sum();
        let second: f64 = (0..4)
            .map(|j| lambda.matrix()[(0, j)] * state.agent(j).value(e)[0].powi(2))
            .sum();
        let se = ((second - target * target).max(0.0) / obs.len() as f64).sqrt();
        worst_z = worst_z.max((mean - target).abs() / se);
    }
    ok &= worst_z <= 3.0;
    notes.push(format!("regression means within {worst_z:.2} standard errors"));

    check(ok, notes.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("credibility worked example", credibility_example),
        ("primitivity", primitivity),
        ("professor and students", professor),
        ("two language communities", language),
        ("knowledge creation", creation),
        ("exponential convergence", exponential_convergence),
        ("one-step contraction", one_step_contraction),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} ({name}): {tag} - {detail}", k + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
