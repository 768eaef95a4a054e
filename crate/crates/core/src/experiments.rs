//! Preset experiments, JSON configuration files and run artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{run, social_learning_for, MetricVariant, Model, PopulationState, RunOutput, SimulationConfig};
use crate::error::{Error, Result};
use crate::influence::StructureMatrix;
use crate::knowledge::{ConceptSpace, KnowledgeFunction, KnowledgeSetting, LikelihoodLandscape};
use crate::metrics::{delta_i, standard_metrics, MetricTrace};
use crate::spectral::SpectralReport;

/// One agent's value table: scalars for one-dimensional concepts, points
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueTable {
    Scalars(Vec<f64>),
    Points(Vec<Vec<f64>>),
}

impl ValueTable {
    fn to_function(&self, setting: &KnowledgeSetting) -> Result<KnowledgeFunction> {
        match self {
            ValueTable::Scalars(v) => KnowledgeFunction::from_scalars(setting, v),
            ValueTable::Points(v) => KnowledgeFunction::new(setting, v.clone()),
        }
    }
}

/// Serialized experiment: the simulation parameters at top level plus the
/// model and initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    pub tau: f64,
    pub sample_size: usize,
    pub sigma_e: f64,
    pub sigma_c: f64,
    pub c_min: f64,
    pub horizon: u64,
    pub seed: u64,
    pub replicates: usize,
    pub metric_variant: MetricVariant,
    #[serde(default)]
    pub filter_zero_social: bool,
    pub experiences: Vec<Vec<f64>>,
    pub concepts: ConceptSpace,
    pub gamma: Vec<Vec<f64>>,
    pub likelihood: LikelihoodLandscape,
    pub initial: Vec<ValueTable>,
    /// Reference function for the relative entropy column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ValueTable>,
    /// Free-form modelling notes carried into the manifest.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A validated experiment ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub config: SimulationConfig,
    pub model: Model,
    pub initial: PopulationState,
    pub target: Option<KnowledgeFunction>,
}

impl ExperimentSpec {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            tau: self.tau,
            sample_size: self.sample_size,
            sigma_e: self.sigma_e,
            sigma_c: self.sigma_c,
            c_min: self.c_min,
            horizon: self.horizon,
            seed: self.seed,
            replicates: self.replicates,
            metric_variant: self.metric_variant,
            filter_zero_social: self.filter_zero_social,
        }
    }

    /// Validates every part and collects all violations into one error.
    pub fn resolve(&self) -> Result<Experiment> {
        let config = self.simulation();
        let mut problems = config.violations();
        let mut note = |r: Result<()>| {
            if let Err(e) = r {
                problems.push(e.to_string());
            }
        };
        let setting = KnowledgeSetting::new(self.experiences.clone(), self.concepts.clone());
        let gamma = StructureMatrix::from_rows(&self.gamma);
        if let Ok(g) = &gamma {
            if g.size() != self.initial.len() {
                note(Err(Error::InvalidParameter(format!(
                    "gamma is {0}x{0} but {1} initial tables are given",
                    g.size(),
                    self.initial.len()
                ))));
            }
        }
        let (setting, gamma) = match (setting, gamma) {
            (Ok(s), Ok(g)) => (s, g),
            (s, g) => {
                note(s.map(|_| ()));
                note(g.map(|_| ()));
                return Err(Error::Validation(problems));
            }
        };
        note(self.likelihood.validate(&setting));
        let mut functions = Vec::new();
        for (i, table) in self.initial.iter().enumerate() {
            match table.to_function(&setting) {
                Ok(k) => functions.push(k),
                Err(e) => problems.push(format!("initial[{i}]: {e}")),
            }
        }
        if self.initial.is_empty() {
            problems.push("initial population is empty".into());
        }
        let target = match self.target.as_ref().map(|t| t.to_function(&setting)) {
            Some(Ok(k)) => Some(k),
            Some(Err(e)) => {
                problems.push(format!("target: {e}"));
                None
            }
            None => None,
        };
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let model = Model::new(setting.clone(), gamma, self.likelihood.clone())?;
        let initial = PopulationState::new(&setting, functions)?;
        Ok(Experiment {
            spec: self.clone(),
            config,
            model,
            initial,
            target,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a JSON document; syntax errors report line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Reads, parses and validates an experiment file.
pub fn load_config(path: &Path) -> Result<Experiment> {
    let text = fs::read_to_string(path)?;
    ExperimentSpec::from_json(&text)?.resolve()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Two agents with self-weight `α`.
    SelfInertia,
    /// One professor and four students.
    Professor,
    /// Ten newborns exploring towards the most likely function.
    Creation,
    /// Two weakly coupled communities of two speakers.
    Language,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProfessorLikelihood {
    #[default]
    Concave,
    Constant,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::SelfInertia,
        Preset::Professor,
        Preset::Creation,
        Preset::Language,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SelfInertia => "test1-self-inertia",
            Preset::Professor => "test2-professor",
            Preset::Creation => "test3-creation",
            Preset::Language => "test4-language",
        }
    }

    /// Accepts the full name or its `testN` prefix.
    pub fn from_name(name: &str) -> Option<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == name || p.name().split('-').next() == Some(name))
    }
}

/// Command-line style overrides applied on top of a preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub replicates: Option<usize>,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
    pub sample_size: Option<usize>,
    pub metric: Option<MetricVariant>,
    pub likelihood: Option<ProfessorLikelihood>,
}

impl Overrides {
    /// Applies the generic overrides to any spec. `alpha` and `likelihood`
    /// are preset parameters and are rejected here.
    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        if self.alpha.is_some() || self.likelihood.is_some() {
            return Err(Error::Validation(vec![
                "alpha and likelihood overrides only apply to presets".into(),
            ]));
        }
        self.apply_generic(spec);
        Ok(())
    }

    fn apply_generic(&self, spec: &mut ExperimentSpec) {
        if let Some(v) = self.tau {
            spec.tau = v;
        }
        if let Some(v) = self.replicates {
            spec.replicates = v;
        }
        if let Some(v) = self.horizon {
            spec.horizon = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.sample_size {
            spec.sample_size = v;
        }
        if let Some(v) = self.metric {
            spec.metric_variant = v;
        }
    }
}

fn constant_tables(n_e: usize, values: &[f64]) -> Vec<ValueTable> {
    values.iter().map(|v| ValueTable::Scalars(vec![*v; n_e])).collect()
}

fn integer_experiences(n: usize) -> Vec<Vec<f64>> {
    (1..=n).map(|e| vec![e as f64]).collect()
}

/// Builds a preset. Defaults: `m = 50`, `σ_E = 1`, `σ_C = 0.1` except for
/// the creation experiment (`m = 20`, `c_min = 0`); replicates 100 except for
/// the language experiment (20).
pub fn preset(which: Preset, overrides: &Overrides) -> Result<ExperimentSpec> {
    if overrides.alpha.is_some() && which != Preset::SelfInertia {
        return Err(Error::Validation(vec![format!(
            "alpha only applies to {}",
            Preset::SelfInertia.name()
        )]));
    }
    if overrides.likelihood.is_some() && which != Preset::Professor {
        return Err(Error::Validation(vec![format!(
            "likelihood variant only applies to {}",
            Preset::Professor.name()
        )]));
    }
    let box10 = ConceptSpace::interval(-10.0, 10.0);
    let base = |gamma: Vec<Vec<f64>>, initial: Vec<ValueTable>| ExperimentSpec {
        name: which.name().to_string(),
        tau: 0.0,
        sample_size: 50,
        sigma_e: 1.0,
        sigma_c: 0.1,
        c_min: 0.1,
        horizon: 25,
        seed: 0,
        replicates: 100,
        metric_variant: MetricVariant::NearestIndividual,
        filter_zero_social: false,
        experiences: integer_experiences(5),
        concepts: box10.clone(),
        gamma,
        likelihood: LikelihoodLandscape::Constant { value: 1.0 },
        initial,
        target: None,
        notes: Vec::new(),
    };
    let mut spec = match which {
        Preset::SelfInertia => {
            let a = overrides.alpha.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Validation(vec![format!("alpha = {a} must lie in [0, 1]")]));
            }
            let mut s = base(vec![vec![a, 1.0 - a], vec![1.0 - a, a]], constant_tables(5, &[2.0, 6.0]));
            s.name = format!("{}-alpha-{a}", which.name());
            s
        }
        Preset::Professor => {
            let mut gamma = vec![vec![1.0, 0.1, 0.1, 0.1, 0.1]; 5];
            gamma[0] = vec![1.0, 0.01, 0.01, 0.01, 0.01];
            let mut s = base(gamma, constant_tables(5, &[5.0, 1.0, 1.0, 1.0, 1.0]));
            match overrides.likelihood.unwrap_or_default() {
                ProfessorLikelihood::Concave => {
                    s.likelihood = LikelihoodLandscape::GaussianPeak {
                        center: vec![6.0],
                        width: 10.0,
                    };
                    s.notes.push(
                        "concave likelihood L(e, c) = exp(-(c - 6)^2 / 10): a peak in the concept \
                         value, kept in [0, 1] by a negative exponent"
                            .into(),
                    );
                }
                ProfessorLikelihood::Constant => s.name = format!("{}-constant", which.name()),
            }
            s
        }
        Preset::Creation => {
            let n_e = 25;
            let mut s = base(vec![vec![1.0; 10]; 10], constant_tables(n_e, &[0.0; 10]));
            s.experiences = integer_experiences(n_e);
            s.likelihood = LikelihoodLandscape::GaussianPeak {
                center: vec![1.0],
                width: 1.0,
            };
            s.tau = 0.02;
            s.sample_size = 20;
            s.c_min = 0.0;
            s.horizon = 25_000;
            s.target = Some(ValueTable::Scalars(vec![1.0; n_e]));
            s.notes.push("unbounded concept line truncated to [-10, 10]".into());
            s
        }
        Preset::Language => {
            let gamma = vec![
                vec![1.0, 1.0, 0.01, 0.01],
                vec![1.0, 1.0, 0.01, 0.01],
                vec![0.01, 0.01, 1.0, 1.0],
                vec![0.01, 0.01, 1.0, 1.0],
            ];
            let mut s = base(gamma, constant_tables(5, &[5.0, 5.0, 7.0, 7.0]));
            s.horizon = 400;
            s.replicates = 20;
            s
        }
    };
    overrides.apply_generic(&mut spec);
    Ok(spec)
}

/// Per-step contraction estimate `exp(slope)` of the least-squares line
/// through `ln d(t)`, fitted on the longest prefix with `d > 1e-6`.
pub fn fit_decay_rate(trace: &[f64]) -> Result<f64> {
    let usable = trace.iter().take_while(|d| **d > 1e-6).count();
    if usable < 3 {
        return Err(Error::InvalidParameter(format!(
            "decay fit needs at least 3 positive points, found {usable}"
        )));
    }
    let n = usable as f64;
    let ys: Vec<f64> = trace[..usable].iter().map(|d| d.ln()).collect();
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (sxy, sxx) = ys.iter().enumerate().fold((0.0, 0.0), |(sxy, sxx), (t, y)| {
        let dx = t as f64 - x_mean;
        (sxy + dx * (y - y_mean), sxx + dx * dx)
    });
    Ok((sxy / sxx).exp())
}

/// Mean over replicates of `Δ_i`, measured against each replicate's final
/// population mean.
pub fn mean_deltas(initial: &PopulationState, finals: &[PopulationState]) -> Result<Vec<f64>> {
    let n = initial.size();
    let mut sums = vec![0.0; n];
    for fin in finals {
        let eq = population_mean(fin);
        for (i, s) in sums.iter_mut().enumerate() {
            *s += delta_i(initial.agent(i), &eq)?;
        }
    }
    Ok(sums.into_iter().map(|s| s / finals.len() as f64).collect())
}

/// Agent-wise average of a population, the projection onto consensus.
pub fn population_mean(state: &PopulationState) -> KnowledgeFunction {
    let first = state.agent(0);
    let mut values = vec![0.0; first.len() * first.dim()];
    for k in &state.functions {
        for (acc, c) in values.chunks_exact_mut(first.dim()).zip(k.values()) {
            acc.iter_mut().zip(c).for_each(|(a, v)| *a += v);
        }
    }
    let n = state.size() as f64;
    values.iter_mut().for_each(|v| *v /= n);
    KnowledgeFunction::from_flat_unchecked(first.dim(), values)
}

/// Results of a run, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub output: RunOutput,
    pub initial_spectral: SpectralReport,
    pub initial_lambda: DMatrix<f64>,
    pub deltas: Vec<f64>,
    pub decay_rate: Option<f64>,
    pub final_consensus: f64,
    pub final_nearest: f64,
    pub final_relative_entropy: Option<f64>,
}

fn plotted(trace: &MetricTrace, variant: MetricVariant) -> Vec<f64> {
    match variant {
        MetricVariant::ConsensusProjection => trace.mean_consensus(),
        MetricVariant::NearestIndividual => trace.mean_nearest(),
    }
}

pub fn execute(exp: &Experiment) -> Result<ExperimentResult> {
    let lambda = social_learning_for(&exp.initial, &exp.model, exp.config.c_min)?;
    let initial_spectral = SpectralReport::analyze(lambda.matrix())?;
    let output = run(&exp.config, &exp.model, &exp.initial, standard_metrics(exp.target.clone()))?;
    let recorder = standard_metrics(exp.target.clone());
    let count = output.finals.len() as f64;
    let finals: Vec<_> = output.finals.iter().map(&recorder).collect();
    let deltas = mean_deltas(&exp.initial, &output.finals)?;
    let decay_rate = fit_decay_rate(&plotted(&output.trace, exp.config.metric_variant)).ok();
    Ok(ExperimentResult {
        initial_spectral,
        initial_lambda: lambda.matrix().clone(),
        deltas,
        decay_rate,
        final_consensus: finals.iter().map(|r| r.d_consensus).sum::<f64>() / count,
        final_nearest: finals.iter().map(|r| r.d_nearest).sum::<f64>() / count,
        final_relative_entropy: finals
            .iter()
            .map(|r| r.relative_entropy)
            .sum::<Option<f64>>()
            .map(|s| s / count),
        output,
    })
}

/// `SHA-256("blob <len>\0" || content)`, hex encoded.
pub fn content_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn summary_text(exp: &Experiment, res: &ExperimentResult) -> String {
    let c = &exp.config;
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", exp.spec.name);
    let _ = writeln!(
        s,
        "agents: {}  replicates: {}  horizon: {}  sample size: {}  tau: {}  seed: {}",
        exp.initial.size(),
        c.replicates,
        c.horizon,
        c.sample_size,
        c.tau,
        c.seed
    );
    let _ = writeln!(s, "mean final consensus distance: {:.6}", res.final_consensus);
    let _ = writeln!(s, "mean final nearest-individual distance: {:.6}", res.final_nearest);
    if let Some(re) = res.final_relative_entropy {
        let _ = writeln!(s, "mean final relative entropy: {re:.6}");
    }
    match res.decay_rate {
        Some(r) => {
            let _ = writeln!(s, "fitted per-step contraction: {r:.6}");
        }
        None => {
            let _ = writeln!(s, "fitted per-step contraction: n/a");
        }
    }
    let sp = &res.initial_spectral;
    let _ = writeln!(
        s,
        "initial social learning matrix: primitive={} dobrushin={:.6} second modulus={:.6}",
        sp.is_primitive, sp.dobrushin, sp.second_modulus
    );
    let _ = writeln!(s, "agent  mean delta");
    for (i, d) in res.deltas.iter().enumerate() {
        let _ = writeln!(s, "{:>5}  {d:.6}", i + 1);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub trace: PathBuf,
    pub means: PathBuf,
    pub config: PathBuf,
    pub manifest: PathBuf,
    pub summary: PathBuf,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Writes `trace.csv`, `mean_trace.csv`, `config.json`, `summary.txt` and
/// `manifest.json` into `dir`. Only the manifest carries timestamps.
pub fn write_outputs(
    dir: &Path,
    exp: &Experiment,
    res: &ExperimentResult,
    started: f64,
) -> Result<WrittenFiles> {
    fs::create_dir_all(dir)?;
    let files = WrittenFiles {
        trace: dir.join("trace.csv"),
        means: dir.join("mean_trace.csv"),
        config: dir.join("config.json"),
        manifest: dir.join("manifest.json"),
        summary: dir.join("summary.txt"),
    };
    res.output.trace.write_csv(fs::File::create(&files.trace)?)?;
    res.output.trace.write_means_csv(fs::File::create(&files.means)?)?;
    let config_json = exp.spec.to_json()?;
    fs::write(&files.config, &config_json)?;
    fs::write(&files.summary, summary_text(exp, res))?;
    let lambda_rows: Vec<Vec<f64>> = res
        .initial_lambda
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let manifest = serde_json::json!({
        "name": exp.spec.name,
        "config": exp.spec,
        "gamma": exp.spec.gamma,
        "initial_lambda": lambda_rows,
        "spectral": res.initial_spectral,
        "content_hash": content_hash(config_json.as_bytes()),
        "notes": exp.spec.notes,
        "outputs": {
            "trace": "trace.csv",
            "means": "mean_trace.csv",
            "config": "config.json",
            "summary": "summary.txt",
        },
        "started_unix": started,
        "finished_unix": unix_now(),
    });
    fs::write(&files.manifest, serde_json::to_string_pretty(&manifest)?)?;
    Ok(files)
}

/// Failure classes of [`run_experiment`], mapped to process exit codes.
#[derive(Debug)]
pub enum ExperimentError {
    Invalid(Error),
    Runtime(Error),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Invalid(_) => 2,
            ExperimentError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentError::Invalid(e) | ExperimentError::Runtime(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for ExperimentError {}

/// Resolves a preset name or config path, runs it and writes the outputs.
pub fn run_experiment(
    source: &str,
    overrides: &Overrides,
    out_dir: &Path,
) -> std::result::Result<(ExperimentResult, WrittenFiles), ExperimentError> {
    let started = unix_now();
    let spec = match Preset::from_name(source) {
        Some(p) => preset(p, overrides),
        None => fs::read_to_string(source)
            .map_err(Error::from)
            .and_then(|text| ExperimentSpec::from_json(&text))
            .and_then(|mut s| overrides.apply(&mut s).map(|_| s)),
    }
    .map_err(ExperimentError::Invalid)?;
    let exp = spec.resolve().map_err(ExperimentError::Invalid)?;
    let res = execute(&exp).map_err(ExperimentError::Runtime)?;
    let files = write_outputs(out_dir, &exp, &res, started).map_err(ExperimentError::Runtime)?;
    Ok((res, files))
}
