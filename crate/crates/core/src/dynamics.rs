//! The stochastic learning dynamic.
//!
//! At every step each agent draws a sample of `(experience, concept)` pairs
//! from the mixture `(1 - τ) ρ_social + τ ρ_individual` and refits its table
//! by least squares. All agents update synchronously from the same snapshot;
//! credibility and the social learning matrix are recomputed from that
//! snapshot at every step.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::{
    compute_credibility, compute_social_learning, SocialLearningMatrix, StructureMatrix,
};
use crate::knowledge::{is_zero, sq_dist, ConceptSpace, KnowledgeFunction, KnowledgeSetting, LikelihoodLandscape};
use crate::metrics::{MetricRow, MetricTrace};
use crate::rng::RngStreams;

/// Attempts at drawing a Gaussian concept inside the box before clamping.
pub const MAX_REJECTIONS: usize = 64;

/// Fixed ingredients of a simulation: the setting, `Γ` and `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub setting: KnowledgeSetting,
    pub gamma: StructureMatrix,
    pub landscape: LikelihoodLandscape,
}

impl Model {
    pub fn new(
        setting: KnowledgeSetting,
        gamma: StructureMatrix,
        landscape: LikelihoodLandscape,
    ) -> Result<Self> {
        landscape.validate(&setting)?;
        Ok(Model {
            setting,
            gamma,
            landscape,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub functions: Vec<KnowledgeFunction>,
    pub t: u64,
}

impl PopulationState {
    pub fn new(setting: &KnowledgeSetting, functions: Vec<KnowledgeFunction>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidParameter("population is empty".into()));
        }
        for k in &functions {
            k.check_in(setting)?;
        }
        Ok(PopulationState { functions, t: 0 })
    }

    pub fn size(&self) -> usize {
        self.functions.len()
    }

    pub fn agent(&self, i: usize) -> &KnowledgeFunction {
        &self.functions[i]
    }

    pub fn is_consensus(&self) -> bool {
        self.functions.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricVariant {
    #[serde(rename = "consensus", alias = "consensus-projection")]
    ConsensusProjection,
    #[serde(rename = "nearest", alias = "nearest-individual")]
    NearestIndividual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Probability that a sampled pair comes from individual learning.
    pub tau: f64,
    /// Pairs drawn per agent per step (`m`).
    pub sample_size: usize,
    pub sigma_e: f64,
    pub sigma_c: f64,
    pub c_min: f64,
    /// Number of steps `T`.
    pub horizon: u64,
    pub seed: u64,
    pub replicates: usize,
    pub metric_variant: MetricVariant,
    /// Drop socially drawn pairs whose concept is zero.
    #[serde(default)]
    pub filter_zero_social: bool,
}

impl SimulationConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.tau) {
            v.push(format!("tau = {} must lie in [0, 1]", self.tau));
        }
        if self.sample_size == 0 {
            v.push("sample_size must be at least 1".into());
        }
        if !(self.sigma_e > 0.0 && self.sigma_e.is_finite()) {
            v.push(format!("sigma_e = {} must be positive", self.sigma_e));
        }
        if !(self.sigma_c > 0.0 && self.sigma_c.is_finite()) {
            v.push(format!("sigma_c = {} must be positive", self.sigma_c));
        }
        if !(0.0..=1.0).contains(&self.c_min) {
            v.push(format!("c_min = {} must lie in [0, 1]", self.c_min));
        }
        if self.horizon == 0 {
            v.push("horizon must be at least 1".into());
        }
        if self.horizon >= 1 << 32 {
            v.push("horizon must be below 2^32".into());
        }
        if self.replicates == 0 {
            v.push("replicates must be at least 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

/// `S_i^t`: observed `(experience, concept)` pairs, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    experiences: Vec<usize>,
    concepts: Vec<f64>,
}

impl Sample {
    pub fn new(dim: usize) -> Self {
        Sample {
            dim,
            experiences: Vec::new(),
            concepts: Vec::new(),
        }
    }

    pub fn from_pairs(dim: usize, pairs: &[(usize, Vec<f64>)]) -> Self {
        let mut s = Sample::new(dim);
        for (e, c) in pairs {
            s.push(*e, c);
        }
        s
    }

    pub fn push(&mut self, e: usize, c: &[f64]) {
        debug_assert_eq!(c.len(), self.dim);
        self.experiences.push(e);
        self.concepts.extend_from_slice(c);
    }

    pub fn len(&self) -> usize {
        self.experiences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experiences.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.experiences
            .iter()
            .copied()
            .zip(self.concepts.chunks_exact(self.dim))
    }
}

fn categorical(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (a, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            if u < *w {
                return a;
            }
            u -= w;
            last = a;
        }
    }
    last
}

/// Social draw: a teacher `j` from row `i` of `Λ`, a uniform experience `e`,
/// and the teacher's concept `k_j(e)` (possibly the zero concept).
pub fn draw_social<'a>(
    i: usize,
    state: &'a PopulationState,
    lambda: &SocialLearningMatrix,
    rng: &mut impl Rng,
) -> (usize, &'a [f64]) {
    draw_social_row(&lambda.row(i), state, rng)
}

fn draw_social_row<'a>(
    weights: &[f64],
    state: &'a PopulationState,
    rng: &mut impl Rng,
) -> (usize, &'a [f64]) {
    let j = categorical(weights, rng);
    let k = state.agent(j);
    let e = rng.random_range(0..k.len());
    (e, k.value(e))
}

/// Marginal weights of individual exploration over experiences:
/// `w(e) = sum_{e' : k(e') != 0} exp(-|e - e'|^2 / 2σ_E^2)`, uniform when
/// `k` conceptualizes nothing.
pub fn exploration_weights(setting: &KnowledgeSetting, k: &KnowledgeFunction, sigma_e: f64) -> Vec<f64> {
    let n = setting.num_experiences();
    let known: Vec<usize> = (0..n).filter(|&e| k.conceptualizes_unchecked(e)).collect();
    if known.is_empty() {
        return vec![1.0; n];
    }
    let scale = 2.0 * sigma_e * sigma_e;
    let w: Vec<f64> = (0..n)
        .map(|e| {
            known
                .iter()
                .map(|&e2| (-sq_dist(setting.experience(e), setting.experience(e2)) / scale).exp())
                .sum()
        })
        .collect();
    if w.iter().sum::<f64>() > 0.0 {
        w
    } else {
        // σ_E so small that every kernel underflows: stay on known experiences
        (0..n).map(|e| if k.conceptualizes_unchecked(e) { 1.0 } else { 0.0 }).collect()
    }
}

fn perturb_concept(
    concepts: &ConceptSpace,
    center: &[f64],
    sigma_c: f64,
    rng: &mut impl Rng,
    out: &mut Vec<f64>,
) {
    out.clear();
    match concepts {
        ConceptSpace::Box { lo, hi } => {
            for _ in 0..MAX_REJECTIONS {
                out.clear();
                out.extend(center.iter().map(|m| m + sigma_c * rng.sample::<f64, _>(StandardNormal)));
                if out.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *l <= *v && *v <= *h) {
                    return;
                }
            }
            for (v, (l, h)) in out.iter_mut().zip(lo.iter().zip(hi)) {
                *v = v.clamp(*l, *h);
            }
        }
        ConceptSpace::Discrete { points, .. } => {
            let d: Vec<f64> = points.iter().map(|p| sq_dist(p, center)).collect();
            let d_min = d.iter().copied().fold(f64::INFINITY, f64::min);
            let scale = 2.0 * sigma_c * sigma_c;
            let w: Vec<f64> = d.iter().map(|x| (-(x - d_min) / scale).exp()).collect();
            out.extend_from_slice(&points[categorical(&w, rng)]);
        }
    }
}

/// Individual draw: an experience near those already conceptualized and a
/// concept perturbed around the agent's own value there.
pub fn draw_individual(
    i: usize,
    state: &PopulationState,
    setting: &KnowledgeSetting,
    sigma_e: f64,
    sigma_c: f64,
    rng: &mut impl Rng,
) -> (usize, Vec<f64>) {
    let k = state.agent(i);
    let weights = exploration_weights(setting, k, sigma_e);
    let mut c = Vec::with_capacity(k.dim());
    let e = individual_with_weights(&weights, k, setting, sigma_c, rng, &mut c);
    (e, c)
}

fn individual_with_weights(
    weights: &[f64],
    k: &KnowledgeFunction,
    setting: &KnowledgeSetting,
    sigma_c: f64,
    rng: &mut impl Rng,
    out: &mut Vec<f64>,
) -> usize {
    let e = categorical(weights, rng);
    perturb_concept(setting.concepts(), k.value(e), sigma_c, rng, out);
    e
}

/// `m` independent draws, each individual with probability `τ` and social
/// otherwise.
pub fn draw_sample(
    i: usize,
    state: &PopulationState,
    setting: &KnowledgeSetting,
    config: &SimulationConfig,
    lambda: &SocialLearningMatrix,
    rng: &mut impl Rng,
) -> Sample {
    let k = state.agent(i);
    let row = lambda.row(i);
    let mut sample = Sample::new(k.dim());
    let mut weights: Option<Vec<f64>> = None;
    let mut buf = Vec::with_capacity(k.dim());
    for _ in 0..config.sample_size {
        if rng.random_bool(config.tau) {
            let w = weights.get_or_insert_with(|| exploration_weights(setting, k, config.sigma_e));
            let e = individual_with_weights(w, k, setting, config.sigma_c, rng, &mut buf);
            sample.push(e, &buf);
        } else {
            let (e, c) = draw_social_row(&row, state, rng);
            if config.filter_zero_social && is_zero(c) {
                continue;
            }
            sample.push(e, c);
        }
    }
    sample
}

/// Least-squares refit of a tabular function on a sample.
///
/// Box concepts: the mean of the concepts observed at each experience.
/// Discrete concepts: the concept point with the smallest sum of squared
/// distances to the observations (lowest index on ties). Experiences absent
/// from the sample keep their previous value.
pub fn least_squares_update(
    setting: &KnowledgeSetting,
    k_prev: &KnowledgeFunction,
    sample: &Sample,
) -> KnowledgeFunction {
    if sample.is_empty() {
        return k_prev.clone();
    }
    let dim = k_prev.dim();
    let n = k_prev.len();
    let mut values = k_prev.as_flat().to_vec();
    match setting.concepts() {
        ConceptSpace::Box { lo, hi } => {
            let mut counts = vec![0u32; n];
            for (e, c) in sample.pairs() {
                counts[e] += 1;
                let slot = &mut values[e * dim..(e + 1) * dim];
                if counts[e] == 1 {
                    slot.copy_from_slice(c);
                } else {
                    // running mean: exact when all observations agree
                    let cnt = counts[e] as f64;
                    for (m, x) in slot.iter_mut().zip(c) {
                        *m += (x - *m) / cnt;
                    }
                }
            }
            for (e, _) in counts.iter().enumerate().filter(|(_, c)| **c > 0) {
                for (d, v) in values[e * dim..(e + 1) * dim].iter_mut().enumerate() {
                    *v = v.clamp(lo[d], hi[d]);
                }
            }
        }
        ConceptSpace::Discrete { points, .. } => {
            let mut observed: Vec<Vec<&[f64]>> = vec![Vec::new(); n];
            for (e, c) in sample.pairs() {
                observed[e].push(c);
            }
            for (e, obs) in observed.iter().enumerate().filter(|(_, o)| !o.is_empty()) {
                let mut best = 0;
                let mut best_cost = f64::INFINITY;
                for (a, p) in points.iter().enumerate() {
                    let cost: f64 = obs.iter().map(|c| sq_dist(p, c)).sum();
                    if cost < best_cost {
                        best = a;
                        best_cost = cost;
                    }
                }
                values[e * dim..(e + 1) * dim].copy_from_slice(&points[best]);
            }
        }
    }
    KnowledgeFunction::from_flat_unchecked(dim, values)
}

/// `Λ` for the current state.
pub fn social_learning_for(
    state: &PopulationState,
    model: &Model,
    c_min: f64,
) -> Result<SocialLearningMatrix> {
    if state.size() != model.gamma.size() {
        return Err(Error::DimensionMismatch {
            expected: model.gamma.size(),
            found: state.size(),
        });
    }
    let c = compute_credibility(&model.setting, &state.functions, &model.landscape, c_min)?;
    compute_social_learning(&model.gamma, &c)
}

/// One synchronous step `k^t -> k^{t+1}`.
pub fn step(
    state: &PopulationState,
    config: &SimulationConfig,
    model: &Model,
    streams: &RngStreams,
) -> Result<PopulationState> {
    let lambda = social_learning_for(state, model, config.c_min)?;
    let functions = (0..state.size())
        .map(|i| {
            let mut rng = streams.agent_step(i, state.t);
            let sample = draw_sample(i, state, &model.setting, config, &lambda, &mut rng);
            least_squares_update(&model.setting, state.agent(i), &sample)
        })
        .collect();
    Ok(PopulationState {
        functions,
        t: state.t + 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: MetricTrace,
    /// State of each replicate after `horizon` steps.
    pub finals: Vec<PopulationState>,
}

/// Runs every replicate for `config.horizon` steps, recording one metric row
/// per replicate at `t = 0, ..., T - 1` (before each step). Replicate `r`
/// draws from [`RngStreams::new`]`(config.seed, r)`, so results do not depend
/// on scheduling.
pub fn run<F>(
    config: &SimulationConfig,
    model: &Model,
    initial: &PopulationState,
    metrics: F,
) -> Result<RunOutput>
where
    F: Fn(&PopulationState) -> MetricRow + Sync,
{
    config.validate()?;
    for k in &initial.functions {
        k.check_in(&model.setting)?;
    }
    if initial.size() != model.gamma.size() {
        return Err(Error::DimensionMismatch {
            expected: model.gamma.size(),
            found: initial.size(),
        });
    }
    let per_replicate: Vec<(Vec<MetricRow>, PopulationState)> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let streams = RngStreams::new(config.seed, r as u64);
            let mut state = initial.clone();
            let mut rows = Vec::with_capacity(config.horizon as usize);
            for _ in 0..config.horizon {
                let mut row = metrics(&state);
                row.t = state.t;
                row.replicate = r;
                rows.push(row);
                state = step(&state, config, model, &streams)?;
            }
            Ok((rows, state))
        })
        .collect::<Result<_>>()?;
    let (rows, finals): (Vec<_>, Vec<_>) = per_replicate.into_iter().unzip();
    Ok(RunOutput {
        trace: MetricTrace::from_replicates(rows),
        finals,
    })
}
