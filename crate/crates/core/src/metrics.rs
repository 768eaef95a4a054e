//! Convergence functionals and per-step traces.

use std::io::Write;

use crate::dynamics::PopulationState;
use crate::error::{Error, Result};
use crate::influence::SocialLearningMatrix;
use crate::knowledge::{distance_c, sq_dist, KnowledgeFunction};

fn mean_flat(state: &PopulationState) -> Vec<f64> {
    let n = state.size() as f64;
    let mut mean = vec![0.0; state.agent(0).as_flat().len()];
    for k in &state.functions {
        for (m, v) in mean.iter_mut().zip(k.as_flat()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Euclidean distance from the population to the consensus diagonal:
/// `sqrt(sum_e sum_i |k_i(e) - mean_j k_j(e)|^2)`.
pub fn consensus_distance(state: &PopulationState) -> f64 {
    if state.is_consensus() {
        return 0.0;
    }
    let mean = mean_flat(state);
    state
        .functions
        .iter()
        .map(|k| sq_dist(k.as_flat(), &mean))
        .sum::<f64>()
        .sqrt()
}

/// `min_j sqrt(sum_i d_C(k_i, k_j)^2)`: distance to the nearest consensus
/// point built from one of the agents.
pub fn nearest_individual_distance(state: &PopulationState) -> f64 {
    state
        .functions
        .iter()
        .map(|kj| {
            state
                .functions
                .iter()
                .map(|ki| sq_dist(ki.as_flat(), kj.as_flat()))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// How far an agent moved between its initial and equilibrium knowledge.
pub fn delta_i(initial: &KnowledgeFunction, equilibrium: &KnowledgeFunction) -> Result<f64> {
    distance_c(initial, equilibrium)
}

/// `RE = -(1/N) sum_i sqrt(sum_e |k_i(e) - g(e)|^2 / |E|)`. Nonpositive, zero
/// exactly when every agent equals the target.
pub fn relative_entropy(state: &PopulationState, target: &KnowledgeFunction) -> Result<f64> {
    let n_e = target.len() as f64;
    let mut total = 0.0;
    for k in &state.functions {
        if k.len() != target.len() || k.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.as_flat().len(),
                found: k.as_flat().len(),
            });
        }
        total += (sq_dist(k.as_flat(), target.as_flat()) / n_e).sqrt();
    }
    Ok(-total / state.size() as f64)
}

/// Spread seminorm distance `sqrt(sum_e sum_d (max_i k_i(e)_d - min_i k_i(e)_d)^2)`.
/// Averaging by a stochastic matrix shrinks every spread by at least the
/// Dobrushin coefficient, so this distance contracts by that factor.
pub fn spread_distance(state: &PopulationState) -> f64 {
    let width = state.agent(0).as_flat().len();
    (0..width)
        .map(|a| {
            let (lo, hi) = state.functions.iter().map(|k| k.as_flat()[a]).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), v| (lo.min(v), hi.max(v)),
            );
            (hi - lo) * (hi - lo)
        })
        .sum::<f64>()
        .sqrt()
}

/// Exact action of `Λ` on the tabular functions: `(Λk)_i(e) = sum_j λ_ij k_j(e)`.
pub fn apply_lambda(state: &PopulationState, lambda: &SocialLearningMatrix) -> Result<PopulationState> {
    if lambda.size() != state.size() {
        return Err(Error::DimensionMismatch {
            expected: lambda.size(),
            found: state.size(),
        });
    }
    let m = lambda.matrix();
    let width = state.agent(0).as_flat().len();
    let dim = state.agent(0).dim();
    let functions = (0..state.size())
        .map(|i| {
            let mut v = vec![0.0; width];
            for (j, kj) in state.functions.iter().enumerate() {
                let w = m[(i, j)];
                for (a, x) in v.iter_mut().zip(kj.as_flat()) {
                    *a += w * x;
                }
            }
            KnowledgeFunction::from_flat_unchecked(dim, v)
        })
        .collect();
    Ok(PopulationState {
        functions,
        t: state.t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub t: u64,
    pub replicate: usize,
    pub d_consensus: f64,
    pub d_nearest: f64,
    pub relative_entropy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanRow {
    pub t: u64,
    pub d_consensus: f64,
    pub d_nearest: f64,
    pub relative_entropy: Option<f64>,
}

/// The standard recorder: both distances, plus relative entropy when a
/// target is given.
pub fn standard_metrics(
    target: Option<KnowledgeFunction>,
) -> impl Fn(&PopulationState) -> MetricRow + Sync {
    move |state| MetricRow {
        t: state.t,
        replicate: 0,
        d_consensus: consensus_distance(state),
        d_nearest: nearest_individual_distance(state),
        relative_entropy: target
            .as_ref()
            .map(|g| relative_entropy(state, g).expect("target matches the population")),
    }
}

/// Rows ordered by replicate, then time; `means` averages over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTrace {
    pub rows: Vec<MetricRow>,
    pub means: Vec<MeanRow>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl MetricTrace {
    /// Builds the trace from equally long per-replicate row lists.
    pub fn from_replicates(per_replicate: Vec<Vec<MetricRow>>) -> Self {
        let len = per_replicate.first().map_or(0, Vec::len);
        let count = per_replicate.len() as f64;
        let means = (0..len)
            .map(|s| {
                let at = || per_replicate.iter().map(move |rows| &rows[s]);
                let re = at()
                    .map(|r| r.relative_entropy)
                    .sum::<Option<f64>>()
                    .map(|v| v / count);
                MeanRow {
                    t: per_replicate[0][s].t,
                    d_consensus: at().map(|r| r.d_consensus).sum::<f64>() / count,
                    d_nearest: at().map(|r| r.d_nearest).sum::<f64>() / count,
                    relative_entropy: re,
                }
            })
            .collect();
        MetricTrace {
            rows: per_replicate.into_iter().flatten().collect(),
            means,
        }
    }

    pub fn replicate(&self, r: usize) -> Vec<MetricRow> {
        self.rows.iter().filter(|row| row.replicate == r).copied().collect()
    }

    pub fn mean_consensus(&self) -> Vec<f64> {
        self.means.iter().map(|m| m.d_consensus).collect()
    }

    pub fn mean_nearest(&self) -> Vec<f64> {
        self.means.iter().map(|m| m.d_nearest).collect()
    }

    pub fn mean_relative_entropy(&self) -> Option<Vec<f64>> {
        self.means.iter().map(|m| m.relative_entropy).collect()
    }

    /// CSV with header `t,replicate,d_consensus,d_nearest,relative_entropy`.
    /// Reals use the shortest representation that round-trips; a missing
    /// relative entropy is an empty field.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "replicate", "d_consensus", "d_nearest", "relative_entropy"])?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.replicate.to_string(),
                r.d_consensus.to_string(),
                r.d_nearest.to_string(),
                fmt_opt(r.relative_entropy),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean trace CSV with header `t,d_consensus,d_nearest,relative_entropy`.
    pub fn write_means_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "d_consensus", "d_nearest", "relative_entropy"])?;
        for m in &self.means {
            w.write_record([
                m.t.to_string(),
                m.d_consensus.to_string(),
                m.d_nearest.to_string(),
                fmt_opt(m.relative_entropy),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
