//! Graph and spectral analysis of influence matrices, plus the sample-size
//! calculator for the convergence-with-confidence bound.

use std::collections::VecDeque;

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::{check_row_stochastic, normalize_rows, StructureMatrix};
use crate::knowledge::{ConceptSpace, KnowledgeSetting};

/// Row sums of inputs to [`dobrushin_coefficient`] must be within this of 1.
pub const DOBRUSHIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub is_primitive: bool,
    pub primitivity_exponent: Option<usize>,
    pub second_modulus: f64,
    pub dobrushin: f64,
    pub min_entry: f64,
}

impl SpectralReport {
    /// Full report for a row-stochastic matrix.
    pub fn analyze(a: &DMatrix<f64>) -> Result<Self> {
        let (is_primitive, primitivity_exponent) = is_primitive(a)?;
        Ok(SpectralReport {
            is_primitive,
            primitivity_exponent,
            second_modulus: second_modulus(a)?,
            dobrushin: dobrushin_coefficient(a)?,
            min_entry: a.min(),
        })
    }
}

fn check_index(a: &DMatrix<f64>, i: usize) -> Result<()> {
    if i >= a.nrows() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: a.nrows(),
        });
    }
    Ok(())
}

/// True iff a directed path of length at least one through strictly positive
/// entries leads from `i` to `j`.
pub fn communicates(a: &DMatrix<f64>, i: usize, j: usize) -> Result<bool> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    check_index(a, i)?;
    check_index(a, j)?;
    let n = a.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([i]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if a[(u, v)] > 0.0 && !seen[v] {
                if v == j {
                    return Ok(true);
                }
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    Ok(false)
}

/// Wielandt's bound on the primitivity exponent.
pub fn wielandt_bound(n: usize) -> usize {
    (n - 1) * (n - 1) + 1
}

fn bool_product(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|l| a[i][l] && b[l][j])).collect())
        .collect()
}

/// Whether `A^k > 0` for some `k <= (N-1)^2 + 1`, returning the first such
/// `k`.
pub fn is_primitive(a: &DMatrix<f64>) -> Result<(bool, Option<usize>)> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] < 0.0 {
                return Err(Error::NegativeEntry { row: i, col: j });
            }
        }
    }
    let pattern: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)] > 0.0).collect())
        .collect();
    let mut power = pattern.clone();
    for k in 1..=wielandt_bound(n) {
        if power.iter().flatten().all(|&p| p) {
            return Ok((true, Some(k)));
        }
        power = bool_product(&power, &pattern);
    }
    Ok((false, None))
}

/// Lower bound on the entries of the social learning matrix for a positive
/// structure matrix and positive credibility floor:
/// `min(1/N, m c_min / (N (1 - N m)))`, with `m` the smallest entry of the
/// row-normalized `Γ`.
pub fn entry_lower_bound(gamma: &StructureMatrix, c_min: f64) -> Result<f64> {
    if !(c_min > 0.0) {
        return Err(Error::BoundInapplicable(format!(
            "credibility floor must be positive, got {c_min}"
        )));
    }
    let normalized = normalize_rows(gamma.matrix());
    let m = normalized.min();
    if !(m > 0.0) {
        return Err(Error::BoundInapplicable("structure matrix has a zero entry".into()));
    }
    let n = gamma.size() as f64;
    if n * m >= 1.0 {
        return Err(Error::BoundInapplicable(format!(
            "N * min(gamma) = {} is not below 1",
            n * m
        )));
    }
    Ok((1.0 / n).min(m * c_min / (n * (1.0 - n * m))))
}

/// Dobrushin's ergodicity coefficient
/// `δ(A) = 1/2 max_{i,i'} sum_j |a_ij - a_i'j|`.
pub fn dobrushin_coefficient(a: &DMatrix<f64>) -> Result<f64> {
    check_row_stochastic(a, DOBRUSHIN_TOL)?;
    let n = a.nrows();
    let mut best = 0.0f64;
    for i in 0..n {
        for k in (i + 1)..n {
            let d: f64 = (0..n).map(|j| (a[(i, j)] - a[(k, j)]).abs()).sum();
            best = best.max(d);
        }
    }
    Ok((0.5 * best).min(1.0))
}

/// All eigenvalue moduli, largest first.
pub fn eigenvalue_moduli(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let schur = Schur::try_new(a.clone(), 1e-14, 10_000).ok_or(Error::EigenFailure)?;
    let mut moduli: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|x, y| y.total_cmp(x));
    Ok(moduli)
}

/// Modulus of the second-largest eigenvalue (0 for a 1×1 matrix).
pub fn second_modulus(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalue_moduli(a)?.get(1).copied().unwrap_or(0.0))
}

/// Logarithm of the sup-norm covering number of tabular box-valued functions:
/// `|E| sum_k ln ceil((hi_k - lo_k) / (2 eps))`.
pub fn covering_number_log_bound(setting: &KnowledgeSetting, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    let ConceptSpace::Box { lo, hi } = setting.concepts() else {
        return Err(Error::InvalidParameter(
            "covering bound needs a box concept space".into(),
        ));
    };
    let per_experience: f64 = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| ((h - l) / (2.0 * eps)).ceil().max(1.0).ln())
        .sum();
    Ok(setting.num_experiences() as f64 * per_experience)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSizeInputs {
    /// Time step `t`.
    pub t: u64,
    /// Population size `N`.
    pub agents: usize,
    /// Bound `M` on `|f(e) - c|`.
    pub bound: f64,
    /// Uniform contraction rate `α* < 1`.
    pub alpha_star: f64,
    /// Failure probability `δ`.
    pub delta: f64,
    /// Initial distance to the consensus manifold.
    pub d0: f64,
}

/// Sample size guaranteeing the geometric convergence bound at time `t`
/// with confidence `1 - δ`:
/// `η = α*^{2t} d0² / N`,
/// `m = ceil(288 M² / η · (ln N(F, η / 24M) + ln(max(t, 1) N) + ln(1/δ)))`.
pub fn required_sample_size(inputs: SampleSizeInputs, setting: &KnowledgeSetting) -> Result<u64> {
    let SampleSizeInputs {
        t,
        agents,
        bound,
        alpha_star,
        delta,
        d0,
    } = inputs;
    let mut problems = Vec::new();
    if !(alpha_star > 0.0 && alpha_star < 1.0) {
        problems.push(format!("alpha_star = {alpha_star} must lie in (0, 1)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        problems.push(format!("delta = {delta} must lie in (0, 1)"));
    }
    if !(d0 > 0.0 && d0.is_finite()) {
        problems.push(format!("d0 = {d0} must be positive"));
    }
    if !(bound > 0.0 && bound.is_finite()) {
        problems.push(format!("M = {bound} must be positive"));
    }
    if agents == 0 {
        problems.push("N must be positive".into());
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    let n = agents as f64;
    let ln_eta = 2.0 * t as f64 * alpha_star.ln() + 2.0 * d0.ln() - n.ln();
    let eta = ln_eta.exp();
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "accuracy target underflows at t = {t}"
        )));
    }
    let covering = covering_number_log_bound(setting, eta / (24.0 * bound))?;
    let logs = covering + ((t.max(1) as f64) * n).ln() + (1.0 / delta).ln();
    let m = (288.0 * bound * bound / eta * logs).ceil();
    if !m.is_finite() || m >= u64::MAX as f64 {
        return Err(Error::InvalidParameter(format!(
            "required sample size overflows at t = {t}"
        )));
    }
    Ok(m as u64)
}
