//! Structure, credibility and social-learning matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::{concept_spread_on, KnowledgeFunction, KnowledgeSetting, LikelihoodLandscape};

/// Row sums at or below this are treated as zero when building the social
/// learning matrix.
pub const ZERO_ROW_GUARD: f64 = 1e-300;

/// Tolerance on row sums of a stochastic matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;

fn square_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidParameter("matrix must have at least one row".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r.len(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// `Γ`: `gamma[(i, j)]` is the strength of the influence of `j` on `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StructureMatrix(DMatrix<f64>);

impl StructureMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::NegativeEntry { row: i, col: j });
                }
            }
        }
        Ok(StructureMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(square_from_rows(rows)?)
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.0)
    }
}

impl TryFrom<Vec<Vec<f64>>> for StructureMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<StructureMatrix> for Vec<Vec<f64>> {
    fn from(m: StructureMatrix) -> Self {
        m.rows()
    }
}

/// `C`: `c[(i, j)]` is the credibility agent `i` grants agent `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibilityMatrix {
    entries: DMatrix<f64>,
    c_min: f64,
}

impl CredibilityMatrix {
    /// Wraps an explicit matrix; every entry must lie in `[c_min, 1]`.
    pub fn from_matrix(entries: DMatrix<f64>, c_min: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if !(0.0..=1.0).contains(&c_min) {
            return Err(Error::InvalidParameter(format!("c_min = {c_min} must lie in [0, 1]")));
        }
        if let Some(v) = entries.iter().find(|v| !(c_min..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "credibility {v} outside [{c_min}, 1]"
            )));
        }
        Ok(CredibilityMatrix { entries, c_min })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }
}

/// `Λ`: row-stochastic mix of structure and credibility.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialLearningMatrix(DMatrix<f64>);

impl SocialLearningMatrix {
    /// Wraps a matrix after checking it is row-stochastic.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_row_stochastic(&m, STOCHASTIC_TOL)?;
        Ok(SocialLearningMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.0.min()
    }
}

pub(crate) fn check_row_stochastic(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotStochastic("matrix is not square".into()));
    }
    for i in 0..m.nrows() {
        let row = m.row(i);
        if let Some(j) = row.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::NotStochastic(format!("entry ({i}, {j}) is negative")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Credibility matrix of a population.
///
/// `c~_ij = exp(sum_{e : k_i(e) != 0} ln L(e, k_j(e))) / (1 + [i != j] p_ij)`
/// and `c_ij = max(c~_ij, c_min)`, where `p_ij` is the concept spread of
/// `k_j` over the experiences agent `i` has conceptualized. Likelihood
/// products are accumulated in log space; an empty product is 1.
pub fn compute_credibility(
    setting: &KnowledgeSetting,
    population: &[KnowledgeFunction],
    landscape: &LikelihoodLandscape,
    c_min: f64,
) -> Result<CredibilityMatrix> {
    if population.is_empty() {
        return Err(Error::InvalidParameter("population is empty".into()));
    }
    if !(0.0..=1.0).contains(&c_min) {
        return Err(Error::InvalidParameter(format!("c_min = {c_min} must lie in [0, 1]")));
    }
    if let Some(k) = population.iter().find(|k| !k.is_compatible(setting)) {
        return Err(Error::DimensionMismatch {
            expected: setting.num_experiences(),
            found: k.len(),
        });
    }
    let n = population.len();
    let n_exp = setting.num_experiences();

    // ln L(e, k_j(e)) for every (j, e)
    let ln_lik: Vec<Vec<f64>> = population
        .iter()
        .map(|k| (0..n_exp).map(|e| landscape.ln_eval(setting, e, k.value(e))).collect())
        .collect();

    let mut entries = DMatrix::zeros(n, n);
    for (i, ki) in population.iter().enumerate() {
        let support: Vec<bool> = (0..n_exp).map(|e| ki.conceptualizes_unchecked(e)).collect();
        for (j, kj) in population.iter().enumerate() {
            let log_product: f64 = (0..n_exp)
                .filter(|&e| support[e])
                .map(|e| ln_lik[j][e])
                .sum();
            let penalty = if i == j {
                0.0
            } else {
                concept_spread_on(setting, kj, |e| support[e])
            };
            let raw = (log_product - penalty.ln_1p()).exp();
            entries[(i, j)] = raw.max(c_min);
        }
    }
    Ok(CredibilityMatrix { entries, c_min })
}

/// `λ_ij = γ_ij c_ij / sum_l γ_il c_il`, or a uniform row when that sum is
/// (numerically) zero.
pub fn compute_social_learning(
    gamma: &StructureMatrix,
    credibility: &CredibilityMatrix,
) -> Result<SocialLearningMatrix> {
    let n = gamma.size();
    if credibility.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: credibility.size(),
        });
    }
    let weighted = gamma.matrix().component_mul(credibility.matrix());
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let s: f64 = weighted.row(i).iter().sum();
        for j in 0..n {
            out[(i, j)] = if s > ZERO_ROW_GUARD {
                weighted[(i, j)] / s
            } else {
                1.0 / n as f64
            };
        }
    }
    Ok(SocialLearningMatrix(out))
}

/// Divides every nonzero row by its sum; zero rows become uniform.
/// Entries are expected to be nonnegative.
pub fn normalize_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let s: f64 = row.iter().sum();
        if s != 0.0 {
            row /= s;
        } else {
            row.fill(1.0 / n as f64);
        }
    }
    out
}

/// Row-major CSV with header `j0,j1,...`.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((0..m.ncols()).map(|j| format!("j{j}")))?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("bad matrix entry {f:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    square_from_rows(&rows)
}
