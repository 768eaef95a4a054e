//! Experience and concept spaces, knowledge-like functions and likelihood
//! landscapes.
//!
//! Experiences always form a finite list; continuous experience sets are
//! expected to be discretized by the caller. Concepts are stored as real
//! points even when the concept set is discrete (each label is pinned to a
//! point, the zero concept sits at the origin), so a single Euclidean
//! distance serves both kinds of concept space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The concept set `C`. It always contains the zero concept, which marks an
/// experience that has not been conceptualized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConceptSpace {
    /// Finite labelled concepts. `points[0]` is the zero concept and must be
    /// the origin.
    Discrete {
        labels: Vec<String>,
        points: Vec<Vec<f64>>,
    },
    /// Axis-aligned box `[lo, hi]` containing the origin.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ConceptSpace {
    /// Scalar box `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Self {
        ConceptSpace::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    /// Discrete scalar concepts: the zero concept plus one labelled value per
    /// entry of `named`.
    pub fn labelled(named: &[(&str, f64)]) -> Self {
        let mut labels = vec!["0".to_string()];
        let mut points = vec![vec![0.0]];
        for (label, value) in named {
            labels.push(label.to_string());
            points.push(vec![*value]);
        }
        ConceptSpace::Discrete { labels, points }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConceptSpace::Discrete { points, .. } => points.first().map_or(0, Vec::len),
            ConceptSpace::Box { lo, .. } => lo.len(),
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self, ConceptSpace::Box { .. })
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            ConceptSpace::Discrete { labels, points } => {
                if points.is_empty() {
                    return Err("discrete concept space needs at least the zero concept".into());
                }
                if labels.len() != points.len() {
                    return Err(format!(
                        "{} labels for {} concept points",
                        labels.len(),
                        points.len()
                    ));
                }
                let dim = points[0].len();
                if dim == 0 {
                    return Err("concept dimension must be at least 1".into());
                }
                if points.iter().any(|p| p.len() != dim) {
                    return Err("concept points have inconsistent dimensions".into());
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err("concept points must be finite".into());
                }
                if !is_zero(&points[0]) {
                    return Err("concept 0 must be the origin".into());
                }
                for (a, p) in points.iter().enumerate() {
                    if a > 0 && is_zero(p) {
                        return Err(format!("concept {a} duplicates the zero concept"));
                    }
                    if points[..a].iter().any(|q| q == p) {
                        return Err(format!("concept {a} is listed twice"));
                    }
                }
                Ok(())
            }
            ConceptSpace::Box { lo, hi } => {
                if lo.is_empty() {
                    return Err("concept dimension must be at least 1".into());
                }
                if lo.len() != hi.len() {
                    return Err("box bounds have different dimensions".into());
                }
                for (k, (l, h)) in lo.iter().zip(hi).enumerate() {
                    if !l.is_finite() || !h.is_finite() {
                        return Err(format!("box bound {k} is not finite"));
                    }
                    if !(*l <= 0.0 && 0.0 <= *h) {
                        return Err(format!("box component {k} = [{l}, {h}] does not contain 0"));
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether `c` is an element of the concept set.
    pub fn contains(&self, c: &[f64]) -> bool {
        match self {
            ConceptSpace::Discrete { points, .. } => points.iter().any(|p| p.as_slice() == c),
            ConceptSpace::Box { lo, hi } => {
                c.len() == lo.len()
                    && c.iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(v, (l, h))| *l <= *v && *v <= *h)
            }
        }
    }

    /// Index of a discrete concept point.
    pub fn index_of(&self, c: &[f64]) -> Option<usize> {
        match self {
            ConceptSpace::Discrete { points, .. } => points.iter().position(|p| p.as_slice() == c),
            ConceptSpace::Box { .. } => None,
        }
    }

    pub fn point(&self, label: &str) -> Option<&[f64]> {
        match self {
            ConceptSpace::Discrete { labels, points } => labels
                .iter()
                .position(|l| l == label)
                .map(|a| points[a].as_slice()),
            ConceptSpace::Box { .. } => None,
        }
    }
}

pub(crate) fn is_zero(c: &[f64]) -> bool {
    c.iter().all(|v| *v == 0.0)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A knowledge setting: a finite experience list and a concept space. The
/// hypothesis class is every tabular map from experiences into the concept
/// space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSetting", into = "RawSetting")]
pub struct KnowledgeSetting {
    experiences: Vec<Vec<f64>>,
    concepts: ConceptSpace,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSetting {
    experiences: Vec<Vec<f64>>,
    concepts: ConceptSpace,
}

impl TryFrom<RawSetting> for KnowledgeSetting {
    type Error = Error;

    fn try_from(raw: RawSetting) -> Result<Self> {
        KnowledgeSetting::new(raw.experiences, raw.concepts)
    }
}

impl From<KnowledgeSetting> for RawSetting {
    fn from(s: KnowledgeSetting) -> Self {
        RawSetting {
            experiences: s.experiences,
            concepts: s.concepts,
        }
    }
}

impl KnowledgeSetting {
    pub fn new(experiences: Vec<Vec<f64>>, concepts: ConceptSpace) -> Result<Self> {
        if experiences.is_empty() {
            return Err(Error::InvalidSetting("experience list is empty".into()));
        }
        let n = experiences[0].len();
        if n == 0 {
            return Err(Error::InvalidSetting("experience dimension must be at least 1".into()));
        }
        for (a, e) in experiences.iter().enumerate() {
            if e.len() != n {
                return Err(Error::InvalidSetting(format!(
                    "experience {a} has dimension {}, expected {n}",
                    e.len()
                )));
            }
            if e.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSetting(format!("experience {a} is not finite")));
            }
            if experiences[..a].contains(e) {
                return Err(Error::InvalidSetting(format!("experience {a} is a duplicate")));
            }
        }
        concepts.validate().map_err(Error::InvalidSetting)?;
        Ok(KnowledgeSetting {
            experiences,
            concepts,
        })
    }

    /// Scalar experiences `first, first+1, ..., last`.
    pub fn integer_range(first: i64, last: i64, concepts: ConceptSpace) -> Result<Self> {
        let experiences = (first..=last).map(|e| vec![e as f64]).collect();
        Self::new(experiences, concepts)
    }

    pub fn experiences(&self) -> &[Vec<f64>] {
        &self.experiences
    }

    pub fn experience(&self, e: usize) -> &[f64] {
        &self.experiences[e]
    }

    pub fn num_experiences(&self) -> usize {
        self.experiences.len()
    }

    pub fn concepts(&self) -> &ConceptSpace {
        &self.concepts
    }

    pub fn concept_dim(&self) -> usize {
        self.concepts.dim()
    }
}

/// One agent's conceptualization: a table with one concept point per
/// experience.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeFunction {
    dim: usize,
    values: Vec<f64>,
}

impl KnowledgeFunction {
    pub fn new(setting: &KnowledgeSetting, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != setting.num_experiences() {
            return Err(Error::InvalidFunction(format!(
                "{} values for {} experiences",
                values.len(),
                setting.num_experiences()
            )));
        }
        let dim = setting.concept_dim();
        let mut flat = Vec::with_capacity(values.len() * dim);
        for (e, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidFunction(format!(
                    "value at experience {e} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if !setting.concepts().contains(v) {
                return Err(Error::InvalidFunction(format!(
                    "value {v:?} at experience {e} is outside the concept space"
                )));
            }
            flat.extend_from_slice(v);
        }
        Ok(KnowledgeFunction { dim, values: flat })
    }

    /// Scalar-concept convenience constructor.
    pub fn from_scalars(setting: &KnowledgeSetting, values: &[f64]) -> Result<Self> {
        Self::new(setting, values.iter().map(|v| vec![*v]).collect())
    }

    pub fn constant(setting: &KnowledgeSetting, c: &[f64]) -> Result<Self> {
        Self::new(setting, vec![c.to_vec(); setting.num_experiences()])
    }

    /// The function that conceptualizes nothing.
    pub fn zero(setting: &KnowledgeSetting) -> Self {
        let dim = setting.concept_dim();
        KnowledgeFunction {
            dim,
            values: vec![0.0; dim * setting.num_experiences()],
        }
    }

    /// Builds from a flat table without checking membership; callers must
    /// guarantee every value lies in the concept space.
    pub(crate) fn from_flat_unchecked(dim: usize, values: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && values.len() % dim == 0);
        KnowledgeFunction { dim, values }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Concept at experience `e`; panics when out of range.
    #[inline]
    pub fn value(&self, e: usize) -> &[f64] {
        &self.values[e * self.dim..(e + 1) * self.dim]
    }

    pub(crate) fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn values(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn to_table(&self) -> Vec<Vec<f64>> {
        self.values().map(<[f64]>::to_vec).collect()
    }

    /// `k(e)`.
    pub fn evaluate(&self, e: usize) -> Result<&[f64]> {
        if e >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: e,
                len: self.len(),
            });
        }
        Ok(self.value(e))
    }

    /// True iff `k(e)` is not the zero concept.
    pub fn conceptualizes(&self, e: usize) -> Result<bool> {
        self.evaluate(e).map(|c| !is_zero(c))
    }

    #[inline]
    pub(crate) fn conceptualizes_unchecked(&self, e: usize) -> bool {
        !is_zero(self.value(e))
    }

    pub fn num_conceptualized(&self) -> usize {
        (0..self.len()).filter(|&e| self.conceptualizes_unchecked(e)).count()
    }

    pub fn is_compatible(&self, setting: &KnowledgeSetting) -> bool {
        self.dim == setting.concept_dim() && self.len() == setting.num_experiences()
    }

    pub fn check_in(&self, setting: &KnowledgeSetting) -> Result<()> {
        if !self.is_compatible(setting) {
            return Err(Error::InvalidFunction(
                "function does not match the setting's dimensions".into(),
            ));
        }
        match self.values().position(|c| !setting.concepts().contains(c)) {
            Some(e) => Err(Error::InvalidFunction(format!(
                "value at experience {e} is outside the concept space"
            ))),
            None => Ok(()),
        }
    }
}

/// Parsimony penalty of a function: how wide a range of nonzero concepts it
/// uses, counting only experiences where `support` holds.
///
/// Discrete concepts: number of distinct nonzero concepts minus one, floored
/// at zero. Box concepts: Lebesgue measure of the convex hull of the distinct
/// nonzero values (zero when at most one distinct value is used).
pub fn concept_spread_on(
    setting: &KnowledgeSetting,
    k: &KnowledgeFunction,
    support: impl Fn(usize) -> bool,
) -> f64 {
    let used = (0..k.len())
        .filter(|&e| support(e))
        .map(|e| k.value(e))
        .filter(|c| !is_zero(c));
    match setting.concepts() {
        ConceptSpace::Discrete { .. } => {
            let mut distinct: Vec<&[f64]> = Vec::new();
            for c in used {
                if !distinct.contains(&c) {
                    distinct.push(c);
                }
            }
            distinct.len().saturating_sub(1) as f64
        }
        ConceptSpace::Box { .. } => hull_measure(k.dim(), used),
    }
}

/// [`concept_spread_on`] over every experience.
pub fn distinct_nonzero_concepts(setting: &KnowledgeSetting, k: &KnowledgeFunction) -> f64 {
    concept_spread_on(setting, k, |_| true)
}

fn hull_measure<'a>(dim: usize, points: impl Iterator<Item = &'a [f64]>) -> f64 {
    match dim {
        1 => {
            let (lo, hi) = points.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c[0]), hi.max(c[0]))
            });
            if hi > lo {
                hi - lo
            } else {
                0.0
            }
        }
        2 => polygon_hull_area(points.map(|c| (c[0], c[1])).collect()),
        _ => {
            // Bounding-box volume stands in for the hull volume above two
            // dimensions.
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            let mut any = false;
            for c in points {
                any = true;
                for k in 0..dim {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k]);
                }
            }
            if !any {
                return 0.0;
            }
            lo.iter().zip(&hi).map(|(l, h)| h - l).product()
        }
    }
}

fn polygon_hull_area(mut pts: Vec<(f64, f64)>) -> f64 {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite concept values"));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    // Andrew's monotone chain.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    let push = |hull: &mut Vec<(f64, f64)>, p: (f64, f64), floor: usize| {
        while hull.len() >= floor && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    };
    for &p in &pts {
        push(&mut hull, p, 2);
    }
    let floor = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        push(&mut hull, p, floor);
    }
    hull.pop();
    let n = hull.len();
    let twice: f64 = (0..n)
        .map(|a| {
            let (p, q) = (hull[a], hull[(a + 1) % n]);
            p.0 * q.1 - q.0 * p.1
        })
        .sum();
    twice.abs() / 2.0
}

/// `d_C(f, g) = sqrt(sum_e |f(e) - g(e)|^2)`.
pub fn distance_c(f: &KnowledgeFunction, g: &KnowledgeFunction) -> Result<f64> {
    if f.len() != g.len() || f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.as_flat().len(),
            found: g.as_flat().len(),
        });
    }
    Ok(sq_dist(f.as_flat(), g.as_flat()).sqrt())
}

/// Likelihood `L(e, c)` of concept `c` explaining experience `e`. Every
/// variant returns exactly 1/2 for the zero concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LikelihoodLandscape {
    /// `L(e, c) = value` for every nonzero concept.
    Constant { value: f64 },
    /// `L(e, c) = exp(-|c - center|^2 / width)` for nonzero concepts.
    GaussianPeak { center: Vec<f64>, width: f64 },
    /// `table[e][a]` is the likelihood of discrete concept `a` at experience
    /// `e`. Column 0 is ignored.
    Tabular { table: Vec<Vec<f64>> },
}

pub const ZERO_CONCEPT_LIKELIHOOD: f64 = 0.5;

impl LikelihoodLandscape {
    pub fn validate(&self, setting: &KnowledgeSetting) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLandscape(msg));
        match self {
            LikelihoodLandscape::Constant { value } => {
                if !(0.0..=1.0).contains(value) {
                    return bad(format!("constant likelihood {value} outside [0, 1]"));
                }
            }
            LikelihoodLandscape::GaussianPeak { center, width } => {
                if center.len() != setting.concept_dim() {
                    return bad(format!(
                        "peak center has dimension {}, concepts have {}",
                        center.len(),
                        setting.concept_dim()
                    ));
                }
                if !(*width > 0.0 && width.is_finite()) {
                    return bad(format!("peak width {width} must be positive"));
                }
                if center.iter().any(|v| !v.is_finite()) {
                    return bad("peak center must be finite".into());
                }
            }
            LikelihoodLandscape::Tabular { table } => {
                let n_concepts = match setting.concepts() {
                    ConceptSpace::Discrete { points, .. } => points.len(),
                    ConceptSpace::Box { .. } => {
                        return bad("tabular landscapes need a discrete concept space".into())
                    }
                };
                if table.len() != setting.num_experiences() {
                    return bad(format!(
                        "table has {} rows for {} experiences",
                        table.len(),
                        setting.num_experiences()
                    ));
                }
                for (e, row) in table.iter().enumerate() {
                    if row.len() != n_concepts {
                        return bad(format!("table row {e} has {} columns", row.len()));
                    }
                    if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        return bad(format!("table row {e} has an entry outside [0, 1]"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, setting: &KnowledgeSetting, e: usize, c: &[f64]) -> f64 {
        if is_zero(c) {
            return ZERO_CONCEPT_LIKELIHOOD;
        }
        match self {
            LikelihoodLandscape::Constant { value } => *value,
            LikelihoodLandscape::GaussianPeak { center, width } => {
                (-sq_dist(c, center) / width).exp()
            }
            LikelihoodLandscape::Tabular { table } => setting
                .concepts()
                .index_of(c)
                .map_or(0.0, |a| table[e][a]),
        }
    }

    /// `ln L(e, c)`, `-inf` when the likelihood is exactly zero.
    pub fn ln_eval(&self, setting: &KnowledgeSetting, e: usize, c: &[f64]) -> f64 {
        if is_zero(c) {
            return ZERO_CONCEPT_LIKELIHOOD.ln();
        }
        match self {
            LikelihoodLandscape::GaussianPeak { center, width } => -sq_dist(c, center) / width,
            _ => self.eval(setting, e, c).ln(),
        }
    }
}

/// JSON document holding a setting together with one function's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeDocument {
    pub experiences: Vec<Vec<f64>>,
    pub concepts: ConceptSpace,
    pub values: Vec<Vec<f64>>,
}

impl KnowledgeDocument {
    pub fn new(setting: &KnowledgeSetting, k: &KnowledgeFunction) -> Self {
        KnowledgeDocument {
            experiences: setting.experiences().to_vec(),
            concepts: setting.concepts().clone(),
            values: k.to_table(),
        }
    }

    pub fn into_parts(self) -> Result<(KnowledgeSetting, KnowledgeFunction)> {
        let setting = KnowledgeSetting::new(self.experiences, self.concepts)?;
        let k = KnowledgeFunction::new(&setting, self.values)?;
        Ok((setting, k))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn box_setting(n: usize) -> KnowledgeSetting {
        KnowledgeSetting::integer_range(1, n as i64, ConceptSpace::interval(-10.0, 10.0)).unwrap()
    }

    #[test]
    fn colour_function_names_red_and_ignores_infrared() {
        let s = colour_setting();
        let f = colour_function(&s);
        let red = s.concepts().point("red").unwrap();
        assert_eq!(f.evaluate(70).unwrap(), red); // 700 nm
        assert!(!f.conceptualizes(90).unwrap()); // 900 nm
        assert!(f.conceptualizes(40).unwrap());
    }

    #[test]
    fn evaluate_rejects_out_of_range_index() {
        let s = box_setting(3);
        let k = KnowledgeFunction::zero(&s);
        assert!(matches!(
            k.evaluate(3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
        assert!(k.conceptualizes(7).is_err());
    }

    #[test]
    fn zero_function_conceptualizes_nothing() {
        let s = box_setting(4);
        let k = KnowledgeFunction::zero(&s);
        for e in 0..4 {
            assert_eq!(k.evaluate(e).unwrap(), &[0.0]);
            assert!(!k.conceptualizes(e).unwrap());
        }
        assert_eq!(distinct_nonzero_concepts(&s, &k), 0.0);
    }

    #[test]
    fn table_lookup() {
        let s = box_setting(4);
        let k = KnowledgeFunction::from_scalars(&s, &[0.0, 1.0, 5.0, 0.0]).unwrap();
        assert_eq!(k.evaluate(2).unwrap(), &[5.0]);
        assert!(k.conceptualizes(1).unwrap());
    }

    #[test]
    fn penalty_counts_extra_concepts() {
        let s = earth_setting();
        let pop = earth_population(&s);
        assert_eq!(distinct_nonzero_concepts(&s, &pop[3]), 1.0);
        assert_eq!(distinct_nonzero_concepts(&s, &pop[1]), 0.0);
        // restricted to f1 only, k_4 uses a single concept
        assert_eq!(concept_spread_on(&s, &pop[3], |e| e == 0), 0.0);
    }

    #[test]
    fn box_penalty_is_hull_measure() {
        let s = box_setting(4);
        let k = KnowledgeFunction::from_scalars(&s, &[2.0, 0.0, 5.5, 3.0]).unwrap();
        assert_eq!(distinct_nonzero_concepts(&s, &k), 3.5);
        let c = KnowledgeFunction::from_scalars(&s, &[2.0, 2.0, 0.0, 2.0]).unwrap();
        assert_eq!(distinct_nonzero_concepts(&s, &c), 0.0);

        let plane = ConceptSpace::Box {
            lo: vec![-5.0, -5.0],
            hi: vec![5.0, 5.0],
        };
        let s2 = KnowledgeSetting::integer_range(1, 5, plane).unwrap();
        let square = KnowledgeFunction::new(
            &s2,
            vec![
                vec![1.0, 1.0],
                vec![3.0, 1.0],
                vec![3.0, 3.0],
                vec![1.0, 3.0],
                vec![2.0, 2.0],
            ],
        )
        .unwrap();
        assert!((distinct_nonzero_concepts(&s2, &square) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let s = box_setting(5);
        let one = KnowledgeFunction::constant(&s, &[1.0]).unwrap();
        let five = KnowledgeFunction::constant(&s, &[5.0]).unwrap();
        let two = KnowledgeFunction::constant(&s, &[2.0]).unwrap();
        let six = KnowledgeFunction::constant(&s, &[6.0]).unwrap();
        assert!((distance_c(&one, &five).unwrap() - 8.94427190999916).abs() < 1e-12);
        assert!((distance_c(&two, &six).unwrap() - 80f64.sqrt()).abs() < 1e-12);
        assert_eq!(distance_c(&one, &one).unwrap(), 0.0);

        let short = KnowledgeFunction::constant(&box_setting(3), &[1.0]).unwrap();
        assert!(matches!(
            distance_c(&one, &short),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn construction_rejects_out_of_space_values() {
        let s = box_setting(2);
        assert!(KnowledgeFunction::from_scalars(&s, &[1.0, 10.5]).is_err());
        assert!(KnowledgeFunction::from_scalars(&s, &[1.0]).is_err());
        let d = earth_setting();
        assert!(KnowledgeFunction::from_scalars(&d, &[1.0, 2.0, 0.0, 0.0, 1.5]).is_err());
        assert!(KnowledgeFunction::from_scalars(&d, &[1.0, 2.0, 0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn setting_invariants() {
        assert!(KnowledgeSetting::new(vec![], ConceptSpace::interval(-1.0, 1.0)).is_err());
        assert!(KnowledgeSetting::new(
            vec![vec![1.0], vec![1.0]],
            ConceptSpace::interval(-1.0, 1.0)
        )
        .is_err());
        assert!(KnowledgeSetting::new(vec![vec![1.0]], ConceptSpace::interval(0.5, 1.0)).is_err());
        let no_zero = ConceptSpace::Discrete {
            labels: vec!["a".into()],
            points: vec![vec![1.0]],
        };
        assert!(KnowledgeSetting::new(vec![vec![1.0]], no_zero).is_err());
    }

    #[test]
    fn landscapes_give_one_half_at_zero() {
        let s = box_setting(5);
        let d = earth_setting();
        let cases = [
            (LikelihoodLandscape::Constant { value: 1.0 }, &s),
            (LikelihoodLandscape::Constant { value: 0.0 }, &s),
            (
                LikelihoodLandscape::GaussianPeak {
                    center: vec![6.0],
                    width: 10.0,
                },
                &s,
            ),
            (earth_landscape(), &d),
        ];
        for (l, setting) in cases {
            l.validate(setting).unwrap();
            for e in 0..setting.num_experiences() {
                assert_eq!(l.eval(setting, e, &[0.0]), 0.5);
                assert_eq!(l.ln_eval(setting, e, &[0.0]), 0.5f64.ln());
            }
        }
    }

    #[test]
    fn landscape_validation() {
        let s = box_setting(5);
        assert!(LikelihoodLandscape::Constant { value: 1.5 }.validate(&s).is_err());
        assert!(LikelihoodLandscape::GaussianPeak {
            center: vec![1.0],
            width: 0.0
        }
        .validate(&s)
        .is_err());
        assert!(earth_landscape().validate(&s).is_err());
    }

    #[test]
    fn document_round_trip() {
        let s = earth_setting();
        let k = earth_population(&s).remove(3);
        let json = KnowledgeDocument::new(&s, &k).to_json().unwrap();
        let (s2, k2) = KnowledgeDocument::from_json(&json).unwrap().into_parts().unwrap();
        assert_eq!(s, s2);
        assert_eq!(k, k2);
        assert!(KnowledgeDocument::from_json(r#"{"experiences": [[1.0]], "concepts": {"kind": "box", "lo": [-1], "hi": [1]}, "values": [[0.5]], "extra": 1}"#).is_err());
    }

    fn arb_fn(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in arb_fn(6), b in arb_fn(6), c in arb_fn(6)) {
            let s = box_setting(6);
            let f = KnowledgeFunction::from_scalars(&s, &a).unwrap();
            let g = KnowledgeFunction::from_scalars(&s, &b).unwrap();
            let h = KnowledgeFunction::from_scalars(&s, &c).unwrap();
            let d = |x, y| distance_c(x, y).unwrap();
            prop_assert_eq!(d(&f, &g), d(&g, &f));
            prop_assert_eq!(d(&f, &f), 0.0);
            prop_assert!(a == b || d(&f, &g) > 0.0);
            prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
        }

        #[test]
        fn likelihoods_stay_in_unit_interval(c in -10.0f64..10.0, mu in -10.0f64..10.0, w in 0.01f64..100.0) {
            let s = box_setting(3);
            let l = LikelihoodLandscape::GaussianPeak { center: vec![mu], width: w };
            let v = l.eval(&s, 0, &[c]);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
