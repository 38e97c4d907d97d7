//! Exact distribution of a sum of independent, non-identically distributed
//! uniform random variables.
//!
//! For hops `U(a_i, b_i)` with widths `l_i = b_i - a_i`, every 0/1 selection
//! of the widths gives a subset sum `s_j` with parity `|w_j|` (the number of
//! selected widths). The density on `(A, B)` with `A = Σ a_i`, `B = Σ b_i` is
//!
//! ```text
//! h(x) = Σ_{j : A + s_j < x} (-1)^{|w_j|} (x - A - s_j)^{n-1} / ((n-1)! Π l_i)
//! ```
//!
//! and the distribution function replaces the power by `n` and the factorial
//! by `n!`. Both are alternating sums of large powers, so they are evaluated
//! in double-double arithmetic with a running error estimate. Points above the
//! midpoint of the support are reflected (`x -> A + B - x`) before evaluation,
//! which keeps the number of cancelling terms at most half the table.

use crate::dd::{DoubleDouble, DD_EPS};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative error above which an evaluation is refused.
pub const PRECISION_LIMIT: f64 = 1e-9;

/// Absolute error below which a probability is accepted regardless of its
/// relative error (far below `f64` resolution of a value in `[0, 1]`).
pub(crate) const PROBABILITY_FLOOR: f64 = 1e-15;

/// Size limits guarding the `2^n` blowup of subset-sum tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Capacity {
    /// Largest hop count of a single route.
    pub max_hops: usize,
    /// Largest `n + m` accepted by the two-route closed form.
    pub max_combined_hops: usize,
}

impl Default for Capacity {
    fn default() -> Self {
        Self {
            max_hops: 16,
            max_combined_hops: 20,
        }
    }
}

impl Capacity {
    pub(crate) fn check_hops(&self, n: usize) -> Result<()> {
        if n > self.max_hops {
            return Err(Error::Capacity {
                what: "hop count",
                requested: n,
                limit: self.max_hops,
            });
        }
        Ok(())
    }
}

/// One per-hop jitter interval, in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformSpec {
    lower: f64,
    upper: f64,
}

impl UniformSpec {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower < 0.0 || upper <= lower {
            return Err(Error::InvalidInterval { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub(crate) fn width_dd(&self) -> DoubleDouble {
        DoubleDouble::diff(self.upper, self.lower)
    }
}

/// Ordered per-hop intervals of one route.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteDelayModel {
    hops: Vec<UniformSpec>,
    sum_lower: DoubleDouble,
    sum_upper: DoubleDouble,
}

impl RouteDelayModel {
    pub fn new(hops: Vec<UniformSpec>) -> Result<Self> {
        if hops.is_empty() {
            return Err(Error::validation("a route needs at least one hop"));
        }
        let sum_lower = hops.iter().map(|h| DoubleDouble::from(h.lower)).sum();
        let sum_upper = hops.iter().map(|h| DoubleDouble::from(h.upper)).sum();
        Ok(Self {
            hops,
            sum_lower,
            sum_upper,
        })
    }

    /// Builds a model from `(lower, upper)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let hops = bounds
            .iter()
            .map(|&(a, b)| UniformSpec::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(hops)
    }

    pub fn hops(&self) -> &[UniformSpec] {
        &self.hops
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    /// `A = Σ a_i`.
    pub fn sum_lower(&self) -> f64 {
        self.sum_lower.to_f64()
    }

    /// `B = Σ b_i`.
    pub fn sum_upper(&self) -> f64 {
        self.sum_upper.to_f64()
    }

    pub(crate) fn sum_lower_dd(&self) -> DoubleDouble {
        self.sum_lower
    }

    pub(crate) fn sum_upper_dd(&self) -> DoubleDouble {
        self.sum_upper
    }

    /// The same route with every interval moved by `offset` ms.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        let hops = self
            .hops
            .iter()
            .map(|h| UniformSpec::new(h.lower + offset, h.upper + offset))
            .collect::<Result<Vec<_>>>()?;
        Self::new(hops)
    }

    pub(crate) fn widths_dd(&self) -> Vec<DoubleDouble> {
        self.hops.iter().map(UniformSpec::width_dd).collect()
    }

    /// `Π l_i` in double-double.
    pub(crate) fn width_product(&self) -> DoubleDouble {
        self.hops
            .iter()
            .fold(DoubleDouble::ONE, |acc, h| acc * h.width_dd())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsetEntry {
    sum: DoubleDouble,
    parity: u32,
}

impl SubsetEntry {
    pub fn subset_sum(&self) -> f64 {
        self.sum.to_f64()
    }

    /// Number of widths selected by this subset.
    pub fn parity(&self) -> u32 {
        self.parity
    }

    pub(crate) fn sum_dd(&self) -> DoubleDouble {
        self.sum
    }

    /// `(-1)^parity`.
    pub fn sign(&self) -> f64 {
        if self.parity % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// All `2^n` subset sums of the hop widths, sorted ascending. Equal sums stay
/// as separate entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetSumTable {
    entries: Vec<SubsetEntry>,
}

impl SubsetSumTable {
    pub(crate) fn from_widths(widths: &[DoubleDouble], capacity: &Capacity) -> Result<Self> {
        let n = widths.len();
        if n == 0 {
            return Err(Error::validation("subset sums need at least one width"));
        }
        capacity.check_hops(n)?;
        if let Some(bad) = widths.iter().find(|w| !(w.hi() > 0.0 && w.is_finite())) {
            return Err(Error::validation(format!(
                "widths must be positive and finite, got {}",
                bad.to_f64()
            )));
        }
        let mut entries = Vec::with_capacity(1 << n);
        entries.push(SubsetEntry {
            sum: DoubleDouble::ZERO,
            parity: 0,
        });
        // doubling construction: every existing subset with and without width i
        for w in widths {
            let len = entries.len();
            for idx in 0..len {
                let e = entries[idx];
                entries.push(SubsetEntry {
                    sum: e.sum + *w,
                    parity: e.parity + 1,
                });
            }
        }
        entries.sort_by(|a, b| a.sum.partial_cmp(&b.sum).expect("finite sums"));
        Ok(Self { entries })
    }

    pub fn for_model(model: &RouteDelayModel, capacity: &Capacity) -> Result<Self> {
        Self::from_widths(&model.widths_dd(), capacity)
    }

    pub fn entries(&self) -> &[SubsetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries with `offset + s_j < x`, i.e. the largest qualifying
    /// 1-based index, or 0 when none qualifies.
    pub(crate) fn rank_dd(&self, offset: DoubleDouble, x: DoubleDouble) -> usize {
        self.entries.partition_point(|e| offset + e.sum < x)
    }
}

/// Subset-sum table of `lengths` with the default capacity.
pub fn subset_sums(lengths: &[f64]) -> Result<SubsetSumTable> {
    subset_sums_with_capacity(lengths, &Capacity::default())
}

pub fn subset_sums_with_capacity(lengths: &[f64], capacity: &Capacity) -> Result<SubsetSumTable> {
    if let Some(&bad) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::validation(format!(
            "lengths must be positive and finite, got {bad}"
        )));
    }
    let widths: Vec<DoubleDouble> = lengths.iter().map(|&l| DoubleDouble::from(l)).collect();
    SubsetSumTable::from_widths(&widths, capacity)
}

/// Largest index `j` with `x - A - s_j > 0`, or 0 when `x <= A`.
pub fn rank(x: f64, model: &RouteDelayModel, table: &SubsetSumTable) -> usize {
    table.rank_dd(model.sum_lower_dd(), DoubleDouble::from(x))
}

/// A value together with an estimate of its absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub error_estimate: f64,
}

/// Unnormalised alternating power sum `Σ_{j<=rank} (-1)^|w_j| t_j^k` with
/// `t_j = x - offset - s_j`, plus an absolute error estimate.
pub(crate) fn alternating_power_sum(
    table: &SubsetSumTable,
    offset: DoubleDouble,
    x: DoubleDouble,
    power: u32,
) -> (DoubleDouble, f64) {
    let count = table.rank_dd(offset, x);
    let base = x - offset;
    let magnitude = x.abs().to_f64() + offset.abs().to_f64();
    let k = power as f64;
    let mut acc = DoubleDouble::ZERO;
    let mut err = 0.0;
    for e in &table.entries[..count] {
        let t = base - e.sum;
        let term = t.powi(power);
        if e.parity % 2 == 0 {
            acc += term;
        } else {
            acc += -term;
        }
        // rounding of the power plus the effect of the rounded argument
        err += (k + 4.0) * term.to_f64().abs();
        if power > 0 {
            let tf = t.to_f64().abs();
            err += 4.0 * k * tf.powi(power as i32 - 1) * (magnitude + e.sum.to_f64());
        }
    }
    (acc, err * DD_EPS)
}

/// Density and distribution function of one route's total delay.
///
/// Holds the subset-sum table so repeated evaluations are cheap.
#[derive(Clone, Debug)]
pub struct UniformSum {
    model: RouteDelayModel,
    table: SubsetSumTable,
    midpoint: DoubleDouble,
    // 1 / ((n-1)! Π l_i) and 1 / (n! Π l_i)
    pdf_norm: DoubleDouble,
    cdf_norm: DoubleDouble,
}

impl UniformSum {
    pub fn new(model: RouteDelayModel) -> Result<Self> {
        Self::with_capacity(model, &Capacity::default())
    }

    pub fn with_capacity(model: RouteDelayModel, capacity: &Capacity) -> Result<Self> {
        let table = SubsetSumTable::for_model(&model, capacity)?;
        let n = model.hop_count() as u64;
        let prod = model.width_product();
        let fact_nm1 = factorial_dd(n - 1);
        let pdf_norm = DoubleDouble::ONE / (fact_nm1 * prod);
        let cdf_norm = pdf_norm / DoubleDouble::from(n);
        let midpoint = (model.sum_lower_dd() + model.sum_upper_dd()) * 0.5;
        Ok(Self {
            model,
            table,
            midpoint,
            pdf_norm,
            cdf_norm,
        })
    }

    pub fn model(&self) -> &RouteDelayModel {
        &self.model
    }

    pub fn table(&self) -> &SubsetSumTable {
        &self.table
    }

    fn reflect(&self, x: DoubleDouble) -> (DoubleDouble, bool) {
        if x > self.midpoint {
            (self.model.sum_lower_dd() + self.model.sum_upper_dd() - x, true)
        } else {
            (x, false)
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.pdf_eval(x).map(|e| e.value)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.cdf_eval(x).map(|e| e.value)
    }

    pub fn pdf_eval(&self, x: f64) -> Result<Evaluation> {
        self.pdf_dd(DoubleDouble::from(x))
    }

    pub fn cdf_eval(&self, x: f64) -> Result<Evaluation> {
        self.cdf_dd(DoubleDouble::from(x))
    }

    pub(crate) fn pdf_dd(&self, x: DoubleDouble) -> Result<Evaluation> {
        let a = self.model.sum_lower_dd();
        let b = self.model.sum_upper_dd();
        if !(x > a && x < b) {
            return Ok(Evaluation {
                value: 0.0,
                error_estimate: 0.0,
            });
        }
        let (xr, _) = self.reflect(x);
        let n = self.model.hop_count() as u32;
        let (sum, err) = alternating_power_sum(&self.table, a, xr, n - 1);
        let value = (sum * self.pdf_norm).to_f64();
        let norm = self.pdf_norm.to_f64();
        let error_estimate = err * norm + value.abs() * (n as f64 + 4.0) * DD_EPS;
        let floor = PROBABILITY_FLOOR / (b - a).to_f64();
        check_precision(value, error_estimate, floor)?;
        Ok(Evaluation {
            value: value.max(0.0),
            error_estimate,
        })
    }

    pub(crate) fn cdf_dd(&self, x: DoubleDouble) -> Result<Evaluation> {
        let a = self.model.sum_lower_dd();
        let b = self.model.sum_upper_dd();
        if !(x > a) {
            return Ok(Evaluation {
                value: 0.0,
                error_estimate: 0.0,
            });
        }
        if !(x < b) {
            return Ok(Evaluation {
                value: 1.0,
                error_estimate: 0.0,
            });
        }
        let (xr, reflected) = self.reflect(x);
        let n = self.model.hop_count() as u32;
        let (sum, err) = alternating_power_sum(&self.table, a, xr, n);
        let lower_tail = sum * self.cdf_norm;
        let value = if reflected {
            (DoubleDouble::ONE - lower_tail).to_f64()
        } else {
            lower_tail.to_f64()
        };
        let error_estimate =
            err * self.cdf_norm.to_f64() + lower_tail.to_f64().abs() * (n as f64 + 4.0) * DD_EPS;
        check_precision(value, error_estimate, PROBABILITY_FLOOR)?;
        Ok(Evaluation {
            value: value.clamp(0.0, 1.0),
            error_estimate,
        })
    }
}

pub(crate) fn check_precision(value: f64, error_estimate: f64, floor: f64) -> Result<()> {
    if !value.is_finite() || !error_estimate.is_finite() {
        return Err(Error::Precision {
            estimate: f64::INFINITY,
            limit: PRECISION_LIMIT,
        });
    }
    if error_estimate <= floor {
        return Ok(());
    }
    let relative = error_estimate / value.abs();
    if relative > PRECISION_LIMIT {
        return Err(Error::Precision {
            estimate: relative,
            limit: PRECISION_LIMIT,
        });
    }
    Ok(())
}

pub(crate) fn factorial_dd(n: u64) -> DoubleDouble {
    (2..=n).fold(DoubleDouble::ONE, |acc, k| acc * (k as f64))
}

/// Density of the route's total delay at `x`.
pub fn pdf(x: f64, model: &RouteDelayModel) -> Result<f64> {
    UniformSum::new(model.clone())?.pdf(x)
}

/// Distribution function of the route's total delay at `x`.
pub fn cdf(x: f64, model: &RouteDelayModel) -> Result<f64> {
    UniformSum::new(model.clone())?.cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sums_and_parities(t: &SubsetSumTable) -> Vec<(f64, u32)> {
        t.entries().iter().map(|e| (e.subset_sum(), e.parity())).collect()
    }

    #[test]
    fn single_length_table() {
        let t = subset_sums(&[5.0]).unwrap();
        assert_eq!(sums_and_parities(&t), vec![(0.0, 0), (5.0, 1)]);
    }

    #[test]
    fn two_length_table() {
        let t = subset_sums(&[1.0, 2.0]).unwrap();
        assert_eq!(
            sums_and_parities(&t),
            vec![(0.0, 0), (1.0, 1), (2.0, 1), (3.0, 2)]
        );
    }

    #[test]
    fn identical_lengths_keep_ties() {
        let t = subset_sums(&[1.0, 1.0, 1.0]).unwrap();
        let got = sums_and_parities(&t);
        let sums: Vec<f64> = got.iter().map(|p| p.0).collect();
        let parities: Vec<u32> = got.iter().map(|p| p.1).collect();
        assert_eq!(sums, vec![0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0]);
        assert_eq!(parities, vec![0, 1, 1, 1, 2, 2, 2, 3]);
    }

    #[test]
    fn table_rejects_bad_input() {
        assert!(matches!(subset_sums(&[1.0, 0.0]), Err(Error::Validation(_))));
        assert!(matches!(subset_sums(&[-1.0]), Err(Error::Validation(_))));
        assert!(matches!(subset_sums(&[]), Err(Error::Validation(_))));
        let too_many = vec![1.0; 17];
        assert!(matches!(subset_sums(&too_many), Err(Error::Capacity { .. })));
        let cap = Capacity {
            max_hops: 17,
            ..Capacity::default()
        };
        assert_eq!(subset_sums_with_capacity(&too_many, &cap).unwrap().len(), 1 << 17);
    }

    #[test]
    fn interval_validation() {
        assert!(UniformSpec::new(1.0, 1.0).is_err());
        assert!(UniformSpec::new(2.0, 1.0).is_err());
        assert!(UniformSpec::new(-1.0, 1.0).is_err());
        assert!(UniformSpec::new(0.0, f64::INFINITY).is_err());
        assert!(UniformSpec::new(f64::NAN, 1.0).is_err());
        assert!(RouteDelayModel::new(vec![]).is_err());
    }

    #[test]
    fn rank_examples() {
        let m = RouteDelayModel::from_bounds(&[(0.0, 1.0), (0.0, 2.0)]).unwrap();
        let t = SubsetSumTable::for_model(&m, &Capacity::default()).unwrap();
        assert_eq!(rank(0.0, &m, &t), 0);
        assert_eq!(rank(1.5, &m, &t), 2);
        assert_eq!(rank(1.0, &m, &t), 1);
        assert_eq!(rank(3.5, &m, &t), 4);
        let shifted = RouteDelayModel::from_bounds(&[(10.0, 11.0)]).unwrap();
        let t1 = SubsetSumTable::for_model(&shifted, &Capacity::default()).unwrap();
        assert_eq!(rank(10.0, &shifted, &t1), 0);
    }

    #[test]
    fn pdf_examples() {
        let m = RouteDelayModel::from_bounds(&[(0.0, 100.0)]).unwrap();
        assert!((pdf(50.0, &m).unwrap() - 0.01).abs() < 1e-15);
        let m = RouteDelayModel::from_bounds(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert!((pdf(1.0, &m).unwrap() - 1.0).abs() < 1e-15);
        let m = RouteDelayModel::from_bounds(&[(0.0, 1.0), (0.0, 2.0)]).unwrap();
        assert!((pdf(0.5, &m).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cdf_examples() {
        let m = RouteDelayModel::from_bounds(&[(0.0, 1.0), (0.0, 2.0)]).unwrap();
        assert_eq!(cdf(0.0, &m).unwrap(), 0.0);
        assert_eq!(cdf(3.0, &m).unwrap(), 1.0);
        assert!((cdf(1.5, &m).unwrap() - 0.5).abs() < 1e-15);
        let m = RouteDelayModel::from_bounds(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert!((cdf(1.0, &m).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn support_edges_are_zero() {
        let m = RouteDelayModel::from_bounds(&[(3.0, 5.0), (1.0, 4.0)]).unwrap();
        let d = UniformSum::new(m).unwrap();
        assert_eq!(d.pdf(4.0).unwrap(), 0.0);
        assert_eq!(d.pdf(9.0).unwrap(), 0.0);
        assert_eq!(d.pdf(-1.0).unwrap(), 0.0);
        assert!(d.pdf(4.0 + 1e-9).unwrap() > 0.0);
        assert!(d.pdf(9.0 - 1e-9).unwrap() > 0.0);
    }

    #[test]
    fn narrow_hop_among_wide_ones() {
        // one very narrow width forces deep cancellation; density must still
        // match the two-hop convolution scaled by the narrow box
        let m = RouteDelayModel::from_bounds(&[(0.0, 200.0), (10.0, 10.001)]).unwrap();
        let d = UniformSum::new(m).unwrap();
        assert!((d.pdf(100.0).unwrap() - 1.0 / 200.0).abs() < 1e-14);
    }
}
