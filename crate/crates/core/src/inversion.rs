//! Probability that the total jitter on one route exceeds the total jitter
//! on another.
//!
//! Three independent evaluators are provided:
//!
//! * [`inversion_probability_closed_form`]: the alternating double sum over
//!   both subset-sum tables, each term an exact polynomial integral, plus the
//!   tail `1 - H_1(B_2)` when route 1 can outlast route 2 entirely.
//! * [`inversion_probability_quadrature`]: adaptive Gauss–Kronrod integration
//!   of `h_1(x) H_2(x)` with every subset-sum breakpoint forced as a panel
//!   boundary.
//! * [`inversion_probability_montecarlo`]: direct sampling.
//!
//! The inversion event is strict (`R1 > R2`); with continuous delays this has
//! the same probability as `R1 >= R2`.

use crate::dd::{DoubleDouble, DD_EPS};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::uniform_sum::{
    check_precision, factorial_dd, Capacity, RouteDelayModel, UniformSum, PROBABILITY_FLOOR,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Results outside `[0, 1]` by more than this are errors, not rounding.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// Monte Carlo trials drawn from one generator stream.
const MC_BLOCK: u64 = 1 << 16;

/// Default evaluation budget of the quadrature oracle.
pub const QUADRATURE_MAX_EVALUATIONS: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct InversionInstance {
    /// The better route (`n` hops).
    pub route1: RouteDelayModel,
    /// The competing route (`m` hops).
    pub route2: RouteDelayModel,
}

impl InversionInstance {
    pub fn new(route1: RouteDelayModel, route2: RouteDelayModel) -> Self {
        Self { route1, route2 }
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.route2.clone(), self.route1.clone())
    }

    fn check_capacity(&self, capacity: &Capacity) -> Result<()> {
        let n = self.route1.hop_count();
        let m = self.route2.hop_count();
        capacity.check_hops(n)?;
        capacity.check_hops(m)?;
        if n + m > capacity.max_combined_hops {
            return Err(Error::Capacity {
                what: "combined hop count",
                requested: n + m,
                limit: capacity.max_combined_hops,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionResult {
    pub probability: f64,
    pub method: Method,
    pub error_estimate: f64,
    /// Closed form: non-empty `(j, k)` terms. Quadrature: integrand
    /// evaluations. Monte Carlo: trials.
    pub detail: Option<u64>,
}

/// `ξ_1 = 1 / ((n-1)! Π l_i)` for route 1 and `ξ_2 = 1 / (m! Π l_i)` for
/// route 2.
pub fn normalization_constants(instance: &InversionInstance) -> Result<(f64, f64)> {
    let (xi1, xi2) = normalization_constants_dd(instance, &Capacity::default())?;
    Ok((xi1.to_f64(), xi2.to_f64()))
}

fn normalization_constants_dd(
    instance: &InversionInstance,
    capacity: &Capacity,
) -> Result<(DoubleDouble, DoubleDouble)> {
    let n = instance.route1.hop_count();
    let m = instance.route2.hop_count();
    capacity.check_hops(n)?;
    capacity.check_hops(m)?;
    let xi1 = DoubleDouble::ONE / (factorial_dd(n as u64 - 1) * instance.route1.width_product());
    let xi2 = DoubleDouble::ONE / (factorial_dd(m as u64) * instance.route2.width_product());
    Ok((xi1, xi2))
}

/// Terminating Gauss series `2F1(m+1, 1-n; m+2; z)`, a polynomial of degree
/// `n - 1` in `z`.
pub fn truncated_2f1(m_param: u32, n_param: u32, z: f64) -> f64 {
    truncated_2f1_dd(m_param, n_param, DoubleDouble::from(z)).to_f64()
}

fn truncated_2f1_dd(m_param: u32, n_param: u32, z: DoubleDouble) -> DoubleDouble {
    assert!(n_param >= 1, "second numerator parameter 1 - n must be <= 0");
    let a = (m_param + 1) as f64;
    let b = 1.0 - n_param as f64;
    let c = (m_param + 2) as f64;
    let mut term = DoubleDouble::ONE;
    let mut acc = DoubleDouble::ONE;
    for k in 0..(n_param - 1) {
        let k = k as f64;
        term = term * z * ((a + k) * (b + k)) / ((c + k) * (k + 1.0));
        acc += term;
    }
    acc
}

/// Binomial coefficient as a double-double (exact for the sizes used here).
fn binomial(n: u32, k: u32) -> DoubleDouble {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k as u64 {
        acc = acc * (n as u64 - i) / (i + 1);
    }
    DoubleDouble::from(acc)
}

/// `∫ (x - p)^(n-1) (x - q)^m dx` over `[lo, hi]` by binomial expansion about
/// the larger shift. Returns `(value, sum of |monomial contributions|)`.
fn segment_integral_dd(
    n: u32,
    m: u32,
    p: DoubleDouble,
    q: DoubleDouble,
    lo: DoubleDouble,
    hi: DoubleDouble,
) -> (DoubleDouble, f64) {
    // (x-p)^(n-1) (x-q)^m = w^a (w + e)^b with w = x - base
    let (base, e, a, b) = if q >= p {
        (q, q - p, m, n - 1)
    } else {
        (p, p - q, n - 1, m)
    };
    let w_lo = lo - base;
    let w_hi = hi - base;
    let mut value = DoubleDouble::ZERO;
    let mut magnitude = 0.0;
    for i in 0..=b {
        let exp = a + i + 1;
        let coeff = binomial(b, i) * e.powi(b - i) / DoubleDouble::from(exp as f64);
        let t = coeff * (w_hi.powi(exp) - w_lo.powi(exp));
        magnitude += coeff.to_f64().abs()
            * (w_hi.to_f64().abs().powi(exp as i32) + w_lo.to_f64().abs().powi(exp as i32));
        value += t;
    }
    (value, magnitude)
}

/// Exact value of `∫_{x_lo}^{x_hi} (x - shift1)^(n-1) (x - shift2)^m dx`,
/// zero when `x_lo >= x_hi`.
pub fn segment_integral(
    n: u32,
    m: u32,
    shift1: f64,
    shift2: f64,
    x_lo: f64,
    x_hi: f64,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::validation("segment integral needs n >= 1"));
    }
    if !(x_lo < x_hi) {
        return Ok(0.0);
    }
    let (value, magnitude) = segment_integral_dd(
        n,
        m,
        shift1.into(),
        shift2.into(),
        x_lo.into(),
        x_hi.into(),
    );
    let v = value.to_f64();
    let err = magnitude * (n + m + 6) as f64 * DD_EPS;
    check_precision(v, err, f64::MIN_POSITIVE)?;
    Ok(v)
}

/// The same integral through the hypergeometric antiderivative
/// `F(x) = 2F1(m+1, 1-n; m+2; z) (q - p)^(n-1) (x - q)^(m+1) / (m+1)` with
/// `z = (x - q) / (p - q)`, evaluated as `F(hi) - F(lo)`. When `p == q` the
/// antiderivative reduces to `(x - q)^(n+m) / (n+m)`.
pub fn hypergeometric_bracket(n: u32, m: u32, p: f64, q: f64, lo: f64, hi: f64) -> f64 {
    if !(lo < hi) {
        return 0.0;
    }
    let p = DoubleDouble::from(p);
    let q = DoubleDouble::from(q);
    let antiderivative = |x: DoubleDouble| -> DoubleDouble {
        let u = x - q;
        if p == q {
            return u.powi(n + m) / DoubleDouble::from((n + m) as f64);
        }
        let z = u / (p - q);
        truncated_2f1_dd(m, n, z) * (q - p).powi(n - 1) * u.powi(m + 1)
            / DoubleDouble::from((m + 1) as f64)
    };
    (antiderivative(DoubleDouble::from(hi)) - antiderivative(DoubleDouble::from(lo))).to_f64()
}

/// The two pieces of the closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormParts {
    /// `ξ_1 ξ_2 Σ_j Σ_k (-1)^(|w_j| + |w_k|) ∫ ...` over the overlap of supports.
    pub double_sum: f64,
    /// `1 - H_1(B_2)` when `B_1 > B_2`, else 0.
    pub tail: f64,
    pub error_estimate: f64,
    pub terms: u64,
}

pub fn closed_form_parts(
    instance: &InversionInstance,
    capacity: &Capacity,
) -> Result<ClosedFormParts> {
    instance.check_capacity(capacity)?;
    let dist1 = UniformSum::with_capacity(instance.route1.clone(), capacity)?;
    let dist2 = UniformSum::with_capacity(instance.route2.clone(), capacity)?;
    let (xi1, xi2) = normalization_constants_dd(instance, capacity)?;
    let n = instance.route1.hop_count() as u32;
    let m = instance.route2.hop_count() as u32;

    let b1 = instance.route1.sum_upper_dd();
    let b2 = instance.route2.sum_upper_dd();
    let upper = if b1 < b2 { b1 } else { b2 };

    let a1 = instance.route1.sum_lower_dd();
    let a2 = instance.route2.sum_lower_dd();
    let shifts1: Vec<(DoubleDouble, bool)> = dist1
        .table()
        .entries()
        .iter()
        .map(|e| (a1 + e.sum_dd(), e.parity() % 2 == 1))
        .take_while(|(p, _)| *p < upper)
        .collect();
    let shifts2: Vec<(DoubleDouble, bool)> = dist2
        .table()
        .entries()
        .iter()
        .map(|e| (a2 + e.sum_dd(), e.parity() % 2 == 1))
        .take_while(|(q, _)| *q < upper)
        .collect();

    // Case q >= p: ∫_0^{W} (w + d)^(n-1) w^m, W = U - q, d = q - p.
    //   = W^(m+1) Σ_i C(n-1, i) d^(n-1-i) W^i / (i + m + 1)
    // Case p > q: ∫_0^{V} w^(n-1) (w + e)^m, V = U - p, e = p - q.
    //   = V^n Σ_i C(m, i) e^(m-i) V^i / (i + n)
    let coef_q: Vec<DoubleDouble> = (0..n)
        .map(|i| binomial(n - 1, i) / DoubleDouble::from((i + m + 1) as f64))
        .collect();
    let coef_p: Vec<DoubleDouble> = (0..=m)
        .map(|i| binomial(m, i) / DoubleDouble::from((i + n) as f64))
        .collect();
    let span2: Vec<(DoubleDouble, DoubleDouble)> = shifts2
        .iter()
        .map(|(q, _)| {
            let w = upper - *q;
            (w, w.powi(m + 1))
        })
        .collect();
    let span1: Vec<(DoubleDouble, DoubleDouble)> = shifts1
        .iter()
        .map(|(p, _)| {
            let v = upper - *p;
            (v, v.powi(n))
        })
        .collect();

    let scale = upper.to_f64().abs() + a1.to_f64().abs() + a2.to_f64().abs();
    let degree = (n + m) as f64;
    let mut total = DoubleDouble::ZERO;
    let mut magnitude = 0.0;
    let mut sensitivity = 0.0;
    let mut terms = 0u64;
    for (j, (p, odd1)) in shifts1.iter().enumerate() {
        for (k, (q, odd2)) in shifts2.iter().enumerate() {
            let (integral, integrand_at_upper) = if q >= p {
                let (w, w_lead) = span2[k];
                let d = *q - *p;
                let mut acc = coef_q[(n - 1) as usize];
                let mut dpow = DoubleDouble::ONE;
                for i in (0..(n - 1) as usize).rev() {
                    dpow = dpow * d;
                    acc = acc * w + coef_q[i] * dpow;
                }
                let wf = w.to_f64();
                (
                    acc * w_lead,
                    (wf + d.to_f64()).powi(n as i32 - 1) * wf.powi(m as i32),
                )
            } else {
                let (v, v_lead) = span1[j];
                let e = *p - *q;
                let mut acc = coef_p[m as usize];
                let mut epow = DoubleDouble::ONE;
                for i in (0..m as usize).rev() {
                    epow = epow * e;
                    acc = acc * v + coef_p[i] * epow;
                }
                let vf = v.to_f64();
                (
                    acc * v_lead,
                    vf.powi(n as i32 - 1) * (vf + e.to_f64()).powi(m as i32),
                )
            };
            terms += 1;
            magnitude += integral.to_f64();
            sensitivity += integrand_at_upper;
            if odd1 ^ odd2 {
                total += -integral;
            } else {
                total += integral;
            }
        }
    }

    let xi = xi1 * xi2;
    let double_sum = (total * xi).to_f64();
    let xi_f = xi.to_f64();
    // every term is positive, so `magnitude` bounds the rounding; the shift
    // sensitivity covers the rounded subset sums
    let sum_err = xi_f
        * DD_EPS
        * ((degree + 8.0) * magnitude + 8.0 * (degree + 1.0) * scale * sensitivity);

    let (tail, tail_err) = if b1 > b2 {
        let h = dist1.cdf_dd(b2)?;
        (1.0 - h.value, h.error_estimate + f64::EPSILON)
    } else {
        (0.0, 0.0)
    };

    Ok(ClosedFormParts {
        double_sum,
        tail,
        error_estimate: sum_err + tail_err,
        terms,
    })
}

pub fn inversion_probability_closed_form(instance: &InversionInstance) -> Result<InversionResult> {
    inversion_probability_closed_form_with(instance, &Capacity::default())
}

pub fn inversion_probability_closed_form_with(
    instance: &InversionInstance,
    capacity: &Capacity,
) -> Result<InversionResult> {
    let parts = closed_form_parts(instance, capacity)?;
    let raw = parts.double_sum + parts.tail;
    check_precision(raw, parts.error_estimate, PROBABILITY_FLOOR)?;
    let probability = clamp_probability(raw)?;
    Ok(InversionResult {
        probability,
        method: Method::ClosedForm,
        error_estimate: parts.error_estimate,
        detail: Some(parts.terms),
    })
}

fn clamp_probability(raw: f64) -> Result<f64> {
    if !(raw >= -CLAMP_TOLERANCE && raw <= 1.0 + CLAMP_TOLERANCE) {
        return Err(Error::OutOfRange {
            value: raw,
            tolerance: CLAMP_TOLERANCE,
        });
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// `∫ h_1(x) H_2(x) dx` over the support of route 1.
pub fn inversion_probability_quadrature(
    instance: &InversionInstance,
    abs_tol: f64,
) -> Result<InversionResult> {
    if !(abs_tol > 0.0) {
        return Err(Error::validation("abs_tol must be positive"));
    }
    let capacity = Capacity::default();
    let dist1 = UniformSum::with_capacity(instance.route1.clone(), &capacity)?;
    let dist2 = UniformSum::with_capacity(instance.route2.clone(), &capacity)?;
    let a1 = instance.route1.sum_lower();
    let b1 = instance.route1.sum_upper();
    let a2 = instance.route2.sum_lower();
    let b2 = instance.route2.sum_upper();
    let mut breakpoints: Vec<f64> = dist1
        .table()
        .entries()
        .iter()
        .map(|e| a1 + e.subset_sum())
        .chain(dist2.table().entries().iter().map(|e| a2 + e.subset_sum()))
        .collect();
    breakpoints.push(b2);
    let integrand = |x: f64| -> Result<f64> {
        let h = dist1.pdf(x)?;
        if h == 0.0 {
            return Ok(0.0);
        }
        Ok(h * dist2.cdf(x)?)
    };
    let r = quadrature::integrate(
        integrand,
        a1,
        b1,
        &breakpoints,
        abs_tol,
        QUADRATURE_MAX_EVALUATIONS,
    )?;
    Ok(InversionResult {
        probability: r.value.clamp(0.0, 1.0),
        method: Method::Quadrature,
        error_estimate: r.error_estimate,
        detail: Some(r.evaluations as u64),
    })
}

/// Fraction of `samples` trials in which route 1's sampled total strictly
/// exceeds route 2's. Trials are split into fixed blocks, block `b` drawing
/// from ChaCha8 stream `b` of `seed`, so the estimate depends only on
/// `(samples, seed)`.
pub fn inversion_probability_montecarlo(
    instance: &InversionInstance,
    samples: u64,
    seed: u64,
) -> Result<InversionResult> {
    if samples == 0 {
        return Err(Error::validation("Monte Carlo needs at least one sample"));
    }
    let hops1: Vec<(f64, f64)> = instance
        .route1
        .hops()
        .iter()
        .map(|h| (h.lower(), h.width()))
        .collect();
    let hops2: Vec<(f64, f64)> = instance
        .route2
        .hops()
        .iter()
        .map(|h| (h.lower(), h.width()))
        .collect();
    let draw = |rng: &mut ChaCha8Rng, hops: &[(f64, f64)]| -> f64 {
        hops.iter().map(|&(a, l)| a + l * rng.gen::<f64>()).sum()
    };
    let mut hits = 0u64;
    let blocks = samples.div_ceil(MC_BLOCK);
    for block in 0..blocks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let count = MC_BLOCK.min(samples - block * MC_BLOCK);
        for _ in 0..count {
            let r1 = draw(&mut rng, &hops1);
            let r2 = draw(&mut rng, &hops2);
            if r1 > r2 {
                hits += 1;
            }
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(InversionResult {
        probability: p,
        method: Method::MonteCarlo,
        error_estimate: (p * (1.0 - p) / samples as f64).sqrt(),
        detail: Some(samples),
    })
}
