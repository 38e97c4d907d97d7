//! Jitter mechanisms: how a forwarder turns the metric of the link a packet
//! arrived on into a uniform forwarding-delay interval.
//!
//! | mechanism          | interval (ms)                          |
//! |--------------------|----------------------------------------|
//! | `rfc5148`          | `(0, J)`                               |
//! | `deterministic`    | fixed `J`                              |
//! | `window`           | `(α J, J)`                             |
//! | `adaptive`         | `((1 - m) J, J)`                       |
//! | `bounded-adaptive` | `((1 - m) J, (1 - m) J + C)`           |
//!
//! The bounded-adaptive upper end may exceed `J` when `m < C / J`; it is not
//! clamped, so its width stays `C` for every metric.

use crate::error::{Error, Result};
use crate::uniform_sum::{RouteDelayModel, UniformSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Link quality in `(0, 1]`, 1 being the best.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LinkMetric(f64);

impl LinkMetric {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::validation(format!(
                "link metric must lie in (0, 1], got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for LinkMetric {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<LinkMetric> for f64 {
    fn from(m: LinkMetric) -> f64 {
        m.0
    }
}

/// Non-empty ordered link metrics of one route.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteMetrics {
    links: Vec<LinkMetric>,
}

impl RouteMetrics {
    pub fn new(links: Vec<LinkMetric>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::validation("a route needs at least one link"));
        }
        Ok(Self { links })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let links = values
            .iter()
            .map(|&v| LinkMetric::new(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(links)
    }

    pub fn links(&self) -> &[LinkMetric] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.links.iter().map(|m| m.value()).collect()
    }
}

/// Arithmetic mean of the link metrics.
pub fn route_metric(metrics: &RouteMetrics) -> f64 {
    let sum: f64 = metrics.links.iter().map(|m| m.value()).sum();
    sum / metrics.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum JitterMechanism {
    Rfc5148 { j_max: f64 },
    Deterministic { j_max: f64 },
    Window { j_max: f64, alpha: f64 },
    Adaptive { j_max: f64 },
    BoundedAdaptive { j_max: f64, c: f64 },
}

impl JitterMechanism {
    pub fn rfc5148(j_max: f64) -> Result<Self> {
        Self::Rfc5148 { j_max }.validated()
    }

    pub fn deterministic(j_max: f64) -> Result<Self> {
        Self::Deterministic { j_max }.validated()
    }

    pub fn window(j_max: f64, alpha: f64) -> Result<Self> {
        Self::Window { j_max, alpha }.validated()
    }

    pub fn adaptive(j_max: f64) -> Result<Self> {
        Self::Adaptive { j_max }.validated()
    }

    pub fn bounded_adaptive(j_max: f64, c: f64) -> Result<Self> {
        Self::BoundedAdaptive { j_max, c }.validated()
    }

    /// Builds a mechanism from its command-line name. `alpha` is read only by
    /// `window` and `c` only by `bounded-adaptive`.
    pub fn from_name(name: &str, j_max: f64, alpha: f64, c: f64) -> Result<Self> {
        match name.parse::<MechanismKind>()? {
            MechanismKind::Rfc5148 => Self::rfc5148(j_max),
            MechanismKind::Deterministic => Self::deterministic(j_max),
            MechanismKind::Window => Self::window(j_max, alpha),
            MechanismKind::Adaptive => Self::adaptive(j_max),
            MechanismKind::BoundedAdaptive => Self::bounded_adaptive(j_max, c),
        }
    }

    pub fn validated(self) -> Result<Self> {
        let j_max = self.j_max();
        if !(j_max.is_finite() && j_max > 0.0) {
            return Err(Error::validation(format!(
                "j_max must be positive and finite, got {j_max}"
            )));
        }
        match self {
            Self::Window { alpha, .. } if !(0.0..=1.0).contains(&alpha) => Err(Error::validation(
                format!("window alpha must lie in [0, 1], got {alpha}"),
            )),
            Self::BoundedAdaptive { c, .. } if !(c > 0.0 && c <= j_max) => Err(Error::validation(
                format!("bounded-adaptive range C must lie in (0, j_max], got {c}"),
            )),
            _ => Ok(self),
        }
    }

    pub fn kind(&self) -> MechanismKind {
        match self {
            Self::Rfc5148 { .. } => MechanismKind::Rfc5148,
            Self::Deterministic { .. } => MechanismKind::Deterministic,
            Self::Window { .. } => MechanismKind::Window,
            Self::Adaptive { .. } => MechanismKind::Adaptive,
            Self::BoundedAdaptive { .. } => MechanismKind::BoundedAdaptive,
        }
    }

    pub fn j_max(&self) -> f64 {
        match *self {
            Self::Rfc5148 { j_max }
            | Self::Deterministic { j_max }
            | Self::Window { j_max, .. }
            | Self::Adaptive { j_max }
            | Self::BoundedAdaptive { j_max, .. } => j_max,
        }
    }

    /// Delay bounds `(lower, upper)` for a packet that arrived over a link of
    /// quality `metric`. Equal bounds mean a fixed delay.
    pub fn bounds(&self, metric: LinkMetric) -> (f64, f64) {
        let m = metric.value();
        match *self {
            Self::Rfc5148 { j_max } => (0.0, j_max),
            Self::Deterministic { j_max } => (j_max, j_max),
            Self::Window { j_max, alpha } => (alpha * j_max, j_max),
            Self::Adaptive { j_max } => ((1.0 - m) * j_max, j_max),
            Self::BoundedAdaptive { j_max, c } => {
                let lo = (1.0 - m) * j_max;
                (lo, lo + c)
            }
        }
    }
}

impl fmt::Display for JitterMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Rfc5148,
    Deterministic,
    Window,
    Adaptive,
    BoundedAdaptive,
}

impl MechanismKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Rfc5148 => "rfc5148",
            Self::Deterministic => "deterministic",
            Self::Window => "window",
            Self::Adaptive => "adaptive",
            Self::BoundedAdaptive => "bounded-adaptive",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rfc5148" => Ok(Self::Rfc5148),
            "deterministic" => Ok(Self::Deterministic),
            "window" => Ok(Self::Window),
            "adaptive" => Ok(Self::Adaptive),
            "bounded-adaptive" => Ok(Self::BoundedAdaptive),
            other => Err(Error::validation(format!("unknown jitter mechanism `{other}`"))),
        }
    }
}

/// Uniform delay interval for one hop. Fixed-delay configurations
/// (deterministic, or window with `α = 1`) have no density and are refused.
pub fn jitter_interval(mech: &JitterMechanism, metric: LinkMetric) -> Result<UniformSpec> {
    let (lo, hi) = mech.bounds(metric);
    if hi <= lo {
        return Err(Error::DegenerateInterval {
            mechanism: mech.kind().to_string(),
            delay: lo,
        });
    }
    UniformSpec::new(lo, hi)
}

/// One interval per link, in route order.
pub fn route_delay_model(mech: &JitterMechanism, metrics: &RouteMetrics) -> Result<RouteDelayModel> {
    let hops = metrics
        .links()
        .iter()
        .map(|&m| jitter_interval(mech, m))
        .collect::<Result<Vec<_>>>()?;
    RouteDelayModel::new(hops)
}

/// Draws one forwarding delay in ms.
pub fn sample_jitter<R: Rng + ?Sized>(mech: &JitterMechanism, metric: LinkMetric, rng: &mut R) -> f64 {
    let (lo, hi) = mech.bounds(metric);
    if hi <= lo {
        return lo;
    }
    lo + (hi - lo) * rng.gen::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lm(v: f64) -> LinkMetric {
        LinkMetric::new(v).unwrap()
    }

    fn interval(mech: JitterMechanism, m: f64) -> (f64, f64) {
        let u = jitter_interval(&mech, lm(m)).unwrap();
        (u.lower(), u.upper())
    }

    #[test]
    fn interval_examples() {
        assert_eq!(interval(JitterMechanism::rfc5148(100.0).unwrap(), 0.3), (0.0, 100.0));
        let (lo, hi) = interval(JitterMechanism::adaptive(100.0).unwrap(), 0.4);
        assert!((lo - 60.0).abs() < 1e-12 && hi == 100.0);
        let (lo, hi) = interval(JitterMechanism::bounded_adaptive(100.0, 30.0).unwrap(), 0.4);
        assert!((lo - 60.0).abs() < 1e-12 && (hi - 90.0).abs() < 1e-12);
        assert_eq!(interval(JitterMechanism::window(100.0, 0.0).unwrap(), 0.9), (0.0, 100.0));
        assert_eq!(interval(JitterMechanism::window(100.0, 0.25).unwrap(), 0.9), (25.0, 100.0));
    }

    #[test]
    fn fixed_delays_have_no_interval() {
        let det = JitterMechanism::deterministic(250.0).unwrap();
        assert!(matches!(
            jitter_interval(&det, lm(0.5)),
            Err(Error::DegenerateInterval { .. })
        ));
        let w1 = JitterMechanism::window(250.0, 1.0).unwrap();
        assert!(matches!(
            jitter_interval(&w1, lm(0.5)),
            Err(Error::DegenerateInterval { .. })
        ));
        let metrics = RouteMetrics::from_values(&[0.5, 0.6]).unwrap();
        assert!(matches!(
            route_delay_model(&det, &metrics),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn mechanism_validation() {
        assert!(JitterMechanism::rfc5148(0.0).is_err());
        assert!(JitterMechanism::rfc5148(f64::NAN).is_err());
        assert!(JitterMechanism::window(100.0, 1.5).is_err());
        assert!(JitterMechanism::window(100.0, -0.1).is_err());
        assert!(JitterMechanism::bounded_adaptive(100.0, 0.0).is_err());
        assert!(JitterMechanism::bounded_adaptive(100.0, 101.0).is_err());
        assert!(JitterMechanism::bounded_adaptive(100.0, 100.0).is_ok());
        assert!(JitterMechanism::from_name("bogus", 1.0, 0.0, 1.0).is_err());
        assert_eq!(
            JitterMechanism::from_name("bounded-adaptive", 100.0, 0.0, 30.0).unwrap(),
            JitterMechanism::BoundedAdaptive { j_max: 100.0, c: 30.0 }
        );
    }

    #[test]
    fn metric_domain() {
        assert!(LinkMetric::new(0.0).is_err());
        assert!(LinkMetric::new(1.0).is_ok());
        assert!(LinkMetric::new(1.0000001).is_err());
        assert!(LinkMetric::new(f64::NAN).is_err());
        assert!(RouteMetrics::new(vec![]).is_err());
    }

    #[test]
    fn route_model_examples() {
        let ba = JitterMechanism::bounded_adaptive(100.0, 30.0).unwrap();
        let m = route_delay_model(&ba, &RouteMetrics::from_values(&[1.0, 0.5]).unwrap()).unwrap();
        let b: Vec<_> = m.hops().iter().map(|h| (h.lower(), h.upper())).collect();
        assert_eq!(b, vec![(0.0, 30.0), (50.0, 80.0)]);

        let rfc = JitterMechanism::rfc5148(250.0).unwrap();
        let m = route_delay_model(&rfc, &RouteMetrics::from_values(&[0.7; 6]).unwrap()).unwrap();
        assert_eq!(m.hop_count(), 6);
        assert!(m.hops().iter().all(|h| h.lower() == 0.0 && h.upper() == 250.0));

        let ad = JitterMechanism::adaptive(250.0).unwrap();
        let m = route_delay_model(&ad, &RouteMetrics::from_values(&[1.0]).unwrap()).unwrap();
        assert_eq!((m.hops()[0].lower(), m.hops()[0].upper()), (0.0, 250.0));
    }

    #[test]
    fn route_metric_examples() {
        assert_eq!(route_metric(&RouteMetrics::from_values(&[0.5, 1.0]).unwrap()), 0.75);
        assert_eq!(route_metric(&RouteMetrics::from_values(&[0.37]).unwrap()), 0.37);
        let six = route_metric(&RouteMetrics::from_values(&[0.8; 6]).unwrap());
        assert!((six - 0.8).abs() < 1e-15);
    }

    #[test]
    fn bounded_upper_end_is_not_clamped() {
        let ba = JitterMechanism::bounded_adaptive(100.0, 30.0).unwrap();
        let (lo, hi) = interval(ba, 0.1);
        assert!((lo - 90.0).abs() < 1e-12);
        assert!((hi - 120.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let det = JitterMechanism::deterministic(250.0).unwrap();
        for _ in 0..100 {
            assert_eq!(sample_jitter(&det, lm(0.3), &mut rng), 250.0);
        }
        let ba = JitterMechanism::bounded_adaptive(250.0, 40.0).unwrap();
        let rfc = JitterMechanism::rfc5148(250.0).unwrap();
        for _ in 0..1000 {
            let v = sample_jitter(&ba, lm(1.0), &mut rng);
            assert!((0.0..=40.0).contains(&v));
            let v = sample_jitter(&rfc, lm(0.5), &mut rng);
            assert!((0.0..=250.0).contains(&v));
        }
    }
}
