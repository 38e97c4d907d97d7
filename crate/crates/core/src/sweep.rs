//! Average delay-inversion probability versus route-metric difference for
//! equal-length routes.
//!
//! At every grid point, `metric_samples` metric pairs are drawn whose route
//! averages differ by exactly the grid value, each pair is mapped to delay
//! models by the mechanism under study, and the closed form is averaged.
//!
//! Pair sampling: route 2's link metrics are drawn i.i.d. uniform on
//! `(0, 1]`; route 1's are drawn the same way and then shifted so that its
//! average is route 2's average plus the target difference. A pair with any
//! metric outside `(0, 1]` is rejected and both routes are redrawn.

use crate::error::{Error, Result};
use crate::inversion::{inversion_probability_closed_form, InversionInstance};
use crate::jitter::{route_delay_model, route_metric, JitterMechanism, RouteMetrics};
use crate::seed::{rng_for, DEFAULT_SEED};
use rand::Rng;
use serde::{Deserialize, Serialize};

const MAX_PAIR_ATTEMPTS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub hop_count: usize,
    pub j_max: f64,
    pub c: f64,
    pub metric_samples: usize,
    pub difference_grid: Vec<f64>,
    pub seed: u64,
    pub mechanisms: Vec<JitterMechanism>,
}

impl Default for SweepConfig {
    /// Six hops, `J = 100` ms, `C = 30` ms, 1000 pairs per point, grid
    /// `0, 0.05, ..., 0.5`, comparing RFC 5148, adaptive and bounded-adaptive.
    fn default() -> Self {
        let j_max = 100.0;
        let c = 30.0;
        Self {
            hop_count: 6,
            j_max,
            c,
            metric_samples: 1000,
            difference_grid: default_grid(),
            seed: DEFAULT_SEED,
            mechanisms: vec![
                JitterMechanism::Rfc5148 { j_max },
                JitterMechanism::Adaptive { j_max },
                JitterMechanism::BoundedAdaptive { j_max, c },
            ],
        }
    }
}

pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 20.0).collect()
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop_count < 1 {
            return Err(Error::validation("hop_count must be at least 1"));
        }
        if self.metric_samples < 1 {
            return Err(Error::validation("metric_samples must be at least 1"));
        }
        if self.mechanisms.is_empty() {
            return Err(Error::validation("at least one mechanism is required"));
        }
        if self.difference_grid.is_empty() {
            return Err(Error::validation("the difference grid is empty"));
        }
        if self
            .difference_grid
            .iter()
            .any(|d| !(0.0..1.0).contains(d))
        {
            return Err(Error::validation("grid values must lie in [0, 1)"));
        }
        if self.difference_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("grid values must be strictly increasing"));
        }
        for m in &self.mechanisms {
            m.validated()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mechanism: String,
    pub metric_difference: f64,
    pub mean_inversion_probability: f64,
    pub sample_count: usize,
    /// Standard error of the mean; `None` with fewer than two samples.
    pub std_error: Option<f64>,
    /// Instances whose closed form failed and were left out of the mean.
    pub failures: usize,
}

/// Metric value uniform on `(0, 1]`.
fn draw_metric<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Draws `(better, worse)` metric lists of `hop_count` links whose route
/// metrics differ by `target_difference`.
pub fn sample_metric_pair<R: Rng + ?Sized>(
    hop_count: usize,
    target_difference: f64,
    rng: &mut R,
) -> Result<(RouteMetrics, RouteMetrics)> {
    if hop_count < 1 {
        return Err(Error::validation("hop_count must be at least 1"));
    }
    if !(0.0..1.0).contains(&target_difference) {
        return Err(Error::InfeasibleDifference {
            difference: target_difference,
            hop_count,
        });
    }
    let in_range = |v: f64| v > 0.0 && v <= 1.0;
    for _ in 0..MAX_PAIR_ATTEMPTS {
        let worse: Vec<f64> = (0..hop_count).map(|_| draw_metric(rng)).collect();
        let raw: Vec<f64> = (0..hop_count).map(|_| draw_metric(rng)).collect();
        let shift = mean(&worse) + target_difference - mean(&raw);
        let better: Vec<f64> = raw.iter().map(|v| v + shift).collect();
        if !better.iter().all(|&v| in_range(v)) {
            continue;
        }
        let r1 = RouteMetrics::from_values(&better)?;
        let r2 = RouteMetrics::from_values(&worse)?;
        if (route_metric(&r1) - route_metric(&r2) - target_difference).abs() > 1e-12 {
            continue;
        }
        return Ok((r1, r2));
    }
    Err(Error::InfeasibleDifference {
        difference: target_difference,
        hop_count,
    })
}

fn summarize(mechanism: &JitterMechanism, difference: f64, values: &[f64], failures: usize) -> SweepRow {
    let n = values.len();
    let mean_p = if n > 0 { mean(values) } else { f64::NAN };
    let std_error = (n >= 2).then(|| {
        let var = values.iter().map(|v| (v - mean_p).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    SweepRow {
        mechanism: mechanism.kind().to_string(),
        metric_difference: difference,
        mean_inversion_probability: mean_p,
        sample_count: n,
        std_error,
        failures,
    }
}

/// One row per `(mechanism, grid point)`, mechanisms outermost. Grid point
/// `g` of mechanism `k` draws its pairs from a stream derived from
/// `(seed, k, g)`, so rows can be computed in any order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.mechanisms.len() * config.difference_grid.len());
    for (mi, mech) in config.mechanisms.iter().enumerate() {
        for (gi, &diff) in config.difference_grid.iter().enumerate() {
            rows.push(sweep_point(config, mi, mech, gi, diff)?);
        }
    }
    Ok(rows)
}

fn sweep_point(
    config: &SweepConfig,
    mech_index: usize,
    mech: &JitterMechanism,
    grid_index: usize,
    difference: f64,
) -> Result<SweepRow> {
    let mut rng = rng_for(config.seed, &[mech_index as u64, grid_index as u64]);
    let mut values = Vec::with_capacity(config.metric_samples);
    let mut failures = 0;
    for _ in 0..config.metric_samples {
        let (r1, r2) = sample_metric_pair(config.hop_count, difference, &mut rng)?;
        let instance = InversionInstance::new(
            route_delay_model(mech, &r1)?,
            route_delay_model(mech, &r2)?,
        );
        match inversion_probability_closed_form(&instance) {
            Ok(r) => values.push(r.probability),
            Err(_) => failures += 1,
        }
    }
    Ok(summarize(mech, difference, &values, failures))
}

/// Inversion probability of one explicit metric pair.
pub fn pair_inversion_probability(
    mech: &JitterMechanism,
    better: &RouteMetrics,
    worse: &RouteMetrics,
) -> Result<f64> {
    let instance = InversionInstance::new(
        route_delay_model(mech, better)?,
        route_delay_model(mech, worse)?,
    );
    Ok(inversion_probability_closed_form(&instance)?.probability)
}
