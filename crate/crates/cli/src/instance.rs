//! Building inversion instances and mechanisms from flags.

use crate::exit::usage;
use crate::parse;
use anyhow::{Context, Result};
use clap::Args;
use jitter_core::seed::rng_for;
use jitter_core::{route_delay_model, InversionInstance, JitterMechanism, RouteDelayModel, RouteMetrics};
use rand::Rng;

#[derive(Args, Clone, Debug)]
pub struct InstanceArgs {
    /// Per-hop jitter intervals of route 1 in ms, `a:b,a:b,...`.
    #[arg(long, value_name = "INTERVALS", allow_hyphen_values = true)]
    pub r1: Option<String>,
    /// Per-hop jitter intervals of route 2 in ms.
    #[arg(long, value_name = "INTERVALS", allow_hyphen_values = true)]
    pub r2: Option<String>,
    /// Derive both routes from this jitter mechanism and per-link metrics.
    #[arg(long, value_name = "NAME")]
    pub mech: Option<String>,
    /// Link metrics of route 1, `m,m,...`.
    #[arg(long, value_name = "METRICS", allow_hyphen_values = true)]
    pub r1_metrics: Option<String>,
    /// Link metrics of route 2.
    #[arg(long, value_name = "METRICS", allow_hyphen_values = true)]
    pub r2_metrics: Option<String>,
    #[command(flatten)]
    pub params: MechanismParams,
}

#[derive(Args, Clone, Copy, Debug)]
pub struct MechanismParams {
    /// Maximum jitter J in ms.
    #[arg(long, default_value_t = 100.0)]
    pub j_max: f64,
    /// Window mechanism lower fraction, in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bounded-adaptive window width C in ms.
    #[arg(long)]
    pub c: Option<f64>,
}

impl MechanismParams {
    pub fn mechanism(&self, name: &str) -> Result<JitterMechanism> {
        if name == "window" && self.alpha.is_none() {
            return Err(usage("the window mechanism needs --alpha"));
        }
        if name == "bounded-adaptive" && self.c.is_none() {
            return Err(usage("the bounded-adaptive mechanism needs --c"));
        }
        Ok(JitterMechanism::from_name(
            name,
            self.j_max,
            self.alpha.unwrap_or(0.0),
            self.c.unwrap_or(0.0),
        )?)
    }
}

impl InstanceArgs {
    fn has_intervals(&self) -> bool {
        self.r1.is_some() || self.r2.is_some()
    }

    fn has_mechanism(&self) -> bool {
        self.mech.is_some() || self.r1_metrics.is_some() || self.r2_metrics.is_some()
    }

    pub fn is_empty(&self) -> bool {
        !self.has_intervals() && !self.has_mechanism()
    }

    pub fn instance(&self) -> Result<InversionInstance> {
        match (self.has_intervals(), self.has_mechanism()) {
            (true, true) => Err(usage(
                "give either --r1/--r2 intervals or --mech with --r1-metrics/--r2-metrics, not both",
            )),
            (false, false) => Err(usage(
                "no instance: give --r1 and --r2, or --mech with --r1-metrics and --r2-metrics",
            )),
            (true, false) => {
                let r1 = self.r1.as_deref().ok_or_else(|| usage("--r2 needs --r1"))?;
                let r2 = self.r2.as_deref().ok_or_else(|| usage("--r1 needs --r2"))?;
                Ok(InversionInstance::new(
                    model_from_intervals(r1, "--r1")?,
                    model_from_intervals(r2, "--r2")?,
                ))
            }
            (false, true) => {
                let name = self.mech.as_deref().ok_or_else(|| usage("metric lists need --mech"))?;
                let m1 = self
                    .r1_metrics
                    .as_deref()
                    .ok_or_else(|| usage("--mech needs --r1-metrics"))?;
                let m2 = self
                    .r2_metrics
                    .as_deref()
                    .ok_or_else(|| usage("--mech needs --r2-metrics"))?;
                let mech = self.params.mechanism(name)?;
                Ok(InversionInstance::new(
                    model_from_metrics(&mech, m1, "--r1-metrics")?,
                    model_from_metrics(&mech, m2, "--r2-metrics")?,
                ))
            }
        }
    }
}

fn model_from_intervals(s: &str, flag: &str) -> Result<RouteDelayModel> {
    let bounds = parse::intervals(s, flag)?;
    Ok(RouteDelayModel::from_bounds(&bounds).context(flag.to_string())?)
}

fn model_from_metrics(mech: &JitterMechanism, s: &str, flag: &str) -> Result<RouteDelayModel> {
    let values = parse::numbers(s, flag)?;
    let metrics = RouteMetrics::from_values(&values).context(flag.to_string())?;
    Ok(route_delay_model(mech, &metrics)?)
}

/// Random instance with `n` and `m` hops. Each interval is spanned by two
/// uniform points of `[0, 250]` ms, redrawn while narrower than 1 ms.
pub fn random_instance(n: usize, m: usize, seed: u64) -> Result<InversionInstance> {
    if n == 0 || m == 0 {
        return Err(usage("random instances need at least one hop per route"));
    }
    let mut rng = rng_for(seed, &[n as u64, m as u64]);
    let mut route = |hops: usize| -> Result<RouteDelayModel> {
        let bounds: Vec<(f64, f64)> = (0..hops)
            .map(|_| loop {
                let x: f64 = rng.gen_range(0.0..=250.0);
                let y: f64 = rng.gen_range(0.0..=250.0);
                if (x - y).abs() >= 1.0 {
                    break (x.min(y), x.max(y));
                }
            })
            .collect();
        Ok(RouteDelayModel::from_bounds(&bounds)?)
    };
    let r1 = route(n)?;
    let r2 = route(m)?;
    Ok(InversionInstance::new(r1, r2))
}
