//! Settings come from defaults, then an optional TOML file, then flags.

use crate::exit::usage;
use crate::output::{write_rows, Format};
use crate::parse;
use anyhow::{Context, Result};
use clap::Args;
use jitter_core::{
    density_sweep_observed, DensityCell, JitterMechanism, SimConfig, DEFAULT_SEED,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args, Debug, Default)]
pub struct SimulateArgs {
    /// TOML file with any of the settings below (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Node counts, `n,n,...` [default: 100]
    #[arg(long)]
    pub nodes: Option<String>,
    /// Campaigns per node count and mechanism [default: 1]
    #[arg(long)]
    pub reps: Option<usize>,
    /// [default: rfc5148,adaptive,bounded-adaptive]
    #[arg(long)]
    pub mechanisms: Option<String>,
    /// Area `width:height` in metres [default: 1000:1000]
    #[arg(long)]
    pub area: Option<String>,
    /// Radio range in metres [default: 250]
    #[arg(long)]
    pub range: Option<f64>,
    /// Maximum jitter in ms [default: 250]
    #[arg(long)]
    pub j_max: Option<f64>,
    /// Bounded-adaptive window width in ms [default: 40]
    #[arg(long)]
    pub c: Option<f64>,
    /// Window mechanism lower fraction [default: 0.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Link metric range `lo:hi` [default: 0.5:1]
    #[arg(long)]
    pub metric_range: Option<String>,
    /// Simulated seconds [default: 100]
    #[arg(long)]
    pub duration: Option<f64>,
    /// Discoveries started per batch [default: 10]
    #[arg(long)]
    pub batch: Option<usize>,
    /// Seconds between batches [default: 2]
    #[arg(long)]
    pub period: Option<f64>,
    /// Packet airtime in ms; 0 disables collisions [default: 1]
    #[arg(long)]
    pub airtime: Option<f64>,
    /// [default: 5148]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Aggregate table; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-discovery table.
    #[arg(long)]
    pub discoveries: Option<PathBuf>,
    /// Event log, CSV.
    #[arg(long)]
    pub event_log: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub nodes: Vec<usize>,
    pub reps: usize,
    pub mechanisms: Vec<String>,
    pub area: (f64, f64),
    pub range: f64,
    pub j_max: f64,
    pub c: f64,
    pub alpha: f64,
    pub metric_range: (f64, f64),
    pub duration: f64,
    pub batch: usize,
    pub period: f64,
    pub airtime: f64,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            nodes: vec![sim.node_count],
            reps: 1,
            mechanisms: ["rfc5148", "adaptive", "bounded-adaptive"]
                .map(String::from)
                .to_vec(),
            area: sim.area,
            range: sim.range,
            j_max: sim.j_max,
            c: sim.c,
            alpha: 0.5,
            metric_range: sim.metric_range,
            duration: sim.duration,
            batch: sim.discovery_batch,
            period: sim.batch_period,
            airtime: sim.packet_airtime,
            seed: DEFAULT_SEED,
        }
    }
}

impl Settings {
    pub fn resolve(args: &SimulateArgs) -> Result<Self> {
        let mut s = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display()))?;
                toml::from_str(&text)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?
            }
            None => Settings::default(),
        };
        if let Some(v) = &args.nodes {
            s.nodes = parse::counts(v, "--nodes")?;
        }
        if let Some(v) = &args.mechanisms {
            s.mechanisms = parse::names(v);
        }
        if let Some(v) = &args.area {
            s.area = parse::pair(v, "--area")?;
        }
        if let Some(v) = &args.metric_range {
            s.metric_range = parse::pair(v, "--metric-range")?;
        }
        macro_rules! take {
            ($($field:ident <- $arg:ident),*) => {
                $(if let Some(v) = args.$arg { s.$field = v; })*
            };
        }
        take!(reps <- reps, range <- range, j_max <- j_max, c <- c, alpha <- alpha,
              duration <- duration, batch <- batch, period <- period, airtime <- airtime,
              seed <- seed);
        Ok(s)
    }

    pub fn mechanisms(&self) -> Result<Vec<JitterMechanism>> {
        if self.mechanisms.is_empty() {
            return Err(usage("no mechanisms given"));
        }
        self.mechanisms
            .iter()
            .map(|n| Ok(JitterMechanism::from_name(n, self.j_max, self.alpha, self.c)?))
            .collect()
    }

    pub fn base_config(&self) -> Result<SimConfig> {
        let mechanism = *self
            .mechanisms()?
            .first()
            .expect("mechanisms() rejects an empty list");
        Ok(SimConfig {
            node_count: self.nodes.first().copied().unwrap_or(0),
            area: self.area,
            range: self.range,
            j_max: self.j_max,
            c: self.c,
            metric_range: self.metric_range,
            duration: self.duration,
            discovery_batch: self.batch,
            batch_period: self.period,
            packet_airtime: self.airtime,
            mechanism,
            seed: self.seed,
            record_events: false,
        })
    }
}

#[derive(Serialize)]
struct AggregateRow {
    node_count: usize,
    mechanism: String,
    repetitions: usize,
    route_metric_mean: Option<f64>,
    route_metric_std_error: Option<f64>,
    discovery_time_mean: Option<f64>,
    discovery_time_std_error: Option<f64>,
    collisions_mean: Option<f64>,
    collisions_std_error: Option<f64>,
    found_fraction: Option<f64>,
}

impl From<&DensityCell> for AggregateRow {
    fn from(c: &DensityCell) -> Self {
        Self {
            node_count: c.node_count,
            mechanism: c.mechanism.to_string(),
            repetitions: c.repetitions,
            route_metric_mean: c.route_metric.map(|e| e.mean),
            route_metric_std_error: c.route_metric.and_then(|e| e.std_error),
            discovery_time_mean: c.discovery_time.map(|e| e.mean),
            discovery_time_std_error: c.discovery_time.and_then(|e| e.std_error),
            collisions_mean: c.collisions.map(|e| e.mean),
            collisions_std_error: c.collisions.and_then(|e| e.std_error),
            found_fraction: c.found_fraction,
        }
    }
}

#[derive(Serialize)]
struct DiscoveryRow {
    node_count: usize,
    mechanism: String,
    repetition: usize,
    discovery_id: usize,
    source: usize,
    destination: usize,
    initiated_at_ms: f64,
    found: bool,
    route_metric: Option<f64>,
    discovery_time_ms: Option<f64>,
    hop_count: Option<usize>,
    /// Node ids joined by `-`.
    route: String,
}

#[derive(Serialize)]
struct EventRow {
    node_count: usize,
    mechanism: String,
    repetition: usize,
    time_ms: f64,
    kind: String,
    node: usize,
    discovery_id: usize,
}

pub fn run(args: &SimulateArgs) -> Result<ExitCode> {
    let settings = Settings::resolve(args)?;
    if settings.nodes.is_empty() {
        return Err(usage("no node counts given"));
    }
    let mechanisms = settings.mechanisms()?;
    let mut base = settings.base_config()?;
    base.record_events = args.event_log.is_some();

    let want_discoveries = args.discoveries.is_some();
    let mut discoveries = Vec::new();
    let mut events = Vec::new();
    let cells = density_sweep_observed(
        &base,
        &settings.nodes,
        &mechanisms,
        settings.reps,
        |key, stats| {
            let mechanism = key.mechanism.to_string();
            if want_discoveries {
                discoveries.extend(stats.results.iter().map(|r| DiscoveryRow {
                    node_count: key.node_count,
                    mechanism: mechanism.clone(),
                    repetition: key.repetition,
                    discovery_id: r.discovery_id,
                    source: r.source,
                    destination: r.destination,
                    initiated_at_ms: r.initiated_at,
                    found: r.found,
                    route_metric: r.route_metric,
                    discovery_time_ms: r.discovery_time,
                    hop_count: r.hop_count,
                    route: r
                        .route
                        .iter()
                        .map(|n| n.to_string())
                        .collect::<Vec<_>>()
                        .join("-"),
                }));
            }
            events.extend(stats.events.iter().map(|e| EventRow {
                node_count: key.node_count,
                mechanism: mechanism.clone(),
                repetition: key.repetition,
                time_ms: e.time_ms,
                kind: e.kind.to_string(),
                node: e.node,
                discovery_id: e.discovery_id,
            }));
        },
    )?;

    let aggregate: Vec<AggregateRow> = cells.iter().map(AggregateRow::from).collect();
    write_rows(&aggregate, args.format, args.out.as_deref())?;
    if let Some(p) = &args.discoveries {
        write_rows(&discoveries, args.format, Some(p))?;
    }
    if let Some(p) = &args.event_log {
        write_rows(&events, Format::Csv, Some(p))?;
    }

    let mut summary = vec![format!(
        "simulate: nodes {:?}, {} repetitions, seed {}",
        settings.nodes, settings.reps, settings.seed
    )];
    for c in &cells {
        let fmt = |e: Option<f64>| e.map_or("-".to_string(), |v| format!("{v:.4}"));
        summary.push(format!(
            "  n={:<4} {:<17} metric {}  time {} ms  collisions {}  found {}",
            c.node_count,
            c.mechanism.to_string(),
            fmt(c.route_metric.map(|e| e.mean)),
            fmt(c.discovery_time.map(|e| e.mean)),
            fmt(c.collisions.map(|e| e.mean)),
            fmt(c.found_fraction),
        ));
    }
    if args.out.is_some() {
        println!("{}", summary.join("\n"));
    } else {
        eprintln!("{}", summary.join("\n"));
    }
    Ok(ExitCode::SUCCESS)
}
