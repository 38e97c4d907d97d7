use crate::exit::{usage, FAILURE};
use crate::instance::MechanismParams;
use crate::output::{write_rows, Format};
use crate::parse;
use anyhow::Result;
use clap::Args;
use jitter_core::sweep::default_grid;
use jitter_core::{run_sweep, SweepConfig, DEFAULT_SEED};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Metric pairs per grid point.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Links per route.
    #[arg(long, default_value_t = 6)]
    pub hops: usize,
    #[command(flatten)]
    pub params: MechanismParams,
    /// Route-metric differences, `d,d,...` [default: 0,0.05,...,0.5]
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value = "rfc5148,adaptive,bounded-adaptive")]
    pub mechanisms: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

/// One line of the sweep table.
#[derive(Serialize)]
struct Row<'a> {
    mechanism: &'a str,
    metric_difference: f64,
    mean_inversion_probability: f64,
    std_error: Option<f64>,
    samples: usize,
}

pub fn config_from(args: &SweepArgs) -> Result<SweepConfig> {
    let names = parse::names(&args.mechanisms);
    if names.is_empty() {
        return Err(usage("--mechanisms is empty"));
    }
    let params = MechanismParams {
        c: args.params.c.or(Some(30.0)),
        ..args.params
    };
    let mechanisms = names
        .iter()
        .map(|n| params.mechanism(n))
        .collect::<Result<Vec<_>>>()?;
    let difference_grid = match &args.grid {
        Some(g) => parse::numbers(g, "--grid")?,
        None => default_grid(),
    };
    Ok(SweepConfig {
        hop_count: args.hops,
        j_max: params.j_max,
        c: params.c.unwrap_or(30.0),
        metric_samples: args.samples,
        difference_grid,
        seed: args.seed,
        mechanisms,
    })
}

pub fn run(args: &SweepArgs) -> Result<ExitCode> {
    let config = config_from(args)?;
    let rows = run_sweep(&config)?;
    let table: Vec<Row> = rows
        .iter()
        .map(|r| Row {
            mechanism: &r.mechanism,
            metric_difference: r.metric_difference,
            mean_inversion_probability: r.mean_inversion_probability,
            std_error: r.std_error,
            samples: r.sample_count,
        })
        .collect();
    write_rows(&table, args.format, args.out.as_deref())?;

    // keep standard output clean when it carries the table
    let mut summary = Vec::new();
    summary.push(format!(
        "sweep: {} hops, {} pairs per point, seed {}",
        config.hop_count, config.metric_samples, config.seed
    ));
    for mech in &config.mechanisms {
        let kind = mech.kind().to_string();
        let means: Vec<String> = rows
            .iter()
            .filter(|r| r.mechanism == kind)
            .map(|r| format!("{:.4}", r.mean_inversion_probability))
            .collect();
        summary.push(format!("  {kind}: {}", means.join(" ")));
    }
    let failures: usize = rows.iter().map(|r| r.failures).sum();
    if failures > 0 {
        summary.push(format!("  {failures} instances failed the closed form and were skipped"));
    }
    if let Some(p) = &args.out {
        summary.push(format!("wrote {} rows to {}", rows.len(), p.display()));
        println!("{}", summary.join("\n"));
    } else {
        eprintln!("{}", summary.join("\n"));
    }
    Ok(if failures > 0 {
        ExitCode::from(FAILURE)
    } else {
        ExitCode::SUCCESS
    })
}
