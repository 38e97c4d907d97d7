use crate::exit::{usage, FAILURE};
use crate::instance::{random_instance, InstanceArgs};
use crate::parse;
use anyhow::Result;
use clap::{Args, ValueEnum};
use jitter_core::{
    inversion_probability_closed_form, inversion_probability_montecarlo,
    inversion_probability_quadrature, InversionInstance, InversionResult, DEFAULT_SEED,
};
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Args, Debug)]
pub struct PdelayArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "closed-form")]
    pub method: MethodArg,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Absolute error target of the quadrature.
    #[arg(long, default_value_t = 1e-10)]
    pub abs_tol: f64,
}

#[derive(Args, Debug)]
pub struct McCheckArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Draw a random instance with N and M hops from --seed instead.
    #[arg(long, value_name = "N:M")]
    pub random: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Allowed Monte Carlo deviation in binomial standard errors.
    #[arg(long, default_value_t = 4.0)]
    pub tolerance_multiplier: f64,
    /// Allowed |closed form - quadrature|.
    #[arg(long, default_value_t = 1e-6)]
    pub quadrature_tolerance: f64,
}

fn evaluate(instance: &InversionInstance, args: &PdelayArgs) -> Result<InversionResult> {
    Ok(match args.method {
        MethodArg::ClosedForm => inversion_probability_closed_form(instance)?,
        MethodArg::Quadrature => inversion_probability_quadrature(instance, args.abs_tol)?,
        MethodArg::MonteCarlo => inversion_probability_montecarlo(instance, args.samples, args.seed)?,
    })
}

pub fn run_pdelay(args: &PdelayArgs) -> Result<ExitCode> {
    let instance = args.instance.instance()?;
    let r = evaluate(&instance, args)?;
    println!("probability {}", r.probability);
    println!("error_estimate {:e}", r.error_estimate);
    println!("method {}", r.method);
    Ok(ExitCode::SUCCESS)
}

fn check_instance(args: &McCheckArgs) -> Result<InversionInstance> {
    match &args.random {
        Some(_) if !args.instance.is_empty() => {
            Err(usage("--random cannot be combined with an explicit instance"))
        }
        Some(spec) => {
            let (n, m) = parse::pair(spec, "--random")?;
            if n.fract() != 0.0 || m.fract() != 0.0 || n < 1.0 || m < 1.0 {
                return Err(usage("--random expects positive hop counts `N:M`"));
            }
            random_instance(n as usize, m as usize, args.seed)
        }
        None => args.instance.instance(),
    }
}

pub fn run_mc_check(args: &McCheckArgs) -> Result<ExitCode> {
    if !(args.tolerance_multiplier > 0.0 && args.quadrature_tolerance > 0.0) {
        return Err(usage("tolerances must be positive"));
    }
    let instance = check_instance(args)?;
    let cf = inversion_probability_closed_form(&instance)?.probability;
    let quad = inversion_probability_quadrature(&instance, args.quadrature_tolerance / 100.0)?
        .probability;
    let mc = inversion_probability_montecarlo(&instance, args.samples, args.seed)?.probability;

    let se = (cf * (1.0 - cf) / args.samples as f64).sqrt();
    let mc_limit = args.tolerance_multiplier * se;
    let d_quad = (cf - quad).abs();
    let d_mc = (cf - mc).abs();
    let quad_ok = d_quad <= args.quadrature_tolerance;
    let mc_ok = d_mc <= mc_limit || d_mc == 0.0;

    println!("closed_form {cf}");
    println!("quadrature {quad}");
    println!("monte_carlo {mc}");
    println!("delta_quadrature {d_quad:e} limit {:e}", args.quadrature_tolerance);
    println!("delta_monte_carlo {d_mc:e} limit {mc_limit:e}");
    if quad_ok && mc_ok {
        println!("PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL");
        Ok(ExitCode::from(FAILURE))
    }
}
