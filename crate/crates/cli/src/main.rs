// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frontlab::error::Error;

mod commands;
mod rundir;

use commands::{AsymptoteArgs, FitArgs, Kpp1dArgs, ProbeArgs};
use rundir::RunFailed;

#[derive(Parser)]
#[command(name = "frontlab", version, about = "Fisher-KPP fronts on a half-plane with a fast fractional road")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root under which run directories are created.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system described by the config and fit the level-set drift.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Level tracked on the road.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Linearized run and the far-field ratio audit.
    Linearized {
        #[command(flatten)]
        common: Common,
    },
    /// Transient timing sweep on the 1D Dirichlet column.
    Kpp1d {
        #[arg(long, default_value_t = 1e-8)]
        eps_min: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps_max: f64,
        #[arg(long, default_value_t = 6)]
        eps_count: usize,
        #[arg(long, default_value_t = 0.3)]
        theta: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 0.02)]
        dy: f64,
        #[arg(long, default_value_t = 4e-4)]
        dt: f64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Eigenfunction, quadrature and kernel-tail checks of the road operator.
    FracopCheck {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Leading far-field prediction of the linearized road density.
    KernelAsymptote {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        /// Remainder envelope constant.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Remainder envelope decay rate.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Drift-exponent fit of a level-set trace CSV (`t,x,valid`).
    Fit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Level the trace was taken at; recorded only.
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, requires = "window_end")]
        window_start: Option<f64>,
        #[arg(long, requires = "window_start")]
        window_end: Option<f64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Renormalised road profiles for m = 0, m*, 2m* with stabilization scores.
    Figure1 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Communication constants and the Dirichlet lower-bound ratio.
    Probes {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        l: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-4, 1e-3, 1e-2])]
        eps: Vec<f64>,
        /// Empty skips the Dirichlet sweep.
        #[arg(long, value_delimiter = ',', default_values_t = [1e3, 1e4, 1e5])]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 0.3)]
        theta: f64,
    },
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FRONTLAB_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| Error::InvalidParam(format!("FRONTLAB_THREADS=`{v}` is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    init_threads()?;
    match cmd {
        Command::Simulate { common, lambda } => commands::simulate(common.config.as_deref(), &common.out, lambda),
        Command::Linearized { common } => commands::linearized(common.config.as_deref(), &common.out),
        Command::Kpp1d { eps_min, eps_max, eps_count, theta, lambda, dy, dt, out } => {
            commands::kpp1d(Kpp1dArgs { eps_min, eps_max, eps_count, theta, lambda, dy, dt }, &out)
        }
        Command::FracopCheck { alpha, out } => commands::fracop_check(alpha, &out),
        Command::KernelAsymptote { alpha, mu, t, x, a, nu, k, c, delta, out } => {
            commands::kernel_asymptote_cmd(AsymptoteArgs { alpha, mu, t, x, a, nu, k, c, delta }, &out)
        }
        Command::Fit { trace, alpha, a, lambda, window_start, window_end, out } => {
            let window = window_start.zip(window_end);
            commands::fit(&FitArgs { trace, alpha, a, lambda, window }, &out)
        }
        Command::Figure1 { common, alpha } => commands::figure1(common.config.as_deref(), &common.out, alpha),
        Command::Probes { common, l, eps, x0, theta } => {
            commands::probes(common.config.as_deref(), &common.out, &ProbeArgs { l, epsilons: eps, x0s: x0, theta })
        }
    }
}

/// 2 for bad input caught before a run starts, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<RunFailed>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidParam(_) | Error::ConfigSyntax { .. } | Error::MissingKey(_) | Error::Unsupported(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
