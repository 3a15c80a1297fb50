use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nodalsl::inverse::FitConfig;
use nodalsl::io::{self, InverseArgs, IoError, KnownValues};
use nodalsl::{Case, Rational};

/// Forward and inverse nodal solver for Sturm-Liouville problems with
/// nonlocal boundary conditions.
///
/// Exit status: 0 success, 2 config or input error, 3 solver error,
/// 4 acceptance threshold violated (roundtrip).
#[derive(Debug, Parser)]
#[command(name = "nodalsl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute eigenvalues and nodal points; writes `n,j,x,k_n` CSV plus `<out>.meta.json`.
    Forward {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct q and the boundary constants from a nodes CSV.
    Inverse {
        #[arg(long)]
        nodes: PathBuf,
        /// i (h, H finite), ii (h = inf) or iii (H = inf).
        #[arg(long)]
        case: String,
        #[arg(long)]
        xi0: String,
        #[arg(long)]
        xi1: String,
        /// Known value as `name=value` (h, H, gamma0, gamma1); repeatable.
        #[arg(long = "known")]
        known: Vec<String>,
        /// Output `x,q` CSV.
        #[arg(long)]
        out: PathBuf,
        /// JSON summary path (default: `<out>.summary.json`).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Only use layers with index at most this.
        #[arg(long)]
        max_m: Option<u32>,
        /// Minimum samples per local fit.
        #[arg(long, default_value_t = FitConfig::default().window)]
        window: usize,
        #[arg(long, default_value_t = FitConfig::default().degree)]
        degree: usize,
        /// Fit the largest layer only, without extrapolation in 1/m.
        #[arg(long)]
        no_richardson: bool,
    },
    /// Generate, invert and compare against the config's own problem.
    Roundtrip {
        #[arg(long)]
        config: PathBuf,
        /// Value to treat as known: a name (taken from the config) or `name=value`; repeatable.
        #[arg(long = "known")]
        known: Vec<String>,
        #[arg(long)]
        report: PathBuf,
        /// Also write the reconstructed `x,q` CSV.
        #[arg(long)]
        q_out: Option<PathBuf>,
    },
    /// Tabulate eigenvalue and nodal asymptotics for the configured indices.
    AsymCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

fn parse_arg<T: std::str::FromStr>(name: &str, text: &str) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    text.parse().map_err(|e| IoError::Argument(format!("--{name}: {e}")))
}

fn run(cli: Cli) -> Result<(), IoError> {
    io::configure_threads()?;
    match cli.command {
        Command::Forward { config, out } => {
            let output = io::cmd_forward(&config, &out)?;
            println!(
                "wrote {} nodes in {} layers to {}",
                output.dataset.len(),
                output.dataset.layers.len(),
                out.display()
            );
        }
        Command::Inverse { nodes, case, xi0, xi1, known, out, summary, max_m, window, degree, no_richardson } => {
            let case: Case = parse_arg("case", &case)?;
            let xi0: Rational = parse_arg("xi0", &xi0)?;
            let xi1: Rational = parse_arg("xi1", &xi1)?;
            let mut known_values = KnownValues::default();
            for k in &known {
                known_values.parse_assignment(k)?;
            }
            let fit = FitConfig { window, degree, richardson: !no_richardson, ..FitConfig::default() };
            let args = InverseArgs { case, xi0, xi1, known: known_values, fit, max_m };
            let summary = summary.unwrap_or_else(|| io::sidecar_path(&out, ".summary.json"));
            let s = io::cmd_inverse(&nodes, &args, &out, &summary)?;
            println!("case {}: layers {:?}", s.case, s.layers_used);
            if let Some(r) = s.resolved {
                println!("resolved: {}", serde_json::to_string(&r).unwrap_or_default());
            }
        }
        Command::Roundtrip { config, known, report, q_out } => {
            let result = io::cmd_roundtrip(&config, &known, &report, q_out.as_deref());
            if let Ok(r) = &result {
                if let Some(e) = &r.summary.errors {
                    println!("q sup error {:.3e}, L2 error {:.3e}", e.q_sup, e.q_l2);
                }
            }
            result?;
        }
        Command::AsymCheck { config, report } => {
            let r = io::cmd_asym_check(&config, &report)?;
            println!("{:>8} {:>14} {:>14}", "n", "n|k-seed|", "node resid");
            for row in &r.rows {
                println!("{:>8} {:>14.6e} {:>14.6e}", row.n, row.seed_gap, row.node_residual);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
