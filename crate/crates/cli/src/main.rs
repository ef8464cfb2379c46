use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info, warn};
use rootlocus::compute_root_locus;
use rootlocus_cli::output::emit_results;
use rootlocus_cli::problem::parse_problem;
use rootlocus_cli::svg::{render_svg, SvgOptions, Window};
use rootlocus_cli::CliError;

#[derive(Parser)]
#[command(name = "rootlocus", version, about = "Root loci of dead-time systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the locus described by a problem file.
    Compute {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write locus.svg.
        #[arg(long)]
        svg: bool,
        /// Plot window: sigma_lo sigma_hi omega_lo omega_hi.
        #[arg(long, num_args = 4, allow_negative_numbers = true, value_names = ["SLO", "SHI", "WLO", "WHI"])]
        window: Option<Vec<f64>>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn compute(
    problem: PathBuf,
    out: PathBuf,
    svg: bool,
    window: Option<Vec<f64>>,
    workers: Option<usize>,
) -> Result<usize, CliError> {
    let (problem, mut config) = parse_problem(&problem)?;
    if let Some(n) = workers {
        config.workers = n;
        config.validate().map_err(|e| CliError::Validation { path: "--workers".into(), message: e.to_string() })?;
    }
    let result = compute_root_locus(&problem, &config)?;
    info!(
        "{} critical points, {} trajectories",
        result.critical_points.len(),
        result.trajectories.len()
    );
    emit_results(&result, &out)?;
    if svg {
        let window = window.map(|v| Window { sigma_lo: v[0], sigma_hi: v[1], omega_lo: v[2], omega_hi: v[3] });
        let options = SvgOptions { window, upper_half_only: problem.plant().conjugate_symmetric(), markers: true };
        let path = out.join("locus.svg");
        std::fs::write(&path, render_svg(&result, &options)).map_err(|source| CliError::Write { path, source })?;
    }
    Ok(result.stalled_count())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ROOTLOCUS_LOG", "warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Compute { problem, out, svg, window, workers } => match compute(problem, out, svg, window, workers) {
            Ok(0) => ExitCode::SUCCESS,
            Ok(n) => {
                warn!("{n} trajectories stalled");
                ExitCode::from(4)
            }
            Err(e) => {
                error!("{e}");
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
