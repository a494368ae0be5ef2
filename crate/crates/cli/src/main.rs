use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dmkrm_cli::{run, CliError, Command, Format, RunConfig, OUT_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "dmkrm",
    version,
    about = "Dissipative modified kicked rotator pipelines",
    allow_negative_numbers = true
)]
struct Args {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Command,

    /// Kick strength.
    #[arg(long = "K", global = true)]
    kick: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Effective Planck constant.
    #[arg(long, global = true)]
    hbar: Option<f64>,
    /// Hilbert space dimension.
    #[arg(long = "N", global = true)]
    dim: Option<usize>,
    /// Number of kicks.
    #[arg(long = "T", global = true)]
    horizon: Option<u64>,
    /// Kick grid: `start:end:step`, a comma list, or one value.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated output formats.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// TOML file with the same keys; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Args {
    fn overrides(&self) -> RunConfig {
        RunConfig {
            kick: self.kick,
            gamma: self.gamma,
            hbar: self.hbar,
            dim: self.dim,
            horizon: self.horizon,
            grid: self.grid.clone(),
            seed: self.seed,
            jobs: self.jobs,
            out: self.out.clone(),
            format: self.format.clone(),
            ..Default::default()
        }
    }
}

fn execute(args: &Args) -> Result<dmkrm_cli::RunReport, CliError> {
    let base = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    let resolved = base
        .overlay(&args.overrides())
        .resolve(args.command, env_out)?;
    if resolved.jobs > 0 {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(resolved.jobs)
            .build_global();
    }
    run(&resolved)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(report) => {
            let line = serde_json::json!({
                "status": "ok",
                "command": report.command.name(),
                "outputs": report.outputs,
                "summary": report.summary,
            });
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record(Some(args.command)));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
