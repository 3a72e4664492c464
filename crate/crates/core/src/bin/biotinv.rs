use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use biotinv::config::RunConfig;
use biotinv::pipeline::{self, DATASET_FILE};
use biotinv::{Error, Result};

/// Ultrasound through poroelastic bone: simulate, synthesize, invert.
#[derive(Debug, Parser)]
#[command(name = "biotinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML, or JSON by extension); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Measured or synthetic trace; defaults to <out>/dataset.csv.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// With `forward`, dump the pressure field every K steps.
    #[arg(long, global = true, value_name = "K")]
    snapshots: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the receiver trace at the configured parameters.
    Forward,
    /// Simulate and add seeded Gaussian noise.
    Synthesize,
    /// Posterior conditional mean and credible intervals by ensemble MCMC.
    EstimateCm,
    /// MAP estimate by Nelder–Mead.
    EstimateMap,
    /// Print the summaries in the output directory as tables.
    Report,
}

fn thread_pool() -> Result<()> {
    let Ok(v) = std::env::var("BIOT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("BIOT_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    thread_pool()?;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = pipeline::output_dir(&cfg, cli.out.as_deref());
    let dataset = cli.dataset.clone().unwrap_or_else(|| out.join(DATASET_FILE));
    match cli.command {
        Command::Forward => {
            let tr = pipeline::cmd_forward(&cfg, &out, cli.snapshots)?;
            eprintln!("wrote {} samples to {}", tr.len(), out.join(pipeline::TRACE_FILE).display());
        }
        Command::Synthesize => {
            let d = pipeline::cmd_synthesize(&cfg, &out)?;
            eprintln!(
                "wrote {} samples (gamma {:e}) to {}",
                d.trace.len(),
                d.gamma.unwrap_or(0.0),
                out.join(DATASET_FILE).display()
            );
        }
        Command::EstimateCm => {
            let s = pipeline::cmd_estimate_cm(&cfg, &dataset, &out)?;
            print!("{}", biotinv::report::render_cm(&s));
        }
        Command::EstimateMap => {
            let s = pipeline::cmd_estimate_map(&cfg, &dataset, &out)?;
            print!("{}", biotinv::report::render_map(&s));
        }
        Command::Report => print!("{}", pipeline::cmd_report(&out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
