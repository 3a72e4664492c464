//! The command line pipeline driven from code: a small TOML config,
//! synthesize, both estimators, and the text report.
//!
//! Everything lands in a temporary directory that is listed at the end.

use biotinv::config::RunConfig;
use biotinv::pipeline;

const CONFIG: &str = r#"
seed = 7

[geometry]
width = 0.09
height = 0.06
cell_size = 0.003
bone = { x_min = 0.02, x_max = 0.07, y_min = 0.02, y_max = 0.04 }
source = [0.045, 0.005]
receiver = [0.045, 0.055]

[physics]
duration = 7e-5
n_samples = 64
center_frequency = 5e4

[mcmc]
walkers = 8
steps = 60
burn_in = 20
subset = ["phi", "alpha"]

[nm]
max_iters = 40
subset = ["phi", "alpha"]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut cfg = RunConfig::from_toml(CONFIG)?;
    cfg.output_dir = dir.path().to_path_buf();
    println!("config hash {}", cfg.hash());

    let out = dir.path();
    pipeline::cmd_synthesize(&cfg, out)?;
    let dataset = out.join(pipeline::DATASET_FILE);
    pipeline::cmd_estimate_cm(&cfg, &dataset, out)?;
    pipeline::cmd_estimate_map(&cfg, &dataset, out)?;
    println!("{}", pipeline::cmd_report(out)?);

    let mut files: Vec<_> = std::fs::read_dir(out)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!("files: {}", files.join(", "));
    Ok(())
}
