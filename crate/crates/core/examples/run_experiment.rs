//! The batch layer used by the `swf` binary: run a built-in scenario into a
//! directory and verify the files it wrote.
//!
//! ```text
//! cargo run --release --example run_experiment [scenario] [out-dir]
//! ```

use std::path::PathBuf;

use swflow::experiment::{catalogue, load_config, run_experiment, verify, ExperimentError};

fn main() -> Result<(), ExperimentError> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "segment-radial".to_string());
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("swflow-example").join(&name));

    println!("built-in scenarios:");
    for e in catalogue() {
        println!("  {:22} {}", e.name, e.description);
    }

    let cfg = load_config(&name)?.with_deterministic()?;
    let report = run_experiment(&cfg, &out)?;
    println!(
        "\n{} -> {} ({}, {:.2}s)",
        name,
        out.display(),
        report.manifest.outcome,
        report.manifest.duration_seconds
    );
    print!("{}", verify(&out)?);
    Ok(())
}
