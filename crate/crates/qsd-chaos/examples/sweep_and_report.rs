//! Reduced end-to-end sweep: QSD simulation plus all three chaos
//! diagnostics on a two-case (Γ, β) grid, then the concordance report.
//! Writes per-case directories, summary.csv, sweep.svg and report.json
//! under target/sweep_demo/.
//!
//! The full production grid is `qsd-chaos sweep` (six cases, 500 drive
//! periods); this demo trims the grid and run length to finish in about a
//! minute.
//!
//! Run with `cargo run --release --example sweep_and_report`.

use qsd_chaos::pipeline::{resolve_sweep, run_report, run_sweep, SimulateConfig, SweepConfig};

fn main() -> qsd_chaos::Result<()> {
    let out_dir = std::path::Path::new("target/sweep_demo");
    let cfg = SweepConfig {
        grid: Some(vec![(0.125, 0.3), (0.3, 0.3)]),
        shared: SimulateConfig {
            periods: Some(150.0),
            transient_periods: Some(50.0),
            seed: Some(11),
            ..Default::default()
        },
    };
    let resolved = resolve_sweep(&cfg)?;
    let sweep = run_sweep(&resolved, out_dir, None)?;
    for case in &sweep.cases {
        println!(
            "gamma = {}, beta = {}: status = {}, lambda = {:?}, flatness = {:?}, section = {:?}",
            case.gamma, case.beta, case.status, case.lambda, case.flatness, case.section_class
        );
    }

    let report = run_report(out_dir, out_dir)?;
    print!("{}", report.table);
    println!("outputs under {}", out_dir.display());
    Ok(())
}
