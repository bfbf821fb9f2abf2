//! Stroboscopic Poincaré sections of the classical Duffing oscillator:
//! a periodic orbit collapses to isolated points, a chaotic one spreads
//! over an extended set.
//!
//! Run with `cargo run --release --example poincare_section`.

use qsd_chaos::duffing::{integrate_classical, ClassicalState, DuffingParams};
use qsd_chaos::poincare::{
    classify_section, occupancy, strobe, DEFAULT_R_CLUSTER, DEFAULT_SECTION_GRID,
};

fn main() -> qsd_chaos::Result<()> {
    for gamma in [0.3, 0.125] {
        let params = DuffingParams::default_drive(gamma)?;
        let period = params.drive_period();
        let dt_out = period / 32.0;

        let settled = integrate_classical(
            &params,
            ClassicalState::new(0.5, 0.1, 0.0),
            0.01,
            (100.0 * period / 0.01).ceil() as usize,
        )?
        .final_state;
        let n_samples = (600.0 * period / dt_out).ceil() as usize;
        let run = integrate_classical(&params, settled, dt_out, n_samples)?;

        let section = strobe(&run.x, &run.p, period, 0.0)?;
        let summary = occupancy(&section, DEFAULT_SECTION_GRID, DEFAULT_R_CLUSTER)?;
        let class = classify_section(&summary)?;
        println!(
            "gamma = {gamma}: {} strobe points, {} occupied cells, {} clusters -> {class}",
            summary.n_points, summary.occupied, summary.cluster_count
        );
    }
    Ok(())
}
