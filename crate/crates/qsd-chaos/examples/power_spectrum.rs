//! Welch power spectra and spectral flatness for a regular and a chaotic
//! classical trajectory: line spectrum vs broadband.
//!
//! Run with `cargo run --release --example power_spectrum`.

use qsd_chaos::duffing::{integrate_classical, ClassicalState, DuffingParams};
use qsd_chaos::spectral::{averaged_spectrum, default_flatness_band, spectral_flatness};

fn main() -> qsd_chaos::Result<()> {
    // Strong damping locks onto a periodic orbit; weak damping is chaotic.
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
        let n_samples = (400.0 * period / dt_out).ceil() as usize;
        let series = integrate_classical(&params, settled, dt_out, n_samples)?.x;

        let spectrum = averaged_spectrum(&series, 4096, 0.5)?;
        let band = default_flatness_band(params.omega);
        let flatness = spectral_flatness(&spectrum, band)?;
        println!(
            "gamma = {gamma}: peak at f = {:.4} (drive f = {:.4}), flatness = {:.4} in [{:.2}, {:.2}]",
            spectrum.peak_frequency(),
            params.omega / (2.0 * std::f64::consts::PI),
            flatness,
            band.0,
            band.1
        );
    }
    Ok(())
}
