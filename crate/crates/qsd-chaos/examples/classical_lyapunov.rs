//! Benettin largest-Lyapunov-exponent estimates for the classical Duffing
//! oscillator, with T-doubling to show convergence.
//!
//! Run with `cargo run --release --example classical_lyapunov`.

use qsd_chaos::duffing::{benettin_lyapunov, integrate_classical, ClassicalState, DuffingParams};

fn main() -> qsd_chaos::Result<()> {
    let dt = 0.01;
    for gamma in [0.125, 0.25, 0.3] {
        let params = DuffingParams::default_drive(gamma)?;
        // Relax onto the attractor before measuring.
        let transient = 50.0 * params.drive_period();
        let settled = integrate_classical(
            &params,
            ClassicalState::new(0.5, 0.1, 0.0),
            dt,
            (transient / dt).ceil() as usize,
        )?
        .final_state;

        println!("gamma = {gamma}  (g = {}, omega = {})", params.g, params.omega);
        for total_time in [5_000.0, 10_000.0, 20_000.0, 40_000.0] {
            let n_steps = (total_time / dt) as usize;
            let lambda = benettin_lyapunov(&params, settled, dt, n_steps, 10)?;
            println!("  T = {total_time:>8}: lambda_max = {lambda:+.6}");
        }
    }
    Ok(())
}
