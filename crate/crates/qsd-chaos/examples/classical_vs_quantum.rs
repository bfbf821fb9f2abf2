//! Classical-limit check: as β shrinks, a single QSD trajectory's ⟨X̂(t)⟩
//! tracks the classical Duffing solution started from the matched initial
//! condition.
//!
//! The damping term shifts the classical velocity: a coherent state at
//! (x₀, p₀) corresponds to ẋ(0) = p₀ − Γx₀.
//!
//! The drive is kept weak (g = 0.1) so the trajectory stays inside one
//! well. Near the separatrix the wavepacket splits at the barrier top and
//! ⟨X̂⟩ stops corresponding to either classical branch, at any β.
//!
//! Run with `cargo run --release --example classical_vs_quantum`.

use qsd_chaos::duffing::{integrate_classical, ClassicalState, DuffingParams};
use qsd_chaos::qsd::{
    coherent_state, default_basis_size, default_dt, default_out_stride, simulate, QsdParams,
};
use qsd_chaos::SeedSpec;

fn main() -> qsd_chaos::Result<()> {
    let (gamma, g, omega) = (0.125, 0.1, 1.0);
    let (x0, p0) = (1.0, 0.0);
    let periods = 3.0;

    println!("beta      N     max |<X> - x_classical| over {periods} drive periods");
    for beta in [0.3, 0.1, 0.03, 0.01] {
        let n_basis = default_basis_size(beta);
        let dt = default_dt(gamma, n_basis, omega);
        let params = QsdParams::new(
            gamma,
            beta,
            g,
            omega,
            n_basis,
            dt,
            SeedSpec::new(3, 0),
            default_out_stride(dt, omega),
        )?;
        let initial = coherent_state(n_basis, beta, x0, p0)?;
        let quantum = simulate(&params, &initial, periods * params.drive_period())?;

        let dt_out = quantum.x.dt();
        let classical_params = DuffingParams::new(gamma, g, omega)?;
        let classical = integrate_classical(
            &classical_params,
            ClassicalState::new(x0, p0 - gamma * x0, 0.0),
            dt_out,
            quantum.x.len() - 1,
        )?;

        let deviation = quantum
            .x
            .values()
            .iter()
            .zip(classical.x.values())
            .map(|(q, c)| (q - c).abs())
            .fold(0.0_f64, f64::max);
        println!("{beta:<8}  {n_basis:<4}  {deviation:.4}");
    }
    Ok(())
}
