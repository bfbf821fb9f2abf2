//! Maximal Lyapunov exponent from a scalar time series (divergence curves
//! and a linear-region fit) validated against the Benettin tangent-space
//! value on the same classical trajectory.
//!
//! Run with `cargo run --release --example lyapunov_from_series`.

use qsd_chaos::duffing::{benettin_lyapunov, integrate_classical, ClassicalState, DuffingParams};
use qsd_chaos::embed::choose_delay;
use qsd_chaos::lyap::{
    classify_chaos, default_epsilon_ladder, divergence_panel, fit_lambda, KantzParams,
    DEFAULT_CHAOS_THRESHOLD, DEFAULT_M_LIST,
};

fn main() -> qsd_chaos::Result<()> {
    // Chaotic regime of the classical oscillator.
    let params = DuffingParams::default_drive(0.125)?;
    let period = params.drive_period();
    let dt = 0.01;

    // Settle onto the attractor, then record 1000 drive periods at 32
    // samples per period.
    let settled = integrate_classical(
        &params,
        ClassicalState::new(0.5, 0.1, 0.0),
        dt,
        (100.0 * period / dt).ceil() as usize,
    )?
    .final_state;
    let dt_out = period / 32.0;
    let n_samples = (1000.0 * period / dt_out).ceil() as usize;
    let series = integrate_classical(&params, settled, dt_out, n_samples)?.x;

    let tau = choose_delay(&series)?;
    let epsilons = default_epsilon_ladder(series.std_dev());
    let t_max = 12 * 32;
    let panel = divergence_panel(
        &series,
        &DEFAULT_M_LIST,
        &epsilons,
        t_max,
        tau,
        &KantzParams::default(),
    )?;
    println!(
        "tau = {tau}, {} curves ({} combos skipped)",
        panel.curves.len(),
        panel.skipped.len()
    );
    for curve in &panel.curves {
        println!(
            "  m = {}, eps = {:.4}: {} references, S(0) = {:+.3}, S(end) = {:+.3}",
            curve.m,
            curve.epsilon,
            curve.ref_count,
            curve.s_values[0],
            curve.s_values[curve.s_values.len() - 1]
        );
    }

    let fit = fit_lambda(&panel.curves, None, None)?;
    let class = classify_chaos(&fit, DEFAULT_CHAOS_THRESHOLD);
    match fit.estimate() {
        Some(est) => println!(
            "fitted lambda = {:.4} per unit time (r^2 = {:.4}, window [{}, {}]) -> {class}",
            est.lambda, est.r_squared, est.fit_from, est.fit_to
        ),
        None => println!("no linear region -> {class}"),
    }

    let benettin = benettin_lyapunov(&params, settled, dt, (20_000.0 / dt) as usize, 10)?;
    println!("Benettin tangent-space lambda = {benettin:.4} per unit time");
    Ok(())
}
