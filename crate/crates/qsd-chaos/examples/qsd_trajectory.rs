//! One quantum-state-diffusion trajectory of the driven damped Duffing
//! oscillator at β = 0.3, written as a t,x,p CSV.
//!
//! Run with `cargo run --release --example qsd_trajectory`.

use qsd_chaos::pipeline::write_xp_csv;
use qsd_chaos::qsd::{
    coherent_state, default_basis_size, default_dt, default_out_stride, simulate, QsdParams,
};
use qsd_chaos::SeedSpec;

fn main() -> qsd_chaos::Result<()> {
    let (gamma, beta, g, omega) = (0.125, 0.3, 0.3, 1.0);
    let n_basis = default_basis_size(beta);
    let dt = default_dt(gamma, n_basis, omega);
    let params = QsdParams::new(
        gamma,
        beta,
        g,
        omega,
        n_basis,
        dt,
        SeedSpec::new(7, 0),
        default_out_stride(dt, omega),
    )?;

    let initial = coherent_state(n_basis, beta, 1.0, 0.0)?;
    let periods = 40.0;
    let run = simulate(&params, &initial, periods * params.drive_period())?;

    let out = std::path::Path::new("target/qsd_trajectory.csv");
    std::fs::create_dir_all(out.parent().unwrap())
        .map_err(qsd_chaos::Error::from)?;
    write_xp_csv(out, &run.x, &run.p)?;

    println!(
        "N = {n_basis}, dt = {dt:.3e}, {} samples over {periods} drive periods",
        run.x.len()
    );
    println!(
        "<X> range [{:+.3}, {:+.3}], sigma = {:.3}",
        run.x.min(),
        run.x.max(),
        run.x.std_dev()
    );
    println!("wrote {}", out.display());
    Ok(())
}
