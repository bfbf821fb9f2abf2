//! Shared oracle machinery for integration tests: a from-scratch dense
//! Lindblad master-equation integrator (independent of the crate's banded
//! operator algebra) and the Ehrenfest initial-condition map between
//! quantum expectation values and the classical (x, ẋ) state.

#![allow(dead_code)]

use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense row-major matrix product, written directly against the
/// definition so it shares nothing with the crate's banded algebra.
pub fn dense_matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// H0 = P²/2 − X²/2 + X⁴/4 built densely from the ladder definition.
pub fn dense_h0(n: usize, beta: f64) -> Vec<Complex64> {
    let s = (beta / 2.0).sqrt();
    let mut x = vec![c(0.0, 0.0); n * n];
    let mut p = vec![c(0.0, 0.0); n * n];
    for m in 1..n {
        let r = (m as f64).sqrt();
        // a[m-1][m] = √m; X = s(a + a†), P = i·s(a† − a).
        x[(m - 1) * n + m] = c(s * r, 0.0);
        x[m * n + m - 1] = c(s * r, 0.0);
        p[(m - 1) * n + m] = c(0.0, -s * r);
        p[m * n + m - 1] = c(0.0, s * r);
    }
    let x2 = dense_matmul(&x, &x, n);
    let p2 = dense_matmul(&p, &p, n);
    let x4 = dense_matmul(&x2, &x2, n);
    let mut h0 = vec![c(0.0, 0.0); n * n];
    for i in 0..n * n {
        h0[i] = 0.5 * p2[i] - 0.5 * x2[i] + 0.25 * x4[i];
    }
    h0
}

/// dρ/dt = −(i/β)[H0, ρ] + 2Γ(aρa† − ½{a†a, ρ}), with aρa† and the
/// anticommutator written index-wise from the ladder action.
fn me_rhs(rho: &[Complex64], h0: &[Complex64], n: usize, beta: f64, gamma: f64) -> Vec<Complex64> {
    let hr = dense_matmul(h0, rho, n);
    let rh = dense_matmul(rho, h0, n);
    let mut out = vec![c(0.0, 0.0); n * n];
    let minus_i_over_beta = c(0.0, -1.0 / beta);
    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            let mut d = minus_i_over_beta * (hr[idx] - rh[idx]);
            let jump = if i + 1 < n && j + 1 < n {
                (((i + 1) * (j + 1)) as f64).sqrt() * rho[(i + 1) * n + j + 1]
            } else {
                c(0.0, 0.0)
            };
            d += 2.0 * gamma * (jump - 0.5 * (i + j) as f64 * rho[idx]);
            out[idx] = d;
        }
    }
    out
}

/// RK4 integration of the master equation from a pure initial state,
/// returning tr(n̂ρ) sampled at the requested times (which must be
/// ascending multiples of dt).
pub fn master_equation_occupation(
    initial: &[Complex64],
    n: usize,
    beta: f64,
    gamma: f64,
    dt: f64,
    sample_times: &[f64],
) -> Vec<f64> {
    let h0 = dense_h0(n, beta);
    let mut rho = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            rho[i * n + j] = initial[i] * initial[j].conj();
        }
    }
    let occupation = |rho: &[Complex64]| -> f64 {
        (0..n).map(|i| i as f64 * rho[i * n + i].re).sum()
    };
    let mut out = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;
    let total_steps = (sample_times.last().copied().unwrap_or(0.0) / dt).round() as usize;
    for step in 0..=total_steps {
        let t = step as f64 * dt;
        while next_sample < sample_times.len()
            && (t - sample_times[next_sample]).abs() < dt / 2.0
        {
            out.push(occupation(&rho));
            next_sample += 1;
        }
        if step == total_steps {
            break;
        }
        let k1 = me_rhs(&rho, &h0, n, beta, gamma);
        let mut tmp: Vec<Complex64> = rho
            .iter()
            .zip(&k1)
            .map(|(r, k)| r + 0.5 * dt * k)
            .collect();
        let k2 = me_rhs(&tmp, &h0, n, beta, gamma);
        for ((t, r), k) in tmp.iter_mut().zip(&rho).zip(&k2) {
            *t = r + 0.5 * dt * k;
        }
        let k3 = me_rhs(&tmp, &h0, n, beta, gamma);
        for ((t, r), k) in tmp.iter_mut().zip(&rho).zip(&k3) {
            *t = r + dt * k;
        }
        let k4 = me_rhs(&tmp, &h0, n, beta, gamma);
        for (((r, a), b), (cc, d)) in rho
            .iter_mut()
            .zip(&k1)
            .zip(&k2)
            .zip(k3.iter().zip(&k4))
        {
            *r += dt / 6.0 * (a + 2.0 * b + 2.0 * cc + d);
        }
    }
    assert_eq!(out.len(), sample_times.len(), "sample times must lie on the grid");
    out
}

/// Classical velocity matching quantum expectations (x0, p0): the
/// Ehrenfest flow of the damped system is d⟨X⟩/dt = ⟨P⟩ − Γ⟨X⟩, while the
/// classical integrator's second coordinate is ẋ itself.
pub fn classical_velocity(x0: f64, p0: f64, gamma: f64) -> f64 {
    p0 - gamma * x0
}

/// RK4 for the exact β → 0 Ehrenfest limit of the QSD model,
/// ẋ = p − Γx, ṗ = x − x³ + g·cos(ωt) − Γp, sampled at the integration
/// grid (x at steps 0..=n). Differs from the plain Duffing equation by an
/// O(Γ²) restoring-force term after eliminating p.
pub fn integrate_qsd_limit(
    gamma: f64,
    g: f64,
    omega: f64,
    x0: f64,
    p0: f64,
    dt: f64,
    n: usize,
) -> Vec<f64> {
    let f = |x: f64, p: f64, t: f64| {
        (
            p - gamma * x,
            x - x * x * x + g * (omega * t).cos() - gamma * p,
        )
    };
    let (mut x, mut p) = (x0, p0);
    let mut out = Vec::with_capacity(n + 1);
    out.push(x);
    for k in 0..n {
        let t = k as f64 * dt;
        let (k1x, k1p) = f(x, p, t);
        let (k2x, k2p) = f(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, t + 0.5 * dt);
        let (k3x, k3p) = f(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, t + 0.5 * dt);
        let (k4x, k4p) = f(x + dt * k3x, p + dt * k3p, t + dt);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        out.push(x);
    }
    out
}
