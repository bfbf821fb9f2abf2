//! Chaos diagnostics for open quantum systems.
//!
//! This crate simulates a driven, damped Duffing oscillator two ways, as a
//! classical ODE and as a quantum-state-diffusion (QSD) trajectory in a
//! truncated Fock basis, and detects chaos in the resulting ⟨X̂(t)⟩ time
//! series three independent ways:
//!
//! * delay-embedding divergence curves and maximal-Lyapunov-exponent fits
//!   ([`lyap`]),
//! * stroboscopic Poincaré sections ([`poincare`]),
//! * power spectra and spectral flatness ([`spectral`]).
//!
//! The classical integrator ([`duffing`]) doubles as an exact tangent-space
//! Lyapunov oracle (Benettin method) used to validate the time-series
//! estimator. The [`pipeline`] module wires everything into the `simulate` /
//! `analyze` / `sweep` / `report` commands exposed by the `qsd-chaos` binary;
//! each capability is also demonstrated by a runnable example under
//! `examples/`.

pub mod duffing;
pub mod embed;
mod error;
pub mod lyap;
pub mod pipeline;
pub mod poincare;
pub mod qsd;
pub mod seed;
pub mod spectral;
pub mod series;

pub use error::{Error, Result};
pub use seed::SeedSpec;
pub use series::TimeSeries;
