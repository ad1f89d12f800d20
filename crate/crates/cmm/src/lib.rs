//! Coupled-mode simulator and spectral-analysis toolkit for driven
//! cavity magnomechanical systems: a microwave cavity mode coupled to a
//! magnon mode (magnetic-dipole interaction), with the magnon further
//! coupled to one or more mechanical modes through magnetostriction.
//!
//! The crate computes polariton spectra, one-port reflection via
//! input-output theory, coherent-perfect-absorption (CPA) zeros and the
//! associated Wigner time delay, hybrid normal modes of the driven
//! three-mode system, and least-squares fits of model parameters to
//! reflection spectra.
//!
//! # Unit conventions
//!
//! **All internal frequencies and decay rates are angular (rad/s).**
//! Configuration files, CSV output, and the CLI speak ordinary frequency
//! (Hz, i.e. ω/2π); conversion happens only at the I/O boundary
//! ([`io`]).
//!
//! **κ is the amplitude half-linewidth** — the κ in a complex mode
//! frequency ω − iκ, consistent with the √(2κₑ) factor of the
//! input-output relation. The full width at half maximum of a power
//! spectrum is 2κ. Linewidth conventions are the dominant source of
//! silent factor-of-two errors; every κ in this crate follows this one.
//!
//! Time dependence is e^{−iωt}: passive poles and lossy scattering
//! zeros live in the lower half of the complex frequency plane.

// Validation code uses `!(x > 0.0)`-style comparisons on purpose: they
// reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod figures;
pub mod fitting;
pub mod io;
pub mod magnomech;
pub mod model;
pub mod response;
pub mod sweeps;

pub use model::{
    diagonalize_polaritons, mixing_angle, CavityParams, DriveParams, MechanicalMode, ModeParams,
    PolaritonPair, SystemParams,
};
pub use response::{
    cpa_balance, effective_gain_polaritons, find_reflection_zeros, reflection_three_mode,
    reflection_two_mode, ComplexZero, FrequencyGrid, Spectrum, TimeDelay,
};

/// Angular frequency (rad/s) of an ordinary frequency in Hz.
pub fn hz_to_angular(f_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_hz
}

/// Ordinary frequency (Hz) of an angular frequency in rad/s.
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI)
}
