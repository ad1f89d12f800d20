//! Parameter types and the algebraic layer: polariton diagonalization,
//! mixing angle, effective magnomechanical couplings, drive-power
//! calibration, and the self-Kerr frequency shift.
//!
//! Everything here is in angular units (rad/s) with κ the amplitude
//! half-linewidth (see the crate docs).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gyromagnetic ratio of the magnon mode, 2π × 28 GHz/T (rad s⁻¹ T⁻¹).
pub const GYROMAGNETIC_RATIO: f64 = 2.0 * std::f64::consts::PI * 28.0e9;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("mode frequency must be positive, got {0} rad/s")]
    NonPositiveFrequency(f64),
    #[error("decay rate must be non-negative, got {0} rad/s")]
    NegativeDecay(f64),
    #[error("mechanical damping must be positive, got {0} rad/s")]
    NonPositiveMechanicalDamping(f64),
    #[error("coupling rate must be non-negative, got {0} rad/s")]
    NegativeCoupling(f64),
    #[error("power-to-amplitude calibration must be non-negative, got {0}")]
    NegativeCalibration(f64),
}

/// One harmonic mode: center frequency and amplitude half-linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    /// Angular frequency ω (rad/s).
    pub omega: f64,
    /// Amplitude decay rate κ (rad/s), half the FWHM of the power spectrum.
    pub kappa: f64,
}

impl ModeParams {
    pub fn new(omega: f64, kappa: f64) -> Result<Self, ModelError> {
        if !(omega > 0.0) {
            return Err(ModelError::NonPositiveFrequency(omega));
        }
        if !(kappa >= 0.0) {
            return Err(ModelError::NegativeDecay(kappa));
        }
        Ok(Self { omega, kappa })
    }
}

/// Cavity mode with its decay split into intrinsic and external channels.
///
/// The total decay κ_a = κ_int + κ_e is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_a: f64,
    pub kappa_int: f64,
    pub kappa_e: f64,
}

impl CavityParams {
    pub fn new(omega_a: f64, kappa_int: f64, kappa_e: f64) -> Result<Self, ModelError> {
        if !(omega_a > 0.0) {
            return Err(ModelError::NonPositiveFrequency(omega_a));
        }
        if !(kappa_int >= 0.0) {
            return Err(ModelError::NegativeDecay(kappa_int));
        }
        if !(kappa_e >= 0.0) {
            return Err(ModelError::NegativeDecay(kappa_e));
        }
        Ok(Self {
            omega_a,
            kappa_int,
            kappa_e,
        })
    }

    /// Total cavity decay κ_a = κ_int + κ_e.
    pub fn kappa_total(&self) -> f64 {
        self.kappa_int + self.kappa_e
    }
}

/// A mechanical mode and its bare magnomechanical coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode {
    pub omega_b: f64,
    pub kappa_b: f64,
    /// Bare (single-excitation) magnon-phonon coupling g_mb (rad/s).
    pub g_mb: f64,
}

impl MechanicalMode {
    pub fn new(omega_b: f64, kappa_b: f64, g_mb: f64) -> Result<Self, ModelError> {
        if !(omega_b > 0.0) {
            return Err(ModelError::NonPositiveFrequency(omega_b));
        }
        if !(kappa_b > 0.0) {
            return Err(ModelError::NonPositiveMechanicalDamping(kappa_b));
        }
        if !(g_mb >= 0.0) {
            return Err(ModelError::NegativeCoupling(g_mb));
        }
        Ok(Self {
            omega_b,
            kappa_b,
            g_mb,
        })
    }
}

/// Full cavity–magnon(–mechanics) system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub cavity: CavityParams,
    pub magnon: ModeParams,
    /// Cavity-magnon coupling g_ma (rad/s).
    pub g_ma: f64,
    /// Mechanical modes; may be empty (pure cavity-magnon system).
    pub mechanics: Vec<MechanicalMode>,
}

impl SystemParams {
    pub fn new(
        cavity: CavityParams,
        magnon: ModeParams,
        g_ma: f64,
        mechanics: Vec<MechanicalMode>,
    ) -> Result<Self, ModelError> {
        if !(g_ma >= 0.0) {
            return Err(ModelError::NegativeCoupling(g_ma));
        }
        Ok(Self {
            cavity,
            magnon,
            g_ma,
            mechanics,
        })
    }

    /// Cavity-magnon detuning Δ = ω_a − ω_m.
    pub fn detuning(&self) -> f64 {
        self.cavity.omega_a - self.magnon.omega
    }

    pub fn with_kappa_e(&self, kappa_e: f64) -> Self {
        let mut out = self.clone();
        out.cavity.kappa_e = kappa_e;
        out
    }

    pub fn with_omega_m(&self, omega_m: f64) -> Self {
        let mut out = self.clone();
        out.magnon.omega = omega_m;
        out
    }
}

/// Magnon drive tone plus the two calibration constants that tie drive
/// power to observable couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub omega_d: f64,
    pub power_dbm: f64,
    /// Steady-state magnon amplitude |M| per √mW of drive power.
    pub power_to_amplitude: f64,
    /// Self-Kerr frequency shift per unit |M|² (rad/s per excitation).
    pub kerr_coefficient: f64,
}

impl DriveParams {
    pub fn new(
        omega_d: f64,
        power_dbm: f64,
        power_to_amplitude: f64,
        kerr_coefficient: f64,
    ) -> Result<Self, ModelError> {
        if !(power_to_amplitude >= 0.0) {
            return Err(ModelError::NegativeCalibration(power_to_amplitude));
        }
        Ok(Self {
            omega_d,
            power_dbm,
            power_to_amplitude,
            kerr_coefficient,
        })
    }

    /// Linear drive power in milliwatts, P = 10^(dBm/10).
    pub fn linear_power_mw(&self) -> f64 {
        10f64.powf(self.power_dbm / 10.0)
    }
}

/// Which bare mode dominates the upper polariton branch at the working
/// detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchCharacter {
    /// θ < π/4 (cavity above magnon): upper branch is cavity-like.
    CavityLike,
    /// θ > π/4 (magnon above cavity): upper branch is magnon-like.
    MagnonLike,
    /// θ = π/4 (resonance): equal weights.
    Balanced,
}

/// The two cavity-magnon polaritons: ω± − iκ±, the mixing angle θ, and
/// the branch labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaritonPair {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    /// Mixing angle θ ∈ [0, π/2]; sin²θ is the magnon weight of the
    /// upper branch.
    pub theta: f64,
    pub upper_branch: BranchCharacter,
}

impl PolaritonPair {
    /// Upper-branch complex frequency ω₊ − iκ₊.
    pub fn lambda_plus(&self) -> Complex64 {
        Complex64::new(self.omega_plus, -self.kappa_plus)
    }

    /// Lower-branch complex frequency ω₋ − iκ₋.
    pub fn lambda_minus(&self) -> Complex64 {
        Complex64::new(self.omega_minus, -self.kappa_minus)
    }

    /// Real-frequency splitting ω₊ − ω₋.
    pub fn splitting(&self) -> f64 {
        self.omega_plus - self.omega_minus
    }
}

/// Diagonalize a general pair of coupled modes ω_a − iκ_a, ω_m − iκ_m
/// with coupling g. Decay rates may be negative (effective-gain picture).
///
/// Eigenvalues are ω± − iκ± = ½[(ω_a+ω_m) − i(κ_a+κ_m) ± √ξ] with
/// ξ = 4g² + [(ω_a−ω_m) − i(κ_a−κ_m)]². The branch of √ξ is the
/// principal root reflected to Re ≥ 0 so that ω₊ ≥ ω₋; at exact
/// degeneracy (√ξ purely imaginary) the sign is fixed so κ₊ ≤ κ₋.
pub fn diagonalize_modes(
    omega_a: f64,
    kappa_a: f64,
    omega_m: f64,
    kappa_m: f64,
    g: f64,
) -> PolaritonPair {
    let la = Complex64::new(omega_a, -kappa_a);
    let lm = Complex64::new(omega_m, -kappa_m);
    let mean = 0.5 * (la + lm);
    let diff = la - lm;
    let xi = 4.0 * g * g + diff * diff;
    let mut s = xi.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im < 0.0) {
        s = -s;
    }
    let plus = mean + 0.5 * s;
    let minus = mean - 0.5 * s;
    let theta = mixing_angle(omega_a, omega_m, g);
    let upper_branch = if theta < std::f64::consts::FRAC_PI_4 {
        BranchCharacter::CavityLike
    } else if theta > std::f64::consts::FRAC_PI_4 {
        BranchCharacter::MagnonLike
    } else {
        BranchCharacter::Balanced
    };
    PolaritonPair {
        omega_plus: plus.re,
        omega_minus: minus.re,
        kappa_plus: -plus.im,
        kappa_minus: -minus.im,
        theta,
        upper_branch,
    }
}

/// Polaritons of a cavity-magnon system (loss picture, total κ_a).
pub fn diagonalize_polaritons(
    cavity: &CavityParams,
    magnon: &ModeParams,
    g_ma: f64,
) -> PolaritonPair {
    diagonalize_modes(
        cavity.omega_a,
        cavity.kappa_total(),
        magnon.omega,
        magnon.kappa,
        g_ma,
    )
}

/// Mixing angle θ = ½ arctan(2g/(ω_a − ω_m)), continued to (0, π/2) by
/// adding π/2 on the ω_a < ω_m side so θ is continuous across resonance
/// (θ = π/4 at ω_a = ω_m).
pub fn mixing_angle(omega_a: f64, omega_m: f64, g_ma: f64) -> f64 {
    0.5 * (2.0 * g_ma).atan2(omega_a - omega_m)
}

/// Effective polariton-mechanics couplings
/// G₊ = √2 g_mb M sinθ, G₋ = √2 g_mb M cosθ.
pub fn effective_couplings(g_mb: f64, m: Complex64, theta: f64) -> (Complex64, Complex64) {
    let root2 = std::f64::consts::SQRT_2;
    (
        root2 * g_mb * m * theta.sin(),
        root2 * g_mb * m * theta.cos(),
    )
}

/// Steady-state magnon amplitude under the drive:
/// |M| = power_to_amplitude · √(P/mW), phase fixed to zero.
///
/// The phase is unobservable in any |r| quantity computed here, and the
/// √P law makes every enhanced coupling G scale as √P_d.
pub fn steady_state_magnon_amplitude(drive: &DriveParams) -> Complex64 {
    Complex64::new(
        drive.power_to_amplitude * drive.linear_power_mw().sqrt(),
        0.0,
    )
}

/// Magnon frequency including the self-Kerr shift,
/// ω_m = ω_m0 + K·|M|².
pub fn kerr_shifted_frequency(omega_m0: f64, kerr_coefficient: f64, m: Complex64) -> f64 {
    omega_m0 + kerr_coefficient * m.norm_sqr()
}

/// Magnon frequency set by the bias field, ω_m = γ B₀.
pub fn magnon_frequency_from_field(b0_tesla: f64) -> f64 {
    GYROMAGNETIC_RATIO * b0_tesla
}

/// Bias field that places the magnon at ω_m, B₀ = ω_m/γ.
pub fn field_from_magnon_frequency(omega_m: f64) -> f64 {
    omega_m / GYROMAGNETIC_RATIO
}

/// Calibration constant that reproduces a target |G₊| at a given drive
/// power and mixing angle: power_to_amplitude = G₊/(√2 g_mb sinθ √P).
pub fn calibrate_power_to_amplitude(
    g_plus_target: f64,
    g_mb: f64,
    theta: f64,
    power_dbm: f64,
) -> f64 {
    let p_mw = 10f64.powf(power_dbm / 10.0);
    g_plus_target / (std::f64::consts::SQRT_2 * g_mb * theta.sin() * p_mw.sqrt())
}
