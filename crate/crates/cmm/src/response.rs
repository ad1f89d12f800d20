//! Linear-response engine: one-port reflection spectra from input-output
//! theory, coherent-perfect-absorption zeros, the effective-gain picture,
//! exceptional points, and the Wigner time delay.
//!
//! The reflection of a weak probe at ω is r(ω) = 2κ_e/D(ω) − 1, where D
//! is the nested susceptibility of the cavity dressed by the magnon (and,
//! when driven, by the mechanical sidebands). Output field convention:
//! A_out = √(2κ_e)·A − a_in.
//!
//! With e^{−iωt} time dependence, poles of r (loss-picture polaritons)
//! sit in the lower half plane; zeros of r sit at the eigenvalues of the
//! effective-gain matrix in which κ_a is replaced by −κ_a' = −(κ_e −
//! κ_int). A zero crossing the real axis is perfect absorption.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    diagonalize_modes, effective_couplings, kerr_shifted_frequency, mixing_angle,
    steady_state_magnon_amplitude, DriveParams, PolaritonPair, SystemParams,
};

/// |r| below this (linear units) is treated as exact CPA when evaluating
/// the Wigner time delay.
pub const CPA_FLOOR: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum ResponseError {
    #[error("frequency grid must be strictly increasing (violated at index {0})")]
    NonMonotoneGrid(usize),
    #[error("spectrum length mismatch: {frequencies} frequencies vs {values} values")]
    LengthMismatch { frequencies: usize, values: usize },
    #[error("non-finite spectrum value at index {0}")]
    NonFiniteValue(usize),
    #[error("frequency grid needs at least two points, got {0}")]
    GridTooSmall(usize),
    #[error("grid start {start} must lie below stop {stop}")]
    GridReversed { start: f64, stop: f64 },
    #[error("phase information required (magnitude-only spectrum)")]
    PhaseRequired,
    #[error("spectrum must contain at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error(
        "target zero decay {target} rad/s outside the reachable range [{min}, {max}] rad/s"
    )]
    TargetOutOfRange { target: f64, min: f64, max: f64 },
}

/// Where a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Model,
    Measured,
}

/// An ordered grid of probe frequencies with complex reflection values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    frequencies: Vec<f64>,
    values: Vec<Complex64>,
    /// False for magnitude-only data (loaded from dB files); operations
    /// that need the complex phase reject such spectra.
    pub phase_valid: bool,
    pub provenance: Provenance,
}

impl Spectrum {
    pub fn new(
        frequencies: Vec<f64>,
        values: Vec<Complex64>,
        provenance: Provenance,
    ) -> Result<Self, ResponseError> {
        if frequencies.len() != values.len() {
            return Err(ResponseError::LengthMismatch {
                frequencies: frequencies.len(),
                values: values.len(),
            });
        }
        for i in 1..frequencies.len() {
            if !(frequencies[i] > frequencies[i - 1]) {
                return Err(ResponseError::NonMonotoneGrid(i));
            }
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || !frequencies[i].is_finite() {
                return Err(ResponseError::NonFiniteValue(i));
            }
        }
        Ok(Self {
            frequencies,
            values,
            phase_valid: true,
            provenance,
        })
    }

    /// Magnitude-only spectrum from values in dB (20 log₁₀|r|); the phase
    /// is marked unavailable.
    pub fn from_magnitude_db(
        frequencies: Vec<f64>,
        db: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, ResponseError> {
        let values = db
            .iter()
            .map(|d| Complex64::new(10f64.powf(d / 20.0), 0.0))
            .collect();
        let mut s = Self::new(frequencies, values, provenance)?;
        s.phase_valid = false;
        Ok(s)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// 20 log₁₀|r| per grid point.
    pub fn magnitude_db(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| 20.0 * v.norm().max(1e-300).log10())
            .collect()
    }

    /// Index of the grid point nearest to ω.
    pub fn nearest_index(&self, omega: f64) -> usize {
        match self
            .frequencies
            .binary_search_by(|f| f.partial_cmp(&omega).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.len() => self.len() - 1,
            Err(i) => {
                if omega - self.frequencies[i - 1] <= self.frequencies[i] - omega {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// Uniform frequency grid, inclusive of both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self, ResponseError> {
        if points < 2 {
            return Err(ResponseError::GridTooSmall(points));
        }
        if !(start < stop) {
            return Err(ResponseError::GridReversed { start, stop });
        }
        Ok(Self {
            start,
            stop,
            points,
        })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.points;
        let step = (self.stop - self.start) / (n - 1) as f64;
        (0..n).map(|i| self.start + i as f64 * step).collect()
    }

    /// Grid shifted by a constant offset (e.g. drive-detuning grid to
    /// absolute probe frequencies).
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            start: self.start + offset,
            stop: self.stop + offset,
            points: self.points,
        }
    }
}

/// D(ω) for the undriven two-mode system, evaluated at complex ω.
/// Returns None where the magnon susceptibility pole makes D infinite.
fn two_mode_denominator(system: &SystemParams, z: Complex64) -> Option<Complex64> {
    let cav = &system.cavity;
    let chi_a = Complex64::new(cav.kappa_total(), cav.omega_a) - I * z;
    let g = system.g_ma;
    if g == 0.0 {
        return Some(chi_a);
    }
    let chi_m = Complex64::new(system.magnon.kappa, system.magnon.omega) - I * z;
    if chi_m.norm_sqr() == 0.0 {
        return None;
    }
    Some(chi_a + g * g / chi_m)
}

/// d D/dω for the two-mode system at complex ω.
fn two_mode_denominator_derivative(system: &SystemParams, z: Complex64) -> Option<Complex64> {
    let g = system.g_ma;
    if g == 0.0 {
        return Some(-I);
    }
    let chi_m = Complex64::new(system.magnon.kappa, system.magnon.omega) - I * z;
    if chi_m.norm_sqr() == 0.0 {
        return None;
    }
    Some(-I + I * g * g / (chi_m * chi_m))
}

fn reflect(kappa_e: f64, d: Option<Complex64>) -> Complex64 {
    match d {
        // D infinite: the cavity response vanishes, full reflection.
        None => Complex64::new(-1.0, 0.0),
        Some(d) => 2.0 * kappa_e / d - 1.0,
    }
}

/// Reflection of a weak probe at ω_p for the undriven cavity-magnon
/// system: r = 2κ_e/D − 1 with
/// D(ω) = i(ω_a−ω) + κ_a + g²/(i(ω_m−ω) + κ_m).
pub fn reflection_two_mode(system: &SystemParams, omega_p: f64) -> Complex64 {
    reflect(
        system.cavity.kappa_e,
        two_mode_denominator(system, Complex64::new(omega_p, 0.0)),
    )
}

/// Reflection and its analytic frequency derivative at ω_p.
pub fn reflection_two_mode_with_derivative(
    system: &SystemParams,
    omega_p: f64,
) -> (Complex64, Complex64) {
    let z = Complex64::new(omega_p, 0.0);
    match (
        two_mode_denominator(system, z),
        two_mode_denominator_derivative(system, z),
    ) {
        (Some(d), Some(dp)) => {
            let ke = system.cavity.kappa_e;
            (2.0 * ke / d - 1.0, -2.0 * ke * dp / (d * d))
        }
        _ => (Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)),
    }
}

/// Operating point of the driven three-mode response: the steady-state
/// magnon amplitude, Kerr-shifted detunings, and the drive-enhanced
/// magnon-phonon couplings G_j = √2 g_mb,j |M|.
#[derive(Debug, Clone)]
pub struct DrivenOperatingPoint {
    pub magnon_amplitude: Complex64,
    pub delta_a: f64,
    pub delta_m: f64,
    /// (ω_b, κ_b, |G|) per mechanical mode.
    pub sidebands: Vec<(f64, f64, f64)>,
}

impl DrivenOperatingPoint {
    pub fn new(system: &SystemParams, drive: &DriveParams) -> Self {
        let m = steady_state_magnon_amplitude(drive);
        let omega_m_eff = kerr_shifted_frequency(system.magnon.omega, drive.kerr_coefficient, m);
        let theta = mixing_angle(system.cavity.omega_a, omega_m_eff, system.g_ma);
        let sidebands = system
            .mechanics
            .iter()
            .map(|mech| {
                // |G_m| = √2 g_mb |M|; the polariton projections G± are
                // |G_m| sinθ and |G_m| cosθ.
                let (gp, gm) = effective_couplings(mech.g_mb, m, theta);
                let g_total = (gp.norm_sqr() + gm.norm_sqr()).sqrt();
                (mech.omega_b, mech.kappa_b, g_total)
            })
            .collect();
        Self {
            magnon_amplitude: m,
            delta_a: system.cavity.omega_a - drive.omega_d,
            delta_m: omega_m_eff - drive.omega_d,
            sidebands,
        }
    }

    /// Mechanical self-energy Σ(δ) seen by the magnon.
    fn self_energy(&self, delta: Complex64, rwa: bool) -> Complex64 {
        let mut sigma = Complex64::new(0.0, 0.0);
        for &(omega_b, kappa_b, g) in &self.sidebands {
            let g2 = g * g;
            let chi_b = Complex64::new(kappa_b, omega_b) - I * delta;
            sigma += g2 / chi_b;
            if !rwa {
                let chi_c = Complex64::new(kappa_b, -omega_b) - I * delta;
                sigma -= g2 / chi_c;
            }
        }
        sigma
    }

    fn self_energy_derivative(&self, delta: Complex64, rwa: bool) -> Complex64 {
        let mut d = Complex64::new(0.0, 0.0);
        for &(omega_b, kappa_b, g) in &self.sidebands {
            let g2 = g * g;
            let chi_b = Complex64::new(kappa_b, omega_b) - I * delta;
            d += I * g2 / (chi_b * chi_b);
            if !rwa {
                let chi_c = Complex64::new(kappa_b, -omega_b) - I * delta;
                d -= I * g2 / (chi_c * chi_c);
            }
        }
        d
    }
}

fn three_mode_denominator(
    system: &SystemParams,
    op: &DrivenOperatingPoint,
    delta: Complex64,
    rwa: bool,
) -> Option<Complex64> {
    let chi_a = Complex64::new(system.cavity.kappa_total(), op.delta_a) - I * delta;
    let g = system.g_ma;
    if g == 0.0 {
        return Some(chi_a);
    }
    let w = Complex64::new(system.magnon.kappa, op.delta_m) - I * delta
        + op.self_energy(delta, rwa);
    if w.norm_sqr() == 0.0 {
        return None;
    }
    Some(chi_a + g * g / w)
}

/// Reflection of a weak probe at ω_p with the magnon driven at ω_d.
///
/// In the drive frame, δ = ω_p − ω_d and
/// D(δ) = i(Δ_a−δ) + κ_a + g²/[i(Δ_m−δ) + κ_m + Σ(δ)], where Δ_m
/// includes the self-Kerr shift and Σ is the mechanical self-energy.
/// With `rwa` false the counter-rotating sideband term is included.
pub fn reflection_three_mode(
    system: &SystemParams,
    drive: &DriveParams,
    omega_p: f64,
    rwa: bool,
) -> Complex64 {
    let op = DrivenOperatingPoint::new(system, drive);
    reflection_three_mode_at(system, &op, omega_p - drive.omega_d, rwa)
}

/// Three-mode reflection with a precomputed operating point (δ in the
/// drive frame). Useful when evaluating many grid points.
pub fn reflection_three_mode_at(
    system: &SystemParams,
    op: &DrivenOperatingPoint,
    delta: f64,
    rwa: bool,
) -> Complex64 {
    reflect(
        system.cavity.kappa_e,
        three_mode_denominator(system, op, Complex64::new(delta, 0.0), rwa),
    )
}

/// Three-mode reflection and its analytic derivative with respect to ω_p.
pub fn reflection_three_mode_with_derivative(
    system: &SystemParams,
    drive: &DriveParams,
    omega_p: f64,
    rwa: bool,
) -> (Complex64, Complex64) {
    let op = DrivenOperatingPoint::new(system, drive);
    let delta = Complex64::new(omega_p - drive.omega_d, 0.0);
    let ke = system.cavity.kappa_e;
    let d = match three_mode_denominator(system, &op, delta, rwa) {
        Some(d) => d,
        None => return (Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)),
    };
    let g = system.g_ma;
    let dp = if g == 0.0 {
        -I
    } else {
        let w = Complex64::new(system.magnon.kappa, op.delta_m) - I * delta
            + op.self_energy(delta, rwa);
        let wp = -I + op.self_energy_derivative(delta, rwa);
        -I - g * g * wp / (w * w)
    };
    (2.0 * ke / d - 1.0, -2.0 * ke * dp / (d * d))
}

/// Two-mode reflection spectrum over a grid. Grid points are evaluated
/// in parallel; the result preserves grid order.
pub fn compute_spectrum_two_mode(system: &SystemParams, grid: &FrequencyGrid) -> Spectrum {
    let freqs = grid.frequencies();
    let values: Vec<Complex64> = freqs
        .par_iter()
        .map(|&w| reflection_two_mode(system, w))
        .collect();
    Spectrum::new(freqs, values, Provenance::Model).expect("model spectrum is well-formed")
}

/// Driven three-mode reflection spectrum over an absolute probe grid.
pub fn compute_spectrum_three_mode(
    system: &SystemParams,
    drive: &DriveParams,
    grid: &FrequencyGrid,
    rwa: bool,
) -> Spectrum {
    let op = DrivenOperatingPoint::new(system, drive);
    let freqs = grid.frequencies();
    let values: Vec<Complex64> = freqs
        .par_iter()
        .map(|&w| reflection_three_mode_at(system, &op, w - drive.omega_d, rwa))
        .collect();
    Spectrum::new(freqs, values, Provenance::Model).expect("model spectrum is well-formed")
}

/// Complex Wigner delay τ(ω) = −i r*(ω) ∂_ω r(ω) / |r(ω)|², or the CPA
/// sentinel when |r| is below the floor. The physical delay (WTD) is
/// Re τ; near a reflection zero z its peak is 1/|Im z|, positive when
/// the zero lies above the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDelay {
    Finite(Complex64),
    /// |r| under [`CPA_FLOOR`]: the delay diverges at perfect absorption.
    AtCpa,
}

impl TimeDelay {
    pub fn finite(&self) -> Option<Complex64> {
        match self {
            TimeDelay::Finite(t) => Some(*t),
            TimeDelay::AtCpa => None,
        }
    }

    /// Re τ, the Wigner time delay in seconds.
    pub fn real(&self) -> Option<f64> {
        self.finite().map(|t| t.re)
    }

    pub fn is_at_cpa(&self) -> bool {
        matches!(self, TimeDelay::AtCpa)
    }
}

fn delay_from(r: Complex64, dr: Complex64) -> TimeDelay {
    if r.norm() < CPA_FLOOR {
        TimeDelay::AtCpa
    } else {
        TimeDelay::Finite(-I * r.conj() * dr / r.norm_sqr())
    }
}

/// Wigner delay of the undriven model at ω (analytic derivative).
pub fn wigner_time_delay_two_mode(system: &SystemParams, omega: f64) -> TimeDelay {
    let (r, dr) = reflection_two_mode_with_derivative(system, omega);
    delay_from(r, dr)
}

/// Wigner delay of the driven model at ω_p (analytic derivative).
pub fn wigner_time_delay_three_mode(
    system: &SystemParams,
    drive: &DriveParams,
    omega_p: f64,
    rwa: bool,
) -> TimeDelay {
    let (r, dr) = reflection_three_mode_with_derivative(system, drive, omega_p, rwa);
    delay_from(r, dr)
}

/// Wigner delay trace of the undriven model over a grid.
pub fn wigner_time_delay_trace_two_mode(
    system: &SystemParams,
    grid: &FrequencyGrid,
) -> Vec<(f64, TimeDelay)> {
    grid.frequencies()
        .par_iter()
        .map(|&w| (w, wigner_time_delay_two_mode(system, w)))
        .collect()
}

/// Wigner delay from a sampled complex spectrum: ∂_ω r by central finite
/// difference on the grid (one-sided at the endpoints). Rejects
/// magnitude-only spectra.
pub fn wigner_time_delay_spectrum(
    spectrum: &Spectrum,
) -> Result<Vec<(f64, TimeDelay)>, ResponseError> {
    if !spectrum.phase_valid {
        return Err(ResponseError::PhaseRequired);
    }
    let n = spectrum.len();
    if n < 3 {
        return Err(ResponseError::TooFewPoints { needed: 3, got: n });
    }
    let f = spectrum.frequencies();
    let v = spectrum.values();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let dr = (v[hi] - v[lo]) / (f[hi] - f[lo]);
        out.push((f[i], delay_from(v[i], dr)));
    }
    Ok(out)
}

/// Rectangular region of the complex frequency plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

/// A search box spanning both polariton branches with generous margins.
pub fn default_search_box(system: &SystemParams) -> SearchBox {
    let p = crate::model::diagonalize_polaritons(&system.cavity, &system.magnon, system.g_ma);
    let kappa_scale = system.cavity.kappa_total() + system.magnon.kappa;
    let margin = 2.0 * system.g_ma + 10.0 * kappa_scale + 1.0;
    SearchBox {
        re_min: p.omega_minus - margin,
        re_max: p.omega_plus + margin,
        im_min: -(10.0 * kappa_scale + 1.0),
        im_max: 10.0 * kappa_scale + 1.0,
    }
}

/// A zero of the reflection numerator 2κ_e − D(ω) in the complex plane.
///
/// `residual` is |r| evaluated on the real axis at Re(location); the
/// distance |Im(location)| measures how far the configuration is from
/// perfect absorption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexZero {
    pub location: Complex64,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

const NEWTON_MAX_ITERATIONS: usize = 80;

/// All zeros of 2κ_e − D(ω) inside the box, by Newton iteration with the
/// analytic derivative from deterministic seeds (effective-gain
/// eigenvalues plus bare modes) and Maehly deflation of found roots.
/// Candidates that fail to converge are reported with `converged: false`,
/// never silently dropped.
pub fn find_reflection_zeros(system: &SystemParams, search_box: &SearchBox) -> Vec<ComplexZero> {
    let ke = system.cavity.kappa_e;
    let f_fp = |z: Complex64| -> Option<(Complex64, Complex64)> {
        let d = two_mode_denominator(system, z)?;
        let dp = two_mode_denominator_derivative(system, z)?;
        Some((2.0 * ke - d, -dp))
    };

    let gain = effective_gain_polaritons(system);
    let kappa_a_prime = effective_gain_rate(system);
    let mut seeds = vec![
        gain.lambda_plus(),
        gain.lambda_minus(),
        Complex64::new(system.cavity.omega_a, kappa_a_prime),
    ];
    if system.g_ma > 0.0 {
        seeds.push(Complex64::new(system.magnon.omega, -system.magnon.kappa));
    }

    let scale = (system.cavity.omega_a.abs() + system.magnon.omega.abs()).max(1.0);
    let mut found: Vec<Complex64> = Vec::new();
    let mut zeros: Vec<ComplexZero> = Vec::new();

    for seed in seeds {
        let mut z = seed;
        let mut converged = false;
        // A seed stops being a zero candidate when the deflated landscape
        // degenerates under it (pole hit, deflation exhausted); only a
        // genuine max-iteration stall is reported unconverged.
        let mut exhausted = false;
        let mut iterations = 0;
        for it in 1..=NEWTON_MAX_ITERATIONS {
            iterations = it;
            let fv = f_fp(z);
            let Some((f, fp)) = fv else {
                exhausted = true;
                break;
            };
            if !f.is_finite() || !fp.is_finite() || !z.is_finite() {
                exhausted = true;
                break;
            }
            // Maehly deflation: repel the iteration from already-found roots.
            let mut denom = fp;
            for zf in &found {
                let dz = z - zf;
                if dz.norm_sqr() == 0.0 {
                    denom = Complex64::new(f64::NAN, 0.0);
                    break;
                }
                denom -= f / dz;
            }
            if !denom.is_finite() || denom.norm_sqr() == 0.0 {
                exhausted = true;
                break;
            }
            let step = f / denom;
            z -= step;
            if step.norm() <= 1e-14 * (scale + z.norm()) {
                converged = true;
                break;
            }
        }

        if exhausted {
            continue;
        }
        let duplicate = found
            .iter()
            .any(|zf| (z - zf).norm() <= 1e-11 * (scale + z.norm()));
        if duplicate {
            continue;
        }
        if converged {
            found.push(z);
        }
        if search_box.contains(z) && z.is_finite() {
            zeros.push(ComplexZero {
                location: z,
                residual: reflection_two_mode(system, z.re).norm(),
                converged,
                iterations,
            });
        }
    }

    zeros.sort_by(|a, b| a.location.re.partial_cmp(&b.location.re).unwrap());
    zeros
}

/// External coupling at the gain-loss balance, κ_e* = κ_int + κ_m
/// (closed form; assumes resonant tuning ω_m = ω_a).
pub fn cpa_balance(system: &SystemParams) -> f64 {
    system.cavity.kappa_int + system.magnon.kappa
}

/// Numerical refinement of [`cpa_balance`]: the κ_e minimizing the
/// largest |Im| over the reflection zeros, by golden-section search.
pub fn cpa_balance_refined(system: &SystemParams) -> f64 {
    let kappa_int = system.cavity.kappa_int;
    let kappa_m = system.magnon.kappa;
    if kappa_m == 0.0 {
        return kappa_int;
    }
    let objective = |kappa_e: f64| -> f64 {
        let sys = system.with_kappa_e(kappa_e);
        let zeros = find_reflection_zeros(&sys, &default_search_box(&sys));
        zeros
            .iter()
            .filter(|z| z.converged)
            .map(|z| z.location.im.abs())
            .fold(f64::NAN, f64::max)
            .max(0.0)
    };
    let mut lo = kappa_int;
    let mut hi = kappa_int + 4.0 * kappa_m;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    for _ in 0..120 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Effective cavity gain rate κ_a' = κ_e − κ_int.
pub fn effective_gain_rate(system: &SystemParams) -> f64 {
    system.cavity.kappa_e - system.cavity.kappa_int
}

/// Polaritons in the effective-gain picture: κ_a replaced by
/// −κ_a' = −(κ_e − κ_int). Their complex frequencies are the zeros of
/// the reflection; at gain-loss balance with ω_m = ω_a both decay rates
/// vanish (perfect absorption on the real axis).
pub fn effective_gain_polaritons(system: &SystemParams) -> PolaritonPair {
    diagonalize_modes(
        system.cavity.omega_a,
        -effective_gain_rate(system),
        system.magnon.omega,
        system.magnon.kappa,
        system.g_ma,
    )
}

/// Coupling at the exceptional point of the balanced resonant
/// gain-loss pair: g_EP = (κ_a' + κ_m)/2. Below g_EP the eigenvalues
/// differ in decay, above in frequency.
pub fn find_exceptional_point(kappa_a_prime: f64, kappa_m: f64) -> f64 {
    0.5 * (kappa_a_prime + kappa_m)
}

/// A magnon tuning that places the upper reflection zero at a requested
/// decay rate.
#[derive(Debug, Clone)]
pub struct TunedPoint {
    pub system: SystemParams,
    /// Complex location of the upper-branch reflection zero.
    pub zero: Complex64,
}

/// Adjust the magnon frequency so the upper-branch reflection zero has
/// decay `target` (rad/s; negative targets put the zero above the real
/// axis, i.e. on the net-gain side). Red-shifting the magnon lowers the
/// upper zero's decay while raising the lower one's, their sum being
/// fixed at κ_m − κ_a'.
pub fn tune_upper_zero_decay(
    system: &SystemParams,
    target: f64,
) -> Result<TunedPoint, ResponseError> {
    let omega_a = system.cavity.omega_a;
    let g = system.g_ma;
    let kappa_plus_at = |omega_m: f64| -> f64 {
        effective_gain_polaritons(&system.with_omega_m(omega_m)).kappa_plus
    };
    // κ̃₊ increases with ω_m across the bracket (red detuning narrows it).
    let mut lo = omega_a - g;
    let mut hi = omega_a + g;
    let (k_lo, k_hi) = (kappa_plus_at(lo), kappa_plus_at(hi));
    if !(k_lo <= target && target <= k_hi) {
        return Err(ResponseError::TargetOutOfRange {
            target,
            min: k_lo,
            max: k_hi,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kappa_plus_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let omega_m = 0.5 * (lo + hi);
    let tuned = system.with_omega_m(omega_m);
    let zero = effective_gain_polaritons(&tuned).lambda_plus();
    Ok(TunedPoint {
        system: tuned,
        zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hz_to_angular;
    use crate::model::{CavityParams, MechanicalMode, ModeParams};
    use proptest::prelude::*;

    fn reference_system() -> SystemParams {
        SystemParams::new(
            CavityParams::new(
                hz_to_angular(10.0524e9),
                hz_to_angular(1.12e6),
                hz_to_angular(1.88e6),
            )
            .unwrap(),
            ModeParams::new(hz_to_angular(10.0524e9), hz_to_angular(0.775e6)).unwrap(),
            hz_to_angular(5.83e6),
            vec![],
        )
        .unwrap()
    }

    fn reference_mechanics() -> MechanicalMode {
        MechanicalMode::new(
            hz_to_angular(10.9485e6),
            hz_to_angular(150.0),
            hz_to_angular(1.25e-3),
        )
        .unwrap()
    }

    #[test]
    fn critical_coupling_kills_reflection() {
        let mut sys = reference_system();
        sys.g_ma = 0.0;
        sys.cavity.kappa_e = sys.cavity.kappa_int;
        let r = reflection_two_mode(&sys, sys.cavity.omega_a);
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn single_mode_resonant_reflection() {
        let mut sys = reference_system();
        sys.g_ma = 0.0;
        let r = reflection_two_mode(&sys, sys.cavity.omega_a);
        let ke = sys.cavity.kappa_e;
        let ki = sys.cavity.kappa_int;
        let expect = (ke - ki) / (ke + ki);
        assert!((r.re - expect).abs() < 1e-14);
        assert!(r.im.abs() < 1e-14);
    }

    #[test]
    fn reference_spectrum_has_two_deep_polariton_dips() {
        let sys = reference_system();
        let wa = sys.cavity.omega_a;
        let g = sys.g_ma;
        let grid = FrequencyGrid::new(wa - 2.0 * g, wa + 2.0 * g, 4001).unwrap();
        let spec = compute_spectrum_two_mode(&sys, &grid);
        let db = spec.magnitude_db();
        // Deepest dips on each side of resonance.
        let mid = spec.nearest_index(wa);
        let (lo_idx, lo_db) = db[..mid]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let (hi_rel, hi_db) = db[mid..]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let hi_idx = mid + hi_rel;
        assert!(*lo_db < -30.0, "lower dip {lo_db} dB");
        assert!(*hi_db < -30.0, "upper dip {hi_db} dB");
        let f = spec.frequencies();
        assert!((f[lo_idx] - (wa - g)).abs() < 0.1 * g);
        assert!((f[hi_idx] - (wa + g)).abs() < 0.1 * g);
    }

    #[test]
    fn undriven_limit_of_three_mode_matches_two_mode() {
        let mut sys = reference_system();
        sys.mechanics.push(reference_mechanics());
        let drive = DriveParams::new(
            hz_to_angular(10.0415e9),
            f64::NEG_INFINITY, // zero power: M = 0
            2.0e7,
            -1.0e-6,
        )
        .unwrap();
        let wa = sys.cavity.omega_a;
        for k in -5..=5 {
            let w = wa + k as f64 * hz_to_angular(2.0e6);
            let r3 = reflection_three_mode(&sys, &drive, w, true);
            let r2 = reflection_two_mode(&sys, w);
            assert!((r3 - r2).norm() < 1e-14 * (1.0 + r2.norm()));
        }
    }

    #[test]
    fn lossless_detuned_mirror_delay() {
        // κ_int = 0, g = 0: |r| = 1 everywhere and Re τ(ω_a) = 2/κ_e.
        let mut sys = reference_system();
        sys.g_ma = 0.0;
        sys.cavity.kappa_int = 0.0;
        let ke = sys.cavity.kappa_e;
        let r = reflection_two_mode(&sys, sys.cavity.omega_a + 3.0 * ke);
        assert!((r.norm() - 1.0).abs() < 1e-12);
        let tau = wigner_time_delay_two_mode(&sys, sys.cavity.omega_a);
        let t = tau.real().unwrap();
        assert!((t - 2.0 / ke).abs() < 1e-12 * (2.0 / ke));
    }

    #[test]
    fn analytic_derivative_matches_finite_difference() {
        let sys = reference_system();
        let w0 = sys.cavity.omega_a + hz_to_angular(2.3e6);
        let (_, dr) = reflection_two_mode_with_derivative(&sys, w0);
        // Central differences with shrinking step converge to the
        // analytic derivative.
        let mut best = f64::INFINITY;
        for h in [1e4, 1e3, 1e2] {
            let fd = (reflection_two_mode(&sys, w0 + h) - reflection_two_mode(&sys, w0 - h))
                / (2.0 * h);
            best = best.min((fd - dr).norm() / dr.norm());
        }
        assert!(best < 1e-6, "relative error {best}");

        let mut sys3 = sys.clone();
        sys3.mechanics.push(reference_mechanics());
        let drive = DriveParams::new(hz_to_angular(10.0415e9), 5.0, 2.0e7, 0.0).unwrap();
        let w1 = drive.omega_d + hz_to_angular(10.9485e6) + hz_to_angular(5.0e3);
        let (_, dr3) = reflection_three_mode_with_derivative(&sys3, &drive, w1, true);
        let mut best3 = f64::INFINITY;
        for h in [1e3, 1e2, 1e1] {
            let fd = (reflection_three_mode(&sys3, &drive, w1 + h, true)
                - reflection_three_mode(&sys3, &drive, w1 - h, true))
                / (2.0 * h);
            best3 = best3.min((fd - dr3).norm() / dr3.norm());
        }
        assert!(best3 < 1e-6, "relative error {best3}");
    }

    #[test]
    fn decoupled_zero_sits_at_gain_frequency() {
        let mut sys = reference_system();
        sys.g_ma = 0.0;
        let zeros = find_reflection_zeros(&sys, &default_search_box(&sys));
        assert_eq!(zeros.len(), 1);
        let z = zeros[0];
        assert!(z.converged);
        let expect = Complex64::new(sys.cavity.omega_a, effective_gain_rate(&sys));
        assert!((z.location - expect).norm() < 1e-6 * (1.0 + expect.norm()));

        // On the real axis exactly at critical coupling.
        sys.cavity.kappa_e = sys.cavity.kappa_int;
        let zeros = find_reflection_zeros(&sys, &default_search_box(&sys));
        assert_eq!(zeros.len(), 1);
        assert!(zeros[0].location.im.abs() < 1e-3);
        assert!(zeros[0].residual < 1e-9);
    }

    #[test]
    fn balanced_zeros_are_real_and_absorb() {
        // ω_m = ω_a and κ_e = κ_int + κ_m: both zeros on the real axis at
        // ω_a ± √(g² − κ_m²); the reflection vanishes there.
        let mut sys = reference_system();
        sys.cavity.kappa_e = cpa_balance(&sys);
        let zeros = find_reflection_zeros(&sys, &default_search_box(&sys));
        assert_eq!(zeros.len(), 2);
        let g = sys.g_ma;
        let km = sys.magnon.kappa;
        let split = (g * g - km * km).sqrt();
        for (z, sign) in zeros.iter().zip([-1.0, 1.0]) {
            assert!(z.converged);
            assert!(z.location.im.abs() < 1e-3, "Im = {}", z.location.im);
            let expect = sys.cavity.omega_a + sign * split;
            assert!((z.location.re - expect).abs() < 1e-4 * split);
            assert!(
                z.residual < 1e-6,
                "residual {} at projected zero",
                z.residual
            );
        }
    }

    #[test]
    fn off_balance_residual_decay_matches_quoted_value() {
        // κ_e/2π = 1.88 MHz vs balance 1.895 MHz leaves κ±/2π = 7.5 kHz.
        let sys = reference_system();
        let gain = effective_gain_polaritons(&sys);
        let hz = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((gain.kappa_plus * hz - 7.5e3).abs() < 1.0);
        assert!((gain.kappa_minus * hz - 7.5e3).abs() < 1.0);
    }

    #[test]
    fn gain_polariton_sum_rule_at_critical_coupling() {
        let mut sys = reference_system();
        sys.cavity.kappa_e = sys.cavity.kappa_int;
        let gain = effective_gain_polaritons(&sys);
        let km = sys.magnon.kappa;
        assert!((gain.kappa_plus + gain.kappa_minus - km).abs() < 1e-9 * km);
    }

    #[test]
    fn zeros_coincide_with_gain_eigenvalues() {
        let sys = reference_system().with_omega_m(hz_to_angular(10.0400e9));
        let zeros = find_reflection_zeros(&sys, &default_search_box(&sys));
        assert_eq!(zeros.len(), 2);
        let gain = effective_gain_polaritons(&sys);
        let expect = [gain.lambda_minus(), gain.lambda_plus()];
        for (z, e) in zeros.iter().zip(expect) {
            assert!(
                (z.location - e).norm() <= 1e-8 * e.norm(),
                "zero {} vs eigenvalue {}",
                z.location,
                e
            );
        }
    }

    #[test]
    fn exceptional_point_closed_form_and_scaling() {
        let kappa = hz_to_angular(0.775e6);
        assert_eq!(find_exceptional_point(kappa, kappa), kappa);
        // ξ vanishes at g_EP in the balanced resonant gain picture.
        let w = hz_to_angular(10.0e9);
        let g_ep = find_exceptional_point(kappa, kappa);
        let p = diagonalize_modes(w, -kappa, w, kappa, g_ep);
        assert!((p.omega_plus - p.omega_minus).abs() < 1e-4);
        assert!((p.kappa_plus - p.kappa_minus).abs() < 1e-4);
    }

    #[test]
    fn cpa_balance_reference_values() {
        let sys = reference_system();
        let hz = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((cpa_balance(&sys) * hz - 1.895e6).abs() < 1.0);
        let mut lossless_magnon = sys.clone();
        lossless_magnon.magnon.kappa = 0.0;
        assert_eq!(cpa_balance(&lossless_magnon), sys.cavity.kappa_int);
    }

    #[test]
    fn cpa_balance_refinement_agrees_with_closed_form() {
        let sys = reference_system();
        let refined = cpa_balance_refined(&sys);
        let closed = cpa_balance(&sys);
        assert!(
            (refined - closed).abs() < 1e-3 * closed,
            "refined {refined} vs closed {closed}"
        );
    }

    #[test]
    fn tuning_hits_requested_zero_decay() {
        let sys = reference_system();
        for target_hz in [5.0e3, 140.0, -140.0] {
            let target = hz_to_angular(target_hz);
            let tuned = tune_upper_zero_decay(&sys, target).unwrap();
            let got = -tuned.zero.im;
            assert!(
                (got - target).abs() < 1e-3 * target.abs().max(1.0),
                "target {target_hz} Hz, got {} Hz",
                crate::angular_to_hz(got)
            );
        }
    }

    #[test]
    fn wtd_trace_at_cpa_reports_sentinel() {
        let mut sys = reference_system();
        sys.cavity.kappa_e = cpa_balance(&sys);
        let zeros = find_reflection_zeros(&sys, &default_search_box(&sys));
        let z = zeros[1].location;
        // At a real-axis zero the reflection magnitude collapses below
        // the floor and the delay reports the CPA sentinel.
        let tau = wigner_time_delay_two_mode(&sys, z.re);
        assert!(tau.is_at_cpa() || tau.real().unwrap().abs() > 1.0);
    }

    #[test]
    fn spectrum_grid_validation() {
        let err = Spectrum::new(
            vec![1.0, 1.0, 2.0],
            vec![Complex64::new(0.0, 0.0); 3],
            Provenance::Measured,
        );
        assert!(matches!(err, Err(ResponseError::NonMonotoneGrid(1))));
        let err = Spectrum::new(vec![1.0], vec![], Provenance::Measured);
        assert!(matches!(err, Err(ResponseError::LengthMismatch { .. })));
        let db_only =
            Spectrum::from_magnitude_db(vec![1.0, 2.0, 3.0], vec![-3.0, -40.0, -3.0], Provenance::Measured)
                .unwrap();
        assert!(matches!(
            wigner_time_delay_spectrum(&db_only),
            Err(ResponseError::PhaseRequired)
        ));
    }

    #[test]
    fn finite_difference_delay_matches_analytic_on_fine_grid() {
        let sys = reference_system();
        let wa = sys.cavity.omega_a;
        let g = sys.g_ma;
        let grid = FrequencyGrid::new(wa + 0.8 * g, wa + 1.2 * g, 2001).unwrap();
        let spec = compute_spectrum_two_mode(&sys, &grid);
        let fd = wigner_time_delay_spectrum(&spec).unwrap();
        for (w, tau) in fd.iter().skip(100).step_by(200) {
            let exact = wigner_time_delay_two_mode(&sys, *w);
            let (a, b) = (tau.finite().unwrap(), exact.finite().unwrap());
            assert!((a - b).norm() <= 2e-4 * b.norm().max(1e-12), "at ω = {w}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn passivity_of_undriven_reflection(
            det_mhz in -30.0f64..30.0,
            ki_mhz in 0.0f64..5.0,
            ke_mhz in 0.0f64..5.0,
            km_mhz in 0.0f64..3.0,
            g_mhz in 0.0f64..20.0,
            probe_off_mhz in -60.0f64..60.0,
        ) {
            let wa = hz_to_angular(10.0e9);
            let sys = SystemParams::new(
                CavityParams::new(wa, hz_to_angular(ki_mhz * 1e6), hz_to_angular(ke_mhz * 1e6)).unwrap(),
                ModeParams::new(wa + hz_to_angular(det_mhz * 1e6), hz_to_angular(km_mhz * 1e6)).unwrap(),
                hz_to_angular(g_mhz * 1e6),
                vec![],
            ).unwrap();
            let r = reflection_two_mode(&sys, wa + hz_to_angular(probe_off_mhz * 1e6));
            prop_assert!(r.norm() <= 1.0 + 1e-9, "|r| = {}", r.norm());
        }
    }
}
