//! Polariton-mechanics physics: hybrid normal modes of the driven
//! system, the drive-enhanced mechanical damping, cooperativity,
//! normal-mode-splitting extraction from spectra, and coupling-regime
//! classification.
//!
//! The linearized dynamics is represented in the bare (cavity, magnon,
//! phonon) basis; polariton quantities follow from the exact θ rotation,
//! so the drive, Kerr shift, and multiple phonons stay simple while the
//! polariton-basis couplings G± are recovered identically.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DriveParams, SystemParams};
use crate::response::{DrivenOperatingPoint, Spectrum};

#[derive(Debug, Error, PartialEq)]
pub enum MagnomechError {
    #[error("cooperativity undefined: {0} must be positive")]
    UndefinedCooperativity(&'static str),
}

/// One hybrid normal mode: complex frequency (drive frame, ω − iκ) and
/// its composition over (cavity, magnon, phonon_1, …), weights summing
/// to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridMode {
    pub eigenvalue: Complex64,
    pub weights: Vec<f64>,
}

/// Normal modes of the (2 + N)-mode linearized system, sorted by
/// real part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModeSet {
    pub modes: Vec<HybridMode>,
}

impl HybridModeSet {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    pub fn sum_eigenvalues(&self) -> Complex64 {
        self.modes.iter().map(|m| m.eigenvalue).sum()
    }

    /// Mode with the largest phonon weight fraction.
    pub fn most_phonon_like(&self) -> Option<&HybridMode> {
        self.modes
            .iter()
            .max_by(|a, b| {
                let pa: f64 = a.weights.iter().skip(2).sum();
                let pb: f64 = b.weights.iter().skip(2).sum();
                pa.partial_cmp(&pb).unwrap()
            })
            .filter(|m| m.weights.len() > 2)
    }
}

/// Coupled-mode matrix of the driven system in the drive rotating frame
/// (RWA): diagonal (Δ_a − iκ_a, Δ_m − iκ_m, ω_b,j − iκ_b,j) with
/// couplings g_ma (cavity-magnon) and G_j (magnon-phonon).
fn rwa_matrix(system: &SystemParams, op: &DrivenOperatingPoint) -> DMatrix<Complex64> {
    let n = 2 + op.sidebands.len();
    let mut h = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    h[(0, 0)] = Complex64::new(op.delta_a, -system.cavity.kappa_total());
    h[(1, 1)] = Complex64::new(op.delta_m, -system.magnon.kappa);
    h[(0, 1)] = Complex64::new(system.g_ma, 0.0);
    h[(1, 0)] = Complex64::new(system.g_ma, 0.0);
    for (j, &(omega_b, kappa_b, g)) in op.sidebands.iter().enumerate() {
        let k = 2 + j;
        h[(k, k)] = Complex64::new(omega_b, -kappa_b);
        h[(1, k)] = Complex64::new(g, 0.0);
        h[(k, 1)] = Complex64::new(g, 0.0);
    }
    h
}

/// Beyond the RWA each phonon contributes its conjugate sector at
/// −ω_b − iκ_b, coupled to the magnon with the Bogoliubov sign so the
/// magnon self-energy acquires the counter-rotating term.
fn full_matrix(system: &SystemParams, op: &DrivenOperatingPoint) -> DMatrix<Complex64> {
    let nb = op.sidebands.len();
    let n = 2 + 2 * nb;
    let mut h = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    h[(0, 0)] = Complex64::new(op.delta_a, -system.cavity.kappa_total());
    h[(1, 1)] = Complex64::new(op.delta_m, -system.magnon.kappa);
    h[(0, 1)] = Complex64::new(system.g_ma, 0.0);
    h[(1, 0)] = Complex64::new(system.g_ma, 0.0);
    for (j, &(omega_b, kappa_b, g)) in op.sidebands.iter().enumerate() {
        let k = 2 + j;
        let kc = 2 + nb + j;
        h[(k, k)] = Complex64::new(omega_b, -kappa_b);
        h[(1, k)] = Complex64::new(g, 0.0);
        h[(k, 1)] = Complex64::new(g, 0.0);
        h[(kc, kc)] = Complex64::new(-omega_b, -kappa_b);
        h[(1, kc)] = Complex64::new(g, 0.0);
        h[(kc, 1)] = Complex64::new(-g, 0.0);
    }
    h
}

/// Eigenvector of `h` for eigenvalue `lambda` by shifted inverse
/// iteration.
fn eigenvector(h: &DMatrix<Complex64>, lambda: Complex64, scale: f64) -> Option<Vec<f64>> {
    let n = h.nrows();
    let mut shift = 1e-10 * scale.max(1.0);
    for _ in 0..6 {
        let shifted = h - DMatrix::from_diagonal_element(n, n, lambda + Complex64::new(shift, 0.0));
        if let Some(lu) = shifted.lu().try_inverse() {
            let mut v = nalgebra::DVector::from_element(n, Complex64::new(1.0, 0.0));
            for _ in 0..3 {
                v = &lu * v;
                let norm = v.norm();
                if !(norm > 0.0) || !norm.is_finite() {
                    break;
                }
                v /= Complex64::new(norm, 0.0);
            }
            if v.iter().all(|c| c.is_finite()) {
                let total: f64 = v.iter().map(|c| c.norm_sqr()).sum();
                if total > 0.0 {
                    return Some(v.iter().map(|c| c.norm_sqr() / total).collect());
                }
            }
        }
        shift *= 10.0;
    }
    None
}

/// Hybrid normal modes of the driven system: eigenvalues and
/// compositions of the coupled-mode matrix in the drive frame. The
/// eigenvalues coincide with the zeros of the nested three-mode
/// denominator D(δ) in the complex δ plane.
///
/// Weight vectors always have 2 + N entries (cavity, magnon, phonons);
/// with `rwa` false the conjugate phonon sectors are folded into their
/// phonon entries and the mode count doubles to 2 + 2N.
pub fn normal_modes(system: &SystemParams, drive: &DriveParams, rwa: bool) -> HybridModeSet {
    let op = DrivenOperatingPoint::new(system, drive);
    let nb = op.sidebands.len();
    let h = if rwa {
        rwa_matrix(system, &op)
    } else {
        full_matrix(system, &op)
    };
    let scale = h.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let t = h.clone().schur().unpack().1;
    let mut modes: Vec<HybridMode> = (0..h.nrows())
        .map(|i| {
            let lambda = t[(i, i)];
            let raw = eigenvector(&h, lambda, scale).unwrap_or_else(|| {
                // Degenerate at an exceptional point: composition undefined.
                vec![f64::NAN; h.nrows()]
            });
            let weights = if rwa {
                raw
            } else {
                let mut folded = vec![0.0; 2 + nb];
                folded[0] = raw[0];
                folded[1] = raw[1];
                for j in 0..nb {
                    folded[2 + j] = raw[2 + j] + raw[2 + nb + j];
                }
                folded
            };
            HybridMode {
                eigenvalue: lambda,
                weights,
            }
        })
        .collect();
    modes.sort_by(|a, b| a.eigenvalue.re.partial_cmp(&b.eigenvalue.re).unwrap());
    HybridModeSet { modes }
}

/// Effective mechanical damping with its validity annotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDamping {
    pub kappa_b_eff: f64,
    /// True inside the resolved-sideband, weak-coupling domain
    /// (κ₊ < ω_b/10 and G₊ < κ₊/2) where the formula is reliable.
    pub within_validity: bool,
}

/// Drive-enhanced mechanical damping κ_b,eff = (1 + C₊,b)·κ_b from the
/// anti-Stokes backaction. Computed everywhere; `within_validity` flags
/// the resolved-sideband weak-coupling domain, outside of which the
/// formula only approximately holds.
pub fn effective_mechanical_damping(
    g_plus: f64,
    kappa_plus: f64,
    kappa_b: f64,
    omega_b: f64,
) -> Result<EffectiveDamping, MagnomechError> {
    let c = cooperativity(g_plus, kappa_plus, kappa_b)?;
    Ok(EffectiveDamping {
        kappa_b_eff: (1.0 + c) * kappa_b,
        within_validity: kappa_plus < omega_b / 10.0 && g_plus < kappa_plus / 2.0,
    })
}

/// Polariton-mechanics cooperativity C₊,b = G₊²/(κ₊ κ_b).
pub fn cooperativity(g_plus: f64, kappa_plus: f64, kappa_b: f64) -> Result<f64, MagnomechError> {
    if !(kappa_plus > 0.0) {
        return Err(MagnomechError::UndefinedCooperativity("kappa_plus"));
    }
    if !(kappa_b > 0.0) {
        return Err(MagnomechError::UndefinedCooperativity("kappa_b"));
    }
    Ok(g_plus * g_plus / (kappa_plus * kappa_b))
}

/// A reflection dip: sub-grid refined location and depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    pub omega: f64,
    pub depth_db: f64,
}

/// Local minima of |r| (in dB) within [lo, hi], each refined by a
/// parabola through the minimum and its neighbors, deepest first.
pub fn find_dips(spectrum: &Spectrum, lo: f64, hi: f64) -> Vec<Dip> {
    let f = spectrum.frequencies();
    let db = spectrum.magnitude_db();
    let mut dips = Vec::new();
    for i in 1..f.len().saturating_sub(1) {
        if f[i] < lo || f[i] > hi {
            continue;
        }
        if db[i] <= db[i - 1] && db[i] < db[i + 1] {
            // Vertex of the parabola through the minimum and its neighbors
            // (Newton form p(x) = y0 + d01(x−x0) + c2(x−x0)(x−x1)).
            let (x0, x1, x2) = (f[i - 1], f[i], f[i + 1]);
            let (y0, y1, y2) = (db[i - 1], db[i], db[i + 1]);
            let d01 = (y1 - y0) / (x1 - x0);
            let d12 = (y2 - y1) / (x2 - x1);
            let c2 = (d12 - d01) / (x2 - x0);
            let (omega, depth_db) = if c2 > 0.0 {
                let vertex = 0.5 * (x0 + x1) - 0.5 * d01 / c2;
                let yv = y0 + d01 * (vertex - x0) + c2 * (vertex - x0) * (vertex - x1);
                (vertex, yv)
            } else {
                (x1, y1)
            };
            dips.push(Dip { omega, depth_db });
        }
    }
    dips.sort_by(|a, b| a.depth_db.partial_cmp(&b.depth_db).unwrap());
    dips
}

/// Measured normal-mode splitting, or `Unresolved` when fewer than two
/// dips exist in the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NmsSplitting {
    Resolved {
        /// Separation of the two deepest dips (rad/s).
        splitting: f64,
        lower_dip: f64,
        upper_dip: f64,
    },
    Unresolved,
}

impl NmsSplitting {
    pub fn splitting(&self) -> Option<f64> {
        match self {
            NmsSplitting::Resolved { splitting, .. } => Some(*splitting),
            NmsSplitting::Unresolved => None,
        }
    }
}

/// Frequency separation of the two deepest reflection dips inside the
/// window, with parabolic sub-grid refinement. Slightly exceeds 2G₊ when
/// κ₊ is comparable to G₊ (dip repulsion); compare against the
/// eigenvalue separation from [`normal_modes`] when that bias matters.
pub fn nms_splitting(spectrum: &Spectrum, window: (f64, f64)) -> NmsSplitting {
    let dips = find_dips(spectrum, window.0, window.1);
    if dips.len() < 2 {
        return NmsSplitting::Unresolved;
    }
    let (a, b) = (dips[0].omega, dips[1].omega);
    NmsSplitting::Resolved {
        splitting: (a - b).abs(),
        lower_dip: a.min(b),
        upper_dip: a.max(b),
    }
}

/// Coupling regime of the polariton-mechanics system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingRegime {
    /// No resolvable magnomechanical response (G₊ = 0).
    Unresolved,
    Weak,
    /// G₊ exceeds both κ₊ and κ_b,eff.
    Strong,
    /// Strong, with the polaritons themselves strongly coupled
    /// (g_ma > κ_a, κ_m).
    TripleStrong,
}

/// Inputs to [`classify_regime`]. `kappa_b_eff` overrides the
/// backaction formula when a measured value is available (mandatory at
/// strong coupling, where the formula is invalid).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInputs {
    pub g_plus: f64,
    pub kappa_plus: f64,
    pub kappa_b: f64,
    pub kappa_b_eff: Option<f64>,
    pub g_ma: f64,
    pub kappa_a: f64,
    pub kappa_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub g_plus: f64,
    pub kappa_plus: f64,
    pub kappa_b_eff: f64,
    pub cooperativity: f64,
    pub regime: CouplingRegime,
}

/// Classify the coupling regime: strong iff G₊ > κ₊ and G₊ > κ_b,eff;
/// triple-strong additionally requires g_ma > κ_a and g_ma > κ_m.
/// Invariant under a common rescaling of every rate and coupling.
pub fn classify_regime(inputs: &RegimeInputs) -> RegimeReport {
    let c = if inputs.kappa_plus > 0.0 && inputs.kappa_b > 0.0 {
        inputs.g_plus * inputs.g_plus / (inputs.kappa_plus * inputs.kappa_b)
    } else if inputs.g_plus > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let kappa_b_eff = inputs.kappa_b_eff.unwrap_or((1.0 + c) * inputs.kappa_b);
    let regime = if !(inputs.g_plus > 0.0) {
        CouplingRegime::Unresolved
    } else if inputs.g_plus > inputs.kappa_plus && inputs.g_plus > kappa_b_eff {
        if inputs.g_ma > inputs.kappa_a && inputs.g_ma > inputs.kappa_m {
            CouplingRegime::TripleStrong
        } else {
            CouplingRegime::Strong
        }
    } else {
        CouplingRegime::Weak
    };
    RegimeReport {
        g_plus: inputs.g_plus,
        kappa_plus: inputs.kappa_plus,
        kappa_b_eff,
        cooperativity: c,
        regime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hz_to_angular;
    use crate::model::{
        calibrate_power_to_amplitude, CavityParams, MechanicalMode, ModeParams,
    };
    use crate::response::{compute_spectrum_three_mode, FrequencyGrid};
    use std::f64::consts::PI;

    fn reference_system_with_mechanics() -> SystemParams {
        SystemParams::new(
            CavityParams::new(
                hz_to_angular(10.0524e9),
                hz_to_angular(1.12e6),
                hz_to_angular(1.88e6),
            )
            .unwrap(),
            ModeParams::new(hz_to_angular(10.0524e9), hz_to_angular(0.775e6)).unwrap(),
            hz_to_angular(5.83e6),
            vec![MechanicalMode::new(
                hz_to_angular(10.9485e6),
                hz_to_angular(150.0),
                hz_to_angular(1.25e-3),
            )
            .unwrap()],
        )
        .unwrap()
    }

    fn zero_power_drive() -> DriveParams {
        DriveParams::new(hz_to_angular(10.0415e9), f64::NEG_INFINITY, 2.0e7, 0.0).unwrap()
    }

    #[test]
    fn undriven_modes_are_polaritons_plus_bare_phonons() {
        let sys = reference_system_with_mechanics();
        let drive = zero_power_drive();
        let set = normal_modes(&sys, &drive, true);
        assert_eq!(set.modes.len(), 3);
        let p = crate::model::diagonalize_polaritons(&sys.cavity, &sys.magnon, sys.g_ma);
        let expect = [
            p.lambda_minus() - Complex64::new(drive.omega_d, 0.0),
            Complex64::new(sys.mechanics[0].omega_b, -sys.mechanics[0].kappa_b),
            p.lambda_plus() - Complex64::new(drive.omega_d, 0.0),
        ];
        for (mode, e) in set.modes.iter().zip(expect) {
            assert!(
                (mode.eigenvalue - e).norm() <= 1e-8 * e.norm().max(1.0),
                "{} vs {}",
                mode.eigenvalue,
                e
            );
        }
        // Phonon mode is purely mechanical in this limit.
        let phonon = set.most_phonon_like().unwrap();
        assert!(phonon.weights[2] > 0.999);
    }

    #[test]
    fn trace_rule_is_exact() {
        let sys = reference_system_with_mechanics();
        let drive = DriveParams::new(hz_to_angular(10.0477e9), 8.0, 2.0e7, -2.0e-8).unwrap();
        let op = DrivenOperatingPoint::new(&sys, &drive);
        let set = normal_modes(&sys, &drive, true);
        let trace = Complex64::new(op.delta_a, -sys.cavity.kappa_total())
            + Complex64::new(op.delta_m, -sys.magnon.kappa)
            + Complex64::new(sys.mechanics[0].omega_b, -sys.mechanics[0].kappa_b);
        let sum = set.sum_eigenvalues();
        assert!((sum - trace).norm() <= 1e-10 * trace.norm());
    }

    #[test]
    fn strong_coupling_splits_by_two_g_plus() {
        // Sideband resonant with the upper polariton and G+ = 20 κ+
        // (κ+ here is the polariton pole width, so pick narrow modes):
        // the two hybrid eigenvalues near δ = ω_b split by ≈ 2G+ in
        // real part, within 1%.
        let omega_a = hz_to_angular(10.0524e9);
        let kappa = hz_to_angular(5.0e3);
        let sys = SystemParams::new(
            CavityParams::new(omega_a, 0.5 * kappa, 0.5 * kappa).unwrap(),
            ModeParams::new(omega_a, kappa).unwrap(),
            hz_to_angular(5.83e6),
            vec![MechanicalMode::new(
                hz_to_angular(10.9485e6),
                hz_to_angular(150.0),
                hz_to_angular(1.25e-3),
            )
            .unwrap()],
        )
        .unwrap();
        let p = crate::model::diagonalize_polaritons(&sys.cavity, &sys.magnon, sys.g_ma);
        let g_plus = 20.0 * p.kappa_plus;
        let omega_b = sys.mechanics[0].omega_b;
        let omega_d = p.omega_plus - omega_b;
        let ptoa = calibrate_power_to_amplitude(g_plus, sys.mechanics[0].g_mb, p.theta, 0.0);
        let drive = DriveParams::new(omega_d, 0.0, ptoa, 0.0).unwrap();
        let set = normal_modes(&sys, &drive, true);
        let mut near: Vec<&HybridMode> = set
            .modes
            .iter()
            .filter(|m| (m.eigenvalue.re - omega_b).abs() < 4.0 * g_plus)
            .collect();
        near.sort_by(|a, b| a.eigenvalue.re.partial_cmp(&b.eigenvalue.re).unwrap());
        assert_eq!(near.len(), 2, "expected an avoided pair at the sideband");
        let split = near[1].eigenvalue.re - near[0].eigenvalue.re;
        assert!(
            (split - 2.0 * g_plus).abs() < 0.01 * 2.0 * g_plus,
            "splitting {} vs 2G+ {}",
            split,
            2.0 * g_plus
        );
    }

    #[test]
    fn effective_damping_matches_quoted_prediction() {
        // κ+/2π = 3.43 kHz, G+ = 0.4 κ+, κ_b/2π = 0.15 kHz →
        // κ_b,eff/2π ≈ 0.70 kHz, within 5% of the quoted 0.73 kHz.
        let kappa_plus = hz_to_angular(3.43e3);
        let g_plus = 0.4 * kappa_plus;
        let kappa_b = hz_to_angular(0.15e3);
        let omega_b = hz_to_angular(10.9485e6);
        let out = effective_mechanical_damping(g_plus, kappa_plus, kappa_b, omega_b).unwrap();
        let hz = out.kappa_b_eff / (2.0 * PI);
        assert!((hz - 0.70e3).abs() < 0.01e3, "κ_b,eff/2π = {hz}");
        assert!((hz - 0.73e3).abs() / 0.73e3 < 0.05);
        // G+ = 0.4 κ+ sits inside the declared validity thresholds
        // (G+ < κ+/2), near their edge.
        assert!(out.within_validity);
        let strong =
            effective_mechanical_damping(2.0 * kappa_plus, kappa_plus, kappa_b, omega_b).unwrap();
        assert!(!strong.within_validity);

        let weak = effective_mechanical_damping(0.0, kappa_plus, kappa_b, omega_b).unwrap();
        assert_eq!(weak.kappa_b_eff, kappa_b);
        assert!(weak.within_validity);
    }

    #[test]
    fn damping_rejects_zero_rates() {
        assert_eq!(
            effective_mechanical_damping(1.0, 0.0, 1.0, 1.0),
            Err(MagnomechError::UndefinedCooperativity("kappa_plus"))
        );
        assert_eq!(
            cooperativity(1.0, 1.0, 0.0),
            Err(MagnomechError::UndefinedCooperativity("kappa_b"))
        );
    }

    #[test]
    fn cooperativity_values() {
        let c = cooperativity(
            hz_to_angular(23.19e3),
            hz_to_angular(0.90e3),
            hz_to_angular(0.15e3),
        )
        .unwrap();
        assert!((c - 3.98e3).abs() < 0.05e3, "C = {c}");
        let unit = cooperativity(2.0, 4.0, 1.0).unwrap();
        assert!((unit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unresolved_when_undriven() {
        let sys = reference_system_with_mechanics();
        let drive = zero_power_drive();
        let omega_b = sys.mechanics[0].omega_b;
        let grid = FrequencyGrid::new(
            drive.omega_d + omega_b - hz_to_angular(60.0e3),
            drive.omega_d + omega_b + hz_to_angular(60.0e3),
            2001,
        )
        .unwrap();
        let spec = compute_spectrum_three_mode(&sys, &drive, &grid, true);
        let split = nms_splitting(
            &spec,
            (grid.start, grid.stop),
        );
        assert_eq!(split, NmsSplitting::Unresolved);
    }

    #[test]
    fn regime_classification_reference_points() {
        let base = RegimeInputs {
            g_plus: hz_to_angular(2.58e3),
            kappa_plus: hz_to_angular(0.25e3),
            kappa_b: hz_to_angular(0.15e3),
            kappa_b_eff: Some(hz_to_angular(0.55e3)),
            g_ma: hz_to_angular(5.83e6),
            kappa_a: hz_to_angular(3.0e6),
            kappa_m: hz_to_angular(0.775e6),
        };
        assert_eq!(classify_regime(&base).regime, CouplingRegime::TripleStrong);

        // G+ ≈ 0.4 κ+ (lowest power row): weak coupling.
        let weak = RegimeInputs {
            g_plus: 0.4 * hz_to_angular(3.43e3),
            kappa_plus: hz_to_angular(3.43e3),
            kappa_b_eff: None,
            ..base
        };
        assert_eq!(classify_regime(&weak).regime, CouplingRegime::Weak);

        let off = RegimeInputs {
            g_plus: 0.0,
            kappa_b_eff: None,
            ..base
        };
        assert_eq!(classify_regime(&off).regime, CouplingRegime::Unresolved);

        // Strong but not triple-strong when the polaritons themselves
        // are weakly coupled.
        let strong_only = RegimeInputs {
            g_ma: hz_to_angular(1.0e6),
            ..base
        };
        assert_eq!(classify_regime(&strong_only).regime, CouplingRegime::Strong);
    }

    #[test]
    fn regime_is_scale_invariant() {
        let base = RegimeInputs {
            g_plus: hz_to_angular(2.58e3),
            kappa_plus: hz_to_angular(0.25e3),
            kappa_b: hz_to_angular(0.15e3),
            kappa_b_eff: None,
            g_ma: hz_to_angular(5.83e6),
            kappa_a: hz_to_angular(3.0e6),
            kappa_m: hz_to_angular(0.775e6),
        };
        let r0 = classify_regime(&base).regime;
        for scale in [1e-3, 0.1, 10.0, 1e4] {
            let scaled = RegimeInputs {
                g_plus: base.g_plus * scale,
                kappa_plus: base.kappa_plus * scale,
                kappa_b: base.kappa_b * scale,
                kappa_b_eff: None,
                g_ma: base.g_ma * scale,
                kappa_a: base.kappa_a * scale,
                kappa_m: base.kappa_m * scale,
            };
            assert_eq!(classify_regime(&scaled).regime, r0);
        }
    }

    #[test]
    fn weak_coupling_phonon_eigenvalue_matches_backaction_formula() {
        // Resolved sidebands, weak coupling: the phonon-like eigenvalue's
        // imaginary part equals (1 + C)κ_b within 2%.
        let omega_a = hz_to_angular(10.0524e9);
        let kappa = hz_to_angular(50.0e3);
        let sys = SystemParams::new(
            CavityParams::new(omega_a, 0.5 * kappa, 0.5 * kappa).unwrap(),
            ModeParams::new(omega_a, kappa).unwrap(),
            hz_to_angular(5.83e6),
            vec![MechanicalMode::new(
                hz_to_angular(10.9485e6),
                hz_to_angular(150.0),
                hz_to_angular(1.25e-3),
            )
            .unwrap()],
        )
        .unwrap();
        let p = crate::model::diagonalize_polaritons(&sys.cavity, &sys.magnon, sys.g_ma);
        let kappa_plus = p.kappa_plus;
        let g_plus = 0.05 * kappa_plus;
        let omega_d = p.omega_plus - sys.mechanics[0].omega_b;
        let theta = p.theta;
        let ptoa = calibrate_power_to_amplitude(g_plus, sys.mechanics[0].g_mb, theta, 0.0);
        let drive = DriveParams::new(omega_d, 0.0, ptoa, 0.0).unwrap();
        let set = normal_modes(&sys, &drive, true);
        let phonon = set.most_phonon_like().unwrap();
        let got = -phonon.eigenvalue.im;
        let expect = effective_mechanical_damping(
            g_plus,
            kappa_plus,
            sys.mechanics[0].kappa_b,
            sys.mechanics[0].omega_b,
        )
        .unwrap();
        assert!(expect.within_validity);
        assert!(
            (got - expect.kappa_b_eff).abs() <= 0.02 * expect.kappa_b_eff,
            "eigenvalue decay {} vs formula {}",
            got,
            expect.kappa_b_eff
        );
    }
}
