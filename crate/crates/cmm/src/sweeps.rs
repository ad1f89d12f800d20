//! Declarative sweep runner: families of spectra and derived quantities
//! over external coupling, magnon detuning, or drive power, assembled
//! into reproducible records.
//!
//! Every record stores the fully resolved per-point operating
//! parameters, so any number in a sweep can be regenerated by a
//! standalone call into [`crate::response`] / [`crate::magnomech`].
//! Sweep points run in parallel; records keep spec order, and identical
//! specs produce identical results.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitting::{extract_linewidth, LinewidthEstimate};
use crate::magnomech::{find_dips, nms_splitting, normal_modes, Dip, NmsSplitting};
use crate::model::{
    effective_couplings, kerr_shifted_frequency, mixing_angle, steady_state_magnon_amplitude,
    DriveParams, SystemParams,
};
use crate::response::{
    compute_spectrum_three_mode, compute_spectrum_two_mode, default_search_box,
    effective_gain_polaritons, find_reflection_zeros, reflection_two_mode, tune_upper_zero_decay,
    ComplexZero, FrequencyGrid, ResponseError, Spectrum, TimeDelay,
    wigner_time_delay_trace_two_mode,
};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep parameter mismatch: this runner sweeps {expected}, spec says {got}")]
    ParameterMismatch { expected: &'static str, got: String },
    #[error("sweep value list is empty")]
    EmptyValues,
    #[error("kappa_plus_overrides length {got} does not match values length {expected}")]
    OverridesMismatch { expected: usize, got: usize },
    #[error("drive parameters required for this sweep")]
    DriveRequired,
    #[error("analysis mechanical mode index {index} out of range ({count} modes configured)")]
    BadMechanicalIndex { index: usize, count: usize },
    #[error(transparent)]
    Response(#[from] ResponseError),
}

/// Which base parameter the value list applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParameter {
    KappaE,
    OmegaM,
    PowerDbm,
}

impl SweptParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweptParameter::KappaE => "kappa_e",
            SweptParameter::OmegaM => "omega_m",
            SweptParameter::PowerDbm => "power_dbm",
        }
    }
}

/// How the probe grid is anchored: absolute frequencies, or detunings
/// δ = ω_p − ω_d that follow the (possibly retuned) drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridFrame {
    #[default]
    Absolute,
    DriveDetuning,
}

/// Which quantities each record should carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOutputs {
    pub spectra: bool,
    pub wtd: bool,
    pub zeros: bool,
    pub eigenvalues: bool,
    pub splitting: bool,
    pub damping: bool,
    pub cooperativity: bool,
}

impl Default for SweepOutputs {
    fn default() -> Self {
        Self {
            spectra: true,
            wtd: false,
            zeros: false,
            eigenvalues: false,
            splitting: false,
            damping: false,
            cooperativity: false,
        }
    }
}

/// A sweep specification: base configuration, the swept parameter and
/// its values, the probe grid, and the requested outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub system: SystemParams,
    pub drive: Option<DriveParams>,
    pub parameter: SweptParameter,
    /// Values in rad/s for kappa_e / omega_m, dBm for power.
    pub values: Vec<f64>,
    pub grid: FrequencyGrid,
    #[serde(default)]
    pub frame: GridFrame,
    #[serde(default)]
    pub outputs: SweepOutputs,
    /// Per-point targets for the upper-branch zero decay (rad/s): each
    /// point re-tunes the magnon so the zero hits the target and parks
    /// the drive so the anti-Stokes sideband sits on it. Mirrors
    /// row-to-row drift in measured power sweeps.
    #[serde(default)]
    pub kappa_plus_overrides: Option<Vec<f64>>,
    /// Mechanical mode used for sideband placement and NMS analysis.
    #[serde(default)]
    pub analysis_mode: usize,
    #[serde(default = "default_true")]
    pub rwa: bool,
}

fn default_true() -> bool {
    true
}

/// One sweep point: the resolved operating parameters and the requested
/// outputs.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub value: f64,
    pub system: SystemParams,
    pub drive: Option<DriveParams>,
    pub spectrum: Option<Spectrum>,
    pub wtd: Option<Vec<(f64, TimeDelay)>>,
    pub zeros: Option<Vec<ComplexZero>>,
    pub eigenvalues: Option<Vec<Complex64>>,
    pub dip_linewidths: Option<Vec<LinewidthEstimate>>,
    pub dips: Option<Vec<Dip>>,
    /// Decay of the upper-branch reflection zero (signed; negative =
    /// zero above the real axis).
    pub kappa_plus: Option<f64>,
    pub dip_depth_db: Option<f64>,
    pub splitting: Option<NmsSplitting>,
    pub g_plus: Option<f64>,
    pub kappa_b_eff: Option<f64>,
    pub cooperativity: Option<f64>,
    /// Real frequency of the upper-branch zero (rad/s).
    pub omega_upper_zero: Option<f64>,
}

impl SweepRecord {
    fn empty(value: f64, system: SystemParams, drive: Option<DriveParams>) -> Self {
        Self {
            value,
            system,
            drive,
            spectrum: None,
            wtd: None,
            zeros: None,
            eigenvalues: None,
            dip_linewidths: None,
            dips: None,
            kappa_plus: None,
            dip_depth_db: None,
            splitting: None,
            g_plus: None,
            kappa_b_eff: None,
            cooperativity: None,
            omega_upper_zero: None,
        }
    }
}

/// Sweep output bundle with provenance.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    /// FNV-1a hash of the canonical spec serialization.
    pub spec_digest: String,
    pub code_version: String,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn provenance(spec: &SweepSpec) -> (String, String) {
    let json = serde_json::to_string(spec).expect("sweep spec serializes");
    (
        format!("{:016x}", fnv1a64(json.as_bytes())),
        env!("CARGO_PKG_VERSION").to_string(),
    )
}

fn check_common(spec: &SweepSpec, expected: SweptParameter) -> Result<(), SweepError> {
    if spec.parameter != expected {
        return Err(SweepError::ParameterMismatch {
            expected: expected.name(),
            got: spec.parameter.name().to_string(),
        });
    }
    if spec.values.is_empty() {
        return Err(SweepError::EmptyValues);
    }
    if let Some(ov) = &spec.kappa_plus_overrides {
        if ov.len() != spec.values.len() {
            return Err(SweepError::OverridesMismatch {
                expected: spec.values.len(),
                got: ov.len(),
            });
        }
    }
    Ok(())
}

/// Family of undriven spectra over external coupling κ_e. The dip
/// linewidths (via [`extract_linewidth`]) reach their minimum near the
/// gain-loss balance κ_e = κ_int + κ_m.
pub fn sweep_kappa_e(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    check_common(spec, SweptParameter::KappaE)?;
    let records: Vec<SweepRecord> = spec
        .values
        .par_iter()
        .map(|&kappa_e| {
            let system = spec.system.with_kappa_e(kappa_e);
            let mut rec = SweepRecord::empty(kappa_e, system.clone(), None);
            let spectrum = compute_spectrum_two_mode(&system, &spec.grid);
            let gain = effective_gain_polaritons(&system);
            rec.kappa_plus = Some(gain.kappa_plus);
            rec.omega_upper_zero = Some(gain.omega_plus);
            // Each dip is measured on its own fine grid scaled to the
            // expected zero width, so the estimate does not depend on
            // the presentation grid's resolution.
            let widths: Vec<LinewidthEstimate> = [
                (gain.omega_minus, gain.kappa_minus),
                (gain.omega_plus, gain.kappa_plus),
            ]
            .iter()
            .filter_map(|&(w, k)| {
                let span = 10.0 * k.abs().max(2.0 * std::f64::consts::PI);
                let local = FrequencyGrid::new(w - span, w + span, 1201).ok()?;
                let fine = compute_spectrum_two_mode(&system, &local);
                extract_linewidth(&fine, w).ok()
            })
            .collect();
            if !widths.is_empty() {
                rec.dip_linewidths = Some(widths);
            }
            rec.dip_depth_db = spectrum
                .magnitude_db()
                .into_iter()
                .min_by(|a, b| a.partial_cmp(b).unwrap());
            if spec.outputs.zeros {
                rec.zeros = Some(find_reflection_zeros(&system, &default_search_box(&system)));
            }
            if spec.outputs.wtd {
                rec.wtd = Some(wigner_time_delay_trace_two_mode(&system, &spec.grid));
            }
            if spec.outputs.spectra {
                rec.spectrum = Some(spectrum);
            }
            rec
        })
        .collect();
    let (spec_digest, code_version) = provenance(spec);
    Ok(SweepResult {
        records,
        spec_digest,
        code_version,
    })
}

/// Family of undriven spectra and delay traces over magnon frequency at
/// fixed κ_e. Red-shifting the magnon from resonance narrows the upper
/// zero while widening the lower one (their decay sum is fixed).
pub fn sweep_magnon_detuning(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    check_common(spec, SweptParameter::OmegaM)?;
    let records: Vec<SweepRecord> = spec
        .values
        .par_iter()
        .map(|&omega_m| {
            let system = spec.system.with_omega_m(omega_m);
            let mut rec = SweepRecord::empty(omega_m, system.clone(), None);
            let gain = effective_gain_polaritons(&system);
            rec.kappa_plus = Some(gain.kappa_plus);
            rec.omega_upper_zero = Some(gain.omega_plus);
            rec.dip_depth_db = Some(
                20.0 * reflection_two_mode(&system, gain.omega_plus)
                    .norm()
                    .max(1e-300)
                    .log10(),
            );
            if spec.outputs.zeros {
                rec.zeros = Some(find_reflection_zeros(&system, &default_search_box(&system)));
            }
            if spec.outputs.wtd {
                rec.wtd = Some(wigner_time_delay_trace_two_mode(&system, &spec.grid));
            }
            if spec.outputs.spectra {
                rec.spectrum = Some(compute_spectrum_two_mode(&system, &spec.grid));
            }
            rec
        })
        .collect();
    let (spec_digest, code_version) = provenance(spec);
    Ok(SweepResult {
        records,
        spec_digest,
        code_version,
    })
}

fn analysis_mode_checked(spec: &SweepSpec) -> Result<usize, SweepError> {
    let count = spec.system.mechanics.len();
    if spec.analysis_mode >= count {
        return Err(SweepError::BadMechanicalIndex {
            index: spec.analysis_mode,
            count,
        });
    }
    Ok(spec.analysis_mode)
}

/// Driven spectra around the anti-Stokes sideband versus drive power,
/// with G₊(P), κ_b,eff(P), and the cooperativity per point.
///
/// With `kappa_plus_overrides` present, each point re-tunes the magnon
/// so the upper zero has the requested decay and parks the drive at
/// ω_d = Re(zero) − ω_b (sideband on the polariton); the Kerr
/// coefficient should be zero in that mode, since the targeting is done
/// on the undriven zero.
pub fn sweep_drive_power(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    check_common(spec, SweptParameter::PowerDbm)?;
    let base_drive = spec.drive.as_ref().ok_or(SweepError::DriveRequired)?;
    let mode = analysis_mode_checked(spec)?;
    let omega_b = spec.system.mechanics[mode].omega_b;
    let kappa_b = spec.system.mechanics[mode].kappa_b;
    let g_mb = spec.system.mechanics[mode].g_mb;

    // Resolve per-point operating states up front (serial: cheap).
    let mut points = Vec::with_capacity(spec.values.len());
    for (i, &power) in spec.values.iter().enumerate() {
        let (system, omega_d, kappa_plus) = match &spec.kappa_plus_overrides {
            Some(targets) => {
                let tuned = tune_upper_zero_decay(&spec.system, targets[i])?;
                let omega_d = tuned.zero.re - omega_b;
                (tuned.system, omega_d, -tuned.zero.im)
            }
            None => {
                let gain = effective_gain_polaritons(&spec.system);
                (spec.system.clone(), base_drive.omega_d, gain.kappa_plus)
            }
        };
        let drive = DriveParams {
            omega_d,
            power_dbm: power,
            power_to_amplitude: base_drive.power_to_amplitude,
            kerr_coefficient: base_drive.kerr_coefficient,
        };
        points.push((power, system, drive, kappa_plus));
    }

    let records: Vec<SweepRecord> = points
        .par_iter()
        .map(|(power, system, drive, kappa_plus)| {
            let mut rec = SweepRecord::empty(*power, system.clone(), Some(*drive));
            rec.kappa_plus = Some(*kappa_plus);
            let grid = match spec.frame {
                GridFrame::Absolute => spec.grid,
                GridFrame::DriveDetuning => spec.grid.shifted(drive.omega_d),
            };
            let spectrum = compute_spectrum_three_mode(system, drive, &grid, spec.rwa);

            let m = steady_state_magnon_amplitude(drive);
            let omega_m_eff =
                kerr_shifted_frequency(system.magnon.omega, drive.kerr_coefficient, m);
            let theta = mixing_angle(system.cavity.omega_a, omega_m_eff, system.g_ma);
            let (gp, _) = effective_couplings(g_mb, m, theta);
            let g_plus = gp.norm();
            rec.g_plus = Some(g_plus);

            if spec.outputs.splitting {
                let center = drive.omega_d + omega_b;
                let half = 0.5 * (grid.stop - grid.start);
                rec.splitting = Some(nms_splitting(&spectrum, (center - half, center + half)));
            }
            if (spec.outputs.damping || spec.outputs.cooperativity) && *kappa_plus > 0.0 {
                let c = g_plus * g_plus / (*kappa_plus * kappa_b);
                if spec.outputs.cooperativity {
                    rec.cooperativity = Some(c);
                }
                if spec.outputs.damping {
                    rec.kappa_b_eff = Some((1.0 + c) * kappa_b);
                }
            }
            if spec.outputs.eigenvalues {
                rec.eigenvalues =
                    Some(normal_modes(system, drive, spec.rwa).eigenvalues());
            }
            rec.dip_depth_db = spectrum
                .magnitude_db()
                .into_iter()
                .min_by(|a, b| a.partial_cmp(b).unwrap());
            if spec.outputs.spectra {
                rec.spectrum = Some(spectrum);
            }
            rec
        })
        .collect();
    let (spec_digest, code_version) = provenance(spec);
    Ok(SweepResult {
        records,
        spec_digest,
        code_version,
    })
}

/// Avoided crossing of the upper polariton and the mechanical sideband.
#[derive(Debug, Clone)]
pub struct AnticrossingResult {
    pub sweep: SweepResult,
    /// Smallest dip-trace separation over the power list (rad/s).
    pub min_separation: f64,
    /// Power at which the traces are closest.
    pub closest_power: f64,
    /// Power with the deepest reflection anywhere on the map (a hybrid
    /// zero grazing the real axis; sits near, not exactly at, the
    /// closest approach).
    pub crossing_power: f64,
    /// (upper-polariton frequency, cooperativity) per power.
    pub cooperativity_curve: Vec<(f64, f64)>,
}

/// Exact location and depth of a reflection minimum near `guess` by
/// golden-section search on the model |r| (the grid only seeds the
/// bracket, so sub-grid-width dips are measured faithfully).
fn refine_dip_on_model(
    system: &SystemParams,
    op: &crate::response::DrivenOperatingPoint,
    omega_d: f64,
    rwa: bool,
    guess: f64,
    half_bracket: f64,
) -> Dip {
    let eval = |w: f64| {
        crate::response::reflection_three_mode_at(system, op, w - omega_d, rwa)
            .norm()
            .max(1e-300)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = guess - half_bracket;
    let mut hi = guess + half_bracket;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..100 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    let omega = 0.5 * (lo + hi);
    Dip {
        omega,
        depth_db: 20.0 * eval(omega).log10(),
    }
}

/// 2D reflection map (drive power × probe frequency) across the
/// polariton–sideband crossing driven by the self-Kerr shift, with dip
/// traces, the minimum trace separation, and the cooperativity versus
/// polariton frequency.
pub fn anticrossing_map(spec: &SweepSpec) -> Result<AnticrossingResult, SweepError> {
    check_common(spec, SweptParameter::PowerDbm)?;
    let base_drive = spec.drive.as_ref().ok_or(SweepError::DriveRequired)?;
    let mode = analysis_mode_checked(spec)?;
    let kappa_b = spec.system.mechanics[mode].kappa_b;
    let g_mb = spec.system.mechanics[mode].g_mb;

    let records: Vec<SweepRecord> = spec
        .values
        .par_iter()
        .map(|&power| {
            let drive = DriveParams {
                power_dbm: power,
                ..*base_drive
            };
            let mut rec = SweepRecord::empty(power, spec.system.clone(), Some(drive));
            let grid = match spec.frame {
                GridFrame::Absolute => spec.grid,
                GridFrame::DriveDetuning => spec.grid.shifted(drive.omega_d),
            };
            let spectrum = compute_spectrum_three_mode(&spec.system, &drive, &grid, spec.rwa);

            // Undriven zero of the Kerr-shifted cavity-magnon pair: the
            // polariton branch that crosses the sideband.
            let m = steady_state_magnon_amplitude(&drive);
            let omega_m_eff =
                kerr_shifted_frequency(spec.system.magnon.omega, drive.kerr_coefficient, m);
            let shifted = spec.system.with_omega_m(omega_m_eff);
            let gain = effective_gain_polaritons(&shifted);
            rec.kappa_plus = Some(gain.kappa_plus);
            rec.omega_upper_zero = Some(gain.omega_plus);

            let theta = mixing_angle(spec.system.cavity.omega_a, omega_m_eff, spec.system.g_ma);
            let (gp, _) = effective_couplings(g_mb, m, theta);
            rec.g_plus = Some(gp.norm());
            if gain.kappa_plus > 0.0 {
                rec.cooperativity =
                    Some(gp.norm_sqr() / (gain.kappa_plus * kappa_b));
            }

            // Grid minima seed an exact model minimization: the narrow
            // hybrid dips are far below the grid resolution.
            let op = crate::response::DrivenOperatingPoint::new(&spec.system, &drive);
            let step = (grid.stop - grid.start) / (grid.points - 1) as f64;
            let mut dips: Vec<Dip> = find_dips(&spectrum, grid.start, grid.stop)
                .into_iter()
                .take(2)
                .map(|d| {
                    refine_dip_on_model(
                        &spec.system,
                        &op,
                        drive.omega_d,
                        spec.rwa,
                        d.omega,
                        1.5 * step,
                    )
                })
                .collect();
            dips.sort_by(|a, b| a.depth_db.partial_cmp(&b.depth_db).unwrap());
            rec.dip_depth_db = dips.first().map(|d| d.depth_db);
            rec.dips = Some(dips);
            if spec.outputs.eigenvalues {
                rec.eigenvalues = Some(normal_modes(&spec.system, &drive, spec.rwa).eigenvalues());
            }
            if spec.outputs.spectra {
                rec.spectrum = Some(spectrum);
            }
            rec
        })
        .collect();

    let mut min_separation = f64::INFINITY;
    let mut closest_power = spec.values[0];
    let mut deepest = f64::INFINITY;
    let mut crossing_power = spec.values[0];
    let mut cooperativity_curve = Vec::new();
    for rec in &records {
        if let Some(dips) = &rec.dips {
            if dips.len() == 2 {
                let sep = (dips[0].omega - dips[1].omega).abs();
                if sep < min_separation {
                    min_separation = sep;
                    closest_power = rec.value;
                }
            }
        }
        if let Some(depth) = rec.dip_depth_db {
            if depth < deepest {
                deepest = depth;
                crossing_power = rec.value;
            }
        }
        if let (Some(w), Some(c)) = (rec.omega_upper_zero, rec.cooperativity) {
            cooperativity_curve.push((w, c));
        }
    }

    let (spec_digest, code_version) = provenance(spec);
    Ok(AnticrossingResult {
        sweep: SweepResult {
            records,
            spec_digest,
            code_version,
        },
        min_separation,
        closest_power,
        crossing_power,
        cooperativity_curve,
    })
}
