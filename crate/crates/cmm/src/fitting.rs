//! Least-squares estimation of model parameters from reflection spectra:
//! a damped (Levenberg–Marquardt style) trust-region fitter with a
//! numerically differentiated Jacobian, plus a local linewidth
//! extractor for isolated reflection dips.
//!
//! The fitter is deterministic: identical inputs produce identical
//! estimates, and accepted steps never increase the loss.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::response::Spectrum;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("unknown parameter '{0}' for this model")]
    UnknownParameter(String),
    #[error("parameter '{0}' specified more than once")]
    DuplicateParameter(String),
    #[error("parameter '{0}' is neither free nor fixed")]
    MissingParameter(String),
    #[error("initial value {init} of '{name}' outside bounds [{lower}, {upper}]")]
    InitOutOfBounds {
        name: String,
        init: f64,
        lower: f64,
        upper: f64,
    },
    #[error("data grid has {got} points; at least {needed} (3 × free parameters) required")]
    TooFewPoints { needed: usize, got: usize },
    #[error("weights length {got} does not match data length {expected}")]
    WeightsMismatch { expected: usize, got: usize },
    #[error("no dip found near the requested center")]
    NoDipFound,
    #[error("dip too poorly resolved: only {0} points near the minimum")]
    InsufficientResolution(usize),
    #[error("dip is not locally convex around the minimum")]
    NotConvex,
}

/// Loss space of the fit: complex residuals per point, or residuals of
/// the magnitude in dB (the form in which reflection spectra are
/// usually recorded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossSpace {
    ComplexLinear,
    MagnitudeDb,
}

/// Reflection model being fitted.
///
/// Parameters, in order:
/// - single-mode: `omega_a, kappa_int, kappa_e`
/// - two-mode: the above plus `omega_m, kappa_m, g_ma`
/// - three-mode: the above plus `omega_d`, then per mechanical mode j
///   `omega_b_j, kappa_b_j, g_m_j`, where g_m is the drive-enhanced
///   magnon-phonon coupling √2·g_mb·|M| (the drive enters the fit only
///   through it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    SingleMode,
    TwoMode,
    ThreeMode { mechanical_modes: usize },
}

impl FitModel {
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["omega_a", "kappa_int", "kappa_e"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        match self {
            FitModel::SingleMode => {}
            FitModel::TwoMode | FitModel::ThreeMode { .. } => {
                names.extend(["omega_m", "kappa_m", "g_ma"].iter().map(|s| s.to_string()));
            }
        }
        if let FitModel::ThreeMode { mechanical_modes } = self {
            names.push("omega_d".to_string());
            for j in 0..*mechanical_modes {
                names.push(format!("omega_b_{j}"));
                names.push(format!("kappa_b_{j}"));
                names.push(format!("g_m_{j}"));
            }
        }
        names
    }

    /// Reflection at ω for a full ordered parameter vector.
    pub fn evaluate(&self, params: &[f64], omega: f64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let (omega_a, kappa_int, kappa_e) = (params[0], params[1], params[2]);
        let kappa_a = kappa_int + kappa_e;
        let chi_a = Complex64::new(kappa_a, omega_a - omega);
        let d = match self {
            FitModel::SingleMode => chi_a,
            FitModel::TwoMode => {
                let (omega_m, kappa_m, g_ma) = (params[3], params[4], params[5]);
                chi_a + g_ma * g_ma / Complex64::new(kappa_m, omega_m - omega)
            }
            FitModel::ThreeMode { mechanical_modes } => {
                let (omega_m, kappa_m, g_ma) = (params[3], params[4], params[5]);
                let omega_d = params[6];
                let delta = omega - omega_d;
                let mut w = Complex64::new(kappa_m, omega_m - omega);
                for j in 0..*mechanical_modes {
                    let omega_b = params[7 + 3 * j];
                    let kappa_b = params[8 + 3 * j];
                    let g_m = params[9 + 3 * j];
                    w += g_m * g_m / Complex64::new(kappa_b, omega_b - delta);
                }
                chi_a + g_ma * g_ma / w
            }
        };
        2.0 * kappa_e / d - 1.0 + 0.0 * i
    }
}

/// A free parameter with its initial value and box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub name: String,
    pub init: f64,
    pub lower: f64,
    pub upper: f64,
}

/// A complete fit specification.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub data: Spectrum,
    pub model: FitModel,
    pub free: Vec<FreeParam>,
    pub fixed: Vec<(String, f64)>,
    pub loss: LossSpace,
    /// Optional per-point weights (uniform when absent).
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    /// Stopped at the iteration cap; estimates are the best found.
    MaxIterations,
    /// Degenerate Jacobian; standard errors are infinite.
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimates: Vec<(String, f64)>,
    /// From the quadratic expansion of the loss at the optimum.
    pub std_errors: Vec<(String, f64)>,
    pub residual_norm: f64,
    pub status: FitStatus,
    pub iterations: usize,
}

impl FitResult {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.estimates
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

const MAX_ITERATIONS: usize = 400;
const MAX_INNER: usize = 40;
const FTOL: f64 = 1e-15;

struct LmOutcome {
    x: Vec<f64>,
    loss: f64,
    iterations: usize,
    status: FitStatus,
    jtj: Option<DMatrix<f64>>,
    residual_count: usize,
}

fn loss_of(res: &[f64]) -> f64 {
    res.iter().map(|r| r * r).sum()
}

fn jacobian(
    residuals: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    spans: &[f64],
    m: usize,
) -> DMatrix<f64> {
    let n = x.len();
    let mut j = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for col in 0..n {
        // Central differences with a relative step of 1e-6, floored by a
        // small fraction of the bound span for parameters near zero.
        let h = 1e-6 * x[col].abs().max(1e-3 * spans[col]).max(1e-300);
        xp[col] = x[col] + h;
        let rp = residuals(&xp);
        xp[col] = x[col] - h;
        let rm = residuals(&xp);
        xp[col] = x[col];
        for row in 0..m {
            j[(row, col)] = (rp[row] - rm[row]) / (2.0 * h);
        }
    }
    j
}

/// Damped least squares with box projection. Accepted steps strictly
/// decrease the loss.
fn levenberg_marquardt(
    residuals: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> LmOutcome {
    let n = x0.len();
    let spans: Vec<f64> = lower
        .iter()
        .zip(upper)
        .map(|(l, u)| (u - l).max(1e-300))
        .collect();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut res = residuals(&x);
    let m = res.len();
    let mut loss = loss_of(&res);
    if loss == 0.0 {
        // Already at the optimum: nothing to iterate.
        return LmOutcome {
            x,
            loss,
            iterations: 0,
            status: FitStatus::Converged,
            jtj: None,
            residual_count: m,
        };
    }

    let mut lambda = 1e-3;
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0;
    let mut last_jtj = None;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let j = jacobian(residuals, &x, &spans, m);
        let jtj = j.transpose() * &j;
        let r_vec = DVector::from_column_slice(&res);
        let grad = j.transpose() * &r_vec;
        last_jtj = Some(jtj.clone());

        // A zero diagonal marks a parameter with no effect on any
        // residual: degenerate Jacobian.
        if (0..n).any(|i| !jtj[(i, i)].is_finite() || jtj[(i, i)] == 0.0) {
            status = FitStatus::Singular;
            break;
        }

        let mut accepted = false;
        for _ in 0..MAX_INNER {
            // Marquardt scaling: damp along the curvature diagonal.
            let mut a = jtj.clone();
            for i in 0..n {
                let d = jtj[(i, i)];
                a[(i, i)] = d + lambda * d.max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut cand: Vec<f64> = (0..n).map(|i| x[i] + step[i]).collect();
            clamp(&mut cand);
            let cand_res = residuals(&cand);
            let cand_loss = loss_of(&cand_res);
            if cand_loss.is_finite() && cand_loss < loss {
                let improvement = (loss - cand_loss) / loss.max(1e-300);
                x = cand;
                res = cand_res;
                loss = cand_loss;
                lambda = (lambda * 0.1).max(1e-14);
                accepted = true;
                if improvement < FTOL || loss == 0.0 {
                    status = FitStatus::Converged;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e15 {
                break;
            }
        }
        if !accepted {
            // No downhill step exists at any damping: local optimum.
            status = FitStatus::Converged;
            break;
        }
        if status == FitStatus::Converged {
            break;
        }
    }

    LmOutcome {
        x,
        loss,
        iterations,
        status,
        jtj: last_jtj,
        residual_count: m,
    }
}

fn validate(problem: &FitProblem) -> Result<Vec<String>, FitError> {
    let names = problem.model.parameter_names();
    let mut seen = vec![false; names.len()];
    let mut mark = |name: &str| -> Result<(), FitError> {
        match names.iter().position(|n| n == name) {
            None => Err(FitError::UnknownParameter(name.to_string())),
            Some(i) if seen[i] => Err(FitError::DuplicateParameter(name.to_string())),
            Some(i) => {
                seen[i] = true;
                Ok(())
            }
        }
    };
    for f in &problem.free {
        mark(&f.name)?;
        if !(f.lower <= f.init && f.init <= f.upper) {
            return Err(FitError::InitOutOfBounds {
                name: f.name.clone(),
                init: f.init,
                lower: f.lower,
                upper: f.upper,
            });
        }
    }
    for (name, _) in &problem.fixed {
        mark(name)?;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(FitError::MissingParameter(names[i].clone()));
    }
    let needed = 3 * problem.free.len();
    if problem.data.len() < needed {
        return Err(FitError::TooFewPoints {
            needed,
            got: problem.data.len(),
        });
    }
    if let Some(w) = &problem.weights {
        if w.len() != problem.data.len() {
            return Err(FitError::WeightsMismatch {
                expected: problem.data.len(),
                got: w.len(),
            });
        }
    }
    Ok(names)
}

/// Minimize the selected loss over the free parameters.
///
/// Returns the best fit even when the iteration cap is hit (flagged in
/// `status`); a degenerate Jacobian yields status `Singular` with
/// infinite standard errors.
pub fn fit(problem: &FitProblem) -> Result<FitResult, FitError> {
    let names = validate(problem)?;
    let n_free = problem.free.len();
    let free_idx: Vec<usize> = problem
        .free
        .iter()
        .map(|f| names.iter().position(|n| *n == f.name).unwrap())
        .collect();

    let mut full = vec![0.0; names.len()];
    for (name, value) in &problem.fixed {
        full[names.iter().position(|n| n == name).unwrap()] = *value;
    }

    let freqs = problem.data.frequencies().to_vec();
    let data = problem.data.values().to_vec();
    let data_db: Vec<f64> = problem.data.magnitude_db();
    let weights = problem.weights.clone();
    let model = problem.model;
    let loss_space = problem.loss;
    let full_template = full.clone();
    let free_idx_c = free_idx.clone();

    let residuals = move |x: &[f64]| -> Vec<f64> {
        let mut p = full_template.clone();
        for (k, &idx) in free_idx_c.iter().enumerate() {
            p[idx] = x[k];
        }
        let mut out = Vec::with_capacity(match loss_space {
            LossSpace::ComplexLinear => 2 * freqs.len(),
            LossSpace::MagnitudeDb => freqs.len(),
        });
        for (i, &w) in freqs.iter().enumerate() {
            let m = model.evaluate(&p, w);
            let wt = weights.as_ref().map_or(1.0, |ws| ws[i]);
            match loss_space {
                LossSpace::ComplexLinear => {
                    let d = m - data[i];
                    out.push(wt * d.re);
                    out.push(wt * d.im);
                }
                LossSpace::MagnitudeDb => {
                    let mdb = 20.0 * m.norm().max(1e-300).log10();
                    out.push(wt * (mdb - data_db[i]));
                }
            }
        }
        out
    };

    let x0: Vec<f64> = problem.free.iter().map(|f| f.init).collect();
    let lower: Vec<f64> = problem.free.iter().map(|f| f.lower).collect();
    let upper: Vec<f64> = problem.free.iter().map(|f| f.upper).collect();
    let out = levenberg_marquardt(&residuals, &x0, &lower, &upper);

    // Standard errors from σ²(JᵀJ)⁻¹ at the optimum.
    let mut std_errors = vec![f64::INFINITY; n_free];
    if out.status != FitStatus::Singular {
        if let Some(jtj) = &out.jtj {
            let dof = out.residual_count.saturating_sub(n_free);
            if dof > 0 {
                if let Some(cov) = jtj.clone().lu().try_inverse() {
                    let sigma2 = out.loss / dof as f64;
                    for k in 0..n_free {
                        let v = sigma2 * cov[(k, k)];
                        std_errors[k] = if v >= 0.0 { v.sqrt() } else { f64::INFINITY };
                    }
                }
            }
        }
    }

    Ok(FitResult {
        estimates: problem
            .free
            .iter()
            .zip(&out.x)
            .map(|(f, v)| (f.name.clone(), *v))
            .collect(),
        std_errors: problem
            .free
            .iter()
            .zip(&std_errors)
            .map(|(f, e)| (f.name.clone(), *e))
            .collect(),
        residual_norm: out.loss.sqrt(),
        status: out.status,
        iterations: out.iterations,
    })
}

/// An isolated reflection dip characterized by its scattering zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthEstimate {
    /// Dip center (rad/s).
    pub center: f64,
    /// Half-linewidth κ (rad/s): the distance of the underlying
    /// scattering zero from the real axis, |r(center ± κ)| = √2·|r|_min.
    pub kappa: f64,
    /// Fitted dip floor, 20 log₁₀|r|_min.
    pub depth_db: f64,
}

/// Half-linewidth of an isolated dip near `center_guess`.
///
/// Locally an isolated scattering zero under a flat envelope gives
/// |r(ω)|² = a·((ω − c)² + κ²); the estimator least-squares fits that
/// parabola over the points within a factor 2 (in amplitude) of the
/// minimum and reads off c and κ. This is the decay rate quoted for
/// near-CPA polaritons and it obeys the delay reciprocity
/// Re τ(c) ≈ 1/κ.
///
/// The flat-envelope assumption needs the dip narrow against the
/// surrounding resonance: accurate to a few percent for dips deeper
/// than about −15 dB, overestimating for shallower ones.
pub fn extract_linewidth(
    spectrum: &Spectrum,
    center_guess: f64,
) -> Result<LinewidthEstimate, FitError> {
    let f = spectrum.frequencies();
    let p: Vec<f64> = spectrum.values().iter().map(|v| v.norm_sqr()).collect();
    let n = f.len();
    if n < 5 {
        return Err(FitError::InsufficientResolution(n));
    }
    // Nearest interior local minimum of |r|².
    let mut best: Option<usize> = None;
    for i in 1..n - 1 {
        if p[i] <= p[i - 1] && p[i] < p[i + 1] {
            let better = match best {
                None => true,
                Some(b) => (f[i] - center_guess).abs() < (f[b] - center_guess).abs(),
            };
            if better {
                best = Some(i);
            }
        }
    }
    let c_idx = best.ok_or(FitError::NoDipFound)?;
    let p_min = p[c_idx];

    // Window: contiguous points within |r| ≤ 2 |r|_min around the dip.
    let cutoff = 4.0 * p_min.max(1e-300);
    let mut lo = c_idx;
    while lo > 0 && p[lo - 1] <= cutoff {
        lo -= 1;
    }
    let mut hi = c_idx;
    while hi + 1 < n && p[hi + 1] <= cutoff {
        hi += 1;
    }
    let count = hi - lo + 1;
    if count < 5 {
        return Err(FitError::InsufficientResolution(count));
    }

    // Least-squares parabola in scaled coordinates u = (ω − ω_c)/w.
    let center0 = f[c_idx];
    let w = (f[hi] - f[lo]).max(1e-300);
    let mut s = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for k in lo..=hi {
        let u = (f[k] - center0) / w;
        let basis = [u * u, u, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                s[r][c] += basis[r] * basis[c];
            }
            b[r] += basis[r] * p[k];
        }
    }
    let m = DMatrix::from_fn(3, 3, |r, c| s[r][c]);
    let rhs = DVector::from_column_slice(&b);
    let sol = m.lu().solve(&rhs).ok_or(FitError::NotConvex)?;
    let (a2, a1, a0) = (sol[0], sol[1], sol[2]);
    if !(a2 > 0.0) {
        return Err(FitError::NotConvex);
    }
    let u_vertex = -a1 / (2.0 * a2);
    let min_val = (a0 - a1 * a1 / (4.0 * a2)).max(0.0);
    let center = center0 + w * u_vertex;
    let kappa = (min_val / a2).sqrt() * w;
    let depth_db = if min_val > 0.0 {
        10.0 * min_val.log10()
    } else {
        f64::NEG_INFINITY
    };
    Ok(LinewidthEstimate {
        center,
        kappa,
        depth_db,
    })
}
