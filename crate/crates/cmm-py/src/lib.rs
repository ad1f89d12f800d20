//! Python bindings: the main parameter types and operations of the
//! `cmm` simulator, with every frequency-like quantity in Hz on the
//! Python side (ω/2π convention) and complex reflection values mapping
//! to Python complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cmm::magnomech;
use cmm::model;
use cmm::response;
use cmm::{angular_to_hz, hz_to_angular};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// The two cavity-magnon polaritons (all rates in Hz).
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Polaritons {
    #[pyo3(get)]
    omega_plus_hz: f64,
    #[pyo3(get)]
    omega_minus_hz: f64,
    #[pyo3(get)]
    kappa_plus_hz: f64,
    #[pyo3(get)]
    kappa_minus_hz: f64,
    #[pyo3(get)]
    theta: f64,
}

#[pymethods]
impl Polaritons {
    fn __repr__(&self) -> String {
        format!(
            "Polaritons(omega_plus_hz={:.6e}, omega_minus_hz={:.6e}, kappa_plus_hz={:.6e}, kappa_minus_hz={:.6e}, theta={:.6})",
            self.omega_plus_hz,
            self.omega_minus_hz,
            self.kappa_plus_hz,
            self.kappa_minus_hz,
            self.theta
        )
    }
}

impl From<model::PolaritonPair> for Polaritons {
    fn from(p: model::PolaritonPair) -> Self {
        Self {
            omega_plus_hz: angular_to_hz(p.omega_plus),
            omega_minus_hz: angular_to_hz(p.omega_minus),
            kappa_plus_hz: angular_to_hz(p.kappa_plus),
            kappa_minus_hz: angular_to_hz(p.kappa_minus),
            theta: p.theta,
        }
    }
}

/// Magnon drive tone. `power_to_amplitude` is the steady-state magnon
/// amplitude per sqrt(mW); `kerr_coefficient_hz` shifts the magnon by
/// that many Hz per unit |M|^2.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Drive {
    inner: model::DriveParams,
}

#[pymethods]
impl Drive {
    #[new]
    #[pyo3(signature = (omega_d_hz, power_dbm, power_to_amplitude, kerr_coefficient_hz = 0.0))]
    fn new(
        omega_d_hz: f64,
        power_dbm: f64,
        power_to_amplitude: f64,
        kerr_coefficient_hz: f64,
    ) -> PyResult<Self> {
        let inner = model::DriveParams::new(
            hz_to_angular(omega_d_hz),
            power_dbm,
            power_to_amplitude,
            hz_to_angular(kerr_coefficient_hz),
        )
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn omega_d_hz(&self) -> f64 {
        angular_to_hz(self.inner.omega_d)
    }

    #[getter]
    fn power_dbm(&self) -> f64 {
        self.inner.power_dbm
    }

    /// Steady-state magnon amplitude |M| under this drive.
    fn magnon_amplitude(&self) -> f64 {
        model::steady_state_magnon_amplitude(&self.inner).norm()
    }
}

/// Cavity-magnon(-mechanics) system. Mechanical modes are
/// (omega_b_hz, kappa_b_hz, g_mb_hz) triples.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct System {
    inner: model::SystemParams,
}

#[pymethods]
impl System {
    #[new]
    #[pyo3(signature = (omega_a_hz, kappa_int_hz, kappa_e_hz, omega_m_hz, kappa_m_hz, g_ma_hz, mechanics = None))]
    fn new(
        omega_a_hz: f64,
        kappa_int_hz: f64,
        kappa_e_hz: f64,
        omega_m_hz: f64,
        kappa_m_hz: f64,
        g_ma_hz: f64,
        mechanics: Option<Vec<(f64, f64, f64)>>,
    ) -> PyResult<Self> {
        let cavity = model::CavityParams::new(
            hz_to_angular(omega_a_hz),
            hz_to_angular(kappa_int_hz),
            hz_to_angular(kappa_e_hz),
        )
        .map_err(value_err)?;
        let magnon = model::ModeParams::new(hz_to_angular(omega_m_hz), hz_to_angular(kappa_m_hz))
            .map_err(value_err)?;
        let mechanics = mechanics
            .unwrap_or_default()
            .into_iter()
            .map(|(wb, kb, g)| {
                model::MechanicalMode::new(hz_to_angular(wb), hz_to_angular(kb), hz_to_angular(g))
                    .map_err(value_err)
            })
            .collect::<PyResult<Vec<_>>>()?;
        let inner = model::SystemParams::new(cavity, magnon, hz_to_angular(g_ma_hz), mechanics)
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn omega_a_hz(&self) -> f64 {
        angular_to_hz(self.inner.cavity.omega_a)
    }

    #[getter]
    fn omega_m_hz(&self) -> f64 {
        angular_to_hz(self.inner.magnon.omega)
    }

    #[getter]
    fn kappa_a_hz(&self) -> f64 {
        angular_to_hz(self.inner.cavity.kappa_total())
    }

    fn with_kappa_e_hz(&self, kappa_e_hz: f64) -> Self {
        Self {
            inner: self.inner.with_kappa_e(hz_to_angular(kappa_e_hz)),
        }
    }

    fn with_omega_m_hz(&self, omega_m_hz: f64) -> Self {
        Self {
            inner: self.inner.with_omega_m(hz_to_angular(omega_m_hz)),
        }
    }

    /// Loss-picture polaritons.
    fn polaritons(&self) -> Polaritons {
        model::diagonalize_polaritons(&self.inner.cavity, &self.inner.magnon, self.inner.g_ma)
            .into()
    }

    /// Effective-gain polaritons: their complex frequencies are the
    /// reflection zeros; decay rates vanish at the gain-loss balance.
    fn effective_gain_polaritons(&self) -> Polaritons {
        response::effective_gain_polaritons(&self.inner).into()
    }

    /// Undriven reflection r(ω) at the requested probe frequencies.
    fn reflection(&self, freqs_hz: Vec<f64>) -> Vec<Complex64> {
        freqs_hz
            .into_iter()
            .map(|f| response::reflection_two_mode(&self.inner, hz_to_angular(f)))
            .collect()
    }

    /// Driven reflection with the mechanical sidebands included.
    #[pyo3(signature = (drive, freqs_hz, rwa = true))]
    fn reflection_driven(&self, drive: &Drive, freqs_hz: Vec<f64>, rwa: bool) -> Vec<Complex64> {
        freqs_hz
            .into_iter()
            .map(|f| {
                response::reflection_three_mode(&self.inner, &drive.inner, hz_to_angular(f), rwa)
            })
            .collect()
    }

    /// Complex Wigner delay per probe frequency (seconds); None marks
    /// the at-CPA divergence.
    fn wigner_time_delay(&self, freqs_hz: Vec<f64>) -> Vec<Option<Complex64>> {
        freqs_hz
            .into_iter()
            .map(|f| {
                response::wigner_time_delay_two_mode(&self.inner, hz_to_angular(f)).finite()
            })
            .collect()
    }

    /// Reflection zeros as (re_hz, im_hz, residual, converged) tuples.
    fn reflection_zeros(&self) -> Vec<(f64, f64, f64, bool)> {
        response::find_reflection_zeros(&self.inner, &response::default_search_box(&self.inner))
            .into_iter()
            .map(|z| {
                (
                    angular_to_hz(z.location.re),
                    angular_to_hz(z.location.im),
                    z.residual,
                    z.converged,
                )
            })
            .collect()
    }

    /// External coupling at the gain-loss balance, κ_int + κ_m (Hz).
    fn cpa_balance_hz(&self) -> f64 {
        angular_to_hz(response::cpa_balance(&self.inner))
    }

    /// Retune the magnon so the upper reflection zero has the requested
    /// decay (Hz; negative = net-gain side).
    fn tune_upper_zero_decay_hz(&self, target_hz: f64) -> PyResult<System> {
        let tuned = response::tune_upper_zero_decay(&self.inner, hz_to_angular(target_hz))
            .map_err(value_err)?;
        Ok(Self {
            inner: tuned.system,
        })
    }

    /// Hybrid normal modes under the drive as
    /// ((re_hz, kappa_hz), weights) pairs, sorted by frequency.
    #[pyo3(signature = (drive, rwa = true))]
    fn normal_modes(&self, drive: &Drive, rwa: bool) -> Vec<((f64, f64), Vec<f64>)> {
        magnomech::normal_modes(&self.inner, &drive.inner, rwa)
            .modes
            .into_iter()
            .map(|m| {
                (
                    (
                        angular_to_hz(m.eigenvalue.re),
                        angular_to_hz(-m.eigenvalue.im),
                    ),
                    m.weights,
                )
            })
            .collect()
    }
}

/// Mixing angle θ = ½ arctan(2g/(ω_a − ω_m)), continued through
/// resonance.
#[pyfunction]
fn mixing_angle(omega_a_hz: f64, omega_m_hz: f64, g_ma_hz: f64) -> f64 {
    model::mixing_angle(
        hz_to_angular(omega_a_hz),
        hz_to_angular(omega_m_hz),
        hz_to_angular(g_ma_hz),
    )
}

/// Magnon frequency (Hz) at bias field B0 (tesla): γ/2π = 28 GHz/T.
#[pyfunction]
fn magnon_frequency_from_field_hz(b0_tesla: f64) -> f64 {
    angular_to_hz(model::magnon_frequency_from_field(b0_tesla))
}

/// Polariton-mechanics cooperativity G+^2/(κ+ κ_b).
#[pyfunction]
fn cooperativity(g_plus_hz: f64, kappa_plus_hz: f64, kappa_b_hz: f64) -> PyResult<f64> {
    magnomech::cooperativity(
        hz_to_angular(g_plus_hz),
        hz_to_angular(kappa_plus_hz),
        hz_to_angular(kappa_b_hz),
    )
    .map_err(value_err)
}

/// Drive-enhanced mechanical damping (Hz) and whether the operating
/// point sits inside the weak-coupling validity domain.
#[pyfunction]
fn effective_mechanical_damping_hz(
    g_plus_hz: f64,
    kappa_plus_hz: f64,
    kappa_b_hz: f64,
    omega_b_hz: f64,
) -> PyResult<(f64, bool)> {
    let out = magnomech::effective_mechanical_damping(
        hz_to_angular(g_plus_hz),
        hz_to_angular(kappa_plus_hz),
        hz_to_angular(kappa_b_hz),
        hz_to_angular(omega_b_hz),
    )
    .map_err(value_err)?;
    Ok((angular_to_hz(out.kappa_b_eff), out.within_validity))
}

/// Coupling-regime label: "unresolved", "weak", "strong" or
/// "triple-strong".
#[pyfunction]
#[pyo3(signature = (g_plus_hz, kappa_plus_hz, kappa_b_hz, g_ma_hz, kappa_a_hz, kappa_m_hz, kappa_b_eff_hz = None))]
#[allow(clippy::too_many_arguments)]
fn classify_regime(
    g_plus_hz: f64,
    kappa_plus_hz: f64,
    kappa_b_hz: f64,
    g_ma_hz: f64,
    kappa_a_hz: f64,
    kappa_m_hz: f64,
    kappa_b_eff_hz: Option<f64>,
) -> String {
    let report = magnomech::classify_regime(&magnomech::RegimeInputs {
        g_plus: hz_to_angular(g_plus_hz),
        kappa_plus: hz_to_angular(kappa_plus_hz),
        kappa_b: hz_to_angular(kappa_b_hz),
        kappa_b_eff: kappa_b_eff_hz.map(hz_to_angular),
        g_ma: hz_to_angular(g_ma_hz),
        kappa_a: hz_to_angular(kappa_a_hz),
        kappa_m: hz_to_angular(kappa_m_hz),
    });
    match report.regime {
        magnomech::CouplingRegime::Unresolved => "unresolved",
        magnomech::CouplingRegime::Weak => "weak",
        magnomech::CouplingRegime::Strong => "strong",
        magnomech::CouplingRegime::TripleStrong => "triple-strong",
    }
    .to_string()
}

/// Dip splitting (Hz) of the two deepest local minima of a dB trace,
/// or None when fewer than two dips resolve.
#[pyfunction]
fn nms_splitting_hz(freqs_hz: Vec<f64>, db: Vec<f64>, lo_hz: f64, hi_hz: f64) -> PyResult<Option<f64>> {
    let freqs = freqs_hz.into_iter().map(hz_to_angular).collect();
    let spectrum = response::Spectrum::from_magnitude_db(freqs, db, response::Provenance::Measured)
        .map_err(value_err)?;
    Ok(
        match magnomech::nms_splitting(&spectrum, (hz_to_angular(lo_hz), hz_to_angular(hi_hz))) {
            magnomech::NmsSplitting::Resolved { splitting, .. } => Some(angular_to_hz(splitting)),
            magnomech::NmsSplitting::Unresolved => None,
        },
    )
}

#[pymodule]
fn cmm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<System>()?;
    m.add_class::<Drive>()?;
    m.add_class::<Polaritons>()?;
    m.add_function(wrap_pyfunction!(mixing_angle, m)?)?;
    m.add_function(wrap_pyfunction!(magnon_frequency_from_field_hz, m)?)?;
    m.add_function(wrap_pyfunction!(cooperativity, m)?)?;
    m.add_function(wrap_pyfunction!(effective_mechanical_damping_hz, m)?)?;
    m.add_function(wrap_pyfunction!(classify_regime, m)?)?;
    m.add_function(wrap_pyfunction!(nms_splitting_hz, m)?)?;
    Ok(())
}
