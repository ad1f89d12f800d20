//! TOML configuration documents.
//!
//! A config has sections `[system]`, `[drive]`, `[probe]`, `[sweep]`,
//! `[fit]`. All keys carry unit suffixes (`_hz`, `_dbm`, `_t`); unknown
//! keys are rejected. Parsing is strict, and every diagnostic names the
//! offending key.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fitting::{FitModel, FitProblem, FreeParam, LossSpace};
use crate::model::{
    magnon_frequency_from_field, CavityParams, DriveParams, MechanicalMode, ModeParams,
    SystemParams,
};
use crate::response::{FrequencyGrid, Spectrum};
use crate::sweeps::{GridFrame, SweepOutputs, SweepSpec, SweptParameter};
use crate::{hz_to_angular, io::IoError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub system: SystemConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub omega_a_hz: f64,
    pub kappa_int_hz: f64,
    pub kappa_e_hz: f64,
    /// Magnon frequency; exactly one of `omega_m_hz` and `field_t`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_m_hz: Option<f64>,
    /// Bias field in tesla, converted via ω_m = γB₀.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_t: Option<f64>,
    pub kappa_m_hz: f64,
    pub g_ma_hz: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mechanics: Vec<MechanicalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalConfig {
    pub omega_b_hz: f64,
    pub kappa_b_hz: f64,
    pub g_mb_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub omega_d_hz: f64,
    pub power_dbm: f64,
    /// Steady-state magnon amplitude per √mW.
    pub power_to_amplitude: f64,
    /// Self-Kerr shift, Hz per unit |M|².
    #[serde(default)]
    pub kerr_coefficient_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
    /// "absolute" (default) or "drive_detuning".
    #[serde(default)]
    pub frame: GridFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// One of "kappa_e_hz", "omega_m_hz", "power_dbm".
    pub parameter: String,
    /// Values in the unit named by the parameter's suffix.
    pub values: Vec<f64>,
    /// "kappa_e" | "magnon_detuning" | "drive_power" | "anticrossing";
    /// derived from `parameter` when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_plus_overrides_hz: Option<Vec<f64>>,
    /// Subset of {"spectra","wtd","zeros","eigenvalues","splitting",
    /// "damping","cooperativity"}.
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub analysis_mode: usize,
    #[serde(default = "default_true")]
    pub rwa: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Path of the spectrum data file.
    pub data: String,
    /// "single_mode" | "two_mode" | "three_mode".
    pub model: String,
    #[serde(default)]
    pub mechanical_modes: usize,
    /// "magnitude_db" (default) | "complex".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,
    /// Free parameters keyed by Hz-suffixed name.
    pub free: BTreeMap<String, FreeParamConfig>,
    /// Fixed parameters keyed by Hz-suffixed name.
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParamConfig {
    pub init: f64,
    pub min: f64,
    pub max: f64,
}

/// Parse a config document; diagnostics name the offending key and
/// position.
pub fn parse_config(text: &str) -> Result<ConfigDocument, IoError> {
    let doc: ConfigDocument =
        toml::from_str(text).map_err(|e| IoError::ConfigParse(e.to_string()))?;
    validate(&doc)?;
    Ok(doc)
}

/// Serialize a document back to TOML (key-for-key with the parse).
pub fn serialize_config(doc: &ConfigDocument) -> String {
    toml::to_string(doc).expect("config serializes")
}

fn require_positive(name: &str, value: f64) -> Result<(), IoError> {
    if !(value > 0.0) {
        return Err(IoError::ConfigInvalid(format!(
            "{name} must be positive, got {value}"
        )));
    }
    Ok(())
}

fn require_non_negative(name: &str, value: f64) -> Result<(), IoError> {
    if !(value >= 0.0) {
        return Err(IoError::ConfigInvalid(format!(
            "{name} must be non-negative, got {value}"
        )));
    }
    Ok(())
}

fn validate(doc: &ConfigDocument) -> Result<(), IoError> {
    let sys = &doc.system;
    require_positive("system.omega_a_hz", sys.omega_a_hz)?;
    require_non_negative("system.kappa_int_hz", sys.kappa_int_hz)?;
    require_non_negative("system.kappa_e_hz", sys.kappa_e_hz)?;
    require_non_negative("system.kappa_m_hz", sys.kappa_m_hz)?;
    require_non_negative("system.g_ma_hz", sys.g_ma_hz)?;
    match (sys.omega_m_hz, sys.field_t) {
        (None, None) => {
            return Err(IoError::ConfigInvalid(
                "system needs omega_m_hz or field_t".into(),
            ))
        }
        (Some(_), Some(_)) => {
            return Err(IoError::ConfigInvalid(
                "system.omega_m_hz and system.field_t are mutually exclusive".into(),
            ))
        }
        (Some(f), None) => require_positive("system.omega_m_hz", f)?,
        (None, Some(b)) => require_positive("system.field_t", b)?,
    }
    for (i, m) in sys.mechanics.iter().enumerate() {
        require_positive(&format!("system.mechanics[{i}].omega_b_hz"), m.omega_b_hz)?;
        require_positive(&format!("system.mechanics[{i}].kappa_b_hz"), m.kappa_b_hz)?;
        require_non_negative(&format!("system.mechanics[{i}].g_mb_hz"), m.g_mb_hz)?;
    }
    if let Some(d) = &doc.drive {
        require_positive("drive.omega_d_hz", d.omega_d_hz)?;
        require_non_negative("drive.power_to_amplitude", d.power_to_amplitude)?;
    }
    if let Some(p) = &doc.probe {
        if !(p.start_hz < p.stop_hz) {
            return Err(IoError::ConfigInvalid(format!(
                "probe.start_hz ({}) must lie below probe.stop_hz ({})",
                p.start_hz, p.stop_hz
            )));
        }
        if p.points < 2 {
            return Err(IoError::ConfigInvalid(format!(
                "probe.points must be at least 2, got {}",
                p.points
            )));
        }
    }
    if let Some(s) = &doc.sweep {
        if !matches!(s.parameter.as_str(), "kappa_e_hz" | "omega_m_hz" | "power_dbm") {
            return Err(IoError::ConfigInvalid(format!(
                "sweep.parameter must be kappa_e_hz, omega_m_hz or power_dbm, got '{}'",
                s.parameter
            )));
        }
        if s.values.is_empty() {
            return Err(IoError::ConfigInvalid("sweep.values is empty".into()));
        }
        for out in &s.outputs {
            if !matches!(
                out.as_str(),
                "spectra" | "wtd" | "zeros" | "eigenvalues" | "splitting" | "damping"
                    | "cooperativity"
            ) {
                return Err(IoError::ConfigInvalid(format!(
                    "sweep.outputs contains unknown entry '{out}'"
                )));
            }
        }
        if let Some(kind) = &s.kind {
            if !matches!(
                kind.as_str(),
                "kappa_e" | "magnon_detuning" | "drive_power" | "anticrossing"
            ) {
                return Err(IoError::ConfigInvalid(format!(
                    "sweep.kind must be kappa_e, magnon_detuning, drive_power or anticrossing, got '{kind}'"
                )));
            }
        }
    }
    if let Some(f) = &doc.fit {
        if !matches!(f.model.as_str(), "single_mode" | "two_mode" | "three_mode") {
            return Err(IoError::ConfigInvalid(format!(
                "fit.model must be single_mode, two_mode or three_mode, got '{}'",
                f.model
            )));
        }
        if let Some(loss) = &f.loss {
            if !matches!(loss.as_str(), "magnitude_db" | "complex") {
                return Err(IoError::ConfigInvalid(format!(
                    "fit.loss must be magnitude_db or complex, got '{loss}'"
                )));
            }
        }
    }
    Ok(())
}

impl ConfigDocument {
    pub fn system_params(&self) -> Result<SystemParams, IoError> {
        let s = &self.system;
        let omega_m = match (s.omega_m_hz, s.field_t) {
            (Some(f), _) => hz_to_angular(f),
            (None, Some(b)) => magnon_frequency_from_field(b),
            (None, None) => unreachable!("validated"),
        };
        let cavity = CavityParams::new(
            hz_to_angular(s.omega_a_hz),
            hz_to_angular(s.kappa_int_hz),
            hz_to_angular(s.kappa_e_hz),
        )?;
        let magnon = ModeParams::new(omega_m, hz_to_angular(s.kappa_m_hz))?;
        let mechanics = s
            .mechanics
            .iter()
            .map(|m| {
                MechanicalMode::new(
                    hz_to_angular(m.omega_b_hz),
                    hz_to_angular(m.kappa_b_hz),
                    hz_to_angular(m.g_mb_hz),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SystemParams::new(
            cavity,
            magnon,
            hz_to_angular(s.g_ma_hz),
            mechanics,
        )?)
    }

    pub fn drive_params(&self) -> Result<Option<DriveParams>, IoError> {
        match &self.drive {
            None => Ok(None),
            Some(d) => Ok(Some(DriveParams::new(
                hz_to_angular(d.omega_d_hz),
                d.power_dbm,
                d.power_to_amplitude,
                hz_to_angular(d.kerr_coefficient_hz),
            )?)),
        }
    }

    pub fn frequency_grid(&self) -> Result<Option<FrequencyGrid>, IoError> {
        match &self.probe {
            None => Ok(None),
            Some(p) => Ok(Some(FrequencyGrid::new(
                hz_to_angular(p.start_hz),
                hz_to_angular(p.stop_hz),
                p.points,
            )?)),
        }
    }

    /// The effective sweep kind: explicit `kind` or derived from the
    /// swept parameter.
    pub fn sweep_kind(&self) -> Option<String> {
        let sweep = self.sweep.as_ref()?;
        Some(sweep.kind.clone().unwrap_or_else(|| {
            match sweep.parameter.as_str() {
                "kappa_e_hz" => "kappa_e",
                "omega_m_hz" => "magnon_detuning",
                _ => "drive_power",
            }
            .to_string()
        }))
    }

    pub fn sweep_spec(&self) -> Result<Option<SweepSpec>, IoError> {
        let Some(sweep) = &self.sweep else {
            return Ok(None);
        };
        let probe = self.probe.as_ref().ok_or_else(|| {
            IoError::ConfigInvalid("a [probe] section is required for sweeps".into())
        })?;
        let grid = self.frequency_grid()?.expect("probe present");
        let (parameter, values) = match sweep.parameter.as_str() {
            "kappa_e_hz" => (
                SweptParameter::KappaE,
                sweep.values.iter().map(|v| hz_to_angular(*v)).collect(),
            ),
            "omega_m_hz" => (
                SweptParameter::OmegaM,
                sweep.values.iter().map(|v| hz_to_angular(*v)).collect(),
            ),
            "power_dbm" => (SweptParameter::PowerDbm, sweep.values.clone()),
            _ => unreachable!("validated"),
        };
        let mut outputs = SweepOutputs {
            spectra: false,
            ..Default::default()
        };
        if sweep.outputs.is_empty() {
            outputs.spectra = true;
        }
        for out in &sweep.outputs {
            match out.as_str() {
                "spectra" => outputs.spectra = true,
                "wtd" => outputs.wtd = true,
                "zeros" => outputs.zeros = true,
                "eigenvalues" => outputs.eigenvalues = true,
                "splitting" => outputs.splitting = true,
                "damping" => outputs.damping = true,
                "cooperativity" => outputs.cooperativity = true,
                _ => unreachable!("validated"),
            }
        }
        Ok(Some(SweepSpec {
            system: self.system_params()?,
            drive: self.drive_params()?,
            parameter,
            values,
            grid,
            frame: probe.frame,
            outputs,
            kappa_plus_overrides: sweep
                .kappa_plus_overrides_hz
                .as_ref()
                .map(|v| v.iter().map(|k| hz_to_angular(*k)).collect()),
            analysis_mode: sweep.analysis_mode,
            rwa: sweep.rwa,
        }))
    }

    /// Build the fit problem for already-loaded data. Config keys carry
    /// the `_hz` suffix; internal parameter names drop it (values are
    /// converted to rad/s).
    pub fn fit_problem(&self, data: Spectrum) -> Result<FitProblem, IoError> {
        let fit = self
            .fit
            .as_ref()
            .ok_or_else(|| IoError::ConfigInvalid("missing [fit] section".into()))?;
        let model = match fit.model.as_str() {
            "single_mode" => FitModel::SingleMode,
            "two_mode" => FitModel::TwoMode,
            "three_mode" => FitModel::ThreeMode {
                mechanical_modes: fit.mechanical_modes.max(1),
            },
            _ => unreachable!("validated"),
        };
        let loss = match fit.loss.as_deref() {
            None | Some("magnitude_db") => LossSpace::MagnitudeDb,
            Some("complex") => LossSpace::ComplexLinear,
            _ => unreachable!("validated"),
        };
        let strip = |key: &str| -> Result<String, IoError> {
            key.strip_suffix("_hz").map(str::to_string).ok_or_else(|| {
                IoError::ConfigInvalid(format!(
                    "fit parameter '{key}' must carry the _hz unit suffix"
                ))
            })
        };
        let free = fit
            .free
            .iter()
            .map(|(key, f)| {
                Ok(FreeParam {
                    name: strip(key)?,
                    init: hz_to_angular(f.init),
                    lower: hz_to_angular(f.min),
                    upper: hz_to_angular(f.max),
                })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let fixed = fit
            .fixed
            .iter()
            .map(|(key, v)| Ok((strip(key)?, hz_to_angular(*v))))
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(FitProblem {
            data,
            model,
            free,
            fixed,
            loss,
            weights: None,
        })
    }
}
