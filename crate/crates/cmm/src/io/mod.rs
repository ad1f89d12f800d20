//! Configuration parsing, spectrum file I/O, and CSV emission.
//!
//! This is the unit boundary of the crate: every file format speaks
//! ordinary frequency (Hz, key suffix `_hz`), drive power in dBm
//! (`_dbm`), and magnetic field in tesla (`_t`); conversion to the
//! internal angular convention happens here and nowhere else.

pub mod config;
pub mod spectrum_file;

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("config: {0}")]
    ConfigInvalid(String),
    #[error("{path}:{line}: {message}")]
    SpectrumParse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Response(#[from] crate::response::ResponseError),
}

pub(crate) fn file_error(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Stable presentation formatting: 12 significant digits, always
/// byte-identical for identical values.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let formatted = format!("{x:.11e}");
    // Trim trailing zeros in the mantissa for compactness.
    match formatted.split_once('e') {
        Some((mantissa, exp)) => {
            let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
            format!("{mantissa}e{exp}")
        }
        None => formatted,
    }
}

/// Exact formatting: shortest decimal that round-trips to the same f64.
pub fn fmt_full(x: f64) -> String {
    format!("{x}")
}

/// Assemble a CSV line from already-formatted fields.
pub fn csv_line(fields: &[String]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{f}");
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting_is_stable() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1e0");
        assert_eq!(fmt_sig(-1.5e-3), "-1.5e-3");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        let x = 10.052400000123e9;
        assert_eq!(fmt_sig(x), fmt_sig(x));
        // 12 significant digits survive.
        let back: f64 = fmt_sig(x).parse().unwrap();
        assert!((back - x).abs() < 1.0);
    }

    #[test]
    fn full_formatting_round_trips() {
        for x in [1.0 / 3.0, 2.0 * std::f64::consts::PI * 10.0524e9, 1e-300] {
            let back: f64 = fmt_full(x).parse().unwrap();
            assert_eq!(back, x);
        }
    }
}
