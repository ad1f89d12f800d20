//! Spectrum data files: delimited text with a frequency column in Hz
//! and either complex (re, im) columns or a single magnitude-dB column,
//! declared by the header line.
//!
//! Complex spectra round-trip losslessly (shortest exact decimal
//! representation); dB-only files load with the phase marked
//! unavailable.

use std::path::Path;

use num_complex::Complex64;

use crate::io::{csv_line, file_error, fmt_full, IoError};
use crate::response::{Provenance, Spectrum};
use crate::{angular_to_hz, hz_to_angular};

/// Write a spectrum: complex data as `freq_hz,re,im`, magnitude-only
/// data as `freq_hz,db`, with the provenance in a leading comment.
pub fn write_spectrum(spectrum: &Spectrum, path: &Path) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(match spectrum.provenance {
        Provenance::Model => "# provenance: model\n",
        Provenance::Measured => "# provenance: measured\n",
    });
    if spectrum.phase_valid {
        out.push_str("freq_hz,re,im\n");
        for (f, v) in spectrum.frequencies().iter().zip(spectrum.values()) {
            out.push_str(&csv_line(&[
                fmt_full(angular_to_hz(*f)),
                fmt_full(v.re),
                fmt_full(v.im),
            ]));
        }
    } else {
        out.push_str("freq_hz,db\n");
        for (f, db) in spectrum
            .frequencies()
            .iter()
            .zip(spectrum.magnitude_db())
        {
            out.push_str(&csv_line(&[fmt_full(angular_to_hz(*f)), fmt_full(db)]));
        }
    }
    std::fs::write(path, out).map_err(|e| file_error(path, e))
}

/// Read a spectrum file. The header decides the representation; the
/// frequency column must be strictly increasing, and parse errors carry
/// the offending row number.
pub fn read_spectrum(path: &Path) -> Result<Spectrum, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| file_error(path, e))?;
    let path_str = path.display().to_string();
    let fail = |line: usize, message: String| IoError::SpectrumParse {
        path: path_str.clone(),
        line,
        message,
    };

    let mut provenance = Provenance::Measured;
    let mut header: Option<(usize, Vec<String>)> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("provenance:") {
                provenance = match value.trim() {
                    "model" => Provenance::Model,
                    "measured" => Provenance::Measured,
                    other => {
                        return Err(fail(line_no, format!("unknown provenance '{other}'")))
                    }
                };
            }
            continue;
        }
        if header.is_none() {
            header = Some((
                line_no,
                line.split(',').map(|s| s.trim().to_string()).collect(),
            ));
            continue;
        }
        let cols = header.as_ref().unwrap().1.len();
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols {
            return Err(fail(
                line_no,
                format!("expected {cols} columns, found {}", fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(cols);
        for (i, field) in fields.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(line_no, format!("column {} is not a number: '{field}'", i + 1)))?;
            values.push(v);
        }
        rows.push((line_no, values));
    }

    let (header_line, header) = header.ok_or_else(|| fail(0, "missing header line".into()))?;
    let complex = match header
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["freq_hz", "re", "im"] => true,
        // Presentation CSVs append a derived dB column after re/im.
        ["freq_hz", "re", "im", "db"] => true,
        ["freq_hz", "db"] => false,
        other => {
            return Err(fail(
                header_line,
                format!(
                    "unsupported header '{}'; expected freq_hz,re,im or freq_hz,db",
                    other.join(",")
                ),
            ))
        }
    };

    let mut freqs = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    let mut db = Vec::with_capacity(rows.len());
    for (line_no, row) in &rows {
        let f = hz_to_angular(row[0]);
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(fail(
                    *line_no,
                    format!(
                        "frequency column must be strictly increasing ({} Hz after {} Hz)",
                        row[0],
                        angular_to_hz(prev)
                    ),
                ));
            }
        }
        freqs.push(f);
        if complex {
            values.push(Complex64::new(row[1], row[2]));
        } else {
            db.push(row[1]);
        }
    }

    let spectrum = if complex {
        Spectrum::new(freqs, values, provenance)?
    } else {
        Spectrum::from_magnitude_db(freqs, db, provenance)?
    };
    Ok(spectrum)
}
