//! Command-line interface: model spectra, reflection zeros, Wigner
//! delay, hybrid modes, spectrum fitting, parameter sweeps, and the
//! bundled figure datasets.
//!
//! Exit codes: 0 on success, 1 on usage/configuration errors, 2 on
//! numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmm::io::config::{parse_config, ConfigDocument};
use cmm::io::spectrum_file::{read_spectrum, write_spectrum};
use cmm::io::{csv_line, fmt_full, fmt_sig, IoError};
use cmm::magnomech::normal_modes;
use cmm::model::{DriveParams, SystemParams};
use cmm::response::{
    compute_spectrum_three_mode, compute_spectrum_two_mode, default_search_box,
    find_reflection_zeros, wigner_time_delay_spectrum, wigner_time_delay_three_mode,
    wigner_time_delay_two_mode, FrequencyGrid, TimeDelay,
};
use cmm::sweeps::{
    anticrossing_map, sweep_drive_power, sweep_kappa_e, sweep_magnon_detuning, GridFrame,
    SweepResult,
};
use cmm::{angular_to_hz, fitting};

#[derive(Parser)]
#[command(
    name = "cmm",
    version,
    about = "Coupled-mode simulator for driven cavity magnomechanics",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reflection spectrum r(ω) over the probe grid, as CSV.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Output path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Include the drive and mechanical sidebands.
        #[arg(long)]
        three_mode: bool,
        /// Keep the counter-rotating sideband term.
        #[arg(long)]
        no_rwa: bool,
    },
    /// Complex zeros of the reflection (CPA candidates).
    Zeros {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Wigner time delay over the probe grid (model) or from a measured
    /// complex spectrum file.
    Wtd {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Complex spectrum file to differentiate instead of the model.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        three_mode: bool,
        #[arg(long)]
        no_rwa: bool,
    },
    /// Hybrid normal modes of the driven system.
    Modes {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        no_rwa: bool,
    },
    /// Least-squares fit of a model to a spectrum file.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Write the machine-readable report (JSON) here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the sweep described by the config into a bundle directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Regenerate the bundled reference datasets
    /// (fig2a|fig2b|fig2c|fig3b|fig4|all).
    Figures {
        set: String,
        #[arg(long, default_value = "figures")]
        outdir: PathBuf,
    },
}

/// Failures that are the user's input (exit 1) versus the model's
/// numerics (exit 2).
enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<cmm::response::ResponseError> for CliError {
    fn from(e: cmm::response::ResponseError) -> Self {
        match e {
            // Contract violations of the input data, not of the model.
            cmm::response::ResponseError::PhaseRequired => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<cmm::sweeps::SweepError> for CliError {
    fn from(e: cmm::sweeps::SweepError) -> Self {
        match e {
            cmm::sweeps::SweepError::Response(r) => CliError::Numerical(r.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<cmm::fitting::FitError> for CliError {
    fn from(e: cmm::fitting::FitError) -> Self {
        match e {
            fitting::FitError::NoDipFound
            | fitting::FitError::InsufficientResolution(_)
            | fitting::FitError::NotConvex => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<cmm::figures::FigureError> for CliError {
    fn from(e: cmm::figures::FigureError) -> Self {
        match e {
            cmm::figures::FigureError::Response(r) => CliError::Numerical(r.to_string()),
            cmm::figures::FigureError::Sweep(cmm::sweeps::SweepError::Response(r)) => {
                CliError::Numerical(r.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<ConfigDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn required_grid(doc: &ConfigDocument) -> Result<FrequencyGrid, CliError> {
    doc.frequency_grid()?
        .ok_or_else(|| CliError::Usage("config needs a [probe] section".into()))
}

fn required_drive(doc: &ConfigDocument) -> Result<DriveParams, CliError> {
    doc.drive_params()?
        .ok_or_else(|| CliError::Usage("config needs a [drive] section".into()))
}

fn emit(output: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, contents)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn absolute_grid(
    doc: &ConfigDocument,
    drive: Option<&DriveParams>,
) -> Result<FrequencyGrid, CliError> {
    let grid = required_grid(doc)?;
    let frame = doc.probe.as_ref().map(|p| p.frame).unwrap_or_default();
    match frame {
        GridFrame::Absolute => Ok(grid),
        GridFrame::DriveDetuning => {
            let drive = drive.ok_or_else(|| {
                CliError::Usage("drive_detuning probe frame needs a [drive] section".into())
            })?;
            Ok(grid.shifted(drive.omega_d))
        }
    }
}

fn run_spectrum(
    config: &Path,
    output: Option<&Path>,
    three_mode: bool,
    no_rwa: bool,
) -> Result<(), CliError> {
    let doc = load_config(config)?;
    let system: SystemParams = doc.system_params()?;
    let spectrum = if three_mode {
        let drive = required_drive(&doc)?;
        let grid = absolute_grid(&doc, Some(&drive))?;
        compute_spectrum_three_mode(&system, &drive, &grid, !no_rwa)
    } else {
        let grid = absolute_grid(&doc, None)?;
        compute_spectrum_two_mode(&system, &grid)
    };
    let mut out = String::from("freq_hz,re,im,db\n");
    for ((f, v), db) in spectrum
        .frequencies()
        .iter()
        .zip(spectrum.values())
        .zip(spectrum.magnitude_db())
    {
        out.push_str(&csv_line(&[
            fmt_full(angular_to_hz(*f)),
            fmt_full(v.re),
            fmt_full(v.im),
            fmt_sig(db),
        ]));
    }
    emit(output, &out)
}

fn zeros_csv(zeros: &[cmm::response::ComplexZero]) -> String {
    let mut out = String::from("re_hz,im_hz,residual,converged,iterations\n");
    for z in zeros {
        out.push_str(&csv_line(&[
            fmt_sig(angular_to_hz(z.location.re)),
            fmt_sig(angular_to_hz(z.location.im)),
            fmt_sig(z.residual),
            (z.converged as u8).to_string(),
            z.iterations.to_string(),
        ]));
    }
    out
}

fn run_zeros(config: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let doc = load_config(config)?;
    let system = doc.system_params()?;
    let zeros = find_reflection_zeros(&system, &default_search_box(&system));
    emit(output, &zeros_csv(&zeros))?;
    if zeros.iter().any(|z| !z.converged) {
        return Err(CliError::Numerical(
            "zero finding did not converge for every candidate".into(),
        ));
    }
    Ok(())
}

fn delay_csv(trace: &[(f64, TimeDelay)]) -> String {
    let mut out = String::from("freq_hz,re_tau_s,im_tau_s,at_cpa\n");
    for (f, tau) in trace {
        let (re, im, flag) = match tau.finite() {
            Some(t) => (fmt_sig(t.re), fmt_sig(t.im), "0"),
            None => ("nan".into(), "nan".into(), "1"),
        };
        out.push_str(&csv_line(&[
            fmt_sig(angular_to_hz(*f)),
            re,
            im,
            flag.to_string(),
        ]));
    }
    out
}

fn run_wtd(
    config: Option<&Path>,
    data: Option<&Path>,
    output: Option<&Path>,
    three_mode: bool,
    no_rwa: bool,
) -> Result<(), CliError> {
    let trace: Vec<(f64, TimeDelay)> = match (config, data) {
        (_, Some(path)) => {
            let spectrum = read_spectrum(path)?;
            wigner_time_delay_spectrum(&spectrum)?
        }
        (Some(path), None) => {
            let doc = load_config(path)?;
            let system = doc.system_params()?;
            if three_mode {
                let drive = required_drive(&doc)?;
                let grid = absolute_grid(&doc, Some(&drive))?;
                grid.frequencies()
                    .into_iter()
                    .map(|w| (w, wigner_time_delay_three_mode(&system, &drive, w, !no_rwa)))
                    .collect()
            } else {
                let grid = absolute_grid(&doc, None)?;
                grid.frequencies()
                    .into_iter()
                    .map(|w| (w, wigner_time_delay_two_mode(&system, w)))
                    .collect()
            }
        }
        (None, None) => {
            return Err(CliError::Usage(
                "wtd needs --config (model) or --data (measured spectrum)".into(),
            ))
        }
    };
    emit(output, &delay_csv(&trace))
}

fn run_modes(config: &Path, output: Option<&Path>, no_rwa: bool) -> Result<(), CliError> {
    let doc = load_config(config)?;
    let system = doc.system_params()?;
    let drive = required_drive(&doc)?;
    let set = normal_modes(&system, &drive, !no_rwa);
    let mut out = String::from("re_hz,kappa_hz,weight_cavity,weight_magnon,weight_phonons\n");
    for mode in &set.modes {
        let phonon: f64 = mode.weights.iter().skip(2).sum();
        out.push_str(&csv_line(&[
            fmt_sig(angular_to_hz(mode.eigenvalue.re)),
            fmt_sig(angular_to_hz(-mode.eigenvalue.im)),
            fmt_sig(mode.weights[0]),
            fmt_sig(mode.weights[1]),
            fmt_sig(phonon),
        ]));
    }
    emit(output, &out)
}

fn run_fit(config: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let doc = load_config(config)?;
    let fit_cfg = doc
        .fit
        .as_ref()
        .ok_or_else(|| CliError::Usage("config needs a [fit] section".into()))?;
    let data_path = config
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&fit_cfg.data);
    let data = read_spectrum(&data_path)?;
    let problem = doc.fit_problem(data)?;
    let result = fitting::fit(&problem)?;

    println!("status: {:?}", result.status);
    println!("iterations: {}", result.iterations);
    println!("residual_norm: {}", fmt_sig(result.residual_norm));
    for ((name, value), (_, err)) in result.estimates.iter().zip(&result.std_errors) {
        println!(
            "{name}_hz = {} +- {}",
            fmt_sig(angular_to_hz(*value)),
            fmt_sig(angular_to_hz(*err))
        );
    }
    if let Some(path) = output {
        let report = serde_json::json!({
            "status": result.status,
            "iterations": result.iterations,
            "residual_norm": result.residual_norm,
            "estimates_hz": result
                .estimates
                .iter()
                .map(|(n, v)| (n.clone(), angular_to_hz(*v)))
                .collect::<std::collections::BTreeMap<_, _>>(),
            "std_errors_hz": result
                .std_errors
                .iter()
                .map(|(n, v)| (n.clone(), angular_to_hz(*v)))
                .collect::<std::collections::BTreeMap<_, _>>(),
        });
        write_text(path, &serde_json::to_string_pretty(&report).unwrap())?;
    }
    if result.status == fitting::FitStatus::Singular {
        return Err(CliError::Numerical("fit Jacobian is singular".into()));
    }
    Ok(())
}

fn write_sweep_bundle(
    result: &SweepResult,
    value_label: &str,
    outdir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(outdir)
        .map_err(|e| CliError::Usage(format!("{}: {e}", outdir.display())))?;
    let mut summary = format!(
        "# spec_digest: {}\n# code_version: {}\n",
        result.spec_digest, result.code_version
    );
    summary.push_str(&format!(
        "index,{value_label},kappa_plus_hz,dip_depth_db,g_plus_hz,splitting_hz,kappa_b_eff_hz,cooperativity\n",
    ));
    for (i, rec) in result.records.iter().enumerate() {
        let opt_hz = |v: Option<f64>| v.map_or("nan".into(), |x| fmt_sig(angular_to_hz(x)));
        let opt_raw = |v: Option<f64>| v.map_or("nan".into(), fmt_sig);
        let value = if value_label.ends_with("_hz") {
            fmt_sig(angular_to_hz(rec.value))
        } else {
            fmt_sig(rec.value)
        };
        summary.push_str(&csv_line(&[
            i.to_string(),
            value,
            opt_hz(rec.kappa_plus),
            opt_raw(rec.dip_depth_db),
            opt_hz(rec.g_plus),
            opt_hz(rec.splitting.and_then(|s| s.splitting())),
            opt_hz(rec.kappa_b_eff),
            opt_raw(rec.cooperativity),
        ]));
        if let Some(spectrum) = &rec.spectrum {
            write_spectrum(spectrum, &outdir.join(format!("spectrum_{i:03}.csv")))?;
        }
        if let Some(wtd) = &rec.wtd {
            write_text(&outdir.join(format!("wtd_{i:03}.csv")), &delay_csv(wtd))?;
        }
        if let Some(zeros) = &rec.zeros {
            write_text(&outdir.join(format!("zeros_{i:03}.csv")), &zeros_csv(zeros))?;
        }
        if let Some(eigen) = &rec.eigenvalues {
            let mut out = String::from("re_hz,kappa_hz\n");
            for l in eigen {
                out.push_str(&csv_line(&[
                    fmt_sig(angular_to_hz(l.re)),
                    fmt_sig(angular_to_hz(-l.im)),
                ]));
            }
            write_text(&outdir.join(format!("modes_{i:03}.csv")), &out)?;
        }
    }
    write_text(&outdir.join("summary.csv"), &summary)
}

fn run_sweep(config: &Path, outdir: &Path) -> Result<(), CliError> {
    let doc = load_config(config)?;
    let kind = doc
        .sweep_kind()
        .ok_or_else(|| CliError::Usage("config needs a [sweep] section".into()))?;
    let spec = doc.sweep_spec()?.expect("sweep section present");
    let result = match kind.as_str() {
        "kappa_e" => sweep_kappa_e(&spec)?,
        "magnon_detuning" => sweep_magnon_detuning(&spec)?,
        "drive_power" => sweep_drive_power(&spec)?,
        "anticrossing" => {
            let out = anticrossing_map(&spec)?;
            std::fs::create_dir_all(outdir)
                .map_err(|e| CliError::Usage(format!("{}: {e}", outdir.display())))?;
            let mut extra =
                String::from("min_separation_hz,closest_power_dbm,crossing_power_dbm\n");
            extra.push_str(&csv_line(&[
                fmt_sig(angular_to_hz(out.min_separation)),
                fmt_sig(out.closest_power),
                fmt_sig(out.crossing_power),
            ]));
            write_text(&outdir.join("anticrossing.csv"), &extra)?;
            out.sweep
        }
        _ => unreachable!("validated"),
    };
    let value_label = match spec.parameter {
        cmm::sweeps::SweptParameter::KappaE => "kappa_e_hz",
        cmm::sweeps::SweptParameter::OmegaM => "omega_m_hz",
        cmm::sweeps::SweptParameter::PowerDbm => "power_dbm",
    };
    write_sweep_bundle(&result, value_label, outdir)
}

fn run_figures(set: &str, outdir: &Path) -> Result<(), CliError> {
    let files = match set {
        "fig2a" => cmm::figures::fig2a(outdir)?,
        "fig2b" => cmm::figures::fig2b(outdir)?,
        "fig2c" => cmm::figures::fig2c(outdir)?,
        "fig3b" => cmm::figures::fig3b(outdir)?,
        "fig4" => cmm::figures::fig4(outdir)?,
        "all" => cmm::figures::all(outdir)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown figure set '{other}' (expected fig2a, fig2b, fig2c, fig3b, fig4 or all)"
            )))
        }
    };
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum {
            config,
            output,
            three_mode,
            no_rwa,
        } => run_spectrum(&config, output.as_deref(), three_mode, no_rwa),
        Command::Zeros { config, output } => run_zeros(&config, output.as_deref()),
        Command::Wtd {
            config,
            data,
            output,
            three_mode,
            no_rwa,
        } => run_wtd(
            config.as_deref(),
            data.as_deref(),
            output.as_deref(),
            three_mode,
            no_rwa,
        ),
        Command::Modes {
            config,
            output,
            no_rwa,
        } => run_modes(&config, output.as_deref(), no_rwa),
        Command::Fit { config, output } => run_fit(&config, output.as_deref()),
        Command::Sweep { config, outdir } => run_sweep(&config, &outdir),
        Command::Figures { set, outdir } => run_figures(&set, &outdir),
    }
}

fn main() -> ExitCode {
    // Parallelism degree for spectrum grids; defaults to the hardware
    // concurrency when unset.
    if let Ok(threads) = std::env::var("CMM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
