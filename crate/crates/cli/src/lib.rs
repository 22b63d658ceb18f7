//! `spinpol` command-line driver.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 on runtime errors.
//! Diagnostics go to the error stream; data goes to files or stdout.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use spinpol_core::calibrate::{
    find_operating_point, fit_parameters, Dataset, FitProblem, FreeParam, TargetSpec, ZeemanMap,
};
use spinpol_core::ensemble::{spectrum_scan, Conditioning, SpectrumRecord};
use spinpol_core::io::{
    format_value, load_config, read_records_csv, read_spectrum_csv, write_records_to, write_table, OutputFormat,
    RunConfig, SPECTRUM_HEADER,
};
use spinpol_core::lindblad::{compare_with_linear, weak_drive_amplitude, HilbertConfig};
use spinpol_core::model::DriveField;
use spinpol_core::tomography::{extrapolate_conditional, fidelity, StokesVector};
use spinpol_core::{Basis, Error};

#[derive(Debug, Parser)]
#[command(name = "spinpol", version, about = "Spin-dependent polarisation response of a quantum-dot micropillar")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Six-basis intensities, Stokes vector and purity over a laser scan.
    Spectrum(ScanArgs),
    /// Output Stokes vector versus laser detuning.
    Trajectory(TrajectoryArgs),
    /// Recover the spin-up conditional spectrum from averaged and empty-cavity data.
    Extrapolate(ExtrapolateArgs),
    /// Least-squares fit of device parameters to measured spectra.
    Fit(ReportArgs),
    /// Search (ω_QD↑, ω_L) for the best fidelity to a target polarisation.
    FindOperatingPoint(OperatingPointArgs),
    /// Compare the linear model against the master-equation steady state.
    OracleCompare(OracleArgs),
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; `-` or absent (and no `output` in the config) writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    conditioning: Option<Conditioning>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Pull Stokes vectors with norm above one back onto the sphere.
    #[arg(long)]
    project_physical: bool,
}

#[derive(Debug, Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    scan: ScanArgs,
    /// Adds a fidelity column against this polarisation.
    #[arg(long)]
    target: Option<Basis>,
}

#[derive(Debug, Args)]
struct ExtrapolateArgs {
    #[arg(long)]
    avg: PathBuf,
    #[arg(long)]
    cav: PathBuf,
    #[arg(long)]
    p_up: f64,
    /// Needed for reduced-format inputs, to fill the detuning columns.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    project_physical: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OperatingPointArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the target polarisation of the config.
    #[arg(long)]
    target: Option<Basis>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Laser energy in μeV; overrides the config's oracle block.
    #[arg(long, allow_hyphen_values = true)]
    omega_laser: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Runs one invocation. `argv[0]` is the program name.
pub fn run_command<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    let result = match cli.command {
        Command::Spectrum(a) => spectrum(&a, stdout),
        Command::Trajectory(a) => trajectory(&a, stdout),
        Command::Extrapolate(a) => extrapolate(&a, stdout, stderr),
        Command::Fit(a) => fit(&a, stdout, stderr),
        Command::FindOperatingPoint(a) => operating_point(&a, stdout, stderr),
        Command::OracleCompare(a) => oracle_compare(&a, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            2
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            1
        }
    }
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) if p != Path::new("-") => fs::write(p, bytes).map_err(|source| Error::Io { path: p.to_path_buf(), source }.into()),
        _ => stdout.write_all(bytes).map_err(|e| Failure::Runtime(format!("stdout: {e}"))),
    }
}

fn output_path<'a>(flag: &'a Option<PathBuf>, cfg: Option<&'a RunConfig>) -> Option<&'a Path> {
    flag.as_deref().or_else(|| cfg.and_then(|c| c.output.as_deref()))
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn scan_records(args: &ScanArgs) -> Result<(RunConfig, Vec<SpectrumRecord>), Failure> {
    let cfg = load_config(&args.config)?;
    let scan = cfg
        .scan
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("{}: a `scan` block is required", args.config.display())))?;
    let device = cfg.device();
    let grid = scan.grid(&device)?;
    let occ = cfg.occupation.model()?;
    let conditioning = args.conditioning.unwrap_or(cfg.conditioning);
    let mut records = spectrum_scan(&device, &grid, &scan.input.jones(), &occ, &cfg.noise, conditioning)?;
    if args.project_physical || cfg.project_physical {
        for r in records.iter_mut() {
            *r = SpectrumRecord::from_sextet(r.omega_laser_ueV, device.omega_cav_v, device.omega_qd_up, &r.sextet(), true)?;
        }
    }
    Ok((cfg, records))
}

fn spectrum(args: &ScanArgs, stdout: &mut dyn Write) -> Outcome {
    let (cfg, records) = scan_records(args)?;
    let format = args.format.unwrap_or(cfg.format);
    let mut buf = Vec::new();
    write_records_to(&mut buf, &records, format).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(output_path(&args.out, Some(&cfg)), stdout, &buf)
}

fn trajectory(args: &TrajectoryArgs, stdout: &mut dyn Write) -> Outcome {
    let (cfg, records) = scan_records(&args.scan)?;
    let mut header = vec!["omega_laser_ueV", "det_cavV_ueV", "det_qd_up_ueV", "s_hv", "s_da", "s_rl", "purity"];
    let target = args.target.map(StokesVector::of);
    if target.is_some() {
        header.push("fidelity");
    }
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        let mut row = vec![r.omega_laser_ueV, r.det_cav_v_ueV, r.det_qd_up_ueV, r.s_hv, r.s_da, r.s_rl, r.purity];
        if let Some(t) = &target {
            row.push(fidelity(&r.stokes(), t)?);
        }
        rows.push(row);
    }
    let mut buf = Vec::new();
    write_table(&mut buf, &header, &rows).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(output_path(&args.scan.out, Some(&cfg)), stdout, &buf)
}

fn is_full_format(path: &Path) -> Result<bool, Failure> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(text.lines().next().map(|h| h.trim() == SPECTRUM_HEADER.join(",")).unwrap_or(false))
}

fn extrapolate(args: &ExtrapolateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    if !(args.p_up > 0.0 && args.p_up <= 1.0) {
        return Err(Failure::Usage(format!("--p-up must lie in (0, 1], got {}", args.p_up)));
    }
    let cfg = args.config.as_deref().map(load_config).transpose()?;
    let avg = read_spectrum_csv(&args.avg)?;
    let cav = read_spectrum_csv(&args.cav)?;
    if avg.len() != cav.len() || avg.iter().zip(&cav).any(|(a, c)| a.0 != c.0) {
        return Err(Failure::Runtime(format!(
            "{} and {} must share the same laser grid",
            args.avg.display(),
            args.cav.display()
        )));
    }
    // Detuning columns come from the config, or else from the averaged
    // file when it carries them.
    let (omega_cav_v, omega_qd_up) = match &cfg {
        Some(c) => {
            let d = c.device();
            (d.omega_cav_v, d.omega_qd_up)
        }
        None if is_full_format(&args.avg)? => {
            let full = read_records_csv(&args.avg)?;
            match full.first() {
                Some(r) => (r.omega_laser_ueV - r.det_cav_v_ueV, r.omega_laser_ueV - r.det_qd_up_ueV),
                None => (0.0, 0.0),
            }
        }
        None => {
            return Err(Failure::Usage(
                "reduced-format inputs carry no detunings; pass --config to supply the device energies".into(),
            ))
        }
    };
    let project = args.project_physical || cfg.as_ref().is_some_and(|c| c.project_physical);
    let mut records = Vec::with_capacity(avg.len());
    let mut negative = 0usize;
    for ((omega, a), (_, c)) in avg.iter().zip(&cav) {
        let up = extrapolate_conditional(a, c, args.p_up)?;
        negative += up.to_array().iter().filter(|x| **x < 0.0).count();
        records.push(SpectrumRecord::from_sextet(*omega, omega_cav_v, omega_qd_up, &up, project)?);
    }
    if negative > 0 {
        let _ = writeln!(stderr, "warning: {negative} extrapolated intensities are negative (raw output kept)");
    }
    let unphysical = records.iter().filter(|r| r.purity > 1.0).count();
    if unphysical > 0 {
        let _ = writeln!(stderr, "warning: {unphysical} rows have purity above 1 (use --project-physical to clamp)");
    }
    let format = args.format.or(cfg.as_ref().map(|c| c.format)).unwrap_or_default();
    let mut buf = Vec::new();
    write_records_to(&mut buf, &records, format).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(args.out.as_deref(), stdout, &buf)
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn fit(args: &ReportArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let cfg = load_config(&args.config)?;
    let fc = cfg
        .fit
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("{}: a `fit` block is required", args.config.display())))?;
    let base = base_dir(&args.config);
    let mut datasets = Vec::with_capacity(fc.datasets.len());
    for d in &fc.datasets {
        let path = base.join(&d.path);
        datasets.push(Dataset { conditioning: d.conditioning, jones_in: d.input.jones(), points: read_spectrum_csv(&path)? });
    }
    let free = fc.free.iter().map(|f| FreeParam { param: f.param, lo: f.lo, hi: f.hi }).collect();
    let mut problem = FitProblem::new(datasets, free, cfg.model_state()?);
    problem.weights = fc.weights;
    problem.quad_order = cfg.noise.quad_order;
    problem.max_evaluations = fc.max_evaluations;
    let result = fit_parameters(&problem)?;
    let _ = writeln!(
        stderr,
        "fit: objective {} -> {} after {} evaluations ({})",
        format_value(result.initial_objective),
        format_value(result.objective),
        result.evaluations,
        if result.converged { "converged" } else { "evaluation limit reached" }
    );
    emit(output_path(&args.out, None), stdout, &to_json(&result)?)
}

#[allow(non_snake_case)]
#[derive(serde::Serialize)]
struct OperatingPointReport {
    target: Basis,
    omega_qd_up_ueV: f64,
    omega_laser_ueV: f64,
    det_qd_up_ueV: f64,
    fidelity: f64,
    purity: f64,
    s_hv: f64,
    s_da: f64,
    s_rl: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    field_T: Option<f64>,
}

fn operating_point(args: &OperatingPointArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let cfg = load_config(&args.config)?;
    let tc = cfg
        .target
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("{}: a `target` block is required", args.config.display())))?;
    let device = cfg.device();
    let target = args.target.unwrap_or(tc.target);
    let mut spec = TargetSpec::new(
        StokesVector::of(target),
        tc.input.jones(),
        (tc.qd_range[0], tc.qd_range[1]),
        (tc.laser_detuning_range[0], tc.laser_detuning_range[1]),
        cfg.noise,
    );
    spec.grid = tc.grid;
    let op = find_operating_point(&device, &spec)?;
    let zeeman: Option<ZeemanMap> = cfg.zeeman;
    let report = OperatingPointReport {
        target,
        omega_qd_up_ueV: op.omega_qd_up,
        omega_laser_ueV: op.omega_laser,
        det_qd_up_ueV: op.omega_laser - op.omega_qd_up,
        fidelity: op.fidelity,
        purity: op.purity,
        s_hv: op.stokes.s_hv,
        s_da: op.stokes.s_da,
        s_rl: op.stokes.s_rl,
        field_T: zeeman.and_then(|z| z.field_at(op.omega_qd_up)),
    };
    let _ = writeln!(stderr, "operating point: F = {:.6}, purity = {:.6}", op.fidelity, op.purity);
    emit(output_path(&args.out, None), stdout, &to_json(&report)?)
}

fn oracle_compare(args: &OracleArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let cfg = load_config(&args.config)?;
    let device = cfg.device();
    let block = cfg.oracle.clone();
    let omega_laser = match (args.omega_laser, &block) {
        (Some(w), _) => w,
        (None, Some(b)) => b.omega_laser,
        (None, None) => {
            return Err(Failure::Usage("give --omega-laser or an `oracle` block in the config".into()));
        }
    };
    if !omega_laser.is_finite() {
        return Err(Failure::Usage("--omega-laser must be finite".into()));
    }
    let ground = block.as_ref().map(|b| b.ground).unwrap_or(spinpol_core::GroundState::Up);
    let input = block.as_ref().map(|b| b.input).unwrap_or(Basis::V);
    let hilbert = HilbertConfig::with_cutoff(block.as_ref().map(|b| b.fock_cutoff).unwrap_or(2));
    let drive = DriveField::new(omega_laser, input.jones())?;
    let amplitude = match block.as_ref().and_then(|b| b.drive_amplitude) {
        Some(a) => a,
        None => weak_drive_amplitude(&device, &drive, ground, &hilbert)?,
    };
    let report = compare_with_linear(&device, &drive, ground, amplitude, &hilbert)?;
    let _ = writeln!(
        stderr,
        "oracle: max |dS| = {:.3e}, excited population = {:.3e}, top Fock = {:.3e}{}",
        report.max_stokes_diff,
        report.excited_population,
        report.top_fock_population,
        if report.cutoff_insufficient { " (cutoff insufficient)" } else { "" }
    );
    emit(output_path(&args.out, None), stdout, &to_json(&report)?)
}
