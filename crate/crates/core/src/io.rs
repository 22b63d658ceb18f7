//! Run configuration and spectrum file formats.
//!
//! Configurations are single JSON documents. Spectra are written as CSV
//! (fixed header, 17 significant digits, `\n` line endings) or JSON lines
//! with the same field names. Energies are μeV relative to ω_cav,V unless
//! the configuration declares an absolute reference.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::{FitParam, ModelState, ZeemanMap};
use crate::ensemble::{Conditioning, NoiseModel, OccupationModel, SpectrumRecord};
use crate::error::{Error, Result};
use crate::params::{DeviceParams, GroundState};
use crate::polarisation::Basis;
use crate::tomography::IntensitySextet;

pub const SPECTRUM_HEADER: [&str; 14] = [
    "omega_laser_ueV",
    "det_cavV_ueV",
    "det_qd_up_ueV",
    "i_h",
    "i_v",
    "i_d",
    "i_a",
    "i_r",
    "i_l",
    "total",
    "s_hv",
    "s_da",
    "s_rl",
    "purity",
];

/// Reduced measured-data header: laser energy and the six intensities.
pub const MEASURED_HEADER: [&str; 7] = ["omega_laser_ueV", "i_h", "i_v", "i_d", "i_a", "i_r", "i_l"];

const MAX_SCAN_POINTS: usize = 10_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanReference {
    /// Laser energies are given relative to ω_cav,V.
    #[default]
    CavV,
    /// Laser energies are detunings from ω_QD↑.
    QdUp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    #[serde(default)]
    pub reference: ScanReference,
    #[serde(default = "default_input")]
    pub input: Basis,
}

fn default_input() -> Basis {
    Basis::V
}

impl ScanConfig {
    /// Laser energies (μeV, same reference as the device energies).
    pub fn grid(&self, device: &DeviceParams) -> Result<Vec<f64>> {
        let bad = |m: String| Err(Error::InvalidScan(m));
        if ![self.start, self.stop, self.step].iter().all(|x| x.is_finite()) {
            return bad("start, stop and step must be finite".into());
        }
        if !(self.step > 0.0) {
            return bad(format!("step must be > 0, got {}", self.step));
        }
        if self.stop < self.start {
            return bad(format!("stop ({}) is below start ({})", self.stop, self.start));
        }
        let span = (self.stop - self.start) / self.step;
        if span + 1.0 > MAX_SCAN_POINTS as f64 {
            return bad(format!("scan would have more than {MAX_SCAN_POINTS} points"));
        }
        let n = (span + 1e-9).floor() as usize + 1;
        let offset = match self.reference {
            ScanReference::CavV => device.omega_cav_v,
            ScanReference::QdUp => device.omega_qd_up,
        };
        Ok((0..n).map(|k| offset + self.start + k as f64 * self.step).collect())
    }
}

/// Either a charge occupation with the even spin split, or explicit
/// probabilities for the three ground states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_up: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_down: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_empty: Option<f64>,
}

impl Default for OccupationConfig {
    fn default() -> Self {
        OccupationConfig { p_c: Some(1.0), p_up: None, p_down: None, p_empty: None }
    }
}

impl OccupationConfig {
    pub fn model(&self) -> Result<OccupationModel> {
        match (self.p_c, self.p_up, self.p_down, self.p_empty) {
            (Some(pc), None, None, None) => OccupationModel::from_charge_occupation(pc),
            (None, Some(u), Some(d), Some(e)) => OccupationModel::new(u, d, e),
            _ => Err(Error::InvalidOccupation(
                "give either p_c alone or all of p_up, p_down, p_empty".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub conditioning: Conditioning,
    #[serde(default = "default_input")]
    pub input: Basis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParamConfig {
    pub param: FitParam,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub datasets: Vec<DatasetConfig>,
    pub free: Vec<FreeParamConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 6]>,
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: usize,
}

fn default_max_evaluations() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub target: Basis,
    #[serde(default = "default_input")]
    pub input: Basis,
    /// ω_QD↑ search range, μeV.
    pub qd_range: [f64; 2],
    /// ω_L − ω_QD↑ search range, μeV.
    pub laser_detuning_range: [f64; 2],
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    41
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Laser energy, same reference as the device energies.
    pub omega_laser: f64,
    #[serde(default = "default_ground")]
    pub ground: GroundState,
    #[serde(default = "default_input")]
    pub input: Basis,
    #[serde(default = "default_cutoff")]
    pub fock_cutoff: usize,
    /// Drive amplitude; chosen automatically for weak drive when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_amplitude: Option<f64>,
}

fn default_ground() -> GroundState {
    GroundState::Up
}

fn default_cutoff() -> usize {
    2
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    #[serde(alias = "jsonl")]
    JsonLines,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" | "jsonl" => Ok(OutputFormat::JsonLines),
            other => Err(format!("unknown format `{other}` (expected csv or json-lines)")),
        }
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceParams,
    /// When present, the device energies are absolute (eV) and are
    /// re-referenced to this energy and converted to μeV on use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absolute_reference_eV: Option<f64>,
    #[serde(default)]
    pub occupation: OccupationConfig,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default = "default_conditioning")]
    pub conditioning: Conditioning,
    #[serde(default)]
    pub project_physical: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeeman: Option<ZeemanMap>,
}

fn default_conditioning() -> Conditioning {
    Conditioning::Avg
}

impl RunConfig {
    /// Device parameters in μeV relative to the declared reference.
    pub fn device(&self) -> DeviceParams {
        let mut d = self.device.clone();
        if let Some(reference) = self.absolute_reference_eV {
            let conv = |e: f64| (e - reference) * 1e6;
            d.omega_cav_v = conv(d.omega_cav_v);
            d.omega_cav_h = conv(d.omega_cav_h);
            d.omega_qd_up = conv(d.omega_qd_up);
            d.omega_qd_down = conv(d.omega_qd_down);
        }
        d
    }

    pub fn model_state(&self) -> Result<ModelState> {
        Ok(ModelState {
            params: self.device(),
            p_c: self.occupation.model()?.charge_occupation(),
            sigma: self.noise.sigma,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.absolute_reference_eV {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidParams(format!("absolute_reference_eV must be a positive energy, got {r}")));
            }
        }
        let device = self.device();
        device.validate()?;
        self.occupation.model()?;
        self.noise.validate()?;
        if let Some(scan) = &self.scan {
            scan.grid(&device)?;
        }
        if let Some(z) = &self.zeeman {
            z.validate()?;
        }
        if let Some(t) = &self.target {
            for (name, [lo, hi]) in [("qd_range", t.qd_range), ("laser_detuning_range", t.laser_detuning_range)] {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::InvalidTarget(format!("{name} must satisfy lo <= hi")));
                }
            }
            if t.grid < 2 {
                return Err(Error::InvalidTarget("grid must be at least 2".into()));
            }
        }
        if let Some(o) = &self.oracle {
            if !o.omega_laser.is_finite() {
                return Err(Error::InvalidParams("oracle.omega_laser must be finite".into()));
            }
            if o.fock_cutoff < 1 {
                return Err(Error::InvalidCutoff(o.fock_cutoff));
            }
        }
        if let Some(f) = &self.fit {
            if f.datasets.is_empty() {
                return Err(Error::InvalidProblem("fit.datasets must not be empty".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configuration serialises");
        s.push('\n');
        s
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate().map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, path)
}

fn csv_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Csv { path: path.to_path_buf(), line, message: message.into() }
}

/// Reads measured or simulated intensities. Accepts the reduced 7-column
/// header or the full spectrum header; the grid must be strictly
/// increasing.
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<(f64, IntensitySextet)>> {
    let file = fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_spectrum_from(file, path)
}

pub fn read_spectrum_from<R: std::io::Read>(reader: R, path: &Path) -> Result<Vec<(f64, IntensitySextet)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(csv_error(path, 1, "missing header row")),
        Some(r) => r.map_err(|e| csv_error(path, 1, e.to_string()))?,
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let columns: [usize; 7] = if names == MEASURED_HEADER {
        [0, 1, 2, 3, 4, 5, 6]
    } else if names == SPECTRUM_HEADER {
        [0, 3, 4, 5, 6, 7, 8]
    } else {
        return Err(csv_error(
            path,
            1,
            format!("header must be `{}` or `{}`", MEASURED_HEADER.join(","), SPECTRUM_HEADER.join(",")),
        ));
    };
    let width = names.len();

    let mut out: Vec<(f64, IntensitySextet)> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_error(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != width {
            return Err(csv_error(path, line, format!("expected {width} fields, found {}", rec.len())));
        }
        let mut v = [0.0; 7];
        for (k, &c) in columns.iter().enumerate() {
            let cell = rec[c].trim();
            let x: f64 = cell
                .parse()
                .map_err(|_| csv_error(path, line, format!("column `{}`: `{cell}` is not a number", names[c])))?;
            if !x.is_finite() {
                return Err(csv_error(path, line, format!("column `{}`: value `{cell}` is not finite", names[c])));
            }
            v[k] = x;
        }
        if let Some(&(prev, _)) = out.last() {
            if v[0] == prev {
                return Err(csv_error(path, line, format!("duplicate laser energy {}", v[0])));
            }
            if v[0] < prev {
                return Err(csv_error(path, line, format!("laser energy {} is below the previous row ({prev})", v[0])));
            }
        }
        out.push((v[0], IntensitySextet::new(v[1], v[2], v[3], v[4], v[5], v[6])));
    }
    Ok(out)
}

/// Formats a value with 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV table with the given header; every cell uses [`format_value`].
pub fn write_table<W: Write, I>(mut w: W, header: &[&str], rows: I) -> std::io::Result<()>
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    let mut buf = header.join(",");
    buf.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&x| format_value(x)).collect();
        buf.push_str(&cells.join(","));
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())
}

pub fn write_records_to<W: Write>(mut w: W, records: &[SpectrumRecord], format: OutputFormat) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => write_table(w, &SPECTRUM_HEADER, records.iter().map(|r| r.values())),
        OutputFormat::JsonLines => {
            let mut buf = String::new();
            for r in records {
                buf.push_str(&serde_json::to_string(r).map_err(std::io::Error::other)?);
                buf.push('\n');
            }
            w.write_all(buf.as_bytes())
        }
    }
}

pub fn write_records(records: &[SpectrumRecord], path: &Path, format: OutputFormat) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    write_records_to(&mut w, records, format).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Reads back a JSON-lines spectrum.
pub fn read_records_jsonl(path: &Path) -> Result<Vec<SpectrumRecord>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| csv_error(path, i as u64 + 1, e.to_string())))
        .collect()
}

/// Reads a full-header spectrum CSV back into records.
pub fn read_records_csv(path: &Path) -> Result<Vec<SpectrumRecord>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.split(',').map(str::trim).eq(SPECTRUM_HEADER.iter().copied()) => {}
        _ => return Err(csv_error(path, 1, format!("header must be `{}`", SPECTRUM_HEADER.join(",")))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i as u64 + 2;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|_| csv_error(path, n, format!("`{c}` is not a number"))))
            .collect::<Result<_>>()?;
        if v.len() != 14 {
            return Err(csv_error(path, n, format!("expected 14 fields, found {}", v.len())));
        }
        out.push(SpectrumRecord {
            omega_laser_ueV: v[0],
            det_cav_v_ueV: v[1],
            det_qd_up_ueV: v[2],
            i_h: v[3],
            i_v: v[4],
            i_d: v[5],
            i_a: v[6],
            i_r: v[7],
            i_l: v[8],
            total: v[9],
            s_hv: v[10],
            s_da: v[11],
            s_rl: v[12],
            purity: v[13],
        });
    }
    Ok(out)
}
