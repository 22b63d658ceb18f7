//! Parameter extraction from measured spectra and operating-point search.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{conditioned_coherence, Conditioning, NoiseModel, OccupationModel, SpectrumRecord};
use crate::error::{Error, Result};
use crate::model::DriveField;
use crate::params::DeviceParams;
use crate::polarisation::JonesVector;
use crate::tomography::{fidelity, sextet_from_coherence, stokes_from_coherence, IntensitySextet, StokesVector};

/// A scalar that can be freed in a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitParam {
    #[serde(rename = "omega_cav_V")]
    OmegaCavV,
    #[serde(rename = "omega_cav_H")]
    OmegaCavH,
    #[serde(rename = "kappa_V")]
    KappaV,
    #[serde(rename = "kappa_H")]
    KappaH,
    #[serde(rename = "eta_top")]
    EtaTop,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "gamma_sp")]
    GammaSp,
    #[serde(rename = "gamma_pd")]
    GammaPd,
    #[serde(rename = "omega_qd_up")]
    OmegaQdUp,
    #[serde(rename = "omega_qd_down")]
    OmegaQdDown,
    #[serde(rename = "p_c")]
    ChargeOccupation,
    #[serde(rename = "sigma")]
    Sigma,
}

impl FitParam {
    pub const ALL: [FitParam; 12] = [
        FitParam::OmegaCavV,
        FitParam::OmegaCavH,
        FitParam::KappaV,
        FitParam::KappaH,
        FitParam::EtaTop,
        FitParam::G,
        FitParam::GammaSp,
        FitParam::GammaPd,
        FitParam::OmegaQdUp,
        FitParam::OmegaQdDown,
        FitParam::ChargeOccupation,
        FitParam::Sigma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParam::OmegaCavV => "omega_cav_V",
            FitParam::OmegaCavH => "omega_cav_H",
            FitParam::KappaV => "kappa_V",
            FitParam::KappaH => "kappa_H",
            FitParam::EtaTop => "eta_top",
            FitParam::G => "g",
            FitParam::GammaSp => "gamma_sp",
            FitParam::GammaPd => "gamma_pd",
            FitParam::OmegaQdUp => "omega_qd_up",
            FitParam::OmegaQdDown => "omega_qd_down",
            FitParam::ChargeOccupation => "p_c",
            FitParam::Sigma => "sigma",
        }
    }
}

impl fmt::Display for FitParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FitParam::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown fit parameter `{s}`"))
    }
}

/// Everything the forward model needs besides the drive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub params: DeviceParams,
    pub p_c: f64,
    pub sigma: f64,
}

impl ModelState {
    pub fn get(&self, p: FitParam) -> f64 {
        let d = &self.params;
        match p {
            FitParam::OmegaCavV => d.omega_cav_v,
            FitParam::OmegaCavH => d.omega_cav_h,
            FitParam::KappaV => d.kappa_v,
            FitParam::KappaH => d.kappa_h,
            FitParam::EtaTop => d.eta_top,
            FitParam::G => d.g,
            FitParam::GammaSp => d.gamma_sp,
            FitParam::GammaPd => d.gamma_pd,
            FitParam::OmegaQdUp => d.omega_qd_up,
            FitParam::OmegaQdDown => d.omega_qd_down,
            FitParam::ChargeOccupation => self.p_c,
            FitParam::Sigma => self.sigma,
        }
    }

    pub fn set(&mut self, p: FitParam, value: f64) {
        let d = &mut self.params;
        match p {
            FitParam::OmegaCavV => d.omega_cav_v = value,
            FitParam::OmegaCavH => d.omega_cav_h = value,
            FitParam::KappaV => d.kappa_v = value,
            FitParam::KappaH => d.kappa_h = value,
            FitParam::EtaTop => d.eta_top = value,
            FitParam::G => d.g = value,
            FitParam::GammaSp => d.gamma_sp = value,
            FitParam::GammaPd => d.gamma_pd = value,
            FitParam::OmegaQdUp => d.omega_qd_up = value,
            FitParam::OmegaQdDown => d.omega_qd_down = value,
            FitParam::ChargeOccupation => self.p_c = value,
            FitParam::Sigma => self.sigma = value,
        }
    }
}

/// One measured spectrum: a conditioning tag, the probe polarisation and
/// the six normalised intensities at each laser energy.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub conditioning: Conditioning,
    pub jones_in: JonesVector,
    pub points: Vec<(f64, IntensitySextet)>,
}

impl Dataset {
    pub fn from_records(conditioning: Conditioning, jones_in: JonesVector, records: &[SpectrumRecord]) -> Self {
        Dataset {
            conditioning,
            jones_in,
            points: records.iter().map(|r| (r.omega_laser_ueV, r.sextet())).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeParam {
    pub param: FitParam,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug)]
pub struct FitProblem {
    pub datasets: Vec<Dataset>,
    pub free: Vec<FreeParam>,
    pub initial: ModelState,
    /// Per-channel weights in H, V, D, A, R, L order.
    pub weights: Option<[f64; 6]>,
    pub quad_order: usize,
    pub max_evaluations: usize,
}

impl FitProblem {
    pub fn new(datasets: Vec<Dataset>, free: Vec<FreeParam>, initial: ModelState) -> Self {
        FitProblem { datasets, free, initial, weights: None, quad_order: 15, max_evaluations: 10_000 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidProblem("at least one dataset is required".into()));
        }
        for (k, f) in self.free.iter().enumerate() {
            if !(f.lo.is_finite() && f.hi.is_finite() && f.lo <= f.hi) {
                return Err(Error::InvalidProblem(format!("bounds of {} must be finite with lo <= hi", f.param)));
            }
            if self.free[..k].iter().any(|g| g.param == f.param) {
                return Err(Error::InvalidProblem(format!("{} is freed twice", f.param)));
            }
            let v = self.initial.get(f.param);
            if !(f.lo..=f.hi).contains(&v) {
                return Err(Error::OutOfBounds { name: f.param.name().into(), value: v, lo: f.lo, hi: f.hi });
            }
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidProblem("channel weights must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn initial_theta(&self) -> Vec<f64> {
        self.free.iter().map(|f| self.initial.get(f.param)).collect()
    }

    /// Model state with the free parameters replaced by `theta`.
    pub fn state_at(&self, theta: &[f64]) -> Result<ModelState> {
        if theta.len() != self.free.len() {
            return Err(Error::InvalidProblem(format!(
                "expected {} free parameters, got {}",
                self.free.len(),
                theta.len()
            )));
        }
        let mut s = self.initial.clone();
        for (f, &v) in self.free.iter().zip(theta) {
            if !(v >= f.lo && v <= f.hi) {
                return Err(Error::OutOfBounds { name: f.param.name().into(), value: v, lo: f.lo, hi: f.hi });
            }
            s.set(f.param, v);
        }
        Ok(s)
    }
}

/// Model intensities of one dataset's grid under `state`.
pub fn model_sextets(state: &ModelState, ds: &Dataset, quad_order: usize) -> Result<Vec<IntensitySextet>> {
    state.params.validate()?;
    let occ = OccupationModel::from_charge_occupation(state.p_c)?;
    let noise = NoiseModel::new(state.sigma, quad_order)?;
    ds.points
        .par_iter()
        .map(|&(omega, _)| {
            let drive = DriveField::new(omega, ds.jones_in)?;
            let g = conditioned_coherence(&state.params, &drive, &occ, &noise, ds.conditioning)?;
            Ok(sextet_from_coherence(&g))
        })
        .collect()
}

/// `(model − measured)·weight` for every dataset, grid point and channel,
/// in that nesting order.
pub fn model_residuals(theta: &[f64], problem: &FitProblem) -> Result<Vec<f64>> {
    let state = problem.state_at(theta)?;
    let w = problem.weights.unwrap_or([1.0; 6]);
    let mut out = Vec::with_capacity(problem.datasets.iter().map(|d| d.points.len() * 6).sum());
    for (k, ds) in problem.datasets.iter().enumerate() {
        if let Some(i) = ds.points.iter().position(|(om, x)| !om.is_finite() || !x.is_finite()) {
            return Err(Error::CorruptDataset(format!("dataset {k}, point {i}: non-finite value")));
        }
        let model = model_sextets(&state, ds, problem.quad_order)?;
        for ((_, meas), m) in ds.points.iter().zip(&model) {
            let (a, b) = (m.to_array(), meas.to_array());
            out.extend((0..6).map(|c| (a[c] - b[c]) * w[c]));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub best: ModelState,
    pub theta: Vec<f64>,
    pub free: Vec<FitParam>,
    pub initial_objective: f64,
    pub objective: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub dataset_residual_norms: Vec<f64>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Outcome of a bounded simplex minimisation.
#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead on the box `[lo, hi]`, run in normalised coordinates with
/// trial points clipped to the box. Stops when the objective spread over
/// the simplex is below `1e-12·(1 + |f_best|)` or after `max_evals`
/// evaluations, then restarts from the best vertex until a restart no
/// longer improves. Non-finite objective values are treated as +∞.
pub fn minimize_box<F>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], max_evals: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let span: Vec<f64> = (0..n).map(|i| hi[i] - lo[i]).collect();
    let to_x = |u: &[f64]| -> Vec<f64> {
        (0..n).map(|i| if span[i] > 0.0 { lo[i] + u[i].clamp(0.0, 1.0) * span[i] } else { lo[i] }).collect()
    };
    let evals = std::cell::Cell::new(0usize);
    let eval = |u: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(&to_x(u));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let clip = |u: Vec<f64>| -> Vec<f64> { u.into_iter().map(|x| x.clamp(0.0, 1.0)).collect() };

    let u0: Vec<f64> = (0..n).map(|i| if span[i] > 0.0 { (x0[i] - lo[i]) / span[i] } else { 0.0 }).collect();
    let f0 = eval(&u0);
    let (mut best_u, mut best_f) = (u0, f0);
    let mut iterations = 0usize;
    let mut converged = false;
    if n == 0 || span.iter().all(|s| *s == 0.0) {
        return Minimum { x: to_x(&best_u), f: best_f, evaluations: evals.get(), iterations, converged: true };
    }

    let mut step = 0.1;
    for _restart in 0..8 {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_u.clone(), best_f)];
        for i in 0..n {
            let mut u = best_u.clone();
            u[i] = if u[i] + step <= 1.0 { u[i] + step } else { u[i] - step };
            let fu = eval(&u);
            simplex.push((u, fu));
        }
        let start_f = best_f;
        let mut run_converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (fb, fw) = (simplex[0].1, simplex[n].1);
            if fw - fb <= 1e-12 * (1.0 + fb.abs()) {
                run_converged = true;
                break;
            }
            if evals.get() >= max_evals {
                break;
            }
            iterations += 1;
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                clip((0..n).map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j])).collect())
            };
            let xr = along(-1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < fw {
                    let xc = along(-0.5);
                    let fc = eval(&xc);
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = eval(&xc);
                    (xc, fc)
                };
                if fc < fw.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for v in simplex.iter_mut().skip(1) {
                        let u: Vec<f64> = (0..n).map(|j| x0[j] + 0.5 * (v.0[j] - x0[j])).collect();
                        let fu = eval(&u);
                        *v = (u, fu);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_f {
            best_u = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        converged = run_converged;
        let improved = start_f - best_f > 1e-12 * (1.0 + best_f.abs());
        if !run_converged || !improved {
            break;
        }
        step = (step * 0.5).max(1e-3);
    }
    Minimum { x: to_x(&best_u), f: best_f, evaluations: evals.get(), iterations, converged }
}

pub fn fit_parameters(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let theta0 = problem.initial_theta();
    let r0 = model_residuals(&theta0, problem)?;
    let f0 = sum_sq(&r0);
    if !f0.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let lo: Vec<f64> = problem.free.iter().map(|f| f.lo).collect();
    let hi: Vec<f64> = problem.free.iter().map(|f| f.hi).collect();
    let objective = |theta: &[f64]| match model_residuals(theta, problem) {
        Ok(r) => sum_sq(&r),
        Err(_) => f64::INFINITY,
    };
    let m = minimize_box(objective, &theta0, &lo, &hi, problem.max_evaluations);
    let (theta, f) = if m.f <= f0 { (m.x, m.f) } else { (theta0, f0) };

    let best = problem.state_at(&theta)?;
    let r = model_residuals(&theta, problem)?;
    let mut norms = Vec::with_capacity(problem.datasets.len());
    let mut offset = 0;
    for ds in &problem.datasets {
        let len = ds.points.len() * 6;
        norms.push(sum_sq(&r[offset..offset + len]).sqrt());
        offset += len;
    }
    Ok(FitResult {
        best,
        theta,
        free: problem.free.iter().map(|f| f.param).collect(),
        initial_objective: f0,
        objective: f,
        evaluations: m.evaluations,
        iterations: m.iterations,
        converged: m.converged,
        dataset_residual_norms: norms,
    })
}

/// Operating-point search specification. The laser range is a detuning
/// relative to ω_QD↑; a range with `lo == hi` fixes that coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub target: StokesVector,
    pub jones_in: JonesVector,
    pub qd_range: (f64, f64),
    pub laser_detuning_range: (f64, f64),
    pub noise: NoiseModel,
    pub grid: usize,
}

impl TargetSpec {
    pub fn new(target: StokesVector, jones_in: JonesVector, qd_range: (f64, f64), laser_detuning_range: (f64, f64), noise: NoiseModel) -> Self {
        TargetSpec { target, jones_in, qd_range, laser_detuning_range, noise, grid: 41 }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.target.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitTarget(self.target.norm()));
        }
        for (name, (lo, hi)) in [("omega_qd_up", self.qd_range), ("laser detuning", self.laser_detuning_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidTarget(format!("{name} range [{lo}, {hi}] is empty or not finite")));
            }
        }
        if self.grid < 2 {
            return Err(Error::InvalidTarget("grid resolution must be at least 2".into()));
        }
        self.noise.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub omega_qd_up: f64,
    pub omega_laser: f64,
    pub fidelity: f64,
    pub purity: f64,
    pub stokes: StokesVector,
}

/// Up-conditioned output at a given (ω_QD↑, ω_L).
pub fn evaluate_point(params: &DeviceParams, spec: &TargetSpec, omega_qd_up: f64, omega_laser: f64) -> Result<OperatingPoint> {
    let mut p = params.clone();
    p.omega_qd_up = omega_qd_up;
    let drive = DriveField::new(omega_laser, spec.jones_in)?;
    let occ = OccupationModel::new(1.0, 0.0, 0.0)?;
    let g = conditioned_coherence(&p, &drive, &occ, &spec.noise, Conditioning::Up)?;
    let (s, _) = stokes_from_coherence(&g)?;
    Ok(OperatingPoint {
        omega_qd_up,
        omega_laser,
        fidelity: fidelity(&s, &spec.target)?,
        purity: s.norm(),
        stokes: s,
    })
}

/// Best fidelity to the target over the two detunings: a regular grid
/// followed by a bounded simplex refinement of 1 − F. Deterministic.
pub fn find_operating_point(params: &DeviceParams, spec: &TargetSpec) -> Result<OperatingPoint> {
    params.validate()?;
    spec.validate()?;
    let n = spec.grid;
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        if lo == hi {
            vec![lo]
        } else {
            (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
        }
    };
    let qd_axis = axis(spec.qd_range);
    let det_axis = axis(spec.laser_detuning_range);
    let cells: Vec<(f64, f64)> = qd_axis.iter().flat_map(|&q| det_axis.iter().map(move |&d| (q, d))).collect();
    let evaluated: Vec<OperatingPoint> = cells
        .par_iter()
        .map(|&(q, d)| evaluate_point(params, spec, q, q + d))
        .collect::<Result<_>>()?;
    let mut best = evaluated[0];
    for p in &evaluated[1..] {
        if p.fidelity > best.fidelity {
            best = *p;
        }
    }

    let lo = [spec.qd_range.0, spec.laser_detuning_range.0];
    let hi = [spec.qd_range.1, spec.laser_detuning_range.1];
    let x0 = [best.omega_qd_up, best.omega_laser - best.omega_qd_up];
    let objective = |x: &[f64]| match evaluate_point(params, spec, x[0], x[0] + x[1]) {
        Ok(p) => 1.0 - p.fidelity,
        Err(_) => f64::INFINITY,
    };
    let m = minimize_box(objective, &x0, &lo, &hi, 2000);
    let refined = evaluate_point(params, spec, m.x[0], m.x[0] + m.x[1])?;
    Ok(if refined.fidelity > best.fidelity { refined } else { best })
}

/// Affine map between magnetic field and ω_QD↑ through two anchors.
/// Used only to label outputs in tesla.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeemanMap {
    /// `(B in tesla, ω_QD↑ in μeV)` pairs.
    pub anchors: [(f64, f64); 2],
}

impl ZeemanMap {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Result<Self> {
        let m = ZeemanMap { anchors: [a, b] };
        m.validate()?;
        Ok(m)
    }

    /// Anchors at 1.69 T ↔ +51.4 μeV and 1.35 T ↔ +14.1 μeV from ω_cav,V.
    pub fn reference(omega_cav_v: f64) -> Self {
        ZeemanMap { anchors: [(1.69, omega_cav_v + 51.4), (1.35, omega_cav_v + 14.1)] }
    }

    pub fn validate(&self) -> Result<()> {
        let [(b0, w0), (b1, w1)] = self.anchors;
        if ![b0, w0, b1, w1].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidTarget("Zeeman anchors must be finite".into()));
        }
        if b0 == b1 {
            return Err(Error::CoincidentAnchors(b0));
        }
        Ok(())
    }

    pub fn slope(&self) -> f64 {
        let [(b0, w0), (b1, w1)] = self.anchors;
        (w1 - w0) / (b1 - b0)
    }

    pub fn omega_at(&self, field: f64) -> f64 {
        let [(b0, w0), (b1, w1)] = self.anchors;
        let t = (field - b0) / (b1 - b0);
        w0 + t * (w1 - w0)
    }

    /// Inverse map; `None` when both anchors share the same energy.
    pub fn field_at(&self, omega: f64) -> Option<f64> {
        let [(b0, w0), (b1, w1)] = self.anchors;
        if w0 == w1 {
            return None;
        }
        Some(b0 + (omega - w0) / (w1 - w0) * (b1 - b0))
    }
}

pub fn zeeman_map(anchors: [(f64, f64); 2], field: f64) -> Result<f64> {
    Ok(ZeemanMap::new(anchors[0], anchors[1])?.omega_at(field))
}
