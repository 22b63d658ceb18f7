//! Averaging over spectral wandering of the transition and over the
//! ground-state occupation of the dot.
//!
//! Wandering is quasi-static: each realisation of the transition energy
//! scatters the monochromatic field coherently, and the detector sees the
//! intensity-weighted mixture of the resulting coherence matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reflect, DriveField};
use crate::params::{DeviceParams, GroundState};
use crate::polarisation::{CoherenceMatrix, JonesVector};
use crate::quadrature::gauss_hermite;
use crate::tomography::{project_physical, purity, sextet_from_coherence, stokes_from_sextet, IntensitySextet};

pub const DEFAULT_QUAD_ORDER: usize = 15;

/// Gaussian fluctuation of the transition energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of the transition energy, μeV.
    pub sigma: f64,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

fn default_quad_order() -> usize {
    DEFAULT_QUAD_ORDER
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::noiseless()
    }
}

impl NoiseModel {
    pub fn new(sigma: f64, quad_order: usize) -> Result<Self> {
        let n = NoiseModel { sigma, quad_order };
        n.validate()?;
        Ok(n)
    }

    pub fn gaussian(sigma: f64) -> Self {
        NoiseModel { sigma, quad_order: DEFAULT_QUAD_ORDER }
    }

    pub fn noiseless() -> Self {
        Self::gaussian(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidNoise(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.quad_order == 0 {
            return Err(Error::InvalidQuadratureOrder);
        }
        Ok(())
    }

    /// Offsets (in units of the transition energy) and weights to sum over.
    fn nodes(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        self.validate()?;
        if self.sigma == 0.0 {
            return Ok((vec![0.0], vec![1.0]));
        }
        let (x, w) = gauss_hermite(self.quad_order)?;
        Ok((x.into_iter().map(|xi| xi * self.sigma).collect(), w))
    }
}

/// Ground-state probabilities of the dot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationModel {
    pub p_up: f64,
    pub p_down: f64,
    pub p_empty: f64,
}

impl OccupationModel {
    /// Unpolarised spin with charge occupation `p_c`: P↑ = P↓ = p_c/2.
    pub fn from_charge_occupation(p_c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_c) {
            return Err(Error::InvalidOccupation(format!("p_c must lie in [0, 1], got {p_c}")));
        }
        Ok(OccupationModel { p_up: p_c / 2.0, p_down: p_c / 2.0, p_empty: 1.0 - p_c })
    }

    pub fn new(p_up: f64, p_down: f64, p_empty: f64) -> Result<Self> {
        let o = OccupationModel { p_up, p_down, p_empty };
        o.validate()?;
        Ok(o)
    }

    pub fn charge_occupation(&self) -> f64 {
        self.p_up + self.p_down
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_up", self.p_up), ("p_down", self.p_down), ("p_empty", self.p_empty)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidOccupation(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        let sum = self.p_up + self.p_down + self.p_empty;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidOccupation(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Output coherence for a charged dot in spin state `spin`, averaged over
/// Gaussian wandering of that spin's transition energy.
pub fn averaged_coherence_conditional(
    params: &DeviceParams,
    drive: &DriveField,
    spin: GroundState,
    noise: &NoiseModel,
) -> Result<CoherenceMatrix> {
    let centre = match spin {
        GroundState::Up => params.omega_qd_up,
        GroundState::Down => params.omega_qd_down,
        GroundState::Empty => return Ok(reflect(params, drive, GroundState::Empty)?.1),
    };
    let (offsets, weights) = noise.nodes()?;
    let mut acc = CoherenceMatrix::zero();
    for (dx, w) in offsets.iter().zip(&weights) {
        let shifted = params.with_transition(spin, centre + dx);
        let (_, g) = reflect(&shifted, drive, spin)?;
        acc.add_scaled(&g, *w);
    }
    Ok(acc)
}

/// `G_avg = P↑·Ḡ↑ + P↓·Ḡ↓ + P∅·G_cav`.
pub fn averaged_coherence_population(
    params: &DeviceParams,
    drive: &DriveField,
    occ: &OccupationModel,
    noise: &NoiseModel,
) -> Result<CoherenceMatrix> {
    occ.validate()?;
    let mut acc = CoherenceMatrix::zero();
    for (spin, p) in [
        (GroundState::Up, occ.p_up),
        (GroundState::Down, occ.p_down),
        (GroundState::Empty, occ.p_empty),
    ] {
        if p == 0.0 {
            continue;
        }
        let g = averaged_coherence_conditional(params, drive, spin, noise)?;
        acc.add_scaled(&g, p);
    }
    Ok(acc)
}

/// Which ground-state ensemble a spectrum describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    /// Mixture over ↑, ↓ and ∅ with the occupation probabilities.
    Avg,
    /// Empty dot.
    Cav,
    Up,
    Down,
}

impl std::str::FromStr for Conditioning {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "avg" => Ok(Conditioning::Avg),
            "cav" => Ok(Conditioning::Cav),
            "up" => Ok(Conditioning::Up),
            "down" => Ok(Conditioning::Down),
            other => Err(format!("unknown conditioning `{other}` (expected avg, cav, up or down)")),
        }
    }
}

impl std::fmt::Display for Conditioning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Conditioning::Avg => "avg",
            Conditioning::Cav => "cav",
            Conditioning::Up => "up",
            Conditioning::Down => "down",
        })
    }
}

/// Coherence matrix of the reflected field under a given conditioning.
pub fn conditioned_coherence(
    params: &DeviceParams,
    drive: &DriveField,
    occ: &OccupationModel,
    noise: &NoiseModel,
    conditioning: Conditioning,
) -> Result<CoherenceMatrix> {
    match conditioning {
        Conditioning::Avg => averaged_coherence_population(params, drive, occ, noise),
        Conditioning::Cav => averaged_coherence_conditional(params, drive, GroundState::Empty, noise),
        Conditioning::Up => averaged_coherence_conditional(params, drive, GroundState::Up, noise),
        Conditioning::Down => averaged_coherence_conditional(params, drive, GroundState::Down, noise),
    }
}

/// One row of a frequency scan. Field order is the file column order.
#[allow(non_snake_case)]
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub omega_laser_ueV: f64,
    #[serde(rename = "det_cavV_ueV")]
    pub det_cav_v_ueV: f64,
    pub det_qd_up_ueV: f64,
    pub i_h: f64,
    pub i_v: f64,
    pub i_d: f64,
    pub i_a: f64,
    pub i_r: f64,
    pub i_l: f64,
    pub total: f64,
    pub s_hv: f64,
    pub s_da: f64,
    pub s_rl: f64,
    pub purity: f64,
}

impl SpectrumRecord {
    /// Builds a row from a sextet; Stokes components come from the analyser
    /// pair ratios. With `project` the Stokes vector is pulled back into the
    /// unit ball.
    pub fn from_sextet(
        omega_laser: f64,
        omega_cav_v: f64,
        omega_qd_up: f64,
        x: &IntensitySextet,
        project: bool,
    ) -> Result<Self> {
        let mut s = stokes_from_sextet(x)?;
        if project {
            s = project_physical(&s);
        }
        Ok(SpectrumRecord {
            omega_laser_ueV: omega_laser,
            det_cav_v_ueV: omega_laser - omega_cav_v,
            det_qd_up_ueV: omega_laser - omega_qd_up,
            i_h: x.h,
            i_v: x.v,
            i_d: x.d,
            i_a: x.a,
            i_r: x.r,
            i_l: x.l,
            total: x.total(),
            s_hv: s.s_hv,
            s_da: s.s_da,
            s_rl: s.s_rl,
            purity: purity(&s),
        })
    }

    pub fn sextet(&self) -> IntensitySextet {
        IntensitySextet::new(self.i_h, self.i_v, self.i_d, self.i_a, self.i_r, self.i_l)
    }

    pub fn stokes(&self) -> crate::tomography::StokesVector {
        crate::tomography::StokesVector::new(self.s_hv, self.s_da, self.s_rl)
    }

    pub fn values(&self) -> [f64; 14] {
        [
            self.omega_laser_ueV,
            self.det_cav_v_ueV,
            self.det_qd_up_ueV,
            self.i_h,
            self.i_v,
            self.i_d,
            self.i_a,
            self.i_r,
            self.i_l,
            self.total,
            self.s_hv,
            self.s_da,
            self.s_rl,
            self.purity,
        ]
    }
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid(i + 1));
        }
    }
    if let Some(i) = grid.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidScan(format!("non-finite grid point at index {i}")));
    }
    Ok(())
}

/// Evaluates the conditioned reflection at every laser energy of `grid`.
/// Points are computed in parallel and returned in grid order.
pub fn spectrum_scan(
    params: &DeviceParams,
    grid: &[f64],
    jones_in: &JonesVector,
    occ: &OccupationModel,
    noise: &NoiseModel,
    conditioning: Conditioning,
) -> Result<Vec<SpectrumRecord>> {
    check_grid(grid)?;
    params.validate()?;
    noise.validate()?;
    occ.validate()?;
    DriveField::new(grid[0], *jones_in)?;
    grid.par_iter()
        .map(|&omega| {
            let drive = DriveField { omega_laser: omega, jones_in: *jones_in };
            let g = conditioned_coherence(params, &drive, occ, noise, conditioning)?;
            let x = sextet_from_coherence(&g);
            SpectrumRecord::from_sextet(omega, params.omega_cav_v, params.omega_qd_up, &x, false)
        })
        .collect()
}
