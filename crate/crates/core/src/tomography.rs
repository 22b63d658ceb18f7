//! Six-basis intensities, Stokes vectors and the quantities derived from them.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polarisation::{Basis, CoherenceMatrix};

/// Intensities measured behind the six analysers, normalised to the input.
///
/// `raw` marks sextets obtained by extrapolation; those may contain negative
/// entries and lead to Stokes vectors longer than one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensitySextet {
    pub h: f64,
    pub v: f64,
    pub d: f64,
    pub a: f64,
    pub r: f64,
    pub l: f64,
    #[serde(default)]
    pub raw: bool,
}

impl IntensitySextet {
    pub fn new(h: f64, v: f64, d: f64, a: f64, r: f64, l: f64) -> Self {
        IntensitySextet { h, v, d, a, r, l, raw: false }
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4], x[5])
    }

    /// Values in H, V, D, A, R, L order.
    pub fn to_array(&self) -> [f64; 6] {
        [self.h, self.v, self.d, self.a, self.r, self.l]
    }

    pub fn get(&self, basis: Basis) -> f64 {
        match basis {
            Basis::H => self.h,
            Basis::V => self.v,
            Basis::D => self.d,
            Basis::A => self.a,
            Basis::R => self.r,
            Basis::L => self.l,
        }
    }

    pub fn pair_sums(&self) -> [f64; 3] {
        [self.h + self.v, self.d + self.a, self.r + self.l]
    }

    /// Reflected intensity, taken from the H/V pair.
    pub fn total(&self) -> f64 {
        self.h + self.v
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// `(1 − w)·self + w·other`, channel by channel.
    pub fn mix(&self, other: &IntensitySextet, w: f64) -> IntensitySextet {
        let a = self.to_array();
        let b = other.to_array();
        let mut out = IntensitySextet::from_array(std::array::from_fn(|i| (1.0 - w) * a[i] + w * b[i]));
        out.raw = self.raw || other.raw;
        out
    }
}

/// Stokes vector `(s_HV, s_DA, s_RL)`; `s_RL = +1` is R.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s_hv: f64,
    pub s_da: f64,
    pub s_rl: f64,
}

impl StokesVector {
    pub const fn new(s_hv: f64, s_da: f64, s_rl: f64) -> Self {
        StokesVector { s_hv, s_da, s_rl }
    }

    /// Pure state of one of the analysis polarisations.
    pub fn of(basis: Basis) -> Self {
        match basis {
            Basis::H => Self::new(1.0, 0.0, 0.0),
            Basis::V => Self::new(-1.0, 0.0, 0.0),
            Basis::D => Self::new(0.0, 1.0, 0.0),
            Basis::A => Self::new(0.0, -1.0, 0.0),
            Basis::R => Self::new(0.0, 0.0, 1.0),
            Basis::L => Self::new(0.0, 0.0, -1.0),
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.s_hv, self.s_da, self.s_rl]
    }

    pub fn dot(&self, o: &StokesVector) -> f64 {
        self.s_hv * o.s_hv + self.s_da * o.s_da + self.s_rl * o.s_rl
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs_diff(&self, o: &StokesVector) -> f64 {
        (self.s_hv - o.s_hv).abs().max((self.s_da - o.s_da).abs()).max((self.s_rl - o.s_rl).abs())
    }
}

impl Add for StokesVector {
    type Output = StokesVector;
    fn add(self, o: StokesVector) -> StokesVector {
        StokesVector::new(self.s_hv + o.s_hv, self.s_da + o.s_da, self.s_rl + o.s_rl)
    }
}

impl Sub for StokesVector {
    type Output = StokesVector;
    fn sub(self, o: StokesVector) -> StokesVector {
        StokesVector::new(self.s_hv - o.s_hv, self.s_da - o.s_da, self.s_rl - o.s_rl)
    }
}

impl Mul<f64> for StokesVector {
    type Output = StokesVector;
    fn mul(self, k: f64) -> StokesVector {
        StokesVector::new(self.s_hv * k, self.s_da * k, self.s_rl * k)
    }
}

impl Neg for StokesVector {
    type Output = StokesVector;
    fn neg(self) -> StokesVector {
        self * -1.0
    }
}

/// Unit-trace polarisation density matrix in the (H, V) basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarisationDensityMatrix {
    pub m: [[Complex64; 2]; 2],
}

impl PolarisationDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        CoherenceMatrix { m: self.m }.eigenvalues()
    }
}

fn ratio(x: f64, xbar: f64, pair: &'static str) -> Result<f64> {
    let sum = x + xbar;
    if !(sum > 0.0) {
        return Err(Error::EmptyChannel(pair));
    }
    Ok((x - xbar) / sum)
}

/// `s_XX̄ = (I_X − I_X̄)/(I_X + I_X̄)` for each analyser pair. No clamping.
pub fn stokes_from_sextet(x: &IntensitySextet) -> Result<StokesVector> {
    Ok(StokesVector::new(
        ratio(x.h, x.v, "H/V")?,
        ratio(x.d, x.a, "D/A")?,
        ratio(x.r, x.l, "R/L")?,
    ))
}

pub fn sextet_from_coherence(g: &CoherenceMatrix) -> IntensitySextet {
    // H and V are read off the diagonal so the H/V pair sums to the trace
    // exactly; the other pairs sum to it up to rounding.
    let mut out = IntensitySextet::from_array(Basis::ALL.map(|b| g.project(&b.jones())));
    out.h = g.m[0][0].re;
    out.v = g.m[1][1].re;
    out
}

/// Stokes vector and total intensity of a coherence matrix.
pub fn stokes_from_coherence(g: &CoherenceMatrix) -> Result<(StokesVector, f64)> {
    let total = g.trace();
    if !(total > 0.0) {
        return Err(Error::EmptyField);
    }
    let off = g.m[0][1];
    Ok((
        StokesVector::new(
            (g.m[0][0].re - g.m[1][1].re) / total,
            2.0 * off.re / total,
            2.0 * off.im / total,
        ),
        total,
    ))
}

/// Polarisation purity, the Euclidean norm of the Stokes vector.
pub fn purity(s: &StokesVector) -> f64 {
    s.norm()
}

/// `F = (1 + S·S_target)/2` against a pure target.
pub fn fidelity(s: &StokesVector, target: &StokesVector) -> Result<f64> {
    let n = target.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitTarget(n));
    }
    Ok(0.5 * (1.0 + s.dot(target)))
}

/// Inverts `avg = (1 − p)·cav + p·up` channel by channel for `up`.
pub fn extrapolate_conditional(avg: &IntensitySextet, cav: &IntensitySextet, p_up: f64) -> Result<IntensitySextet> {
    if !(p_up > 0.0 && p_up <= 1.0) {
        return Err(Error::NonInvertibleMixture(p_up));
    }
    let a = avg.to_array();
    let c = cav.to_array();
    let mut out = IntensitySextet::from_array(std::array::from_fn(|i| (a[i] - (1.0 - p_up) * c[i]) / p_up));
    out.raw = true;
    Ok(out)
}

/// Nearest physical Stokes vector: vectors outside the unit ball are
/// rescaled onto its surface.
pub fn project_physical(s: &StokesVector) -> StokesVector {
    let n = s.norm();
    if n > 1.0 {
        *s * (1.0 / n)
    } else {
        *s
    }
}

pub fn density_from_stokes(s: &StokesVector) -> Result<PolarisationDensityMatrix> {
    let n = s.norm();
    if n > 1.0 + 1e-12 {
        return Err(Error::UnphysicalState(n));
    }
    let half = 0.5;
    Ok(PolarisationDensityMatrix {
        m: [
            [Complex64::new(half * (1.0 + s.s_hv), 0.0), Complex64::new(half * s.s_da, half * s.s_rl)],
            [Complex64::new(half * s.s_da, -half * s.s_rl), Complex64::new(half * (1.0 - s.s_hv), 0.0)],
        ],
    })
}

pub fn stokes_from_density(rho: &PolarisationDensityMatrix) -> StokesVector {
    let off = rho.m[0][1];
    StokesVector::new(rho.m[0][0].re - rho.m[1][1].re, 2.0 * off.re, 2.0 * off.im)
}
