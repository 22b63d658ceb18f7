//! Field states in the fixed (H, V) basis.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The six tomography analysis states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Basis {
    pub const ALL: [Basis; 6] = [Basis::H, Basis::V, Basis::D, Basis::A, Basis::R, Basis::L];

    pub fn jones(self) -> JonesVector {
        let s = FRAC_1_SQRT_2;
        let (h, v) = match self {
            Basis::H => (ONE, ZERO),
            Basis::V => (ZERO, ONE),
            Basis::D => (Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
            Basis::A => (Complex64::new(s, 0.0), Complex64::new(-s, 0.0)),
            Basis::R => (Complex64::new(s, 0.0), Complex64::new(0.0, -s)),
            Basis::L => (Complex64::new(s, 0.0), Complex64::new(0.0, s)),
        };
        JonesVector { h, v }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Basis::H => "H",
            Basis::V => "V",
            Basis::D => "D",
            Basis::A => "A",
            Basis::R => "R",
            Basis::L => "L",
        };
        f.write_str(s)
    }
}

impl FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "H" | "h" => Ok(Basis::H),
            "V" | "v" => Ok(Basis::V),
            "D" | "d" => Ok(Basis::D),
            "A" | "a" => Ok(Basis::A),
            "R" | "r" => Ok(Basis::R),
            "L" | "l" => Ok(Basis::L),
            other => Err(format!("unknown polarisation `{other}` (expected H, V, D, A, R or L)")),
        }
    }
}

/// Pure polarisation state, `(c_H, c_V)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesVector {
    pub h: Complex64,
    pub v: Complex64,
}

impl JonesVector {
    pub fn new(h: Complex64, v: Complex64) -> Self {
        JonesVector { h, v }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidJones("cannot normalise a zero vector".into()));
        }
        Ok(JonesVector { h: self.h / n, v: self.v / n })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    pub fn scale(&self, c: Complex64) -> Self {
        JonesVector { h: self.h * c, v: self.v * c }
    }

    /// |self⟩⟨self|, i.e. `G_XY = E_X E_Y*`.
    pub fn coherence(&self) -> CoherenceMatrix {
        CoherenceMatrix {
            m: [
                [self.h * self.h.conj(), self.h * self.v.conj()],
                [self.v * self.h.conj(), self.v * self.v.conj()],
            ],
        }
    }
}

/// Unnormalised 2×2 coherence matrix `G_XY = ⟨E_X E_Y*⟩` in the (H, V) basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceMatrix {
    pub m: [[Complex64; 2]; 2],
}

impl Default for CoherenceMatrix {
    fn default() -> Self {
        CoherenceMatrix::zero()
    }
}

impl CoherenceMatrix {
    pub fn zero() -> Self {
        CoherenceMatrix { m: [[ZERO; 2]; 2] }
    }

    pub fn diag(hh: f64, vv: f64) -> Self {
        CoherenceMatrix {
            m: [[Complex64::new(hh, 0.0), ZERO], [ZERO, Complex64::new(vv, 0.0)]],
        }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    pub fn scaled(&self, w: f64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for c in row.iter_mut() {
                *c *= w;
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &CoherenceMatrix, w: f64) {
        for i in 0..2 {
            for j in 0..2 {
                self.m[i][j] += other.m[i][j] * w;
            }
        }
    }

    /// `e† G e`: intensity transmitted by an analyser set to `e`.
    pub fn project(&self, e: &JonesVector) -> f64 {
        let c = [e.h, e.v];
        let mut acc = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                acc += c[i].conj() * self.m[i][j] * c[j];
            }
        }
        acc.re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let off = (self.m[0][1] - self.m[1][0].conj()).norm();
        off.max(self.m[0][0].im.abs()).max(self.m[1][1].im.abs())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }
}

/// 2×2 linear map on Jones vectors; column `j` is the output for unit
/// input along basis state `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringMatrix {
    pub m: [[Complex64; 2]; 2],
}

impl ScatteringMatrix {
    pub fn diag(a: Complex64, b: Complex64) -> Self {
        ScatteringMatrix { m: [[a, ZERO], [ZERO, b]] }
    }

    pub fn apply(&self, e: &JonesVector) -> JonesVector {
        JonesVector {
            h: self.m[0][0] * e.h + self.m[0][1] * e.v,
            v: self.m[1][0] * e.h + self.m[1][1] * e.v,
        }
    }

    /// The same operator expressed in the (R, L) basis: entry `(i, j)` is
    /// `⟨c_i| S |c_j⟩` with `c = (R, L)`.
    pub fn in_circular_basis(&self) -> [[Complex64; 2]; 2] {
        let basis = [Basis::R.jones(), Basis::L.jones()];
        let mut out = [[ZERO; 2]; 2];
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                out[i][j] = bi.inner(&self.apply(bj));
            }
        }
        out
    }

    pub fn max_entry_diff(&self, other: &ScatteringMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }

    /// Largest singular value, i.e. the maximum output norm over unit inputs.
    pub fn operator_norm(&self) -> f64 {
        // Eigenvalues of S†S.
        let mut sts = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                sts[i][j] = self.m[0][i].conj() * self.m[0][j] + self.m[1][i].conj() * self.m[1][j];
            }
        }
        CoherenceMatrix { m: sts }.eigenvalues()[1].max(0.0).sqrt()
    }
}
