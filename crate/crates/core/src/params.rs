//! Physical constants of the cavity–emitter device.
//!
//! All energies and rates are in μeV with ħ = 1. Energies are measured
//! relative to a declared reference, by default the V-polarised cavity mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Handedness of the spin-selective dipole.
///
/// With `Plus` the ↑-trion couples to the cavity field combination
/// `a_+ = (a_H − i·a_V)/√2`; with `Minus` to `(a_H + i·a_V)/√2`. The ↓-trion
/// always couples to the opposite combination of the ↑-trion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Chirality {
    #[default]
    Plus,
    Minus,
}

impl Chirality {
    pub fn sign(self) -> f64 {
        match self {
            Chirality::Plus => 1.0,
            Chirality::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Chirality::Plus => Chirality::Minus,
            Chirality::Minus => Chirality::Plus,
        }
    }
}

impl TryFrom<i8> for Chirality {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Chirality::Plus),
            -1 => Ok(Chirality::Minus),
            other => Err(format!("chirality must be +1 or -1, got {other}")),
        }
    }
}

impl From<Chirality> for i8 {
    fn from(c: Chirality) -> i8 {
        match c {
            Chirality::Plus => 1,
            Chirality::Minus => -1,
        }
    }
}

/// Ground state of the quantum dot during a reflection event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundState {
    Up,
    Down,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    #[serde(rename = "omega_cav_V")]
    pub omega_cav_v: f64,
    #[serde(rename = "omega_cav_H")]
    pub omega_cav_h: f64,
    #[serde(rename = "kappa_V")]
    pub kappa_v: f64,
    #[serde(rename = "kappa_H")]
    pub kappa_h: f64,
    pub eta_top: f64,
    pub g: f64,
    pub gamma_sp: f64,
    #[serde(default)]
    pub gamma_pd: f64,
    pub omega_qd_up: f64,
    pub omega_qd_down: f64,
    #[serde(default)]
    pub chirality: Chirality,
}

impl DeviceParams {
    /// The characterised micropillar: κ_V = 162, κ_H = 155, Δ = 146,
    /// η_top = 0.635, g = 15, γ_sp = 0.35 (μeV), with the ↑ transition
    /// 51.4 μeV above the V mode and the ↓ transition far below both modes.
    pub fn reference_device() -> Self {
        DeviceParams {
            omega_cav_v: 0.0,
            omega_cav_h: 146.0,
            kappa_v: 162.0,
            kappa_h: 155.0,
            eta_top: 0.635,
            g: 15.0,
            gamma_sp: 0.35,
            gamma_pd: 0.0,
            omega_qd_up: 51.4,
            omega_qd_down: -400.0,
            chirality: Chirality::Plus,
        }
    }

    /// Birefringent splitting ω_cav,H − ω_cav,V.
    pub fn splitting(&self) -> f64 {
        self.omega_cav_h - self.omega_cav_v
    }

    pub fn mean_kappa(&self) -> f64 {
        0.5 * (self.kappa_h + self.kappa_v)
    }

    /// Total emitter coherence decay rate, γ_sp + 2γ_pd.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_sp + 2.0 * self.gamma_pd
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_cav_V", self.omega_cav_v),
            ("omega_cav_H", self.omega_cav_h),
            ("kappa_V", self.kappa_v),
            ("kappa_H", self.kappa_h),
            ("eta_top", self.eta_top),
            ("g", self.g),
            ("gamma_sp", self.gamma_sp),
            ("gamma_pd", self.gamma_pd),
            ("omega_qd_up", self.omega_qd_up),
            ("omega_qd_down", self.omega_qd_down),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParams(msg.to_string()))
            }
        };
        check(self.kappa_v > 0.0, "kappa_V must be > 0")?;
        check(self.kappa_h > 0.0, "kappa_H must be > 0")?;
        check(self.g >= 0.0, "g must be >= 0")?;
        check(self.gamma_sp >= 0.0, "gamma_sp must be >= 0")?;
        check(self.gamma_pd >= 0.0, "gamma_pd must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.eta_top),
            "eta_top must lie in [0, 1]",
        )
    }

    /// Transition energy and effective chirality for a ground state, or
    /// `None` when no transition is active.
    pub(crate) fn transition(&self, ground: GroundState) -> Option<(f64, Chirality)> {
        match ground {
            GroundState::Up => Some((self.omega_qd_up, self.chirality)),
            GroundState::Down => Some((self.omega_qd_down, self.chirality.flipped())),
            GroundState::Empty => None,
        }
    }

    /// Copy with the transition of `ground` moved to `omega`.
    pub fn with_transition(&self, ground: GroundState, omega: f64) -> Self {
        let mut p = self.clone();
        match ground {
            GroundState::Up => p.omega_qd_up = omega,
            GroundState::Down => p.omega_qd_down = omega,
            GroundState::Empty => {}
        }
        p
    }
}
