//! Weak-drive reflection off the two-mode cavity with an embedded
//! spin-selective transition.
//!
//! In the frame rotating at the laser frequency the steady-state amplitudes
//! `(α_H, α_V, β)` of the two cavity modes and of the trion dipole obey
//!
//! ```text
//! (i(ω_X − ω_L) + κ_X/2)·α_X + i·g_X·β          = √(η κ_X)·b_X     X ∈ {H, V}
//! (i(ω_QD − ω_L) + γ_tot/2)·β + i·Σ_X g_X*·α_X  = 0
//! b_out,X = b_X − √(η κ_X)·α_X
//! ```
//!
//! The dipole couples to `a_+ = (a_H − iχ·a_V)/√2`, so `g_X = g·(1, iχ)/√2`.
//! The system is solved by eliminating the cavity amplitudes first, which
//! leaves a scalar equation for β; no general linear solver is involved.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{Chirality, DeviceParams, GroundState};
use crate::polarisation::{Basis, CoherenceMatrix, JonesVector, ScatteringMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CavityMode {
    H,
    V,
}

/// Monochromatic probe: laser energy and unit-norm input polarisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveField {
    pub omega_laser: f64,
    pub jones_in: JonesVector,
}

impl DriveField {
    pub fn new(omega_laser: f64, jones_in: JonesVector) -> Result<Self> {
        if !omega_laser.is_finite() {
            return Err(Error::InvalidJones("laser energy is not finite".into()));
        }
        if (jones_in.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidJones(format!(
                "input Jones vector must have unit norm (|E| = {})",
                jones_in.norm()
            )));
        }
        Ok(DriveField { omega_laser, jones_in })
    }

    /// V-polarised probe, aligned with a cavity eigenaxis.
    pub fn vertical(omega_laser: f64) -> Self {
        DriveField { omega_laser, jones_in: Basis::V.jones() }
    }
}

/// Coupling constants `(g_H, g_V)` of a dipole of the given handedness.
pub(crate) fn coupling_vector(g: f64, chirality: Chirality) -> [Complex64; 2] {
    let s = g * FRAC_1_SQRT_2;
    [Complex64::new(s, 0.0), Complex64::new(0.0, s * chirality.sign())]
}

/// Single-mode reflection coefficient of the bare cavity,
/// `r_X = 1 − η κ_X / (i(ω_X − ω_L) + κ_X/2)`.
pub fn empty_cavity_reflection(params: &DeviceParams, omega_laser: f64, mode: CavityMode) -> Complex64 {
    let (omega, kappa) = match mode {
        CavityMode::H => (params.omega_cav_h, params.kappa_h),
        CavityMode::V => (params.omega_cav_v, params.kappa_v),
    };
    let den = Complex64::new(kappa / 2.0, omega - omega_laser);
    1.0 - params.eta_top * kappa / den
}

/// Steady-state intracavity amplitudes `[α_H, α_V]` and dipole amplitude β
/// for an input field `b` (amplitudes per unit input flux).
pub fn intracavity_amplitudes(
    params: &DeviceParams,
    omega_laser: f64,
    ground: GroundState,
    b: &JonesVector,
) -> Result<([Complex64; 2], Complex64)> {
    let kappa = [params.kappa_h, params.kappa_v];
    let omega_cav = [params.omega_cav_h, params.omega_cav_v];
    let cav: [Complex64; 2] = std::array::from_fn(|x| Complex64::new(kappa[x] / 2.0, omega_cav[x] - omega_laser));
    let drive = [
        (params.eta_top * kappa[0]).sqrt() * b.h,
        (params.eta_top * kappa[1]).sqrt() * b.v,
    ];

    let transition = params.transition(ground).filter(|_| params.g > 0.0);
    let Some((omega_qd, chirality)) = transition else {
        return Ok(([drive[0] / cav[0], drive[1] / cav[1]], Complex64::new(0.0, 0.0)));
    };

    let emitter = Complex64::new(params.gamma_total() / 2.0, omega_qd - omega_laser);
    let gx = coupling_vector(params.g, chirality);

    // Eliminating α_X = (e_X − i g_X β)/c_X from the dipole equation gives
    // β·(c_e + Σ_X |g_X|²/c_X) = −i Σ_X g_X* e_X / c_X.
    let dressed = emitter + gx[0].norm_sqr() / cav[0] + gx[1].norm_sqr() / cav[1];
    let scale = emitter.norm() + gx[0].norm_sqr() / (kappa[0] / 2.0) + gx[1].norm_sqr() / (kappa[1] / 2.0);
    if !dressed.is_finite() || !(dressed.norm() > 1e-14 * scale) {
        return Err(Error::DegenerateModel);
    }
    let source = gx[0].conj() * drive[0] / cav[0] + gx[1].conj() * drive[1] / cav[1];
    let beta = -I * source / dressed;
    let alpha = [
        (drive[0] - I * gx[0] * beta) / cav[0],
        (drive[1] - I * gx[1] * beta) / cav[1],
    ];
    Ok((alpha, beta))
}

pub fn scattering_matrix(params: &DeviceParams, omega_laser: f64, ground: GroundState) -> Result<ScatteringMatrix> {
    if params.transition(ground).is_none() || params.g == 0.0 {
        return Ok(ScatteringMatrix::diag(
            empty_cavity_reflection(params, omega_laser, CavityMode::H),
            empty_cavity_reflection(params, omega_laser, CavityMode::V),
        ));
    }
    let port = [(params.eta_top * params.kappa_h).sqrt(), (params.eta_top * params.kappa_v).sqrt()];
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (j, input) in [Basis::H.jones(), Basis::V.jones()].iter().enumerate() {
        let (alpha, _) = intracavity_amplitudes(params, omega_laser, ground, input)?;
        let b_in = [input.h, input.v];
        for x in 0..2 {
            m[x][j] = b_in[x] - port[x] * alpha[x];
        }
    }
    Ok(ScatteringMatrix { m })
}

/// Reflected Jones vector and its coherence matrix.
pub fn reflect(params: &DeviceParams, drive: &DriveField, ground: GroundState) -> Result<(JonesVector, CoherenceMatrix)> {
    let s = scattering_matrix(params, drive.omega_laser, ground)?;
    let out = s.apply(&drive.jones_in);
    Ok((out, out.coherence()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularResponse {
    pub r_r: Complex64,
    pub r_l: Complex64,
    /// arg(r_R) − arg(r_L), wrapped to (−π, π].
    pub phase_diff: f64,
}

impl CircularResponse {
    pub fn amplitude_ratio(&self) -> f64 {
        self.r_r.norm() / self.r_l.norm()
    }
}

/// Circular reflection coefficients referenced to a V-polarised input.
///
/// `r_R = ⟨R|S|V⟩/⟨R|V⟩` and `r_L = ⟨L|S|V⟩/⟨L|V⟩`, so that the reflected
/// state of a V input is exactly `∝ r_R|R⟩ − r_L|L⟩`. When the scattering
/// matrix is diagonal in the circular basis these are its diagonal entries.
pub fn circular_diagonal(params: &DeviceParams, omega_laser: f64, ground: GroundState) -> Result<CircularResponse> {
    circular_coefficients(params, omega_laser, ground, &Basis::V.jones())
}

/// As [`circular_diagonal`] for an arbitrary input with non-zero R and L
/// components.
pub fn circular_coefficients(
    params: &DeviceParams,
    omega_laser: f64,
    ground: GroundState,
    input: &JonesVector,
) -> Result<CircularResponse> {
    let s = scattering_matrix(params, omega_laser, ground)?;
    let out = s.apply(input);
    let (r, l) = (Basis::R.jones(), Basis::L.jones());
    let (in_r, in_l) = (r.inner(input), l.inner(input));
    if in_l.norm() < 1e-14 || in_r.norm() < 1e-14 {
        return Err(Error::VanishingReferenceAmplitude);
    }
    let r_r = r.inner(&out) / in_r;
    let r_l = l.inner(&out) / in_l;
    if r_l.norm() < 1e-14 {
        return Err(Error::VanishingReferenceAmplitude);
    }
    let phase_diff = wrap_phase(r_r.arg() - r_l.arg());
    Ok(CircularResponse { r_r, r_l, phase_diff })
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Left-multiplies `s` by `diag(e^{iφ}, 1)` in the circular basis: an
/// extra phase φ on the R component of every output.
pub fn with_circular_phase(s: &ScatteringMatrix, phi: f64) -> ScatteringMatrix {
    let r = Basis::R.jones();
    let extra = Complex64::from_polar(1.0, phi) - 1.0;
    // (1 + (e^{iφ} − 1)|R⟩⟨R|)·S
    let proj = [[r.h * r.h.conj(), r.h * r.v.conj()], [r.v * r.h.conj(), r.v * r.v.conj()]];
    let mut m = s.m;
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] += extra * (proj[i][0] * s.m[0][j] + proj[i][1] * s.m[1][j]);
        }
    }
    ScatteringMatrix { m }
}

/// Purcell-broadened homogeneous linewidth (FWHM) of a transition at
/// `omega_qd`: `Γ = γ_tot + Σ_X |g_X|²·κ_X / ((κ_X/2)² + (ω_QD − ω_X)²)`.
pub fn purcell_linewidth(params: &DeviceParams, omega_qd: f64) -> f64 {
    let g2 = params.g * params.g / 2.0;
    let mode = |kappa: f64, omega: f64| {
        let d = omega_qd - omega;
        g2 * kappa / (kappa * kappa / 4.0 + d * d)
    };
    params.gamma_total() + mode(params.kappa_h, params.omega_cav_h) + mode(params.kappa_v, params.omega_cav_v)
}

/// `C = 2g² / (κ̄ γ_sp)` with κ̄ the mean of the two mode widths.
pub fn cooperativity(params: &DeviceParams) -> Result<f64> {
    if params.gamma_sp <= 0.0 {
        return Err(Error::InfiniteCooperativity);
    }
    Ok(2.0 * params.g * params.g / (params.mean_kappa() * params.gamma_sp))
}
