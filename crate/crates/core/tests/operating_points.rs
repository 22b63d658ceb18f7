use std::f64::consts::{FRAC_PI_2, PI};

use spinpol_core::calibrate::{find_operating_point, OperatingPoint, TargetSpec, ZeemanMap};
use spinpol_core::ensemble::{spectrum_scan, Conditioning, NoiseModel, OccupationModel};
use spinpol_core::model::{circular_diagonal, purcell_linewidth};
use spinpol_core::tomography::{extrapolate_conditional, fidelity, stokes_from_sextet, StokesVector};
use spinpol_core::{Basis, Chirality, DeviceParams, GroundState};

fn device(omega_qd_up: f64) -> DeviceParams {
    DeviceParams { omega_qd_up, ..DeviceParams::reference_device() }
}

fn search(p: &DeviceParams, target: Basis, qd: (f64, f64), sigma: f64) -> OperatingPoint {
    let spec = TargetSpec::new(StokesVector::of(target), Basis::V.jones(), qd, (-15.0, 15.0), NoiseModel::gaussian(sigma));
    find_operating_point(p, &spec).unwrap()
}

#[test]
fn pi_configuration_with_noise() {
    let p = device(51.4);
    let op = search(&p, Basis::H, (51.4, 51.4), 0.5);
    assert!((op.fidelity - 0.905).abs() <= 0.03, "{op:?}");
    assert!((op.purity - 0.81).abs() <= 0.05, "{op:?}");
    let c = circular_diagonal(&p, op.omega_laser, GroundState::Up).unwrap();
    assert!((c.phase_diff.abs() - PI).abs() < 0.1, "phase {}", c.phase_diff);
}

#[test]
fn half_pi_configuration_with_noise() {
    let p = device(14.1);
    let op = search(&p, Basis::A, (14.1, 14.1), 0.5);
    assert!((op.fidelity - 0.99).abs() <= 0.01, "{op:?}");
    assert!((op.purity - 0.98).abs() <= 0.01, "{op:?}");
    let c = circular_diagonal(&p, op.omega_laser, GroundState::Up).unwrap();
    assert!((c.phase_diff.abs() - FRAC_PI_2).abs() < 0.1, "phase {}", c.phase_diff);

    // Opposite handedness reaches the mirror image, |D⟩.
    let q = DeviceParams { chirality: Chirality::Minus, ..p };
    let mirrored = search(&q, Basis::D, (14.1, 14.1), 0.5);
    assert!((mirrored.fidelity - op.fidelity).abs() < 1e-9);
}

#[test]
fn noiseless_antidiagonal_target_is_reached_near_half_pi_detuning() {
    let p = DeviceParams::reference_device();
    let op = search(&p, Basis::A, (0.0, 60.0), 0.0);
    assert!(op.fidelity > 0.999, "{op:?}");
    assert!((op.omega_qd_up - 14.1).abs() < 3.0, "{op:?}");
}

#[test]
fn pi_configuration_noiseless_is_purer() {
    let p = device(51.4);
    let noisy = search(&p, Basis::H, (51.4, 51.4), 0.5);
    let clean = search(&p, Basis::H, (51.4, 51.4), 0.0);
    assert!((clean.purity - 1.0).abs() < 1e-9);
    assert!(clean.fidelity > noisy.fidelity);
}

#[test]
fn purcell_linewidth_near_pi_detuning() {
    let fwhm = purcell_linewidth(&DeviceParams::reference_device(), 52.0);
    assert!((fwhm - 3.5).abs() < 0.1, "{fwhm}");
}

#[test]
fn zeeman_labels_of_the_two_configurations() {
    let z = ZeemanMap::reference(0.0);
    assert!((z.field_at(51.4).unwrap() - 1.69).abs() < 1e-12);
    assert!((z.field_at(14.1).unwrap() - 1.35).abs() < 1e-12);
}

#[test]
fn extrapolated_trajectory_reaches_horizontal_on_resonance() {
    // 1.7 T: ω_QD↑ just above the π configuration, P↑ = 0.47.
    let p = device(ZeemanMap::reference(0.0).omega_at(1.7));
    let occ = OccupationModel::new(0.47, 0.47, 0.06).unwrap();
    let noise = NoiseModel::gaussian(0.5);
    let grid: Vec<f64> = (0..401).map(|k| p.omega_qd_up - 10.0 + 0.05 * k as f64).collect();
    let v = Basis::V.jones();
    let avg = spectrum_scan(&p, &grid, &v, &occ, &noise, Conditioning::Avg).unwrap();
    let cav = spectrum_scan(&p, &grid, &v, &occ, &noise, Conditioning::Cav).unwrap();
    // The forward average uses P↑ = 0.47 and a ↓ branch that is not quite
    // transparent, so the inversion is approximate.
    let mut best = 0.0f64;
    for (a, c) in avg.iter().zip(&cav) {
        let up = extrapolate_conditional(&a.sextet(), &c.sextet(), 0.47).unwrap();
        let s = stokes_from_sextet(&up).unwrap();
        best = best.max(fidelity(&s, &StokesVector::of(Basis::H)).unwrap());
    }
    assert!(best > 0.85, "best fidelity to H {best}");

    // Far from resonance the extrapolated state is the input.
    let a = &avg[0];
    let up = extrapolate_conditional(&a.sextet(), &cav[0].sextet(), 0.47).unwrap();
    let s = stokes_from_sextet(&up).unwrap();
    assert!(s.s_hv < -0.9);
}

#[test]
fn averaged_spectrum_shows_rotation_only_near_the_transition() {
    let p = device(51.4);
    let occ = OccupationModel::from_charge_occupation(0.94).unwrap();
    let grid: Vec<f64> = (0..601).map(|k| -100.0 + 0.5 * k as f64).collect();
    let recs = spectrum_scan(&p, &grid, &Basis::V.jones(), &occ, &NoiseModel::gaussian(0.5), Conditioning::Avg).unwrap();
    let (peak_i, peak) = recs.iter().enumerate().fold((0, 0.0f64), |acc, (i, r)| if r.i_h > acc.1 { (i, r.i_h) } else { acc });
    assert!((grid[peak_i] - 51.4).abs() < 5.0);
    assert!(peak > 0.05);
    for r in recs.iter().filter(|r| (r.omega_laser_ueV - 51.4).abs() > 60.0) {
        assert!(r.s_hv < -0.99, "{r:?}");
    }
}
