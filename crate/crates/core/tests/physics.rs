//! Closed-loop checks on the memory model that need whole runs.

use rms_core::greens::{extract_greens, mode_vacuum_photons, Mode};
use rms_core::medium::MediumParams;
use rms_core::parallel::Parallelism;
use rms_core::presets::{calibrate_dipole_constant, memory_preset, CalibrationSearch};
use rms_core::pulse::{PulseCalibration, DEFAULT_DIPOLE_CONSTANT};
use rms_core::runner::{lifetime_from_scan, point_setup, run_scan, Case, GridSpec, Observable, ScanRange, ScanSpec, ScanVariable};
use rms_core::solver::SimGrid;

#[test]
fn storage_scan_recovers_preset_lifetime() {
    let base = memory_preset("bns-930pj-70ns").unwrap();
    let spec = ScanSpec {
        scan_variable: ScanVariable::StorageTime,
        range: ScanRange { lo: 70.0, hi: 1000.0, n_points: 7 },
        cases: vec![Case::Bns],
        base_preset: base.name.clone(),
        outputs: vec![Observable::Eta],
        grid: GridSpec { n_z: 30, min_n_t: 400 },
    };
    let r = run_scan(&spec, &base, &PulseCalibration::default(), Parallelism::Parallel).unwrap();
    assert_eq!(r.failures(), 0);
    let tau = lifetime_from_scan(&r, Case::Bns).unwrap().value("tau_ns");
    assert!((tau / 625.0 - 1.0).abs() <= 0.02, "tau = {tau}");
}

fn window_noise(preset: &str, n_z: usize) -> (f64, f64) {
    let base = memory_preset(preset).unwrap();
    let calib = PulseCalibration::default();
    let s = point_setup(&base, &calib, ScanVariable::Detuning, 0.0, base.side, true).unwrap();
    let grid = SimGrid::resolving(&s.sequence, n_z, 400).unwrap();
    let w = [s.sequence.input_window(), s.sequence.retrieval_window()];
    let n = mode_vacuum_photons(&s.medium, &s.detuning, &s.sequence, &grid, &s.options, Mode::AntiStokes, &w, Parallelism::Parallel)
        .unwrap();
    (n[0], n[1])
}

#[test]
fn std_anti_stokes_noise_grows_into_retrieval() {
    let (inp, ret) = window_noise("std-930pj-70ns", 60);
    assert!(ret > inp, "input {inp:.4e}, retrieval {ret:.4e}");
    // Reported only: on the BNS side the two windows differ by tens of
    // percent on this grid, not by the few percent one might expect.
    let (b_in, b_ret) = window_noise("bns-930pj-70ns", 60);
    eprintln!("BNS anti-Stokes vacuum noise: input {b_in:.4e}, retrieval {b_ret:.4e}");
    assert!(b_ret < ret && b_in < inp);
}

#[test]
fn greens_extraction_is_deterministic_across_backends() {
    let mut base = memory_preset("sim-750pj").unwrap();
    base.read_in_pj = 60.0;
    base.read_out_pj = 60.0;
    let calib = PulseCalibration::default();
    let s = point_setup(&base, &calib, ScanVariable::Detuning, 0.0, base.side, true).unwrap();
    let grid = SimGrid::resolving(&s.sequence, 12, 200).unwrap();
    let a = extract_greens(&s.medium, &s.detuning, &s.sequence, &grid, &s.options, Parallelism::Parallel).unwrap();
    let b = extract_greens(&s.medium, &s.detuning, &s.sequence, &grid, &s.options, Parallelism::Sequential).unwrap();
    assert_eq!(a.dump().unwrap(), b.dump().unwrap());
}

#[test]
fn default_dipole_constant_matches_calibration() {
    let r = calibrate_dipole_constant(
        &MediumParams::caesium_simulation(),
        &PulseCalibration::default(),
        &CalibrationSearch::default(),
    )
    .unwrap();
    assert!((r.dipole_constant / DEFAULT_DIPOLE_CONSTANT - 1.0).abs() < 1e-9, "{r:?}");
    assert!(r.eta_std > 0.7);
}
