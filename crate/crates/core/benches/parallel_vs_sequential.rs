use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rms_core::greens::extract_greens;
use rms_core::parallel::Parallelism;
use rms_core::presets::memory_preset;
use rms_core::pulse::PulseCalibration;
use rms_core::runner::{run_scan, Case, GridSpec, Observable, ScanRange, ScanSpec, ScanVariable};

fn strategies() -> [(&'static str, Parallelism); 2] {
    [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)]
}

fn kernels(c: &mut Criterion) {
    // A weak control keeps the time grid at its floor.
    let mut preset = memory_preset("sim-750pj").unwrap();
    preset.read_in_pj = 50.0;
    preset.read_out_pj = 50.0;
    let calib = PulseCalibration::default();
    let seq = preset.sequence(&calib).unwrap();
    let grid = GridSpec { n_z: 40, min_n_t: 300 }.grid_for(&seq).unwrap();
    let cfg = preset.detuning();
    let opts = preset.solver_options();
    let mut group = c.benchmark_group("extract_greens");
    group.sample_size(10);
    for (name, par) in strategies() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &par, |b, &par| {
            b.iter(|| extract_greens(&preset.medium, &cfg, &seq, &grid, &opts, par).unwrap())
        });
    }
    group.finish();
}

fn detuning_scan(c: &mut Criterion) {
    let preset = memory_preset("sim-750pj").unwrap();
    let calib = PulseCalibration::default();
    let spec = ScanSpec {
        scan_variable: ScanVariable::Detuning,
        range: ScanRange { lo: 0.5, hi: 5.0, n_points: 10 },
        cases: vec![Case::Std, Case::FwmOff],
        base_preset: preset.name.clone(),
        outputs: vec![Observable::Eta, Observable::EtaMinusIdeal],
        grid: GridSpec { n_z: 80, min_n_t: 2000 },
    };
    let mut group = c.benchmark_group("detuning_scan");
    group.sample_size(10);
    for (name, par) in strategies() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &par, |b, &par| {
            b.iter(|| run_scan(&spec, &preset, &calib, par).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels, detuning_scan);
criterion_main!(benches);
