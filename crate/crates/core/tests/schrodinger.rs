mod common;

use std::f64::consts::PI;

use decoh_core::classical::integrate_trajectory;
use decoh_core::schrodinger::*;
use decoh_core::{PhaseSpacePoint, PhysicalConstants, PotentialSpec, SpatialGrid};
use num_complex::Complex64;

const UNIT: PhysicalConstants = PhysicalConstants {
    hbar: 1.0,
    mass: 1.0,
    kb: 1.0,
};

fn big_grid() -> SpatialGrid {
    SpatialGrid::new(32.0, 1024, 1.0).unwrap()
}

#[test]
fn split_step_matches_dense_exponential() {
    let g = SpatialGrid::new(16.0, 64, 1.0).unwrap();
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let tau = 1e-2;
    let h = common::dense_hamiltonian(&g, &spec, &UNIT);
    let u = common::expm(&h.scale(Complex64::new(0.0, -tau)));
    let psi = init_gaussian_packet(&g, 0.5, 1.0, 1.0).unwrap();
    let exact = u.apply(psi.amplitudes());
    let split = split_step_propagate(&psi, &spec, &UNIT, tau, 1).unwrap();
    let err: f64 = exact.iter().zip(split.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    // Strang local error is O(τ³)
    assert!(err < 1e-5, "max amplitude error {err}");
}

#[test]
fn energy_is_conserved_over_ten_thousand_steps() {
    let g = big_grid();
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let psi = init_gaussian_packet(&g, 1.5, -0.5, 1.0).unwrap();
    let (records, end) = run_expectations(&psi, &spec, &UNIT, 1e-4, 10_000, 100).unwrap();
    let e0 = records[0].energy_mean;
    let drift = records.iter().map(|r| (r.energy_mean - e0).abs() / e0).fold(0.0, f64::max);
    assert!(drift < 1e-8, "relative energy drift {drift}");
    assert!((end.norm() - 1.0).abs() < 1e-10);
}

#[test]
fn records_respect_the_uncertainty_relation() {
    let g = SpatialGrid::new(16.0, 256, 1.0).unwrap();
    let psi = init_gaussian_packet(&g, 0.0, 2.0, 1.0).unwrap();
    let (records, _) = run_expectations(&psi, &PotentialSpec::DoubleWell { a: 0.01, b: 0.2 }, &UNIT, 1e-3, 2000, 50).unwrap();
    for r in records {
        assert!(r.q_var >= 0.0 && r.p_var >= 0.0);
        assert!(r.q_var * r.p_var >= 0.25 - 1e-9);
    }
}

#[test]
fn ehrenfest_residuals_are_second_order_in_the_stride() {
    let g = big_grid();
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let psi = init_gaussian_packet(&g, 2.0, 0.0, 1.0).unwrap();
    let tau = 1e-3;
    let (records, _) = run_expectations(&psi, &spec, &UNIT, tau, 2000, 1).unwrap();
    let strides = [20usize, 10, 5];
    let mut errs = Vec::new();
    for s in strides {
        let sub: Vec<ExpectationRecord> = records.iter().step_by(s).copied().collect();
        let res = ehrenfest_residuals(&sub, &UNIT).unwrap();
        errs.push(res.iter().map(|r| r.r_p.abs()).fold(0.0, f64::max));
    }
    let dts: Vec<f64> = strides.iter().map(|&s| s as f64 * tau).collect();
    let slope = common::slope(&dts, &errs);
    assert!((slope - 2.0).abs() < 0.2, "slope {slope}, errors {errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((ratio - 4.0).abs() < 0.5, "halving ratio {ratio}");
}

#[test]
fn harmonic_expectations_follow_the_classical_trajectory() {
    let g = big_grid();
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let n = 6283;
    let tau = 2.0 * PI / n as f64;
    let psi = init_gaussian_packet(&g, 2.0, 0.0, 1.0).unwrap();
    let (records, _) = run_expectations(&psi, &spec, &UNIT, tau, n, 1).unwrap();
    let x0 = PhaseSpacePoint::one_d(records[0].q_mean, records[0].p_mean);
    let traj = integrate_trajectory(&x0, &spec, &UNIT, tau, n, 1).unwrap();
    let scale = traj.states.iter().map(|s| s.q[0].abs()).fold(0.0, f64::max);
    let dev = records
        .iter()
        .zip(&traj.states)
        .map(|(r, s)| (r.q_mean - s.q[0]).abs())
        .fold(0.0, f64::max);
    assert!(dev / scale < 1e-6, "relative deviation {}", dev / scale);
}

#[test]
fn quartic_expectations_do_not_close_on_the_classical_force() {
    let g = SpatialGrid::new(16.0, 256, 1.0).unwrap();
    let spec = PotentialSpec::Quartic { a: 0.1 };
    let psi = init_gaussian_packet(&g, 1.0, 0.0, 1.0).unwrap();
    let (records, _) = run_expectations(&psi, &spec, &UNIT, 1e-3, 10_000, 10).unwrap();
    let res = ehrenfest_residuals(&records, &UNIT).unwrap();
    let floor = res.iter().map(|r| r.r_p.abs()).fold(0.0, f64::max);
    let late_gap = records[records.len() / 2..]
        .iter()
        .map(|r| classical_force_gap(r, &spec))
        .fold(0.0, f64::max);
    assert!(late_gap > 10.0 * floor, "gap {late_gap} vs floor {floor}");
}

#[test]
fn harmonic_cat_state_is_flagged_and_packets_are_not() {
    let g = big_grid();
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let dp = g.momentum_spacing();
    let env = Envelope::Gaussian { centre: 0.0, width: 1.0 };
    let cat = superposition_demo(&g, &spec, &UNIT, 20.0 * dp, -20.0 * dp, env, 1e-3, 2.0 * PI, 10).unwrap();
    assert!(cat.non_classical, "min max deviation {}", cat.min_max_deviation);

    let single = classical_divergence(&g, &spec, &UNIT, &[20.0 * dp], env, 1e-3, 2.0 * PI, 10).unwrap();
    assert!(!single.non_classical, "min max deviation {}", single.min_max_deviation);
}

#[test]
fn csv_rows_leave_edge_residuals_empty() {
    let g = big_grid();
    let psi = init_gaussian_packet(&g, 0.0, 1.0, 1.0).unwrap();
    let (records, _) = run_expectations(&psi, &PotentialSpec::Free, &UNIT, 1e-2, 30, 10).unwrap();
    let res = ehrenfest_residuals(&records, &UNIT).unwrap();
    let text = expectation_csv(&records, &res).render();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,q_mean,p_mean,energy,q_var,p_var,r_q,r_p");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].ends_with(",,"));
    assert!(lines[4].ends_with(",,"));
    assert!(!lines[2].ends_with(','));
}
