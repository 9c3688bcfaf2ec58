mod common;

use decoh_core::decoherence::*;
use decoh_core::{hamiltonian_gradients, PhaseSpacePoint, PhysicalConstants, PotentialSpec, SpatialGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNIT: PhysicalConstants = PhysicalConstants {
    hbar: 1.0,
    mass: 1.0,
    kb: 1.0,
};

fn grid() -> SpatialGrid {
    SpatialGrid::new(16.0, 64, 1.0).unwrap()
}

/// `⟨ζ_{n'}| e^{−iHτ} |ζ_n⟩` for every destination from the dense oracle.
fn oracle_table(spec: &PotentialSpec, n: i64, tau: f64) -> Vec<(i64, Complex64)> {
    let g = grid();
    let h = common::dense_hamiltonian(&g, spec, &UNIT);
    let u = common::expm(&h.scale(Complex64::new(0.0, -tau)));
    let out = u.apply(&common::plane_wave(&g, n, 1.0));
    (-32..32)
        .map(|m| (m, common::inner(&common::plane_wave(&g, m, 1.0), &out, g.spacing())))
        .collect()
}

#[test]
fn tables_agree_with_the_dense_oracle() {
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    for tau in [1e-2, 1e-3] {
        let t = transition_amplitudes(&grid(), &spec, &UNIT, 4, tau).unwrap();
        assert!((t.total_probability() - 1.0).abs() < 1e-10);
        for (m, exact) in oracle_table(&spec, 4, tau) {
            let i = (m + 32) as usize;
            assert_eq!(t.modes[i], m);
            assert!((t.amplitudes[i] - exact).norm() < 10.0 * tau.powi(3), "tau={tau} n'={m}");
        }
        assert_eq!(most_likely_destination(&t), 4);
    }
}

#[test]
fn leakage_out_of_the_source_mode_is_second_order() {
    for spec in PotentialSpec::reference_family(16.0) {
        if spec == PotentialSpec::Free {
            continue;
        }
        let leak = |tau: f64| {
            let oracle = oracle_table(&spec, 2, tau);
            let t = transition_amplitudes(&grid(), &spec, &UNIT, 2, tau).unwrap();
            let mine = 1.0 - t.probability(2).unwrap();
            let exact = 1.0 - oracle.iter().find(|(m, _)| *m == 2).unwrap().1.norm_sqr();
            assert!((mine - exact).abs() < 0.05 * exact, "{spec}: {mine} vs {exact}");
            mine
        };
        let taus = [1e-3, 5e-4, 2.5e-4];
        let leaks: Vec<f64> = taus.iter().map(|&t| leak(t)).collect();
        let slope = common::slope(&taus, &leaks);
        assert!((slope - 2.0).abs() < 0.2, "{spec}: slope {slope}");
        assert!((leaks[1] / leaks[2] - 4.0).abs() < 0.4);
    }
}

#[test]
fn cosine_couples_neighbouring_harmonics_at_first_order() {
    let g = grid();
    let j = 3;
    let u0 = 0.5;
    let tau = 1e-3;
    let spec = PotentialSpec::cosine_on_box(u0, j, g.box_length());
    let t = transition_amplitudes(&g, &spec, &UNIT, 1, tau).unwrap();
    let expected = u0 * tau / 2.0;
    for dest in [1 + j, 1 - j] {
        let a = t.probability(dest).unwrap().sqrt();
        assert!((a - expected).abs() < 0.01 * expected, "n'={dest}: {a} vs {expected}");
    }
    let elsewhere: f64 = t
        .modes
        .iter()
        .filter(|&&m| m != 1 && m != 1 + j && m != 1 - j)
        .map(|&m| t.probability(m).unwrap())
        .sum();
    assert!(elsewhere < 1e-3 * expected * expected);
}

#[test]
fn harmonic_destinations_stay_put_at_small_steps() {
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    for n in [-5, 0, 3, 12] {
        for tau in [1e-2, 5e-3, 1e-3] {
            let t = transition_amplitudes(&grid(), &spec, &UNIT, n, tau).unwrap();
            let oracle = oracle_table(&spec, n, tau);
            let best = oracle.iter().max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr())).unwrap().0;
            assert_eq!(best, n);
            assert_eq!(most_likely_destination(&t), n);
        }
    }
}

#[test]
fn forward_then_adjoint_returns_the_state() {
    let g = SpatialGrid::new(32.0, 1024, 1.0).unwrap();
    let free = reversibility_check(&g, &PotentialSpec::Free, &UNIT, 7, 1e-3).unwrap();
    assert!(1.0 - free <= 1e-14);
    let small = SpatialGrid::new(16.0, 256, 1.0).unwrap();
    for spec in PotentialSpec::reference_family(16.0) {
        let f = reversibility_check(&small, &spec, &UNIT, -3, 1e-3).unwrap();
        assert!(f >= 1.0 - 1e-10, "{spec}: {f}");
    }
}

fn random_point(rng: &mut ChaCha8Rng, spec: &PotentialSpec) -> PhaseSpacePoint {
    loop {
        let x = PhaseSpacePoint::one_d(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        if *spec == PotentialSpec::Free || rate_conditioning(spec, &UNIT, &x, TAU_LADDER[0]) <= 0.05 {
            return x;
        }
    }
}

#[test]
fn rates_match_analytic_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for spec in PotentialSpec::reference_family(32.0) {
        for _ in 0..10 {
            let x = random_point(&mut rng, &spec);
            let r = hamilton_rate_extraction(&spec, &UNIT, &x, &TAU_LADDER, BracketOptions::default()).unwrap();
            let (hq, hp) = hamiltonian_gradients(&UNIT, &spec, &x);
            assert!((r.q_dot[0] - hp[0]).abs() < 1e-3, "{spec} {x:?}: {r:?}");
            assert!((r.p_dot[0] + hq[0]).abs() < 1e-3, "{spec} {x:?}: {r:?}");
        }
    }
}

#[test]
fn hamilton_bracket_agrees_with_its_taylor_series() {
    // Hand expansion: H1 − H0 = Dτ² with D = (v²U'' + U'²/m)/2, so
    // b − 1 ≈ iDτ³ + H⁴τ⁴/4 to leading order in each component.
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let (q, p) = (1.0, 1.0);
    let h: f64 = 1.0;
    let d = (p * p + q * q) / 2.0;
    let r = bracket_expansion(&spec, &UNIT, &PhaseSpacePoint::one_d(q, p), UpdateRule::Hamilton, &TAU_LADDER, BracketOptions::default())
        .unwrap();
    for (tau, err) in r.tau_values.iter().zip(&r.bracket_errors) {
        let leading = (d * tau.powi(3)).hypot(h.powi(4) * tau.powi(4) / 4.0);
        assert!((err - leading).abs() < 0.05 * leading, "tau={tau}: {err} vs {leading}");
    }
}

#[test]
fn harmonic_commutation_function_approaches_one() {
    let g = grid();
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let n = 4;
    let j = g.nearest_index(0.0);
    let betas = [0.16, 0.08, 0.04, 0.02, 0.01];
    let mut devs = Vec::new();
    for beta in betas {
        let w = commutation_function(&g, &spec, &UNIT, beta, n, j).unwrap();
        // independent route: Taylor exponential of the explicit DFT Hamiltonian
        let hm = common::dense_hamiltonian(&g, &spec, &UNIT);
        let b = common::expm(&hm.scale(Complex64::new(-beta, 0.0)));
        let zeta = common::plane_wave(&g, n, 1.0);
        let out = b.apply(&zeta);
        let pn = n as f64 * g.momentum_spacing();
        let x = g.position(j);
        let oracle = out[j] / (zeta[j] * (-beta * (pn * pn / 2.0 + spec.value_1d(x))).exp());
        assert!((w - oracle).norm() < 1e-10, "beta={beta}: {w} vs {oracle}");
        devs.push((w - 1.0).norm());
    }
    assert!(devs.windows(2).all(|d| d[1] < d[0]), "{devs:?}");
    assert!(devs[4] < 0.02, "{devs:?}");
}
