use decoh_core::stochastic::*;
use decoh_core::{Execution, PhaseSpacePoint, PhysicalConstants, PotentialSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const UNIT: PhysicalConstants = PhysicalConstants {
    hbar: 1.0,
    mass: 1.0,
    kb: 1.0,
};

fn defaults() -> ThermostatParams {
    ThermostatParams::new(0.02, 0.01, 1.0).unwrap()
}

/// Stationary variance of two successive half kicks on a free particle:
/// `v = (1 − a/2)² v + σ²/2`.
fn free_stationary_p2(params: &ThermostatParams) -> f64 {
    let a = params.drag(&UNIT);
    0.5 * params.sigma2 / (1.0 - (1.0 - 0.5 * a).powi(2))
}

#[test]
fn free_momentum_variance_from_one_long_path() {
    let params = defaults();
    let oracle = free_stationary_p2(&params);
    assert!((oracle - 1.0).abs() < 0.005);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut x = PhaseSpacePoint::one_d(0.0, 0.0);
    let (mut sum, mut n) = (0.0, 0usize);
    for step in 0..4_000_000 {
        x = stochastic_step(&x, &PotentialSpec::Free, &UNIT, &params, &mut rng);
        if step >= 1000 {
            sum += x.p[0] * x.p[0];
            n += 1;
        }
    }
    let p2 = sum / n as f64;
    assert!((p2 - oracle).abs() < 0.02, "<p^2> = {p2}, oracle {oracle}");
}

#[test]
fn fluctuation_dissipation_across_couplings() {
    for (sigma2, tau) in [(0.02, 0.01), (0.2, 0.01), (0.5, 0.05)] {
        let params = ThermostatParams::new(sigma2, tau, 1.0).unwrap();
        assert!(params.drag(&UNIT) < 0.5);
        let plan = SamplingPlan {
            n_steps: 2_000_000,
            burn_in: 2_000,
            stride: 50,
            n_replicas: 1,
            dim: 1,
            seed: 11,
        };
        let (stats, _) = sample_canonical(&PotentialSpec::Free, &UNIT, &params, &plan, Execution::Sequential).unwrap();
        let oracle = free_stationary_p2(&params);
        // stride 50 leaves correlation (1-a)^50; allow for it in the error budget
        assert!((stats.p_second_moment - oracle).abs() < 0.04, "sigma2={sigma2}: {} vs {oracle}", stats.p_second_moment);
        assert!((stats.p_second_moment - 1.0).abs() < 0.04 + (oracle - 1.0).abs());
    }
}

#[test]
fn harmonic_equipartition() {
    let plan = SamplingPlan {
        n_steps: 50_000_000,
        burn_in: 10_000,
        stride: 50,
        n_replicas: 4,
        dim: 1,
        seed: 5,
    };
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let (stats, _) = sample_canonical(&spec, &UNIT, &defaults(), &plan, Execution::default()).unwrap();
    assert!(stats.n_samples >= 1_000_000);
    assert!((stats.p_second_moment / 2.0 - 0.5).abs() < 0.015, "kinetic {}", stats.p_second_moment / 2.0);
    assert!((stats.q_second_moment / 2.0 - 0.5).abs() < 0.015, "potential {}", stats.q_second_moment / 2.0);
    assert!((stats.q_histogram.mass.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(stats.ks_variable, KsVariable::Position);
}

#[test]
fn replicas_are_deterministic_and_mode_independent() {
    let plan = SamplingPlan {
        n_steps: 60_000,
        burn_in: 1_000,
        stride: 20,
        n_replicas: 3,
        dim: 2,
        seed: 99,
    };
    let spec = PotentialSpec::DoubleWell { a: 0.1, b: 1.0 };
    let (a, ra) = sample_canonical(&spec, &UNIT, &defaults(), &plan, Execution::Sequential).unwrap();
    let (b, rb) = sample_canonical(&spec, &UNIT, &defaults(), &plan, Execution::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert_eq!(ra.to_csv(&spec, &UNIT).render(), rb.to_csv(&spec, &UNIT).render());
    let r1 = sample_replica(&spec, &UNIT, &defaults(), &plan, 1);
    assert_ne!(r1, ra);
}

/// `⟨e^{ΔS/k_B}⟩ − 1 − |τ|∇·ū` for the uncorrected entropy in one
/// dimension, from the Gaussian integral over `R`.
fn exact_residual(params: &ThermostatParams, p: f64) -> f64 {
    let a = params.drag(&UNIT);
    let c = 1.0 / (2.0 * UNIT.mass * UNIT.kb * params.temperature);
    let mean = (1.0 + 2.0 * a).powf(-0.5) * (-c * p * p * a * a / (1.0 + 2.0 * a)).exp();
    mean - 1.0 + a
}

#[test]
fn stationarity_residual_is_second_order() {
    let spec = PotentialSpec::Harmonic { k: 1.0 };
    let s = EffectiveEntropy::new(spec, UNIT, 1.0);
    let x = PhaseSpacePoint::one_d(0.5, 1.0);
    let mut residuals = Vec::new();
    for tau in [0.01, 0.005] {
        let params = ThermostatParams::from_friction(1.0, tau, 1.0, &UNIT).unwrap();
        let r = stationarity_expansion_check(&s, &params, &x, 200_000, 17).unwrap();
        let exact = exact_residual(&params, 1.0);
        assert!((r.residual - exact).abs() < 4.0 * r.std_error + 1e-12, "tau={tau}: {} vs {exact} (se {})", r.residual, r.std_error);
        assert!((r.drift_term + r.fluctuation_term).abs() < 1e-15);
        assert!((r.laplacian_term - r.compressibility).abs() < 1e-15);
        residuals.push(r.residual);
    }
    let ratio = residuals[0] / residuals[1];
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn stationarity_error_shrinks_like_root_n() {
    let s = EffectiveEntropy::new(PotentialSpec::Harmonic { k: 1.0 }, UNIT, 1.0);
    let x = PhaseSpacePoint::one_d(0.5, 1.0);
    let params = defaults();
    let a = stationarity_expansion_check(&s, &params, &x, 100_000, 3).unwrap();
    let b = stationarity_expansion_check(&s, &params, &x, 200_000, 3).unwrap();
    let ratio = a.std_error / b.std_error;
    assert!((ratio - 2f64.sqrt()).abs() < 0.1, "ratio {ratio}");
    assert!(stationarity_expansion_check(&s, &params, &x, 9_999, 3).is_err());
}
