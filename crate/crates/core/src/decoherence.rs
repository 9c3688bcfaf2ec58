//! Momentum-basis transition amplitudes of the short-time propagator, the
//! most-likely-destination rule, reversibility, the two-propagator bracket
//! whose convergence order singles out Hamilton's equations, extraction of
//! the rates from that bracket, and the commutation function `ω`.
//!
//! The bracket is the scalar
//! `b(τ) = P(−iτH(q,p)/ħ) · P(+iτH(q',p')/ħ)`, where `P` is the exponential
//! series truncated at [`BracketOptions::order`] and `(q', p')` is the
//! destination produced by an [`UpdateRule`]. With `order = 1` the factors
//! are the first-order propagator expansions and a stationary destination
//! gives `b − 1 = τ²H²/ħ²` exactly. With `order = 2` the second-order
//! terms of both factors are kept.

use num_complex::Complex64;

use crate::boltzmann::BoltzmannOperator;
use crate::csv::{float, CsvTable};
use crate::error::{config, Error, Result};
use crate::fit::{extrapolate_to_zero, golden_section_min, loglog_slope};
use crate::grid::SpatialGrid;
use crate::model::{hamiltonian_gradients, hamiltonian_value, PhaseSpacePoint, PhysicalConstants, PotentialSpec};
use crate::schrodinger::{plane_wave, SplitStepPropagator};

/// Default time-step ladder for bracket and rate studies.
pub const TAU_LADDER: [f64; 5] = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4];

/// Amplitudes `⟨ζ_{n'}|Û(τ)|ζ_n⟩` for every lattice mode `n'`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub source_mode: i64,
    pub tau: f64,
    /// Destination modes in ascending order.
    pub modes: Vec<i64>,
    pub amplitudes: Vec<Complex64>,
}

impl TransitionTable {
    pub fn probability(&self, mode: i64) -> Option<f64> {
        let first = *self.modes.first()?;
        let i = usize::try_from(mode - first).ok()?;
        self.amplitudes.get(i).map(|a| a.norm_sqr())
    }

    pub fn total_probability(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `n_prime,re,im,prob`
    pub fn to_csv(&self) -> CsvTable {
        let mut table = CsvTable::new(["n_prime", "re", "im", "prob"]);
        for (n, a) in self.modes.iter().zip(&self.amplitudes) {
            table.push(vec![n.to_string(), float(a.re), float(a.im), float(a.norm_sqr())]);
        }
        table
    }
}

pub fn transition_amplitudes(
    grid: &SpatialGrid,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    n: i64,
    tau: f64,
) -> Result<TransitionTable> {
    if !grid.contains_mode(n) {
        return config(format!("source mode {n} is off the momentum lattice"));
    }
    let mut prop = SplitStepPropagator::new(grid, spec, consts, tau)?;
    let mut psi = plane_wave(grid, n);
    prop.step(&mut psi);
    let overlaps = psi.plane_wave_overlaps();
    let (lo, hi) = grid.mode_range();
    let modes: Vec<i64> = (lo..=hi).collect();
    let amplitudes = modes
        .iter()
        .map(|&m| overlaps[grid.index_of_mode(m).expect("mode in range")])
        .collect();
    Ok(TransitionTable {
        source_mode: n,
        tau,
        modes,
        amplitudes,
    })
}

/// Mode with the largest `|amplitude|²`. Probabilities within a relative
/// `1e-12` of the maximum count as tied; ties go to the smallest `|n'|`,
/// then to the positive mode.
pub fn most_likely_destination(table: &TransitionTable) -> i64 {
    let probs: Vec<f64> = table.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let max = probs.iter().copied().fold(0.0, f64::max);
    table
        .modes
        .iter()
        .zip(&probs)
        .filter(|(_, &w)| w >= max * (1.0 - 1e-12))
        .map(|(&n, _)| n)
        .min_by_key(|&n| (n.abs(), n < 0))
        .expect("table is never empty")
}

/// `|⟨ζ_n| Û(τ)^† Û(τ) |ζ_n⟩|`, with the adjoint realized as a step of `−τ`.
pub fn reversibility_check(
    grid: &SpatialGrid,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    n: i64,
    tau: f64,
) -> Result<f64> {
    if !grid.contains_mode(n) {
        return config(format!("source mode {n} is off the momentum lattice"));
    }
    let mut forward = SplitStepPropagator::new(grid, spec, consts, tau)?;
    let mut backward = SplitStepPropagator::new(grid, spec, consts, -tau)?;
    let start = plane_wave(grid, n);
    let mut psi = start.clone();
    forward.step(&mut psi);
    backward.step(&mut psi);
    Ok(start.fidelity(&psi))
}

/// Destination `(q + α τ ∇_p H, p − γ τ ∇_q H)` of one short step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateRule {
    /// `α = γ = 1`
    Hamilton,
    /// `α = γ = 0`
    Frozen,
    /// `α = γ = −1`
    Anti,
    Scaled { alpha: f64, gamma: f64 },
}

impl UpdateRule {
    pub fn coefficients(&self) -> (f64, f64) {
        match *self {
            UpdateRule::Hamilton => (1.0, 1.0),
            UpdateRule::Frozen => (0.0, 0.0),
            UpdateRule::Anti => (-1.0, -1.0),
            UpdateRule::Scaled { alpha, gamma } => (alpha, gamma),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            UpdateRule::Hamilton => "hamilton",
            UpdateRule::Frozen => "frozen",
            UpdateRule::Anti => "anti",
            UpdateRule::Scaled { .. } => "custom",
        }
    }

    pub fn destination(
        &self,
        x: &PhaseSpacePoint,
        grads: &(Vec<f64>, Vec<f64>),
        tau: f64,
    ) -> PhaseSpacePoint {
        let (alpha, gamma) = self.coefficients();
        let (hq, hp) = grads;
        PhaseSpacePoint {
            q: x.q.iter().zip(hp).map(|(q, v)| q + alpha * tau * v).collect(),
            p: x.p.iter().zip(hq).map(|(p, f)| p - gamma * tau * f).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BracketOptions {
    /// Truncation order of each propagator factor (1 or 2).
    pub order: u32,
}

impl Default for BracketOptions {
    fn default() -> Self {
        Self { order: 2 }
    }
}

/// `P(iz) − 1` for the truncated exponential series.
fn truncated_minus_one(z: f64, order: u32) -> Complex64 {
    match order {
        1 => Complex64::new(0.0, z),
        _ => Complex64::new(-0.5 * z * z, z),
    }
}

/// `b − 1` for energies `h0` at the origin and `h1` at the destination.
pub fn bracket_minus_one(h0: f64, h1: f64, tau: f64, hbar: f64, order: u32) -> Complex64 {
    let a = truncated_minus_one(-tau * h0 / hbar, order);
    let c = truncated_minus_one(tau * h1 / hbar, order);
    a + c + a * c
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketReport {
    pub rule: UpdateRule,
    pub order: u32,
    pub tau_values: Vec<f64>,
    pub bracket_errors: Vec<f64>,
    pub fitted_slope: f64,
}

fn check_ladder(taus: &[f64]) -> Result<()> {
    if taus.len() < 5 {
        return config(format!("need at least 5 time steps, got {}", taus.len()));
    }
    if taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return config("time steps must be finite and positive");
    }
    for w in taus.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-9 {
            return config(format!("time steps must halve: {} then {}", w[0], w[1]));
        }
    }
    Ok(())
}

fn check_order(opts: &BracketOptions) -> Result<()> {
    if !(1..=2).contains(&opts.order) {
        return config(format!("bracket expansion order must be 1 or 2, got {}", opts.order));
    }
    Ok(())
}

pub fn bracket_expansion(
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    x: &PhaseSpacePoint,
    rule: UpdateRule,
    taus: &[f64],
    opts: BracketOptions,
) -> Result<BracketReport> {
    x.validate()?;
    spec.validate()?;
    consts.validate()?;
    check_ladder(taus)?;
    check_order(&opts)?;
    let grads = hamiltonian_gradients(consts, spec, x);
    let h0 = hamiltonian_value(consts, spec, x);
    let bracket_errors: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            let h1 = hamiltonian_value(consts, spec, &rule.destination(x, &grads, tau));
            bracket_minus_one(h0, h1, tau, consts.hbar, opts.order).norm()
        })
        .collect();
    let fitted_slope = loglog_slope(taus, &bracket_errors)?;
    Ok(BracketReport {
        rule,
        order: opts.order,
        tau_values: taus.to_vec(),
        bracket_errors,
        fitted_slope,
    })
}

/// `tau,abs_bracket_minus_one,rule`
pub fn bracket_csv(reports: &[BracketReport]) -> CsvTable {
    let mut table = CsvTable::new(["tau", "abs_bracket_minus_one", "rule"]);
    for r in reports {
        for (t, e) in r.tau_values.iter().zip(&r.bracket_errors) {
            table.push(vec![float(*t), float(*e), r.rule.name().to_string()]);
        }
    }
    table
}

/// Rates recovered from the bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// `α₀ ∇_p H`
    pub q_dot: Vec<f64>,
    /// `−γ₀ ∇_q H`
    pub p_dot: Vec<f64>,
    /// Extrapolated position-rate scale.
    pub alpha: f64,
    /// Extrapolated momentum-rate scale.
    pub gamma: f64,
    /// Per-step minimizers, one per entry of the time-step ladder.
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Set when `∇_p H·∇_q H` vanishes, so the bracket cannot fix the
    /// scales and both are taken as 1.
    pub degenerate: bool,
}

const SCALE_SEARCH: (f64, f64) = (0.0, 2.0);

/// How far the largest step is from the regime where the bracket resolves
/// the rates: `τ_max·(|∇_q H|²/m + Σ_j (∂H/∂p_j)²·|u''(q_j)|) / (2|∇_q H·∇_p H|)`.
///
/// Per-step scales behave like `1 + κ·O(1)`, so the quadratic extrapolation
/// is reliable only for small `κ`. Infinite when `∇_q H·∇_p H = 0`.
pub fn rate_conditioning(spec: &PotentialSpec, consts: &PhysicalConstants, x: &PhaseSpacePoint, tau_max: f64) -> f64 {
    let (hq, hp) = hamiltonian_gradients(consts, spec, x);
    let coupling: f64 = hq.iter().zip(&hp).map(|(a, b)| a * b).sum();
    let curvature: f64 = hq.iter().map(|f| f * f).sum::<f64>() / consts.mass
        + hp
            .iter()
            .zip(&x.q)
            .map(|(v, &q)| v * v * spec.second_derivative_1d(q).abs())
            .sum::<f64>();
    tau_max * curvature / (2.0 * coupling.abs())
}

/// For each `τ`, finds the `γ` (with `α = 1`) and the `α` (with `γ = 1`)
/// that minimize `|b − 1|`, then extrapolates both to `τ → 0` with a
/// quadratic least-squares fit. Accuracy depends on [`rate_conditioning`]
/// of the point for the largest step.
pub fn hamilton_rate_extraction(
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    x: &PhaseSpacePoint,
    taus: &[f64],
    opts: BracketOptions,
) -> Result<RateEstimate> {
    x.validate()?;
    spec.validate()?;
    consts.validate()?;
    check_ladder(taus)?;
    check_order(&opts)?;
    let grads = hamiltonian_gradients(consts, spec, x);
    let (hq, hp) = &grads;
    let coupling: f64 = hq.iter().zip(hp).map(|(a, b)| a * b).sum();
    let size: f64 = hq.iter().chain(hp).map(|v| v * v).sum();
    let rates = |alpha: f64, gamma: f64| {
        (
            hp.iter().map(|v| alpha * v).collect::<Vec<_>>(),
            hq.iter().map(|f| -gamma * f).collect::<Vec<_>>(),
        )
    };

    if coupling.abs() <= 1e-12 * size {
        let (q_dot, p_dot) = rates(1.0, 1.0);
        return Ok(RateEstimate {
            q_dot,
            p_dot,
            alpha: 1.0,
            gamma: 1.0,
            alphas: vec![1.0; taus.len()],
            gammas: vec![1.0; taus.len()],
            degenerate: true,
        });
    }

    let h0 = hamiltonian_value(consts, spec, x);
    let objective = |alpha: f64, gamma: f64, tau: f64| {
        let dest = UpdateRule::Scaled { alpha, gamma }.destination(x, &grads, tau);
        let h1 = hamiltonian_value(consts, spec, &dest);
        bracket_minus_one(h0, h1, tau, consts.hbar, opts.order).norm()
    };
    let (lo, hi) = SCALE_SEARCH;
    let mut alphas = Vec::with_capacity(taus.len());
    let mut gammas = Vec::with_capacity(taus.len());
    for &tau in taus {
        gammas.push(golden_section_min(|g| objective(1.0, g, tau), lo, hi, 1e-13));
        alphas.push(golden_section_min(|a| objective(a, 1.0, tau), lo, hi, 1e-13));
    }
    let alpha = extrapolate_to_zero(taus, &alphas, 2);
    let gamma = extrapolate_to_zero(taus, &gammas, 2);

    let last = taus.len() - 1;
    for (name, limit, seq) in [("alpha", alpha, &alphas), ("gamma", gamma, &gammas)] {
        let at_edge = seq.iter().any(|v| (v - lo).abs() < 1e-6 || (v - hi).abs() < 1e-6);
        if !limit.is_finite() || at_edge || (limit - seq[last]).abs() > 1e-2 {
            return Err(Error::NonConvergence(format!(
                "{name} extrapolated to {limit} from per-step values {seq:?}"
            )));
        }
    }
    let (q_dot, p_dot) = rates(alpha, gamma);
    Ok(RateEstimate {
        q_dot,
        p_dot,
        alpha,
        gamma,
        alphas,
        gammas,
        degenerate: false,
    })
}

/// `ω(q_j, nΔ_p)` at inverse temperature `β` on a grid of at most 256 points.
pub fn commutation_function(
    grid: &SpatialGrid,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    beta: f64,
    n: i64,
    q_index: usize,
) -> Result<Complex64> {
    BoltzmannOperator::new(grid, spec, consts, beta)?.omega(n, q_index)
}
