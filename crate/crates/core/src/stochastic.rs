//! Stochastic dissipative dynamics coupling the system to a heat reservoir.
//!
//! The reservoir acts on momenta only. Each step is a half reservoir kick,
//! a full velocity-Verlet step and another half kick. A kick with drag `a`
//! and noise variance `σ²` maps `p ← (1 − a)·p + R`, `R ~ N(0, σ²)` per
//! component, where `a = σ²/(2 m k_B T)` is fixed by fluctuation-dissipation.
//!
//! Random numbers come from `ChaCha8Rng::seed_from_u64` with Gaussian
//! variates drawn by `rand_distr::StandardNormal`. Replica `i` of a run with
//! seed `s` uses seed `s ^ i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::classical::verlet_step_in_place;
use crate::csv::{float, CsvTable};
use crate::error::{config, Error, Result};
use crate::exec::Execution;
use crate::model::{hamiltonian_value, kinetic_energy, PhaseSpacePoint, PhysicalConstants, PotentialSpec};

/// Fewest retained samples accepted by [`sample_canonical`].
pub const MIN_RETAINED: usize = 1000;

/// Reservoir coupling: noise variance per step, step size and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermostatParams {
    pub sigma2: f64,
    pub tau: f64,
    pub temperature: f64,
}

impl ThermostatParams {
    pub fn new(sigma2: f64, tau: f64, temperature: f64) -> Result<Self> {
        let p = Self {
            sigma2,
            tau,
            temperature,
        };
        p.check_positive()?;
        Ok(p)
    }

    /// Noise variance proportional to the step: `σ² = 2 m k_B T γ τ`, so the
    /// drag per unit time `γ` stays fixed as `τ` changes.
    pub fn from_friction(gamma: f64, tau: f64, temperature: f64, consts: &PhysicalConstants) -> Result<Self> {
        Self::new(2.0 * consts.mass * consts.kb * temperature * gamma * tau, tau, temperature)
    }

    fn check_positive(&self) -> Result<()> {
        for (name, v) in [("sigma2", self.sigma2), ("tau", self.tau), ("temperature", self.temperature)] {
            if !(v.is_finite() && v > 0.0) {
                return config(format!("{name} must be finite and strictly positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Drag per step `a = σ²/(2 m k_B T)`.
    pub fn drag(&self, consts: &PhysicalConstants) -> f64 {
        self.sigma2 / (2.0 * consts.mass * consts.kb * self.temperature)
    }

    pub fn validate(&self, consts: &PhysicalConstants) -> Result<()> {
        self.check_positive()?;
        consts.validate()?;
        let a = self.drag(consts);
        if !(a > 0.0 && a < 1.0) {
            return config(format!("drag per step a = sigma2/(2 m kB T) = {a} must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Optional additive correction `ln ω` (or any other log-weight) to the
/// effective entropy, in units of `k_B`.
pub trait LogCorrection: Send + Sync {
    fn value(&self, q: &[f64], p: &[f64]) -> f64;
    fn grad_p(&self, q: &[f64], p: &[f64], out: &mut [f64]);
    fn laplacian_p(&self, q: &[f64], p: &[f64]) -> f64;
}

/// `S^eff(q, p) = −H(q, p)/T + k_B·c(q, p)`, with `c = 0` unless a
/// [`LogCorrection`] is attached.
#[derive(Clone, Copy)]
pub struct EffectiveEntropy<'a> {
    spec: PotentialSpec,
    consts: PhysicalConstants,
    temperature: f64,
    correction: Option<&'a dyn LogCorrection>,
}

impl<'a> EffectiveEntropy<'a> {
    pub fn new(spec: PotentialSpec, consts: PhysicalConstants, temperature: f64) -> Self {
        Self {
            spec,
            consts,
            temperature,
            correction: None,
        }
    }

    pub fn with_correction(mut self, correction: &'a dyn LogCorrection) -> Self {
        self.correction = Some(correction);
        self
    }

    pub fn value(&self, x: &PhaseSpacePoint) -> f64 {
        let base = -hamiltonian_value(&self.consts, &self.spec, x) / self.temperature;
        match self.correction {
            Some(c) => base + self.consts.kb * c.value(&x.q, &x.p),
            None => base,
        }
    }

    /// `∇_p S^eff`
    pub fn grad_p(&self, x: &PhaseSpacePoint) -> Vec<f64> {
        let mt = self.consts.mass * self.temperature;
        let mut g: Vec<f64> = x.p.iter().map(|p| -p / mt).collect();
        if let Some(c) = self.correction {
            let mut extra = vec![0.0; g.len()];
            c.grad_p(&x.q, &x.p, &mut extra);
            g.iter_mut().zip(extra).for_each(|(g, e)| *g += self.consts.kb * e);
        }
        g
    }

    /// `∇_p² S^eff`
    pub fn laplacian_p(&self, x: &PhaseSpacePoint) -> f64 {
        let base = -(x.dim() as f64) / (self.consts.mass * self.temperature);
        match self.correction {
            Some(c) => base + self.consts.kb * c.laplacian_p(&x.q, &x.p),
            None => base,
        }
    }

    /// `ū = σ²/(2|τ|k_B)·∇_p S^eff`, the force that balances the noise.
    pub fn dissipative_force(&self, x: &PhaseSpacePoint, params: &ThermostatParams) -> Vec<f64> {
        let c = params.sigma2 / (2.0 * params.tau * self.consts.kb);
        self.grad_p(x).into_iter().map(|g| c * g).collect()
    }
}

/// Drag force `−σ²/(2 m |τ| k_B T)·p` of the uncorrected effective entropy.
pub fn dissipative_force(x: &PhaseSpacePoint, params: &ThermostatParams, consts: &PhysicalConstants) -> Vec<f64> {
    let c = -params.sigma2 / (2.0 * consts.mass * params.tau * consts.kb * params.temperature);
    x.p.iter().map(|p| c * p).collect()
}

/// Hot-loop state for one trajectory of the thermostatted dynamics.
struct Stepper {
    spec: PotentialSpec,
    mass: f64,
    tau: f64,
    keep: f64,
    noise_sd: f64,
    force: Vec<f64>,
}

impl Stepper {
    fn new(spec: &PotentialSpec, consts: &PhysicalConstants, params: &ThermostatParams, q: &[f64]) -> Self {
        let a = params.drag(consts);
        let mut force = vec![0.0; q.len()];
        spec.gradient_into(q, &mut force);
        Self {
            spec: *spec,
            mass: consts.mass,
            tau: params.tau,
            keep: 1.0 - 0.5 * a,
            noise_sd: (0.5 * params.sigma2).sqrt(),
            force,
        }
    }

    #[inline]
    fn kick<R: Rng>(&self, p: &mut [f64], rng: &mut R) {
        for p in p.iter_mut() {
            let xi: f64 = rng.sample(StandardNormal);
            *p = self.keep * *p + self.noise_sd * xi;
        }
    }

    #[inline]
    fn step<R: Rng>(&mut self, q: &mut [f64], p: &mut [f64], rng: &mut R) {
        self.kick(p, rng);
        verlet_step_in_place(q, p, &mut self.force, &self.spec, self.mass, self.tau);
        self.kick(p, rng);
    }
}

/// One thermostatted step: half kick, Verlet step, half kick.
pub fn stochastic_step<R: Rng>(
    x: &PhaseSpacePoint,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    params: &ThermostatParams,
    rng: &mut R,
) -> PhaseSpacePoint {
    let mut out = x.clone();
    let mut stepper = Stepper::new(spec, consts, params, &out.q);
    stepper.step(&mut out.q, &mut out.p, rng);
    out
}

/// Step counts and seeding of a sampling run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPlan {
    /// Steps per replica, burn-in included.
    pub n_steps: usize,
    pub burn_in: usize,
    pub stride: usize,
    pub n_replicas: usize,
    pub dim: usize,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.n_replicas == 0 || self.dim == 0 {
            return config("stride, n_replicas and dim must all be at least 1");
        }
        if self.burn_in >= self.n_steps {
            return config(format!("burn_in {} must be below n_steps {}", self.burn_in, self.n_steps));
        }
        Ok(())
    }

    pub fn retained_per_replica(&self) -> usize {
        (self.n_steps - self.burn_in) / self.stride
    }

    pub fn replica_seed(&self, replica: usize) -> u64 {
        self.seed ^ replica as u64
    }
}

/// Retained states of one replica, components flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSamples {
    pub dim: usize,
    pub steps: Vec<usize>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl ReplicaSamples {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `step,q0..,p0..,energy`
    pub fn to_csv(&self, spec: &PotentialSpec, consts: &PhysicalConstants) -> CsvTable {
        let d = self.dim;
        let header = std::iter::once("step".to_string())
            .chain((0..d).map(|j| format!("q{j}")))
            .chain((0..d).map(|j| format!("p{j}")))
            .chain(std::iter::once("energy".to_string()));
        let mut table = CsvTable::new(header);
        for (i, step) in self.steps.iter().enumerate() {
            let q = &self.q[i * d..(i + 1) * d];
            let p = &self.p[i * d..(i + 1) * d];
            let e = kinetic_energy(consts, p) + q.iter().map(|&x| spec.value_1d(x)).sum::<f64>();
            let mut row = vec![step.to_string()];
            row.extend(q.iter().chain(p).copied().map(float));
            row.push(float(e));
            table.push(row);
        }
        table
    }
}

/// Runs one replica from `q = 0, p = 0`.
pub fn sample_replica(
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    params: &ThermostatParams,
    plan: &SamplingPlan,
    replica: usize,
) -> ReplicaSamples {
    let d = plan.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.replica_seed(replica));
    let mut q = vec![0.0; d];
    let mut p = vec![0.0; d];
    let mut stepper = Stepper::new(spec, consts, params, &q);
    let n = plan.retained_per_replica();
    let mut out = ReplicaSamples {
        dim: d,
        steps: Vec::with_capacity(n),
        q: Vec::with_capacity(n * d),
        p: Vec::with_capacity(n * d),
    };
    for _ in 0..plan.burn_in {
        stepper.step(&mut q, &mut p, &mut rng);
    }
    for k in 1..=n {
        for _ in 0..plan.stride {
            stepper.step(&mut q, &mut p, &mut rng);
        }
        out.steps.push(plan.burn_in + k * plan.stride);
        out.q.extend_from_slice(&q);
        out.p.extend_from_slice(&p);
    }
    out
}

/// Normalized histogram over `[lo, hi]` with equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], n_bins: usize) -> Self {
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0usize; n_bins];
        let width = (hi - lo) / n_bins as f64;
        for &x in samples {
            let b = if width > 0.0 { ((x - lo) / width) as usize } else { 0 };
            counts[b.min(n_bins - 1)] += 1;
        }
        let n = samples.len() as f64;
        Self {
            lo,
            hi,
            mass: counts.into_iter().map(|c| c as f64 / n).collect(),
        }
    }
}

/// Which coordinate the Kolmogorov-Smirnov test was run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsVariable {
    /// Positions against `e^{−U/k_B T}`; used when the potential confines.
    Position,
    /// Momenta against `N(0, m k_B T)`.
    Momentum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_samples: usize,
    /// `⟨p²⟩` per component
    pub p_second_moment: f64,
    /// `⟨q²⟩` per component
    pub q_second_moment: f64,
    pub q_histogram: Histogram,
    pub ks_variable: KsVariable,
    pub ks_statistic: f64,
    /// 5% critical value `1.63/√n`
    pub ks_critical: f64,
}

/// Stationary position marginal `∝ e^{−U(q)/k_B T}` of a confining potential.
pub enum CanonicalCdf {
    Normal(Normal),
    Tabulated { xs: Vec<f64>, cdf: Vec<f64> },
}

impl CanonicalCdf {
    /// `None` when the potential does not confine (free, cosine).
    pub fn position(spec: &PotentialSpec, consts: &PhysicalConstants, temperature: f64) -> Option<Self> {
        let kt = consts.kb * temperature;
        match *spec {
            PotentialSpec::Free | PotentialSpec::Cosine { .. } => None,
            PotentialSpec::Harmonic { k } if k > 0.0 => Normal::new(0.0, (kt / k).sqrt()).ok().map(Self::Normal),
            PotentialSpec::Quartic { a } | PotentialSpec::DoubleWell { a, .. } if a > 0.0 => {
                Some(Self::tabulate(|x| spec.value_1d(x) / kt))
            }
            _ => None,
        }
    }

    fn tabulate(beta_u: impl Fn(f64) -> f64) -> Self {
        let mut half = 1.0;
        while beta_u(half) - beta_u(0.0).min(0.0) < 60.0 && half < 1e6 {
            half *= 1.5;
        }
        let n = 200_000;
        let h = 2.0 * half / n as f64;
        let xs: Vec<f64> = (0..=n).map(|i| -half + i as f64 * h).collect();
        let shift = xs.iter().map(|&x| beta_u(x)).fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = xs.iter().map(|&x| (shift - beta_u(x)).exp()).collect();
        let mut cdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..=n {
            acc += 0.5 * h * (w[i - 1] + w[i]);
            cdf.push(acc);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Self::Tabulated { xs, cdf }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal(n) => n.cdf(x),
            Self::Tabulated { xs, cdf } => {
                let (lo, hi) = (xs[0], xs[xs.len() - 1]);
                if x <= lo {
                    return 0.0;
                }
                if x >= hi {
                    return 1.0;
                }
                let h = (hi - lo) / (xs.len() - 1) as f64;
                let i = (((x - lo) / h) as usize).min(xs.len() - 2);
                let t = (x - xs[i]) / h;
                cdf[i] + t * (cdf[i + 1] - cdf[i])
            }
        }
    }
}

/// Two-sided Kolmogorov-Smirnov distance between samples and a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

impl EnsembleStats {
    pub fn from_samples(
        replicas: &[ReplicaSamples],
        spec: &PotentialSpec,
        consts: &PhysicalConstants,
        temperature: f64,
    ) -> Result<Self> {
        let q: Vec<f64> = replicas.iter().flat_map(|r| r.q.iter().copied()).collect();
        let p: Vec<f64> = replicas.iter().flat_map(|r| r.p.iter().copied()).collect();
        let retained: usize = replicas.iter().map(|r| r.len()).sum();
        if retained < MIN_RETAINED {
            return Err(Error::InsufficientSamples {
                retained,
                required: MIN_RETAINED,
            });
        }
        let (ks_variable, ks_statistic) = match CanonicalCdf::position(spec, consts, temperature) {
            Some(cdf) => (KsVariable::Position, ks_statistic(&q, |x| cdf.cdf(x))),
            None => {
                let normal = Normal::new(0.0, (consts.mass * consts.kb * temperature).sqrt())
                    .map_err(|e| Error::Config(e.to_string()))?;
                (KsVariable::Momentum, ks_statistic(&p, |x| normal.cdf(x)))
            }
        };
        Ok(Self {
            n_samples: q.len(),
            p_second_moment: mean_square(&p),
            q_second_moment: mean_square(&q),
            q_histogram: Histogram::from_samples(&q, 64),
            ks_variable,
            ks_statistic,
            ks_critical: 1.63 / (q.len() as f64).sqrt(),
        })
    }
}

/// Runs every replica of `plan` and pools the retained samples in replica
/// order. Returns the statistics and the samples of replica 0.
pub fn sample_canonical(
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    params: &ThermostatParams,
    plan: &SamplingPlan,
    exec: Execution,
) -> Result<(EnsembleStats, ReplicaSamples)> {
    spec.validate()?;
    params.validate(consts)?;
    plan.validate()?;
    let retained = plan.retained_per_replica() * plan.n_replicas;
    if retained < MIN_RETAINED {
        return Err(Error::InsufficientSamples {
            retained,
            required: MIN_RETAINED,
        });
    }
    let mut replicas = exec.map(plan.n_replicas, |r| sample_replica(spec, consts, params, plan, r));
    let stats = EnsembleStats::from_samples(&replicas, spec, consts, params.temperature)?;
    Ok((stats, replicas.swap_remove(0)))
}

/// Monte-Carlo check of the second-order stationarity balance at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    /// `⟨e^{(S(q,p'') − S(q,p))/k_B}⟩ − 1 − |τ|∇_p·ū`
    pub residual: f64,
    pub std_error: f64,
    /// `−(|τ|/k_B) ū·∇_p S`
    pub drift_term: f64,
    /// `(σ²/2k_B²) |∇_p S|²`
    pub fluctuation_term: f64,
    /// `(σ²/2k_B) ∇_p² S`
    pub laplacian_term: f64,
    /// `|τ| ∇_p·ū`
    pub compressibility: f64,
    pub n_draws: usize,
}

/// Estimates how far the reservoir transition `p'' = p − |τ|ū + R` is from
/// leaving `e^{S^eff/k_B}` invariant, after removing the phase-space
/// compressibility of the drag. Draws are antithetic pairs `±R`, rescaled so
/// that their sample variance is exactly `σ²`.
pub fn stationarity_expansion_check(
    entropy: &EffectiveEntropy<'_>,
    params: &ThermostatParams,
    x: &PhaseSpacePoint,
    n_draws: usize,
    seed: u64,
) -> Result<StationarityReport> {
    x.validate()?;
    params.validate(&entropy.consts)?;
    if n_draws < 10_000 {
        return config(format!("n_draws must be at least 10000, got {n_draws}"));
    }
    let kb = entropy.consts.kb;
    let d = x.dim();
    let pairs = n_draws.div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi: Vec<f64> = (0..pairs * d).map(|_| rng.sample(StandardNormal)).collect();
    let scale = params.sigma2.sqrt() / mean_square(&xi).sqrt();

    let u = entropy.dissipative_force(x, params);
    let grad = entropy.grad_p(x);
    let lap = entropy.laplacian_p(x);
    let s0 = entropy.value(x);
    let centre: Vec<f64> = x.p.iter().zip(&u).map(|(p, u)| p - params.tau * u).collect();

    let mut trial = x.clone();
    let mut weight = |sign: f64, r: &[f64]| {
        for j in 0..d {
            trial.p[j] = centre[j] + sign * scale * r[j];
        }
        ((entropy.value(&trial) - s0) / kb).exp()
    };
    let pair_means: Vec<f64> = xi.chunks(d).map(|r| 0.5 * (weight(1.0, r) + weight(-1.0, r))).collect();
    let n = pair_means.len() as f64;
    let mean = pair_means.iter().sum::<f64>() / n;
    let var = pair_means.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (n - 1.0);

    let compressibility = params.tau * params.sigma2 / (2.0 * params.tau * kb) * lap;
    Ok(StationarityReport {
        residual: mean - 1.0 - compressibility,
        std_error: (var / n).sqrt(),
        drift_term: -(params.tau / kb) * u.iter().zip(&grad).map(|(u, g)| u * g).sum::<f64>(),
        fluctuation_term: params.sigma2 / (2.0 * kb * kb) * grad.iter().map(|g| g * g).sum::<f64>(),
        laplacian_term: params.sigma2 / (2.0 * kb) * lap,
        compressibility,
        n_draws: 2 * pairs,
    })
}
