//! Grid wave functions under the time-dependent Schrödinger equation.
//!
//! Propagation is Strang split: half a kinetic step in the momentum
//! representation, a full potential step on the grid, another kinetic half
//! step. Momentum statistics are always taken from the discrete Fourier
//! transform, never from finite differences.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::classical;
use crate::csv::{float, CsvTable};
use crate::error::{config, Error, Result};
use crate::grid::SpatialGrid;
use crate::model::{PhaseSpacePoint, PhysicalConstants, PotentialSpec};

/// Allowed `|tau| * max|U|` in units of `hbar`.
pub const STABILITY_LIMIT: f64 = 0.5;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Complex amplitudes on a [`SpatialGrid`], normalized so that
/// `Σ|ψ_j|²·dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: SpatialGrid,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    /// Wraps raw amplitudes and normalizes them.
    pub fn from_amplitudes(grid: SpatialGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return config(format!(
                "expected {} amplitudes, got {}",
                grid.n_points(),
                amplitudes.len()
            ));
        }
        let mut psi = Self { grid, amplitudes };
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return config("wave function has zero or non-finite norm");
        }
        let s = 1.0 / norm.sqrt();
        psi.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(psi)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `Σ|ψ_j|²·dx`
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// `⟨self|other⟩`
    pub fn overlap(&self, other: &WaveFunction) -> Complex64 {
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.spacing()
    }

    /// `|⟨self|other⟩|`
    pub fn fidelity(&self, other: &WaveFunction) -> f64 {
        self.overlap(other).norm()
    }

    /// Amplitudes in the momentum representation, indexed by FFT index.
    pub fn momentum_amplitudes(&self) -> Vec<Complex64> {
        let (fft, _) = plans(self.grid.n_points());
        let mut buf = self.amplitudes.clone();
        fft.process(&mut buf);
        buf
    }

    /// Lattice momentum probabilities, indexed by FFT index; sums to one.
    pub fn momentum_probabilities(&self) -> Vec<f64> {
        let spectrum = self.momentum_amplitudes();
        let total: f64 = spectrum.iter().map(|a| a.norm_sqr()).sum();
        spectrum.iter().map(|a| a.norm_sqr() / total).collect()
    }

    /// `⟨ζ_n|ψ⟩` for every lattice mode, indexed by FFT index.
    pub fn plane_wave_overlaps(&self) -> Vec<Complex64> {
        let spectrum = self.momentum_amplitudes();
        // ζ_n(x_j) carries the phase e^{i n Δp (-L/2)/ħ} = (-1)^n relative to the DFT kernel.
        let scale = self.grid.spacing() / self.grid.box_length().sqrt();
        spectrum
            .into_iter()
            .enumerate()
            .map(|(k, a)| {
                let sign = if self.grid.mode_of_index(k).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                a * (scale * sign)
            })
            .collect()
    }
}

fn check_hbar(grid: &SpatialGrid, consts: &PhysicalConstants) -> Result<()> {
    if grid.hbar() != consts.hbar {
        return config(format!(
            "grid was built with hbar = {} but constants have hbar = {}",
            grid.hbar(),
            consts.hbar
        ));
    }
    Ok(())
}

/// Normalized Gaussian `exp(-(x-q0)²/4w²)·e^{i p0 x/ħ}`; `width` is the
/// position standard deviation.
pub fn init_gaussian_packet(grid: &SpatialGrid, q0: f64, p0: f64, width: f64) -> Result<WaveFunction> {
    let dx = grid.spacing();
    if !(width >= 4.0 * dx && width <= grid.box_length() / 8.0) {
        return config(format!(
            "packet width {width} outside [4*spacing, L/8] = [{}, {}]",
            4.0 * dx,
            grid.box_length() / 8.0
        ));
    }
    if !(q0.is_finite() && grid.contains_position(q0)) {
        return config(format!("packet centre {q0} outside the box"));
    }
    if !p0.is_finite() {
        return config("packet momentum must be finite");
    }
    let hbar = grid.hbar();
    let amps = grid
        .positions()
        .map(|x| {
            let d = grid.wrap_displacement(x - q0);
            let envelope = (-d * d / (4.0 * width * width)).exp();
            Complex64::from_polar(envelope, p0 * x / hbar)
        })
        .collect();
    WaveFunction::from_amplitudes(*grid, amps)
}

/// Plane wave `ζ_p(x) = L^{-1/2} e^{i p x/ħ}` with `p = n·Δp`.
pub fn init_momentum_eigenstate(grid: &SpatialGrid, n: i64) -> Result<WaveFunction> {
    if !grid.contains_mode(n) {
        let (lo, hi) = grid.mode_range();
        return config(format!("mode {n} outside lattice range [{lo}, {hi}]"));
    }
    Ok(plane_wave(grid, n))
}

pub(crate) fn plane_wave(grid: &SpatialGrid, n: i64) -> WaveFunction {
    let p = n as f64 * grid.momentum_spacing();
    let a = 1.0 / grid.box_length().sqrt();
    let amplitudes = grid
        .positions()
        .map(|x| Complex64::from_polar(a, p * x / grid.hbar()))
        .collect();
    WaveFunction {
        grid: *grid,
        amplitudes,
    }
}

/// Reusable Strang split-step propagator for one `(grid, U, tau)`.
pub struct SplitStepPropagator {
    grid: SpatialGrid,
    tau: f64,
    kinetic_half: Vec<Complex64>,
    potential: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SplitStepPropagator {
    pub fn new(grid: &SpatialGrid, spec: &PotentialSpec, consts: &PhysicalConstants, tau: f64) -> Result<Self> {
        consts.validate()?;
        spec.validate()?;
        check_hbar(grid, consts)?;
        spec.check_periodic(grid.box_length())?;
        if !(tau.is_finite() && tau != 0.0) {
            return config(format!("time step must be finite and non-zero, got {tau}"));
        }
        let u_max = grid.positions().map(|x| spec.value_1d(x).abs()).fold(0.0, f64::max);
        let product = tau.abs() * u_max;
        let limit = STABILITY_LIMIT * consts.hbar;
        if product > limit {
            return Err(Error::Stability { product, limit });
        }

        let m = grid.n_points();
        let inv_m = 1.0 / m as f64;
        let hbar = consts.hbar;
        // 1/M from each inverse transform is folded into the kinetic factors.
        let kinetic_half = (0..m)
            .map(|k| {
                let p = grid.momentum_of_index(k);
                let phase = -(p * p / (2.0 * consts.mass)) * (0.5 * tau) / hbar;
                Complex64::from_polar(inv_m, phase)
            })
            .collect();
        let potential = grid
            .positions()
            .map(|x| Complex64::from_polar(1.0, -spec.value_1d(x) * tau / hbar))
            .collect();
        let (fft, ifft) = plans(m);
        let scratch_len = fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len());
        Ok(Self {
            grid: *grid,
            tau,
            kinetic_half,
            potential,
            fft,
            ifft,
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn kinetic_half_step(&mut self, buf: &mut [Complex64]) {
        self.fft.process_with_scratch(buf, &mut self.scratch);
        buf.iter_mut().zip(&self.kinetic_half).for_each(|(a, k)| *a *= k);
        self.ifft.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn step(&mut self, psi: &mut WaveFunction) {
        debug_assert_eq!(psi.grid, self.grid);
        let mut buf = std::mem::take(&mut psi.amplitudes);
        self.kinetic_half_step(&mut buf);
        buf.iter_mut().zip(&self.potential).for_each(|(a, v)| *a *= v);
        self.kinetic_half_step(&mut buf);
        psi.amplitudes = buf;
    }

    pub fn propagate(&mut self, psi: &mut WaveFunction, n_steps: usize) {
        for _ in 0..n_steps {
            self.step(psi);
        }
    }
}

/// Evolves `psi` through `n_steps` steps of size `tau` (negative = backwards).
pub fn split_step_propagate(
    psi: &WaveFunction,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    tau: f64,
    n_steps: usize,
) -> Result<WaveFunction> {
    let mut prop = SplitStepPropagator::new(&psi.grid, spec, consts, tau)?;
    let mut out = psi.clone();
    prop.propagate(&mut out, n_steps);
    Ok(out)
}

/// Expectation values of one state at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationRecord {
    pub time: f64,
    pub q_mean: f64,
    pub p_mean: f64,
    pub energy_mean: f64,
    pub q_var: f64,
    pub p_var: f64,
    /// `⟨-∇U⟩`
    pub force_mean: f64,
}

/// `⟨q⟩` in box-centred coordinates.
pub fn expectation_position(psi: &WaveFunction) -> f64 {
    let dx = psi.grid.spacing();
    psi.grid
        .positions()
        .zip(&psi.amplitudes)
        .map(|(x, a)| x * a.norm_sqr())
        .sum::<f64>()
        * dx
}

/// `⟨p⟩` from the lattice momentum distribution.
pub fn expectation_momentum(psi: &WaveFunction) -> f64 {
    psi.momentum_probabilities()
        .iter()
        .enumerate()
        .map(|(k, w)| w * psi.grid.momentum_of_index(k))
        .sum()
}

/// All moments at once, with a single transform.
pub fn measure(psi: &WaveFunction, spec: &PotentialSpec, consts: &PhysicalConstants, time: f64) -> ExpectationRecord {
    let grid = &psi.grid;
    let dx = grid.spacing();
    let (mut q1, mut q2, mut u, mut f) = (0.0, 0.0, 0.0, 0.0);
    for (x, a) in grid.positions().zip(&psi.amplitudes) {
        let w = a.norm_sqr() * dx;
        q1 += w * x;
        q2 += w * x * x;
        u += w * spec.value_1d(x);
        f -= w * spec.derivative_1d(x);
    }
    let probs = psi.momentum_probabilities();
    let (mut p1, mut p2) = (0.0, 0.0);
    for (k, w) in probs.iter().enumerate() {
        let p = grid.momentum_of_index(k);
        p1 += w * p;
        p2 += w * p * p;
    }
    ExpectationRecord {
        time,
        q_mean: q1,
        p_mean: p1,
        energy_mean: p2 / (2.0 * consts.mass) + u,
        q_var: (q2 - q1 * q1).max(0.0),
        p_var: (p2 - p1 * p1).max(0.0),
        force_mean: f,
    }
}

/// Propagates `psi0` for `n_steps` and records expectations every
/// `record_stride` steps, starting with `t = 0`.
pub fn run_expectations(
    psi0: &WaveFunction,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    tau: f64,
    n_steps: usize,
    record_stride: usize,
) -> Result<(Vec<ExpectationRecord>, WaveFunction)> {
    if record_stride == 0 {
        return config("record stride must be at least 1");
    }
    let mut prop = SplitStepPropagator::new(&psi0.grid, spec, consts, tau)?;
    let mut psi = psi0.clone();
    let mut records = Vec::with_capacity(n_steps / record_stride + 1);
    records.push(measure(&psi, spec, consts, 0.0));
    for step in 1..=n_steps {
        prop.step(&mut psi);
        if step % record_stride == 0 {
            records.push(measure(&psi, spec, consts, step as f64 * tau));
        }
    }
    Ok((records, psi))
}

/// Ehrenfest residuals at one interior sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhrenfestResidual {
    pub time: f64,
    /// `d⟨q⟩/dt − ⟨p⟩/m`
    pub r_q: f64,
    /// `d⟨p⟩/dt − ⟨−∇U⟩`
    pub r_p: f64,
}

/// Centred-difference residuals of the Ehrenfest relations at every
/// interior record. Records must be uniformly spaced in time.
pub fn ehrenfest_residuals(records: &[ExpectationRecord], consts: &PhysicalConstants) -> Result<Vec<EhrenfestResidual>> {
    if records.len() < 3 {
        return config(format!("need at least 3 records, got {}", records.len()));
    }
    let dt = records[1].time - records[0].time;
    for (i, w) in records.windows(2).enumerate() {
        let found = w[1].time - w[0].time;
        if (found - dt).abs() > 1e-9 * dt.abs() {
            return Err(Error::NonUniformStride {
                index: i + 1,
                found,
                expected: dt,
            });
        }
    }
    Ok(records
        .windows(3)
        .map(|w| {
            let (prev, mid, next) = (&w[0], &w[1], &w[2]);
            let span = next.time - prev.time;
            EhrenfestResidual {
                time: mid.time,
                r_q: (next.q_mean - prev.q_mean) / span - mid.p_mean / consts.mass,
                r_p: (next.p_mean - prev.p_mean) / span - mid.force_mean,
            }
        })
        .collect())
}

/// `|⟨−∇U⟩ − (−∇U(⟨q⟩))|`: how far expectation dynamics are from closing on
/// the classical force law.
pub fn classical_force_gap(record: &ExpectationRecord, spec: &PotentialSpec) -> f64 {
    (record.force_mean + spec.derivative_1d(record.q_mean)).abs()
}

/// `time,q_mean,p_mean,energy,q_var,p_var,r_q,r_p`; residual cells are empty
/// at the first and last record.
pub fn expectation_csv(records: &[ExpectationRecord], residuals: &[EhrenfestResidual]) -> CsvTable {
    let mut table = CsvTable::new(["time", "q_mean", "p_mean", "energy", "q_var", "p_var", "r_q", "r_p"]);
    for (i, r) in records.iter().enumerate() {
        let mut row: Vec<String> = [r.time, r.q_mean, r.p_mean, r.energy_mean, r.q_var, r.p_var]
            .into_iter()
            .map(float)
            .collect();
        match i.checked_sub(1).and_then(|k| residuals.get(k)) {
            Some(res) if i + 1 < records.len() => {
                row.push(float(res.r_q));
                row.push(float(res.r_p));
            }
            _ => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        table.push(row);
    }
    table
}

/// `time,q_mean,p_mean,q_branch0,p_branch0,...`
pub fn divergence_csv(report: &DivergenceReport) -> CsvTable {
    let mut header = vec!["time".to_string(), "q_mean".to_string(), "p_mean".to_string()];
    for b in 0..report.branches.len() {
        header.push(format!("q_branch{b}"));
        header.push(format!("p_branch{b}"));
    }
    let mut table = CsvTable::new(header);
    for i in 0..report.times.len() {
        let mut row = vec![float(report.times[i]), float(report.q_mean[i]), float(report.p_mean[i])];
        for b in &report.branches {
            row.push(float(b.q[i]));
            row.push(float(b.p[i]));
        }
        table.push(row);
    }
    table
}

/// Spatial profile multiplying the plane-wave components of a demo state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    PlaneWave,
    Gaussian { centre: f64, width: f64 },
}

/// One classical trajectory started from `(⟨q⟩₀, p_branch)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalBranch {
    pub initial_momentum: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `max_t |⟨q⟩(t) − q_branch(t)|`
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub times: Vec<f64>,
    pub q_mean: Vec<f64>,
    pub p_mean: Vec<f64>,
    pub branches: Vec<ClassicalBranch>,
    /// Smallest `max_deviation` over the branches.
    pub min_max_deviation: f64,
    /// Five grid spacings.
    pub threshold: f64,
    pub non_classical: bool,
}

/// Evolves the equal-weight superposition of the lattice plane waves with
/// the given `momenta` (times `envelope`) and compares `⟨q⟩(t)` with every
/// classical trajectory started from `(⟨q⟩₀, p_i)`.
pub fn classical_divergence(
    grid: &SpatialGrid,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    momenta: &[f64],
    envelope: Envelope,
    tau: f64,
    horizon: f64,
    record_stride: usize,
) -> Result<DivergenceReport> {
    if momenta.is_empty() {
        return config("at least one momentum component is required");
    }
    if !(tau > 0.0 && horizon > 0.0 && horizon.is_finite()) {
        return config(format!("tau and horizon must be positive, got tau={tau}, horizon={horizon}"));
    }
    if record_stride == 0 {
        return config("record stride must be at least 1");
    }
    let dp = grid.momentum_spacing();
    let mut modes = Vec::with_capacity(momenta.len());
    for &p in momenta {
        let n = (p / dp).round();
        if (p / dp - n).abs() > 1e-9 || !grid.contains_mode(n as i64) {
            return config(format!("momentum {p} is not on the lattice (spacing {dp})"));
        }
        modes.push(n as i64);
    }
    let hbar = grid.hbar();
    let amps: Vec<Complex64> = grid
        .positions()
        .map(|x| {
            let env = match envelope {
                Envelope::PlaneWave => 1.0,
                Envelope::Gaussian { centre, width } => {
                    let d = grid.wrap_displacement(x - centre);
                    (-d * d / (4.0 * width * width)).exp()
                }
            };
            modes
                .iter()
                .map(|&n| Complex64::from_polar(env, n as f64 * dp * x / hbar))
                .sum()
        })
        .collect();
    if let Envelope::Gaussian { centre, width } = envelope {
        // same admissibility rules as a single packet
        init_gaussian_packet(grid, centre, 0.0, width)?;
    }
    let psi0 = WaveFunction::from_amplitudes(*grid, amps)?;

    let n_steps = (horizon / tau).round().max(1.0) as usize;
    let (records, _) = run_expectations(&psi0, spec, consts, tau, n_steps, record_stride)?;
    let times: Vec<f64> = records.iter().map(|r| r.time).collect();
    let q_mean: Vec<f64> = records.iter().map(|r| r.q_mean).collect();
    let p_mean: Vec<f64> = records.iter().map(|r| r.p_mean).collect();

    let q_start = q_mean[0];
    let mut branches = Vec::with_capacity(momenta.len());
    for &n in &modes {
        let p0 = n as f64 * dp;
        let traj = classical::integrate_trajectory(
            &PhaseSpacePoint::one_d(q_start, p0),
            spec,
            consts,
            tau,
            n_steps,
            record_stride,
        )?;
        let q: Vec<f64> = traj.states.iter().map(|s| s.q[0]).collect();
        let p: Vec<f64> = traj.states.iter().map(|s| s.p[0]).collect();
        let max_deviation = q.iter().zip(&q_mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        branches.push(ClassicalBranch {
            initial_momentum: p0,
            q,
            p,
            max_deviation,
        });
    }
    let min_max_deviation = branches.iter().map(|b| b.max_deviation).fold(f64::INFINITY, f64::min);
    let threshold = 5.0 * grid.spacing();
    Ok(DivergenceReport {
        times,
        q_mean,
        p_mean,
        branches,
        min_max_deviation,
        threshold,
        non_classical: min_max_deviation > threshold,
    })
}

/// Superposition of two distinct lattice momenta; see [`classical_divergence`].
pub fn superposition_demo(
    grid: &SpatialGrid,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    p1: f64,
    p2: f64,
    envelope: Envelope,
    tau: f64,
    horizon: f64,
    record_stride: usize,
) -> Result<DivergenceReport> {
    if p1 == p2 {
        return config("superposition requires two distinct momenta (p1 == p2)");
    }
    classical_divergence(grid, spec, consts, &[p1, p2], envelope, tau, horizon, record_stride)
}
