//! Hamilton's equations integrated with velocity Verlet, plus an explicit
//! Euler integrator kept only as a non-symplectic contrast.

use crate::csv::{float, CsvTable};
use crate::error::{config, Result};
use crate::model::{hamiltonian_value, PhaseSpacePoint, PhysicalConstants, PotentialSpec};

/// One velocity-Verlet step in place: half kick, drift, half kick.
/// `force` is scratch space of length `d` holding `∇U(q)` on entry and exit.
pub(crate) fn verlet_step_in_place(
    q: &mut [f64],
    p: &mut [f64],
    force: &mut [f64],
    spec: &PotentialSpec,
    mass: f64,
    tau: f64,
) {
    let half = 0.5 * tau;
    for ((q, p), g) in q.iter_mut().zip(p.iter_mut()).zip(force.iter()) {
        *p -= half * g;
        *q += tau * *p / mass;
    }
    spec.gradient_into(q, force);
    for (p, g) in p.iter_mut().zip(force.iter()) {
        *p -= half * g;
    }
}

pub fn verlet_step(x: &PhaseSpacePoint, spec: &PotentialSpec, consts: &PhysicalConstants, tau: f64) -> PhaseSpacePoint {
    let mut out = x.clone();
    let mut force = vec![0.0; x.dim()];
    spec.gradient_into(&out.q, &mut force);
    verlet_step_in_place(&mut out.q, &mut out.p, &mut force, spec, consts.mass, tau);
    out
}

pub fn euler_step(x: &PhaseSpacePoint, spec: &PotentialSpec, consts: &PhysicalConstants, tau: f64) -> PhaseSpacePoint {
    let mut out = x.clone();
    for j in 0..x.dim() {
        out.q[j] += tau * x.p[j] / consts.mass;
        out.p[j] -= tau * spec.derivative_1d(x.q[j]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseSpacePoint>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &PhaseSpacePoint {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// `time,q0..,p0..,energy`
    pub fn to_csv(&self) -> CsvTable {
        let d = self.states[0].dim();
        let header = std::iter::once("time".to_string())
            .chain((0..d).map(|j| format!("q{j}")))
            .chain((0..d).map(|j| format!("p{j}")))
            .chain(std::iter::once("energy".to_string()));
        let mut table = CsvTable::new(header);
        for ((t, s), e) in self.times.iter().zip(&self.states).zip(&self.energies) {
            let row = std::iter::once(*t)
                .chain(s.q.iter().copied())
                .chain(s.p.iter().copied())
                .chain(std::iter::once(*e))
                .map(float)
                .collect();
            table.push(row);
        }
        table
    }
}

fn check_run(x0: &PhaseSpacePoint, spec: &PotentialSpec, consts: &PhysicalConstants, tau: f64, n_steps: usize) -> Result<()> {
    x0.validate()?;
    spec.validate()?;
    consts.validate()?;
    if !(tau.is_finite() && tau > 0.0) {
        return config(format!("trajectory time step must be positive, got {tau}"));
    }
    if n_steps == 0 {
        return config("n_steps must be at least 1");
    }
    Ok(())
}

/// Verlet trajectory recording the initial state and every
/// `record_stride`-th step.
pub fn integrate_trajectory(
    x0: &PhaseSpacePoint,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    tau: f64,
    n_steps: usize,
    record_stride: usize,
) -> Result<Trajectory> {
    check_run(x0, spec, consts, tau, n_steps)?;
    if record_stride == 0 {
        return config("record stride must be at least 1");
    }
    let capacity = n_steps / record_stride + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        energies: Vec::with_capacity(capacity),
    };
    let mut x = x0.clone();
    let mut force = vec![0.0; x.dim()];
    spec.gradient_into(&x.q, &mut force);
    let mut record = |step: usize, x: &PhaseSpacePoint| {
        traj.times.push(step as f64 * tau);
        traj.energies.push(hamiltonian_value(consts, spec, x));
        traj.states.push(x.clone());
    };
    record(0, &x);
    for step in 1..=n_steps {
        verlet_step_in_place(&mut x.q, &mut x.p, &mut force, spec, consts.mass, tau);
        if step % record_stride == 0 {
            record(step, &x);
        }
    }
    Ok(traj)
}

/// Energy drift of explicit Euler against velocity Verlet over the same run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    /// `max_t |E(t) − E(0)|`, divided by `|E(0)|` when that is non-zero.
    pub euler_drift: f64,
    pub verlet_drift: f64,
    /// `euler_drift / verlet_drift`; 1 when both are exactly zero.
    pub ratio: f64,
    /// Whether the Euler energy never decreased from step to step.
    pub euler_monotone: bool,
}

pub fn euler_comparison(
    x0: &PhaseSpacePoint,
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    tau: f64,
    n_steps: usize,
) -> Result<DriftReport> {
    check_run(x0, spec, consts, tau, n_steps)?;
    let e0 = hamiltonian_value(consts, spec, x0);
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };

    let mut x = x0.clone();
    let mut euler_drift: f64 = 0.0;
    let mut euler_monotone = true;
    let mut prev = e0;
    for _ in 0..n_steps {
        x = euler_step(&x, spec, consts, tau);
        let e = hamiltonian_value(consts, spec, &x);
        euler_monotone &= e >= prev;
        prev = e;
        euler_drift = euler_drift.max((e - e0).abs() / scale);
    }

    let verlet = integrate_trajectory(x0, spec, consts, tau, n_steps, 1)?;
    let verlet_drift = verlet
        .energies
        .iter()
        .map(|e| (e - e0).abs() / scale)
        .fold(0.0, f64::max);
    let ratio = if euler_drift == 0.0 && verlet_drift == 0.0 {
        1.0
    } else {
        euler_drift / verlet_drift
    };
    Ok(DriftReport {
        euler_drift,
        verlet_drift,
        ratio,
        euler_monotone,
    })
}
