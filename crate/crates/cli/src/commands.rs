//! Turning a resolved [`Config`] into a validated job, and running it.
//!
//! [`plan`] performs every check that can be made without simulating, so a
//! config error never leaves files behind. [`execute`] does the numerical work.

use decoh_core::boltzmann::MAX_DENSE_POINTS;
use decoh_core::classical::integrate_trajectory;
use decoh_core::csv::{float, CsvTable};
use decoh_core::decoherence::{
    bracket_csv, bracket_expansion, commutation_function, hamilton_rate_extraction, most_likely_destination,
    rate_conditioning, reversibility_check, transition_amplitudes, BracketOptions, UpdateRule,
};
use decoh_core::schrodinger::{
    classical_divergence, classical_force_gap, divergence_csv, ehrenfest_residuals, expectation_csv,
    init_gaussian_packet, run_expectations, Envelope, SplitStepPropagator, WaveFunction,
};
use decoh_core::stochastic::{sample_canonical, SamplingPlan, ThermostatParams, MIN_RETAINED};
use decoh_core::{hamiltonian_gradients, Execution, PhaseSpacePoint, PhysicalConstants, PotentialSpec, SpatialGrid};

use crate::config::Config;
use crate::error::CliError;
use crate::keys::Command;

/// Tolerance for the unitarity checks reported as invariant violations.
const UNITARITY_TOL: f64 = 1e-10;

pub struct Outcome {
    pub csv: CsvTable,
    pub results: Vec<(String, String)>,
    /// Invariants the run found broken; any entry makes the exit status 1.
    pub violations: Vec<String>,
}

pub enum Job {
    Ehrenfest {
        psi: WaveFunction,
        spec: PotentialSpec,
        consts: PhysicalConstants,
        tau: f64,
        n_steps: usize,
        stride: usize,
    },
    Classical {
        x0: PhaseSpacePoint,
        spec: PotentialSpec,
        consts: PhysicalConstants,
        tau: f64,
        n_steps: usize,
        stride: usize,
    },
    Stochastic {
        spec: PotentialSpec,
        consts: PhysicalConstants,
        params: ThermostatParams,
        plan: SamplingPlan,
    },
    Bracket {
        spec: PotentialSpec,
        consts: PhysicalConstants,
        x: PhaseSpacePoint,
        taus: Vec<f64>,
        opts: BracketOptions,
    },
    Rates {
        spec: PotentialSpec,
        consts: PhysicalConstants,
        x: PhaseSpacePoint,
        taus: Vec<f64>,
        opts: BracketOptions,
    },
    Transitions {
        grid: SpatialGrid,
        spec: PotentialSpec,
        consts: PhysicalConstants,
        mode: i64,
        tau: f64,
    },
    Commutation {
        grid: SpatialGrid,
        spec: PotentialSpec,
        consts: PhysicalConstants,
        mode: i64,
        q_index: usize,
        betas: Vec<f64>,
    },
    Superposition {
        grid: SpatialGrid,
        spec: PotentialSpec,
        consts: PhysicalConstants,
        momenta: Vec<f64>,
        envelope: Envelope,
        tau: f64,
        horizon: f64,
        stride: usize,
    },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Invalid(msg.into()))
}

fn potential(cfg: &Config) -> Result<PotentialSpec, CliError> {
    let spec = match cfg.text("potential") {
        "free" => PotentialSpec::Free,
        "harmonic" => PotentialSpec::Harmonic { k: cfg.float("k") },
        "quartic" => PotentialSpec::Quartic { a: cfg.float("a") },
        "double_well" => PotentialSpec::DoubleWell {
            a: cfg.float("a"),
            b: cfg.float("b"),
        },
        "cosine" => {
            let l = cfg.float("box_length");
            if !(l > 0.0) {
                return invalid(format!("box_length must be positive, got {l}"));
            }
            PotentialSpec::cosine_on_box(cfg.float("amplitude"), cfg.int("cosine_mode"), l)
        }
        other => return invalid(format!("unknown potential `{other}`")),
    };
    spec.validate()?;
    Ok(spec)
}

fn constants(cfg: &Config) -> Result<PhysicalConstants, CliError> {
    Ok(PhysicalConstants::new(cfg.float("hbar"), cfg.float("mass"), cfg.float("kb"))?)
}

fn grid(cfg: &Config, spec: &PotentialSpec) -> Result<SpatialGrid, CliError> {
    let g = SpatialGrid::new(cfg.float("box_length"), cfg.count("n_points"), cfg.float("hbar"))?;
    spec.check_periodic(g.box_length())?;
    Ok(g)
}

fn positive_count(cfg: &Config, name: &str) -> Result<usize, CliError> {
    match cfg.count(name) {
        0 => invalid(format!("{name} must be at least 1")),
        n => Ok(n),
    }
}

fn check_mode(g: &SpatialGrid, name: &str, n: i64) -> Result<(), CliError> {
    if g.contains_mode(n) {
        Ok(())
    } else {
        let (lo, hi) = g.mode_range();
        invalid(format!("{name} = {n} is outside the grid's modes [{lo}, {hi})"))
    }
}

fn halving_ladder(cfg: &Config, top: &str, count: &str, min: usize) -> Result<Vec<f64>, CliError> {
    let start = cfg.float(top);
    let n = cfg.count(count);
    if !(start > 0.0) {
        return invalid(format!("{top} must be positive, got {start}"));
    }
    if n < min {
        return invalid(format!("{count} must be at least {min}, got {n}"));
    }
    Ok((0..n).map(|i| start / f64::powi(2.0, i as i32)).collect())
}

fn bracket_inputs(cfg: &Config) -> Result<(PhaseSpacePoint, Vec<f64>, BracketOptions), CliError> {
    let x = PhaseSpacePoint::one_d(cfg.float("q0"), cfg.float("p0"));
    let taus = halving_ladder(cfg, "tau", "n_taus", 5)?;
    let order = cfg.count("order");
    if !(order == 1 || order == 2) {
        return invalid(format!("order must be 1 or 2, got {order}"));
    }
    Ok((x, taus, BracketOptions { order: order as u32 }))
}

/// Validates the whole configuration without running any dynamics.
pub fn plan(cfg: &Config) -> Result<Job, CliError> {
    let spec = potential(cfg)?;
    let consts = constants(cfg)?;
    Ok(match cfg.command {
        Command::Ehrenfest => {
            let g = grid(cfg, &spec)?;
            let tau = cfg.float("tau");
            SplitStepPropagator::new(&g, &spec, &consts, tau)?;
            let psi = init_gaussian_packet(&g, cfg.float("q0"), cfg.float("p0"), cfg.float("width"))?;
            let n_steps = positive_count(cfg, "n_steps")?;
            let stride = positive_count(cfg, "stride")?;
            if n_steps / stride < 2 {
                return invalid("n_steps / stride must be at least 2 so residuals have an interior point");
            }
            Job::Ehrenfest {
                psi,
                spec,
                consts,
                tau,
                n_steps,
                stride,
            }
        }
        Command::Classical => {
            let tau = cfg.float("tau");
            if !(tau > 0.0) {
                return invalid(format!("tau must be positive, got {tau}"));
            }
            Job::Classical {
                x0: PhaseSpacePoint::one_d(cfg.float("q0"), cfg.float("p0")),
                spec,
                consts,
                tau,
                n_steps: positive_count(cfg, "n_steps")?,
                stride: positive_count(cfg, "stride")?,
            }
        }
        Command::Stochastic => {
            let params = ThermostatParams::new(cfg.float("sigma2"), cfg.float("tau"), cfg.float("temperature"))?;
            params.validate(&consts)?;
            let plan = SamplingPlan {
                n_steps: cfg.count("n_steps"),
                burn_in: cfg.count("burn_in"),
                stride: cfg.count("stride"),
                n_replicas: cfg.count("n_replicas"),
                dim: cfg.count("dim"),
                seed: cfg.seed(),
            };
            plan.validate()?;
            let retained = plan.retained_per_replica() * plan.n_replicas;
            if retained < MIN_RETAINED {
                return invalid(format!(
                    "the run retains {retained} samples in total; at least {MIN_RETAINED} are needed"
                ));
            }
            Job::Stochastic {
                spec,
                consts,
                params,
                plan,
            }
        }
        Command::Bracket => {
            let (x, taus, opts) = bracket_inputs(cfg)?;
            Job::Bracket {
                spec,
                consts,
                x,
                taus,
                opts,
            }
        }
        Command::Rates => {
            let (x, taus, opts) = bracket_inputs(cfg)?;
            Job::Rates {
                spec,
                consts,
                x,
                taus,
                opts,
            }
        }
        Command::Transitions => {
            let g = grid(cfg, &spec)?;
            let mode = cfg.int("mode");
            check_mode(&g, "mode", mode)?;
            let tau = cfg.float("tau");
            SplitStepPropagator::new(&g, &spec, &consts, tau)?;
            Job::Transitions {
                grid: g,
                spec,
                consts,
                mode,
                tau,
            }
        }
        Command::Commutation => {
            let g = grid(cfg, &spec)?;
            if g.n_points() > MAX_DENSE_POINTS {
                return invalid(format!(
                    "commutation needs n_points <= {MAX_DENSE_POINTS}, got {}",
                    g.n_points()
                ));
            }
            let mode = cfg.int("mode");
            check_mode(&g, "mode", mode)?;
            let q = cfg.float("q");
            if !g.contains_position(q) {
                return invalid(format!("q = {q} lies outside the box"));
            }
            Job::Commutation {
                grid: g,
                spec,
                consts,
                mode,
                q_index: g.nearest_index(q),
                betas: halving_ladder(cfg, "beta", "n_betas", 1)?,
            }
        }
        Command::Superposition => {
            let g = grid(cfg, &spec)?;
            let (n1, n2) = (cfg.int("n1"), cfg.int("n2"));
            check_mode(&g, "n1", n1)?;
            check_mode(&g, "n2", n2)?;
            let dp = g.momentum_spacing();
            let momenta = if n1 == n2 {
                vec![n1 as f64 * dp]
            } else {
                vec![n1 as f64 * dp, n2 as f64 * dp]
            };
            let width = cfg.float("width");
            let envelope = if width == 0.0 {
                Envelope::PlaneWave
            } else {
                let centre = cfg.float("centre");
                init_gaussian_packet(&g, centre, 0.0, width)?;
                Envelope::Gaussian { centre, width }
            };
            let (tau, horizon) = (cfg.float("tau"), cfg.float("horizon"));
            if !(tau > 0.0 && horizon > 0.0) {
                return invalid(format!("tau and horizon must be positive, got {tau} and {horizon}"));
            }
            SplitStepPropagator::new(&g, &spec, &consts, tau)?;
            Job::Superposition {
                grid: g,
                spec,
                consts,
                momenta,
                envelope,
                tau,
                horizon,
                stride: positive_count(cfg, "stride")?,
            }
        }
    })
}

fn pair(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn real(key: &str, value: f64) -> (String, String) {
    (key.to_string(), float(value))
}

fn max_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.map(f64::abs).fold(0.0, f64::max)
}

pub fn execute(job: Job) -> Result<Outcome, CliError> {
    let mut violations = Vec::new();
    let (csv, results) = match job {
        Job::Ehrenfest {
            psi,
            spec,
            consts,
            tau,
            n_steps,
            stride,
        } => {
            let (records, end) = run_expectations(&psi, &spec, &consts, tau, n_steps, stride)?;
            let residuals = ehrenfest_residuals(&records, &consts)?;
            let e0 = records[0].energy_mean;
            let norm = end.norm();
            if (norm - 1.0).abs() > UNITARITY_TOL {
                violations.push(format!("final norm {norm} differs from 1"));
            }
            let results = vec![
                pair("n_records", records.len()),
                real("max_abs_r_q", max_abs(residuals.iter().map(|r| r.r_q))),
                real("max_abs_r_p", max_abs(residuals.iter().map(|r| r.r_p))),
                real("max_force_gap", max_abs(records.iter().map(|r| classical_force_gap(r, &spec)))),
                real("max_energy_drift", max_abs(records.iter().map(|r| r.energy_mean - e0))),
                real("final_norm", norm),
            ];
            (expectation_csv(&records, &residuals), results)
        }
        Job::Classical {
            x0,
            spec,
            consts,
            tau,
            n_steps,
            stride,
        } => {
            let traj = integrate_trajectory(&x0, &spec, &consts, tau, n_steps, stride)?;
            let e0 = traj.energies[0];
            let end = traj.last();
            let results = vec![
                pair("n_records", traj.len()),
                real("max_energy_drift", max_abs(traj.energies.iter().map(|e| e - e0))),
                real("final_q", end.q[0]),
                real("final_p", end.p[0]),
            ];
            (traj.to_csv(), results)
        }
        Job::Stochastic {
            spec,
            consts,
            params,
            plan,
        } => {
            let (stats, replica0) = sample_canonical(&spec, &consts, &params, &plan, Execution::default())?;
            let results = vec![
                real("p2_moment", stats.p_second_moment),
                real("q2_moment", stats.q_second_moment),
                real("ks_stat", stats.ks_statistic),
                real("ks_critical", stats.ks_critical),
                pair("ks_variable", format!("{:?}", stats.ks_variable).to_lowercase()),
                pair("n", stats.n_samples),
                real("drag", params.drag(&consts)),
            ];
            (replica0.to_csv(&spec, &consts), results)
        }
        Job::Bracket {
            spec,
            consts,
            x,
            taus,
            opts,
        } => {
            let mut reports = Vec::new();
            for rule in [UpdateRule::Hamilton, UpdateRule::Frozen, UpdateRule::Anti] {
                reports.push(bracket_expansion(&spec, &consts, &x, rule, &taus, opts)?);
            }
            let results = reports
                .iter()
                .map(|r| real(&format!("fitted_slope_{}", r.rule.name()), r.fitted_slope))
                .collect();
            (bracket_csv(&reports), results)
        }
        Job::Rates {
            spec,
            consts,
            x,
            taus,
            opts,
        } => {
            let est = hamilton_rate_extraction(&spec, &consts, &x, &taus, opts)?;
            let (hq, hp) = hamiltonian_gradients(&consts, &spec, &x);
            let mut csv = CsvTable::new(["tau", "alpha", "gamma"]);
            for ((t, a), g) in taus.iter().zip(&est.alphas).zip(&est.gammas) {
                csv.push(vec![float(*t), float(*a), float(*g)]);
            }
            let results = vec![
                real("q_dot", est.q_dot[0]),
                real("p_dot", est.p_dot[0]),
                real("alpha", est.alpha),
                real("gamma", est.gamma),
                pair("degenerate", est.degenerate),
                real("grad_p_h", hp[0]),
                real("minus_grad_q_h", -hq[0]),
                real("conditioning", rate_conditioning(&spec, &consts, &x, taus[0])),
            ];
            (csv, results)
        }
        Job::Transitions {
            grid,
            spec,
            consts,
            mode,
            tau,
        } => {
            let table = transition_amplitudes(&grid, &spec, &consts, mode, tau)?;
            let fidelity = reversibility_check(&grid, &spec, &consts, mode, tau)?;
            let total = table.total_probability();
            if (total - 1.0).abs() > UNITARITY_TOL {
                violations.push(format!("transition probabilities sum to {total}"));
            }
            if fidelity < 1.0 - UNITARITY_TOL {
                violations.push(format!("forward-then-adjoint fidelity {fidelity} below 1 - {UNITARITY_TOL:e}"));
            }
            let results = vec![
                pair("most_likely_destination", most_likely_destination(&table)),
                real("total_probability", total),
                real("reversibility_fidelity", fidelity),
            ];
            (table.to_csv(), results)
        }
        Job::Commutation {
            grid,
            spec,
            consts,
            mode,
            q_index,
            betas,
        } => {
            let mut csv = CsvTable::new(["beta", "re", "im", "abs_deviation"]);
            let mut devs = Vec::with_capacity(betas.len());
            for &beta in &betas {
                let w = commutation_function(&grid, &spec, &consts, beta, mode, q_index)?;
                let dev = (w - 1.0).norm();
                devs.push(dev);
                csv.push(vec![float(beta), float(w.re), float(w.im), float(dev)]);
            }
            let results = vec![
                real("q_grid", grid.position(q_index)),
                pair("monotone_decrease", devs.windows(2).all(|d| d[1] < d[0])),
                real("smallest_beta_deviation", *devs.last().expect("ladder is non-empty")),
            ];
            (csv, results)
        }
        Job::Superposition {
            grid,
            spec,
            consts,
            momenta,
            envelope,
            tau,
            horizon,
            stride,
        } => {
            let report = classical_divergence(&grid, &spec, &consts, &momenta, envelope, tau, horizon, stride)?;
            let results = vec![
                pair("n_branches", report.branches.len()),
                pair("non_classical", report.non_classical),
                real("min_max_deviation", report.min_max_deviation),
                real("threshold", report.threshold),
            ];
            (divergence_csv(&report), results)
        }
    };
    Ok(Outcome {
        csv,
        results,
        violations,
    })
}
