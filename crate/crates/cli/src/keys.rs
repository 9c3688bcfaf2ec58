//! The configuration keys each command accepts, with their types and defaults.
//!
//! Defaults are stored as text and go through the same parser as user input,
//! so `--help` shows exactly what a run would use.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ehrenfest,
    Classical,
    Stochastic,
    Bracket,
    Rates,
    Transitions,
    Commutation,
    Superposition,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Ehrenfest,
        Command::Classical,
        Command::Stochastic,
        Command::Bracket,
        Command::Rates,
        Command::Transitions,
        Command::Commutation,
        Command::Superposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ehrenfest => "ehrenfest",
            Command::Classical => "classical",
            Command::Stochastic => "stochastic",
            Command::Bracket => "bracket",
            Command::Rates => "rates",
            Command::Transitions => "transitions",
            Command::Commutation => "commutation",
            Command::Superposition => "superposition",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Ehrenfest => "Propagate a Gaussian packet and record expectation values with Ehrenfest residuals",
            Command::Classical => "Integrate Hamilton's equations with velocity Verlet",
            Command::Stochastic => "Sample the canonical ensemble with the reservoir-coupled dynamics",
            Command::Bracket => "Order-of-convergence test of the two-propagator bracket for each update rule",
            Command::Rates => "Recover Hamilton's rates from the bracket by extrapolation in the time step",
            Command::Transitions => "Transition amplitudes out of one momentum eigenstate",
            Command::Commutation => "Commutation function of the Boltzmann operator on a dense grid",
            Command::Superposition => "Compare a two-momentum superposition with its classical branches",
        }
    }

    /// Whether the command builds a spatial grid from `box_length` and `n_points`.
    pub fn uses_grid(self) -> bool {
        matches!(
            self,
            Command::Ehrenfest | Command::Transitions | Command::Commutation | Command::Superposition
        )
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Count,
    Seed,
    Text,
    Choice(&'static [&'static str]),
}

impl Kind {
    pub fn describe(self) -> String {
        match self {
            Kind::Float => "a real number".into(),
            Kind::Int => "an integer".into(),
            Kind::Count => "a non-negative integer".into(),
            Kind::Seed => "an unsigned 64-bit integer".into(),
            Kind::Text => "a string".into(),
            Kind::Choice(options) => format!("one of {}", options.join(", ")),
        }
    }

    pub fn value_name(self) -> &'static str {
        match self {
            Kind::Float => "REAL",
            Kind::Int => "INT",
            Kind::Count => "COUNT",
            Kind::Seed => "U64",
            Kind::Text => "TEXT",
            Kind::Choice(_) => "NAME",
        }
    }
}

pub const POTENTIALS: &[&str] = &["free", "harmonic", "quartic", "double_well", "cosine"];

#[derive(Debug, Clone)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    /// `None` means the key has no default and is simply absent unless given.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        kind,
        default: Some(default),
        help,
    }
}

pub const OUTPUT_DIR_ENV: &str = "DECOH_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "decoh-out";

fn common(cmd: Command) -> Vec<Key> {
    let (box_length, n_points) = match cmd {
        Command::Transitions | Command::Commutation => ("16", "64"),
        _ => ("32", "1024"),
    };
    let mut keys = vec![
        key("potential", Kind::Choice(POTENTIALS), "harmonic", "potential energy surface"),
        key("k", Kind::Float, "1", "harmonic spring constant"),
        key("a", Kind::Float, "0.1", "quartic coefficient, or double-well quartic coefficient"),
        key("b", Kind::Float, "1", "double-well quadratic coefficient"),
        key("amplitude", Kind::Float, "1", "cosine amplitude"),
        key("cosine_mode", Kind::Int, "2", "cosine wavenumber in units of 2*pi/box_length"),
        key("hbar", Kind::Float, "1", "reduced Planck constant"),
        key("mass", Kind::Float, "1", "particle mass"),
        key("kb", Kind::Float, "1", "Boltzmann constant"),
        key("box_length", Kind::Float, box_length, "periodic box length (also fixes the cosine wavenumber)"),
    ];
    if cmd.uses_grid() {
        keys.push(key("n_points", Kind::Count, n_points, "grid points, a power of two"));
    }
    keys.push(key("seed", Kind::Seed, "0", "master random seed; replica i uses seed XOR i"));
    keys.push(Key {
        name: "output_dir",
        kind: Kind::Text,
        default: None,
        help: "output directory [fallback: $DECOH_OUTPUT_DIR, then decoh-out]",
    });
    keys
}

pub fn keys(cmd: Command) -> Vec<Key> {
    let mut keys = common(cmd);
    let specific: Vec<Key> = match cmd {
        Command::Ehrenfest => vec![
            key("q0", Kind::Float, "2", "packet centre"),
            key("p0", Kind::Float, "0", "packet mean momentum"),
            key("width", Kind::Float, "1", "packet position standard deviation"),
            key("tau", Kind::Float, "0.001", "time step"),
            key("n_steps", Kind::Count, "6283", "number of steps"),
            key("stride", Kind::Count, "10", "steps between recorded rows"),
        ],
        Command::Classical => vec![
            key("q0", Kind::Float, "1", "initial position"),
            key("p0", Kind::Float, "0", "initial momentum"),
            key("tau", Kind::Float, "0.01", "time step"),
            key("n_steps", Kind::Count, "1000", "number of steps"),
            key("stride", Kind::Count, "10", "steps between recorded rows"),
        ],
        Command::Stochastic => vec![
            key("sigma2", Kind::Float, "0.02", "random-force variance per component"),
            key("tau", Kind::Float, "0.01", "time step (must be positive)"),
            key("temperature", Kind::Float, "1", "reservoir temperature"),
            key("n_steps", Kind::Count, "1000000", "steps per replica, burn-in included"),
            key("burn_in", Kind::Count, "10000", "discarded leading steps per replica"),
            key("stride", Kind::Count, "50", "steps between retained samples"),
            key("n_replicas", Kind::Count, "4", "independent replicas"),
            key("dim", Kind::Count, "1", "degrees of freedom"),
        ],
        Command::Bracket | Command::Rates => vec![
            key("q0", Kind::Float, "1", "phase-space position"),
            key("p0", Kind::Float, "1", "phase-space momentum"),
            key("tau", Kind::Float, "0.01", "largest time step of the halving ladder"),
            key("n_taus", Kind::Count, "5", "number of time steps in the ladder (at least 5)"),
            key("order", Kind::Count, "2", "truncation order of each propagator expansion (1 or 2)"),
        ],
        Command::Transitions => vec![
            key("mode", Kind::Int, "4", "source momentum mode n"),
            key("tau", Kind::Float, "0.001", "time step"),
        ],
        Command::Commutation => vec![
            key("mode", Kind::Int, "4", "momentum mode n"),
            key("q", Kind::Float, "0", "position (snapped to the nearest grid point)"),
            key("beta", Kind::Float, "0.16", "largest inverse temperature of the halving ladder"),
            key("n_betas", Kind::Count, "5", "number of inverse temperatures"),
        ],
        Command::Superposition => vec![
            key("n1", Kind::Int, "20", "first momentum mode"),
            key("n2", Kind::Int, "-20", "second momentum mode; equal to n1 runs a single branch"),
            key("width", Kind::Float, "1", "Gaussian envelope width; 0 selects plane waves"),
            key("centre", Kind::Float, "0", "Gaussian envelope centre"),
            key("tau", Kind::Float, "0.001", "time step"),
            key("horizon", Kind::Float, "6.283185307179586", "total propagation time"),
            key("stride", Kind::Count, "10", "steps between recorded rows"),
        ],
    };
    keys.extend(specific);
    keys
}
