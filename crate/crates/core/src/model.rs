//! Physical constants, model potentials, phase-space points and the
//! classical Hamiltonian `H(q, p) = p·p/2m + U(q)`.
//!
//! All potentials are separable: a d-dimensional `U(q)` is the sum of the
//! one-dimensional profile over the components of `q`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{config, Result};

/// `hbar`, particle mass and Boltzmann's constant. Natural units by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub kb: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64, kb: f64) -> Result<Self> {
        let c = Self { hbar, mass, kb };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("mass", self.mass), ("kb", self.kb)] {
            if !(v.is_finite() && v > 0.0) {
                return config(format!("{name} must be finite and strictly positive, got {v}"));
            }
        }
        Ok(())
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            kb: 1.0,
        }
    }
}

/// The fixed family of model potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    Free,
    /// `k q² / 2`
    Harmonic { k: f64 },
    /// `a q⁴`
    Quartic { a: f64 },
    /// `a q⁴ − b q²`
    DoubleWell { a: f64, b: f64 },
    /// `amplitude · cos(wavenumber · q)`
    Cosine { amplitude: f64, wavenumber: f64 },
}

impl PotentialSpec {
    pub const KIND_NAMES: [&'static str; 5] = ["free", "harmonic", "quartic", "double_well", "cosine"];

    /// Cosine potential commensurate with a periodic box: `mode` full periods per box.
    pub fn cosine_on_box(amplitude: f64, mode: i64, box_length: f64) -> Self {
        Self::Cosine {
            amplitude,
            wavenumber: 2.0 * PI * mode as f64 / box_length,
        }
    }

    /// One representative of every kind with moderate parameters, used by
    /// sweeps that must cover the whole enumeration.
    pub fn reference_family(box_length: f64) -> [PotentialSpec; 5] {
        [
            PotentialSpec::Free,
            PotentialSpec::Harmonic { k: 1.0 },
            PotentialSpec::Quartic { a: 0.1 },
            PotentialSpec::DoubleWell { a: 0.1, b: 1.0 },
            PotentialSpec::cosine_on_box(1.0, 2, box_length),
        ]
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PotentialSpec::Free => "free",
            PotentialSpec::Harmonic { .. } => "harmonic",
            PotentialSpec::Quartic { .. } => "quartic",
            PotentialSpec::DoubleWell { .. } => "double_well",
            PotentialSpec::Cosine { .. } => "cosine",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params: &[(&str, f64)] = match self {
            PotentialSpec::Free => &[],
            PotentialSpec::Harmonic { k } => &[("k", *k)],
            PotentialSpec::Quartic { a } => &[("a", *a)],
            PotentialSpec::DoubleWell { a, b } => &[("a", *a), ("b", *b)],
            PotentialSpec::Cosine {
                amplitude,
                wavenumber,
            } => &[("amplitude", *amplitude), ("wavenumber", *wavenumber)],
        };
        for (name, v) in params {
            if !v.is_finite() {
                return config(format!("{} parameter {name} must be finite, got {v}", self.kind_name()));
            }
        }
        Ok(())
    }

    /// A cosine potential must fit a whole number of periods into the box.
    pub fn check_periodic(&self, box_length: f64) -> Result<()> {
        if let PotentialSpec::Cosine { wavenumber, .. } = self {
            let periods = wavenumber * box_length / (2.0 * PI);
            if (periods - periods.round()).abs() > 1e-9 {
                return config(format!(
                    "cosine wavenumber {wavenumber} is not periodic on a box of length {box_length} \
                     ({periods} periods)"
                ));
            }
        }
        Ok(())
    }

    /// One-dimensional profile `u(x)`.
    #[inline]
    pub fn value_1d(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { k } => 0.5 * k * x * x,
            PotentialSpec::Quartic { a } => a * (x * x) * (x * x),
            PotentialSpec::DoubleWell { a, b } => {
                let x2 = x * x;
                a * x2 * x2 - b * x2
            }
            PotentialSpec::Cosine {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * x).cos(),
        }
    }

    /// `u'(x)`
    #[inline]
    pub fn derivative_1d(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { k } => k * x,
            PotentialSpec::Quartic { a } => 4.0 * a * x * x * x,
            PotentialSpec::DoubleWell { a, b } => 4.0 * a * x * x * x - 2.0 * b * x,
            PotentialSpec::Cosine {
                amplitude,
                wavenumber,
            } => -amplitude * wavenumber * (wavenumber * x).sin(),
        }
    }

    /// `u''(x)`
    #[inline]
    pub fn second_derivative_1d(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { k } => k,
            PotentialSpec::Quartic { a } => 12.0 * a * x * x,
            PotentialSpec::DoubleWell { a, b } => 12.0 * a * x * x - 2.0 * b,
            PotentialSpec::Cosine {
                amplitude,
                wavenumber,
            } => -amplitude * wavenumber * wavenumber * (wavenumber * x).cos(),
        }
    }

    pub fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        debug_assert_eq!(q.len(), out.len());
        for (g, &x) in out.iter_mut().zip(q) {
            *g = self.derivative_1d(x);
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Free => write!(f, "free"),
            PotentialSpec::Harmonic { k } => write!(f, "harmonic(k={k})"),
            PotentialSpec::Quartic { a } => write!(f, "quartic(a={a})"),
            PotentialSpec::DoubleWell { a, b } => write!(f, "double_well(a={a},b={b})"),
            PotentialSpec::Cosine {
                amplitude,
                wavenumber,
            } => write!(f, "cosine(amplitude={amplitude},wavenumber={wavenumber})"),
        }
    }
}

/// Classical state `{q, p}` of a d-degree-of-freedom system.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseSpacePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let x = Self { q, p };
        x.validate()?;
        Ok(x)
    }

    pub fn one_d(q: f64, p: f64) -> Self {
        Self { q: vec![q], p: vec![p] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return config("phase-space dimension must be at least 1");
        }
        if self.q.len() != self.p.len() {
            return config(format!(
                "q has dimension {} but p has dimension {}",
                self.q.len(),
                self.p.len()
            ));
        }
        if self.q.iter().chain(&self.p).any(|v| !v.is_finite()) {
            return config("phase-space point has non-finite components");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// `U(q)`, summed over components.
pub fn evaluate_potential(spec: &PotentialSpec, q: &[f64]) -> f64 {
    q.iter().map(|&x| spec.value_1d(x)).sum()
}

/// `∇U(q)`
pub fn grad_potential(spec: &PotentialSpec, q: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; q.len()];
    spec.gradient_into(q, &mut g);
    g
}

pub fn kinetic_energy(consts: &PhysicalConstants, p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>() / (2.0 * consts.mass)
}

pub fn hamiltonian_value(consts: &PhysicalConstants, spec: &PotentialSpec, x: &PhaseSpacePoint) -> f64 {
    kinetic_energy(consts, &x.p) + evaluate_potential(spec, &x.q)
}

/// `(∇_q H, ∇_p H) = (∇U(q), p/m)`
pub fn hamiltonian_gradients(
    consts: &PhysicalConstants,
    spec: &PotentialSpec,
    x: &PhaseSpacePoint,
) -> (Vec<f64>, Vec<f64>) {
    let dq = grad_potential(spec, &x.q);
    let dp = x.p.iter().map(|p| p / consts.mass).collect();
    (dq, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn potential_values() {
        assert_eq!(evaluate_potential(&PotentialSpec::Harmonic { k: 1.0 }, &[2.0]), 2.0);
        assert_eq!(evaluate_potential(&PotentialSpec::Free, &[17.3]), 0.0);
        assert_eq!(
            evaluate_potential(&PotentialSpec::DoubleWell { a: 1.0, b: 1.0 }, &[0.0]),
            0.0
        );
    }

    #[test]
    fn potential_gradients() {
        assert_eq!(grad_potential(&PotentialSpec::Harmonic { k: 1.0 }, &[2.0]), vec![2.0]);
        assert_eq!(grad_potential(&PotentialSpec::Free, &[5.0]), vec![0.0]);

        // frozen from a central difference of a*q^4 at q = 1.5, h = 1e-5
        let quartic = PotentialSpec::Quartic { a: 1.0 };
        let fd = central_difference(|x| quartic.value_1d(x), 1.5, 1e-5);
        assert_relative_eq!(fd, 13.5, max_relative = 1e-8);
        assert_relative_eq!(grad_potential(&quartic, &[1.5])[0], 13.5, max_relative = 1e-12);
    }

    #[test]
    fn hamiltonian_examples() {
        let unit = PhysicalConstants::default();
        let heavy = PhysicalConstants::new(1.0, 2.0, 1.0).unwrap();
        let h = |c: &PhysicalConstants, s: PotentialSpec, q: f64, p: f64| {
            hamiltonian_value(c, &s, &PhaseSpacePoint::one_d(q, p))
        };
        assert_eq!(h(&unit, PotentialSpec::Free, 0.0, 2.0), 2.0);
        assert_eq!(h(&unit, PotentialSpec::Harmonic { k: 1.0 }, 1.0, 1.0), 1.0);
        assert_eq!(h(&heavy, PotentialSpec::Harmonic { k: 4.0 }, 1.0, 2.0), 3.0);
    }

    #[test]
    fn hamiltonian_gradient_examples() {
        let unit = PhysicalConstants::default();
        let heavy = PhysicalConstants::new(1.0, 2.0, 1.0).unwrap();
        let g = |c: &PhysicalConstants, s: PotentialSpec, q: f64, p: f64| {
            let (dq, dp) = hamiltonian_gradients(c, &s, &PhaseSpacePoint::one_d(q, p));
            (dq[0], dp[0])
        };
        assert_eq!(g(&unit, PotentialSpec::Harmonic { k: 1.0 }, 3.0, 0.0), (3.0, 0.0));
        assert_eq!(g(&unit, PotentialSpec::Free, 0.0, 4.0), (0.0, 4.0));

        // finite-difference oracle on H for quartic, m = 2, (q, p) = (1, 6)
        let spec = PotentialSpec::Quartic { a: 1.0 };
        let hq = central_difference(|q| hamiltonian_value(&heavy, &spec, &PhaseSpacePoint::one_d(q, 6.0)), 1.0, 1e-5);
        let hp = central_difference(|p| hamiltonian_value(&heavy, &spec, &PhaseSpacePoint::one_d(1.0, p)), 6.0, 1e-5);
        assert_relative_eq!(hq, 4.0, max_relative = 1e-8);
        assert_relative_eq!(hp, 3.0, max_relative = 1e-8);
        let (dq, dp) = g(&heavy, spec, 1.0, 6.0);
        assert_relative_eq!(dq, hq, max_relative = 1e-6);
        assert_relative_eq!(dp, hp, max_relative = 1e-6);
    }

    #[test]
    fn constants_must_be_positive() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn phase_point_dimension_mismatch() {
        assert!(PhaseSpacePoint::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(PhaseSpacePoint::new(vec![], vec![]).is_err());
        assert!(PhaseSpacePoint::new(vec![f64::INFINITY], vec![0.0]).is_err());
    }

    #[test]
    fn cosine_periodicity_check() {
        assert!(PotentialSpec::cosine_on_box(1.0, 3, 32.0).check_periodic(32.0).is_ok());
        let off = PotentialSpec::Cosine {
            amplitude: 1.0,
            wavenumber: 1.0,
        };
        assert!(off.check_periodic(32.0).is_err());
    }
}
