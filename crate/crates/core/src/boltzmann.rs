//! Dense grid Hamiltonian and the Boltzmann operator `e^{−βĤ}` built from
//! its eigendecomposition.
//!
//! In position space the kinetic part is the same spectral operator the
//! split-step propagator applies through the FFT, written out as a real
//! symmetric matrix:
//! `T_jk = (1/M) Σ_n (p_n²/2m) cos(p_n (x_j − x_k)/ħ)`.
//!
//! The Boltzmann operator itself is diagonalized in the plane-wave basis,
//! `H_kl = δ_kl p_k²/2m + (1/M) Σ_j U(x_j) e^{−i(p_k − p_l) x_j/ħ}`.
//! Plane waves are then unit vectors, so a weakly coupled high mode is not
//! swamped by rounding from the heavily weighted low-energy eigenvectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use crate::error::{config, Error, Result};
use crate::grid::SpatialGrid;
use crate::model::{PhysicalConstants, PotentialSpec};
use crate::schrodinger::plane_wave;

/// Largest grid accepted for dense work.
pub const MAX_DENSE_POINTS: usize = 256;

pub fn grid_hamiltonian(grid: &SpatialGrid, spec: &PotentialSpec, consts: &PhysicalConstants) -> DMatrix<f64> {
    let m = grid.n_points();
    // T depends on j - k only; tabulate the first column then fill.
    let column: Vec<f64> = (0..m)
        .map(|d| {
            (0..m)
                .map(|k| {
                    let n = grid.mode_of_index(k) as f64;
                    let p = grid.momentum_of_index(k);
                    p * p / (2.0 * consts.mass) * (2.0 * std::f64::consts::PI * n * d as f64 / m as f64).cos()
                })
                .sum::<f64>()
                / m as f64
        })
        .collect();
    let mut h = DMatrix::from_fn(m, m, |j, k| column[j.abs_diff(k)]);
    for (j, x) in grid.positions().enumerate() {
        h[(j, j)] += spec.value_1d(x);
    }
    h
}

/// The same Hamiltonian as [`grid_hamiltonian`] in the orthonormal plane-wave
/// basis, rows and columns in FFT index order.
pub fn momentum_hamiltonian(grid: &SpatialGrid, spec: &PotentialSpec, consts: &PhysicalConstants) -> DMatrix<Complex64> {
    let m = grid.n_points();
    let hbar = consts.hbar;
    let u: Vec<(f64, f64)> = grid.positions().map(|x| (x, spec.value_1d(x))).collect();
    // the potential couples k and l through p_k − p_l only
    let coupling = |dn: i64| -> Complex64 {
        let dp = dn as f64 * grid.momentum_spacing();
        u.iter().map(|&(x, v)| Complex64::from_polar(v, -dp * x / hbar)).sum::<Complex64>() / m as f64
    };
    let table: Vec<Complex64> = (-(m as i64) + 1..m as i64).map(coupling).collect();
    DMatrix::from_fn(m, m, |k, l| {
        let dn = grid.mode_of_index(k) - grid.mode_of_index(l);
        let mut h = table[(dn + m as i64 - 1) as usize];
        if k == l {
            let p = grid.momentum_of_index(k);
            h += p * p / (2.0 * consts.mass);
        }
        h
    })
}

/// `e^{−βĤ}` on a small grid, cached as eigenvalues and plane-wave-basis
/// eigenvectors.
pub struct BoltzmannOperator {
    grid: SpatialGrid,
    spec: PotentialSpec,
    consts: PhysicalConstants,
    beta: f64,
    weights: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl BoltzmannOperator {
    pub fn new(grid: &SpatialGrid, spec: &PotentialSpec, consts: &PhysicalConstants, beta: f64) -> Result<Self> {
        consts.validate()?;
        spec.validate()?;
        spec.check_periodic(grid.box_length())?;
        if grid.n_points() > MAX_DENSE_POINTS {
            return config(format!(
                "dense Boltzmann operator needs at most {MAX_DENSE_POINTS} grid points, got {}",
                grid.n_points()
            ));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return config(format!("beta must be finite and positive, got {beta}"));
        }
        if (grid.hbar() - consts.hbar).abs() > 1e-12 * consts.hbar {
            return config(format!("grid built with hbar = {} but constants say {}", grid.hbar(), consts.hbar));
        }
        let eig = SymmetricEigen::new(momentum_hamiltonian(grid, spec, consts));
        let weights = eig.eigenvalues.map(|e| (-beta * e).exp());
        if weights.iter().any(|w| !w.is_finite())
            || eig.eigenvectors.iter().any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::MatrixExponential(format!(
                "non-finite spectrum for beta = {beta}; smallest eigenvalue {}",
                eig.eigenvalues.min()
            )));
        }
        Ok(Self {
            grid: *grid,
            spec: *spec,
            consts: *consts,
            beta,
            weights,
            vectors: eig.eigenvectors,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Plane-wave coefficients of `e^{−βĤ} ζ_n`, in FFT index order.
    fn evolve_mode(&self, k: usize) -> DVector<Complex64> {
        let c: DVector<Complex64> = DVector::from_iterator(
            self.weights.len(),
            self.vectors.row(k).iter().zip(self.weights.iter()).map(|(v, w)| v.conj() * *w),
        );
        &self.vectors * c
    }

    /// `e^{−βĤ} v` for a position-space vector `v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dx = self.grid.spacing();
        let m = self.grid.n_points();
        let basis: Vec<Vec<Complex64>> = (0..m)
            .map(|k| plane_wave(&self.grid, self.grid.mode_of_index(k)).amplitudes().to_vec())
            .collect();
        let coeffs = DVector::from_iterator(
            m,
            basis.iter().map(|z| z.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() * dx),
        );
        let mixed = DVector::from_iterator(
            m,
            self.vectors.ad_mul(&coeffs).iter().zip(self.weights.iter()).map(|(c, w)| c * *w),
        );
        let out = &self.vectors * mixed;
        (0..m).map(|j| (0..m).map(|k| out[k] * basis[k][j]).sum()).collect()
    }

    /// `ω(q_j, p_n) = [e^{−βĤ} ζ_p](q_j) / (ζ_p(q_j) e^{−βH(q_j, p)})`
    pub fn omega(&self, n: i64, q_index: usize) -> Result<Complex64> {
        let Some(k) = self.grid.index_of_mode(n) else {
            return config(format!("mode {n} is off the momentum lattice"));
        };
        if q_index >= self.grid.n_points() {
            return config(format!("q_index {q_index} outside 0..{}", self.grid.n_points()));
        }
        let coeffs = self.evolve_mode(k);
        let x = self.grid.position(q_index);
        let hbar = self.consts.hbar;
        let p = n as f64 * self.grid.momentum_spacing();
        // divide out ζ_n(x) term by term so the free case is exact
        let ratio: Complex64 = (0..self.grid.n_points())
            .map(|l| {
                let dp = self.grid.momentum_of_index(l) - p;
                coeffs[l] * Complex64::from_polar(1.0, dp * x / hbar)
            })
            .sum();
        let classical = (-self.beta * (p * p / (2.0 * self.consts.mass) + self.spec.value_1d(x))).exp();
        let omega = ratio / classical;
        if !(omega.re.is_finite() && omega.im.is_finite()) {
            return Err(Error::MatrixExponential(format!("non-finite commutation function at mode {n}")));
        }
        Ok(omega)
    }
}
