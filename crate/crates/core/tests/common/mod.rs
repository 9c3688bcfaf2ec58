//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the FFT or eigen-solver code paths under test.
#![allow(dead_code)]

use std::f64::consts::PI;

use decoh_core::{PhysicalConstants, PotentialSpec, SpatialGrid};
use num_complex::Complex64;

/// Row-major dense complex matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![Complex64::default(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let s = self.a[i * n + k];
                if s == Complex64::default() {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += s * other.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Dense {
        Dense { n: self.n, a: self.a.iter().map(|x| x * c).collect() }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.at(i, j) * v[j]).sum()).collect()
    }

    fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `e^{A}` by scaling and squaring with a 24-term Taylor series.
pub fn expm(a: &Dense) -> Dense {
    let norm = a.norm1();
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scaled = a.scale(Complex64::new(0.5f64.powi(s), 0.0));
    let mut term = Dense::identity(a.n);
    let mut sum = Dense::identity(a.n);
    for k in 1..=24 {
        term = term.mul(&scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        for (x, t) in sum.a.iter_mut().zip(&term.a) {
            *x += t;
        }
    }
    for _ in 0..s {
        sum = sum.mul(&sum);
    }
    sum
}

/// Grid Hamiltonian from an explicit DFT sum over the lattice momenta.
pub fn dense_hamiltonian(grid: &SpatialGrid, spec: &PotentialSpec, consts: &PhysicalConstants) -> Dense {
    let m = grid.n_points();
    let dp = 2.0 * PI * consts.hbar / grid.box_length();
    let half = (m / 2) as i64;
    let mut h = Dense::zeros(m);
    for j in 0..m {
        for l in 0..m {
            let mut s = Complex64::default();
            for n in -half..half {
                let p = n as f64 * dp;
                let phase = 2.0 * PI * n as f64 * (j as f64 - l as f64) / m as f64;
                s += Complex64::from_polar(p * p / (2.0 * consts.mass), phase);
            }
            h.a[j * m + l] = s / m as f64;
        }
        let x = -0.5 * grid.box_length() + j as f64 * grid.box_length() / m as f64;
        h.a[j * m + j] += spec.value_1d(x);
    }
    h
}

/// Plane wave `L^{-1/2} e^{i n Δp x/ħ}` on the grid.
pub fn plane_wave(grid: &SpatialGrid, n: i64, hbar: f64) -> Vec<Complex64> {
    let l = grid.box_length();
    let p = n as f64 * 2.0 * PI * hbar / l;
    (0..grid.n_points())
        .map(|j| {
            let x = -0.5 * l + j as f64 * l / grid.n_points() as f64;
            Complex64::from_polar(1.0 / l.sqrt(), p * x / hbar)
        })
        .collect()
}

/// `⟨u|v⟩` with grid weight `dx`.
pub fn inner(u: &[Complex64], v: &[Complex64], dx: f64) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() * dx
}

/// Log-log slope of `ys` against `xs` by ordinary least squares.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
