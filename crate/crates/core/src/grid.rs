//! Periodic one-dimensional grid and its momentum lattice.
//!
//! Positions are box-centred, `x_j = -L/2 + j·L/M` for `j in 0..M`. Lattice
//! momenta are `n·Δp` with `Δp = 2πħ/L` and `n in [-M/2, M/2)`; FFT index `k`
//! carries mode `n = k` for `k < M/2` and `n = k - M` otherwise.

use std::f64::consts::PI;

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    box_length: f64,
    n_points: usize,
    hbar: f64,
}

impl SpatialGrid {
    pub fn new(box_length: f64, n_points: usize, hbar: f64) -> Result<Self> {
        if !(box_length.is_finite() && box_length > 0.0) {
            return config(format!("box_length must be finite and positive, got {box_length}"));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return config(format!("n_points must be a power of two >= 8, got {n_points}"));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return config(format!("hbar must be finite and positive, got {hbar}"));
        }
        Ok(Self {
            box_length,
            n_points,
            hbar,
        })
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n_points as f64
    }

    pub fn momentum_spacing(&self) -> f64 {
        2.0 * PI * self.hbar / self.box_length
    }

    pub fn position(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.spacing()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.position(j))
    }

    /// Smallest and largest lattice mode index.
    pub fn mode_range(&self) -> (i64, i64) {
        let half = (self.n_points / 2) as i64;
        (-half, half - 1)
    }

    pub fn contains_mode(&self, n: i64) -> bool {
        let (lo, hi) = self.mode_range();
        (lo..=hi).contains(&n)
    }

    pub fn mode_of_index(&self, k: usize) -> i64 {
        if k < self.n_points / 2 {
            k as i64
        } else {
            k as i64 - self.n_points as i64
        }
    }

    /// FFT index of lattice mode `n`; `None` when `n` is off the lattice.
    pub fn index_of_mode(&self, n: i64) -> Option<usize> {
        if !self.contains_mode(n) {
            return None;
        }
        Some(if n >= 0 { n as usize } else { (n + self.n_points as i64) as usize })
    }

    pub fn momentum_of_index(&self, k: usize) -> f64 {
        self.mode_of_index(k) as f64 * self.momentum_spacing()
    }

    /// Minimum-image displacement `x - x0` in `[-L/2, L/2)`.
    pub fn wrap_displacement(&self, dx: f64) -> f64 {
        let l = self.box_length;
        dx - l * ((dx + 0.5 * l) / l).floor()
    }

    /// Index of the grid point nearest to `x` (after wrapping into the box).
    pub fn nearest_index(&self, x: f64) -> usize {
        let shifted = self.wrap_displacement(x) + 0.5 * self.box_length;
        ((shifted / self.spacing()).round() as usize) % self.n_points
    }

    pub fn contains_position(&self, x: f64) -> bool {
        x >= -0.5 * self.box_length && x < 0.5 * self.box_length
    }
}
