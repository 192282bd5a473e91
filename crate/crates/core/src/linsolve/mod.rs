//! The linear delayed equation `u_t = u_xx + m u_x + p u + q u(t-h, x+d)`,
//! solved by finite differences and by a Fourier spectral method, plus the
//! decay and asymptotic-profile experiments built on them.

mod fd;
mod fit;
mod spectral;
mod verify;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use crate::halanay::HistoryInterp;
pub use fd::{delay_steps_for, solve_fd, FdStepper, LinearSolution};
pub(crate) use fd::output_steps;
pub use fit::{DecayFit, FitModel, MIN_FIT_SAMPLES};
pub use spectral::{solve_spectral, wavenumbers};
pub use verify::{
    verify_asymptotic_profile, verify_decay, Backend, DecayOptions, DecayReport, ProfileProbe,
    ProfileReport,
};

use crate::charspec::LinearCoefficients;
use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub periodic: bool,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n: usize, periodic: bool) -> Result<Self> {
        ensure_finite("x_min", x_min)?;
        ensure_finite("x_max", x_max)?;
        if !(x_max > x_min) {
            return Err(Error::Config(format!("x_max = {x_max} must exceed x_min = {x_min}")));
        }
        if n < 4 {
            return Err(Error::Config(format!("grid needs at least 4 points, got {n}")));
        }
        if periodic && !n.is_power_of_two() {
            return Err(Error::Config(format!("periodic grid size {n} is not a power of two")));
        }
        Ok(Self { x_min, x_max, n, periodic })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Nearest grid index to `x`, if it lies on the grid span.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = ((x - self.x_min) / self.dx()).round();
        (i >= 0.0 && (i as usize) < self.n).then_some(i as usize)
    }

    pub fn l1_norm(&self, u: &[f64]) -> f64 {
        u.iter().map(|v| v.abs()).sum::<f64>() * self.dx()
    }
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// The state of a delayed evolution: `N + 1` slices at `t - h, ..., t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryField {
    slices: VecDeque<Vec<f64>>,
    h: f64,
    t: f64,
    pub interp: HistoryInterp,
}

impl HistoryField {
    pub fn from_slices(h: f64, slices: Vec<Vec<f64>>) -> Result<Self> {
        ensure_finite("h", h)?;
        if !(h > 0.0) {
            return Err(Error::Config(format!("h = {h} must be positive")));
        }
        if slices.len() < 2 {
            return Err(Error::Config("history needs at least two slices".into()));
        }
        let n = slices[0].len();
        if slices.iter().any(|s| s.len() != n) {
            return Err(Error::Config("history slices differ in length".into()));
        }
        if slices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("history contains non-finite values".into()));
        }
        Ok(Self {
            slices: slices.into(),
            h,
            t: 0.0,
            interp: HistoryInterp::Linear,
        })
    }

    /// Time-independent history.
    pub fn constant(h: f64, steps_per_delay: usize, slice: Vec<f64>) -> Result<Self> {
        Self::from_slices(h, vec![slice; steps_per_delay + 1])
    }

    /// Samples `f(s, x)` for `s = -h + j dt`; smooth, so cubic in time.
    pub fn from_fn(
        grid: &GridSpec,
        h: f64,
        steps_per_delay: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let dt = h / steps_per_delay as f64;
        let slices = (0..=steps_per_delay)
            .map(|j| {
                let s = if j == steps_per_delay { 0.0 } else { -h + j as f64 * dt };
                grid.points().into_iter().map(|x| f(s, x)).collect()
            })
            .collect();
        let mut hist = Self::from_slices(h, slices)?;
        hist.interp = HistoryInterp::Cubic;
        Ok(hist)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps_per_delay(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.h / self.steps_per_delay() as f64
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.slices[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slice `j`, at time `t - h + j dt`.
    pub fn slice(&self, j: usize) -> &[f64] {
        &self.slices[j]
    }

    pub fn current(&self) -> &[f64] {
        self.slices.back().unwrap()
    }

    pub fn slices(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.slices.iter()
    }

    /// `sup_s ‖u(s)‖_{L¹}` over the window.
    pub fn c_u0(&self, dx: f64) -> f64 {
        self.slices
            .iter()
            .map(|s| s.iter().map(|v| v.abs()).sum::<f64>() * dx)
            .fold(0.0, f64::max)
    }

    /// Drops the oldest slice and appends `new`, reusing its allocation.
    pub(crate) fn push_with(&mut self, fill: impl FnOnce(&mut [f64])) {
        let mut old = self.slices.pop_front().unwrap();
        fill(&mut old);
        self.slices.push_back(old);
        self.t += self.dt();
    }
}

/// Three-point operator `minus u_{i-1} + center u_i + plus u_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stencil {
    pub minus: f64,
    pub center: f64,
    pub plus: f64,
}

impl Stencil {
    /// Central differences for `u_xx + m u_x + p u`.
    pub fn central(m: f64, p: f64, dx: f64) -> Self {
        let d2 = 1.0 / (dx * dx);
        let d1 = m / (2.0 * dx);
        Self {
            minus: d2 - d1,
            center: -2.0 * d2 + p,
            plus: d2 + d1,
        }
    }

    /// The central stencil of `u_zz - c u_z - u` conjugated by `e^{-λz}`: if
    /// `w_i = e^{-λ z_i} u_i`, this stencil applied to `w` equals `e^{-λ z_i}`
    /// times the central stencil applied to `u`, exactly on the grid.
    pub fn conjugated(c: f64, lambda: f64, dx: f64) -> Self {
        let d2 = 1.0 / (dx * dx);
        let d1 = c / (2.0 * dx);
        Self {
            minus: (-lambda * dx).exp() * (d2 + d1),
            center: -2.0 * d2 - 1.0,
            plus: (lambda * dx).exp() * (d2 - d1),
        }
    }

    pub fn apply(&self, a: f64, b: f64, c: f64) -> f64 {
        self.minus * a + self.center * b + self.plus * c
    }
}

/// Ghost rule for a non-periodic edge: the ghost `k` cells outside equals the
/// edge value times `r^k`. `0` is homogeneous Dirichlet, `1` is Neumann.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Geometric(f64),
}

impl Boundary {
    pub const DIRICHLET: Boundary = Boundary::Geometric(0.0);
    pub const NEUMANN: Boundary = Boundary::Geometric(1.0);
}

/// How the delayed spatial shift `d` sits on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shift {
    Aligned(i64),
    /// Linear interpolation between `base` and `base + 1` cells with weight `frac`.
    Interpolated { base: i64, frac: f64 },
}

impl Shift {
    pub fn new(d: f64, dx: f64) -> Self {
        let s = d / dx;
        let r = s.round();
        if (s - r).abs() <= 1e-9 {
            Shift::Aligned(r as i64)
        } else {
            let base = s.floor();
            Shift::Interpolated { base: base as i64, frac: s - base }
        }
    }

    pub fn is_aligned(&self) -> bool {
        matches!(self, Shift::Aligned(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearProblem {
    pub coeffs: LinearCoefficients,
    pub grid: GridSpec,
    pub stencil: Stencil,
    /// Coefficient of the delayed term; `q` unless overridden.
    pub delay_coeff: f64,
    pub left: Boundary,
    pub right: Boundary,
}

impl LinearProblem {
    /// Central stencil, periodic or zero-Dirichlet according to the grid.
    pub fn new(coeffs: LinearCoefficients, grid: GridSpec) -> Self {
        let edge = if grid.periodic { Boundary::Periodic } else { Boundary::DIRICHLET };
        Self {
            coeffs,
            grid,
            stencil: Stencil::central(coeffs.m, coeffs.p, grid.dx()),
            delay_coeff: coeffs.q,
            left: edge,
            right: edge,
        }
    }

    pub fn with_boundaries(mut self, left: Boundary, right: Boundary) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn with_stencil(mut self, stencil: Stencil, delay_coeff: f64) -> Self {
        self.stencil = stencil;
        self.delay_coeff = delay_coeff;
        self
    }
}

/// Spatial part shared by every method-of-lines stepper in the crate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MolCore {
    pub stencil: Stencil,
    pub left: Boundary,
    pub right: Boundary,
    pub periodic: bool,
    pub shift: Shift,
    pub n: usize,
}

impl MolCore {
    pub fn new(
        stencil: Stencil,
        left: Boundary,
        right: Boundary,
        periodic: bool,
        shift: Shift,
        n: usize,
    ) -> Result<Self> {
        if !periodic {
            for b in [left, right] {
                match b {
                    Boundary::Periodic => {
                        return Err(Error::Config("periodic edge on a non-periodic grid".into()))
                    }
                    Boundary::Geometric(r) if !(r.is_finite() && r >= 0.0) => {
                        return Err(Error::Config(format!("ghost ratio {r} must be >= 0")))
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { stencil, left, right, periodic, shift, n })
    }

    /// `u` at any integer index, with periodic wrap or ghost extrapolation.
    #[inline]
    pub fn at(&self, u: &[f64], j: i64) -> f64 {
        let n = self.n as i64;
        if j >= 0 && j < n {
            return u[j as usize];
        }
        if self.periodic {
            return u[j.rem_euclid(n) as usize];
        }
        let (edge, r, k) = if j < 0 {
            (u[0], self.left, -j)
        } else {
            (u[self.n - 1], self.right, j - n + 1)
        };
        match r {
            Boundary::Geometric(r) if r == 0.0 => 0.0,
            Boundary::Geometric(r) if r == 1.0 => edge,
            Boundary::Geometric(r) => edge * r.powi(k as i32),
            Boundary::Periodic => unreachable!(),
        }
    }

    /// Delayed, shifted sample feeding point `i`.
    #[inline]
    pub fn delayed(&self, d: &[f64], i: usize) -> f64 {
        match self.shift {
            Shift::Aligned(s) => self.at(d, i as i64 + s),
            Shift::Interpolated { base, frac } => {
                let j = i as i64 + base;
                (1.0 - frac) * self.at(d, j) + frac * self.at(d, j + 1)
            }
        }
    }

    /// `out_i = stencil(u)_i + reaction(i)`.
    #[inline]
    pub fn rhs(&self, u: &[f64], out: &mut [f64], reaction: impl Fn(usize) -> f64) {
        let n = self.n;
        let s = self.stencil;
        out[0] = s.apply(self.at(u, -1), u[0], u[1]) + reaction(0);
        for i in 1..n - 1 {
            out[i] = s.apply(u[i - 1], u[i], u[i + 1]) + reaction(i);
        }
        out[n - 1] = s.apply(u[n - 2], u[n - 1], self.at(u, n as i64)) + reaction(n - 1);
    }
}
