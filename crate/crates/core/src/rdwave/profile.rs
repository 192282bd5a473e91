use serde::{Deserialize, Serialize};

use super::{comoving_grid, discrete_tail_rate, left_extent, ComovingProblem, ComovingStepper};
use crate::birthfuncs::{check_m, interval_data, BirthFunction};
use crate::charspec::{speed_threshold, LambdaChoice, SpeedData};
use crate::error::{Error, Result};
use crate::linsolve::{delay_steps_for, sup_norm, Boundary, GridSpec, HistoryField};

/// Step-like initial data: 0 on the left, κ on the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepDatum {
    /// `κ / (1 + e^{-λz})`, a tanh transition with the leading-edge rate.
    Logistic,
    /// `κ min(1, e^{λ(z - offset)})`.
    ClippedExponential { offset: f64 },
    /// Piecewise-linear ramp of the given width centred at 0; compact on the left.
    Ramp { width: f64 },
}

impl StepDatum {
    pub fn eval(&self, z: f64, kappa: f64, lambda: f64) -> f64 {
        match *self {
            StepDatum::Logistic => kappa / (1.0 + (-lambda * z).exp()),
            StepDatum::ClippedExponential { offset } => kappa * (lambda * (z - offset)).exp().min(1.0),
            StepDatum::Ramp { width } => kappa * ((z + 0.5 * width) / width).clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub dx0: f64,
    pub z_max: f64,
    /// Defaults to a left end deep enough for the tail check.
    pub z_min: Option<f64>,
    pub datum: StepDatum,
    pub max_time: f64,
    /// Bound on `sup |Δψ| / Δt` (plain and weighted) for convergence.
    pub tolerance: f64,
    /// Feedback gain of the anchoring controller.
    pub gain: f64,
    pub range_tolerance: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            dx0: 0.05,
            z_max: 40.0,
            z_min: None,
            datum: StepDatum::Logistic,
            max_time: 2000.0,
            tolerance: 1e-8,
            gain: 1.0,
            range_tolerance: 1e-3,
        }
    }
}

/// Profile values against the trapping intervals, on the right part of the
/// grid where the profile has settled, plus a global upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeCheck {
    pub region_start: f64,
    pub min_right: f64,
    pub max_right: f64,
    pub sup_all: f64,
    pub zeta: (f64, f64),
    pub i_k: (f64, f64),
    pub tolerance: f64,
    pub in_zeta: bool,
    pub in_i_k: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub bf: BirthFunction,
    pub c: f64,
    pub h: f64,
    /// `λ₁(c)` for the linearization at 0.
    pub lambda_c: f64,
    /// The same rate on the grid; sets the left ghost ratio.
    pub tail_rate: f64,
    pub grid: GridSpec,
    pub shift_cells: usize,
    pub psi: Vec<f64>,
    /// Location of the κ/2 upcrossing.
    pub anchor: f64,
    pub converged: bool,
    pub weighted_converged: bool,
    pub relax_time: f64,
    pub residual: f64,
    /// `max ψ / κ` over the left 10% of the grid.
    pub left_tail_max: f64,
    pub range: Option<RangeCheck>,
    pub warnings: Vec<String>,
}

impl WaveProfile {
    pub fn kappa(&self) -> f64 {
        self.bf.kappa().unwrap_or(f64::NAN)
    }

    pub fn left_boundary(&self) -> Boundary {
        Boundary::Geometric((-self.tail_rate * self.grid.dx()).exp())
    }

    pub fn steps_per_delay(&self) -> usize {
        delay_steps_for(self.h, self.grid.dx())
    }

    pub fn history(&self) -> Result<HistoryField> {
        HistoryField::constant(self.h, self.steps_per_delay(), self.psi.clone())
    }

    /// The relaxation problem around this profile: tail ghost left, Neumann right.
    pub fn problem(&self, history: HistoryField) -> Result<ComovingProblem> {
        Ok(ComovingProblem::new(self.bf.clone(), self.c, self.grid, history)?
            .with_boundaries(self.left_boundary(), Boundary::NEUMANN))
    }

    pub fn has_converged(&self) -> bool {
        self.converged && self.weighted_converged
    }
}

/// Linear-interpolated position of the first upcrossing of `level`.
pub(crate) fn anchor_of(grid: &GridSpec, u: &[f64], level: f64) -> Option<f64> {
    let i = u.iter().position(|v| *v >= level)?;
    if i == 0 {
        return Some(grid.x(0));
    }
    let f = (level - u[i - 1]) / (u[i] - u[i - 1]);
    Some(grid.x(i - 1) + f * grid.dx())
}

/// Relaxes a step datum in the co-moving frame, feeding the κ/2 crossing
/// back into the advection speed so the front stays pinned at `z = 0`.
pub fn compute_profile(bf: &BirthFunction, c: f64, h: f64, opts: &ProfileOptions) -> Result<WaveProfile> {
    let report = check_m(bf);
    let kappa = report
        .kappa
        .ok_or_else(|| Error::Model("profile needs a positive equilibrium".into()))?;
    let g0 = bf.g_prime_0();
    let mut warnings = Vec::new();
    let c_star = speed_threshold(bf.g_star_plus(), h)?;
    if !(c > c_star) {
        warnings.push(format!("c = {c} <= c(g*+) = {c_star}; convergence not guaranteed"));
    }
    let lambda_c = SpeedData::new(c, g0, h, LambdaChoice::Lower)?.lambda_c;

    let (probe, s) = comoving_grid(c, h, opts.dx0, -1.0, 1.0)?;
    let tail_rate = discrete_tail_rate(c, g0, probe.dx(), s)?;
    let z_min = opts.z_min.unwrap_or_else(|| left_extent(tail_rate, opts.z_max));
    let (grid, s) = comoving_grid(c, h, opts.dx0, z_min, opts.z_max)?;
    let dx = grid.dx();
    let n_delay = delay_steps_for(h, dx);
    let datum: Vec<f64> = grid.points().iter().map(|z| opts.datum.eval(*z, kappa, tail_rate)).collect();
    let hist = HistoryField::constant(h, n_delay, datum)?;
    let problem = ComovingProblem::new(bf.clone(), c, grid, hist)?
        .with_boundaries(Boundary::Geometric((-tail_rate * dx).exp()), Boundary::NEUMANN);
    let mut st = ComovingStepper::new(problem)?;

    let weights: Vec<f64> = grid.points().iter().map(|z| if *z <= 0.0 { (-tail_rate * z).exp() } else { 0.0 }).collect();
    let mut prev = st.current().to_vec();
    let (mut converged, mut weighted_converged) = (false, false);
    let mut step = 0usize;
    while st.time() < opts.max_time {
        let za = anchor_of(&grid, st.current(), 0.5 * kappa).ok_or_else(|| Error::NonConvergence {
            time: st.time(),
            detail: "front left the grid".into(),
        })?;
        st.step_with_speed(c - opts.gain * za)?;
        step += 1;
        if step % n_delay == 0 {
            let u = st.current();
            let plain = u.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / h;
            let weighted = u
                .iter()
                .zip(&prev)
                .zip(&weights)
                .map(|((a, b), w)| w * (a - b).abs())
                .fold(0.0, f64::max)
                / h;
            converged = plain < opts.tolerance;
            weighted_converged = weighted < opts.tolerance;
            if converged && weighted_converged {
                break;
            }
            prev.copy_from_slice(u);
        }
    }
    let psi = st.current().to_vec();
    let anchor = anchor_of(&grid, &psi, 0.5 * kappa).unwrap_or(f64::NAN);
    let residual = profile_residual(bf, c, &grid, &psi, (-tail_rate * dx).exp(), s);
    let tail_end = grid.n / 10;
    let left_tail_max = sup_norm(&psi[..tail_end.max(1)]) / kappa;
    if !(left_tail_max < 1e-8) {
        warnings.push(format!("left tail reaches {left_tail_max:e} kappa; widen the grid"));
    }

    let range = if report.passes_m {
        let data = interval_data(bf)?;
        let region_start = 0.5 * (anchor + grid.x_max);
        let right: Vec<f64> = grid
            .points()
            .iter()
            .zip(&psi)
            .filter(|(z, _)| **z >= region_start)
            .map(|(_, v)| *v)
            .collect();
        let min_right = right.iter().copied().fold(f64::INFINITY, f64::min);
        let max_right = right.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sup_all = sup_norm(&psi);
        let tol = opts.range_tolerance;
        let inside = |lo: f64, hi: f64| min_right >= lo - tol && max_right <= hi + tol && sup_all <= hi + tol;
        Some(RangeCheck {
            region_start,
            min_right,
            max_right,
            sup_all,
            zeta: (data.zeta1, data.zeta2),
            i_k: data.i_k(),
            tolerance: tol,
            in_zeta: inside(data.zeta1, data.zeta2),
            in_i_k: inside(data.m_k, data.k),
        })
    } else {
        None
    };

    Ok(WaveProfile {
        bf: bf.clone(),
        c,
        h,
        lambda_c,
        tail_rate,
        grid,
        shift_cells: s,
        psi,
        anchor,
        converged,
        weighted_converged,
        relax_time: st.time(),
        residual,
        left_tail_max,
        range,
        warnings,
    })
}

/// `sup |ψ'' - cψ' - ψ + g(ψ(· - ch))|` by direct substitution on the grid,
/// with ghosts `ψ₀ r^k` on the left and a flat continuation on the right.
pub fn profile_residual(bf: &BirthFunction, c: f64, grid: &GridSpec, psi: &[f64], left_ratio: f64, s: usize) -> f64 {
    let n = psi.len();
    let dx = grid.dx();
    let at = |j: i64| -> f64 {
        if j < 0 {
            psi[0] * left_ratio.powi((-j) as i32)
        } else if j as usize >= n {
            psi[n - 1]
        } else {
            psi[j as usize]
        }
    };
    (0..n as i64)
        .map(|i| {
            let (l, m, r) = (at(i - 1), at(i), at(i + 1));
            let res = (r - 2.0 * m + l) / (dx * dx) - c * (r - l) / (2.0 * dx) - m + bf.eval(at(i - s as i64));
            res.abs()
        })
        .fold(0.0, f64::max)
}
