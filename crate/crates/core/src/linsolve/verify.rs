use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{solve_fd, solve_spectral, DecayFit, FitModel, GridSpec, HistoryField, LinearProblem};
use crate::charspec::{decay_amplitude, gamma_root, sigma_root, DecayAmplitude, LinearCoefficients};
use crate::error::{Error, Result};
use crate::halanay::HistoryInterp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Fd,
    #[default]
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    pub sample_dt: f64,
    /// Fit only samples with `t` above this; defaults to `max(h/2, T/4)`, which
    /// keeps the O(1/t) correction to the asymptotic law out of the fit.
    pub fit_from: Option<f64>,
    pub backend: Backend,
    pub model: FitModel,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            sample_dt: 0.25,
            fit_from: None,
            backend: Backend::Spectral,
            model: FitModel::ExpPower,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub gamma: f64,
    pub eps_h: f64,
    pub c_u0: f64,
    pub a0: DecayAmplitude,
    pub times: Vec<f64>,
    pub sup: Vec<f64>,
    pub mass: Vec<f64>,
    /// `A₀ e^{γt}/√t` with the proof-derived A₀.
    pub envelope: Vec<f64>,
    /// Sample times past `h/2` where `sup >= envelope`.
    pub bound_violations: Vec<f64>,
    pub worst_bound_ratio: f64,
    pub fit: DecayFit,
    pub rate_error: f64,
    pub power_error: f64,
}

impl DecayReport {
    pub fn bound_holds(&self) -> bool {
        self.bound_violations.is_empty()
    }
}

pub fn verify_decay(
    coeffs: &LinearCoefficients,
    grid: &GridSpec,
    init: HistoryField,
    t_end: f64,
    opts: &DecayOptions,
) -> Result<DecayReport> {
    let env = gamma_root(coeffs)?;
    let c_u0 = init.c_u0(grid.dx());
    let a0 = decay_amplitude(coeffs, c_u0)?;
    if !(opts.sample_dt > 0.0) {
        return Err(Error::Config(format!("sample_dt = {} must be positive", opts.sample_dt)));
    }
    let count = (t_end / opts.sample_dt + 1e-9).floor() as usize;
    let times: Vec<f64> = (1..=count).map(|k| k as f64 * opts.sample_dt).collect();
    let prob = LinearProblem::new(*coeffs, *grid);
    let sol = match opts.backend {
        Backend::Spectral => solve_spectral(&prob, &init, &times)?,
        Backend::Fd => solve_fd(&prob, init, &times)?,
    };
    let sup = sol.sup_norms();
    let mass: Vec<f64> = sol.slices.iter().map(|s| s.iter().sum::<f64>() * grid.dx()).collect();
    let envelope: Vec<f64> = sol
        .times
        .iter()
        .map(|t| a0.proof * (env.gamma * t).exp() / t.sqrt())
        .collect();
    let mut bound_violations = Vec::new();
    let mut worst_bound_ratio = 0.0f64;
    for ((&t, &s), &e) in sol.times.iter().zip(&sup).zip(&envelope) {
        if t > 0.5 * coeffs.h {
            worst_bound_ratio = worst_bound_ratio.max(s / e);
            if s >= e {
                bound_violations.push(t);
            }
        }
    }
    let fit_from = opts.fit_from.unwrap_or(0.25 * t_end).max(0.5 * coeffs.h);
    let fit = DecayFit::fit(&sol.times, &sup, fit_from, opts.model)?;
    Ok(DecayReport {
        gamma: env.gamma,
        eps_h: env.eps_h,
        c_u0,
        a0,
        times: sol.times,
        sup,
        mass,
        envelope,
        bound_violations,
        worst_bound_ratio,
        rate_error: (fit.rate - env.gamma).abs(),
        power_error: (fit.power + 0.5).abs(),
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileProbe {
    pub t: f64,
    pub x: f64,
    pub measured: f64,
    pub limit: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub sigma: f64,
    pub probes: Vec<ProfileProbe>,
    /// Worst relative error over the probe points, per output time.
    pub max_rel_error: Vec<(f64, f64)>,
    pub error_decreasing: bool,
}

/// Compares `√t e^{-σt} u(t, x)` with its large-time limit at fixed probes,
/// starting from the history `e^{σs} u₀`.
pub fn verify_asymptotic_profile(
    coeffs: &LinearCoefficients,
    grid: &GridSpec,
    u0: &[f64],
    times: &[f64],
    probes: &[f64],
    steps_per_delay: usize,
) -> Result<ProfileReport> {
    if coeffs.d != 0.0 {
        return Err(Error::Domain(format!("d = 0 required, got {}", coeffs.d)));
    }
    if u0.len() != grid.n {
        return Err(Error::Config("datum length does not match the grid".into()));
    }
    let sigma = sigma_root(coeffs)?;
    let h = coeffs.h;
    let dt = h / steps_per_delay as f64;
    let slices = (0..=steps_per_delay)
        .map(|j| {
            let s = -h + j as f64 * dt;
            let f = (sigma * s).exp();
            u0.iter().map(|v| f * v).collect()
        })
        .collect();
    let mut hist = HistoryField::from_slices(h, slices)?;
    hist.interp = HistoryInterp::Cubic;

    let dx = grid.dx();
    let half_m = 0.5 * coeffs.m;
    let weighted_mass: f64 = grid.points().iter().zip(u0).map(|(y, v)| (half_m * y).exp() * v).sum::<f64>() * dx;
    let prefactor = (1.0 + h * coeffs.q * (-sigma * h).exp()).sqrt() / (2.0 * PI.sqrt());

    let sol = solve_spectral(&LinearProblem::new(*coeffs, *grid), &hist, times)?;
    let mut rows = Vec::new();
    let mut max_rel_error = Vec::new();
    for (&t, slice) in sol.times.iter().zip(&sol.slices) {
        let mut worst = 0.0f64;
        for &x in probes {
            let u = interpolate(grid, slice, x)?;
            let measured = t.sqrt() * (-sigma * t).exp() * u;
            let limit = prefactor * (-half_m * x).exp() * weighted_mass;
            let rel_error = ((measured - limit) / limit).abs();
            worst = worst.max(rel_error);
            rows.push(ProfileProbe { t, x, measured, limit, rel_error });
        }
        max_rel_error.push((t, worst));
    }
    let error_decreasing = max_rel_error.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(ProfileReport {
        sigma,
        probes: rows,
        max_rel_error,
        error_decreasing,
    })
}

fn interpolate(grid: &GridSpec, u: &[f64], x: f64) -> Result<f64> {
    let s = (x - grid.x_min) / grid.dx();
    if !(s >= 0.0 && s <= (grid.n - 1) as f64) {
        return Err(Error::Config(format!("probe {x} outside the grid")));
    }
    let i = (s.floor() as usize).min(grid.n - 2);
    let f = s - i as f64;
    Ok((1.0 - f) * u[i] + f * u[i + 1])
}
