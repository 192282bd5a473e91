use serde::{Deserialize, Serialize};

use super::{HistoryField, LinearProblem, MolCore, Shift};
use crate::error::{Error, Result};

/// Smallest number of steps per delay interval with `dt <= 0.4 dx²`.
pub fn delay_steps_for(h: f64, dx: f64) -> usize {
    let n = (h / (0.4 * dx * dx) * (1.0 - 1e-12)).ceil();
    (n as usize).max(1)
}

/// Heun (SSP-RK2) method of lines. Both stage times `t` and `t + dt` have
/// their delayed slice stored in the ring, so no temporal interpolation.
#[derive(Debug, Clone)]
pub struct FdStepper {
    core: MolCore,
    q: f64,
    hist: HistoryField,
    stage: Vec<f64>,
    work: Vec<f64>,
}

impl FdStepper {
    pub fn new(prob: &LinearProblem, hist: HistoryField) -> Result<Self> {
        let grid = prob.grid;
        if hist.len() != grid.n {
            return Err(Error::Config(format!(
                "history slices have {} points, grid has {}",
                hist.len(),
                grid.n
            )));
        }
        let h = prob.coeffs.h;
        if (hist.h() - h).abs() > 1e-12 * h {
            return Err(Error::Config(format!("history spans {} but h = {h}", hist.h())));
        }
        let dx = grid.dx();
        if hist.dt() > 0.4 * dx * dx * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "dt = {} exceeds 0.4 dx^2 = {}",
                hist.dt(),
                0.4 * dx * dx
            )));
        }
        let core = MolCore::new(
            prob.stencil,
            prob.left,
            prob.right,
            grid.periodic,
            Shift::new(prob.coeffs.d, dx),
            grid.n,
        )?;
        Ok(Self {
            core,
            q: prob.delay_coeff,
            stage: vec![0.0; grid.n],
            work: vec![0.0; grid.n],
            hist,
        })
    }

    pub fn dt(&self) -> f64 {
        self.hist.dt()
    }

    pub fn time(&self) -> f64 {
        self.hist.time()
    }

    pub fn current(&self) -> &[f64] {
        self.hist.current()
    }

    pub fn history(&self) -> &HistoryField {
        &self.hist
    }

    pub fn shift(&self) -> Shift {
        self.core.shift
    }

    pub fn step(&mut self) {
        let dt = self.dt();
        let core = self.core;
        let q = self.q;
        let u = self.hist.current();
        let d0 = self.hist.slice(0);
        let d1 = self.hist.slice(1);
        core.rhs(u, &mut self.work, |i| q * core.delayed(d0, i));
        for i in 0..core.n {
            self.stage[i] = u[i] + dt * self.work[i];
        }
        core.rhs(&self.stage, &mut self.work, |i| q * core.delayed(d1, i));
        for i in 0..core.n {
            self.work[i] = 0.5 * (u[i] + self.stage[i] + dt * self.work[i]);
        }
        let work = &self.work;
        self.hist.push_with(|s| s.copy_from_slice(work));
    }

    pub fn advance_to_step(&mut self, target: usize, done: &mut usize) {
        while *done < target {
            self.step();
            *done += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    /// Output times as realized on the step grid.
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
    pub dt: f64,
    pub shift_aligned: bool,
    pub warnings: Vec<String>,
}

impl LinearSolution {
    pub fn sup_norms(&self) -> Vec<f64> {
        self.slices.iter().map(|s| super::sup_norm(s)).collect()
    }
}

pub(crate) fn output_steps(output_times: &[f64], dt: f64) -> Result<Vec<usize>> {
    let mut prev = 0usize;
    output_times
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("output time {t} must be >= 0")));
            }
            let k = (t / dt).round() as usize;
            if k < prev {
                return Err(Error::Config("output times must be nondecreasing".into()));
            }
            prev = k;
            Ok(k)
        })
        .collect()
}

pub fn solve_fd(prob: &LinearProblem, init: HistoryField, output_times: &[f64]) -> Result<LinearSolution> {
    let mut warnings = Vec::new();
    if !prob.grid.periodic {
        let u = init.current();
        let edge = (u.len() / 20).max(1);
        let peak = super::sup_norm(u);
        let near = super::sup_norm(&u[..edge]).max(super::sup_norm(&u[u.len() - edge..]));
        if peak > 0.0 && near > 1e-10 * peak {
            warnings.push(format!("datum reaches the outer 5% of the domain ({near:e} vs peak {peak:e})"));
        }
    }
    let mut stepper = FdStepper::new(prob, init)?;
    let dt = stepper.dt();
    let steps = output_steps(output_times, dt)?;
    let mut done = 0;
    let mut times = Vec::with_capacity(steps.len());
    let mut slices = Vec::with_capacity(steps.len());
    for k in steps {
        stepper.advance_to_step(k, &mut done);
        times.push(k as f64 * dt);
        slices.push(stepper.current().to_vec());
    }
    Ok(LinearSolution {
        times,
        slices,
        dt,
        shift_aligned: stepper.shift().is_aligned(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charspec::LinearCoefficients;
    use crate::linsolve::{sup_norm, GridSpec};
    use std::f64::consts::PI;

    fn gaussian_heat(x: f64, t: f64, w: f64) -> f64 {
        // unit mass, variance w² at t = 0
        let v = w * w + 2.0 * t;
        (-x * x / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
    }

    #[test]
    fn heat_kernel() {
        let grid = GridSpec::new(-20.0, 20.0, 400, false).unwrap();
        let coeffs = LinearCoefficients::new(0.0, 0.0, 0.0, 0.0, 0.1).unwrap();
        let n = delay_steps_for(0.1, grid.dx());
        let hist = HistoryField::constant(0.1, n, grid.points().iter().map(|&x| gaussian_heat(x, 0.0, 1.0)).collect()).unwrap();
        let sol = solve_fd(&LinearProblem::new(coeffs, grid), hist, &[1.0, 3.0]).unwrap();
        for (t, s) in sol.times.iter().zip(&sol.slices) {
            assert!((sup_norm(s) - gaussian_heat(0.0, *t, 1.0)).abs() < 1e-4);
        }
    }

    #[test]
    fn gauge_factor() {
        let grid = GridSpec::new(-20.0, 20.0, 400, false).unwrap();
        let u0: Vec<f64> = grid.points().iter().map(|&x| gaussian_heat(x, 0.0, 1.0)).collect();
        let run = |p: f64| {
            let coeffs = LinearCoefficients::new(0.0, p, 0.0, 0.0, 0.1).unwrap();
            let n = delay_steps_for(0.1, grid.dx());
            let hist = HistoryField::constant(0.1, n, u0.clone()).unwrap();
            solve_fd(&LinearProblem::new(coeffs, grid), hist, &[2.0]).unwrap()
        };
        let heat = run(0.0);
        let damped = run(-1.0);
        let ratio = sup_norm(&damped.slices[0]) / sup_norm(&heat.slices[0]);
        assert!((ratio - (-2.0f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn rejects_large_step() {
        let grid = GridSpec::new(0.0, 1.0, 16, false).unwrap();
        let coeffs = LinearCoefficients::new(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let hist = HistoryField::constant(1.0, 100, vec![0.0; 16]).unwrap();
        assert!(matches!(FdStepper::new(&LinearProblem::new(coeffs, grid), hist), Err(Error::Config(_))));
    }

    #[test]
    fn warns_when_datum_touches_edge() {
        let grid = GridSpec::new(0.0, 1.0, 16, false).unwrap();
        let coeffs = LinearCoefficients::new(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let n = delay_steps_for(1.0, grid.dx());
        let hist = HistoryField::constant(1.0, n, vec![1.0; 16]).unwrap();
        let sol = solve_fd(&LinearProblem::new(coeffs, grid), hist, &[0.0]).unwrap();
        assert_eq!(sol.warnings.len(), 1);
    }
}
