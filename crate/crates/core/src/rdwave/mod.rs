//! The nonlinear delayed equation in a frame moving with speed `c`:
//! `v_t = v_zz - c v_z - v + g(v(t-h, z-ch))`. With `c = 0` this is the lab frame.

mod experiments;
mod profile;

use serde::{Deserialize, Serialize};

pub use experiments::{
    check_comparison, experiment_global_stability, experiment_leading_edge, experiment_uniqueness,
    required_z_max, ComparisonReport, GlobalStabilityReport, LeadingEdgeReport, PerturbationShape,
    PerturbationSpec, UniquenessReport,
};
pub use profile::{compute_profile, profile_residual, ProfileOptions, RangeCheck, StepDatum, WaveProfile};

use crate::birthfuncs::{sup_on, BirthFunction};
use crate::error::{Error, Result};
use crate::linsolve::{sup_norm, Boundary, GridSpec, HistoryField, MolCore, Shift, Stencil};
use crate::numeric::bisect;

/// Grid from `z_min` to at least `z_max` whose spacing divides `ch`. Returns the grid and
/// the delay shift in cells.
pub fn comoving_grid(c: f64, h: f64, dx0: f64, z_min: f64, z_max: f64) -> Result<(GridSpec, usize)> {
    if !(dx0 > 0.0 && z_max > z_min) {
        return Err(Error::Config(format!("bad grid request dx0 = {dx0} on [{z_min}, {z_max}]")));
    }
    let shift = (c * h).abs();
    let (dx, s) = if shift == 0.0 {
        (dx0, 0)
    } else {
        let s = (shift / dx0).round().max(1.0);
        (shift / s, s as usize)
    };
    let n = ((z_max - z_min) / dx - 1e-9).ceil() as usize;
    Ok((GridSpec::new(z_min, z_min + n as f64 * dx, n, false)?, s))
}

/// Left end placing the left 10% of `[z_min, z_max]` where `e^{λz} < e^{-20}`.
pub fn left_extent(lambda: f64, z_max: f64) -> f64 {
    -(20.0 / lambda + 0.1 * z_max.max(0.0)) / 0.9
}

/// Smallest positive root of the discrete leading-edge relation
/// `(2cosh(λdx) - 2)/dx² - c sinh(λdx)/dx - 1 + g'(0) e^{-λ s dx} = 0`,
/// i.e. the exact decay rate of grid solutions of the linearization at 0.
pub fn discrete_tail_rate(c: f64, g_prime_0: f64, dx: f64, s: usize) -> Result<f64> {
    let f = |l: f64| {
        (2.0 * (l * dx).cosh() - 2.0) / (dx * dx) - c * (l * dx).sinh() / dx - 1.0
            + g_prime_0 * (-l * s as f64 * dx).exp()
    };
    if !(g_prime_0 > 1.0) {
        return Err(Error::Domain(format!("g'(0) = {g_prime_0} must exceed 1")));
    }
    let hi = 0.5 * (c + (c * c + 4.0).sqrt()) + 1.0;
    let samples = 4000;
    let step = hi / samples as f64;
    for i in 1..=samples {
        let l = i as f64 * step;
        if f(l) < 0.0 {
            return Ok(bisect(|x| -f(x), l - step, l, 0.0, true));
        }
    }
    Err(Error::NoRealRoot(format!(
        "no decaying leading edge at c = {c} (discrete relation stays positive)"
    )))
}

#[derive(Debug, Clone)]
pub struct ComovingProblem {
    pub bf: BirthFunction,
    pub c: f64,
    pub grid: GridSpec,
    pub left: Boundary,
    pub right: Boundary,
    pub history: HistoryField,
    /// Permit `ch` off the grid, handled by linear interpolation.
    pub allow_interpolated_shift: bool,
    /// `|v|` beyond this trips the blow-up guard.
    pub guard: f64,
}

impl ComovingProblem {
    /// Dirichlet-0 on the left, Neumann-0 on the right.
    pub fn new(bf: BirthFunction, c: f64, grid: GridSpec, history: HistoryField) -> Result<Self> {
        if grid.periodic {
            return Err(Error::Config("co-moving problems use a non-periodic grid".into()));
        }
        if history.len() != grid.n {
            return Err(Error::Config(format!(
                "history slices have {} points, grid has {}",
                history.len(),
                grid.n
            )));
        }
        let data = history.slices().map(|s| sup_norm(s)).fold(0.0, f64::max);
        let reach = bf.scan_range().max(data);
        let guard = data.max(sup_on(&bf, 0.0, reach)) + 1.0;
        Ok(Self {
            bf,
            c,
            grid,
            left: Boundary::DIRICHLET,
            right: Boundary::NEUMANN,
            history,
            allow_interpolated_shift: false,
            guard,
        })
    }

    pub fn with_boundaries(mut self, left: Boundary, right: Boundary) -> Self {
        self.left = left;
        self.right = right;
        self
    }
}

/// One SSP-RK2 step; `reaction(d, j, i)` gets the own delayed slice `d`
/// (ring index `j`) feeding point `i`.
fn heun_step(
    core: &MolCore,
    dt: f64,
    hist: &mut HistoryField,
    stage: &mut [f64],
    work: &mut [f64],
    reaction: impl Fn(&[f64], usize, usize) -> f64,
) {
    let u = hist.current();
    let d0 = hist.slice(0);
    let d1 = hist.slice(1);
    core.rhs(u, work, |i| reaction(d0, 0, i));
    for i in 0..core.n {
        stage[i] = u[i] + dt * work[i];
    }
    core.rhs(stage, work, |i| reaction(d1, 1, i));
    for i in 0..core.n {
        work[i] = 0.5 * (u[i] + stage[i] + dt * work[i]);
    }
    hist.push_with(|s| s.copy_from_slice(work));
}

#[derive(Debug, Clone)]
pub struct ComovingStepper {
    core: MolCore,
    c: f64,
    dx: f64,
    bf: BirthFunction,
    hist: HistoryField,
    stage: Vec<f64>,
    work: Vec<f64>,
    guard: f64,
}

impl ComovingStepper {
    pub fn new(p: ComovingProblem) -> Result<Self> {
        let dx = p.grid.dx();
        let dt = p.history.dt();
        if dt > 0.4 * dx * dx * (1.0 + 1e-9) {
            return Err(Error::Config(format!("dt = {dt} exceeds 0.4 dx^2 = {}", 0.4 * dx * dx)));
        }
        let shift = Shift::new(-p.c * p.history.h(), dx);
        if !shift.is_aligned() && !p.allow_interpolated_shift {
            return Err(Error::Config(format!(
                "ch / dx = {} is not an integer; snap dx or allow interpolation",
                p.c * p.history.h() / dx
            )));
        }
        let core = MolCore::new(Stencil::central(-p.c, -1.0, dx), p.left, p.right, false, shift, p.grid.n)?;
        Ok(Self {
            core,
            c: p.c,
            dx,
            bf: p.bf,
            stage: vec![0.0; p.grid.n],
            work: vec![0.0; p.grid.n],
            hist: p.history,
            guard: p.guard,
        })
    }

    pub fn time(&self) -> f64 {
        self.hist.time()
    }

    pub fn dt(&self) -> f64 {
        self.hist.dt()
    }

    pub fn current(&self) -> &[f64] {
        self.hist.current()
    }

    pub fn history(&self) -> &HistoryField {
        &self.hist
    }

    pub fn step(&mut self) -> Result<()> {
        self.step_with_speed(self.c)
    }

    /// Steps with advection speed `cc`; the delay shift stays at the nominal `ch`.
    pub fn step_with_speed(&mut self, cc: f64) -> Result<()> {
        let t = self.time();
        let mut core = self.core;
        core.stencil = Stencil::central(-cc, -1.0, self.dx);
        let bf = &self.bf;
        let dt = self.hist.dt();
        heun_step(&core, dt, &mut self.hist, &mut self.stage, &mut self.work, |d, _, i| {
            bf.eval(core.delayed(d, i))
        });
        self.check_guard(t)
    }

    fn check_guard(&self, t: f64) -> Result<()> {
        let g = self.guard;
        if self.current().iter().all(|v| v.abs() <= g) {
            Ok(())
        } else {
            Err(Error::BlowUp { last_valid_time: t })
        }
    }
}

/// Evolves `ψ` and `δ = v - ψ` together. `δ` is advanced with
/// `g(ψ + δ) - g(ψ)` computed without cancellation, so it keeps full
/// relative accuracy however small it gets.
#[derive(Debug, Clone)]
pub struct PairStepper {
    base: ComovingStepper,
    delta: HistoryField,
}

impl PairStepper {
    pub fn new(p: ComovingProblem, delta: HistoryField) -> Result<Self> {
        if delta.len() != p.history.len() || delta.steps_per_delay() != p.history.steps_per_delay() {
            return Err(Error::Config("perturbation history does not match the base history".into()));
        }
        Ok(Self {
            base: ComovingStepper::new(p)?,
            delta,
        })
    }

    pub fn time(&self) -> f64 {
        self.base.time()
    }

    pub fn dt(&self) -> f64 {
        self.base.dt()
    }

    pub fn psi(&self) -> &[f64] {
        self.base.current()
    }

    pub fn delta(&self) -> &[f64] {
        self.delta.current()
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.delta.dt();
        let ComovingStepper { core, bf, hist: psi, stage, work, .. } = &mut self.base;
        let core = *core;
        heun_step(&core, dt, &mut self.delta, stage, work, |d, j, i| {
            bf.diff(core.delayed(psi.slice(j), i), core.delayed(d, i))
        });
        let t = self.time();
        if self.delta.current().iter().any(|v| !(v.abs() <= self.base.guard)) {
            return Err(Error::BlowUp { last_valid_time: t });
        }
        self.base.step()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComovingSolution {
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
    pub dt: f64,
}

pub fn solve_comoving(p: ComovingProblem, output_times: &[f64]) -> Result<ComovingSolution> {
    let mut st = ComovingStepper::new(p)?;
    let dt = st.dt();
    let steps = crate::linsolve::output_steps(output_times, dt)?;
    let mut done = 0;
    let mut times = Vec::with_capacity(steps.len());
    let mut slices = Vec::with_capacity(steps.len());
    for k in steps {
        while done < k {
            st.step()?;
            done += 1;
        }
        times.push(k as f64 * dt);
        slices.push(st.current().to_vec());
    }
    Ok(ComovingSolution { times, slices, dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charspec::{lambda_interval, LinearCoefficients};
    use crate::linsolve::{delay_steps_for, solve_fd, LinearProblem};

    #[test]
    fn grid_snaps_shift() {
        let (g, s) = comoving_grid(1.3, 1.0, 0.05, -10.0, 10.0).unwrap();
        assert_eq!(s, 26);
        assert!((s as f64 * g.dx() - 1.3).abs() < 1e-14);
        let (g, s) = comoving_grid(0.0, 1.0, 0.05, -10.0, 10.0).unwrap();
        assert_eq!((s, g.n), (0, 400));
    }

    #[test]
    fn discrete_rate_tends_to_continuous() {
        let (c, p, h) = (1.3325546111576978, 2.0, 1.0);
        let l1 = lambda_interval(c, p, h).unwrap().lambda1;
        let mut prev = f64::INFINITY;
        for s in [27, 54, 108] {
            let dx = c * h / s as f64;
            let err = (discrete_tail_rate(c, p, dx, s).unwrap() - l1).abs();
            assert!(err < prev / 3.0, "s={s}: {err}");
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    fn small_problem(bf: BirthFunction, c: f64, datum: impl Fn(f64) -> f64) -> ComovingProblem {
        let (grid, _) = comoving_grid(c, 1.0, 0.1, -10.0, 10.0).unwrap();
        let n = delay_steps_for(1.0, grid.dx());
        let hist = HistoryField::constant(1.0, n, grid.points().into_iter().map(datum).collect()).unwrap();
        ComovingProblem::new(bf, c, grid, hist).unwrap()
    }

    #[test]
    fn equilibria_are_fixed() {
        let bf = BirthFunction::nicholson(2.0).unwrap();
        let k = 2f64.ln();
        let p = small_problem(bf.clone(), 0.7, |_| k).with_boundaries(Boundary::NEUMANN, Boundary::NEUMANN);
        let sol = solve_comoving(p, &[3.0]).unwrap();
        assert!(sol.slices[0].iter().all(|v| (v - k).abs() < 1e-15));
        let sol = solve_comoving(small_problem(bf, 0.7, |_| 0.0), &[3.0]).unwrap();
        assert!(sol.slices[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_g_matches_linsolve() {
        // g(u) = u, c = 0: the linear equation with p = -1, q = 1
        let bf = BirthFunction::linear(1.0).unwrap();
        let bump = |z: f64| (-z * z).exp();
        let p = small_problem(bf, 0.0, bump);
        let grid = p.grid;
        let hist = p.history.clone();
        let sol = solve_comoving(p, &[2.0, 4.0]).unwrap();
        let coeffs = LinearCoefficients::new(0.0, -1.0, 1.0, 0.0, 1.0).unwrap();
        let lin = solve_fd(
            &LinearProblem::new(coeffs, grid).with_boundaries(Boundary::DIRICHLET, Boundary::NEUMANN),
            hist,
            &[2.0, 4.0],
        )
        .unwrap();
        for (a, b) in sol.slices.iter().zip(&lin.slices) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn nonnegative_data_stay_nonnegative() {
        let bf = BirthFunction::nicholson(1.5f64.exp()).unwrap();
        let p = small_problem(bf, 1.0, |z: f64| if z.abs() < 2.0 { 3.0 } else { 0.0 });
        let sol = solve_comoving(p, &[1.0, 5.0]).unwrap();
        assert!(sol.slices.iter().flatten().all(|v| *v >= 0.0));
    }

    #[test]
    fn pair_matches_difference_of_runs() {
        let bf = BirthFunction::nicholson(2.0).unwrap();
        let base = small_problem(bf.clone(), 0.9, |z: f64| 0.5 * (1.0 + z.tanh()));
        let n = base.history.steps_per_delay();
        let grid = base.grid;
        let bump: Vec<f64> = grid.points().iter().map(|z| 0.1 * (-(z - 1.0) * (z - 1.0)).exp()).collect();
        let delta = HistoryField::constant(1.0, n, bump.clone()).unwrap();
        let mut pair = PairStepper::new(base.clone(), delta).unwrap();
        let v0: Vec<f64> = base.history.current().iter().zip(&bump).map(|(a, b)| a + b).collect();
        let mut v = base.clone();
        v.history = HistoryField::constant(1.0, n, v0).unwrap();
        let mut sv = ComovingStepper::new(v).unwrap();
        for _ in 0..(3 * n) {
            pair.step().unwrap();
            sv.step().unwrap();
        }
        for i in 0..grid.n {
            let direct = sv.current()[i] - pair.psi()[i];
            assert!((direct - pair.delta()[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn translation_equivariance() {
        let bf = BirthFunction::nicholson(2.0).unwrap();
        let (grid, _) = comoving_grid(0.9, 1.0, 0.1, -30.0, 30.0).unwrap();
        let n = delay_steps_for(1.0, grid.dx());
        let k = 9;
        let run = |offset: f64| {
            let d = grid.points().into_iter().map(|z| 0.4 * (-(z - offset) * (z - offset)).exp()).collect();
            let p = ComovingProblem::new(bf.clone(), 0.9, grid, HistoryField::constant(1.0, n, d).unwrap()).unwrap();
            solve_comoving(p, &[2.0]).unwrap().slices.remove(0)
        };
        let a = run(-3.0);
        let b = run(-3.0 + k as f64 * grid.dx());
        for i in 0..grid.n - k {
            assert!((b[i + k] - a[i]).abs() < 1e-10, "i={i}");
        }
    }

    #[test]
    fn blow_up_guard() {
        let bf = BirthFunction::linear(50.0).unwrap();
        let mut p = small_problem(bf, 0.0, |z: f64| (-z * z).exp());
        p.guard = 2.0;
        match solve_comoving(p, &[20.0]) {
            Err(Error::BlowUp { last_valid_time }) => assert!(last_valid_time > 0.0 && last_valid_time < 20.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn off_grid_shift_needs_flag() {
        let bf = BirthFunction::nicholson(2.0).unwrap();
        let (grid, _) = comoving_grid(1.0, 1.0, 0.1, -5.0, 5.0).unwrap();
        let n = delay_steps_for(1.0, grid.dx());
        let hist = HistoryField::constant(1.0, n, vec![0.0; grid.n]).unwrap();
        let mut p = ComovingProblem::new(bf, 1.05, grid, hist).unwrap();
        assert!(matches!(ComovingStepper::new(p.clone()), Err(Error::Config(_))));
        p.allow_interpolated_shift = true;
        assert!(ComovingStepper::new(p).is_ok());
    }
}
