//! The scalar complex delay equation `r' = σ r + k r(t-h)` and the
//! exponential bound it obeys with the real root of `λ = Re σ + |k| e^{-λh}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charspec::{solve_scalar_char, ScalarCharProblem};
use crate::error::{ensure_finite, Error, Result};

/// How delayed values inside the history window are reconstructed between
/// samples. Raw samples get `Linear`, which never overshoots the sampled sup;
/// histories sampled from smooth functions can use `Cubic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HistoryInterp {
    #[default]
    Linear,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Classical RK4 with interpolated delayed stage values.
    #[default]
    Rk4,
    /// Integrating-factor scheme: `e^{σ dt}` exact, delayed term integrated
    /// against the interpolant. Stable for any `σ` with `Re σ <= 0`.
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDde {
    pub sigma: Complex64,
    pub k: Complex64,
    pub h: f64,
    pub t_end: f64,
    pub history_interp: HistoryInterp,
    steps_per_delay: usize,
    history: Vec<Complex64>,
}

impl ScalarDde {
    /// `history` holds `r` at `s = -h + j dt`, `j = 0..=h/dt`.
    pub fn new(
        sigma: Complex64,
        k: Complex64,
        h: f64,
        dt: f64,
        t_end: f64,
        history: Vec<Complex64>,
    ) -> Result<Self> {
        for (name, v) in [("h", h), ("dt", dt), ("t_end", t_end)] {
            ensure_finite(name, v)?;
        }
        if !(h > 0.0 && dt > 0.0 && t_end > 0.0) {
            return Err(Error::Config(format!(
                "h, dt, t_end must be positive (h = {h}, dt = {dt}, t_end = {t_end})"
            )));
        }
        let n = (h / dt).round();
        if (n * dt - h).abs() > 1e-9 * h {
            return Err(Error::Config(format!("dt = {dt} does not divide h = {h}")));
        }
        let n = n as usize;
        if n < 16 {
            return Err(Error::Config(format!("h/dt = {n} < 16")));
        }
        if history.len() != n + 1 {
            return Err(Error::Config(format!(
                "history has {} samples, expected {}",
                history.len(),
                n + 1
            )));
        }
        if !(sigma.re.is_finite() && sigma.im.is_finite() && k.re.is_finite() && k.im.is_finite()) {
            return Err(Error::InvalidInput("sigma and k must be finite".into()));
        }
        if history.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput("history must be finite".into()));
        }
        Ok(Self {
            sigma,
            k,
            h,
            t_end,
            history_interp: HistoryInterp::Linear,
            steps_per_delay: n,
            history,
        })
    }

    /// Samples a smooth history function on the grid; uses cubic interpolation.
    pub fn from_fn(
        sigma: Complex64,
        k: Complex64,
        h: f64,
        steps_per_delay: usize,
        t_end: f64,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let dt = h / steps_per_delay as f64;
        let hist = (0..=steps_per_delay).map(|j| f(-h + j as f64 * dt)).collect();
        let mut p = Self::new(sigma, k, h, dt, t_end, hist)?;
        p.history_interp = HistoryInterp::Cubic;
        Ok(p)
    }

    pub fn with_interp(mut self, interp: HistoryInterp) -> Self {
        self.history_interp = interp;
        self
    }

    pub fn steps_per_delay(&self) -> usize {
        self.steps_per_delay
    }

    pub fn dt(&self) -> f64 {
        self.h / self.steps_per_delay as f64
    }

    pub fn history(&self) -> &[Complex64] {
        &self.history
    }

    fn steps(&self) -> usize {
        (self.t_end / self.dt() - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

pub fn integrate_dde(p: &ScalarDde, scheme: Scheme) -> Trajectory {
    let n = p.steps_per_delay;
    let dt = p.dt();
    let steps = p.steps();
    let mut stepper = DelayStepper::new(p.sigma, p.k, dt, n, scheme, p.history_interp, &p.history);
    let mut times = Vec::with_capacity(n + 1 + steps);
    let mut values = Vec::with_capacity(n + 1 + steps);
    for (j, v) in p.history.iter().enumerate() {
        times.push(-p.h + j as f64 * dt);
        values.push(*v);
    }
    // index 0 of `times` is -h; the last history entry is t = 0 exactly
    *times.last_mut().unwrap() = 0.0;
    for i in 1..=steps {
        values.push(stepper.step());
        times.push(i as f64 * dt);
    }
    Trajectory { times, values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalanayReport {
    pub lambda: f64,
    pub sup_history: f64,
    /// `e^{max(0, λ) h}`, the smallest A/S with `|r(s)| <= A e^{λs}` on the
    /// history for every history with sup S.
    pub factor: f64,
    pub worst_ratio: f64,
    pub worst_time: f64,
    pub passed: bool,
    /// Same check with the factor `e^{min(0, -λ) h}`; only differs when λ > 0.
    pub reversed_factor_worst_ratio: f64,
}

pub const HALANAY_TOLERANCE: f64 = 1e-6;

/// Integrates and checks `|r(t)| <= S e^{max(0,λ)h} e^{λt}` at every grid time.
pub fn check_halanay(p: &ScalarDde, scheme: Scheme) -> Result<HalanayReport> {
    let lambda = solve_scalar_char(&ScalarCharProblem::new(p.sigma.re, p.k.norm(), p.h))?;
    let traj = integrate_dde(p, scheme);
    let sup_history = p.history.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let factor = (lambda.max(0.0) * p.h).exp();
    let reversed = ((-lambda).min(0.0) * p.h).exp();
    let mut worst_ratio = 0.0f64;
    let mut worst_time = traj.times[0];
    let mut reversed_worst = 0.0f64;
    for (&t, v) in traj.times.iter().zip(&traj.values) {
        let envelope = sup_history * (lambda * t).exp();
        let r = v.norm();
        let ratio = if envelope > 0.0 { r / (factor * envelope) } else if r > 0.0 { f64::INFINITY } else { 0.0 };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_time = t;
        }
        if envelope > 0.0 {
            reversed_worst = reversed_worst.max(r / (reversed * envelope));
        }
    }
    Ok(HalanayReport {
        lambda,
        sup_history,
        factor,
        worst_ratio,
        worst_time,
        passed: worst_ratio <= 1.0 + HALANAY_TOLERANCE,
        reversed_factor_worst_ratio: reversed_worst,
    })
}

// Lagrange node offsets (in steps) relative to the start of the delayed interval.
const LINEAR: [f64; 2] = [0.0, 1.0];
const CUBIC_CENTERED: [f64; 4] = [-1.0, 0.0, 1.0, 2.0];
const CUBIC_FORWARD: [f64; 4] = [0.0, 1.0, 2.0, 3.0];
const CUBIC_BACKWARD: [f64; 4] = [-2.0, -1.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy)]
enum Stencil {
    Linear,
    Centered,
    Forward,
    Backward,
}

impl Stencil {
    fn nodes(self) -> &'static [f64] {
        match self {
            Stencil::Linear => &LINEAR,
            Stencil::Centered => &CUBIC_CENTERED,
            Stencil::Forward => &CUBIC_FORWARD,
            Stencil::Backward => &CUBIC_BACKWARD,
        }
    }
    fn index(self) -> usize {
        self as usize
    }
}

/// Monomial coefficients of the Lagrange basis polynomial `j` on `nodes`.
fn lagrange_monomials(nodes: &[f64], j: usize) -> [f64; 4] {
    let mut c = [0.0; 4];
    c[0] = 1.0;
    let mut deg = 0;
    let mut denom = 1.0;
    for (i, &x) in nodes.iter().enumerate() {
        if i == j {
            continue;
        }
        denom *= nodes[j] - x;
        // multiply by (θ - x)
        for d in (0..=deg).rev() {
            c[d + 1] += c[d];
            c[d] *= -x;
        }
        deg += 1;
    }
    c.map(|v| v / denom)
}

fn lagrange_at(nodes: &[f64], j: usize, theta: f64) -> f64 {
    let c = lagrange_monomials(nodes, j);
    ((c[3] * theta + c[2]) * theta + c[1]) * theta + c[0]
}

/// `φ_1..φ_4` at `z`, `φ_k(z) = ∫_0^1 e^{(1-θ)z} θ^{k-1}/(k-1)! dθ`.
pub(crate) fn phi_functions(z: Complex64) -> [Complex64; 4] {
    if z.norm() < 1.0 {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (k, o) in out.iter_mut().enumerate() {
            // Σ_j z^j / (j + k + 1)!
            let mut term = Complex64::new(1.0, 0.0);
            for m in 1..=(k + 1) {
                term /= m as f64;
            }
            let mut sum = term;
            for j in 1..30 {
                term *= z / (j + k + 1) as f64;
                sum += term;
            }
            *o = sum;
        }
        out
    } else {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        let mut prev = z.exp();
        let mut fact = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            prev = (prev - 1.0 / fact) / z;
            *o = prev;
        }
        out
    }
}

/// Fixed-step integrator for one delay equation, keeping only the last
/// `N + 4` values in a ring.
#[derive(Debug, Clone)]
pub(crate) struct DelayStepper {
    sigma: Complex64,
    k: Complex64,
    dt: f64,
    n: usize,
    scheme: Scheme,
    interp: HistoryInterp,
    ring: Vec<Complex64>,
    // number of steps taken; the current value has global index `step`
    step: usize,
    ez: Complex64,
    // per stencil: weights for the exponential scheme and midpoint values for RK4
    etd_weights: [[Complex64; 4]; 4],
    mid_values: [[f64; 4]; 4],
}

impl DelayStepper {
    pub(crate) fn new(
        sigma: Complex64,
        k: Complex64,
        dt: f64,
        n: usize,
        scheme: Scheme,
        interp: HistoryInterp,
        history: &[Complex64],
    ) -> Self {
        debug_assert_eq!(history.len(), n + 1);
        let cap = n + 4;
        let mut ring = vec![Complex64::new(0.0, 0.0); cap];
        // global index g in [-n, 0] sits at (g + n) mod cap
        ring[..=n].copy_from_slice(history);
        let z = sigma * dt;
        let phi = phi_functions(z);
        let mut etd_weights = [[Complex64::new(0.0, 0.0); 4]; 4];
        let mut mid_values = [[0.0; 4]; 4];
        for st in [Stencil::Linear, Stencil::Centered, Stencil::Forward, Stencil::Backward] {
            let nodes = st.nodes();
            for j in 0..nodes.len() {
                let c = lagrange_monomials(nodes, j);
                // ∫ e^{z(1-θ)} θ^m dθ = m! φ_{m+1}(z)
                let fact = [1.0, 1.0, 2.0, 6.0];
                etd_weights[st.index()][j] = (0..4).map(|m| phi[m] * (c[m] * fact[m])).sum();
                mid_values[st.index()][j] = lagrange_at(nodes, j, 0.5);
            }
        }
        Self {
            sigma,
            k,
            dt,
            n,
            scheme,
            interp,
            ring,
            step: 0,
            ez: z.exp(),
            etd_weights,
            mid_values,
        }
    }

    fn get(&self, g: i64) -> Complex64 {
        let cap = self.ring.len() as i64;
        self.ring[(g + self.n as i64).rem_euclid(cap) as usize]
    }

    pub(crate) fn current(&self) -> Complex64 {
        self.get(self.step as i64)
    }

    /// Chooses the interpolation stencil for the delayed interval starting at
    /// global index `g0`, never mixing history samples with computed values.
    fn stencil_for(&self, g0: i64) -> Stencil {
        if g0 < 0 {
            match self.interp {
                HistoryInterp::Linear => Stencil::Linear,
                HistoryInterp::Cubic => {
                    if g0 - 1 < -(self.n as i64) {
                        Stencil::Forward
                    } else if g0 + 2 > 0 {
                        Stencil::Backward
                    } else {
                        Stencil::Centered
                    }
                }
            }
        } else {
            // the solution is only piecewise smooth, with breaks at multiples of h
            match g0 as usize % self.n {
                0 => Stencil::Forward,
                r if r == self.n - 1 => Stencil::Backward,
                _ => Stencil::Centered,
            }
        }
    }

    pub(crate) fn step(&mut self) -> Complex64 {
        let g0 = self.step as i64 - self.n as i64;
        let st = self.stencil_for(g0);
        let nodes = st.nodes();
        let y = self.current();
        let next = match self.scheme {
            Scheme::Exponential => {
                let w = &self.etd_weights[st.index()];
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &off) in nodes.iter().enumerate() {
                    acc += w[j] * self.get(g0 + off as i64);
                }
                self.ez * y + self.k * self.dt * acc
            }
            Scheme::Rk4 => {
                let d0 = self.get(g0);
                let d1 = self.get(g0 + 1);
                let mv = &self.mid_values[st.index()];
                let mut dm = Complex64::new(0.0, 0.0);
                for (j, &off) in nodes.iter().enumerate() {
                    dm += self.get(g0 + off as i64) * mv[j];
                }
                let f = |r: Complex64, d: Complex64| self.sigma * r + self.k * d;
                let h = self.dt;
                let k1 = f(y, d0);
                let k2 = f(y + k1 * (0.5 * h), dm);
                let k3 = f(y + k2 * (0.5 * h), dm);
                let k4 = f(y + k3 * h, d1);
                y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
            }
        };
        self.step += 1;
        let cap = self.ring.len() as i64;
        let slot = (self.step as i64 + self.n as i64).rem_euclid(cap) as usize;
        self.ring[slot] = next;
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant(h: f64, n: usize, t_end: f64, sigma: Complex64, k: Complex64) -> ScalarDde {
        ScalarDde::new(sigma, k, h, h / n as f64, t_end, vec![c(1.0, 0.0); n + 1]).unwrap()
    }

    // Method of steps by hand for r' = -r(t-1), r = 1 on [-1, 0].
    fn hand_solution(t: f64) -> f64 {
        if t <= 1.0 {
            1.0 - t
        } else {
            1.0 - t + (t - 1.0).powi(2) / 2.0
        }
    }

    #[test]
    fn undelayed_exponential() {
        for scheme in [Scheme::Rk4, Scheme::Exponential] {
            let p = constant(1.0, 64, 5.0, c(-1.0, 0.0), c(0.0, 0.0));
            let tr = integrate_dde(&p, scheme);
            let err = tr
                .times
                .iter()
                .zip(&tr.values)
                .filter(|(t, _)| **t >= 0.0)
                .map(|(t, v)| (v - c((-t).exp(), 0.0)).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "{scheme:?}: {err}");
        }
    }

    #[test]
    fn method_of_steps_by_hand() {
        for scheme in [Scheme::Rk4, Scheme::Exponential] {
            let p = constant(1.0, 32, 2.0, c(0.0, 0.0), c(-1.0, 0.0));
            let tr = integrate_dde(&p, scheme);
            for (t, v) in tr.times.iter().zip(&tr.values).filter(|(t, _)| **t >= 0.0) {
                assert!((v.re - hand_solution(*t)).abs() < 1e-13, "{scheme:?} t={t}");
                assert_eq!(v.im, 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_step() {
        let h = vec![c(1.0, 0.0); 17];
        assert!(matches!(ScalarDde::new(c(0.0, 0.0), c(0.0, 0.0), 1.0, 0.07, 1.0, h.clone()), Err(Error::Config(_))));
        assert!(matches!(ScalarDde::new(c(0.0, 0.0), c(0.0, 0.0), 1.0, 1.0 / 8.0, 1.0, h), Err(Error::Config(_))));
    }

    #[test]
    fn halanay_examples() {
        let p = constant(1.0, 32, 5.0, c(-1.0, 0.0), c(0.0, 0.0));
        let r = check_halanay(&p, Scheme::Rk4).unwrap();
        assert_eq!(r.lambda, -1.0);
        assert!(r.passed && r.worst_ratio > 1.0 - 1e-9);

        let sigma = c(-1.0, 5.0);
        let k = Complex64::from_polar(1.0, PI / 3.0);
        let p = ScalarDde::from_fn(sigma, k, 0.5, 64, 10.0, |s| c((3.0 * s).cos(), s)).unwrap();
        let r = check_halanay(&p, Scheme::Rk4).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn reversed_factor_fails_for_growing_root() {
        // r = e^t with constant history: the factor must be e^{+λh}, not e^{-λh}
        let p = constant(1.0, 64, 3.0, c(1.0, 0.0), c(0.0, 0.0));
        let r = check_halanay(&p, Scheme::Exponential).unwrap();
        assert!(r.passed);
        assert!(r.reversed_factor_worst_ratio > 2.0);
    }

    #[test]
    fn random_histories_pass() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let knots: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hist = (0..=64)
                .map(|j| {
                    let x = j as f64 / 64.0 * 5.0;
                    let i = (x as usize).min(4);
                    c(knots[i] + (knots[i + 1] - knots[i]) * (x - i as f64), 0.0)
                })
                .collect();
            let p = ScalarDde::new(c(-2.0, 0.0), c(1.0, 0.0), 1.0, 1.0 / 64.0, 10.0, hist).unwrap();
            assert!(check_halanay(&p, Scheme::Rk4).unwrap().passed);
        }
    }

    fn max_error(n: usize, scheme: Scheme) -> f64 {
        let sigma = c(-0.7, 2.0);
        let k = c(0.4, -0.9);
        let hist = |s: f64| c(s.cos(), (2.0 * s).sin());
        let run = |n: usize| {
            let p = ScalarDde::from_fn(sigma, k, 1.0, n, 4.0, hist).unwrap();
            integrate_dde(&p, scheme)
        };
        let coarse = run(n);
        let fine = run(8 * n);
        coarse
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - fine.values[8 * i]).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn fourth_order_convergence() {
        for scheme in [Scheme::Rk4, Scheme::Exponential] {
            let ratio = max_error(16, scheme) / max_error(32, scheme);
            assert!(ratio > 12.0 && ratio < 20.0, "{scheme:?}: {ratio}");
        }
    }

    #[test]
    fn phi_series_matches_recurrence_at_switch() {
        let z = c(0.999, 0.03);
        let a = phi_functions(z);
        let b = phi_functions(z * 1.002);
        for k in 0..4 {
            assert!((a[k] - b[k]).norm() < 1e-2);
        }
        let z = c(-1.2, 0.0);
        let phi1 = ((z.exp()) - 1.0) / z;
        assert!((phi_functions(z)[0] - phi1).norm() < 1e-15);
    }

    #[test]
    fn exponential_scheme_handles_stiff_modes() {
        let p = constant(1.0, 16, 5.0, c(-2500.0, 0.0), c(1.0, 0.0));
        let tr = integrate_dde(&p, Scheme::Exponential);
        let last = tr.values.last().unwrap().norm();
        assert!(last.is_finite() && last < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn linear_in_history(ar in -3.0..3.0f64, ai in -3.0..3.0f64, sr in -3.0..1.0f64, ki in -2.0..2.0f64) {
            let f = |s: f64| c(1.0 + s, s * s);
            let p1 = ScalarDde::from_fn(c(sr, 1.0), c(0.5, ki), 1.0, 32, 3.0, f).unwrap();
            let a = c(ar, ai);
            let p2 = ScalarDde::from_fn(c(sr, 1.0), c(0.5, ki), 1.0, 32, 3.0, |s| a * f(s)).unwrap();
            for scheme in [Scheme::Rk4, Scheme::Exponential] {
                let t1 = integrate_dde(&p1, scheme);
                let t2 = integrate_dde(&p2, scheme);
                for (u, v) in t1.values.iter().zip(&t2.values) {
                    prop_assert!((a * u - v).norm() <= 1e-12 * (1.0 + v.norm()));
                }
            }
        }
    }
}
