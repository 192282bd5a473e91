//! Real roots of the scalar characteristic equations and the spectral
//! quantities built from them.
//!
//! Everything here reduces to one of two shapes: `λ = a + b e^{-hλ}` with
//! `b >= 0` (strictly increasing in λ, so one real root), or the concave speed
//! function `E_c(λ) = -λ² + cλ + 1 - L e^{-λch}`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::numeric::{bisect, scan_max};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCharProblem {
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

impl ScalarCharProblem {
    pub fn new(a: f64, b: f64, h: f64) -> Self {
        Self { a, b, h }
    }

    pub fn residual(&self, lambda: f64) -> f64 {
        lambda - self.a - self.b * (-self.h * lambda).exp()
    }
}

/// The unique real root of `λ = a + b e^{-hλ}`.
///
/// Bisection on `[a, max(a + b, 0)]` followed by a few guarded Newton steps.
/// The sign of the root is pinned to the sign of `a + b` so that `λ <= 0` iff
/// `-a >= b` holds exactly, not just up to rounding.
pub fn solve_scalar_char(prob: &ScalarCharProblem) -> Result<f64> {
    let ScalarCharProblem { a, b, h } = *prob;
    ensure_finite("a", a)?;
    ensure_finite("b", b)?;
    ensure_finite("h", h)?;
    if b < 0.0 {
        return Err(Error::InvalidInput(format!("b = {b} must be >= 0")));
    }
    if h <= 0.0 {
        return Err(Error::InvalidInput(format!("h = {h} must be > 0")));
    }
    if b == 0.0 {
        return Ok(a);
    }
    if -a == b {
        return Ok(0.0);
    }
    let positive = a + b > 0.0;
    let (lo, hi) = if positive { (a.max(0.0), a + b) } else { (a, 0.0) };
    let f = |l: f64| prob.residual(l);
    let mut lam = bisect(f, lo, hi, 0.0, true);

    let mut fl = f(lam);
    for _ in 0..5 {
        if fl == 0.0 {
            break;
        }
        let df = 1.0 + h * b * (-h * lam).exp();
        let next = lam - fl / df;
        if !(next >= lo && next <= hi) {
            break;
        }
        let fn_ = f(next);
        if fn_.abs() >= fl.abs() {
            break;
        }
        lam = next;
        fl = fn_;
    }

    // Rounding can land a tiny root on the wrong side of zero.
    let wrong_sign = if positive { lam <= 0.0 } else { lam >= 0.0 };
    if wrong_sign {
        lam = (a + b) / (1.0 + h * b);
    }
    Ok(lam)
}

/// Coefficients of `u_t = u_xx + m u_x + p u + q u(t-h, x+d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCoefficients {
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub d: f64,
    pub h: f64,
}

impl LinearCoefficients {
    pub fn new(m: f64, p: f64, q: f64, d: f64, h: f64) -> Result<Self> {
        for (name, v) in [("m", m), ("p", p), ("q", q), ("d", d), ("h", h)] {
            ensure_finite(name, v)?;
        }
        if h <= 0.0 {
            return Err(Error::InvalidInput(format!("h = {h} must be > 0")));
        }
        Ok(Self { m, p, q, d, h })
    }

    /// `-p >= q >= 0`, the standing hypothesis of the decay estimate.
    pub fn require_decay_hypothesis(&self) -> Result<()> {
        if self.q < 0.0 {
            return Err(Error::Domain(format!("q >= 0 fails (q = {})", self.q)));
        }
        if -self.p < self.q {
            return Err(Error::Domain(format!(
                "-p >= q fails (p = {}, q = {})",
                self.p, self.q
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEnvelope {
    pub gamma: f64,
    pub eps_h: f64,
    pub h: f64,
}

impl SpectralEnvelope {
    /// `-(1/h) log(1 + h ε_h ζ²)`; tends to `-ε_h ζ²` as h → 0.
    pub fn alpha_h(&self, zeta: f64) -> f64 {
        let z2 = zeta * zeta;
        if self.h == 0.0 {
            -self.eps_h * z2
        } else {
            -(self.h * self.eps_h * z2).ln_1p() / self.h
        }
    }

    pub fn lower(&self, zeta: f64) -> f64 {
        -self.eps_h * zeta * zeta + self.gamma
    }

    pub fn upper(&self, zeta: f64) -> f64 {
        self.alpha_h(zeta) + self.gamma
    }
}

pub fn gamma_root(coeffs: &LinearCoefficients) -> Result<SpectralEnvelope> {
    coeffs.require_decay_hypothesis()?;
    let LinearCoefficients { p, q, h, .. } = *coeffs;
    let gamma = solve_scalar_char(&ScalarCharProblem::new(p, q, h))?;
    let eps_h = 1.0 / (1.0 + h * (gamma - p));
    Ok(SpectralEnvelope { gamma, eps_h, h })
}

/// Real root of `λ = -ζ² + p + q e^{-hλ}`.
pub fn lambda_of_zeta(zeta: f64, coeffs: &LinearCoefficients) -> Result<f64> {
    ensure_finite("zeta", zeta)?;
    if coeffs.q < 0.0 {
        return Err(Error::Domain(format!("q >= 0 fails (q = {})", coeffs.q)));
    }
    solve_scalar_char(&ScalarCharProblem::new(
        -zeta * zeta + coeffs.p,
        coeffs.q,
        coeffs.h,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussSample {
    pub zeta: f64,
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
}

impl GaussSample {
    pub fn lower_margin(&self) -> f64 {
        self.lambda - self.lower
    }
    pub fn upper_margin(&self) -> f64 {
        self.upper - self.lambda
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussBoundReport {
    pub envelope: SpectralEnvelope,
    pub samples: Vec<GaussSample>,
    /// ζ values where either bound fails by more than rounding.
    pub violations: Vec<f64>,
    pub min_lower_margin: f64,
    pub min_upper_margin: f64,
}

impl GaussBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `-ε_h ζ² + γ <= λ(ζ) <= α_h(ζ) + γ` at each ζ.
pub fn check_gauss_bounds(coeffs: &LinearCoefficients, zetas: &[f64]) -> Result<GaussBoundReport> {
    let envelope = gamma_root(coeffs)?;
    let mut samples = Vec::with_capacity(zetas.len());
    let mut violations = Vec::new();
    let mut min_lower_margin = f64::INFINITY;
    let mut min_upper_margin = f64::INFINITY;
    for &zeta in zetas {
        let lambda = lambda_of_zeta(zeta, coeffs)?;
        let s = GaussSample {
            zeta,
            lambda,
            lower: envelope.lower(zeta),
            upper: envelope.upper(zeta),
        };
        let slack = 1e-14 * (1.0 + lambda.abs());
        if s.lower_margin() < -slack || s.upper_margin() < -slack {
            violations.push(zeta);
        }
        min_lower_margin = min_lower_margin.min(s.lower_margin());
        min_upper_margin = min_upper_margin.min(s.upper_margin());
        samples.push(s);
    }
    Ok(GaussBoundReport {
        envelope,
        samples,
        violations,
        min_lower_margin,
        min_upper_margin,
    })
}

/// `λ(ζ) / log ζ`, which tends to `-2/h`.
pub fn log_asymptotics_ratio(coeffs: &LinearCoefficients, zeta: f64) -> Result<f64> {
    if coeffs.q <= 0.0 {
        return Err(Error::Domain(format!("q > 0 fails (q = {})", coeffs.q)));
    }
    if !(zeta > 1.0) {
        return Err(Error::Domain(format!("zeta > 1 fails (zeta = {zeta})")));
    }
    Ok(lambda_of_zeta(zeta, coeffs)? / zeta.ln())
}

/// Real root of `q e^{-σh} = σ + m²/4 - p`.
pub fn sigma_root(coeffs: &LinearCoefficients) -> Result<f64> {
    if coeffs.q < 0.0 {
        return Err(Error::Domain(format!("q >= 0 fails (q = {})", coeffs.q)));
    }
    solve_scalar_char(&ScalarCharProblem::new(
        coeffs.p - 0.25 * coeffs.m * coeffs.m,
        coeffs.q,
        coeffs.h,
    ))
}

/// `E_c(λ) = -λ² + cλ + 1 - L e^{-λch}`.
pub fn speed_function(c: f64, l: f64, h: f64, lambda: f64) -> f64 {
    -lambda * lambda + c * lambda + 1.0 - l * (-lambda * c * h).exp()
}

fn speed_function_slope(c: f64, l: f64, h: f64, lambda: f64) -> f64 {
    -2.0 * lambda + c + l * c * h * (-lambda * c * h).exp()
}

/// Maximizer of the concave `E_c` over λ >= 0, by bisection on its decreasing
/// derivative. `E_c'(0) >= 0` and `E_c'(c(1 + Lh)/2) <= 0` bracket it.
pub fn speed_argmax(c: f64, l: f64, h: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    bisect(
        |lam| -speed_function_slope(c, l, h, lam),
        0.0,
        0.5 * c * (1.0 + l * h),
        0.0,
        true,
    )
}

fn validate_speed_inputs(l: f64, h: f64) -> Result<()> {
    ensure_finite("L", l)?;
    ensure_finite("h", h)?;
    if l <= 1.0 {
        return Err(Error::Domain(format!("L > 1 fails (L = {l})")));
    }
    if h < 0.0 {
        return Err(Error::Domain(format!("h >= 0 fails (h = {h})")));
    }
    Ok(())
}

/// The minimal speed `c(L)`: the unique c with `max_λ E_c(λ) = 0`.
pub fn speed_threshold(l: f64, h: f64) -> Result<f64> {
    validate_speed_inputs(l, h)?;
    let peak = |c: f64| speed_function(c, l, h, speed_argmax(c, l, h));
    let hi = 2.0 * (l - 1.0).sqrt() + l;
    Ok(bisect(peak, 0.0, hi, 0.0, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub lambda1: f64,
    pub lambda2: f64,
    pub double_root: bool,
}

/// Both positive roots of `E_c`, bracketed on either side of its maximizer.
pub fn lambda_interval(c: f64, l: f64, h: f64) -> Result<RootPair> {
    validate_speed_inputs(l, h)?;
    ensure_finite("c", c)?;
    if c < 0.0 {
        return Err(Error::Domain(format!("c >= 0 fails (c = {c})")));
    }
    let top = speed_argmax(c, l, h);
    let peak = speed_function(c, l, h, top);
    if peak < -1e-12 {
        return Err(Error::NoRealRoot(format!(
            "c = {c} is below c(L) for L = {l}, h = {h}; max E_c = {peak:e}"
        )));
    }
    if peak <= 0.0 {
        return Ok(RootPair {
            lambda1: top,
            lambda2: top,
            double_root: true,
        });
    }
    let e = |lam: f64| speed_function(c, l, h, lam);
    let lambda1 = bisect(e, 0.0, top, 0.0, true);
    let right = 0.5 * (c + (c * c + 4.0).sqrt());
    let lambda2 = bisect(e, top, right, 0.0, false);
    Ok(RootPair {
        lambda1,
        lambda2,
        double_root: lambda2 - lambda1 < 1e-6,
    })
}

/// Which admissible weight exponent to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    Lower,
    Upper,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedData {
    pub l: f64,
    pub h: f64,
    pub c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_c: f64,
}

impl SpeedData {
    pub fn new(c: f64, l: f64, h: f64, choice: LambdaChoice) -> Result<Self> {
        let roots = lambda_interval(c, l, h)?;
        let lambda_c = if roots.double_root {
            0.5 * (roots.lambda1 + roots.lambda2)
        } else {
            match choice {
                LambdaChoice::Lower => roots.lambda1,
                LambdaChoice::Upper => roots.lambda2,
                LambdaChoice::Value(v) => {
                    if !(v >= roots.lambda1 && v <= roots.lambda2) {
                        return Err(Error::Domain(format!(
                            "lambda_c = {v} outside [{}, {}]",
                            roots.lambda1, roots.lambda2
                        )));
                    }
                    v
                }
            }
        };
        Ok(Self {
            l,
            h,
            c,
            lambda1: roots.lambda1,
            lambda2: roots.lambda2,
            lambda_c,
        })
    }

    pub fn speed_function(&self, lambda: f64) -> f64 {
        speed_function(self.c, self.l, self.h, lambda)
    }

    /// Weight `ξ_c(z) = e^{-λ_c z}`.
    pub fn xi(&self, z: f64) -> f64 {
        (-self.lambda_c * z).exp()
    }
}

/// Largest γ₀ in `[0, 1]` with
/// `-λ_c² + cλ_c + 1 >= γ₀ + L_g e^{γ₀h} e^{-λ_c ch}` and `L_I <= e^{-γ₀h}(1 - γ₀)`.
pub fn gamma0_solve(sd: &SpeedData, l_g: f64, l_i: f64) -> Result<f64> {
    ensure_finite("L_g", l_g)?;
    ensure_finite("L_I", l_i)?;
    let SpeedData { c, h, lambda_c: lam, .. } = *sd;
    let base = -lam * lam + c * lam + 1.0;
    let decay = (-lam * c * h).exp();
    let slack1 = |g: f64| base - g - l_g * (g * h).exp() * decay;
    let slack2 = |g: f64| (-g * h).exp() * (1.0 - g) - l_i;

    let s1 = slack1(0.0);
    if s1 < -1e-12 {
        return Err(Error::Infeasible(format!(
            "E_c(lambda_c) = {s1:e} < 0 with L_g = {l_g}"
        )));
    }
    if l_i > 1.0 {
        return Err(Error::Infeasible(format!("L_I = {l_i} > 1")));
    }
    if s1 <= 0.0 || l_i == 1.0 {
        return Ok(0.0);
    }
    let r1 = if slack1(1.0) >= 0.0 {
        1.0
    } else {
        bisect(|g| -slack1(g), 0.0, 1.0, 0.0, true)
    };
    let r2 = bisect(|g| -slack2(g), 0.0, 1.0, 0.0, true);
    Ok(r1.min(r2))
}

/// The weight exponent in `[λ₁, λ₂]` that maximizes γ₀, with that γ₀.
pub fn best_gamma0(c: f64, l_g: f64, l_i: f64, h: f64) -> Result<(f64, f64)> {
    let roots = lambda_interval(c, l_g, h)?;
    let g0 = |lam: f64| {
        let sd = SpeedData {
            l: l_g,
            h,
            c,
            lambda1: roots.lambda1,
            lambda2: roots.lambda2,
            lambda_c: lam,
        };
        gamma0_solve(&sd, l_g, l_i).unwrap_or(0.0)
    };
    if roots.double_root {
        let lam = 0.5 * (roots.lambda1 + roots.lambda2);
        return Ok((lam, g0(lam)));
    }
    let (lam, val) = scan_max(g0, roots.lambda1, roots.lambda2, 201);
    Ok((lam, val))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayAmplitude {
    /// `(C/2) sqrt(h (1 + h(γ - p)))`, as the estimate's derivation produces.
    pub proof: f64,
    /// `(C/2) sqrt(1 + h(γ - p))`, as usually quoted.
    pub stated: f64,
}

pub fn decay_amplitude(coeffs: &LinearCoefficients, c_u0: f64) -> Result<DecayAmplitude> {
    ensure_finite("C_u0", c_u0)?;
    if c_u0 < 0.0 {
        return Err(Error::Domain(format!("C_u0 >= 0 fails (C_u0 = {c_u0})")));
    }
    let env = gamma_root(coeffs)?;
    let inner = 1.0 + coeffs.h * (env.gamma - coeffs.p);
    Ok(DecayAmplitude {
        proof: 0.5 * c_u0 * (coeffs.h * inner).sqrt(),
        stated: 0.5 * c_u0 * inner.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Plain bisection with the textbook bracket, run to exhaustion.
    fn oracle_root(a: f64, b: f64, h: f64) -> f64 {
        let f = |l: f64| l - a - b * (-h * l).exp();
        let (mut lo, mut hi) = (a, (a + b).max(0.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn trivial_and_critical_roots() {
        assert_eq!(solve_scalar_char(&ScalarCharProblem::new(-1.0, 0.0, 1.0)).unwrap(), -1.0);
        for h in [0.1, 1.0, 7.0] {
            assert_eq!(solve_scalar_char(&ScalarCharProblem::new(-1.0, 1.0, h)).unwrap(), 0.0);
        }
    }

    #[test]
    fn root_matches_bisection_oracle() {
        let lam = solve_scalar_char(&ScalarCharProblem::new(-2.0, 1.0, 1.0)).unwrap();
        assert!((lam - oracle_root(-2.0, 1.0, 1.0)).abs() < 1e-12);
        assert!((lam + 0.44285).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_scalar_char(&ScalarCharProblem::new(f64::NAN, 1.0, 1.0)).is_err());
        assert!(solve_scalar_char(&ScalarCharProblem::new(0.0, -1.0, 1.0)).is_err());
        assert!(solve_scalar_char(&ScalarCharProblem::new(0.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn gamma_root_examples() {
        let env = gamma_root(&LinearCoefficients::new(0.0, 0.0, 0.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!((env.gamma, env.eps_h), (0.0, 1.0));
        let env = gamma_root(&LinearCoefficients::new(0.0, -1.0, 1.0, 0.0, 2.0).unwrap()).unwrap();
        assert_eq!(env.gamma, 0.0);
        let env = gamma_root(&LinearCoefficients::new(0.0, -2.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
        let g = oracle_root(-2.0, 1.0, 1.0);
        assert!((env.eps_h - 1.0 / (1.0 + (g + 2.0))).abs() < 1e-12);
        assert!((env.eps_h - 0.39106).abs() < 1e-5);
    }

    #[test]
    fn gamma_root_names_failed_inequality() {
        let err = gamma_root(&LinearCoefficients::new(0.0, -1.0, 2.0, 0.0, 1.0).unwrap()).unwrap_err();
        assert!(err.to_string().contains("-p >= q"));
        let err = gamma_root(&LinearCoefficients::new(0.0, -1.0, -0.5, 0.0, 1.0).unwrap()).unwrap_err();
        assert!(err.to_string().contains("q >= 0"));
    }

    #[test]
    fn lambda_of_zeta_examples() {
        let c = LinearCoefficients::new(0.0, -2.0, 1.0, 0.0, 1.0).unwrap();
        let env = gamma_root(&c).unwrap();
        assert_eq!(lambda_of_zeta(0.0, &c).unwrap(), env.gamma);
        let c0 = LinearCoefficients::new(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(lambda_of_zeta(1.0, &c0).unwrap(), -1.0);
        let l2 = lambda_of_zeta(2.0, &c).unwrap();
        assert!((l2 - oracle_root(-6.0, 1.0, 1.0)).abs() < 1e-12);
        assert!(l2 >= env.lower(2.0) && l2 <= env.upper(2.0));
    }

    #[test]
    fn gauss_bounds_examples() {
        let c = LinearCoefficients::new(0.0, -2.0, 1.0, 0.0, 1.0).unwrap();
        let r = check_gauss_bounds(&c, &[0.0]).unwrap();
        assert_eq!(r.samples[0].lower_margin(), 0.0);
        assert_eq!(r.samples[0].upper_margin(), 0.0);
        let zetas: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        assert!(check_gauss_bounds(&c, &zetas).unwrap().passed());

        let c = LinearCoefficients::new(0.0, -1.0, 0.0, 0.0, 1.0).unwrap();
        let r = check_gauss_bounds(&c, &[0.5, 1.0, 3.0]).unwrap();
        assert_eq!(r.envelope.eps_h, 1.0);
        for s in &r.samples {
            assert_eq!(s.lambda, -s.zeta * s.zeta - 1.0);
            assert_eq!(s.lower_margin(), 0.0);
        }
    }

    #[test]
    fn log_ratio_examples() {
        for (h, target) in [(1.0, -2.0), (2.0, -1.0)] {
            let c = LinearCoefficients::new(0.0, -2.0, 1.0, 0.0, h).unwrap();
            let r = log_asymptotics_ratio(&c, 1e4).unwrap();
            assert!(((r - target) / target).abs() < 0.03);
            // large-ζ expansion with log q = 0
            let expect = -(2.0 / h) * 1e4f64.ln();
            assert!((r * 1e4f64.ln() - expect).abs() < 1e-6);
        }
        let c = LinearCoefficients::new(0.0, -2.0, 1.0, 0.0, 1.0).unwrap();
        assert!(log_asymptotics_ratio(&c, 1.0).is_err());
        let r: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&z| (log_asymptotics_ratio(&c, z).unwrap() + 2.0).abs())
            .collect();
        assert!(r[0] > r[1] && r[1] > r[2]);
    }

    #[test]
    fn sigma_root_examples() {
        let s = |m, p, q| sigma_root(&LinearCoefficients::new(m, p, q, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(s(0.0, 0.0, 0.0), 0.0);
        assert_eq!(s(2.0, 1.0, 0.0), 0.0);
        assert!((s(0.0, -2.0, 1.0) - oracle_root(-2.0, 1.0, 1.0)).abs() < 1e-12);
    }

    // 2-d grid scan: smallest c on a fine grid whose E_c has a nonnegative sample.
    fn grid_threshold(l: f64, h: f64) -> f64 {
        let feasible = |c: f64| (0..=5000).any(|i| speed_function(c, l, h, i as f64 * 1e-3) >= 0.0);
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid
            } else {
                lo = mid
            }
        }
        hi
    }

    #[test]
    fn speed_threshold_examples() {
        assert!((speed_threshold(2.0, 0.0).unwrap() - 2.0).abs() < 1e-10);
        for l in [1.5, 3.0, 10.0] {
            assert!((speed_threshold(l, 0.0).unwrap() - 2.0 * (l - 1.0).sqrt()).abs() < 1e-10);
        }
        assert!(speed_threshold(1.0 + 1e-8, 1.0).unwrap() < 1e-3);
        let c = speed_threshold(2.0, 1.0).unwrap();
        // the grid scan is limited by its λ spacing, not by the outer bisection
        assert!((c - grid_threshold(2.0, 1.0)).abs() < 1e-6);
        assert!((c - 0.8325546111576978).abs() < 1e-10);
        assert!(speed_threshold(1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_interval_examples() {
        let r = lambda_interval(2.0, 2.0, 0.0).unwrap();
        assert!(r.double_root && (r.lambda1 - 1.0).abs() < 1e-7);
        let r = lambda_interval(3.0, 2.0, 0.0).unwrap();
        assert!((r.lambda1 - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((r.lambda2 - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        let r = lambda_interval(3.0, 2.0, 1.0).unwrap();
        for lam in [r.lambda1, r.lambda2] {
            assert!(speed_function(3.0, 2.0, 1.0, lam).abs() < 1e-12);
        }
        assert!((r.lambda1 - 0.1272169614).abs() < 1e-9);
        assert!((r.lambda2 - 3.3027480341).abs() < 1e-9);
    }

    #[test]
    fn threshold_consistency() {
        for (l, h) in [(2.0, 1.0), (2.0, 0.5), (1.5f64.exp(), 0.5)] {
            let c0 = speed_threshold(l, h).unwrap();
            let mut prev = f64::INFINITY;
            for dc in [1e-1, 1e-3, 1e-5, 1e-7] {
                let r = lambda_interval(c0 + dc, l, h).unwrap();
                let gap = r.lambda2 - r.lambda1;
                assert!(gap < prev);
                prev = gap;
            }
            assert!(prev < 1e-2);
            assert!(matches!(lambda_interval(c0 - 1e-6, l, h), Err(Error::NoRealRoot(_))));
        }
    }

    #[test]
    fn gamma0_examples() {
        let c = speed_threshold(2.0, 1.0).unwrap() + 0.5;
        let sd = SpeedData::new(c, 2.0, 1.0, LambdaChoice::Lower).unwrap();
        assert_eq!(gamma0_solve(&sd, 2.0, 0.3).unwrap(), 0.0);
        let sd = SpeedData::new(c, 2.0, 1.0, LambdaChoice::Value(1.0)).unwrap();
        assert_eq!(gamma0_solve(&sd, 2.0, 1.0).unwrap(), 0.0);
        assert!(matches!(gamma0_solve(&sd, 2.0, 1.5), Err(Error::Infeasible(_))));

        // h = 0: the first constraint reads γ₀ <= E_c(λ_c); dense scan oracle.
        let sd = SpeedData::new(3.0, 2.0, 0.0, LambdaChoice::Value(0.5)).unwrap();
        let s = sd.speed_function(0.5);
        let g0 = gamma0_solve(&sd, 2.0, 0.0).unwrap();
        let mut scan = 0.0;
        for i in 0..1_000_000 {
            let g = i as f64 * 1e-6;
            if s - g >= 0.0 && 1.0 - g >= 0.0 {
                scan = g;
            }
        }
        assert!((g0 - scan).abs() <= 1e-6);
        assert!((g0 - s.min(1.0)).abs() < 1e-12);
    }

    #[test]
    fn gamma0_is_feasible_and_maximal() {
        let c = speed_threshold(2.0, 0.5).unwrap() + 1.0;
        let (lam, g0) = best_gamma0(c, 2.0, 0.3069, 0.5).unwrap();
        assert!(g0 > 0.0);
        let sd = SpeedData::new(c, 2.0, 0.5, LambdaChoice::Value(lam)).unwrap();
        let slack1 = |g: f64| -lam * lam + c * lam + 1.0 - g - 2.0 * (g * 0.5).exp() * (-lam * c * 0.5).exp();
        let slack2 = |g: f64| (-g * 0.5).exp() * (1.0 - g) - 0.3069;
        assert!(slack1(g0) >= -1e-12 && slack2(g0) >= -1e-12);
        assert!(slack1(g0 + 1e-9) < 0.0 || slack2(g0 + 1e-9) < 0.0);
        assert_eq!(gamma0_solve(&sd, 2.0, 0.3069).unwrap(), g0);
    }

    #[test]
    fn decay_amplitude_examples() {
        let c = LinearCoefficients::new(0.0, -2.0, 1.0, 0.0, 1.0).unwrap();
        let a = decay_amplitude(&c, 1.0).unwrap();
        let g = oracle_root(-2.0, 1.0, 1.0);
        assert_eq!(a.proof, a.stated);
        assert!((a.proof - 0.5 * (1.0 + g + 2.0f64).sqrt()).abs() < 1e-12);
        let c = LinearCoefficients::new(0.0, -1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(decay_amplitude(&c, 2.0).unwrap().proof, 1.0);
        let c = LinearCoefficients::new(0.0, -2.0, 1.0, 0.0, 4.0).unwrap();
        let a = decay_amplitude(&c, 1.0).unwrap();
        assert!((a.proof / a.stated - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_h_alpha_tends_to_quadratic() {
        for h in [1e-2, 1e-4] {
            let c = LinearCoefficients::new(0.0, -1.0, 0.0, 0.0, h).unwrap();
            let env = gamma_root(&c).unwrap();
            for zeta in [0.5, 1.0, 2.0] {
                let gap = (env.alpha_h(zeta) + env.eps_h * zeta * zeta).abs();
                assert!(gap <= 0.5 * h * zeta.powi(4) * 1.0001);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn root_residual_and_monotonicity(a in -10.0..10.0f64, b in 0.0..10.0f64, h in 0.01..5.0f64) {
            let lam = solve_scalar_char(&ScalarCharProblem::new(a, b, h)).unwrap();
            let f = |l: f64| l - a - b * (-h * l).exp();
            prop_assert!(f(lam).abs() <= 1e-12 * (1.0 + lam.abs()));
            let d = 1e-6 * (1.0 + lam.abs());
            prop_assert!(f(lam - d) < f(lam + d));
            prop_assert_eq!(lam <= 0.0, -a >= b);
        }

        #[test]
        fn lambda_of_zeta_nonincreasing(z1 in 0.0..20.0f64, dz in 0.0..5.0f64, q in 0.0..3.0f64, h in 0.1..3.0f64) {
            let c = LinearCoefficients::new(0.0, -q - 0.5, q, 0.0, h).unwrap();
            prop_assert!(lambda_of_zeta(z1 + dz, &c).unwrap() <= lambda_of_zeta(z1, &c).unwrap());
            prop_assert_eq!(lambda_of_zeta(-z1, &c).unwrap(), lambda_of_zeta(z1, &c).unwrap());
        }

        #[test]
        fn sandwich_holds(q in 0.0..3.0f64, extra in 0.0..3.0f64, h in 0.05..4.0f64, zeta in 0.0..50.0f64) {
            let c = LinearCoefficients::new(0.0, -q - extra, q, 0.0, h).unwrap();
            prop_assert!(check_gauss_bounds(&c, &[zeta]).unwrap().passed());
        }

        #[test]
        fn interval_roots_straddle_peak(l in 1.05..8.0f64, h in 0.0..2.0f64, dc in 1e-3..3.0f64) {
            let c = speed_threshold(l, h).unwrap() + dc;
            let r = lambda_interval(c, l, h).unwrap();
            prop_assert!(r.lambda1 > 0.0 && r.lambda1 <= r.lambda2);
            prop_assert!(speed_function(c, l, h, r.lambda1).abs() <= 1e-12);
            prop_assert!(speed_function(c, l, h, r.lambda2).abs() <= 1e-12 * (1.0 + r.lambda2 * r.lambda2));
            prop_assert!(speed_function(c, l, h, 0.5 * (r.lambda1 + r.lambda2)) > 0.0);
        }
    }
}
