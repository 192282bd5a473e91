//! Birth functions `g` and the constants the stability results consume.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::numeric::{bisect, scan_max};

/// Sample count for every sup/inf constant computed by scanning.
pub const SCAN_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BirthFunction {
    /// `p u e^{-u}`
    Nicholson { p: f64 },
    /// `a bⁿ u / (bⁿ + uⁿ)`
    MackeyGlass { a: f64, b: f64, n: f64 },
    /// Nondecreasing piecewise-linear interpolant through `(u, g)` knots,
    /// starting at the origin, extended with the last slope.
    CustomMonotone { knots: Vec<(f64, f64)> },
    /// `inner(min(u, peak))`: the running maximum of a unimodal `inner`.
    Envelope { inner: Box<BirthFunction>, peak: f64 },
}

impl BirthFunction {
    pub fn nicholson(p: f64) -> Result<Self> {
        ensure_finite("p", p)?;
        if p <= 0.0 {
            return Err(Error::Model(format!("Nicholson p = {p} must be positive")));
        }
        Ok(Self::Nicholson { p })
    }

    /// Rescales `u_t = u_xx - δu + p u(t-h) e^{-u(t-h)}` to unit decay:
    /// returns `g` with `p/δ`, and the factors `(time, space)` such that
    /// `t' = δ t`, `x' = √δ x`, `h' = δ h`.
    pub fn nicholson_raw(delta: f64, p: f64) -> Result<(Self, f64, f64)> {
        ensure_finite("delta", delta)?;
        if delta <= 0.0 {
            return Err(Error::Model(format!("decay delta = {delta} must be positive")));
        }
        Ok((Self::nicholson(p / delta)?, delta, delta.sqrt()))
    }

    pub fn mackey_glass(a: f64, b: f64, n: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("n", n)] {
            ensure_finite(name, v)?;
        }
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Model(format!("Mackey-Glass needs a, b > 0 (a = {a}, b = {b})")));
        }
        if n < 1.0 {
            return Err(Error::Model(format!("Mackey-Glass exponent n = {n} must be >= 1")));
        }
        Ok(Self::MackeyGlass { a, b, n })
    }

    /// Rescales decay `d` to 1: `a` becomes `a/d`, factors as in `nicholson_raw`.
    pub fn mackey_glass_raw(d: f64, a: f64, b: f64, n: f64) -> Result<(Self, f64, f64)> {
        ensure_finite("d", d)?;
        if d <= 0.0 {
            return Err(Error::Model(format!("decay d = {d} must be positive")));
        }
        Ok((Self::mackey_glass(a / d, b, n)?, d, d.sqrt()))
    }

    pub fn custom_monotone(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Model("custom g needs at least two knots".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::Model("custom g must start at (0, 0)".into()));
        }
        for w in knots.windows(2) {
            let ((u0, g0), (u1, g1)) = (w[0], w[1]);
            for v in [u1, g1] {
                ensure_finite("knot", v)?;
            }
            if !(u1 > u0) {
                return Err(Error::Model(format!("knots must increase in u ({u0} then {u1})")));
            }
            if g1 < g0 {
                return Err(Error::Model(format!("custom g must be nondecreasing ({g0} then {g1})")));
            }
        }
        Ok(Self::CustomMonotone { knots })
    }

    pub fn linear(slope: f64) -> Result<Self> {
        Self::custom_monotone(vec![(0.0, 0.0), (1.0, slope)])
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Nicholson { .. } => "nicholson",
            Self::MackeyGlass { .. } => "mackey_glass",
            Self::CustomMonotone { .. } => "custom_monotone",
            Self::Envelope { .. } => "envelope",
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Self::Nicholson { p } => p * u * (-u).exp(),
            Self::MackeyGlass { a, b, n } => {
                if u <= 0.0 {
                    return a * u;
                }
                let bn = b.powf(*n);
                a * bn * u / (bn + u.powf(*n))
            }
            Self::CustomMonotone { knots } => {
                let (i, slope) = segment(knots, u);
                knots[i].1 + slope * (u - knots[i].0)
            }
            Self::Envelope { inner, peak } => inner.eval(u.min(*peak)),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Self::Nicholson { p } => p * (1.0 - u) * (-u).exp(),
            Self::MackeyGlass { a, b, n } => {
                if u <= 0.0 {
                    return *a;
                }
                let bn = b.powf(*n);
                let un = u.powf(*n);
                a * bn * (bn + (1.0 - n) * un) / ((bn + un) * (bn + un))
            }
            Self::CustomMonotone { knots } => segment(knots, u).1,
            Self::Envelope { inner, peak } => {
                if u < *peak {
                    inner.derivative(u)
                } else {
                    0.0
                }
            }
        }
    }

    /// `g(a + d) - g(a)` without cancellation for small `d`.
    pub fn diff(&self, a: f64, d: f64) -> f64 {
        if d == 0.0 {
            return 0.0;
        }
        match self {
            Self::Nicholson { p } => p * (-a).exp() * (a * (-d).exp_m1() + d * (-d).exp()),
            Self::Envelope { inner, peak } => {
                let b = a + d;
                if a <= *peak && b <= *peak {
                    inner.diff(a, d)
                } else if a >= *peak && b >= *peak {
                    0.0
                } else {
                    self.eval(b) - self.eval(a)
                }
            }
            _ => {
                if d.abs() <= 1e-6 * (1.0 + a.abs()) {
                    d * self.derivative(a + 0.5 * d)
                } else {
                    self.eval(a + d) - self.eval(a)
                }
            }
        }
    }

    pub fn is_monotone(&self) -> bool {
        match self {
            Self::Nicholson { .. } => false,
            Self::MackeyGlass { n, .. } => *n <= 1.0,
            Self::CustomMonotone { .. } | Self::Envelope { .. } => true,
        }
    }

    pub fn g_prime_0(&self) -> f64 {
        self.derivative(0.0)
    }

    /// Positive fixed point.
    pub fn kappa(&self) -> Result<f64> {
        match self {
            Self::Nicholson { p } => {
                if *p > 1.0 {
                    Ok(p.ln())
                } else {
                    Err(Error::Model(format!("Nicholson p = {p} <= 1 has no positive fixed point")))
                }
            }
            Self::MackeyGlass { a, b, n } => {
                if *a > 1.0 {
                    Ok(b * (a - 1.0).powf(1.0 / n))
                } else {
                    Err(Error::Model(format!("Mackey-Glass a = {a} <= 1 has no positive fixed point")))
                }
            }
            Self::CustomMonotone { knots } => {
                let span = 10.0 * knots.last().unwrap().0;
                first_crossing(self, span).ok_or_else(|| {
                    Error::Model(format!("custom g has no positive fixed point on (0, {span}]"))
                })
            }
            Self::Envelope { inner, peak } => {
                let k = inner.kappa()?;
                Ok(if *peak >= k { k } else { inner.eval(*peak) })
            }
        }
    }

    pub fn g_prime_kappa(&self) -> Result<f64> {
        let k = self.kappa()?;
        Ok(match self {
            Self::Nicholson { p } => 1.0 - p.ln(),
            Self::MackeyGlass { a, n, .. } => 1.0 - n * (a - 1.0) / a,
            _ => self.derivative(k),
        })
    }

    /// Upper end of the default scan range, `10κ` (or 10 with no κ).
    pub fn scan_range(&self) -> f64 {
        self.kappa().map(|k| 10.0 * k).unwrap_or(10.0)
    }

    /// `L_g = sup_{u >= 0} |g'(u)|`.
    pub fn lipschitz_global(&self) -> f64 {
        match self {
            Self::Nicholson { p } => *p,
            Self::MackeyGlass { a, n, .. } if *n <= 1.0 => *a,
            Self::CustomMonotone { knots } => knots
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                .fold(0.0, f64::max),
            Self::Envelope { inner, peak } => sup_abs_derivative(inner, 0.0, *peak),
            _ => sup_abs_derivative(self, 0.0, self.scan_range()),
        }
    }

    /// `g*₊ = sup_{s >= 0} g(s)/s`.
    pub fn g_star_plus(&self) -> f64 {
        match self {
            Self::Nicholson { p } => *p,
            Self::MackeyGlass { a, .. } => *a,
            Self::CustomMonotone { knots } => knots[1..]
                .iter()
                .map(|(u, g)| g / u)
                .fold(self.g_prime_0(), f64::max),
            Self::Envelope { .. } => {
                let hi = self.scan_range();
                let (_, v) = scan_max(|s| if s > 0.0 { self.eval(s) / s } else { f64::NEG_INFINITY }, 0.0, hi, SCAN_SAMPLES);
                v.max(self.g_prime_0())
            }
        }
    }

    /// `ḡ(u) = max_{s ∈ [0,u]} g(s)`. Monotone `g` is returned unchanged.
    pub fn envelope_upper(&self) -> Result<BirthFunction> {
        if self.is_monotone() {
            return Ok(self.clone());
        }
        let peak = match self {
            Self::Nicholson { .. } => 1.0,
            Self::MackeyGlass { a: _, b, n } => b * (n - 1.0).powf(-1.0 / n),
            _ => unreachable!("monotone families returned above"),
        };
        Ok(Self::Envelope {
            inner: Box::new(self.clone()),
            peak,
        })
    }
}

fn segment(knots: &[(f64, f64)], u: f64) -> (usize, f64) {
    let i = knots.partition_point(|(x, _)| *x <= u).clamp(1, knots.len() - 1) - 1;
    let ((u0, g0), (u1, g1)) = (knots[i], knots[i + 1]);
    (i, (g1 - g0) / (u1 - u0))
}

fn first_crossing(g: &BirthFunction, span: f64) -> Option<f64> {
    let step = span / SCAN_SAMPLES as f64;
    let f = |u: f64| g.eval(u) - u;
    let mut prev = f(step);
    for i in 2..=SCAN_SAMPLES {
        let u = i as f64 * step;
        let v = f(u);
        if prev > 0.0 && v <= 0.0 {
            return Some(bisect(|x| -f(x), u - step, u, 0.0, true));
        }
        prev = v;
    }
    None
}

fn sup_abs_derivative(g: &BirthFunction, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return g.derivative(lo).abs();
    }
    scan_max(|u| g.derivative(u).abs(), lo, hi, SCAN_SAMPLES).1
}

pub(crate) fn sup_on(g: &BirthFunction, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return g.eval(lo);
    }
    scan_max(|u| g.eval(u), lo, hi, SCAN_SAMPLES).1.max(g.eval(lo)).max(g.eval(hi))
}

pub(crate) fn inf_on(g: &BirthFunction, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return g.eval(lo);
    }
    (-scan_max(|u| -g.eval(u), lo, hi, SCAN_SAMPLES).1).min(g.eval(lo)).min(g.eval(hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonostabilityReport {
    pub kappa: Option<f64>,
    pub g_prime_0: f64,
    pub g_prime_kappa: Option<f64>,
    pub holder_c: f64,
    pub holder_theta: f64,
    pub delta0: f64,
    /// Every fixed point found by the scan, 0 included.
    pub fixed_points: Vec<f64>,
    /// `|g'(κ)| >= 1`: (M) holds but the equilibrium is only marginally attracting.
    pub boundary_case: bool,
    pub passes_m: bool,
}

/// Checks condition (M): two fixed points, `g'(0) > 1 > g'(κ)`, and a Hölder
/// estimate of `g'` near both equilibria.
pub fn check_m(bf: &BirthFunction) -> MonostabilityReport {
    let kappa = bf.kappa().ok();
    let span = kappa.map(|k| 10.0 * k).unwrap_or(10.0);
    let step = span / SCAN_SAMPLES as f64;
    let f = |u: f64| bf.eval(u) - u;
    let mut fixed_points = vec![0.0];
    let mut prev = f(step);
    if prev == 0.0 {
        fixed_points.push(step);
    }
    for i in 2..=SCAN_SAMPLES {
        let u = i as f64 * step;
        let v = f(u);
        if v == 0.0 {
            fixed_points.push(u);
        } else if prev != 0.0 && (prev > 0.0) != (v > 0.0) {
            fixed_points.push(bisect(|x| if prev > 0.0 { -f(x) } else { f(x) }, u - step, u, 0.0, true));
        }
        prev = v;
    }
    if let Some(k) = kappa {
        // snap the scanned crossing to the closed form
        if let Some(fp) = fixed_points.iter_mut().skip(1).find(|x| (**x - k).abs() <= 2.0 * step) {
            *fp = k;
        }
    }

    let g0 = bf.g_prime_0();
    let gk = bf.g_prime_kappa().ok();
    let delta0 = kappa.map(|k| k / 10.0).unwrap_or(0.1);
    let (holder_c, holder_theta) = match kappa {
        Some(k) => holder_estimate(bf, k, delta0),
        None => (0.0, 1.0),
    };
    let passes_m = fixed_points.len() == 2
        && kappa.is_some()
        && g0 > 1.0
        && gk.is_some_and(|d| d < 1.0)
        && holder_c.is_finite();
    MonostabilityReport {
        kappa,
        g_prime_0: g0,
        g_prime_kappa: gk,
        holder_c,
        holder_theta,
        delta0,
        fixed_points,
        boundary_case: gk.is_some_and(|d| d.abs() >= 1.0 - 1e-12),
        passes_m,
    }
}

/// Fits `Q(u) = |g'(u) - g'(0)| + |g'(κ) - g'(κ - u)| ≈ C u^θ` on a geometric
/// sequence in `(0, δ₀]`; C is then the smallest constant valid at every sample.
fn holder_estimate(bf: &BirthFunction, k: f64, delta0: f64) -> (f64, f64) {
    let g0 = bf.derivative(0.0);
    let gk = bf.derivative(k);
    let pts: Vec<(f64, f64)> = (0..20)
        .map(|j| {
            let u = delta0 * 0.5f64.powi(j);
            (u, (bf.derivative(u) - g0).abs() + (gk - bf.derivative(k - u)).abs())
        })
        .collect();
    let logs: Vec<(f64, f64)> = pts.iter().filter(|(_, q)| *q > 0.0).map(|(u, q)| (u.ln(), q.ln())).collect();
    if logs.len() < 2 {
        return (0.0, 1.0);
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let theta = (sxy / sxx).clamp(1e-6, 1.0);
    let c = pts.iter().map(|(u, q)| q / u.powf(theta)).fold(0.0, f64::max);
    (c, theta)
}

/// Where `(ζ₁, ζ₂)` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaSource {
    /// `(m_g, M_g)`.
    Proposed,
    /// `ζ₂ = M_g`, `ζ₁` the preimage of `m_g` on the increasing branch.
    IncreasingPreimage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalData {
    pub kappa: f64,
    #[serde(rename = "M_g")]
    pub max_g: f64,
    #[serde(rename = "m_g")]
    pub min_g: f64,
    #[serde(rename = "L_I")]
    pub l_i: f64,
    /// `L_I < 1`: the contraction hypothesis of global stability.
    pub contraction: bool,
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta_source: ZetaSource,
    /// Failed items among (B1)-(B4); empty when all hold.
    pub b_violations: Vec<String>,
    pub g_star_plus: f64,
    pub subtangential: bool,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "m_K")]
    pub m_k: f64,
}

impl IntervalData {
    /// The trapping interval `[m_K, K]`.
    pub fn i_k(&self) -> (f64, f64) {
        (self.m_k, self.k)
    }
}

pub fn interval_data(bf: &BirthFunction) -> Result<IntervalData> {
    let report = check_m(bf);
    if !report.passes_m {
        return Err(Error::Domain(format!(
            "condition (M) fails (fixed points {:?}, g'(0) = {}, g'(kappa) = {:?})",
            report.fixed_points, report.g_prime_0, report.g_prime_kappa
        )));
    }
    let kappa = report.kappa.unwrap();
    let tol = 1e-12 * (1.0 + kappa);
    let mut max_g = sup_on(bf, 0.0, kappa).max(kappa);
    if max_g <= kappa + tol {
        max_g = kappa;
    }
    let mut min_g = inf_on(bf, kappa, max_g).min(kappa);
    if min_g >= kappa - tol {
        min_g = kappa;
    }
    let l_i = if max_g > min_g {
        sup_abs_derivative(bf, min_g, max_g)
    } else {
        bf.derivative(kappa).abs()
    };

    let mut zeta1 = min_g;
    let zeta2 = max_g;
    let mut zeta_source = ZetaSource::Proposed;
    let mut b_violations = b_checks(bf, zeta1, zeta2, kappa);
    if !b_violations.is_empty() {
        if let Some(z) = increasing_preimage(bf, min_g) {
            let alt = b_checks(bf, z, zeta2, kappa);
            if alt.is_empty() {
                zeta1 = z;
                zeta_source = ZetaSource::IncreasingPreimage;
                b_violations = alt;
            }
        }
    }

    let g_star_plus = bf.g_star_plus();
    let envelope = bf.envelope_upper()?;
    let k = envelope.kappa()?;
    let m_k = inf_on(bf, kappa.min(k), kappa.max(k)).min(kappa);
    Ok(IntervalData {
        kappa,
        max_g,
        min_g,
        l_i,
        contraction: l_i < 1.0,
        zeta1,
        zeta2,
        zeta_source,
        b_violations,
        g_star_plus,
        subtangential: g_star_plus <= bf.g_prime_0() * (1.0 + 1e-12),
        k,
        m_k,
    })
}

/// Smallest `u` with `g(u) = target`, on the branch rising from 0.
fn increasing_preimage(bf: &BirthFunction, target: f64) -> Option<f64> {
    let hi = bf.kappa().ok()?;
    let step = hi / SCAN_SAMPLES as f64;
    (1..=SCAN_SAMPLES)
        .map(|i| i as f64 * step)
        .find(|&u| bf.eval(u) >= target)
        .map(|u| bisect(|x| bf.eval(x) - target, u - step, u, 0.0, true))
}

/// Validates (B1)-(B4) by dense sampling. (B3) is taken on `(0, ζ₁)`: at
/// `ζ₁ = κ` the strict inequality cannot hold at the endpoint itself.
fn b_checks(bf: &BirthFunction, z1: f64, z2: f64, kappa: f64) -> Vec<String> {
    let tol = 1e-9 * (1.0 + z2);
    let mut out = Vec::new();
    let lo = inf_on(bf, z1, z2);
    let hi = sup_on(bf, z1, z2);
    let left_hi = sup_on(bf, 0.0, z1);
    if lo < z1 - tol || hi > z2 + tol || left_hi > z2 + tol {
        out.push(format!("B1: g([z1,z2]) = [{lo}, {hi}], sup g([0,z1]) = {left_hi}"));
    }
    if (lo - bf.eval(z1)).abs() > tol {
        out.push(format!("B2: min g on [z1,z2] = {lo} but g(z1) = {}", bf.eval(z1)));
    }
    let below = (1..SCAN_SAMPLES).map(|i| z1 * i as f64 / SCAN_SAMPLES as f64).find(|&x| bf.eval(x) <= x);
    let g0 = bf.g_prime_0();
    let gs = bf.g_star_plus();
    if let Some(x) = below {
        out.push(format!("B3: g(x) <= x at x = {x}"));
    }
    if !(g0 > 1.0 && g0 <= gs * (1.0 + 1e-12) && gs.is_finite()) {
        out.push(format!("B3: need 1 < g'(0) = {g0} <= g*+ = {gs} < inf"));
    }
    let report = check_m(bf);
    let inside: Vec<f64> = report.fixed_points.iter().copied().filter(|x| *x <= z2 + tol).collect();
    if inside.len() != 2 || (inside[1] - kappa).abs() > 1e-6 * (1.0 + kappa) {
        out.push(format!("B4: fixed points in [0, z2] are {inside:?}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn kappa_examples() {
        assert!((BirthFunction::nicholson(E).unwrap().kappa().unwrap() - 1.0).abs() < 1e-15);
        assert!((BirthFunction::mackey_glass(2.0, 1.0, 2.0).unwrap().kappa().unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(BirthFunction::nicholson(1.0).unwrap().kappa(), Err(Error::Model(_))));
        let g = BirthFunction::custom_monotone(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.5)]).unwrap();
        // 2 + (u - 1)/4 = u
        assert!((g.kappa().unwrap() - 7.0 / 3.0).abs() < 1e-12);
        assert!(BirthFunction::linear(2.0).unwrap().kappa().is_err());
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(BirthFunction::nicholson(3.0).unwrap().lipschitz_global(), 3.0);
        assert_eq!(BirthFunction::mackey_glass(2.0, 1.0, 1.0).unwrap().lipschitz_global(), 2.0);
        assert_eq!(BirthFunction::linear(2.0).unwrap().lipschitz_global(), 2.0);
        // n > 1: sampled, compared against a brute-force fine grid
        let g = BirthFunction::mackey_glass(2.0, 1.0, 4.0).unwrap();
        let brute = (0..2_000_000).map(|i| g.derivative(i as f64 * 1e-5).abs()).fold(0.0, f64::max);
        let l = g.lipschitz_global();
        assert!(l >= brute * (1.0 - 1e-9) && l <= brute * 1.001);
    }

    #[test]
    fn nicholson_interval_p2() {
        let g = BirthFunction::nicholson(2.0).unwrap();
        let d = interval_data(&g).unwrap();
        assert_eq!(d.kappa, 2f64.ln());
        assert_eq!((d.max_g, d.min_g), (d.kappa, d.kappa));
        assert!((d.l_i - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(d.contraction && d.b_violations.is_empty());
        assert_eq!(d.zeta_source, ZetaSource::Proposed);
    }

    #[test]
    fn nicholson_interval_e15() {
        let g = BirthFunction::nicholson(1.5f64.exp()).unwrap();
        let d = interval_data(&g).unwrap();
        assert!((d.kappa - 1.5).abs() < 1e-14);
        assert!((d.max_g - 0.5f64.exp()).abs() < 1e-10);
        // m_g = g(M_g) since g decreases past its peak at 1
        assert!((d.min_g - g.eval(0.5f64.exp())).abs() < 1e-10);
        assert!((d.min_g - 1.4209).abs() < 1e-4);
        assert!((d.l_i - 0.559).abs() < 1e-3);
        assert!(d.contraction);
        assert_eq!(d.zeta_source, ZetaSource::IncreasingPreimage);
        assert!(d.b_violations.is_empty(), "{:?}", d.b_violations);
        assert!((g.eval(d.zeta1) - d.min_g).abs() < 1e-10 && d.zeta1 < 1.0);
        assert!((d.k - d.max_g).abs() < 1e-10);
        assert!((d.m_k - d.min_g).abs() < 1e-10);
    }

    #[test]
    fn nicholson_interval_e22_not_contraction() {
        let g = BirthFunction::nicholson(2.2f64.exp()).unwrap();
        let d = interval_data(&g).unwrap();
        assert!(d.l_i > 1.0 && !d.contraction);
        // |g'(2)| = e^{0.2} dominates, and 2 lies inside I_g
        assert!(d.min_g < 2.0 && d.max_g > 2.0);
        assert!((d.l_i - 0.2f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn check_m_examples() {
        let r = check_m(&BirthFunction::nicholson(2.0).unwrap());
        assert!(r.passes_m && !r.boundary_case);
        assert!((r.g_prime_kappa.unwrap() - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((r.holder_theta - 1.0).abs() < 1e-3);
        assert_eq!(r.fixed_points.len(), 2);

        assert!(!check_m(&BirthFunction::nicholson(1.0).unwrap()).passes_m);
        let r = check_m(&BirthFunction::nicholson(0.9).unwrap());
        assert!(!r.passes_m && r.kappa.is_none() && r.fixed_points == vec![0.0]);

        let r = check_m(&BirthFunction::mackey_glass(2.0, 1.0, 4.0).unwrap());
        assert!(r.passes_m && r.boundary_case);
        assert_eq!(r.g_prime_kappa.unwrap(), -1.0);
    }

    #[test]
    fn check_m_locates_extra_crossings() {
        let g = BirthFunction::custom_monotone(vec![(0.0, 0.0), (0.5, 1.0), (1.5, 1.2), (2.5, 2.8), (3.5, 3.0)]).unwrap();
        let r = check_m(&g);
        assert!(!r.passes_m);
        // crossings solved by hand on each segment
        let expect = [0.0, 1.125, 2.0, 2.875];
        assert_eq!(r.fixed_points.len(), 4, "{:?}", r.fixed_points);
        for (a, b) in r.fixed_points.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn envelope_examples() {
        let g = BirthFunction::mackey_glass(2.0, 1.0, 1.0).unwrap();
        assert_eq!(g.envelope_upper().unwrap(), g);
        let g = BirthFunction::nicholson(1.5f64.exp()).unwrap();
        let e = g.envelope_upper().unwrap();
        for u in [0.2, 0.7, 1.0] {
            assert_eq!(e.eval(u), g.eval(u));
        }
        for u in [1.01, 2.0, 9.0] {
            assert_eq!(e.eval(u), 0.5f64.exp());
        }
        assert!((e.kappa().unwrap() - 0.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn envelope_meets_m() {
        let e = BirthFunction::nicholson(1.5f64.exp()).unwrap().envelope_upper().unwrap();
        let r = check_m(&e);
        assert!(r.passes_m, "{r:?}");
    }

    #[test]
    fn g_star_plus_and_subtangency() {
        for g in [BirthFunction::nicholson(2.0).unwrap(), BirthFunction::mackey_glass(2.0, 1.0, 4.0).unwrap()] {
            let d = interval_data(&g).unwrap();
            assert!(d.g_star_plus >= g.g_prime_0());
            let holds = (1..10_000).all(|i| {
                let u = i as f64 * 1e-3;
                g.eval(u) <= g.g_prime_0() * u * (1.0 + 1e-12)
            });
            assert_eq!(d.subtangential, holds);
        }
        // not subtangential: slope grows after the first knot
        let g = BirthFunction::custom_monotone(vec![(0.0, 0.0), (0.5, 0.75), (1.0, 2.0), (3.0, 2.5)]).unwrap();
        assert!(g.g_star_plus() > g.g_prime_0());
    }

    #[test]
    fn raw_rescaling() {
        let (g, time, space) = BirthFunction::nicholson_raw(0.5, 3.0).unwrap();
        assert_eq!(g, BirthFunction::Nicholson { p: 6.0 });
        assert_eq!((time, space), (0.5, 0.5f64.sqrt()));
    }

    fn families() -> Vec<BirthFunction> {
        vec![
            BirthFunction::nicholson(2.0).unwrap(),
            BirthFunction::nicholson(1.5f64.exp()).unwrap(),
            BirthFunction::nicholson(2.2f64.exp()).unwrap(),
            BirthFunction::mackey_glass(2.0, 1.0, 1.0).unwrap(),
            BirthFunction::mackey_glass(2.0, 1.0, 4.0).unwrap(),
            BirthFunction::mackey_glass(3.0, 0.7, 8.0).unwrap(),
            BirthFunction::custom_monotone(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.5)]).unwrap(),
        ]
    }

    #[test]
    fn equilibria_exact() {
        for g in families() {
            assert_eq!(g.eval(0.0), 0.0);
            let k = g.kappa().unwrap();
            assert!((g.eval(k) - k).abs() <= 1e-12 * (1.0 + k), "{g:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lipschitz_holds_on_random_pairs(seed in 0usize..7, u in 0.0..20.0f64, v in 0.0..20.0f64) {
            let g = &families()[seed];
            let l = g.lipschitz_global();
            prop_assert!((g.eval(u) - g.eval(v)).abs() <= l * (u - v).abs() * (1.0 + 1e-9) + 1e-15);
        }

        #[test]
        fn envelope_dominates(seed in 0usize..7, u in 0.0..20.0f64, v in 0.0..20.0f64) {
            let g = &families()[seed];
            let e = g.envelope_upper().unwrap();
            prop_assert!(e.eval(u) >= g.eval(u));
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            prop_assert!(e.eval(lo) <= e.eval(hi));
            prop_assert!((e.eval(u) - e.eval(v)).abs() <= g.lipschitz_global() * (u - v).abs() * (1.0 + 1e-9) + 1e-15);
        }

        #[test]
        fn diff_matches_direct(seed in 0usize..7, a in 0.0..5.0f64, d in -1.0..1.0f64, scale in 0i32..12) {
            let g = &families()[seed];
            let e = g.envelope_upper().unwrap();
            let d = d * 10f64.powi(-scale);
            for f in [g, &e] {
                let direct = f.eval(a + d) - f.eval(a);
                prop_assert!((f.diff(a, d) - direct).abs() <= 1e-12 * (1.0 + a) + 1e-9 * d.abs());
                prop_assert!(f.diff(a, d).abs() <= f.lipschitz_global() * d.abs() * (1.0 + 1e-9));
            }
        }
    }
}
