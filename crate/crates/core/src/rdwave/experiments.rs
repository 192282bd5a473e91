use serde::{Deserialize, Serialize};

use super::profile::{compute_profile, ProfileOptions, StepDatum, WaveProfile};
use super::{ComovingProblem, ComovingStepper, PairStepper};
use crate::birthfuncs::{interval_data, BirthFunction, IntervalData};
use crate::charspec::{best_gamma0, gamma_root, LambdaChoice, LinearCoefficients, SpeedData};
use crate::error::{Error, Result};
use crate::linsolve::{
    output_steps, sup_norm, Boundary, DecayFit, FdStepper, FitModel, GridSpec, HistoryField, LinearProblem, Stencil,
};

/// Right end needed to keep a perturbation starting at `b` clear of the
/// outflow boundary up to time `t_end`.
pub fn required_z_max(b: f64, c: f64, t_end: f64) -> f64 {
    b + c * t_end + 20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationShape {
    /// `η_b` itself.
    EtaWeighted,
    /// `(1 - r²)²` bump on `[b, b + 2 width]`.
    CompactBump { width: f64 },
    /// `e^{λ_c(z - b)}` up to `b`, then a unit-length linear cut-off.
    TailSeeded,
}

/// A time-independent perturbation of the history with `|v₀ - ψ₀| <= q η_b`,
/// `η_b(z) = min{1, e^{λ_c(z - b)}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub amplitude: f64,
    pub b: f64,
    pub shape: PerturbationShape,
}

impl PerturbationSpec {
    pub fn eta(&self, z: f64, lambda: f64) -> f64 {
        (lambda * (z - self.b)).exp().min(1.0)
    }

    pub fn eval(&self, z: f64, lambda: f64) -> f64 {
        let q = self.amplitude;
        match self.shape {
            PerturbationShape::EtaWeighted => q * self.eta(z, lambda),
            PerturbationShape::CompactBump { width } => {
                let r = (z - self.b - width) / width;
                if r.abs() < 1.0 {
                    q * (1.0 - r * r).powi(2)
                } else {
                    0.0
                }
            }
            PerturbationShape::TailSeeded => {
                if z <= self.b {
                    q * (lambda * (z - self.b)).exp()
                } else {
                    q * (1.0 - (z - self.b)).max(0.0)
                }
            }
        }
    }

    pub fn slice(&self, grid: &GridSpec, lambda: f64) -> Vec<f64> {
        grid.points().iter().map(|z| self.eval(*z, lambda)).collect()
    }
}

fn sample_times(t_end: f64, sample_dt: f64) -> Result<Vec<f64>> {
    if !(sample_dt > 0.0 && t_end > 0.0) {
        return Err(Error::Config(format!("need t_end > 0 and sample_dt > 0 (got {t_end}, {sample_dt})")));
    }
    let count = (t_end / sample_dt + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| k as f64 * sample_dt).collect())
}

/// Runs `(ψ, δ)` from the profile plus a constant perturbation history and
/// returns `δ` at each output time.
fn run_pair(profile: &WaveProfile, delta0: Vec<f64>, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = profile.steps_per_delay();
    let delta = HistoryField::constant(profile.h, n, delta0)?;
    let mut problem = profile.problem(profile.history()?)?;
    let sup_delta = sup_norm(delta.current());
    problem.guard += sup_delta;
    let mut pair = PairStepper::new(problem, delta)?;
    let steps = output_steps(times, pair.dt())?;
    let mut done = 0;
    let mut out = Vec::with_capacity(steps.len());
    for k in steps {
        while done < k {
            pair.step()?;
            done += 1;
        }
        out.push(pair.delta().to_vec());
    }
    Ok(out)
}

fn require_width(profile: &WaveProfile, pert: &PerturbationSpec, t_end: f64) -> Result<()> {
    let need = required_z_max(pert.b, profile.c, t_end);
    if profile.grid.x_max < need {
        return Err(Error::Config(format!(
            "grid ends at {} but the perturbation needs z_max >= {need}",
            profile.grid.x_max
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingEdgeReport {
    pub speed: SpeedData,
    /// Coefficients of the linear majorant problem.
    pub coeffs: LinearCoefficients,
    pub gamma: f64,
    pub times: Vec<f64>,
    /// `sup ξ_c |v - ψ|`
    pub weighted_sup: Vec<f64>,
    pub majorant_sup: Vec<f64>,
    /// Largest `ξ_c |v - ψ| / u`, skipping points where `|v - ψ|` and
    /// `u / ξ_c` are both at the subnormal scale.
    pub worst_ratio: f64,
    pub worst_at: (f64, f64),
    pub violations: usize,
    pub tolerance: f64,
    pub fit: Option<DecayFit>,
    pub rate_ok: bool,
    pub passed: bool,
}

/// Majorizes the weighted deviation `ξ_c |v - ψ|` by the solution of the
/// linear delayed problem with `m = 2λ_c - c`, `p = λ_c² - cλ_c - 1`,
/// `q = L_g e^{-λ_c ch}`, `d = -ch`.
///
/// The majorant uses the grid operator of the nonlinear run conjugated by
/// the weight, so the comparison holds exactly on the grid and not only up
/// to discretization error.
pub fn experiment_leading_edge(
    profile: &WaveProfile,
    pert: &PerturbationSpec,
    choice: LambdaChoice,
    t_end: f64,
    sample_dt: f64,
) -> Result<LeadingEdgeReport> {
    require_width(profile, pert, t_end)?;
    let (c, h) = (profile.c, profile.h);
    let l_g = profile.bf.lipschitz_global();
    let speed = SpeedData::new(c, l_g, h, choice)?;
    let lam = speed.lambda_c;
    let coeffs = LinearCoefficients::new(
        2.0 * lam - c,
        lam * lam - c * lam - 1.0,
        l_g * (-lam * c * h).exp(),
        -c * h,
        h,
    )?;
    let gamma = gamma_root(&coeffs)?.gamma;
    let grid = profile.grid;
    let dx = grid.dx();
    let xi: Vec<f64> = grid.points().iter().map(|z| (-lam * z).exp()).collect();
    let delta0 = pert.slice(&grid, lam);
    let w0: Vec<f64> = delta0.iter().zip(&xi).map(|(d, x)| d.abs() * x).collect();
    let times = sample_times(t_end, sample_dt)?;

    let left_ratio = match profile.left_boundary() {
        Boundary::Geometric(r) => r,
        Boundary::Periodic => unreachable!("profiles live on bounded grids"),
    };
    let majorant_problem = LinearProblem::new(coeffs, grid)
        .with_stencil(Stencil::conjugated(c, lam, dx), coeffs.q)
        .with_boundaries(
            Boundary::Geometric(left_ratio * (lam * dx).exp()),
            Boundary::Geometric((-lam * dx).exp()),
        );
    let w_hist = HistoryField::constant(h, profile.steps_per_delay(), w0)?;
    let run_majorant = || -> Result<Vec<Vec<f64>>> {
        let mut st = FdStepper::new(&majorant_problem, w_hist)?;
        let steps = output_steps(&times, st.dt())?;
        let mut done = 0;
        Ok(steps
            .into_iter()
            .map(|k| {
                st.advance_to_step(k, &mut done);
                st.current().to_vec()
            })
            .collect())
    };
    let (deltas, majorant) = rayon::join(|| run_pair(profile, delta0.clone(), &times), run_majorant);
    let (deltas, majorant) = (deltas?, majorant?);

    let tolerance = 1e-3;
    // below this both sides are subnormal-scale noise
    let floor = 1e-290;
    let mut worst_ratio = 0.0f64;
    let mut worst_at = (0.0, 0.0);
    let mut violations = 0;
    let mut weighted_sup = Vec::with_capacity(times.len());
    let mut majorant_sup = Vec::with_capacity(times.len());
    for ((&t, d), u) in times.iter().zip(&deltas).zip(&majorant) {
        let mut ws = 0.0f64;
        for i in 0..grid.n {
            let w = xi[i] * d[i].abs();
            ws = ws.max(w);
            if d[i].abs() < floor && u[i] < xi[i] * floor {
                continue;
            }
            if w > u[i] * (1.0 + tolerance) {
                violations += 1;
            }
            let ratio = if u[i] > 0.0 { w / u[i] } else { f64::INFINITY };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_at = (t, grid.x(i));
            }
        }
        weighted_sup.push(ws);
        majorant_sup.push(sup_norm(u));
    }
    let fit = if weighted_sup.iter().all(|v| *v > 0.0) {
        DecayFit::fit(&times, &weighted_sup, 0.25 * t_end, FitModel::ExpPower).ok()
    } else {
        None
    };
    let rate_ok = match fit {
        Some(f) => f.rate <= gamma + 0.05,
        None => weighted_sup.iter().all(|v| *v == 0.0),
    };
    Ok(LeadingEdgeReport {
        speed,
        coeffs,
        gamma,
        times,
        weighted_sup,
        majorant_sup,
        worst_ratio,
        worst_at,
        violations,
        tolerance,
        fit,
        passed: violations == 0 && rate_ok,
        rate_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalStabilityReport {
    pub interval: IntervalData,
    pub lambda_c: f64,
    pub gamma0: f64,
    /// `sup|v₀ - ψ₀| / q`, held fixed for all later times.
    pub c_const: f64,
    pub times: Vec<f64>,
    pub sup_diff: Vec<f64>,
    pub envelope: Vec<f64>,
    pub violations: Vec<f64>,
    pub worst_ratio: f64,
    /// Exponential fit over `[T/2, T]`.
    pub fit: Option<DecayFit>,
    pub rate_ok: bool,
    pub range_ok: bool,
    pub passed: bool,
}

/// Checks `sup|v - ψ| <= C q e^{-γ₀ t}` with `C` measured at `t = 0`, where
/// `λ_c` is chosen to make `γ₀` as large as possible.
pub fn experiment_global_stability(
    profile: &WaveProfile,
    pert: &PerturbationSpec,
    t_end: f64,
    sample_dt: f64,
) -> Result<GlobalStabilityReport> {
    require_width(profile, pert, t_end)?;
    let bf = &profile.bf;
    let interval = interval_data(bf)?;
    if !interval.contraction {
        return Err(Error::Domain(format!("L_I = {} is not below 1", interval.l_i)));
    }
    let l_g = bf.lipschitz_global();
    let (lambda_c, gamma0) = best_gamma0(profile.c, l_g, interval.l_i, profile.h)?;
    let delta0 = pert.slice(&profile.grid, lambda_c);
    let q = pert.amplitude;
    let c_const = sup_norm(&delta0) / q;
    let times = sample_times(t_end, sample_dt)?;
    let deltas = run_pair(profile, delta0, &times)?;
    let sup_diff: Vec<f64> = deltas.iter().map(|d| sup_norm(d)).collect();
    let envelope: Vec<f64> = times.iter().map(|t| c_const * q * (-gamma0 * t).exp()).collect();
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0f64;
    for ((&t, &d), &e) in times.iter().zip(&sup_diff).zip(&envelope) {
        worst_ratio = worst_ratio.max(d / e);
        if d > e * (1.0 + 1e-9) {
            violations.push(t);
        }
    }
    let fit = DecayFit::fit(&times, &sup_diff, 0.5 * t_end, FitModel::Exp).ok();
    let rate_ok = if gamma0 > 0.0 {
        fit.is_some_and(|f| f.rate <= -0.9 * gamma0)
    } else {
        true
    };
    let range_ok = profile.range.is_some_and(|r| r.in_i_k);
    Ok(GlobalStabilityReport {
        interval,
        lambda_c,
        gamma0,
        c_const,
        times,
        sup_diff,
        envelope,
        passed: violations.is_empty() && rate_ok && range_ok,
        violations,
        worst_ratio,
        fit,
        rate_ok,
        range_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// Fitted leading-edge exponents of the two data.
    pub exponents: (f64, f64),
    /// Both data share the leading edge, so their weighted difference is integrable.
    pub hypothesis_holds: bool,
    pub anchors: (f64, f64),
    pub converged: (bool, bool),
    pub distance: f64,
    pub conclusive: bool,
    pub agree: bool,
}

/// Slope of `log u` over the leftmost 10% of the grid; infinite when the
/// datum vanishes there.
fn leading_exponent(grid: &GridSpec, u: &[f64]) -> f64 {
    let m = (grid.n / 10).max(2);
    let pts: Vec<(f64, f64)> = (0..m).filter(|&i| u[i] > 0.0).map(|i| (grid.x(i), u[i].ln())).collect();
    if pts.len() < m {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn experiment_uniqueness(
    bf: &BirthFunction,
    c: f64,
    h: f64,
    data: (StepDatum, StepDatum),
    opts: &ProfileOptions,
) -> Result<UniquenessReport> {
    let first = ProfileOptions { datum: data.0, ..*opts };
    let second = ProfileOptions { datum: data.1, ..*opts };
    let (a, b) = rayon::join(|| compute_profile(bf, c, h, &first), || compute_profile(bf, c, h, &second));
    let (a, b) = (a?, b?);
    let kappa = a.kappa();
    let grid = a.grid;
    let slice = |d: StepDatum| -> Vec<f64> { grid.points().iter().map(|z| d.eval(*z, kappa, a.tail_rate)).collect() };
    let exponents = (leading_exponent(&grid, &slice(data.0)), leading_exponent(&grid, &slice(data.1)));
    let tol = 1e-3 * a.tail_rate;
    let hypothesis_holds = (exponents.0 - a.tail_rate).abs() <= tol && (exponents.1 - a.tail_rate).abs() <= tol;
    let distance = a.psi.iter().zip(&b.psi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let conclusive = a.has_converged() && b.has_converged();
    Ok(UniquenessReport {
        exponents,
        hypothesis_holds,
        anchors: (a.anchor, b.anchor),
        converged: (a.has_converged(), b.has_converged()),
        distance,
        conclusive,
        agree: conclusive && distance < 1e-5,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub steps_checked: usize,
    pub violations: usize,
    /// Largest `v₁ - v₂` seen.
    pub worst_excess: f64,
    pub worst_at: (f64, f64),
    /// `sup v₂` at the final time.
    pub final_sup_upper: f64,
    pub passed: bool,
}

fn monotone_on(g: &BirthFunction, hi: f64) -> bool {
    g.is_monotone() || (0..=10_000).all(|i| g.derivative(hi * i as f64 / 10_000.0) >= 0.0)
}

/// Evolves two ordered solutions with `g₁ <= g₂` and checks `v₁ <= v₂` after
/// every step.
pub fn check_comparison(
    first: ComovingProblem,
    second: ComovingProblem,
    t_end: f64,
) -> Result<ComparisonReport> {
    let grid = first.grid;
    if second.grid != grid || (first.c - second.c).abs() > 0.0 {
        return Err(Error::Config("comparison runs need the same grid and speed".into()));
    }
    if first.c * grid.dx() > 2.0 {
        return Err(Error::Config("c dx > 2: the scheme is not order preserving".into()));
    }
    let reach = first.guard.max(second.guard);
    let (g1, g2) = (&first.bf, &second.bf);
    for i in 0..=10_000 {
        let u = reach * i as f64 / 10_000.0;
        if g1.eval(u) > g2.eval(u) + 1e-12 {
            return Err(Error::Domain(format!("g1({u}) > g2({u})")));
        }
    }
    if !monotone_on(g1, reach) && !monotone_on(g2, reach) {
        return Err(Error::Domain("neither birth function is nondecreasing on the data range".into()));
    }
    for (a, b) in first.history.slices().zip(second.history.slices()) {
        if a.iter().zip(b).any(|(x, y)| x > y) {
            return Err(Error::Domain("initial data are not ordered".into()));
        }
    }
    let mut s1 = ComovingStepper::new(first)?;
    let mut s2 = ComovingStepper::new(second)?;
    let steps = (t_end / s1.dt()).round() as usize;
    let mut violations = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_at = (0.0, 0.0);
    for _ in 0..steps {
        s1.step()?;
        s2.step()?;
        for (i, (a, b)) in s1.current().iter().zip(s2.current()).enumerate() {
            let e = a - b;
            if e > worst_excess {
                worst_excess = e;
                worst_at = (s1.time(), grid.x(i));
            }
            if e > 1e-9 {
                violations += 1;
            }
        }
    }
    Ok(ComparisonReport {
        steps_checked: steps,
        violations,
        worst_excess,
        worst_at,
        final_sup_upper: sup_norm(s2.current()),
        passed: violations == 0,
    })
}
