use delayfront::birthfuncs::BirthFunction;
use delayfront::charspec::{speed_threshold, LambdaChoice};
use delayfront::linsolve::{delay_steps_for, HistoryField};
use delayfront::rdwave::{
    check_comparison, comoving_grid, compute_profile, experiment_global_stability, experiment_leading_edge,
    experiment_uniqueness, required_z_max, ComovingProblem, PerturbationSpec, ProfileOptions, StepDatum,
    WaveProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{require, ExperimentBlock, ExperimentKind, LambdaSpec, Model, NamedLambda, RunConfig};
use crate::error::{CliError, Context};
use crate::manifest::{Assertion, Outcome};
use crate::output::{line_plot, Series, Table};

fn wave_speed(model: &Model, exp: &ExperimentBlock) -> Result<f64, CliError> {
    match (exp.c, exp.c_offset) {
        (Some(c), None) => Ok(c),
        (None, off) => {
            let base = speed_threshold(model.bf.lipschitz_global(), model.h).ctx("charspec")?;
            Ok(base + off.unwrap_or(0.5))
        }
        (Some(_), Some(_)) => Err(CliError::Config("[experiment] takes `c` or `c_offset`, not both".into())),
    }
}

fn profile_options(cfg: &RunConfig, datum: StepDatum, z_max_floor: f64) -> ProfileOptions {
    let d = ProfileOptions::default();
    let n = &cfg.numerics;
    ProfileOptions {
        dx0: n.dx0.unwrap_or(d.dx0),
        z_max: n.z_max.unwrap_or(d.z_max).max(z_max_floor),
        z_min: n.z_min,
        datum,
        max_time: n.max_time.unwrap_or(d.max_time),
        tolerance: n.tolerance.unwrap_or(d.tolerance),
        gain: n.gain.unwrap_or(d.gain),
        range_tolerance: n.range_tolerance.unwrap_or(d.range_tolerance),
    }
}

fn profile_checks(out: &mut Outcome, p: &WaveProfile, residual_tol: f64) {
    out.check(Assertion::flag(
        "profile.converged",
        p.has_converged(),
        format!(
            "plain {}, weighted {}, relaxed to t = {}",
            p.converged, p.weighted_converged, p.relax_time
        ),
    ));
    out.check(Assertion::at_most("profile.residual", p.residual, residual_tol));
}

#[derive(Debug, Serialize)]
struct ProfileJson<'a> {
    c: f64,
    h: f64,
    lambda_c: f64,
    tail_rate: f64,
    anchor: f64,
    converged: bool,
    weighted_converged: bool,
    relax_time: f64,
    residual: f64,
    left_tail_max: f64,
    range: Option<delayfront::rdwave::RangeCheck>,
    warnings: &'a [String],
    grid: delayfront::linsolve::GridSpec,
}

fn describe_profile<'a>(p: &'a WaveProfile) -> ProfileJson<'a> {
    ProfileJson {
        c: p.c,
        h: p.h,
        lambda_c: p.lambda_c,
        tail_rate: p.tail_rate,
        anchor: p.anchor,
        converged: p.converged,
        weighted_converged: p.weighted_converged,
        relax_time: p.relax_time,
        residual: p.residual,
        left_tail_max: p.left_tail_max,
        range: p.range,
        warnings: &p.warnings,
        grid: p.grid,
    }
}

fn profile_files(out: &mut Outcome, p: &WaveProfile) {
    let mut table = Table::new(&["z", "psi"]);
    let z = p.grid.points();
    for (zi, v) in z.iter().zip(&p.psi) {
        table.row(&[*zi, *v]);
    }
    out.file("profile.csv", table.render());
    out.json("profile.json", &describe_profile(p));
    out.file(
        "profile.svg",
        line_plot(
            "wave profile",
            "z",
            "psi",
            &[Series { name: "psi", points: z.into_iter().zip(p.psi.iter().copied()).collect() }],
            false,
        ),
    );
}

pub fn profile(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = require(&cfg.model, "model")?.build()?;
    let exp = cfg.experiment.clone().unwrap_or_else(|| ExperimentBlock::new(ExperimentKind::Profile));
    let c = wave_speed(&model, &exp)?;
    let opts = profile_options(cfg, exp.step_datum()?, 0.0);
    let p = compute_profile(&model.bf, c, model.h, &opts).ctx("rdwave")?;
    let mut out = Outcome::default();
    profile_checks(&mut out, &p, cfg.numerics.residual_tolerance.unwrap_or(1e-6));
    if let Ok(d) = delayfront::birthfuncs::interval_data(&model.bf) {
        if d.contraction {
            let r = p.range;
            out.check(Assertion::flag(
                "profile.range_in_I_K",
                r.is_some_and(|r| r.in_i_k),
                format!("{r:?}"),
            ));
        }
    }
    out.set("c", c);
    out.set("lambda_c", p.lambda_c);
    out.set("anchor", p.anchor);
    out.set("residual", p.residual);
    out.set("warnings", &p.warnings);
    profile_files(&mut out, &p);
    Ok(out)
}

fn lambda_choice(spec: Option<LambdaSpec>) -> LambdaChoice {
    match spec {
        None | Some(LambdaSpec::Named(NamedLambda::Lower)) => LambdaChoice::Lower,
        Some(LambdaSpec::Named(NamedLambda::Upper)) => LambdaChoice::Upper,
        Some(LambdaSpec::Value(v)) => LambdaChoice::Value(v),
    }
}

pub fn stability(cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let model = require(&cfg.model, "model")?.build()?;
    let exp = require(&cfg.experiment, "experiment")?;
    let c = wave_speed(&model, exp)?;
    let mut out = Outcome::default();
    out.set("c", c);
    match exp.kind {
        ExperimentKind::LeadingEdge | ExperimentKind::Global => perturbation_run(cfg, &model, exp, c, &mut out)?,
        ExperimentKind::Uniqueness => uniqueness(cfg, &model, exp, c, &mut out)?,
        ExperimentKind::Comparison => comparison(cfg, &model, exp, c, seed, &mut out)?,
        other => {
            return Err(CliError::Config(format!(
                "stability runs leading_edge, global, uniqueness or comparison, not {other:?}"
            )))
        }
    }
    Ok(out)
}

fn perturbation_run(
    cfg: &RunConfig,
    model: &Model,
    exp: &ExperimentBlock,
    c: f64,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let pert = PerturbationSpec {
        amplitude: exp.amplitude.unwrap_or(0.1),
        b: exp.b.unwrap_or(0.0),
        shape: exp.shape(),
    };
    let t_end = cfg.numerics.t_end.unwrap_or(20.0);
    let sample_dt = cfg.numerics.sample_dt.unwrap_or(0.25);
    let opts = profile_options(cfg, exp.step_datum()?, required_z_max(pert.b, c, t_end));
    let p = compute_profile(&model.bf, c, model.h, &opts).ctx("rdwave")?;
    profile_checks(out, &p, cfg.numerics.residual_tolerance.unwrap_or(1e-6));
    profile_files(out, &p);

    if exp.kind == ExperimentKind::LeadingEdge {
        let r = experiment_leading_edge(&p, &pert, lambda_choice(exp.lambda), t_end, sample_dt).ctx("rdwave")?;
        out.check(Assertion {
            name: "leading_edge.majorization".into(),
            passed: r.violations == 0,
            margin: 1.0 + r.tolerance - r.worst_ratio,
            detail: format!("{} violations, worst ratio {} at (t, z) = {:?}", r.violations, r.worst_ratio, r.worst_at),
        });
        let rate = r.fit.map_or(f64::NAN, |f| f.rate);
        out.check(Assertion {
            name: "leading_edge.rate".into(),
            passed: r.rate_ok,
            margin: r.gamma + 0.05 - rate,
            detail: format!("fitted {rate} vs gamma {}", r.gamma),
        });
        out.rates = Some((rate, r.gamma));
        out.set("lambda_c", r.speed.lambda_c);
        out.set("gamma", r.gamma);
        out.set("majorant", r.coeffs);
        let mut table = Table::new(&["t", "weighted_D", "majorant"]);
        for i in 0..r.times.len() {
            table.row(&[r.times[i], r.weighted_sup[i], r.majorant_sup[i]]);
        }
        out.file("stability.csv", table.render());
        let pair = |ys: &[f64]| r.times.iter().copied().zip(ys.iter().copied()).collect();
        out.file(
            "stability.svg",
            line_plot(
                "leading-edge majorization",
                "t",
                "sup",
                &[
                    Series { name: "sup xi|v - psi|", points: pair(&r.weighted_sup) },
                    Series { name: "sup u (majorant)", points: pair(&r.majorant_sup) },
                ],
                true,
            ),
        );
        out.json("stability.json", &r);
    } else {
        let r = experiment_global_stability(&p, &pert, t_end, sample_dt).ctx("rdwave")?;
        out.check(Assertion {
            name: "global.envelope".into(),
            passed: r.violations.is_empty(),
            margin: 1.0 + 1e-9 - r.worst_ratio,
            detail: format!("{} violations, worst D/envelope {}", r.violations.len(), r.worst_ratio),
        });
        let rate = r.fit.map_or(f64::NAN, |f| f.rate);
        out.check(Assertion {
            name: "global.rate".into(),
            passed: r.rate_ok,
            margin: -0.9 * r.gamma0 - rate,
            detail: format!("fitted {rate} vs -0.9 gamma0 = {}", -0.9 * r.gamma0),
        });
        out.check(Assertion::flag("global.range_in_I_K", r.range_ok, format!("{:?}", p.range)));
        out.rates = Some((rate, -r.gamma0));
        out.set("L_I", r.interval.l_i);
        out.set("lambda_c", r.lambda_c);
        out.set("gamma0", r.gamma0);
        out.set("C", r.c_const);
        let mut table = Table::new(&["t", "D", "envelope"]);
        for i in 0..r.times.len() {
            table.row(&[r.times[i], r.sup_diff[i], r.envelope[i]]);
        }
        out.file("stability.csv", table.render());
        let pair = |ys: &[f64]| r.times.iter().copied().zip(ys.iter().copied()).collect();
        out.file(
            "stability.svg",
            line_plot(
                "global stability",
                "t",
                "sup |v - psi|",
                &[
                    Series { name: "D(t)", points: pair(&r.sup_diff) },
                    Series { name: "C q e^(-gamma0 t)", points: pair(&r.envelope) },
                ],
                true,
            ),
        );
        out.json("stability.json", &r);
    }
    Ok(())
}

fn uniqueness(
    cfg: &RunConfig,
    model: &Model,
    exp: &ExperimentBlock,
    c: f64,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let second = StepDatum::ClippedExponential {
        offset: exp.offset.unwrap_or(2.0),
    };
    let opts = profile_options(cfg, StepDatum::Logistic, 0.0);
    let r = experiment_uniqueness(&model.bf, c, model.h, (StepDatum::Logistic, second), &opts).ctx("rdwave")?;
    out.check(Assertion::flag(
        "uniqueness.hypothesis",
        r.hypothesis_holds,
        format!("leading exponents {:?}", r.exponents),
    ));
    out.check(Assertion::flag("uniqueness.converged", r.conclusive, format!("{:?}", r.converged)));
    out.check(Assertion::at_most("uniqueness.distance", r.distance, 1e-5));
    out.set("distance", r.distance);
    out.set("anchors", r.anchors);
    out.json("uniqueness.json", &r);
    Ok(())
}

/// Ordered pair of smooth nonnegative histories: a front with a travelling
/// ripple below, the same plus a pulsing bump above.
fn ordered_histories(
    rng: &mut ChaCha8Rng,
    grid: &delayfront::linsolve::GridSpec,
    h: f64,
    n: usize,
    kappa: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let a = rng.gen_range(0.2..1.5) * kappa;
    let z0 = rng.gen_range(-5.0..5.0);
    let w = rng.gen_range(0.5..3.0);
    let (om, nu, phi) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..3.0), rng.gen_range(0.0..6.3));
    let bump = rng.gen_range(0.0..1.0) * kappa;
    let z1 = rng.gen_range(-10.0..10.0);
    let w2 = rng.gen_range(0.5..4.0);
    let nu2 = rng.gen_range(0.0..3.0);
    let z = grid.points();
    let dt = h / n as f64;
    let mut lower = Vec::with_capacity(n + 1);
    let mut upper = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let s = -h + j as f64 * dt;
        let lo: Vec<f64> = z
            .iter()
            .map(|&x| a * 0.5 * (1.0 + ((x - z0) / w).tanh()) * (1.0 + 0.3 * (om * x + nu * s + phi).sin()))
            .collect();
        let up = lo
            .iter()
            .zip(&z)
            .map(|(l, &x)| l + bump * (-(x - z1).powi(2) / w2).exp() * (1.0 + 0.5 * (nu2 * s).cos()))
            .collect();
        lower.push(lo);
        upper.push(up);
    }
    (lower, upper)
}

fn comparison(
    cfg: &RunConfig,
    model: &Model,
    exp: &ExperimentBlock,
    c: f64,
    seed: u64,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let g: &BirthFunction = &model.bf;
    let gbar = g.envelope_upper().ctx("birthfuncs")?;
    let kappa = g.kappa().ctx("birthfuncs")?;
    let h = model.h;
    let dx0 = cfg.numerics.dx0.unwrap_or(0.1);
    let (grid, _) = comoving_grid(c, h, dx0, -20.0, 20.0).ctx("rdwave")?;
    let n = delay_steps_for(h, grid.dx());
    let t_end = cfg.numerics.t_end.unwrap_or(5.0);
    let trials = exp.trials.unwrap_or(50);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<_> = (0..trials)
        .map(|_| ordered_histories(&mut rng, &grid, h, n, kappa))
        .collect();
    let reports: Vec<_> = data
        .into_par_iter()
        .map(|(lo, up)| {
            let first = ComovingProblem::new(g.clone(), c, grid, HistoryField::from_slices(h, lo)?)?;
            let second = ComovingProblem::new(gbar.clone(), c, grid, HistoryField::from_slices(h, up)?)?;
            check_comparison(first, second, t_end)
        })
        .collect::<delayfront::Result<_>>()
        .ctx("rdwave")?;
    let mut table = Table::new(&["trial", "steps", "violations", "worst_excess", "final_sup_upper"]);
    for (i, r) in reports.iter().enumerate() {
        out.check(Assertion::at_most(format!("comparison[{i}]"), r.worst_excess, 1e-9));
        table.row(&[i as f64, r.steps_checked as f64, r.violations as f64, r.worst_excess, r.final_sup_upper]);
    }
    out.set("trials", trials);
    out.set(
        "worst_excess",
        reports.iter().map(|r| r.worst_excess).fold(f64::NEG_INFINITY, f64::max),
    );
    out.file("comparison.csv", table.render());
    out.json("comparison.json", &reports);
    Ok(())
}
