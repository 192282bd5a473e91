use delayfront::charspec::{
    best_gamma0, check_gauss_bounds, decay_amplitude, gamma_root, lambda_interval, sigma_root, speed_function,
    speed_threshold, LinearCoefficients, ScalarCharProblem,
};
use serde::Serialize;

use crate::config::{require, RunConfig};
use crate::error::{CliError, Context};
use crate::manifest::{Assertion, Outcome};

#[derive(Debug, Serialize)]
struct RootsJson {
    gamma: f64,
    eps_h: f64,
    sigma: Option<f64>,
    c_threshold: Option<f64>,
    c: Option<f64>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    lambda_c: Option<f64>,
    gamma0: Option<f64>,
    #[serde(rename = "A0_proof")]
    a0_proof: f64,
    #[serde(rename = "A0_stated")]
    a0_stated: f64,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lin = require(&cfg.linear, "linear")?;
    let coeffs = LinearCoefficients::new(lin.m, lin.p, lin.q, lin.d, lin.h).ctx("charspec")?;
    let env = gamma_root(&coeffs).ctx("charspec")?;
    let amp = decay_amplitude(&coeffs, lin.c_u0.unwrap_or(1.0)).ctx("charspec")?;
    let sigma = sigma_root(&coeffs).ok();
    let mut out = Outcome::default();

    let (p, q, h) = (lin.p, lin.q, lin.h);
    let res = ScalarCharProblem::new(p, q, h).residual(env.gamma).abs();
    out.check(Assertion::at_most("gamma.residual", res, 1e-12 * (1.0 + env.gamma.abs())));
    let sign_ok = if p + q < 0.0 { env.gamma < 0.0 } else { env.gamma == 0.0 };
    out.check(Assertion::flag(
        "gamma.sign",
        sign_ok,
        format!("p + q = {}, gamma = {}", p + q, env.gamma),
    ));
    if let Some(s) = sigma {
        let a = p - 0.25 * lin.m * lin.m;
        let res = ScalarCharProblem::new(a, q, h).residual(s).abs();
        out.check(Assertion::at_most("sigma.residual", res, 1e-12 * (1.0 + s.abs())));
    }
    let zetas: Vec<f64> = (1..=200).map(|i| 0.1 * i as f64).collect();
    let gauss = check_gauss_bounds(&coeffs, &zetas).ctx("charspec")?;
    out.check(Assertion {
        name: "gauss_bounds".into(),
        passed: gauss.passed(),
        margin: gauss.min_lower_margin.min(gauss.min_upper_margin),
        detail: format!("{} violations over {} samples", gauss.violations.len(), zetas.len()),
    });

    let mut json = RootsJson {
        gamma: env.gamma,
        eps_h: env.eps_h,
        sigma,
        c_threshold: None,
        c: None,
        lambda1: None,
        lambda2: None,
        lambda_c: None,
        gamma0: None,
        a0_proof: amp.proof,
        a0_stated: amp.stated,
    };
    if let Some(w) = &cfg.wave {
        let wh = w.h.unwrap_or(h);
        let threshold = speed_threshold(w.l_g, wh).ctx("charspec")?;
        json.c_threshold = Some(threshold);
        let c = match (w.c, w.c_offset) {
            (Some(_), Some(_)) => return Err(CliError::Config("[wave] takes `c` or `c_offset`, not both".into())),
            (Some(c), None) => Some(c),
            (None, Some(off)) => Some(threshold + off),
            (None, None) => None,
        };
        if let Some(c) = c {
            let roots = lambda_interval(c, w.l_g, wh).ctx("charspec")?;
            let worst = speed_function(c, w.l_g, wh, roots.lambda1)
                .abs()
                .max(speed_function(c, w.l_g, wh, roots.lambda2).abs());
            out.check(Assertion::at_most("speed_roots.residual", worst, 1e-10));
            json.c = Some(c);
            json.lambda1 = Some(roots.lambda1);
            json.lambda2 = Some(roots.lambda2);
            if let Some(l_i) = w.l_i {
                let (lam, g0) = best_gamma0(c, w.l_g, l_i, wh).ctx("charspec")?;
                json.lambda_c = Some(lam);
                json.gamma0 = Some(g0);
            }
        }
    }
    out.set("gamma", json.gamma);
    out.set("eps_h", json.eps_h);
    out.set("sigma", json.sigma);
    out.set("c_threshold", json.c_threshold);
    out.set("gamma0", json.gamma0);
    out.json("roots.json", &json);
    Ok(out)
}
