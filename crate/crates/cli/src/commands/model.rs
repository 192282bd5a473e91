use delayfront::birthfuncs::{check_m, interval_data, MonostabilityReport};
use delayfront::charspec::speed_threshold;
use serde::Serialize;

use crate::config::{require, RunConfig};
use crate::error::{CliError, Context};
use crate::manifest::{Assertion, Outcome};

#[derive(Debug, Serialize)]
struct ModelJson {
    family: &'static str,
    h: f64,
    kappa: Option<f64>,
    #[serde(rename = "L_g")]
    l_g: f64,
    g_prime_0: f64,
    g_prime_kappa: Option<f64>,
    #[serde(rename = "M_g")]
    max_g: Option<f64>,
    #[serde(rename = "m_g")]
    min_g: Option<f64>,
    #[serde(rename = "L_I")]
    l_i: Option<f64>,
    zeta1: Option<f64>,
    zeta2: Option<f64>,
    #[serde(rename = "K")]
    k: Option<f64>,
    #[serde(rename = "m_K")]
    m_k: Option<f64>,
    g_star_plus: f64,
    #[serde(rename = "c_L_g")]
    c_l_g: Option<f64>,
    c_g_star_plus: Option<f64>,
    contraction: Option<bool>,
    subtangential: Option<bool>,
    b_violations: Vec<String>,
    monostability: MonostabilityReport,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = require(&cfg.model, "model")?.build()?;
    let bf = &model.bf;
    let mono = check_m(bf);
    let l_g = bf.lipschitz_global();
    let g_star_plus = bf.g_star_plus();
    let threshold = |l: f64| speed_threshold(l, model.h).ok();
    let mut json = ModelJson {
        family: bf.family(),
        h: model.h,
        kappa: mono.kappa,
        l_g,
        g_prime_0: bf.g_prime_0(),
        g_prime_kappa: mono.g_prime_kappa,
        max_g: None,
        min_g: None,
        l_i: None,
        zeta1: None,
        zeta2: None,
        k: None,
        m_k: None,
        g_star_plus,
        c_l_g: threshold(l_g),
        c_g_star_plus: threshold(g_star_plus),
        contraction: None,
        subtangential: None,
        b_violations: Vec::new(),
        monostability: mono.clone(),
    };
    let mut out = Outcome::default();
    out.check(Assertion::flag(
        "monostability",
        mono.passes_m,
        format!("fixed points {:?}, g'(0) = {}", mono.fixed_points, mono.g_prime_0),
    ));
    if mono.passes_m {
        let d = interval_data(bf).ctx("birthfuncs")?;
        out.check(Assertion::flag("b_conditions", d.b_violations.is_empty(), d.b_violations.join("; ")));
        json.max_g = Some(d.max_g);
        json.min_g = Some(d.min_g);
        json.l_i = Some(d.l_i);
        json.zeta1 = Some(d.zeta1);
        json.zeta2 = Some(d.zeta2);
        json.k = Some(d.k);
        json.m_k = Some(d.m_k);
        json.contraction = Some(d.contraction);
        json.subtangential = Some(d.subtangential);
        json.b_violations = d.b_violations;
    }
    out.set("kappa", json.kappa);
    out.set("L_g", json.l_g);
    out.set("L_I", json.l_i);
    out.set("c_L_g", json.c_l_g);
    out.json("model.json", &json);
    Ok(out)
}
