use rayon::prelude::*;
use serde::Serialize;

use crate::config::{require, ExperimentBlock, ExperimentKind, RunConfig, SweepParameter, SweepTarget};
use crate::error::CliError;
use crate::manifest::{Assertion, Outcome};
use crate::output::{fmt_num, line_plot, Series, Table};

#[derive(Debug, Serialize)]
struct Point {
    index: usize,
    value: f64,
    fitted_rate: Option<f64>,
    predicted_rate: Option<f64>,
    verdict: &'static str,
    error: Option<String>,
    assertions: Vec<Assertion>,
}

fn point_config(base: &RunConfig, target: SweepTarget, param: SweepParameter, v: f64) -> Result<RunConfig, CliError> {
    let mut cfg = base.clone();
    let bad = || CliError::Config(format!("sweep parameter {param:?} does not apply to target {target:?}"));
    match target {
        SweepTarget::Linear => {
            let lin = cfg
                .linear
                .as_mut()
                .ok_or_else(|| CliError::Config("missing [linear] block".into()))?;
            match param {
                SweepParameter::H => lin.h = v,
                SweepParameter::M => lin.m = v,
                SweepParameter::P => lin.p = v,
                SweepParameter::Q => lin.q = v,
                SweepParameter::C | SweepParameter::COffset => return Err(bad()),
            }
        }
        SweepTarget::Stability => {
            let exp = cfg
                .experiment
                .get_or_insert_with(|| ExperimentBlock::new(ExperimentKind::Global));
            match param {
                SweepParameter::C => {
                    exp.c = Some(v);
                    exp.c_offset = None;
                }
                SweepParameter::COffset => {
                    exp.c = None;
                    exp.c_offset = Some(v);
                }
                SweepParameter::H => {
                    cfg.model
                        .as_mut()
                        .ok_or_else(|| CliError::Config("missing [model] block".into()))?
                        .h = v
                }
                _ => return Err(bad()),
            }
        }
    }
    Ok(cfg)
}

pub fn run(cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let sweep = *require(&cfg.sweep, "sweep")?;
    let values = sweep.values();
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|&v| point_config(cfg, sweep.target, sweep.parameter, v))
        .collect::<Result<_, _>>()?;
    let points: Vec<Point> = configs
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(index, (pc, &value))| {
            let res = match sweep.target {
                SweepTarget::Linear => super::linear::run(pc),
                SweepTarget::Stability => super::wave::stability(pc, seed),
            };
            match res {
                Ok(o) => Point {
                    index,
                    value,
                    fitted_rate: o.rates.map(|r| r.0),
                    predicted_rate: o.rates.map(|r| r.1),
                    verdict: if o.passed() { "pass" } else { "fail" },
                    error: None,
                    assertions: o.assertions,
                },
                Err(e) => Point {
                    index,
                    value,
                    fitted_rate: None,
                    predicted_rate: None,
                    verdict: "error",
                    error: Some(e.to_string()),
                    assertions: Vec::new(),
                },
            }
        })
        .collect();

    let mut out = Outcome::default();
    let mut table = Table::new(&["index", "parameter", "fitted_rate", "predicted_rate", "verdict"]);
    for p in &points {
        let margin = p
            .assertions
            .iter()
            .map(|a| a.margin)
            .fold(f64::INFINITY, f64::min);
        out.check(Assertion {
            name: format!("point[{}]", p.index),
            passed: p.verdict == "pass",
            margin: if p.error.is_some() { -1.0 } else { margin },
            detail: p.error.clone().unwrap_or_else(|| {
                let failed: Vec<&str> = p.assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect();
                format!("value {}, failed {failed:?}", p.value)
            }),
        });
        table.row_text(vec![
            p.index.to_string(),
            fmt_num(p.value),
            fmt_num(p.fitted_rate.unwrap_or(f64::NAN)),
            fmt_num(p.predicted_rate.unwrap_or(f64::NAN)),
            p.verdict.to_string(),
        ]);
    }
    out.set("parameter", sweep.parameter);
    out.set("points", points.len());
    out.file("sweep.csv", table.render());
    let series = |f: fn(&Point) -> Option<f64>| -> Vec<(f64, f64)> {
        points.iter().filter_map(|p| f(p).map(|r| (p.value, r))).collect()
    };
    out.file(
        "sweep.svg",
        line_plot(
            "sweep",
            &format!("{:?}", sweep.parameter),
            "rate",
            &[
                Series { name: "fitted", points: series(|p| p.fitted_rate) },
                Series { name: "predicted", points: series(|p| p.predicted_rate) },
            ],
            false,
        ),
    );
    out.json("sweep.json", &points);
    Ok(out)
}
