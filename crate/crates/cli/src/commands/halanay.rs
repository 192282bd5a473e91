use std::f64::consts::PI;

use delayfront::halanay::{check_halanay, integrate_dde, HalanayReport, ScalarDde, HALANAY_TOLERANCE};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{require, HistoryPreset, RunConfig};
use crate::error::{CliError, Context};
use crate::manifest::{Assertion, Outcome};
use crate::output::Table;

/// A few random Fourier modes on `[-h, 0]`, so the history is smooth but not
/// monotone.
#[derive(Debug, Clone)]
struct RandomHistory {
    modes: Vec<(Complex64, f64, f64)>,
}

impl RandomHistory {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let modes = (0..4)
            .map(|j| {
                let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (amp, j as f64, rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        Self { modes }
    }

    fn eval(&self, s: f64, h: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|&(a, j, phase)| a * (j * PI * s / h + phase).cos())
            .sum()
    }
}

#[derive(Debug, Serialize)]
struct HalanayJson {
    sigma: [f64; 2],
    k: [f64; 2],
    h: f64,
    steps_per_delay: usize,
    passed: bool,
    reports: Vec<HalanayReport>,
}

pub fn run(cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let b = require(&cfg.halanay, "halanay")?;
    let sigma = Complex64::new(b.sigma[0], b.sigma[1]);
    let k = Complex64::new(b.k[0], b.k[1]);
    let n = b
        .steps_per_delay
        .unwrap_or_else(|| ((b.h * (sigma.norm() + k.norm()) / 0.02).ceil() as usize).max(16));
    let count = b.count.unwrap_or(1).max(1);
    let h = b.h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let histories: Vec<Box<dyn Fn(f64) -> Complex64 + Send + Sync>> = (0..count)
        .map(|i| -> Box<dyn Fn(f64) -> Complex64 + Send + Sync> {
            match b.preset {
                HistoryPreset::Constant => Box::new(move |_| Complex64::new(1.0 + i as f64, 0.0)),
                HistoryPreset::Cosine => Box::new(move |s| Complex64::new((PI * (i + 1) as f64 * s / h).cos(), 0.0)),
                HistoryPreset::Random => {
                    let r = RandomHistory::draw(&mut rng);
                    Box::new(move |s| r.eval(s, h))
                }
            }
        })
        .collect();
    let problems: Vec<ScalarDde> = histories
        .iter()
        .map(|f| ScalarDde::from_fn(sigma, k, h, n, b.t_end, f))
        .collect::<delayfront::Result<_>>()
        .ctx("halanay")?;
    let reports: Vec<HalanayReport> = problems
        .par_iter()
        .map(|p| check_halanay(p, b.scheme))
        .collect::<delayfront::Result<_>>()
        .ctx("halanay")?;

    let mut out = Outcome::default();
    for (i, r) in reports.iter().enumerate() {
        out.check(Assertion::at_most(
            format!("halanay[{i}]"),
            r.worst_ratio,
            1.0 + HALANAY_TOLERANCE,
        ));
    }
    let traj = integrate_dde(&problems[0], b.scheme);
    let mut table = Table::new(&["t", "re", "im", "abs"]);
    for (t, v) in traj.times.iter().zip(&traj.values) {
        table.row(&[*t, v.re, v.im, v.norm()]);
    }
    out.file("halanay.csv", table.render());
    out.set("lambda", reports[0].lambda);
    out.set("steps_per_delay", n);
    out.set(
        "worst_ratio",
        reports.iter().map(|r| r.worst_ratio).fold(0.0f64, f64::max),
    );
    let json = HalanayJson {
        sigma: b.sigma,
        k: b.k,
        h,
        steps_per_delay: n,
        passed: out.passed(),
        reports,
    };
    out.json("halanay.json", &json);
    Ok(out)
}
