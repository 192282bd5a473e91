//! Run configuration: a sectioned `key = value` file (TOML syntax).

use std::path::Path;

use delayfront::birthfuncs::BirthFunction;
use delayfront::halanay::Scheme;
use delayfront::linsolve::{Backend, FitModel};
use delayfront::rdwave::{PerturbationShape, StepDatum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Roots,
    Halanay,
    Model,
    Linear,
    Profile,
    Stability,
    Sweep,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Self::Roots => "roots",
            Self::Halanay => "halanay",
            Self::Model => "model",
            Self::Linear => "linear",
            Self::Profile => "profile",
            Self::Stability => "stability",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<Subcommand>,
    pub seed: Option<u64>,
    pub model: Option<ModelBlock>,
    pub linear: Option<LinearBlock>,
    pub wave: Option<WaveBlock>,
    pub halanay: Option<HalanayBlock>,
    #[serde(default)]
    pub numerics: NumericsBlock,
    pub experiment: Option<ExperimentBlock>,
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Nicholson,
    MackeyGlass,
    CustomMonotone,
    Linear,
}

/// Birth function and delay. With `delta` (Nicholson) or `d` (Mackey-Glass)
/// the parameters are raw and get rescaled to unit decay and diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub family: Family,
    pub h: f64,
    pub p: Option<f64>,
    pub delta: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n: Option<f64>,
    pub d: Option<f64>,
    pub knots: Option<Vec<[f64; 2]>>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaling {
    pub time_factor: f64,
    pub space_factor: f64,
    pub h_raw: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub bf: BirthFunction,
    pub h: f64,
    pub rescaling: Option<Rescaling>,
}

impl ModelBlock {
    fn allowed(&self) -> &'static [&'static str] {
        match self.family {
            Family::Nicholson => &["p", "delta"],
            Family::MackeyGlass => &["a", "b", "n", "d"],
            Family::CustomMonotone => &["knots"],
            Family::Linear => &["slope"],
        }
    }

    pub fn build(&self) -> Result<Model, CliError> {
        let present = [
            ("p", self.p.is_some()),
            ("delta", self.delta.is_some()),
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("n", self.n.is_some()),
            ("d", self.d.is_some()),
            ("knots", self.knots.is_some()),
            ("slope", self.slope.is_some()),
        ];
        for (key, set) in present {
            if set && !self.allowed().contains(&key) {
                return Err(CliError::Config(format!(
                    "[model] key `{key}` does not apply to family {:?}",
                    self.family
                )));
            }
        }
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| CliError::Config(format!("[model] needs `{key}`")));
        let raw = |r: delayfront::Result<(BirthFunction, f64, f64)>| -> Result<Model, CliError> {
            let (bf, time, space) = r.map_err(|e| CliError::from_core("birthfuncs", e))?;
            Ok(Model {
                bf,
                h: self.h * time,
                rescaling: Some(Rescaling {
                    time_factor: time,
                    space_factor: space,
                    h_raw: self.h,
                    h: self.h * time,
                }),
            })
        };
        let plain = |r: delayfront::Result<BirthFunction>| -> Result<Model, CliError> {
            Ok(Model {
                bf: r.map_err(|e| CliError::from_core("birthfuncs", e))?,
                h: self.h,
                rescaling: None,
            })
        };
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(CliError::Config(format!("[model] h = {} must be positive", self.h)));
        }
        match self.family {
            Family::Nicholson => {
                let p = need(self.p, "p")?;
                match self.delta {
                    Some(delta) => raw(BirthFunction::nicholson_raw(delta, p)),
                    None => plain(BirthFunction::nicholson(p)),
                }
            }
            Family::MackeyGlass => {
                let (a, b, n) = (need(self.a, "a")?, need(self.b, "b")?, need(self.n, "n")?);
                match self.d {
                    Some(d) => raw(BirthFunction::mackey_glass_raw(d, a, b, n)),
                    None => plain(BirthFunction::mackey_glass(a, b, n)),
                }
            }
            Family::CustomMonotone => {
                let knots = self
                    .knots
                    .as_ref()
                    .ok_or_else(|| CliError::Config("[model] needs `knots`".into()))?;
                plain(BirthFunction::custom_monotone(knots.iter().map(|k| (k[0], k[1])).collect()))
            }
            Family::Linear => plain(BirthFunction::linear(need(self.slope, "slope")?)),
        }
    }
}

/// `u_t = u_xx + m u_x + p u + q u(t-h, x+d)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearBlock {
    #[serde(default)]
    pub m: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub d: f64,
    pub h: f64,
    /// Data constant for the amplitude `A₀`; `roots` only.
    pub c_u0: Option<f64>,
}

/// Speed data for `roots`: `L_g` sets `c(L_g)` and the roots `λ₁ < λ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveBlock {
    pub l_g: f64,
    pub l_i: Option<f64>,
    pub c: Option<f64>,
    pub c_offset: Option<f64>,
    /// Defaults to the `[linear]` delay.
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HistoryPreset {
    Constant,
    Cosine,
    #[default]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalanayBlock {
    pub sigma: [f64; 2],
    pub k: [f64; 2],
    pub h: f64,
    pub t_end: f64,
    pub steps_per_delay: Option<usize>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub preset: HistoryPreset,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    pub width: Option<f64>,
    pub n: Option<usize>,
    pub steps_per_delay: Option<usize>,
    pub backend: Option<Backend>,
    pub t_end: Option<f64>,
    pub sample_dt: Option<f64>,
    pub fit_from: Option<f64>,
    pub fit_model: Option<FitModel>,
    pub dx0: Option<f64>,
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub max_time: Option<f64>,
    pub tolerance: Option<f64>,
    pub gain: Option<f64>,
    pub range_tolerance: Option<f64>,
    pub residual_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Decay,
    Profile,
    LeadingEdge,
    Global,
    Uniqueness,
    Comparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinearDatum {
    /// Unit-mass Gaussian of standard deviation `spread`.
    #[default]
    Gaussian,
    /// Unit-mass quartic kernel of half-width `spread`.
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Logistic,
    ClippedExponential,
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    EtaWeighted,
    CompactBump,
    TailSeeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Named(NamedLambda),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedLambda {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub kind: ExperimentKind,
    /// Wave speed, absolute or as an offset above `c(L_g)`.
    pub c: Option<f64>,
    pub c_offset: Option<f64>,
    pub datum: Option<LinearDatum>,
    pub spread: Option<f64>,
    pub output_times: Option<Vec<f64>>,
    pub probes: Option<Vec<f64>>,
    pub step: Option<StepKind>,
    pub offset: Option<f64>,
    pub ramp_width: Option<f64>,
    pub amplitude: Option<f64>,
    pub b: Option<f64>,
    pub shape: Option<ShapeKind>,
    pub width: Option<f64>,
    pub lambda: Option<LambdaSpec>,
    pub trials: Option<usize>,
}

impl ExperimentBlock {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            c: None,
            c_offset: None,
            datum: None,
            spread: None,
            output_times: None,
            probes: None,
            step: None,
            offset: None,
            ramp_width: None,
            amplitude: None,
            b: None,
            shape: None,
            width: None,
            lambda: None,
            trials: None,
        }
    }

    pub fn step_datum(&self) -> Result<StepDatum, CliError> {
        Ok(match self.step.unwrap_or(StepKind::Logistic) {
            StepKind::Logistic => StepDatum::Logistic,
            StepKind::ClippedExponential => StepDatum::ClippedExponential {
                offset: self.offset.unwrap_or(0.0),
            },
            StepKind::Ramp => StepDatum::Ramp {
                width: self.ramp_width.unwrap_or(4.0),
            },
        })
    }

    pub fn shape(&self) -> PerturbationShape {
        let width = self.width.unwrap_or(1.0);
        match self.shape.unwrap_or(ShapeKind::CompactBump) {
            ShapeKind::EtaWeighted => PerturbationShape::EtaWeighted,
            ShapeKind::CompactBump => PerturbationShape::CompactBump { width },
            ShapeKind::TailSeeded => PerturbationShape::TailSeeded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTarget {
    Linear,
    Stability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    C,
    COffset,
    H,
    M,
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub target: SweepTarget,
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepBlock {
    /// `steps` equally spaced values; a single step is `from` alone.
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.from];
        }
        let span = self.to - self.from;
        (0..self.steps)
            .map(|i| self.from + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("parse error at {}", describe(text, &e))))
}

/// `line L, column C: message`, from the byte span toml reports.
fn describe(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("line {line}, column {col}: {msg}")
        }
        None => msg.to_string(),
    }
}

pub fn load(path: &Path) -> Result<(String, RunConfig), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = parse(&text)?;
    Ok((text, cfg))
}

pub fn require<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    block
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("missing [{name}] block")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = parse(
            "subcommand = \"roots\"\nseed = 3\n[linear]\np = -2.0\nq = 1.0\nh = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.subcommand, Some(Subcommand::Roots));
        let lin = cfg.linear.unwrap();
        assert_eq!((lin.m, lin.p, lin.q, lin.d, lin.h), (0.0, -2.0, 1.0, 0.0, 1.0));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse("[linear]\np = -2.0\nqq = 1.0\nh = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("qq"), "{msg}");
    }

    #[test]
    fn family_keys_checked() {
        let cfg = parse("[model]\nfamily = \"nicholson\"\nh = 1.0\np = 2.0\na = 1.0\n").unwrap();
        assert!(cfg.model.unwrap().build().is_err());
    }

    #[test]
    fn raw_parameters_rescale() {
        let cfg = parse("[model]\nfamily = \"nicholson\"\nh = 2.0\np = 4.0\ndelta = 0.5\n").unwrap();
        let m = cfg.model.unwrap().build().unwrap();
        assert_eq!(m.bf, BirthFunction::Nicholson { p: 8.0 });
        assert_eq!(m.h, 1.0);
        let r = m.rescaling.unwrap();
        assert_eq!(r.time_factor, 0.5);
        assert!((r.space_factor - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lambda_forms() {
        let cfg = parse("[experiment]\nkind = \"global\"\nlambda = \"upper\"\n").unwrap();
        assert_eq!(cfg.experiment.unwrap().lambda, Some(LambdaSpec::Named(NamedLambda::Upper)));
        let cfg = parse("[experiment]\nkind = \"global\"\nlambda = 0.7\n").unwrap();
        assert_eq!(cfg.experiment.unwrap().lambda, Some(LambdaSpec::Value(0.7)));
    }

    #[test]
    fn sweep_values() {
        let s = SweepBlock {
            target: SweepTarget::Linear,
            parameter: SweepParameter::H,
            from: 0.5,
            to: 1.5,
            steps: 3,
        };
        assert_eq!(s.values(), vec![0.5, 1.0, 1.5]);
        assert_eq!(SweepBlock { steps: 1, ..s }.values(), vec![0.5]);
    }
}
