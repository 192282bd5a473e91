mod halanay;
mod linear;
mod model;
mod roots;
mod sweep;
mod wave;

use crate::config::{RunConfig, Subcommand};
use crate::error::CliError;
use crate::manifest::Outcome;

pub fn dispatch(sub: Subcommand, cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    match sub {
        Subcommand::Roots => roots::run(cfg),
        Subcommand::Halanay => halanay::run(cfg, seed),
        Subcommand::Model => model::run(cfg),
        Subcommand::Linear => linear::run(cfg),
        Subcommand::Profile => wave::profile(cfg),
        Subcommand::Stability => wave::stability(cfg, seed),
        Subcommand::Sweep => sweep::run(cfg, seed),
    }
}
