use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `log S = rate t + power log t + amplitude`
    #[default]
    ExpPower,
    /// `log S = rate t + amplitude`, power pinned to 0
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub power: f64,
    pub amplitude: f64,
    pub residual_rms: f64,
    pub samples: usize,
}

impl DecayFit {
    /// Least-squares fit of `log values` over samples with `t > t_min`.
    pub fn fit(times: &[f64], values: &[f64], t_min: f64, model: FitModel) -> Result<Self> {
        let pts: Vec<(f64, f64)> = times
            .iter()
            .zip(values)
            .filter(|(t, _)| **t > t_min)
            .map(|(t, v)| (*t, *v))
            .collect();
        if pts.len() < MIN_FIT_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "decay fit needs {MIN_FIT_SAMPLES} samples with t > {t_min}, got {}",
                pts.len()
            )));
        }
        if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-positive sample {v} at t = {t}")));
        }
        let cols = match model {
            FitModel::ExpPower => 3,
            FitModel::Exp => 2,
        };
        let a = DMatrix::from_fn(pts.len(), cols, |r, c| {
            let t = pts[r].0;
            match c {
                0 => t,
                1 => 1.0,
                _ => t.ln(),
            }
        });
        let b = DVector::from_iterator(pts.len(), pts.iter().map(|(_, v)| v.ln()));
        let x = a
            .clone()
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::InvalidInput(format!("decay fit: {e}")))?;
        let resid = &a * &x - &b;
        Ok(DecayFit {
            rate: x[0],
            amplitude: x[1],
            power: if cols == 3 { x[2] } else { 0.0 },
            residual_rms: (resid.norm_squared() / pts.len() as f64).sqrt(),
            samples: pts.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_law() {
        let t: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let v: Vec<f64> = t.iter().map(|t| 0.3 * (-0.44 * t).exp() / t.sqrt()).collect();
        let f = DecayFit::fit(&t, &v, 0.5, FitModel::ExpPower).unwrap();
        assert!((f.rate + 0.44).abs() < 1e-10);
        assert!((f.power + 0.5).abs() < 1e-9);
        assert!((f.amplitude - 0.3f64.ln()).abs() < 1e-9);
        assert!(f.residual_rms < 1e-10);
        let f = DecayFit::fit(&t, &v.iter().map(|v| v * t[0].sqrt()).collect::<Vec<_>>(), 0.5, FitModel::Exp);
        assert!(f.unwrap().power == 0.0);
    }

    #[test]
    fn needs_enough_samples() {
        let t: Vec<f64> = (1..=19).map(|i| i as f64).collect();
        let v = vec![1.0; 19];
        assert!(DecayFit::fit(&t, &v, 0.0, FitModel::Exp).is_err());
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let v = vec![1.0; 40];
        // only samples past t_min count
        assert!(DecayFit::fit(&t, &v, 2.5, FitModel::Exp).is_err());
    }
}
