use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub nrmse: f64,
    pub mean_abs_err: f64,
}

/// Error of `z` against `target`, normalized by the target's standard
/// deviation.
pub fn evaluate(z: &[f64], target: &[f64]) -> Result<Metrics> {
    if z.len() != target.len() {
        return Err(Error::invalid(format!(
            "trace length mismatch: {} vs {}",
            z.len(),
            target.len()
        )));
    }
    if z.is_empty() {
        return Err(Error::invalid("cannot evaluate empty traces"));
    }
    let n = z.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let var = target.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::Numerical(
            "target is constant; NRMSE normalization divides by zero".into(),
        ));
    }
    let mse = z.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    let mae = z.iter().zip(target).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    Ok(Metrics {
        nrmse: (mse / var).sqrt(),
        mean_abs_err: mae,
    })
}
