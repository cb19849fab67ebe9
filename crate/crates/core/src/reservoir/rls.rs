//! Linear readout and its recursive-least-squares trainer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Readout weights and the running inverse correlation matrix (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlsState {
    pub w: Vec<f64>,
    pub p: Vec<f64>,
    n: usize,
    #[serde(skip)]
    k: Vec<f64>,
}

impl RlsState {
    /// Zero weights and `P = I / alpha`.
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("RLS alpha must be > 0, got {alpha}")));
        }
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            p[i * n + i] = 1.0 / alpha;
        }
        Ok(RlsState {
            w: vec![0.0; n],
            p,
            n,
            k: vec![0.0; n],
        })
    }

    pub fn with_weights(w: Vec<f64>, alpha: f64) -> Result<Self> {
        let mut s = RlsState::new(w.len(), alpha)?;
        s.w = w;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn p_at(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// Largest absolute entry of `P - P^T`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.p[i * n + j] - self.p[j * n + i]).abs());
            }
        }
        worst
    }
}

/// `z = w . r`.
pub fn readout(r: &[f64], w: &[f64]) -> Result<f64> {
    if r.len() != w.len() {
        return Err(Error::invalid(format!(
            "readout length mismatch: state {} vs weights {}",
            r.len(),
            w.len()
        )));
    }
    Ok(r.iter().zip(w).map(|(a, b)| a * b).sum())
}

/// One RLS step on sample `r` whose current output is `z`:
///
/// ```text
/// e = z - target;  k = P r;  c = 1 / (1 + r.k)
/// P <- P - c k k^T;  w <- w - c e k
/// ```
pub fn rls_update(rls: &mut RlsState, r: &[f64], z: f64, target: f64) -> Result<()> {
    let n = rls.n;
    if r.len() != n {
        return Err(Error::invalid(format!(
            "RLS state length {} does not match dimension {n}",
            r.len()
        )));
    }
    if !z.is_finite() || !target.is_finite() || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite input to RLS update".into()));
    }
    if rls.k.len() != n {
        rls.k = vec![0.0; n];
    }
    let e = z - target;
    for i in 0..n {
        let row = &rls.p[i * n..(i + 1) * n];
        rls.k[i] = row.iter().zip(r).map(|(a, b)| a * b).sum();
    }
    let rk: f64 = r.iter().zip(&rls.k).map(|(a, b)| a * b).sum();
    let c = 1.0 / (1.0 + rk);
    if !c.is_finite() {
        return Err(Error::Numerical(format!(
            "RLS gain denominator degenerate (r.Pr = {rk})"
        )));
    }
    for i in 0..n {
        let ck = c * rls.k[i];
        let row = &mut rls.p[i * n..(i + 1) * n];
        for (pij, kj) in row.iter_mut().zip(&rls.k) {
            *pij -= ck * kj;
        }
        rls.w[i] -= e * ck;
    }
    Ok(())
}
