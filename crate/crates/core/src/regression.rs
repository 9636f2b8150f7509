//! Least-squares fit of accuracy on the two similarity-ratio components:
//! `acc = β1·x1 + β2·x2 + α + ε`, with `x1` the mean top-K similarity and
//! `x2` the mean similarity against the base set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Condition numbers above this are treated as collinear.
const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionSample {
    pub acc: f64,
    pub x1: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub beta1: f64,
    pub beta2: f64,
    pub alpha: f64,
    pub r_squared: f64,
    /// 95% half-widths for (β1, β2, α), homoskedastic normal theory
    pub ci95: [f64; 3],
    pub std_errors: [f64; 3],
    pub samples: usize,
    pub residual_std: f64,
}

impl RegressionFit {
    pub fn predict(&self, x1: f64, x2: f64) -> f64 {
        self.beta1 * x1 + self.beta2 * x2 + self.alpha
    }

    /// `Xᵀ(y − Xβ)`; zero at the least-squares solution.
    pub fn normal_equation_residual(&self, samples: &[RegressionSample]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for s in samples {
            let e = s.acc - self.predict(s.x1, s.x2);
            out[0] += s.x1 * e;
            out[1] += s.x2 * e;
            out[2] += e;
        }
        out
    }
}

pub fn fit_sr_regression(samples: &[RegressionSample]) -> Result<RegressionFit> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!("regression needs at least 4 samples, got {n}")));
    }
    if samples.iter().any(|s| !(s.acc.is_finite() && s.x1.is_finite() && s.x2.is_finite())) {
        return Err(Error::NonFinite(None));
    }
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => samples[i].x1,
        1 => samples[i].x2,
        _ => 1.0,
    });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.acc));

    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::Collinear { condition });
    }
    let beta = svd.solve(&y, 0.0).map_err(|e| Error::InvalidInput(e.to_string()))?;

    let fitted = &x * &beta;
    let resid = &y - fitted;
    let ssr = resid.norm_squared();
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 0.0 };

    let df = (n - 3) as f64;
    let sigma2 = ssr / df;
    let xtx_inv = (x.transpose() * &x).try_inverse().ok_or(Error::Collinear { condition })?;
    let std_errors = [0, 1, 2].map(|i| (sigma2 * xtx_inv[(i, i)]).max(0.0).sqrt());
    let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidInput(e.to_string()))?.inverse_cdf(0.975);
    Ok(RegressionFit {
        beta1: beta[0],
        beta2: beta[1],
        alpha: beta[2],
        r_squared,
        ci95: std_errors.map(|se| t * se),
        std_errors,
        samples: n,
        residual_std: sigma2.sqrt(),
    })
}
