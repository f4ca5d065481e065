use crate::error::{Error, Result};

use super::{LengthSpectrum, PairSet};

/// Number of geometric grid points used by [`fit_counting_params`].
pub const FIT_SAMPLES: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct CountingFit {
    pub c0: f64,
    pub gamma: f64,
    /// Largest `|c0·λ^(1+gamma)/ρ(λ) − 1|` over the sample grid.
    pub residual: f64,
    pub samples: Vec<(f64, u64)>,
}

/// Least-squares fit of `ln ρ(λ)` against `ln λ` on a geometric grid over `[lambda_min, lambda_max]`.
pub fn fit_counting_params(
    spectrum: &LengthSpectrum,
    lambda_min: f64,
    lambda_max: f64,
    pairs: PairSet,
) -> Result<CountingFit> {
    if !(lambda_min > 0.0 && lambda_min < lambda_max && lambda_max.is_finite()) {
        return Err(Error::FitFailure(format!(
            "degenerate range [{lambda_min}, {lambda_max}]"
        )));
    }
    let first = spectrum.counting_function(lambda_min, pairs)?;
    if first < 10 {
        return Err(Error::FitFailure(format!(
            "rho({lambda_min}) = {first} < 10; raise lambda_min"
        )));
    }
    let ratio = lambda_max / lambda_min;
    let mut samples = Vec::with_capacity(FIT_SAMPLES);
    for i in 0..FIT_SAMPLES {
        let lambda = if i + 1 == FIT_SAMPLES {
            lambda_max
        } else {
            lambda_min * ratio.powf(i as f64 / (FIT_SAMPLES - 1) as f64)
        };
        samples.push((lambda, spectrum.counting_function(lambda, pairs)?));
    }
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(l, r) in &samples {
        let (x, y) = (l.ln(), (r as f64).ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::FitFailure("singular design matrix".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let c0 = intercept.exp();
    let residual = samples
        .iter()
        .map(|&(l, r)| (c0 * l.powf(slope) / r as f64 - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(CountingFit {
        c0,
        gamma: slope - 1.0,
        residual,
        samples,
    })
}
