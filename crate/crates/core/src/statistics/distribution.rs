use rayon::prelude::*;

use super::hypothesis::{mean, variance};
use super::sampling::sample_positions_with;
use crate::density::{Kernel, TargetDensity};
use crate::error::{Error, Result};
use crate::error_metric::{BlobNormalization, GridEvaluator};
use crate::quadrature::QuadratureRule;
use crate::rng::{stream, Purpose};
use crate::special::{normal_cdf, normal_pdf};

/// Smallest Monte Carlo sample count accepted for a fit.
pub const MIN_SAMPLES: usize = 30;
/// Fits with a larger residual RMS are flagged as non-normal.
pub const NORMAL_RMS_LIMIT: f64 = 0.05;

/// Least-squares fit of a normal CDF to an empirical CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFit {
    pub mu: f64,
    pub sigma: f64,
    /// Root-mean-square residual over the plotting positions.
    pub rms: f64,
    /// Largest absolute residual.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDistribution {
    /// Sorted ascending.
    pub samples: Vec<f64>,
    pub fit: NormalFit,
    pub sample_mean: f64,
    pub sample_std: f64,
    pub normal: bool,
}

impl ErrorDistribution {
    /// Builds the distribution from raw error samples in any order.
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::param(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if let Some(v) = samples.iter().find(|v| !(0.0..=2.0).contains(*v)) {
            return Err(Error::param(format!("error sample {v} outside [0, 2]")));
        }
        samples.sort_by(f64::total_cmp);
        let fit = fit_normal_cdf(&samples)?;
        Ok(ErrorDistribution {
            sample_mean: mean(&samples),
            sample_std: variance(&samples).sqrt(),
            normal: fit.rms <= NORMAL_RMS_LIMIT,
            fit,
            samples,
        })
    }

    /// `(e, empirical, fitted)` at every sample.
    pub fn cdf_table(&self) -> Vec<(f64, f64, f64)> {
        let m = self.samples.len() as f64;
        self.samples
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, (k + 1) as f64 / m, normal_cdf((e - self.fit.mu) / self.fit.sigma)))
            .collect()
    }
}

/// Fits `F(z) = Phi((z - mu) / sigma)` to the points `(x_(k), k / M)` by
/// damped Gauss-Newton. `sorted` must be ascending.
pub fn fit_normal_cdf(sorted: &[f64]) -> Result<NormalFit> {
    let m = sorted.len();
    if m < 3 {
        return Err(Error::Fit("need at least three samples for a CDF fit".into()));
    }
    let target: Vec<f64> = (1..=m).map(|k| k as f64 / m as f64).collect();
    let sse = |mu: f64, sigma: f64| -> f64 {
        sorted
            .iter()
            .zip(&target)
            .map(|(&x, &y)| {
                let r = normal_cdf((x - mu) / sigma) - y;
                r * r
            })
            .sum()
    };
    let mut mu = mean(sorted);
    let mut sigma = variance(sorted).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::Fit("samples have zero spread".into()));
    }
    let mut cost = sse(mu, sigma);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // normal equations in (mu, ln sigma)
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in sorted.iter().zip(&target) {
            let z = (x - mu) / sigma;
            let r = normal_cdf(z) - y;
            let phi = normal_pdf(z);
            let j1 = -phi / sigma;
            let j2 = -phi * z;
            a11 += j1 * j1;
            a12 += j1 * j2;
            a22 += j2 * j2;
            g1 += j1 * r;
            g2 += j2 * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let b11 = a11 * (1.0 + lambda);
            let b22 = a22 * (1.0 + lambda);
            let det = b11 * b22 - a12 * a12;
            if det <= 0.0 {
                lambda *= 10.0;
                continue;
            }
            let d1 = -(b22 * g1 - a12 * g2) / det;
            let d2 = -(b11 * g2 - a12 * g1) / det;
            let (mu_n, sigma_n) = (mu + d1, sigma * d2.exp());
            let c = sse(mu_n, sigma_n);
            if c < cost {
                let rel = (cost - c) / cost.max(1e-300);
                mu = mu_n;
                sigma = sigma_n;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let max_deviation = sorted
        .iter()
        .zip(&target)
        .map(|(&x, &y)| (normal_cdf((x - mu) / sigma) - y).abs())
        .fold(0.0, f64::max);
    Ok(NormalFit {
        mu,
        sigma,
        rms: (cost / m as f64).sqrt(),
        max_deviation,
    })
}

/// Monte Carlo estimate of the error distribution for i.i.d. positions.
///
/// Draw `k` uses the stream `(seed, k)`, so results do not depend on the
/// thread count. Blobs are normalized by `N`.
pub fn estimate_error_distribution(
    rho: &TargetDensity,
    n: usize,
    delta: f64,
    kernel: Kernel,
    samples: usize,
    rule: &QuadratureRule,
    seed: u64,
) -> Result<ErrorDistribution> {
    if samples < MIN_SAMPLES {
        return Err(Error::param(format!("need at least {MIN_SAMPLES} Monte Carlo samples")));
    }
    if n == 0 {
        return Err(Error::param("need at least one robot"));
    }
    if !(delta > 0.0) {
        return Err(Error::param("delta must be positive"));
    }
    let ev = GridEvaluator::new(rho, rule)?;
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, Purpose::MonteCarlo, k);
            let pos = sample_positions_with(rho, n, &mut rng)?;
            ev.error(&pos, delta, kernel, BlobNormalization::Count)
        })
        .collect::<Result<_>>()?;
    ErrorDistribution::from_samples(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_normal_parameters() {
        let mut rng = stream(5, Purpose::Fuzz, 0);
        let d = Normal::new(0.5, 0.03).unwrap();
        let mut xs: Vec<f64> = (0..2000).map(|_| d.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let fit = fit_normal_cdf(&xs).unwrap();
        assert!((fit.mu - 0.5).abs() < 0.003, "{fit:?}");
        assert!((fit.sigma - 0.03).abs() < 0.003, "{fit:?}");
        assert!(fit.rms < 0.02);
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = stream(6, Purpose::Fuzz, 0);
        let d = Normal::new(1.0, 0.1).unwrap();
        let xs: Vec<f64> = (0..100).map(|_| d.sample(&mut rng)).collect();
        let mut rev = xs.clone();
        rev.reverse();
        assert_eq!(
            ErrorDistribution::from_samples(xs).unwrap(),
            ErrorDistribution::from_samples(rev).unwrap()
        );
    }

    #[test]
    fn rejects_small_or_bad_samples() {
        assert!(ErrorDistribution::from_samples(vec![0.5; 10]).is_err());
        let mut v: Vec<f64> = (0..40).map(|k| 0.4 + k as f64 * 1e-3).collect();
        v[3] = 2.5;
        assert!(ErrorDistribution::from_samples(v).is_err());
    }
}
