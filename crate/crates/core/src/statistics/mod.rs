//! Sampling distribution of the error metric and the controller benchmarks.

mod distribution;
mod hypothesis;
mod sampling;
mod settling;

pub use distribution::{
    estimate_error_distribution, fit_normal_cdf, ErrorDistribution, NormalFit, MIN_SAMPLES, NORMAL_RMS_LIMIT,
};
pub use hypothesis::{mean, two_sample_f_test, two_sample_t_test, variance, FTest, TTest, ALPHA};
pub use sampling::{sample_positions, sample_positions_with, EFFICIENCY_WINDOW, MIN_ACCEPTANCE};
pub use settling::{quantile, relative_error, settling_analysis, third_quartile, Band, SettlingAnalysis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkVerdict {
    pub f_test: FTest,
    /// Controller minus sampled distribution.
    pub t_test: TTest,
    /// Neither test rejects.
    pub consistent: bool,
    /// Confidence bounds of the mean difference relative to the sampled mean.
    pub relative_ci: (f64, f64),
}

impl BenchmarkVerdict {
    pub fn summary(&self) -> String {
        if self.consistent {
            return "controller errors are consistent with i.i.d. sampling from the target".into();
        }
        let (lo, hi) = self.relative_ci;
        if self.t_test.reject && self.t_test.mean_diff > 0.0 {
            format!(
                "controller mean error exceeds the sampled mean by {:.2}% to {:.2}% (95% CI)",
                100.0 * lo,
                100.0 * hi
            )
        } else if self.t_test.reject {
            format!(
                "controller mean error is below the sampled mean by {:.2}% to {:.2}% (95% CI)",
                -100.0 * hi,
                -100.0 * lo
            )
        } else {
            format!("variances differ (F = {:.4}, p = {:.3e}); means agree", self.f_test.f, self.f_test.p_value)
        }
    }
}

/// Compares steady-state controller errors against the sampled distribution.
pub fn benchmark_controller(controller: &[f64], dist: &ErrorDistribution) -> Result<BenchmarkVerdict> {
    if !dist.normal {
        return Err(Error::Test(format!(
            "reference distribution is not approximately normal (fit RMS {:.4})",
            dist.fit.rms
        )));
    }
    let f_test = two_sample_f_test(controller, &dist.samples)?;
    let t_test = two_sample_t_test(controller, &dist.samples)?;
    Ok(BenchmarkVerdict {
        consistent: !f_test.reject && !t_test.reject,
        relative_ci: (t_test.ci.0 / dist.sample_mean, t_test.ci.1 / dist.sample_mean),
        f_test,
        t_test,
    })
}
