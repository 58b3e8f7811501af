use crate::error::{Error, Result};
use crate::special::{fisher_f_upper, student_t_quantile, student_t_two_sided};

/// Significance level used for every reject flag.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTest {
    /// Larger sample variance over the smaller one.
    pub f: f64,
    pub dof_num: f64,
    pub dof_den: f64,
    /// Two-sided.
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub dof: f64,
    pub p_value: f64,
    /// `mean(a) - mean(b)`.
    pub mean_diff: f64,
    /// 95% confidence interval of `mean(a) - mean(b)`.
    pub ci: (f64, f64),
    pub reject: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn moments(xs: &[f64], name: &str) -> Result<(f64, f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::Test(format!("sample {name} needs at least two values")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Test(format!("sample {name} has a non-finite value")));
    }
    let v = variance(xs);
    if v <= 0.0 {
        return Err(Error::Test(format!("sample {name} has zero variance")));
    }
    Ok((mean(xs), v, xs.len() as f64))
}

/// Two-sided F-test for equal variances.
pub fn two_sample_f_test(a: &[f64], b: &[f64]) -> Result<FTest> {
    let (_, va, na) = moments(a, "a")?;
    let (_, vb, nb) = moments(b, "b")?;
    let (f, d1, d2) = if va >= vb {
        (va / vb, na - 1.0, nb - 1.0)
    } else {
        (vb / va, nb - 1.0, na - 1.0)
    };
    let p_value = (2.0 * fisher_f_upper(f, d1, d2)).min(1.0);
    Ok(FTest {
        f,
        dof_num: d1,
        dof_den: d2,
        p_value,
        reject: p_value < ALPHA,
    })
}

/// Welch's unequal-variance t-test for equal means.
pub fn two_sample_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    let (ma, va, na) = moments(a, "a")?;
    let (mb, vb, nb) = moments(b, "b")?;
    let qa = va / na;
    let qb = vb / nb;
    let se = (qa + qb).sqrt();
    let dof = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let diff = ma - mb;
    let t = diff / se;
    let p_value = student_t_two_sided(t, dof);
    let half = student_t_quantile(1.0 - ALPHA / 2.0, dof) * se;
    Ok(TTest {
        t,
        dof,
        p_value,
        mean_diff: diff,
        ci: (diff - half, diff + half),
        reject: p_value < ALPHA,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let f = two_sample_f_test(&a, &a).unwrap();
        assert_eq!(f.f, 1.0);
        assert!((f.p_value - 1.0).abs() < 1e-12);
        let t = two_sample_t_test(&a, &a).unwrap();
        assert_eq!(t.t, 0.0);
        assert!((t.ci.0 + t.ci.1).abs() < 1e-12);
        assert!(!t.reject && !f.reject);
    }

    #[test]
    fn welch_matches_hand_computation() {
        let a = [19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0];
        let b = [28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7, 23.2, 17.5, 20.6, 18.0, 23.9, 21.6, 24.3, 20.4, 23.9, 13.3];
        let t = two_sample_t_test(&a, &b).unwrap();
        // reference values from an independent statistics package
        assert!((t.t + 2.225512039969852).abs() < 1e-10, "{}", t.t);
        assert!((t.dof - 24.524634944257343).abs() < 1e-9, "{}", t.dof);
        assert!((t.p_value - 0.035484530830010325).abs() < 1e-9);
        assert!((t.ci.0 + 4.276458650120551).abs() < 1e-8);
        assert!((t.ci.1 + 0.16354134987944713).abs() < 1e-8);
        assert!(t.reject);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(two_sample_f_test(&[1.0], &[1.0, 2.0]).is_err());
        assert!(two_sample_t_test(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
