//! Two-sample significance tests and the multiple-comparison correction
//! used by every per-country, per-resolver, and per-domain analysis.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TestError {
    /// Fewer than two observations in one of the groups.
    #[error("each group needs at least two samples")]
    TooFewSamples,
    /// Counts exceed trials or a trial count is zero.
    #[error("invalid proportion counts")]
    BadCounts,
    /// Pooled proportion is exactly 0 or 1, so the z statistic has no
    /// variance to normalize by.
    #[error("z-test not applicable: pooled proportion is degenerate")]
    NotApplicable,
}

/// Variant of the Šidák family-wise correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidakMode {
    /// Canonical form: 1 - (1 - alpha)^(1/n).
    Standard,
    /// The form the correction is often quoted in, 1 - alpha^(1/n). Much
    /// looser than `Standard` for small alpha; kept selectable so published
    /// thresholds of either shape can be reproduced.
    Literal,
}

/// Per-test significance threshold keeping family-wise error at `alpha`
/// across `n` hypotheses.
pub fn sidak_alpha(alpha: f64, n: usize, mode: SidakMode) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    debug_assert!(n >= 1);
    let exp = 1.0 / n as f64;
    match mode {
        SidakMode::Standard => 1.0 - (1.0 - alpha).powf(exp),
        SidakMode::Literal => 1.0 - alpha.powf(exp),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
    /// Set when both groups had zero variance and the statistic is pinned
    /// rather than computed (t=0,p=1 for equal means; p=0 otherwise).
    pub degenerate: bool,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn t_two_sided_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    2.0 * dist.cdf(-t.abs())
}

/// Welch's unequal-variance two-sample t-test with Welch-Satterthwaite
/// degrees of freedom and a two-sided p-value.
pub fn t_test_two_sample(xs: &[f64], ys: &[f64]) -> Result<TTest, TestError> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(TestError::TooFewSamples);
    }
    let (m1, v1) = mean_var(xs);
    let (m2, v2) = mean_var(ys);
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);

    if v1 == 0.0 && v2 == 0.0 {
        return Ok(if m1 == m2 {
            TTest {
                t: 0.0,
                p: 1.0,
                df: n1 + n2 - 2.0,
                degenerate: true,
            }
        } else {
            TTest {
                t: (m1 - m2).signum() * f64::INFINITY,
                p: 0.0,
                df: n1 + n2 - 2.0,
                degenerate: true,
            }
        });
    }

    let a = v1 / n1;
    let b = v2 / n2;
    let se2 = a + b;
    let t = (m1 - m2) / se2.sqrt();
    let mut df = se2 * se2 / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
    if !df.is_finite() || df < 1.0 {
        df = 1.0;
    }
    Ok(TTest {
        t,
        p: t_two_sided_p(t, df),
        df,
        degenerate: false,
    })
}

/// Student's pooled-variance variant, kept for sensitivity checks against
/// the default Welch test.
pub fn t_test_two_sample_pooled(xs: &[f64], ys: &[f64]) -> Result<TTest, TestError> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(TestError::TooFewSamples);
    }
    let (m1, v1) = mean_var(xs);
    let (m2, v2) = mean_var(ys);
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let df = n1 + n2 - 2.0;
    let sp2 = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df;

    if sp2 == 0.0 {
        return Ok(if m1 == m2 {
            TTest {
                t: 0.0,
                p: 1.0,
                df,
                degenerate: true,
            }
        } else {
            TTest {
                t: (m1 - m2).signum() * f64::INFINITY,
                p: 0.0,
                df,
                degenerate: true,
            }
        });
    }
    let t = (m1 - m2) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt();
    Ok(TTest {
        t,
        p: t_two_sided_p(t, df),
        df,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZTest {
    pub z: f64,
    pub p: f64,
}

/// Pooled two-proportion z-test with a two-sided p-value.
pub fn z_test_two_proportion(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<ZTest, TestError> {
    if n1 == 0 || n2 == 0 || x1 > n1 || x2 > n2 {
        return Err(TestError::BadCounts);
    }
    let (x1f, n1f, x2f, n2f) = (x1 as f64, n1 as f64, x2 as f64, n2 as f64);
    let pooled = (x1f + x2f) / (n1f + n2f);
    if pooled == 0.0 || pooled == 1.0 {
        return Err(TestError::NotApplicable);
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let z = (x1f / n1f - x2f / n2f) / se;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p = 2.0 * normal.cdf(-z.abs());
    Ok(ZTest { z, p })
}
