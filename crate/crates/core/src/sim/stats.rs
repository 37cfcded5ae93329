//! Pooled-variance two-sample t-test, one-sided.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// P(T ≥ t) under the null, i.e. evidence for mean(A) > mean(B).
    pub p: f64,
    pub df: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("each group needs at least 2 observations (got {0} and {1})")]
    TooFewSamples(usize, usize),
    #[error("both groups are constant and equal")]
    DegenerateVariance,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Upper tail of Student's t with `df` degrees of freedom.
pub fn one_sided_p(t: f64, df: u32) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    dist.sf(t)
}

pub fn t_test_one_sided(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    let (na, nb) = (a.len(), b.len());
    if na < 2 || nb < 2 {
        return Err(StatsError::TooFewSamples(na, nb));
    }
    let (ma, mb) = (mean(a), mean(b));
    let ss = |xs: &[f64], m: f64| xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let df = (na + nb - 2) as u32;
    let pooled = (ss(a, ma) + ss(b, mb)) / df as f64;
    let se = (pooled * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
    let diff = ma - mb;
    let t = if se == 0.0 {
        if diff == 0.0 {
            return Err(StatsError::DegenerateVariance);
        }
        diff.signum() * f64::INFINITY
    } else {
        diff / se
    };
    Ok(TTest {
        t,
        p: one_sided_p(t, df),
        df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from scipy.stats.ttest_ind(equal_var=True, alternative="greater").
    #[test]
    fn matches_reference_vectors() {
        let a = [5.1, 4.9, 6.2, 5.8, 6.0, 5.5, 5.3, 6.1];
        let b = [4.8, 5.0, 4.6, 5.2, 4.9, 5.1, 4.7];
        let r = t_test_one_sided(&a, &b).unwrap();
        assert_eq!(r.df, 13);
        assert!((r.t - 3.5741021378842124).abs() < 1e-6, "{}", r.t);
        assert!((r.p - 0.0016980147431076183).abs() < 1e-6, "{}", r.p);

        let a = [13., 12., 11., 13., 10., 9., 13., 12., 11., 8.];
        let b = [7., 9., 8., 10., 6., 9., 11., 7., 8., 9.];
        let r = t_test_one_sided(&a, &b).unwrap();
        assert!((r.t - 3.8340579025361614).abs() < 1e-6);
        assert!((r.p - 0.0006077704815978224).abs() < 1e-6);
    }

    #[test]
    fn tail_matches_reference() {
        assert!((one_sided_p(1.66, 98) - 0.050055564226405).abs() < 1e-6);
        assert!((one_sided_p(2.78, 98) - 0.003259058064693806).abs() < 1e-6);
        assert!((one_sided_p(0.96, 98) - 0.16970889350263602).abs() < 1e-6);
    }

    #[test]
    fn symmetry_and_direction() {
        let g = [1.0, 2.0, 3.0];
        let r = t_test_one_sided(&g, &g).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p - 0.5).abs() < 1e-12);

        let shifted = [2.0, 3.0, 4.0];
        let r = t_test_one_sided(&shifted, &g).unwrap();
        assert!(r.t > 0.0 && r.p < 0.5);
        assert!((r.t - 1.224744871391589).abs() < 1e-9);
        assert!((r.p - 0.1439320673633454).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            t_test_one_sided(&[4.0, 4.0], &[4.0, 4.0, 4.0]),
            Err(StatsError::DegenerateVariance)
        );
        assert_eq!(
            t_test_one_sided(&[1.0], &[1.0, 2.0]),
            Err(StatsError::TooFewSamples(1, 2))
        );
        let r = t_test_one_sided(&[5.0, 5.0], &[3.0, 3.0]).unwrap();
        assert_eq!(r.t, f64::INFINITY);
        assert_eq!(r.p, 0.0);
    }

    #[test]
    fn sd() {
        assert!(
            (sample_sd(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]) - 2.138089935299395).abs()
                < 1e-12
        );
        assert_eq!(sample_sd(&[3.0]), 0.0);
    }
}
