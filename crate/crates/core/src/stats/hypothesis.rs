//! One-sided two-sample tests. H1 in both: the second group scores higher.

use super::special::student_t_upper_tail;
use super::{GroupSample, StatsError, TestKind, TestResult};

fn check_finite(g: &GroupSample) -> Result<(), StatsError> {
    match g.means.iter().find(|m| !m.is_finite()) {
        Some(bad) => Err(StatsError::NonFinite(*bad)),
        None => Ok(()),
    }
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Welch's unequal-variance t-test of `mean(g2) > mean(g1)`.
pub fn welch_t_test_one_sided(
    g1: &GroupSample,
    g2: &GroupSample,
    level: f64,
) -> Result<TestResult, StatsError> {
    let (n1, n2) = (g1.len(), g2.len());
    if n1 < 2 || n2 < 2 {
        return Err(StatsError::TooFewSamples {
            test: TestKind::WelchT,
            needed: 2,
            n1,
            n2,
        });
    }
    check_finite(g1)?;
    check_finite(g2)?;
    let (m1, v1) = mean_and_variance(&g1.means);
    let (m2, v2) = mean_and_variance(&g2.means);
    let (a, b) = (v1 / n1 as f64, v2 / n2 as f64);
    let se2 = a + b;
    if se2 == 0.0 {
        let (statistic, p_value) = match m2.partial_cmp(&m1) {
            Some(std::cmp::Ordering::Greater) => (f64::INFINITY, 0.0),
            Some(std::cmp::Ordering::Less) => (f64::NEG_INFINITY, 1.0),
            _ => (0.0, 0.5),
        };
        let fallback = TestResult {
            test_kind: TestKind::WelchT,
            statistic,
            p_value,
            reject_null: false,
            n1,
            n2,
            df: None,
        }
        .at_level(level);
        return Err(StatsError::DegenerateVariance { fallback });
    }
    let t = (m2 - m1) / se2.sqrt();
    let df = se2 * se2 / (a * a / (n1 as f64 - 1.0) + b * b / (n2 as f64 - 1.0));
    let p_value = student_t_upper_tail(t, df).clamp(0.0, 1.0);
    Ok(TestResult {
        test_kind: TestKind::WelchT,
        statistic: t,
        p_value,
        reject_null: false,
        n1,
        n2,
        df: Some(df),
    }
    .at_level(level))
}

/// `max_x (F1(x) - F2(x))` over the pooled sample points, floored at 0.
pub fn ks_d_plus(g1: &[f64], g2: &[f64]) -> f64 {
    let mut s1 = g1.to_vec();
    let mut s2 = g2.to_vec();
    s1.sort_by(f64::total_cmp);
    s2.sort_by(f64::total_cmp);
    let (n1, n2) = (s1.len() as f64, s2.len() as f64);
    let mut d: f64 = 0.0;
    for x in s1.iter().chain(&s2) {
        let c1 = s1.partition_point(|v| v <= x) as f64;
        let c2 = s2.partition_point(|v| v <= x) as f64;
        d = d.max(c1 / n1 - c2 / n2);
    }
    d
}

/// One-sided two-sample Kolmogorov–Smirnov test that `g2` is stochastically
/// greater than `g1`. Uses the asymptotic p-value, which is approximate for
/// small samples.
pub fn ks_test_one_sided_two_sample(
    g1: &GroupSample,
    g2: &GroupSample,
    level: f64,
) -> Result<TestResult, StatsError> {
    let (n1, n2) = (g1.len(), g2.len());
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::TooFewSamples {
            test: TestKind::KsOneSided,
            needed: 1,
            n1,
            n2,
        });
    }
    check_finite(g1)?;
    check_finite(g2)?;
    let d = ks_d_plus(&g1.means, &g2.means);
    let (a, b) = (n1 as f64, n2 as f64);
    let p_value = (-2.0 * d * d * a * b / (a + b)).exp().clamp(0.0, 1.0);
    Ok(TestResult {
        test_kind: TestKind::KsOneSided,
        statistic: d,
        p_value,
        reject_null: false,
        n1,
        n2,
        df: None,
    }
    .at_level(level))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(xs: &[f64]) -> GroupSample {
        GroupSample::new("g", xs.to_vec())
    }

    #[test]
    fn welch_fixture() {
        let r = welch_t_test_one_sided(&g(&[0.2, 0.4, 0.6]), &g(&[0.6, 0.8, 1.0]), 0.1).unwrap();
        assert!((r.statistic - 6f64.sqrt()).abs() < 1e-12);
        assert!((r.df.unwrap() - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.035).abs() < 1e-3, "{}", r.p_value);
        assert!(r.reject_null);
    }

    #[test]
    fn welch_identical_samples() {
        let s = g(&[0.1, 0.5, 0.7, 0.2]);
        let r = welch_t_test_one_sided(&s, &s, 0.1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.5).abs() < 1e-15);
        assert!(!r.reject_null);
    }

    #[test]
    fn welch_degenerate() {
        let fallback = |a: &[f64], b: &[f64]| match welch_t_test_one_sided(&g(a), &g(b), 0.1) {
            Err(StatsError::DegenerateVariance { fallback }) => fallback,
            other => panic!("{other:?}"),
        };
        assert_eq!(fallback(&[0.5, 0.5], &[0.5, 0.5]).p_value, 0.5);
        let up = fallback(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(up.p_value, 0.0);
        assert!(up.reject_null);
        assert_eq!(fallback(&[1.0, 1.0], &[0.0, 0.0]).p_value, 1.0);
    }

    #[test]
    fn welch_too_few() {
        assert!(matches!(
            welch_t_test_one_sided(&g(&[0.1]), &g(&[0.2, 0.3]), 0.1),
            Err(StatsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn ks_fixtures() {
        let r = ks_test_one_sided_two_sample(&g(&[0.0; 3]), &g(&[1.0; 3]), 0.1).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!((r.p_value - (-3f64).exp()).abs() < 1e-15);
        assert!(r.reject_null);

        let s = g(&[0.3, 0.1, 0.9]);
        let r = ks_test_one_sided_two_sample(&s, &s, 0.1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        // Wrong direction yields no evidence.
        assert_eq!(ks_d_plus(&[1.0; 3], &[0.0; 3]), 0.0);
    }
}
