//! Kolmogorov–Smirnov statistics, test reports and the verification suite.

mod checks;
mod suite;

pub use checks::{
    check_attractor, check_contraction, check_divergence, check_engine_agreement,
    check_exchangeability, check_fixed_point_residual, check_gap_translation, check_limit_marginal,
    check_range_law, check_reflected, check_stable_limit, check_stochastic_order, laplace2_cdf,
};
pub use suite::{run_suite, Suite, SuiteOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput(
            "KS statistic of an empty sample".into(),
        ));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput(
            "KS statistic of a sample containing NaN".into(),
        ));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_n(x) - F(x)|` for the empirical CDF `F_n` of `samples`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max(j as f64 / n - f);
        i = j;
    }
    Ok(d)
}

/// `sup_x |F_a(x) - F_b(x)|` for two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub sample_sizes: Vec<usize>,
    pub seed: u64,
    pub verdict: Verdict,
    pub details: serde_json::Value,
}

impl TestReport {
    /// Passes iff `statistic <= threshold`.
    pub fn new(
        name: impl Into<String>,
        statistic: f64,
        threshold: f64,
        sample_sizes: Vec<usize>,
        seed: u64,
        details: serde_json::Value,
    ) -> Self {
        let verdict = if statistic <= threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            statistic,
            threshold,
            sample_sizes,
            seed,
            verdict,
            details,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// One line: `PASS name statistic <= threshold`.
    pub fn summary(&self) -> String {
        let (tag, op) = if self.passed() {
            ("PASS", "<=")
        } else {
            ("FAIL", ">")
        };
        format!(
            "{tag} {} {:.6} {op} {:.6}",
            self.name, self.statistic, self.threshold
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use rand::Rng;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn identical_samples_give_zero() {
        let a = [3.0, 1.0, 2.0, 2.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn empty_or_nan_rejected() {
        assert!(matches!(
            ks_one_sample(&[], |x| x),
            Err(Error::InvalidInput(_))
        ));
        assert!(ks_two_sample(&[1.0], &[]).is_err());
        assert!(ks_two_sample(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn small_cases_by_hand() {
        assert!((ks_one_sample(&[0.5], |x| x).unwrap() - 0.5).abs() < 1e-15);
        assert!((ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
        // ties across samples
        assert!((ks_two_sample(&[1.0, 2.0], &[1.0, 3.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exp2_draws_match_their_cdf() {
        let mut rng = RandomStream::from_seed(17).rng();
        let e = Exp::new(2.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| e.sample(&mut rng)).collect();
        assert!(ks_one_sample(&xs, |x| 1.0 - (-2.0 * x).exp()).unwrap() < 0.01);
    }

    #[test]
    fn uniform_draws_match_their_cdf() {
        let mut rng = RandomStream::from_seed(18).rng();
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap() < 0.01);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!(
            (normal_cdf(1.959963984540054) - 0.975).abs() < 1e-15,
            "{}",
            normal_cdf(1.959963984540054)
        );
        assert!((normal_cdf(-1.0) - 0.15865525393145707).abs() < 1e-15);
    }

    #[test]
    fn report_verdict() {
        let r = TestReport::new("x", 0.01, 0.01, vec![1], 0, serde_json::json!({}));
        assert!(r.passed());
        let r = TestReport::new("x", 0.02, 0.01, vec![1], 0, serde_json::json!({}));
        assert!(!r.passed());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"verdict\":\"fail\""));
        assert_eq!(serde_json::from_str::<TestReport>(&json).unwrap(), r);
    }
}
