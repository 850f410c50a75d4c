//! The verification suite: fixed check parameters, concurrent execution,
//! deterministic report order.

use std::str::FromStr;

use rayon::prelude::*;

use super::checks::*;
use super::TestReport;
use crate::attractor::uniform_grid;
use crate::error::{Error, Result};
use crate::kernel::StableParams;
use crate::perm::Permutation;
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Brownian,
    Reflected,
    Stable,
    Attractor,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "brownian" => Suite::Brownian,
            "reflected" => Suite::Reflected,
            "stable" => Suite::Stable,
            "attractor" => Suite::Attractor,
            other => return Err(Error::InvalidParameter(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOutcome {
    /// Sorted by name.
    pub reports: Vec<TestReport>,
    /// `(check, message)` for checks that could not run.
    pub errors: Vec<(String, String)>,
}

impl SuiteOutcome {
    /// 0 when every check ran and passed, 1 when some check failed, 2 when
    /// some check could not run.
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            2
        } else if self.reports.iter().all(TestReport::passed) {
            0
        } else {
            1
        }
    }
}

type Check = Box<dyn Fn(RandomStream) -> Result<TestReport> + Send + Sync>;

fn stable(alpha: f64, r: f64) -> StableParams<f64> {
    StableParams::new(alpha, 1.0, r).expect("valid parameters")
}

/// Every check with its group. `quick` divides sample sizes by 10 and
/// doubles the thresholds.
fn catalogue(quick: bool) -> Vec<(Suite, &'static str, Check)> {
    let (div, relax) = if quick { (10, 2.0) } else { (1, 1.0) };
    let n5 = 100_000 / div;
    let n4 = 10_000 / div;
    let mut out: Vec<(Suite, &'static str, Check)> = vec![
        (
            Suite::Brownian,
            "limit_marginal",
            Box::new(move |s| check_limit_marginal(30, n5, 0.01 * relax, s)),
        ),
        (
            Suite::Brownian,
            "exchangeability",
            Box::new(move |s| check_exchangeability(3, 30, n5, 0.02 * relax, s)),
        ),
        (
            Suite::Brownian,
            "gap_translation",
            Box::new(move |s| check_gap_translation(30, 3, n5, 0.02 * relax, s)),
        ),
        (
            Suite::Brownian,
            "stochastic_order",
            Box::new(move |s| check_stochastic_order(3, n5, 100, 0.02 * relax, s)),
        ),
        (
            Suite::Brownian,
            "engine_agreement",
            Box::new(move |s| {
                check_engine_agreement(
                    3,
                    &[1.0, 1.0],
                    &Permutation::identity(3),
                    n5,
                    0.02 * relax,
                    s,
                )
            }),
        ),
        (
            Suite::Brownian,
            "fixed_point_residual",
            Box::new(move |s| {
                check_fixed_point_residual(
                    2,
                    20_000 / div,
                    &uniform_grid(2, 0.1, 1.5, 8),
                    0.05 * relax,
                    s,
                )
            }),
        ),
        (
            Suite::Reflected,
            "reflected",
            Box::new(move |s| check_reflected(3, n5, 100, 0.01 * relax, 0.02 * relax, s)),
        ),
        (
            Suite::Stable,
            "stable_limit",
            Box::new(move |s| check_stable_limit(&stable(1.5, 0.0), 20, 25, n5, 0.02 * relax, s)),
        ),
        (
            Suite::Stable,
            "range_law",
            Box::new(move |s| {
                check_range_law(&stable(1.8, 0.0), 10, 12, 4096, n4, 0.05 * relax, s)
            }),
        ),
        (
            Suite::Attractor,
            "attractor_hausdorff",
            Box::new(move |s| check_attractor(2, 1_000_000 / div, 1000, 12, 6.0 / 1024.0, 3.0, s)),
        ),
        (
            Suite::Attractor,
            "contraction",
            Box::new(move |s| check_contraction(2, 64, 3, 16, s.seed)),
        ),
    ];
    for (name, alpha, r) in [
        ("divergence_a0.8", 0.8, 0.0),
        ("divergence_a1.5_r1.5", 1.5, 1.5),
        ("divergence_a1.5", 1.5, 0.0),
    ] {
        out.push((
            Suite::Stable,
            name,
            Box::new(move |s| {
                check_divergence(&stable(alpha, r), 10, 40, 1e3, n4, 0.01 * relax, 0.1, s)
            }),
        ));
    }
    out
}

/// Run the checks of `suite` concurrently. Check `i` of the catalogue uses
/// the stream derived from `seed` with label `i`, whichever suite is selected.
pub fn run_suite(suite: Suite, seed: u64, quick: bool) -> SuiteOutcome {
    let root = RandomStream::from_seed(seed);
    let results: Vec<(String, Result<TestReport>)> = catalogue(quick)
        .into_par_iter()
        .enumerate()
        .filter(|(_, (group, _, _))| suite == Suite::All || *group == suite)
        .map(|(i, (_, name, check))| (name.to_string(), check(root.derive(i as u64))))
        .collect();
    let mut outcome = SuiteOutcome::default();
    for (name, r) in results {
        match r {
            Ok(mut rep) => {
                rep.seed = seed;
                outcome.reports.push(rep);
            }
            Err(e) => outcome.errors.push((name, e.to_string())),
        }
    }
    outcome.reports.sort_by(|a, b| a.name.cmp(&b.name));
    outcome.errors.sort();
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        assert_eq!("stable".parse::<Suite>().unwrap(), Suite::Stable);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn exit_codes() {
        let pass = TestReport::new("a", 0.0, 1.0, vec![], 0, serde_json::json!({}));
        let fail = TestReport::new("b", 2.0, 1.0, vec![], 0, serde_json::json!({}));
        let mut o = SuiteOutcome {
            reports: vec![pass.clone()],
            errors: vec![],
        };
        assert_eq!(o.exit_code(), 0);
        o.reports.push(fail);
        assert_eq!(o.exit_code(), 1);
        o.errors.push(("c".into(), "boom".into()));
        assert_eq!(o.exit_code(), 2);
    }
}
