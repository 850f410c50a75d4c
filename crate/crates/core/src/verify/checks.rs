//! Individual checks. Each takes its sample sizes explicitly and a random
//! stream; components of a check use disjoint derived streams.

use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::{ks_one_sample, ks_two_sample, TestReport};
use crate::attractor::{
    average_contraction_check, chaos_game, chaos_game_uniform, hausdorff_distance,
    jacobian_fd_error, lipschitz_estimate, uniform_grid, BoxSet,
};
use crate::error::{Error, Result};
use crate::kernel::{decode, BranchKind, Encoding, GapVector, StableParams};
use crate::mixture::{
    exact_iterated_sampler, reconstruct_fdd_reflected, Atom, ExponentialMixture, ParamChain,
    PruningPolicy,
};
use crate::perm::{all_permutations, Permutation};
use crate::rng::RandomStream;
use crate::samplers::{
    divergence_probe, iterate_batch, product_formula_sample, range_product_sample, range_sample,
    Process,
};

/// CDF of the two-sided exponential law with density `e^{-2|x|}`.
pub fn laplace2_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * (2.0 * x).exp()
    } else {
        1.0 - 0.5 * (-2.0 * x).exp()
    }
}

fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() }
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn pair_sum(rows: &[Vec<f64>], i: usize, j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i] + r[j]).collect()
}

/// Permutations of the coordinates used by the exchangeability checks:
/// all of them for `k <= 3`, else ten random ones.
fn permutation_panel(k: usize, stream: RandomStream) -> Result<Vec<Permutation>> {
    if k <= 3 {
        // permutations of {0..k-1}
        return all_permutations(k - 1);
    }
    let mut rng = stream.rng();
    Ok((0..10).map(|_| Permutation::random(k, &mut rng)).collect())
}

/// Largest per-marginal and pairwise-sum KS distance between `a` and the
/// columns of `b` rearranged by each permutation of the panel.
fn exchangeability_stat(a: &[Vec<f64>], b: &[Vec<f64>], panel: &[Permutation]) -> Result<f64> {
    let k = a[0].len();
    let mut worst = 0.0f64;
    for sigma in panel {
        for i in 0..k {
            worst = worst.max(ks_two_sample(&column(a, i), &column(b, sigma.at(i)))?);
            for j in i + 1..k {
                worst = worst.max(ks_two_sample(
                    &pair_sum(a, i, j),
                    &pair_sum(b, sigma.at(i), sigma.at(j)),
                )?);
            }
        }
    }
    Ok(worst)
}

fn distinct_times(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64).collect()
}

fn brownian_rows(
    times: &[f64],
    depth: usize,
    n: usize,
    stream: RandomStream,
) -> Result<Vec<Vec<f64>>> {
    Ok(iterate_batch(&Process::brownian(), times, depth, n, stream)?.0)
}

/// Iterated Brownian motion at `t = 1` against the density `e^{-2|x|}`.
pub fn check_limit_marginal(
    depth: usize,
    n: usize,
    threshold: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    let xs = column(&brownian_rows(&[1.0], depth, n, stream)?, 0);
    let d = ks_one_sample(&xs, laplace2_cdf)?;
    Ok(TestReport::new(
        "limit_marginal",
        d,
        threshold,
        vec![n],
        stream.seed,
        json!({ "depth": depth, "reference": "two-sided exponential, rate 2" }),
    ))
}

/// Two independent batches of the iterated Brownian motion at `k`
/// distinct times; one is compared with coordinate permutations of the other.
pub fn check_exchangeability(
    k: usize,
    depth: usize,
    n: usize,
    threshold: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    if k < 2 {
        return Err(Error::InvalidParameter(
            "exchangeability needs k >= 2".into(),
        ));
    }
    let times = distinct_times(k);
    let a = brownian_rows(&times, depth, n, stream.derive(1))?;
    let b = brownian_rows(&times, depth, n, stream.derive(2))?;
    let panel = permutation_panel(k, stream.derive(3))?;
    let d = exchangeability_stat(&a, &b, &panel)?;
    Ok(TestReport::new(
        "exchangeability",
        d,
        threshold,
        vec![n, n],
        stream.seed,
        json!({ "k": k, "depth": depth, "times": times, "permutations": panel.len() }),
    ))
}

/// Parameter vectors after `burn_in` chain steps from `(2, ..., 2)`, one
/// independent chain per sample.
fn chain_states(
    kind: BranchKind,
    k: usize,
    burn_in: usize,
    n: usize,
    stream: RandomStream,
) -> Result<Vec<Vec<f64>>> {
    let chain = ParamChain::new(kind, k)?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i as u64).rng();
            let mut lambda = vec![2.0; k];
            for _ in 0..burn_in {
                lambda = chain.step(&lambda, &mut rng)?;
            }
            Ok(lambda)
        })
        .collect()
}

fn limit_gaps(
    kind: BranchKind,
    k: usize,
    burn_in: usize,
    n: usize,
    stream: RandomStream,
) -> Result<Vec<GapVector<f64>>> {
    let states = chain_states(kind, k, burn_in, n, stream.derive(1))?;
    let gstream = stream.derive(2);
    states
        .par_iter()
        .enumerate()
        .map(|(i, l)| {
            let mut rng = gstream.substream(i as u64).rng();
            let g: Vec<f64> = l
                .iter()
                .map(|&r| -(1.0 - rng.random::<f64>()).ln() / r)
                .collect();
            GapVector::new(g)
        })
        .collect()
}

/// Chain states stay in `[2, 2k^2]^k`, and each limiting gap marginal lies
/// stochastically between `Exp(2k^2)` and `Exp(2)`, up to `band`.
pub fn check_stochastic_order(
    k: usize,
    n: usize,
    burn_in: usize,
    band: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    let upper = 2.0 * (k * k) as f64;
    let states = chain_states(BranchKind::Plain, k, burn_in, n, stream.derive(1))?;
    let outside = states
        .iter()
        .flatten()
        .filter(|&&x| !(2.0..=upper).contains(&x))
        .count();
    let gaps = limit_gaps(BranchKind::Plain, k, burn_in, n, stream.derive(2))?;
    let (lo, hi) = (exp_cdf(2.0), exp_cdf(upper));
    let mut violation = 0.0f64;
    for j in 0..k {
        let mut xs: Vec<f64> = gaps.iter().map(|g| g.as_slice()[j]).collect();
        xs.sort_by(f64::total_cmp);
        let m = xs.len() as f64;
        for (i, &x) in xs.iter().enumerate() {
            // empirical CDF just below and at x
            let (below, at) = (i as f64 / m, (i + 1) as f64 / m);
            violation = violation.max(lo(x) - at).max(below - hi(x));
        }
    }
    let stat = if outside > 0 {
        f64::INFINITY
    } else {
        violation
    };
    Ok(TestReport::new(
        "stochastic_order",
        stat,
        band,
        vec![n, n],
        stream.seed,
        json!({ "k": k, "burn_in": burn_in, "states_outside_box": outside, "dominance_violation": violation }),
    ))
}

/// `(I_2 - I_1, ..., I_k - I_1)` at `k` times against `(I_1, ..., I_{k-1})`
/// at `k - 1` times, per marginal.
pub fn check_gap_translation(
    depth: usize,
    k: usize,
    n: usize,
    threshold: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    if k < 2 {
        return Err(Error::InvalidParameter(
            "gap translation needs k >= 2".into(),
        ));
    }
    let a = brownian_rows(&distinct_times(k), depth, n, stream.derive(1))?;
    let b = brownian_rows(&distinct_times(k - 1), depth, n, stream.derive(2))?;
    let mut d = 0.0f64;
    for j in 1..k {
        let diff: Vec<f64> = a.iter().map(|r| r[j] - r[0]).collect();
        d = d.max(ks_two_sample(&diff, &column(&b, j - 1))?);
    }
    Ok(TestReport::new(
        "gap_translation",
        d,
        threshold,
        vec![n, n],
        stream.seed,
        json!({ "k": k, "depth": depth }),
    ))
}

/// Iterated stable process at `t = 1` against the truncated product law.
pub fn check_stable_limit(
    params: &StableParams<f64>,
    depth: usize,
    trunc: usize,
    n: usize,
    threshold: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    let (rows, overflow) = iterate_batch(
        &Process::Stable(*params),
        &[1.0],
        depth,
        n,
        stream.derive(1),
    )?;
    let xs = column(&rows, 0);
    let pstream = stream.derive(2);
    let ys = (0..n)
        .into_par_iter()
        .map(|i| product_formula_sample(params, trunc, &mut pstream.substream(i as u64).rng()))
        .collect::<Result<Vec<f64>>>()?;
    let d = ks_two_sample(&xs, &ys)?;
    Ok(TestReport::new(
        "stable_limit",
        d,
        threshold,
        vec![n, n],
        stream.seed,
        json!({ "alpha": params.alpha, "sigma": params.sigma, "depth": depth, "truncation": trunc, "overflow": overflow }),
    ))
}

fn is_convergent(p: &StableParams<f64>) -> bool {
    p.alpha > 1.0 && p.r == 0.0
}

/// Exceedance frequencies of `|I^(n)(1)|` over `threshold`. In the
/// convergent regime every frequency must stay below `convergent_max`; in a
/// divergent regime the frequency at `late` must exceed the one at `early`
/// and be at least `divergent_min`.
#[allow(clippy::too_many_arguments)]
pub fn check_divergence(
    params: &StableParams<f64>,
    early: usize,
    late: usize,
    threshold: f64,
    n: usize,
    convergent_max: f64,
    divergent_min: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    if early == 0 || late <= early {
        return Err(Error::InvalidParameter("need 1 <= early < late".into()));
    }
    let freq = divergence_probe(params, late, threshold, n, stream)?;
    let (fe, fl) = (freq[early - 1], freq[late - 1]);
    let convergent = is_convergent(params);
    // statistic <= 0 iff the regime's criterion holds
    let (stat, limit) = if convergent {
        (freq.iter().cloned().fold(0.0, f64::max), convergent_max)
    } else {
        let growth = fe - fl + 1.0 / n as f64;
        let level = divergent_min - fl;
        (growth.max(level), 0.0)
    };
    Ok(TestReport::new(
        format!("divergence_alpha{}_r{}", params.alpha, params.r),
        stat,
        limit,
        vec![n],
        stream.seed,
        json!({
            "regime": if convergent { "convergent" } else { "divergent" },
            "threshold": threshold,
            "frequencies": freq,
            "early": early,
            "late": late,
        }),
    ))
}

/// Reflected chain: positivity of reconstructed coordinates, first
/// coordinate against `Exp(2)`, exchangeability across two batches.
pub fn check_reflected(
    k: usize,
    n: usize,
    burn_in: usize,
    ks_threshold: f64,
    exch_threshold: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    let sample = |s: RandomStream| -> Result<Vec<Vec<f64>>> {
        let gaps = limit_gaps(BranchKind::Reflected, k, burn_in, n, s.derive(1))?;
        Ok(reconstruct_fdd_reflected(&gaps, &mut s.derive(2).rng()))
    };
    let a = sample(stream.derive(1))?;
    let b = sample(stream.derive(2))?;
    let nonpositive = a
        .iter()
        .chain(&b)
        .flatten()
        .filter(|&&x| !(x > 0.0))
        .count();
    let ks = ks_one_sample(&column(&a, 0), exp_cdf(2.0))?;
    let exch = if k >= 2 {
        exchangeability_stat(&a, &b, &permutation_panel(k, stream.derive(3))?)?
    } else {
        0.0
    };
    let stat = if nonpositive > 0 {
        f64::INFINITY
    } else {
        (ks / ks_threshold).max(exch / exch_threshold)
    };
    Ok(TestReport::new(
        "reflected",
        stat,
        1.0,
        vec![n, n],
        stream.seed,
        json!({
            "k": k,
            "nonpositive": nonpositive,
            "ks_first_coordinate": ks,
            "ks_threshold": ks_threshold,
            "exchangeability": exch,
            "exchangeability_threshold": exch_threshold,
        }),
    ))
}

/// Mixture of `Exp(lambda)` laws over the visited chain states (weights
/// proportional to visit counts) against its image under one operator step,
/// compared through densities on `grid`.
pub fn check_fixed_point_residual(
    k: usize,
    chain_length: usize,
    grid: &[Vec<f64>],
    threshold: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    if k > 2 {
        return Err(Error::UnsupportedRegime(
            "fixed-point residual is implemented for k <= 2".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty evaluation grid".into()));
    }
    let cloud = chaos_game::<f64>(k, chain_length + 1000, 1000, &stream)?;
    let w = 1.0 / cloud.len() as f64;
    let atoms = cloud
        .points
        .into_iter()
        .map(|rates| Atom {
            weight: w,
            rates,
            label: (),
        })
        .collect();
    let policy = PruningPolicy::disabled(usize::MAX);
    let mix = ExponentialMixture::new(k, atoms)?;
    let (img, _) = mix.op_step(&policy)?;
    let mut worst = 0.0f64;
    for x in grid {
        let (a, b) = (mix.density(x), img.density(x));
        worst = worst.max((b - a).abs() / a);
    }
    Ok(TestReport::new(
        "fixed_point_residual",
        worst,
        threshold,
        vec![chain_length],
        stream.seed,
        json!({ "k": k, "atoms": mix.len(), "image_atoms": img.len(), "grid_points": grid.len() }),
    ))
}

/// Exact encoding-chain sampler against direct iteration from matched
/// random initial times, per marginal.
pub fn check_engine_agreement(
    depth: usize,
    lambda0: &[f64],
    tau0: &Permutation,
    n: usize,
    threshold: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    let k = lambda0.len();
    let policy = PruningPolicy::default();
    let exact = exact_iterated_sampler(depth, lambda0, tau0, n, &policy, stream.derive(1))?;
    let bstream = stream.derive(2);
    let brute: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = bstream.substream(i as u64).rng();
            let g: Vec<f64> = lambda0
                .iter()
                .map(|&r| -(1.0 - rng.random::<f64>()).ln() / r)
                .collect();
            let t = decode(&Encoding::new(GapVector::new(g)?, tau0.clone())?);
            Ok(
                crate::samplers::iterate_fdd(&Process::brownian(), &t[1..], depth, &mut rng)?
                    .values,
            )
        })
        .collect::<Result<_>>()?;
    let mut d = 0.0f64;
    for j in 0..k {
        d = d.max(ks_two_sample(
            &column(&exact.samples, j),
            &column(&brute, j),
        )?);
    }
    Ok(TestReport::new(
        "engine_agreement",
        d,
        threshold,
        vec![n, n],
        stream.seed,
        json!({ "depth": depth, "lambda0": lambda0, "labelling": tau0.as_slice(), "atoms": exact.mixture.len(), "tv_bound": exact.tv_bound }),
    ))
}

/// Grid range of the iterated stable process on `[0, 1]` against the
/// product of `levels` independent single-level ranges.
#[allow(clippy::too_many_arguments)]
pub fn check_range_law(
    params: &StableParams<f64>,
    depth: usize,
    levels: usize,
    grid_size: usize,
    n: usize,
    threshold: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    let (s1, s2) = (stream.derive(1), stream.derive(2));
    let a = (0..n)
        .into_par_iter()
        .map(|i| {
            range_sample(
                params,
                depth,
                1.0,
                grid_size,
                &mut s1.substream(i as u64).rng(),
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let b = (0..n)
        .into_par_iter()
        .map(|i| range_product_sample(params, levels, grid_size, &mut s2.substream(i as u64).rng()))
        .collect::<Result<Vec<f64>>>()?;
    let d = ks_two_sample(&a, &b)?;
    Ok(TestReport::new(
        "range_law",
        d,
        threshold,
        vec![n, n],
        stream.seed,
        json!({ "alpha": params.alpha, "depth": depth, "levels": levels, "grid": grid_size }),
    ))
}

/// Chaos-game clouds against the iterated box cover: Hausdorff distance in
/// units of the box side, with every set required to lie in `[2, 2k^2]^k`.
/// The verdict uses the uniform-branch game; the distance for the
/// parameter chain is reported alongside.
pub fn check_attractor(
    k: usize,
    steps: usize,
    burn_in: usize,
    depth: usize,
    resolution: f64,
    max_ratio: f64,
    stream: RandomStream,
) -> Result<TestReport> {
    let uniform = chaos_game_uniform::<f64>(k, steps, burn_in, &stream.derive(1))?;
    let chain = chaos_game::<f64>(k, steps, burn_in, &stream.derive(2))?;
    let cover = BoxSet::full(k, resolution)?.iterate(depth)?;
    let upper = 2.0 * (k * k) as f64;
    let cloud_out = uniform
        .points
        .iter()
        .chain(&chain.points)
        .flatten()
        .filter(|&&x| !(2.0..=upper).contains(&x))
        .count();
    let s = cover.resolution();
    let cover_out = cover
        .boxes()
        .filter(|b| {
            b.iter()
                .any(|&i| (i as f64) * s < 2.0 - s || (i as f64 + 1.0) * s > upper + s)
        })
        .count();
    let h = hausdorff_distance(&uniform, &cover)?;
    let h_chain = hausdorff_distance(&chain, &cover)?;
    let stat = if cloud_out + cover_out > 0 {
        f64::INFINITY
    } else {
        h / s
    };
    Ok(TestReport::new(
        "attractor_hausdorff",
        stat,
        max_ratio,
        vec![uniform.len(), chain.len(), cover.len()],
        stream.seed,
        json!({
            "k": k,
            "depth": depth,
            "resolution": s,
            "hausdorff": h,
            "hausdorff_parameter_chain": h_chain,
            "boxes": cover.len(),
            "cloud_outside": cloud_out,
            "boxes_outside": cover_out,
        }),
    ))
}

/// Largest Jacobian norm of the plain maps for `k`, the average contraction
/// margin for `k_avg`, and the finite-difference agreement of the Jacobians.
pub fn check_contraction(
    k: usize,
    per_axis: usize,
    k_avg: usize,
    per_axis_avg: usize,
    seed: u64,
) -> Result<TestReport> {
    let upper = 2.0 * (k * k) as f64;
    let grid = uniform_grid(k, 2.0, upper, per_axis);
    let mut lip = 0.0f64;
    let mut fd = 0.0f64;
    for tau in all_permutations(k)? {
        lip = lip.max(lipschitz_estimate(&tau, k, &grid)?);
        fd = fd.max(jacobian_fd_error(&tau, k, &grid)?);
    }
    let avg_grid = uniform_grid(k_avg, 2.0, 2.0 * (k_avg * k_avg) as f64, per_axis_avg);
    let (_, margin) = average_contraction_check(k_avg, &avg_grid)?;
    // all three must hold: lip < 1, margin < 0, fd < 1e-6
    let stat = (lip - 1.0).max(margin).max(fd - 1e-6);
    Ok(TestReport::new(
        "contraction",
        stat,
        0.0,
        vec![grid.len(), avg_grid.len()],
        seed,
        json!({ "k": k, "max_lipschitz": lip, "k_average": k_avg, "average_margin": margin, "fd_relative_error": fd }),
    ))
}
