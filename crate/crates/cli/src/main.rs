//! `iterlib` command-line front end.

mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use iterlib::attractor::{chaos_game, chaos_game_uniform};
use iterlib::io::{csv_table, write_atomic};
use iterlib::mixture::{exact_iterated_sampler, ParamChain};
use iterlib::samplers::{iterate_batch, occupation_histogram, Process};
use iterlib::verify::{run_suite, Suite};
use iterlib::{BoxSet, Permutation, PruningPolicy, RandomStream, StableParams};

#[derive(Parser, Debug)]
#[command(
    name = "iterlib",
    version,
    about = "Iterated stochastic processes: exact laws, simulation, attractors"
)]
struct Cli {
    /// JSON file with default values for the subcommand flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo samples of the n-th iterate at a set of times.
    Simulate(SimulateArgs),
    /// Exact samples of iterated Brownian motion from the propagated mixture.
    Exact(ExactArgs),
    /// States of the parameter-level Markov chain.
    ParamChain(ParamChainArgs),
    /// Box cover or point cloud of the limiting parameter attractor.
    Attractor(AttractorArgs),
    /// Occupation histogram of one iterated path on [0, 1].
    Occupation(OccupationArgs),
    /// Run the statistical verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SimulateArgs {
    /// bm, rbm (reflected) or stable.
    #[arg(long, value_parser = ["bm", "rbm", "stable"])]
    process: Option<String>,
    /// Stability index in (0, 2].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Scale (default 1).
    #[arg(long)]
    sigma: Option<f64>,
    /// Skewness in [-1, 1] (default 0).
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    /// Number of iterations.
    #[arg(long)]
    depth: Option<usize>,
    /// Comma-separated evaluation times.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ExactArgs {
    /// Dimension; inferred from --rates when omitted.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Comma-separated rates of the initial exponential gaps (default all 1).
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Comma-separated initial labelling of {0..k} (default identity).
    #[arg(long, value_delimiter = ',')]
    labelling: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Atom cap for the propagated mixture.
    #[arg(long)]
    prune_max: Option<usize>,
    /// Output CSV (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the final mixture as JSON.
    #[arg(long)]
    mixture_out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ParamChainArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct AttractorArgs {
    #[arg(long)]
    k: Option<usize>,
    /// boxes, chaos (weighted branches) or chaos-uniform.
    #[arg(long, value_parser = ["boxes", "chaos", "chaos-uniform"])]
    method: Option<String>,
    /// IFS iterations of the box cover.
    #[arg(long)]
    depth: Option<usize>,
    /// Box side length.
    #[arg(long)]
    resolution: Option<f64>,
    /// Chaos-game steps.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct OccupationArgs {
    /// bm, rbm (reflected) or stable.
    #[arg(long, value_parser = ["bm", "rbm", "stable"])]
    process: Option<String>,
    /// Stability index in (0, 2].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Scale (default 1).
    #[arg(long)]
    sigma: Option<f64>,
    /// Skewness in [-1, 1] (default 0).
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    /// Equispaced evaluation points in [0, 1].
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Histogram range as lo,hi (default: data range).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    clip: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct VerifyArgs {
    /// all, brownian, reflected, stable or attractor.
    #[arg(long, value_parser = ["all", "brownian", "reflected", "stable", "attractor"])]
    suite: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample sizes / 10, thresholds x 2.
    #[arg(long)]
    #[serde(default)]
    quick: bool,
    /// JSON report (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

type Fallible<T> = std::result::Result<T, String>;

fn seed(given: Option<u64>) -> Fallible<u64> {
    if let Some(s) = given {
        return Ok(s);
    }
    match std::env::var("ITERLIB_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("ITERLIB_SEED: not an unsigned integer: {v:?}")),
        Err(_) => Ok(0),
    }
}

fn emit(out: Option<&Path>, contents: &str) -> Fallible<()> {
    match out {
        Some(p) => {
            write_atomic(p, contents.as_bytes()).map_err(|e| format!("{}: {e}", p.display()))
        }
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| e.to_string()),
    }
}

fn positive(name: &str, v: usize) -> Fallible<usize> {
    if v == 0 {
        Err(format!("--{name} must be >= 1"))
    } else {
        Ok(v)
    }
}

fn header(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

fn process(a: &impl ProcessFlags) -> Fallible<Process<f64>> {
    let (name, alpha, sigma, r) = a.flags();
    let name = name.unwrap_or("bm");
    let stable_only = alpha.is_some() || sigma.is_some() || r.is_some();
    match name {
        "bm" | "rbm" if stable_only => Err(format!(
            "--alpha/--sigma/--r only apply to --process stable, got {name}"
        )),
        "bm" => Ok(Process::brownian()),
        "rbm" => Ok(Process::ReflectedBrownian),
        "stable" => {
            let alpha = alpha.ok_or("--alpha is required for --process stable")?;
            StableParams::new(alpha, sigma.unwrap_or(1.0), r.unwrap_or(0.0))
                .map(Process::Stable)
                .map_err(|e| format!("--alpha/--sigma/--r: {e}"))
        }
        other => Err(format!("--process: unknown process {other:?}")),
    }
}

trait ProcessFlags {
    fn flags(&self) -> (Option<&str>, Option<f64>, Option<f64>, Option<f64>);
}

macro_rules! process_flags {
    ($($t:ty),*) => {$(
        impl ProcessFlags for $t {
            fn flags(&self) -> (Option<&str>, Option<f64>, Option<f64>, Option<f64>) {
                (self.process.as_deref(), self.alpha, self.sigma, self.r)
            }
        }
    )*};
}

process_flags!(SimulateArgs, OccupationArgs);

fn simulate(a: SimulateArgs) -> Fallible<()> {
    let p = process(&a)?;
    let times = a.times.unwrap_or_else(|| vec![1.0]);
    if times.is_empty() {
        return Err("--times must list at least one time".into());
    }
    let samples = positive("samples", a.samples.unwrap_or(1000))?;
    let (rows, overflow) = iterate_batch(
        &p,
        &times,
        a.depth.unwrap_or(1),
        samples,
        RandomStream::from_seed(seed(a.seed)?),
    )
    .map_err(|e| format!("--times: {e}"))?;
    emit(
        a.out.as_deref(),
        &csv_table(&header("x", times.len()), &rows),
    )?;
    eprintln!(
        "simulate: {samples} samples, {} times, {overflow} overflowed values",
        times.len()
    );
    Ok(())
}

fn exact(a: ExactArgs) -> Fallible<()> {
    let k = match (a.k, &a.rates) {
        (Some(k), Some(r)) if r.len() != k => {
            return Err(format!("--rates has {} entries but --k is {k}", r.len()))
        }
        (Some(k), _) => k,
        (None, Some(r)) => r.len(),
        (None, None) => return Err("--k or --rates is required".into()),
    };
    positive("k", k)?;
    let rates = a.rates.unwrap_or_else(|| vec![1.0; k]);
    if !rates.iter().all(|r| *r > 0.0 && r.is_finite()) {
        return Err("--rates must be positive and finite".into());
    }
    let labelling = match a.labelling {
        Some(l) => Permutation::new(l).map_err(|e| format!("--labelling: {e}"))?,
        None => Permutation::identity(k + 1),
    };
    if labelling.len() != k + 1 {
        return Err(format!("--labelling must have k + 1 = {} entries", k + 1));
    }
    let mut policy = PruningPolicy::default();
    if let Some(m) = a.prune_max {
        policy.max_atoms = positive("prune-max", m)?;
    }
    let samples = positive("samples", a.samples.unwrap_or(1000))?;
    let out = exact_iterated_sampler(
        a.depth.unwrap_or(1),
        &rates,
        &labelling,
        samples,
        &policy,
        RandomStream::from_seed(seed(a.seed)?),
    )
    .map_err(|e| e.to_string())?;
    emit(a.out.as_deref(), &csv_table(&header("x", k), &out.samples))?;
    if let Some(p) = a.mixture_out.as_deref() {
        emit(Some(p), &out.mixture.to_json().map_err(|e| e.to_string())?)?;
    }
    eprintln!(
        "exact: {samples} samples, {} atoms, pruned mass {:e}",
        out.mixture.len(),
        out.tv_bound
    );
    Ok(())
}

fn param_chain(a: ParamChainArgs) -> Fallible<()> {
    let k = positive("k", a.k.ok_or("--k is required")?)?;
    let chain = ParamChain::plain(k).map_err(|e| format!("--k: {e}"))?;
    let thin = positive("thin", a.thin.unwrap_or(1))?;
    let mut rng = RandomStream::from_seed(seed(a.seed)?).rng();
    let states = chain
        .run(
            &vec![2.0f64; k],
            a.steps.unwrap_or(1000),
            a.burn_in.unwrap_or(0),
            thin,
            &mut rng,
        )
        .map_err(|e| e.to_string())?;
    emit(a.out.as_deref(), &csv_table(&header("lambda", k), &states))
}

fn attractor(a: AttractorArgs) -> Fallible<()> {
    let k = positive("k", a.k.ok_or("--k is required")?)?;
    let stream = RandomStream::from_seed(seed(a.seed)?);
    let steps = a.steps.unwrap_or(100_000);
    let burn_in = a.burn_in.unwrap_or(100);
    let csv = match a.method.as_deref().unwrap_or("boxes") {
        "boxes" => {
            let resolution = a.resolution.unwrap_or(0.05);
            let cover = BoxSet::full(k, resolution)
                .and_then(|b| b.iterate(a.depth.unwrap_or(8)))
                .map_err(|e| format!("--resolution: {e}"))?;
            eprintln!(
                "attractor: {} boxes of side {}",
                cover.len(),
                cover.resolution()
            );
            cover.to_csv()
        }
        "chaos" => chaos_game::<f64>(k, steps, burn_in, &stream)
            .map_err(|e| e.to_string())?
            .to_csv(),
        "chaos-uniform" => chaos_game_uniform::<f64>(k, steps, burn_in, &stream)
            .map_err(|e| e.to_string())?
            .to_csv(),
        other => return Err(format!("--method: unknown method {other:?}")),
    };
    emit(a.out.as_deref(), &csv)
}

fn occupation(a: OccupationArgs) -> Fallible<()> {
    let p = process(&a)?;
    let clip = match a.clip.as_deref() {
        None => None,
        Some(&[lo, hi]) => Some((lo, hi)),
        Some(_) => return Err("--clip takes exactly two values lo,hi".into()),
    };
    let mut rng = RandomStream::from_seed(seed(a.seed)?).rng();
    let h = occupation_histogram(
        &p,
        a.depth.unwrap_or(1),
        positive("points", a.points.unwrap_or(10_000))?,
        positive("bins", a.bins.unwrap_or(100))?,
        clip,
        &mut rng,
    )
    .map_err(|e| e.to_string())?;
    eprintln!("occupation: {} values, {} clipped", h.total(), h.clipped);
    emit(a.out.as_deref(), &h.to_csv())
}

fn verify(a: VerifyArgs) -> Fallible<i32> {
    let name = a.suite.as_deref().unwrap_or("all");
    let suite: Suite = name.parse().map_err(|e| format!("--suite: {e}"))?;
    let seed = seed(a.seed)?;
    let outcome = run_suite(suite, seed, a.quick);
    for r in &outcome.reports {
        eprintln!("{}", r.summary());
    }
    for (check, msg) in &outcome.errors {
        eprintln!("ERROR {check}: {msg}");
    }
    let code = outcome.exit_code();
    let errors: Vec<_> = outcome
        .errors
        .iter()
        .map(|(c, m)| json!({"check": c, "error": m}))
        .collect();
    let doc = json!({
        "suite": name,
        "seed": seed,
        "quick": a.quick,
        "exit_code": code,
        "reports": outcome.reports,
        "errors": errors,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    text.push('\n');
    emit(a.out.as_deref(), &text)?;
    Ok(code)
}

fn run(cli: Cli) -> Fallible<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(positive("threads", n)?)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => simulate(config::overlay(&a, cfg)?).map(|_| 0),
        Command::Exact(a) => exact(config::overlay(&a, cfg)?).map(|_| 0),
        Command::ParamChain(a) => param_chain(config::overlay(&a, cfg)?).map(|_| 0),
        Command::Attractor(a) => attractor(config::overlay(&a, cfg)?).map(|_| 0),
        Command::Occupation(a) => occupation(config::overlay(&a, cfg)?).map(|_| 0),
        Command::Verify(a) => verify(config::overlay(&a, cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
