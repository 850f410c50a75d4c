//! Monte Carlo engine: stable, Brownian and reflected Brownian processes
//! evaluated jointly at finite time sets, and their iteration.

mod occupation;
mod process;
mod product;
mod range;
mod stable;

pub use occupation::{divergence_probe, occupation_histogram, Histogram};
pub use process::{
    eval_process_at, eval_reflected_at, gaps_chain_step, iterate_batch, iterate_fdd, Iterated,
    Process,
};
pub use product::product_formula_sample;
pub use range::{range_product_sample, range_sample, single_level_range};
pub use stable::sample_stable_standard;
