//! Combinatorial and arithmetic kernel: gaps, encodings, E-sets and the
//! rate maps with their branch weights for the plain, reflected and
//! encoding chains.

mod gaps;
mod maps;
mod params;

pub use gaps::{decode, encode, gaps, prefix_sums, Encoding, GapVector};
pub use maps::{e_sets, e_w_pair, f_tau, f_w_reflected, w_tau, Branch, BranchKind, BranchTable};
pub use params::StableParams;
