//! Shared inputs for the benchmarks.

use fracgen_core::synthetic::{correlated_set, CorrelatedSpec};
use fracgen_core::DiscontinuitySet;

/// Seeded draws from the reference correlated table.
pub fn reference_set(n: usize, seed: u64) -> DiscontinuitySet {
    correlated_set(&CorrelatedSpec::reference(), n, seed).expect("reference spec is valid")
}
