//! Shared fixtures for the criterion benches.

use fistab_core::dataset::generate_synthetic;
use fistab_core::{Dataset, SyntheticSpec};

/// Balanced linear-combination dataset with `p` features.
pub fn fixture(n: usize, p: usize, seed: u64) -> Dataset {
    let spec = SyntheticSpec::calibrated(p, n, 0.5, seed).expect("valid fixture spec");
    generate_synthetic(&spec).expect("fixture generation")
}
