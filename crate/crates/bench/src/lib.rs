//! Shared instance builders for the benchmark targets.

use dbar_core::lattice::{ConfigSpace, Volume};
use dbar_core::measures::{Measure, ProcessSpec};
use dbar_core::sampling::{random_measure, rng_from_seed};

/// Random Dirichlet pair on `sites` binary sites.
pub fn random_pair(sites: i64, seed: u64) -> (Measure, Measure) {
    let space = ConfigSpace::new(Volume::interval(0, sites - 1).unwrap(), 2).unwrap();
    let mut rng = rng_from_seed(seed);
    (
        random_measure(&space, &mut rng).unwrap(),
        random_measure(&space, &mut rng).unwrap(),
    )
}

/// The mismatched two-state chains used across the thermo experiments.
pub fn chain_pair(sites: i64) -> (Measure, Measure) {
    let volume = Volume::interval(0, sites - 1).unwrap();
    (
        ProcessSpec::two_state_flip(0.1).unwrap().realize(&volume).unwrap(),
        ProcessSpec::two_state_flip(0.3).unwrap().realize(&volume).unwrap(),
    )
}
