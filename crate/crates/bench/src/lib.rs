//! Fixtures shared by the solver benchmarks.

use semsat_core::{generate_random_scenario, LengthVector, Scenario, ScenarioRanges};

/// Seeded random scenario with the default generator ranges.
pub fn scenario(seed: u64, k: usize, u: usize) -> Scenario {
    generate_random_scenario(seed, k, u, &ScenarioRanges::default()).expect("valid sizes")
}

/// Mid-range ratio for every satellite.
pub fn mid_lengths(s: &Scenario) -> LengthVector {
    LengthVector::uniform(s.k(), s.crs.len() / 2)
}
