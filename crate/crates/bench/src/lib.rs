//! Shared fixtures for the benchmarks.

use front_forge::config::symmetric_pair;
use front_forge::{solve_profile, FrontArrangement, FrontProfile, ProfileOptions, ReactionSpec};

pub fn spec() -> ReactionSpec {
    ReactionSpec::cubic(0.25).expect("valid threshold")
}

pub fn profile() -> FrontProfile {
    solve_profile(&spec(), &ProfileOptions::default()).expect("profile solves")
}

/// The symmetric pair at `pi/4`.
pub fn pair(prof: &FrontProfile) -> FrontArrangement {
    FrontArrangement::new(2, symmetric_pair(std::f64::consts::FRAC_PI_4, 0.0), prof.speed()).expect("valid pair")
}
