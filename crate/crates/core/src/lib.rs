//! Entire solutions of bistable reaction–diffusion equations whose level sets
//! approach a polytope of planar traveling fronts.

// `!(a < b)` is how NaN is kept out of comparisons here.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod pde;
pub mod profile;
pub mod reaction;
pub mod surface;

pub use bounds::{admissible_params, BoundParams, LowerBarrier, ShiftCombinator, Side, SurfaceBarrier};
pub use error::{Error, Result};
pub use field::SpaceTimeField;
pub use geometry::{Front, FrontArrangement, RotatedFamily};
pub use profile::{solve_profile, FrontProfile, ProfileConstants, ProfileOptions};
pub use reaction::ReactionSpec;
pub use surface::{ImplicitSurface, SurfaceKind, SurfacePoint};
