//! Mixed-level U-type designs, wrap-around L2 discrepancy, and
//! near-uniform column augmentation.
//!
//! The library covers the full follow-up-design workflow:
//!
//! - represent and validate mixed two-/three-level U-type designs
//!   ([`design`]);
//! - evaluate the squared wrap-around L2 discrepancy directly, through
//!   the coincidence reformulation, and incrementally under swap moves
//!   ([`wd`]);
//! - evaluate the E(f_NOD) non-orthogonality criterion by two
//!   independent routes ([`fnod`]);
//! - compute analytical lower bounds on both criteria for column
//!   augmented designs with additional three-level factors, one or two
//!   blocking factors, and multi-stage row augmentation ([`bounds`]);
//! - search for augmentations that meet those bounds with a
//!   threshold-accepting heuristic ([`search`]);
//! - read and write the design text format ([`io`]).
//!
//! See the crate examples for one runnable program per capability, and
//! the `udesign` binary for the command-line surface.

pub mod bounds;
pub mod design;
pub mod error;
pub mod fnod;
pub mod io;
pub mod search;
pub mod wd;

pub use bounds::{BoundKind, BoundReport, InitialKind};
pub use design::{
    assemble, check_augment_compatibility, coincidence_profile, validate_u_type, AugmentSpec,
    AugmentedDesign, BlockingScheme, CoincidenceProfile, D2Mode, Design, LevelClass,
};
pub use error::{Error, Result};
pub use fnod::{e_fnod, e_fnod_from_coincidences, efficiency, fnod_pair, Efficiency,
    EfficiencyReport};
pub use search::{
    augment_one_block, augment_two_block, multistage_augment, neighbor, ta_augment,
    threshold_schedule, MultiStagePlan, SearchResult, TaConfig,
};
pub use wd::{wd_delta_swap, wd_squared, wd_squared_augmented, WdValue};
