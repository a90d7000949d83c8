//! Two-variable logarithmic functions: terms, branch evaluation, formal
//! derivatives, region series, paths and continuation.

pub mod continuation;
pub mod expand;
pub mod function;
pub mod path;

pub use continuation::{
    continue_along, continue_along_with, winding_profile, Continuation, ContinuationError, ContinuationOptions,
    CutCrossing, Tracked, WindingProfile,
};
pub use expand::{expand_region, ExpKey, RegionExpansion, RegionId};
pub use function::{BranchTriple, LogFunction, LogMonomial, OneVarLogSeries, SeriesTerm, Var};
pub use path::{loops, Center, Config, Move, PathError, PathSpec};
