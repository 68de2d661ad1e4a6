//! Generalized entropy of dynamical systems.
//!
//! The crate estimates the order of growth `o(f)` of a map through
//! separated-set counts over an entourage base, classifies the resulting
//! series, and counts orbit codings relative to finite families of
//! wandering sets.

pub mod coding;
pub mod entropy;
pub mod growth;
pub mod systems;
pub mod uniformity;

pub use growth::{
    classify, compare, parse_sequence, project_exp, project_poly, sup, Bands, ClassLabel, ComparisonVerdict,
    GrowthClass, GrowthError, GrowthSeries, Relation,
};
pub use uniformity::{Dyadic, EntourageFamily, Level, Point, SampledCompact, Side, UniformityError};
pub use systems::{build, CatalogOptions, Coords, SystemError, SystemInstance};
pub use entropy::{entropy_profile, restricted_profile, CompactSelector, EntropyError, ProfileOptions};
pub use coding::{codings_count, CodingError, CodingFamily, Member, Shape};
