//! Finite rooted metric measure spaces: construction, restriction, lower
//! mass functions, comparison distances (Prohorov, Hausdorff, pointed
//! Gromov-type upper bounds, a localized two-level distance), distance
//! matrix distributions, excursion-encoded real trees, tree and path
//! generators, and deterministic convergence experiments.

pub mod align;
pub mod error;
pub mod excursion;
pub mod experiment;
mod flow;
pub mod mat;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod space;
pub mod synth;
pub mod treegen;

pub use error::{Error, Result};
pub use space::FiniteMMSpace;
