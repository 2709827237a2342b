//! Convexity relative to cost functions on bounded intervals.

pub mod cost;
pub mod error;
pub mod grid;
pub mod io;
pub mod jensen;
pub mod propcheck;
pub mod subdiff;
pub mod transform;
pub mod verdict;

pub use cost::{check_structure, CostMatrix, CostSpec, StructureProperty, StructureVerdict, TranslationKernel};
pub use error::{Error, Result};
pub use grid::{quadrature, sup_norm_diff, DiscreteMeasure, Grid, GridFunction, Interval, QuadratureRule};
pub use transform::{c_transform, double_c_transform, fenchel_conjugate_fast, is_c_convex, TransformResult};
