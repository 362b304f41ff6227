//! Kernel ridge regression, posterior variance and confidence bounds.

mod confidence;
mod data;
mod model;
mod target;

pub use confidence::{
    fundleb_rhs, fundlebtwo_gate, fundlebtwo_rhs, o_n, DeffBound, PointwiseBound,
};
pub use data::Dataset;
pub use model::{KrrModel, RegularizationSpec};
pub use target::{rkhs_norm, TargetFunction, Term};
