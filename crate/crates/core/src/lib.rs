//! Tessellated kernels learned by solving a saddle-point problem over
//! `{P ⪰ 0, trace P = n_P}` with Frank-Wolfe or accelerated primal-dual
//! iterations.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apd;
pub mod bench;
pub mod data;
pub mod eig;
pub mod error;
pub mod kernel;
pub mod fw;
pub mod matrix;
pub mod model;
pub mod problem;
pub mod qp;
pub mod synth;

pub use error::{Error, Result};
pub use data::Dataset;
pub use matrix::SymmetricMatrix;
pub use model::{fit, Fitted, Metric, TkPredictor};
pub use qp::{DualVariables, QpSolution, Task};
pub use problem::{Algorithm, GklProblem, TrainConfig, TrainData, TrainResult};
