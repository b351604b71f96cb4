//! Minimal reverse-mode differentiation over `f64` tensors.
//!
//! Graphs are built eagerly as operations run. A result tracks gradients
//! when any input does; [`stop_gradient`] and [`no_grad`] cut the graph.

mod check;
mod conv;
mod ops;
mod tensor;

pub use check::{gradient_check, gradient_check_against, GradCheckReport, ParamCheck, SCALE_FLOOR};
pub use ops::{broadcast_shape, sigmoid, softplus, PadMode};
pub use tensor::{is_grad_enabled, no_grad, stop_gradient, CustomOp, Tensor};
