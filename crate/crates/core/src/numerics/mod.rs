//! Dense matrices, taped reverse-mode gradients, Adam, and gradient checking.

mod adam;
mod gradcheck;
mod matrix;
mod rng;
mod tape;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, Objective, ParamCheck, REL_ERR_FLOOR};
pub use matrix::{dot, matmul, softmax, Matrix};
pub use rng::{normal_matrix, seeded_rng, uniform_matrix, SeededRng};
pub use tape::{Gradients, Tape, Var};
