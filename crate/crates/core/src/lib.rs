#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0.0)` style checks reject NaN on purpose.

pub mod camera;
pub mod cloud;
pub mod descriptor;
pub mod eval;
pub mod exec;
pub mod geom;
pub mod io;
pub mod optimize;
pub mod pipeline;
pub mod search;
pub mod sim;
