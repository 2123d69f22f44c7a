//! Model-based comparison controllers.

pub mod lqi;
pub mod nmpc;
pub mod riccati;
