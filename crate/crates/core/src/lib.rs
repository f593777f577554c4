//! Pseudo-spectral simulation and verification toolkit for the 3D stochastic
//! Burgers equation `du = (νΔu - (u·∇)u) dt + u ∘ dW` on the torus `[0, 2π)³`.

pub mod error;
pub mod moments;
pub mod noise;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
