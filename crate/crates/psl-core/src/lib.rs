//! Numerical core for a planar string model.

pub mod constraints;
pub mod invariants;
pub mod mechanics;
pub mod profile;
pub mod quadrature;
pub mod special;
pub mod worldsheet;
