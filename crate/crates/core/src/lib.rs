//! Batched rigid-body simulation with a velocity-impulse contact solver.
//!
//! The step pipeline: forward kinematics, mass matrix and bias forces,
//! collision detection with persistent manifolds, constraint assembly with
//! compliance, Schur reduction of equality rows, projected Gauss-Seidel on
//! the remaining rows per constraint island, then semi-implicit integration.

pub mod batch;
pub mod collision;
pub mod dynamics;
pub mod exec;
pub mod linalg;
pub mod mjcf;
pub mod model;
pub mod rlgk;
pub mod scenario;
pub mod sensors;
pub mod solver;
