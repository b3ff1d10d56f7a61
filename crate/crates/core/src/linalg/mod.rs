//! Small fixed-size geometry types and dense linear algebra.
//!
//! Quaternions are scalar-first Hamilton quaternions `(w, x, y, z)`. Angular
//! velocities handed to [`Quat::integrate`] are expressed in the body frame,
//! so `q' = q ⊗ exp(h·ω/2)`. That convention is used everywhere in the crate.

mod dense;
mod mat3;
mod quat;
mod transform;
mod vec3;

pub use dense::{solve_spd, Cholesky, DenseMat, LinalgError};
pub use mat3::Mat3;
pub use quat::Quat;
pub use transform::Transform;
pub use vec3::Vec3;

/// Renormalized Hamilton product `a ⊗ b`.
pub fn quat_mul(a: Quat, b: Quat) -> Quat {
    a * b
}

/// `R(q)·p`.
pub fn rotate_point(q: Quat, p: Vec3) -> Vec3 {
    q.rotate(p)
}

/// Advances `q` by the body-frame angular velocity `omega` over `h`.
pub fn integrate_quat(q: Quat, omega: Vec3, h: f64) -> Quat {
    q.integrate(omega, h)
}
