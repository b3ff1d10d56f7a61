use std::ops::Mul;

use super::{Quat, Vec3};

/// Rigid transform: `x ↦ R(rotation)·x + translation`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Transform {
    pub translation: Vec3,
    pub rotation: Quat,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        translation: Vec3::ZERO,
        rotation: Quat::IDENTITY,
    };

    pub fn new(translation: Vec3, rotation: Quat) -> Self {
        Self { translation, rotation }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(translation, Quat::IDENTITY)
    }

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    #[inline]
    pub fn apply_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.rotate(v)
    }

    #[inline]
    pub fn inverse_apply(&self, p: Vec3) -> Vec3 {
        self.rotation.inverse_rotate(p - self.translation)
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.inverse();
        Self::new(-r.rotate(self.translation), r)
    }

    pub fn is_finite(&self) -> bool {
        self.translation.is_finite() && self.rotation.is_finite()
    }
}

/// `a * b` applies `b` first, then `a`.
impl Mul for Transform {
    type Output = Transform;
    #[inline]
    fn mul(self, b: Transform) -> Transform {
        Transform::new(self.apply(b.translation), self.rotation * b.rotation)
    }
}
