//! Spatial vectors in world coordinates, referenced to the world origin.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::linalg::{Mat3, Vec3};

/// Spatial motion: angular velocity and the linear velocity of the point
/// currently at the world origin.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Motion {
    pub w: Vec3,
    pub v: Vec3,
}

/// Spatial force: moment about the world origin and linear force.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Force {
    pub n: Vec3,
    pub f: Vec3,
}

impl Motion {
    pub const ZERO: Motion = Motion {
        w: Vec3::ZERO,
        v: Vec3::ZERO,
    };

    pub fn new(w: Vec3, v: Vec3) -> Self {
        Motion { w, v }
    }

    /// Velocity of a world point moving with this motion.
    pub fn point_velocity(&self, p: Vec3) -> Vec3 {
        self.v + self.w.cross(p)
    }

    pub fn cross_motion(&self, m: &Motion) -> Motion {
        Motion {
            w: self.w.cross(m.w),
            v: self.w.cross(m.v) + self.v.cross(m.w),
        }
    }

    pub fn cross_force(&self, f: &Force) -> Force {
        Force {
            n: self.w.cross(f.n) + self.v.cross(f.f),
            f: self.w.cross(f.f),
        }
    }

    pub fn dot(&self, f: &Force) -> f64 {
        self.w.dot(f.n) + self.v.dot(f.f)
    }
}

impl Add for Motion {
    type Output = Motion;
    fn add(self, o: Motion) -> Motion {
        Motion {
            w: self.w + o.w,
            v: self.v + o.v,
        }
    }
}

impl Sub for Motion {
    type Output = Motion;
    fn sub(self, o: Motion) -> Motion {
        Motion {
            w: self.w - o.w,
            v: self.v - o.v,
        }
    }
}

impl Neg for Motion {
    type Output = Motion;
    fn neg(self) -> Motion {
        Motion { w: -self.w, v: -self.v }
    }
}

impl Mul<f64> for Motion {
    type Output = Motion;
    fn mul(self, s: f64) -> Motion {
        Motion {
            w: self.w * s,
            v: self.v * s,
        }
    }
}

impl AddAssign for Motion {
    fn add_assign(&mut self, o: Motion) {
        self.w += o.w;
        self.v += o.v;
    }
}

impl Add for Force {
    type Output = Force;
    fn add(self, o: Force) -> Force {
        Force {
            n: self.n + o.n,
            f: self.f + o.f,
        }
    }
}

impl AddAssign for Force {
    fn add_assign(&mut self, o: Force) {
        self.n += o.n;
        self.f += o.f;
    }
}

/// Rigid-body inertia about the world origin: mass, first moment `m·c`
/// and rotational inertia about the origin.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpatialInertia {
    pub m: f64,
    pub h: Vec3,
    pub i: Mat3,
}

impl SpatialInertia {
    /// From mass, world COM and world-axis inertia about the COM.
    pub fn from_body(m: f64, com: Vec3, i_com: Mat3) -> Self {
        let h = com * m;
        let shift = (Mat3::diag(Vec3::splat(com.norm_squared())) - Mat3::outer(com, com)).scale(m);
        SpatialInertia { m, h, i: i_com + shift }
    }

    pub fn apply(&self, a: &Motion) -> Force {
        Force {
            n: self.i * a.w + self.h.cross(a.v),
            f: a.v * self.m - self.h.cross(a.w),
        }
    }
}

impl AddAssign for SpatialInertia {
    fn add_assign(&mut self, o: SpatialInertia) {
        self.m += o.m;
        self.h += o.h;
        self.i = self.i + o.i;
    }
}
