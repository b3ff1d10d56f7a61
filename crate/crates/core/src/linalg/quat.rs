use super::{Mat3, Vec3};

/// Scalar-first Hamilton quaternion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    #[inline]
    pub fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let a = axis.normalize();
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, a.x * s, a.y * s, a.z * s)
    }

    /// Exponential map of a rotation vector (axis scaled by angle).
    pub fn from_rotation_vector(rv: Vec3) -> Self {
        let angle = rv.norm();
        if angle < 1e-12 {
            // second-order series keeps tiny steps accurate
            let half = rv * 0.5;
            return Self::new(1.0 - half.norm_squared() * 0.5, half.x, half.y, half.z).normalize();
        }
        Self::from_axis_angle(rv / angle, angle)
    }

    /// Logarithm map: the rotation vector of the (canonicalized) quaternion.
    pub fn to_rotation_vector(self) -> Vec3 {
        let q = self.canonicalize();
        let v = q.vector();
        let s = v.norm();
        if s < 1e-12 {
            return v * 2.0;
        }
        let angle = 2.0 * s.atan2(q.w);
        v * (angle / s)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
        } else {
            Self::IDENTITY
        }
    }

    /// Representative with `w >= 0` (q and -q encode the same rotation).
    pub fn canonicalize(self) -> Self {
        if self.w < 0.0 {
            Self::new(-self.w, -self.x, -self.y, -self.z)
        } else {
            self
        }
    }

    #[inline]
    pub fn conjugate(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Inverse of a unit quaternion.
    #[inline]
    pub fn inverse(self) -> Self {
        self.conjugate()
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Raw Hamilton product without renormalization.
    #[inline]
    pub fn hamilton(self, b: Self) -> Self {
        let a = self;
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    /// `R(q)·p`.
    #[inline]
    pub fn rotate(self, p: Vec3) -> Vec3 {
        let u = self.vector();
        let t = u.cross(p) * 2.0;
        p + t * self.w + u.cross(t)
    }

    /// `R(q)ᵀ·p`.
    #[inline]
    pub fn inverse_rotate(self, p: Vec3) -> Vec3 {
        self.conjugate().rotate(p)
    }

    pub fn to_mat3(self) -> Mat3 {
        let Quat { w, x, y, z } = self;
        Mat3 {
            m: [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ],
        }
    }

    /// Rotation matrix to quaternion (Shepperd's method), canonical `w >= 0`.
    pub fn from_mat3(r: &Mat3) -> Self {
        let m = &r.m;
        let tr = r.trace();
        let q = if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            Self::new(0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s)
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            Self::new((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s)
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            Self::new((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s)
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            Self::new((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s)
        };
        q.normalize().canonicalize()
    }

    /// Frame whose x and y axes are the given vectors (orthogonalized).
    pub fn from_xy_axes(x: Vec3, y: Vec3) -> Self {
        let xa = x.normalize();
        let ya = (y - xa * xa.dot(y)).normalize();
        let za = xa.cross(ya);
        Self::from_mat3(&Mat3::from_cols(xa, ya, za))
    }

    /// Minimal rotation taking +z onto `z`.
    pub fn from_z_axis(z: Vec3) -> Self {
        let z = z.normalize();
        let c = Vec3::Z.dot(z);
        if c < -1.0 + 1e-12 {
            return Self::new(0.0, 1.0, 0.0, 0.0);
        }
        let axis = Vec3::Z.cross(z);
        Self::new(1.0 + c, axis.x, axis.y, axis.z).normalize()
    }

    /// Advance by body-frame angular velocity `omega` over `h` seconds:
    /// `q ⊗ exp(h·ω/2)`, renormalized.
    pub fn integrate(self, omega: Vec3, h: f64) -> Self {
        self.hamilton(Self::from_rotation_vector(omega * h)).normalize()
    }

    /// Geodesic angle in `[0, π]` between two orientations.
    pub fn angle_to(self, o: Self) -> f64 {
        // atan2 form keeps precision near zero
        let rel = self.conjugate().hamilton(o);
        2.0 * rel.vector().norm().atan2(rel.w.abs())
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Hamilton product `a ⊗ b`, renormalized.
impl std::ops::Mul for Quat {
    type Output = Quat;
    #[inline]
    fn mul(self, b: Quat) -> Quat {
        self.hamilton(b).normalize()
    }
}
