use super::MjcfError;
use crate::linalg::{Quat, Vec3};

/// Composes three axis rotations. Lowercase letters rotate about the
/// current (moving) axes, uppercase letters about the fixed world axes.
pub fn euler_to_quat(angles: Vec3, seq: &str) -> Result<Quat, MjcfError> {
    let chars: Vec<char> = seq.chars().collect();
    if chars.len() != 3 {
        return Err(MjcfError::BadSequence(seq.to_string()));
    }
    let mut q = Quat::IDENTITY;
    for (i, c) in chars.into_iter().enumerate() {
        let axis = match c.to_ascii_lowercase() {
            'x' => Vec3::X,
            'y' => Vec3::Y,
            'z' => Vec3::Z,
            _ => return Err(MjcfError::BadSequence(seq.to_string())),
        };
        let r = Quat::from_axis_angle(axis, angles[i]);
        q = if c.is_ascii_lowercase() { q * r } else { r * q };
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat3;
    use std::f64::consts::FRAC_PI_2;

    fn axis_matrix(axis: char, a: f64) -> Mat3 {
        let (s, c) = a.sin_cos();
        match axis {
            'x' => Mat3 {
                m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
            },
            'y' => Mat3 {
                m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
            },
            _ => Mat3 {
                m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            },
        }
    }

    #[test]
    fn zero_angles_give_identity() {
        for seq in ["xyz", "zyx", "xzx", "XYZ"] {
            let q = euler_to_quat(Vec3::ZERO, seq).unwrap();
            assert!((q.w - 1.0).abs() < 1e-15 && q.vector().norm() < 1e-15);
        }
    }

    #[test]
    fn single_axis_x() {
        let q = euler_to_quat(Vec3::new(FRAC_PI_2, 0.0, 0.0), "xyz").unwrap();
        let expected = Quat::from_axis_angle(Vec3::X, FRAC_PI_2);
        assert!((q.dot(expected).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intrinsic_zyx_matches_matrix_product() {
        let angles = Vec3::new(0.3, -1.1, 2.2);
        let q = euler_to_quat(angles, "zyx").unwrap();
        // intrinsic: R = Rz(a0) · Ry(a1) · Rx(a2)
        let r = axis_matrix('z', angles.x) * axis_matrix('y', angles.y) * axis_matrix('x', angles.z);
        let oracle = Quat::from_mat3(&r);
        let q = q.canonicalize();
        for (a, b) in q.to_array().iter().zip(oracle.to_array()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn extrinsic_is_reversed_product() {
        let angles = Vec3::new(0.4, 0.2, -0.7);
        let q = euler_to_quat(angles, "XYZ").unwrap().canonicalize();
        let r = axis_matrix('z', angles.z) * axis_matrix('y', angles.y) * axis_matrix('x', angles.x);
        let oracle = Quat::from_mat3(&r);
        for (a, b) in q.to_array().iter().zip(oracle.to_array()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_sequences_rejected() {
        assert!(matches!(euler_to_quat(Vec3::ZERO, "xy"), Err(MjcfError::BadSequence(_))));
        assert!(matches!(euler_to_quat(Vec3::ZERO, "xyw"), Err(MjcfError::BadSequence(_))));
    }
}
