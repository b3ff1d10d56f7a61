//! Height scans and lidar patterns.

use std::f64::consts::{PI, TAU};

use super::ray::{raycast, raycast_filtered};
use crate::dynamics::Kinematics;
use crate::linalg::{Transform, Vec3};
use crate::model::Model;

#[derive(Clone, Debug, PartialEq)]
pub enum PatternKind {
    /// Downward rays from an `nx × ny` grid of origins, axis-aligned.
    Grid { nx: usize, ny: usize, spacing: f64 },
    /// Spinning multi-channel scanner: `channels` elevations between
    /// `min_elev` and `max_elev`, `azimuths` rays per revolution.
    Rotating {
        channels: usize,
        azimuths: usize,
        min_elev: f64,
        max_elev: f64,
    },
    /// Fixed field of view, `nh × nv` rays.
    SolidState { h_fov: f64, v_fov: f64, nh: usize, nv: usize },
    /// Rose-curve scan whose phase advances every frame, so consecutive
    /// frames cover different directions.
    Rosette {
        points: usize,
        petals: usize,
        fov: f64,
        phase_step: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayPattern {
    pub kind: PatternKind,
    pub body: usize,
    /// Sensor frame relative to the body.
    pub offset: Transform,
    pub max_range: f64,
}

fn spherical(az: f64, el: f64) -> Vec3 {
    Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
}

fn lerp_n(a: f64, b: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.5 * (a + b)
    } else {
        a + (b - a) * i as f64 / (n - 1) as f64
    }
}

impl RayPattern {
    /// Ray origins and unit directions in the sensor frame for a frame index.
    pub fn rays(&self, frame: u64) -> Vec<(Vec3, Vec3)> {
        match self.kind {
            PatternKind::Grid { nx, ny, spacing } => grid_offsets(nx, ny, spacing)
                .into_iter()
                .map(|(x, y)| (Vec3::new(x, y, 0.0), -Vec3::Z))
                .collect(),
            PatternKind::Rotating {
                channels,
                azimuths,
                min_elev,
                max_elev,
            } => {
                let mut out = Vec::with_capacity(channels * azimuths);
                for c in 0..channels {
                    let el = lerp_n(min_elev, max_elev, c, channels);
                    for a in 0..azimuths {
                        out.push((Vec3::ZERO, spherical(TAU * a as f64 / azimuths as f64, el)));
                    }
                }
                out
            }
            PatternKind::SolidState { h_fov, v_fov, nh, nv } => {
                let mut out = Vec::with_capacity(nh * nv);
                for v in 0..nv {
                    let el = lerp_n(-0.5 * v_fov, 0.5 * v_fov, v, nv);
                    for h in 0..nh {
                        out.push((Vec3::ZERO, spherical(lerp_n(-0.5 * h_fov, 0.5 * h_fov, h, nh), el)));
                    }
                }
                out
            }
            PatternKind::Rosette {
                points,
                petals,
                fov,
                phase_step,
            } => {
                let phase = phase_step * frame as f64;
                (0..points)
                    .map(|i| {
                        let s = TAU * i as f64 / points as f64;
                        // off-axis angle follows a rose curve, rotated by the frame phase
                        let off = 0.5 * fov * (petals as f64 * s).sin().abs();
                        let az = s + phase;
                        let d = Vec3::new(off.cos(), off.sin() * az.cos(), off.sin() * az.sin());
                        (Vec3::ZERO, d)
                    })
                    .collect()
            }
        }
    }

    /// Sensor frame in world coordinates.
    pub fn frame(&self, kin: &Kinematics) -> Transform {
        kin.xform[self.body] * self.offset
    }
}

fn grid_offsets(nx: usize, ny: usize, spacing: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 - 0.5 * (nx as f64 - 1.0)) * spacing;
            let y = (j as f64 - 0.5 * (ny as f64 - 1.0)) * spacing;
            out.push((x, y));
        }
    }
    out
}

/// Terrain height under a world-aligned grid centred on `base_body`,
/// relative to the base origin. The robot's own tree is ignored so the
/// scan sees terrain. Misses read `-max_range`. Row-major, `x` fastest.
pub fn height_scan(model: &Model, kin: &Kinematics, base_body: usize, nx: usize, ny: usize, spacing: f64, max_range: f64) -> Vec<f64> {
    let base = kin.xform[base_body].translation;
    let tree = model.bodies[base_body].tree;
    let own = |g: usize| tree.is_some() && model.bodies[model.geoms[g].body].tree == tree;
    grid_offsets(nx, ny, spacing)
        .into_iter()
        .map(|(x, y)| {
            let o = base + Vec3::new(x, y, 0.0);
            match raycast_filtered(model, kin, o, -Vec3::Z, max_range, own) {
                Some(hit) => hit.point.z - base.z,
                None => -max_range,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    /// Hit point in the sensor frame.
    pub point: Vec3,
    pub distance: f64,
    pub geom: usize,
}

/// Casts every ray of the pattern against the current geometry; rays that
/// miss are dropped.
pub fn lidar_scan(model: &Model, kin: &Kinematics, pattern: &RayPattern, frame: u64) -> Vec<ScanPoint> {
    let x = pattern.frame(kin);
    pattern
        .rays(frame)
        .into_iter()
        .filter_map(|(o, d)| {
            let wo = x.apply(o);
            let wd = x.apply_vector(d);
            raycast(model, kin, wo, wd, pattern.max_range).map(|h| ScanPoint {
                point: x.inverse_apply(h.point),
                distance: h.distance,
                geom: h.geom,
            })
        })
        .collect()
}

/// Default rosette: 64 points, 7 petals, 70° cone, golden-angle phase.
pub fn rosette(body: usize, offset: Transform, max_range: f64) -> RayPattern {
    RayPattern {
        kind: PatternKind::Rosette {
            points: 64,
            petals: 7,
            fov: 70f64.to_radians(),
            phase_step: PI * (3.0 - 5f64.sqrt()),
        },
        body,
        offset,
        max_range,
    }
}
