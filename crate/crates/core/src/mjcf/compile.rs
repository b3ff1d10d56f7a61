use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;

use super::euler::euler_to_quat;
use super::parse::{Attrs, BodySpec, DefaultSpec, ElementSpec, ModelSpec};
use super::MjcfError;
use crate::linalg::{DenseMat, Mat3, Quat, Transform, Vec3};
use crate::model::*;

struct Class<'a> {
    parent: Option<&'a str>,
    elements: &'a BTreeMap<String, Attrs>,
}

struct Ctx<'a> {
    classes: HashMap<&'a str, Class<'a>>,
    degrees: bool,
    eulerseq: String,
    autolimits: bool,
    warnings: Vec<String>,
    spec: &'a ModelSpec,
}

fn parse_nums(path: &str, key: &str, s: &str) -> Result<Vec<f64>, MjcfError> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| MjcfError::compile(path, format!("attribute '{key}': bad number {t:?}")))
        })
        .collect()
}

fn exact<const N: usize>(path: &str, key: &str, s: &str) -> Result<[f64; N], MjcfError> {
    let v = parse_nums(path, key, s)?;
    v.try_into()
        .map_err(|v: Vec<f64>| MjcfError::compile(path, format!("attribute '{key}': expected {N} numbers, got {}", v.len())))
}

/// Reads up to `N` numbers, keeping `defaults` for the missing tail.
fn prefix<const N: usize>(path: &str, key: &str, s: &str, defaults: [f64; N]) -> Result<[f64; N], MjcfError> {
    let v = parse_nums(path, key, s)?;
    if v.is_empty() || v.len() > N {
        return Err(MjcfError::compile(path, format!("attribute '{key}': expected 1 to {N} numbers")));
    }
    let mut out = defaults;
    out[..v.len()].copy_from_slice(&v);
    Ok(out)
}

fn parse_bool(path: &str, key: &str, s: &str) -> Result<bool, MjcfError> {
    match s {
        "true" | "enable" => Ok(true),
        "false" | "disable" => Ok(false),
        _ => Err(MjcfError::compile(
            path,
            format!("attribute '{key}': expected true/false, got {s:?}"),
        )),
    }
}

fn collect_classes<'a>(d: &'a DefaultSpec, parent: Option<&'a str>, out: &mut HashMap<&'a str, Class<'a>>) -> Result<(), MjcfError> {
    if out.contains_key(d.class.as_str()) {
        return Err(MjcfError::compile(&d.path, format!("duplicate default class '{}'", d.class)));
    }
    out.insert(
        &d.class,
        Class {
            parent,
            elements: &d.elements,
        },
    );
    for c in &d.children {
        collect_classes(c, Some(&d.class), out)?;
    }
    Ok(())
}

/// Resolved view of one element: own attributes, then its class chain.
struct View<'a> {
    e: &'a ElementSpec,
    chain: Vec<&'a Attrs>,
}

impl<'a> View<'a> {
    fn path(&self) -> &str {
        &self.e.path
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        if let Some(v) = self.e.attrs.get(key) {
            return Some(v);
        }
        self.chain.iter().find_map(|a| a.get(key).map(String::as_str))
    }

    fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, MjcfError> {
        match self.raw(key) {
            Some(s) => Ok(exact::<1>(self.path(), key, s)?[0]),
            None => Ok(default),
        }
    }

    fn vec3_or(&self, key: &str, default: Vec3) -> Result<Vec3, MjcfError> {
        match self.raw(key) {
            Some(s) => Ok(Vec3::from_array(exact::<3>(self.path(), key, s)?)),
            None => Ok(default),
        }
    }

    /// Short arrays overwrite a prefix of what the class chain resolved to.
    fn prefix_or<const N: usize>(&self, key: &str, default: [f64; N]) -> Result<[f64; N], MjcfError> {
        let mut out = default;
        let layers = self.chain.iter().rev().filter_map(|a| a.get(key).map(String::as_str));
        for s in layers.chain(self.e.attrs.get(key).map(String::as_str)) {
            out = prefix(self.path(), key, s, out)?;
        }
        Ok(out)
    }

    fn name(&self) -> String {
        self.e.get("name").unwrap_or("").to_string()
    }
}

impl<'a> Ctx<'a> {
    fn class_chain(&self, class: &str, tag: &str, path: &str) -> Result<Vec<&'a Attrs>, MjcfError> {
        let mut out = Vec::new();
        if !self.classes.contains_key(class) {
            if class == "main" {
                return Ok(out);
            }
            return Err(MjcfError::compile(path, format!("unknown default class '{class}'")));
        }
        let mut cur = Some(class);
        while let Some(c) = cur {
            let info = &self.classes[c];
            if let Some(a) = info.elements.get(tag) {
                out.push(a);
            }
            cur = info.parent;
        }
        Ok(out)
    }

    fn view(&self, e: &'a ElementSpec, tag: &str, inherited: &str) -> Result<View<'a>, MjcfError> {
        let class = e.class().unwrap_or(inherited);
        Ok(View {
            e,
            chain: self.class_chain(class, tag, &e.path)?,
        })
    }

    fn angle(&self, a: f64) -> f64 {
        if self.degrees {
            a * PI / 180.0
        } else {
            a
        }
    }

    /// Orientation from whichever of quat/axisangle/euler/xyaxes/zaxis is set.
    fn orientation(&self, path: &str, get: &dyn Fn(&str) -> Option<&'a str>) -> Result<Quat, MjcfError> {
        let present: Vec<&str> = ["quat", "axisangle", "euler", "xyaxes", "zaxis"]
            .into_iter()
            .filter(|k| get(k).is_some())
            .collect();
        if present.len() > 1 {
            return Err(MjcfError::compile(path, format!("conflicting orientation attributes {present:?}")));
        }
        let Some(&key) = present.first() else {
            return Ok(Quat::IDENTITY);
        };
        let s = get(key).unwrap_or_default();
        let q = match key {
            "quat" => {
                let q = Quat::from_array(exact::<4>(path, key, s)?);
                if q.norm() < 1e-12 {
                    return Err(MjcfError::compile(path, "zero quaternion"));
                }
                q.normalize()
            }
            "axisangle" => {
                let v = exact::<4>(path, key, s)?;
                let axis = Vec3::new(v[0], v[1], v[2]);
                if axis.norm() < 1e-12 {
                    return Err(MjcfError::compile(path, "zero rotation axis"));
                }
                Quat::from_axis_angle(axis.normalize(), self.angle(v[3]))
            }
            "euler" => {
                let v = exact::<3>(path, key, s)?;
                let a = Vec3::new(self.angle(v[0]), self.angle(v[1]), self.angle(v[2]));
                euler_to_quat(a, &self.eulerseq)?
            }
            "xyaxes" => {
                let v = exact::<6>(path, key, s)?;
                let x = Vec3::new(v[0], v[1], v[2]);
                let y = Vec3::new(v[3], v[4], v[5]);
                if x.norm() < 1e-12 || x.cross(y).norm() < 1e-12 {
                    return Err(MjcfError::compile(path, "degenerate xyaxes"));
                }
                Quat::from_xy_axes(x, y)
            }
            _ => {
                let z = Vec3::from_array(exact::<3>(path, key, s)?);
                if z.norm() < 1e-12 {
                    return Err(MjcfError::compile(path, "zero zaxis"));
                }
                Quat::from_z_axis(z)
            }
        };
        Ok(q)
    }

    fn pose(&self, v: &View<'a>) -> Result<Transform, MjcfError> {
        let pos = v.vec3_or("pos", Vec3::ZERO)?;
        let rot = self.orientation(v.path(), &|k| v.raw(k))?;
        Ok(Transform::new(pos, rot))
    }

    fn limited(&self, v: &View<'a>, flag: &str, range: &str) -> Result<bool, MjcfError> {
        match v.raw(flag) {
            Some("auto") | None => Ok(self.autolimits && v.has(range)),
            Some(s) => parse_bool(v.path(), flag, s),
        }
    }
}

struct Builder {
    model: Model,
    /// Accumulated geom mass properties per body: (mass, com, inertia about body origin axes at com later).
    geom_mass: Vec<Vec<(f64, Vec3, Mat3)>>,
    explicit_inertial: Vec<bool>,
}

fn geom_kind(path: &str, s: &str) -> Result<GeomKind, MjcfError> {
    Ok(match s {
        "plane" => GeomKind::Plane,
        "sphere" => GeomKind::Sphere,
        "capsule" => GeomKind::Capsule,
        "box" => GeomKind::Box,
        "cylinder" => GeomKind::Cylinder,
        "mesh" => GeomKind::Mesh,
        "hfield" => GeomKind::Hfield,
        "ellipsoid" | "sdf" => {
            return Err(MjcfError::UnsupportedRequiredFeature {
                path: path.to_string(),
                feature: format!("geom type {s}"),
            })
        }
        _ => return Err(MjcfError::compile(path, format!("unknown geom type {s:?}"))),
    })
}

/// Volume and principal inertia per unit density, geom frame.
pub(crate) fn unit_mass_properties(kind: GeomKind, size: [f64; 3]) -> Option<(f64, Vec3)> {
    let [a, b, c] = size;
    match kind {
        GeomKind::Sphere => {
            let v = 4.0 / 3.0 * PI * a.powi(3);
            let i = 0.4 * v * a * a;
            Some((v, Vec3::splat(i)))
        }
        GeomKind::Box => {
            let v = 8.0 * a * b * c;
            Some((v, Vec3::new(b * b + c * c, a * a + c * c, a * a + b * b) * (v / 3.0)))
        }
        GeomKind::Cylinder => {
            let (r, hl) = (a, b);
            let v = PI * r * r * 2.0 * hl;
            let ixx = v * (3.0 * r * r + 4.0 * hl * hl) / 12.0;
            Some((v, Vec3::new(ixx, ixx, v * r * r / 2.0)))
        }
        GeomKind::Capsule => {
            let (r, hl) = (a, b);
            let vc = PI * r * r * 2.0 * hl;
            let vs = 4.0 / 3.0 * PI * r.powi(3);
            let ixx = vc * (3.0 * r * r + 4.0 * hl * hl) / 12.0 + vs * (83.0 / 320.0 * r * r + (hl + 3.0 * r / 8.0).powi(2));
            let izz = vc * r * r / 2.0 + vs * 0.4 * r * r;
            Some((vc + vs, Vec3::new(ixx, ixx, izz)))
        }
        _ => None,
    }
}

fn check_unique<'b>(kind: &str, names: impl Iterator<Item = &'b str>) -> Result<(), MjcfError> {
    let mut seen = HashSet::new();
    for n in names.filter(|n| !n.is_empty()) {
        if !seen.insert(n) {
            return Err(MjcfError::compile(
                format!("mujoco/{kind}[{n}]"),
                format!("duplicate {kind} name '{n}'"),
            ));
        }
    }
    Ok(())
}

impl Builder {
    fn body<'a>(&mut self, ctx: &mut Ctx<'a>, b: &'a BodySpec, index: usize, parent: usize, class: &str) -> Result<(), MjcfError> {
        let class = b.attrs.get("childclass").map(String::as_str).unwrap_or(class).to_string();
        if index != 0 {
            if !ctx.classes.contains_key(class.as_str()) && class != "main" {
                return Err(MjcfError::compile(&b.path, format!("unknown default class '{class}'")));
            }
            let raw = |k: &str| b.attrs.get(k).map(String::as_str);
            let pos = match raw("pos") {
                Some(s) => Vec3::from_array(exact::<3>(&b.path, "pos", s)?),
                None => Vec3::ZERO,
            };
            let rot = ctx.orientation(&b.path, &raw)?;
            self.model.bodies.push(Body {
                name: b.name().unwrap_or("").to_string(),
                parent,
                local: Transform::new(pos, rot),
                mass: 0.0,
                com: Vec3::ZERO,
                inertia: Mat3::ZERO,
                joints: 0..0,
                dofs: 0..0,
                geoms: Vec::new(),
                tree: None,
            });
            self.geom_mass.push(Vec::new());
            self.explicit_inertial.push(false);
        }

        // joints
        let j0 = self.model.joints.len();
        for e in &b.joints {
            let joint = if e.tag == "freejoint" {
                if parent != 0 {
                    return Err(MjcfError::compile(&e.path, "free joint on a body that is not a child of the world"));
                }
                Joint {
                    name: e.get("name").unwrap_or("").to_string(),
                    kind: JointKind::Free,
                    body: index,
                    pos: Vec3::ZERO,
                    axis: Vec3::Z,
                    range: None,
                    stiffness: 0.0,
                    springref: 0.0,
                    damping: 0.0,
                    frictionloss: 0.0,
                    armature: 0.0,
                    qpos_adr: 0,
                    dof_adr: 0,
                    solref_limit: DEFAULT_SOLREF,
                    solimp_limit: DEFAULT_SOLIMP,
                }
            } else {
                self.joint(ctx, e, index, parent, &class)?
            };
            self.model.joints.push(joint);
        }
        let j1 = self.model.joints.len();
        if (j0..j1).any(|j| self.model.joints[j].kind == JointKind::Free) && j1 - j0 > 1 {
            return Err(MjcfError::compile(&b.path, "a free joint must be the only joint of its body"));
        }
        if index != 0 {
            self.model.bodies[index].joints = j0..j1;
        }

        if let Some(inertial) = &b.inertial {
            self.inertial(ctx, inertial, index)?;
        }
        for e in &b.geoms {
            self.geom(ctx, e, index, &class)?;
        }
        for e in &b.sites {
            let v = ctx.view(e, "site", &class)?;
            let local = ctx.pose(&v)?;
            self.model.sites.push(Site {
                name: v.name(),
                body: index,
                local,
            });
        }
        for e in &b.inert {
            self.model.inert.push(inert_element(e));
        }
        for child in &b.bodies {
            let ci = self.model.bodies.len();
            self.body(ctx, child, ci, index, &class)?;
        }
        Ok(())
    }

    fn joint<'a>(&mut self, ctx: &mut Ctx<'a>, e: &'a ElementSpec, body: usize, parent: usize, class: &str) -> Result<Joint, MjcfError> {
        let v = ctx.view(e, "joint", class)?;
        let kind = match v.raw("type").unwrap_or("hinge") {
            "hinge" => JointKind::Hinge,
            "slide" => JointKind::Slide,
            "ball" => JointKind::Ball,
            "free" => JointKind::Free,
            other => return Err(MjcfError::compile(v.path(), format!("unknown joint type {other:?}"))),
        };
        if kind == JointKind::Free && parent != 0 {
            return Err(MjcfError::compile(
                v.path(),
                "free joint on a body that is not a child of the world",
            ));
        }
        let axis = v.vec3_or("axis", Vec3::Z)?;
        if axis.norm() < 1e-12 {
            return Err(MjcfError::compile(v.path(), "zero joint axis"));
        }
        let range = if ctx.limited(&v, "limited", "range")? {
            let Some(s) = v.raw("range") else {
                return Err(MjcfError::compile(v.path(), "limited joint without range"));
            };
            let [lo, hi] = exact::<2>(v.path(), "range", s)?;
            let (lo, hi) = match kind {
                JointKind::Hinge | JointKind::Ball => (ctx.angle(lo), ctx.angle(hi)),
                _ => (lo, hi),
            };
            if lo > hi {
                return Err(MjcfError::compile(v.path(), format!("joint range lo {lo} > hi {hi}")));
            }
            if kind == JointKind::Ball {
                ctx.warnings.push(format!("{}: ball joint limits are not enforced", v.path()));
            }
            if kind == JointKind::Free {
                ctx.warnings.push(format!("{}: free joint range ignored", v.path()));
                None
            } else {
                Some((lo, hi))
            }
        } else {
            None
        };
        let springref = v.f64_or("springref", 0.0)?;
        let nonneg = |key: &str| -> Result<f64, MjcfError> {
            let x = v.f64_or(key, 0.0)?;
            if x < 0.0 {
                return Err(MjcfError::compile(v.path(), format!("negative {key}")));
            }
            Ok(x)
        };
        Ok(Joint {
            name: v.name(),
            kind,
            body,
            pos: v.vec3_or("pos", Vec3::ZERO)?,
            axis: axis.normalize(),
            range,
            stiffness: nonneg("stiffness")?,
            springref: if kind == JointKind::Hinge {
                ctx.angle(springref)
            } else {
                springref
            },
            damping: nonneg("damping")?,
            frictionloss: nonneg("frictionloss")?,
            armature: nonneg("armature")?,
            qpos_adr: 0,
            dof_adr: 0,
            solref_limit: v.prefix_or("solreflimit", DEFAULT_SOLREF)?,
            solimp_limit: v.prefix_or("solimplimit", DEFAULT_SOLIMP)?,
        })
    }

    fn inertial(&mut self, ctx: &Ctx, e: &ElementSpec, body: usize) -> Result<(), MjcfError> {
        if body == 0 {
            return Ok(());
        }
        let path = &e.path;
        let mass = match e.get("mass") {
            Some(s) => exact::<1>(path, "mass", s)?[0],
            None => return Err(MjcfError::compile(path, "inertial without mass")),
        };
        let pos = match e.get("pos") {
            Some(s) => Vec3::from_array(exact::<3>(path, "pos", s)?),
            None => Vec3::ZERO,
        };
        let rot = ctx.orientation(path, &|k| e.get(k))?;
        let inertia = match (e.get("diaginertia"), e.get("fullinertia")) {
            (Some(_), Some(_)) => return Err(MjcfError::compile(path, "both diaginertia and fullinertia given")),
            (Some(s), None) => Mat3::diag(Vec3::from_array(exact::<3>(path, "diaginertia", s)?)).congruence(&rot.to_mat3()),
            (None, Some(s)) => {
                let [xx, yy, zz, xy, xz, yz] = exact::<6>(path, "fullinertia", s)?;
                Mat3 {
                    m: [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]],
                }
            }
            (None, None) => return Err(MjcfError::compile(path, "inertial without diaginertia or fullinertia")),
        };
        let b = &mut self.model.bodies[body];
        b.mass = mass;
        b.com = pos;
        b.inertia = inertia;
        self.explicit_inertial[body] = true;
        Ok(())
    }

    fn geom<'a>(&mut self, ctx: &mut Ctx<'a>, e: &'a ElementSpec, body: usize, class: &str) -> Result<(), MjcfError> {
        let v = ctx.view(e, "geom", class)?;
        let path = v.path().to_string();
        let kind = geom_kind(&path, v.raw("type").unwrap_or("sphere"))?;
        let mut local = ctx.pose(&v)?;
        let mut size = [0.0; 3];
        if let Some(s) = v.raw("size") {
            let n = parse_nums(&path, "size", s)?;
            if n.is_empty() || n.len() > 3 {
                return Err(MjcfError::compile(&path, "size needs 1 to 3 numbers"));
            }
            size[..n.len()].copy_from_slice(&n);
        }
        if let Some(s) = e.get("fromto") {
            if !matches!(kind, GeomKind::Capsule | GeomKind::Cylinder) {
                return Err(MjcfError::compile(&path, "fromto is only supported for capsule and cylinder"));
            }
            let f = exact::<6>(&path, "fromto", s)?;
            let a = Vec3::new(f[0], f[1], f[2]);
            let b = Vec3::new(f[3], f[4], f[5]);
            let d = b - a;
            if d.norm() < 1e-12 {
                return Err(MjcfError::compile(&path, "degenerate fromto"));
            }
            local = Transform::new((a + b) * 0.5, Quat::from_z_axis(d));
            size[1] = d.norm() / 2.0;
        }
        let needed = match kind {
            GeomKind::Sphere => 1,
            GeomKind::Capsule | GeomKind::Cylinder => 2,
            GeomKind::Box => 3,
            _ => 0,
        };
        if size[..needed].iter().any(|&x| x <= 0.0) {
            return Err(MjcfError::compile(
                &path,
                format!("{} needs {needed} positive size values", kind.name()),
            ));
        }
        let condim = match v.raw("condim") {
            Some(s) => {
                let c = exact::<1>(&path, "condim", s)?[0];
                match c as i64 {
                    1 | 3 if c.fract() == 0.0 => c as usize,
                    4 | 6 if c.fract() == 0.0 => {
                        return Err(MjcfError::UnsupportedRequiredFeature {
                            path,
                            feature: format!("condim {c}"),
                        })
                    }
                    _ => return Err(MjcfError::compile(&path, format!("invalid condim {c}"))),
                }
            }
            None => 3,
        };
        let friction = v.prefix_or("friction", DEFAULT_FRICTION)?;
        let solref = v.prefix_or("solref", DEFAULT_SOLREF)?;
        let solimp = v.prefix_or("solimp", DEFAULT_SOLIMP)?;
        if let Some((unit_v, unit_i)) = unit_mass_properties(kind, size) {
            let density = match v.raw("mass") {
                Some(s) => exact::<1>(&path, "mass", s)?[0] / unit_v,
                None => v.f64_or("density", 1000.0)?,
            };
            if density < 0.0 {
                return Err(MjcfError::compile(&path, "negative geom mass or density"));
            }
            let m = density * unit_v;
            let inertia = Mat3::diag(unit_i * density).congruence(&local.rotation.to_mat3());
            if body != 0 {
                self.geom_mass[body].push((m, local.translation, inertia));
            }
        }
        let gi = self.model.geoms.len();
        self.model.geoms.push(Geom {
            name: v.name(),
            kind,
            body,
            local,
            size,
            friction,
            solref,
            solimp,
            condim,
            restitution: 0.0,
            mesh: v.raw("mesh").map(str::to_string),
            material: v.raw("material").map(str::to_string),
        });
        self.model.bodies[body].geoms.push(gi);
        Ok(())
    }

    fn finish_inertia(&mut self) -> Result<(), MjcfError> {
        for b in 1..self.model.bodies.len() {
            if !self.explicit_inertial[b] {
                let parts = &self.geom_mass[b];
                let mass: f64 = parts.iter().map(|p| p.0).sum();
                if mass > 0.0 {
                    let com = parts.iter().fold(Vec3::ZERO, |acc, p| acc + p.1 * p.0) / mass;
                    let mut inertia = Mat3::ZERO;
                    for (m, c, i) in parts {
                        let d = *c - com;
                        inertia = inertia + *i + (Mat3::diag(Vec3::splat(d.norm_squared())) - Mat3::outer(d, d)).scale(*m);
                    }
                    let body = &mut self.model.bodies[b];
                    body.mass = mass;
                    body.com = com;
                    body.inertia = inertia;
                }
            }
        }
        Ok(())
    }
}

fn inert_element(e: &ElementSpec) -> InertElement {
    InertElement {
        tag: e.tag.clone(),
        name: e.get("name").unwrap_or("").to_string(),
        attrs: e.attrs.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
    }
}

fn validate_inertia(path: &str, mass: f64, i: &Mat3) -> Result<(), MjcfError> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(MjcfError::compile(path, format!("moving body needs positive mass, got {mass}")));
    }
    let asym = (i.m[0][1] - i.m[1][0]).abs() + (i.m[0][2] - i.m[2][0]).abs() + (i.m[1][2] - i.m[2][1]).abs();
    if asym > 1e-12 * (1.0 + i.trace().abs()) {
        return Err(MjcfError::compile(path, "inertia is not symmetric"));
    }
    let d = DenseMat::from_fn(3, 3, |r, c| i.m[r][c]);
    if d.cholesky().is_err() {
        return Err(MjcfError::compile(path, "inertia is not positive definite"));
    }
    let [a, b, c] = [i.m[0][0], i.m[1][1], i.m[2][2]];
    if a + b < c * (1.0 - 1e-9) || a + c < b * (1.0 - 1e-9) || b + c < a * (1.0 - 1e-9) {
        // principal-axis triangle inequality, only meaningful for diagonal input
        if i.m[0][1] == 0.0 && i.m[0][2] == 0.0 && i.m[1][2] == 0.0 {
            return Err(MjcfError::compile(path, "inertia violates the triangle inequality"));
        }
    }
    Ok(())
}

fn resolve_body(model: &Model, path: &str, key: &str, name: Option<&str>) -> Result<usize, MjcfError> {
    match name {
        None => Ok(0),
        Some("world") => Ok(0),
        Some(n) => model
            .body_id(n)
            .ok_or_else(|| MjcfError::compile(path, format!("{key}: unknown body '{n}'"))),
    }
}

fn resolve_joint(model: &Model, path: &str, key: &str, name: Option<&str>) -> Result<usize, MjcfError> {
    let Some(n) = name else {
        return Err(MjcfError::compile(path, format!("missing {key}")));
    };
    model
        .joint_id(n)
        .ok_or_else(|| MjcfError::compile(path, format!("{key}: unknown joint '{n}'")))
}

/// World poses of all bodies at the reference configuration.
fn reference_poses(model: &Model) -> Vec<Transform> {
    let mut out = vec![Transform::IDENTITY; model.bodies.len()];
    for b in 1..model.bodies.len() {
        out[b] = out[model.bodies[b].parent] * model.bodies[b].local;
    }
    out
}

fn options(ctx: &Ctx, model: &mut Model) -> Result<(), MjcfError> {
    let o = &ctx.spec.option;
    let path = "mujoco/option";
    let get = |k: &str| o.get(k).map(String::as_str);
    if let Some(s) = get("timestep") {
        let h = exact::<1>(path, "timestep", s)?[0];
        if h <= 0.0 {
            return Err(MjcfError::compile(path, format!("timestep must be positive, got {h}")));
        }
        model.opt.timestep = h;
    }
    if let Some(s) = get("gravity") {
        model.opt.gravity = Vec3::from_array(exact::<3>(path, "gravity", s)?);
    }
    if let Some(s) = get("iterations") {
        let it = exact::<1>(path, "iterations", s)?[0];
        if it < 0.0 || it.fract() != 0.0 {
            return Err(MjcfError::compile(path, "iterations must be a non-negative integer"));
        }
        model.opt.iterations = it as usize;
    }
    if let Some(s) = get("tolerance") {
        model.opt.tolerance = exact::<1>(path, "tolerance", s)?[0];
    }
    let enabled = match ctx.spec.option_flags.get("override") {
        Some(s) => parse_bool("mujoco/option/flag", "override", s)?,
        None => false,
    };
    if enabled {
        let margin = match get("o_margin") {
            Some(s) => exact::<1>(path, "o_margin", s)?[0],
            None => DEFAULT_MARGIN,
        };
        model.opt.margin = margin;
        model.opt.contact_override = Some(ContactOverride {
            margin,
            solref: match get("o_solref") {
                Some(s) => prefix(path, "o_solref", s, DEFAULT_SOLREF)?,
                None => DEFAULT_SOLREF,
            },
            solimp: match get("o_solimp") {
                Some(s) => prefix(path, "o_solimp", s, DEFAULT_SOLIMP)?,
                None => DEFAULT_SOLIMP,
            },
            friction: match get("o_friction") {
                Some(s) => prefix(path, "o_friction", s, DEFAULT_FRICTION)?,
                None => DEFAULT_FRICTION,
            },
        });
    }
    Ok(())
}

/// Compiles a parsed spec into a simulation model.
pub fn compile(spec: &ModelSpec) -> Result<Model, MjcfError> {
    let c = &spec.compiler;
    let cpath = "mujoco/compiler";
    let degrees = match c.get("angle").map(String::as_str) {
        None | Some("degree") => true,
        Some("radian") => false,
        Some(o) => return Err(MjcfError::compile(cpath, format!("angle must be degree or radian, got {o:?}"))),
    };
    let eulerseq = c.get("eulerseq").cloned().unwrap_or_else(|| "xyz".into());
    euler_to_quat(Vec3::ZERO, &eulerseq)?;
    let autolimits = match c.get("autolimits") {
        Some(s) => parse_bool(cpath, "autolimits", s)?,
        None => true,
    };
    let mut classes = HashMap::new();
    if let Some(d) = &spec.default {
        collect_classes(d, None, &mut classes)?;
    }
    let mut ctx = Ctx {
        classes,
        degrees,
        eulerseq,
        autolimits,
        warnings: Vec::new(),
        spec,
    };

    let world = Body {
        name: "world".into(),
        parent: 0,
        local: Transform::IDENTITY,
        mass: 0.0,
        com: Vec3::ZERO,
        inertia: Mat3::ZERO,
        joints: 0..0,
        dofs: 0..0,
        geoms: Vec::new(),
        tree: None,
    };
    let mut b = Builder {
        model: Model {
            name: spec.model_name.clone().unwrap_or_else(|| "MuJoCo Model".into()),
            opt: SimOptions::default(),
            bodies: vec![world],
            joints: Vec::new(),
            geoms: Vec::new(),
            sites: Vec::new(),
            equalities: Vec::new(),
            actuators: Vec::new(),
            sensors: Vec::new(),
            trees: Vec::new(),
            nq: 0,
            nv: 0,
            qpos0: Vec::new(),
            dof_body: Vec::new(),
            dof_joint: Vec::new(),
            dof_parent: Vec::new(),
            inert: Vec::new(),
            warnings: Vec::new(),
        },
        geom_mass: vec![Vec::new()],
        explicit_inertial: vec![false],
    };
    options(&ctx, &mut b.model)?;
    b.body(&mut ctx, &spec.worldbody, 0, 0, "main")?;
    b.finish_inertia()?;
    b.model.finalize();
    let mut model = b.model;

    check_unique("body", model.bodies.iter().map(|x| x.name.as_str()))?;
    check_unique("joint", model.joints.iter().map(|x| x.name.as_str()))?;
    check_unique("geom", model.geoms.iter().map(|x| x.name.as_str()))?;
    check_unique("site", model.sites.iter().map(|x| x.name.as_str()))?;

    // moving bodies need valid inertia
    let mut body_paths = Vec::new();
    fn walk<'s>(b: &'s BodySpec, out: &mut Vec<&'s str>) {
        out.push(&b.path);
        for c in &b.bodies {
            walk(c, out);
        }
    }
    walk(&spec.worldbody, &mut body_paths);
    for (i, body) in model.bodies.iter().enumerate().skip(1) {
        if body.tree.is_some() {
            validate_inertia(body_paths[i], body.mass, &body.inertia)?;
        }
    }

    // equalities
    let poses = reference_poses(&model);
    for e in &spec.equalities {
        let v = ctx.view(e, "equality", "main")?;
        if let Some(s) = e.get("active") {
            if !parse_bool(&e.path, "active", s)? {
                continue;
            }
        }
        let kind = match e.tag.as_str() {
            "connect" | "weld" => {
                let b1 = resolve_body(&model, &e.path, "body1", e.get("body1"))?;
                if e.get("body1").is_none() {
                    return Err(MjcfError::compile(&e.path, "missing body1"));
                }
                let b2 = resolve_body(&model, &e.path, "body2", e.get("body2"))?;
                if b1 == b2 {
                    return Err(MjcfError::compile(&e.path, "equality between a body and itself"));
                }
                let anchor1 = match e.get("anchor") {
                    Some(s) => Vec3::from_array(exact::<3>(&e.path, "anchor", s)?),
                    None if e.tag == "weld" => Vec3::ZERO,
                    None => return Err(MjcfError::compile(&e.path, "connect requires an anchor")),
                };
                let (x1, x2) = (poses[b1], poses[b2]);
                let mut anchor2 = x2.inverse_apply(x1.apply(anchor1));
                let mut relpose = x2.rotation.conjugate() * x1.rotation;
                if e.tag == "weld" {
                    if let Some(s) = e.get("relpose") {
                        // pose of body2 in body1's frame
                        let r = exact::<7>(&e.path, "relpose", s)?;
                        let q = Quat::new(r[3], r[4], r[5], r[6]);
                        if q.norm() > 1e-12 {
                            let q = q.normalize();
                            let p = Vec3::new(r[0], r[1], r[2]);
                            relpose = q.conjugate();
                            anchor2 = q.inverse_rotate(anchor1 - p);
                        }
                    }
                    EqualityKind::Weld {
                        body1: b1,
                        body2: b2,
                        anchor1,
                        anchor2,
                        relpose,
                    }
                } else {
                    EqualityKind::Connect {
                        body1: b1,
                        body2: b2,
                        anchor1,
                        anchor2,
                    }
                }
            }
            _ => {
                let j1 = resolve_joint(&model, &e.path, "joint1", e.get("joint1"))?;
                let j2 = match e.get("joint2") {
                    Some(n) => Some(resolve_joint(&model, &e.path, "joint2", Some(n))?),
                    None => None,
                };
                for j in std::iter::once(j1).chain(j2) {
                    if !matches!(model.joints[j].kind, JointKind::Hinge | JointKind::Slide) {
                        return Err(MjcfError::compile(&e.path, "joint equality needs hinge or slide joints"));
                    }
                }
                EqualityKind::Joint {
                    joint1: j1,
                    joint2: j2,
                    polycoef: match e.get("polycoef") {
                        Some(s) => prefix(&e.path, "polycoef", s, [0.0, 1.0, 0.0, 0.0, 0.0])?,
                        None => [0.0, 1.0, 0.0, 0.0, 0.0],
                    },
                }
            }
        };
        model.equalities.push(Equality {
            name: v.name(),
            kind,
            solref: v.prefix_or("solref", DEFAULT_SOLREF)?,
            solimp: v.prefix_or("solimp", DEFAULT_SOLIMP)?,
        });
    }

    // actuators
    for e in &spec.actuators {
        let v = ctx.view(e, &e.tag, "main")?;
        let path = v.path().to_string();
        let joint = resolve_joint(&model, &path, "joint", v.raw("joint"))?;
        if !matches!(model.joints[joint].kind, JointKind::Hinge | JointKind::Slide) {
            return Err(MjcfError::UnsupportedRequiredFeature {
                path,
                feature: format!("actuator on a {} joint", model.joints[joint].kind.name()),
            });
        }
        let gear = match v.raw("gear") {
            Some(s) => parse_nums(&path, "gear", s)?.first().copied().unwrap_or(1.0),
            None => 1.0,
        };
        let kind = match e.tag.as_str() {
            "motor" => ActuatorKind::Motor,
            "position" => ActuatorKind::Position,
            "velocity" => ActuatorKind::Velocity,
            _ => ActuatorKind::General,
        };
        let (kp, kv) = match kind {
            ActuatorKind::Position => (v.f64_or("kp", 1.0)?, v.f64_or("kv", 0.0)?),
            ActuatorKind::Velocity => (0.0, v.f64_or("kv", 1.0)?),
            _ => (0.0, 0.0),
        };
        let (mut gain, mut bias) = (1.0, [0.0; 3]);
        if kind == ActuatorKind::General {
            if let Some(t) = v.raw("gaintype") {
                if t != "fixed" {
                    ctx.warnings.push(format!("{path}: gaintype {t:?} treated as fixed"));
                }
            }
            if let Some(t) = v.raw("biastype") {
                if t != "none" && t != "affine" {
                    ctx.warnings.push(format!("{path}: biastype {t:?} treated as affine"));
                }
            }
            if let Some(s) = v.raw("gainprm") {
                gain = parse_nums(&path, "gainprm", s)?.first().copied().unwrap_or(1.0);
            }
            if let Some(s) = v.raw("biasprm") {
                if v.raw("biastype").unwrap_or("none") != "none" {
                    let n = parse_nums(&path, "biasprm", s)?;
                    for (k, x) in n.iter().take(3).enumerate() {
                        bias[k] = *x;
                    }
                }
            }
        }
        let range = |flag: &str, key: &str| -> Result<Option<(f64, f64)>, MjcfError> {
            if !ctx.limited(&v, flag, key)? {
                return Ok(None);
            }
            let Some(s) = v.raw(key) else {
                return Err(MjcfError::compile(&path, format!("{flag} without {key}")));
            };
            let [lo, hi] = exact::<2>(&path, key, s)?;
            if lo > hi {
                return Err(MjcfError::compile(&path, format!("{key} lo {lo} > hi {hi}")));
            }
            Ok(Some((lo, hi)))
        };
        model.actuators.push(Actuator {
            name: v.name(),
            kind,
            joint,
            gear,
            kp,
            kv,
            gain,
            bias,
            ctrlrange: range("ctrllimited", "ctrlrange")?,
            forcerange: range("forcelimited", "forcerange")?,
        });
    }

    // sensors
    for e in &spec.sensors {
        let path = &e.path;
        let site = |m: &Model| -> Result<SensorTarget, MjcfError> {
            let n = e.get("site").ok_or_else(|| MjcfError::compile(path, "missing site"))?;
            m.site_id(n)
                .map(SensorTarget::Site)
                .ok_or_else(|| MjcfError::compile(path, format!("unknown site '{n}'")))
        };
        let (kind, target) = match e.tag.as_str() {
            "jointpos" | "jointvel" => {
                let j = resolve_joint(&model, path, "joint", e.get("joint"))?;
                if !matches!(model.joints[j].kind, JointKind::Hinge | JointKind::Slide) {
                    return Err(MjcfError::compile(path, "joint sensors need hinge or slide joints"));
                }
                let k = if e.tag == "jointpos" {
                    SensorKind::JointPos
                } else {
                    SensorKind::JointVel
                };
                (k, SensorTarget::Joint(j))
            }
            "accelerometer" => (SensorKind::Accelerometer, site(&model)?),
            "velocimeter" => (SensorKind::Velocimeter, site(&model)?),
            "touch" => (SensorKind::ContactForce, site(&model)?),
            tag => {
                let k = match tag {
                    "framepos" => SensorKind::FramePos,
                    "framequat" => SensorKind::FrameQuat,
                    _ => SensorKind::FrameLinVel,
                };
                let n = e.get("objname").ok_or_else(|| MjcfError::compile(path, "missing objname"))?;
                let unknown = || MjcfError::compile(path, format!("unknown object '{n}'"));
                let t = match e.get("objtype").unwrap_or("body") {
                    "body" | "xbody" => SensorTarget::Body(model.body_id(n).ok_or_else(unknown)?),
                    "site" => SensorTarget::Site(model.site_id(n).ok_or_else(unknown)?),
                    "geom" => SensorTarget::Geom(model.geom_id(n).ok_or_else(unknown)?),
                    o => {
                        return Err(MjcfError::UnsupportedRequiredFeature {
                            path: path.clone(),
                            feature: format!("frame sensor objtype {o}"),
                        })
                    }
                };
                (k, t)
            }
        };
        model.sensors.push(Sensor {
            name: e.get("name").unwrap_or("").to_string(),
            kind,
            target,
        });
    }

    for e in spec.assets.iter().chain(&spec.visual).chain(&spec.tendons) {
        model.inert.push(inert_element(e));
    }
    model.warnings = spec.warnings.clone();
    model.warnings.extend(ctx.warnings);
    Ok(model)
}
