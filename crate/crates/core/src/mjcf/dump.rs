use std::fmt::Write as _;

use crate::linalg::{Quat, Vec3};
use crate::model::{EqualityKind, Model, SensorTarget};

/// Six significant digits, trailing zeros trimmed, no negative zero.
/// Magnitudes below 1e-15 are round-off and print as 0.
pub(crate) fn num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let r: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    if r.abs() < 1e-15 {
        return "0".into();
    }
    format!("{r}")
}

fn nums(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")
}

fn v3(v: Vec3) -> String {
    nums(&v.to_array())
}

fn q4(q: Quat) -> String {
    nums(&q.canonicalize().to_array())
}

fn range(r: Option<(f64, f64)>) -> String {
    match r {
        Some((lo, hi)) => format!("{} {}", num(lo), num(hi)),
        None => "none".into(),
    }
}

fn name(s: &str) -> &str {
    if s.is_empty() {
        "-"
    } else {
        s
    }
}

/// Line-oriented text dump of a compiled model.
pub fn dump_model(m: &Model) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "model {}", m.name);
    let _ = writeln!(
        o,
        "option timestep={} gravity={} iterations={} tolerance={} margin={}",
        num(m.opt.timestep),
        v3(m.opt.gravity),
        m.opt.iterations,
        num(m.opt.tolerance),
        num(m.opt.margin)
    );
    let _ = writeln!(
        o,
        "counts nq={} nv={} nbody={} njnt={} ngeom={} nsite={} neq={} nu={} nsensor={} ntree={}",
        m.nq,
        m.nv,
        m.bodies.len(),
        m.joints.len(),
        m.geoms.len(),
        m.sites.len(),
        m.equalities.len(),
        m.actuators.len(),
        m.sensors.len(),
        m.trees.len()
    );
    for (i, b) in m.bodies.iter().enumerate() {
        let i3 = &b.inertia.m;
        let _ = writeln!(
            o,
            "body {i} {} parent={} pos={} quat={} mass={} com={} inertia={} tree={} dofs={}..{}",
            name(&b.name),
            b.parent,
            v3(b.local.translation),
            q4(b.local.rotation),
            num(b.mass),
            v3(b.com),
            nums(&[i3[0][0], i3[1][1], i3[2][2], i3[0][1], i3[0][2], i3[1][2]]),
            b.tree.map_or("-".to_string(), |t| t.to_string()),
            b.dofs.start,
            b.dofs.end
        );
    }
    for (i, j) in m.joints.iter().enumerate() {
        let _ = writeln!(
            o,
            "joint {i} {} type={} body={} pos={} axis={} range={} stiffness={} damping={} frictionloss={} armature={} qposadr={} dofadr={}",
            name(&j.name),
            j.kind.name(),
            j.body,
            v3(j.pos),
            v3(j.axis),
            range(j.range),
            num(j.stiffness),
            num(j.damping),
            num(j.frictionloss),
            num(j.armature),
            j.qpos_adr,
            j.dof_adr
        );
    }
    for (i, g) in m.geoms.iter().enumerate() {
        let _ = writeln!(
            o,
            "geom {i} {} type={} body={} pos={} quat={} size={} friction={} solref={} solimp={} condim={}",
            name(&g.name),
            g.kind.name(),
            g.body,
            v3(g.local.translation),
            q4(g.local.rotation),
            nums(&g.size),
            nums(&g.friction),
            nums(&g.solref),
            nums(&g.solimp),
            g.condim
        );
    }
    for (i, s) in m.sites.iter().enumerate() {
        let _ = writeln!(
            o,
            "site {i} {} body={} pos={} quat={}",
            name(&s.name),
            s.body,
            v3(s.local.translation),
            q4(s.local.rotation)
        );
    }
    for (i, e) in m.equalities.iter().enumerate() {
        let desc = match &e.kind {
            EqualityKind::Connect {
                body1,
                body2,
                anchor1,
                anchor2,
            } => format!(
                "type=connect body1={body1} body2={body2} anchor1={} anchor2={}",
                v3(*anchor1),
                v3(*anchor2)
            ),
            EqualityKind::Weld {
                body1,
                body2,
                anchor1,
                anchor2,
                relpose,
            } => format!(
                "type=weld body1={body1} body2={body2} anchor1={} anchor2={} relquat={}",
                v3(*anchor1),
                v3(*anchor2),
                q4(*relpose)
            ),
            EqualityKind::Joint { joint1, joint2, polycoef } => format!(
                "type=joint joint1={joint1} joint2={} polycoef={}",
                joint2.map_or("-".to_string(), |j| j.to_string()),
                nums(polycoef)
            ),
        };
        let _ = writeln!(
            o,
            "equality {i} {} {desc} solref={} solimp={}",
            name(&e.name),
            nums(&e.solref),
            nums(&e.solimp)
        );
    }
    for (i, a) in m.actuators.iter().enumerate() {
        let _ = writeln!(
            o,
            "actuator {i} {} type={} joint={} gear={} kp={} kv={} gain={} bias={} ctrlrange={} forcerange={}",
            name(&a.name),
            a.kind.name(),
            a.joint,
            num(a.gear),
            num(a.kp),
            num(a.kv),
            num(a.gain),
            nums(&a.bias),
            range(a.ctrlrange),
            range(a.forcerange)
        );
    }
    for (i, s) in m.sensors.iter().enumerate() {
        let target = match s.target {
            SensorTarget::Joint(j) => format!("joint:{j}"),
            SensorTarget::Body(b) => format!("body:{b}"),
            SensorTarget::Site(x) => format!("site:{x}"),
            SensorTarget::Geom(g) => format!("geom:{g}"),
        };
        let _ = writeln!(o, "sensor {i} {} type={} target={target}", name(&s.name), s.kind.name());
    }
    for e in &m.inert {
        let _ = writeln!(o, "inert {} {}", e.tag, name(&e.name));
    }
    for w in &m.warnings {
        let _ = writeln!(o, "warning {w}");
    }
    o
}
