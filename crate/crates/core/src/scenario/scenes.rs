//! Built-in scenes, generated as MJCF so they go through the same compiler
//! as user models. Element names here are the ones scenarios look up when
//! given an external model.

use std::fmt::Write as _;

/// `n` boxes of half-size 0.1 stacked on a plane, optionally with a static
/// shelf carrying a `grid × grid` array of boxes next to the tower.
pub fn stack(n: usize, grid: usize, h: f64) -> String {
    let mut x = format!(
        r#"<mujoco model="stack"><option timestep="{h}"/><worldbody>
<geom name="floor" type="plane" size="10 10 0.1"/>
"#
    );
    for i in 0..n {
        let z = 0.1 + 0.2 * i as f64;
        let _ = writeln!(
            x,
            r#"<body name="box{i}" pos="0 0 {z}"><freejoint/><geom type="box" size="0.1 0.1 0.1" mass="1"/></body>"#
        );
    }
    if grid > 0 {
        let span = 0.3 * grid as f64;
        let cx = 1.0 + 0.5 * span;
        let _ = writeln!(
            x,
            r#"<geom name="shelf" type="box" pos="{cx} 0 0.5" size="{} {} 0.05"/>"#,
            0.5 * span + 0.1,
            0.5 * span + 0.1
        );
        for i in 0..grid {
            for j in 0..grid {
                let px = 1.15 + 0.3 * i as f64;
                let py = -0.5 * span + 0.15 + 0.3 * j as f64;
                let _ = writeln!(
                    x,
                    r#"<body name="item{i}_{j}" pos="{px} {py} 0.6"><freejoint/><geom type="box" size="0.05 0.05 0.05" mass="0.2"/></body>"#
                );
            }
        }
    }
    x.push_str("</worldbody></mujoco>\n");
    x
}

/// Box resting on a plane tilted by `theta_deg` about `y`; the box slides
/// toward `+x` in the plane frame.
pub fn incline(theta_deg: f64, mu: f64, h: f64) -> String {
    let t = theta_deg.to_radians();
    let (nx, nz) = (t.sin() * 0.1, t.cos() * 0.1);
    format!(
        r#"<mujoco model="incline"><option timestep="{h}"/><worldbody>
<geom name="slope" type="plane" size="10 10 0.1" euler="0 {theta_deg} 0" friction="{mu} 0 0"/>
<body name="box" pos="{nx} 0 {nz}" euler="0 {theta_deg} 0"><freejoint/>
<geom type="box" size="0.1 0.1 0.1" mass="1" friction="{mu} 0 0"/></body>
</worldbody></mujoco>
"#
    )
}

fn chain_body(out: &mut String, prefix: &str, x0: f64, y0: f64, z0: f64) {
    let _ = write!(
        out,
        r#"<body name="{prefix}base" pos="{x0} {y0} {z0}"><freejoint/><geom type="capsule" fromto="0 0 0 0.2 0 0" size="0.04"/>"#
    );
    for k in 0..6 {
        let axis = if k % 2 == 0 { "0 0 1" } else { "0 1 0" };
        let _ = write!(
            out,
            r#"<body name="{prefix}link{k}" pos="0.24 0 0"><joint type="hinge" axis="{axis}" damping="0.05" range="-60 60"/><geom type="capsule" fromto="0 0 0 0.2 0 0" size="0.04"/>"#
        );
    }
    out.push_str(&"</body>".repeat(7));
    out.push('\n');
}

/// Free base plus six hinges (12 dofs) dropped from `height`.
pub fn chain(height: f64, h: f64) -> String {
    chains(1, height, h)
}

/// `n` disjoint 12-dof chains side by side on one floor.
pub fn chains(n: usize, height: f64, h: f64) -> String {
    let mut x = format!(
        r#"<mujoco model="chains"><option timestep="{h}"/><compiler angle="degree"/><worldbody>
<geom name="floor" type="plane" size="50 50 0.1"/>
"#
    );
    for i in 0..n {
        let prefix = if n == 1 { String::new() } else { format!("c{i}_") };
        chain_body(&mut x, &prefix, 0.0, 1.0 * i as f64, height);
    }
    x.push_str("</worldbody></mujoco>\n");
    x
}

/// Frictionless pendulum spheres hanging in a row with `gap` between
/// neighbours.
pub fn cradle(balls: usize, radius: f64, length: f64, gap: f64, h: f64) -> String {
    let mut x = format!(r#"<mujoco model="cradle"><option timestep="{h}"/><worldbody>"#);
    x.push('\n');
    for i in 0..balls {
        let px = i as f64 * (2.0 * radius + gap);
        let _ = writeln!(
            x,
            r#"<body name="ball{i}" pos="{px} 0 {length}"><joint name="swing{i}" type="hinge" axis="0 1 0"/><geom type="sphere" size="{radius}" pos="0 0 -{length}" mass="0.2" condim="1"/></body>"#
        );
    }
    x.push_str("</worldbody></mujoco>\n");
    x
}

/// Two-finger clamp on a base moved by three slide motors, holding a box.
/// The fingers are coupled so they close symmetrically.
pub fn shake(mu: f64, mass: f64, h: f64) -> String {
    format!(
        r#"<mujoco model="shake"><option timestep="{h}"/><worldbody>
<body name="base" pos="0 0 1">
  <joint name="bx" type="slide" axis="1 0 0"/><joint name="by" type="slide" axis="0 1 0"/><joint name="bz" type="slide" axis="0 0 1"/>
  <geom name="palm" type="box" size="0.08 0.08 0.02" pos="0 0 0.12" mass="2"/>
  <body name="finger_l" pos="0 0.07 0"><joint name="fl" type="slide" axis="0 -1 0" range="-0.01 0.04"/>
    <geom name="pad_l" type="box" size="0.04 0.01 0.04" mass="0.1" friction="{mu} 0.005 0.0001"/></body>
  <body name="finger_r" pos="0 -0.07 0"><joint name="fr" type="slide" axis="0 1 0" range="-0.01 0.04"/>
    <geom name="pad_r" type="box" size="0.04 0.01 0.04" mass="0.1" friction="{mu} 0.005 0.0001"/></body>
</body>
<body name="object" pos="0 0 1"><freejoint/><geom type="box" size="0.03 0.05 0.03" mass="{mass}" friction="{mu} 0.005 0.0001"/></body>
</worldbody>
<equality><joint joint1="fl" joint2="fr"/></equality>
<actuator><motor name="mx" joint="bx"/><motor name="my" joint="by"/><motor name="mz" joint="bz"/>
<motor name="ml" joint="fl"/><motor name="mr" joint="fr"/></actuator>
</mujoco>
"#
    )
}
