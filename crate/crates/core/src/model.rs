//! The compiled, immutable simulation model.
//!
//! Body 0 is always the world. Bodies are stored parent-before-child, so the
//! degrees of freedom of each kinematic tree (a subtree hanging off the world)
//! occupy one contiguous range of the velocity vector.

use std::ops::Range;

use crate::linalg::{Mat3, Quat, Transform, Vec3};

pub const DEFAULT_FRICTION: [f64; 3] = [1.0, 0.005, 0.0001];
pub const DEFAULT_SOLREF: [f64; 2] = [0.02, 1.0];
pub const DEFAULT_SOLIMP: [f64; 5] = [0.9, 0.95, 0.001, 0.5, 2.0];
pub const DEFAULT_TIMESTEP: f64 = 0.002;
pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Broadphase inflation and contact emission distance (m).
pub const DEFAULT_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    pub timestep: f64,
    pub gravity: Vec3,
    pub iterations: usize,
    pub tolerance: f64,
    pub margin: f64,
    /// Contact parameter overrides (`<flag override="enable">` with `o_*`).
    pub contact_override: Option<ContactOverride>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            timestep: DEFAULT_TIMESTEP,
            gravity: Vec3::new(0.0, 0.0, -9.81),
            iterations: DEFAULT_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            margin: DEFAULT_MARGIN,
            contact_override: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactOverride {
    pub margin: f64,
    pub solref: [f64; 2],
    pub solimp: [f64; 5],
    pub friction: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JointKind {
    Free,
    Ball,
    Slide,
    Hinge,
}

impl JointKind {
    pub fn nq(self) -> usize {
        match self {
            JointKind::Free => 7,
            JointKind::Ball => 4,
            JointKind::Slide | JointKind::Hinge => 1,
        }
    }

    pub fn nv(self) -> usize {
        match self {
            JointKind::Free => 6,
            JointKind::Ball => 3,
            JointKind::Slide | JointKind::Hinge => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JointKind::Free => "free",
            JointKind::Ball => "ball",
            JointKind::Slide => "slide",
            JointKind::Hinge => "hinge",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub name: String,
    /// Parent body index; the world is its own parent.
    pub parent: usize,
    /// Frame relative to the parent frame (before joint motion).
    pub local: Transform,
    pub mass: f64,
    /// Center of mass in the body frame.
    pub com: Vec3,
    /// Inertia tensor about the center of mass, body-frame axes.
    pub inertia: Mat3,
    pub joints: Range<usize>,
    pub dofs: Range<usize>,
    pub geoms: Vec<usize>,
    /// Kinematic tree this body moves with; `None` for bodies welded to the world.
    pub tree: Option<usize>,
}

impl Body {
    pub fn is_static(&self) -> bool {
        self.tree.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub body: usize,
    /// Anchor in the body frame.
    pub pos: Vec3,
    /// Unit axis in the body frame (hinge/slide).
    pub axis: Vec3,
    /// Limits when the joint is limited.
    pub range: Option<(f64, f64)>,
    pub stiffness: f64,
    pub springref: f64,
    pub damping: f64,
    pub frictionloss: f64,
    pub armature: f64,
    pub qpos_adr: usize,
    pub dof_adr: usize,
    pub solref_limit: [f64; 2],
    pub solimp_limit: [f64; 5],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeomKind {
    Plane,
    Sphere,
    Capsule,
    Box,
    Cylinder,
    /// Parsed and kept for reference; does not collide.
    Mesh,
    /// Parsed and kept for reference; does not collide.
    Hfield,
}

impl GeomKind {
    pub fn name(self) -> &'static str {
        match self {
            GeomKind::Plane => "plane",
            GeomKind::Sphere => "sphere",
            GeomKind::Capsule => "capsule",
            GeomKind::Box => "box",
            GeomKind::Cylinder => "cylinder",
            GeomKind::Mesh => "mesh",
            GeomKind::Hfield => "hfield",
        }
    }

    pub fn collides(self) -> bool {
        !matches!(self, GeomKind::Mesh | GeomKind::Hfield)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geom {
    pub name: String,
    pub kind: GeomKind,
    pub body: usize,
    /// Pose in the body frame.
    pub local: Transform,
    /// sphere: [r]; capsule/cylinder: [r, half-length]; box: half-extents;
    /// plane: [half-x, half-y, grid spacing] (visual only, collision is infinite).
    pub size: [f64; 3],
    pub friction: [f64; 3],
    pub solref: [f64; 2],
    pub solimp: [f64; 5],
    pub condim: usize,
    /// Restitution coefficient; not part of MJCF, set programmatically.
    pub restitution: f64,
    pub mesh: Option<String>,
    pub material: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub name: String,
    pub body: usize,
    pub local: Transform,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EqualityKind {
    /// Ball-and-socket: `anchor1` (body1 frame) coincides with `anchor2` (body2 frame).
    Connect {
        body1: usize,
        body2: usize,
        anchor1: Vec3,
        anchor2: Vec3,
    },
    /// Full relative pose lock. `relpose` is body1's frame expressed in body2's frame.
    Weld {
        body1: usize,
        body2: usize,
        anchor1: Vec3,
        anchor2: Vec3,
        relpose: Quat,
    },
    /// `q1 = c0 + c1·q2 + … + c4·q2⁴` (or `q1 = c0` without a second joint).
    Joint {
        joint1: usize,
        joint2: Option<usize>,
        polycoef: [f64; 5],
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equality {
    pub name: String,
    pub kind: EqualityKind,
    pub solref: [f64; 2],
    pub solimp: [f64; 5],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActuatorKind {
    Motor,
    Position,
    Velocity,
    General,
}

impl ActuatorKind {
    pub fn name(self) -> &'static str {
        match self {
            ActuatorKind::Motor => "motor",
            ActuatorKind::Position => "position",
            ActuatorKind::Velocity => "velocity",
            ActuatorKind::General => "general",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Actuator {
    pub name: String,
    pub kind: ActuatorKind,
    pub joint: usize,
    pub gear: f64,
    pub kp: f64,
    pub kv: f64,
    /// `general` only: force = gain·ctrl + bias[0] + bias[1]·q + bias[2]·q̇.
    pub gain: f64,
    pub bias: [f64; 3],
    pub ctrlrange: Option<(f64, f64)>,
    pub forcerange: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SensorKind {
    JointPos,
    JointVel,
    Accelerometer,
    Velocimeter,
    FramePos,
    FrameQuat,
    FrameLinVel,
    /// Total normal contact force on the site's body (`<touch>`).
    ContactForce,
}

impl SensorKind {
    pub fn name(self) -> &'static str {
        match self {
            SensorKind::JointPos => "jointpos",
            SensorKind::JointVel => "jointvel",
            SensorKind::Accelerometer => "accelerometer",
            SensorKind::Velocimeter => "velocimeter",
            SensorKind::FramePos => "framepos",
            SensorKind::FrameQuat => "framequat",
            SensorKind::FrameLinVel => "framelinvel",
            SensorKind::ContactForce => "touch",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SensorKind::JointPos | SensorKind::JointVel | SensorKind::ContactForce => 1,
            SensorKind::FrameQuat => 4,
            _ => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SensorTarget {
    Joint(usize),
    Body(usize),
    Site(usize),
    Geom(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sensor {
    pub name: String,
    pub kind: SensorKind,
    pub target: SensorTarget,
}

/// Elements kept for reference only (assets, lights, cameras, tendons, visual).
#[derive(Clone, Debug, PartialEq)]
pub struct InertElement {
    pub tag: String,
    pub name: String,
    pub attrs: Vec<(String, String)>,
}

/// A kinematic tree: a world child and its descendants.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub root: usize,
    pub bodies: Vec<usize>,
    pub dofs: Range<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    pub opt: SimOptions,
    pub bodies: Vec<Body>,
    pub joints: Vec<Joint>,
    pub geoms: Vec<Geom>,
    pub sites: Vec<Site>,
    pub equalities: Vec<Equality>,
    pub actuators: Vec<Actuator>,
    pub sensors: Vec<Sensor>,
    pub trees: Vec<Tree>,
    pub nq: usize,
    pub nv: usize,
    pub qpos0: Vec<f64>,
    /// For each dof: the body it moves.
    pub dof_body: Vec<usize>,
    /// For each dof: its joint.
    pub dof_joint: Vec<usize>,
    /// For each dof: the previous dof on the path to the root, if any.
    pub dof_parent: Vec<Option<usize>>,
    pub inert: Vec<InertElement>,
    pub warnings: Vec<String>,
}

impl Model {
    pub fn nbody(&self) -> usize {
        self.bodies.len()
    }

    pub fn nu(&self) -> usize {
        self.actuators.len()
    }

    pub fn body_id(&self, name: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.name == name)
    }

    pub fn joint_id(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn geom_id(&self, name: &str) -> Option<usize> {
        self.geoms.iter().position(|g| g.name == name)
    }

    pub fn site_id(&self, name: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.name == name)
    }

    pub fn actuator_id(&self, name: &str) -> Option<usize> {
        self.actuators.iter().position(|a| a.name == name)
    }

    /// True when `ancestor` lies on the path from `body` to the world (inclusive).
    pub fn is_ancestor(&self, ancestor: usize, mut body: usize) -> bool {
        loop {
            if body == ancestor {
                return true;
            }
            if body == 0 {
                return false;
            }
            body = self.bodies[body].parent;
        }
    }

    /// Sets the restitution coefficient of every geom.
    pub fn set_restitution(&mut self, e: f64) {
        for g in &mut self.geoms {
            g.restitution = e;
        }
    }

    /// Rebuilds the derived index tables (trees, dof maps, nq/nv, qpos0)
    /// from bodies and joints. Called by the compiler and by programmatic
    /// builders after editing the body list.
    pub fn finalize(&mut self) {
        let nb = self.bodies.len();
        let mut nq = 0;
        let mut nv = 0;
        self.dof_body.clear();
        self.dof_joint.clear();
        self.dof_parent.clear();
        self.qpos0.clear();
        self.trees.clear();
        let mut last_dof_of_body: Vec<Option<usize>> = vec![None; nb];
        for b in 0..nb {
            let parent = self.bodies[b].parent;
            let mut prev = if b == 0 { None } else { last_dof_of_body[parent] };
            let dof_start = nv;
            for j in self.bodies[b].joints.clone() {
                let joint = &mut self.joints[j];
                joint.qpos_adr = nq;
                joint.dof_adr = nv;
                match joint.kind {
                    JointKind::Free => {
                        let t = self.bodies[b].local;
                        self.qpos0.extend_from_slice(&t.translation.to_array());
                        self.qpos0.extend_from_slice(&t.rotation.to_array());
                    }
                    JointKind::Ball => self.qpos0.extend_from_slice(&[1.0, 0.0, 0.0, 0.0]),
                    JointKind::Hinge | JointKind::Slide => self.qpos0.push(0.0),
                }
                for _ in 0..joint.kind.nv() {
                    self.dof_body.push(b);
                    self.dof_joint.push(j);
                    self.dof_parent.push(prev);
                    prev = Some(nv);
                    nv += 1;
                }
                nq += joint.kind.nq();
            }
            self.bodies[b].dofs = dof_start..nv;
            last_dof_of_body[b] = prev;
        }
        self.nq = nq;
        self.nv = nv;

        // trees: world children that carry (or whose descendants carry) dofs
        for b in 0..nb {
            self.bodies[b].tree = None;
        }
        for b in 1..nb {
            let parent = self.bodies[b].parent;
            let inherited = if parent == 0 { None } else { self.bodies[parent].tree };
            let tree = match inherited {
                Some(t) => Some(t),
                None if !self.bodies[b].joints.is_empty() => {
                    self.trees.push(Tree {
                        root: b,
                        bodies: Vec::new(),
                        dofs: 0..0,
                    });
                    Some(self.trees.len() - 1)
                }
                None => None,
            };
            self.bodies[b].tree = tree;
            if let Some(t) = tree {
                self.trees[t].bodies.push(b);
            }
        }
        for tree in &mut self.trees {
            let lo = tree.bodies.iter().map(|&b| self.bodies[b].dofs.start).min().unwrap_or(0);
            let hi = tree.bodies.iter().map(|&b| self.bodies[b].dofs.end).max().unwrap_or(0);
            tree.dofs = lo..hi;
        }
    }
}
