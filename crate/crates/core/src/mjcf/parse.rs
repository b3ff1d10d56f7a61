use std::collections::BTreeMap;
use std::fmt::Write as _;

use roxmltree::Node;

use super::MjcfError;

pub type Attrs = BTreeMap<String, String>;

/// One XML element with its raw attributes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElementSpec {
    pub tag: String,
    pub attrs: Attrs,
    pub path: String,
    /// Nested elements of inert sections (visual, tendon, ...).
    pub children: Vec<ElementSpec>,
}

impl ElementSpec {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).map(String::as_str)
    }

    pub fn class(&self) -> Option<&str> {
        self.get("class")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BodySpec {
    pub attrs: Attrs,
    pub path: String,
    pub inertial: Option<ElementSpec>,
    /// `joint` and `freejoint` elements in document order.
    pub joints: Vec<ElementSpec>,
    pub geoms: Vec<ElementSpec>,
    pub sites: Vec<ElementSpec>,
    /// Cameras and lights.
    pub inert: Vec<ElementSpec>,
    pub bodies: Vec<BodySpec>,
}

impl BodySpec {
    pub fn name(&self) -> Option<&str> {
        self.attrs.get("name").map(String::as_str)
    }

    /// Number of bodies in this subtree, excluding self.
    pub fn descendant_count(&self) -> usize {
        self.bodies.iter().map(|b| 1 + b.descendant_count()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DefaultSpec {
    pub class: String,
    pub path: String,
    /// Element tag → attributes set by this class.
    pub elements: BTreeMap<String, Attrs>,
    pub children: Vec<DefaultSpec>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSpec {
    pub model_name: Option<String>,
    pub compiler: Attrs,
    pub option: Attrs,
    pub option_flags: Attrs,
    pub default: Option<DefaultSpec>,
    pub assets: Vec<ElementSpec>,
    pub visual: Vec<ElementSpec>,
    pub worldbody: BodySpec,
    pub equalities: Vec<ElementSpec>,
    pub tendons: Vec<ElementSpec>,
    pub actuators: Vec<ElementSpec>,
    pub sensors: Vec<ElementSpec>,
    pub warnings: Vec<String>,
}

const ORIENT: &[&str] = &["quat", "axisangle", "euler", "xyaxes", "zaxis"];

fn known_attrs(tag: &str) -> Option<Vec<&'static str>> {
    let mut v: Vec<&'static str> = match tag {
        "body" => vec!["name", "pos", "childclass"],
        "inertial" => vec!["pos", "mass", "diaginertia", "fullinertia"],
        "joint" => vec![
            "name",
            "class",
            "type",
            "pos",
            "axis",
            "range",
            "limited",
            "stiffness",
            "springref",
            "damping",
            "frictionloss",
            "armature",
            "solreflimit",
            "solimplimit",
        ],
        "freejoint" => vec!["name"],
        "geom" => vec![
            "name", "class", "type", "pos", "size", "fromto", "friction", "solref", "solimp", "condim", "mass", "density", "mesh",
            "hfield", "material", "rgba", "group",
        ],
        "site" => vec!["name", "class", "type", "pos", "size", "rgba", "group", "material"],
        "camera" => vec!["name", "class", "pos", "mode", "target", "fovy", "ipd"],
        "light" => vec![
            "name",
            "class",
            "pos",
            "dir",
            "mode",
            "target",
            "directional",
            "castshadow",
            "active",
            "diffuse",
            "specular",
            "ambient",
            "attenuation",
            "cutoff",
            "exponent",
        ],
        "mesh" => vec!["name", "class", "file", "vertex", "face", "scale", "refpos", "refquat"],
        "texture" => vec![
            "name",
            "type",
            "file",
            "builtin",
            "rgb1",
            "rgb2",
            "mark",
            "markrgb",
            "random",
            "width",
            "height",
            "gridsize",
            "gridlayout",
            "content_type",
        ],
        "material" => vec![
            "name",
            "class",
            "texture",
            "texrepeat",
            "texuniform",
            "emission",
            "specular",
            "shininess",
            "reflectance",
            "metallic",
            "roughness",
            "rgba",
        ],
        "hfield" => vec!["name", "file", "size", "nrow", "ncol", "elevation", "content_type"],
        "connect" => vec!["name", "class", "body1", "body2", "anchor", "solref", "solimp", "active"],
        "weld" => vec!["name", "class", "body1", "body2", "anchor", "relpose", "solref", "solimp", "active"],
        "joint_eq" => vec!["name", "class", "joint1", "joint2", "polycoef", "solref", "solimp", "active"],
        "motor" => vec![
            "name",
            "class",
            "joint",
            "tendon",
            "site",
            "gear",
            "ctrlrange",
            "ctrllimited",
            "forcerange",
            "forcelimited",
        ],
        "position" => vec![
            "name",
            "class",
            "joint",
            "tendon",
            "site",
            "gear",
            "ctrlrange",
            "ctrllimited",
            "forcerange",
            "forcelimited",
            "kp",
            "kv",
        ],
        "velocity" => vec![
            "name",
            "class",
            "joint",
            "tendon",
            "site",
            "gear",
            "ctrlrange",
            "ctrllimited",
            "forcerange",
            "forcelimited",
            "kv",
        ],
        "general" => vec![
            "name",
            "class",
            "joint",
            "tendon",
            "site",
            "gear",
            "ctrlrange",
            "ctrllimited",
            "forcerange",
            "forcelimited",
            "gainprm",
            "biasprm",
            "gaintype",
            "biastype",
        ],
        "jointpos" | "jointvel" => vec!["name", "joint", "noise"],
        "accelerometer" | "velocimeter" | "touch" => vec!["name", "site", "noise"],
        "framepos" | "framequat" | "framelinvel" => vec!["name", "objtype", "objname", "noise"],
        "compiler" => vec!["angle", "eulerseq", "autolimits", "meshdir", "texturedir", "assetdir"],
        "option" => vec![
            "timestep",
            "gravity",
            "iterations",
            "tolerance",
            "o_margin",
            "o_solref",
            "o_solimp",
            "o_friction",
        ],
        "flag" => vec!["override", "contact", "gravity"],
        _ => return None,
    };
    if matches!(
        tag,
        "body" | "inertial" | "joint" | "geom" | "site" | "camera" | "light" | "weld" | "connect"
    ) {
        v.extend_from_slice(ORIENT);
    }
    Some(v)
}

struct Parser {
    warnings: Vec<String>,
}

fn unsupported(path: &str, feature: impl Into<String>) -> MjcfError {
    MjcfError::UnsupportedRequiredFeature {
        path: path.to_string(),
        feature: feature.into(),
    }
}

fn element_path(parent: &str, node: Node) -> String {
    let tag = node.tag_name().name();
    match node.attribute("name").or_else(|| node.attribute("class")) {
        Some(n) => format!("{parent}/{tag}[{n}]"),
        None => {
            let index = node
                .prev_siblings()
                .skip(1)
                .filter(|s| s.is_element() && s.tag_name().name() == tag)
                .count();
            format!("{parent}/{tag}[{index}]")
        }
    }
}

impl Parser {
    fn attrs(&mut self, node: Node, path: &str, schema_tag: &str) -> Attrs {
        let known = known_attrs(schema_tag);
        let mut out = Attrs::new();
        for a in node.attributes() {
            if let Some(k) = &known {
                if !k.contains(&a.name()) {
                    self.warnings.push(format!("{path}: unrecognized attribute '{}'", a.name()));
                }
            }
            out.insert(a.name().to_string(), a.value().to_string());
        }
        out
    }

    fn element(&mut self, node: Node, path: String, schema_tag: &str) -> ElementSpec {
        let attrs = self.attrs(node, &path, schema_tag);
        ElementSpec {
            tag: node.tag_name().name().to_string(),
            attrs,
            path,
            children: Vec::new(),
        }
    }

    /// Keeps a whole subtree without validating attributes.
    fn inert(&mut self, node: Node, path: String) -> ElementSpec {
        let mut e = ElementSpec {
            tag: node.tag_name().name().to_string(),
            attrs: node.attributes().map(|a| (a.name().to_string(), a.value().to_string())).collect(),
            path: path.clone(),
            children: Vec::new(),
        };
        for c in node.children().filter(Node::is_element) {
            let p = element_path(&path, c);
            e.children.push(self.inert(c, p));
        }
        e
    }

    fn no_children(&mut self, node: Node, path: &str) {
        for c in node.children().filter(Node::is_element) {
            self.warnings
                .push(format!("{path}: unrecognized element <{}>", c.tag_name().name()));
        }
    }

    fn body(&mut self, node: Node, path: String, is_world: bool) -> Result<BodySpec, MjcfError> {
        let mut b = BodySpec {
            attrs: if is_world { Attrs::new() } else { self.attrs(node, &path, "body") },
            path: path.clone(),
            ..Default::default()
        };
        if is_world && node.attributes().len() > 0 {
            self.warnings.push(format!("{path}: attributes on worldbody are ignored"));
        }
        for c in node.children().filter(Node::is_element) {
            let tag = c.tag_name().name();
            let p = element_path(&path, c);
            match tag {
                "body" => b.bodies.push(self.body(c, p, false)?),
                "inertial" if !is_world => {
                    self.no_children(c, &p);
                    b.inertial = Some(self.element(c, p, "inertial"));
                }
                "joint" | "freejoint" if !is_world => {
                    self.no_children(c, &p);
                    b.joints.push(self.element(c, p, tag));
                }
                "geom" => {
                    self.no_children(c, &p);
                    b.geoms.push(self.element(c, p, "geom"));
                }
                "site" => {
                    self.no_children(c, &p);
                    b.sites.push(self.element(c, p, "site"));
                }
                "camera" | "light" => {
                    self.no_children(c, &p);
                    b.inert.push(self.element(c, p, tag));
                }
                "include" => return Err(unsupported(&p, "<include>")),
                _ => self.warnings.push(format!("{path}: unrecognized element <{tag}>")),
            }
        }
        Ok(b)
    }

    fn default(&mut self, node: Node, path: String, top: bool) -> Result<DefaultSpec, MjcfError> {
        let class = match node.attribute("class") {
            Some(c) => c.to_string(),
            None if top => "main".to_string(),
            None => return Err(MjcfError::compile(path, "nested default class requires a class attribute")),
        };
        for a in node.attributes() {
            if a.name() != "class" {
                self.warnings.push(format!("{path}: unrecognized attribute '{}'", a.name()));
            }
        }
        let mut d = DefaultSpec {
            class,
            path: path.clone(),
            ..Default::default()
        };
        for c in node.children().filter(Node::is_element) {
            let tag = c.tag_name().name();
            let p = element_path(&path, c);
            match tag {
                "default" => d.children.push(self.default(c, p, false)?),
                "joint" | "geom" | "site" | "camera" | "light" | "mesh" | "material" | "motor" | "position" | "velocity" | "general" => {
                    let attrs = self.attrs(c, &p, tag);
                    d.elements.insert(tag.to_string(), attrs);
                }
                "equality" => {
                    let attrs = self.attrs(c, &p, "joint_eq");
                    d.elements.insert(tag.to_string(), attrs);
                }
                _ => self.warnings.push(format!("{path}: unrecognized element <{tag}>")),
            }
        }
        Ok(d)
    }

    fn section(&mut self, node: Node, path: &str, allowed: &[&str], out: &mut Vec<ElementSpec>) -> Result<(), MjcfError> {
        for c in node.children().filter(Node::is_element) {
            let tag = c.tag_name().name();
            let p = element_path(path, c);
            if tag == "include" {
                return Err(unsupported(&p, "<include>"));
            }
            if allowed.contains(&tag) {
                self.no_children(c, &p);
                let schema = if path.ends_with("equality") && tag == "joint" {
                    "joint_eq"
                } else {
                    tag
                };
                out.push(self.element(c, p, schema));
            } else {
                self.warnings.push(format!("{path}: unrecognized element <{tag}>"));
            }
        }
        Ok(())
    }
}

/// Parses MJCF text. Unknown elements and attributes are collected in
/// `warnings`; unsupported structural features are errors.
pub fn parse_mjcf(xml: &str) -> Result<ModelSpec, MjcfError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| MjcfError::XmlMalformed(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "mujoco" {
        return Err(MjcfError::XmlMalformed(format!(
            "root element is <{}>, expected <mujoco>",
            root.tag_name().name()
        )));
    }
    let mut p = Parser { warnings: Vec::new() };
    let mut spec = ModelSpec {
        model_name: root.attribute("model").map(str::to_string),
        worldbody: BodySpec {
            path: "mujoco/worldbody".into(),
            ..Default::default()
        },
        ..Default::default()
    };
    for a in root.attributes() {
        if a.name() != "model" {
            p.warnings.push(format!("mujoco: unrecognized attribute '{}'", a.name()));
        }
    }
    let mut seen_world = false;
    for c in root.children().filter(Node::is_element) {
        let tag = c.tag_name().name();
        let path = format!("mujoco/{tag}");
        match tag {
            "include" => return Err(unsupported(&element_path("mujoco", c), "<include>")),
            "compiler" => {
                p.no_children(c, &path);
                spec.compiler.extend(p.attrs(c, &path, "compiler"));
            }
            "option" => {
                spec.option.extend(p.attrs(c, &path, "option"));
                for f in c.children().filter(Node::is_element) {
                    let fp = format!("{path}/{}", f.tag_name().name());
                    if f.tag_name().name() == "flag" {
                        spec.option_flags.extend(p.attrs(f, &fp, "flag"));
                    } else {
                        p.warnings.push(format!("{path}: unrecognized element <{}>", f.tag_name().name()));
                    }
                }
            }
            "default" => {
                if spec.default.is_some() {
                    return Err(MjcfError::compile(path, "multiple top-level <default> sections"));
                }
                spec.default = Some(p.default(c, path, true)?);
            }
            "asset" => p.section(c, &path, &["mesh", "texture", "material", "hfield"], &mut spec.assets)?,
            "visual" => {
                for v in c.children().filter(Node::is_element) {
                    let vp = element_path(&path, v);
                    spec.visual.push(p.inert(v, vp));
                }
            }
            "statistic" | "size" => {}
            "worldbody" => {
                if seen_world {
                    return Err(MjcfError::compile(path, "multiple <worldbody> sections"));
                }
                seen_world = true;
                spec.worldbody = p.body(c, path, true)?;
            }
            "tendon" => {
                for t in c.children().filter(Node::is_element) {
                    let tp = element_path(&path, t);
                    spec.tendons.push(p.inert(t, tp));
                }
            }
            "equality" => p.section(c, &path, &["connect", "weld", "joint"], &mut spec.equalities)?,
            "actuator" => {
                p.section(c, &path, &["motor", "position", "velocity", "general"], &mut spec.actuators)?;
            }
            "sensor" => p.section(
                c,
                &path,
                &[
                    "jointpos",
                    "jointvel",
                    "accelerometer",
                    "velocimeter",
                    "framepos",
                    "framequat",
                    "framelinvel",
                    "touch",
                ],
                &mut spec.sensors,
            )?,
            _ => p.warnings.push(format!("mujoco: unrecognized element <{tag}>")),
        }
    }
    // Actuators bound to tendons or sites need tendon/site transmission.
    for a in &spec.actuators {
        for key in ["tendon", "site"] {
            if a.attrs.contains_key(key) {
                return Err(unsupported(&a.path, format!("actuator transmission via {key}")));
            }
        }
    }
    spec.warnings = p.warnings;
    Ok(spec)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open_tag(out: &mut String, indent: usize, tag: &str, attrs: &Attrs, close: bool) {
    let _ = write!(out, "{:indent$}<{tag}", "", indent = indent * 2);
    for (k, v) in attrs {
        let _ = write!(out, " {k}=\"{}\"", xml_escape(v));
    }
    out.push_str(if close { "/>\n" } else { ">\n" });
}

fn write_inert(out: &mut String, indent: usize, e: &ElementSpec) {
    if e.children.is_empty() {
        open_tag(out, indent, &e.tag, &e.attrs, true);
    } else {
        open_tag(out, indent, &e.tag, &e.attrs, false);
        for c in &e.children {
            write_inert(out, indent + 1, c);
        }
        let _ = writeln!(out, "{:indent$}</{}>", "", e.tag, indent = indent * 2);
    }
}

fn write_default(out: &mut String, indent: usize, d: &DefaultSpec, top: bool) {
    let mut attrs = Attrs::new();
    if !(top && d.class == "main") {
        attrs.insert("class".into(), d.class.clone());
    }
    open_tag(out, indent, "default", &attrs, false);
    for (tag, a) in &d.elements {
        open_tag(out, indent + 1, tag, a, true);
    }
    for c in &d.children {
        write_default(out, indent + 1, c, false);
    }
    let _ = writeln!(out, "{:indent$}</default>", "", indent = indent * 2);
}

fn write_body(out: &mut String, indent: usize, b: &BodySpec, tag: &str) {
    open_tag(out, indent, tag, &b.attrs, false);
    if let Some(i) = &b.inertial {
        write_inert(out, indent + 1, i);
    }
    for e in b.joints.iter().chain(&b.geoms).chain(&b.sites).chain(&b.inert) {
        write_inert(out, indent + 1, e);
    }
    for c in &b.bodies {
        write_body(out, indent + 1, c, "body");
    }
    let _ = writeln!(out, "{:indent$}</{tag}>", "", indent = indent * 2);
}

fn write_section(out: &mut String, tag: &str, items: &[ElementSpec]) {
    if items.is_empty() {
        return;
    }
    let _ = writeln!(out, "  <{tag}>");
    for e in items {
        write_inert(out, 2, e);
    }
    let _ = writeln!(out, "  </{tag}>");
}

impl ModelSpec {
    /// Serializes back to MJCF. Re-parsing the output gives an equal spec
    /// up to warnings and element paths of unnamed items.
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        let mut root = Attrs::new();
        if let Some(n) = &self.model_name {
            root.insert("model".into(), n.clone());
        }
        open_tag(&mut out, 0, "mujoco", &root, false);
        if !self.compiler.is_empty() {
            open_tag(&mut out, 1, "compiler", &self.compiler, true);
        }
        if !self.option.is_empty() || !self.option_flags.is_empty() {
            if self.option_flags.is_empty() {
                open_tag(&mut out, 1, "option", &self.option, true);
            } else {
                open_tag(&mut out, 1, "option", &self.option, false);
                open_tag(&mut out, 2, "flag", &self.option_flags, true);
                out.push_str("  </option>\n");
            }
        }
        write_section(&mut out, "visual", &self.visual);
        if let Some(d) = &self.default {
            write_default(&mut out, 1, d, true);
        }
        write_section(&mut out, "asset", &self.assets);
        write_body(&mut out, 1, &self.worldbody, "worldbody");
        write_section(&mut out, "tendon", &self.tendons);
        write_section(&mut out, "equality", &self.equalities);
        write_section(&mut out, "actuator", &self.actuators);
        write_section(&mut out, "sensor", &self.sensors);
        out.push_str("</mujoco>\n");
        out
    }

    pub fn body_count(&self) -> usize {
        self.worldbody.descendant_count()
    }

    pub fn joint_count(&self) -> usize {
        fn rec(b: &BodySpec) -> usize {
            b.joints.len() + b.bodies.iter().map(rec).sum::<usize>()
        }
        rec(&self.worldbody)
    }
}
