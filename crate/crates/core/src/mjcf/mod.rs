//! MJCF subset loader: XML → [`ModelSpec`] → compiled [`Model`](crate::model::Model).
//!
//! Supported: global options (`timestep`, `gravity`, `iterations`,
//! `tolerance`, contact overrides), compiler `angle`/`eulerseq`/`autolimits`,
//! hierarchical default classes, bodies with free/ball/slide/hinge joints,
//! primitive geoms, sites, connect/weld/joint equalities, motor/position/
//! velocity/general actuators and the joint/frame/accelerometer/velocimeter/
//! touch sensors. Meshes, textures, materials, height fields, lights,
//! cameras, tendons and `<visual>` are kept as inert metadata. Anything else
//! is reported in the warnings list.

mod compile;
mod dump;
mod euler;
mod parse;

use thiserror::Error;

pub use compile::compile;
pub use dump::dump_model;
pub use euler::euler_to_quat;
pub use parse::{parse_mjcf, Attrs, BodySpec, DefaultSpec, ElementSpec, ModelSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MjcfError {
    #[error("malformed XML: {0}")]
    XmlMalformed(String),
    #[error("{path}: unsupported feature: {feature}")]
    UnsupportedRequiredFeature { path: String, feature: String },
    #[error("{path}: {message}")]
    Compile { path: String, message: String },
    #[error("bad euler sequence {0:?}")]
    BadSequence(String),
}

impl MjcfError {
    pub(crate) fn compile(path: impl Into<String>, message: impl Into<String>) -> Self {
        MjcfError::Compile {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Parses and compiles in one call.
pub fn load_model(xml: &str) -> Result<crate::model::Model, MjcfError> {
    compile(&parse_mjcf(xml)?)
}

/// Reads a file and loads it.
pub fn load_model_file(path: &std::path::Path) -> Result<crate::model::Model, MjcfError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| MjcfError::compile(path.display().to_string(), format!("cannot read file: {e}")))?;
    load_model(&text)
}
