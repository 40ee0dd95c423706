//! Declarative description of the unit under test.
//!
//! The metadata file lists the constructor parameters and every action the
//! search may apply to an instance: attribute assignments and method calls,
//! each with integer parameters that may carry an inclusive range.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower bound used when a parameter declares no `min`.
pub const DEFAULT_MIN: i64 = -1000;
/// Upper bound used when a parameter declares no `max`.
pub const DEFAULT_MAX: i64 = 1000;

/// Action identifier reserved for the constructor call.
pub const CONSTRUCTOR_ID: i64 = -1;

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("malformed metadata JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: unknown datatype {tag:?} (only \"integer\" is supported)")]
    UnknownDatatype { path: String, tag: String },
    #[error("{path}: unknown action type {tag:?} (expected \"method\" or \"assign\")")]
    UnknownActionKind { path: String, tag: String },
    #[error("{path}: min {min} > max {max}")]
    EmptyRange { path: String, min: i64, max: i64 },
    #[error("{path}: assign action must have exactly one parameter, found {found}")]
    AssignArity { path: String, found: usize },
    #[error("actions must be non-empty")]
    NoActions,
    #[error("{path}: duplicate action name {name:?}")]
    DuplicateAction { path: String, name: String },
    #[error("{path}: must not be empty")]
    EmptyField { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub datatype: Datatype,
    pub min: Option<i64>,
    pub max: Option<i64>,
}

impl ParamSpec {
    pub fn integer(min: Option<i64>, max: Option<i64>) -> Self {
        Self {
            datatype: Datatype::Integer,
            min,
            max,
        }
    }

    /// Inclusive bounds after applying the defaults for absent limits.
    ///
    /// A one-sided range whose declared bound falls outside the default
    /// window collapses onto that bound rather than producing an empty range.
    pub fn effective_bounds(&self) -> (i64, i64) {
        match (self.min, self.max) {
            (Some(lo), Some(hi)) => (lo, hi),
            (Some(lo), None) => (lo, DEFAULT_MAX.max(lo)),
            (None, Some(hi)) => (DEFAULT_MIN.min(hi), hi),
            (None, None) => (DEFAULT_MIN, DEFAULT_MAX),
        }
    }

    pub fn contains(&self, value: i64) -> bool {
        let (lo, hi) = self.effective_bounds();
        (lo..=hi).contains(&value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Method,
    Assign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpec {
    pub name: String,
    pub kind: ActionKind,
    pub params: Vec<ParamSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UutMetadata {
    /// Module name of the unit under test (no extension).
    pub file: String,
    pub location: String,
    pub class_name: String,
    pub constructor: Vec<ParamSpec>,
    pub actions: Vec<ActionSpec>,
}

impl UutMetadata {
    /// Parameter specs for an action id, where `-1` is the constructor.
    pub fn params_of(&self, action_id: i64) -> Option<&[ParamSpec]> {
        if action_id == CONSTRUCTOR_ID {
            Some(&self.constructor)
        } else {
            usize::try_from(action_id)
                .ok()
                .and_then(|i| self.actions.get(i))
                .map(|a| a.params.as_slice())
        }
    }

    pub fn action(&self, action_id: i64) -> Option<&ActionSpec> {
        usize::try_from(action_id)
            .ok()
            .and_then(|i| self.actions.get(i))
    }

    /// Serializes back to the metadata file layout.
    pub fn render(&self) -> String {
        let raw = RawMetadata {
            file: self.file.clone(),
            location: self.location.clone(),
            class: self.class_name.clone(),
            constructor: RawConstructor {
                parameters: self.constructor.iter().map(RawParam::from).collect(),
            },
            actions: self
                .actions
                .iter()
                .map(|a| RawAction {
                    name: a.name.clone(),
                    kind: match a.kind {
                        ActionKind::Method => "method".into(),
                        ActionKind::Assign => "assign".into(),
                    },
                    parameters: Some(a.params.iter().map(RawParam::from).collect()),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("metadata serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawParam {
    #[serde(rename = "type")]
    datatype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<i64>,
}

impl From<&ParamSpec> for RawParam {
    fn from(p: &ParamSpec) -> Self {
        Self {
            datatype: "integer".into(),
            min: p.min,
            max: p.max,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawConstructor {
    #[serde(default)]
    parameters: Vec<RawParam>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawAction {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    parameters: Option<Vec<RawParam>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawMetadata {
    file: String,
    location: String,
    class: String,
    constructor: RawConstructor,
    actions: Vec<RawAction>,
}

fn convert_param(raw: &RawParam, path: String) -> Result<ParamSpec, MetadataError> {
    if raw.datatype != "integer" {
        return Err(MetadataError::UnknownDatatype {
            path,
            tag: raw.datatype.clone(),
        });
    }
    if let (Some(min), Some(max)) = (raw.min, raw.max) {
        if min > max {
            return Err(MetadataError::EmptyRange { path, min, max });
        }
    }
    Ok(ParamSpec::integer(raw.min, raw.max))
}

/// Parses and validates a metadata file. Action index `i` in the result is
/// genotype action id `i`.
pub fn parse_metadata(json_text: &str) -> Result<UutMetadata, MetadataError> {
    let raw: RawMetadata = serde_json::from_str(json_text)?;

    for (field, value) in [("file", &raw.file), ("class", &raw.class)] {
        if value.trim().is_empty() {
            return Err(MetadataError::EmptyField { path: field.into() });
        }
    }

    let constructor = raw
        .constructor
        .parameters
        .iter()
        .enumerate()
        .map(|(i, p)| convert_param(p, format!("constructor.parameters[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;

    if raw.actions.is_empty() {
        return Err(MetadataError::NoActions);
    }

    let mut seen = HashSet::new();
    let mut actions = Vec::with_capacity(raw.actions.len());
    for (i, a) in raw.actions.iter().enumerate() {
        let path = format!("actions[{i}]");
        if a.name.trim().is_empty() {
            return Err(MetadataError::EmptyField {
                path: format!("{path}.name"),
            });
        }
        if !seen.insert(a.name.as_str()) {
            return Err(MetadataError::DuplicateAction {
                path,
                name: a.name.clone(),
            });
        }
        let kind = match a.kind.as_str() {
            "method" => ActionKind::Method,
            "assign" => ActionKind::Assign,
            other => {
                return Err(MetadataError::UnknownActionKind {
                    path: format!("{path}.type"),
                    tag: other.to_string(),
                })
            }
        };
        let params = a
            .parameters
            .as_deref()
            .unwrap_or_default()
            .iter()
            .enumerate()
            .map(|(j, p)| convert_param(p, format!("{path}.parameters[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        if kind == ActionKind::Assign && params.len() != 1 {
            return Err(MetadataError::AssignArity {
                path,
                found: params.len(),
            });
        }
        actions.push(ActionSpec {
            name: a.name.clone(),
            kind,
            params,
        });
    }

    Ok(UutMetadata {
        file: raw.file,
        location: raw.location,
        class_name: raw.class,
        constructor,
        actions,
    })
}

/// Draws a uniform integer from the parameter's effective range.
pub fn sample_param<R: Rng + ?Sized>(spec: &ParamSpec, rng: &mut R) -> i64 {
    let (lo, hi) = spec.effective_bounds();
    rng.gen_range(lo..=hi)
}
