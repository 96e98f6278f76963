//! JSON interchange form of a scenario document. Field names follow the
//! schema shipped as `interchange.schema`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{validate, Goal, MapDefinition, ScenarioDocument, Violation};
use crate::engine::TransitionDescription;
use crate::fact::{FactSet, Pattern};
use crate::kb::BackwardRule;
use crate::term::{DayTimeDuration, Number, Symbol};

pub const FORMAT_TAG: &str = "wst-interchange";
pub const FORMAT_VERSION: u32 = 1;

/// The JSON schema describing interchange documents.
pub const SCHEMA: &str = include_str!("../interchange.schema");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterchangeError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{} validation error(s), first at {}: {}", .0.len(), .0[0].path, .0[0].message)]
    Validation(Vec<Violation>),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct DocumentDto {
    format: String,
    version: u32,
    prefixes: BTreeMap<String, String>,
    initial_state: FactSet,
    maps: Vec<MapDto>,
    rules: Vec<BackwardRule>,
    goals: Vec<Goal>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MapDto {
    id: Symbol,
    transitions: Vec<TransitionDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct TransitionDto {
    action: Symbol,
    from: Pattern,
    during: Pattern,
    to: Pattern,
    condition: Pattern,
    duration: DayTimeDuration,
    cost: Number,
    belief: Number,
    comfort: Number,
}

pub fn to_value(doc: &ScenarioDocument) -> serde_json::Value {
    let dto = DocumentDto {
        format: FORMAT_TAG.to_string(),
        version: FORMAT_VERSION,
        prefixes: doc.prefixes.clone(),
        initial_state: doc.initial_state.clone(),
        maps: doc
            .maps
            .iter()
            .map(|m| MapDto {
                id: m.id.clone(),
                transitions: m
                    .transitions
                    .iter()
                    .map(|t| TransitionDto {
                        action: t.action.clone(),
                        from: t.from.clone(),
                        during: t.during.clone(),
                        to: t.to.clone(),
                        condition: t.condition.clone(),
                        duration: t.duration,
                        cost: t.cost,
                        belief: t.belief,
                        comfort: t.comfort,
                    })
                    .collect(),
            })
            .collect(),
        rules: doc.rules.clone(),
        goals: doc.goals.clone(),
    };
    serde_json::to_value(dto).expect("interchange DTOs always serialize")
}

/// Pretty-printed JSON with a trailing newline.
pub fn dump(doc: &ScenarioDocument) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&to_value(doc)).expect("interchange DTOs always serialize");
    bytes.push(b'\n');
    bytes
}

pub fn load(bytes: &[u8]) -> Result<ScenarioDocument, InterchangeError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let dto: DocumentDto = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
    from_dto(dto)
}

pub fn from_value(value: serde_json::Value) -> Result<ScenarioDocument, InterchangeError> {
    let dto: DocumentDto = serde_path_to_error::deserialize(value).map_err(schema_error)?;
    from_dto(dto)
}

fn schema_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> InterchangeError {
    let mut path = err.path().to_string();
    let message = err.inner().to_string();
    // serde reports a missing field against its parent object.
    if let Some(field) = message.strip_prefix("missing field `").and_then(|rest| rest.split('`').next()) {
        path = if path == "." || path.is_empty() { field.to_string() } else { format!("{path}.{field}") };
    }
    if path.is_empty() {
        path = ".".to_string();
    }
    InterchangeError::Schema { path, message }
}

fn from_dto(dto: DocumentDto) -> Result<ScenarioDocument, InterchangeError> {
    if dto.format != FORMAT_TAG {
        return Err(InterchangeError::Schema {
            path: "format".into(),
            message: format!("expected {FORMAT_TAG:?}, got {:?}", dto.format),
        });
    }
    if dto.version != FORMAT_VERSION {
        return Err(InterchangeError::Schema {
            path: "version".into(),
            message: format!("unsupported version {}", dto.version),
        });
    }
    let doc = ScenarioDocument {
        prefixes: dto.prefixes,
        initial_state: dto.initial_state,
        maps: dto
            .maps
            .into_iter()
            .map(|m| MapDefinition {
                transitions: m
                    .transitions
                    .into_iter()
                    .map(|t| TransitionDescription {
                        map: m.id.clone(),
                        action: t.action,
                        from: t.from,
                        during: t.during,
                        to: t.to,
                        condition: t.condition,
                        duration: t.duration,
                        cost: t.cost,
                        belief: t.belief,
                        comfort: t.comfort,
                    })
                    .collect(),
                id: m.id,
            })
            .collect(),
        rules: dto.rules,
        goals: dto.goals,
    };
    let violations = validate(&doc);
    if violations.is_empty() {
        Ok(doc)
    } else {
        Err(InterchangeError::Validation(violations))
    }
}
