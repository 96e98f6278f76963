//! Request and response bodies of the session service, shared by the server
//! and its clients.

use serde::{Deserialize, Serialize};

use crate::dsl::Diagnostic;
use crate::document::Violation;
use crate::fact::FactSet;
use crate::lifecycle::{ConflictReport, MergedStep, PathwayInstance, Verdict};
use crate::planner::{Path, SearchOptions, Trace};
use crate::term::{Symbol, Timestamp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorBody {
    /// Machine-readable error kind, e.g. `not-found`, `version-conflict`.
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreatedSession {
    pub id: String,
    pub version: u64,
    pub state_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceSummary {
    pub id: String,
    pub goal: Symbol,
    pub actions: Vec<Symbol>,
    pub cursor: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionSummary {
    pub id: String,
    pub version: u64,
    pub state_hash: String,
    pub goals: Vec<Symbol>,
    pub instances: Vec<InstanceSummary>,
    pub audit_entries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlanRequest {
    pub goal: String,
    #[serde(flatten)]
    pub options: SearchOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlanResponse {
    pub goal: Symbol,
    pub version: u64,
    pub paths: Vec<Path>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectRequest {
    pub goal: String,
    pub path_index: usize,
    #[serde(default)]
    pub epoch: Timestamp,
    pub expected_version: u64,
    #[serde(flatten)]
    pub options: SearchOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceResponse {
    pub version: u64,
    pub instance: PathwayInstance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidateResponse {
    pub instance: String,
    pub version: u64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConflictsResponse {
    pub version: u64,
    pub reports: Vec<ConflictReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MergedResponse {
    pub version: u64,
    pub steps: Vec<MergedStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceResponse {
    pub instance: String,
    pub trace: Trace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdvanceRequest {
    pub expected_version: u64,
    #[serde(default)]
    pub observed: FactSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceVerdict {
    pub instance: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdvanceResponse {
    pub version: u64,
    pub state_hash: String,
    pub instance: PathwayInstance,
    /// Fresh validation of every instance in the session after the step.
    pub verdicts: Vec<InstanceVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpdateStateRequest {
    pub expected_version: u64,
    #[serde(default)]
    pub assert: FactSet,
    #[serde(default)]
    pub retract: FactSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpdateStateResponse {
    pub version: u64,
    pub state_hash: String,
}

/// What an audit entry records. Carries everything needed to replay the
/// operation against the session's document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Operation {
    Create,
    GetState,
    #[serde(rename_all = "camelCase")]
    UpdateState { assert: FactSet, retract: FactSet },
    #[serde(rename_all = "camelCase")]
    Plan { goal: String, options: SearchOptions },
    #[serde(rename_all = "camelCase")]
    Select { goal: String, path_index: usize, epoch: Timestamp, options: SearchOptions, instance: String },
    #[serde(rename_all = "camelCase")]
    Validate { instance: String },
    Conflicts,
    Merge,
    #[serde(rename_all = "camelCase")]
    Trace { instance: String },
    #[serde(rename_all = "camelCase")]
    Advance { instance: String, observed: FactSet },
}

impl Operation {
    pub fn is_mutating(&self) -> bool {
        matches!(self, Operation::UpdateState { .. } | Operation::Select { .. } | Operation::Advance { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditEntry {
    pub seq: u64,
    /// RFC 3339 wall-clock time of the request.
    pub timestamp: String,
    pub operation: Operation,
    pub summary: String,
    pub version_after: u64,
    pub state_hash_after: String,
}

/// Outcome of replaying an audit log against its document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayReport {
    pub entries: usize,
    /// Sequence numbers whose recorded version or state hash differs from
    /// the replayed one.
    pub mismatches: Vec<u64>,
    pub final_state_hash: String,
}
