//! One scenario under management: its document, live state, selected
//! pathway instances and audit log. Every operation appends to the log.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wst_core::api::{
    AdvanceRequest, AdvanceResponse, AuditEntry, ReplayReport, ConflictsResponse, InstanceResponse, InstanceSummary, InstanceVerdict,
    MergedResponse, Operation, PlanRequest, PlanResponse, SelectRequest, SessionSummary, TraceResponse,
    UpdateStateRequest, UpdateStateResponse, ValidateResponse,
};
use wst_core::kb::StateSnapshot;
use wst_core::lifecycle::{advance, detect_conflicts, merge_schedules, validate_path};
use wst_core::planner::{explain, find_paths};
use wst_core::{interchange, FactSet, Goal, PathwayInstance, ScenarioDocument, Term, WorldState};

use crate::error::ServiceError;

pub const SESSION_FORMAT: &str = "wst-session";

#[derive(Clone, Debug)]
pub struct Session {
    id: String,
    document: Arc<ScenarioDocument>,
    live: WorldState,
    instances: Vec<PathwayInstance>,
    /// Base state each instance was planned from, for traces.
    origins: BTreeMap<String, FactSet>,
    next_instance: u64,
    audit: Vec<AuditEntry>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

impl Session {
    pub fn create(id: impl Into<String>, document: ScenarioDocument) -> Result<Self, ServiceError> {
        let live = WorldState::new(document.initial_state.clone(), document.rules.clone().into())?;
        let mut session = Session {
            id: id.into(),
            document: Arc::new(document),
            live,
            instances: Vec::new(),
            origins: BTreeMap::new(),
            next_instance: 1,
            audit: Vec::new(),
        };
        let summary = format!("{} initial fact(s), {} derived", session.live.base().len(), session.live.derived().len());
        session.record(Operation::Create, summary);
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn document(&self) -> &ScenarioDocument {
        &self.document
    }

    pub fn live(&self) -> &WorldState {
        &self.live
    }

    pub fn instances(&self) -> &[PathwayInstance] {
        &self.instances
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.id.clone(),
            version: self.live.version(),
            state_hash: self.live.hash(),
            goals: self.document.goals.iter().map(|g| g.id.clone()).collect(),
            instances: self
                .instances
                .iter()
                .map(|i| InstanceSummary {
                    id: i.id.clone(),
                    goal: i.goal.id.clone(),
                    actions: i.path.steps.iter().map(|s| s.action.clone()).collect(),
                    cursor: i.cursor,
                })
                .collect(),
            audit_entries: self.audit.len(),
        }
    }

    fn record(&mut self, operation: Operation, summary: String) {
        self.audit.push(AuditEntry {
            seq: self.audit.len() as u64 + 1,
            timestamp: now(),
            operation,
            summary,
            version_after: self.live.version(),
            state_hash_after: self.live.hash(),
        });
    }

    fn check_version(&self, expected: u64) -> Result<(), ServiceError> {
        if expected == self.live.version() {
            Ok(())
        } else {
            Err(ServiceError::VersionConflict { expected, actual: self.live.version() })
        }
    }

    fn goal(&self, id: &str) -> Result<Goal, ServiceError> {
        self.document.goal(id).cloned().ok_or_else(|| ServiceError::NotFound(format!("goal {id}")))
    }

    fn instance_index(&self, id: &str) -> Result<usize, ServiceError> {
        self.instances.iter().position(|i| i.id == id).ok_or_else(|| ServiceError::NotFound(format!("instance {id}")))
    }

    fn check_prefixes(&self, facts: &FactSet) -> Result<(), ServiceError> {
        for f in facts.iter() {
            let symbols = [f.subject(), f.object()]
                .into_iter()
                .filter_map(|t| match t {
                    Term::Symbol(s) => Some(s),
                    _ => None,
                })
                .chain([f.predicate()]);
            for s in symbols {
                if !self.document.prefixes.contains_key(s.prefix()) {
                    return Err(ServiceError::BadRequest(format!("fact `{f}` uses undeclared prefix `{}:`", s.prefix())));
                }
            }
        }
        Ok(())
    }

    pub fn get_state(&mut self) -> StateSnapshot {
        let snapshot = self.live.snapshot();
        self.record(Operation::GetState, format!("{} asserted, {} derived", snapshot.base.len(), snapshot.derived.len()));
        snapshot
    }

    pub fn update_state(&mut self, req: UpdateStateRequest) -> Result<UpdateStateResponse, ServiceError> {
        self.check_version(req.expected_version)?;
        self.check_prefixes(&req.assert)?;
        self.check_prefixes(&req.retract)?;
        let mut base = self.live.base().difference(&req.retract);
        base.extend(req.assert.iter().cloned());
        self.live = self.live.with_base(base)?;
        let summary = format!("asserted {}, retracted {}", req.assert.len(), req.retract.len());
        self.record(Operation::UpdateState { assert: req.assert, retract: req.retract }, summary);
        Ok(UpdateStateResponse { version: self.live.version(), state_hash: self.live.hash() })
    }

    pub fn plan(&mut self, req: PlanRequest) -> Result<PlanResponse, ServiceError> {
        let goal = self.goal(&req.goal)?;
        let paths = find_paths(&self.live, &goal, &self.document.maps, req.options)?;
        self.record(
            Operation::Plan { goal: req.goal, options: req.options },
            format!("{} path(s) for {}", paths.len(), goal.id),
        );
        Ok(PlanResponse { goal: goal.id, version: self.live.version(), paths })
    }

    /// Plans again from the live state and turns path `path_index` into a
    /// new pathway instance.
    pub fn select(&mut self, req: SelectRequest) -> Result<InstanceResponse, ServiceError> {
        self.check_version(req.expected_version)?;
        let goal = self.goal(&req.goal)?;
        let mut paths = find_paths(&self.live, &goal, &self.document.maps, req.options)?;
        if req.path_index >= paths.len() {
            return Err(ServiceError::NoSuchPath { index: req.path_index, available: paths.len() });
        }
        let path = paths.swap_remove(req.path_index);
        let id = format!("i{}", self.next_instance);
        self.next_instance += 1;
        let instance = PathwayInstance::new(id.clone(), goal, path, req.epoch);
        self.origins.insert(id.clone(), self.live.base().clone());
        self.instances.push(instance.clone());
        self.live = self.live.bumped();
        let summary = format!(
            "{id}: path {} for {} ({} step(s))",
            req.path_index,
            instance.goal.id,
            instance.path.steps.len()
        );
        self.record(
            Operation::Select {
                goal: req.goal,
                path_index: req.path_index,
                epoch: req.epoch,
                options: req.options,
                instance: id,
            },
            summary,
        );
        Ok(InstanceResponse { version: self.live.version(), instance })
    }

    pub fn validate(&mut self, instance: &str) -> Result<ValidateResponse, ServiceError> {
        let idx = self.instance_index(instance)?;
        let verdict = validate_path(&self.live, &self.instances[idx], &self.document.maps)?;
        let summary = format!("{instance}: {}", if verdict.is_reachable() { "reachable" } else { "not reachable" });
        self.record(Operation::Validate { instance: instance.to_string() }, summary);
        Ok(ValidateResponse { instance: instance.to_string(), version: self.live.version(), verdict })
    }

    pub fn conflicts(&mut self) -> Result<ConflictsResponse, ServiceError> {
        let reports = detect_conflicts(&self.live, &self.instances, &self.document.maps, self.live.rules().clone())?;
        self.record(Operation::Conflicts, format!("{} report(s)", reports.len()));
        Ok(ConflictsResponse { version: self.live.version(), reports })
    }

    pub fn merged(&mut self) -> MergedResponse {
        let steps = merge_schedules(&self.instances);
        self.record(Operation::Merge, format!("{} pending step(s)", steps.len()));
        MergedResponse { version: self.live.version(), steps }
    }

    pub fn trace(&mut self, instance: &str) -> Result<TraceResponse, ServiceError> {
        let idx = self.instance_index(instance)?;
        let origin = self.origins.get(instance).cloned().unwrap_or_else(|| self.document.initial_state.clone());
        let initial = WorldState::new(origin, self.live.rules().clone())?;
        let trace = explain(&self.instances[idx].path, &initial, &self.document.maps)?;
        self.record(Operation::Trace { instance: instance.to_string() }, format!("{} step(s)", trace.entries.len()));
        Ok(TraceResponse { instance: instance.to_string(), trace })
    }

    pub fn advance(&mut self, instance: &str, req: AdvanceRequest) -> Result<AdvanceResponse, ServiceError> {
        self.check_version(req.expected_version)?;
        let idx = self.instance_index(instance)?;
        self.check_prefixes(&req.observed)?;
        let (next, live) = advance(&self.instances[idx], &req.observed, &self.live, &self.document.maps)?;
        let action = self.instances[idx].path.steps[self.instances[idx].cursor].action.clone();
        self.instances[idx] = next.clone();
        self.live = live;
        let mut verdicts = Vec::with_capacity(self.instances.len());
        for inst in &self.instances {
            verdicts.push(InstanceVerdict {
                instance: inst.id.clone(),
                verdict: validate_path(&self.live, inst, &self.document.maps)?,
            });
        }
        let summary = format!("{instance}: executed {action} ({} observed fact(s))", req.observed.len());
        self.record(Operation::Advance { instance: instance.to_string(), observed: req.observed }, summary);
        Ok(AdvanceResponse { version: self.live.version(), state_hash: self.live.hash(), instance: next, verdicts })
    }

    /// Re-executes one logged operation. Used by [`replay`].
    fn reapply(&mut self, op: &Operation) -> Result<(), ServiceError> {
        let version = self.live.version();
        match op.clone() {
            Operation::Create => {}
            Operation::GetState => {
                self.get_state();
            }
            Operation::UpdateState { assert, retract } => {
                self.update_state(UpdateStateRequest { expected_version: version, assert, retract })?;
            }
            Operation::Plan { goal, options } => {
                self.plan(PlanRequest { goal, options })?;
            }
            Operation::Select { goal, path_index, epoch, options, instance } => {
                let made = self.select(SelectRequest { goal, path_index, epoch, expected_version: version, options })?;
                if made.instance.id != instance {
                    return Err(ServiceError::Storage(format!("replay produced instance {} for {instance}", made.instance.id)));
                }
            }
            Operation::Validate { instance } => {
                self.validate(&instance)?;
            }
            Operation::Conflicts => {
                self.conflicts()?;
            }
            Operation::Merge => {
                self.merged();
            }
            Operation::Trace { instance } => {
                self.trace(&instance)?;
            }
            Operation::Advance { instance, observed } => {
                self.advance(&instance, AdvanceRequest { expected_version: version, observed })?;
            }
        }
        Ok(())
    }
}

/// Starts a fresh session from `document` and re-executes every logged
/// operation, comparing versions and state hashes entry by entry.
pub fn replay(document: &ScenarioDocument, log: &[AuditEntry]) -> Result<ReplayReport, ServiceError> {
    let mut session = Session::create("replay", document.clone())?;
    let mut mismatches = Vec::new();
    for (i, entry) in log.iter().enumerate() {
        if i > 0 {
            session.reapply(&entry.operation)?;
        }
        let got = session.audit.last().expect("every operation is logged");
        if got.version_after != entry.version_after || got.state_hash_after != entry.state_hash_after {
            mismatches.push(entry.seq);
        }
    }
    Ok(ReplayReport { entries: log.len(), mismatches, final_state_hash: session.live.hash() })
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct LiveDto {
    version: u64,
    base: FactSet,
}

/// On-disk form of a session.
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub(crate) struct SessionFile {
    format: String,
    id: String,
    document: serde_json::Value,
    live: LiveDto,
    instances: Vec<PathwayInstance>,
    origins: BTreeMap<String, FactSet>,
    next_instance: u64,
    audit: Vec<AuditEntry>,
}

impl SessionFile {
    pub(crate) fn from_session(s: &Session) -> Self {
        SessionFile {
            format: SESSION_FORMAT.to_string(),
            id: s.id.clone(),
            document: interchange::to_value(&s.document),
            live: LiveDto { version: s.live.version(), base: s.live.base().clone() },
            instances: s.instances.clone(),
            origins: s.origins.clone(),
            next_instance: s.next_instance,
            audit: s.audit.clone(),
        }
    }

    pub(crate) fn into_session(self) -> Result<Session, ServiceError> {
        if self.format != SESSION_FORMAT {
            return Err(ServiceError::Storage(format!("unexpected session format {:?}", self.format)));
        }
        let document = interchange::from_value(self.document)?;
        let live = WorldState::at_version(self.live.base, document.rules.clone().into(), self.live.version)?;
        Ok(Session {
            id: self.id,
            document: Arc::new(document),
            live,
            instances: self.instances,
            origins: self.origins,
            next_instance: self.next_instance,
            audit: self.audit,
        })
    }
}
