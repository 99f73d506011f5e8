#![allow(dead_code)]

pub mod gen;

use std::collections::BTreeSet;
use std::path::PathBuf;

use wfmt::ad::AdModel;
use wfmt::bpmn::{BpmnModel, EndResult, EventTrigger, FlowKind, FlowObject, ParticipantKind, TaskType};
use wfmt::io::adm::parse_adm;
use wfmt::io::events::{parse_event_script, EventScript};
use wfmt::transform::{transform, TransformationTrace};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn read(rel: &str) -> String {
    let p = crate_dir().join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn load_adm(rel: &str) -> AdModel {
    parse_adm(&read(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn load_script(rel: &str) -> EventScript {
    parse_event_script(&read(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub const FIXTURE: &str = "fixtures/supplier_order.adm.json";

/// Shipped event scripts for the supplier/customer fixture.
pub const SCRIPTS: [&str; 6] = [
    "fixtures/happy.events",
    "fixtures/cancel.events",
    "fixtures/empty_items.events",
    "fixtures/decision_low.events",
    "fixtures/decision_high.events",
    "fixtures/customer.events",
];

pub fn supplier() -> (AdModel, BpmnModel, TransformationTrace) {
    let ad = load_adm(FIXTURE);
    let (bpmn, trace) = transform(&ad).expect("fixture transforms");
    (ad, bpmn, trace)
}

// ---------------------------------------------------------------------------
// Mapping micro-fixtures

/// (mapping line, fixture stem, rule the line maps to)
pub const MAPPING: [(&str, &str, &str); 11] = [
    ("Activity", "activity", "R1"),
    ("Performer", "performer", "R2"),
    ("CallManualTask", "manual_task", "R3"),
    ("CallServiceTask", "service_task", "R4"),
    ("Pins", "pins", "R16"),
    ("ObjectFlow", "object_flow", "R10"),
    ("OrgUnit", "org_unit", "R2"),
    ("Position", "position", "R2"),
    ("Variable", "variable", "R11"),
    ("Read/WriteVariableAction", "read_write", "R12"),
    ("InterruptibleRegion", "region", "R13"),
];

fn object<'a>(m: &'a BpmnModel, name: &str) -> Result<&'a FlowObject, String> {
    m.flow_objects()
        .find(|o| o.name == name)
        .ok_or_else(|| format!("no flow object named '{name}'"))
}

fn task_type(m: &BpmnModel, name: &str) -> Result<TaskType, String> {
    object(m, name)?
        .task()
        .map(|t| t.task_type)
        .ok_or_else(|| format!("'{name}' is not a task"))
}

fn ensure(cond: bool, what: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn participant_kind(m: &BpmnModel, name: &str) -> Result<ParticipantKind, String> {
    m.participants
        .iter()
        .find(|p| p.name == name)
        .map(|p| p.kind)
        .ok_or_else(|| format!("no participant '{name}'"))
}

/// Target-side facts each mapping line must produce beyond its trace entry.
fn check_structure(stem: &str, m: &BpmnModel) -> Result<(), String> {
    match stem {
        "activity" => {
            ensure(m.pools.len() == 1 && m.pools[0].name == "Solo", "one pool named Solo")?;
            let ends = m.flow_objects().filter(|o| o.is_end()).count();
            ensure(m.flow_objects().count() == 2 && ends == 1, "start and end only")
        }
        "performer" => {
            let t = object(m, "Review Claim")?.task().ok_or("not a task")?;
            ensure(t.task_type == TaskType::User, "user task")?;
            let p = t
                .performer
                .as_ref()
                .and_then(|p| m.participant(p))
                .ok_or("no performer")?;
            ensure(p.name == "Clerk", "performer is Clerk")
        }
        "manual_task" => ensure(task_type(m, "Sort Mail")? == TaskType::Manual, "manual task"),
        "service_task" => {
            let t = object(m, "Charge Card")?.task().ok_or("not a task")?;
            let s = t.service.as_ref().ok_or("no service reference")?;
            ensure(t.task_type == TaskType::Service, "service task")?;
            ensure(s.interface == "Billing" && s.operation == "charge", "Billing.charge")
        }
        "pins" => {
            ensure(m.message_flows.len() == 1, "one message flow")?;
            let mf = &m.message_flows[0];
            ensure(mf.source == object(m, "Send Ping")?.id, "flow leaves the send task")?;
            ensure(
                mf.target == object(m, "Receive Ping")?.id,
                "flow enters the receive task",
            )?;
            let msg = m.message(&mf.message).ok_or("no message")?;
            ensure(
                msg.name == "Ping" && msg.payload_type == "Note",
                "message Ping carrying Note",
            )
        }
        "object_flow" => {
            let (recv, log) = (&object(m, "Receive Note")?.id, &object(m, "Log Note")?.id);
            let p = &m.pools[0].process;
            ensure(p.sequence_flows.len() == 2, "two sequence flows")?;
            ensure(
                p.sequence_flows.iter().any(|f| &f.source == recv && &f.target == log),
                "object flow became a sequence flow",
            )
        }
        "org_unit" => ensure(
            participant_kind(m, "Dispatch")? == ParticipantKind::Entity,
            "entity participant",
        ),
        "position" => ensure(
            participant_kind(m, "Auditor")? == ParticipantKind::Role,
            "role participant",
        ),
        "variable" => {
            let props: Vec<(&str, &str)> = m.pools[0]
                .process
                .properties
                .iter()
                .map(|p| (p.name.as_str(), p.type_name.as_str()))
                .collect();
            ensure(
                props == [("count", "Integer"), ("label", "String")],
                "properties count and label",
            )
        }
        "read_write" => {
            for (name, to) in [("Set X", "x"), ("Read X", "y")] {
                let t = object(m, name)?.task().ok_or("not a task")?;
                ensure(t.task_type == TaskType::None, "plain task")?;
                ensure(t.assignments.len() == 1 && t.assignments[0].to == to, "one assignment")?;
            }
            Ok(())
        }
        "region" => {
            let sub = object(m, "Working")?;
            ensure(sub.subprocess().is_some(), "region became a subprocess")?;
            let root = &m.pools[0].process;
            let boundary: Vec<&FlowObject> = root.boundary_events(&sub.id).collect();
            ensure(boundary.len() == 1, "one boundary event")?;
            ensure(
                matches!(
                    boundary[0].kind,
                    FlowKind::IntermediateEvent {
                        trigger: EventTrigger::Message,
                        ..
                    }
                ),
                "message boundary event",
            )?;
            let clean = &object(m, "Clean Up")?.id;
            ensure(
                root.sequence_flows
                    .iter()
                    .any(|f| f.source == boundary[0].id && &f.target == clean),
                "exception flow to Clean Up",
            )?;
            let terminates = root
                .flow_objects
                .iter()
                .filter(|o| {
                    matches!(
                        o.kind,
                        FlowKind::EndEvent {
                            result: EndResult::Terminate
                        }
                    )
                })
                .count();
            ensure(terminates == 2, "both activity finals terminate")
        }
        other => Err(format!("unknown mapping fixture '{other}'")),
    }
}

/// Transforms one micro-fixture and compares its whole trace with the
/// expected report, then checks the line's own rule and target structure.
pub fn check_mapping(stem: &str, rule: &str) -> Result<(), String> {
    let ad = load_adm(&format!("tests/fixtures/mapping/{stem}.adm.json"));
    let expected = read(&format!("tests/fixtures/mapping/{stem}.trace"));
    let (bpmn, trace) = transform(&ad).map_err(|e| e.to_string())?;
    let got = trace.report();
    if got != expected {
        return Err(format!("trace differs\n--- expected\n{expected}--- got\n{got}"));
    }
    if !trace.entries.iter().any(|e| e.rule.to_string() == rule) {
        return Err(format!("no {rule} entry"));
    }
    check_structure(stem, &bpmn)
}

// ---------------------------------------------------------------------------
// Validator catalog

pub const RULES: [&str; 14] = [
    "WF01", "WF02", "WF03", "WF04", "WF05", "WF06", "WF07", "WF08", "WF09", "WF10", "WF11", "WF12", "WF20", "WF21",
];

/// The accepting fixture yields no diagnostic at all; every diagnostic of the
/// rejecting one carries `code`.
pub fn check_rule(code: &str) -> Result<(), String> {
    let stem = code.to_lowercase();
    let accept = load_adm(&format!("tests/fixtures/validator/{stem}_accept.adm.json"));
    let diags = wfmt::validate::validate(&accept);
    if !diags.is_empty() {
        return Err(format!("accepting fixture reports {diags:?}"));
    }
    let reject = load_adm(&format!("tests/fixtures/validator/{stem}_reject.adm.json"));
    let codes: BTreeSet<&str> = wfmt::validate::validate(&reject).iter().map(|d| d.code).collect();
    if codes.len() != 1 || !codes.contains(code) {
        return Err(format!("rejecting fixture reports {codes:?}, expected [{code}]"));
    }
    Ok(())
}
