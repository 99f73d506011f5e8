use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{AssignTime, BpmnModel, EndResult, FlowKind, GatewayKind, Process, TaskType};
use crate::id::Id;

/// Violation of a BPMN model invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BpmnDiagnostic {
    pub element: Id,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for BpmnDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code, self.element, self.message)
    }
}

/// Checks every model invariant. Empty result means the model is well formed.
///
/// Codes: `DUP-ID`, `FLOW-REF`, `MF-POOL`, `MSG-REF`, `PART-REF`, `BND-HOST`,
/// `BND-IN`, `BND-OUT`, `XOR-DEFAULT`, `COND`, `ASSIGN-REF`, `NO-START`,
/// `NO-IN`, `NO-OUT`.
pub fn wellformed(model: &BpmnModel) -> Vec<BpmnDiagnostic> {
    let mut out = Vec::new();
    let mut push = |element: &Id, code: &'static str, message: String| {
        out.push(BpmnDiagnostic {
            element: element.clone(),
            code,
            message,
        })
    };

    let mut seen = BTreeSet::new();
    for id in model.all_ids() {
        if !seen.insert(id) {
            push(id, "DUP-ID", "id used more than once".into());
        }
    }

    let messages: BTreeSet<&Id> = model.messages.iter().map(|m| &m.id).collect();
    let participants: BTreeSet<&Id> = model.participants.iter().map(|p| &p.id).collect();

    for mf in &model.message_flows {
        let s = model.locate(&mf.source);
        let t = model.locate(&mf.target);
        match (s, t) {
            (Some(s), Some(t)) if s.pool.id != t.pool.id => {}
            (Some(_), Some(_)) => push(&mf.id, "MF-POOL", "message flow stays inside one pool".into()),
            _ => push(&mf.id, "MF-POOL", "message flow endpoint is not a flow object".into()),
        }
        if !messages.contains(&mf.message) {
            push(&mf.id, "MSG-REF", format!("unknown message '{}'", mf.message));
        }
    }

    for pool in &model.pools {
        if let Some(p) = &pool.participant {
            if !participants.contains(p) {
                push(&pool.id, "PART-REF", format!("unknown participant '{p}'"));
            }
        }
        check_process(&pool.process, &[], &messages, &participants, &mut push);
    }
    out.sort();
    out
}

fn check_process(
    p: &Process,
    outer: &[BTreeSet<&str>],
    messages: &BTreeSet<&Id>,
    participants: &BTreeSet<&Id>,
    push: &mut dyn FnMut(&Id, &'static str, String),
) {
    let mut scopes: Vec<BTreeSet<&str>> = outer.to_vec();
    scopes.push(p.properties.iter().map(|x| x.name.as_str()).collect());
    let visible = |name: &str, scopes: &[BTreeSet<&str>]| scopes.iter().any(|s| s.contains(name));

    let objects: BTreeMap<&Id, _> = p.flow_objects.iter().map(|o| (&o.id, o)).collect();
    for f in &p.sequence_flows {
        for end in [&f.source, &f.target] {
            if !objects.contains_key(end) {
                push(
                    &f.id,
                    "FLOW-REF",
                    format!("endpoint '{end}' is not in process '{}'", p.id),
                );
            }
        }
        if f.condition.is_some() {
            let ok = match objects.get(&f.source).map(|o| &o.kind) {
                Some(FlowKind::Gateway {
                    gate: GatewayKind::ExclusiveData,
                }) => true,
                Some(FlowKind::Task(t)) => t.task_type == TaskType::Receive,
                _ => false,
            };
            if !ok {
                push(
                    &f.id,
                    "COND",
                    "condition only allowed after an exclusive gateway or receive task".into(),
                );
            }
        }
    }

    if !p.flow_objects.is_empty()
        && !p
            .flow_objects
            .iter()
            .any(|o| o.is_start() || o.is_instantiating_receive())
    {
        push(
            &p.id,
            "NO-START",
            "process has neither a start event nor an instantiating receive".into(),
        );
    }

    for o in &p.flow_objects {
        let n_in = p.incoming(&o.id).count();
        let n_out = p.outgoing(&o.id).count();
        if o.is_boundary() {
            if n_in > 0 {
                push(&o.id, "BND-IN", "boundary event has incoming sequence flow".into());
            }
            if n_out != 1 {
                push(
                    &o.id,
                    "BND-OUT",
                    format!("boundary event needs exactly one exception flow, has {n_out}"),
                );
            }
        } else {
            if n_in == 0 && !o.is_start() && !o.is_instantiating_receive() {
                push(&o.id, "NO-IN", "flow object has no incoming sequence flow".into());
            }
            if n_out == 0 && !o.is_end() {
                push(&o.id, "NO-OUT", "flow object has no outgoing sequence flow".into());
            }
        }
        match &o.kind {
            FlowKind::IntermediateEvent {
                attached_to,
                message,
                message_var,
                ..
            } => {
                if let Some(h) = attached_to {
                    if !objects.get(h).is_some_and(|x| x.is_activity()) {
                        push(
                            &o.id,
                            "BND-HOST",
                            format!("attach target '{h}' is not an activity of this process"),
                        );
                    }
                }
                if let Some(m) = message {
                    if !messages.contains(m) {
                        push(&o.id, "MSG-REF", format!("unknown message '{m}'"));
                    }
                }
                if let Some(v) = message_var {
                    if !visible(v, &scopes) {
                        push(&o.id, "ASSIGN-REF", format!("property '{v}' not visible"));
                    }
                }
            }
            FlowKind::Gateway {
                gate: GatewayKind::ExclusiveData,
            } if n_out > 1 => {
                let defaults = p.outgoing(&o.id).filter(|f| f.condition.is_none()).count();
                if defaults > 1 {
                    push(&o.id, "XOR-DEFAULT", format!("{defaults} unconditioned outgoing flows"));
                }
            }
            FlowKind::Task(t) => {
                if let Some(perf) = &t.performer {
                    if !participants.contains(perf) {
                        push(&o.id, "PART-REF", format!("unknown participant '{perf}'"));
                    }
                }
                if let Some(m) = &t.message {
                    if !messages.contains(m) {
                        push(&o.id, "MSG-REF", format!("unknown message '{m}'"));
                    }
                }
                for name in t
                    .assignments
                    .iter()
                    .map(|a| a.to.as_str())
                    .chain(t.message_var.as_deref())
                {
                    if !visible(name, &scopes) {
                        push(&o.id, "ASSIGN-REF", format!("property '{name}' not visible"));
                    }
                }
            }
            FlowKind::EndEvent {
                result: EndResult::Message { message, var },
            } => {
                if !messages.contains(message) {
                    push(&o.id, "MSG-REF", format!("unknown message '{message}'"));
                }
                if let Some(v) = var {
                    if !visible(v, &scopes) {
                        push(&o.id, "ASSIGN-REF", format!("property '{v}' not visible"));
                    }
                }
            }
            FlowKind::Subprocess(s) => {
                let body_props: BTreeSet<&str> = s.body.properties.iter().map(|x| x.name.as_str()).collect();
                for a in &s.assignments {
                    let ok = match a.time {
                        AssignTime::Start => body_props.contains(a.to.as_str()) || visible(&a.to, &scopes),
                        AssignTime::End => visible(&a.to, &scopes),
                    };
                    if !ok {
                        push(&o.id, "ASSIGN-REF", format!("property '{}' not visible", a.to));
                    }
                }
                check_process(&s.body, &scopes, messages, participants, push);
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpmn::*;

    #[test]
    fn empty_model_is_wellformed() {
        assert!(wellformed(&BpmnModel::new()).is_empty());
    }

    fn small() -> BpmnModel {
        let mut m = BpmnModel::new();
        m.add_pool(Pool {
            id: "P".into(),
            name: "P".into(),
            participant: None,
            process: Process::new("proc", "P"),
        })
        .unwrap();
        let p: Id = "proc".into();
        m.add_flow_object(
            &p,
            FlowObject::new(
                "s",
                "s",
                FlowKind::StartEvent {
                    trigger: StartTrigger::None,
                },
            ),
        )
        .unwrap();
        m.add_flow_object(&p, FlowObject::new("t", "t", FlowKind::Task(Task::new(TaskType::User))))
            .unwrap();
        m.add_flow_object(
            &p,
            FlowObject::new(
                "e",
                "e",
                FlowKind::EndEvent {
                    result: EndResult::None,
                },
            ),
        )
        .unwrap();
        m.add_flow_object(
            &p,
            FlowObject::new(
                "x",
                "x",
                FlowKind::EndEvent {
                    result: EndResult::Terminate,
                },
            ),
        )
        .unwrap();
        m.connect(&"s".into(), &"t".into(), None).unwrap();
        m.connect(&"t".into(), &"e".into(), None).unwrap();
        m
    }

    #[test]
    fn boundary_with_incoming_flow() {
        let mut m = small();
        let b = m
            .attach_boundary_event(&"t".into(), EventTrigger::Message, "Cancel")
            .unwrap();
        m.connect(&b, &"x".into(), None).unwrap();
        assert!(wellformed(&m).iter().all(|d| d.code != "BND-IN"));
        m.connect(&"s".into(), &b, None).unwrap();
        let codes: Vec<_> = wellformed(&m).into_iter().map(|d| d.code).collect();
        assert!(codes.contains(&"BND-IN"), "{codes:?}");
    }

    #[test]
    fn graph_sanity_and_conditions() {
        let mut m = small();
        m.connect(&"t".into(), &"x".into(), Some(Expr::int(1))).unwrap();
        let d = wellformed(&m);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "COND");
        let lonely = FlowObject::new("u", "u", FlowKind::Task(Task::new(TaskType::Script)));
        m.add_flow_object(&"proc".into(), lonely).unwrap();
        let codes: Vec<_> = wellformed(&m).into_iter().map(|d| d.code).collect();
        assert!(codes.contains(&"NO-IN") && codes.contains(&"NO-OUT"));
    }

    #[test]
    fn idempotent() {
        let m = small();
        assert_eq!(wellformed(&m), wellformed(&m));
    }
}
