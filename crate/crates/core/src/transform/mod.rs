//! Activity model → BPMN model, rule by rule, with a trace of every mapping.
//!
//! Rules are applied per activity in catalog order; regions (R13) are laid
//! out before the nodes they contain, so interrupt-source accepts become
//! boundary events instead of receive tasks.

pub mod canon;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ad::{element_type, Activity, AdModel, Edge, Node, NodeKind, PinDirection, Stereotype};
use crate::bpmn::{
    AssignTime, Assignment, BpmnModel, BuildError, EndResult, EventTrigger, FlowKind, FlowObject, GatewayKind,
    MessageDef, MessageFlow, MultiInstance, Participant, ParticipantKind, Pool, Process, Property, ServiceRef,
    StartTrigger, Subprocess, Task, TaskType,
};
use crate::id::Id;
use crate::io::expr::Expr;
use crate::validate::{is_starter, validate, Diagnostic, Severity};

pub use trace::{RuleId, TraceEntry, TransformationTrace};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("model rejected by validation: {0}")]
    Invalid(Diagnostic),
    #[error("internal build error: {0}")]
    Build(#[from] BuildError),
}

/// Where the flows of a source node attach in the target model.
#[derive(Debug, Clone)]
struct Attach {
    entry: Id,
    exit: Id,
}

struct Endpoint {
    pool: Id,
    object: Id,
    signal: String,
    source: Id,
}

struct Cx<'m> {
    ad: &'m AdModel,
    out: BpmnModel,
    entries: BTreeMap<(RuleId, Vec<Id>), Vec<Id>>,
    participants: BTreeMap<Id, Id>,
    messages: BTreeMap<String, Id>,
    senders: Vec<Endpoint>,
    receivers: Vec<Endpoint>,
}

fn tid(prefix: &str, src: &Id, tag: &str) -> Id {
    if prefix.is_empty() {
        Id::new(format!("{src}@{tag}"))
    } else {
        Id::new(format!("{prefix}/{src}@{tag}"))
    }
}

fn start_event(id: Id, name: &str) -> FlowObject {
    FlowObject::new(
        id,
        name,
        FlowKind::StartEvent {
            trigger: StartTrigger::None,
        },
    )
}

fn end_event(id: Id, name: &str, result: EndResult) -> FlowObject {
    FlowObject::new(id, name, FlowKind::EndEvent { result })
}

/// Activities reachable from main processes through subprocess calls.
fn transformed_activities(m: &AdModel) -> Vec<&Activity> {
    let mut keep: BTreeSet<&Id> = BTreeSet::new();
    let mut stack: Vec<&Activity> = m.activities.iter().filter(|a| a.is_main()).collect();
    while let Some(a) = stack.pop() {
        if !keep.insert(&a.id) {
            continue;
        }
        let mut nodes: Vec<&Node> = a.nodes.iter().collect();
        while let Some(n) = nodes.pop() {
            if let Some(b) = &n.body {
                nodes.extend(b.nodes.iter());
            }
            if let Some(c) = n.behavior.as_ref().and_then(|b| m.activity(b)) {
                stack.push(c);
            }
        }
    }
    m.activities.iter().filter(|a| keep.contains(&a.id)).collect()
}

impl<'m> Cx<'m> {
    fn record(&mut self, rule: RuleId, sources: Vec<Id>, targets: Vec<Id>) {
        let t = self.entries.entry((rule, sources)).or_default();
        for x in targets {
            if !t.contains(&x) {
                t.push(x);
            }
        }
    }

    fn message(&mut self, signal: &str, payload_type: Option<&str>) -> Result<Id, BuildError> {
        if let Some(id) = self.messages.get(signal) {
            return Ok(id.clone());
        }
        let id = self.out.add_message(MessageDef {
            id: Id::new(format!("{signal}@R16")),
            name: signal.to_string(),
            payload_type: payload_type
                .map(|t| element_type(t).to_string())
                .unwrap_or_else(|| "Any".into()),
        })?;
        self.messages.insert(signal.to_string(), id.clone());
        Ok(id)
    }

    fn run(&mut self) -> Result<(), BuildError> {
        let ad = self.ad;
        let activities = transformed_activities(ad);
        // R2
        for a in &activities {
            for p in &a.partitions {
                if p.stereotype != Some(Stereotype::Performer) {
                    continue;
                }
                let kind = match ad.class(&p.represents).and_then(|c| c.stereotype) {
                    Some(Stereotype::Position) => ParticipantKind::Role,
                    _ => ParticipantKind::Entity,
                };
                let id = self.out.add_participant(Participant {
                    id: tid("", &p.id, "R2"),
                    name: p.name.clone(),
                    kind,
                })?;
                self.participants.insert(p.id.clone(), id.clone());
                self.record(RuleId::R2, vec![p.id.clone(), p.represents.clone()], vec![id]);
            }
        }
        // R1
        for a in activities.iter().filter(|a| a.is_main()) {
            let pool = tid("", &a.id, "R1");
            let process = Id::new(format!("{pool}.process"));
            self.out.add_pool(Pool {
                id: pool.clone(),
                name: a.name.clone(),
                participant: None,
                process: Process::new(process.clone(), &a.name),
            })?;
            self.record(RuleId::R1, vec![a.id.clone()], vec![pool.clone(), process.clone()]);
            self.map_activity("", a, &process, &pool)?;
        }
        self.message_flows()?;
        self.close_dangling_ends()?;
        Ok(())
    }

    /// Variables (R11) and contents of an activity placed into `process`.
    fn map_activity(&mut self, prefix: &str, a: &'m Activity, process: &Id, pool: &Id) -> Result<(), BuildError> {
        self.properties(prefix, a, &a.id, process)?;
        self.map_container(prefix, a, None, &a.nodes, &a.edges, process, pool)
    }

    fn properties(&mut self, prefix: &str, a: &Activity, scope: &Id, process: &Id) -> Result<(), BuildError> {
        for v in a.variables.iter().filter(|v| &v.scope == scope) {
            let id = self.out.add_property(
                process,
                Property {
                    id: tid(prefix, &v.id, "R11"),
                    name: v.name.clone(),
                    type_name: v.type_name.clone(),
                },
            )?;
            self.record(RuleId::R11, vec![v.id.clone()], vec![id]);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn map_container(
        &mut self,
        prefix: &str,
        a: &'m Activity,
        owner: Option<&Node>,
        nodes: &'m [Node],
        edges: &'m [Edge],
        root: &Id,
        pool: &Id,
    ) -> Result<(), BuildError> {
        let ad = self.ad;
        let top = owner.is_none();

        // R13: one subprocess per region, parents first.
        let mut regions: BTreeMap<Id, (Id, Id)> = BTreeMap::new();
        let parent_of = |r: &Id| ad.enclosing_regions(a, r).first().map(|x| x.id.clone());
        if top {
            let mut order: Vec<_> = a.regions.iter().collect();
            order.sort_by_key(|r| ad.enclosing_regions(a, &r.id).len());
            for r in order {
                let host = match parent_of(&r.id) {
                    Some(p) => regions[&p].1.clone(),
                    None => root.clone(),
                };
                let sub = tid(prefix, &r.id, "R13");
                let body = Id::new(format!("{sub}.body"));
                self.out.add_flow_object(
                    &host,
                    FlowObject::new(
                        sub.clone(),
                        &r.name,
                        FlowKind::Subprocess(Box::new(Subprocess {
                            body: Process::new(body.clone(), &r.name),
                            multi_instance: None,
                            assignments: Vec::new(),
                        })),
                    ),
                )?;
                self.record(RuleId::R13, vec![r.id.clone()], vec![sub.clone()]);
                regions.insert(r.id.clone(), (sub, body));
            }
        }
        let region_of = |n: &Id| -> Option<Id> {
            if top {
                ad.containing_region(n).ok().flatten().cloned()
            } else {
                None
            }
        };
        let process_of = |r: &Option<Id>| match r {
            Some(r) => regions[r].1.clone(),
            None => root.clone(),
        };

        let mut attach: BTreeMap<&Id, Attach> = BTreeMap::new();
        for n in nodes {
            let region = region_of(&n.id);
            let n_in = edges.iter().filter(|e| e.target.node == n.id).count();
            let interrupt = edges.iter().find(|e| e.source.node == n.id && e.interrupting);
            if let Some(e) = interrupt {
                // R13: interrupt source → boundary event on the region's subprocess.
                let r = e.region.clone().expect("validated");
                let (sub, _) = regions[&r].clone();
                let host = process_of(&parent_of(&r));
                let trigger = if n.kind == NodeKind::AcceptTimerAction {
                    EventTrigger::Timer
                } else {
                    EventTrigger::Message
                };
                let (message, message_var) = match trigger {
                    EventTrigger::Message => {
                        let pin = n.first_pin(PinDirection::Out);
                        let msg = self.message(n.signal().unwrap_or(&n.name), pin.map(|p| p.type_name.as_str()))?;
                        (Some(msg), pin.map(|p| p.name.clone()))
                    }
                    EventTrigger::Timer => (None, None),
                };
                let id = self.out.add_flow_object(
                    &host,
                    FlowObject::new(
                        tid(prefix, &n.id, "R13"),
                        &n.name,
                        FlowKind::IntermediateEvent {
                            trigger,
                            attached_to: Some(sub),
                            message,
                            message_var,
                        },
                    ),
                )?;
                if trigger == EventTrigger::Message {
                    self.receivers.push(Endpoint {
                        pool: pool.clone(),
                        object: id.clone(),
                        signal: n.signal().unwrap_or(&n.name).to_string(),
                        source: n
                            .first_pin(PinDirection::Out)
                            .map(|p| p.id.clone())
                            .unwrap_or(n.id.clone()),
                    });
                }
                self.record(RuleId::R13, vec![n.id.clone()], vec![id.clone()]);
                attach.insert(
                    &n.id,
                    Attach {
                        entry: id.clone(),
                        exit: id,
                    },
                );
                continue;
            }

            let process = process_of(&region);
            let (rule, obj) = self.map_node(prefix, a, n, &process, pool)?;
            let mut entry = obj.clone();
            let mut extra = Vec::new();
            if n_in > 1 && !n.kind.is_control() {
                let g = tid(prefix, &n.id, "join");
                self.out.add_flow_object(
                    &process,
                    FlowObject::new(
                        g.clone(),
                        &n.name,
                        FlowKind::Gateway {
                            gate: GatewayKind::Parallel,
                        },
                    ),
                )?;
                self.out.connect(&g, &obj, None)?;
                extra.push(g.clone());
                entry = g;
            }
            let starts_itself =
                n.kind == NodeKind::InitialNode || n.kind.is_accept() || n.kind == NodeKind::ParameterNode;
            if n_in == 0 && !starts_itself {
                let s = self
                    .out
                    .add_flow_object(&process, start_event(tid(prefix, &n.id, "start"), ""))?;
                self.out.connect(&s, &entry, None)?;
                extra.push(s);
            }
            let mut targets = vec![obj.clone()];
            targets.extend(extra);
            self.record(rule, vec![n.id.clone()], targets);
            attach.insert(&n.id, Attach { entry, exit: obj });
        }

        for e in edges {
            let s = &attach[&e.source.node];
            let t = &attach[&e.target.node];
            if e.interrupting {
                let f = self
                    .out
                    .connect_with_id(tid(prefix, &e.id, "R13"), &s.exit, &t.entry, None)?;
                self.record(RuleId::R13, vec![e.id.clone()], vec![f]);
                continue;
            }
            let (rs, rt) = (region_of(&e.source.node), region_of(&e.target.node));
            let id = tid(prefix, &e.id, "R10");
            let targets = if rs == rt {
                vec![self.out.connect_with_id(id, &s.exit, &t.entry, e.guard.clone())?]
            } else if rt.as_ref().and_then(&parent_of) == rs {
                let (sub, body) = regions[rt.as_ref().unwrap()].clone();
                let f1 = self.out.connect_with_id(id, &s.exit, &sub, e.guard.clone())?;
                let st = self
                    .out
                    .add_flow_object(&body, start_event(tid(prefix, &e.id, "R10.start"), ""))?;
                let f2 = self.out.connect(&st, &t.entry, None)?;
                vec![f1, st, f2]
            } else {
                let (sub, body) = regions[rs.as_ref().unwrap()].clone();
                let end = self
                    .out
                    .add_flow_object(&body, end_event(tid(prefix, &e.id, "R10.end"), "", EndResult::None))?;
                let f1 = self.out.connect_with_id(id, &s.exit, &end, e.guard.clone())?;
                let f2 = self.out.connect(&sub, &t.entry, None)?;
                vec![f1, end, f2]
            };
            self.record(RuleId::R10, vec![e.id.clone()], targets);
        }
        Ok(())
    }

    fn add(&mut self, process: &Id, id: Id, name: &str, kind: FlowKind) -> Result<Id, BuildError> {
        self.out.add_flow_object(process, FlowObject::new(id, name, kind))
    }

    /// Maps one node (R3–R9, R12, R14, R15). Returns the rule and the object id.
    fn map_node(
        &mut self,
        prefix: &str,
        a: &'m Activity,
        n: &'m Node,
        process: &Id,
        pool: &Id,
    ) -> Result<(RuleId, Id), BuildError> {
        let ad = self.ad;
        use NodeKind as K;
        let rule = match n.kind {
            K::CallBehaviorAction if n.stereotype == Some(Stereotype::CallSubProcess) => RuleId::R15,
            K::CallBehaviorAction => RuleId::R3,
            K::CallOperationAction => RuleId::R4,
            K::AcceptEventAction => RuleId::R5,
            K::AcceptTimerAction => RuleId::R6,
            K::SendSignalAction => RuleId::R7,
            K::InitialNode | K::ActivityFinalNode | K::FlowFinalNode => RuleId::R8,
            K::DecisionNode | K::MergeNode | K::ForkNode | K::JoinNode => RuleId::R9,
            K::ReadVariableAction | K::WriteVariableAction => RuleId::R12,
            K::LoopNode => RuleId::R14,
            K::ParameterNode => RuleId::R15,
        };
        let id = tid(prefix, &n.id, &rule.to_string());
        let name = n.name.as_str();
        let performer = n.performer.as_ref().and_then(|p| self.participants.get(p)).cloned();
        let obj = match n.kind {
            K::CallBehaviorAction if rule == RuleId::R3 => {
                let tt = match n.stereotype {
                    Some(Stereotype::CallManualTask) => TaskType::Manual,
                    Some(Stereotype::CallUserTask) => TaskType::User,
                    _ => TaskType::Script,
                };
                let mut t = Task::new(tt);
                t.performer = performer;
                self.add(process, id, name, FlowKind::Task(t))?
            }
            K::CallBehaviorAction => {
                let callee = n.behavior.as_ref().and_then(|b| ad.activity(b)).expect("validated");
                let body = Id::new(format!("{id}.body"));
                let assignments = n
                    .pins
                    .iter()
                    .map(|p| Assignment {
                        to: p.name.clone(),
                        from: Expr::var(&p.name),
                        time: match p.direction {
                            PinDirection::In => AssignTime::Start,
                            PinDirection::Out => AssignTime::End,
                        },
                    })
                    .collect();
                let sub = self.add(
                    process,
                    id,
                    name,
                    FlowKind::Subprocess(Box::new(Subprocess {
                        body: Process::new(body.clone(), &callee.name),
                        multi_instance: None,
                        assignments,
                    })),
                )?;
                let inner = if prefix.is_empty() {
                    n.id.to_string()
                } else {
                    format!("{prefix}/{}", n.id)
                };
                self.map_activity(&inner, callee, &body, pool)?;
                sub
            }
            K::CallOperationAction => {
                let op = n.operation.as_deref().unwrap_or_default();
                let (interface, operation) = op.split_once('.').unwrap_or(("", op));
                let mut t = Task::new(TaskType::Service);
                t.service = Some(ServiceRef {
                    interface: interface.to_string(),
                    operation: operation.to_string(),
                });
                self.add(process, id, name, FlowKind::Task(t))?
            }
            K::AcceptEventAction => {
                let pin = n.first_pin(PinDirection::Out);
                let signal = n.signal().unwrap_or(name).to_string();
                let mut t = Task::new(TaskType::Receive);
                t.message = Some(self.message(&signal, pin.map(|p| p.type_name.as_str()))?);
                t.message_var = pin.map(|p| p.name.clone());
                t.instantiate = a.is_main() && is_starter(a, n);
                let obj = self.add(process, id, name, FlowKind::Task(t))?;
                self.receivers.push(Endpoint {
                    pool: pool.clone(),
                    object: obj.clone(),
                    signal,
                    source: pin.map(|p| p.id.clone()).unwrap_or(n.id.clone()),
                });
                obj
            }
            K::AcceptTimerAction => self.add(
                process,
                id,
                name,
                FlowKind::IntermediateEvent {
                    trigger: EventTrigger::Timer,
                    attached_to: None,
                    message: None,
                    message_var: None,
                },
            )?,
            K::SendSignalAction => {
                let pin = n.first_pin(PinDirection::In);
                let signal = n.signal().unwrap_or(name).to_string();
                let message = self.message(&signal, pin.map(|p| p.type_name.as_str()))?;
                let var = pin.map(|p| p.name.clone());
                let kind = if n.stereotype == Some(Stereotype::EndSSAction) {
                    FlowKind::EndEvent {
                        result: EndResult::Message { message, var },
                    }
                } else {
                    let mut t = Task::new(TaskType::Send);
                    t.message = Some(message);
                    t.message_var = var;
                    FlowKind::Task(t)
                };
                let obj = self.add(process, id, name, kind)?;
                self.senders.push(Endpoint {
                    pool: pool.clone(),
                    object: obj.clone(),
                    signal,
                    source: pin.map(|p| p.id.clone()).unwrap_or(n.id.clone()),
                });
                obj
            }
            K::ReadVariableAction | K::WriteVariableAction => {
                let asg = n.assignment.as_ref().expect("validated");
                let mut t = Task::new(TaskType::None);
                t.assignments.push(Assignment {
                    to: asg.target.clone(),
                    from: asg.expr.clone(),
                    time: AssignTime::Start,
                });
                self.add(process, id, name, FlowKind::Task(t))?
            }
            K::InitialNode => self.add(
                process,
                id,
                name,
                FlowKind::StartEvent {
                    trigger: StartTrigger::None,
                },
            )?,
            K::ActivityFinalNode => self.add(
                process,
                id,
                name,
                FlowKind::EndEvent {
                    result: EndResult::Terminate,
                },
            )?,
            K::FlowFinalNode => self.add(
                process,
                id,
                name,
                FlowKind::EndEvent {
                    result: EndResult::None,
                },
            )?,
            K::DecisionNode | K::MergeNode => self.add(
                process,
                id,
                name,
                FlowKind::Gateway {
                    gate: GatewayKind::ExclusiveData,
                },
            )?,
            K::ForkNode | K::JoinNode => self.add(
                process,
                id,
                name,
                FlowKind::Gateway {
                    gate: GatewayKind::Parallel,
                },
            )?,
            K::LoopNode => {
                let pin = n.collection.as_ref().and_then(|c| n.pin(c)).expect("validated");
                let body = Id::new(format!("{id}.body"));
                let sub = self.add(
                    process,
                    id.clone(),
                    name,
                    FlowKind::Subprocess(Box::new(Subprocess {
                        body: Process::new(body.clone(), name),
                        multi_instance: Some(MultiInstance {
                            collection: pin.value.clone().expect("validated"),
                            iterator: n.iterator.clone().expect("validated"),
                            sequential: true,
                        }),
                        assignments: Vec::new(),
                    })),
                )?;
                self.properties(prefix, a, &n.id, &body)?;
                let b = n.body.as_ref().expect("loop body");
                if b.nodes.is_empty() {
                    let s = self
                        .out
                        .add_flow_object(&body, start_event(Id::new(format!("{id}.start")), ""))?;
                    let e = self
                        .out
                        .add_flow_object(&body, end_event(Id::new(format!("{id}.end")), "", EndResult::None))?;
                    self.out.connect(&s, &e, None)?;
                    self.record(rule, vec![n.id.clone()], vec![sub.clone(), s, e]);
                } else {
                    self.map_container(prefix, a, Some(n), &b.nodes, &b.edges, &body, pool)?;
                }
                sub
            }
            K::ParameterNode => {
                if n.is_input_parameter() {
                    self.add(
                        process,
                        id,
                        name,
                        FlowKind::StartEvent {
                            trigger: StartTrigger::None,
                        },
                    )?
                } else {
                    self.add(
                        process,
                        id,
                        name,
                        FlowKind::EndEvent {
                            result: EndResult::None,
                        },
                    )?
                }
            }
        };
        Ok((rule, obj))
    }

    /// R16: one message flow per sender/receiver pair in different pools.
    fn message_flows(&mut self) -> Result<(), BuildError> {
        let mut pairs = Vec::new();
        for s in &self.senders {
            for r in &self.receivers {
                if s.signal == r.signal && s.pool != r.pool {
                    pairs.push((
                        Id::new(format!("{}->{}@R16", s.object, r.object)),
                        s.object.clone(),
                        r.object.clone(),
                        s.signal.clone(),
                        vec![s.source.clone(), r.source.clone()],
                    ));
                }
            }
        }
        for (id, source, target, signal, sources) in pairs {
            let message = self.messages[&signal].clone();
            let mf = self.out.add_message_flow(MessageFlow {
                id,
                source,
                target,
                message: message.clone(),
            })?;
            self.record(RuleId::R16, sources, vec![mf, message]);
        }
        Ok(())
    }

    /// Adds an end event behind every non-end object that has no outgoing flow.
    fn close_dangling_ends(&mut self) -> Result<(), BuildError> {
        let mut todo: Vec<(Id, Id)> = Vec::new();
        for pool in &self.out.pools {
            for p in pool.process.walk() {
                for o in &p.flow_objects {
                    if !o.is_end() && p.outgoing(&o.id).next().is_none() {
                        todo.push((p.id.clone(), o.id.clone()));
                    }
                }
            }
        }
        for (process, obj) in todo {
            let end = self
                .out
                .add_flow_object(&process, end_event(Id::new(format!("{obj}.end")), "", EndResult::None))?;
            self.out.connect(&obj, &end, None)?;
            for targets in self.entries.values_mut() {
                if targets.first() == Some(&obj) {
                    targets.push(end.clone());
                    break;
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> (BpmnModel, TransformationTrace) {
        let map = canon::canonical_ids(&self.out);
        canon::rename(&mut self.out, &map);
        let rn = |id: &Id| map.get(id).cloned().unwrap_or_else(|| id.clone());
        let mut entries: Vec<TraceEntry> = self
            .entries
            .into_iter()
            .map(|((rule, sources), targets)| TraceEntry {
                rule,
                sources,
                targets: targets.iter().map(rn).collect(),
            })
            .collect();
        entries.sort();
        let mut id_map = BTreeMap::new();
        for e in &entries {
            if let ([s], Some(t)) = (e.sources.as_slice(), e.targets.first()) {
                id_map.entry(s.clone()).or_insert_with(|| t.clone());
            }
            if e.rule == RuleId::R2 {
                id_map
                    .entry(e.sources[0].clone())
                    .or_insert_with(|| e.targets[0].clone());
            }
        }
        self.out.finalize();
        (self.out, TransformationTrace { entries, id_map })
    }
}

/// Transforms a model accepted by the validator.
pub fn transform(m: &AdModel) -> Result<(BpmnModel, TransformationTrace), TransformError> {
    if let Some(d) = validate(m).into_iter().find(|d| d.severity == Severity::Error) {
        return Err(TransformError::Invalid(d));
    }
    let mut cx = Cx {
        ad: m,
        out: BpmnModel::new(),
        entries: BTreeMap::new(),
        participants: BTreeMap::new(),
        messages: BTreeMap::new(),
        senders: Vec::new(),
        receivers: Vec::new(),
    };
    cx.run()?;
    Ok(cx.finish())
}
