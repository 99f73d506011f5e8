//! BPMN-XML v0: a direct XML image of the BPMN model.
//!
//! ```xml
//! <?xml version="1.0" encoding="UTF-8"?>
//! <bpmn-model>
//!   <participant id="Participant_001" name="Manager" kind="role"/>
//!   <message id="Message_001" name="Order" payload="Order"/>
//!   <pool name="Supplier Process" id="Pool_001">
//!     <process name="Supplier Process" id="Process_001">
//!       <property id="Property_001" name="order" type="Order"/>
//!       <task type="Receive" instantiate="true" id="Task_001" name="Receive Order" message="Message_001" var="order"/>
//!       <sequence-flow id="Flow_001" source="Task_001" target="EndEvent_001"/>
//!     </process>
//!   </pool>
//!   <message-flow id="MessageFlow_001" source="Task_002" target="Task_001" message="Message_001"/>
//! </bpmn-model>
//! ```
//!
//! Output is byte-stable: pools by name, everything else by id, fixed
//! attribute order, two-space indentation, LF line ends.

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::bpmn::{
    wellformed, AssignTime, Assignment, BpmnDiagnostic, BpmnModel, EndResult, EventTrigger, FlowKind, FlowObject,
    GatewayKind, MessageDef, MessageFlow, MultiInstance, Participant, ParticipantKind, Pool, Process, Property,
    SequenceFlow, ServiceRef, StartTrigger, Subprocess, Task, TaskType,
};
use crate::id::Id;
use crate::io::expr::{parse_expr, Expr};

#[derive(Debug, Error)]
pub enum BpmnXmlError {
    #[error("model is not well formed: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    NotWellFormed(Vec<BpmnDiagnostic>),
    #[error("XML error at byte {position}: {message}")]
    Xml { position: u64, message: String },
    #[error("<{element}>: {message}")]
    Content { element: String, message: String },
}

struct Out {
    buf: String,
    depth: usize,
}

impl Out {
    fn open(&mut self, name: &str, attrs: &[(&str, Option<&str>)], empty: bool) {
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
        self.buf.push('<');
        self.buf.push_str(name);
        for (k, v) in attrs {
            if let Some(v) = v {
                self.buf.push_str(&format!(" {k}=\"{}\"", escape(v)));
            }
        }
        self.buf.push_str(if empty { "/>\n" } else { ">\n" });
        if !empty {
            self.depth += 1;
        }
    }

    fn close(&mut self, name: &str) {
        self.depth -= 1;
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
        self.buf.push_str(&format!("</{name}>\n"));
    }
}

fn time_name(t: AssignTime) -> &'static str {
    match t {
        AssignTime::Start => "start",
        AssignTime::End => "end",
    }
}

fn write_assignments(o: &mut Out, v: &[Assignment]) {
    for a in v {
        let from = a.from.to_string();
        o.open(
            "assignment",
            &[
                ("to", Some(&a.to)),
                ("from", Some(&from)),
                ("time", Some(time_name(a.time))),
            ],
            true,
        );
    }
}

fn write_process(o: &mut Out, p: &Process) {
    o.open(
        "process",
        &[("name", Some(&p.name)), ("id", Some(p.id.as_str()))],
        false,
    );
    let mut props: Vec<&Property> = p.properties.iter().collect();
    props.sort_by(|a, b| a.id.cmp(&b.id));
    for x in props {
        o.open(
            "property",
            &[
                ("id", Some(x.id.as_str())),
                ("name", Some(&x.name)),
                ("type", Some(&x.type_name)),
            ],
            true,
        );
    }
    let mut objs: Vec<&FlowObject> = p.flow_objects.iter().collect();
    objs.sort_by(|a, b| a.id.cmp(&b.id));
    for x in objs {
        write_object(o, x);
    }
    let mut flows: Vec<&SequenceFlow> = p.sequence_flows.iter().collect();
    flows.sort_by(|a, b| a.id.cmp(&b.id));
    for f in flows {
        let cond = f.condition.as_ref().map(|c| c.to_string());
        o.open(
            "sequence-flow",
            &[
                ("id", Some(f.id.as_str())),
                ("source", Some(f.source.as_str())),
                ("target", Some(f.target.as_str())),
                ("condition", cond.as_deref()),
            ],
            true,
        );
    }
    o.close("process");
}

fn write_object(o: &mut Out, x: &FlowObject) {
    let id = Some(x.id.as_str());
    let name = Some(x.name.as_str());
    match &x.kind {
        FlowKind::StartEvent { trigger } => {
            let t = match trigger {
                StartTrigger::None => "none",
                StartTrigger::Message => "message",
                StartTrigger::Timer => "timer",
            };
            o.open("start-event", &[("id", id), ("name", name), ("trigger", Some(t))], true);
        }
        FlowKind::EndEvent { result } => {
            let (r, msg, var) = match result {
                EndResult::None => ("none", None, None),
                EndResult::Terminate => ("terminate", None, None),
                EndResult::Message { message, var } => ("message", Some(message.as_str()), var.as_deref()),
            };
            o.open(
                "end-event",
                &[
                    ("id", id),
                    ("name", name),
                    ("result", Some(r)),
                    ("message", msg),
                    ("var", var),
                ],
                true,
            );
        }
        FlowKind::IntermediateEvent {
            trigger,
            attached_to,
            message,
            message_var,
        } => {
            let t = match trigger {
                EventTrigger::Message => "message",
                EventTrigger::Timer => "timer",
            };
            o.open(
                "intermediate-event",
                &[
                    ("id", id),
                    ("name", name),
                    ("trigger", Some(t)),
                    ("attached-to", attached_to.as_ref().map(Id::as_str)),
                    ("message", message.as_ref().map(Id::as_str)),
                    ("var", message_var.as_deref()),
                ],
                true,
            );
        }
        FlowKind::Task(t) => {
            let attrs = [
                ("type", Some(t.task_type.name())),
                (
                    "instantiate",
                    (t.task_type == TaskType::Receive).then_some(if t.instantiate { "true" } else { "false" }),
                ),
                ("id", id),
                ("name", name),
                ("performer", t.performer.as_ref().map(Id::as_str)),
                ("interface", t.service.as_ref().map(|s| s.interface.as_str())),
                ("operation", t.service.as_ref().map(|s| s.operation.as_str())),
                ("message", t.message.as_ref().map(Id::as_str)),
                ("var", t.message_var.as_deref()),
            ];
            if t.assignments.is_empty() {
                o.open("task", &attrs, true);
            } else {
                o.open("task", &attrs, false);
                write_assignments(o, &t.assignments);
                o.close("task");
            }
        }
        FlowKind::Subprocess(s) => {
            o.open("subprocess", &[("id", id), ("name", name)], false);
            if let Some(mi) = &s.multi_instance {
                let coll = mi.collection.to_string();
                o.open(
                    "multi-instance",
                    &[
                        ("collection", Some(&coll)),
                        ("iterator", Some(&mi.iterator)),
                        ("ordering", Some(if mi.sequential { "sequential" } else { "parallel" })),
                    ],
                    true,
                );
            }
            write_assignments(o, &s.assignments);
            write_process(o, &s.body);
            o.close("subprocess");
        }
        FlowKind::Gateway { gate } => {
            let g = gate.to_string();
            o.open("gateway", &[("id", id), ("name", name), ("gate", Some(&g))], true);
        }
    }
}

/// Serializes a well-formed model.
pub fn write_bpmn_xml(m: &BpmnModel) -> Result<String, BpmnXmlError> {
    let diags = wellformed(m);
    if !diags.is_empty() {
        return Err(BpmnXmlError::NotWellFormed(diags));
    }
    let mut o = Out {
        buf: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"),
        depth: 0,
    };
    let empty = m.participants.is_empty() && m.messages.is_empty() && m.pools.is_empty() && m.message_flows.is_empty();
    if empty {
        o.open("bpmn-model", &[], true);
        return Ok(o.buf);
    }
    o.open("bpmn-model", &[], false);
    let mut parts: Vec<&Participant> = m.participants.iter().collect();
    parts.sort_by(|a, b| a.id.cmp(&b.id));
    for p in parts {
        let kind = match p.kind {
            ParticipantKind::Entity => "entity",
            ParticipantKind::Role => "role",
        };
        o.open(
            "participant",
            &[
                ("id", Some(p.id.as_str())),
                ("name", Some(&p.name)),
                ("kind", Some(kind)),
            ],
            true,
        );
    }
    let mut msgs: Vec<&MessageDef> = m.messages.iter().collect();
    msgs.sort_by(|a, b| a.id.cmp(&b.id));
    for x in msgs {
        o.open(
            "message",
            &[
                ("id", Some(x.id.as_str())),
                ("name", Some(&x.name)),
                ("payload", Some(&x.payload_type)),
            ],
            true,
        );
    }
    let mut pools: Vec<&Pool> = m.pools.iter().collect();
    pools.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| a.id.cmp(&b.id)));
    for p in pools {
        o.open(
            "pool",
            &[
                ("name", Some(&p.name)),
                ("id", Some(p.id.as_str())),
                ("participant", p.participant.as_ref().map(Id::as_str)),
            ],
            false,
        );
        write_process(&mut o, &p.process);
        o.close("pool");
    }
    let mut mfs: Vec<&MessageFlow> = m.message_flows.iter().collect();
    mfs.sort_by(|a, b| a.id.cmp(&b.id));
    for f in mfs {
        o.open(
            "message-flow",
            &[
                ("id", Some(f.id.as_str())),
                ("source", Some(f.source.as_str())),
                ("target", Some(f.target.as_str())),
                ("message", Some(f.message.as_str())),
            ],
            true,
        );
    }
    o.close("bpmn-model");
    Ok(o.buf)
}

/// Minimal element tree used by the reader.
struct Elem {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Elem>,
}

impl Elem {
    fn err(&self, message: impl Into<String>) -> BpmnXmlError {
        BpmnXmlError::Content {
            element: self.name.clone(),
            message: message.into(),
        }
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn req(&self, key: &str) -> Result<&str, BpmnXmlError> {
        self.opt(key)
            .ok_or_else(|| self.err(format!("missing attribute '{key}'")))
    }

    fn id(&self, key: &str) -> Result<Id, BpmnXmlError> {
        self.req(key).map(Id::from)
    }

    fn expr(&self, key: &str) -> Result<Expr, BpmnXmlError> {
        parse_expr(self.req(key)?).map_err(|e| self.err(format!("attribute '{key}': {e}")))
    }

    fn only(&self, allowed: &[&str]) -> Result<(), BpmnXmlError> {
        match self.attrs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, _)) => Err(self.err(format!("unknown attribute '{k}'"))),
            None => Ok(()),
        }
    }
}

fn start_elem(reader: &Reader<&[u8]>, e: &BytesStart<'_>) -> Result<Elem, BpmnXmlError> {
    let xml_err = |message: String| BpmnXmlError::Xml {
        position: reader.buffer_position(),
        message,
    };
    let name = String::from_utf8(e.name().as_ref().to_vec()).map_err(|e| xml_err(e.to_string()))?;
    let mut attrs = Vec::new();
    for a in e.attributes() {
        let a = a.map_err(|e| xml_err(e.to_string()))?;
        let key = String::from_utf8(a.key.as_ref().to_vec()).map_err(|e| xml_err(e.to_string()))?;
        let value = a.unescape_value().map_err(|e| xml_err(e.to_string()))?.into_owned();
        attrs.push((key, value));
    }
    Ok(Elem {
        name,
        attrs,
        children: Vec::new(),
    })
}

fn parse_tree(text: &str) -> Result<Elem, BpmnXmlError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<Elem> = Vec::new();
    let mut root = None;
    loop {
        let ev = reader.read_event().map_err(|e| BpmnXmlError::Xml {
            position: reader.buffer_position(),
            message: e.to_string(),
        })?;
        let xml_err = |message: &str| BpmnXmlError::Xml {
            position: reader.buffer_position(),
            message: message.to_string(),
        };
        match ev {
            Event::Start(e) => stack.push(start_elem(&reader, &e)?),
            Event::Empty(e) => {
                let el = start_elem(&reader, &e)?;
                match stack.last_mut() {
                    Some(p) => p.children.push(el),
                    None if root.is_none() => root = Some(el),
                    None => return Err(xml_err("more than one root element")),
                }
            }
            Event::End(_) => {
                let el = stack.pop().ok_or_else(|| xml_err("unbalanced end tag"))?;
                match stack.last_mut() {
                    Some(p) => p.children.push(el),
                    None if root.is_none() => root = Some(el),
                    None => return Err(xml_err("more than one root element")),
                }
            }
            Event::Text(t) => {
                if !t.iter().all(u8::is_ascii_whitespace) {
                    return Err(xml_err("unexpected text content"));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(BpmnXmlError::Xml {
            position: text.len() as u64,
            message: "unclosed element".into(),
        });
    }
    root.ok_or_else(|| BpmnXmlError::Xml {
        position: 0,
        message: "no root element".into(),
    })
}

fn read_assignment(e: &Elem) -> Result<Assignment, BpmnXmlError> {
    e.only(&["to", "from", "time"])?;
    Ok(Assignment {
        to: e.req("to")?.to_string(),
        from: e.expr("from")?,
        time: match e.req("time")? {
            "start" => AssignTime::Start,
            "end" => AssignTime::End,
            other => return Err(e.err(format!("bad time '{other}'"))),
        },
    })
}

fn read_process(e: &Elem) -> Result<Process, BpmnXmlError> {
    if e.name != "process" {
        return Err(e.err("expected <process>"));
    }
    e.only(&["name", "id"])?;
    let mut p = Process::new(e.id("id")?, e.req("name")?);
    for c in &e.children {
        match c.name.as_str() {
            "property" => {
                c.only(&["id", "name", "type"])?;
                p.properties.push(Property {
                    id: c.id("id")?,
                    name: c.req("name")?.to_string(),
                    type_name: c.req("type")?.to_string(),
                });
            }
            "sequence-flow" => {
                c.only(&["id", "source", "target", "condition"])?;
                p.sequence_flows.push(SequenceFlow {
                    id: c.id("id")?,
                    source: c.id("source")?,
                    target: c.id("target")?,
                    condition: match c.opt("condition") {
                        Some(_) => Some(c.expr("condition")?),
                        None => None,
                    },
                });
            }
            _ => p.flow_objects.push(read_object(c)?),
        }
    }
    Ok(p)
}

fn read_object(e: &Elem) -> Result<FlowObject, BpmnXmlError> {
    let id = e.id("id")?;
    let name = e.req("name")?;
    let kind = match e.name.as_str() {
        "start-event" => {
            e.only(&["id", "name", "trigger"])?;
            FlowKind::StartEvent {
                trigger: match e.req("trigger")? {
                    "none" => StartTrigger::None,
                    "message" => StartTrigger::Message,
                    "timer" => StartTrigger::Timer,
                    other => return Err(e.err(format!("bad trigger '{other}'"))),
                },
            }
        }
        "end-event" => {
            e.only(&["id", "name", "result", "message", "var"])?;
            FlowKind::EndEvent {
                result: match e.req("result")? {
                    "none" => EndResult::None,
                    "terminate" => EndResult::Terminate,
                    "message" => EndResult::Message {
                        message: e.id("message")?,
                        var: e.opt("var").map(str::to_string),
                    },
                    other => return Err(e.err(format!("bad result '{other}'"))),
                },
            }
        }
        "intermediate-event" => {
            e.only(&["id", "name", "trigger", "attached-to", "message", "var"])?;
            FlowKind::IntermediateEvent {
                trigger: match e.req("trigger")? {
                    "message" => EventTrigger::Message,
                    "timer" => EventTrigger::Timer,
                    other => return Err(e.err(format!("bad trigger '{other}'"))),
                },
                attached_to: e.opt("attached-to").map(Id::from),
                message: e.opt("message").map(Id::from),
                message_var: e.opt("var").map(str::to_string),
            }
        }
        "task" => {
            e.only(&[
                "type",
                "instantiate",
                "id",
                "name",
                "performer",
                "interface",
                "operation",
                "message",
                "var",
            ])?;
            let ty = e.req("type")?;
            let task_type = TaskType::ALL
                .into_iter()
                .find(|t| t.name() == ty)
                .ok_or_else(|| e.err(format!("bad task type '{ty}'")))?;
            let mut t = Task::new(task_type);
            t.instantiate = match e.opt("instantiate") {
                None | Some("false") => false,
                Some("true") => true,
                Some(other) => return Err(e.err(format!("bad instantiate '{other}'"))),
            };
            t.performer = e.opt("performer").map(Id::from);
            t.service = match (e.opt("interface"), e.opt("operation")) {
                (Some(i), Some(o)) => Some(ServiceRef {
                    interface: i.to_string(),
                    operation: o.to_string(),
                }),
                (None, None) => None,
                _ => return Err(e.err("interface and operation come together")),
            };
            t.message = e.opt("message").map(Id::from);
            t.message_var = e.opt("var").map(str::to_string);
            for c in &e.children {
                if c.name != "assignment" {
                    return Err(c.err("unexpected element inside <task>"));
                }
                t.assignments.push(read_assignment(c)?);
            }
            FlowKind::Task(t)
        }
        "subprocess" => {
            e.only(&["id", "name"])?;
            let mut multi_instance = None;
            let mut assignments = Vec::new();
            let mut body = None;
            for c in &e.children {
                match c.name.as_str() {
                    "multi-instance" => {
                        c.only(&["collection", "iterator", "ordering"])?;
                        multi_instance = Some(MultiInstance {
                            collection: c.expr("collection")?,
                            iterator: c.req("iterator")?.to_string(),
                            sequential: c.req("ordering")? == "sequential",
                        });
                    }
                    "assignment" => assignments.push(read_assignment(c)?),
                    "process" if body.is_none() => body = Some(read_process(c)?),
                    _ => return Err(c.err("unexpected element inside <subprocess>")),
                }
            }
            FlowKind::Subprocess(Box::new(Subprocess {
                body: body.ok_or_else(|| e.err("subprocess without <process>"))?,
                multi_instance,
                assignments,
            }))
        }
        "gateway" => {
            e.only(&["id", "name", "gate"])?;
            FlowKind::Gateway {
                gate: match e.req("gate")? {
                    "exclusive-data" => GatewayKind::ExclusiveData,
                    "parallel" => GatewayKind::Parallel,
                    other => return Err(e.err(format!("bad gate '{other}'"))),
                },
            }
        }
        other => return Err(e.err(format!("unknown flow object <{other}>"))),
    };
    Ok(FlowObject::new(id, name, kind))
}

/// Reads a document produced by [`write_bpmn_xml`] (or hand-written in the
/// same dialect).
pub fn read_bpmn_xml(text: &str) -> Result<BpmnModel, BpmnXmlError> {
    let root = parse_tree(text)?;
    if root.name != "bpmn-model" {
        return Err(root.err("root element must be <bpmn-model>"));
    }
    root.only(&[])?;
    let mut m = BpmnModel::new();
    for c in &root.children {
        match c.name.as_str() {
            "participant" => {
                c.only(&["id", "name", "kind"])?;
                m.participants.push(Participant {
                    id: c.id("id")?,
                    name: c.req("name")?.to_string(),
                    kind: match c.req("kind")? {
                        "entity" => ParticipantKind::Entity,
                        "role" => ParticipantKind::Role,
                        other => return Err(c.err(format!("bad kind '{other}'"))),
                    },
                });
            }
            "message" => {
                c.only(&["id", "name", "payload"])?;
                m.messages.push(MessageDef {
                    id: c.id("id")?,
                    name: c.req("name")?.to_string(),
                    payload_type: c.req("payload")?.to_string(),
                });
            }
            "pool" => {
                c.only(&["name", "id", "participant"])?;
                let [proc_el] = c.children.as_slice() else {
                    return Err(c.err("a pool holds exactly one <process>"));
                };
                m.pools.push(Pool {
                    id: c.id("id")?,
                    name: c.req("name")?.to_string(),
                    participant: c.opt("participant").map(Id::from),
                    process: read_process(proc_el)?,
                });
            }
            "message-flow" => {
                c.only(&["id", "source", "target", "message"])?;
                m.message_flows.push(MessageFlow {
                    id: c.id("id")?,
                    source: c.id("source")?,
                    target: c.id("target")?,
                    message: c.id("message")?,
                });
            }
            other => return Err(c.err(format!("unknown element <{other}>"))),
        }
    }
    m.finalize();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model() {
        let text = write_bpmn_xml(&BpmnModel::new()).unwrap();
        assert_eq!(text, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<bpmn-model/>\n");
        let back = read_bpmn_xml(&text).unwrap();
        assert!(back.pools.is_empty());
    }

    #[test]
    fn escapes_and_roundtrips() {
        let mut m = BpmnModel::new();
        let mut p = Process::new("proc", "A & \"B\"");
        p.flow_objects.push(FlowObject::new(
            "s",
            "<start>",
            FlowKind::StartEvent {
                trigger: StartTrigger::None,
            },
        ));
        p.flow_objects.push(FlowObject::new(
            "e",
            "",
            FlowKind::EndEvent {
                result: EndResult::None,
            },
        ));
        p.sequence_flows.push(SequenceFlow {
            id: "f".into(),
            source: "s".into(),
            target: "e".into(),
            condition: None,
        });
        m.add_pool(Pool {
            id: "pool".into(),
            name: "A & \"B\"".into(),
            participant: None,
            process: p,
        })
        .unwrap();
        let text = write_bpmn_xml(&m).unwrap();
        assert!(text.contains("name=\"A &amp; &quot;B&quot;\""), "{text}");
        let mut back = read_bpmn_xml(&text).unwrap();
        assert_eq!(write_bpmn_xml(&back).unwrap(), text);
        back.pools[0].process.flow_objects.sort_by(|a, b| a.id.cmp(&b.id));
        m.pools[0].process.flow_objects.sort_by(|a, b| a.id.cmp(&b.id));
        assert_eq!(back.pools, m.pools);
    }

    #[test]
    fn refuses_ill_formed() {
        let mut m = BpmnModel::new();
        let mut p = Process::new("proc", "P");
        p.flow_objects
            .push(FlowObject::new("t", "t", FlowKind::Task(Task::new(TaskType::User))));
        m.add_pool(Pool {
            id: "pool".into(),
            name: "P".into(),
            participant: None,
            process: p,
        })
        .unwrap();
        assert!(matches!(write_bpmn_xml(&m), Err(BpmnXmlError::NotWellFormed(_))));
    }

    #[test]
    fn reader_errors() {
        assert!(matches!(read_bpmn_xml("<bpmn-model>"), Err(BpmnXmlError::Xml { .. })));
        assert!(matches!(read_bpmn_xml("<other/>"), Err(BpmnXmlError::Content { .. })));
        assert!(read_bpmn_xml("<bpmn-model><pool name=\"x\" id=\"p\"/></bpmn-model>").is_err());
    }
}
