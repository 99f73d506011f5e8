//! The executable BPMN subset: pools with one process each, tasks, gateways,
//! start/end events, boundary events and embedded subprocesses.

mod wellformed;

use std::fmt;

use thiserror::Error;

use crate::id::Id;
use crate::io::expr::Expr;

pub use wellformed::{wellformed, BpmnDiagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParticipantKind {
    Entity,
    Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    pub id: Id,
    pub name: String,
    pub kind: ParticipantKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageDef {
    pub id: Id,
    pub name: String,
    pub payload_type: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageFlow {
    pub id: Id,
    pub source: Id,
    pub target: Id,
    pub message: Id,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub id: Id,
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignTime {
    Start,
    End,
}

/// `to := from`. On a subprocess, start assignments read the enclosing scope
/// and write the body scope; end assignments go the other way.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub to: String,
    pub from: Expr,
    pub time: AssignTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFlow {
    pub id: Id,
    pub source: Id,
    pub target: Id,
    pub condition: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StartTrigger {
    None,
    Message,
    Timer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EndResult {
    None,
    /// Sends `message` with the value of property `var` as payload.
    Message {
        message: Id,
        var: Option<String>,
    },
    Terminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventTrigger {
    Message,
    Timer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskType {
    Manual,
    User,
    Script,
    Service,
    Receive,
    Send,
    None,
}

impl TaskType {
    pub const ALL: [TaskType; 7] = [
        TaskType::Manual,
        TaskType::User,
        TaskType::Script,
        TaskType::Service,
        TaskType::Receive,
        TaskType::Send,
        TaskType::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskType::Manual => "Manual",
            TaskType::User => "User",
            TaskType::Script => "Script",
            TaskType::Service => "Service",
            TaskType::Receive => "Receive",
            TaskType::Send => "Send",
            TaskType::None => "None",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRef {
    pub interface: String,
    pub operation: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub task_type: TaskType,
    pub performer: Option<Id>,
    pub service: Option<ServiceRef>,
    pub message: Option<Id>,
    /// Property read for a send / written by a receive.
    pub message_var: Option<String>,
    pub assignments: Vec<Assignment>,
    pub instantiate: bool,
}

impl Task {
    pub fn new(task_type: TaskType) -> Self {
        Task {
            task_type,
            performer: None,
            service: None,
            message: None,
            message_var: None,
            assignments: Vec::new(),
            instantiate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiInstance {
    pub collection: Expr,
    pub iterator: String,
    /// Always sequential in this subset.
    pub sequential: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subprocess {
    pub body: Process,
    pub multi_instance: Option<MultiInstance>,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GatewayKind {
    ExclusiveData,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowKind {
    StartEvent {
        trigger: StartTrigger,
    },
    EndEvent {
        result: EndResult,
    },
    IntermediateEvent {
        trigger: EventTrigger,
        attached_to: Option<Id>,
        message: Option<Id>,
        message_var: Option<String>,
    },
    Task(Task),
    Subprocess(Box<Subprocess>),
    Gateway {
        gate: GatewayKind,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowObject {
    pub id: Id,
    pub name: String,
    pub kind: FlowKind,
}

impl FlowObject {
    pub fn new(id: impl Into<Id>, name: &str, kind: FlowKind) -> Self {
        FlowObject {
            id: id.into(),
            name: name.to_string(),
            kind,
        }
    }

    pub fn task(&self) -> Option<&Task> {
        match &self.kind {
            FlowKind::Task(t) => Some(t),
            _ => None,
        }
    }

    pub fn subprocess(&self) -> Option<&Subprocess> {
        match &self.kind {
            FlowKind::Subprocess(s) => Some(s),
            _ => None,
        }
    }

    /// Tasks and subprocesses: the things boundary events may attach to.
    pub fn is_activity(&self) -> bool {
        matches!(self.kind, FlowKind::Task(_) | FlowKind::Subprocess(_))
    }

    pub fn is_boundary(&self) -> bool {
        matches!(
            self.kind,
            FlowKind::IntermediateEvent {
                attached_to: Some(_),
                ..
            }
        )
    }

    pub fn is_start(&self) -> bool {
        matches!(self.kind, FlowKind::StartEvent { .. })
    }

    pub fn is_end(&self) -> bool {
        matches!(self.kind, FlowKind::EndEvent { .. })
    }

    pub fn is_instantiating_receive(&self) -> bool {
        matches!(&self.kind, FlowKind::Task(t) if t.task_type == TaskType::Receive && t.instantiate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Process {
    pub id: Id,
    pub name: String,
    pub properties: Vec<Property>,
    pub flow_objects: Vec<FlowObject>,
    pub sequence_flows: Vec<SequenceFlow>,
}

impl Process {
    pub fn new(id: impl Into<Id>, name: &str) -> Self {
        Process {
            id: id.into(),
            name: name.to_string(),
            properties: Vec::new(),
            flow_objects: Vec::new(),
            sequence_flows: Vec::new(),
        }
    }

    pub fn object(&self, id: &Id) -> Option<&FlowObject> {
        self.flow_objects.iter().find(|o| &o.id == id)
    }

    pub fn incoming<'a>(&'a self, id: &'a Id) -> impl Iterator<Item = &'a SequenceFlow> + 'a {
        self.sequence_flows.iter().filter(move |f| &f.target == id)
    }

    pub fn outgoing<'a>(&'a self, id: &'a Id) -> impl Iterator<Item = &'a SequenceFlow> + 'a {
        self.sequence_flows.iter().filter(move |f| &f.source == id)
    }

    /// Boundary events attached to a flow object of this process.
    pub fn boundary_events<'a>(&'a self, host: &'a Id) -> impl Iterator<Item = &'a FlowObject> + 'a {
        self.flow_objects
            .iter()
            .filter(move |o| matches!(&o.kind, FlowKind::IntermediateEvent { attached_to: Some(h), .. } if h == host))
    }

    /// This process and every nested subprocess body, depth first.
    pub fn walk(&self) -> Vec<&Process> {
        let mut out = vec![self];
        for o in &self.flow_objects {
            if let FlowKind::Subprocess(s) = &o.kind {
                out.extend(s.body.walk());
            }
        }
        out
    }

    fn walk_mut_find(&mut self, id: &Id) -> Option<&mut Process> {
        if &self.id == id {
            return Some(self);
        }
        for o in &mut self.flow_objects {
            if let FlowKind::Subprocess(s) = &mut o.kind {
                if let Some(p) = s.body.walk_mut_find(id) {
                    return Some(p);
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub id: Id,
    pub name: String,
    /// Organisation participant, when one is known.
    pub participant: Option<Id>,
    pub process: Process,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("duplicate id '{0}'")]
    DuplicateId(Id),
    #[error("unknown process '{0}'")]
    UnknownProcess(Id),
    #[error("unknown flow object '{0}'")]
    UnknownObject(Id),
    #[error("boundary event attach target '{0}' does not exist")]
    AttachTargetMissing(Id),
    #[error("cannot attach a boundary event to '{0}': only tasks and subprocesses accept them")]
    InvalidAttach(Id),
    #[error("'{0}' and '{1}' lie in different pools; use a message flow")]
    CrossPool(Id, Id),
    #[error("'{0}' and '{1}' lie in different processes")]
    CrossProcess(Id, Id),
    #[error("model is finalized")]
    Finalized,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BpmnModel {
    pub participants: Vec<Participant>,
    pub messages: Vec<MessageDef>,
    pub pools: Vec<Pool>,
    pub message_flows: Vec<MessageFlow>,
    finalized: bool,
}

/// Where a flow object lives: pool index and process id.
#[derive(Debug, Clone, Copy)]
pub struct ObjectSite<'a> {
    pub pool: &'a Pool,
    pub process: &'a Process,
    pub object: &'a FlowObject,
}

impl BpmnModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ends the build phase; further mutation through the builder API fails.
    pub fn finalize(&mut self) {
        self.finalized = true;
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    fn guard(&self) -> Result<(), BuildError> {
        if self.finalized {
            Err(BuildError::Finalized)
        } else {
            Ok(())
        }
    }

    /// Every id used anywhere in the model.
    pub fn all_ids(&self) -> Vec<&Id> {
        let mut ids: Vec<&Id> = Vec::new();
        ids.extend(self.participants.iter().map(|p| &p.id));
        ids.extend(self.messages.iter().map(|m| &m.id));
        ids.extend(self.message_flows.iter().map(|m| &m.id));
        for pool in &self.pools {
            ids.push(&pool.id);
            for p in pool.process.walk() {
                ids.push(&p.id);
                ids.extend(p.properties.iter().map(|x| &x.id));
                ids.extend(p.flow_objects.iter().map(|x| &x.id));
                ids.extend(p.sequence_flows.iter().map(|x| &x.id));
            }
        }
        ids
    }

    pub fn contains_id(&self, id: &Id) -> bool {
        self.all_ids().into_iter().any(|x| x == id)
    }

    pub fn add_pool(&mut self, pool: Pool) -> Result<Id, BuildError> {
        self.guard()?;
        for id in [&pool.id, &pool.process.id] {
            if self.contains_id(id) {
                return Err(BuildError::DuplicateId(id.clone()));
            }
        }
        let id = pool.id.clone();
        self.pools.push(pool);
        Ok(id)
    }

    pub fn add_participant(&mut self, p: Participant) -> Result<Id, BuildError> {
        self.guard()?;
        if self.contains_id(&p.id) {
            return Err(BuildError::DuplicateId(p.id));
        }
        let id = p.id.clone();
        self.participants.push(p);
        Ok(id)
    }

    pub fn add_message(&mut self, m: MessageDef) -> Result<Id, BuildError> {
        self.guard()?;
        if self.contains_id(&m.id) {
            return Err(BuildError::DuplicateId(m.id));
        }
        let id = m.id.clone();
        self.messages.push(m);
        Ok(id)
    }

    pub fn process_mut(&mut self, id: &Id) -> Option<&mut Process> {
        self.pools.iter_mut().find_map(|p| p.process.walk_mut_find(id))
    }

    pub fn process(&self, id: &Id) -> Option<&Process> {
        self.pools.iter().flat_map(|p| p.process.walk()).find(|p| &p.id == id)
    }

    pub fn locate(&self, object: &Id) -> Option<ObjectSite<'_>> {
        for pool in &self.pools {
            for process in pool.process.walk() {
                if let Some(o) = process.object(object) {
                    return Some(ObjectSite {
                        pool,
                        process,
                        object: o,
                    });
                }
            }
        }
        None
    }

    pub fn add_property(&mut self, process: &Id, prop: Property) -> Result<Id, BuildError> {
        self.guard()?;
        if self.contains_id(&prop.id) {
            return Err(BuildError::DuplicateId(prop.id));
        }
        let p = self
            .process_mut(process)
            .ok_or_else(|| BuildError::UnknownProcess(process.clone()))?;
        let id = prop.id.clone();
        p.properties.push(prop);
        Ok(id)
    }

    pub fn add_flow_object(&mut self, process: &Id, obj: FlowObject) -> Result<Id, BuildError> {
        self.guard()?;
        if self.contains_id(&obj.id) {
            return Err(BuildError::DuplicateId(obj.id));
        }
        if let FlowKind::Subprocess(s) = &obj.kind {
            for id in s.body.walk().into_iter().map(|p| &p.id) {
                if self.contains_id(id) {
                    return Err(BuildError::DuplicateId(id.clone()));
                }
            }
        }
        if let FlowKind::IntermediateEvent {
            attached_to: Some(host),
            ..
        } = &obj.kind
        {
            match self.locate(host) {
                None => return Err(BuildError::AttachTargetMissing(host.clone())),
                Some(site) if !site.object.is_activity() => return Err(BuildError::InvalidAttach(host.clone())),
                Some(site) if &site.process.id != process => {
                    return Err(BuildError::CrossProcess(host.clone(), obj.id.clone()))
                }
                _ => {}
            }
        }
        let p = self
            .process_mut(process)
            .ok_or_else(|| BuildError::UnknownProcess(process.clone()))?;
        let id = obj.id.clone();
        p.flow_objects.push(obj);
        Ok(id)
    }

    /// Adds a sequence flow with a derived id `source->target`.
    pub fn connect(&mut self, source: &Id, target: &Id, condition: Option<Expr>) -> Result<Id, BuildError> {
        let base = format!("{source}->{target}");
        let mut id = Id::new(base.clone());
        let mut k = 1;
        while self.contains_id(&id) {
            k += 1;
            id = Id::new(format!("{base}#{k}"));
        }
        self.connect_with_id(id, source, target, condition)
    }

    pub fn connect_with_id(
        &mut self,
        id: Id,
        source: &Id,
        target: &Id,
        condition: Option<Expr>,
    ) -> Result<Id, BuildError> {
        self.guard()?;
        if self.contains_id(&id) {
            return Err(BuildError::DuplicateId(id));
        }
        let s = self
            .locate(source)
            .ok_or_else(|| BuildError::UnknownObject(source.clone()))?;
        let t = self
            .locate(target)
            .ok_or_else(|| BuildError::UnknownObject(target.clone()))?;
        if s.pool.id != t.pool.id {
            return Err(BuildError::CrossPool(source.clone(), target.clone()));
        }
        if s.process.id != t.process.id {
            return Err(BuildError::CrossProcess(source.clone(), target.clone()));
        }
        let pid = s.process.id.clone();
        let p = self.process_mut(&pid).expect("located");
        p.sequence_flows.push(SequenceFlow {
            id: id.clone(),
            source: source.clone(),
            target: target.clone(),
            condition,
        });
        Ok(id)
    }

    /// Attaches a boundary intermediate event to a task or subprocess.
    pub fn attach_boundary_event(
        &mut self,
        activity: &Id,
        trigger: EventTrigger,
        name: &str,
    ) -> Result<Id, BuildError> {
        let site = self
            .locate(activity)
            .ok_or_else(|| BuildError::AttachTargetMissing(activity.clone()))?;
        if !site.object.is_activity() {
            return Err(BuildError::InvalidAttach(activity.clone()));
        }
        let pid = site.process.id.clone();
        let base = format!("{activity}@boundary");
        let mut id = Id::new(base.clone());
        let mut k = 1;
        while self.contains_id(&id) {
            k += 1;
            id = Id::new(format!("{base}#{k}"));
        }
        self.add_flow_object(
            &pid,
            FlowObject::new(
                id,
                name,
                FlowKind::IntermediateEvent {
                    trigger,
                    attached_to: Some(activity.clone()),
                    message: None,
                    message_var: None,
                },
            ),
        )
    }

    pub fn add_message_flow(&mut self, mf: MessageFlow) -> Result<Id, BuildError> {
        self.guard()?;
        if self.contains_id(&mf.id) {
            return Err(BuildError::DuplicateId(mf.id));
        }
        let id = mf.id.clone();
        self.message_flows.push(mf);
        Ok(id)
    }

    pub fn pool_by_name(&self, name: &str) -> Option<&Pool> {
        self.pools.iter().find(|p| p.name == name)
    }

    pub fn message(&self, id: &Id) -> Option<&MessageDef> {
        self.messages.iter().find(|m| &m.id == id)
    }

    pub fn participant(&self, id: &Id) -> Option<&Participant> {
        self.participants.iter().find(|m| &m.id == id)
    }

    /// All flow objects of all processes (nested included).
    pub fn flow_objects(&self) -> impl Iterator<Item = &FlowObject> {
        self.pools
            .iter()
            .flat_map(|p| p.process.walk())
            .flat_map(|p| p.flow_objects.iter())
    }

    pub fn sequence_flow_count(&self) -> usize {
        self.pools
            .iter()
            .flat_map(|p| p.process.walk())
            .map(|p| p.sequence_flows.len())
            .sum()
    }
}

impl fmt::Display for GatewayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GatewayKind::ExclusiveData => "exclusive-data",
            GatewayKind::Parallel => "parallel",
        })
    }
}
