use std::fmt;
use std::str::FromStr;

use crate::id::Id;
use crate::io::expr::Expr;

/// Metaclasses a profile stereotype can extend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metaclass {
    Activity,
    Partition,
    Class,
    Component,
    CallBehaviorAction,
    CallOperationAction,
    AcceptEventAction,
    SendSignalAction,
    LoopNode,
}

macro_rules! stereotypes {
    ($($name:ident => $base:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Stereotype {
            $($name),*
        }

        impl Stereotype {
            pub const ALL: &'static [Stereotype] = &[$(Stereotype::$name),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Stereotype::$name => stringify!($name)),*
                }
            }

            /// The metaclass this stereotype extends.
            pub fn base(self) -> Metaclass {
                match self {
                    $(Stereotype::$name => Metaclass::$base),*
                }
            }
        }

        impl FromStr for Stereotype {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($name) => Ok(Stereotype::$name),)*
                    other => Err(format!("unknown stereotype '{other}'")),
                }
            }
        }
    };
}

stereotypes! {
    MainProcess => Activity,
    Performer => Partition,
    Position => Class,
    OrgUnit => Class,
    WebService => Component,
    CallManualTask => CallBehaviorAction,
    CallUserTask => CallBehaviorAction,
    CallScriptTask => CallBehaviorAction,
    CallSubProcess => CallBehaviorAction,
    CallServiceTask => CallOperationAction,
    ManualTask => Activity,
    UserTask => Activity,
    ScriptTask => Activity,
    IntermAEAction => AcceptEventAction,
    IntermSSAction => SendSignalAction,
    EndSSAction => SendSignalAction,
    ForEach => LoopNode,
}

impl fmt::Display for Stereotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! node_kinds {
    ($($name:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum NodeKind {
            $($name),*
        }

        impl NodeKind {
            pub fn name(self) -> &'static str {
                match self {
                    $(NodeKind::$name => stringify!($name)),*
                }
            }
        }

        impl FromStr for NodeKind {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($name) => Ok(NodeKind::$name),)*
                    other => Err(format!("unknown node kind '{other}'")),
                }
            }
        }
    };
}

node_kinds! {
    CallBehaviorAction,
    CallOperationAction,
    AcceptEventAction,
    AcceptTimerAction,
    SendSignalAction,
    ReadVariableAction,
    WriteVariableAction,
    InitialNode,
    ActivityFinalNode,
    FlowFinalNode,
    DecisionNode,
    MergeNode,
    ForkNode,
    JoinNode,
    LoopNode,
    ParameterNode,
}

impl NodeKind {
    /// Metaclass used for stereotype applicability, if any stereotype may apply.
    pub fn metaclass(self) -> Option<Metaclass> {
        match self {
            NodeKind::CallBehaviorAction => Some(Metaclass::CallBehaviorAction),
            NodeKind::CallOperationAction => Some(Metaclass::CallOperationAction),
            NodeKind::AcceptEventAction => Some(Metaclass::AcceptEventAction),
            NodeKind::SendSignalAction => Some(Metaclass::SendSignalAction),
            NodeKind::LoopNode => Some(Metaclass::LoopNode),
            _ => None,
        }
    }

    pub fn is_control(self) -> bool {
        matches!(
            self,
            NodeKind::InitialNode
                | NodeKind::ActivityFinalNode
                | NodeKind::FlowFinalNode
                | NodeKind::DecisionNode
                | NodeKind::MergeNode
                | NodeKind::ForkNode
                | NodeKind::JoinNode
                | NodeKind::ParameterNode
        )
    }

    pub fn is_accept(self) -> bool {
        matches!(self, NodeKind::AcceptEventAction | NodeKind::AcceptTimerAction)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PinDirection {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pin {
    pub id: Id,
    pub name: String,
    pub type_name: String,
    pub direction: PinDirection,
    /// Value expression, for value pins.
    pub value: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub target: String,
    pub expr: Expr,
}

/// Nested contents of a structured loop node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoopBody {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: Id,
    pub name: String,
    pub kind: NodeKind,
    pub stereotype: Option<Stereotype>,
    pub pins: Vec<Pin>,
    /// Performer partition shown as a compartment of the action.
    pub performer: Option<Id>,
    pub assignment: Option<Assignment>,
    /// Called activity of a call behavior action.
    pub behavior: Option<Id>,
    /// `Component.operation` for service calls; signal name for send/accept actions.
    pub operation: Option<String>,
    pub collection: Option<Id>,
    pub iterator: Option<String>,
    pub body: Option<LoopBody>,
}

impl Node {
    pub fn new(id: impl Into<Id>, name: &str, kind: NodeKind) -> Self {
        Node {
            id: id.into(),
            name: name.to_string(),
            kind,
            stereotype: None,
            pins: Vec::new(),
            performer: None,
            assignment: None,
            behavior: None,
            operation: None,
            collection: None,
            iterator: None,
            body: None,
        }
    }

    pub fn pin(&self, id: &Id) -> Option<&Pin> {
        self.pins.iter().find(|p| &p.id == id)
    }

    pub fn first_pin(&self, dir: PinDirection) -> Option<&Pin> {
        self.pins.iter().find(|p| p.direction == dir)
    }

    /// Signal carried by a send or accept action.
    ///
    /// Accept actions without an explicit `operation` accept the signal named by the
    /// type of their first output pin.
    pub fn signal(&self) -> Option<&str> {
        match self.kind {
            NodeKind::SendSignalAction => self.operation.as_deref(),
            NodeKind::AcceptEventAction => self
                .operation
                .as_deref()
                .or_else(|| self.first_pin(PinDirection::Out).map(|p| p.type_name.as_str())),
            _ => None,
        }
    }

    /// For parameter nodes: whether the parameter is an input.
    pub fn is_input_parameter(&self) -> bool {
        self.kind == NodeKind::ParameterNode && self.pins.first().map(|p| p.direction) == Some(PinDirection::In)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    ControlFlow,
    ObjectFlow,
}

/// An edge endpoint: a node, optionally through one of its pins.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub node: Id,
    pub pin: Option<Id>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: Id,
    pub kind: EdgeKind,
    pub source: Endpoint,
    pub target: Endpoint,
    pub guard: Option<Expr>,
    pub interrupting: bool,
    pub region: Option<Id>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub id: Id,
    pub name: String,
    pub type_name: String,
    /// Owning activity or loop node.
    pub scope: Id,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub id: Id,
    pub name: String,
    pub stereotype: Option<Stereotype>,
    pub represents: Id,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterruptibleRegion {
    pub id: Id,
    pub name: String,
    pub nodes: Vec<Id>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activity {
    pub id: Id,
    pub name: String,
    pub stereotype: Option<Stereotype>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub variables: Vec<Variable>,
    pub partitions: Vec<Partition>,
    pub regions: Vec<InterruptibleRegion>,
}

impl Activity {
    pub fn is_main(&self) -> bool {
        self.stereotype == Some(Stereotype::MainProcess)
    }

    pub fn parameters(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::ParameterNode)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedName {
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    pub name: String,
    pub inputs: Vec<TypedName>,
    pub outputs: Vec<TypedName>,
}

/// Shared shape of class and web-service component definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDef {
    pub id: Id,
    pub name: String,
    pub stereotype: Option<Stereotype>,
    pub attributes: Vec<TypedName>,
    pub operations: Vec<Operation>,
}

pub type WebServiceDef = ClassDef;

/// Primitive type names accepted without a class definition.
pub const PRIMITIVES: &[&str] = &["Integer", "String", "Boolean", "Any"];

/// Strips a `[*]` multiplicity suffix.
pub fn element_type(type_name: &str) -> &str {
    type_name.strip_suffix("[*]").unwrap_or(type_name)
}
