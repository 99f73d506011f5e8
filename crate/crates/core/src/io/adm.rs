//! ADM-JSON: the activity-model document format.
//!
//! ```json
//! { "classes": [...], "components": [...], "activities": [...] }
//! ```
//! Every element carries a string `id` unique in the document; stereotypes are
//! given by name; guards and value pins hold expression text; assignments are
//! written `"var := expr"`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ad::{
    Activity, AdModel, Assignment, ClassDef, Edge, EdgeKind, Endpoint, InterruptibleRegion, LoopBody, ModelError, Node,
    NodeKind, Operation, Partition, Pin, PinDirection, Stereotype, TypedName, Variable,
};
use crate::id::Id;
use crate::io::expr::{parse_assignment, parse_expr, ExprError};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    classes: Vec<ClassDoc>,
    components: Vec<ClassDoc>,
    activities: Vec<ActivityDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TypedDoc {
    name: String,
    #[serde(rename = "type")]
    type_name: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperationDoc {
    name: String,
    #[serde(rename = "in", default, skip_serializing_if = "Vec::is_empty")]
    inputs: Vec<TypedDoc>,
    #[serde(rename = "out", default, skip_serializing_if = "Vec::is_empty")]
    outputs: Vec<TypedDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDoc {
    id: String,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stereotype: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    attributes: Vec<TypedDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    operations: Vec<OperationDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActivityDoc {
    id: String,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stereotype: Option<String>,
    #[serde(default)]
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    variables: Vec<VariableDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    partitions: Vec<PartitionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    regions: Vec<RegionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PinDoc {
    id: String,
    name: String,
    #[serde(rename = "type")]
    type_name: String,
    direction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyDoc {
    #[serde(default)]
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    kind: String,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stereotype: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pins: Vec<PinDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    performer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    behavior: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    operation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assign: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    collection: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iterator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body: Option<BodyDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: String,
    kind: String,
    source: String,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interrupts: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    id: String,
    name: String,
    #[serde(rename = "type")]
    type_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scope: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionDoc {
    id: String,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stereotype: Option<String>,
    represents: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    id: String,
    name: String,
    nodes: Vec<String>,
}

/// One problem found while reading a document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdmIssue {
    #[error("unknown stereotype '{name}' on {element}")]
    UnknownStereotype { element: Id, name: String },
    #[error("{element}: {message}")]
    BadValue { element: Id, message: String },
    #[error("{element}: {source}")]
    BadExpr {
        element: Id,
        #[source]
        source: ExprError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl AdmIssue {
    pub fn code(&self) -> &'static str {
        match self {
            AdmIssue::UnknownStereotype { .. } => "UnknownStereotype",
            AdmIssue::BadValue { .. } => "BadValue",
            AdmIssue::BadExpr { .. } => "BadExpr",
            AdmIssue::Model(m) => m.code(),
        }
    }
}

#[derive(Debug, Error)]
pub enum AdmError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} problem(s): {}", .0.len(), .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<AdmIssue>),
}

impl AdmError {
    pub fn issues(&self) -> &[AdmIssue] {
        match self {
            AdmError::Invalid(v) => v,
            AdmError::Syntax { .. } => &[],
        }
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.issues().iter().any(|i| i.code() == code)
    }
}

struct Reader {
    issues: Vec<AdmIssue>,
}

impl Reader {
    fn stereotype(&mut self, element: &str, s: &Option<String>) -> Option<Stereotype> {
        let name = s.as_ref()?;
        match name.parse() {
            Ok(st) => Some(st),
            Err(_) => {
                self.issues.push(AdmIssue::UnknownStereotype {
                    element: element.into(),
                    name: name.clone(),
                });
                None
            }
        }
    }

    fn expr(&mut self, element: &str, text: &str) -> Option<crate::io::expr::Expr> {
        match parse_expr(text) {
            Ok(e) => Some(e),
            Err(source) => {
                self.issues.push(AdmIssue::BadExpr {
                    element: element.into(),
                    source,
                });
                None
            }
        }
    }

    fn class(&mut self, c: ClassDoc) -> ClassDef {
        let typed = |v: Vec<TypedDoc>| {
            v.into_iter()
                .map(|t| TypedName {
                    name: t.name,
                    type_name: t.type_name,
                })
                .collect::<Vec<_>>()
        };
        ClassDef {
            stereotype: self.stereotype(&c.id, &c.stereotype),
            id: c.id.into(),
            name: c.name,
            attributes: typed(c.attributes),
            operations: c
                .operations
                .into_iter()
                .map(|o| Operation {
                    name: o.name,
                    inputs: typed(o.inputs),
                    outputs: typed(o.outputs),
                })
                .collect(),
        }
    }

    fn activity(&mut self, a: ActivityDoc) -> Activity {
        let id: Id = a.id.clone().into();
        let (nodes, edges) = self.container(a.nodes, a.edges);
        Activity {
            stereotype: self.stereotype(&a.id, &a.stereotype),
            name: a.name,
            nodes,
            edges,
            variables: a
                .variables
                .into_iter()
                .map(|v| Variable {
                    id: v.id.into(),
                    name: v.name,
                    type_name: v.type_name,
                    scope: v.scope.map(Id::from).unwrap_or_else(|| id.clone()),
                })
                .collect(),
            partitions: a
                .partitions
                .into_iter()
                .map(|p| Partition {
                    stereotype: self.stereotype(&p.id, &p.stereotype),
                    id: p.id.into(),
                    name: p.name,
                    represents: p.represents.into(),
                })
                .collect(),
            regions: a
                .regions
                .into_iter()
                .map(|r| InterruptibleRegion {
                    id: r.id.into(),
                    name: r.name,
                    nodes: r.nodes.into_iter().map(Id::from).collect(),
                })
                .collect(),
            id,
        }
    }

    fn container(&mut self, nodes: Vec<NodeDoc>, edges: Vec<EdgeDoc>) -> (Vec<Node>, Vec<Edge>) {
        let nodes: Vec<Node> = nodes.into_iter().filter_map(|n| self.node(n)).collect();
        let edges = edges.into_iter().filter_map(|e| self.edge(e, &nodes)).collect();
        (nodes, edges)
    }

    fn node(&mut self, n: NodeDoc) -> Option<Node> {
        let kind: NodeKind = match n.kind.parse() {
            Ok(k) => k,
            Err(message) => {
                self.issues.push(AdmIssue::BadValue {
                    element: n.id.clone().into(),
                    message,
                });
                return None;
            }
        };
        let mut node = Node::new(n.id.clone(), &n.name, kind);
        node.stereotype = self.stereotype(&n.id, &n.stereotype);
        for p in n.pins {
            let direction = match p.direction.as_str() {
                "in" => PinDirection::In,
                "out" => PinDirection::Out,
                other => {
                    self.issues.push(AdmIssue::BadValue {
                        element: p.id.clone().into(),
                        message: format!("pin direction must be 'in' or 'out', got '{other}'"),
                    });
                    continue;
                }
            };
            let value = p.value.as_deref().and_then(|v| self.expr(&p.id, v));
            node.pins.push(Pin {
                id: p.id.into(),
                name: p.name,
                type_name: p.type_name,
                direction,
                value,
            });
        }
        node.performer = n.performer.map(Id::from);
        node.behavior = n.behavior.map(Id::from);
        node.operation = n.operation;
        if let Some(text) = n.assign {
            match parse_assignment(&text) {
                Ok((target, expr)) => node.assignment = Some(Assignment { target, expr }),
                Err(source) => self.issues.push(AdmIssue::BadExpr {
                    element: n.id.clone().into(),
                    source,
                }),
            }
        }
        node.collection = n.collection.map(Id::from);
        node.iterator = n.iterator;
        if let Some(b) = n.body {
            let (nodes, edges) = self.container(b.nodes, b.edges);
            node.body = Some(LoopBody { nodes, edges });
        } else if kind == NodeKind::LoopNode {
            node.body = Some(LoopBody::default());
        }
        Some(node)
    }

    fn edge(&mut self, e: EdgeDoc, nodes: &[Node]) -> Option<Edge> {
        let kind = match e.kind.as_str() {
            "control" => EdgeKind::ControlFlow,
            "object" => EdgeKind::ObjectFlow,
            other => {
                self.issues.push(AdmIssue::BadValue {
                    element: e.id.clone().into(),
                    message: format!("edge kind must be 'control' or 'object', got '{other}'"),
                });
                return None;
            }
        };
        let endpoint = |r: &str| -> Endpoint {
            let rid: Id = r.into();
            if let Some(owner) = nodes.iter().find(|n| n.pin(&rid).is_some()) {
                Endpoint {
                    node: owner.id.clone(),
                    pin: Some(rid),
                }
            } else {
                Endpoint { node: rid, pin: None }
            }
        };
        let guard = e.guard.as_deref().and_then(|g| self.expr(&e.id, g));
        Some(Edge {
            source: endpoint(&e.source),
            target: endpoint(&e.target),
            id: e.id.into(),
            kind,
            guard,
            interrupting: e.interrupts.is_some(),
            region: e.interrupts.map(Id::from),
        })
    }
}

/// Parses an ADM-JSON document into a fully linked model.
pub fn parse_adm(text: &str) -> Result<AdModel, AdmError> {
    let doc: Doc = serde_json::from_str(text).map_err(|e| AdmError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut r = Reader { issues: Vec::new() };
    let classes = doc.classes.into_iter().map(|c| r.class(c)).collect();
    let components = doc.components.into_iter().map(|c| r.class(c)).collect();
    let activities = doc.activities.into_iter().map(|a| r.activity(a)).collect();
    if !r.issues.is_empty() {
        return Err(AdmError::Invalid(r.issues));
    }
    AdModel::new(activities, classes, components)
        .map_err(|errs| AdmError::Invalid(errs.into_iter().map(AdmIssue::Model).collect()))
}

fn write_typed(v: &[TypedName]) -> Vec<TypedDoc> {
    v.iter()
        .map(|t| TypedDoc {
            name: t.name.clone(),
            type_name: t.type_name.clone(),
        })
        .collect()
}

fn write_class(c: &ClassDef) -> ClassDoc {
    ClassDoc {
        id: c.id.to_string(),
        name: c.name.clone(),
        stereotype: c.stereotype.map(|s| s.name().to_string()),
        attributes: write_typed(&c.attributes),
        operations: c
            .operations
            .iter()
            .map(|o| OperationDoc {
                name: o.name.clone(),
                inputs: write_typed(&o.inputs),
                outputs: write_typed(&o.outputs),
            })
            .collect(),
    }
}

fn write_container(nodes: &[Node], edges: &[Edge]) -> (Vec<NodeDoc>, Vec<EdgeDoc>) {
    let end = |e: &Endpoint| e.pin.as_ref().unwrap_or(&e.node).to_string();
    (
        nodes.iter().map(write_node).collect(),
        edges
            .iter()
            .map(|e| EdgeDoc {
                id: e.id.to_string(),
                kind: match e.kind {
                    EdgeKind::ControlFlow => "control",
                    EdgeKind::ObjectFlow => "object",
                }
                .into(),
                source: end(&e.source),
                target: end(&e.target),
                guard: e.guard.as_ref().map(|g| g.to_string()),
                interrupts: e.region.as_ref().map(|r| r.to_string()),
            })
            .collect(),
    )
}

fn write_node(n: &Node) -> NodeDoc {
    NodeDoc {
        id: n.id.to_string(),
        kind: n.kind.name().into(),
        name: n.name.clone(),
        stereotype: n.stereotype.map(|s| s.name().to_string()),
        pins: n
            .pins
            .iter()
            .map(|p| PinDoc {
                id: p.id.to_string(),
                name: p.name.clone(),
                type_name: p.type_name.clone(),
                direction: match p.direction {
                    PinDirection::In => "in",
                    PinDirection::Out => "out",
                }
                .into(),
                value: p.value.as_ref().map(|v| v.to_string()),
            })
            .collect(),
        performer: n.performer.as_ref().map(|p| p.to_string()),
        behavior: n.behavior.as_ref().map(|p| p.to_string()),
        operation: n.operation.clone(),
        assign: n.assignment.as_ref().map(|a| format!("{} := {}", a.target, a.expr)),
        collection: n.collection.as_ref().map(|p| p.to_string()),
        iterator: n.iterator.clone(),
        body: n.body.as_ref().map(|b| {
            let (nodes, edges) = write_container(&b.nodes, &b.edges);
            BodyDoc { nodes, edges }
        }),
    }
}

/// Writes a model back to ADM-JSON (pretty printed, trailing newline).
pub fn print_adm(m: &AdModel) -> String {
    let doc = Doc {
        classes: m.classes.iter().map(write_class).collect(),
        components: m.components.iter().map(write_class).collect(),
        activities: m
            .activities
            .iter()
            .map(|a| {
                let (nodes, edges) = write_container(&a.nodes, &a.edges);
                ActivityDoc {
                    id: a.id.to_string(),
                    name: a.name.clone(),
                    stereotype: a.stereotype.map(|s| s.name().to_string()),
                    nodes,
                    edges,
                    variables: a
                        .variables
                        .iter()
                        .map(|v| VariableDoc {
                            id: v.id.to_string(),
                            name: v.name.clone(),
                            type_name: v.type_name.clone(),
                            scope: (v.scope != a.id).then(|| v.scope.to_string()),
                        })
                        .collect(),
                    partitions: a
                        .partitions
                        .iter()
                        .map(|p| PartitionDoc {
                            id: p.id.to_string(),
                            name: p.name.clone(),
                            stereotype: p.stereotype.map(|s| s.name().to_string()),
                            represents: p.represents.to_string(),
                        })
                        .collect(),
                    regions: a
                        .regions
                        .iter()
                        .map(|r| RegionDoc {
                            id: r.id.to_string(),
                            name: r.name.clone(),
                            nodes: r.nodes.iter().map(|n| n.to_string()).collect(),
                        })
                        .collect(),
                }
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}
