//! Activity-diagram side of the transformation: the workflow-profile metamodel
//! fragment with identity, containment and scope queries.
//!
//! Models are validated for referential integrity on construction and are
//! immutable afterwards.

mod types;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::id::Id;
pub use types::*;

/// Structural problems found while assembling a model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate id '{0}'")]
    DuplicateId(Id),
    #[error("no activity carries the MainProcess stereotype")]
    NoMainProcess,
    #[error("{element}: dangling {role} reference '{reference}'")]
    DanglingRef {
        element: Id,
        role: &'static str,
        reference: String,
    },
    #[error("{element}: stereotype {stereotype} does not apply to {base}")]
    StereotypeBase {
        element: Id,
        stereotype: Stereotype,
        base: String,
    },
    #[error("{element}: missing {what}")]
    MissingPayload { element: Id, what: &'static str },
    #[error("{element}: {what} is not allowed on {kind}")]
    UnexpectedPayload {
        element: Id,
        what: &'static str,
        kind: NodeKind,
    },
    #[error("{element}: control flow may not attach to pin '{pin}'")]
    ControlFlowPin { element: Id, pin: Id },
}

impl ModelError {
    /// Stable short code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::DuplicateId(_) => "DuplicateId",
            ModelError::NoMainProcess => "NoMainProcess",
            ModelError::DanglingRef { .. } => "DanglingRef",
            ModelError::StereotypeBase { .. } => "StereotypeBase",
            ModelError::MissingPayload { .. } => "MissingPayload",
            ModelError::UnexpectedPayload { .. } => "UnexpectedPayload",
            ModelError::ControlFlowPin { .. } => "ControlFlowPin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("unknown element id '{0}'")]
    UnknownId(Id),
    #[error("'{0}' is not a {1}")]
    WrongKind(Id, &'static str),
    #[error("variable '{name}' not found in scope chain [{}]", chain.join(" -> "))]
    VariableNotFound { name: String, chain: Vec<String> },
}

/// Location of an element inside the containment tree.
///
/// Node paths index first into the activity's nodes and then through nested
/// loop bodies.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Loc {
    Activity(usize),
    Node(usize, Vec<usize>),
    Edge(usize, Vec<usize>, usize),
    Pin(usize, Vec<usize>, usize),
    Variable(usize, usize),
    Partition(usize, usize),
    Region(usize, usize),
    Class(usize),
    Component(usize),
}

/// Borrowed view of any element.
#[derive(Debug, Clone, Copy)]
pub enum Element<'a> {
    Activity(&'a Activity),
    Node(&'a Node),
    Edge(&'a Edge),
    Pin(&'a Pin),
    Variable(&'a Variable),
    Partition(&'a Partition),
    Region(&'a InterruptibleRegion),
    Class(&'a ClassDef),
    Component(&'a WebServiceDef),
}

impl<'a> Element<'a> {
    pub fn id(&self) -> &'a Id {
        match self {
            Element::Activity(e) => &e.id,
            Element::Node(e) => &e.id,
            Element::Edge(e) => &e.id,
            Element::Pin(e) => &e.id,
            Element::Variable(e) => &e.id,
            Element::Partition(e) => &e.id,
            Element::Region(e) => &e.id,
            Element::Class(e) => &e.id,
            Element::Component(e) => &e.id,
        }
    }
}

type BaseCheck = dyn Fn(&mut Vec<ModelError>, &Id, Option<Stereotype>, Metaclass, &str);

#[derive(Debug, Clone)]
pub struct AdModel {
    pub activities: Vec<Activity>,
    pub classes: Vec<ClassDef>,
    pub components: Vec<WebServiceDef>,
    next_id: u64,
    index: HashMap<Id, Loc>,
}

impl PartialEq for AdModel {
    fn eq(&self, other: &Self) -> bool {
        self.activities == other.activities && self.classes == other.classes && self.components == other.components
    }
}

impl AdModel {
    /// Assembles a model, linking and checking every cross-reference.
    pub fn new(
        mut activities: Vec<Activity>,
        classes: Vec<ClassDef>,
        components: Vec<WebServiceDef>,
    ) -> Result<Self, Vec<ModelError>> {
        for a in &mut activities {
            synthesize_iterator_variables(a);
        }
        let mut m = AdModel {
            activities,
            classes,
            components,
            next_id: 0,
            index: HashMap::new(),
        };
        let mut errors = m.build_index();
        errors.extend(m.check());
        if errors.is_empty() {
            Ok(m)
        } else {
            Err(errors)
        }
    }

    fn build_index(&mut self) -> Vec<ModelError> {
        let mut errors = Vec::new();
        let mut index = HashMap::new();
        let mut put = |id: &Id, loc: Loc| {
            if index.insert(id.clone(), loc).is_some() {
                errors.push(ModelError::DuplicateId(id.clone()));
            }
        };
        for (ci, c) in self.classes.iter().enumerate() {
            put(&c.id, Loc::Class(ci));
        }
        for (ci, c) in self.components.iter().enumerate() {
            put(&c.id, Loc::Component(ci));
        }
        for (ai, a) in self.activities.iter().enumerate() {
            put(&a.id, Loc::Activity(ai));
            for (i, v) in a.variables.iter().enumerate() {
                put(&v.id, Loc::Variable(ai, i));
            }
            for (i, p) in a.partitions.iter().enumerate() {
                put(&p.id, Loc::Partition(ai, i));
            }
            for (i, r) in a.regions.iter().enumerate() {
                put(&r.id, Loc::Region(ai, i));
            }
            let mut stack: Vec<(Vec<usize>, &[Node], &[Edge])> = vec![(vec![], &a.nodes, &a.edges)];
            while let Some((prefix, nodes, edges)) = stack.pop() {
                for (i, e) in edges.iter().enumerate() {
                    put(&e.id, Loc::Edge(ai, prefix.clone(), i));
                }
                for (i, n) in nodes.iter().enumerate() {
                    let mut path = prefix.clone();
                    path.push(i);
                    put(&n.id, Loc::Node(ai, path.clone()));
                    for (pi, p) in n.pins.iter().enumerate() {
                        put(&p.id, Loc::Pin(ai, path.clone(), pi));
                    }
                    if let Some(body) = &n.body {
                        stack.push((path, &body.nodes, &body.edges));
                    }
                }
            }
        }
        self.index = index;
        errors
    }

    fn check(&self) -> Vec<ModelError> {
        let mut errors = Vec::new();
        if !self.activities.iter().any(Activity::is_main) {
            errors.push(ModelError::NoMainProcess);
        }
        let class_names: BTreeSet<&str> = self.classes.iter().map(|c| c.name.as_str()).collect();
        let type_ok = |t: &str| {
            let t = element_type(t);
            PRIMITIVES.contains(&t) || class_names.contains(t)
        };
        let base_check =
            |errors: &mut Vec<ModelError>, id: &Id, st: Option<Stereotype>, base: Metaclass, what: &str| {
                if let Some(s) = st {
                    if s.base() != base {
                        errors.push(ModelError::StereotypeBase {
                            element: id.clone(),
                            stereotype: s,
                            base: what.to_string(),
                        });
                    }
                }
            };
        for c in &self.classes {
            base_check(&mut errors, &c.id, c.stereotype, Metaclass::Class, "Class");
        }
        for c in &self.components {
            base_check(&mut errors, &c.id, c.stereotype, Metaclass::Component, "Component");
        }
        for a in &self.activities {
            base_check(&mut errors, &a.id, a.stereotype, Metaclass::Activity, "Activity");
            for p in &a.partitions {
                base_check(&mut errors, &p.id, p.stereotype, Metaclass::Partition, "Partition");
                if !matches!(self.index.get(&p.represents), Some(Loc::Class(_))) {
                    errors.push(dangling(&p.id, "represents", p.represents.as_str()));
                }
            }
            for v in &a.variables {
                if !type_ok(&v.type_name) {
                    errors.push(dangling(&v.id, "type", &v.type_name));
                }
                let scope_ok = v.scope == a.id
                    || matches!(self.node(&v.scope), Some(n) if n.kind == NodeKind::LoopNode
                        && self.activity_of(&v.scope).map(|x| &x.id) == Some(&a.id));
                if !scope_ok {
                    errors.push(dangling(&v.id, "scope", v.scope.as_str()));
                }
            }
            for r in &a.regions {
                for n in &r.nodes {
                    if self.activity_of(n).map(|x| &x.id) != Some(&a.id)
                        || !matches!(self.index.get(n), Some(Loc::Node(..)))
                    {
                        errors.push(dangling(&r.id, "region node", n.as_str()));
                    }
                }
            }
            self.check_container(a, &a.nodes, &a.edges, &type_ok, &base_check, &mut errors);
        }
        errors
    }

    fn check_container(
        &self,
        a: &Activity,
        nodes: &[Node],
        edges: &[Edge],
        type_ok: &dyn Fn(&str) -> bool,
        base_check: &BaseCheck,
        errors: &mut Vec<ModelError>,
    ) {
        let local: BTreeSet<&Id> = nodes.iter().map(|n| &n.id).collect();
        for n in nodes {
            match n.kind.metaclass() {
                Some(mc) => base_check(errors, &n.id, n.stereotype, mc, n.kind.name()),
                None => {
                    if let Some(s) = n.stereotype {
                        errors.push(ModelError::StereotypeBase {
                            element: n.id.clone(),
                            stereotype: s,
                            base: n.kind.name().to_string(),
                        });
                    }
                }
            }
            for p in &n.pins {
                if !type_ok(&p.type_name) {
                    errors.push(dangling(&p.id, "type", &p.type_name));
                }
            }
            self.check_payload(a, n, errors);
            if let Some(body) = &n.body {
                self.check_container(a, &body.nodes, &body.edges, type_ok, base_check, errors);
            }
        }
        for e in edges {
            for (end, role) in [(&e.source, "source"), (&e.target, "target")] {
                if !local.contains(&end.node) {
                    errors.push(dangling(&e.id, role, end.node.as_str()));
                    continue;
                }
                if let Some(pin) = &end.pin {
                    if e.kind == EdgeKind::ControlFlow {
                        errors.push(ModelError::ControlFlowPin {
                            element: e.id.clone(),
                            pin: pin.clone(),
                        });
                    }
                    let owner = nodes.iter().find(|n| n.id == end.node);
                    if owner.and_then(|n| n.pin(pin)).is_none() {
                        errors.push(dangling(&e.id, role, pin.as_str()));
                    }
                }
            }
            if let Some(r) = &e.region {
                if !a.regions.iter().any(|x| &x.id == r) {
                    errors.push(dangling(&e.id, "region", r.as_str()));
                }
            }
        }
    }

    fn check_payload(&self, a: &Activity, n: &Node, errors: &mut Vec<ModelError>) {
        let missing = |what| ModelError::MissingPayload {
            element: n.id.clone(),
            what,
        };
        let unexpected = |what| ModelError::UnexpectedPayload {
            element: n.id.clone(),
            what,
            kind: n.kind,
        };
        use NodeKind as K;
        use Stereotype as S;
        match n.kind {
            K::CallBehaviorAction => match n.stereotype {
                None => errors.push(missing("task stereotype")),
                Some(S::CallSubProcess) if n.behavior.is_none() => errors.push(missing("behavior")),
                _ => {}
            },
            K::CallOperationAction => {
                if n.stereotype.is_none() {
                    errors.push(missing("CallServiceTask stereotype"));
                }
                if n.operation.is_none() {
                    errors.push(missing("operation"));
                }
            }
            K::AcceptEventAction => {
                if n.stereotype.is_none() {
                    errors.push(missing("IntermAEAction stereotype"));
                }
                if n.signal().is_none() {
                    errors.push(missing("accepted signal"));
                }
            }
            K::SendSignalAction => {
                if n.stereotype.is_none() {
                    errors.push(missing("send stereotype"));
                }
                if n.operation.is_none() {
                    errors.push(missing("signal"));
                }
            }
            K::ReadVariableAction | K::WriteVariableAction => {
                if n.assignment.is_none() {
                    errors.push(missing("assignment"));
                }
            }
            K::LoopNode => {
                if n.stereotype.is_none() {
                    errors.push(missing("ForEach stereotype"));
                }
            }
            K::ParameterNode if n.pins.len() != 1 => errors.push(missing("exactly one parameter pin")),
            _ => {}
        }
        if n.kind != K::LoopNode {
            if n.collection.is_some() {
                errors.push(unexpected("collection"));
            }
            if n.iterator.is_some() {
                errors.push(unexpected("iterator"));
            }
            if n.body.is_some() {
                errors.push(unexpected("body"));
            }
        }
        if n.assignment.is_some() && !matches!(n.kind, K::ReadVariableAction | K::WriteVariableAction) {
            errors.push(unexpected("assignment"));
        }
        if n.behavior.is_some() && n.kind != K::CallBehaviorAction {
            errors.push(unexpected("behavior"));
        }
        if let Some(b) = &n.behavior {
            if !matches!(self.index.get(b), Some(Loc::Activity(_))) {
                errors.push(dangling(&n.id, "behavior", b.as_str()));
            }
        }
        if let Some(p) = &n.performer {
            if !a.partitions.iter().any(|x| &x.id == p) {
                errors.push(dangling(&n.id, "performer", p.as_str()));
            }
        }
        if let Some(c) = &n.collection {
            if n.pin(c).is_none() {
                errors.push(dangling(&n.id, "collection", c.as_str()));
            }
        }
    }

    /// A fresh id that is not used by any element and never handed out before.
    pub fn fresh_id(&mut self, prefix: &str) -> Id {
        loop {
            self.next_id += 1;
            let id = Id::new(format!("{prefix}#{}", self.next_id));
            if !self.index.contains_key(&id) {
                return id;
            }
        }
    }

    pub fn contains(&self, id: &Id) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &Id> {
        self.index.keys()
    }

    fn node_at(&self, ai: usize, path: &[usize]) -> &Node {
        let mut node = &self.activities[ai].nodes[path[0]];
        for &i in &path[1..] {
            node = &node.body.as_ref().expect("indexed body").nodes[i];
        }
        node
    }

    fn container(&self, ai: usize, prefix: &[usize]) -> (&[Node], &[Edge]) {
        if prefix.is_empty() {
            let a = &self.activities[ai];
            (&a.nodes, &a.edges)
        } else {
            let body = self.node_at(ai, prefix).body.as_ref().expect("indexed body");
            (&body.nodes, &body.edges)
        }
    }

    pub fn lookup(&self, id: &Id) -> Option<Element<'_>> {
        Some(match self.index.get(id)? {
            Loc::Activity(a) => Element::Activity(&self.activities[*a]),
            Loc::Node(a, p) => Element::Node(self.node_at(*a, p)),
            Loc::Edge(a, p, i) => Element::Edge(&self.container(*a, p).1[*i]),
            Loc::Pin(a, p, i) => Element::Pin(&self.node_at(*a, p).pins[*i]),
            Loc::Variable(a, i) => Element::Variable(&self.activities[*a].variables[*i]),
            Loc::Partition(a, i) => Element::Partition(&self.activities[*a].partitions[*i]),
            Loc::Region(a, i) => Element::Region(&self.activities[*a].regions[*i]),
            Loc::Class(i) => Element::Class(&self.classes[*i]),
            Loc::Component(i) => Element::Component(&self.components[*i]),
        })
    }

    pub fn node(&self, id: &Id) -> Option<&Node> {
        match self.index.get(id)? {
            Loc::Node(a, p) => Some(self.node_at(*a, p)),
            _ => None,
        }
    }

    pub fn activity(&self, id: &Id) -> Option<&Activity> {
        match self.index.get(id)? {
            Loc::Activity(a) => Some(&self.activities[*a]),
            _ => None,
        }
    }

    pub fn activity_by_name(&self, name: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.name == name)
    }

    /// Activity that owns (directly or through nesting) the element.
    pub fn activity_of(&self, id: &Id) -> Option<&Activity> {
        let ai = match self.index.get(id)? {
            Loc::Activity(a)
            | Loc::Node(a, _)
            | Loc::Edge(a, _, _)
            | Loc::Pin(a, _, _)
            | Loc::Variable(a, _)
            | Loc::Partition(a, _)
            | Loc::Region(a, _) => *a,
            Loc::Class(_) | Loc::Component(_) => return None,
        };
        Some(&self.activities[ai])
    }

    pub fn class_by_name(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn class(&self, id: &Id) -> Option<&ClassDef> {
        match self.index.get(id)? {
            Loc::Class(i) => Some(&self.classes[*i]),
            _ => None,
        }
    }

    pub fn partition(&self, id: &Id) -> Option<&Partition> {
        match self.index.get(id)? {
            Loc::Partition(a, i) => Some(&self.activities[*a].partitions[*i]),
            _ => None,
        }
    }

    pub fn region(&self, id: &Id) -> Option<&InterruptibleRegion> {
        match self.index.get(id)? {
            Loc::Region(a, i) => Some(&self.activities[*a].regions[*i]),
            _ => None,
        }
    }

    /// Owning node of a pin.
    pub fn pin_owner(&self, id: &Id) -> Option<&Node> {
        match self.index.get(id)? {
            Loc::Pin(a, p, _) => Some(self.node_at(*a, p)),
            _ => None,
        }
    }

    /// Enclosing loop node of a node, if it sits in a loop body.
    pub fn enclosing_loop(&self, node: &Id) -> Option<&Node> {
        match self.index.get(node)? {
            Loc::Node(a, p) if p.len() > 1 => Some(self.node_at(*a, &p[..p.len() - 1])),
            _ => None,
        }
    }

    /// Chain of enclosing loop nodes, innermost first.
    pub fn enclosing_loops(&self, node: &Id) -> Vec<&Node> {
        let mut out = Vec::new();
        if let Some(Loc::Node(a, p)) = self.index.get(node) {
            for k in (1..p.len()).rev() {
                out.push(self.node_at(*a, &p[..k]));
            }
        }
        out
    }

    /// Variable scope in which a node's expressions are evaluated: the innermost
    /// enclosing loop node, else the owning activity.
    pub fn scope_of(&self, node: &Id) -> Option<&Id> {
        match self.enclosing_loop(node) {
            Some(l) => Some(&l.id),
            None => self.activity_of(node).map(|a| &a.id),
        }
    }

    /// Nodes and edges of the container holding a node.
    pub fn siblings(&self, node: &Id) -> Option<(&[Node], &[Edge])> {
        match self.index.get(node)? {
            Loc::Node(a, p) => Some(self.container(*a, &p[..p.len() - 1])),
            _ => None,
        }
    }

    pub fn stereotype_of(&self, id: &Id) -> Result<Option<Stereotype>, LookupError> {
        let el = self.lookup(id).ok_or_else(|| LookupError::UnknownId(id.clone()))?;
        Ok(match el {
            Element::Activity(a) => a.stereotype,
            Element::Node(n) => n.stereotype,
            Element::Partition(p) => p.stereotype,
            Element::Class(c) | Element::Component(c) => c.stereotype,
            _ => None,
        })
    }

    /// Lexical variable lookup starting at an activity or loop node.
    pub fn resolve_variable(&self, scope: &Id, name: &str) -> Result<&Variable, LookupError> {
        let activity = match self.index.get(scope) {
            Some(Loc::Activity(_)) | Some(Loc::Node(..)) => self.activity_of(scope).expect("indexed"),
            _ => return Err(LookupError::UnknownId(scope.clone())),
        };
        let mut chain: Vec<Id> = Vec::new();
        if let Some(n) = self.node(scope) {
            if n.kind != NodeKind::LoopNode {
                return Err(LookupError::WrongKind(scope.clone(), "scope"));
            }
            chain.push(n.id.clone());
            chain.extend(self.enclosing_loops(scope).into_iter().map(|l| l.id.clone()));
        }
        chain.push(activity.id.clone());
        for s in &chain {
            if let Some(v) = activity.variables.iter().find(|v| &v.scope == s && v.name == name) {
                return Ok(v);
            }
        }
        Err(LookupError::VariableNotFound {
            name: name.to_string(),
            chain: chain.iter().map(|i| i.to_string()).collect(),
        })
    }

    /// Incoming and outgoing edges of a node in declaration order. Edges
    /// attached to a pin count at the pin's owning node.
    pub fn adjacency(&self, node: &Id) -> Result<(Vec<&Edge>, Vec<&Edge>), LookupError> {
        let (_, edges) = self
            .siblings(node)
            .ok_or_else(|| LookupError::UnknownId(node.clone()))?;
        let incoming = edges.iter().filter(|e| &e.target.node == node).collect();
        let outgoing = edges.iter().filter(|e| &e.source.node == node).collect();
        Ok((incoming, outgoing))
    }

    /// Innermost interruptible region containing a node. Nodes inside loop
    /// bodies inherit the region of their outermost enclosing loop.
    pub fn containing_region(&self, node: &Id) -> Result<Option<&Id>, LookupError> {
        let a = match self.index.get(node) {
            Some(Loc::Node(a, _)) => &self.activities[*a],
            _ => return Err(LookupError::UnknownId(node.clone())),
        };
        let top = self.enclosing_loops(node).last().map(|l| &l.id).unwrap_or(node);
        Ok(a.regions
            .iter()
            .filter(|r| r.nodes.contains(top))
            .min_by_key(|r| r.nodes.len())
            .map(|r| &r.id))
    }

    /// Regions of an activity that contain `region` strictly, innermost first.
    pub fn enclosing_regions<'a>(&'a self, activity: &'a Activity, region: &Id) -> Vec<&'a InterruptibleRegion> {
        let Some(r) = activity.regions.iter().find(|r| &r.id == region) else {
            return Vec::new();
        };
        let mut out: Vec<&InterruptibleRegion> = activity
            .regions
            .iter()
            .filter(|o| o.id != r.id && o.nodes.len() > r.nodes.len() && r.nodes.iter().all(|n| o.nodes.contains(n)))
            .collect();
        out.sort_by_key(|o| o.nodes.len());
        out
    }

    /// Whether `node` lies in `region` (directly or via a nested region or loop).
    pub fn in_region(&self, node: &Id, region: &InterruptibleRegion) -> bool {
        let top = self
            .enclosing_loops(node)
            .last()
            .map(|l| l.id.clone())
            .unwrap_or_else(|| node.clone());
        region.nodes.contains(&top)
    }
}

fn dangling(element: &Id, role: &'static str, reference: &str) -> ModelError {
    ModelError::DanglingRef {
        element: element.clone(),
        role,
        reference: reference.to_string(),
    }
}

/// Declares loop-scoped iterator variables that are not declared explicitly.
fn synthesize_iterator_variables(a: &mut Activity) {
    fn walk(nodes: &[Node], out: &mut Vec<(Id, String, String)>) {
        for n in nodes {
            if n.kind == NodeKind::LoopNode {
                if let Some(it) = &n.iterator {
                    let ty = n
                        .collection
                        .as_ref()
                        .and_then(|c| n.pin(c))
                        .map(|p| element_type(&p.type_name).to_string())
                        .unwrap_or_else(|| "Any".to_string());
                    out.push((n.id.clone(), it.clone(), ty));
                }
            }
            if let Some(b) = &n.body {
                walk(&b.nodes, out);
            }
        }
    }
    let mut found = Vec::new();
    walk(&a.nodes, &mut found);
    for (scope, name, ty) in found {
        if !a.variables.iter().any(|v| v.scope == scope && v.name == name) {
            a.variables.push(Variable {
                id: Id::new(format!("{scope}.{name}")),
                name,
                type_name: ty,
                scope,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> AdModel {
        let mut a = Activity {
            id: "a".into(),
            name: "Main".into(),
            stereotype: Some(Stereotype::MainProcess),
            nodes: vec![
                Node::new("i", "start", NodeKind::InitialNode),
                Node::new("f", "end", NodeKind::ActivityFinalNode),
                Node::new("m", "merge", NodeKind::MergeNode),
            ],
            edges: vec![Edge {
                id: "e".into(),
                kind: EdgeKind::ControlFlow,
                source: Endpoint {
                    node: "i".into(),
                    pin: None,
                },
                target: Endpoint {
                    node: "f".into(),
                    pin: None,
                },
                guard: None,
                interrupting: false,
                region: None,
            }],
            variables: vec![],
            partitions: vec![],
            regions: vec![],
        };
        a.variables.push(Variable {
            id: "v".into(),
            name: "x".into(),
            type_name: "Integer".into(),
            scope: "a".into(),
        });
        AdModel::new(vec![a], vec![], vec![]).unwrap()
    }

    #[test]
    fn lookup_identity() {
        let m = minimal();
        for id in m.ids() {
            assert_eq!(m.lookup(id).unwrap().id(), id);
        }
    }

    #[test]
    fn control_nodes_have_no_stereotype() {
        let m = minimal();
        assert_eq!(m.stereotype_of(&"m".into()).unwrap(), None);
        assert_eq!(m.stereotype_of(&"a".into()).unwrap(), Some(Stereotype::MainProcess));
        assert!(matches!(
            m.stereotype_of(&"nope".into()),
            Err(LookupError::UnknownId(_))
        ));
    }

    #[test]
    fn adjacency_of_initial_and_isolated() {
        let m = minimal();
        let (i, o) = m.adjacency(&"i".into()).unwrap();
        assert!(i.is_empty());
        assert_eq!(o.len(), 1);
        let (i, o) = m.adjacency(&"m".into()).unwrap();
        assert!(i.is_empty() && o.is_empty());
    }

    #[test]
    fn missing_variable_reports_chain() {
        let m = minimal();
        assert_eq!(m.resolve_variable(&"a".into(), "x").unwrap().id, "v");
        match m.resolve_variable(&"a".into(), "missing") {
            Err(LookupError::VariableNotFound { chain, .. }) => assert_eq!(chain, vec!["a"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn region_free_initial_has_no_region() {
        assert_eq!(minimal().containing_region(&"i".into()).unwrap(), None);
    }

    #[test]
    fn fresh_ids_are_unique() {
        let mut m = minimal();
        let a = m.fresh_id("g");
        let b = m.fresh_id("g");
        assert_ne!(a, b);
        assert!(!m.contains(&a));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut m = minimal();
        m.activities[0].nodes[2].id = "i".into();
        let errs = AdModel::new(m.activities, vec![], vec![]).unwrap_err();
        assert!(errs.contains(&ModelError::DuplicateId("i".into())));
    }

    #[test]
    fn stereotype_on_wrong_base_rejected() {
        let mut m = minimal();
        m.activities[0].nodes[2].stereotype = Some(Stereotype::ForEach);
        let errs = AdModel::new(m.activities, vec![], vec![]).unwrap_err();
        assert_eq!(errs[0].code(), "StereotypeBase");
    }
}
