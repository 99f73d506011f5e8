//! Workflow-profile constraints and graph well-formedness checks.
//!
//! | code | check |
//! |------|-------|
//! | WF01 | performer partitions are `Performer` and represent a `Position`/`OrgUnit` class |
//! | WF02 | `CallServiceTask` names `Component.operation` of a `WebService` component |
//! | WF03 | `ForEach` has a valued collection pin and an iterator name |
//! | WF04 | `EndSSAction` has no outgoing edges |
//! | WF05 | interrupting edges leave their region |
//! | WF06 | guards only after a decision or on an accept's output object flow |
//! | WF07 | data names (assignments, guards, communication and call pins) resolve to visible variables |
//! | WF08 | joins of differently typed objects feed a typed receiving pin |
//! | WF09 | `CallSubProcess` calls a non-main activity, matches its parameters, no recursion |
//! | WF10 | entry points of main and called activities |
//! | WF11 | performers only on manual and user tasks |
//! | WF12 | decisions have ≥2 outgoing edges, at most one unguarded |
//! | WF20 | unreachable node (warning) |
//! | WF21 | control-node arity |
//! | WF22 | region and event-placement restrictions of the executable subset |

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::ad::{
    element_type, Activity, AdModel, Edge, EdgeKind, InterruptibleRegion, Node, NodeKind, PinDirection, Stereotype,
};
use crate::id::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub element: Id,
    pub code: &'static str,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.code, self.severity, self.element, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

struct Sink(Vec<Diagnostic>);

impl Sink {
    fn err(&mut self, code: &'static str, element: &Id, message: impl Into<String>) {
        self.0.push(Diagnostic {
            element: element.clone(),
            code,
            severity: Severity::Error,
            message: message.into(),
        });
    }

    fn warn(&mut self, code: &'static str, element: &Id, message: impl Into<String>) {
        self.0.push(Diagnostic {
            element: element.clone(),
            code,
            severity: Severity::Warning,
            message: message.into(),
        });
    }
}

/// A node/edge set: the activity itself or a loop body.
struct Container<'a> {
    owner: Option<&'a Node>,
    nodes: &'a [Node],
    edges: &'a [Edge],
}

fn containers(a: &Activity) -> Vec<Container<'_>> {
    let mut out = vec![Container {
        owner: None,
        nodes: &a.nodes,
        edges: &a.edges,
    }];
    let mut i = 0;
    while i < out.len() {
        let nodes = out[i].nodes;
        for n in nodes {
            if let Some(b) = &n.body {
                out.push(Container {
                    owner: Some(n),
                    nodes: &b.nodes,
                    edges: &b.edges,
                });
            }
        }
        i += 1;
    }
    out
}

fn incoming<'a>(edges: &'a [Edge], n: &'a Id) -> impl Iterator<Item = &'a Edge> + 'a {
    edges.iter().filter(move |e| &e.target.node == n)
}

fn outgoing<'a>(edges: &'a [Edge], n: &'a Id) -> impl Iterator<Item = &'a Edge> + 'a {
    edges.iter().filter(move |e| &e.source.node == n)
}

/// Whether the accept action starts its activity: no incoming edges, top
/// level, not an interrupt source.
pub fn is_starter(a: &Activity, n: &Node) -> bool {
    n.kind.is_accept()
        && a.nodes.iter().any(|x| x.id == n.id)
        && incoming(&a.edges, &n.id).next().is_none()
        && !outgoing(&a.edges, &n.id).any(|e| e.interrupting)
}

/// Runs every rule over the whole model. Ordered by element id, then code.
pub fn validate(m: &AdModel) -> Vec<Diagnostic> {
    let mut s = Sink(Vec::new());
    for a in &m.activities {
        check_activity(m, a, &mut s);
        s.0.extend(check_graph_wellformedness(a));
    }
    check_calls(m, &mut s);
    let mut out = s.0;
    out.sort();
    out.dedup();
    out
}

fn check_activity(m: &AdModel, a: &Activity, s: &mut Sink) {
    // WF01
    for p in &a.partitions {
        if p.stereotype == Some(Stereotype::Performer) {
            let st = m.class(&p.represents).and_then(|c| c.stereotype);
            if !matches!(st, Some(Stereotype::Position | Stereotype::OrgUnit)) {
                s.err(
                    "WF01",
                    &p.id,
                    format!(
                        "performer partition represents '{}', which is neither Position nor OrgUnit",
                        p.represents
                    ),
                );
            }
        }
    }

    for c in containers(a) {
        for n in c.nodes {
            check_node(m, a, &c, n, s);
        }
        for e in c.edges {
            check_edge(m, a, &c, e, s);
        }
    }

    check_entry_points(a, s);
    check_regions(m, a, s);
}

fn check_node(m: &AdModel, a: &Activity, c: &Container<'_>, n: &Node, s: &mut Sink) {
    let scope = m.scope_of(&n.id).cloned().unwrap_or_else(|| a.id.clone());
    let resolve = |s: &mut Sink, name: &str, what: &str| {
        if let Err(e) = m.resolve_variable(&scope, name) {
            s.err("WF07", &n.id, format!("{what}: {e}"));
        }
    };

    if let Some(p) = &n.performer {
        // WF11
        if !matches!(
            n.stereotype,
            Some(Stereotype::CallManualTask | Stereotype::CallUserTask)
        ) {
            s.err("WF11", &n.id, "performer is only allowed on manual and user tasks");
        }
        // WF01
        if m.partition(p).and_then(|x| x.stereotype) != Some(Stereotype::Performer) {
            s.err(
                "WF01",
                &n.id,
                format!("performer partition '{p}' is not stereotyped Performer"),
            );
        }
    }

    match n.kind {
        NodeKind::CallOperationAction => {
            // WF02
            let op = n.operation.as_deref().unwrap_or("");
            let ok = op.split_once('.').is_some_and(|(comp, name)| {
                m.components.iter().any(|c| {
                    c.name == comp
                        && c.stereotype == Some(Stereotype::WebService)
                        && c.operations.iter().any(|o| o.name == name)
                })
            });
            if !ok {
                s.err(
                    "WF02",
                    &n.id,
                    format!("operation '{op}' is not an operation of a WebService component"),
                );
            }
        }
        NodeKind::LoopNode => {
            // WF03
            let pin = n.collection.as_ref().and_then(|c| n.pin(c));
            match pin {
                Some(p) if p.direction == PinDirection::In && p.value.is_some() => {
                    for r in p.value.as_ref().unwrap().roots() {
                        resolve(s, r, "collection");
                    }
                }
                _ => s.err("WF03", &n.id, "ForEach needs a collection input pin with a value"),
            }
            if n.iterator.as_deref().is_none_or(str::is_empty) {
                s.err("WF03", &n.id, "ForEach needs an iterator name");
            }
        }
        NodeKind::ReadVariableAction | NodeKind::WriteVariableAction => {
            if let Some(asg) = &n.assignment {
                resolve(s, &asg.target, "assignment target");
                for r in asg.expr.roots() {
                    resolve(s, r, "assignment");
                }
            }
        }
        NodeKind::AcceptEventAction => {
            for p in n.pins.iter().filter(|p| p.direction == PinDirection::Out) {
                resolve(s, &p.name, "payload pin");
            }
        }
        NodeKind::SendSignalAction => {
            if let Some(p) = n.first_pin(PinDirection::In) {
                resolve(s, &p.name, "payload pin");
            }
            // WF04
            if n.stereotype == Some(Stereotype::EndSSAction) && outgoing(c.edges, &n.id).next().is_some() {
                s.err(
                    "WF04",
                    &n.id,
                    "EndSSAction must be the final action (no outgoing edges)",
                );
            }
        }
        NodeKind::CallBehaviorAction if n.stereotype == Some(Stereotype::CallSubProcess) => {
            for p in &n.pins {
                resolve(s, &p.name, "call pin");
            }
        }
        NodeKind::ParameterNode => {
            if let Some(p) = n.pins.first() {
                resolve(s, &p.name, "parameter");
            }
        }
        NodeKind::DecisionNode => {
            // WF12
            let outs: Vec<&Edge> = outgoing(c.edges, &n.id).collect();
            let defaults = outs.iter().filter(|e| e.guard.is_none()).count();
            if outs.len() < 2 {
                s.err(
                    "WF12",
                    &n.id,
                    format!("decision needs at least 2 outgoing edges, has {}", outs.len()),
                );
            }
            if defaults > 1 {
                s.err(
                    "WF12",
                    &n.id,
                    format!("{defaults} unguarded outgoing edges; at most one default allowed"),
                );
            }
            for e in outs {
                for r in e.guard.iter().flat_map(|g| g.roots()) {
                    resolve(s, r, "guard");
                }
            }
        }
        NodeKind::JoinNode => check_join_types(c, n, s),
        _ => {}
    }

    // WF22: final and event placement.
    if c.owner.is_some() && n.kind == NodeKind::ActivityFinalNode {
        s.err("WF22", &n.id, "activity final inside a loop body is not supported");
    }
    if n.kind.is_accept() && incoming(c.edges, &n.id).next().is_none() {
        let interrupt_source = outgoing(c.edges, &n.id).any(|e| e.interrupting);
        let starter = c.owner.is_none() && a.is_main() && !a.regions.iter().any(|r| r.nodes.contains(&n.id));
        if !interrupt_source && !starter {
            s.err(
                "WF22",
                &n.id,
                "an accept without incoming edges must start a main process or interrupt a region",
            );
        }
        if starter && n.kind == NodeKind::AcceptTimerAction && !interrupt_source {
            s.err("WF22", &n.id, "a timer cannot start a process");
        }
    }
}

fn check_join_types(c: &Container<'_>, n: &Node, s: &mut Sink) {
    // WF08
    let pin_type = |node: &Id, pin: &Option<Id>| -> Option<String> {
        let owner = c.nodes.iter().find(|x| &x.id == node)?;
        Some(element_type(&owner.pin(pin.as_ref()?)?.type_name).to_string())
    };
    let types: BTreeSet<String> = incoming(c.edges, &n.id)
        .filter(|e| e.kind == EdgeKind::ObjectFlow)
        .filter_map(|e| pin_type(&e.source.node, &e.source.pin))
        .collect();
    if types.len() > 1 {
        let typed = outgoing(c.edges, &n.id)
            .filter_map(|e| pin_type(&e.target.node, &e.target.pin))
            .any(|t| types.contains(&t));
        if !typed {
            s.err(
                "WF08",
                &n.id,
                format!(
                    "join of objects typed {} needs a receiving pin of one of these types",
                    types.into_iter().collect::<Vec<_>>().join(", ")
                ),
            );
        }
    }
}

fn check_edge(m: &AdModel, a: &Activity, c: &Container<'_>, e: &Edge, s: &mut Sink) {
    let node = |id: &Id| c.nodes.iter().find(|n| &n.id == id);
    let src = node(&e.source.node);
    // WF06
    if e.guard.is_some() {
        let ok = match src {
            Some(n) if n.kind == NodeKind::DecisionNode => true,
            Some(n) if n.kind == NodeKind::AcceptEventAction => {
                e.kind == EdgeKind::ObjectFlow
                    && e.source.pin.as_ref().and_then(|p| n.pin(p)).map(|p| p.direction) == Some(PinDirection::Out)
            }
            _ => false,
        };
        if !ok {
            s.err(
                "WF06",
                &e.id,
                "guards are only allowed after a decision or on an accept's output object flow",
            );
        } else if let (Some(n), Some(g)) = (src, &e.guard) {
            if n.kind == NodeKind::AcceptEventAction {
                let scope = m.scope_of(&n.id).cloned().unwrap_or_else(|| a.id.clone());
                for r in g.roots() {
                    if let Err(err) = m.resolve_variable(&scope, r) {
                        s.err("WF07", &e.id, format!("guard: {err}"));
                    }
                }
            }
        }
    }
    // WF05
    if e.interrupting {
        match e.region.as_ref().and_then(|r| m.region(r)) {
            Some(r) => {
                if !m.in_region(&e.source.node, r) {
                    s.err(
                        "WF05",
                        &e.id,
                        format!("interrupting edge source lies outside region '{}'", r.id),
                    );
                }
                if m.in_region(&e.target.node, r) {
                    s.err(
                        "WF05",
                        &e.id,
                        format!("interrupting edge target lies inside region '{}'", r.id),
                    );
                }
            }
            None => s.err("WF05", &e.id, "interrupting edge names no region"),
        }
        if e.guard.is_some() {
            s.err("WF22", &e.id, "an interrupting edge cannot carry a guard");
        }
        if !src.is_some_and(|n| n.kind.is_accept()) {
            s.err("WF22", &e.id, "an interrupting edge must leave an accept action");
        } else if let Some(n) = src {
            if incoming(c.edges, &n.id).next().is_some() || outgoing(c.edges, &n.id).count() != 1 {
                s.err(
                    "WF22",
                    &e.id,
                    "an interrupt source accept has no incoming edges and only the interrupting edge",
                );
            }
        }
    }
}

fn check_entry_points(a: &Activity, s: &mut Sink) {
    // WF10
    let initials = a.nodes.iter().filter(|n| n.kind == NodeKind::InitialNode).count();
    let starters = a.nodes.iter().filter(|n| is_starter(a, n)).count();
    let params = a.nodes.iter().filter(|n| n.is_input_parameter()).count();
    if a.is_main() {
        match (initials, starters) {
            (1, 0) | (0, 1..) => {}
            (0, 0) => s.err(
                "WF10",
                &a.id,
                "main process needs an initial node or a starting accept action",
            ),
            (i, 0) => s.err(
                "WF10",
                &a.id,
                format!("main process has {i} initial nodes; exactly one allowed"),
            ),
            _ => s.err(
                "WF10",
                &a.id,
                "main process is started either by an initial node or by accept actions, not both",
            ),
        }
        if params > 0 {
            s.err("WF10", &a.id, "a main process has no input parameters");
        }
    } else if initials + params == 0 {
        s.err("WF10", &a.id, "activity needs an initial node or an input parameter");
    }
}

fn check_regions(m: &AdModel, a: &Activity, s: &mut Sink) {
    for r in &a.regions {
        if r.nodes.is_empty() {
            s.err("WF22", &r.id, "region is empty");
        }
        for n in &r.nodes {
            if m.enclosing_loop(n).is_some() {
                s.err("WF22", &r.id, format!("region node '{n}' is not a top-level node"));
            } else if let Some(x) = m.node(n) {
                let n_in = incoming(&a.edges, n).count();
                let outs: Vec<&Edge> = outgoing(&a.edges, n).collect();
                let interrupt_source = outs.iter().any(|e| e.interrupting);
                if x.kind == NodeKind::ActivityFinalNode {
                    s.err(
                        "WF22",
                        &r.id,
                        format!("activity final '{n}' inside a region is not supported"),
                    );
                }
                if n_in == 0 && !interrupt_source {
                    s.err(
                        "WF22",
                        n,
                        "a region node needs an incoming edge unless it interrupts the region",
                    );
                }
                let terminal = matches!(x.kind, NodeKind::FlowFinalNode | NodeKind::ActivityFinalNode)
                    || x.stereotype == Some(Stereotype::EndSSAction);
                if outs.is_empty() && !terminal {
                    s.err(
                        "WF22",
                        n,
                        "a region node needs an outgoing edge unless it is a final node",
                    );
                }
            }
        }
        for o in &a.regions {
            if o.id <= r.id {
                continue;
            }
            let rs: BTreeSet<&Id> = r.nodes.iter().collect();
            let os: BTreeSet<&Id> = o.nodes.iter().collect();
            let laminar = rs.is_disjoint(&os) || (rs != os && (rs.is_subset(&os) || os.is_subset(&rs)));
            if !laminar {
                s.err(
                    "WF22",
                    &r.id,
                    format!("regions '{}' and '{}' overlap without nesting", r.id, o.id),
                );
            }
        }
        let inside = |n: &Id| m.in_region(n, r);
        let plain = a.edges.iter().filter(|e| !e.interrupting);
        let entering = plain
            .clone()
            .filter(|e| !inside(&e.source.node) && inside(&e.target.node))
            .count();
        let exiting = plain
            .filter(|e| inside(&e.source.node) && !inside(&e.target.node))
            .count();
        if entering != 1 {
            s.err(
                "WF22",
                &r.id,
                format!("region needs exactly one entering edge, has {entering}"),
            );
        }
        if exiting > 1 {
            s.err(
                "WF22",
                &r.id,
                format!("region has {exiting} exiting edges; at most one allowed"),
            );
        }
    }
    let innermost = |n: &Id| m.containing_region(n).ok().flatten().cloned();
    let parent = |r: &Option<Id>| -> Option<Id> {
        let r = r.as_ref()?;
        m.enclosing_regions(a, r).first().map(|x| x.id.clone())
    };
    for e in &a.edges {
        if e.interrupting {
            // Edges already rejected by WF05 are not checked twice.
            let leaves = e
                .region
                .as_ref()
                .and_then(|r| m.region(r))
                .is_some_and(|r| m.in_region(&e.source.node, r) && !m.in_region(&e.target.node, r));
            if !leaves {
                continue;
            }
        }
        let (rs, rt) = (innermost(&e.source.node), innermost(&e.target.node));
        let ok = if e.interrupting {
            rs == e.region && rt == parent(&e.region)
        } else {
            rs == rt || parent(&rt) == rs || parent(&rs) == rt
        };
        if !ok {
            s.err("WF22", &e.id, "edge crosses more than one region boundary");
        }
    }
}

fn check_calls(m: &AdModel, s: &mut Sink) {
    // WF09
    let mut calls: BTreeMap<&Id, Vec<&Id>> = BTreeMap::new();
    for a in &m.activities {
        for c in containers(a) {
            for n in c.nodes {
                if n.stereotype != Some(Stereotype::CallSubProcess) {
                    continue;
                }
                let Some(callee) = n.behavior.as_ref().and_then(|b| m.activity(b)) else {
                    continue;
                };
                calls.entry(&a.id).or_default().push(&callee.id);
                if callee.is_main() {
                    s.err("WF09", &n.id, format!("calls main process '{}'", callee.name));
                    continue;
                }
                for p in &n.pins {
                    let matching = callee.parameters().any(|q| {
                        q.pins
                            .first()
                            .is_some_and(|qp| qp.name == p.name && qp.direction == p.direction)
                    });
                    if !matching {
                        s.err(
                            "WF09",
                            &n.id,
                            format!("pin '{}' matches no parameter of '{}'", p.name, callee.name),
                        );
                    }
                }
            }
        }
    }
    for a in &m.activities {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&Id> = calls.get(&a.id).into_iter().flatten().copied().collect();
        while let Some(c) = queue.pop_front() {
            if c == &a.id {
                s.err("WF09", &a.id, "activity calls itself (directly or indirectly)");
                break;
            }
            if seen.insert(c) {
                queue.extend(calls.get(c).into_iter().flatten().copied());
            }
        }
    }
}

/// Reachability (WF20) and control-node arity (WF21) for one activity.
pub fn check_graph_wellformedness(a: &Activity) -> Vec<Diagnostic> {
    let mut s = Sink(Vec::new());
    for c in containers(a) {
        let entry = |n: &Node| match n.kind {
            NodeKind::InitialNode => true,
            NodeKind::ParameterNode => n.is_input_parameter(),
            k if k.is_control() => false,
            _ => incoming(c.edges, &n.id).next().is_none(),
        };
        let mut reached: BTreeSet<&Id> = c.nodes.iter().filter(|n| entry(n)).map(|n| &n.id).collect();
        let mut queue: VecDeque<&Id> = reached.iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            for e in outgoing(c.edges, n) {
                if reached.insert(&e.target.node) {
                    queue.push_back(&e.target.node);
                }
            }
        }
        for n in c.nodes {
            if !reached.contains(&n.id) {
                s.warn("WF20", &n.id, "node is not reachable from any entry point");
            }
            let n_in = incoming(c.edges, &n.id).count();
            let n_out = outgoing(c.edges, &n.id).count();
            let arity = match n.kind {
                NodeKind::ForkNode if n_in != 1 || n_out < 2 => Some(format!(
                    "fork needs 1 incoming and at least 2 outgoing edges, has {n_in}/{n_out}"
                )),
                NodeKind::JoinNode if n_in < 2 || n_out != 1 => Some(format!(
                    "join needs at least 2 incoming and 1 outgoing edge, has {n_in}/{n_out}"
                )),
                NodeKind::MergeNode if n_out != 1 => Some(format!("merge needs exactly 1 outgoing edge, has {n_out}")),
                NodeKind::InitialNode if n_in > 0 => Some("initial node has incoming edges".to_string()),
                NodeKind::ActivityFinalNode | NodeKind::FlowFinalNode if n_out > 0 => {
                    Some("final node has outgoing edges".to_string())
                }
                NodeKind::ParameterNode if n.is_input_parameter() && n_in > 0 => {
                    Some("input parameter has incoming edges".to_string())
                }
                NodeKind::ParameterNode if !n.is_input_parameter() && n_out > 0 => {
                    Some("output parameter has outgoing edges".to_string())
                }
                _ => None,
            };
            if let Some(msg) = arity {
                s.err("WF21", &n.id, msg);
            }
        }
    }
    s.0.sort();
    s.0
}

/// Regions of an activity, innermost first for each node.
pub fn region_chain<'a>(m: &'a AdModel, a: &'a Activity, node: &Id) -> Vec<&'a InterruptibleRegion> {
    let Ok(Some(r)) = m.containing_region(node) else {
        return Vec::new();
    };
    let mut out: Vec<&InterruptibleRegion> = a.regions.iter().filter(|x| &x.id == r).collect();
    out.extend(m.enclosing_regions(a, r));
    out
}
