//! Graphviz export for both model kinds.
//!
//! AD: every main activity and every interruptible region becomes a cluster
//! (regions nest); other activities and loop bodies are plain subgraphs.
//! BPMN: pools and subprocesses become clusters. A subprocess is drawn as an
//! invisible anchor node inside its cluster so that flows can clip to the
//! cluster border.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::ad::{Activity, AdModel, Edge, EdgeKind, InterruptibleRegion, Node, NodeKind};
use crate::bpmn::{BpmnModel, EndResult, FlowKind, GatewayKind, Process};
use crate::id::Id;

fn q(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn indent(depth: usize) -> String {
    "  ".repeat(depth)
}

fn ad_node_attrs(n: &Node) -> String {
    let label = match n.stereotype {
        Some(s) => format!("«{}»\n{}", s.name(), n.name),
        None => n.name.clone(),
    };
    let shape = match n.kind {
        NodeKind::InitialNode => "shape=circle, style=filled, fillcolor=black, width=0.25",
        NodeKind::ActivityFinalNode => "shape=doublecircle, style=filled, fillcolor=black, width=0.2",
        NodeKind::FlowFinalNode => "shape=circle, width=0.25",
        NodeKind::DecisionNode | NodeKind::MergeNode => "shape=diamond",
        NodeKind::ForkNode | NodeKind::JoinNode => "shape=box, style=filled, fillcolor=black, height=0.08",
        NodeKind::AcceptEventAction => "shape=invhouse",
        NodeKind::AcceptTimerAction => "shape=invtriangle",
        NodeKind::SendSignalAction => "shape=cds",
        NodeKind::ParameterNode => "shape=box",
        _ => "shape=box, style=rounded",
    };
    let label = if matches!(
        n.kind,
        NodeKind::InitialNode | NodeKind::ActivityFinalNode | NodeKind::FlowFinalNode
    ) {
        String::new()
    } else {
        label
    };
    format!("label={}, {shape}", q(&label))
}

fn ad_edge(out: &mut String, depth: usize, e: &Edge) {
    let mut attrs = Vec::new();
    if e.kind == EdgeKind::ObjectFlow {
        attrs.push("style=dashed".to_string());
    }
    if let Some(g) = &e.guard {
        attrs.push(format!("label={}", q(&format!("[{g}]"))));
    }
    if e.interrupting {
        attrs.push("color=red, penwidth=2, arrowhead=vee".into());
    }
    let _ = write!(
        out,
        "{}{} -> {}",
        indent(depth),
        q(e.source.node.as_str()),
        q(e.target.node.as_str())
    );
    if !attrs.is_empty() {
        let _ = write!(out, " [{}]", attrs.join(", "));
    }
    out.push_str(";\n");
}

fn ad_nodes(out: &mut String, depth: usize, nodes: &[&Node]) {
    for n in nodes {
        let _ = writeln!(out, "{}{} [{}];", indent(depth), q(n.id.as_str()), ad_node_attrs(n));
        if let Some(body) = &n.body {
            let _ = writeln!(out, "{}subgraph {} {{", indent(depth), q(&format!("loop_{}", n.id)));
            let inner: Vec<&Node> = body.nodes.iter().collect();
            ad_nodes(out, depth + 1, &inner);
            for e in &body.edges {
                ad_edge(out, depth + 1, e);
            }
            let _ = writeln!(out, "{}}}", indent(depth));
        }
    }
}

struct RegionTree<'a> {
    /// Region → parent region (None for outermost).
    parent: BTreeMap<&'a Id, Option<&'a Id>>,
    /// Top-level node → innermost region.
    home: BTreeMap<&'a Id, &'a Id>,
}

fn region_tree<'a>(a: &'a Activity) -> RegionTree<'a> {
    let within = |inner: &InterruptibleRegion, outer: &InterruptibleRegion| {
        outer.id != inner.id
            && outer.nodes.len() > inner.nodes.len()
            && inner.nodes.iter().all(|n| outer.nodes.contains(n))
    };
    let mut parent = BTreeMap::new();
    for r in &a.regions {
        let p = a
            .regions
            .iter()
            .filter(|o| within(r, o))
            .min_by_key(|o| o.nodes.len())
            .map(|o| &o.id);
        parent.insert(&r.id, p);
    }
    let mut home = BTreeMap::new();
    for n in &a.nodes {
        if let Some(r) = a
            .regions
            .iter()
            .filter(|r| r.nodes.contains(&n.id))
            .min_by_key(|r| r.nodes.len())
        {
            home.insert(&n.id, &r.id);
        }
    }
    RegionTree { parent, home }
}

fn ad_region(out: &mut String, depth: usize, a: &Activity, tree: &RegionTree<'_>, region: Option<&Id>) {
    let nodes: Vec<&Node> = a
        .nodes
        .iter()
        .filter(|n| tree.home.get(&n.id).copied() == region)
        .collect();
    ad_nodes(out, depth, &nodes);
    for r in &a.regions {
        if tree.parent[&r.id] == region {
            let _ = writeln!(out, "{}subgraph {} {{", indent(depth), q(&format!("cluster_{}", r.id)));
            let _ = writeln!(out, "{}label={};", indent(depth + 1), q(&r.name));
            let _ = writeln!(out, "{}style=dashed;", indent(depth + 1));
            ad_region(out, depth + 1, a, tree, Some(&r.id));
            let _ = writeln!(out, "{}}}", indent(depth));
        }
    }
}

/// Renders an activity model.
pub fn ad_to_dot(m: &AdModel) -> String {
    let mut out = String::from("digraph \"ad\" {\n  compound=true;\n  node [fontname=\"Helvetica\"];\n");
    for a in &m.activities {
        let name = if a.is_main() {
            format!("cluster_{}", a.id)
        } else {
            format!("activity_{}", a.id)
        };
        let _ = writeln!(out, "  subgraph {} {{", q(&name));
        let _ = writeln!(out, "    label={};", q(&a.name));
        let tree = region_tree(a);
        ad_region(&mut out, 2, a, &tree, None);
        for e in &a.edges {
            ad_edge(&mut out, 2, e);
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn bpmn_process(out: &mut String, depth: usize, p: &Process, subs: &BTreeMap<&Id, ()>) {
    let pad = indent(depth);
    for o in &p.flow_objects {
        let id = q(o.id.as_str());
        match &o.kind {
            FlowKind::Subprocess(s) => {
                let _ = writeln!(out, "{pad}subgraph {} {{", q(&format!("cluster_{}", o.id)));
                let label = match &s.multi_instance {
                    Some(mi) => format!("{} ≡ {} in {}", o.name, mi.iterator, mi.collection),
                    None => o.name.clone(),
                };
                let _ = writeln!(out, "{pad}  label={};", q(&label));
                let _ = writeln!(out, "{pad}  style=rounded;");
                let _ = writeln!(out, "{pad}  {id} [shape=point, style=invis, label=\"\"];");
                bpmn_process(out, depth + 1, &s.body, subs);
                let _ = writeln!(out, "{pad}}}");
            }
            FlowKind::StartEvent { .. } => {
                let _ = writeln!(out, "{pad}{id} [label={}, shape=circle];", q(&o.name));
            }
            FlowKind::EndEvent { result } => {
                let extra = match result {
                    EndResult::Terminate => ", style=filled, fillcolor=black, fontcolor=white",
                    _ => ", penwidth=3",
                };
                let _ = writeln!(out, "{pad}{id} [label={}, shape=circle{extra}];", q(&o.name));
            }
            FlowKind::IntermediateEvent { .. } => {
                let _ = writeln!(out, "{pad}{id} [label={}, shape=doublecircle];", q(&o.name));
            }
            FlowKind::Task(t) => {
                let label = format!("«{}»\n{}", t.task_type.name(), o.name);
                let _ = writeln!(out, "{pad}{id} [label={}, shape=box, style=rounded];", q(&label));
            }
            FlowKind::Gateway { gate } => {
                let mark = match gate {
                    GatewayKind::ExclusiveData => "X",
                    GatewayKind::Parallel => "+",
                };
                let _ = writeln!(
                    out,
                    "{pad}{id} [label=\"{mark}\", xlabel={}, shape=diamond];",
                    q(&o.name)
                );
            }
        }
    }
    for f in &p.sequence_flows {
        let mut attrs = Vec::new();
        if subs.contains_key(&f.source) {
            attrs.push(format!("ltail={}", q(&format!("cluster_{}", f.source))));
        }
        if subs.contains_key(&f.target) {
            attrs.push(format!("lhead={}", q(&format!("cluster_{}", f.target))));
        }
        if let Some(c) = &f.condition {
            attrs.push(format!("label={}", q(&format!("[{c}]"))));
        }
        let _ = write!(out, "{pad}{} -> {}", q(f.source.as_str()), q(f.target.as_str()));
        if !attrs.is_empty() {
            let _ = write!(out, " [{}]", attrs.join(", "));
        }
        out.push_str(";\n");
    }
    for o in &p.flow_objects {
        if let FlowKind::IntermediateEvent {
            attached_to: Some(host),
            ..
        } = &o.kind
        {
            let _ = writeln!(
                out,
                "{pad}{} -> {} [style=dashed, arrowhead=none, ltail={}];",
                q(host.as_str()),
                q(o.id.as_str()),
                q(&format!("cluster_{host}"))
            );
        }
    }
}

/// Renders a BPMN model.
pub fn bpmn_to_dot(m: &BpmnModel) -> String {
    let mut out = String::from("digraph \"bpmn\" {\n  compound=true;\n  node [fontname=\"Helvetica\"];\n");
    let subs: BTreeMap<&Id, ()> = m
        .flow_objects()
        .filter(|o| matches!(o.kind, FlowKind::Subprocess(_)))
        .map(|o| (&o.id, ()))
        .collect();
    for pool in &m.pools {
        let _ = writeln!(out, "  subgraph {} {{", q(&format!("cluster_{}", pool.id)));
        let _ = writeln!(out, "    label={};", q(&pool.name));
        bpmn_process(&mut out, 2, &pool.process, &subs);
        out.push_str("  }\n");
    }
    for mf in &m.message_flows {
        let label = m.message(&mf.message).map(|x| x.name.as_str()).unwrap_or("");
        let _ = writeln!(
            out,
            "  {} -> {} [style=dashed, arrowhead=empty, constraint=false, label={}];",
            q(mf.source.as_str()),
            q(mf.target.as_str()),
            q(label)
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bpmn() {
        let d = bpmn_to_dot(&BpmnModel::new());
        assert!(d.starts_with("digraph"));
        assert!(!d.contains("->"));
        assert!(!d.contains("subgraph"));
    }

    #[test]
    fn quoting() {
        assert_eq!(q("a\"b\\c"), "\"a\\\"b\\\\c\"");
    }
}
