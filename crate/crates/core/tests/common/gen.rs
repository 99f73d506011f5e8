//! Seeded generator of validator-accepted activity models built from
//! structured blocks (sequence, fork/join, decision/merge, loop, region).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use wfmt::ad::AdModel;
use wfmt::bpmn::BpmnModel;
use wfmt::transform::TransformationTrace;

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_depth: u32,
    pub allow_loops: bool,
    pub allow_regions: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 3,
            allow_loops: true,
            allow_regions: true,
        }
    }
}

struct Builder<'r> {
    rng: &'r mut ChaCha8Rng,
    cfg: GenConfig,
    prefix: String,
    n: usize,
    nodes: Vec<Value>,
    edges: Vec<Value>,
    regions: Vec<Value>,
    budget: usize,
}

const TASKS: [&str; 3] = ["CallScriptTask", "CallManualTask", "CallUserTask"];

impl Builder<'_> {
    fn fresh(&mut self, tag: &str) -> String {
        self.n += 1;
        format!("{}_{tag}{}", self.prefix, self.n)
    }

    fn edge(edges: &mut Vec<Value>, id: String, source: &str, target: &str) {
        edges.push(json!({ "id": id, "kind": "control", "source": source, "target": target }));
    }

    fn link(&mut self, source: &str, target: &str) {
        let id = self.fresh("e");
        Self::edge(&mut self.edges, id, source, target);
    }

    fn task(&mut self) -> Value {
        let id = self.fresh("t");
        let name = format!("Task {id}");
        if self.rng.gen_bool(0.2) {
            return json!({ "id": id, "kind": "CallOperationAction", "name": name,
                           "stereotype": "CallServiceTask", "operation": "Svc.op" });
        }
        let st = *TASKS.choose(self.rng).unwrap();
        json!({ "id": id, "kind": "CallBehaviorAction", "name": name, "stereotype": st })
    }

    fn add(&mut self, v: Value) -> String {
        let id = v["id"].as_str().unwrap().to_string();
        self.nodes.push(v);
        id
    }

    /// Appends a block after `entry`; returns the node that needs an outgoing edge.
    fn block(&mut self, entry: &str, depth: u32, top: bool) -> String {
        self.budget = self.budget.saturating_sub(1);
        let leaf = depth == 0 || self.budget == 0;
        let roll = if leaf { 0 } else { self.rng.gen_range(0..10) };
        match roll {
            0..=3 => {
                let t = self.task();
                let id = self.add(t);
                self.link(entry, &id);
                id
            }
            4 => {
                let id = self.fresh("w");
                let id = self.add(
                    json!({ "id": id, "kind": "WriteVariableAction", "name": format!("Bump {id}"),
                                          "assign": "x := x + 1" }),
                );
                self.link(entry, &id);
                id
            }
            5 | 6 => {
                let fork = self.fresh("fork");
                let fork = self.add(json!({ "id": fork, "kind": "ForkNode", "name": fork }));
                self.link(entry, &fork);
                let join = self.fresh("join");
                let branches: Vec<String> = (0..self.rng.gen_range(2..=3))
                    .map(|_| self.block(&fork, depth - 1, false))
                    .collect();
                let join = self.add(json!({ "id": join, "kind": "JoinNode", "name": join }));
                for b in branches {
                    self.link(&b, &join);
                }
                join
            }
            7 => {
                let dec = self.fresh("dec");
                let dec = self.add(json!({ "id": dec, "kind": "DecisionNode", "name": dec }));
                self.link(entry, &dec);
                let k = self.rng.gen_range(2..=3);
                let mut ends = Vec::new();
                for i in 0..k {
                    let before = self.edges.len();
                    let b = self.block(&dec, depth - 1, false);
                    if i + 1 < k {
                        self.edges[before]["guard"] = json!(format!("x > {}", self.rng.gen_range(0..4)));
                    }
                    ends.push(b);
                }
                let merge = self.fresh("merge");
                let merge = self.add(json!({ "id": merge, "kind": "MergeNode", "name": merge }));
                for b in ends {
                    self.link(&b, &merge);
                }
                merge
            }
            8 if self.cfg.allow_loops => {
                let id = self.fresh("loop");
                let pin = format!("{id}_items");
                let mut body_nodes = Vec::new();
                let mut body_edges = Vec::new();
                let mut prev: Option<String> = None;
                for _ in 0..self.rng.gen_range(0..=2) {
                    let t = self.task();
                    let tid = t["id"].as_str().unwrap().to_string();
                    body_nodes.push(t);
                    if let Some(p) = prev {
                        let e = self.fresh("e");
                        Self::edge(&mut body_edges, e, &p, &tid);
                    }
                    prev = Some(tid);
                }
                let id = self.add(json!({
                    "id": id, "kind": "LoopNode", "name": format!("Loop {id}"), "stereotype": "ForEach",
                    "pins": [{ "id": pin, "name": "items", "type": "Integer[*]", "direction": "in", "value": "list" }],
                    "collection": pin, "iterator": "it",
                    "body": { "nodes": body_nodes, "edges": body_edges }
                }));
                self.link(entry, &id);
                id
            }
            9 if self.cfg.allow_regions && top => {
                let mut members = Vec::new();
                let mut prev = entry.to_string();
                for _ in 0..self.rng.gen_range(1..=3) {
                    let t = self.task();
                    let id = self.add(t);
                    self.link(&prev, &id);
                    members.push(json!(id));
                    prev = id;
                }
                let rid = self.fresh("r");
                let acc = self.fresh("abort");
                let acc = self.add(
                    json!({ "id": acc, "kind": "AcceptEventAction", "name": format!("Receive {acc}"),
                                           "stereotype": "IntermAEAction", "operation": "Abort" }),
                );
                members.push(json!(acc));
                let handler = self.task();
                let handler = self.add(handler);
                let stop = self.fresh("stop");
                let stop = self.add(json!({ "id": stop, "kind": "FlowFinalNode", "name": stop }));
                let e = self.fresh("e");
                self.edges
                    .push(json!({ "id": e, "kind": "control", "source": acc, "target": handler, "interrupts": rid }));
                self.link(&handler, &stop);
                self.regions
                    .push(json!({ "id": rid, "name": format!("Region {rid}"), "nodes": members }));
                // Leave the region before anything else follows it.
                let after = self.task();
                let after = self.add(after);
                self.link(&prev, &after);
                after
            }
            _ => {
                let t = self.task();
                let id = self.add(t);
                self.link(entry, &id);
                id
            }
        }
    }
}

fn variables(prefix: &str) -> Value {
    json!([
        { "id": format!("{prefix}_var_x"), "name": "x", "type": "Integer" },
        { "id": format!("{prefix}_var_list"), "name": "list", "type": "Integer[*]" }
    ])
}

/// Event script driving a generated model: start it, then try to interrupt.
pub const GEN_SCRIPT: &str = "recv \"Main\" Go [1, 2]\nrecv \"Main\" Abort {}\n";

/// One ADM-JSON document; the same seed always yields the same text.
pub fn gen_model_json(seed: u64, cfg: GenConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_pools = rng.gen_bool(0.5);
    let mut activities = Vec::new();

    let mut b = Builder {
        rng: &mut rng,
        cfg,
        prefix: "a".into(),
        n: 0,
        nodes: Vec::new(),
        edges: Vec::new(),
        regions: Vec::new(),
        budget: 12,
    };
    // The start message binds `list`; `x` is set right after.
    b.add(json!({ "id": "a_go", "kind": "AcceptEventAction", "name": "Receive Go",
                  "stereotype": "IntermAEAction", "operation": "Go",
                  "pins": [{ "id": "a_go_out", "name": "list", "type": "Integer[*]", "direction": "out" }] }));
    let k = b.rng.gen_range(0..4);
    let mut last = b.add(json!({ "id": "a_setx", "kind": "WriteVariableAction", "name": "Set X",
                                 "assign": format!("x := {k}") }));
    b.edges
        .push(json!({ "id": "a_obj", "kind": "object", "source": "a_go_out", "target": "a_setx" }));
    for _ in 0..b.rng.gen_range(1..=3) {
        last = b.block(&last, cfg.max_depth, true);
    }
    if two_pools {
        let send = b.add(json!({ "id": "a_send", "kind": "SendSignalAction", "name": "Send Ping",
                                 "stereotype": "IntermSSAction", "operation": "Ping",
                                 "pins": [{ "id": "a_send_in", "name": "x", "type": "Integer", "direction": "in" }] }));
        b.link(&last, &send);
        last = send;
    }
    let fin = b.add(json!({ "id": "a_final", "kind": "ActivityFinalNode", "name": "End" }));
    b.link(&last, &fin);
    activities.push(json!({
        "id": "a", "name": "Main", "stereotype": "MainProcess",
        "nodes": b.nodes, "edges": b.edges, "variables": variables("a"), "regions": b.regions
    }));

    if two_pools {
        let mut b = Builder {
            rng: &mut rng,
            // Nothing binds `list` here.
            cfg: GenConfig {
                allow_regions: false,
                allow_loops: false,
                ..cfg
            },
            prefix: "b".into(),
            n: 0,
            nodes: Vec::new(),
            edges: Vec::new(),
            regions: Vec::new(),
            budget: 6,
        };
        b.add(json!({ "id": "b_recv", "kind": "AcceptEventAction", "name": "Receive Ping",
                                 "stereotype": "IntermAEAction", "operation": "Ping",
                                 "pins": [{ "id": "b_recv_out", "name": "x", "type": "Integer", "direction": "out" }] }));
        let first = b.task();
        let first = b.add(first);
        b.edges
            .push(json!({ "id": "b_obj", "kind": "object", "source": "b_recv_out", "target": first }));
        let mut last = first;
        for _ in 0..b.rng.gen_range(0..=2) {
            last = b.block(&last, 2, false);
        }
        let fin = b.add(json!({ "id": "b_final", "kind": "FlowFinalNode", "name": "End" }));
        b.link(&last, &fin);
        activities.push(json!({
            "id": "b", "name": "Partner", "stereotype": "MainProcess",
            "nodes": b.nodes, "edges": b.edges, "variables": variables("b")
        }));
    }

    let doc = json!({
        "classes": [],
        "components": [{ "id": "cmp_svc", "name": "Svc", "stereotype": "WebService",
                         "operations": [{ "name": "op", "in": [], "out": [] }] }],
        "activities": activities
    });
    serde_json::to_string_pretty(&doc).unwrap()
}

pub fn has_regions_or_loops(m: &AdModel) -> bool {
    m.activities
        .iter()
        .any(|a| !a.regions.is_empty() || a.nodes.iter().any(|n| n.body.is_some()))
}

/// Flow count and per-node degree preservation; `Err` names the first breach.
pub fn check_shape(ad: &AdModel, bpmn: &BpmnModel, trace: &TransformationTrace) -> Result<(), String> {
    let edges: usize = ad.activities.iter().map(|a| a.edges.len()).sum();
    let flows = bpmn.sequence_flow_count();
    if flows != edges {
        return Err(format!("{flows} sequence flows for {edges} activity edges"));
    }
    for a in &ad.activities {
        for n in &a.nodes {
            let target = trace
                .id_map
                .get(&n.id)
                .ok_or_else(|| format!("node {} not mapped", n.id))?;
            let site = bpmn.locate(target).ok_or_else(|| format!("{target} not in model"))?;
            let p = site.process;
            let ad_in = a.edges.iter().filter(|e| e.target.node == n.id).count();
            let ad_out = a.edges.iter().filter(|e| e.source.node == n.id).count();
            let (b_in, b_out) = (p.incoming(target).count(), p.outgoing(target).count());
            if (ad_in, ad_out) != (b_in, b_out) {
                return Err(format!("{}: degree {ad_in}/{ad_out} became {b_in}/{b_out}", n.id));
            }
        }
    }
    Ok(())
}
