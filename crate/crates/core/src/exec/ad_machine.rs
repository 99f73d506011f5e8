//! Token game over activity diagrams.
//!
//! Tokens sit on edges. A frame is one running container: a process
//! instance, a called activity or one loop iteration. Called activities see
//! only their own variables; loop iterations also see the enclosing frames.

use std::collections::{BTreeMap, BTreeSet};

use crate::ad::{Activity, AdModel, Edge, Node, NodeKind, PinDirection, Stereotype};
use crate::exec::engine::{ExecutionTrace, Halt, Machine, Observable, Transition};
use crate::exec::mailbox::Mailbox;
use crate::exec::{eval_expr, Value, VarEnv};
use crate::id::Id;
use crate::io::events::EventScript;
use crate::validate::is_starter;

struct RegionRt<'m> {
    name: &'m str,
    member: Vec<bool>,
}

enum Trigger<'m> {
    Message { signal: &'m str, var: Option<&'m str> },
    Timer(&'m str),
}

/// An accept that interrupts a region.
struct Handler<'m> {
    node: usize,
    region: usize,
    edge: usize,
    trigger: Trigger<'m>,
}

struct Graph<'m> {
    /// Called activities start a fresh variable chain.
    isolated: bool,
    nodes: Vec<&'m Node>,
    edges: Vec<&'m Edge>,
    /// (source, target) node index per edge.
    ends: Vec<(usize, usize)>,
    inc: Vec<Vec<usize>>,
    out: Vec<Vec<usize>>,
    entry: Vec<usize>,
    start: Vec<bool>,
    vars: Vec<&'m str>,
    child: Vec<Option<usize>>,
    regions: Vec<RegionRt<'m>>,
    handlers: Vec<Handler<'m>>,
    /// Starters and interrupt sources never fire from tokens.
    passive: Vec<bool>,
}

struct PoolRt<'m> {
    name: &'m str,
    graph: usize,
    starters: Vec<usize>,
    signals: BTreeSet<&'m str>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Frame {
    graph: usize,
    tokens: Vec<u16>,
    start: Vec<bool>,
    vars: BTreeMap<String, Value>,
    children: BTreeMap<usize, Child>,
}

impl Frame {
    fn is_empty(&self) -> bool {
        self.children.is_empty() && self.tokens.iter().all(|t| *t == 0) && !self.start.iter().any(|s| *s)
    }

    fn clear(&mut self) {
        self.tokens.iter_mut().for_each(|t| *t = 0);
        self.start.iter_mut().for_each(|s| *s = false);
        self.children.clear();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Child {
    frame: Frame,
    /// Loop items still to iterate.
    rest: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Instance {
    pool: usize,
    frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdState {
    instances: Vec<Instance>,
    mail: Mailbox,
}

enum Consume {
    Start,
    Edges(Vec<usize>),
}

type Key = (String, usize, Vec<usize>);
type Outcome = (Vec<Observable>, Result<AdState, Halt>);

pub struct AdMachine<'m> {
    script: &'m EventScript,
    graphs: Vec<Graph<'m>>,
    pools: Vec<PoolRt<'m>>,
}

fn frame_mut<'a>(st: &'a mut AdState, i: usize, path: &[usize]) -> &'a mut Frame {
    let mut f = &mut st.instances[i].frame;
    for n in path {
        f = &mut f.children.get_mut(n).expect("live path").frame;
    }
    f
}

fn frame_at<'a>(st: &'a AdState, i: usize, path: &[usize]) -> &'a Frame {
    let mut f = &st.instances[i].frame;
    for n in path {
        f = &f.children[n].frame;
    }
    f
}

fn find_completable(f: &Frame) -> Option<Vec<usize>> {
    for (n, c) in &f.children {
        if c.frame.is_empty() {
            return Some(vec![*n]);
        }
        if let Some(mut p) = find_completable(&c.frame) {
            p.insert(0, *n);
            return Some(p);
        }
    }
    None
}

fn signal_of(n: &Node) -> &str {
    n.signal().unwrap_or(&n.name)
}

impl<'m> AdMachine<'m> {
    /// Expects a model without validation errors.
    pub fn new(model: &'m AdModel, script: &'m EventScript) -> Self {
        let mut m = AdMachine {
            script,
            graphs: Vec::new(),
            pools: Vec::new(),
        };
        let index: BTreeMap<&Id, usize> = model.activities.iter().enumerate().map(|(i, a)| (&a.id, i)).collect();
        // Activity graphs take the first slots so calls can refer to them.
        let mut pending = Vec::new();
        for a in &model.activities {
            pending.push(m.compile(&index, a, &a.id, &a.nodes, &a.edges, true));
        }
        let loops = std::mem::take(&mut m.graphs);
        m.graphs = pending;
        m.graphs.extend(loops);
        let shift = model.activities.len();
        for g in m.graphs.iter_mut() {
            for (c, n) in g.child.iter_mut().zip(&g.nodes) {
                if let (Some(x), NodeKind::LoopNode) = (c.as_mut(), n.kind) {
                    *x += shift;
                }
            }
        }
        for (i, a) in model.activities.iter().enumerate() {
            if !a.is_main() {
                continue;
            }
            let g = &m.graphs[i];
            let starters = (0..g.nodes.len()).filter(|&n| is_starter(a, g.nodes[n])).collect();
            let mut signals = BTreeSet::new();
            let mut seen = BTreeSet::new();
            collect_signals(model, a, &mut seen, &mut signals);
            m.pools.push(PoolRt {
                name: &a.name,
                graph: i,
                starters,
                signals,
            });
        }
        m
    }

    /// Builds the graph of one container. Loop bodies are pushed onto
    /// `self.graphs` (indices are fixed up by the caller).
    fn compile(
        &mut self,
        index: &BTreeMap<&Id, usize>,
        a: &'m Activity,
        scope: &'m Id,
        nodes: &'m [Node],
        edges: &'m [Edge],
        top: bool,
    ) -> Graph<'m> {
        let pos: BTreeMap<&Id, usize> = nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
        let mut inc = vec![Vec::new(); nodes.len()];
        let mut out = vec![Vec::new(); nodes.len()];
        let mut kept = Vec::new();
        let mut ends = Vec::new();
        for e in edges {
            if let (Some(&s), Some(&t)) = (pos.get(&e.source.node), pos.get(&e.target.node)) {
                out[s].push(kept.len());
                inc[t].push(kept.len());
                kept.push(e);
                ends.push((s, t));
            }
        }
        let mut entry = Vec::new();
        let mut start = vec![false; nodes.len()];
        let mut child = vec![None; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if n.kind == NodeKind::InitialNode || n.is_input_parameter() {
                entry.extend(out[i].iter().copied());
            } else if inc[i].is_empty() && !n.kind.is_accept() && n.kind != NodeKind::ParameterNode {
                start[i] = true;
            }
            if n.kind == NodeKind::LoopNode {
                let body = n.body.as_ref().expect("loop body");
                let g = self.compile(index, a, &n.id, &body.nodes, &body.edges, false);
                self.graphs.push(g);
                child[i] = Some(self.graphs.len() - 1);
            } else if n.kind == NodeKind::CallBehaviorAction && n.stereotype == Some(Stereotype::CallSubProcess) {
                child[i] = n.behavior.as_ref().and_then(|b| index.get(b)).copied();
            }
        }
        let mut regions = Vec::new();
        let mut handlers = Vec::new();
        let mut passive = vec![false; nodes.len()];
        if top {
            for r in &a.regions {
                regions.push(RegionRt {
                    name: &r.name,
                    member: nodes.iter().map(|n| r.nodes.contains(&n.id)).collect(),
                });
            }
            for (ei, e) in kept.iter().enumerate() {
                if !e.interrupting {
                    continue;
                }
                let node = pos[&e.source.node];
                let Some(region) = e
                    .region
                    .as_ref()
                    .and_then(|r| a.regions.iter().position(|x| &x.id == r))
                else {
                    continue;
                };
                let n = &nodes[node];
                let trigger = match n.kind {
                    NodeKind::AcceptTimerAction => Trigger::Timer(&n.name),
                    _ => Trigger::Message {
                        signal: signal_of(n),
                        var: n.first_pin(PinDirection::Out).map(|p| p.name.as_str()),
                    },
                };
                passive[node] = true;
                handlers.push(Handler {
                    node,
                    region,
                    edge: ei,
                    trigger,
                });
            }
            if a.is_main() {
                for (i, n) in nodes.iter().enumerate() {
                    if is_starter(a, n) {
                        passive[i] = true;
                    }
                }
            }
        }
        Graph {
            isolated: top,
            nodes: nodes.iter().collect(),
            edges: kept,
            ends,
            inc,
            out,
            entry,
            start,
            vars: a
                .variables
                .iter()
                .filter(|v| &v.scope == scope)
                .map(|v| v.name.as_str())
                .collect(),
            child,
            regions,
            handlers,
            passive,
        }
    }

    fn new_frame(&self, graph: usize) -> Frame {
        let g = &self.graphs[graph];
        let mut tokens = vec![0; g.edges.len()];
        for &e in &g.entry {
            tokens[e] += 1;
        }
        Frame {
            graph,
            tokens,
            start: g.start.clone(),
            vars: g.vars.iter().map(|v| (v.to_string(), Value::Null)).collect(),
            children: BTreeMap::new(),
        }
    }

    fn env_at(&self, st: &AdState, i: usize, path: &[usize]) -> VarEnv {
        let mut f = &st.instances[i].frame;
        let mut frames = vec![f.vars.clone()];
        for n in path {
            f = &f.children[n].frame;
            if self.graphs[f.graph].isolated {
                frames.clear();
            }
            frames.push(f.vars.clone());
        }
        VarEnv::from_frames(frames)
    }

    /// Writes to the innermost visible frame declaring `name`.
    fn bind(&self, st: &mut AdState, i: usize, path: &[usize], name: &str, v: Value) {
        let mut f = &st.instances[i].frame;
        let mut found = f.vars.contains_key(name).then_some(0);
        for (d, n) in path.iter().enumerate() {
            f = &f.children[n].frame;
            if self.graphs[f.graph].isolated {
                found = None;
            }
            if f.vars.contains_key(name) {
                found = Some(d + 1);
            }
        }
        let depth = found.unwrap_or(path.len());
        frame_mut(st, i, &path[..depth]).vars.insert(name.to_string(), v);
    }

    fn emit_out(&self, st: &mut AdState, i: usize, path: &[usize], n: usize) {
        let f = frame_mut(st, i, path);
        for &e in &self.graphs[f.graph].out[n] {
            f.tokens[e] += 1;
        }
    }

    /// Guards on the outgoing flows of an accept act as preconditions.
    fn guards_hold(&self, g: &Graph<'_>, n: usize, env: &VarEnv) -> bool {
        g.out[n].iter().all(|&e| match &g.edges[e].guard {
            None => true,
            Some(gd) => matches!(eval_expr(gd, env), Ok(Value::Bool(true))),
        })
    }

    fn region_active(&self, g: &Graph<'_>, f: &Frame, r: usize) -> bool {
        let m = &g.regions[r].member;
        let edge_hit = g
            .ends
            .iter()
            .enumerate()
            .any(|(e, &(s, t))| f.tokens[e] > 0 && (m[s] || m[t]));
        edge_hit || f.children.keys().any(|n| m[*n])
    }

    fn kill_region(&self, f: &mut Frame, r: usize) {
        let g = &self.graphs[f.graph];
        let m = &g.regions[r].member;
        for (e, &(s, t)) in g.ends.iter().enumerate() {
            if m[s] || m[t] {
                f.tokens[e] = 0;
            }
        }
        f.children.retain(|n, _| !m[*n]);
        for (n, s) in f.start.iter_mut().enumerate() {
            if m[n] {
                *s = false;
            }
        }
    }

    fn post(&self, st: &mut AdState, from_pool: usize, signal: &str, v: &Value) {
        for (p, pool) in self.pools.iter().enumerate() {
            if p != from_pool && pool.signals.contains(signal) {
                st.mail.post(p, signal, v.clone());
            }
        }
    }

    fn complete(&self, st: &mut AdState, i: usize, path: &[usize]) {
        let (&n, parent) = path.split_last().expect("child path");
        let graph = frame_at(st, i, parent).graph;
        let node = self.graphs[graph].nodes[n];
        let mut child = frame_mut(st, i, parent).children.remove(&n).expect("child");
        if node.kind == NodeKind::LoopNode {
            if !child.rest.is_empty() {
                let item = child.rest.remove(0);
                let mut frame = self.new_frame(child.frame.graph);
                frame.vars.insert(node.iterator.clone().unwrap_or_default(), item);
                frame_mut(st, i, parent).children.insert(
                    n,
                    Child {
                        frame,
                        rest: child.rest,
                    },
                );
                return;
            }
        } else {
            for p in node.pins.iter().filter(|p| p.direction == PinDirection::Out) {
                let v = child.frame.vars.get(&p.name).cloned().unwrap_or(Value::Null);
                self.bind(st, i, parent, &p.name, v);
            }
        }
        self.emit_out(st, i, parent, n);
    }

    /// Completes finished children and ends empty instances.
    fn normalize(&self, st: &mut AdState, events: &mut Vec<Observable>) {
        loop {
            let next = (0..st.instances.len()).find_map(|i| find_completable(&st.instances[i].frame).map(|p| (i, p)));
            match next {
                Some((i, p)) => self.complete(st, i, &p),
                None => break,
            }
        }
        let mut k = 0;
        while k < st.instances.len() {
            if st.instances[k].frame.is_empty() {
                let inst = st.instances.remove(k);
                events.push(Observable::ProcessEnded {
                    label: self.pools[inst.pool].name.to_string(),
                });
            } else {
                k += 1;
            }
        }
    }

    fn finish(&self, mut st: AdState, mut events: Vec<Observable>) -> Outcome {
        self.normalize(&mut st, &mut events);
        (events, Ok(st))
    }

    fn options(&self, g: &Graph<'_>, f: &Frame, n: usize) -> Vec<Consume> {
        let node = g.nodes[n];
        let inc = &g.inc[n];
        if inc.is_empty() {
            return if f.start[n] { vec![Consume::Start] } else { Vec::new() };
        }
        let and_join = node.kind == NodeKind::JoinNode || (!node.kind.is_control() && inc.len() > 1);
        if and_join {
            if inc.iter().all(|&e| f.tokens[e] > 0) {
                vec![Consume::Edges(inc.clone())]
            } else {
                Vec::new()
            }
        } else {
            inc.iter()
                .filter(|&&e| f.tokens[e] > 0)
                .map(|&e| Consume::Edges(vec![e]))
                .collect()
        }
    }

    fn fire(&self, s: &AdState, i: usize, path: &[usize], n: usize, consume: &Consume) -> Vec<Outcome> {
        let graph = frame_at(s, i, path).graph;
        let g = &self.graphs[graph];
        let node = g.nodes[n];
        let mut st = s.clone();
        {
            let f = frame_mut(&mut st, i, path);
            match consume {
                Consume::Start => f.start[n] = false,
                Consume::Edges(es) => es.iter().for_each(|&e| f.tokens[e] -= 1),
            }
        }
        let name = node.name.as_str();
        let id = node.id.as_str();
        let env = || self.env_at(s, i, path);
        let pool = s.instances[i].pool;
        use NodeKind as K;
        match node.kind {
            K::CallBehaviorAction if node.stereotype == Some(Stereotype::CallSubProcess) => {
                let Some(callee) = g.child[n] else {
                    return vec![(Vec::new(), Err(Halt::eval(id, "call target is missing")))];
                };
                let env = env();
                let mut frame = self.new_frame(callee);
                for p in node.pins.iter().filter(|p| p.direction == PinDirection::In) {
                    frame
                        .vars
                        .insert(p.name.clone(), env.get(&p.name).cloned().unwrap_or(Value::Null));
                }
                frame_mut(&mut st, i, path).children.insert(
                    n,
                    Child {
                        frame,
                        rest: Vec::new(),
                    },
                );
                vec![self.finish(st, Vec::new())]
            }
            K::CallBehaviorAction | K::CallOperationAction => {
                self.emit_out(&mut st, i, path, n);
                vec![self.finish(st, vec![Observable::TaskFired { label: name.into() }])]
            }
            K::ReadVariableAction | K::WriteVariableAction => {
                let Some(a) = &node.assignment else {
                    self.emit_out(&mut st, i, path, n);
                    return vec![self.finish(st, Vec::new())];
                };
                match eval_expr(&a.expr, &env()) {
                    Ok(v) => {
                        self.bind(&mut st, i, path, &a.target, v);
                        self.emit_out(&mut st, i, path, n);
                        vec![self.finish(st, Vec::new())]
                    }
                    Err(e) => vec![(Vec::new(), Err(Halt::eval(id, e)))],
                }
            }
            K::SendSignalAction => {
                let payload = node
                    .first_pin(PinDirection::In)
                    .and_then(|p| env().get(&p.name).cloned())
                    .unwrap_or(Value::Null);
                let signal = signal_of(node);
                self.post(&mut st, pool, signal, &payload);
                self.emit_out(&mut st, i, path, n);
                let ev = Observable::MessageSent {
                    name: signal.into(),
                    digest: payload.digest(),
                };
                vec![self.finish(st, vec![ev])]
            }
            K::AcceptEventAction => {
                let signal = signal_of(node);
                let var = node.first_pin(PinDirection::Out).map(|p| p.name.as_str());
                let mut outs = Vec::new();
                for (src, payload) in s.mail.offers(self.script, pool, self.pools[pool].name, signal) {
                    let mut env = env();
                    if let Some(v) = var {
                        env.push(BTreeMap::from([(v.to_string(), payload.clone())]));
                    }
                    if !self.guards_hold(g, n, &env) {
                        continue;
                    }
                    let mut st = st.clone();
                    st.mail.take(src, pool, signal);
                    if let Some(v) = var {
                        self.bind(&mut st, i, path, v, payload);
                    }
                    self.emit_out(&mut st, i, path, n);
                    outs.push(self.finish(st, vec![Observable::MessageReceived { name: signal.into() }]));
                }
                outs
            }
            K::AcceptTimerAction => {
                if !s.mail.timer_offered(self.script, name) {
                    return Vec::new();
                }
                st.mail.take_timer();
                self.emit_out(&mut st, i, path, n);
                vec![self.finish(st, Vec::new())]
            }
            K::InitialNode | K::FlowFinalNode | K::ParameterNode => vec![self.finish(st, Vec::new())],
            K::ActivityFinalNode => {
                frame_mut(&mut st, i, path).clear();
                vec![self.finish(st, Vec::new())]
            }
            K::DecisionNode => {
                let env = env();
                let mut default = None;
                let mut chosen = None;
                for &e in &g.out[n] {
                    match &g.edges[e].guard {
                        None => {
                            default.get_or_insert(e);
                        }
                        Some(gd) => match eval_expr(gd, &env) {
                            Ok(Value::Bool(true)) => {
                                chosen = Some(e);
                                break;
                            }
                            Ok(Value::Bool(false)) => {}
                            Ok(v) => {
                                let msg = format!("guard yields {} instead of Boolean", v.type_name());
                                return vec![(Vec::new(), Err(Halt::eval(id, msg)))];
                            }
                            Err(err) => return vec![(Vec::new(), Err(Halt::eval(id, err)))],
                        },
                    }
                }
                match chosen.or(default) {
                    Some(e) => {
                        frame_mut(&mut st, i, path).tokens[e] += 1;
                        vec![self.finish(st, Vec::new())]
                    }
                    None => vec![(Vec::new(), Err(Halt::no_branch(id)))],
                }
            }
            K::MergeNode | K::ForkNode | K::JoinNode => {
                self.emit_out(&mut st, i, path, n);
                vec![self.finish(st, Vec::new())]
            }
            K::LoopNode => {
                let Some(expr) = node
                    .collection
                    .as_ref()
                    .and_then(|c| node.pin(c))
                    .and_then(|p| p.value.as_ref())
                else {
                    return vec![(Vec::new(), Err(Halt::eval(id, "loop without collection")))];
                };
                let items = match eval_expr(expr, &env()) {
                    Ok(Value::List(items)) => items,
                    Ok(v) => {
                        let msg = format!("collection is {} instead of a list", v.type_name());
                        return vec![(Vec::new(), Err(Halt::eval(id, msg)))];
                    }
                    Err(e) => return vec![(Vec::new(), Err(Halt::eval(id, e)))],
                };
                let mut items = items.into_iter();
                match items.next() {
                    None => self.emit_out(&mut st, i, path, n),
                    Some(first) => {
                        let body = g.child[n].expect("loop body");
                        let mut frame = self.new_frame(body);
                        frame.vars.insert(node.iterator.clone().unwrap_or_default(), first);
                        frame_mut(&mut st, i, path).children.insert(
                            n,
                            Child {
                                frame,
                                rest: items.collect(),
                            },
                        );
                    }
                }
                vec![self.finish(st, Vec::new())]
            }
        }
    }

    fn interrupts(&self, s: &AdState, i: usize, path: &[usize], out: &mut Vec<(Key, Outcome)>) {
        let f = frame_at(s, i, path);
        let g = &self.graphs[f.graph];
        let pool = s.instances[i].pool;
        for h in &g.handlers {
            if !self.region_active(g, f, h.region) {
                continue;
            }
            let key = (g.nodes[h.node].id.to_string(), i, path.to_vec());
            let region = Observable::Interrupted {
                label: g.regions[h.region].name.to_string(),
            };
            let fire = |st: &mut AdState| {
                let f = frame_mut(st, i, path);
                self.kill_region(f, h.region);
                f.tokens[h.edge] += 1;
            };
            match h.trigger {
                Trigger::Message { signal, var } => {
                    for (src, payload) in s.mail.offers(self.script, pool, self.pools[pool].name, signal) {
                        let mut st = s.clone();
                        st.mail.take(src, pool, signal);
                        fire(&mut st);
                        if let Some(v) = var {
                            self.bind(&mut st, i, path, v, payload);
                        }
                        let ev = vec![Observable::MessageReceived { name: signal.into() }, region.clone()];
                        out.push((key.clone(), self.finish(st, ev)));
                    }
                }
                Trigger::Timer(name) => {
                    if s.mail.timer_offered(self.script, name) {
                        let mut st = s.clone();
                        st.mail.take_timer();
                        fire(&mut st);
                        out.push((key.clone(), self.finish(st, vec![region.clone()])));
                    }
                }
            }
        }
    }

    fn walk(&self, s: &AdState, i: usize, path: &mut Vec<usize>, out: &mut Vec<(Key, Outcome)>) {
        let f = frame_at(s, i, path);
        let g = &self.graphs[f.graph];
        for n in 0..g.nodes.len() {
            if g.passive[n] || f.children.contains_key(&n) {
                continue;
            }
            for c in self.options(g, f, n) {
                for o in self.fire(s, i, path, n, &c) {
                    out.push(((g.nodes[n].id.to_string(), i, path.clone()), o));
                }
            }
        }
        self.interrupts(s, i, path, out);
        let kids: Vec<usize> = f.children.keys().copied().collect();
        for n in kids {
            path.push(n);
            self.walk(s, i, path, out);
            path.pop();
        }
    }

    fn starters(&self, s: &AdState, out: &mut Vec<(Key, Outcome)>) {
        for (p, pool) in self.pools.iter().enumerate() {
            let g = &self.graphs[pool.graph];
            for &n in &pool.starters {
                let node = g.nodes[n];
                let signal = signal_of(node);
                let var = node.first_pin(PinDirection::Out).map(|p| p.name.as_str());
                for (src, payload) in s.mail.offers(self.script, p, pool.name, signal) {
                    let mut frame = self.new_frame(pool.graph);
                    if let Some(v) = var {
                        frame.vars.insert(v.to_string(), payload);
                    }
                    if !self.guards_hold(g, n, &VarEnv::from_frames(vec![frame.vars.clone()])) {
                        continue;
                    }
                    for &e in &g.out[n] {
                        frame.tokens[e] += 1;
                    }
                    let mut st = s.clone();
                    st.mail.take(src, p, signal);
                    st.instances.push(Instance { pool: p, frame });
                    let ev = vec![Observable::MessageReceived { name: signal.into() }];
                    out.push(((node.id.to_string(), usize::MAX, Vec::new()), self.finish(st, ev)));
                }
            }
        }
    }
}

fn collect_signals<'m>(m: &'m AdModel, a: &'m Activity, seen: &mut BTreeSet<&'m Id>, out: &mut BTreeSet<&'m str>) {
    if !seen.insert(&a.id) {
        return;
    }
    fn nodes<'m>(m: &'m AdModel, ns: &'m [Node], seen: &mut BTreeSet<&'m Id>, out: &mut BTreeSet<&'m str>) {
        for n in ns {
            if n.kind == NodeKind::AcceptEventAction {
                out.insert(signal_of(n));
            }
            if let Some(b) = &n.body {
                nodes(m, &b.nodes, seen, out);
            }
            if n.stereotype == Some(Stereotype::CallSubProcess) {
                if let Some(callee) = n.behavior.as_ref().and_then(|b| m.activity(b)) {
                    collect_signals(m, callee, seen, out);
                }
            }
        }
    }
    nodes(m, &a.nodes, seen, out);
}

impl Machine for AdMachine<'_> {
    type State = AdState;

    fn initial(&self) -> (AdState, Vec<Observable>) {
        let mut st = AdState {
            instances: Vec::new(),
            mail: Mailbox::default(),
        };
        for (p, pool) in self.pools.iter().enumerate() {
            if pool.starters.is_empty() {
                st.instances.push(Instance {
                    pool: p,
                    frame: self.new_frame(pool.graph),
                });
            }
        }
        let mut events = Vec::new();
        self.normalize(&mut st, &mut events);
        (st, events)
    }

    fn successors(&self, s: &AdState) -> Vec<Transition<AdState>> {
        let mut out = Vec::new();
        self.starters(s, &mut out);
        for i in 0..s.instances.len() {
            self.walk(s, i, &mut Vec::new(), &mut out);
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out.into_iter()
            .map(|(_, (events, next))| Transition { events, next })
            .collect()
    }
}

/// Runs an activity model once with a seeded scheduler.
pub fn run_ad(model: &AdModel, script: &EventScript, max_steps: usize, seed: u64) -> ExecutionTrace {
    crate::exec::engine::run(&AdMachine::new(model, script), max_steps, seed)
}
