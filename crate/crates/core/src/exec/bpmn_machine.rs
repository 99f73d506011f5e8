//! Token game over the BPMN subset.
//!
//! Tokens sit on sequence flows. Every process instance and every running
//! subprocess is a frame; variable lookups walk outwards through all
//! enclosing frames.

use std::collections::{BTreeMap, BTreeSet};

use crate::bpmn::{
    AssignTime, Assignment, BpmnModel, EndResult, EventTrigger, FlowKind, FlowObject, GatewayKind, Process,
    SequenceFlow, TaskType,
};
use crate::exec::engine::{ExecutionTrace, Halt, Machine, Observable, Transition};
use crate::exec::mailbox::Mailbox;
use crate::exec::{eval_expr, Value, VarEnv};
use crate::id::Id;
use crate::io::events::EventScript;

struct PGraph<'m> {
    objs: Vec<&'m FlowObject>,
    flows: Vec<&'m SequenceFlow>,
    inc: Vec<Vec<usize>>,
    out: Vec<Vec<usize>>,
    /// Outgoing flows of start events.
    entry: Vec<usize>,
    /// Objects without incoming flow that run once per instance.
    start: Vec<bool>,
    vars: Vec<&'m str>,
    child: Vec<Option<usize>>,
    /// Host object of each boundary event.
    host: Vec<Option<usize>>,
    passive: Vec<bool>,
}

struct PoolRt<'m> {
    name: &'m str,
    graph: usize,
    starters: Vec<usize>,
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
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Child {
    frame: Frame,
    /// Multi-instance items still to iterate.
    rest: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Instance {
    pool: usize,
    frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BpmnState {
    instances: Vec<Instance>,
    mail: Mailbox,
}

enum Consume {
    Start,
    Flows(Vec<usize>),
}

type Key = (String, usize, Vec<usize>);
type Outcome = (Vec<Observable>, Result<BpmnState, Halt>);

pub struct BpmnMachine<'m> {
    model: &'m BpmnModel,
    script: &'m EventScript,
    graphs: Vec<PGraph<'m>>,
    pools: Vec<PoolRt<'m>>,
    /// Sender object → receiving pools.
    routes: BTreeMap<&'m Id, BTreeSet<usize>>,
}

fn frame_mut<'a>(st: &'a mut BpmnState, i: usize, path: &[usize]) -> &'a mut Frame {
    let mut f = &mut st.instances[i].frame;
    for n in path {
        f = &mut f.children.get_mut(n).expect("live path").frame;
    }
    f
}

fn frame_at<'a>(st: &'a BpmnState, i: usize, path: &[usize]) -> &'a Frame {
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

impl<'m> BpmnMachine<'m> {
    /// Expects a well-formed model.
    pub fn new(model: &'m BpmnModel, script: &'m EventScript) -> Self {
        let mut m = BpmnMachine {
            model,
            script,
            graphs: Vec::new(),
            pools: Vec::new(),
            routes: BTreeMap::new(),
        };
        for pool in &model.pools {
            let graph = m.compile(&pool.process, true);
            let g = &m.graphs[graph];
            let starters = (0..g.objs.len())
                .filter(|&o| g.objs[o].is_instantiating_receive() && g.inc[o].is_empty())
                .collect();
            m.pools.push(PoolRt {
                name: &pool.name,
                graph,
                starters,
            });
        }
        for mf in &model.message_flows {
            if let Some(site) = model.locate(&mf.target) {
                if let Some(p) = model.pools.iter().position(|x| x.id == site.pool.id) {
                    m.routes.entry(&mf.source).or_default().insert(p);
                }
            }
        }
        m
    }

    fn compile(&mut self, p: &'m Process, top: bool) -> usize {
        let slot = self.graphs.len();
        self.graphs.push(PGraph {
            objs: Vec::new(),
            flows: Vec::new(),
            inc: Vec::new(),
            out: Vec::new(),
            entry: Vec::new(),
            start: Vec::new(),
            vars: Vec::new(),
            child: Vec::new(),
            host: Vec::new(),
            passive: Vec::new(),
        });
        let objs: Vec<&FlowObject> = p.flow_objects.iter().collect();
        let pos: BTreeMap<&Id, usize> = objs.iter().enumerate().map(|(i, o)| (&o.id, i)).collect();
        let mut inc = vec![Vec::new(); objs.len()];
        let mut out = vec![Vec::new(); objs.len()];
        let mut flows = Vec::new();
        for f in &p.sequence_flows {
            if let (Some(&s), Some(&t)) = (pos.get(&f.source), pos.get(&f.target)) {
                out[s].push(flows.len());
                inc[t].push(flows.len());
                flows.push(f);
            }
        }
        let mut entry = Vec::new();
        let mut start = vec![false; objs.len()];
        let mut child = vec![None; objs.len()];
        let mut host = vec![None; objs.len()];
        let mut passive = vec![false; objs.len()];
        for (i, o) in objs.iter().enumerate() {
            if let FlowKind::IntermediateEvent {
                attached_to: Some(h), ..
            } = &o.kind
            {
                host[i] = pos.get(h).copied();
            }
            let starter = top && o.is_instantiating_receive() && inc[i].is_empty();
            if o.is_start() {
                entry.extend(out[i].iter().copied());
                passive[i] = true;
            } else if o.is_boundary() || starter {
                passive[i] = true;
            } else if inc[i].is_empty() {
                start[i] = true;
            }
            if let FlowKind::Subprocess(s) = &o.kind {
                child[i] = Some(self.compile(&s.body, false));
            }
        }
        self.graphs[slot] = PGraph {
            objs,
            flows,
            inc,
            out,
            entry,
            start,
            vars: p.properties.iter().map(|x| x.name.as_str()).collect(),
            child,
            host,
            passive,
        };
        slot
    }

    fn new_frame(&self, graph: usize) -> Frame {
        let g = &self.graphs[graph];
        let mut tokens = vec![0; g.flows.len()];
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

    fn env_at(&self, st: &BpmnState, i: usize, path: &[usize]) -> VarEnv {
        let mut f = &st.instances[i].frame;
        let mut frames = vec![f.vars.clone()];
        for n in path {
            f = &f.children[n].frame;
            frames.push(f.vars.clone());
        }
        VarEnv::from_frames(frames)
    }

    fn bind(&self, st: &mut BpmnState, i: usize, path: &[usize], name: &str, v: Value) {
        let mut f = &st.instances[i].frame;
        let mut found = f.vars.contains_key(name).then_some(0);
        for (d, n) in path.iter().enumerate() {
            f = &f.children[n].frame;
            if f.vars.contains_key(name) {
                found = Some(d + 1);
            }
        }
        let depth = found.unwrap_or(path.len());
        frame_mut(st, i, &path[..depth]).vars.insert(name.to_string(), v);
    }

    fn message_name(&self, id: Option<&Id>) -> &'m str {
        id.and_then(|m| self.model.message(m))
            .map(|m| m.name.as_str())
            .unwrap_or("")
    }

    fn assign(
        &self,
        st: &mut BpmnState,
        i: usize,
        path: &[usize],
        list: &[Assignment],
        time: AssignTime,
        at: &str,
    ) -> Result<(), Halt> {
        for a in list.iter().filter(|a| a.time == time) {
            let v = eval_expr(&a.from, &self.env_at(st, i, path)).map_err(|e| Halt::eval(at, e))?;
            self.bind(st, i, path, &a.to, v);
        }
        Ok(())
    }

    /// Puts a token on every outgoing flow whose condition holds.
    fn take_outgoing(&self, st: &mut BpmnState, i: usize, path: &[usize], o: usize) -> Result<(), Halt> {
        let graph = frame_at(st, i, path).graph;
        let g = &self.graphs[graph];
        let env = self.env_at(st, i, path);
        let mut hit = Vec::new();
        for &e in &g.out[o] {
            match &g.flows[e].condition {
                None => hit.push(e),
                Some(c) => match eval_expr(c, &env) {
                    Ok(Value::Bool(true)) => hit.push(e),
                    Ok(Value::Bool(false)) => {}
                    Ok(v) => {
                        let msg = format!("condition yields {} instead of Boolean", v.type_name());
                        return Err(Halt::eval(g.flows[e].id.as_str(), msg));
                    }
                    Err(err) => return Err(Halt::eval(g.flows[e].id.as_str(), err)),
                },
            }
        }
        let f = frame_mut(st, i, path);
        for e in hit {
            f.tokens[e] += 1;
        }
        Ok(())
    }

    /// Conditions on the flows leaving a receive act as preconditions.
    fn conditions_hold(&self, g: &PGraph<'_>, o: usize, env: &VarEnv) -> bool {
        g.out[o].iter().all(|&e| match &g.flows[e].condition {
            None => true,
            Some(c) => matches!(eval_expr(c, env), Ok(Value::Bool(true))),
        })
    }

    fn post(&self, st: &mut BpmnState, sender: &Id, name: &str, v: &Value) {
        if let Some(pools) = self.routes.get(sender) {
            for &p in pools {
                st.mail.post(p, name, v.clone());
            }
        }
    }

    fn complete(&self, st: &mut BpmnState, i: usize, path: &[usize]) -> Result<(), Halt> {
        let (&n, parent) = path.split_last().expect("child path");
        let graph = frame_at(st, i, parent).graph;
        let obj = self.graphs[graph].objs[n];
        let FlowKind::Subprocess(sub) = &obj.kind else {
            unreachable!("only subprocesses have children")
        };
        if let Some(mi) = &sub.multi_instance {
            let child = &frame_at(st, i, parent).children[&n];
            if !child.rest.is_empty() {
                let mut rest = child.rest.clone();
                let item = rest.remove(0);
                let mut frame = self.new_frame(child.frame.graph);
                frame.vars.insert(mi.iterator.clone(), item);
                frame_mut(st, i, parent).children.insert(n, Child { frame, rest });
                return Ok(());
            }
        } else {
            let env = self.env_at(st, i, path);
            let mut outs = Vec::new();
            for a in sub.assignments.iter().filter(|a| a.time == AssignTime::End) {
                outs.push((
                    a.to.clone(),
                    eval_expr(&a.from, &env).map_err(|e| Halt::eval(obj.id.as_str(), e))?,
                ));
            }
            for (to, v) in outs {
                self.bind(st, i, parent, &to, v);
            }
        }
        frame_mut(st, i, parent).children.remove(&n);
        self.take_outgoing(st, i, parent, n)
    }

    fn normalize(&self, st: &mut BpmnState, events: &mut Vec<Observable>) -> Result<(), Halt> {
        loop {
            let next = (0..st.instances.len()).find_map(|i| find_completable(&st.instances[i].frame).map(|p| (i, p)));
            match next {
                Some((i, p)) => self.complete(st, i, &p)?,
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
        Ok(())
    }

    fn finish(&self, mut st: BpmnState, mut events: Vec<Observable>) -> Outcome {
        match self.normalize(&mut st, &mut events) {
            Ok(()) => (events, Ok(st)),
            Err(h) => (events, Err(h)),
        }
    }

    /// Continues with `step` applied, or halts with its error.
    fn then(
        &self,
        mut st: BpmnState,
        events: Vec<Observable>,
        step: impl FnOnce(&mut BpmnState) -> Result<(), Halt>,
    ) -> Outcome {
        match step(&mut st) {
            Ok(()) => self.finish(st, events),
            Err(h) => (events, Err(h)),
        }
    }

    fn options(&self, g: &PGraph<'_>, f: &Frame, o: usize) -> Vec<Consume> {
        let inc = &g.inc[o];
        if inc.is_empty() {
            return if f.start[o] { vec![Consume::Start] } else { Vec::new() };
        }
        let parallel = matches!(
            g.objs[o].kind,
            FlowKind::Gateway {
                gate: GatewayKind::Parallel
            }
        );
        if parallel {
            if inc.iter().all(|&e| f.tokens[e] > 0) {
                vec![Consume::Flows(inc.clone())]
            } else {
                Vec::new()
            }
        } else {
            inc.iter()
                .filter(|&&e| f.tokens[e] > 0)
                .map(|&e| Consume::Flows(vec![e]))
                .collect()
        }
    }

    /// Delivery of a message to a catching object: one outcome per offer.
    #[allow(clippy::too_many_arguments)]
    fn receive(
        &self,
        s: &BpmnState,
        st: &BpmnState,
        i: usize,
        path: &[usize],
        o: usize,
        name: &str,
        var: Option<&str>,
    ) -> Vec<Outcome> {
        let g = &self.graphs[frame_at(s, i, path).graph];
        let pool = s.instances[i].pool;
        let mut outs = Vec::new();
        for (src, payload) in s.mail.offers(self.script, pool, self.pools[pool].name, name) {
            let mut env = self.env_at(s, i, path);
            if let Some(v) = var {
                env.push(BTreeMap::from([(v.to_string(), payload.clone())]));
            }
            if !self.conditions_hold(g, o, &env) {
                continue;
            }
            let mut st = st.clone();
            st.mail.take(src, pool, name);
            if let Some(v) = var {
                self.bind(&mut st, i, path, v, payload);
            }
            let ev = vec![Observable::MessageReceived { name: name.into() }];
            outs.push(self.then(st, ev, |st| self.take_outgoing(st, i, path, o)));
        }
        outs
    }

    fn fire(&self, s: &BpmnState, i: usize, path: &[usize], o: usize, consume: &Consume) -> Vec<Outcome> {
        let g = &self.graphs[frame_at(s, i, path).graph];
        let obj = g.objs[o];
        let id = obj.id.as_str();
        let mut st = s.clone();
        {
            let f = frame_mut(&mut st, i, path);
            match consume {
                Consume::Start => f.start[o] = false,
                Consume::Flows(es) => es.iter().for_each(|&e| f.tokens[e] -= 1),
            }
        }
        match &obj.kind {
            FlowKind::StartEvent { .. } => vec![self.finish(st, Vec::new())],
            FlowKind::Task(t) => match t.task_type {
                TaskType::Receive => self.receive(
                    s,
                    &st,
                    i,
                    path,
                    o,
                    self.message_name(t.message.as_ref()),
                    t.message_var.as_deref(),
                ),
                TaskType::Send => {
                    let name = self.message_name(t.message.as_ref());
                    let payload = t
                        .message_var
                        .as_ref()
                        .and_then(|v| self.env_at(s, i, path).get(v).cloned())
                        .unwrap_or(Value::Null);
                    self.post(&mut st, &obj.id, name, &payload);
                    let ev = vec![Observable::MessageSent {
                        name: name.into(),
                        digest: payload.digest(),
                    }];
                    vec![self.then(st, ev, |st| self.take_outgoing(st, i, path, o))]
                }
                tt => {
                    let ev = match tt {
                        TaskType::None => Vec::new(),
                        _ => vec![Observable::TaskFired {
                            label: obj.name.clone(),
                        }],
                    };
                    vec![self.then(st, ev, |st| {
                        self.assign(st, i, path, &t.assignments, AssignTime::Start, id)?;
                        self.assign(st, i, path, &t.assignments, AssignTime::End, id)?;
                        self.take_outgoing(st, i, path, o)
                    })]
                }
            },
            FlowKind::Subprocess(sub) => {
                let body = g.child[o].expect("subprocess body");
                let env = self.env_at(s, i, path);
                if let Some(mi) = &sub.multi_instance {
                    let items = match eval_expr(&mi.collection, &env) {
                        Ok(Value::List(items)) => items,
                        Ok(v) => {
                            let msg = format!("collection is {} instead of a list", v.type_name());
                            return vec![(Vec::new(), Err(Halt::eval(id, msg)))];
                        }
                        Err(e) => return vec![(Vec::new(), Err(Halt::eval(id, e)))],
                    };
                    let mut items = items.into_iter();
                    return match items.next() {
                        None => vec![self.then(st, Vec::new(), |st| self.take_outgoing(st, i, path, o))],
                        Some(first) => {
                            let mut frame = self.new_frame(body);
                            frame.vars.insert(mi.iterator.clone(), first);
                            frame_mut(&mut st, i, path).children.insert(
                                o,
                                Child {
                                    frame,
                                    rest: items.collect(),
                                },
                            );
                            vec![self.finish(st, Vec::new())]
                        }
                    };
                }
                let mut frame = self.new_frame(body);
                for a in sub.assignments.iter().filter(|a| a.time == AssignTime::Start) {
                    match eval_expr(&a.from, &env) {
                        Ok(v) => {
                            frame.vars.insert(a.to.clone(), v);
                        }
                        Err(e) => return vec![(Vec::new(), Err(Halt::eval(id, e)))],
                    }
                }
                frame_mut(&mut st, i, path).children.insert(
                    o,
                    Child {
                        frame,
                        rest: Vec::new(),
                    },
                );
                vec![self.finish(st, Vec::new())]
            }
            FlowKind::IntermediateEvent {
                trigger,
                message,
                message_var,
                ..
            } => match trigger {
                EventTrigger::Message => self.receive(
                    s,
                    &st,
                    i,
                    path,
                    o,
                    self.message_name(message.as_ref()),
                    message_var.as_deref(),
                ),
                EventTrigger::Timer => {
                    if !s.mail.timer_offered(self.script, &obj.name) {
                        return Vec::new();
                    }
                    st.mail.take_timer();
                    vec![self.then(st, Vec::new(), |st| self.take_outgoing(st, i, path, o))]
                }
            },
            FlowKind::EndEvent { result } => match result {
                EndResult::None => vec![self.finish(st, Vec::new())],
                EndResult::Terminate => {
                    let f = frame_mut(&mut st, i, path);
                    f.tokens.iter_mut().for_each(|t| *t = 0);
                    f.start.iter_mut().for_each(|x| *x = false);
                    f.children.clear();
                    vec![self.finish(st, Vec::new())]
                }
                EndResult::Message { message, var } => {
                    let name = self.message_name(Some(message));
                    let payload = var
                        .as_ref()
                        .and_then(|v| self.env_at(s, i, path).get(v).cloned())
                        .unwrap_or(Value::Null);
                    self.post(&mut st, &obj.id, name, &payload);
                    let ev = vec![Observable::MessageSent {
                        name: name.into(),
                        digest: payload.digest(),
                    }];
                    vec![self.finish(st, ev)]
                }
            },
            FlowKind::Gateway {
                gate: GatewayKind::Parallel,
            } => vec![self.then(st, Vec::new(), |st| self.take_outgoing(st, i, path, o))],
            FlowKind::Gateway {
                gate: GatewayKind::ExclusiveData,
            } => {
                let env = self.env_at(s, i, path);
                let mut default = None;
                let mut chosen = None;
                for &e in &g.out[o] {
                    match &g.flows[e].condition {
                        None => {
                            default.get_or_insert(e);
                        }
                        Some(c) => match eval_expr(c, &env) {
                            Ok(Value::Bool(true)) => {
                                chosen = Some(e);
                                break;
                            }
                            Ok(Value::Bool(false)) => {}
                            Ok(v) => {
                                let msg = format!("condition yields {} instead of Boolean", v.type_name());
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
        }
    }

    fn boundaries(&self, s: &BpmnState, i: usize, path: &[usize], out: &mut Vec<(Key, Outcome)>) {
        let f = frame_at(s, i, path);
        let g = &self.graphs[f.graph];
        let pool = s.instances[i].pool;
        for (b, h) in g.host.iter().enumerate() {
            let Some(h) = *h else { continue };
            if !f.children.contains_key(&h) {
                continue;
            }
            let obj = g.objs[b];
            let FlowKind::IntermediateEvent {
                trigger,
                message,
                message_var,
                ..
            } = &obj.kind
            else {
                continue;
            };
            let key = (obj.id.to_string(), i, path.to_vec());
            let interrupted = Observable::Interrupted {
                label: g.objs[h].name.clone(),
            };
            match trigger {
                EventTrigger::Message => {
                    let name = self.message_name(message.as_ref());
                    for (src, payload) in s.mail.offers(self.script, pool, self.pools[pool].name, name) {
                        let mut st = s.clone();
                        st.mail.take(src, pool, name);
                        frame_mut(&mut st, i, path).children.remove(&h);
                        if let Some(v) = message_var {
                            self.bind(&mut st, i, path, v, payload);
                        }
                        let ev = vec![Observable::MessageReceived { name: name.into() }, interrupted.clone()];
                        out.push((key.clone(), self.then(st, ev, |st| self.take_outgoing(st, i, path, b))));
                    }
                }
                EventTrigger::Timer => {
                    if s.mail.timer_offered(self.script, &obj.name) {
                        let mut st = s.clone();
                        st.mail.take_timer();
                        frame_mut(&mut st, i, path).children.remove(&h);
                        let ev = vec![interrupted.clone()];
                        out.push((key.clone(), self.then(st, ev, |st| self.take_outgoing(st, i, path, b))));
                    }
                }
            }
        }
    }

    fn walk(&self, s: &BpmnState, i: usize, path: &mut Vec<usize>, out: &mut Vec<(Key, Outcome)>) {
        let f = frame_at(s, i, path);
        let g = &self.graphs[f.graph];
        for o in 0..g.objs.len() {
            if g.passive[o] || f.children.contains_key(&o) {
                continue;
            }
            for c in self.options(g, f, o) {
                for r in self.fire(s, i, path, o, &c) {
                    out.push(((g.objs[o].id.to_string(), i, path.clone()), r));
                }
            }
        }
        self.boundaries(s, i, path, out);
        let kids: Vec<usize> = f.children.keys().copied().collect();
        for n in kids {
            path.push(n);
            self.walk(s, i, path, out);
            path.pop();
        }
    }

    fn starters(&self, s: &BpmnState, out: &mut Vec<(Key, Outcome)>) {
        for (p, pool) in self.pools.iter().enumerate() {
            let g = &self.graphs[pool.graph];
            for &o in &pool.starters {
                let obj = g.objs[o];
                let Some(t) = obj.task() else { continue };
                let name = self.message_name(t.message.as_ref());
                for (src, payload) in s.mail.offers(self.script, p, pool.name, name) {
                    let mut frame = self.new_frame(pool.graph);
                    if let Some(v) = &t.message_var {
                        frame.vars.insert(v.clone(), payload);
                    }
                    if !self.conditions_hold(g, o, &VarEnv::from_frames(vec![frame.vars.clone()])) {
                        continue;
                    }
                    let mut st = s.clone();
                    st.mail.take(src, p, name);
                    st.instances.push(Instance { pool: p, frame });
                    let i = st.instances.len() - 1;
                    let ev = vec![Observable::MessageReceived { name: name.into() }];
                    let r = self.then(st, ev, |st| self.take_outgoing(st, i, &[], o));
                    out.push(((obj.id.to_string(), usize::MAX, Vec::new()), r));
                }
            }
        }
    }
}

impl Machine for BpmnMachine<'_> {
    type State = BpmnState;

    fn initial(&self) -> (BpmnState, Vec<Observable>) {
        let mut st = BpmnState {
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
        // Setting up instances evaluates nothing, so this cannot halt.
        let _ = self.normalize(&mut st, &mut events);
        (st, events)
    }

    fn successors(&self, s: &BpmnState) -> Vec<Transition<BpmnState>> {
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

/// Runs a BPMN model once with a seeded scheduler.
pub fn run_bpmn(model: &BpmnModel, script: &EventScript, max_steps: usize, seed: u64) -> ExecutionTrace {
    crate::exec::engine::run(&BpmnMachine::new(model, script), max_steps, seed)
}
