//! Executor-independent parts of the token game: observable events, traces,
//! the seeded scheduler and the exhaustive trace oracle.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_MAX_STEPS: usize = 10_000;
pub const DEFAULT_DEPTH: usize = 40;
/// States the oracle may expand before giving up.
pub const DEFAULT_STATE_BOUND: usize = 500_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "event")]
pub enum Observable {
    TaskFired { label: String },
    MessageSent { name: String, digest: String },
    MessageReceived { name: String },
    ProcessEnded { label: String },
    Interrupted { label: String },
}

impl Observable {
    /// Rewrites every label through `map`; unknown labels stay as they are.
    pub fn relabel(&self, map: &BTreeMap<String, String>) -> Observable {
        let m = |s: &String| map.get(s).cloned().unwrap_or_else(|| s.clone());
        match self {
            Observable::TaskFired { label } => Observable::TaskFired { label: m(label) },
            Observable::MessageSent { name, digest } => Observable::MessageSent {
                name: m(name),
                digest: digest.clone(),
            },
            Observable::MessageReceived { name } => Observable::MessageReceived { name: m(name) },
            Observable::ProcessEnded { label } => Observable::ProcessEnded { label: m(label) },
            Observable::Interrupted { label } => Observable::Interrupted { label: m(label) },
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::TaskFired { label } => write!(f, "TaskFired {label:?}"),
            Observable::MessageSent { name, digest } => write!(f, "MessageSent {name:?} {digest}"),
            Observable::MessageReceived { name } => write!(f, "MessageReceived {name:?}"),
            Observable::ProcessEnded { label } => write!(f, "ProcessEnded {label:?}"),
            Observable::Interrupted { label } => write!(f, "Interrupted {label:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum HaltKind {
    DeadlockNoBranch,
    EvalError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EndKind {
    /// Nothing left to do.
    Completed,
    /// Step or depth bound reached while steps were still enabled.
    Truncated,
    Halted(HaltKind),
}

impl fmt::Display for EndKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndKind::Completed => f.write_str("Completed"),
            EndKind::Truncated => f.write_str("Truncated"),
            EndKind::Halted(k) => write!(f, "Halted {k:?}"),
        }
    }
}

/// Why a run halted: kind plus a human-readable detail.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Halt {
    pub kind: HaltKind,
    pub detail: String,
}

impl Halt {
    pub fn no_branch(element: &str) -> Halt {
        Halt {
            kind: HaltKind::DeadlockNoBranch,
            detail: format!("no outgoing branch of '{element}' is enabled"),
        }
    }

    pub fn eval(element: &str, e: impl fmt::Display) -> Halt {
        Halt {
            kind: HaltKind::EvalError,
            detail: format!("{element}: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ExecutionTrace {
    pub events: Vec<Observable>,
    pub end: EndKind,
    /// Halt detail of a single run; the oracle leaves it empty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ExecutionTrace {
    pub fn relabel(&self, map: &BTreeMap<String, String>) -> ExecutionTrace {
        ExecutionTrace {
            events: self.events.iter().map(|e| e.relabel(map)).collect(),
            end: self.end,
            detail: self.detail.clone(),
        }
    }

    /// Whether the events of `self` form a prefix of the events of `other`.
    pub fn is_prefix_of(&self, other: &ExecutionTrace) -> bool {
        other.events.starts_with(&self.events)
    }
}

impl fmt::Display for ExecutionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.events.iter().enumerate() {
            writeln!(f, "{}: {e}", k + 1)?;
        }
        write!(f, "end: {}", self.end)?;
        if let Some(d) = &self.detail {
            write!(f, " ({d})")?;
        }
        writeln!(f)
    }
}

/// One scheduler choice.
pub struct Transition<S> {
    pub events: Vec<Observable>,
    pub next: Result<S, Halt>,
}

/// A token game. `successors` must be deterministic and ordered.
pub trait Machine {
    type State: Clone + Eq + Hash;

    /// Initial state plus the events emitted while setting it up.
    fn initial(&self) -> (Self::State, Vec<Observable>);

    fn successors(&self, s: &Self::State) -> Vec<Transition<Self::State>>;
}

/// Runs with a seeded scheduler for at most `max_steps` steps.
pub fn run<M: Machine>(m: &M, max_steps: usize, seed: u64) -> ExecutionTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut state, mut events) = m.initial();
    for _ in 0..max_steps {
        let mut succ = m.successors(&state);
        if succ.is_empty() {
            return ExecutionTrace {
                events,
                end: EndKind::Completed,
                detail: None,
            };
        }
        let pick = succ.swap_remove(rng.gen_range(0..succ.len()));
        events.extend(pick.events);
        match pick.next {
            Ok(s) => state = s,
            Err(h) => {
                return ExecutionTrace {
                    events,
                    end: EndKind::Halted(h.kind),
                    detail: Some(h.detail),
                }
            }
        }
    }
    let end = if m.successors(&state).is_empty() {
        EndKind::Completed
    } else {
        EndKind::Truncated
    };
    ExecutionTrace {
        events,
        end,
        detail: None,
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EnumError {
    #[error("state bound exceeded: more than {bound} states explored")]
    BoundExceeded { bound: usize },
}

type Suffixes = Rc<BTreeSet<(Vec<Observable>, EndKind)>>;

struct Oracle<'a, M: Machine> {
    m: &'a M,
    memo: HashMap<(M::State, usize), Suffixes>,
    on_stack: HashSet<(M::State, usize)>,
    cuts: usize,
    expanded: usize,
    bound: usize,
}

impl<M: Machine> Oracle<'_, M> {
    fn explore(&mut self, s: &M::State, rem: usize) -> Result<Suffixes, EnumError> {
        let key = (s.clone(), rem);
        if let Some(r) = self.memo.get(&key) {
            return Ok(r.clone());
        }
        if self.on_stack.contains(&key) {
            // Silent cycle: the loop itself contributes no trace.
            self.cuts += 1;
            return Ok(Rc::new(BTreeSet::new()));
        }
        self.expanded += 1;
        if self.expanded > self.bound {
            return Err(EnumError::BoundExceeded { bound: self.bound });
        }
        let cuts_before = self.cuts;
        self.on_stack.insert(key.clone());
        let mut out = BTreeSet::new();
        let succ = self.m.successors(s);
        if succ.is_empty() {
            out.insert((Vec::new(), EndKind::Completed));
        }
        for t in succ {
            if t.events.len() > rem {
                out.insert((t.events[..rem].to_vec(), EndKind::Truncated));
                continue;
            }
            match t.next {
                Err(h) => {
                    out.insert((t.events, EndKind::Halted(h.kind)));
                }
                Ok(next) => {
                    let rest = self.explore(&next, rem - t.events.len())?;
                    for (tail, end) in rest.iter() {
                        let mut v = t.events.clone();
                        v.extend(tail.iter().cloned());
                        out.insert((v, *end));
                    }
                }
            }
        }
        self.on_stack.remove(&key);
        let out = Rc::new(out);
        if self.cuts == cuts_before {
            self.memo.insert(key, out.clone());
        }
        Ok(out)
    }
}

/// Every maximal trace over all scheduler choices, cut at `depth` observable
/// events (cut traces end `Truncated`).
pub fn enumerate_traces<M: Machine>(m: &M, depth: usize) -> Result<BTreeSet<ExecutionTrace>, EnumError> {
    enumerate_traces_bounded(m, depth, DEFAULT_STATE_BOUND)
}

pub fn enumerate_traces_bounded<M: Machine>(
    m: &M,
    depth: usize,
    bound: usize,
) -> Result<BTreeSet<ExecutionTrace>, EnumError> {
    let mut o = Oracle {
        m,
        memo: HashMap::new(),
        on_stack: HashSet::new(),
        cuts: 0,
        expanded: 0,
        bound,
    };
    let (s0, ev0) = m.initial();
    let mut out = BTreeSet::new();
    if ev0.len() > depth {
        out.insert(ExecutionTrace {
            events: ev0[..depth].to_vec(),
            end: EndKind::Truncated,
            detail: None,
        });
        return Ok(out);
    }
    for (tail, end) in o.explore(&s0, depth - ev0.len())?.iter() {
        let mut events = ev0.clone();
        events.extend(tail.iter().cloned());
        out.insert(ExecutionTrace {
            events,
            end: *end,
            detail: None,
        });
    }
    Ok(out)
}

/// Outcome of comparing two trace sets.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub depth: usize,
    pub source_traces: usize,
    pub target_traces: usize,
    /// Shortest trace only the source can produce.
    pub source_witness: Option<ExecutionTrace>,
    /// Shortest trace only the target can produce (already relabelled).
    pub target_witness: Option<ExecutionTrace>,
}

fn shortest(set: impl Iterator<Item = ExecutionTrace>) -> Option<ExecutionTrace> {
    set.min_by(|a, b| a.events.len().cmp(&b.events.len()).then_with(|| a.cmp(b)))
}

/// Compares a source trace set with a target trace set after relabelling the
/// target through `label_map`.
pub fn compare_trace_sets(
    source: &BTreeSet<ExecutionTrace>,
    target: &BTreeSet<ExecutionTrace>,
    label_map: &BTreeMap<String, String>,
    depth: usize,
) -> EquivalenceReport {
    let target: BTreeSet<ExecutionTrace> = target.iter().map(|t| t.relabel(label_map)).collect();
    let only_source = shortest(source.difference(&target).cloned());
    let only_target = shortest(target.difference(source).cloned());
    EquivalenceReport {
        equivalent: only_source.is_none() && only_target.is_none(),
        depth,
        source_traces: source.len(),
        target_traces: target.len(),
        source_witness: only_source,
        target_witness: only_target,
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.equivalent { "EQUIVALENT" } else { "MISMATCH" })?;
        writeln!(f, "depth: {}", self.depth)?;
        writeln!(f, "activity-diagram traces: {}", self.source_traces)?;
        writeln!(f, "bpmn traces: {}", self.target_traces)?;
        for (title, w) in [
            ("only in activity diagram", &self.source_witness),
            ("only in bpmn", &self.target_witness),
        ] {
            if let Some(w) = w {
                writeln!(f, "{title}:")?;
                for line in w.to_string().lines() {
                    writeln!(f, "  {line}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two independent tasks in any order, then done.
    struct Diamond;

    impl Machine for Diamond {
        type State = (bool, bool);

        fn initial(&self) -> (Self::State, Vec<Observable>) {
            ((false, false), Vec::new())
        }

        fn successors(&self, s: &Self::State) -> Vec<Transition<Self::State>> {
            let fire = |l: &str| vec![Observable::TaskFired { label: l.into() }];
            let mut out = Vec::new();
            if !s.0 {
                out.push(Transition {
                    events: fire("A"),
                    next: Ok((true, s.1)),
                });
            }
            if !s.1 {
                out.push(Transition {
                    events: fire("B"),
                    next: Ok((s.0, true)),
                });
            }
            out
        }
    }

    #[test]
    fn interleavings() {
        let set = enumerate_traces(&Diamond, 10).unwrap();
        assert_eq!(set.len(), 2);
        let cut = enumerate_traces(&Diamond, 1).unwrap();
        assert_eq!(cut.len(), 2);
        assert!(cut.iter().all(|t| t.end == EndKind::Truncated && t.events.len() == 1));
        for seed in 0..20 {
            let r = run(&Diamond, 100, seed);
            assert!(set.iter().any(|t| r.is_prefix_of(t)));
            assert_eq!(r, run(&Diamond, 100, seed));
        }
    }

    #[test]
    fn bound() {
        assert_eq!(
            enumerate_traces_bounded(&Diamond, 10, 2),
            Err(EnumError::BoundExceeded { bound: 2 })
        );
    }

    struct Spin;

    impl Machine for Spin {
        type State = u8;

        fn initial(&self) -> (u8, Vec<Observable>) {
            (0, Vec::new())
        }

        fn successors(&self, s: &u8) -> Vec<Transition<u8>> {
            let mut out = vec![Transition {
                events: Vec::new(),
                next: Ok((s + 1) % 3),
            }];
            if *s == 2 {
                out.push(Transition {
                    events: vec![Observable::ProcessEnded { label: "p".into() }],
                    next: Err(Halt::no_branch("g")),
                });
            }
            out
        }
    }

    #[test]
    fn silent_cycle_terminates() {
        let set = enumerate_traces(&Spin, 5).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(
            set.iter().next().unwrap().end,
            EndKind::Halted(HaltKind::DeadlockNoBranch)
        );
        assert!(run(&Spin, 50, 1).events.len() <= 1);
    }

    #[test]
    fn report_text() {
        let mut a = BTreeSet::new();
        a.insert(ExecutionTrace {
            events: vec![Observable::TaskFired { label: "x".into() }],
            end: EndKind::Completed,
            detail: None,
        });
        let r = compare_trace_sets(&a, &BTreeSet::new(), &BTreeMap::new(), 40);
        let text = r.to_string();
        assert!(text.starts_with("MISMATCH\n"));
        assert!(text.contains("1: TaskFired \"x\""));
        let r = compare_trace_sets(&a, &a.clone(), &BTreeMap::new(), 40);
        assert!(r.to_string().starts_with("EQUIVALENT\n"));
    }
}
