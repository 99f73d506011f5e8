use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::ad::{AdModel, Element};
use crate::bpmn::BpmnModel;
use crate::id::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
    R11,
    R12,
    R13,
    R14,
    R15,
    R16,
}

impl RuleId {
    pub const ALL: [RuleId; 16] = [
        RuleId::R1,
        RuleId::R2,
        RuleId::R3,
        RuleId::R4,
        RuleId::R5,
        RuleId::R6,
        RuleId::R7,
        RuleId::R8,
        RuleId::R9,
        RuleId::R10,
        RuleId::R11,
        RuleId::R12,
        RuleId::R13,
        RuleId::R14,
        RuleId::R15,
        RuleId::R16,
    ];

    pub fn number(self) -> usize {
        self as usize + 1
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TraceEntry {
    pub rule: RuleId,
    pub sources: Vec<Id>,
    pub targets: Vec<Id>,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Id]| v.iter().map(Id::as_str).collect::<Vec<_>>().join(",");
        write!(
            f,
            "{} src=[{}] tgt=[{}]",
            self.rule,
            join(&self.sources),
            join(&self.targets)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TransformationTrace {
    /// Sorted by rule, then sources.
    pub entries: Vec<TraceEntry>,
    /// Source id → primary target id.
    pub id_map: BTreeMap<Id, Id>,
}

impl TransformationTrace {
    /// Line-oriented report, one entry per line.
    pub fn report(&self) -> String {
        self.entries.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn with_rule(&self, rule: RuleId) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(move |e| e.rule == rule)
    }

    /// Entries naming `source` among their sources.
    pub fn for_source<'a>(&'a self, source: &'a str) -> impl Iterator<Item = &'a TraceEntry> + 'a {
        self.entries
            .iter()
            .filter(move |e| e.sources.iter().any(|s| s.as_str() == source))
    }

    /// Maps observable labels of the target model back to labels of the
    /// source model: flow-object, pool, subprocess and message names.
    pub fn label_map(&self, ad: &AdModel, bpmn: &BpmnModel) -> BTreeMap<String, String> {
        let mut target_names: BTreeMap<&Id, &str> = BTreeMap::new();
        for p in &bpmn.pools {
            target_names.insert(&p.id, &p.name);
        }
        for m in &bpmn.messages {
            target_names.insert(&m.id, &m.name);
        }
        for o in bpmn.flow_objects() {
            target_names.insert(&o.id, &o.name);
        }
        let mut out = BTreeMap::new();
        for e in &self.entries {
            let [src] = e.sources.as_slice() else { continue };
            let name = match ad.lookup(src) {
                Some(Element::Activity(a)) => &a.name,
                Some(Element::Node(n)) => &n.name,
                Some(Element::Region(r)) => &r.name,
                _ => continue,
            };
            if let Some(t) = e.targets.first().and_then(|t| target_names.get(t)) {
                out.entry(t.to_string()).or_insert_with(|| name.clone());
            }
        }
        for m in &bpmn.messages {
            out.entry(m.name.clone()).or_insert_with(|| m.name.clone());
        }
        out
    }
}
