//! Canonical renumbering of target ids: `<Kind>_<n>` numbered in model order,
//! zero-padded so that lexical order equals numeric order.

use std::collections::BTreeMap;

use crate::bpmn::{BpmnModel, EndResult, FlowKind, Process};
use crate::id::Id;

fn kind_prefix(k: &FlowKind) -> &'static str {
    match k {
        FlowKind::StartEvent { .. } => "StartEvent",
        FlowKind::EndEvent { .. } => "EndEvent",
        FlowKind::IntermediateEvent { .. } => "Event",
        FlowKind::Task(_) => "Task",
        FlowKind::Subprocess(_) => "Subprocess",
        FlowKind::Gateway { .. } => "Gateway",
    }
}

fn collect_process(p: &Process, out: &mut Vec<(&'static str, Id)>) {
    out.push(("Process", p.id.clone()));
    for prop in &p.properties {
        out.push(("Property", prop.id.clone()));
    }
    for o in &p.flow_objects {
        out.push((kind_prefix(&o.kind), o.id.clone()));
        if let FlowKind::Subprocess(s) = &o.kind {
            collect_process(&s.body, out);
        }
    }
    for f in &p.sequence_flows {
        out.push(("Flow", f.id.clone()));
    }
}

/// Old id → canonical id for every id of the model.
pub fn canonical_ids(m: &BpmnModel) -> BTreeMap<Id, Id> {
    let mut order: Vec<(&'static str, Id)> = Vec::new();
    order.extend(m.participants.iter().map(|p| ("Participant", p.id.clone())));
    order.extend(m.messages.iter().map(|p| ("Message", p.id.clone())));
    for pool in &m.pools {
        order.push(("Pool", pool.id.clone()));
        collect_process(&pool.process, &mut order);
    }
    order.extend(m.message_flows.iter().map(|p| ("MessageFlow", p.id.clone())));

    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for (p, _) in &order {
        *totals.entry(p).or_default() += 1;
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (p, id) in order {
        let k = seen.entry(p).or_default();
        *k += 1;
        let width = totals[p].to_string().len().max(3);
        out.insert(id, Id::new(format!("{p}_{:0width$}", *k)));
    }
    out
}

fn rename_process(p: &mut Process, map: &BTreeMap<Id, Id>) {
    let r = |id: &mut Id| {
        if let Some(n) = map.get(id) {
            *id = n.clone();
        }
    };
    r(&mut p.id);
    for prop in &mut p.properties {
        r(&mut prop.id);
    }
    for o in &mut p.flow_objects {
        r(&mut o.id);
        match &mut o.kind {
            FlowKind::IntermediateEvent {
                attached_to, message, ..
            } => {
                attached_to.iter_mut().for_each(r);
                message.iter_mut().for_each(r);
            }
            FlowKind::EndEvent {
                result: EndResult::Message { message, .. },
            } => r(message),
            FlowKind::Task(t) => {
                t.performer.iter_mut().for_each(r);
                t.message.iter_mut().for_each(r);
            }
            FlowKind::Subprocess(s) => rename_process(&mut s.body, map),
            _ => {}
        }
    }
    for f in &mut p.sequence_flows {
        r(&mut f.id);
        r(&mut f.source);
        r(&mut f.target);
    }
    p.properties.sort_by(|a, b| a.id.cmp(&b.id));
    p.flow_objects.sort_by(|a, b| a.id.cmp(&b.id));
    p.sequence_flows.sort_by(|a, b| a.id.cmp(&b.id));
}

/// Applies an id map to every id and reference, then sorts every collection
/// into writer order (pools by name, everything else by id).
pub fn rename(m: &mut BpmnModel, map: &BTreeMap<Id, Id>) {
    let r = |id: &mut Id| {
        if let Some(n) = map.get(id) {
            *id = n.clone();
        }
    };
    for p in &mut m.participants {
        r(&mut p.id);
    }
    for msg in &mut m.messages {
        r(&mut msg.id);
    }
    for pool in &mut m.pools {
        r(&mut pool.id);
        pool.participant.iter_mut().for_each(r);
        rename_process(&mut pool.process, map);
    }
    for mf in &mut m.message_flows {
        r(&mut mf.id);
        r(&mut mf.source);
        r(&mut mf.target);
        r(&mut mf.message);
    }
    m.participants.sort_by(|a, b| a.id.cmp(&b.id));
    m.messages.sort_by(|a, b| a.id.cmp(&b.id));
    m.pools
        .sort_by(|a, b| a.name.cmp(&b.name).then_with(|| a.id.cmp(&b.id)));
    m.message_flows.sort_by(|a, b| a.id.cmp(&b.id));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpmn::{FlowObject, Pool, StartTrigger};

    #[test]
    fn padding_and_order() {
        let mut m = BpmnModel::new();
        let mut proc = Process::new("p", "P");
        for i in 0..12 {
            proc.flow_objects.push(FlowObject::new(
                format!("s{i}"),
                "s",
                FlowKind::StartEvent {
                    trigger: StartTrigger::None,
                },
            ));
        }
        m.add_pool(Pool {
            id: "pool".into(),
            name: "P".into(),
            participant: None,
            process: proc,
        })
        .unwrap();
        let map = canonical_ids(&m);
        assert_eq!(map[&Id::from("s0")], "StartEvent_001");
        assert_eq!(map[&Id::from("s11")], "StartEvent_012");
        assert_eq!(map[&Id::from("pool")], "Pool_001");
        rename(&mut m, &map);
        let ids: Vec<&str> = m.pools[0].process.flow_objects.iter().map(|o| o.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }
}
