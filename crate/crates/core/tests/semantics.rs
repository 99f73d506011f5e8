mod common;

use std::collections::BTreeSet;

use common::{load_adm, load_script, supplier, SCRIPTS};
use wfmt::bpmn::FlowKind;
use wfmt::exec::{
    self, enumerate_traces, AdMachine, BpmnMachine, EndKind, ExecutionTrace, HaltKind, Observable, Value,
};
use wfmt::io::adm::parse_adm;
use wfmt::io::events::EventScript;
use wfmt::io::expr::parse_expr;
use wfmt::transform::transform;

fn task(l: &str) -> Observable {
    Observable::TaskFired { label: l.into() }
}

fn received(n: &str) -> Observable {
    Observable::MessageReceived { name: n.into() }
}

fn ended(l: &str) -> Observable {
    Observable::ProcessEnded { label: l.into() }
}

fn interrupted(l: &str) -> Observable {
    Observable::Interrupted { label: l.into() }
}

fn tasks(t: &ExecutionTrace) -> Vec<&str> {
    t.events
        .iter()
        .filter_map(|e| match e {
            Observable::TaskFired { label } => Some(label.as_str()),
            _ => None,
        })
        .collect()
}

fn order_digest(script: &EventScript) -> String {
    match &script.events[0] {
        wfmt::io::events::ScriptEvent::Message { payload, .. } => payload.digest(),
        other => panic!("unexpected head {other:?}"),
    }
}

#[test]
fn happy_path_runs_the_whole_order() {
    let (ad, _, _) = supplier();
    let s = load_script("fixtures/happy.events");
    let t = exec::run_ad(&ad, &s, exec::DEFAULT_MAX_STEPS, 0);
    let expected = vec![
        received("Order"),
        task("Check Stock"),
        task("Pack Item"),
        task("Pack Item"),
        task("Ship Order"),
        task("Approve Order"),
        Observable::MessageSent {
            name: "Invoice".into(),
            digest: order_digest(&s),
        },
        ended("Supplier Process"),
    ];
    assert_eq!(t.events, expected);
    assert_eq!(t.end, EndKind::Completed);
}

#[test]
fn foreach_iterates_once_per_item() {
    let (ad, bpmn, _) = supplier();
    for (script, items) in [
        ("fixtures/happy.events", 2),
        ("fixtures/decision_high.events", 1),
        ("fixtures/empty_items.events", 0),
    ] {
        let s = load_script(script);
        for t in [
            exec::run_ad(&ad, &s, exec::DEFAULT_MAX_STEPS, 3),
            exec::run_bpmn(&bpmn, &s, exec::DEFAULT_MAX_STEPS, 3),
        ] {
            let packs = tasks(&t).iter().filter(|l| **l == "Pack Item").count();
            assert_eq!(packs, items, "{script}");
            assert!(tasks(&t).contains(&"Ship Order"), "{script}");
        }
    }
}

#[test]
fn decision_follows_the_order_total() {
    let (ad, _, _) = supplier();
    for (script, approve) in [
        ("fixtures/decision_low.events", false),
        ("fixtures/decision_high.events", true),
        ("fixtures/empty_items.events", false),
    ] {
        let t = exec::run_ad(&ad, &load_script(script), exec::DEFAULT_MAX_STEPS, 0);
        assert_eq!(tasks(&t).contains(&"Approve Order"), approve, "{script}");
        assert_eq!(t.end, EndKind::Completed);
    }
}

/// The cancel can land before any of the four region tasks, or after the
/// last one while the region is still being left; or it is never taken.
#[test]
fn cancel_interrupts_at_every_point_of_the_region() {
    let (ad, _, _) = supplier();
    let s = load_script("fixtures/cancel.events");
    let set = enumerate_traces(&AdMachine::new(&ad, &s), 40).unwrap();
    let region = ["Check Stock", "Pack Item", "Pack Item", "Ship Order"];
    let mut expected = BTreeSet::new();
    for k in 0..=region.len() {
        let mut ev = vec![received("Order")];
        ev.extend(region[..k].iter().map(|l| task(l)));
        ev.extend([
            received("Cancel"),
            interrupted("Order Handling"),
            task("Record Cancellation"),
            ended("Supplier Process"),
        ]);
        expected.insert(ev);
    }
    let mut full = vec![received("Order")];
    full.extend(region.iter().map(|l| task(l)));
    full.extend([
        task("Approve Order"),
        Observable::MessageSent {
            name: "Invoice".into(),
            digest: order_digest(&s),
        },
        ended("Supplier Process"),
    ]);
    expected.insert(full);
    let got: BTreeSet<Vec<Observable>> = set.into_iter().map(|t| t.events).collect();
    assert_eq!(got, expected);
}

#[test]
fn customer_round_trip_pays_the_invoice() {
    let (ad, _, _) = supplier();
    let s = load_script("fixtures/customer.events");
    let set = enumerate_traces(&AdMachine::new(&ad, &s), 40).unwrap();
    assert_eq!(set.len(), 1);
    let t = set.into_iter().next().unwrap();
    assert_eq!(
        tasks(&t),
        [
            "Check Stock",
            "Pack Item",
            "Pack Item",
            "Ship Order",
            "Approve Order",
            "Pay Invoice"
        ]
    );
    let ends: Vec<&Observable> = t
        .events
        .iter()
        .filter(|e| matches!(e, Observable::ProcessEnded { .. }))
        .collect();
    assert_eq!(ends, [&ended("Supplier Process"), &ended("Customer Process")]);
}

#[test]
fn fixture_and_transform_are_equivalent_for_every_script() {
    let (ad, bpmn, trace) = supplier();
    let labels = trace.label_map(&ad, &bpmn);
    for script in SCRIPTS {
        let r = exec::equivalent(&ad, &bpmn, &labels, &load_script(script), 40).unwrap();
        assert!(r.equivalent, "{script}\n{r}");
        assert!(r.to_string().starts_with("EQUIVALENT\n"));
    }
}

#[test]
fn flipped_guard_is_a_mismatch_with_witnesses() {
    let (ad, mut bpmn, trace) = supplier();
    let labels = trace.label_map(&ad, &bpmn);
    let guard = parse_expr("order.total > 1000").unwrap();
    let flipped = parse_expr("order.total <= 1000").unwrap();
    let mut hits = 0;
    for pool in &mut bpmn.pools {
        for f in &mut pool.process.sequence_flows {
            if f.condition.as_ref() == Some(&guard) {
                f.condition = Some(flipped.clone());
                hits += 1;
            }
        }
    }
    assert_eq!(hits, 1);
    let r = exec::equivalent(&ad, &bpmn, &labels, &load_script("fixtures/happy.events"), 40).unwrap();
    assert!(!r.equivalent);
    assert!(r.to_string().starts_with("MISMATCH\n"));
    let src = r.source_witness.expect("source witness");
    let tgt = r.target_witness.expect("target witness");
    assert!(tasks(&src).contains(&"Approve Order"));
    assert!(!tasks(&tgt).contains(&"Approve Order"));
}

#[test]
fn minimal_model_only_ends() {
    let ad = load_adm("tests/fixtures/mapping/activity.adm.json");
    let (bpmn, trace) = transform(&ad).unwrap();
    let none = EventScript::default();
    let expected = vec![ended("Solo")];
    assert_eq!(exec::run_ad(&ad, &none, 100, 0).events, expected);
    let b = exec::run_bpmn(&bpmn, &none, 100, 0);
    assert_eq!(b.events, expected);
    let r = exec::equivalent(&ad, &bpmn, &trace.label_map(&ad, &bpmn), &none, 40).unwrap();
    assert!(r.equivalent);
}

#[test]
fn fork_of_two_tasks_has_two_interleavings() {
    let ad = load_adm("tests/fixtures/validator/wf21_accept.adm.json");
    let none = EventScript::default();
    let got: BTreeSet<Vec<Observable>> = enumerate_traces(&AdMachine::new(&ad, &none), 40)
        .unwrap()
        .into_iter()
        .map(|t| t.events)
        .collect();
    let expected = BTreeSet::from([
        vec![task("Left"), task("Right"), ended("Split")],
        vec![task("Right"), task("Left"), ended("Split")],
    ]);
    assert_eq!(got, expected);
}

#[test]
fn all_false_guards_without_default_deadlock() {
    let text = r#"{"classes":[],"components":[],"activities":[{"id":"a","name":"Stuck","stereotype":"MainProcess",
        "nodes":[{"id":"i","kind":"InitialNode","name":"Start"},
                 {"id":"w","kind":"WriteVariableAction","name":"Zero","assign":"x := 0"},
                 {"id":"d","kind":"DecisionNode","name":"Which"},
                 {"id":"f1","kind":"FlowFinalNode","name":"One"},
                 {"id":"f2","kind":"FlowFinalNode","name":"Two"}],
        "edges":[{"id":"e1","kind":"control","source":"i","target":"w"},
                 {"id":"e2","kind":"control","source":"w","target":"d"},
                 {"id":"e3","kind":"control","source":"d","target":"f1","guard":"x > 1"},
                 {"id":"e4","kind":"control","source":"d","target":"f2","guard":"x > 2"}],
        "variables":[{"id":"v","name":"x","type":"Integer"}]}]}"#;
    let ad = parse_adm(text).unwrap();
    let (bpmn, _) = transform(&ad).unwrap();
    assert!(bpmn.flow_objects().any(|o| matches!(o.kind, FlowKind::Gateway { .. })));
    let none = EventScript::default();
    for t in [exec::run_ad(&ad, &none, 100, 0), exec::run_bpmn(&bpmn, &none, 100, 0)] {
        assert_eq!(t.end, EndKind::Halted(HaltKind::DeadlockNoBranch), "{t}");
        assert!(t.events.is_empty());
    }
}

#[test]
fn seeded_runs_are_members_of_the_oracle_set() {
    let (ad, bpmn, _) = supplier();
    for script in SCRIPTS {
        let s = load_script(script);
        let ad_set = enumerate_traces(&AdMachine::new(&ad, &s), 40).unwrap();
        let bpmn_set = enumerate_traces(&BpmnMachine::new(&bpmn, &s), 40).unwrap();
        for seed in 0..8 {
            let t = exec::run_ad(&ad, &s, exec::DEFAULT_MAX_STEPS, seed);
            assert!(ad_set.iter().any(|m| t.is_prefix_of(m)), "{script} seed {seed}");
            let t = exec::run_bpmn(&bpmn, &s, exec::DEFAULT_MAX_STEPS, seed);
            assert!(bpmn_set.iter().any(|m| t.is_prefix_of(m)), "{script} seed {seed}");
        }
    }
}

#[test]
fn payload_digest_ignores_key_order() {
    let a = Value::from_json(&serde_json::json!({"id": 1, "total": 2})).unwrap();
    let b = Value::from_json(&serde_json::json!({"total": 2, "id": 1})).unwrap();
    assert_eq!(a.digest(), b.digest());
}
