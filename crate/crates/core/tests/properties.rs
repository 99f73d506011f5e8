mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::gen::{gen_model_json, GenConfig, GEN_SCRIPT};
use wfmt::ad::AdModel;
use wfmt::bpmn::wellformed;
use wfmt::exec::{self, enumerate_traces, AdMachine, BpmnMachine, EndKind, Observable};
use wfmt::io::adm::{parse_adm, print_adm};
use wfmt::io::bpmn_xml::{read_bpmn_xml, write_bpmn_xml};
use wfmt::io::events::{parse_event_script, EventScript};
use wfmt::transform::transform;

fn small() -> GenConfig {
    GenConfig {
        max_depth: 2,
        ..GenConfig::default()
    }
}

fn model(seed: u64, cfg: GenConfig) -> AdModel {
    parse_adm(&gen_model_json(seed, cfg)).expect("generated model parses")
}

fn script() -> EventScript {
    parse_event_script(GEN_SCRIPT).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adm_print_is_a_parse_fixpoint(seed in any::<u64>()) {
        let m = model(seed, GenConfig::default());
        let once = print_adm(&m);
        let twice = print_adm(&parse_adm(&once).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn transform_is_total_wellformed_and_deterministic(seed in any::<u64>()) {
        let m = model(seed, GenConfig::default());
        let (a, ta) = transform(&m).unwrap();
        let (b, tb) = transform(&m).unwrap();
        prop_assert!(wellformed(&a).is_empty());
        let xml = write_bpmn_xml(&a).unwrap();
        prop_assert_eq!(&xml, &write_bpmn_xml(&b).unwrap());
        prop_assert_eq!(ta.report(), tb.report());
        let back = read_bpmn_xml(&xml).unwrap();
        prop_assert_eq!(&xml, &write_bpmn_xml(&back).unwrap());
    }

    #[test]
    fn every_node_is_traced_once(seed in any::<u64>()) {
        let m = model(seed, GenConfig::default());
        let (_, trace) = transform(&m).unwrap();
        for a in &m.activities {
            for n in &a.nodes {
                let hits = trace.entries.iter().filter(|e| e.sources.contains(&n.id)).count();
                prop_assert_eq!(hits, 1, "node {}", n.id);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_models_keep_their_trace_sets(seed in any::<u64>()) {
        let m = model(seed, small());
        let (bpmn, trace) = transform(&m).unwrap();
        let labels = trace.label_map(&m, &bpmn);
        let report = exec::equivalent(&m, &bpmn, &labels, &script(), 40).unwrap();
        prop_assert!(report.equivalent, "{}", report);
    }

    #[test]
    fn seeded_runs_are_oracle_prefixes(seed in any::<u64>(), run_seed in any::<u64>()) {
        let m = model(seed, small());
        let s = script();
        let (bpmn, _) = transform(&m).unwrap();
        let ad = AdMachine::new(&m, &s);
        let set = enumerate_traces(&ad, 40).unwrap();
        let run = exec::run(&ad, exec::DEFAULT_MAX_STEPS, run_seed);
        prop_assert!(set.iter().any(|t| run.is_prefix_of(t)), "{}", run);

        let bm = BpmnMachine::new(&bpmn, &s);
        let set = enumerate_traces(&bm, 40).unwrap();
        let run = exec::run(&bm, exec::DEFAULT_MAX_STEPS, run_seed);
        prop_assert!(set.iter().any(|t| run.is_prefix_of(t)), "{}", run);
    }

    #[test]
    fn nothing_in_a_region_fires_after_its_interrupt(seed in any::<u64>()) {
        let m = model(seed, small());
        let s = script();
        let a = &m.activities[0];
        for t in enumerate_traces(&AdMachine::new(&m, &s), 40).unwrap() {
            let mut dead: BTreeSet<String> = BTreeSet::new();
            for e in &t.events {
                match e {
                    Observable::Interrupted { label } => {
                        let r = a.regions.iter().find(|r| &r.name == label).expect("region label");
                        for id in &r.nodes {
                            dead.insert(a.nodes.iter().find(|n| &n.id == id).unwrap().name.clone());
                        }
                    }
                    Observable::TaskFired { label } => prop_assert!(!dead.contains(label), "{} after interrupt", label),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn seeded_runs_repeat_exactly(seed in any::<u64>(), run_seed in any::<u64>()) {
        let m = model(seed, small());
        let s = script();
        let first = exec::run_ad(&m, &s, exec::DEFAULT_MAX_STEPS, run_seed);
        prop_assert_eq!(&first, &exec::run_ad(&m, &s, exec::DEFAULT_MAX_STEPS, run_seed));
        prop_assert!(first.end != EndKind::Truncated);
    }
}
