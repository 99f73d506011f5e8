//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines always show.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::gen::{check_shape, gen_model_json, has_regions_or_loops, GenConfig};
use common::{load_adm, load_script, MAPPING, RULES, SCRIPTS};
use wfmt::bpmn::{wellformed, BpmnModel, EventTrigger, FlowKind, FlowObject, Process};
use wfmt::exec::{self, enumerate_traces, AdMachine, BpmnMachine};
use wfmt::io::adm::parse_adm;
use wfmt::io::bpmn_xml::write_bpmn_xml;
use wfmt::transform::transform;
use wfmt::validate::{has_errors, validate};

const FIXTURE_BUDGET: Duration = Duration::from_secs(1);
const EQUIV_BUDGET: Duration = Duration::from_secs(60);
const EQUIV_DEPTH: usize = 40;
const DESK_SCALE: usize = 20;
const REPEATS: usize = 10;
const FUZZ_MODELS: u64 = 500;
const ORACLE_RUNS: u64 = 100;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn processes(m: &BpmnModel) -> Vec<&Process> {
    m.pools.iter().flat_map(|p| p.process.walk()).collect()
}

fn subprocesses(m: &BpmnModel) -> Vec<&FlowObject> {
    m.flow_objects().filter(|o| o.subprocess().is_some()).collect()
}

fn c1_fixture_structure() -> Outcome {
    let start = Instant::now();
    let ad = parse_adm(&common::read(common::FIXTURE)).map_err(|e| e.to_string())?;
    let (m, _) = transform(&ad).map_err(|e| e.to_string())?;
    write_bpmn_xml(&m).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let names: BTreeSet<&str> = m.pools.iter().map(|p| p.name.as_str()).collect();
    if m.pools.len() != 2 || names != BTreeSet::from(["Customer Process", "Supplier Process"]) {
        return Err(format!("pools {names:?}"));
    }
    let hosts: Vec<&FlowObject> = subprocesses(&m)
        .into_iter()
        .filter(|s| processes(&m).iter().any(|p| p.boundary_events(&s.id).next().is_some()))
        .collect();
    if hosts.len() != 1 {
        return Err(format!("{} subprocesses carry boundary events", hosts.len()));
    }
    let (host_process, boundary): (&Process, Vec<&FlowObject>) = processes(&m)
        .into_iter()
        .map(|p| (p, p.boundary_events(&hosts[0].id).collect::<Vec<_>>()))
        .find(|(_, b)| !b.is_empty())
        .expect("host found above");
    let message_events = boundary
        .iter()
        .filter(|b| {
            matches!(
                b.kind,
                FlowKind::IntermediateEvent {
                    trigger: EventTrigger::Message,
                    ..
                }
            )
        })
        .count();
    if boundary.len() != 1 || message_events != 1 {
        return Err(format!("{} boundary events, {message_events} message", boundary.len()));
    }
    let exception_flows = host_process.outgoing(&boundary[0].id).count();
    if exception_flows != 1 {
        return Err(format!("{exception_flows} exception flows"));
    }
    let order_receives = m
        .flow_objects()
        .filter_map(|o| o.task())
        .filter(|t| t.instantiate)
        .filter(|t| {
            t.message
                .as_ref()
                .and_then(|id| m.message(id))
                .is_some_and(|d| d.name == "Order")
        })
        .count();
    if order_receives < 1 {
        return Err("no instantiating Order receive".into());
    }
    let mi = subprocesses(&m)
        .iter()
        .filter(|s| s.subprocess().unwrap().multi_instance.is_some())
        .count();
    if mi != 1 {
        return Err(format!("{mi} multi-instance subprocesses"));
    }
    let pool_of = |id| m.locate(id).map(|s| s.pool.id.clone());
    let inter_pool = m
        .message_flows
        .iter()
        .filter(|f| pool_of(&f.source) != pool_of(&f.target))
        .count();
    if inter_pool < 1 {
        return Err("no inter-pool message flow".into());
    }
    if elapsed >= FIXTURE_BUDGET {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "2 pools, 1 boundary-carrying subprocess (1 message event, 1 exception flow), {order_receives} Order receive, 1 multi-instance, {inter_pool} message flows, {elapsed:?}"
    ))
}

fn c2_mapping() -> Outcome {
    let failed: Vec<String> = MAPPING
        .iter()
        .filter_map(|(line, stem, rule)| common::check_mapping(stem, rule).err().map(|e| format!("{line}: {e}")))
        .collect();
    if failed.is_empty() {
        Ok(format!("{}/{} mapping lines", MAPPING.len(), MAPPING.len()))
    } else {
        Err(failed.join("; "))
    }
}

fn c3_validator() -> Outcome {
    let failed: Vec<String> = RULES
        .iter()
        .filter_map(|code| common::check_rule(code).err().map(|e| format!("{code}: {e}")))
        .collect();
    if failed.is_empty() {
        Ok(format!("{}/{} rules accept and reject", RULES.len(), RULES.len()))
    } else {
        Err(failed.join("; "))
    }
}

fn c4_equivalence() -> Outcome {
    let (ad, bpmn, trace) = common::supplier();
    let largest = processes(&bpmn).iter().map(|p| p.flow_objects.len()).max().unwrap_or(0);
    if largest > DESK_SCALE {
        return Err(format!("a process has {largest} flow objects"));
    }
    let labels = trace.label_map(&ad, &bpmn);
    let mut slowest = Duration::ZERO;
    for script in SCRIPTS {
        let start = Instant::now();
        let r = exec::equivalent(&ad, &bpmn, &labels, &load_script(script), EQUIV_DEPTH)
            .map_err(|e| format!("{script}: {e}"))?;
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        if !r.equivalent {
            return Err(format!("{script}: {r}"));
        }
        if elapsed >= EQUIV_BUDGET {
            return Err(format!("{script}: took {elapsed:?}"));
        }
    }
    Ok(format!(
        "{} scripts EQUIVALENT at depth {EQUIV_DEPTH}, slowest {slowest:?}",
        SCRIPTS.len()
    ))
}

/// Every shipped model that the validator accepts.
fn valid_fixtures() -> Vec<String> {
    let mut out = vec![common::FIXTURE.to_string()];
    for dir in ["tests/fixtures/mapping", "tests/fixtures/validator"] {
        let mut found: Vec<String> = std::fs::read_dir(common::crate_dir().join(dir))
            .expect("fixture dir")
            .filter_map(|e| e.ok())
            .map(|e| format!("{dir}/{}", e.file_name().to_string_lossy()))
            .filter(|p| p.ends_with(".adm.json"))
            .collect();
        found.sort();
        out.extend(found.into_iter().filter(|p| !has_errors(&validate(&load_adm(p)))));
    }
    out
}

fn c5_determinism() -> Outcome {
    let fixtures = valid_fixtures();
    for f in &fixtures {
        let ad = load_adm(f);
        let xml = |_| -> Result<String, String> {
            let (m, _) = transform(&ad).map_err(|e| e.to_string())?;
            write_bpmn_xml(&m).map_err(|e| e.to_string())
        };
        if xml(0)? != xml(1)? {
            return Err(format!("{f}: BPMN-XML differs between runs"));
        }
    }
    let (ad, bpmn, _) = common::supplier();
    for script in SCRIPTS {
        let s = load_script(script);
        for seed in [0, 7, 42] {
            let a = exec::run_ad(&ad, &s, exec::DEFAULT_MAX_STEPS, seed);
            let b = exec::run_bpmn(&bpmn, &s, exec::DEFAULT_MAX_STEPS, seed);
            for _ in 1..REPEATS {
                if exec::run_ad(&ad, &s, exec::DEFAULT_MAX_STEPS, seed) != a {
                    return Err(format!("{script} seed {seed}: run_ad differs"));
                }
                if exec::run_bpmn(&bpmn, &s, exec::DEFAULT_MAX_STEPS, seed) != b {
                    return Err(format!("{script} seed {seed}: run_bpmn differs"));
                }
            }
        }
    }
    Ok(format!(
        "{} fixtures byte-identical, {} scripts x 3 seeds x {REPEATS} runs identical",
        fixtures.len(),
        SCRIPTS.len()
    ))
}

fn c6_fuzz() -> Outcome {
    let mut shaped = 0;
    for seed in 0..FUZZ_MODELS {
        let text = gen_model_json(seed, GenConfig::default());
        let ad = parse_adm(&text).map_err(|e| format!("seed {seed}: {e}"))?;
        let diags = validate(&ad);
        if !diags.is_empty() {
            return Err(format!("seed {seed}: generator produced {diags:?}"));
        }
        let (m, trace) = transform(&ad).map_err(|e| format!("seed {seed}: {e}"))?;
        let wf = wellformed(&m);
        if !wf.is_empty() {
            return Err(format!("seed {seed}: {wf:?}"));
        }
        if !has_regions_or_loops(&ad) {
            shaped += 1;
            check_shape(&ad, &m, &trace).map_err(|e| format!("seed {seed}: {e}"))?;
        }
    }
    Ok(format!(
        "{FUZZ_MODELS} models transform and are well-formed, shape holds on {shaped} region/loop-free ones"
    ))
}

fn c7_oracle_inclusion() -> Outcome {
    let (ad, bpmn, _) = common::supplier();
    let scripts: Vec<_> = SCRIPTS.iter().map(|s| load_script(s)).collect();
    let mut sets = Vec::new();
    for s in &scripts {
        let a = enumerate_traces(&AdMachine::new(&ad, s), EQUIV_DEPTH).map_err(|e| e.to_string())?;
        let b = enumerate_traces(&BpmnMachine::new(&bpmn, s), EQUIV_DEPTH).map_err(|e| e.to_string())?;
        sets.push((a, b));
    }
    for seed in 0..ORACLE_RUNS {
        let k = (seed as usize) % scripts.len();
        let (a_set, b_set) = &sets[k];
        let a = exec::run_ad(&ad, &scripts[k], exec::DEFAULT_MAX_STEPS, seed);
        if !a_set.iter().any(|t| a.is_prefix_of(t)) {
            return Err(format!("{} seed {seed}: run_ad trace not in oracle set", SCRIPTS[k]));
        }
        let b = exec::run_bpmn(&bpmn, &scripts[k], exec::DEFAULT_MAX_STEPS, seed);
        if !b_set.iter().any(|t| b.is_prefix_of(t)) {
            return Err(format!("{} seed {seed}: run_bpmn trace not in oracle set", SCRIPTS[k]));
        }
    }
    Ok(format!("{ORACLE_RUNS} seeded runs per executor are oracle members"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("fixture reproduction", c1_fixture_structure),
        ("mapping-table coverage", c2_mapping),
        ("validator catalog", c3_validator),
        ("semantics preservation", c4_equivalence),
        ("determinism", c5_determinism),
        ("fuzzed totality", c6_fuzz),
        ("oracle inclusion", c7_oracle_inclusion),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
