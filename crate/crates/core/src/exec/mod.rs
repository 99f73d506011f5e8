//! Token-game executors and the trace oracle.

pub mod ad_machine;
pub mod bpmn_machine;
pub mod engine;
pub mod eval;
mod mailbox;
pub mod value;

use std::collections::BTreeMap;

pub use ad_machine::{run_ad, AdMachine};
pub use bpmn_machine::{run_bpmn, BpmnMachine};
pub use engine::{
    compare_trace_sets, enumerate_traces, run, EndKind, EnumError, EquivalenceReport, ExecutionTrace, HaltKind,
    Machine, Observable, DEFAULT_DEPTH, DEFAULT_MAX_STEPS,
};
pub use eval::{eval_expr, EvalError};
pub use value::{Value, VarEnv};

use crate::ad::AdModel;
use crate::bpmn::BpmnModel;
use crate::io::events::EventScript;

/// Compares the trace sets of both models under one script. `label_map`
/// maps BPMN labels to activity-diagram labels.
pub fn equivalent(
    ad: &AdModel,
    bpmn: &BpmnModel,
    label_map: &BTreeMap<String, String>,
    script: &EventScript,
    depth: usize,
) -> Result<EquivalenceReport, EnumError> {
    let source = enumerate_traces(&AdMachine::new(ad, script), depth)?;
    let target = enumerate_traces(&BpmnMachine::new(bpmn, script), depth)?;
    Ok(compare_trace_sets(&source, &target, label_map, depth))
}
