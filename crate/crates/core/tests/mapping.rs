mod common;

fn case(line: &str) {
    let (_, stem, rule) = common::MAPPING.iter().find(|c| c.0 == line).expect("known line");
    if let Err(e) = common::check_mapping(stem, rule) {
        panic!("{line}: {e}");
    }
}

#[test]
fn activity_becomes_pool() {
    case("Activity");
}

#[test]
fn performer_becomes_participant() {
    case("Performer");
}

#[test]
fn call_manual_task_becomes_manual_task() {
    case("CallManualTask");
}

#[test]
fn call_service_task_becomes_service_task() {
    case("CallServiceTask");
}

#[test]
fn pins_become_message() {
    case("Pins");
}

#[test]
fn object_flow_becomes_sequence_flow() {
    case("ObjectFlow");
}

#[test]
fn org_unit_becomes_entity_participant() {
    case("OrgUnit");
}

#[test]
fn position_becomes_role_participant() {
    case("Position");
}

#[test]
fn variable_becomes_property() {
    case("Variable");
}

#[test]
fn variable_actions_become_assignments() {
    case("Read/WriteVariableAction");
}

#[test]
fn region_becomes_subprocess_with_boundary_event() {
    case("InterruptibleRegion");
}
