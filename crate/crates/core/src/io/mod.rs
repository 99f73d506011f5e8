pub mod adm;
pub mod bpmn_xml;
pub mod dot;
pub mod events;
pub mod expr;
