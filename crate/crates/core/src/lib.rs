//! Transformation of UML activity-diagram workflow models into BPMN process
//! models, with validation, serialization and token-game execution of both.

pub mod ad;
pub mod bpmn;
pub mod cli;
pub mod exec;
pub mod id;
pub mod io;
pub mod transform;
pub mod validate;

pub use id::Id;
