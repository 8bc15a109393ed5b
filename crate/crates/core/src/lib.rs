//! Behavioral comparison of software variants.
//!
//! Each variant (a version, configuration or usage scenario) is a *model set*:
//! a total mapping from entities such as functions or components to finite
//! state machines. This crate compares model sets at six levels of detail,
//! from "which variants behave identically" down to annotated structural
//! diffs of individual state machines:
//!
//! 1. model-set variants ([`levels::level1`])
//! 2. the lattice of model-set variants ([`levels::level2`])
//! 3. the model-set difference matrix ([`levels::level3`])
//! 4. per-entity variants ([`levels::level4`])
//! 5. per-entity variant lattices ([`levels::level5`])
//! 6. diff machines between entity variants ([`levels::level6`])
//!
//! Language-level algorithms live in [`automata`], structural diffing in
//! [`ltsdiff`], file formats in [`ingest`] and serialization in [`report`].

pub mod automata;
pub mod cli;
pub mod ingest;
pub mod levels;
pub mod ltsdiff;
pub mod model_sets;
mod par;
pub mod report;

pub use automata::{Event, Nfa, Trace};
pub use ltsdiff::{DiffMachine, DiffParams};
pub use model_sets::{EntityId, ModelSet, Workspace};
