//! Reductions from two-counter machine reachability to unification in modal
//! logics with the universal modality and with nominals, together with the
//! semantic machinery needed to check both directions on concrete instances.

pub mod decision;
pub mod encoding;
pub mod eqtheory;
pub mod formula;
pub mod gen;
pub mod kripke;
pub mod minsky;
pub mod propsat;
pub mod witness;
pub mod workbench;
