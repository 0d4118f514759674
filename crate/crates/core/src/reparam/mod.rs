//! Parameter changes, reparameterizations and the exhaustive oracle.

pub mod changes;
pub mod oracle;

pub use changes::{
    admissible_changes, apply_change, apply_changes, param_grid, set_slot, slots, ActiveDomain,
    Change, ParamChange, Slot,
};
pub use oracle::{
    enumerate_reparameterizations, exact_explanations_oracle, is_successful, OracleResult, SrEntry,
};
