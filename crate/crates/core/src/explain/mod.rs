//! Explanation search over a trace, side-effect bounds and the full pipeline.

pub mod bounds;
pub mod msr;
pub mod pipeline;

pub use bounds::{side_effect_bounds, BoundsBreakdown};
pub use msr::{approximate_msrs, consistent_lineage};
pub use pipeline::{
    check_precondition, order_explanations, whynot_pipeline, Explanation, PipelineResult,
};
