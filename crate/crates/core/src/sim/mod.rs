//! Desk-scale simulation: rank records, synthetic collections, constrained
//! positive sampling, cost accounting and seeded replication.

pub mod cost;
pub mod dynamics;
pub mod record;
pub mod replicate;
pub mod sampling;
pub mod summary;
pub mod synth;

pub use cost::{cost_breakdown, CostBreakdown};
pub use dynamics::{cost_dynamics, CostDynamics, CurvePoint, WorstCase};
pub use record::{ingest_record, record_to_json};
pub use replicate::{
    derive_seed, replicate, replicate_with, Execution, RepOutcome, ReplicationSummary,
};
pub use sampling::draw_positive_sample;
pub use summary::BoxStats;
pub use synth::{gen_synthetic, Family, SyntheticModel};
