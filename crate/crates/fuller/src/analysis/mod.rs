//! Layer structure of switch sets and the scalar sequences around it.

pub mod conditions;
pub mod order;
pub mod sequence;
pub mod synthetic;

pub use conditions::{check_accumulation_conditions, Condition, ConditionViolation};
pub use order::{
    auto_epsilon, fuller_order, strip_isolated, AccumulationPoint, ClusterPoint, Epsilon,
    OrderOptions, OrderReport, SwitchSet,
};
pub use sequence::{
    chatter_ratio, chatter_ratio_gaps, divergence_check, log_growth_fit, recursion_simulate,
    LogFit, RatioEstimate,
};
