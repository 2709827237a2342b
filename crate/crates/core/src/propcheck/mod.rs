//! Machine-checked verdicts for the structural statements about
//! c-subdifferentials, with the seeded instance generator that feeds them.

pub mod checks;
pub mod instance;
pub mod suite;

pub use checks::{
    check_cost_self_subdiff, check_domain_interval, check_grad_inclusion, check_intersection_inclusion, check_local_support_iff,
    check_mixture, check_order_propagation, check_set_valued_convexity, check_subdiff_convexity, PairPlan,
};
pub use instance::{dyadic_grid_measure, generate_instance, random_convex, Generator, InstanceConfig};
pub use suite::{config_hash, run_suite, SuiteConfig, SuiteReport};
