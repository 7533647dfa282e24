//! Independent oracles and property checkers: intersection distances,
//! regularity constants, erosion and subgradient bounds, and Fejér-type
//! verdicts on iterate sequences.

pub mod bounds;
pub mod fejer;
pub mod oracle;
pub mod regularity;

pub use bounds::{
    erosion_inequality_probe, random_affine_family, subgradient_bound_probe, BoundVerdict,
    EpsilonSampling, ErosionTarget, SubgradientBoundReport,
};
pub use fejer::{
    basic_inequality_check, qf2_epsilons, qf_check_sequence, qf_verdict, summability_monitor,
    BasicInequalityReport, QfKind, QfVerdict, SummabilityReport,
};
pub use oracle::{oracle_distance, oracle_estimate, OracleConfig, OracleEstimate, OracleMethod};
pub use regularity::{operator_regularity_estimate, regularity_probe, RegularityProbe, RegularityReport};
