#![allow(dead_code)]

use feasikit::diagnostics::OracleConfig;
use feasikit::experiment::{Generated, GeneratorSpec, QSpec};
use feasikit::schedules::{ControlSequence, OverrelaxSchedule, RelaxationPlan, WeightRule};
use feasikit::solver::{Mode, SolverConfig};

pub const HALFSPACE_SEEDS: std::ops::Range<u64> = 0..20;

/// 50 halfspaces in R^10 around a ball of radius 0.1, inside the box [-10, 10]^10.
pub fn halfspace_instance(seed: u64) -> Generated {
    GeneratorSpec::RandomHalfspaces {
        m: 50,
        n: 10,
        interior_radius: 0.1,
        q: QSpec::Box { lo: -10.0, hi: 10.0 },
    }
    .generate(seed)
    .expect("generator")
}

/// Three hyperplanes through a common point of R^8.
pub fn affine_instance(seed: u64) -> Generated {
    GeneratorSpec::AffineOnly { m: 3, n: 8, q: QSpec::Whole }.generate(seed).expect("generator")
}

pub fn inverse_square() -> OverrelaxSchedule {
    OverrelaxSchedule::Power { r0: 1.0, alpha_exp: 2.0 }
}

pub fn unit_plan() -> RelaxationPlan {
    RelaxationPlan::new(1.0, WeightRule::Uniform, 1e-3).expect("plan")
}

pub fn cyclic_config(g: &Generated, schedule: OverrelaxSchedule, mode: Mode, budget: usize) -> SolverConfig {
    SolverConfig::new(
        schedule,
        ControlSequence::CyclicSingleton { m: g.problem.m() },
        unit_plan(),
        g.x0.clone(),
        budget,
        mode,
    )
}

pub fn full_config(g: &Generated, schedule: OverrelaxSchedule, mode: Mode, budget: usize) -> SolverConfig {
    SolverConfig::new(
        schedule,
        ControlSequence::Full { m: g.problem.m() },
        unit_plan(),
        g.x0.clone(),
        budget,
        mode,
    )
}

/// Criterion-2 style run: stop at `max_i d(x_k, C_i) <= 1e-8`, oracle on the last row.
pub fn affine_config(g: &Generated) -> SolverConfig {
    let mut c = full_config(g, inverse_square(), Mode::CertifiedAsymptotic, 10_000);
    c.convergence_tol = Some(1e-8);
    c.feasibility_oracle = Some(OracleConfig::default());
    c.oracle_stride = usize::MAX;
    c
}
