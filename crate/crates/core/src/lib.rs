//! Laboratory for stable matching in markets with unequal sides.
//!
//! The crate covers the full loop of a simulation study: seeded generation of
//! random preference systems ([`prefgen`]), the proposal algorithm and
//! stability checks ([`engine`]), exhaustive enumeration of the stable set
//! through the rotation lattice ([`lattice`]), closed-form predictors for the
//! large-market behavior ([`theory`]), Monte Carlo evaluation of the exact
//! probability integrals behind those predictors ([`quadrature`]), and a
//! batch experiment runner with verdicts ([`expsuite`]).
//!
//! Everything random flows from a single `u64` seed through the stream
//! derivation in [`rng`], so results are reproducible bit for bit regardless
//! of thread count.

pub mod engine;
pub mod expsuite;
pub mod lattice;
pub mod prefgen;
pub mod quadrature;
pub mod rng;
pub mod theory;

mod error;

pub use engine::{is_stable, propose, ranks, Matching, RankPair, Side, UNMATCHED};
pub use error::{Error, Result};
pub use expsuite::{
    oracle_check, run_experiment, sweep, verify, ExperimentReport, FieldStats, Mode, OracleReport,
    RunConfig, TrialRecord, Verdict,
};
pub use lattice::{
    brute_force_all, eliminate, enumerate_all, exposed_rotations, multiplicity, Multiplicity,
    Rotation, StableSet,
};
pub use prefgen::{gen_instance, gen_latents, instance_from_latents, Instance, LatentMatrices};
pub use quadrature::{
    empirical_p_rotation, empirical_p_stable, p_joint_poly, p_kl_mc, p_rotation_mc, p_stable_mc,
    BivariatePoly, Estimate, KlEstimates,
};
pub use theory::{spacings_stats, MarketShape, Prediction, SpacingsStats};
