//! Generating sets of plans that are either mutually distant or that jointly
//! cover a spectrum of time/cost trade-offs.
//!
//! The crate parses a STRIPS fragment of PDDL with action costs, grounds it,
//! and offers plan validation, plan distances, ICP set quality, a seeded
//! best-first planner, and the set-generation strategies built on top.

pub mod distance;
pub mod exact;
pub mod genset;
pub mod icp;
pub mod pddl;
pub mod plan;
pub mod report;
pub mod search;

pub use distance::{Aggregate, DistanceMetric, PlanFeatures};
pub use exact::Quantity;
pub use icp::{icp, lower_convex_hull, pareto_filter, WeightDistribution};
pub use pddl::{GroundProblem, PddlError};
pub use plan::{Plan, PlanError, TimeCostPoint};
