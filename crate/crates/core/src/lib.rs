//! Exact-arithmetic engine for a simplified multidimensional integral built
//! from step functions on bricks: brick geometry, step-function algebra,
//! nearly-uniform-convergence certificates, Jordan content estimation,
//! Cousin gauge partitions, directional discontinuity classification,
//! indefinite integrals with strong derivatives, a fixture gallery, and a
//! small expression DSL for describing integrands.

pub mod convergence;
pub mod directional;
pub mod dsl;
pub mod indefinite;
pub mod integrator;
pub mod gallery;
pub mod gauge;
pub mod geometry;
pub mod oracle;
pub mod rational;
pub mod jordan;
pub mod stepfn;

pub use convergence::{k_integral, verify_nu, KIntegralResult, NUCertificate, NuVerdict, ScheduleEntry, StepSequence, Target};
pub use directional::{classify, decide_k_integrability, directional_limit, dis2_cover, subbrick, Classification, Direction, Kind, ProbeConfig, Verdict};
pub use indefinite::{check_theorem54, directional_strong_derivative, psi, reconstruct, strong_derivative, DerivConfig, DerivativeEstimate, IndefiniteIntegral};
pub use integrator::{darboux, extend, fubini, k_integrate, sample_step, truncate, IntegrandSpec, KIntegrateConfig, Precision};
pub use gauge::{cousin_partition, sufficiency_step, verify_fine, zero_derivative_audit, AdditiveSetFunction, DottedPartition, FineVerdict, Gauge};
pub use geometry::{common_refinement, max_norm_ball, uniform_tiling, Brick, Interval};
pub use oracle::{EvalError, PointOracle, PointPredicate, RadiusOracle};
pub use rational::{Point, Rat};
pub use jordan::{boundary_cells, certify_null, content_bounds, ContentBounds, ExceptionCover};
pub use stepfn::StepFunction;
