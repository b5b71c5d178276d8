//! ε-sweeps comparing perforated solutions with the homogenized solution,
//! ergodic averaging of local functionals, the partition-of-unity corrector
//! and the uniform energy bound.

mod audit;
mod corrector;
mod ergodic;
mod family;
mod spec;
mod sweep;

pub use audit::{uniform_bound_audit, BoundAudit, AUDIT_TOL};
pub use corrector::{
    build_corrector, build_partition_of_unity, smoothstep, AxisPiece, Corrector, PartitionOfUnity, MIN_OVERLAP_CELLS,
};
pub use ergodic::{
    disjoint_cube_correlation, ergodic_average_experiment, ergodic_obstacles, minimizer_energy, ErgodicFunctional,
    ErgodicGeometry, ErgodicLevel, ErgodicRow, ErgodicSpec, ErgodicTable, STAGE_ERGODIC,
};
pub use family::{realization_seed, realize, PrebuiltFamily, Realization, SpecFamily, STAGE_GEOMETRY};
pub use spec::{
    nominal_radius, scale_ball_rule, scale_tube_radius, GeometrySpec, GridRule, ModelKind, SourceSpec, SweepSpec,
};
pub use sweep::{
    run_sweep, HomogenizationReport, SweepFlags, SweepRow, SweepSummary, ENERGY_TOL, STRONG_CONTAINMENT,
};
