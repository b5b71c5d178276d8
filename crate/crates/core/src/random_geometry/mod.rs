//! Random obstacle sets built on Poisson configurations: random-connection
//! tube networks and Boolean ball systems, their ε-scaling, rasterisation
//! onto perforated masks, and geometric diagnostics.

mod cell_index;
mod components;
mod connectivity;
mod diagnostics;
mod mask;
mod obstacles;

pub use cell_index::CellIndex;
pub use components::{connected_components, UnionFind};
pub use connectivity::{build_rcm_edges, ConnectivityFunction, EdgeSet};
pub use diagnostics::{
    boundary_layer_cells, density_ratio_check, geometry_stats, strongly_contained, tube_overlap_count,
    volume_fraction,
    DensityCheck, GeometryStats,
};
pub use mask::{
    absorber_strength, rasterize, rasterize_with, Absorber, CellFlag, HoleModel, PerforatedMask,
    RasterOptions, LATTICE_GREEN_ORIGIN_3D, SUBGRID_RADIUS_LIMIT,
};
pub use obstacles::{
    build_balls, build_tubes, monte_carlo_volume, scale_obstacles, BallRadiusRule, ObstacleSet,
    ObstacleShape, TubeRadius,
};
