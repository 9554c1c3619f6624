//! Radial kernels and epsilon-neighborhood graphs over point clouds.

mod graph;
mod grid;
mod kernel;

pub(crate) use graph::continuum_degree_with;
pub use graph::{build_eps_graph, build_eps_graph_brute, continuum_degree, EpsGraph, GraphSidecar};
pub use grid::SpatialGrid;
pub use kernel::{sigma_eta, unit_ball_volume, unit_sphere_area, KernelKind, KernelModel};
