//! Graph Laplacians on random point clouds sampled from reference manifolds
//! (circle, round 2-sphere, flat 2-torus), together with their continuum
//! nonlocal counterparts, spectral convergence experiments, coupled random
//! walks and concentration diagnostics.

pub mod concentration;
pub mod coupling;
pub mod discrete_ops;
pub mod error;
pub mod geom;
pub mod io;
pub mod kernel_graph;
pub mod linalg;
pub mod manifold;
pub mod nonlocal_ops;
pub mod quad;
pub mod spectral;
pub mod stats;

pub use error::{CloudError, Result};
pub use geom::Point;
pub use kernel_graph::{build_eps_graph, EpsGraph, KernelKind, KernelModel};
pub use manifold::{sample_cloud, DensityModel, Manifold, ManifoldKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
