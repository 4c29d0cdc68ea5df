//! Vascular network graphs, full-order blood-flow solvers and synthetic
//! capillary network generation.

pub mod boundary;
pub mod error;
pub mod graph;
pub mod io;
pub mod linear;
pub mod netgen;
pub mod nonlinear;
pub mod solution;
pub mod sparse;
pub mod units;

pub use boundary::{BoundaryConditions, BoundaryNode, BoundarySets, NodeClass};
pub use error::{Error, Result};
pub use graph::{build_incidence, Edge, IncidenceMatrix, VascularGraph};
pub use netgen::{generate_network, GeneratedNetwork, GeneratorConfig};
pub use linear::{solve_linear, RheologyParams};
pub use nonlinear::{solve_nonlinear, FixedPointConfig, ViscosityLaw};
pub use solution::{FlowSolution, Residuals, Rheology, SolveMeta};
