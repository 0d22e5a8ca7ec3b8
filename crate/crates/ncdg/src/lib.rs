//! High-order nodal discontinuous Galerkin solver for the first-order
//! acoustic conservation equations on 2D multi-region quadrilateral meshes,
//! with two non-conforming interface couplings: point-to-point interpolation
//! and Nitsche-type mortaring.

pub mod basis;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod flux;
pub mod geometry;
pub mod material;
pub mod mesh;
pub mod meshgen;
pub mod nci;
pub mod operator;
pub mod quadrature;
pub mod scenarios;
pub mod state;
pub mod time;

pub use basis::{shape_eval, ReferenceElement};
pub use error::{Error, Result};
pub use flux::{lax_friedrichs_flux, ldg_nci_flux, mirror_exterior_state, TraceState};
pub use geometry::{map_to_physical, map_to_reference, segment_quad_clip, ElementGeometry};
pub use material::{BoundaryCondition, Material, PressureData, VelocityData};
pub use mesh::{resolution_check, Mesh};
pub use nci::{CouplingScheme, NciMap};
pub use operator::DgOperator;
pub use quadrature::{gauss_legendre_rule, lgl_nodes};
pub use state::FieldState;
pub use time::{advance, cfl_timestep, integrate, RkScheme};
