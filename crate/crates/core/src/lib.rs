//! Piecewise-linear isotropic approximation of smooth isotropic tori.
//!
//! The pipeline samples a smooth `Gamma`-periodic isotropic map on a
//! quadrangulation ([`immersion`]), projects the samples onto the zero set of
//! the discrete symplectic density ([`density`], [`solver`]), fills every
//! quadrilateral with an isotropic pyramid ([`refine`]), and certifies the
//! resulting piecewise-linear map ([`plmap`]).

pub mod density;
pub mod geometry;
pub mod immersion;
pub mod lattice;
pub mod mesh;
pub mod pipeline;
pub mod plmap;
pub mod refine;
pub mod solver;
pub mod sparse;
pub mod study;
pub mod symmesh;
pub mod symplectic;
