//! Multisymplectic integration of the Kadomtsev–Petviashvili equation.
//!
//! The crate provides the ten-component first-order (Bridges) form of the KP
//! equation ([`equation`]), the box scheme on that system with its tangent
//! solver and discrete conservation law ([`preissman`]), the single-variable
//! forty-five-point scheme obtained by eliminating the auxiliary components
//! ([`reduced`]), closed-form line-soliton and lump scenarios ([`solutions`]),
//! diagnostics ([`diagnostics`]), and configuration/output plumbing plus the
//! run drivers used by the `kpmsym` binary ([`io`], [`driver`]).

pub mod diagnostics;
pub mod driver;
pub mod equation;
pub mod error;
pub mod grid;
pub mod io;
pub mod preissman;
pub mod reduced;
pub mod solutions;
pub mod sparse;

pub use error::{Error, Result};
