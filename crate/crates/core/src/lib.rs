//! Certified factorizations from the generalized small object argument.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] exact linear algebra over F_p.
//! * [`fincat`] finite categories, set-valued diagrams, colimits and orbits.
//! * [`soa`] the generic cell-attachment engine and its certificates.
//! * [`equichain`] diagrams of F_p chain complexes with the equivariant
//!   (orbit-relative) model structure, and the matching systems for the
//!   generating classes I and J.
//! * [`procalc`] pro-objects over finite cofiltering indices: the Hom formula,
//!   representatives, rarefaction, strictification and reindexing.
//! * [`profactor`] factorizations in the strict structure on pro-complexes,
//!   built with the dual (cosmall) engine.

pub mod equichain;
pub mod error;
pub mod fincat;
pub mod linalg;
pub mod procalc;
pub mod profactor;
pub mod soa;

pub use error::{Error, Result};
pub use fincat::{ColimitPresentation, DiagramMap, FiniteCategory, Orbit, SetDiagram};
pub use linalg::Matrix;
pub use soa::{Budget, CellAdapter, FactorizationCertificate, MatchingSystem, ProbeMode};
