//! Topological band structure and Thouless pumping of light in commensurate
//! Aubry-André-Harper waveguide arrays.
//!
//! The discrete side ([`model`], [`spectral`], [`topology`], [`edge`]) covers
//! Bloch spectra, gaps, Chern numbers, open-chain edge states and winding
//! numbers. The continuous side ([`beam`], [`extract`]) integrates the paraxial
//! equation through modulated arrays and reduces it to tight-binding form.

pub mod beam;
pub mod cli;
pub mod edge;
pub mod error;
pub mod extract;
pub mod model;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
