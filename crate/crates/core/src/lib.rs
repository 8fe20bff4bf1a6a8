//! Numerical laboratory for timelike hypersurfaces of Minkowski space with
//! constant positive mean curvature, and their de Sitter model.
//!
//! Modules, bottom to top:
//! - [`dsgeom`]: de Sitter coordinates, frame, `τ`, weights.
//! - [`ode`], [`jet`], [`spectral`]: numerical plumbing.
//! - [`rotsym`]: the spherically symmetric profile ODE and its classification.
//! - [`igm`]: inverse-Gauss-map gauge algebra and the ζ-flow.
//! - [`linmodes`]: the linearized equation on dS, mode by mode and on S¹.
//! - [`stress`]: the quadratic stress tensor and weighted energies.
//! - [`meanc`]: mean curvature of graphs and its linearization.
//! - [`evolve`]: nonlinear normal-graph evolution over dS₂.
//! - [`cli`]: configuration, reports and the command-line front end.

// Index loops mirror tensor index notation; `!(x > y)` is used on purpose to
// reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dsgeom;
pub mod error;
pub mod evolve;
pub mod igm;
pub mod jet;
pub mod linmodes;
pub mod meanc;
pub mod ode;
pub mod rotsym;
pub mod spectral;
pub mod stress;

pub use error::{Error, Result};
