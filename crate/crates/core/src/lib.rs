//! Homogenized lattice Boltzmann toolkit for flow through porous media.
//!
//! The collision relaxes towards an equilibrium at `varpi u`. With
//! `varpi = 1 - nu tau / K` every step removes the Darcy drag `nu u / K`,
//! so unresolved obstacles enter only through their permeability `K`.
//!
//! * [`regime`]: obstacle scaling, porosity and the homogenization regime.
//! * [`kinetics`]: closed-form moments of the damped Maxwellian.
//! * [`lattice`]: the D2Q9 solver.
//! * [`cellperm`]: permeability tensor of a periodic disk cell.
//! * [`bench`]: analytic references and convergence ladders.
//! * [`io`]: configuration files and field output.
//!
//! ```
//! use hlbm::{porosity_control, Permeability};
//!
//! let varpi = porosity_control(0.1, 0.8, Permeability::Finite(2.0))?;
//! assert!((varpi - 0.96).abs() < 1e-15);
//! # Ok::<(), hlbm::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cellperm;
pub mod error;
pub mod io;
pub mod kinetics;
pub mod lattice;
pub mod regime;

pub use error::{Error, Result};
pub use lattice::{MacroFields, Simulation, SimulationConfig};
pub use regime::{porosity_control, Permeability};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/regime.md")]
    mod regime {}
    #[doc = include_str!("../../../book/src/kinetics.md")]
    mod kinetics {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/cellperm.md")]
    mod cellperm {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
