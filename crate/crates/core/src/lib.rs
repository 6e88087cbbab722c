//! Dynamical localization of cold atoms in an optical lattice shaken by a
//! family of elliptic-function forces.
//!
//! The lattice Hamiltonian in scaled units is
//!
//! ```text
//! H = p²/2 − κ cos[x − λ F(τ; m)],   F(τ; m) = N(m) sn(Ωτ | m) dn(Ωτ | m)
//! ```
//!
//! The crate provides the force and its half-period impulse ([`forcing`]),
//! the special functions behind it ([`elliptic`]), classical ensemble and
//! Poincaré-section dynamics ([`classical`]), split-operator quantum dynamics
//! and Husimi distributions ([`quantum`]), and the observables that tie them
//! together ([`analysis`]).
//!
//! ```
//! use dynloc::elliptic::EllipticParameter;
//! use dynloc::forcing::{impulse_closed_form, impulse_quadrature, PERIOD};
//!
//! let m = EllipticParameter::new(0.5)?;
//! let closed = impulse_closed_form(m, PERIOD)?;
//! let quad = impulse_quadrature(m, PERIOD)?;
//! assert!((closed - quad).abs() < 1e-10 * closed);
//! # Ok::<(), dynloc::Error>(())
//! ```

pub mod analysis;
pub mod classical;
pub mod elliptic;
mod error;
pub mod forcing;
pub mod phase_space;
pub mod quadrature;
pub mod quantum;
pub mod stats;

pub use error::{Error, Result};

pub use analysis::{dl_strength, layer_width, DlConfig, SweepRecord};
pub use elliptic::EllipticParameter;
pub use forcing::{ScaledParams, Waveform};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/elliptic.md")]
    mod elliptic {}
    #[doc = include_str!("../../../book/src/forcing.md")]
    mod forcing {}
    #[doc = include_str!("../../../book/src/classical.md")]
    mod classical {}
    #[doc = include_str!("../../../book/src/quantum.md")]
    mod quantum {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
}
