//! Isotropic steady states of the spherically symmetric Vlasov-Poisson system
//! and the linear transport operator they induce.
//!
//! The crate is organised bottom-up:
//!
//! - [`ansatz`]: the polytropic profile `phi(E) = c (E0 - E)_+^k` and the
//!   Hilbert-space weight `1/|phi'(E)|`.
//! - [`steady_state`]: shooting solution of the radial Poisson equation for
//!   that profile, tabulated as `U0(r)`, `m0(r)`, plus the point-mass
//!   stand-in used for closed-form tests.
//! - [`effective`]: the effective potential `psi_L(r) = U0(r) + L/(2 r^2)`,
//!   its minimiser and the turning points of bound radial orbits.
//! - [`orbit`]: symplectic integration of `r' = w, w' = -psi_L'(r)`.
//! - [`period`]: radial periods, the orbit-average projection and functions
//!   of `(E, L)`.
//! - [`phase`] and [`transport`]: phase-space functions in `(r, w, L)`
//!   coordinates, the transport operator and the weighted inner product.
//! - [`relativistic`]: static Einstein-Vlasov states and the corresponding
//!   weighted transport checks.
//!
//! Everything here is `no_std` with `alloc`; file formats, configuration and
//! the command line live in the companion `vlasov` crate.
#![no_std]
#![allow(clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ansatz;
pub mod effective;
mod error;
pub mod interp;
pub mod math;
pub mod ode;
pub mod orbit;
pub mod period;
pub mod phase;
pub mod quadrature;
pub mod relativistic;
pub mod roots;
pub mod steady_state;
pub mod transport;

pub use crate::ansatz::{Ansatz, AnsatzKind, Regime};
pub use crate::error::{Error, Result};
pub use crate::phase::{PhaseFunction, PhaseSpace, Support};
pub use crate::steady_state::{Background, PointMass, SteadyState};
