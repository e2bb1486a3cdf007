//! Numerical core for studying critical learning periods in networks that fuse
//! several input sources.
//!
//! Everything in this crate is pure computation over owned buffers: the crate is
//! `no_std` and only needs `alloc`. File formats, plotting, configuration and
//! parallel execution live in the `critfuse` companion crate.
//!
//! * [`lindyn`]: closed-form dynamics of shallow and two-layer linear networks.
//! * [`gradsim`]: discrete gradient descent on linear chains of any depth.
//! * [`rsv`]: source variance / relative source variance of representation units.
//! * [`deficitlab`]: a small two-pathway ReLU network trained under deficits.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod deficitlab;
pub mod error;
pub mod gradsim;
pub mod linalg;
pub mod lindyn;
pub mod rng;
pub mod rsv;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::Matrix;
