// SPDX-License-Identifier: Apache-2.0

//! Fluctuations of internal energy, work and heat for open quantum systems,
//! computed from the reduced dynamical map.

// NaN must fail these range checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod par;
pub mod phase_covariant;
pub mod pipeline;
pub mod quadrature;
pub mod synthetic;
pub mod tpms;
pub mod validation;

pub use error::{Error, Result};
