//! Quasiclassical dynamics of a two-level subsystem on a thermostatted
//! reaction coordinate, with quadrature predictions of the long-time limits.

pub mod error;
pub mod quadrature;
pub mod models;
pub mod mapping;
pub mod dynamics;
pub mod ergodic;
pub mod ensemble;

pub use error::{Error, Result};
pub use mapping::{Method, MethodSpec, SpinState};
pub use models::{BathSpec, ModelKind, TwoLevelModel};
