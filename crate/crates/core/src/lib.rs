//! Massive MIMO baseband processing and link-level simulation.

pub mod channel;
pub mod equalization;
pub mod complexity;
pub mod decentral;
pub mod error;
pub mod impairments;
pub mod link;
pub mod numerics;
pub mod rng;

pub use error::{Error, Result};
pub use numerics::{CMatrix, C64};
