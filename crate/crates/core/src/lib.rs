//! Kidney exchange clearing by column generation over cycles and
//! altruist-initiated chains.

pub mod cg;
pub mod color_coding;
pub mod error;
pub mod exchange;
pub mod graph;
pub mod harness;
pub mod instance;
pub mod master;
pub mod ng;
mod jsonio;
pub mod pricing;

pub use error::{KepError, Result};
pub use jsonio::FORMAT_VERSION;
