//! Multi-task autoencoders for domain generalization.
//!
//! A shared encoder is trained to reconstruct each sample in every other
//! domain's view of the same object; its hidden layer is then used as a
//! domain-invariant feature map for a downstream classifier evaluated on a
//! held-out domain.

pub mod analysis;
pub mod autoencoder;
mod blob;
pub mod classifier;
pub mod data;
pub mod error;
pub mod harness;
pub mod math;
pub mod oracle;
pub mod par;

pub use error::{Error, Result};
