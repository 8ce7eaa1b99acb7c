//! Massive-MIMO uplink link-level simulator with low-rank QR fronthaul
//! compression.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: complex matrix kernels, norm-pivoted truncated QR and a
//!   Jacobi truncated SVD.
//! - [`phy`]: Gray-coded QAM, resource-block allocation, OFDM with cyclic
//!   prefix.
//! - [`channel`]: spatially correlated tapped-delay-line Rayleigh channels,
//!   multipath convolution and AWGN.
//! - [`codec`]: the remote-radio-head compressor, its bit-exact payload
//!   format, the compression-ratio accounting and the SVD baseline.
//! - [`sim`]: Monte Carlo BER harness, zero-forcing combining, CSV output and
//!   compressor benchmarks.

pub mod channel;
pub mod codec;
pub mod error;
pub mod linalg;
pub mod phy;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{IQMatrix, C64};
