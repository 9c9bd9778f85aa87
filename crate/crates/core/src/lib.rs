//! Shaping on rings for LDPC-coded OFDM.
//!
//! A QAM constellation is augmented with an outer ring of equal size; every
//! inner point has one outer representative carrying the same bit label.
//! A sparse shaping code chooses, per channel use, whether the inner point or
//! its representative is sent, so extra bits ride on the transmitted energy
//! while low-energy points stay more likely. The crate contains everything
//! needed to measure that scheme end to end over a doubly-selective channel:
//!
//! * [`constellation`]: augmented constellations and power/PAPR accounting
//! * [`shaping`]: sparse shaping codebooks, encoder and repairing decoder
//! * [`ldpc`]: alist parity-check codes, systematic encoder, layered min-sum
//! * [`ofdm`]: frame grid, pilots, OFDM modulation
//! * [`channel`]: Veh-A delay-Doppler channels and the effective channel matrix
//! * [`chanest`]: LS pilot estimates, covariance estimation, 2D LMMSE, one-tap equalizer
//! * [`demapper`]: prior-aware bit LLRs over the augmented constellation
//! * [`link`]: the full transmit/receive chain for one frame
//! * [`harness`]: experiment configs, Monte-Carlo sweeps, CSV output and plots

pub mod chanest;
pub mod channel;
pub mod constellation;
pub mod demapper;
mod error;
pub mod harness;
pub mod ldpc;
pub mod link;
pub mod ofdm;
pub mod rng;
pub mod shaping;

pub use error::{Error, Result};
pub use num_complex::Complex64;
