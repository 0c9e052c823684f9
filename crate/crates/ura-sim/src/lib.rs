//! Link-level simulator for random-spreading unsourced random access (URA)
//! over the real Gaussian multiple access channel.
//!
//! Each active user splits its message into a header, which selects a
//! unit-norm spreading signature from a common random codebook, and a
//! payload, which is LDPC-encoded, BPSK-modulated and spread by that
//! signature. The receiver detects active signatures with simultaneous
//! orthogonal matching pursuit, runs an iterative Gaussian-approximation
//! estimator that exchanges extrinsic LLRs with the channel decoder, and
//! removes verified messages by successive interference cancellation.
//!
//! The [`sim`] module drives seeded Monte-Carlo trials and aggregates
//! per-user probability of error (PUPE), false-alarm rate and per-iteration
//! BER traces; `ura-sim-cli` exposes it on the command line.

pub mod codebook;
pub mod config;
pub mod detect;
pub mod ese;
pub mod ldpc;
pub mod linalg;
pub mod metrics;
pub mod phy;
pub mod receiver;
pub mod sim;

pub use codebook::SignatureCodebook;
pub use config::{DetectionMode, DetectionPolicy, PowerProfile, SystemConfig};
pub use detect::ActiveSet;
pub use ldpc::ParityCheckMatrix;
pub use phy::{ChannelOutput, TransmitFrame, UserMessage};
pub use receiver::{DecodedList, Receiver};
pub use sim::{SweepSpec, SweepVariable};
