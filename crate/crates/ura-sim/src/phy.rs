//! Transmitter chain and the real Gaussian multiple access channel.
//!
//! Each user's message splits into a header (signature selection) and a
//! payload (channel-encoded, BPSK-mapped). The channel output is the
//! `np x nc` superposition of amplitude-scaled rank-1 user contributions
//! plus white Gaussian noise.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::codebook::{header_to_column, SignatureCodebook};
use crate::config::PowerProfile;
use crate::ldpc::SystematicEncoder;

/// A user's B-bit message with its header/payload split.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UserMessage {
    bits: Vec<u8>,
    b_header: usize,
}

impl UserMessage {
    /// Splits `bits` after `b_header` positions.
    pub fn split(bits: Vec<u8>, b_header: usize) -> Self {
        assert!(b_header <= bits.len(), "header longer than message");
        debug_assert!(bits.iter().all(|&b| b <= 1), "message bits must be 0/1");
        Self { bits, b_header }
    }

    /// Draws a uniform random B-bit message.
    pub fn random(b_total: usize, b_header: usize, rng: &mut impl Rng) -> Self {
        let bits = (0..b_total).map(|_| rng.random_range(0..2u8)).collect();
        Self::split(bits, b_header)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn header(&self) -> &[u8] {
        &self.bits[..self.b_header]
    }

    pub fn payload(&self) -> &[u8] {
        &self.bits[self.b_header..]
    }
}

/// One user's contribution ready for the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitFrame {
    /// Selected signature column.
    pub column: usize,
    /// Power-group amplitude p_i.
    pub amplitude: f64,
    /// BPSK symbols x_i, each +1 or -1.
    pub symbols: Vec<f64>,
}

/// Received `np x nc` matrix and the noise variance that produced it.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub y: Array2<f64>,
    pub sigma2: f64,
}

/// BPSK map 0 -> +1, 1 -> -1.
pub fn bpsk(bits: &[u8]) -> Vec<f64> {
    bits.iter()
        .map(|&b| {
            debug_assert!(b <= 1);
            if b == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Runs one message through the transmit chain: header selects the
/// signature column, payload is encoded and BPSK-mapped, amplitude comes
/// from the column's power group.
pub fn encode_user(
    msg: &UserMessage,
    encoder: &SystematicEncoder,
    power: &PowerProfile,
    t_size: usize,
) -> TransmitFrame {
    let column = header_to_column(msg.header());
    let codeword = encoder.encode(msg.payload());
    TransmitFrame {
        column,
        amplitude: power.amplitude_for(column, t_size),
        symbols: bpsk(&codeword),
    }
}

/// Fills an `np x nc` matrix with i.i.d. zero-mean Gaussian entries of
/// variance `sigma2` (exactly zero when `sigma2 == 0`), deterministic given
/// the seed. Entries are drawn row-major.
pub fn noise_matrix(np: usize, nc: usize, sigma2: f64, seed: u64) -> Array2<f64> {
    if sigma2 == 0.0 {
        return Array2::zeros((np, nc));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = sigma2.sqrt();
    Array2::from_shape_fn((np, nc), |_| sigma * rng.sample::<f64, _>(StandardNormal))
}

/// Superposes all frames over the codebook and adds channel noise:
/// `Y = sum_i p_i a_i x_i^T + N`.
pub fn transmit(
    frames: &[TransmitFrame],
    codebook: &SignatureCodebook,
    n_symbols: usize,
    sigma2: f64,
    seed: u64,
) -> ChannelOutput {
    for f in frames {
        assert_eq!(f.symbols.len(), n_symbols, "frame length mismatch");
        assert!(f.column < codebook.t_size(), "frame column out of range");
    }
    let mut y = noise_matrix(codebook.np(), n_symbols, sigma2, seed);
    for frame in frames {
        add_frame(&mut y, frame, codebook);
    }
    ChannelOutput { y, sigma2 }
}

/// Adds `p * a * x^T` for one frame into the accumulator.
pub fn add_frame(y: &mut Array2<f64>, frame: &TransmitFrame, codebook: &SignatureCodebook) {
    let a = codebook.column(frame.column);
    for (j, &x) in frame.symbols.iter().enumerate() {
        let scale = frame.amplitude * x;
        let mut col = y.column_mut(j);
        for (row, &chip) in col.iter_mut().zip(a.iter()) {
            *row += scale * chip;
        }
    }
}

/// Subtracts `p * a * x^T` for one frame from the accumulator.
pub fn subtract_frame(y: &mut Array2<f64>, frame: &TransmitFrame, codebook: &SignatureCodebook) {
    let a = codebook.column(frame.column);
    for (j, &x) in frame.symbols.iter().enumerate() {
        let scale = frame.amplitude * x;
        let mut col = y.column_mut(j);
        for (row, &chip) in col.iter_mut().zip(a.iter()) {
            *row -= scale * chip;
        }
    }
}
