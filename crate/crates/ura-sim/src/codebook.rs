//! The common signature codebook shared by transmitters and receiver.
//!
//! The codebook is an `np x T` real matrix whose entries are i.i.d. standard
//! normal draws from a seeded portable generator, with every column scaled
//! to unit Euclidean norm. A user's header bits index a column big-endian.

use std::io::{self, Read, Write};

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Errors from the binary dump/load interchange format.
#[derive(Debug, Error)]
pub enum CodebookIoError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("codebook dimensions {np}x{t_size} are implausible")]
    BadDimensions { np: u32, t_size: u32 },
}

/// Unit-norm random spreading signatures, one per possible header value.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureCodebook {
    /// `np x T`, column i is signature a_i.
    columns: Array2<f64>,
    np: usize,
    t_size: usize,
}

impl SignatureCodebook {
    /// Draws an `np x t_size` codebook. Deterministic given the seed, byte
    /// for byte across platforms (ChaCha stream + fixed fill order).
    pub fn generate(np: usize, t_size: usize, seed: u64) -> Self {
        assert!(np >= 1 && t_size >= 1, "codebook dimensions must be >= 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Draw column-major so each signature is a contiguous run of the stream.
        let mut columns = Array2::<f64>::zeros((np, t_size));
        for i in 0..t_size {
            let mut norm_sq = 0.0;
            for j in 0..np {
                let v: f64 = rng.sample(StandardNormal);
                columns[(j, i)] = v;
                norm_sq += v * v;
            }
            let norm = norm_sq.sqrt();
            if norm > 0.0 {
                for j in 0..np {
                    columns[(j, i)] /= norm;
                }
            }
        }
        Self { columns, np, t_size }
    }

    /// Wraps an explicit matrix as a codebook. Columns must already be unit
    /// norm; intended for structured dictionaries in tests and tools.
    pub fn from_columns(columns: Array2<f64>) -> Self {
        let (np, t_size) = columns.dim();
        assert!(np >= 1 && t_size >= 1, "codebook dimensions must be >= 1");
        for i in 0..t_size {
            let n2: f64 = columns.column(i).iter().map(|v| v * v).sum();
            assert!((n2 - 1.0).abs() < 1e-6, "column {i} is not unit norm (norm^2 = {n2})");
        }
        Self { columns, np, t_size }
    }

    pub fn np(&self) -> usize {
        self.np
    }

    /// Codebook size `T`.
    pub fn t_size(&self) -> usize {
        self.t_size
    }

    /// Signature `a_i`.
    pub fn column(&self, i: usize) -> ArrayView1<'_, f64> {
        self.columns.column(i)
    }

    /// The full `np x T` matrix `A`.
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.columns.view()
    }

    /// Writes the interchange dump: `np` and `T` as little-endian u32,
    /// followed by the matrix entries row-major as little-endian f64.
    pub fn dump<W: Write>(&self, w: &mut W) -> Result<(), CodebookIoError> {
        w.write_all(&(self.np as u32).to_le_bytes())?;
        w.write_all(&(self.t_size as u32).to_le_bytes())?;
        for row in self.columns.rows() {
            for &v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a dump produced by [`SignatureCodebook::dump`].
    pub fn load<R: Read>(r: &mut R) -> Result<Self, CodebookIoError> {
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let np = u32::from_le_bytes(u32buf);
        r.read_exact(&mut u32buf)?;
        let t_size = u32::from_le_bytes(u32buf);
        if np == 0 || t_size == 0 || (np as u64) * (t_size as u64) > (1 << 32) {
            return Err(CodebookIoError::BadDimensions { np, t_size });
        }
        let (np, t_size) = (np as usize, t_size as usize);
        let mut data = Vec::with_capacity(np * t_size);
        let mut f64buf = [0u8; 8];
        for _ in 0..np * t_size {
            r.read_exact(&mut f64buf)?;
            data.push(f64::from_le_bytes(f64buf));
        }
        let columns = Array2::from_shape_vec((np, t_size), data).expect("sized above");
        Ok(Self { columns, np, t_size })
    }
}

/// Big-endian bits -> column index. Bijective over `{0, .., 2^len - 1}`.
pub fn header_to_column(header_bits: &[u8]) -> usize {
    assert!(!header_bits.is_empty() && header_bits.len() <= 30, "bad header width");
    header_bits.iter().fold(0usize, |acc, &b| {
        debug_assert!(b <= 1, "header bits must be 0/1");
        (acc << 1) | b as usize
    })
}

/// Inverse of [`header_to_column`], producing `b_header` big-endian bits.
pub fn column_to_header(index: usize, b_header: usize) -> Vec<u8> {
    assert!(index < (1usize << b_header), "column {index} out of range for Bp={b_header}");
    (0..b_header).rev().map(|k| ((index >> k) & 1) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_sized_codebook_has_unit_columns() {
        let cb = SignatureCodebook::generate(114, 4096, 0xBEEF);
        assert_eq!(cb.matrix().dim(), (114, 4096));
        for i in 0..cb.t_size() {
            let n2: f64 = cb.column(i).iter().map(|v| v * v).sum();
            assert!((n2 - 1.0).abs() < 1e-12, "column {i} norm^2 = {n2}");
        }
    }

    #[test]
    fn scalar_codebook_normalizes_to_sign() {
        let cb = SignatureCodebook::generate(1, 1, 99);
        assert!((cb.column(0)[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = SignatureCodebook::generate(32, 64, 1234);
        let b = SignatureCodebook::generate(32, 64, 1234);
        assert_eq!(a, b);
        let c = SignatureCodebook::generate(32, 64, 1235);
        assert_ne!(a, c);
    }

    #[test]
    fn cross_correlation_statistics() {
        // a_i . a_l for i != l has mean -> 0 and variance ~ 1/np.
        let np = 64;
        let cb = SignatureCodebook::generate(np, 256, 7);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for i in 0..cb.t_size() {
            for l in (i + 1)..cb.t_size() {
                let dot: f64 = cb.column(i).dot(&cb.column(l));
                sum += dot;
                sum_sq += dot * dot;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let var = sum_sq / count as f64 - mean * mean;
        assert!(mean.abs() < 3.0 / (np as f64 * count as f64).sqrt() * 2.0);
        assert!((var - 1.0 / np as f64).abs() < 0.2 / np as f64);
    }

    #[test]
    fn header_mapping_examples() {
        assert_eq!(header_to_column(&[0; 12]), 0);
        let mut one = vec![0u8; 12];
        one[11] = 1;
        assert_eq!(header_to_column(&one), 1);
        assert_eq!(header_to_column(&[1; 12]), 4095);
        assert_eq!(column_to_header(0, 12), vec![0; 12]);
        assert_eq!(column_to_header(4095, 12), vec![1; 12]);
    }

    #[test]
    fn header_round_trip() {
        let mut rng = rand::rng();
        for _ in 0..1000 {
            let idx = rng.random_range(0..4096usize);
            assert_eq!(header_to_column(&column_to_header(idx, 12)), idx);
        }
    }

    #[test]
    fn dump_load_round_trip() {
        let cb = SignatureCodebook::generate(12, 16, 5);
        let mut buf = Vec::new();
        cb.dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 12 * 16 * 8);
        let back = SignatureCodebook::load(&mut buf.as_slice()).unwrap();
        assert_eq!(cb, back);
    }

    #[test]
    fn load_rejects_truncation() {
        let cb = SignatureCodebook::generate(4, 4, 5);
        let mut buf = Vec::new();
        cb.dump(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(SignatureCodebook::load(&mut buf.as_slice()).is_err());
    }
}
