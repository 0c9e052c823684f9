//! Rate-1/3 binary channel code: parity-check matrix, systematic encoder,
//! and a soft-in/soft-out sum-product decoder.
//!
//! The shipped (264, 88) code is constructed by progressive edge growth
//! (see [`peg`]) with its columns permuted so the trailing 176 x 176
//! submatrix is invertible over GF(2); the payload then occupies the first
//! 88 codeword positions and parity is a precomputed bit-matrix product.

mod alist;
mod decoder;
pub mod peg;

use std::sync::LazyLock;

use thiserror::Error;

pub use alist::to_alist;
pub use decoder::SumProductDecoder;

/// Saturation magnitude for all LLR values exchanged in the receiver.
pub const LLR_CLIP: f64 = 30.0;

/// Errors from code loading and encoding.
#[derive(Debug, Error)]
pub enum LdpcError {
    #[error("alist parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("alist inconsistency: {0}")]
    Inconsistent(String),
    #[error("parity submatrix (trailing {0} columns) is singular over GF(2)")]
    SingularParity(usize),
    #[error("parity-check matrix rank {rank} != row count {rows}; payload dimension undefined")]
    RankDeficient { rank: usize, rows: usize },
}

/// Sparse parity-check matrix as bipartite adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_checks: usize,
    n_vars: usize,
    check_to_vars: Vec<Vec<usize>>,
    var_to_checks: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds from per-check variable lists, validating the edge structure.
    pub fn from_check_adjacency(
        n_vars: usize,
        check_to_vars: Vec<Vec<usize>>,
    ) -> Result<Self, LdpcError> {
        let n_checks = check_to_vars.len();
        let mut var_to_checks = vec![Vec::new(); n_vars];
        for (c, vars) in check_to_vars.iter().enumerate() {
            let mut seen = vars.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != vars.len() {
                return Err(LdpcError::Inconsistent(format!("check {c} has duplicate edges")));
            }
            for &v in vars {
                if v >= n_vars {
                    return Err(LdpcError::Inconsistent(format!(
                        "check {c} references variable {v} >= {n_vars}"
                    )));
                }
                var_to_checks[v].push(c);
            }
        }
        if let Some(v) = var_to_checks.iter().position(|cs| cs.is_empty()) {
            return Err(LdpcError::Inconsistent(format!("variable {v} has degree 0")));
        }
        Ok(Self { n_checks, n_vars, check_to_vars, var_to_checks })
    }

    /// Parses standard alist text (1-indexed adjacency, optionally 0-padded).
    pub fn from_alist(text: &str) -> Result<Self, LdpcError> {
        alist::parse(text)
    }

    /// The shipped (264, 88) rate-1/3 code.
    pub fn shipped_264_88() -> &'static ParityCheckMatrix {
        static SHIPPED: LazyLock<ParityCheckMatrix> = LazyLock::new(|| {
            ParityCheckMatrix::from_alist(include_str!("../../assets/ldpc_264_88.alist"))
                .expect("shipped code asset is valid")
        });
        &SHIPPED
    }

    /// Number of checks (rows).
    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    /// Codeword length (columns).
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn check_neighbors(&self, c: usize) -> &[usize] {
        &self.check_to_vars[c]
    }

    pub fn var_neighbors(&self, v: usize) -> &[usize] {
        &self.var_to_checks[v]
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        let mut rows = BitMatrix::from_check_matrix(self);
        rows.eliminate(None).len()
    }

    /// Payload dimension `k = n - rank`.
    pub fn payload_len(&self) -> usize {
        self.n_vars - self.rank()
    }

    /// True iff `H * bits = 0` over GF(2).
    pub fn syndrome_check(&self, bits: &[u8]) -> bool {
        assert_eq!(bits.len(), self.n_vars, "codeword length mismatch");
        self.check_to_vars
            .iter()
            .all(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ (bits[v] & 1)) == 0)
    }

    /// Builds the systematic encoder. Requires full row rank and an
    /// invertible trailing square submatrix (true for the shipped code by
    /// construction).
    pub fn encoder(&self) -> Result<SystematicEncoder, LdpcError> {
        SystematicEncoder::from_matrix(self)
    }
}

/// Systematic encoder: codeword = payload || parity with
/// `parity = Hp^{-1} * Hs * payload` precomputed as a dense GF(2) matrix.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    k: usize,
    /// `n_checks x k` bit matrix, row-major packed.
    parity_map: BitMatrix,
}

impl SystematicEncoder {
    fn from_matrix(h: &ParityCheckMatrix) -> Result<Self, LdpcError> {
        let m = h.n_checks;
        let n = h.n_vars;
        if m >= n {
            return Err(LdpcError::Inconsistent(format!("need rows {m} < cols {n}")));
        }
        let k = n - m;
        // Augment [Hp | Hs] and reduce Hp (trailing m columns) to identity.
        // Column j of the augmented system: j < m -> H column k+j, else
        // H column j-m.
        let mut aug = BitMatrix::zeros(m, m + k);
        for (c, vars) in h.check_to_vars.iter().enumerate() {
            for &v in vars {
                let col = if v >= k { v - k } else { m + v };
                aug.set(c, col);
            }
        }
        let pivots = aug.eliminate(Some(m));
        if pivots.len() < m {
            return Err(LdpcError::SingularParity(m));
        }
        // Rows are now permuted so row i has pivot at column i; extract the
        // right block Hp^{-1} * Hs.
        let mut parity_map = BitMatrix::zeros(m, k);
        for i in 0..m {
            for j in 0..k {
                if aug.get(i, m + j) {
                    parity_map.set(i, j);
                }
            }
        }
        Ok(Self { n, k, parity_map })
    }

    /// Payload dimension.
    pub fn payload_len(&self) -> usize {
        self.k
    }

    /// Codeword length.
    pub fn codeword_len(&self) -> usize {
        self.n
    }

    /// Encodes `payload` (0/1 bytes, length k) into an n-bit codeword with
    /// the payload in the first k positions.
    pub fn encode(&self, payload: &[u8]) -> Vec<u8> {
        assert_eq!(payload.len(), self.k, "payload length mismatch");
        let mut codeword = Vec::with_capacity(self.n);
        codeword.extend_from_slice(payload);
        for row in 0..self.parity_map.rows {
            let mut acc = 0u8;
            for (j, &bit) in payload.iter().enumerate() {
                if bit & 1 == 1 && self.parity_map.get(row, j) {
                    acc ^= 1;
                }
            }
            codeword.push(acc);
        }
        codeword
    }
}

/// Dense GF(2) matrix with u64-packed rows; just enough for rank,
/// elimination and the encoder precompute.
#[derive(Debug, Clone)]
pub(crate) struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        Self { rows, cols, words_per_row, data: vec![0; rows * words_per_row] }
    }

    pub(crate) fn from_check_matrix(h: &ParityCheckMatrix) -> Self {
        let mut m = Self::zeros(h.n_checks, h.n_vars);
        for (c, vars) in h.check_to_vars.iter().enumerate() {
            for &v in vars {
                m.set(c, v);
            }
        }
        m
    }

    pub(crate) fn set(&mut self, r: usize, c: usize) {
        self.data[r * self.words_per_row + c / 64] ^= 1u64 << (c % 64);
    }

    pub(crate) fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words_per_row + c / 64] >> (c % 64)) & 1 == 1
    }

    fn xor_rows(&mut self, target: usize, source: usize) {
        let w = self.words_per_row;
        let (t, s) = (target * w, source * w);
        for i in 0..w {
            let v = self.data[s + i];
            self.data[t + i] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words_per_row;
        for i in 0..w {
            self.data.swap(a * w + i, b * w + i);
        }
    }

    /// Gauss-Jordan elimination scanning columns left to right, restricted
    /// to the first `limit` columns when given. Returns the pivot columns;
    /// on return, pivot row i has its pivot in `pivots[i]` and that column
    /// is cleared everywhere else.
    pub(crate) fn eliminate(&mut self, limit: Option<usize>) -> Vec<usize> {
        let col_end = limit.unwrap_or(self.cols);
        let mut pivots = Vec::new();
        let mut next_row = 0;
        for col in 0..col_end {
            if next_row >= self.rows {
                break;
            }
            let Some(pivot_row) = (next_row..self.rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.swap_rows(next_row, pivot_row);
            for r in 0..self.rows {
                if r != next_row && self.get(r, col) {
                    self.xor_rows(r, next_row);
                }
            }
            pivots.push(col);
            next_row += 1;
        }
        pivots
    }
}

#[cfg(test)]
pub(crate) fn hamming_7_4() -> ParityCheckMatrix {
    // Trailing 3x3 block is the identity, so the encoder applies directly.
    ParityCheckMatrix::from_check_adjacency(
        7,
        vec![vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]],
    )
    .unwrap()
}
