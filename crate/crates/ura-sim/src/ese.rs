//! Gaussian-approximation elementary signal estimator.
//!
//! For the detected signatures the receiver builds the MMSE filter
//! `F = (sigma^2 I + A_d A_d^T)^{-1}` once per SIC round, projects the
//! observation onto each filtered signature, and models the residual
//! interference-plus-noise of every (user, symbol) cell as Gaussian with
//! tracked mean and variance. Estimator LLRs, decoder feedback moments and
//! interference moments are exchanged in five steps per iteration; all
//! per-step updates read only the state produced by the previous step, so
//! rows may be computed in parallel within a step but the step order is
//! fixed.

use ndarray::{Array2, ArrayView2};

use crate::codebook::SignatureCodebook;
use crate::config::{LlrScale, PowerProfile};
use crate::ldpc::LLR_CLIP;
use crate::linalg::Cholesky;

/// MMSE filter for one SIC round: `F = (sigma^2 I + A_d A_d^T)^{-1}` where
/// the columns of `A_d` are the amplitude-scaled detected signatures.
#[derive(Debug, Clone)]
pub struct MmseFilter {
    f: Array2<f64>,
    a_d: Array2<f64>,
    chol: Cholesky,
    sigma2: f64,
}

impl MmseFilter {
    /// Builds the filter for the detected columns. The system matrix is SPD
    /// for any `sigma2 > 0`, so factorization cannot fail there.
    pub fn build(
        columns: &[usize],
        codebook: &SignatureCodebook,
        power: &PowerProfile,
        sigma2: f64,
    ) -> Self {
        assert!(!columns.is_empty(), "filter needs at least one detected column");
        assert!(sigma2 > 0.0, "filter requires positive noise variance");
        let np = codebook.np();
        let t_size = codebook.t_size();
        let mut a_d = Array2::<f64>::zeros((np, columns.len()));
        for (k, &c) in columns.iter().enumerate() {
            let p = power.amplitude_for(c, t_size);
            let col = codebook.column(c);
            for i in 0..np {
                a_d[(i, k)] = p * col[i];
            }
        }
        let mut m = a_d.dot(&a_d.t());
        for i in 0..np {
            m[(i, i)] += sigma2;
        }
        let chol = Cholesky::factor(m.view()).expect("sigma2 I + A A^T is SPD");
        let f = chol.inverse();
        Self { f, a_d, chol, sigma2 }
    }

    /// The materialized `np x np` filter matrix.
    pub fn f(&self) -> ArrayView2<'_, f64> {
        self.f.view()
    }

    /// The amplitude-scaled detected dictionary `A_d`.
    pub fn a_d(&self) -> ArrayView2<'_, f64> {
        self.a_d.view()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `F * rhs` by triangular solves (better conditioned than multiplying
    /// by the materialized inverse).
    pub fn apply(&self, rhs: ArrayView2<'_, f64>) -> Array2<f64> {
        self.chol.solve_mat(rhs)
    }
}

/// Per-round estimator state: projection gains, interference moments,
/// symbol moments and the two LLR matrices, all `K x nc` with one row per
/// detected user.
#[derive(Debug, Clone)]
pub struct EseState {
    /// Detected codebook columns, one per tracked user.
    columns: Vec<usize>,
    /// Per-user amplitudes p_i.
    amplitudes: Vec<f64>,
    /// g[i][l] = a_i^T F a_l (raw signatures, no amplitudes).
    gains: Array2<f64>,
    /// d_i = p_i a_i^T F a_i.
    self_gain: Vec<f64>,
    /// c_i = sigma^2 a_i^T F F^T a_i; strictly positive.
    noise_term: Vec<f64>,
    /// y_i = a_i^T F Y.
    projected: Array2<f64>,
    xi_mean: Array2<f64>,
    xi_var: Array2<f64>,
    x_mean: Array2<f64>,
    x_var: Array2<f64>,
    llr_ese: Array2<f64>,
    llr_dec: Array2<f64>,
    frozen: Vec<bool>,
    /// w_mean[i][l] = p_l g[i][l], zero diagonal (interference-mean weights).
    w_mean: Array2<f64>,
    /// w_var[i][l] = p_l^2 g[i][l]^2, zero diagonal.
    w_var: Array2<f64>,
}

impl EseState {
    /// Projects the observation and initializes the moment bookkeeping:
    /// `E(xi) = 0`, `Var(xi) = sum_{l != i} p_l^2 g_il^2 + c_i`,
    /// `E(x) = 0`, `Var(x) = 1`.
    pub fn new(
        filter: &MmseFilter,
        columns: &[usize],
        codebook: &SignatureCodebook,
        power: &PowerProfile,
        y: ArrayView2<'_, f64>,
    ) -> Self {
        let k = columns.len();
        let np = codebook.np();
        let nc = y.ncols();
        assert!(k >= 1);
        assert_eq!(y.nrows(), np);

        let t_size = codebook.t_size();
        let amplitudes: Vec<f64> =
            columns.iter().map(|&c| power.amplitude_for(c, t_size)).collect();

        // raw detected signatures
        let mut a_raw = Array2::<f64>::zeros((np, k));
        for (i, &c) in columns.iter().enumerate() {
            a_raw.column_mut(i).assign(&codebook.column(c));
        }
        // v = F A_raw; gains = A_raw^T v; c_i = sigma^2 ||v_i||^2
        let v = filter.apply(a_raw.view());
        let gains = a_raw.t().dot(&v);
        let noise_term: Vec<f64> = (0..k)
            .map(|i| filter.sigma2() * v.column(i).iter().map(|x| x * x).sum::<f64>())
            .collect();
        let self_gain: Vec<f64> = (0..k).map(|i| amplitudes[i] * gains[(i, i)]).collect();
        let projected = v.t().dot(&y);

        let mut w_mean = Array2::<f64>::zeros((k, k));
        let mut w_var = Array2::<f64>::zeros((k, k));
        for i in 0..k {
            for l in 0..k {
                if l == i {
                    continue;
                }
                let g = gains[(i, l)];
                w_mean[(i, l)] = amplitudes[l] * g;
                w_var[(i, l)] = amplitudes[l] * amplitudes[l] * g * g;
            }
        }

        let mut state = Self {
            columns: columns.to_vec(),
            amplitudes,
            gains,
            self_gain,
            noise_term,
            projected,
            xi_mean: Array2::zeros((k, nc)),
            xi_var: Array2::zeros((k, nc)),
            x_mean: Array2::zeros((k, nc)),
            x_var: Array2::zeros((k, nc)),
            llr_ese: Array2::zeros((k, nc)),
            llr_dec: Array2::zeros((k, nc)),
            frozen: vec![false; k],
            w_mean,
            w_var,
        };
        state.init_moments();
        state
    }

    /// Resets the moment matrices to their initialization values.
    pub fn init_moments(&mut self) {
        self.xi_mean.fill(0.0);
        self.x_mean.fill(0.0);
        self.x_var.fill(1.0);
        for i in 0..self.user_count() {
            let base: f64 = self.w_var.row(i).sum() + self.noise_term[i];
            self.xi_var.row_mut(i).fill(base);
        }
    }

    pub fn user_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn amplitude(&self, user: usize) -> f64 {
        self.amplitudes[user]
    }

    /// `a_i^T F a_l`.
    pub fn gain(&self, i: usize, l: usize) -> f64 {
        self.gains[(i, l)]
    }

    pub fn self_gain(&self, user: usize) -> f64 {
        self.self_gain[user]
    }

    pub fn noise_term(&self, user: usize) -> f64 {
        self.noise_term[user]
    }

    pub fn projected(&self) -> ArrayView2<'_, f64> {
        self.projected.view()
    }

    pub fn llr_ese(&self) -> ArrayView2<'_, f64> {
        self.llr_ese.view()
    }

    pub fn llr_ese_row(&self, user: usize) -> Vec<f64> {
        self.llr_ese.row(user).to_vec()
    }

    pub fn xi_mean(&self) -> ArrayView2<'_, f64> {
        self.xi_mean.view()
    }

    pub fn xi_var(&self) -> ArrayView2<'_, f64> {
        self.xi_var.view()
    }

    pub fn x_mean(&self) -> ArrayView2<'_, f64> {
        self.x_mean.view()
    }

    pub fn x_var(&self) -> ArrayView2<'_, f64> {
        self.x_var.view()
    }

    pub fn is_frozen(&self, user: usize) -> bool {
        self.frozen[user]
    }

    pub fn all_frozen(&self) -> bool {
        self.frozen.iter().all(|&f| f)
    }

    /// Step 1: `l_ese = scale * d_i * (y_ij - E(xi_ij)) / Var(xi_ij)`,
    /// clipped. Frozen users are skipped.
    pub fn ese_llr(&mut self, scale: LlrScale) {
        let factor = scale.prefactor();
        for i in 0..self.user_count() {
            if self.frozen[i] {
                continue;
            }
            let d = self.self_gain[i];
            for j in 0..self.projected.ncols() {
                let v = factor * d * (self.projected[(i, j)] - self.xi_mean[(i, j)])
                    / self.xi_var[(i, j)];
                self.llr_ese[(i, j)] = v.clamp(-LLR_CLIP, LLR_CLIP);
            }
        }
    }

    /// Step 2 glue: stores the decoder's full posterior for one user.
    pub fn set_dec_posterior(&mut self, user: usize, posterior: &[f64]) {
        assert_eq!(posterior.len(), self.llr_dec.ncols());
        for (j, &v) in posterior.iter().enumerate() {
            self.llr_dec[(user, j)] = v;
        }
    }

    /// Step 3: extrinsic feedback, `l_dec <- l_dec - l_ese` (skips frozen).
    pub fn subtract_intrinsic(&mut self) {
        for i in 0..self.user_count() {
            if self.frozen[i] {
                continue;
            }
            for j in 0..self.llr_dec.ncols() {
                self.llr_dec[(i, j)] -= self.llr_ese[(i, j)];
            }
        }
    }

    /// Step 4: `E(x) = tanh(l_dec / 2)`, `Var(x) = 1 - E(x)^2` (skips
    /// frozen). The LLR is clipped before the tanh.
    pub fn symbol_moments(&mut self) {
        for i in 0..self.user_count() {
            if self.frozen[i] {
                continue;
            }
            for j in 0..self.llr_dec.ncols() {
                let l = self.llr_dec[(i, j)].clamp(-LLR_CLIP, LLR_CLIP);
                let e = (0.5 * l).tanh();
                self.x_mean[(i, j)] = e;
                self.x_var[(i, j)] = 1.0 - e * e;
            }
        }
    }

    /// Step 5: interference moments from the symbol moments of every other
    /// user, `E(xi_i) = sum_{l != i} p_l g_il E(x_l)` and
    /// `Var(xi_i) = sum_{l != i} p_l^2 g_il^2 Var(x_l) + c_i`.
    pub fn interference_moments(&mut self) {
        self.xi_mean = self.w_mean.dot(&self.x_mean);
        self.xi_var = self.w_var.dot(&self.x_var);
        for i in 0..self.user_count() {
            let c = self.noise_term[i];
            for j in 0..self.xi_var.ncols() {
                self.xi_var[(i, j)] += c;
            }
        }
    }

    /// Marks a verified user: its symbols become exact (`Var(x) = 0`) and it
    /// is skipped in Steps 1-4 from now on.
    pub fn freeze_user(&mut self, user: usize, symbols: &[f64]) {
        assert_eq!(symbols.len(), self.x_mean.ncols());
        self.frozen[user] = true;
        for (j, &s) in symbols.iter().enumerate() {
            debug_assert!(s == 1.0 || s == -1.0);
            self.x_mean[(user, j)] = s;
            self.x_var[(user, j)] = 0.0;
        }
    }
}
