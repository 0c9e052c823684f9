//! Flooding sum-product decoder with full-posterior output.
//!
//! Message buffers live in the decoder instance, so one instance per thread
//! gives allocation-free repeated decoding; concurrent decoding needs
//! distinct instances over the same code.

use super::{ParityCheckMatrix, LLR_CLIP};

/// Keeps tanh products away from +/-1 so atanh stays finite.
const TANH_GUARD: f64 = 1.0 - 1e-15;

/// Sum-product decoder over a fixed code, with owned scratch state.
#[derive(Debug, Clone)]
pub struct SumProductDecoder {
    n_vars: usize,
    n_checks: usize,
    // check-major CSR edge layout
    chk_offsets: Vec<usize>,
    chk_vars: Vec<u32>,
    // per-variable list of edge ids into the check-major arrays
    var_offsets: Vec<usize>,
    var_edges: Vec<u32>,
    // scratch
    var_to_chk: Vec<f64>,
    chk_to_var: Vec<f64>,
    channel: Vec<f64>,
    pinned: Vec<bool>,
    posterior: Vec<f64>,
    hard: Vec<u8>,
    prod_fwd: Vec<f64>,
    tanh_buf: Vec<f64>,
}

impl SumProductDecoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let n_vars = h.n_vars();
        let n_checks = h.n_checks();
        let mut chk_offsets = Vec::with_capacity(n_checks + 1);
        let mut chk_vars = Vec::new();
        chk_offsets.push(0);
        for c in 0..n_checks {
            for &v in h.check_neighbors(c) {
                chk_vars.push(v as u32);
            }
            chk_offsets.push(chk_vars.len());
        }
        let n_edges = chk_vars.len();
        let mut var_offsets = vec![0usize; n_vars + 1];
        for &v in &chk_vars {
            var_offsets[v as usize + 1] += 1;
        }
        for v in 0..n_vars {
            var_offsets[v + 1] += var_offsets[v];
        }
        let mut cursor = var_offsets.clone();
        let mut var_edges = vec![0u32; n_edges];
        for (e, &v) in chk_vars.iter().enumerate() {
            var_edges[cursor[v as usize]] = e as u32;
            cursor[v as usize] += 1;
        }
        let max_chk_deg = (0..n_checks).map(|c| h.check_neighbors(c).len()).max().unwrap_or(0);
        Self {
            n_vars,
            n_checks,
            chk_offsets,
            chk_vars,
            var_offsets,
            var_edges,
            var_to_chk: vec![0.0; n_edges],
            chk_to_var: vec![0.0; n_edges],
            channel: vec![0.0; n_vars],
            pinned: vec![false; n_vars],
            posterior: vec![0.0; n_vars],
            hard: vec![0u8; n_vars],
            prod_fwd: vec![0.0; max_chk_deg + 1],
            tanh_buf: vec![0.0; max_chk_deg],
        }
    }

    /// Runs up to `bp_iters` sum-product iterations, stopping early once the
    /// hard decisions satisfy every check. Returns the syndrome verdict.
    ///
    /// The full posterior (channel plus every check message) is left in
    /// [`Self::posterior`]. Channel LLRs are clipped to +/-LLR_CLIP on
    /// entry; an input at or beyond the clip is treated as certain and its
    /// posterior keeps the channel value, so a saturated input never flips
    /// sign. A bit with exactly zero posterior is undecided and blocks the
    /// success verdict.
    ///
    pub fn decode(&mut self, channel_llrs: &[f64], bp_iters: usize) -> bool {
        assert_eq!(channel_llrs.len(), self.n_vars, "LLR length mismatch");
        for (v, &raw) in channel_llrs.iter().enumerate() {
            let l = raw.clamp(-LLR_CLIP, LLR_CLIP);
            self.channel[v] = l;
            self.pinned[v] = l.abs() >= LLR_CLIP;
        }
        self.posterior.copy_from_slice(&self.channel);
        if self.syndrome_ok_from_posterior() {
            return true;
        }
        for e in 0..self.chk_vars.len() {
            self.var_to_chk[e] = self.channel[self.chk_vars[e] as usize];
        }
        for _ in 0..bp_iters {
            self.check_pass();
            self.variable_pass();
            if self.syndrome_ok_from_posterior() {
                return true;
            }
        }
        false
    }

    /// Full-posterior LLRs from the last [`Self::decode`] call.
    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    /// Hard decisions of the last posterior (positive LLR -> 0).
    pub fn hard_bits(&self) -> &[u8] {
        &self.hard
    }

    fn check_pass(&mut self) {
        for c in 0..self.n_checks {
            let (start, end) = (self.chk_offsets[c], self.chk_offsets[c + 1]);
            // forward/backward partial products of tanh(m/2)
            self.prod_fwd[0] = 1.0;
            for (i, e) in (start..end).enumerate() {
                let t = (0.5 * self.var_to_chk[e]).tanh();
                self.tanh_buf[i] = t;
                self.prod_fwd[i + 1] = self.prod_fwd[i] * t;
            }
            let mut back = 1.0;
            for (i, e) in (start..end).enumerate().rev() {
                let prod = self.prod_fwd[i] * back;
                let m = 2.0 * prod.clamp(-TANH_GUARD, TANH_GUARD).atanh();
                self.chk_to_var[e] = m.clamp(-LLR_CLIP, LLR_CLIP);
                back *= self.tanh_buf[i];
            }
        }
    }

    fn variable_pass(&mut self) {
        for v in 0..self.n_vars {
            if self.pinned[v] {
                // certainty propagates unchanged
                self.posterior[v] = self.channel[v];
                for i in self.var_offsets[v]..self.var_offsets[v + 1] {
                    self.var_to_chk[self.var_edges[i] as usize] = self.channel[v];
                }
                continue;
            }
            let mut total = self.channel[v];
            for i in self.var_offsets[v]..self.var_offsets[v + 1] {
                total += self.chk_to_var[self.var_edges[i] as usize];
            }
            self.posterior[v] = total;
            for i in self.var_offsets[v]..self.var_offsets[v + 1] {
                let e = self.var_edges[i] as usize;
                self.var_to_chk[e] = (total - self.chk_to_var[e]).clamp(-LLR_CLIP, LLR_CLIP);
            }
        }
    }

    fn syndrome_ok_from_posterior(&mut self) -> bool {
        let mut decided = true;
        for v in 0..self.n_vars {
            let l = self.posterior[v];
            self.hard[v] = u8::from(l < 0.0);
            decided &= l != 0.0;
        }
        if !decided {
            return false;
        }
        for c in 0..self.n_checks {
            let mut acc = 0u8;
            for e in self.chk_offsets[c]..self.chk_offsets[c + 1] {
                acc ^= self.hard[self.chk_vars[e] as usize];
            }
            if acc != 0 {
                return false;
            }
        }
        true
    }
}
