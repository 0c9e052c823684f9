//! Active-signature detection on the (residual) received matrix.
//!
//! The received signal is a row-sparse multiple-measurement-vector model
//! over the codebook, so support recovery reduces to simultaneous
//! orthogonal matching pursuit: greedily pick the column with the largest
//! joint correlation against the residual, then project the observation
//! onto the orthogonal complement of everything selected so far.

use log::warn;
use ndarray::{Array1, Array2, ArrayView2};

use crate::codebook::SignatureCodebook;
use crate::config::{DetectionMode, DetectionPolicy};

/// Numerical rank floor: a candidate whose component orthogonal to the
/// selected span has smaller norm than this is dropped.
const RANK_EPS: f64 = 1e-10;

/// Detected codebook columns in selection order with their scores
/// (`||a_i^T R||_2` at selection time).
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    pub columns: Vec<usize>,
    pub scores: Vec<f64>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Simultaneous orthogonal matching pursuit over the codebook.
///
/// Stops at the policy budget (fixed-count mode), when the relative
/// residual energy falls under the policy threshold (residual-threshold
/// mode), or when no remaining column carries any energy. Ties break
/// toward the lowest column index, so the output is deterministic.
pub fn somp(y: ArrayView2<'_, f64>, codebook: &SignatureCodebook, policy: &DetectionPolicy) -> ActiveSet {
    let t_size = codebook.t_size();
    let np = codebook.np();
    assert_eq!(y.nrows(), np, "observation row count must equal np");

    let mut columns = Vec::new();
    let mut scores = Vec::new();
    let budget = policy.budget.min(t_size);

    let init_energy: f64 = y.iter().map(|v| v * v).sum();
    if init_energy == 0.0 || budget == 0 {
        return ActiveSet { columns, scores };
    }

    let mut residual = y.to_owned();
    // corr[i, :] = a_i^T R, kept in sync with the residual updates
    let mut corr: Array2<f64> = codebook.matrix().t().dot(&residual);
    let mut used = vec![false; t_size];
    // orthonormal basis of the selected span
    let mut basis: Vec<Array1<f64>> = Vec::new();
    let mut energy = init_energy;

    while columns.len() < budget {
        if policy.mode == DetectionMode::ResidualThreshold && energy / init_energy <= policy.threshold
        {
            break;
        }
        // argmax of ||a_i^T R||_2 over unused columns, lowest index on ties
        let mut best = usize::MAX;
        let mut best_sq = 0.0;
        for (i, row) in corr.rows().into_iter().enumerate() {
            if used[i] {
                continue;
            }
            let row_sq: f64 = row.iter().map(|v| v * v).sum();
            if row_sq > best_sq {
                best_sq = row_sq;
                best = i;
            }
        }
        if best == usize::MAX || best_sq == 0.0 {
            break;
        }
        used[best] = true;

        // component of a_best orthogonal to the selected span
        let mut q = codebook.column(best).to_owned();
        for b in &basis {
            let proj = b.dot(&q);
            q.scaled_add(-proj, b);
        }
        let qn = q.dot(&q).sqrt();
        if qn < RANK_EPS {
            warn!("somp: column {best} is numerically dependent on the selected span; dropped");
            continue;
        }
        q.mapv_inplace(|v| v / qn);

        columns.push(best);
        scores.push(best_sq.sqrt());

        // deflate: R <- R - q (q^T R), corr <- corr - (A^T q)(q^T R)
        let w = q.dot(&residual); // nc
        let u = codebook.matrix().t().dot(&q); // t_size
        for (j, &wj) in w.iter().enumerate() {
            let mut col = residual.column_mut(j);
            for (r, &qv) in col.iter_mut().zip(q.iter()) {
                *r -= qv * wj;
            }
        }
        for (mut row, &ui) in corr.rows_mut().into_iter().zip(u.iter()) {
            if ui == 0.0 {
                continue;
            }
            for (c, &wj) in row.iter_mut().zip(w.iter()) {
                *c -= ui * wj;
            }
        }
        basis.push(q);
        energy = residual.iter().map(|v| v * v).sum();
    }

    ActiveSet { columns, scores }
}
