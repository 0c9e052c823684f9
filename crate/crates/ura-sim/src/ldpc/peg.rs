//! Progressive edge growth construction for the shipped code asset.
//!
//! Edges are placed one variable at a time; each new edge attaches to the
//! check that is furthest from the variable in the current graph (largest
//! girth impact), breaking ties by lowest check degree and then by a seeded
//! pseudorandom check ordering so the construction is deterministic given
//! its seed but structurally unbiased.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{BitMatrix, LdpcError, ParityCheckMatrix};

/// Builds an (n_vars, n_vars - n_checks) code with regular variable degree.
pub fn construct(n_vars: usize, n_checks: usize, var_degree: usize, seed: u64) -> ParityCheckMatrix {
    assert!(n_checks >= 1 && n_vars > n_checks);
    assert!(var_degree >= 1 && var_degree <= n_checks);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tie_rank: Vec<usize> = (0..n_checks).collect();
    tie_rank.shuffle(&mut rng);

    let mut check_to_vars: Vec<Vec<usize>> = vec![Vec::new(); n_checks];
    let mut var_to_checks: Vec<Vec<usize>> = vec![Vec::new(); n_vars];

    let mut reached = vec![false; n_checks];
    let mut var_seen = vec![false; n_vars];

    for v in 0..n_vars {
        for edge in 0..var_degree {
            let candidate = if edge == 0 {
                best_check((0..n_checks).filter(|&c| !var_to_checks[v].contains(&c)),
                    &check_to_vars, &tie_rank)
            } else {
                // BFS from v over the current bipartite graph; checks left
                // unreached (or, failing that, the deepest frontier) are the
                // candidates.
                reached.iter_mut().for_each(|r| *r = false);
                var_seen.iter_mut().for_each(|r| *r = false);
                var_seen[v] = true;
                let mut frontier_checks: Vec<usize> = var_to_checks[v].clone();
                for &c in &frontier_checks {
                    reached[c] = true;
                }
                let mut last_frontier = frontier_checks.clone();
                loop {
                    let mut next_checks = Vec::new();
                    for &c in &frontier_checks {
                        for &u in &check_to_vars[c] {
                            if !var_seen[u] {
                                var_seen[u] = true;
                                for &c2 in &var_to_checks[u] {
                                    if !reached[c2] {
                                        reached[c2] = true;
                                        next_checks.push(c2);
                                    }
                                }
                            }
                        }
                    }
                    if next_checks.is_empty() {
                        break;
                    }
                    last_frontier = next_checks.clone();
                    frontier_checks = next_checks;
                }
                let unreached: Vec<usize> = (0..n_checks).filter(|&c| !reached[c]).collect();
                let pool = if unreached.is_empty() { last_frontier } else { unreached };
                best_check(pool.into_iter(), &check_to_vars, &tie_rank)
            };
            check_to_vars[candidate].push(v);
            var_to_checks[v].push(candidate);
        }
    }

    ParityCheckMatrix::from_check_adjacency(n_vars, check_to_vars)
        .expect("PEG construction yields a valid graph")
}

fn best_check(
    pool: impl Iterator<Item = usize>,
    check_to_vars: &[Vec<usize>],
    tie_rank: &[usize],
) -> usize {
    pool.min_by_key(|&c| (check_to_vars[c].len(), tie_rank[c]))
        .expect("candidate pool is never empty")
}

/// Permutes columns so the trailing `n_checks` columns form an invertible
/// square submatrix over GF(2): the first `n - n_checks` positions then
/// carry the payload under systematic encoding. Fails when the matrix is
/// rank deficient.
pub fn systematize_columns(h: &ParityCheckMatrix) -> Result<ParityCheckMatrix, LdpcError> {
    let m = h.n_checks();
    let n = h.n_vars();
    let mut bits = BitMatrix::from_check_matrix(h);
    let pivots = bits.eliminate(None);
    if pivots.len() < m {
        return Err(LdpcError::RankDeficient { rank: pivots.len(), rows: m });
    }
    let is_pivot = {
        let mut mask = vec![false; n];
        for &c in &pivots {
            mask[c] = true;
        }
        mask
    };
    // information columns first (original order), pivot columns last
    let mut order: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    order.extend((0..n).filter(|&c| is_pivot[c]));
    let mut new_pos = vec![0usize; n];
    for (pos, &old) in order.iter().enumerate() {
        new_pos[old] = pos;
    }
    let check_to_vars: Vec<Vec<usize>> = (0..m)
        .map(|c| {
            let mut vars: Vec<usize> =
                h.check_neighbors(c).iter().map(|&v| new_pos[v]).collect();
            vars.sort_unstable();
            vars
        })
        .collect();
    ParityCheckMatrix::from_check_adjacency(n, check_to_vars)
}
