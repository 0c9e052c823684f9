//! Standard alist interchange format (dimensions, max degrees, degree
//! lists, 1-indexed adjacency lists, zero-padded entries tolerated).

use super::{LdpcError, ParityCheckMatrix};

fn parse_ints(line: &str, line_no: usize) -> Result<Vec<usize>, LdpcError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| LdpcError::Parse {
                line: line_no,
                reason: format!("expected integer, got {tok:?}"),
            })
        })
        .collect()
}

/// Parses alist text into a validated [`ParityCheckMatrix`].
pub(super) fn parse(text: &str) -> Result<ParityCheckMatrix, LdpcError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut next_line = |what: &str| {
        lines.next().ok_or_else(|| LdpcError::Parse {
            line: 0,
            reason: format!("unexpected end of file, expected {what}"),
        })
    };

    let (no, line) = next_line("dimensions")?;
    let dims = parse_ints(line, no)?;
    if dims.len() != 2 {
        return Err(LdpcError::Parse { line: no, reason: "expected `n_vars n_checks`".into() });
    }
    let (n_vars, n_checks) = (dims[0], dims[1]);
    if n_vars == 0 || n_checks == 0 {
        return Err(LdpcError::Parse { line: no, reason: "dimensions must be positive".into() });
    }

    let (no, line) = next_line("max degrees")?;
    let max_degs = parse_ints(line, no)?;
    if max_degs.len() != 2 {
        return Err(LdpcError::Parse { line: no, reason: "expected two max degrees".into() });
    }

    let (no, line) = next_line("variable degrees")?;
    let var_degs = parse_ints(line, no)?;
    if var_degs.len() != n_vars {
        return Err(LdpcError::Parse {
            line: no,
            reason: format!("expected {n_vars} variable degrees, got {}", var_degs.len()),
        });
    }
    let (no, line) = next_line("check degrees")?;
    let chk_degs = parse_ints(line, no)?;
    if chk_degs.len() != n_checks {
        return Err(LdpcError::Parse {
            line: no,
            reason: format!("expected {n_checks} check degrees, got {}", chk_degs.len()),
        });
    }

    // Per-variable adjacency: validated against declared degrees and later
    // cross-checked against the per-check lists.
    let mut var_to_checks = Vec::with_capacity(n_vars);
    for (v, &deg) in var_degs.iter().enumerate() {
        let (no, line) = next_line("variable adjacency")?;
        let entries = parse_ints(line, no)?;
        let nonzero: Vec<usize> = entries.iter().copied().filter(|&e| e != 0).collect();
        if nonzero.len() != deg || entries.len() < deg {
            return Err(LdpcError::Parse {
                line: no,
                reason: format!("variable {v}: expected {deg} entries"),
            });
        }
        for &c in &nonzero {
            if c > n_checks {
                return Err(LdpcError::Parse {
                    line: no,
                    reason: format!("variable {v}: check index {c} out of range"),
                });
            }
        }
        var_to_checks.push(nonzero.iter().map(|&c| c - 1).collect::<Vec<_>>());
    }

    let mut check_to_vars = Vec::with_capacity(n_checks);
    for (c, &deg) in chk_degs.iter().enumerate() {
        let (no, line) = next_line("check adjacency")?;
        let entries = parse_ints(line, no)?;
        let nonzero: Vec<usize> = entries.iter().copied().filter(|&e| e != 0).collect();
        if nonzero.len() != deg || entries.len() < deg {
            return Err(LdpcError::Parse {
                line: no,
                reason: format!("check {c}: expected {deg} entries"),
            });
        }
        for &v in &nonzero {
            if v > n_vars {
                return Err(LdpcError::Parse {
                    line: no,
                    reason: format!("check {c}: variable index {v} out of range"),
                });
            }
        }
        check_to_vars.push(nonzero.iter().map(|&v| v - 1).collect::<Vec<_>>());
    }

    let h = ParityCheckMatrix::from_check_adjacency(n_vars, check_to_vars)?;
    // Cross-check the two adjacency views.
    for (v, checks) in var_to_checks.iter().enumerate() {
        let mut expect = h.var_neighbors(v).to_vec();
        expect.sort_unstable();
        let mut got = checks.clone();
        got.sort_unstable();
        if expect != got {
            return Err(LdpcError::Inconsistent(format!(
                "variable {v}: row and column adjacency lists disagree"
            )));
        }
    }
    Ok(h)
}

/// Serializes to canonical alist text (entries zero-padded to max degree).
pub fn to_alist(h: &ParityCheckMatrix) -> String {
    let n_vars = h.n_vars();
    let n_checks = h.n_checks();
    let max_var = (0..n_vars).map(|v| h.var_neighbors(v).len()).max().unwrap_or(0);
    let max_chk = (0..n_checks).map(|c| h.check_neighbors(c).len()).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("{n_vars} {n_checks}\n{max_var} {max_chk}\n"));
    let degs: Vec<String> = (0..n_vars).map(|v| h.var_neighbors(v).len().to_string()).collect();
    out.push_str(&degs.join(" "));
    out.push('\n');
    let degs: Vec<String> = (0..n_checks).map(|c| h.check_neighbors(c).len().to_string()).collect();
    out.push_str(&degs.join(" "));
    out.push('\n');
    for v in 0..n_vars {
        let mut entries: Vec<usize> = h.var_neighbors(v).iter().map(|&c| c + 1).collect();
        entries.sort_unstable();
        entries.resize(max_var, 0);
        let toks: Vec<String> = entries.iter().map(|e| e.to_string()).collect();
        out.push_str(&toks.join(" "));
        out.push('\n');
    }
    for c in 0..n_checks {
        let mut entries: Vec<usize> = h.check_neighbors(c).iter().map(|&v| v + 1).collect();
        entries.sort_unstable();
        entries.resize(max_chk, 0);
        let toks: Vec<String> = entries.iter().map(|e| e.to_string()).collect();
        out.push_str(&toks.join(" "));
        out.push('\n');
    }
    out
}
