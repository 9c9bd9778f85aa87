//! Progressive-edge-growth construction of IRA-style parity-check matrices.
//!
//! Parity columns form a dual-diagonal staircase (column `k + j` touches rows
//! `j` and `j + 1`), which makes H full rank by construction. Information
//! columns get `info_degree` edges each, placed by PEG: every new edge goes
//! to a check node that is unreachable from the variable node, or failing
//! that the deepest one in its BFS tree, preferring low check degree.
//!
//! The shipped codes under `codes/` come from [`peg_ira`] via the
//! `gen_codes` example.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ParityCheck;

pub fn peg_ira(n: usize, k: usize, info_degree: usize, seed: u64) -> ParityCheck {
    assert!(k < n, "need at least one parity bit");
    let m = n - k;
    assert!(info_degree <= m, "info degree exceeds number of checks");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut var_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut chk_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for j in 0..m {
        let v = k + j;
        var_adj[v].push(j);
        chk_adj[j].push(v);
        if j + 1 < m {
            var_adj[v].push(j + 1);
            chk_adj[j + 1].push(v);
        }
    }

    let mut check_depth = vec![usize::MAX; m];
    let mut var_seen = vec![false; n];
    let mut queue = VecDeque::new();
    for v in 0..k {
        for _ in 0..info_degree {
            let candidates: Vec<usize> = if var_adj[v].is_empty() {
                (0..m).collect()
            } else {
                // BFS over the current graph from v.
                check_depth.fill(usize::MAX);
                var_seen.fill(false);
                queue.clear();
                var_seen[v] = true;
                queue.push_back((v, 0usize));
                let mut deepest = 0;
                while let Some((u, depth)) = queue.pop_front() {
                    for &c in &var_adj[u] {
                        if check_depth[c] != usize::MAX {
                            continue;
                        }
                        check_depth[c] = depth;
                        deepest = deepest.max(depth);
                        for &w in &chk_adj[c] {
                            if !var_seen[w] {
                                var_seen[w] = true;
                                queue.push_back((w, depth + 1));
                            }
                        }
                    }
                }
                let unreached: Vec<usize> =
                    (0..m).filter(|&c| check_depth[c] == usize::MAX).collect();
                if unreached.is_empty() {
                    (0..m)
                        .filter(|&c| check_depth[c] == deepest && !var_adj[v].contains(&c))
                        .collect()
                } else {
                    unreached
                }
            };
            let min_deg = candidates.iter().map(|&c| chk_adj[c].len()).min().expect("candidate");
            let lightest: Vec<usize> = candidates
                .into_iter()
                .filter(|&c| chk_adj[c].len() == min_deg)
                .collect();
            let c = lightest[rng.random_range(0..lightest.len())];
            var_adj[v].push(c);
            chk_adj[c].push(v);
        }
    }
    for row in &mut chk_adj {
        row.sort_unstable();
    }
    ParityCheck::from_rows(n, chk_adj).expect("construction yields a valid matrix")
}
