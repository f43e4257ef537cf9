//! Exact maximum cycle mean on small integer-weighted multigraphs.

use std::cmp::Ordering;

/// A labelled edge carrying two integer weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: usize,
    pub w: [i64; 2],
}

/// A fraction `num / den` with `den > 0`, compared exactly.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Mean {
    pub num: i64,
    pub den: i64,
}

impl PartialEq for Mean {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Mean {}

impl PartialOrd for Mean {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mean {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

/// Maximum mean of weight `k` over cycles using only `active` edges, or
/// `None` if there is no such cycle. Karp's recurrence with every node as
/// a possible start.
pub(crate) fn max_cycle_mean(n: usize, edges: &[Edge], active: &[bool], k: usize) -> Option<Mean> {
    // d[len][v]: best weight of a walk of exactly `len` edges ending at v
    let mut d: Vec<Vec<Option<i64>>> = vec![vec![Some(0); n]];
    for len in 1..=n {
        let prev = &d[len - 1];
        let mut cur = vec![None; n];
        for (e, _) in edges.iter().zip(active).filter(|(_, &a)| a) {
            if let Some(base) = prev[e.from] {
                let cand = base + e.w[k];
                if cur[e.to].is_none_or(|c| cand > c) {
                    cur[e.to] = Some(cand);
                }
            }
        }
        d.push(cur);
    }
    let mut best: Option<Mean> = None;
    for v in 0..n {
        let Some(dn) = d[n][v] else { continue };
        let worst = (0..n)
            .filter_map(|len| {
                d[len][v].map(|dk| Mean {
                    num: dn - dk,
                    den: (n - len) as i64,
                })
            })
            .min();
        if let Some(m) = worst {
            if best.is_none_or(|b| m > b) {
                best = Some(m);
            }
        }
    }
    best
}

/// Active edges lying on some cycle of mean exactly `mean` under weight `k`,
/// given that `mean` is the maximum. These are the zero-slack edges for the
/// longest-walk potentials of the reduced weights `w * den - num`.
pub(crate) fn critical_edges(n: usize, edges: &[Edge], active: &[bool], k: usize, mean: Mean) -> Vec<bool> {
    let reduced = |e: &Edge| e.w[k] * mean.den - mean.num;
    // no positive reduced cycle, so n rounds of relaxation settle
    let mut pi = vec![0i64; n];
    for _ in 0..n {
        let mut changed = false;
        for (e, _) in edges.iter().zip(active).filter(|(_, &a)| a) {
            let cand = pi[e.from] + reduced(e);
            if cand > pi[e.to] {
                pi[e.to] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let tight: Vec<bool> = edges
        .iter()
        .zip(active)
        .map(|(e, &a)| a && pi[e.from] + reduced(e) == pi[e.to])
        .collect();
    // keep only tight edges that close a tight cycle
    edges
        .iter()
        .zip(&tight)
        .map(|(e, &t)| t && reaches(n, edges, &tight, e.to, e.from, &vec![false; n]))
        .collect()
}

/// Is `target` reachable from `start` over `active` edges through nodes
/// not in `blocked`? The target itself may be blocked.
pub(crate) fn reaches(
    n: usize,
    edges: &[Edge],
    active: &[bool],
    start: usize,
    target: usize,
    blocked: &[bool],
) -> bool {
    if start == target {
        return true;
    }
    if blocked[start] {
        return false;
    }
    let mut seen = blocked.to_vec();
    seen.resize(n, false);
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for (e, _) in edges.iter().zip(active).filter(|(e, &a)| a && e.from == v) {
            if e.to == target {
                return true;
            }
            if !seen[e.to] {
                seen[e.to] = true;
                stack.push(e.to);
            }
        }
    }
    false
}

/// Lexicographically smallest simple cycle over `active` edges, as edge
/// indices. It starts at the smallest node on any cycle and, at each step,
/// takes the smallest (target, label) from which the start is still
/// reachable without revisiting a node.
pub(crate) fn lex_min_cycle(n: usize, edges: &[Edge], active: &[bool]) -> Option<Vec<usize>> {
    let none = vec![false; n];
    let start = (0..n).find(|&s| {
        edges
            .iter()
            .zip(active)
            .any(|(e, &a)| a && e.from == s && reaches(n, edges, active, e.to, s, &none))
    })?;
    let mut order: Vec<usize> = (0..edges.len()).filter(|&i| active[i]).collect();
    order.sort_by_key(|&i| (edges[i].from, edges[i].to, edges[i].label));

    let mut visited = vec![false; n];
    visited[start] = true;
    let mut cur = start;
    let mut cycle = Vec::new();
    loop {
        let mut chosen = None;
        for &i in order.iter().filter(|&&i| edges[i].from == cur) {
            let e = &edges[i];
            if e.to == start || (!visited[e.to] && reaches(n, edges, active, e.to, start, &visited)) {
                chosen = Some(i);
                break;
            }
        }
        let i = chosen.expect("start lies on a cycle");
        cycle.push(i);
        if edges[i].to == start {
            return Some(cycle);
        }
        cur = edges[i].to;
        visited[cur] = true;
    }
}
