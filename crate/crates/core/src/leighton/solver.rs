//! Bounded-integer feasibility by bound propagation and depth-first branching.

use std::time::Instant;

#[derive(Debug, Clone)]
pub struct Linear {
    pub terms: Vec<(usize, i64)>,
    pub rhs: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solved(Vec<i64>),
    /// The whole space was searched; no solution.
    Infeasible,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Default)]
pub struct Problem {
    lo: Vec<i64>,
    hi: Vec<i64>,
    constraints: Vec<Linear>,
    watch: Vec<Vec<usize>>,
}

impl Problem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, lo: i64, hi: i64) -> usize {
        self.lo.push(lo);
        self.hi.push(hi);
        self.watch.push(Vec::new());
        self.lo.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.lo.len()
    }

    /// `sum(coef * var) = rhs`; repeated variables are merged.
    pub fn equal(&mut self, terms: Vec<(usize, i64)>, rhs: i64) {
        let mut merged: Vec<(usize, i64)> = Vec::new();
        for (v, c) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(t) => t.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0);
        let idx = self.constraints.len();
        for &(v, _) in &merged {
            self.watch[v].push(idx);
        }
        self.constraints.push(Linear { terms: merged, rhs });
    }

    fn propagate(&self, lo: &mut [i64], hi: &mut [i64], mut queue: Vec<usize>) -> bool {
        let mut queued = vec![false; self.constraints.len()];
        for &q in &queue {
            queued[q] = true;
        }
        while let Some(ci) = queue.pop() {
            queued[ci] = false;
            let c = &self.constraints[ci];
            let (mut min, mut max) = (0i64, 0i64);
            for &(v, k) in &c.terms {
                if k > 0 {
                    min += k * lo[v];
                    max += k * hi[v];
                } else {
                    min += k * hi[v];
                    max += k * lo[v];
                }
            }
            if c.rhs < min || c.rhs > max {
                return false;
            }
            for &(v, k) in &c.terms {
                let (own_min, own_max) = if k > 0 { (k * lo[v], k * hi[v]) } else { (k * hi[v], k * lo[v]) };
                // k * x must lie in [rhs - (max - own_max), rhs - (min - own_min)]
                let low = c.rhs - (max - own_max);
                let high = c.rhs - (min - own_min);
                let (nlo, nhi) = if k > 0 {
                    (div_ceil(low, k), div_floor(high, k))
                } else {
                    (div_ceil(high, k), div_floor(low, k))
                };
                let (nlo, nhi) = (nlo.max(lo[v]), nhi.min(hi[v]));
                if nlo > nhi {
                    return false;
                }
                if nlo != lo[v] || nhi != hi[v] {
                    lo[v] = nlo;
                    hi[v] = nhi;
                    for &w in &self.watch[v] {
                        if !queued[w] {
                            queued[w] = true;
                            queue.push(w);
                        }
                    }
                }
            }
        }
        true
    }

    /// Depth-first search; branching picks the smallest open domain, ties broken by `priority`
    /// (lower first), and tries values in increasing order.
    pub fn solve(&self, priority: &[u64], max_nodes: u64, deadline: Option<Instant>) -> (Outcome, u64) {
        self.solve_until(priority, max_nodes, deadline, &|| false)
    }

    /// As [`Problem::solve`], giving up with `TimeLimit` once `cancel` returns true.
    pub fn solve_until(
        &self,
        priority: &[u64],
        max_nodes: u64,
        deadline: Option<Instant>,
        cancel: &dyn Fn() -> bool,
    ) -> (Outcome, u64) {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        let mut nodes = 0u64;
        if !self.propagate(&mut lo, &mut hi, (0..self.constraints.len()).collect()) {
            return (Outcome::Infeasible, 1);
        }
        let limits = Limits { priority, max_nodes, deadline, cancel };
        let out = self.branch(lo, hi, &limits, &mut nodes);
        (out, nodes)
    }

    fn branch(&self, lo: Vec<i64>, hi: Vec<i64>, limits: &Limits<'_>, nodes: &mut u64) -> Outcome {
        *nodes += 1;
        if *nodes > limits.max_nodes {
            return Outcome::NodeLimit;
        }
        if *nodes % 64 == 0 && (limits.deadline.is_some_and(|d| Instant::now() > d) || (limits.cancel)()) {
            return Outcome::TimeLimit;
        }
        let priority = limits.priority;
        let pick = (0..lo.len())
            .filter(|&v| lo[v] < hi[v])
            .min_by_key(|&v| (hi[v] - lo[v], priority.get(v).copied().unwrap_or(0), v));
        let Some(v) = pick else {
            return Outcome::Solved(lo);
        };
        for value in lo[v]..=hi[v] {
            let (mut l, mut h) = (lo.clone(), hi.clone());
            l[v] = value;
            h[v] = value;
            if !self.propagate(&mut l, &mut h, self.watch[v].clone()) {
                continue;
            }
            match self.branch(l, h, limits, nodes) {
                Outcome::Infeasible => continue,
                other => return other,
            }
        }
        Outcome::Infeasible
    }
}

struct Limits<'a> {
    priority: &'a [u64],
    max_nodes: u64,
    deadline: Option<Instant>,
    cancel: &'a dyn Fn() -> bool,
}

fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

/// Splits a nonnegative square matrix whose rows and columns all sum to `n` into `n`
/// permutations (row -> column).
pub fn birkhoff(matrix: &[Vec<i64>], n: i64) -> Option<Vec<Vec<usize>>> {
    let size = matrix.len();
    let mut m: Vec<Vec<i64>> = matrix.to_vec();
    let mut out = Vec::new();
    for _ in 0..n {
        let perm = perfect_matching(size, |i, j| m[i][j] > 0)?;
        for (i, &j) in perm.iter().enumerate() {
            m[i][j] -= 1;
        }
        out.push(perm);
    }
    m.iter().all(|row| row.iter().all(|&x| x == 0)).then_some(out)
}

/// Perfect matching between rows and columns of an `n × n` bipartite graph.
pub fn perfect_matching(n: usize, edge: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| edge(i, j)).collect()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &adj, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        perm[o.expect("matched")] = j;
    }
    Some(perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divisions_round_toward_infinity() {
        assert_eq!(div_floor(-3, 2), -2);
        assert_eq!(div_ceil(-3, 2), -1);
        assert_eq!(div_floor(3, -2), -2);
        assert_eq!(div_ceil(7, 2), 4);
    }

    #[test]
    fn small_system() {
        // x + y = 5, x - 2y = -1  => x = 3, y = 2
        let mut p = Problem::new();
        let x = p.var(0, 10);
        let y = p.var(0, 10);
        p.equal(vec![(x, 1), (y, 1)], 5);
        p.equal(vec![(x, 1), (y, -2)], -1);
        assert_eq!(p.solve(&[], 100, None).0, Outcome::Solved(vec![3, 2]));
    }

    #[test]
    fn infeasible_and_node_limit() {
        // 2x + 2y + 2z = 7 has no integer solution
        let mut p = Problem::new();
        let x = p.var(0, 5);
        let y = p.var(0, 5);
        let z = p.var(0, 5);
        p.equal(vec![(x, 2), (y, 2), (z, 2)], 7);
        assert_eq!(p.solve(&[], 1000, None).0, Outcome::Infeasible);
        let mut q = Problem::new();
        let x = q.var(0, 5);
        let y = q.var(0, 5);
        q.equal(vec![(x, 1), (y, 1)], 5);
        assert_eq!(q.solve(&[], 1, None).0, Outcome::NodeLimit);
        assert_eq!(q.solve(&[], 2, None).0, Outcome::Solved(vec![0, 5]));
    }

    #[test]
    fn birkhoff_splits() {
        let m = vec![vec![2, 1, 0], vec![0, 1, 2], vec![1, 1, 1]];
        let perms = birkhoff(&m, 3).unwrap();
        let mut back = vec![vec![0; 3]; 3];
        for p in &perms {
            for (i, &j) in p.iter().enumerate() {
                back[i][j] += 1;
            }
        }
        assert_eq!(back, m);
    }
}
