//! Asymmetric TSP: greedy construction, orientation-preserving k-opt
//! improvement, exact enumeration for small instances, and the plain
//! full-matrix text format used to hand instances to external solvers.
//!
//! Tours keep `order[0]` fixed. Open tours are handled by treating every leg
//! back into `order[0]` as free, which turns them into closed tours over the
//! same move set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dubins::{dubins_airplane_path, Pose4, VehicleLimits};

/// Diagonal value written by the text exporter.
pub const EXPORT_DIAGONAL: f64 = 1e9;

/// Largest instance accepted by [`brute_force_tour`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

const IMPROVEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TspError {
    #[error("cost matrix invalid: {0}")]
    InvalidMatrix(String),
    #[error("instance of size {0} exceeds the enumeration limit of {BRUTE_FORCE_LIMIT}")]
    TooLarge(usize),
    #[error("invalid tour: {0}")]
    InvalidTour(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    /// Builds a matrix from `f(i, j)` for every `i != j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, TspError> {
        let mut data = vec![f64::INFINITY; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    data[i * n + j] = f(i, j);
                }
            }
        }
        Self::from_rows_unchecked(n, data)
    }

    /// Row-major input; diagonal entries are ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TspError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(TspError::InvalidMatrix("matrix must be square".into()));
        }
        Self::from_fn(n, |i, j| rows[i][j])
    }

    fn from_rows_unchecked(n: usize, mut data: Vec<f64>) -> Result<Self, TspError> {
        if n < 2 {
            return Err(TspError::InvalidMatrix(format!("need at least 2 nodes, got {n}")));
        }
        for i in 0..n {
            data[i * n + i] = f64::INFINITY;
            for j in 0..n {
                let c = data[i * n + j];
                if i != j && !(c.is_finite() && c >= 0.0) {
                    return Err(TspError::InvalidMatrix(format!("cost[{i}][{j}] = {c}")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub total_cost: f64,
    pub closed: bool,
}

impl Tour {
    /// Validates `order` as a permutation and prices it.
    pub fn from_order(order: Vec<usize>, costs: &CostMatrix, closed: bool) -> Result<Self, TspError> {
        check_permutation(&order, costs.n())?;
        let total_cost = tour_cost(&order, costs, closed);
        Ok(Self { order, total_cost, closed })
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<(), TspError> {
    if order.len() != n {
        return Err(TspError::InvalidTour(format!("expected {n} indices, got {}", order.len())));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n {
            return Err(TspError::InvalidTour(format!("index {i} out of range 0..{n}")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(TspError::InvalidTour(format!("index {i} repeated")));
        }
    }
    Ok(())
}

/// Sum of consecutive leg costs, plus the return leg for closed tours.
pub fn tour_cost(order: &[usize], costs: &CostMatrix, closed: bool) -> f64 {
    let mut total: f64 = order.windows(2).map(|w| costs.get(w[0], w[1])).sum();
    if closed && order.len() > 1 {
        total += costs.get(order[order.len() - 1], order[0]);
    }
    total
}

/// Greedy tour from `start`; ties go to the lowest index.
pub fn nearest_neighbor_tour(costs: &CostMatrix, start: usize, closed: bool) -> Tour {
    let n = costs.n();
    assert!(start < n, "start index {start} out of range");
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    while order.len() < n {
        let mut best = usize::MAX;
        let mut best_c = f64::INFINITY;
        for (j, &seen) in visited.iter().enumerate() {
            if !seen && costs.get(cur, j) < best_c {
                best_c = costs.get(cur, j);
                best = j;
            }
        }
        visited[best] = true;
        order.push(best);
        cur = best;
    }
    let total_cost = tour_cost(&order, costs, closed);
    Tour { order, total_cost, closed }
}

/// Improving move found by the local search, in tour positions.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    /// Move `len` nodes starting at position `from` to sit after position `after`.
    Relocate { from: usize, len: usize, after: usize },
    /// Swap the adjacent blocks `[i, j)` and `[j, k)`.
    SwapBlocks { i: usize, j: usize, k: usize },
}

struct Search<'a> {
    costs: &'a CostMatrix,
    closed: bool,
    start: usize,
}

impl Search<'_> {
    fn leg(&self, a: usize, b: usize) -> f64 {
        if !self.closed && b == self.start {
            0.0
        } else {
            self.costs.get(a, b)
        }
    }

    fn first_relocation(&self, o: &[usize]) -> Option<Move> {
        let n = o.len();
        for len in 1..=3.min(n.saturating_sub(2)) {
            for from in 1..=(n - len) {
                let last = from + len - 1;
                let prev = o[from - 1];
                let next = o[(last + 1) % n];
                let removed = self.leg(prev, o[from]) + self.leg(o[last], next);
                let bridged = self.leg(prev, next);
                for after in 0..n {
                    // the insertion edge (after, after+1) must lie outside [from-1, last]
                    if after + 1 >= from && after <= last {
                        continue;
                    }
                    let a = o[after];
                    let b = o[(after + 1) % n];
                    let delta = bridged - removed - self.leg(a, b)
                        + self.leg(a, o[from])
                        + self.leg(o[last], b);
                    if delta < -IMPROVEMENT_EPS {
                        return Some(Move::Relocate { from, len, after });
                    }
                }
            }
        }
        None
    }

    fn first_block_swap(&self, o: &[usize]) -> Option<Move> {
        let n = o.len();
        for i in 1..n {
            for j in (i + 1)..n {
                for k in (j + 1)..=n {
                    let a = o[i - 1];
                    let d = o[k % n];
                    let removed = self.leg(a, o[i]) + self.leg(o[j - 1], o[j]) + self.leg(o[k - 1], d);
                    let added = self.leg(a, o[j]) + self.leg(o[k - 1], o[i]) + self.leg(o[j - 1], d);
                    if added - removed < -IMPROVEMENT_EPS {
                        return Some(Move::SwapBlocks { i, j, k });
                    }
                }
            }
        }
        None
    }
}

fn apply(order: &[usize], mv: Move) -> Vec<usize> {
    match mv {
        Move::Relocate { from, len, after } => {
            let segment: Vec<usize> = order[from..from + len].to_vec();
            let anchor = order[after];
            let mut rest: Vec<usize> =
                order[..from].iter().chain(&order[from + len..]).copied().collect();
            let at = rest.iter().position(|&x| x == anchor).expect("anchor kept") + 1;
            rest.splice(at..at, segment);
            rest
        }
        Move::SwapBlocks { i, j, k } => {
            let mut out = Vec::with_capacity(order.len());
            out.extend_from_slice(&order[..i]);
            out.extend_from_slice(&order[j..k]);
            out.extend_from_slice(&order[i..j]);
            out.extend_from_slice(&order[k..]);
            out
        }
    }
}

/// First-improvement local search over moves that never reverse a
/// sub-path: segment relocation of 1–3 nodes (`max_k >= 2`) and, with
/// `max_k >= 3`, exchange of two adjacent blocks. Each pass applies the first
/// improving move found; the search stops after a pass with no improvement
/// or after `max_passes` passes.
pub fn k_opt_improve(tour: &Tour, costs: &CostMatrix, max_k: usize, max_passes: usize) -> Tour {
    let n = costs.n();
    assert_eq!(tour.order.len(), n, "tour does not match the cost matrix");
    let search = Search { costs, closed: tour.closed, start: tour.order[0] };
    let objective = |o: &[usize]| {
        let mut c: f64 = o.windows(2).map(|w| search.leg(w[0], w[1])).sum();
        c += search.leg(o[n - 1], o[0]);
        c
    };
    let mut order = tour.order.clone();
    let mut current = objective(&order);
    if n >= 3 {
        for _ in 0..max_passes {
            let mv = search
                .first_relocation(&order)
                .or_else(|| if max_k >= 3 { search.first_block_swap(&order) } else { None });
            let Some(mv) = mv else { break };
            let next = apply(&order, mv);
            let next_cost = objective(&next);
            assert!(next_cost <= current + 1e-9, "k-opt accepted a worsening move");
            debug_assert_eq!(next[0], order[0]);
            order = next;
            current = next_cost;
        }
    }
    let total_cost = tour_cost(&order, costs, tour.closed);
    Tour { order, total_cost, closed: tour.closed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KOptConfig {
    pub max_k: usize,
    pub max_passes: usize,
    /// Perturbation rounds after the first local optimum.
    pub kicks: usize,
    pub seed: u64,
}

impl Default for KOptConfig {
    fn default() -> Self {
        Self { max_k: 3, max_passes: 100_000, kicks: 200, seed: 0x5eed }
    }
}

/// Iterated local search: [`k_opt_improve`] to a local optimum, then
/// repeatedly perturb it with a random block exchange, re-optimize, and keep
/// the result when it is strictly cheaper.
pub fn iterated_k_opt(tour: &Tour, costs: &CostMatrix, config: &KOptConfig) -> Tour {
    let mut best = k_opt_improve(tour, costs, config.max_k, config.max_passes);
    let n = costs.n();
    if n < 4 {
        return best;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.kicks {
        let mut cuts = [0usize; 3];
        loop {
            for c in &mut cuts {
                *c = rng.gen_range(1..=n);
            }
            cuts.sort_unstable();
            if cuts[0] < cuts[1] && cuts[1] < cuts[2] {
                break;
            }
        }
        let kicked = apply(&best.order, Move::SwapBlocks { i: cuts[0], j: cuts[1], k: cuts[2] });
        let kicked = Tour { total_cost: tour_cost(&kicked, costs, best.closed), order: kicked, closed: best.closed };
        let candidate = k_opt_improve(&kicked, costs, config.max_k, config.max_passes);
        if candidate.total_cost < best.total_cost - IMPROVEMENT_EPS {
            best = candidate;
        }
    }
    best
}

/// Exact optimal closed tour by enumerating every order with node 0 first.
pub fn brute_force_tour(costs: &CostMatrix) -> Result<Tour, TspError> {
    let n = costs.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(TspError::TooLarge(n));
    }
    let mut best_order: Vec<usize> = (0..n).collect();
    let mut best = tour_cost(&best_order, costs, true);
    let mut path = vec![0usize];
    let mut used = vec![false; n];
    used[0] = true;
    fn recurse(
        costs: &CostMatrix,
        path: &mut Vec<usize>,
        used: &mut [bool],
        partial: f64,
        best: &mut f64,
        best_order: &mut Vec<usize>,
    ) {
        let n = costs.n();
        let last = *path.last().unwrap();
        if path.len() == n {
            let total = partial + costs.get(last, path[0]);
            if total < *best {
                *best = total;
                best_order.clone_from(path);
            }
            return;
        }
        for j in 1..n {
            if !used[j] {
                used[j] = true;
                path.push(j);
                recurse(costs, path, used, partial + costs.get(last, j), best, best_order);
                path.pop();
                used[j] = false;
            }
        }
    }
    recurse(costs, &mut path, &mut used, 0.0, &mut best, &mut best_order);
    Ok(Tour { total_cost: tour_cost(&best_order, costs, true), order: best_order, closed: true })
}

/// `cost[i][j]` = Dubins airplane length from `points[i]` to `points[j]`.
pub fn dubins_cost_matrix(points: &[Pose4], limits: &VehicleLimits) -> Result<CostMatrix, TspError> {
    CostMatrix::from_fn(points.len(), |i, j| {
        dubins_airplane_path(&points[i], &points[j], limits).total_length
    })
}

/// Full-matrix text: `n` on the first line, then `n` rows of `n` numbers.
pub fn format_full_matrix(costs: &CostMatrix) -> String {
    let n = costs.n();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| if i == j { format!("{EXPORT_DIAGONAL:e}") } else { format!("{}", costs.get(i, j)) })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_full_matrix(text: &str) -> Result<CostMatrix, TspError> {
    let mut tokens = text.split_whitespace();
    let n: usize = tokens
        .next()
        .ok_or_else(|| TspError::Parse("empty matrix file".into()))?
        .parse()
        .map_err(|e| TspError::Parse(format!("bad size: {e}")))?;
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let tok = tokens
                .next()
                .ok_or_else(|| TspError::Parse(format!("missing entry ({i}, {j})")))?;
            *v = tok.parse().map_err(|e| TspError::Parse(format!("entry ({i}, {j}) '{tok}': {e}")))?;
        }
    }
    if let Some(extra) = tokens.next() {
        return Err(TspError::Parse(format!("trailing token '{extra}'")));
    }
    CostMatrix::from_rows(&rows)
}

/// Whitespace-separated node indices forming a permutation of `0..n`.
pub fn parse_tour_order(text: &str, n: usize) -> Result<Vec<usize>, TspError> {
    let order = text
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| TspError::Parse(format!("tour index '{t}': {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    check_permutation(&order, n)?;
    Ok(order)
}
