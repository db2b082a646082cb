//! Target-graph construction, bandwidth labellings and balancedness checks.
//!
//! A [`TargetGraph`] carries its vertices as labels `1..=n`; the label order
//! is the labelling that witnesses the declared bandwidth, so generators are
//! responsible for emitting vertices in a good order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::rat::Rat;

/// Hard cap for the factorial bandwidth oracle.
pub const EXACT_BANDWIDTH_CAP: usize = 10;

/// A labelled graph whose identity labelling `1..=n` witnesses its bandwidth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetGraph {
    n: usize,
    /// Unordered edges (i, j) with i < j, sorted lexicographically.
    edges: Vec<(usize, usize)>,
}

impl TargetGraph {
    /// Builds a graph from `n` and an edge list; rejects loops and
    /// out-of-range endpoints, deduplicates and sorts edges.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Structural(format!("self-loop at {a}")));
            }
            if a < 1 || a > n || b < 1 || b > n {
                return Err(Error::Structural(format!("edge ({a},{b}) outside 1..={n}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(TargetGraph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }

    /// Adjacency lists indexed by label (entry 0 unused), each sorted.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency()[1..].iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Proper 2-colouring by BFS, colour 1 on the smallest vertex of each
    /// component. `None` when some component is odd-cyclic.
    pub fn proper_two_colouring(&self) -> Option<VertexTwoColouring> {
        let adj = self.adjacency();
        let mut colour = vec![0u8; self.n + 1];
        for start in 1..=self.n {
            if colour[start] != 0 {
                continue;
            }
            colour[start] = 1;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if colour[w] == 0 {
                        colour[w] = 3 - colour[v];
                        queue.push_back(w);
                    } else if colour[w] == colour[v] {
                        return None;
                    }
                }
            }
        }
        Some(VertexTwoColouring {
            assignment: colour[1..].to_vec(),
        })
    }

    /// Whether some proper 2-colouring splits the vertices into two classes
    /// of the given sizes (component classes may be swapped independently).
    pub fn has_bipartition_with_class_sizes(&self, size1: usize, size2: usize) -> bool {
        if size1 + size2 != self.n {
            return false;
        }
        let chi = match self.proper_two_colouring() {
            Some(c) => c,
            None => return false,
        };
        // Per-component (class1, class2) counts, then a subset-sum over swaps.
        let adj = self.adjacency();
        let mut seen = vec![false; self.n + 1];
        let mut comps = Vec::new();
        for start in 1..=self.n {
            if seen[start] {
                continue;
            }
            let mut c1 = 0usize;
            let mut c2 = 0usize;
            let mut queue = std::collections::VecDeque::from([start]);
            seen[start] = true;
            while let Some(v) = queue.pop_front() {
                if chi.colour_of(v) == 1 {
                    c1 += 1;
                } else {
                    c2 += 1;
                }
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comps.push((c1, c2));
        }
        let mut reachable = vec![false; self.n + 1];
        reachable[0] = true;
        for (c1, c2) in comps {
            let mut next = vec![false; self.n + 1];
            for (s, &ok) in reachable.iter().enumerate() {
                if ok {
                    if s + c1 <= self.n {
                        next[s + c1] = true;
                    }
                    if s + c2 <= self.n {
                        next[s + c2] = true;
                    }
                }
            }
            reachable = next;
        }
        reachable[size1]
    }

    /// Canonical edge list: the lexicographically smallest relabelled edge
    /// set over all permutations. Exhaustive; intended for tiny graphs.
    pub fn canonical_form(&self) -> Result<Vec<(usize, usize)>> {
        if self.n > 8 {
            return Err(Error::SizeLimit(format!(
                "canonical form is exhaustive, n = {} > 8",
                self.n
            )));
        }
        let mut best: Option<Vec<(usize, usize)>> = None;
        for perm in (1..=self.n).permutations(self.n) {
            // perm[v-1] is the new label of v
            let mut relabelled: Vec<(usize, usize)> = self
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (perm[a - 1], perm[b - 1]);
                    (x.min(y), x.max(y))
                })
                .collect();
            relabelled.sort_unstable();
            if best.as_ref().is_none_or(|b| relabelled < *b) {
                best = Some(relabelled);
            }
        }
        Ok(best.unwrap_or_default())
    }

    /// Serializes to the target graph text format:
    /// `graph n` then one `i j` line per edge in lexicographic order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {}", self.n);
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    /// Parses the target graph text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty graph file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("graph") {
            return Err(Error::Format("expected 'graph n' header".into()));
        }
        let n: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Format("bad vertex count".into()))?;
        if parts.next().is_some() {
            return Err(Error::Format("trailing tokens in header".into()));
        }
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let a: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad edge line {line:?}")))?;
            let b: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad edge line {line:?}")))?;
            if it.next().is_some() {
                return Err(Error::Format(format!("trailing tokens in {line:?}")));
            }
            edges.push((a, b));
        }
        TargetGraph::new(n, edges)
    }
}

/// A total assignment of colours {1, 2} to the vertices of a target graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexTwoColouring {
    /// assignment[v-1] is the colour of vertex v.
    assignment: Vec<u8>,
}

impl VertexTwoColouring {
    pub fn new(assignment: Vec<u8>) -> Result<Self> {
        if assignment.iter().any(|&c| c != 1 && c != 2) {
            return Err(Error::Parameter("vertex colours must be 1 or 2".into()));
        }
        Ok(VertexTwoColouring { assignment })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn colour_of(&self, v: usize) -> u8 {
        self.assignment[v - 1]
    }

    /// (|class 1|, |class 2|).
    pub fn class_sizes(&self) -> (usize, usize) {
        let c1 = self.assignment.iter().filter(|&&c| c == 1).count();
        (c1, self.assignment.len() - c1)
    }

    /// True iff every edge of `h` joins the two classes.
    pub fn is_proper_on(&self, h: &TargetGraph) -> bool {
        self.assignment.len() == h.vertex_count()
            && h.edges()
                .iter()
                .all(|&(a, b)| self.colour_of(a) != self.colour_of(b))
    }
}

/// Path on `n >= 2` vertices; edges (i, i+1), bandwidth 1.
pub fn make_path(n: usize) -> Result<TargetGraph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("path needs n >= 2, got {n}")));
    }
    TargetGraph::new(n, (1..n).map(|i| (i, i + 1)))
}

/// Even cycle with a zig-zag labelling of bandwidth 2: two interleaved
/// strands (i, i+2) closed by (1,2) and (n-1, n).
pub fn make_even_cycle(n: usize) -> Result<TargetGraph> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidSize(format!(
            "cycle needs even n >= 4, got {n}"
        )));
    }
    let mut edges = vec![(1, 2), (n - 1, n)];
    edges.extend((1..=n - 2).map(|i| (i, i + 2)));
    TargetGraph::new(n, edges)
}

/// Grid on [a] x [b]: equal in one coordinate, consecutive in the other.
/// Row-major with the shorter dimension along the fast axis, so the
/// labelling bandwidth is min(a, b) (1 when the grid is a path).
pub fn make_grid(a: usize, b: usize) -> Result<TargetGraph> {
    if a < 1 || b < 1 {
        return Err(Error::InvalidSize(format!("grid needs a,b >= 1, got {a}x{b}")));
    }
    let (short, long) = (a.min(b), a.max(b));
    let idx = |row: usize, col: usize| (row - 1) * short + col; // row in [long], col in [short]
    let mut edges = Vec::new();
    for row in 1..=long {
        for col in 1..=short {
            if col < short {
                edges.push((idx(row, col), idx(row, col + 1)));
            }
            if row < long {
                edges.push((idx(row, col), idx(row + 1, col)));
            }
        }
    }
    TargetGraph::new(a * b, edges)
}

/// Max |i - j| over edges of the identity labelling; 0 for edgeless graphs.
pub fn bandwidth_of_labelling(h: &TargetGraph) -> usize {
    h.edges().iter().map(|&(a, b)| b - a).max().unwrap_or(0)
}

/// Minimum bandwidth over all relabellings, by exhaustive permutation
/// search. Capped at n = 10.
pub fn exact_bandwidth(h: &TargetGraph) -> Result<usize> {
    let n = h.vertex_count();
    if n > EXACT_BANDWIDTH_CAP {
        return Err(Error::SizeLimit(format!(
            "exact bandwidth is exhaustive, n = {n} > {EXACT_BANDWIDTH_CAP}"
        )));
    }
    if h.edges().is_empty() {
        return Ok(0);
    }
    let mut best = n - 1;
    for perm in (1..=n).permutations(n) {
        let mut width = 0usize;
        for &(a, b) in h.edges() {
            let d = perm[a - 1].abs_diff(perm[b - 1]);
            if d > width {
                width = d;
            }
            if d >= best {
                break;
            }
        }
        if width < best {
            best = width;
        }
        if best == 1 {
            break;
        }
    }
    Ok(best)
}

/// Outcome of a balancedness check, listing every failed clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceReport {
    pub proper: bool,
    pub bandwidth_ok: bool,
    pub degree_ok: bool,
    pub class_sizes_ok: bool,
}

impl BalanceReport {
    pub fn holds(&self) -> bool {
        self.proper && self.bandwidth_ok && self.degree_ok && self.class_sizes_ok
    }

    pub fn failed_clauses(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.proper {
            out.push("colouring-not-proper");
        }
        if !self.bandwidth_ok {
            out.push("bandwidth-exceeds-beta-n");
        }
        if !self.degree_ok {
            out.push("max-degree-exceeds-delta");
        }
        if !self.class_sizes_ok {
            out.push("class-size-imbalance");
        }
        out
    }
}

/// Checks whether `(h, chi)` is a balanced graph for the given bandwidth
/// fraction `beta` and degree bound `delta`:
/// chi proper, labelling bandwidth <= beta*n, max degree <= delta, and
/// ||chi^-1(1)| - |chi^-1(2)|| <= beta * |chi^-1(2)|.
///
/// An empty class 2 makes the last clause fail unless class 1 is empty too.
pub fn is_balanced_beta_graph(
    h: &TargetGraph,
    chi: &VertexTwoColouring,
    beta: &Rat,
    delta: usize,
) -> Result<(bool, BalanceReport)> {
    if chi.len() != h.vertex_count() {
        return Err(Error::Parameter(format!(
            "colouring covers {} vertices, graph has {}",
            chi.len(),
            h.vertex_count()
        )));
    }
    if *beta <= crate::rat::zero() {
        return Err(Error::Parameter("beta must be positive".into()));
    }
    let n = h.vertex_count();
    let (c1, c2) = chi.class_sizes();
    let class_sizes_ok = if c2 == 0 {
        c1 == 0
    } else {
        crate::rat::rat_int(c1.abs_diff(c2)) <= beta * crate::rat::rat_int(c2)
    };
    let report = BalanceReport {
        proper: chi.is_proper_on(h),
        bandwidth_ok: crate::rat::rat_int(bandwidth_of_labelling(h))
            <= beta * crate::rat::rat_int(n),
        degree_ok: h.max_degree() <= delta,
        class_sizes_ok,
    };
    Ok((report.holds(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn path_generators() {
        assert_eq!(make_path(2).unwrap().edges(), &[(1, 2)]);
        let p4 = make_path(4).unwrap();
        assert_eq!(p4.edges(), &[(1, 2), (2, 3), (3, 4)]);
        assert_eq!(bandwidth_of_labelling(&p4), 1);
        assert!(matches!(make_path(1), Err(Error::InvalidSize(_))));
        // n=5: labelling already optimal against the exhaustive oracle
        let p5 = make_path(5).unwrap();
        assert_eq!(p5.edges().len(), 4);
        assert_eq!(exact_bandwidth(&p5).unwrap(), 1);
    }

    #[test]
    fn cycle_generators() {
        let c4 = make_even_cycle(4).unwrap();
        assert_eq!(bandwidth_of_labelling(&c4), 2);
        assert_eq!(exact_bandwidth(&c4).unwrap(), 2);
        let c6 = make_even_cycle(6).unwrap();
        assert_eq!(c6.edges().len(), 6);
        let adj = c6.adjacency();
        assert!(adj[1..].iter().all(|l| l.len() == 2));
        assert!(matches!(make_even_cycle(3), Err(Error::InvalidSize(_))));
        assert!(matches!(make_even_cycle(2), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn cycle_is_single_cycle() {
        // 2-regular and connected => a single n-cycle
        for n in [4, 6, 8, 10] {
            let c = make_even_cycle(n).unwrap();
            let adj = c.adjacency();
            let mut prev = 1usize;
            let mut cur = adj[1][0];
            let mut steps = 1;
            while cur != 1 {
                let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
                prev = cur;
                cur = next;
                steps += 1;
            }
            assert_eq!(steps, n);
        }
    }

    #[test]
    fn grid_generators() {
        let g22 = make_grid(2, 2).unwrap();
        let c4 = make_even_cycle(4).unwrap();
        assert_eq!(g22.canonical_form().unwrap(), c4.canonical_form().unwrap());

        let g23 = make_grid(2, 3).unwrap();
        assert_eq!(g23.edges().len(), 7);
        assert_eq!(bandwidth_of_labelling(&g23), 2);

        let g33 = make_grid(3, 3).unwrap();
        assert_eq!(g33.edges().len(), 12);

        assert!(matches!(make_grid(0, 3), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn grid_orientation_isomorphic() {
        for (a, b) in [(1, 2), (1, 3), (2, 3), (3, 3), (2, 2)] {
            let g1 = make_grid(a, b).unwrap();
            let g2 = make_grid(b, a).unwrap();
            assert_eq!(g1.canonical_form().unwrap(), g2.canonical_form().unwrap());
        }
    }

    #[test]
    fn bandwidth_edge_cases() {
        let edgeless = TargetGraph::new(5, Vec::new()).unwrap();
        assert_eq!(bandwidth_of_labelling(&edgeless), 0);
        assert_eq!(exact_bandwidth(&edgeless).unwrap(), 0);

        let star = TargetGraph::new(5, vec![(1, 2), (1, 3), (1, 4), (1, 5)]).unwrap();
        assert_eq!(exact_bandwidth(&star).unwrap(), 2);

        let p6 = make_path(6).unwrap();
        assert_eq!(exact_bandwidth(&p6).unwrap(), 1);

        let big = make_path(11).unwrap();
        assert!(matches!(exact_bandwidth(&big), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn generator_labellings_at_most_double_optimum() {
        // For every generator output here, the labelling is within the
        // declared budget and never better than the exhaustive optimum.
        let cases: Vec<TargetGraph> = vec![
            make_path(6).unwrap(),
            make_even_cycle(6).unwrap(),
            make_grid(2, 4).unwrap(),
            make_grid(3, 3).unwrap(),
        ];
        for h in cases {
            let lab = bandwidth_of_labelling(&h);
            let opt = exact_bandwidth(&h).unwrap();
            assert!(lab >= opt);
        }
    }

    #[test]
    fn generators_are_bipartite() {
        for h in [
            make_path(7).unwrap(),
            make_even_cycle(8).unwrap(),
            make_grid(3, 4).unwrap(),
        ] {
            let chi = h.proper_two_colouring().expect("bipartite");
            assert!(chi.is_proper_on(&h));
        }
    }

    #[test]
    fn balancedness() {
        let p4 = make_path(4).unwrap();
        let chi = p4.proper_two_colouring().unwrap();
        let (ok, _) = is_balanced_beta_graph(&p4, &chi, &rat(1, 2), 2).unwrap();
        assert!(ok);

        let c6 = make_even_cycle(6).unwrap();
        let chi6 = c6.proper_two_colouring().unwrap();
        let (ok, report) = is_balanced_beta_graph(&c6, &chi6, &rat(1, 10), 4).unwrap();
        assert!(!ok);
        assert_eq!(report.failed_clauses(), vec!["bandwidth-exceeds-beta-n"]);

        // degenerate denominator: all vertices coloured 1
        let two = TargetGraph::new(2, Vec::new()).unwrap();
        let const1 = VertexTwoColouring::new(vec![1, 1]).unwrap();
        let (ok, report) = is_balanced_beta_graph(&two, &const1, &rat(1, 2), 2).unwrap();
        assert!(!ok);
        assert!(!report.class_sizes_ok);

        // improper colouring is a failed clause, not an error
        let p2 = make_path(2).unwrap();
        let improper = VertexTwoColouring::new(vec![1, 1]).unwrap();
        let (ok, report) = is_balanced_beta_graph(&p2, &improper, &rat(1, 1), 2).unwrap();
        assert!(!ok);
        assert!(!report.proper);
    }

    #[test]
    fn text_round_trip() {
        let g = make_grid(2, 3).unwrap();
        let text = g.to_text();
        assert!(text.starts_with("graph 6\n"));
        let back = TargetGraph::from_text(&text).unwrap();
        assert_eq!(g, back);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_rejects_malformed() {
        assert!(TargetGraph::from_text("").is_err());
        assert!(TargetGraph::from_text("graph x\n").is_err());
        assert!(TargetGraph::from_text("graph 3\n1 1\n").is_err());
        assert!(TargetGraph::from_text("graph 3\n1 4\n").is_err());
        assert!(TargetGraph::from_text("nope 3\n").is_err());
    }

    #[test]
    fn balanced_bipartition_detection() {
        let p6 = make_path(6).unwrap();
        assert!(p6.has_bipartition_with_class_sizes(3, 3));
        let star = TargetGraph::new(4, vec![(1, 2), (1, 3), (1, 4)]).unwrap();
        assert!(!star.has_bipartition_with_class_sizes(2, 2));
        // two disjoint edges: components can split 2-2
        let m2 = TargetGraph::new(4, vec![(1, 2), (3, 4)]).unwrap();
        assert!(m2.has_bipartition_with_class_sizes(2, 2));
    }
}
