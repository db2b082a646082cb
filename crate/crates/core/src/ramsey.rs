//! Monochromatic subgraph detection and exact small bipartite Ramsey
//! numbers by symmetry-reduced exhaustive search.
//!
//! The copy search walks the target's bandwidth labelling, so after the
//! first vertex every placement can usually be pruned to the common
//! neighbourhood of already-placed neighbours. The Ramsey search assigns
//! host pairs in lexicographic order with two cuts: a branch dies as soon
//! as the newly coloured pair completes a monochromatic copy, and row
//! prefixes are kept in lexicographically non-decreasing order (any
//! avoiding colouring can be row-sorted, so this loses nothing).

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bits::{iter_bits, BipGraph};
use crate::colouring::HostColouring;
use crate::error::{Error, Result};
use crate::graphs::TargetGraph;

/// Default exhaustive-search ceilings per colour count.
pub fn default_n_max(colours: usize) -> usize {
    match colours {
        1 => 8,
        2 => 6,
        _ => 4,
    }
}

/// A host vertex: left index or right index (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HostVertex {
    Left(usize),
    Right(usize),
}

impl HostVertex {
    pub fn render(&self) -> String {
        match self {
            HostVertex::Left(u) => format!("L{}", u + 1),
            HostVertex::Right(v) => format!("R{}", v + 1),
        }
    }
}

/// An embedding of a target into one colour class of a host colouring.
#[derive(Clone, Debug)]
pub struct EmbeddingWitness {
    /// map[v-1] is the host vertex carrying target vertex v.
    pub map: Vec<HostVertex>,
    pub colour: usize,
}

impl EmbeddingWitness {
    /// Independent re-validation: injectivity, bipartition respect and
    /// edge-colour membership.
    pub fn is_valid(&self, c: &HostColouring, h: &TargetGraph) -> bool {
        if self.map.len() != h.vertex_count() {
            return false;
        }
        let mut used_left = vec![false; c.left_size()];
        let mut used_right = vec![false; c.right_size()];
        for v in &self.map {
            match *v {
                HostVertex::Left(u) => {
                    if u >= c.left_size() || used_left[u] {
                        return false;
                    }
                    used_left[u] = true;
                }
                HostVertex::Right(w) => {
                    if w >= c.right_size() || used_right[w] {
                        return false;
                    }
                    used_right[w] = true;
                }
            }
        }
        h.edges().iter().all(|&(a, b)| {
            match (self.map[a - 1], self.map[b - 1]) {
                (HostVertex::Left(u), HostVertex::Right(v))
                | (HostVertex::Right(v), HostVertex::Left(u)) => {
                    c.colour_of(u, v) == self.colour
                }
                _ => false,
            }
        })
    }
}

/// Precomputed search data for a bipartite target.
struct TargetPrep {
    n: usize,
    /// 1 or 2 per vertex, from the canonical proper 2-colouring.
    class: Vec<u8>,
    /// neighbours with smaller label, per vertex (1-based outer index).
    preds: Vec<Vec<usize>>,
}

impl TargetPrep {
    fn new(h: &TargetGraph) -> Result<Self> {
        let chi = h
            .proper_two_colouring()
            .ok_or_else(|| Error::Structural("target is not bipartite".into()))?;
        let n = h.vertex_count();
        let mut preds = vec![Vec::new(); n + 1];
        for &(a, b) in h.edges() {
            preds[b].push(a);
        }
        let class = (1..=n).map(|v| chi.colour_of(v)).collect();
        Ok(TargetPrep { n, class, preds })
    }
}

/// Which host side carries target class 1.
#[derive(Clone, Copy)]
enum Orientation {
    Class1Left,
    Class1Right,
}

fn side_of(class: u8, o: Orientation) -> bool {
    // true = left
    match o {
        Orientation::Class1Left => class == 1,
        Orientation::Class1Right => class == 2,
    }
}

/// Backtracking state over one colour subgraph.
struct CopySearch<'a> {
    g: &'a BipGraph,
    prep: &'a TargetPrep,
    orientation: Orientation,
    /// placement[v] = Some(host index on v's side)
    placement: Vec<Option<usize>>,
    used_left: Vec<u64>,
    used_right: Vec<u64>,
}

impl<'a> CopySearch<'a> {
    fn new(g: &'a BipGraph, prep: &'a TargetPrep, orientation: Orientation) -> Self {
        CopySearch {
            g,
            prep,
            orientation,
            placement: vec![None; prep.n + 1],
            used_left: vec![0; g.col_mask_words()],
            used_right: vec![0; g.row_mask_words()],
        }
    }

    fn is_left(&self, v: usize) -> bool {
        side_of(self.prep.class[v - 1], self.orientation)
    }

    fn mark(&mut self, v: usize, host: usize, on: bool) {
        let words = if self.is_left(v) {
            &mut self.used_left
        } else {
            &mut self.used_right
        };
        if on {
            words[host / 64] |= 1 << (host % 64);
            self.placement[v] = Some(host);
        } else {
            words[host / 64] &= !(1 << (host % 64));
            self.placement[v] = None;
        }
    }

    /// Candidate host indices for vertex v: the common neighbourhood of its
    /// placed neighbours minus used vertices (whole free side when no
    /// neighbour is placed yet).
    fn candidates(&self, v: usize) -> Vec<usize> {
        let left = self.is_left(v);
        let (side_size, used, words) = if left {
            (self.g.left_size(), &self.used_left, self.g.col_mask_words())
        } else {
            (self.g.right_size(), &self.used_right, self.g.row_mask_words())
        };
        let mut mask = vec![u64::MAX; words];
        let spare = words * 64 - side_size;
        if spare > 0 {
            mask[words - 1] = u64::MAX >> spare;
        }
        for (w, u) in mask.iter_mut().zip(used) {
            *w &= !u;
        }
        for &p in &self.prep.preds[v] {
            if let Some(host) = self.placement[p] {
                let row = if left { self.g.col(host) } else { self.g.row(host) };
                for (w, r) in mask.iter_mut().zip(row) {
                    *w &= r;
                }
            }
        }
        iter_bits(&mask).collect()
    }

    fn extend(&mut self, order: &[usize], pos: usize) -> bool {
        if pos == order.len() {
            return true;
        }
        let v = order[pos];
        for host in self.candidates_checked(v) {
            self.mark(v, host, true);
            if self.extend(order, pos + 1) {
                return true;
            }
            self.mark(v, host, false);
        }
        false
    }

    /// Candidates filtered against all placed neighbours of v, not just
    /// predecessors (anchored searches can place a successor first).
    fn candidates_checked(&self, v: usize) -> Vec<usize> {
        let mut cands = self.candidates(v);
        let left = self.is_left(v);
        cands.retain(|&host| {
            // check edges to any placed neighbour with a larger label
            self.placed_neighbours_ok(v, host, left)
        });
        cands
    }

    fn placed_neighbours_ok(&self, v: usize, host: usize, left: bool) -> bool {
        for w in v + 1..=self.prep.n {
            if self.prep.preds[w].contains(&v) {
                if let Some(other) = self.placement[w] {
                    let ok = if left {
                        self.g.has_edge(host, other)
                    } else {
                        self.g.has_edge(other, host)
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn witness(&self, colour: usize) -> EmbeddingWitness {
        let map = (1..=self.prep.n)
            .map(|v| {
                let host = self.placement[v].expect("complete placement");
                if self.is_left(v) {
                    HostVertex::Left(host)
                } else {
                    HostVertex::Right(host)
                }
            })
            .collect();
        EmbeddingWitness { map, colour }
    }
}

/// Finds a copy of `h` inside colour class `s` of `c`, or `None` when no
/// copy exists.
pub fn find_monochromatic_copy(
    c: &HostColouring,
    h: &TargetGraph,
    s: usize,
) -> Result<Option<EmbeddingWitness>> {
    if s < 1 || s > c.colour_count() {
        return Err(Error::InvalidColour(format!(
            "colour {s} outside 1..={}",
            c.colour_count()
        )));
    }
    let prep = TargetPrep::new(h)?;
    let g = c.colour_subgraph(s)?;
    Ok(find_copy_in_graph(&g, &prep, s))
}

fn find_copy_in_graph(g: &BipGraph, prep: &TargetPrep, colour: usize) -> Option<EmbeddingWitness> {
    let order: Vec<usize> = (1..=prep.n).collect();
    for orientation in [Orientation::Class1Left, Orientation::Class1Right] {
        let mut search = CopySearch::new(g, prep, orientation);
        if search.extend(&order, 0) {
            return Some(search.witness(colour));
        }
    }
    None
}

/// Finds a copy of the target that uses the specific host pair (u, v).
/// Sound as a search cut: a freshly coloured pair can only create copies
/// through itself.
fn find_copy_through(g: &BipGraph, prep: &TargetPrep, u: usize, v: usize) -> bool {
    if !g.has_edge(u, v) {
        return false;
    }
    for orientation in [Orientation::Class1Left, Orientation::Class1Right] {
        for a in 1..=prep.n {
            for &b in &prep.preds[a] {
                // try b -> (u or v), a -> the other, matching sides
                for (first, second) in [(b, a), (a, b)] {
                    let mut search = CopySearch::new(g, prep, orientation);
                    if !search.is_left(first) || search.is_left(second) {
                        continue;
                    }
                    search.mark(first, u, true);
                    if !search.placed_neighbours_ok(second, v, false) {
                        continue;
                    }
                    search.mark(second, v, true);
                    let order: Vec<usize> =
                        (1..=prep.n).filter(|&w| w != first && w != second).collect();
                    if search.extend(&order, 0) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// True iff no colour class of `c` contains a copy of `h`.
pub fn avoids_all_colours(c: &HostColouring, h: &TargetGraph) -> Result<bool> {
    for s in 1..=c.colour_count() {
        if find_monochromatic_copy(c, h, s)?.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of the exact Ramsey search.
#[derive(Clone, Debug)]
pub enum RamseyOutcome {
    /// The least N such that no colouring of K_{N,N} avoids all targets,
    /// with an explicit avoiding colouring for N-1 (`None` when N = 1).
    Exact {
        n: usize,
        certificate: Option<HostColouring>,
    },
    /// Every N up to the ceiling admits an avoiding colouring.
    Unresolved {
        n_max: usize,
        best_avoiding: Option<HostColouring>,
    },
    /// The node budget ran out before N could be decided.
    BudgetExhausted {
        at_n: usize,
        best_avoiding: Option<HostColouring>,
    },
}

/// Exhaustive DFS state for one root of the avoiding-colouring search.
struct AvoidSearch<'a> {
    n: usize,
    preps: &'a [TargetPrep],
    table: Vec<u8>,
    graphs: Vec<BipGraph>,
    nodes: u64,
    budget: u64,
}

enum RootResult {
    Found(Vec<u8>),
    Exhausted,
    BudgetHit,
}

impl<'a> AvoidSearch<'a> {
    fn new(n: usize, preps: &'a [TargetPrep], budget: u64) -> Self {
        AvoidSearch {
            n,
            preps,
            table: vec![0; n * n],
            graphs: (0..preps.len()).map(|_| BipGraph::new(n, n)).collect(),
            nodes: 0,
            budget,
        }
    }

    /// Assigns colour s (1-based) to pair index k; returns false when the
    /// new pair completes a monochromatic copy.
    fn assign(&mut self, k: usize, s: usize) -> bool {
        let (u, v) = (k / self.n, k % self.n);
        self.table[k] = s as u8;
        self.graphs[s - 1].add_edge(u, v);
        !find_copy_through(&self.graphs[s - 1], &self.preps[s - 1], u, v)
    }

    fn unassign(&mut self, k: usize) {
        let (u, v) = (k / self.n, k % self.n);
        let s = self.table[k] as usize;
        self.table[k] = 0;
        self.graphs[s - 1].remove_edge(u, v);
    }

    /// Rows must be lexicographically non-decreasing once complete.
    fn row_order_ok(&self, k: usize) -> bool {
        let (u, v) = (k / self.n, k % self.n);
        if v != self.n - 1 || u == 0 {
            return true;
        }
        let prev = &self.table[(u - 1) * self.n..u * self.n];
        let cur = &self.table[u * self.n..(u + 1) * self.n];
        prev <= cur
    }

    fn dfs(&mut self, k: usize) -> RootResult {
        if k == self.n * self.n {
            return RootResult::Found(self.table.clone());
        }
        for s in 1..=self.preps.len() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return RootResult::BudgetHit;
            }
            let alive = self.assign(k, s) && self.row_order_ok(k);
            if alive {
                match self.dfs(k + 1) {
                    RootResult::Exhausted => {}
                    other => return other,
                }
            }
            self.unassign(k);
        }
        RootResult::Exhausted
    }
}

/// Searches for a colouring of K_{N,N} in which no colour class contains
/// its target. Roots are the assignments of the first row; they can run in
/// parallel, and the first success in root order wins, so the result does
/// not depend on the worker count.
fn exists_avoiding(
    n: usize,
    preps: &[TargetPrep],
    budget: u64,
    workers: usize,
) -> Result<RootResult> {
    if n == 0 {
        return Ok(RootResult::Found(Vec::new()));
    }
    let r = preps.len();
    let root_count = (r as u64).checked_pow(n as u32).ok_or_else(|| {
        Error::SizeLimit(format!("too many roots for N = {n}, r = {r}"))
    })? as usize;

    let run_root = |root: usize| -> RootResult {
        let mut search = AvoidSearch::new(n, preps, budget);
        // materialize the first row with the same cuts as the DFS
        let mut digits = Vec::with_capacity(n);
        let mut rest = root;
        for _ in 0..n {
            digits.push(rest % r + 1);
            rest /= r;
        }
        digits.reverse();
        for (k, &s) in digits.iter().enumerate() {
            search.nodes += 1;
            if !search.assign(k, s) {
                return RootResult::Exhausted;
            }
        }
        search.dfs(n)
    };

    let merged = if workers <= 1 {
        let mut outcome = RootResult::Exhausted;
        for root in 0..root_count {
            match run_root(root) {
                RootResult::Exhausted => {}
                other => {
                    outcome = other;
                    break;
                }
            }
        }
        outcome
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Parameter(format!("worker pool: {e}")))?;
        pool.install(|| {
            (0..root_count)
                .into_par_iter()
                .map(run_root)
                .find_first(|res| !matches!(res, RootResult::Exhausted))
                .unwrap_or(RootResult::Exhausted)
        })
    };
    Ok(merged)
}

/// The least N <= n_max such that every r-colouring of K_{N,N} contains a
/// monochromatic copy of its target, established by exhaustive search with
/// pruning, plus an explicit avoiding colouring one level below.
pub fn bipartite_ramsey_exact(
    targets: &[TargetGraph],
    n_max: Option<usize>,
    budget: Option<u64>,
    workers: usize,
) -> Result<RamseyOutcome> {
    if targets.is_empty() || targets.len() > 3 {
        return Err(Error::Parameter(format!(
            "need 1..=3 targets, got {}",
            targets.len()
        )));
    }
    let n_max = n_max.unwrap_or_else(|| default_n_max(targets.len()));
    if n_max > 16 {
        return Err(Error::SizeLimit(format!("N_max = {n_max} exceeds 16")));
    }
    let budget = budget.unwrap_or(u64::MAX);
    let preps: Vec<TargetPrep> = targets
        .iter()
        .map(TargetPrep::new)
        .collect::<Result<_>>()?;
    let r = targets.len();

    let mut best_avoiding: Option<HostColouring> = None;
    for n in 1..=n_max {
        match exists_avoiding(n, &preps, budget, workers)? {
            RootResult::Found(table) => {
                best_avoiding = Some(HostColouring::from_table(n, n, r, table)?);
            }
            RootResult::Exhausted => {
                return Ok(RamseyOutcome::Exact {
                    n,
                    certificate: best_avoiding,
                });
            }
            RootResult::BudgetHit => {
                return Ok(RamseyOutcome::BudgetExhausted {
                    at_n: n,
                    best_avoiding,
                });
            }
        }
    }
    Ok(RamseyOutcome::Unresolved {
        n_max,
        best_avoiding,
    })
}

/// Checks the three-part extremal colouring against `h`: builds the split
/// for |V(h)| = n and confirms no colour class contains a copy, which
/// certifies the lower bound 3n/2 - 2 for three colours.
pub fn verify_lower_bound_construction(h: &TargetGraph, n: usize) -> Result<bool> {
    if h.vertex_count() != n {
        return Err(Error::Parameter(format!(
            "target has {} vertices, expected {n}",
            h.vertex_count()
        )));
    }
    if n % 2 != 0 {
        return Err(Error::Structural("target size must be even".into()));
    }
    if !h.has_bipartition_with_class_sizes(n / 2, n / 2) {
        return Err(Error::Structural(
            "target has no proper 2-colouring with equal classes".into(),
        ));
    }
    if n == 2 {
        // N = 3(n/2 - 1) = 0: empty host avoids vacuously
        return Ok(true);
    }
    let c = crate::colouring::extremal_three_split(n)?;
    avoids_all_colours(&c, h)
}

/// Renders a lower-bound certificate: header plus the avoiding colouring.
pub fn format_lower_bound_certificate(c: &HostColouring) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "certificate ramsey-lower {} {}",
        c.left_size(),
        c.colour_count()
    );
    out.push_str(&c.to_text());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colouring::{extremal_three_split, random_colouring, HostColouring};
    use crate::graphs::{make_even_cycle, make_grid, make_path};

    #[test]
    fn copy_detection_on_complete_host() {
        let c = HostColouring::constant(2, 2, 2, 1).unwrap();
        let c4 = make_even_cycle(4).unwrap();
        let w = find_monochromatic_copy(&c, &c4, 1).unwrap().expect("copy");
        assert!(w.is_valid(&c, &c4));
        assert!(find_monochromatic_copy(&c, &c4, 2).unwrap().is_none());
    }

    #[test]
    fn extremal_split_has_no_mono_cycle() {
        let c = extremal_three_split(4).unwrap();
        let c4 = make_even_cycle(4).unwrap();
        for s in 1..=3 {
            assert!(find_monochromatic_copy(&c, &c4, s).unwrap().is_none());
        }
    }

    #[test]
    fn non_bipartite_target_rejected() {
        let triangle = TargetGraph::new(3, vec![(1, 2), (2, 3), (1, 3)]).unwrap();
        let c = HostColouring::constant(2, 2, 1, 1).unwrap();
        assert!(matches!(
            find_monochromatic_copy(&c, &triangle, 1),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn avoids_on_extremal_split() {
        let c = extremal_three_split(6).unwrap();
        assert!(avoids_all_colours(&c, &make_path(6).unwrap()).unwrap());
        assert!(avoids_all_colours(&c, &make_even_cycle(6).unwrap()).unwrap());
        let all1 = HostColouring::constant(3, 3, 1, 1).unwrap();
        assert!(!avoids_all_colours(&all1, &make_path(4).unwrap()).unwrap());
    }

    #[test]
    fn witnesses_revalidate_on_random_hosts() {
        let p4 = make_path(4).unwrap();
        for seed in 0..20 {
            let c = random_colouring(4, 2, seed).unwrap();
            for s in 1..=2 {
                if let Some(w) = find_monochromatic_copy(&c, &p4, s).unwrap() {
                    assert!(w.is_valid(&c, &p4), "seed {seed} colour {s}");
                }
            }
        }
    }

    #[test]
    fn ramsey_path_values() {
        let p2 = make_path(2).unwrap();
        let out = bipartite_ramsey_exact(&[p2.clone(), p2], None, None, 1).unwrap();
        match out {
            RamseyOutcome::Exact { n, certificate } => {
                assert_eq!(n, 1);
                assert!(certificate.is_none());
            }
            other => panic!("expected exact, got {other:?}"),
        }

        let p3 = make_path(3).unwrap();
        let out = bipartite_ramsey_exact(&[p3.clone(), p3], Some(4), None, 1).unwrap();
        match out {
            RamseyOutcome::Exact { n, certificate } => {
                assert_eq!(n, 3);
                let cert = certificate.expect("avoiding colouring at N=2");
                assert_eq!(cert.left_size(), 2);
                assert!(avoids_all_colours(&cert, &make_path(3).unwrap()).unwrap());
            }
            other => panic!("expected exact, got {other:?}"),
        }
    }

    #[test]
    fn pruned_search_agrees_with_full_enumeration() {
        // r = 2, N <= 3: compare against all 2^(N^2) colourings
        let targets = [make_path(3).unwrap(), make_path(4).unwrap()];
        for n in 1..=3usize {
            let mut brute_exists = false;
            let cells = n * n;
            'outer: for code in 0..(1u32 << cells) {
                let table: Vec<u8> = (0..cells).map(|i| (code >> i & 1) as u8 + 1).collect();
                let c = HostColouring::from_table(n, n, 2, table).unwrap();
                let mut avoiding = true;
                for (s, t) in targets.iter().enumerate() {
                    if find_monochromatic_copy(&c, t, s + 1).unwrap().is_some() {
                        avoiding = false;
                        break;
                    }
                }
                if avoiding {
                    brute_exists = true;
                    break 'outer;
                }
            }
            let preps: Vec<TargetPrep> =
                targets.iter().map(|t| TargetPrep::new(t).unwrap()).collect();
            for workers in [1, 3] {
                let pruned = exists_avoiding(n, &preps, u64::MAX, workers).unwrap();
                assert_eq!(
                    matches!(pruned, RootResult::Found(_)),
                    brute_exists,
                    "N = {n}, workers = {workers}"
                );
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_answers() {
        let p4 = make_path(4).unwrap();
        let seq = bipartite_ramsey_exact(&[p4.clone(), p4.clone()], Some(4), None, 1).unwrap();
        let par = bipartite_ramsey_exact(&[p4.clone(), p4], Some(4), None, 4).unwrap();
        match (seq, par) {
            (
                RamseyOutcome::Exact { n: n1, certificate: c1 },
                RamseyOutcome::Exact { n: n2, certificate: c2 },
            ) => {
                assert_eq!(n1, n2);
                assert_eq!(
                    c1.map(|c| c.to_text()),
                    c2.map(|c| c.to_text()),
                    "certificates must be identical"
                );
            }
            other => panic!("expected exact outcomes, got {other:?}"),
        }
    }

    #[test]
    fn monotone_no_avoiding_above_threshold() {
        // spot instance: once no avoiding colouring exists, none exists
        // one level up either
        let p2 = make_path(2).unwrap();
        let preps = [TargetPrep::new(&p2).unwrap(), TargetPrep::new(&p2).unwrap()];
        for n in 1..=2 {
            assert!(matches!(
                exists_avoiding(n, &preps, u64::MAX, 1).unwrap(),
                RootResult::Exhausted
            ));
        }
    }

    #[test]
    fn lower_bound_constructions() {
        assert!(verify_lower_bound_construction(&make_even_cycle(4).unwrap(), 4).unwrap());
        assert!(verify_lower_bound_construction(&make_path(2).unwrap(), 2).unwrap());
        assert!(verify_lower_bound_construction(&make_grid(2, 2).unwrap(), 4).unwrap());
        let star = TargetGraph::new(4, vec![(1, 2), (1, 3), (1, 4)]).unwrap();
        assert!(matches!(
            verify_lower_bound_construction(&star, 4),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn budget_exhaustion_reports() {
        let p4 = make_path(4).unwrap();
        let out = bipartite_ramsey_exact(&[p4.clone(), p4], Some(4), Some(3), 1).unwrap();
        assert!(matches!(out, RamseyOutcome::BudgetExhausted { .. }));
    }

    #[test]
    fn certificate_format() {
        let c = HostColouring::constant(2, 2, 2, 1).unwrap();
        let text = format_lower_bound_certificate(&c);
        assert!(text.starts_with("certificate ramsey-lower 2 2\nbipcol 2 2 2\n"));
    }
}
