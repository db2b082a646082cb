//! Monochromatic connected matchings, even-distance tree labelling, and
//! cm-shape assembly on top of reduced coloured graphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::colouring::HostColouring;
use crate::error::{Error, Result};
use crate::rat::{rat, rat_int, Rat};
use crate::regularity::{build_reduced_graph, CertMode, HostClass, ReducedColouredGraph};

/// A matching whose edges all lie in one connected component of a colour
/// subgraph of the reduced graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectedMatching {
    pub colour: usize,
    /// All vertices of the component, ascending.
    pub component: Vec<usize>,
    /// Matching edges (class index pairs), ascending by smaller endpoint.
    pub edges: Vec<(usize, usize)>,
}

impl ConnectedMatching {
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    /// Re-validates against the reduced graph: monochromatic, endpoint
    /// disjoint and inside one component of the colour subgraph.
    pub fn is_valid(&self, r: &ReducedColouredGraph) -> bool {
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.edges {
            match r.edge(a, b) {
                Some(e) if e.colour == self.colour => {}
                _ => return false,
            }
            if !seen.insert(a) || !seen.insert(b) {
                return false;
            }
            if !self.component.contains(&a) || !self.component.contains(&b) {
                return false;
            }
        }
        if self.edges.is_empty() {
            return self.component.is_empty();
        }
        // single component: BFS inside the colour subgraph
        let adj = colour_adjacency(r, self.colour);
        let start = self.component[0];
        let mut visited = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in adj.get(&v).into_iter().flatten() {
                if visited.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        self.component.iter().all(|v| visited.contains(v))
    }
}

fn colour_adjacency(r: &ReducedColouredGraph, s: usize) -> BTreeMap<usize, Vec<usize>> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, j) in r.colour_edges(s) {
        adj.entry(i).or_default().push(j);
        adj.entry(j).or_default().push(i);
    }
    for l in adj.values_mut() {
        l.sort_unstable();
    }
    adj
}

/// Maximum matching by augmenting paths (Kuhn), deterministic: left
/// vertices and neighbours are scanned in ascending order.
fn max_matching_in(
    lefts: &[usize],
    adj: &BTreeMap<usize, Vec<usize>>,
) -> Vec<(usize, usize)> {
    let mut matched_right: BTreeMap<usize, usize> = BTreeMap::new();

    fn try_augment(
        u: usize,
        adj: &BTreeMap<usize, Vec<usize>>,
        visited: &mut BTreeSet<usize>,
        matched_right: &mut BTreeMap<usize, usize>,
    ) -> bool {
        for &w in adj.get(&u).into_iter().flatten() {
            if visited.insert(w) {
                let free = match matched_right.get(&w) {
                    None => true,
                    Some(&owner) => try_augment(owner, adj, visited, matched_right),
                };
                if free {
                    matched_right.insert(w, u);
                    return true;
                }
            }
        }
        false
    }

    for &u in lefts {
        let mut visited = BTreeSet::new();
        try_augment(u, adj, &mut visited, &mut matched_right);
    }
    let mut edges: Vec<(usize, usize)> = matched_right.into_iter().map(|(w, u)| (u, w)).collect();
    edges.sort_unstable();
    edges
}

/// For each component of the colour-s subgraph computes a maximum matching
/// and returns the component with the largest one (ties: the component
/// containing the smallest class index). An empty colour class yields an
/// empty matching.
pub fn find_connected_matching(r: &ReducedColouredGraph, s: usize) -> Result<ConnectedMatching> {
    if s < 1 || s > r.colour_count() {
        return Err(Error::InvalidColour(format!(
            "colour {s} outside 1..={}",
            r.colour_count()
        )));
    }
    let adj = colour_adjacency(r, s);
    let mut unseen: BTreeSet<usize> = adj.keys().copied().collect();
    let mut best: Option<ConnectedMatching> = None;
    while let Some(&start) = unseen.iter().next() {
        let mut component = vec![start];
        unseen.remove(&start);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in adj.get(&v).into_iter().flatten() {
                if unseen.remove(&w) {
                    component.push(w);
                    queue.push_back(w);
                }
            }
        }
        component.sort_unstable();
        let lefts: Vec<usize> = component
            .iter()
            .copied()
            .filter(|&i| r.classes()[i].side == crate::regularity::Side::Left)
            .collect();
        let edges = max_matching_in(&lefts, &adj);
        let candidate = ConnectedMatching {
            colour: s,
            component,
            edges,
        };
        let better = match &best {
            None => true,
            Some(b) => candidate.size() > b.size(),
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.unwrap_or(ConnectedMatching {
        colour: s,
        component: Vec::new(),
        edges: Vec::new(),
    }))
}

/// Maximum over the colours, ties broken towards the smaller colour index.
pub fn best_monochromatic_connected_matching(
    r: &ReducedColouredGraph,
) -> Result<ConnectedMatching> {
    let mut best: Option<ConnectedMatching> = None;
    for s in 1..=r.colour_count() {
        let m = find_connected_matching(r, s)?;
        if best.as_ref().is_none_or(|b| m.size() > b.size()) {
            best = Some(m);
        }
    }
    best.ok_or_else(|| Error::InvalidColour("no colours".into()))
}

/// Checkable hypotheses and conclusion of the connected-matching bound:
/// eps below 1/(3*10^5), host size k at least (3 + 3*10^5 eps) k', and a
/// found matching of size at least k'.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingBoundReport {
    pub eps_in_range: bool,
    pub size_hypothesis: bool,
    pub conclusion_holds: bool,
    /// Hypotheses met but conclusion failed; signals a toolkit bug.
    pub counterexample: bool,
}

impl MatchingBoundReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.eps_in_range && self.size_hypothesis
    }
}

pub fn check_matching_lemma_bound(
    k: usize,
    k_prime: usize,
    eps: &Rat,
    found: &ConnectedMatching,
) -> MatchingBoundReport {
    let eps_in_range = *eps < rat(1, 300_000);
    let size_hypothesis =
        rat_int(k) >= (rat_int(3) + rat_int(300_000) * eps) * rat_int(k_prime);
    let conclusion_holds = found.size() >= k_prime;
    MatchingBoundReport {
        eps_in_range,
        size_hypothesis,
        conclusion_holds,
        counterexample: eps_in_range && size_hypothesis && !conclusion_holds,
    }
}

/// Role of a tree vertex in a cm-shape: matched pair ends x_i / y_i, or an
/// unmatched connector z_j. Indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ShapeLabel {
    X(usize),
    Y(usize),
    Z(usize),
}

impl fmt::Display for ShapeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeLabel::X(i) => write!(f, "x{i}"),
            ShapeLabel::Y(i) => write!(f, "y{i}"),
            ShapeLabel::Z(i) => write!(f, "z{i}"),
        }
    }
}

impl FromStr for ShapeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, idx) = s.split_at(1.min(s.len()));
        let i: usize = idx
            .parse()
            .map_err(|_| Error::Format(format!("bad shape label {s:?}")))?;
        if i == 0 {
            return Err(Error::Format(format!("bad shape label {s:?}")));
        }
        match kind {
            "x" => Ok(ShapeLabel::X(i)),
            "y" => Ok(ShapeLabel::Y(i)),
            "z" => Ok(ShapeLabel::Z(i)),
            _ => Err(Error::Format(format!("bad shape label {s:?}"))),
        }
    }
}

/// Tree plus matching with labels attached: matched endpoints in colour
/// class 1 of the tree's proper 2-colouring become x_i, their partners
/// y_i, unmatched vertices z_j. All x_i are pairwise at even tree distance
/// because they share a colour class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvenLabelling {
    /// label per tree vertex
    pub labels: BTreeMap<usize, ShapeLabel>,
    /// proper 2-colouring of the tree (x side is colour 1)
    pub chi: BTreeMap<usize, u8>,
    pub ell: usize,
    pub ell_prime: usize,
}

/// Labels a tree with a matching. The tree is given by its edge list; the
/// matching must be a subset of the tree with disjoint endpoints.
pub fn even_distance_labelling(
    tree: &[(usize, usize)],
    matching: &[(usize, usize)],
) -> Result<EvenLabelling> {
    let mut vertices = BTreeSet::new();
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut tree_set = BTreeSet::new();
    for &(a, b) in tree {
        if a == b {
            return Err(Error::Structural(format!("tree loop at {a}")));
        }
        if !tree_set.insert((a.min(b), a.max(b))) {
            return Err(Error::Structural(format!("duplicate tree edge ({a},{b})")));
        }
        vertices.insert(a);
        vertices.insert(b);
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    if vertices.is_empty() {
        return Err(Error::Structural("tree has no edges".into()));
    }
    if tree.len() != vertices.len() - 1 {
        return Err(Error::Structural(format!(
            "{} edges on {} vertices is not a tree",
            tree.len(),
            vertices.len()
        )));
    }
    for l in adj.values_mut() {
        l.sort_unstable();
    }
    // connectivity + proper 2-colouring in one BFS from the smallest vertex
    let root = *vertices.iter().next().unwrap();
    let mut chi: BTreeMap<usize, u8> = BTreeMap::from([(root, 1)]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let cv = chi[&v];
        for &w in &adj[&v] {
            if !chi.contains_key(&w) {
                chi.insert(w, 3 - cv);
                queue.push_back(w);
            }
        }
    }
    if chi.len() != vertices.len() {
        return Err(Error::Structural("tree is disconnected".into()));
    }

    let mut matched: BTreeSet<usize> = BTreeSet::new();
    let mut medges: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in matching {
        if !tree_set.contains(&(a.min(b), a.max(b))) {
            return Err(Error::Structural(format!(
                "matching edge ({a},{b}) not in the tree"
            )));
        }
        if !matched.insert(a) || !matched.insert(b) {
            return Err(Error::Structural("matching endpoints overlap".into()));
        }
        medges.push((a.min(b), a.max(b)));
    }
    medges.sort_unstable();

    let mut labels = BTreeMap::new();
    for (i, &(a, b)) in medges.iter().enumerate() {
        let (xv, yv) = if chi[&a] == 1 { (a, b) } else { (b, a) };
        labels.insert(xv, ShapeLabel::X(i + 1));
        labels.insert(yv, ShapeLabel::Y(i + 1));
    }
    let mut z_index = 0;
    for &v in &vertices {
        if !matched.contains(&v) {
            z_index += 1;
            labels.insert(v, ShapeLabel::Z(z_index));
        }
    }
    Ok(EvenLabelling {
        labels,
        chi,
        ell: medges.len(),
        ell_prime: z_index,
    })
}

/// A cm-shape: a labelled tree with matching {x_i y_i}, realized by host
/// classes that are pairwise regular at density at least `d` in the chosen
/// colour on every tree edge.
#[derive(Clone, Debug)]
pub struct CmShape {
    pub eps: Rat,
    pub d: Rat,
    pub colour: usize,
    pub ell: usize,
    pub ell_prime: usize,
    /// Number of partition classes behind the shape.
    pub k: usize,
    /// Uniform class size at assembly time.
    pub class_size: usize,
    /// Whether ell >= k / (3 + 24*10^5 eps); informational at desk scale.
    pub ell_bound_ok: bool,
    tree: Vec<(ShapeLabel, ShapeLabel)>,
    classes: BTreeMap<ShapeLabel, HostClass>,
    class_index: BTreeMap<ShapeLabel, usize>,
    chi: BTreeMap<ShapeLabel, u8>,
}

impl CmShape {
    pub fn tree_edges(&self) -> &[(ShapeLabel, ShapeLabel)] {
        &self.tree
    }

    pub fn matching(&self) -> Vec<(ShapeLabel, ShapeLabel)> {
        (1..=self.ell)
            .map(|i| (ShapeLabel::X(i), ShapeLabel::Y(i)))
            .collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &ShapeLabel> {
        self.classes.keys()
    }

    pub fn class(&self, label: &ShapeLabel) -> Option<&HostClass> {
        self.classes.get(label)
    }

    pub fn class_index(&self, label: &ShapeLabel) -> Option<usize> {
        self.class_index.get(label).copied()
    }

    /// Tree colour class of a label (1 = the x side).
    pub fn chi_of(&self, label: &ShapeLabel) -> Option<u8> {
        self.chi.get(label).copied()
    }

    pub fn has_tree_edge(&self, a: &ShapeLabel, b: &ShapeLabel) -> bool {
        self.tree
            .iter()
            .any(|(p, q)| (p == a && q == b) || (p == b && q == a))
    }

    pub fn tree_adjacency(&self) -> BTreeMap<ShapeLabel, Vec<ShapeLabel>> {
        let mut adj: BTreeMap<ShapeLabel, Vec<ShapeLabel>> = BTreeMap::new();
        for &(a, b) in &self.tree {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        for l in adj.values_mut() {
            l.sort_unstable();
        }
        adj
    }

    /// Tree path between two labels (BFS, unique in a tree).
    pub fn tree_path(&self, from: &ShapeLabel, to: &ShapeLabel) -> Result<Vec<ShapeLabel>> {
        let adj = self.tree_adjacency();
        if !adj.contains_key(from) || !adj.contains_key(to) {
            return Err(Error::Structural(format!(
                "labels {from} or {to} not in the tree"
            )));
        }
        let mut prev: BTreeMap<ShapeLabel, ShapeLabel> = BTreeMap::new();
        let mut queue = VecDeque::from([*from]);
        let mut seen = BTreeSet::from([*from]);
        while let Some(v) = queue.pop_front() {
            if v == *to {
                break;
            }
            for &w in &adj[&v] {
                if seen.insert(w) {
                    prev.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        if !seen.contains(to) {
            return Err(Error::Structural(format!("no tree path {from} -> {to}")));
        }
        let mut path = vec![*to];
        let mut cur = *to;
        while cur != *from {
            cur = prev[&cur];
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }

    /// Same shape with matched classes replaced by trimmed vertex sets
    /// (after a super-regularity slice).
    pub fn with_trimmed_classes(&self, kept: &BTreeMap<ShapeLabel, Vec<usize>>) -> Result<CmShape> {
        let mut out = self.clone();
        for (label, vertices) in kept {
            let class = out
                .classes
                .get_mut(label)
                .ok_or_else(|| Error::Structural(format!("unknown label {label}")))?;
            if !vertices.iter().all(|v| class.vertices.contains(v)) {
                return Err(Error::Structural(format!(
                    "trimmed class {label} is not a subset of the original"
                )));
            }
            *class = HostClass::new(class.side, vertices.clone())?;
        }
        Ok(out)
    }

    /// Structural invariants: tree on the labelled vertices, matching
    /// inside it, even pairwise x distances, disjoint classes.
    pub fn validate(&self) -> Result<()> {
        let vertex_count = self.classes.len();
        if self.tree.len() + 1 != vertex_count {
            return Err(Error::Structural("label tree is not a tree".into()));
        }
        for (a, b) in self.matching() {
            if !self.has_tree_edge(&a, &b) {
                return Err(Error::Structural(format!(
                    "matching edge ({a},{b}) missing from the tree"
                )));
            }
        }
        for i in 1..=self.ell {
            for j in i + 1..=self.ell {
                let path = self.tree_path(&ShapeLabel::X(i), &ShapeLabel::X(j))?;
                if (path.len() - 1) % 2 != 0 {
                    return Err(Error::Structural(format!(
                        "x{i} and x{j} at odd tree distance"
                    )));
                }
            }
        }
        let mut seen: BTreeMap<(crate::regularity::Side, usize), ShapeLabel> = BTreeMap::new();
        for (label, class) in &self.classes {
            for &v in &class.vertices {
                if let Some(other) = seen.insert((class.side, v), *label) {
                    return Err(Error::Structural(format!(
                        "classes {other} and {label} overlap at vertex {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Shape dump: header, parameters, tree edges, matching edges, classes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "cmshape {} {} {} {}",
            self.ell, self.ell_prime, self.k, self.colour
        );
        let _ = writeln!(out, "param eps {}", crate::rat::fmt_rat(&self.eps));
        let _ = writeln!(out, "param d {}", crate::rat::fmt_rat(&self.d));
        let _ = writeln!(out, "param m {}", self.class_size);
        let mut tree = self.tree.clone();
        tree.sort_unstable();
        for (a, b) in tree {
            let _ = writeln!(out, "tedge {a} {b}");
        }
        for (a, b) in self.matching() {
            let _ = writeln!(out, "medge {a} {b}");
        }
        for (label, class) in &self.classes {
            let ids: Vec<String> = class.vertices.iter().map(|v| (v + 1).to_string()).collect();
            let _ = writeln!(out, "class {label} {} {}", class.side.letter(), ids.join(" "));
        }
        out
    }

    /// Parses a shape dump back.
    pub fn from_text(text: &str) -> Result<CmShape> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty shape file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("cmshape") {
            return Err(Error::Format("expected 'cmshape l lprime k colour'".into()));
        }
        let mut num = |what: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad {what} in shape header")))
        };
        let ell = num("l")?;
        let ell_prime = num("lprime")?;
        let k = num("k")?;
        let colour = num("colour")?;

        let mut eps = rat(1, 4);
        let mut d = rat(1, 3);
        let mut class_size = 0usize;
        let mut tree = Vec::new();
        let mut classes: BTreeMap<ShapeLabel, HostClass> = BTreeMap::new();
        for line in lines {
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("param") => match tok.next() {
                    Some("eps") => {
                        eps = crate::rat::parse_rat(
                            tok.next().ok_or_else(|| Error::Format("bad param eps".into()))?,
                        )?
                    }
                    Some("d") => {
                        d = crate::rat::parse_rat(
                            tok.next().ok_or_else(|| Error::Format("bad param d".into()))?,
                        )?
                    }
                    Some("m") => {
                        class_size = tok
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| Error::Format("bad param m".into()))?
                    }
                    other => {
                        return Err(Error::Format(format!("unknown param {other:?}")));
                    }
                },
                Some("tedge") => {
                    let a: ShapeLabel = tok
                        .next()
                        .ok_or_else(|| Error::Format("bad tedge".into()))?
                        .parse()?;
                    let b: ShapeLabel = tok
                        .next()
                        .ok_or_else(|| Error::Format("bad tedge".into()))?
                        .parse()?;
                    tree.push((a, b));
                }
                Some("medge") => {
                    // implied by the labels; validated below
                    let _ = (tok.next(), tok.next());
                }
                Some("class") => {
                    let label: ShapeLabel = tok
                        .next()
                        .ok_or_else(|| Error::Format("bad class line".into()))?
                        .parse()?;
                    let side = crate::regularity::Side::from_letter(
                        tok.next().ok_or_else(|| Error::Format("bad class side".into()))?,
                    )?;
                    let mut ids = Vec::new();
                    for t in tok {
                        let v: usize = t
                            .parse()
                            .map_err(|_| Error::Format(format!("bad vertex id {t:?}")))?;
                        if v == 0 {
                            return Err(Error::Format("vertex ids are 1-based".into()));
                        }
                        ids.push(v - 1);
                    }
                    classes.insert(label, HostClass::new(side, ids)?);
                }
                other => {
                    return Err(Error::Format(format!("unknown shape line {other:?}")));
                }
            }
        }
        let chi = recompute_chi(&tree, ell)?;
        let shape = CmShape {
            eps,
            d,
            colour,
            ell,
            ell_prime,
            k,
            class_size,
            ell_bound_ok: false,
            tree,
            class_index: BTreeMap::new(),
            classes,
            chi,
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// Proper 2-colouring of the label tree anchored at chi(x1) = 1 (or the
/// smallest label when there is no matching).
fn recompute_chi(
    tree: &[(ShapeLabel, ShapeLabel)],
    ell: usize,
) -> Result<BTreeMap<ShapeLabel, u8>> {
    let mut adj: BTreeMap<ShapeLabel, Vec<ShapeLabel>> = BTreeMap::new();
    for &(a, b) in tree {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let root = if ell >= 1 {
        ShapeLabel::X(1)
    } else {
        *adj.keys()
            .next()
            .ok_or_else(|| Error::Structural("empty tree".into()))?
    };
    if !adj.contains_key(&root) {
        return Err(Error::Structural("x1 missing from the tree".into()));
    }
    let mut chi = BTreeMap::from([(root, 1u8)]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let cv = chi[&v];
        for &w in &adj[&v] {
            if !chi.contains_key(&w) {
                chi.insert(w, 3 - cv);
                queue.push_back(w);
            }
        }
    }
    if chi.len() != adj.len() {
        return Err(Error::Structural("label tree is disconnected".into()));
    }
    Ok(chi)
}

/// Disjoint-set forest used to seed the spanning tree with the matching.
struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let root = self.find(self.0[x]);
            self.0[x] = root;
        }
        self.0[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            false
        } else {
            self.0[ra] = rb;
            true
        }
    }
}

/// Builds the reduced graph, finds the best monochromatic connected
/// matching, spans its component by a tree containing the matching, labels
/// it, and attaches the host classes.
pub fn assemble_cm_shape(
    c: &HostColouring,
    classes: &[HostClass],
    eps: &Rat,
    mode: &CertMode,
) -> Result<CmShape> {
    let reduced = build_reduced_graph(c, classes, eps, mode)?;
    assemble_cm_shape_from_reduced(&reduced, classes, eps)
}

/// Shape assembly once the reduced graph is at hand.
pub fn assemble_cm_shape_from_reduced(
    reduced: &ReducedColouredGraph,
    classes: &[HostClass],
    eps: &Rat,
) -> Result<CmShape> {
    let best = best_monochromatic_connected_matching(reduced)?;
    if best.edges.is_empty() {
        return Err(Error::NoShape(
            "no monochromatic connected matching in the reduced graph".into(),
        ));
    }
    let colour = best.colour;

    // spanning tree of the component containing every matching edge:
    // seed a forest with the matching, then BFS from the smallest matched
    // vertex adding edges that join distinct forest components
    let adj = colour_adjacency(reduced, colour);
    let mut dsu = Dsu::new(classes.len());
    let mut tree_edges: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in &best.edges {
        dsu.union(a, b);
        tree_edges.push((a, b));
    }
    let root = best.edges[0].0.min(best.edges[0].1);
    let mut visited: BTreeSet<usize> = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(&v).into_iter().flatten() {
            if dsu.union(v, w) {
                tree_edges.push((v.min(w), v.max(w)));
            }
            if visited.insert(w) {
                queue.push_back(w);
            }
        }
    }
    if tree_edges.len() != best.component.len() - 1 {
        return Err(Error::Structural(
            "spanning tree does not cover the matching component".into(),
        ));
    }

    let labelling = even_distance_labelling(&tree_edges, &best.edges)?;

    // majority guarantee on every tree edge: the chosen colour carries at
    // least a third of the pairs
    let m = reduced.class_size();
    for &(a, b) in &tree_edges {
        let edge = reduced
            .edge(a, b)
            .ok_or_else(|| Error::Structural("tree edge missing from reduced graph".into()))?;
        if rat_int(edge.counts[colour - 1]) < rat_int(m * m) / rat_int(reduced.colour_count()) {
            return Err(Error::Structural(format!(
                "tree edge ({a},{b}) misses the majority density guarantee"
            )));
        }
    }

    let label_of = |v: usize| labelling.labels[&v];
    let tree: Vec<(ShapeLabel, ShapeLabel)> = tree_edges
        .iter()
        .map(|&(a, b)| (label_of(a), label_of(b)))
        .collect();
    let mut shape_classes = BTreeMap::new();
    let mut class_index = BTreeMap::new();
    let mut chi = BTreeMap::new();
    for (&v, &label) in &labelling.labels {
        shape_classes.insert(label, classes[v].clone());
        class_index.insert(label, v);
        chi.insert(label, labelling.chi[&v]);
    }
    let k = classes.len();
    let ell = labelling.ell;
    let ell_bound_ok =
        rat_int(ell) * (rat_int(3) + rat_int(2_400_000) * eps) >= rat_int(k);
    let shape = CmShape {
        eps: eps.clone(),
        d: rat(1, 3),
        colour,
        ell,
        ell_prime: labelling.ell_prime,
        k,
        class_size: m,
        ell_bound_ok,
        tree,
        classes: shape_classes,
        class_index,
        chi,
    };
    shape.validate()?;
    Ok(shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colouring::{extremal_three_split, HostColouring};
    use crate::regularity::{equal_contiguous_classes, CertMode, Side};

    fn reduced_all_one(k: usize, m: usize) -> ReducedColouredGraph {
        let c = HostColouring::constant(k * m, k * m, 3, 1).unwrap();
        let classes = equal_contiguous_classes(k * m, k * m, k).unwrap();
        build_reduced_graph(&c, &classes, &rat(1, 4), &CertMode::Exhaustive).unwrap()
    }

    #[test]
    fn matching_on_complete_reduced_graph() {
        let r = reduced_all_one(3, 2);
        let m = find_connected_matching(&r, 1).unwrap();
        assert_eq!(m.size(), 3);
        assert!(m.is_valid(&r));
        assert_eq!(find_connected_matching(&r, 2).unwrap().size(), 0);
    }

    #[test]
    fn matching_cannot_combine_components() {
        // two disjoint colour-1 edges in different components
        let mut table = vec![2u8; 16];
        // classes of size 1: left 0..4, right 4..8; colour 1 on (0,4) and (1,5)
        table[0 * 4 + 0] = 1;
        table[1 * 4 + 1] = 1;
        let c = HostColouring::from_table(4, 4, 2, table).unwrap();
        let classes = equal_contiguous_classes(4, 4, 4).unwrap();
        let r = build_reduced_graph(&c, &classes, &rat(1, 2), &CertMode::Exhaustive).unwrap();
        let m = find_connected_matching(&r, 1).unwrap();
        assert_eq!(m.size(), 1);
        assert!(m.is_valid(&r));
    }

    #[test]
    fn star_component_gives_single_edge() {
        let c = extremal_three_split(8).unwrap();
        let classes = equal_contiguous_classes(9, 9, 3).unwrap();
        let r = build_reduced_graph(&c, &classes, &rat(1, 4), &CertMode::Exhaustive).unwrap();
        for s in 1..=3 {
            let m = find_connected_matching(&r, s).unwrap();
            assert_eq!(m.size(), 1, "colour {s}");
            assert!(m.is_valid(&r));
        }
        let best = best_monochromatic_connected_matching(&r).unwrap();
        assert_eq!(best.colour, 1);
        assert_eq!(best.size(), 1);
    }

    #[test]
    fn matching_bound_report() {
        let found = ConnectedMatching {
            colour: 1,
            component: vec![0, 1],
            edges: vec![(0, 1)],
        };
        let r = check_matching_lemma_bound(4, 1, &rat(1, 1_000_000), &found);
        assert!(r.hypotheses_hold());
        assert!(r.conclusion_holds);
        assert!(!r.counterexample);

        let r = check_matching_lemma_bound(3, 1, &rat(1, 1_000_000), &found);
        assert!(!r.size_hypothesis);

        let empty = ConnectedMatching {
            colour: 1,
            component: vec![],
            edges: vec![],
        };
        let r = check_matching_lemma_bound(4, 1, &rat(1, 1_000_000), &empty);
        assert!(r.counterexample);
    }

    #[test]
    fn even_labelling_on_paths_and_stars() {
        // single edge, matched
        let l = even_distance_labelling(&[(7, 9)], &[(7, 9)]).unwrap();
        assert_eq!(l.ell, 1);
        assert_eq!(l.ell_prime, 0);
        assert_eq!(l.labels[&7], ShapeLabel::X(1));
        assert_eq!(l.labels[&9], ShapeLabel::Y(1));

        // path a-b-c-d with matching {ab, cd}: x labels on a and c
        let l = even_distance_labelling(&[(0, 1), (1, 2), (2, 3)], &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(l.labels[&0], ShapeLabel::X(1));
        assert_eq!(l.labels[&2], ShapeLabel::X(2));
        assert_eq!(l.labels[&1], ShapeLabel::Y(1));
        assert_eq!(l.labels[&3], ShapeLabel::Y(2));

        // star centre 0, leaves 1..3, matching {0-1}: two z labels
        let l = even_distance_labelling(&[(0, 1), (0, 2), (0, 3)], &[(0, 1)]).unwrap();
        assert_eq!(l.ell, 1);
        assert_eq!(l.ell_prime, 2);
        assert_eq!(l.labels[&2], ShapeLabel::Z(1));
        assert_eq!(l.labels[&3], ShapeLabel::Z(2));
    }

    #[test]
    fn even_labelling_rejects_bad_inputs() {
        // not a tree (cycle)
        assert!(even_distance_labelling(&[(0, 1), (1, 2), (2, 0)], &[]).is_err());
        // matching not in tree
        assert!(even_distance_labelling(&[(0, 1), (1, 2)], &[(0, 2)]).is_err());
        // overlapping matching
        assert!(even_distance_labelling(&[(0, 1), (1, 2)], &[(0, 1), (1, 2)]).is_err());
        // disconnected
        assert!(even_distance_labelling(&[(0, 1), (2, 3), (3, 4), (4, 2)], &[]).is_err());
    }

    #[test]
    fn x_labels_pairwise_even_distance_random_trees() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(2..=20usize);
            // random tree: attach each vertex to a random earlier one
            let tree: Vec<(usize, usize)> =
                (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
            // greedy random matching inside the tree
            let mut used = vec![false; n];
            let mut matching = Vec::new();
            let mut shuffled = tree.clone();
            for i in (1..shuffled.len()).rev() {
                let j = rng.gen_range(0..=i);
                shuffled.swap(i, j);
            }
            for &(a, b) in &shuffled {
                if !used[a] && !used[b] {
                    used[a] = true;
                    used[b] = true;
                    matching.push((a, b));
                }
            }
            let l = even_distance_labelling(&tree, &matching).unwrap();
            // distances via BFS
            let mut adj = vec![Vec::new(); n];
            for &(a, b) in &tree {
                adj[a].push(b);
                adj[b].push(a);
            }
            let xs: Vec<usize> = l
                .labels
                .iter()
                .filter(|(_, lab)| matches!(lab, ShapeLabel::X(_)))
                .map(|(&v, _)| v)
                .collect();
            for &x in &xs {
                let mut dist = vec![usize::MAX; n];
                dist[x] = 0;
                let mut q = VecDeque::from([x]);
                while let Some(v) = q.pop_front() {
                    for &w in &adj[v] {
                        if dist[w] == usize::MAX {
                            dist[w] = dist[v] + 1;
                            q.push_back(w);
                        }
                    }
                }
                for &other in &xs {
                    assert_eq!(dist[other] % 2, 0, "x distance parity");
                }
            }
        }
    }

    #[test]
    fn shape_on_all_one_colouring() {
        let c = HostColouring::constant(6, 6, 3, 1).unwrap();
        let classes = equal_contiguous_classes(6, 6, 3).unwrap();
        let shape = assemble_cm_shape(&c, &classes, &rat(1, 4), &CertMode::Exhaustive).unwrap();
        assert_eq!(shape.ell, 3);
        assert_eq!(shape.ell_prime, 0);
        assert_eq!(shape.colour, 1);
        assert_eq!(shape.k, 6);
        shape.validate().unwrap();
    }

    #[test]
    fn shape_on_extremal_split() {
        let c = extremal_three_split(8).unwrap();
        let classes = equal_contiguous_classes(9, 9, 3).unwrap();
        let shape = assemble_cm_shape(&c, &classes, &rat(1, 4), &CertMode::Exhaustive).unwrap();
        assert_eq!(shape.ell, 1);
        assert_eq!(shape.ell_prime, 2);
        shape.validate().unwrap();
    }

    #[test]
    fn no_shape_when_nothing_regular_with_edges() {
        // a colouring where colours never win majorities on regular pairs:
        // make every pair irregular in colour 1 via half-graphs
        let n = 8;
        let mut table = vec![0u8; n * n];
        for u in 0..n {
            for v in 0..n {
                table[u * n + v] = if u % 4 <= v % 4 { 1 } else { 2 };
            }
        }
        let c = HostColouring::from_table(n, n, 2, table).unwrap();
        let classes = equal_contiguous_classes(n, n, 2).unwrap();
        let res = assemble_cm_shape(&c, &classes, &rat(1, 8), &CertMode::Exhaustive);
        assert!(matches!(res, Err(Error::NoShape(_))), "got {res:?}");
    }

    #[test]
    fn shape_text_round_trip() {
        let c = HostColouring::constant(6, 6, 3, 1).unwrap();
        let classes = equal_contiguous_classes(6, 6, 3).unwrap();
        let shape = assemble_cm_shape(&c, &classes, &rat(1, 4), &CertMode::Exhaustive).unwrap();
        let text = shape.to_text();
        let back = CmShape::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.ell, shape.ell);
        assert_eq!(back.colour, shape.colour);
    }

    #[test]
    fn shape_labels_parse() {
        assert_eq!("x3".parse::<ShapeLabel>().unwrap(), ShapeLabel::X(3));
        assert_eq!("z12".parse::<ShapeLabel>().unwrap(), ShapeLabel::Z(12));
        assert!("w1".parse::<ShapeLabel>().is_err());
        assert!("x0".parse::<ShapeLabel>().is_err());
        assert!("x".parse::<ShapeLabel>().is_err());
    }

    #[test]
    fn matching_tie_breaks_prefer_smaller_colour() {
        // colours 1 and 2 both admit size-1 matchings
        let mut table = vec![1u8; 4];
        table[3] = 2; // (1,1) coloured 2
        table[1] = 2; // (0,1) coloured 2
        let c = HostColouring::from_table(2, 2, 2, table).unwrap();
        let classes = vec![
            HostClass::new(Side::Left, vec![0]).unwrap(),
            HostClass::new(Side::Left, vec![1]).unwrap(),
            HostClass::new(Side::Right, vec![0]).unwrap(),
            HostClass::new(Side::Right, vec![1]).unwrap(),
        ];
        let r = build_reduced_graph(&c, &classes, &rat(1, 2), &CertMode::Exhaustive).unwrap();
        let best = best_monochromatic_connected_matching(&r).unwrap();
        assert_eq!(best.colour, 1);
    }
}
