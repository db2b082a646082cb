//! The target-side construction: constants derivation with an inequality
//! audit, equal window partition of the bandwidth order, balanced window
//! permutations, link/kernel decomposition at family crossings, and the
//! final class assignment.
//!
//! Window blocks are indexed by their position in the bandwidth order;
//! the permutation reassigns blocks to families, while links always sit at
//! the tail of a block because target edges only reach between
//! order-adjacent blocks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use itertools::Itertools;
use num_traits::ToPrimitive;

use crate::cm::{CmShape, ShapeLabel};
use crate::error::{Error, Result};
use crate::graphs::{bandwidth_of_labelling, TargetGraph, VertexTwoColouring};
use crate::rat::{ceil_usize, fmt_rat, rat, rat_int, Rat};

/// Exhaustive permutation search ceiling.
pub const PERMUTATION_EXHAUSTIVE_CAP: usize = 9;

/// One audited inequality of the constants chain.
#[derive(Clone, Debug)]
pub struct AuditEntry {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

/// The derived constants ledger: inputs, derived values, and the audit.
#[derive(Clone, Debug)]
pub struct ConstantsProfile {
    pub gamma: Rat,
    pub delta: usize,
    pub eps1: Rat,
    pub k0: usize,
    pub eps: Rat,
    pub xi: Rat,
    pub beta: Rat,
    /// Smallest target size the machinery is calibrated for: ceil(8 K0 / xi).
    pub n0: usize,
    pub audit: Vec<AuditEntry>,
}

impl ConstantsProfile {
    pub fn audit_entry(&self, name: &str) -> Option<&AuditEntry> {
        self.audit.iter().find(|e| e.name == name)
    }

    pub fn audit_all_hold(&self) -> bool {
        self.audit.iter().all(|e| e.holds)
    }
}

/// Derives (eps, xi, beta, n0) from (gamma, delta, eps1, K0) and audits the
/// inequality chain at the worst-case block count 7 K0 / xi + 2 K0 with
/// ell = K0, all in exact rational arithmetic.
pub fn derive_constants(
    gamma: &Rat,
    delta: usize,
    eps1: &Rat,
    k0: usize,
) -> Result<ConstantsProfile> {
    if *gamma <= crate::rat::zero() {
        return Err(Error::Parameter("gamma must be positive".into()));
    }
    if *eps1 <= crate::rat::zero() {
        return Err(Error::Parameter("eps1 must be positive".into()));
    }
    if delta < 1 || k0 < 1 {
        return Err(Error::Parameter("delta and K0 must be at least 1".into()));
    }
    let half_gamma = gamma / rat_int(2);
    let eps_candidate = &half_gamma / (rat_int(2_400_000) + rat_int(2) * (rat_int(3) + &half_gamma));
    let eps = (eps1 / rat_int(2)).min(eps_candidate);
    let xi = gamma / rat_int(6);
    let beta = &eps * &xi * (rat_int(1) + rat_int(2) * &xi)
        / (rat_int(72) * rat_int(delta * delta) * rat_int(k0 * k0));
    let n0 = ceil_usize(&(rat_int(8 * k0) / &xi))?;

    let worst_hatell = rat_int(7 * k0) / &xi + rat_int(2 * k0);
    let degree_margin = (rat_int(1) + gamma / rat_int(3)) * &eps
        / (rat_int(2) * rat_int(delta * delta));
    let link_mass = rat_int(4 * k0) * &worst_hatell * &beta;

    let mut audit = Vec::new();
    let matching_cap = rat(1, 2_400_000);
    audit.push(AuditEntry {
        name: "eps_within_matching_regime",
        holds: eps < matching_cap,
        detail: format!("{} < {}", fmt_rat(&eps), fmt_rat(&matching_cap)),
    });
    let window_low = ceil_usize(&(rat_int(7 * k0) / &xi + rat_int(k0)))?;
    audit.push(AuditEntry {
        name: "block_count_window_feasible",
        holds: rat_int(window_low) <= worst_hatell,
        detail: format!("ceil = {window_low} <= {}", fmt_rat(&worst_hatell)),
    });
    audit.push(AuditEntry {
        name: "link_mass_within_degree_margin",
        holds: link_mass <= degree_margin,
        detail: format!("{} <= {}", fmt_rat(&link_mass), fmt_rat(&degree_margin)),
    });
    audit.push(AuditEntry {
        name: "degree_margin_within_xi",
        holds: degree_margin <= xi,
        detail: format!("{} <= {}", fmt_rat(&degree_margin), fmt_rat(&xi)),
    });
    audit.push(AuditEntry {
        name: "beta_within_block_bound",
        holds: &beta * &worst_hatell <= rat_int(2),
        detail: format!("{} * {} <= 2", fmt_rat(&beta), fmt_rat(&worst_hatell)),
    });

    Ok(ConstantsProfile {
        gamma: gamma.clone(),
        delta,
        eps1: eps1.clone(),
        k0,
        eps,
        xi,
        beta,
        n0,
        audit,
    })
}

/// Two-sided balance of the colour counts on a vertex subset:
/// |C1 - C2| <= beta * C2, with (0,0) vacuously balanced.
pub fn beta_balanced_check(chi: &VertexTwoColouring, w: &[usize], beta: &Rat) -> bool {
    let c1 = w.iter().filter(|&&v| chi.colour_of(v) == 1).count();
    let c2 = w.len() - c1;
    counts_balanced(c1, c2, beta)
}

fn counts_balanced(c1: usize, c2: usize, beta: &Rat) -> bool {
    if c2 == 0 {
        c1 == 0
    } else {
        rat_int(c1.abs_diff(c2)) <= beta * rat_int(c2)
    }
}

/// Contiguous equal blocks of the bandwidth order; windows[i] is the
/// 1-based inclusive vertex range of block i (0-based).
pub fn equi_partition(h: &TargetGraph, hat_ell: usize) -> Result<Vec<(usize, usize)>> {
    let n = h.vertex_count();
    if hat_ell == 0 || n % hat_ell != 0 {
        return Err(Error::Divisibility(format!(
            "block count {hat_ell} must divide n = {n}"
        )));
    }
    let size = n / hat_ell;
    Ok((0..hat_ell)
        .map(|i| (i * size + 1, (i + 1) * size))
        .collect())
}

/// Per-block (C1, C2) colour counts.
pub fn window_colour_counts(
    chi: &VertexTwoColouring,
    windows: &[(usize, usize)],
) -> Vec<(usize, usize)> {
    windows
        .iter()
        .map(|&(a, b)| {
            let c1 = (a..=b).filter(|&v| chi.colour_of(v) == 1).count();
            (c1, b - a + 1 - c1)
        })
        .collect()
}

/// Exact comparator |c1 - c2| <= xi * c2 over i128, precomputed from xi.
struct XiCmp {
    num: i128,
    den: i128,
}

impl XiCmp {
    fn new(xi: &Rat) -> Result<Self> {
        match (xi.numer().to_i128(), xi.denom().to_i128()) {
            (Some(num), Some(den)) if num >= 0 => Ok(XiCmp { num, den }),
            _ => Err(Error::Parameter(format!(
                "xi = {} out of the supported range",
                fmt_rat(xi)
            ))),
        }
    }

    fn balanced(&self, c1: i128, c2: i128) -> bool {
        if c2 == 0 {
            c1 == 0
        } else {
            (c1 - c2).abs() * self.den <= self.num * c2
        }
    }
}

/// First window (a, b) with b - a >= min_window violating the balance
/// inequality under the given block order, or None when all hold.
/// Positions are 1-based.
pub fn window_balance_violation(
    counts_in_order: &[(usize, usize)],
    xi: &Rat,
    min_window: usize,
) -> Result<Option<(usize, usize)>> {
    let cmp = XiCmp::new(xi)?;
    Ok(first_violation(counts_in_order, &cmp, min_window))
}

fn first_violation(
    counts: &[(usize, usize)],
    cmp: &XiCmp,
    min_window: usize,
) -> Option<(usize, usize)> {
    let k = counts.len();
    let mut p1 = vec![0i128; k + 1];
    let mut p2 = vec![0i128; k + 1];
    for (i, &(c1, c2)) in counts.iter().enumerate() {
        p1[i + 1] = p1[i] + c1 as i128;
        p2[i + 1] = p2[i] + c2 as i128;
    }
    for a in 1..=k {
        for b in a + min_window..=k {
            if !cmp.balanced(p1[b] - p1[a - 1], p2[b] - p2[a - 1]) {
                return Some((a, b));
            }
        }
    }
    None
}

/// Searches for a block order making every window of length at least
/// min_window colour-balanced within xi. Exhaustive in lexicographic order
/// up to 9 blocks; beyond that a greedy interleave of excesses is tried
/// and verified. The returned permutation maps positions to blocks
/// (0-based) and always passes its own window verification.
pub fn find_balanced_permutation(
    counts: &[(usize, usize)],
    xi: &Rat,
    min_window: usize,
) -> Result<Option<Vec<usize>>> {
    if min_window == 0 {
        return Err(Error::Parameter("min_window must be at least 1".into()));
    }
    let k = counts.len();
    if k == 0 {
        return Err(Error::Parameter("no window classes".into()));
    }
    let cmp = XiCmp::new(xi)?;
    let reorder = |sigma: &[usize]| -> Vec<(usize, usize)> {
        sigma.iter().map(|&b| counts[b]).collect()
    };
    if k <= PERMUTATION_EXHAUSTIVE_CAP {
        for sigma in (0..k).permutations(k) {
            if first_violation(&reorder(&sigma), &cmp, min_window).is_none() {
                return Ok(Some(sigma));
            }
        }
        return Ok(None);
    }
    // greedy interleave: alternate the largest positive and the most
    // negative remaining excess
    let mut pos: Vec<usize> = (0..k).filter(|&i| counts[i].0 > counts[i].1).collect();
    let mut neg: Vec<usize> = (0..k).filter(|&i| counts[i].0 <= counts[i].1).collect();
    let excess = |i: usize| counts[i].0 as i128 - counts[i].1 as i128;
    pos.sort_by_key(|&i| (-excess(i), i));
    neg.sort_by_key(|&i| (excess(i), i));
    let mut sigma = Vec::with_capacity(k);
    let (mut pi, mut ni) = (0usize, 0usize);
    let mut take_pos = match (pos.first(), neg.first()) {
        (Some(&p), Some(&q)) => excess(p).abs() >= excess(q).abs(),
        (Some(_), None) => true,
        _ => false,
    };
    while pi < pos.len() || ni < neg.len() {
        if take_pos && pi < pos.len() {
            sigma.push(pos[pi]);
            pi += 1;
        } else if ni < neg.len() {
            sigma.push(neg[ni]);
            ni += 1;
        } else {
            sigma.push(pos[pi]);
            pi += 1;
        }
        take_pos = !take_pos;
    }
    if first_violation(&reorder(&sigma), &cmp, min_window).is_none() {
        Ok(Some(sigma))
    } else {
        Ok(None)
    }
}

/// Window partition with a fixed block order and family split.
#[derive(Clone, Debug)]
pub struct PlanFrame {
    pub n: usize,
    pub hat_ell: usize,
    pub block_size: usize,
    /// sigma[pos] = block at that position, 0-based.
    pub sigma: Vec<usize>,
    pub ell: usize,
    /// (a_i, b_i) 1-based position ranges per family.
    pub families: Vec<(usize, usize)>,
    position_of_block: Vec<usize>,
}

impl PlanFrame {
    pub fn new(n: usize, hat_ell: usize, sigma: Vec<usize>, ell: usize) -> Result<Self> {
        if hat_ell == 0 || n % hat_ell != 0 {
            return Err(Error::Divisibility(format!(
                "block count {hat_ell} must divide n = {n}"
            )));
        }
        if ell == 0 || hat_ell % ell != 0 {
            return Err(Error::Divisibility(format!(
                "family count {ell} must divide block count {hat_ell}"
            )));
        }
        if sigma.len() != hat_ell {
            return Err(Error::Parameter("sigma length mismatch".into()));
        }
        let mut position_of_block = vec![usize::MAX; hat_ell];
        for (pos, &b) in sigma.iter().enumerate() {
            if b >= hat_ell || position_of_block[b] != usize::MAX {
                return Err(Error::Parameter("sigma is not a permutation".into()));
            }
            position_of_block[b] = pos;
        }
        let ratio = hat_ell / ell;
        let families = (0..ell).map(|i| (i * ratio + 1, (i + 1) * ratio)).collect();
        Ok(PlanFrame {
            n,
            hat_ell,
            block_size: n / hat_ell,
            sigma,
            ell,
            families,
            position_of_block,
        })
    }

    /// Family (0-based) of a block, through its position under sigma.
    pub fn family_of_block(&self, block: usize) -> usize {
        self.position_of_block[block] / (self.hat_ell / self.ell)
    }

    /// 1-based inclusive vertex range of a block (0-based index).
    pub fn block_range(&self, block: usize) -> (usize, usize) {
        (block * self.block_size + 1, (block + 1) * self.block_size)
    }
}

/// A trailing slice of a crossing block, routed along one tree-path edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    /// 1-based piece index within its link.
    pub index: usize,
    /// 1-based inclusive vertex positions.
    pub start: usize,
    pub end: usize,
    /// Tree-path edge (in path order) whose endpoint classes receive the
    /// piece's two colour classes.
    pub from: ShapeLabel,
    pub to: ShapeLabel,
}

/// Frame plus links and kernels, before the colour split.
#[derive(Clone, Debug)]
pub struct PlanStructure {
    pub frame: PlanFrame,
    pub h: TargetGraph,
    pub piece_size: usize,
    /// links[block] = pieces of that block (empty away from crossings).
    pub links: Vec<Vec<Piece>>,
    /// kernels[block] = 1-based inclusive range; start > end means empty.
    pub kernels: Vec<(usize, usize)>,
}

/// Carves the trailing pieces of every family-crossing block and leaves
/// the rest as kernels. A block whose successor (in the bandwidth order)
/// sits in a different family gets t+1 pieces of size ceil(beta n), where
/// t counts the tree-path vertices strictly between the two matched pairs;
/// the pieces follow the path edges that are not matching edges.
pub fn build_links_kernels(
    frame: PlanFrame,
    shape: &CmShape,
    beta: &Rat,
    h: &TargetGraph,
) -> Result<PlanStructure> {
    if shape.ell != frame.ell {
        return Err(Error::Structural(format!(
            "shape has {} matched pairs, frame has {} families",
            shape.ell, frame.ell
        )));
    }
    if h.vertex_count() != frame.n {
        return Err(Error::Parameter("frame size differs from target size".into()));
    }
    if *beta <= crate::rat::zero() {
        return Err(Error::Parameter("beta must be positive".into()));
    }
    let piece = ceil_usize(&(beta * rat_int(frame.n)))?.max(1);
    let bandwidth = bandwidth_of_labelling(h);
    if bandwidth > frame.block_size {
        return Err(Error::Parameter(format!(
            "labelling bandwidth {bandwidth} exceeds the block size {}",
            frame.block_size
        )));
    }

    let mut links: Vec<Vec<Piece>> = vec![Vec::new(); frame.hat_ell];
    let mut kernels: Vec<(usize, usize)> = Vec::with_capacity(frame.hat_ell);
    for block in 0..frame.hat_ell {
        let (start, end) = frame.block_range(block);
        if block + 1 == frame.hat_ell {
            kernels.push((start, end));
            continue;
        }
        let fam_here = frame.family_of_block(block);
        let fam_next = frame.family_of_block(block + 1);
        if fam_here == fam_next {
            kernels.push((start, end));
            continue;
        }
        if bandwidth > piece {
            return Err(Error::Parameter(format!(
                "labelling bandwidth {bandwidth} exceeds the piece size {piece}; increase beta"
            )));
        }
        let path = shape.tree_path(&ShapeLabel::X(fam_here + 1), &ShapeLabel::X(fam_next + 1))?;
        let match_here = matched_pair(fam_here);
        let match_next = matched_pair(fam_next);
        let piece_edges: Vec<(ShapeLabel, ShapeLabel)> = path
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|&e| !same_edge(e, match_here) && !same_edge(e, match_next))
            .collect();
        let specials = [
            ShapeLabel::X(fam_here + 1),
            ShapeLabel::Y(fam_here + 1),
            ShapeLabel::X(fam_next + 1),
            ShapeLabel::Y(fam_next + 1),
        ];
        let t = path.iter().filter(|l| !specials.contains(l)).count();
        if piece_edges.len() != t + 1 {
            return Err(Error::Structural(format!(
                "path between x{} and x{} does not split into t+1 link edges",
                fam_here + 1,
                fam_next + 1
            )));
        }
        let need = (t + 1) * piece;
        if need > frame.block_size {
            return Err(Error::Parameter(format!(
                "link of block {} needs {need} vertices, block size is {}; beta too large",
                block + 1,
                frame.block_size
            )));
        }
        let mut pieces = Vec::with_capacity(t + 1);
        for (j, &(from, to)) in piece_edges.iter().enumerate() {
            let j1 = j + 1;
            pieces.push(Piece {
                index: j1,
                start: end - (t + 2 - j1) * piece + 1,
                end: end - (t + 1 - j1) * piece,
                from,
                to,
            });
        }
        kernels.push((start, end - need));
        links[block] = pieces;
    }
    Ok(PlanStructure {
        frame,
        h: h.clone(),
        piece_size: piece,
        links,
        kernels,
    })
}

fn matched_pair(family: usize) -> (ShapeLabel, ShapeLabel) {
    (ShapeLabel::X(family + 1), ShapeLabel::Y(family + 1))
}

fn same_edge(a: (ShapeLabel, ShapeLabel), b: (ShapeLabel, ShapeLabel)) -> bool {
    a == b || (a.1, a.0) == b
}

/// The finished target-side partition.
#[derive(Clone, Debug)]
pub struct PartitionPlan {
    pub h: TargetGraph,
    pub n: usize,
    pub hat_ell: usize,
    pub block_size: usize,
    pub piece_size: usize,
    pub sigma: Vec<usize>,
    pub ell: usize,
    pub ell_prime: usize,
    pub families: Vec<(usize, usize)>,
    pub links: Vec<Vec<Piece>>,
    pub kernels: Vec<(usize, usize)>,
    classes: BTreeMap<ShapeLabel, Vec<usize>>,
    class_of: Vec<ShapeLabel>,
}

/// Splits kernels into X/Y by vertex colour and walks each link piece's
/// colour classes onto its path edge: colour-1 vertices go to the
/// endpoint in tree colour class 1, colour-2 vertices to the other.
pub fn assign_classes(
    structure: PlanStructure,
    chi: &VertexTwoColouring,
    shape: &CmShape,
) -> Result<PartitionPlan> {
    let frame = &structure.frame;
    if chi.len() != frame.n {
        return Err(Error::Parameter("colouring size differs from target".into()));
    }
    let mut classes: BTreeMap<ShapeLabel, Vec<usize>> = BTreeMap::new();
    for label in shape.labels() {
        classes.insert(*label, Vec::new());
    }
    let mut class_of: Vec<Option<ShapeLabel>> = vec![None; frame.n];

    let mut push = |classes: &mut BTreeMap<ShapeLabel, Vec<usize>>,
                    class_of: &mut Vec<Option<ShapeLabel>>,
                    label: ShapeLabel,
                    v: usize|
     -> Result<()> {
        classes
            .get_mut(&label)
            .ok_or_else(|| Error::Structural(format!("label {label} missing from shape")))?
            .push(v);
        class_of[v - 1] = Some(label);
        Ok(())
    };

    for block in 0..frame.hat_ell {
        let fam = frame.family_of_block(block);
        let (ks, ke) = structure.kernels[block];
        for v in ks..=ke {
            let label = if chi.colour_of(v) == 1 {
                ShapeLabel::X(fam + 1)
            } else {
                ShapeLabel::Y(fam + 1)
            };
            push(&mut classes, &mut class_of, label, v)?;
        }
        let pieces = &structure.links[block];
        if let (Some(first), Some(last)) = (pieces.first(), pieces.last()) {
            let fam_next = frame.family_of_block(block + 1);
            let here = matched_pair(fam);
            let next = matched_pair(fam_next);
            let touches = |e: &Piece, m: (ShapeLabel, ShapeLabel)| {
                e.from == m.0 || e.from == m.1 || e.to == m.0 || e.to == m.1
            };
            if !touches(first, here) || !touches(last, next) {
                return Err(Error::Structural(
                    "link path endpoints are not the matched pair classes".into(),
                ));
            }
        }
        for piece in pieces {
            let chi_from = shape
                .chi_of(&piece.from)
                .ok_or_else(|| Error::Structural(format!("label {} unknown", piece.from)))?;
            let (label1, label2) = if chi_from == 1 {
                (piece.from, piece.to)
            } else {
                (piece.to, piece.from)
            };
            for v in piece.start..=piece.end {
                let label = if chi.colour_of(v) == 1 { label1 } else { label2 };
                push(&mut classes, &mut class_of, label, v)?;
            }
        }
    }

    let class_of: Vec<ShapeLabel> = class_of
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Structural("a vertex was left unassigned".into()))?;

    Ok(PartitionPlan {
        h: structure.h.clone(),
        n: frame.n,
        hat_ell: frame.hat_ell,
        block_size: frame.block_size,
        piece_size: structure.piece_size,
        sigma: frame.sigma.clone(),
        ell: frame.ell,
        ell_prime: shape.ell_prime,
        families: frame.families.clone(),
        links: structure.links,
        kernels: structure.kernels,
        classes,
        class_of,
    })
}

/// Builds the full plan for a target: windows, permutation (provided),
/// links, kernels, classes.
pub fn build_partition_plan(
    h: &TargetGraph,
    chi: &VertexTwoColouring,
    shape: &CmShape,
    hat_ell: usize,
    sigma: Vec<usize>,
    beta: &Rat,
) -> Result<PartitionPlan> {
    let frame = PlanFrame::new(h.vertex_count(), hat_ell, sigma, shape.ell)?;
    let structure = build_links_kernels(frame, shape, beta, h)?;
    let mut plan = assign_classes(structure, chi, shape)?;
    plan.h = h.clone();
    Ok(plan)
}

/// Size-bound outcome for the final classes.
#[derive(Clone, Debug)]
pub struct SizeBoundReport {
    /// (1 + 2 xi) n / (2 ell)
    pub xy_bound: Rat,
    /// 2 hat_ell * piece
    pub z_bound: usize,
    pub violations: Vec<(ShapeLabel, usize)>,
}

impl SizeBoundReport {
    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl PartitionPlan {
    pub fn classes(&self) -> &BTreeMap<ShapeLabel, Vec<usize>> {
        &self.classes
    }

    pub fn class_of(&self, v: usize) -> ShapeLabel {
        self.class_of[v - 1]
    }

    pub fn class_len(&self, label: &ShapeLabel) -> usize {
        self.classes.get(label).map(Vec::len).unwrap_or(0)
    }

    /// X/Y/Z classes partition the vertex set exactly.
    pub fn is_exact_partition(&self) -> bool {
        let total: usize = self.classes.values().map(Vec::len).sum();
        let mut seen = vec![false; self.n];
        for vs in self.classes.values() {
            for &v in vs {
                if v < 1 || v > self.n || seen[v - 1] {
                    return false;
                }
                seen[v - 1] = true;
            }
        }
        total == self.n
    }

    /// No edge inside a class, and every between-class edge lands on a
    /// tree edge of the shape. Returns the violating edges.
    pub fn edge_projection_violations(&self, shape: &CmShape) -> Vec<(usize, usize)> {
        self.h
            .edges()
            .iter()
            .copied()
            .filter(|&(u, v)| {
                let (lu, lv) = (self.class_of(u), self.class_of(v));
                lu == lv || !shape.has_tree_edge(&lu, &lv)
            })
            .collect()
    }

    /// |X_i|, |Y_i| <= (1 + 2 xi) n / (2 ell) and |Z_j| <= 2 hat_ell * piece.
    pub fn size_bounds(&self, xi: &Rat) -> SizeBoundReport {
        let xy_bound = (rat_int(1) + rat_int(2) * xi) * rat_int(self.n)
            / rat_int(2 * self.ell);
        let z_bound = 2 * self.hat_ell * self.piece_size;
        let mut violations = Vec::new();
        for (label, vs) in &self.classes {
            let ok = match label {
                ShapeLabel::X(_) | ShapeLabel::Y(_) => rat_int(vs.len()) <= xy_bound,
                ShapeLabel::Z(_) => vs.len() <= z_bound,
            };
            if !ok {
                violations.push((*label, vs.len()));
            }
        }
        SizeBoundReport {
            xy_bound,
            z_bound,
            violations,
        }
    }

    /// Plan dump: header, piece size, sigma, families, links, classes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "plan {} {} {} {}",
            self.n, self.hat_ell, self.ell, self.ell_prime
        );
        let _ = writeln!(out, "param piece {}", self.piece_size);
        let sigma: Vec<String> = self.sigma.iter().map(|b| (b + 1).to_string()).collect();
        let _ = writeln!(out, "sigma {}", sigma.join(" "));
        for (i, &(a, b)) in self.families.iter().enumerate() {
            let _ = writeln!(out, "family {} {} {}", i + 1, a, b);
        }
        for (block, pieces) in self.links.iter().enumerate() {
            for p in pieces {
                let _ = writeln!(
                    out,
                    "link {} {} {} {} {}",
                    block + 1,
                    p.index,
                    p.end - p.start + 1,
                    p.from,
                    p.to
                );
            }
        }
        for (label, vs) in &self.classes {
            let ids: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "class {label} {}", ids.join(" "));
        }
        out
    }

    /// Parses a plan dump; the target graph is supplied by the caller.
    pub fn from_text(h: &TargetGraph, text: &str) -> Result<PartitionPlan> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty plan file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("plan") {
            return Err(Error::Format("expected 'plan n hat_ell l lprime'".into()));
        }
        let mut num = |what: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad {what} in plan header")))
        };
        let n = num("n")?;
        let hat_ell = num("hat_ell")?;
        let ell = num("l")?;
        let ell_prime = num("lprime")?;
        if h.vertex_count() != n {
            return Err(Error::Format(format!(
                "plan is for n = {n}, target has {} vertices",
                h.vertex_count()
            )));
        }
        if hat_ell == 0 || n % hat_ell != 0 {
            return Err(Error::Format("hat_ell must divide n".into()));
        }
        let block_size = n / hat_ell;
        let mut piece_size = 1usize;
        let mut sigma: Vec<usize> = Vec::new();
        let mut families: Vec<(usize, usize)> = Vec::new();
        let mut links: Vec<Vec<Piece>> = vec![Vec::new(); hat_ell];
        let mut classes: BTreeMap<ShapeLabel, Vec<usize>> = BTreeMap::new();
        for line in lines {
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("param") => {
                    if tok.next() != Some("piece") {
                        return Err(Error::Format(format!("unknown plan param in {line:?}")));
                    }
                    piece_size = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Format("bad piece size".into()))?;
                }
                Some("sigma") => {
                    for t in tok {
                        let b: usize = t
                            .parse()
                            .map_err(|_| Error::Format(format!("bad sigma entry {t:?}")))?;
                        if b == 0 || b > hat_ell {
                            return Err(Error::Format(format!("sigma entry {b} out of range")));
                        }
                        sigma.push(b - 1);
                    }
                }
                Some("family") => {
                    let _i: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Format("bad family index".into()))?;
                    let a: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Format("bad family start".into()))?;
                    let b: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Format("bad family end".into()))?;
                    families.push((a, b));
                }
                Some("link") => {
                    let block: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Format("bad link block".into()))?;
                    let index: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Format("bad link piece index".into()))?;
                    let size: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Format("bad link size".into()))?;
                    let from: ShapeLabel = tok
                        .next()
                        .ok_or_else(|| Error::Format("bad link labels".into()))?
                        .parse()?;
                    let to: ShapeLabel = tok
                        .next()
                        .ok_or_else(|| Error::Format("bad link labels".into()))?
                        .parse()?;
                    if block == 0 || block > hat_ell {
                        return Err(Error::Format(format!("link block {block} out of range")));
                    }
                    links[block - 1].push(Piece {
                        index,
                        start: 0,
                        end: size,
                        from,
                        to,
                    });
                }
                Some("class") => {
                    let label: ShapeLabel = tok
                        .next()
                        .ok_or_else(|| Error::Format("bad class label".into()))?
                        .parse()?;
                    let mut vs = Vec::new();
                    for t in tok {
                        let v: usize = t
                            .parse()
                            .map_err(|_| Error::Format(format!("bad vertex {t:?}")))?;
                        if v < 1 || v > n {
                            return Err(Error::Format(format!("vertex {v} out of range")));
                        }
                        vs.push(v);
                    }
                    classes.insert(label, vs);
                }
                other => return Err(Error::Format(format!("unknown plan line {other:?}"))),
            }
        }
        if sigma.len() != hat_ell {
            return Err(Error::Format("sigma does not cover every block".into()));
        }
        // recompute piece positions and kernels from the link sizes
        let mut kernels = Vec::with_capacity(hat_ell);
        for block in 0..hat_ell {
            let start = block * block_size + 1;
            let end = (block + 1) * block_size;
            links[block].sort_by_key(|p| p.index);
            let count = links[block].len();
            for (j, p) in links[block].iter_mut().enumerate() {
                let size = p.end;
                p.start = end - (count - j) * piece_size + 1;
                p.end = p.start + size - 1;
            }
            let used: usize = count * piece_size;
            kernels.push((start, end - used));
        }
        let mut class_of: Vec<Option<ShapeLabel>> = vec![None; n];
        for (label, vs) in &classes {
            for &v in vs {
                if class_of[v - 1].replace(*label).is_some() {
                    return Err(Error::Format(format!("vertex {v} in two classes")));
                }
            }
        }
        let class_of = class_of
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Format("classes do not cover every vertex".into()))?;
        Ok(PartitionPlan {
            h: h.clone(),
            n,
            hat_ell,
            block_size,
            piece_size,
            sigma,
            ell,
            ell_prime,
            families,
            links,
            kernels,
            classes,
            class_of,
        })
    }
}
