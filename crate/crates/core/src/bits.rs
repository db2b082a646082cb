//! Bitset-backed bipartite graphs.
//!
//! The host side of every search in this crate is a bipartite graph between a
//! left and a right vertex class. Rows (left adjacency) and columns (right
//! adjacency) are both kept as packed `u64` words so neighbourhood
//! intersections are single AND sweeps.

/// A bipartite graph on `left` x `right` vertices, 0-based internally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipGraph {
    left: usize,
    right: usize,
    row_words: usize,
    col_words: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64).max(1)
}

impl BipGraph {
    pub fn new(left: usize, right: usize) -> Self {
        let row_words = words_for(right);
        let col_words = words_for(left);
        BipGraph {
            left,
            right,
            row_words,
            col_words,
            rows: vec![0; left * row_words],
            cols: vec![0; right * col_words],
        }
    }

    /// Complete bipartite graph.
    pub fn complete(left: usize, right: usize) -> Self {
        let mut g = BipGraph::new(left, right);
        for u in 0..left {
            for v in 0..right {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn left_size(&self) -> usize {
        self.left
    }

    pub fn right_size(&self) -> usize {
        self.right
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u < self.left && v < self.right);
        self.rows[u * self.row_words + v / 64] |= 1 << (v % 64);
        self.cols[v * self.col_words + u / 64] |= 1 << (u % 64);
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u < self.left && v < self.right);
        self.rows[u * self.row_words + v / 64] &= !(1 << (v % 64));
        self.cols[v * self.col_words + u / 64] &= !(1 << (u % 64));
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        debug_assert!(u < self.left && v < self.right);
        self.rows[u * self.row_words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn row(&self, u: usize) -> &[u64] {
        &self.rows[u * self.row_words..(u + 1) * self.row_words]
    }

    pub fn col(&self, v: usize) -> &[u64] {
        &self.cols[v * self.col_words..(v + 1) * self.col_words]
    }

    pub fn degree_left(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degree_right(&self, v: usize) -> usize {
        self.col(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Edges in lexicographic (u, v) order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.left {
            for v in iter_bits(self.row(u)) {
                out.push((u, v));
            }
        }
        out
    }

    /// Number of edges between the given left and right vertex subsets.
    pub fn edges_between(&self, a: &[usize], b_mask: &[u64]) -> usize {
        debug_assert_eq!(b_mask.len(), self.row_words);
        let mut total = 0usize;
        for &u in a {
            let row = self.row(u);
            for (w, m) in row.iter().zip(b_mask) {
                total += (w & m).count_ones() as usize;
            }
        }
        total
    }

    /// Degree of left vertex `u` into the right subset given as a mask.
    pub fn degree_into_right(&self, u: usize, b_mask: &[u64]) -> usize {
        self.row(u)
            .iter()
            .zip(b_mask)
            .map(|(w, m)| (w & m).count_ones() as usize)
            .sum()
    }

    /// Degree of right vertex `v` into the left subset given as a mask.
    pub fn degree_into_left(&self, v: usize, a_mask: &[u64]) -> usize {
        self.col(v)
            .iter()
            .zip(a_mask)
            .map(|(w, m)| (w & m).count_ones() as usize)
            .sum()
    }

    pub fn row_mask_words(&self) -> usize {
        self.row_words
    }

    pub fn col_mask_words(&self) -> usize {
        self.col_words
    }
}

/// Packs a list of indices into a u64 mask of the given width in words.
pub fn mask_of(indices: &[usize], words: usize) -> Vec<u64> {
    let mut m = vec![0u64; words];
    for &i in indices {
        m[i / 64] |= 1 << (i % 64);
    }
    m
}

/// Iterates set bits of a word slice in ascending order.
pub fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            }
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_cols_agree() {
        let mut g = BipGraph::new(70, 3);
        g.add_edge(0, 1);
        g.add_edge(65, 2);
        g.add_edge(69, 0);
        assert!(g.has_edge(65, 2));
        assert_eq!(g.degree_right(2), 1);
        assert_eq!(g.degree_left(65), 1);
        assert_eq!(iter_bits(g.col(2)).collect::<Vec<_>>(), vec![65]);
        g.remove_edge(65, 2);
        assert!(!g.has_edge(65, 2));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn subset_counting() {
        let g = BipGraph::complete(5, 5);
        let mask = mask_of(&[0, 2, 4], g.row_mask_words());
        assert_eq!(g.edges_between(&[1, 3], &mask), 6);
        assert_eq!(g.degree_into_right(0, &mask), 3);
    }
}
