//! Edge colourings of complete bipartite hosts: construction, seeded random
//! generation, colour-class views, and the bipcol text format.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BipGraph;
use crate::error::{Error, Result};

/// An r-edge-colouring of the complete bipartite graph K_{L,R}.
///
/// Internally 0-based; colours are 1-based everywhere (1..=r).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostColouring {
    left: usize,
    right: usize,
    colours: usize,
    /// colour of pair (u, v) at index u * right + v
    table: Vec<u8>,
}

impl HostColouring {
    /// All pairs coloured `colour`.
    pub fn constant(left: usize, right: usize, colours: usize, colour: usize) -> Result<Self> {
        check_colour_count(colours)?;
        if colour < 1 || colour > colours {
            return Err(Error::InvalidColour(format!(
                "colour {colour} outside 1..={colours}"
            )));
        }
        Ok(HostColouring {
            left,
            right,
            colours,
            table: vec![colour as u8; left * right],
        })
    }

    /// Builds from an explicit table in lexicographic (u, v) order.
    pub fn from_table(left: usize, right: usize, colours: usize, table: Vec<u8>) -> Result<Self> {
        check_colour_count(colours)?;
        if table.len() != left * right {
            return Err(Error::Parameter(format!(
                "table has {} entries, expected {}",
                table.len(),
                left * right
            )));
        }
        if let Some(c) = table.iter().find(|&&c| c < 1 || c as usize > colours) {
            return Err(Error::InvalidColour(format!(
                "colour {c} outside 1..={colours}"
            )));
        }
        Ok(HostColouring {
            left,
            right,
            colours,
            table,
        })
    }

    pub fn left_size(&self) -> usize {
        self.left
    }

    pub fn right_size(&self) -> usize {
        self.right
    }

    pub fn colour_count(&self) -> usize {
        self.colours
    }

    /// Colour of the pair (u, v), 0-based vertices.
    pub fn colour_of(&self, u: usize, v: usize) -> usize {
        self.table[u * self.right + v] as usize
    }

    /// The spanning subgraph of pairs with colour `s`.
    pub fn colour_subgraph(&self, s: usize) -> Result<BipGraph> {
        if s < 1 || s > self.colours {
            return Err(Error::InvalidColour(format!(
                "colour {s} outside 1..={}",
                self.colours
            )));
        }
        let mut g = BipGraph::new(self.left, self.right);
        for u in 0..self.left {
            for v in 0..self.right {
                if self.colour_of(u, v) == s {
                    g.add_edge(u, v);
                }
            }
        }
        Ok(g)
    }

    /// All colour subgraphs, indexed by colour - 1.
    pub fn colour_subgraphs(&self) -> Vec<BipGraph> {
        (1..=self.colours)
            .map(|s| self.colour_subgraph(s).expect("colour in range"))
            .collect()
    }

    /// Serializes to the bipcol text format: `bipcol L R r` then one
    /// `u v c` line per pair in lexicographic (u, v) order, 1-based.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "bipcol {} {} {}", self.left, self.right, self.colours);
        for u in 0..self.left {
            for v in 0..self.right {
                let _ = writeln!(out, "{} {} {}", u + 1, v + 1, self.colour_of(u, v));
            }
        }
        out
    }

    /// Parses the bipcol format, rejecting missing or duplicate pairs.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty colouring file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("bipcol") {
            return Err(Error::Format("expected 'bipcol L R r' header".into()));
        }
        let mut next_num = |what: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad {what} in header")))
        };
        let left = next_num("left size")?;
        let right = next_num("right size")?;
        let colours = next_num("colour count")?;
        check_colour_count(colours)?;
        let mut table = vec![0u8; left * right];
        let mut seen = vec![false; left * right];
        for line in lines {
            let mut it = line.split_whitespace();
            let mut field = |what: &str| -> Result<usize> {
                it.next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad {what} in line {line:?}")))
            };
            let u = field("left vertex")?;
            let v = field("right vertex")?;
            let c = field("colour")?;
            if u < 1 || u > left || v < 1 || v > right {
                return Err(Error::Format(format!("pair ({u},{v}) out of range")));
            }
            if c < 1 || c > colours {
                return Err(Error::Format(format!("colour {c} outside 1..={colours}")));
            }
            let idx = (u - 1) * right + (v - 1);
            if seen[idx] {
                return Err(Error::Format(format!("duplicate pair ({u},{v})")));
            }
            seen[idx] = true;
            table[idx] = c as u8;
        }
        if let Some(idx) = seen.iter().position(|&s| !s) {
            let (u, v) = (idx / right + 1, idx % right + 1);
            return Err(Error::Format(format!("missing pair ({u},{v})")));
        }
        HostColouring::from_table(left, right, colours, table)
    }
}

fn check_colour_count(colours: usize) -> Result<()> {
    if colours < 1 || colours > u8::MAX as usize {
        return Err(Error::InvalidColour(format!(
            "colour count {colours} outside 1..=255"
        )));
    }
    Ok(())
}

/// The three-part extremal colouring of K_{N,N} for an n-vertex balanced
/// target: N = 3(n/2 - 1), the right class split into three parts of size
/// n/2 - 1, every pair incident to part i coloured i.
pub fn extremal_three_split(n: usize) -> Result<HostColouring> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidSize(format!(
            "extremal split needs even n >= 4, got {n}"
        )));
    }
    let part = n / 2 - 1;
    let big = 3 * part;
    let mut table = Vec::with_capacity(big * big);
    for _u in 0..big {
        for v in 0..big {
            table.push((v / part + 1) as u8);
        }
    }
    HostColouring::from_table(big, big, 3, table)
}

/// Seeded uniform colouring: each pair coloured independently, identical
/// seeds give identical outputs on every platform.
pub fn random_colouring(n: usize, colours: usize, seed: u64) -> Result<HostColouring> {
    if n < 1 {
        return Err(Error::InvalidSize("host needs N >= 1".into()));
    }
    check_colour_count(colours)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = (0..n * n)
        .map(|_| rng.gen_range(1..=colours) as u8)
        .collect();
    HostColouring::from_table(n, n, colours, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremal_split_structure() {
        let c = extremal_three_split(4).unwrap();
        assert_eq!(c.left_size(), 3);
        assert_eq!(c.right_size(), 3);
        // colour depends only on the right endpoint
        for u in 0..3 {
            for v in 0..3 {
                assert_eq!(c.colour_of(u, v), v + 1);
            }
        }
        let c6 = extremal_three_split(6).unwrap();
        assert_eq!(c6.left_size(), 6);
        for s in 1..=3 {
            assert_eq!(c6.colour_subgraph(s).unwrap().edge_count(), 12);
        }
        assert!(matches!(extremal_three_split(5), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn random_colouring_determinism_and_density() {
        let a = random_colouring(3, 3, 7).unwrap();
        let b = random_colouring(3, 3, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_colouring(3, 3, 8).unwrap());

        let single = random_colouring(1, 1, 0).unwrap();
        assert_eq!(single.colour_of(0, 0), 1);

        // binomial concentration: each class density within 0.33 +- 0.05
        let big = random_colouring(50, 3, 1).unwrap();
        for s in 1..=3 {
            let count = big.colour_subgraph(s).unwrap().edge_count() as f64;
            let density = count / 2500.0;
            assert!((density - 1.0 / 3.0).abs() < 0.05, "colour {s}: {density}");
        }
    }

    #[test]
    fn colour_subgraphs_partition_pairs() {
        let c = random_colouring(6, 3, 42).unwrap();
        let total: usize = (1..=3)
            .map(|s| c.colour_subgraph(s).unwrap().edge_count())
            .sum();
        assert_eq!(total, 36);
        assert!(matches!(c.colour_subgraph(4), Err(Error::InvalidColour(_))));
        assert!(matches!(c.colour_subgraph(0), Err(Error::InvalidColour(_))));

        let mono = HostColouring::constant(2, 2, 2, 1).unwrap();
        assert_eq!(mono.colour_subgraph(2).unwrap().edge_count(), 0);
    }

    #[test]
    fn extremal_split_star_view() {
        let c = extremal_three_split(4).unwrap();
        let g1 = c.colour_subgraph(1).unwrap();
        assert_eq!(g1.edges(), vec![(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn bipcol_round_trip_and_rejection() {
        let c = random_colouring(4, 3, 9).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("bipcol 4 4 3\n"));
        let back = HostColouring::from_text(&text).unwrap();
        assert_eq!(c, back);
        assert_eq!(back.to_text(), text);

        // missing a pair
        let mut truncated: Vec<&str> = text.lines().collect();
        truncated.pop();
        assert!(HostColouring::from_text(&truncated.join("\n")).is_err());

        // duplicate pair
        let dup = format!("{text}1 1 1\n");
        assert!(HostColouring::from_text(&dup).is_err());

        // colour out of range
        let bad = "bipcol 1 1 2\n1 1 3\n";
        assert!(HostColouring::from_text(bad).is_err());
    }
}
