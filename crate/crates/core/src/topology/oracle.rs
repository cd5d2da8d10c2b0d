//! Brute-force reference census for small grids.
//!
//! Each cell is rasterized into a 4×4 block of sub-pixels: the twelve rim
//! sub-pixels take the sign of the nearest corner and the central 2×2 block
//! takes the sign that decides the cell (resolver sign for saddle cells,
//! majority otherwise). Domains are 4-connected flood fills of the raster and
//! zero-set components are connected sets of cracks between sub-pixels of
//! opposite sign. Shares no code with the union-find census.

use std::collections::VecDeque;

use super::is_positive;
use crate::synthesis::Grid;

const SUB: usize = 4;
pub const MAX_SIDE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCount {
    pub zero_components: u64,
    /// Zero components not reaching the outer rectangle.
    pub compact_zero_components: u64,
    pub positive_domains: u64,
    pub negative_domains: u64,
}

/// Reference counts for a non-periodic grid of at most 32×32 nodes.
pub fn components_oracle(values: &Grid, resolve: &dyn Fn(usize, usize) -> f64) -> OracleCount {
    assert!(
        values.nx >= 2 && values.ny >= 2 && values.nx <= MAX_SIDE && values.ny <= MAX_SIDE,
        "oracle grids are 2..=32 nodes per side"
    );
    let (w, h) = ((values.nx - 1) * SUB, (values.ny - 1) * SUB);
    let sign = |i: usize, j: usize| is_positive(values.get(i, j));
    let mut raster = vec![false; w * h];
    for ci in 0..values.nx - 1 {
        for cj in 0..values.ny - 1 {
            let c = [sign(ci, cj), sign(ci + 1, cj), sign(ci + 1, cj + 1), sign(ci, cj + 1)];
            let positives = c.iter().filter(|&&s| s).count();
            let saddle = c[0] == c[2] && c[1] == c[3] && c[0] != c[1];
            let center = if saddle {
                is_positive(resolve(ci, cj))
            } else if positives != 2 {
                positives > 2
            } else {
                c[0]
            };
            for a in 0..SUB {
                for b in 0..SUB {
                    let s = if (1..=2).contains(&a) && (1..=2).contains(&b) {
                        center
                    } else {
                        sign(ci + (a >= 2) as usize, cj + (b >= 2) as usize)
                    };
                    raster[(ci * SUB + a) * h + cj * SUB + b] = s;
                }
            }
        }
    }

    // Domains.
    let mut seen = vec![false; w * h];
    let (mut pos, mut neg) = (0, 0);
    for start in 0..w * h {
        if seen[start] {
            continue;
        }
        let s = raster[start];
        if s {
            pos += 1;
        } else {
            neg += 1;
        }
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(p) = queue.pop_front() {
            let (a, b) = (p / h, p % h);
            let mut visit = |q: usize| {
                if !seen[q] && raster[q] == s {
                    seen[q] = true;
                    queue.push_back(q);
                }
            };
            if a > 0 {
                visit(p - h);
            }
            if a + 1 < w {
                visit(p + h);
            }
            if b > 0 {
                visit(p - 1);
            }
            if b + 1 < h {
                visit(p + 1);
            }
        }
    }

    // Cracks live on the lattice of sub-pixel corners, (w+1)×(h+1) vertices.
    let vid = |a: usize, b: usize| a * (h + 1) + b;
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); (w + 1) * (h + 1)];
    let mut link = |u: usize, v: usize| {
        adjacency[u].push(v);
        adjacency[v].push(u);
    };
    for a in 0..w {
        for b in 0..h {
            let s = raster[a * h + b];
            if a + 1 < w && raster[(a + 1) * h + b] != s {
                link(vid(a + 1, b), vid(a + 1, b + 1));
            }
            if b + 1 < h && raster[a * h + b + 1] != s {
                link(vid(a, b + 1), vid(a + 1, b + 1));
            }
        }
    }
    for (v, adj) in adjacency.iter().enumerate() {
        assert!(adj.len() != 4, "checkerboard vertex {v} in oracle raster");
    }
    let on_rim = |v: usize| {
        let (a, b) = (v / (h + 1), v % (h + 1));
        a == 0 || b == 0 || a == w || b == h
    };
    let mut visited = vec![false; adjacency.len()];
    let (mut total, mut compact) = (0, 0);
    for start in 0..adjacency.len() {
        if visited[start] || adjacency[start].is_empty() {
            continue;
        }
        total += 1;
        let mut touches = false;
        let mut stack = vec![start];
        visited[start] = true;
        while let Some(v) = stack.pop() {
            touches |= on_rim(v);
            for &u in &adjacency[v] {
                if !visited[u] {
                    visited[u] = true;
                    stack.push(u);
                }
            }
        }
        if !touches {
            compact += 1;
        }
    }

    OracleCount {
        zero_components: total,
        compact_zero_components: compact,
        positive_domains: pos,
        negative_domains: neg,
    }
}
