use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::{Boundary, Cluster, FactorGraph};
use crate::error::{Error, Result};

/// Partition of a coordinate-embedded graph into axis-aligned boxes.
#[derive(Clone, Debug, Serialize)]
pub struct BoxTiling {
    side: usize,
    dimension: usize,
    box_of_vertex: Vec<usize>,
    members: Vec<Vec<usize>>,
    coords: Vec<Vec<i64>>,
    adjacency: Vec<Vec<usize>>,
    anchor: usize,
}

/// Tiles `g` with cubes of side `r`; the anchor box contains `anchor_vertex`.
///
/// Boxes touching the lattice edge may be partial. Two boxes are adjacent
/// when their box coordinates differ by at most one along every axis
/// (cyclically on periodic lattices).
pub fn tile_boxes(g: &FactorGraph, r: usize, anchor_vertex: usize) -> Result<BoxTiling> {
    if r == 0 {
        return Err(Error::InvalidArgument("box side must be at least 1".into()));
    }
    if anchor_vertex >= g.num_vertices() {
        return Err(Error::UnknownVertex(anchor_vertex));
    }
    let coords = g
        .coordinates()
        .ok_or_else(|| Error::InvalidArgument("tiling needs vertex coordinates".into()))?;
    let d = g.dimension();
    let mins: Vec<i64> = (0..d).map(|k| coords.iter().map(|c| c[k]).min().unwrap_or(0)).collect();
    let maxs: Vec<i64> = (0..d).map(|k| coords.iter().map(|c| c[k]).max().unwrap_or(0)).collect();
    let ri = r as i64;
    let per_axis: Vec<i64> = (0..d).map(|k| (maxs[k] - mins[k]) / ri + 1).collect();

    let mut index: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (v, c) in coords.iter().enumerate() {
        let key: Vec<i64> = (0..d).map(|k| (c[k] - mins[k]) / ri).collect();
        index.entry(key).or_default().push(v);
    }
    let box_coords: Vec<Vec<i64>> = index.keys().cloned().collect();
    let members: Vec<Vec<usize>> = index.into_values().collect();
    let mut box_of_vertex = vec![0; g.num_vertices()];
    for (b, vs) in members.iter().enumerate() {
        for &v in vs {
            box_of_vertex[v] = b;
        }
    }

    let periodic = g.boundary() == Boundary::Periodic;
    let near = |a: i64, b: i64, n: i64| -> bool {
        let diff = (a - b).abs();
        diff <= 1 || (periodic && n > 2 && diff == n - 1)
    };
    let adjacency: Vec<Vec<usize>> = (0..box_coords.len())
        .map(|a| {
            (0..box_coords.len())
                .filter(|&b| {
                    b != a && (0..d).all(|k| near(box_coords[a][k], box_coords[b][k], per_axis[k]))
                })
                .collect()
        })
        .collect();

    Ok(BoxTiling {
        side: r,
        dimension: d,
        anchor: box_of_vertex[anchor_vertex],
        box_of_vertex,
        members,
        coords: box_coords,
        adjacency,
    })
}

impl BoxTiling {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_boxes(&self) -> usize {
        self.members.len()
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn box_of(&self, v: usize) -> usize {
        self.box_of_vertex[v]
    }

    /// Vertices of box `b`, ascending.
    pub fn members(&self, b: usize) -> &[usize] {
        &self.members[b]
    }

    pub fn box_coords(&self, b: usize) -> &[i64] {
        &self.coords[b]
    }

    pub fn box_at(&self, coords: &[i64]) -> Option<usize> {
        self.coords.iter().position(|c| c.as_slice() == coords)
    }

    /// Coarse adjacency lists.
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// Union of the vertices of every box in `cluster`, ascending.
    pub fn vertices_of(&self, cluster: &Cluster) -> Vec<usize> {
        let mut out: Vec<usize> =
            cluster.ids().iter().flat_map(|&b| self.members[b].iter().copied()).collect();
        out.sort_unstable();
        out
    }

    /// Errors if some factor of `g` touches two boxes that are not coarse
    /// neighbours.
    pub fn check_factors(&self, factors: &[Vec<usize>]) -> Result<()> {
        for f in factors {
            let mut boxes: Vec<usize> = f.iter().map(|&v| self.box_of_vertex[v]).collect();
            boxes.sort_unstable();
            boxes.dedup();
            for (i, &a) in boxes.iter().enumerate() {
                for &b in &boxes[i + 1..] {
                    if !self.adjacency[a].contains(&b) {
                        return Err(Error::Validity(format!(
                            "factor {f:?} spans non-adjacent boxes {a} and {b}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

const STEINER_TERMINAL_CAP: usize = 16;

/// Size of the smallest connected box set containing every box in `g_set`.
///
/// Exact Steiner computation (Dreyfus-Wagner) on the coarse graph with unit
/// edge lengths; a tree with `e` edges spans `e + 1` boxes.
pub fn minimal_cluster_order(tiling: &BoxTiling, g_set: &[usize]) -> Result<usize> {
    let mut terms = g_set.to_vec();
    terms.sort_unstable();
    terms.dedup();
    if terms.is_empty() {
        return Err(Error::InvalidArgument("minimal cluster of an empty set".into()));
    }
    let n = tiling.num_boxes();
    if let Some(&b) = terms.iter().find(|&&b| b >= n) {
        return Err(Error::UnknownVertex(b));
    }
    if terms.len() > STEINER_TERMINAL_CAP {
        return Err(Error::CapExceeded {
            what: "Steiner terminals",
            needed: terms.len(),
            cap: STEINER_TERMINAL_CAP,
        });
    }
    let adj = tiling.adjacency();
    let dist: Vec<Vec<usize>> = (0..n).map(|s| bfs(adj, s)).collect();
    let root = terms[0];
    let rest = &terms[1..];
    let k = rest.len();
    if k == 0 {
        return Ok(1);
    }
    let full = (1usize << k) - 1;
    let mut dp = vec![vec![usize::MAX; n]; full + 1];
    for (i, &t) in rest.iter().enumerate() {
        dp[1 << i] = dist[t].clone();
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        let mut best = vec![usize::MAX; n];
        for u in 0..n {
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                let (a, b) = (dp[sub][u], dp[mask ^ sub][u]);
                if a != usize::MAX && b != usize::MAX {
                    best[u] = best[u].min(a + b);
                }
                sub = (sub - 1) & mask;
            }
        }
        for v in 0..n {
            dp[mask][v] = (0..n)
                .filter(|&u| best[u] != usize::MAX && dist[u][v] != usize::MAX)
                .map(|u| best[u] + dist[u][v])
                .min()
                .unwrap_or(usize::MAX);
        }
    }
    match dp[full][root] {
        usize::MAX => Err(Error::InvalidArgument("boxes are not mutually reachable".into())),
        edges => Ok(edges + 1),
    }
}

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}
