//! Factor graphs, lattice geometry and connected-cluster enumeration.
//!
//! Vertices are the contiguous ids `0..n`. A factor is the support of one
//! Hamiltonian term; two vertices are adjacent when some factor contains
//! both, and the factor distance between two vertices is the number of
//! factors on the shortest chain joining them.

mod clusters;
mod tiling;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use clusters::{
    enumerate_clusters_up_to, enumerate_connected_subsets, is_connected, Cluster,
    DEFAULT_CLUSTER_CAP,
};
pub use tiling::{minimal_cluster_order, tile_boxes, BoxTiling};

/// Largest `d·log₂(L)` accepted by the square-lattice constructors.
pub const DEFAULT_MEMORY_GUARD_BITS: u32 = 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "GraphJson", try_from = "GraphJson")]
pub struct FactorGraph {
    n: usize,
    factors: Vec<Vec<usize>>,
    incidence: Vec<Vec<usize>>,
    adjacency: Vec<Vec<usize>>,
    dimension: usize,
    side: Option<usize>,
    coordinates: Option<Vec<Vec<i64>>>,
    boundary: Boundary,
}

/// Wire format of a [`FactorGraph`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub dimension: usize,
    pub side: Option<usize>,
    pub vertices: Vec<usize>,
    pub factors: Vec<Vec<usize>>,
    pub coordinates: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub periodic: bool,
}

impl From<FactorGraph> for GraphJson {
    fn from(g: FactorGraph) -> Self {
        GraphJson {
            dimension: g.dimension,
            side: g.side,
            vertices: (0..g.n).collect(),
            factors: g.factors,
            coordinates: g.coordinates,
            periodic: g.boundary == Boundary::Periodic,
        }
    }
}

impl TryFrom<GraphJson> for FactorGraph {
    type Error = Error;

    fn try_from(j: GraphJson) -> Result<Self> {
        if j.vertices.iter().enumerate().any(|(i, &v)| i != v) {
            return Err(Error::InvalidArgument(
                "vertex ids must be the contiguous range 0..n".into(),
            ));
        }
        let mut g = FactorGraph::new(j.vertices.len(), j.factors, j.dimension)?;
        g.side = j.side;
        if let Some(coords) = j.coordinates {
            g = g.with_coordinates(coords)?;
        }
        if j.periodic {
            g.boundary = Boundary::Periodic;
        }
        Ok(g)
    }
}

impl FactorGraph {
    /// Builds a graph on `n` vertices. Factors are sorted and deduplicated
    /// internally; the graph must be connected.
    pub fn new(n: usize, factors: Vec<Vec<usize>>, dimension: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
        }
        let mut clean: Vec<Vec<usize>> = Vec::with_capacity(factors.len());
        for mut f in factors {
            if f.is_empty() {
                return Err(Error::InvalidArgument("empty factor".into()));
            }
            f.sort_unstable();
            f.dedup();
            if let Some(&bad) = f.iter().find(|&&v| v >= n) {
                return Err(Error::UnknownVertex(bad));
            }
            clean.push(f);
        }
        let mut incidence = vec![Vec::new(); n];
        for (id, f) in clean.iter().enumerate() {
            for &v in f {
                incidence[v].push(id);
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for f in &clean {
            for &u in f {
                for &v in f {
                    if u != v {
                        adjacency[u].push(v);
                    }
                }
            }
        }
        for a in adjacency.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let g = FactorGraph {
            n,
            factors: clean,
            incidence,
            adjacency,
            dimension,
            side: None,
            coordinates: None,
            boundary: Boundary::Open,
        };
        if !g.is_connected_graph() {
            return Err(Error::InvalidArgument("factor graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn with_coordinates(mut self, coords: Vec<Vec<i64>>) -> Result<Self> {
        if coords.len() != self.n || coords.iter().any(|c| c.len() != self.dimension) {
            return Err(Error::Shape(format!(
                "need {} coordinate tuples of length {}",
                self.n, self.dimension
            )));
        }
        self.coordinates = Some(coords);
        Ok(self)
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn factors(&self) -> &[Vec<usize>] {
        &self.factors
    }

    pub fn factor(&self, id: usize) -> &[usize] {
        &self.factors[id]
    }

    /// Factor ids containing `v`.
    pub fn factors_at(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Vertex adjacency lists (shared-factor relation).
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn side(&self) -> Option<usize> {
        self.side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn coordinates(&self) -> Option<&[Vec<i64>]> {
        self.coordinates.as_deref()
    }

    /// Largest factor size.
    pub fn max_body(&self) -> usize {
        self.factors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Maximum number of neighbours of a vertex.
    pub fn max_neighbor_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Maximum number of factors meeting at one vertex.
    pub fn max_vertex_incidence(&self) -> usize {
        self.incidence.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Maximum number of other factors intersecting a factor.
    pub fn max_factor_degree(&self) -> usize {
        (0..self.factors.len())
            .map(|f| self.factors_touching(&self.factors[f]).iter().filter(|&&g| g != f).count())
            .max()
            .unwrap_or(0)
    }

    /// Degree constant used by path-counting bounds: the number of choices
    /// for the next factor on a path never exceeds this.
    pub fn degree_bound(&self) -> usize {
        self.max_factor_degree().max(self.max_vertex_incidence())
    }

    /// Ids of factors intersecting `set` (sorted).
    pub fn factors_touching(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = set
            .iter()
            .filter(|&&v| v < self.n)
            .flat_map(|&v| self.incidence[v].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn is_connected_graph(&self) -> bool {
        self.bfs(&[0]).iter().all(|d| d.is_some())
    }

    fn check_vertices(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&v| v >= self.n) {
            Some(&v) => Err(Error::UnknownVertex(v)),
            None => Ok(()),
        }
    }

    fn bfs(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued vertices have distances");
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Distances from every vertex to the nearest vertex of `sources`.
    pub fn distances_from(&self, sources: &[usize]) -> Result<Vec<usize>> {
        self.check_vertices(sources)?;
        if sources.is_empty() {
            return Err(Error::InvalidArgument("empty source set".into()));
        }
        Ok(self
            .bfs(sources)
            .into_iter()
            .map(|d| d.expect("graph is connected"))
            .collect())
    }

    /// Factor distance between vertex sets; `0` iff they intersect.
    pub fn factor_distance(&self, x: &[usize], y: &[usize]) -> Result<usize> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidArgument("factor_distance needs nonempty sets".into()));
        }
        self.check_vertices(y)?;
        let dist = self.distances_from(x)?;
        Ok(y.iter().map(|&v| dist[v]).min().expect("nonempty"))
    }

    /// Geodesic distance between two vertices.
    pub fn distance(&self, u: usize, v: usize) -> Result<usize> {
        self.factor_distance(&[u], &[v])
    }

    /// All-pairs geodesic distances.
    pub fn distance_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|v| self.distances_from(&[v]).expect("valid vertex"))
            .collect()
    }

    /// The ball `B_R(v)` in ascending order.
    pub fn ball(&self, v: usize, radius: usize) -> Result<Vec<usize>> {
        let dist = self.distances_from(&[v])?;
        Ok((0..self.n).filter(|&u| dist[u] <= radius).collect())
    }

    /// Vertices of `set` adjacent to some vertex outside it.
    pub fn boundary_of(&self, set: &[usize]) -> Result<Vec<usize>> {
        self.check_vertices(set)?;
        let mut inside = vec![false; self.n];
        for &v in set {
            inside[v] = true;
        }
        let mut out: Vec<usize> = set
            .iter()
            .copied()
            .filter(|&v| self.adjacency[v].iter().any(|&w| !inside[w]))
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// `(B_R(v), |∂B_R(v)|)`.
    pub fn ball_and_boundary(&self, v: usize, radius: usize) -> Result<(Vec<usize>, usize)> {
        let ball = self.ball(v, radius)?;
        let boundary = self.boundary_of(&ball)?.len();
        Ok((ball, boundary))
    }

    /// Number of pairwise factors with exactly one endpoint in `set`.
    pub fn crossing_bonds(&self, set: &[usize]) -> usize {
        let mut inside = vec![false; self.n];
        for &v in set {
            if v < self.n {
                inside[v] = true;
            }
        }
        self.factors
            .iter()
            .filter(|f| f.len() == 2 && inside[f[0]] != inside[f[1]])
            .count()
    }

    /// Pairwise factors with exactly one endpoint in `set`.
    pub fn crossing_bond_list(&self, set: &[usize]) -> Vec<(usize, usize)> {
        let mut inside = vec![false; self.n];
        for &v in set {
            if v < self.n {
                inside[v] = true;
            }
        }
        self.factors
            .iter()
            .filter(|f| f.len() == 2 && inside[f[0]] != inside[f[1]])
            .map(|f| (f[0], f[1]))
            .collect()
    }

    /// Index of the vertex at `coords` on a square lattice built by
    /// [`build_square_lattice`].
    pub fn vertex_at(&self, coords: &[i64]) -> Option<usize> {
        let side = self.side? as i64;
        if coords.len() != self.dimension {
            return None;
        }
        let mut idx = 0i64;
        for &c in coords {
            let c = match self.boundary {
                Boundary::Periodic => c.rem_euclid(side),
                Boundary::Open if (0..side).contains(&c) => c,
                Boundary::Open => return None,
            };
            idx = idx * side + c;
        }
        Some(idx as usize)
    }
}

/// `d`-dimensional hypercubic lattice of side `l` with open boundaries and
/// one factor per vertex pair at lattice distance `≤ range`.
pub fn build_square_lattice(d: usize, l: usize, range: usize) -> Result<FactorGraph> {
    build_square_lattice_with(d, l, range, Boundary::Open)
}

pub fn build_square_lattice_with(
    d: usize,
    l: usize,
    range: usize,
    boundary: Boundary,
) -> Result<FactorGraph> {
    if d == 0 {
        return Err(Error::InvalidArgument("need d >= 1".into()));
    }
    build_grid(&vec![l; d], range, boundary)
}

/// Open hypercubic grid with per-axis side lengths, e.g. `[3, 4]`.
pub fn build_rectangular_lattice(sides: &[usize], range: usize) -> Result<FactorGraph> {
    build_grid(sides, range, Boundary::Open)
}

fn build_grid(sides: &[usize], range: usize, boundary: Boundary) -> Result<FactorGraph> {
    let d = sides.len();
    if d == 0 || sides.iter().any(|&l| l < 2) || range == 0 {
        return Err(Error::InvalidArgument(format!(
            "need d >= 1, every side >= 2, range >= 1 (got sides={sides:?}, range={range})"
        )));
    }
    let bits: f64 = sides.iter().map(|&l| (l as f64).log2()).sum();
    if bits > DEFAULT_MEMORY_GUARD_BITS as f64 {
        return Err(Error::CapExceeded {
            what: "lattice vertices (log2)",
            needed: bits.ceil() as usize,
            cap: DEFAULT_MEMORY_GUARD_BITS as usize,
        });
    }
    let n: usize = sides.iter().product();
    let coords: Vec<Vec<i64>> = (0..n)
        .map(|mut idx| {
            let mut c = vec![0i64; d];
            for k in (0..d).rev() {
                c[k] = (idx % sides[k]) as i64;
                idx /= sides[k];
            }
            c
        })
        .collect();
    let periodic = boundary == Boundary::Periodic;
    let axis_dist = |k: usize, a: i64, b: i64| -> usize {
        let diff = (a - b).unsigned_abs() as usize;
        if periodic {
            diff.min(sides[k] - diff)
        } else {
            diff
        }
    };
    let mut factors = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let dist: usize = (0..d).map(|k| axis_dist(k, coords[u][k], coords[v][k])).sum();
            if dist <= range {
                factors.push(vec![u, v]);
            }
        }
    }
    let mut g = FactorGraph::new(n, factors, d)?.with_coordinates(coords)?;
    g.side = sides.iter().all(|&l| l == sides[0]).then_some(sides[0]);
    g.boundary = boundary;
    Ok(g)
}

/// Open chain `0 - 1 - ... - (n-1)`.
pub fn chain(n: usize) -> Result<FactorGraph> {
    build_square_lattice(1, n, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_lattice_counts() {
        let g = build_square_lattice(1, 4, 1).unwrap();
        assert_eq!((g.num_vertices(), g.factors().len()), (4, 3));
        let g = build_square_lattice(2, 3, 1).unwrap();
        assert_eq!((g.num_vertices(), g.factors().len()), (9, 12));
        let g = build_square_lattice(2, 4, 1).unwrap();
        assert_eq!(g.ball(0, 1).unwrap().len(), 3);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(build_square_lattice(0, 4, 1).is_err());
        assert!(build_square_lattice(1, 1, 1).is_err());
        assert!(build_square_lattice(1, 4, 0).is_err());
        assert!(matches!(
            build_square_lattice(3, 1 << 10, 1),
            Err(Error::CapExceeded { .. })
        ));
        assert!(FactorGraph::new(3, vec![vec![0, 1]], 1).is_err(), "disconnected");
        assert!(FactorGraph::new(2, vec![vec![0, 5]], 1).is_err());
    }

    #[test]
    fn periodic_ring_has_wraparound_bond() {
        let g = build_square_lattice_with(1, 5, 1, Boundary::Periodic).unwrap();
        assert_eq!(g.factors().len(), 5);
        assert_eq!(g.distance(0, 4).unwrap(), 1);
        assert_eq!(g.vertex_at(&[-1]), Some(4));
    }

    #[test]
    fn factor_distance_examples() {
        let g = chain(4).unwrap();
        assert_eq!(g.factor_distance(&[2], &[2]).unwrap(), 0);
        assert_eq!(g.factor_distance(&[1], &[2]).unwrap(), 1);
        assert_eq!(g.factor_distance(&[0], &[3]).unwrap(), 3);
        assert_eq!(g.factor_distance(&[0, 1], &[3]).unwrap(), 2);
        assert!(matches!(g.factor_distance(&[0], &[9]), Err(Error::UnknownVertex(9))));
        assert!(g.factor_distance(&[], &[1]).is_err());
    }

    #[test]
    fn balls_and_boundaries() {
        let g = chain(7).unwrap();
        assert_eq!(g.ball_and_boundary(3, 0).unwrap(), (vec![3], 1));
        let (ball, b) = g.ball_and_boundary(3, 2).unwrap();
        assert_eq!((ball.len(), b), (5, 2));
        let grid = build_square_lattice(2, 5, 1).unwrap();
        let center = grid.vertex_at(&[2, 2]).unwrap();
        let (ball, b) = grid.ball_and_boundary(center, 1).unwrap();
        assert_eq!((ball.len(), b), (5, 4));
    }

    #[test]
    fn ball_volume_scales_like_r_to_the_d() {
        let g = build_square_lattice(2, 21, 1).unwrap();
        let c = g.vertex_at(&[10, 10]).unwrap();
        for r in 1..=8usize {
            let vol = g.ball(c, r).unwrap().len() as f64;
            // Manhattan ball: 2r² + 2r + 1.
            assert_eq!(vol, (2 * r * r + 2 * r + 1) as f64);
            let ratio = vol / (r * r) as f64;
            assert!((2.0..=5.0).contains(&ratio));
        }
    }

    #[test]
    fn degrees_of_chain_and_grid() {
        let g = chain(5).unwrap();
        assert_eq!(g.max_neighbor_count(), 2);
        assert_eq!(g.max_vertex_incidence(), 2);
        assert_eq!(g.max_factor_degree(), 2);
        let grid = build_square_lattice(2, 4, 1).unwrap();
        assert_eq!(grid.max_neighbor_count(), 4);
        assert_eq!(grid.max_factor_degree(), 6);
    }

    #[test]
    fn crossing_bonds_of_interval() {
        let ring = build_square_lattice_with(1, 8, 1, Boundary::Periodic).unwrap();
        assert_eq!(ring.crossing_bonds(&[2, 3, 4]), 2);
        assert_eq!(ring.crossing_bonds(&(0..8).collect::<Vec<_>>()), 0);
    }

    #[test]
    fn json_shape() {
        let g = chain(3).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"dimension\":1"));
        assert!(s.contains("\"factors\":[[0,1],[1,2]]"));
        let back: FactorGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"dimension":1,"side":null,"vertices":[0,1],"factors":[[0,1]],"coordinates":null,"extra":1}"#;
        assert!(serde_json::from_str::<FactorGraph>(bad).is_err());
    }
}
