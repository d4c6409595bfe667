use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Projected-count cap used when callers do not supply their own.
pub const DEFAULT_CLUSTER_CAP: usize = 20_000_000;

/// A set of node ids in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cluster(Vec<usize>);

impl Cluster {
    pub fn new(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Cluster(ids)
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn is_subset_of(&self, other: &Cluster) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn is_connected(&self, adj: &[Vec<usize>]) -> bool {
        is_connected(adj, &self.0)
    }
}

impl From<Vec<usize>> for Cluster {
    fn from(ids: Vec<usize>) -> Self {
        Cluster::new(ids)
    }
}

/// Whether `set` induces a connected subgraph. The empty set is not.
pub fn is_connected(adj: &[Vec<usize>], set: &[usize]) -> bool {
    let Some(&start) = set.first() else {
        return false;
    };
    if set.iter().any(|&v| v >= adj.len()) {
        return false;
    }
    let mut inside = vec![false; adj.len()];
    for &v in set {
        inside[v] = true;
    }
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut reached = 1;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if inside[w] && !seen[w] {
                seen[w] = true;
                reached += 1;
                queue.push_back(w);
            }
        }
    }
    let mut distinct = set.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    reached == distinct.len()
}

fn projected_count(adj: &[Vec<usize>], m: usize) -> f64 {
    let delta = adj.iter().map(Vec::len).max().unwrap_or(0).max(1) as f64;
    (delta * std::f64::consts::E).powi(m as i32)
}

fn check_args(adj: &[Vec<usize>], root: usize, m: usize, cap: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("cluster size must be at least 1".into()));
    }
    if root >= adj.len() {
        return Err(Error::UnknownVertex(root));
    }
    let projected = projected_count(adj, m);
    if projected > cap as f64 {
        return Err(Error::CapExceeded {
            what: "connected subsets",
            needed: projected.min(usize::MAX as f64) as usize,
            cap,
        });
    }
    Ok(())
}

// Redelmeier growth: every connected set containing the root is reached by
// exactly one branch, because a node popped from `untried` stays marked for
// the remaining siblings.
fn grow(
    adj: &[Vec<usize>],
    max: usize,
    current: &mut Vec<usize>,
    untried: Vec<usize>,
    marked: &mut [bool],
    levels: &mut [Vec<Cluster>],
) {
    levels[current.len() - 1].push(Cluster::new(current.clone()));
    if current.len() == max {
        return;
    }
    let mut untried = untried;
    while let Some(w) = untried.pop() {
        let mut added = Vec::new();
        for &u in &adj[w] {
            if !marked[u] {
                marked[u] = true;
                added.push(u);
            }
        }
        let mut next = untried.clone();
        next.extend_from_slice(&added);
        current.push(w);
        grow(adj, max, current, next, marked, levels);
        current.pop();
        for u in added {
            marked[u] = false;
        }
    }
}

/// Connected subsets of every size `1..=m_max` containing `root`, grouped by
/// size and sorted lexicographically within each level.
pub fn enumerate_clusters_up_to(
    adj: &[Vec<usize>],
    root: usize,
    m_max: usize,
    cap: usize,
) -> Result<Vec<Vec<Cluster>>> {
    check_args(adj, root, m_max, cap)?;
    let mut marked = vec![false; adj.len()];
    marked[root] = true;
    let mut untried = Vec::new();
    for &u in &adj[root] {
        if !marked[u] {
            marked[u] = true;
            untried.push(u);
        }
    }
    let mut levels = vec![Vec::new(); m_max];
    grow(adj, m_max, &mut vec![root], untried, &mut marked, &mut levels);
    for level in levels.iter_mut() {
        level.sort_unstable();
    }
    Ok(levels)
}

/// Connected subsets of size exactly `m` containing `root`.
pub fn enumerate_connected_subsets(
    adj: &[Vec<usize>],
    root: usize,
    m: usize,
    cap: usize,
) -> Result<Vec<Cluster>> {
    let mut levels = enumerate_clusters_up_to(adj, root, m, cap)?;
    Ok(levels.pop().unwrap_or_default())
}
