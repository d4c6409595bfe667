use clusterlr::lattice::{enumerate_clusters_up_to, is_connected, GraphJson, DEFAULT_CLUSTER_CAP};

use crate::config::RunConfig;
use crate::output::{num, Table};
use crate::{Outcome, RunError};

pub const CLUSTER_HEADER: [&str; 4] = ["m", "count", "brute_force", "cap"];

/// Brute force is only attempted up to this many vertices.
const BRUTE_FORCE_MAX: usize = 20;

/// Connected subsets of size `m` containing `root`, by scanning all subsets.
pub fn brute_force_counts(adj: &[Vec<usize>], root: usize, m_max: usize) -> Vec<usize> {
    let n = adj.len();
    let mut counts = vec![0usize; m_max + 1];
    for mask in 0u64..(1u64 << n) {
        if mask >> root & 1 == 0 {
            continue;
        }
        let size = mask.count_ones() as usize;
        if size > m_max {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        if is_connected(adj, &set) {
            counts[size] += 1;
        }
    }
    counts
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let model = cfg.model.as_ref().expect("checked");
    let g = model.lattice.build()?;
    let mut out = Outcome::default();
    if let Some(spec) = &cfg.clusters {
        if spec.root >= g.num_vertices() || spec.m_max == 0 {
            return Err(RunError::config("clusters.root must be a vertex and m_max at least 1"));
        }
        let levels = enumerate_clusters_up_to(g.adjacency(), spec.root, spec.m_max, DEFAULT_CLUSTER_CAP)?;
        let brute = (g.num_vertices() <= BRUTE_FORCE_MAX).then(|| brute_force_counts(g.adjacency(), spec.root, spec.m_max));
        let delta = g.max_neighbor_count() as f64;
        let mut table = Table::new(&CLUSTER_HEADER);
        for (k, level) in levels.iter().enumerate() {
            let m = k + 1;
            table.push(vec![
                m.to_string(),
                level.len().to_string(),
                brute.as_ref().map(|b| b[m].to_string()).unwrap_or_default(),
                num((std::f64::consts::E * delta).powi(m as i32)),
            ]);
        }
        out.tables.push((cfg.outputs.results.clone(), table));
    }
    let doc = serde_json::to_value(GraphJson::from(g)).map_err(RunError::io)?;
    out.documents.push(("lattice.json".into(), doc));
    Ok(out)
}
