//! Causal forests of factor sequences and irreducible paths.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::FactorGraph;
use crate::linalg::CMatrix;
use crate::operators::{HamiltonianSpec, LocalOperator};
use crate::scalar::{Real, C};

/// Default cap on the number of enumerated paths.
pub const DEFAULT_PATH_CAP: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Root,
    /// Factor id and its 1-based position in the sequence.
    Factor { factor: usize, step: usize },
    Target(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForestNode {
    pub kind: NodeKind,
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CausalForest {
    sequence: Vec<usize>,
    nodes: Vec<ForestNode>,
    targets: Vec<Option<usize>>,
}

impl CausalForest {
    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn nodes(&self) -> &[ForestNode] {
        &self.nodes
    }

    /// Number of factor nodes.
    pub fn num_factor_nodes(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Factor { .. }))
            .count()
    }

    pub fn contains_target(&self, i: usize) -> bool {
        self.targets.get(i).is_some_and(Option::is_some)
    }

    /// Every target region is present.
    pub fn is_causal(&self) -> bool {
        self.targets.iter().all(Option::is_some)
    }
}

/// A factor path `(X_1, …, X_l)` from `R` to the target region `target`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct IrreduciblePath {
    pub factors: Vec<usize>,
    pub target: usize,
}

impl IrreduciblePath {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `∏ ‖H_X‖` with `weights[X] = ‖H_X‖`.
    pub fn weight<R: Real>(&self, weights: &[R]) -> R {
        self.factors.iter().fold(R::one(), |acc, &f| acc * weights[f])
    }
}

fn intersects(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|x| b.contains(x))
}

fn subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.contains(x))
}

fn check_regions(g: &FactorGraph, r: &[usize], s_list: &[Vec<usize>]) -> Result<()> {
    for set in std::iter::once(r).chain(s_list.iter().map(Vec::as_slice)) {
        if let Some(&v) = set.iter().find(|&&v| v >= g.num_vertices()) {
            return Err(Error::UnknownVertex(v));
        }
    }
    for (i, s) in s_list.iter().enumerate() {
        if intersects(s, r) {
            return Err(Error::InvalidArgument(format!("target {i} overlaps R")));
        }
        if s_list[..i].iter().any(|t| intersects(s, t)) {
            return Err(Error::InvalidArgument(format!("target {i} overlaps another target")));
        }
    }
    Ok(())
}

/// Runs the causal-forest construction on the factor sequence `m` (factor
/// ids of `g`). `Ok(None)` is the empty forest: some factor met none of the
/// earlier elements.
pub fn build_causal_forest(
    g: &FactorGraph,
    m: &[usize],
    r: &[usize],
    s_list: &[Vec<usize>],
) -> Result<Option<CausalForest>> {
    check_regions(g, r, s_list)?;
    if let Some(&bad) = m.iter().find(|&&f| f >= g.factors().len()) {
        return Err(Error::InvalidArgument(format!("unknown factor id {bad}")));
    }
    let mut nodes = vec![ForestNode { kind: NodeKind::Root, parent: None }];
    let mut targets: Vec<Option<usize>> = vec![None; s_list.len()];
    // Element 0 is R, element n is M_n; node_of[n] is its tree node if any.
    let mut elements: Vec<&[usize]> = vec![r];
    let mut node_of: Vec<Option<usize>> = vec![Some(0)];
    for (idx, &f) in m.iter().enumerate() {
        let step = idx + 1;
        let x = g.factor(f);
        let Some(k) = elements.iter().position(|e| intersects(x, e)) else {
            return Ok(None);
        };
        let absorbed = elements.iter().any(|e| subset(x, e));
        let mut this_node = None;
        if !absorbed {
            // The earliest intersecting element is never absorbed itself.
            let parent = node_of[k].expect("earliest intersecting element has a node");
            nodes.push(ForestNode { kind: NodeKind::Factor { factor: f, step }, parent: Some(parent) });
            this_node = Some(nodes.len() - 1);
        }
        for (i, s) in s_list.iter().enumerate() {
            if targets[i].is_none() && intersects(x, s) {
                // An absorbed factor's absorber already touched S_i, so this
                // branch only runs for factors that own a node.
                let parent = this_node.or_else(|| {
                    elements.iter().zip(&node_of).find(|(e, _)| subset(x, e)).and_then(|(_, n)| *n)
                });
                nodes.push(ForestNode { kind: NodeKind::Target(i), parent });
                targets[i] = Some(nodes.len() - 1);
            }
        }
        elements.push(x);
        node_of.push(this_node);
    }
    Ok(Some(CausalForest { sequence: m.to_vec(), nodes, targets }))
}

/// The forest path from each target back to `R`, listed from the `R` side.
pub fn irreducible_paths(f: &CausalForest) -> Result<Vec<IrreduciblePath>> {
    if !f.is_causal() {
        return Err(Error::InvalidArgument("forest is not causal".into()));
    }
    let mut out = Vec::with_capacity(f.targets.len());
    for (i, node) in f.targets.iter().enumerate() {
        let mut factors = Vec::new();
        let mut cur = f.nodes[node.expect("causal")].parent;
        while let Some(c) = cur {
            match f.nodes[c].kind {
                NodeKind::Factor { factor, .. } => factors.push(factor),
                NodeKind::Root => break,
                NodeKind::Target(_) => unreachable!("targets are leaves"),
            }
            cur = f.nodes[c].parent;
        }
        factors.reverse();
        out.push(IrreduciblePath { factors, target: i });
    }
    Ok(out)
}

/// Every factor path that can occur as the irreducible path from `r` to `s`
/// inside `b`, with at most `max_len` factors.
///
/// A path `(X_1, …, X_l)` qualifies when consecutive factors intersect,
/// non-consecutive ones are disjoint, `X_1` meets `R` without lying inside
/// it, later factors avoid `R` and meet `B`, no factor lies inside its
/// predecessor, and only `X_l` meets `S`.
pub fn enumerate_irreducible_paths(
    g: &FactorGraph,
    r: &[usize],
    s: &[usize],
    b: &[usize],
    max_len: usize,
    cap: usize,
) -> Result<Vec<IrreduciblePath>> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    check_regions(g, r, &[s.to_vec(), Vec::new()])?;
    if let Some(&v) = b.iter().find(|&&v| v >= g.num_vertices()) {
        return Err(Error::UnknownVertex(v));
    }
    if intersects(b, r) {
        return Err(Error::InvalidArgument("B must be disjoint from R".into()));
    }
    let mut out = Vec::new();
    let starts: Vec<usize> = (0..g.factors().len())
        .filter(|&f| {
            let x = g.factor(f);
            intersects(x, r) && !subset(x, r)
        })
        .collect();
    let mut path = Vec::new();
    for f in starts {
        path.push(f);
        extend_path(g, r, s, b, max_len, cap, &mut path, &mut out)?;
        path.pop();
    }
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extend_path(
    g: &FactorGraph,
    r: &[usize],
    s: &[usize],
    b: &[usize],
    max_len: usize,
    cap: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<IrreduciblePath>,
) -> Result<()> {
    let last = g.factor(*path.last().expect("nonempty path"));
    if intersects(last, s) {
        if out.len() >= cap {
            return Err(Error::CapExceeded { what: "irreducible paths", needed: cap + 1, cap });
        }
        out.push(IrreduciblePath { factors: path.clone(), target: 0 });
        return Ok(());
    }
    if path.len() == max_len {
        return Ok(());
    }
    let candidates = g.factors_touching(last);
    for f in candidates {
        let x = g.factor(f);
        if path.contains(&f)
            || intersects(x, r)
            || !intersects(x, b)
            || subset(x, last)
            || path[..path.len() - 1].iter().any(|&p| intersects(x, g.factor(p)))
        {
            continue;
        }
        path.push(f);
        extend_path(g, r, s, b, max_len, cap, path, out)?;
        path.pop();
    }
    Ok(())
}

/// Pairs the causal-forest verdict for `m` with the norm of
/// `∏ ad_{O_i} L_{M_n} ⋯ L_{M_1} |A)`, where factor ids index `h.terms()`.
pub fn term_vanishing_check<R: Real>(
    h: &HamiltonianSpec<R>,
    m: &[usize],
    r: &[usize],
    s_list: &[Vec<usize>],
    a: &LocalOperator<R>,
    o_list: &[LocalOperator<R>],
) -> Result<(Option<CausalForest>, R)> {
    let g = h.interaction_graph(None)?;
    if !subset(a.support(), r) {
        return Err(Error::InvalidArgument("A must be supported in R".into()));
    }
    if o_list.len() != s_list.len() {
        return Err(Error::InvalidArgument("need one probe operator per target".into()));
    }
    for (o, s) in o_list.iter().zip(s_list) {
        if !subset(o.support(), s) {
            return Err(Error::InvalidArgument("probe operator must be supported in its target".into()));
        }
    }
    let forest = build_causal_forest(&g, m, r, s_list)?;
    let mut region: Vec<usize> = r.to_vec();
    region.extend(s_list.iter().flatten());
    region.extend(m.iter().flat_map(|&f| g.factor(f).iter().copied()));
    region.sort_unstable();
    region.dedup();
    if region.len() > crate::operators::DEFAULT_EVOLVE_CAP {
        return Err(Error::CapExceeded {
            what: "vanishing-check region qubits",
            needed: region.len(),
            cap: crate::operators::DEFAULT_EVOLVE_CAP,
        });
    }
    let i_unit = C::new(R::zero(), R::one());
    let mut acc: CMatrix<R> = a.embed(&region)?;
    for &f in m {
        let hx = h.terms()[f].op.embed(&region)?;
        acc = hx.commutator(&acc).scale(i_unit);
    }
    for o in o_list {
        acc = o.embed(&region)?.commutator(&acc);
    }
    Ok((forest, acc.spectral_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::chain;

    fn factor_id(g: &FactorGraph, x: &[usize]) -> usize {
        g.factors().iter().position(|f| f == x).unwrap()
    }

    #[test]
    fn chain_forest_trace() {
        let g = chain(4).unwrap();
        let m: Vec<usize> = [[0, 1], [1, 2], [2, 3]].iter().map(|x| factor_id(&g, x)).collect();
        let f = build_causal_forest(&g, &m, &[0], &[vec![3]]).unwrap().unwrap();
        assert!(f.is_causal());
        let paths = irreducible_paths(&f).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].factors, m);
    }

    #[test]
    fn disconnected_first_factor_gives_empty() {
        let g = chain(4).unwrap();
        let m = [factor_id(&g, &[2, 3])];
        assert!(build_causal_forest(&g, &m, &[0], &[vec![3]]).unwrap().is_none());
    }

    #[test]
    fn absorbed_factor_adds_no_node() {
        let g = chain(4).unwrap();
        let m = [factor_id(&g, &[0, 1])];
        let f = build_causal_forest(&g, &m, &[0, 1], &[vec![3]]).unwrap().unwrap();
        assert_eq!(f.num_factor_nodes(), 0);
        assert!(!f.is_causal());
        assert!(irreducible_paths(&f).is_err());
    }

    #[test]
    fn repeated_factor_is_absorbed() {
        let g = chain(4).unwrap();
        let a = factor_id(&g, &[0, 1]);
        let b = factor_id(&g, &[1, 2]);
        let f = build_causal_forest(&g, &[a, b, a, b], &[0], &[vec![2]]).unwrap().unwrap();
        assert_eq!(f.num_factor_nodes(), 2);
        assert_eq!(irreducible_paths(&f).unwrap()[0].factors, vec![a, b]);
    }

    #[test]
    fn direct_attachment_has_length_one() {
        let g = chain(3).unwrap();
        let m = [factor_id(&g, &[0, 1])];
        let f = build_causal_forest(&g, &m, &[0], &[vec![1]]).unwrap().unwrap();
        assert_eq!(irreducible_paths(&f).unwrap()[0].len(), 1);
    }

    #[test]
    fn shared_first_factor_on_star() {
        // Star: centre 0 with legs 1..4; the factor {0,1,2} touches both targets.
        let g = FactorGraph::new(5, vec![vec![0, 1, 2], vec![0, 3], vec![0, 4], vec![1, 3]], 1).unwrap();
        let m = [0usize];
        let f = build_causal_forest(&g, &m, &[0], &[vec![1], vec![2]]).unwrap().unwrap();
        let paths = irreducible_paths(&f).unwrap();
        assert_eq!(paths[0].factors, vec![0]);
        assert_eq!(paths[1].factors, vec![0]);
    }

    #[test]
    fn enumeration_examples() {
        let g = chain(4).unwrap();
        let paths = enumerate_irreducible_paths(&g, &[0, 1], &[3], &[2, 3], 4, 100).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].factors, vec![factor_id(&g, &[1, 2]), factor_id(&g, &[2, 3])]);
        // B cut off from R.
        let g6 = chain(6).unwrap();
        assert!(enumerate_irreducible_paths(&g6, &[0], &[5], &[3, 4, 5], 6, 100).unwrap().is_empty());
        // Too short.
        assert!(enumerate_irreducible_paths(&g, &[0], &[3], &[1, 2, 3], 2, 100).unwrap().is_empty());
        assert!(enumerate_irreducible_paths(&g, &[0], &[3], &[0, 3], 2, 100).is_err());
    }
}
