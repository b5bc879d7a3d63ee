//! d-separation on DAGs and m-separation on ADMGs via latent augmentation.

use super::{Admg, GraphError};
use std::collections::VecDeque;

/// A DAG over the observed vertices `0..n_observed` followed by one latent
/// vertex per bidirected edge of the source ADMG.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatentDag {
    n_observed: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl LatentDag {
    /// A DAG with no latent vertices. Fails if `edges` form a cycle.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut dag = Self {
            n_observed: n,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        };
        for &(i, j) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(GraphError::InvalidVertex { vertex: v, d: n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            dag.push_edge(i, j);
        }
        if !dag.is_acyclic() {
            return Err(GraphError::CyclicDirectedPart);
        }
        Ok(dag)
    }

    /// Replaces each bidirected edge `i <-> j` by `L -> i`, `L -> j`.
    pub fn from_admg(g: &Admg) -> Result<Self, GraphError> {
        if !g.is_acyclic() {
            return Err(GraphError::CyclicDirectedPart);
        }
        let d = g.d();
        let bidirected = g.bidirected_edges();
        let n = d + bidirected.len();
        let mut dag = Self {
            n_observed: d,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        };
        for (i, j) in g.directed_edges() {
            dag.push_edge(i, j);
        }
        for (k, (i, j)) in bidirected.into_iter().enumerate() {
            let latent = d + k;
            dag.push_edge(latent, i);
            dag.push_edge(latent, j);
        }
        Ok(dag)
    }

    fn push_edge(&mut self, i: usize, j: usize) {
        if !self.children[i].contains(&j) {
            self.children[i].push(j);
            self.parents[j].push(i);
        }
    }

    fn is_acyclic(&self) -> bool {
        let n = self.n_vertices();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        seen == n
    }

    pub fn n_vertices(&self) -> usize {
        self.parents.len()
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn n_latent(&self) -> usize {
        self.n_vertices() - self.n_observed
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn n_edges(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    /// All edges `(parent, child)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self
            .children
            .iter()
            .enumerate()
            .flat_map(|(p, cs)| cs.iter().map(move |&c| (p, c)))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Bayes-ball reachability: true iff `i` and `j` are d-separated by `z`.
pub fn d_separated(g: &LatentDag, i: usize, j: usize, z: &[usize]) -> Result<bool, GraphError> {
    let n = g.n_vertices();
    for &v in z.iter().chain([&i, &j]) {
        if v >= n {
            return Err(GraphError::InvalidVertex { vertex: v, d: n });
        }
    }
    if i == j || z.contains(&i) || z.contains(&j) {
        return Err(GraphError::InvalidQuery);
    }

    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    // Z together with its ancestors.
    let mut anc_z = in_z.clone();
    let mut stack: Vec<usize> = z.to_vec();
    while let Some(v) = stack.pop() {
        for &p in g.parents(v) {
            if !anc_z[p] {
                anc_z[p] = true;
                stack.push(p);
            }
        }
    }

    // (vertex, arrived_from_child)
    let mut visited = vec![[false; 2]; n];
    let mut queue = VecDeque::from([(i, true)]);
    while let Some((v, up)) = queue.pop_front() {
        let slot = usize::from(up);
        if visited[v][slot] {
            continue;
        }
        visited[v][slot] = true;
        if v == j && !in_z[v] {
            return Ok(false);
        }
        if up {
            if !in_z[v] {
                queue.extend(g.parents(v).iter().map(|&p| (p, true)));
                queue.extend(g.children(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !in_z[v] {
                queue.extend(g.children(v).iter().map(|&c| (c, false)));
            }
            if anc_z[v] {
                queue.extend(g.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    Ok(true)
}

/// m-separation of observed vertices, evaluated on the latent DAG.
pub fn m_separated(g: &Admg, i: usize, j: usize, z: &[usize]) -> Result<bool, GraphError> {
    let d = g.d();
    for &v in z.iter().chain([&i, &j]) {
        if v >= d {
            return Err(GraphError::InvalidVertex { vertex: v, d });
        }
    }
    let dag = LatentDag::from_admg(g)?;
    d_separated(&dag, i, j, z)
}
