use crate::admg::Admg;
use crate::gan::GeneratorParams;
use crate::gradeng::Tensor;

/// Thresholded graph plus the number of cycle-breaking deletions.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub graph: Admg,
    pub repairs: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Edge probabilities `sigmoid(A)`.
pub fn edge_probabilities(logits: &Tensor) -> Tensor {
    logits.map(sigmoid)
}

fn reaches(adj: &[Vec<bool>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend((0..adj.len()).filter(|&w| adj[v][w] && !seen[w]));
    }
    false
}

/// Thresholds `sigmoid(A_B)` and the upper triangle of `sigmoid(A_Σ)` at
/// `delta`. While the directed part is cyclic, the cycle edge with the
/// smallest probability is deleted; ties go to the lowest `(i, j)`.
pub fn extract_structure(params: &GeneratorParams, delta: f64) -> Extraction {
    let d = params.d();
    let p_b = edge_probabilities(&params.a_b);
    let p_s = edge_probabilities(&params.a_sigma);
    let mut adj: Vec<Vec<bool>> = (0..d)
        .map(|i| (0..d).map(|j| i != j && p_b[(i, j)] > delta).collect())
        .collect();

    let mut repairs = 0;
    loop {
        let weakest = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| adj[i][j] && reaches(&adj, j, i))
            .min_by(|&a, &b| p_b[a].total_cmp(&p_b[b]).then(a.cmp(&b)));
        let Some((i, j)) = weakest else { break };
        adj[i][j] = false;
        repairs += 1;
    }

    let mut graph = Admg::empty(d);
    for i in 0..d {
        for j in 0..d {
            if adj[i][j] {
                graph.add_directed(i, j).expect("indices in range");
            }
            if i < j && p_s[(i, j)] > delta {
                graph.add_bidirected(i, j).expect("indices in range");
            }
        }
    }
    Extraction { graph, repairs }
}

/// `h` of the thresholded `sigmoid(A_B)`, as a binary matrix.
pub fn hard_penalty(params: &GeneratorParams, delta: f64) -> f64 {
    let d = params.d();
    let p_b = edge_probabilities(&params.a_b);
    let w = Tensor::from_fn(d, d, |i, j| if i != j && p_b[(i, j)] > delta { 1.0 } else { 0.0 });
    crate::admg::acyclicity_value(&w).unwrap_or(f64::INFINITY)
}
