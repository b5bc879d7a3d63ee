mod common;

use common::*;
use fgan_cd::admg::{m_separated, Admg, GraphError};

#[test]
fn agrees_with_path_enumeration() {
    let mut rng = rng(31);
    for trial in 0..50 {
        let d = 2 + trial % 4;
        let g = random_admg(&mut rng, d, 0.4, 0.3);
        for i in 0..d {
            for j in i + 1..d {
                let rest: Vec<usize> = (0..d).filter(|&v| v != i && v != j).collect();
                for z in subsets(&rest) {
                    let fast = m_separated(&g, i, j, &z).unwrap();
                    let slow = brute_m_separated(&g, i, j, &z);
                    assert_eq!(fast, slow, "graph {g:?}, query {i} {j} | {z:?}");
                    assert_eq!(fast, m_separated(&g, j, i, &z).unwrap());
                }
            }
        }
    }
}

#[test]
fn bidirected_edge_is_never_separated() {
    let g = Admg::from_edges(3, &[(0, 2)], &[(0, 1)]).unwrap();
    for z in [vec![], vec![2]] {
        assert!(!m_separated(&g, 0, 1, &z).unwrap());
    }
}

#[test]
fn invalid_queries() {
    let g = Admg::empty(3);
    assert_eq!(m_separated(&g, 0, 0, &[]), Err(GraphError::InvalidQuery));
    assert_eq!(m_separated(&g, 0, 1, &[1]), Err(GraphError::InvalidQuery));
    assert!(matches!(m_separated(&g, 0, 5, &[]), Err(GraphError::InvalidVertex { .. })));
}
