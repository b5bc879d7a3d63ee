//! FCI with an exact m-separation oracle.
//!
//! Orientation uses unshielded colliders followed by rules R1-R4 to a
//! fixpoint. R5-R7 only matter under selection bias and R8-R10 are not
//! applied, so tails are only introduced by R1 and R4.

use super::{Mark, Pag};
use crate::admg::{m_separated, Admg, GraphError};
use std::collections::{BTreeMap, VecDeque};

/// First separating set found for each non-adjacent pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SepsetTable {
    sets: BTreeMap<(usize, usize), Vec<usize>>,
}

impl SepsetTable {
    fn key(i: usize, j: usize) -> (usize, usize) {
        (i.min(j), i.max(j))
    }

    pub fn insert(&mut self, i: usize, j: usize, z: Vec<usize>) {
        self.sets.insert(Self::key(i, j), z);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&[usize]> {
        self.sets.get(&Self::key(i, j)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Calls `visit` on every subset of `items`, by increasing size and in
/// lexicographic order within a size, until it returns `Some`.
fn find_subset<T>(
    items: &[usize],
    mut visit: impl FnMut(&[usize]) -> Result<Option<T>, GraphError>,
) -> Result<Option<T>, GraphError> {
    let n = items.len();
    for size in 0..=n {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let subset: Vec<usize> = idx.iter().map(|&k| items[k]).collect();
            if let Some(found) = visit(&subset)? {
                return Ok(Some(found));
            }
            let Some(pos) = (0..size).rev().find(|&p| idx[p] < n - size + p) else {
                break;
            };
            idx[pos] += 1;
            for k in pos + 1..size {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }
    Ok(None)
}

pub fn fci_oracle(g: &Admg) -> Result<Pag, GraphError> {
    fci_oracle_with_sepsets(g).map(|(pag, _)| pag)
}

pub fn fci_oracle_with_sepsets(g: &Admg) -> Result<(Pag, SepsetTable), GraphError> {
    if !g.is_acyclic() {
        return Err(GraphError::CyclicDirectedPart);
    }
    let d = g.d();
    let mut pag = Pag::empty(d);
    let mut sepsets = SepsetTable::default();

    for i in 0..d {
        for j in i + 1..d {
            let rest: Vec<usize> = (0..d).filter(|&v| v != i && v != j).collect();
            let sep = find_subset(&rest, |z| {
                Ok(m_separated(g, i, j, z)?.then(|| z.to_vec()))
            })?;
            match sep {
                Some(z) => sepsets.insert(i, j, z),
                None => pag.set_edge(i, j, Mark::Circle, Mark::Circle),
            }
        }
    }

    orient_colliders(&mut pag, &sepsets);
    while apply_rules_once(&mut pag, &sepsets) {}
    Ok((pag, sepsets))
}

fn orient_colliders(pag: &mut Pag, sepsets: &SepsetTable) {
    let d = pag.d();
    for k in 0..d {
        let nbrs: Vec<usize> = pag.neighbors(k).collect();
        for (a, &i) in nbrs.iter().enumerate() {
            for &j in &nbrs[a + 1..] {
                if pag.adjacent(i, j) {
                    continue;
                }
                let sep = sepsets.get(i, j).unwrap_or(&[]);
                if !sep.contains(&k) {
                    pag.set_mark(i, k, Mark::Arrow);
                    pag.set_mark(j, k, Mark::Arrow);
                }
            }
        }
    }
}

fn is_parent(pag: &Pag, a: usize, b: usize) -> bool {
    pag.mark(a, b) == Mark::Arrow && pag.mark(b, a) == Mark::Tail
}

/// One pass of R1-R4; returns whether any mark changed.
fn apply_rules_once(pag: &mut Pag, sepsets: &SepsetTable) -> bool {
    let d = pag.d();
    let mut changed = false;

    // R1: a *-> b o-* c, a and c non-adjacent  =>  b -> c
    for b in 0..d {
        for a in 0..d {
            if !pag.adjacent(a, b) || pag.mark(a, b) != Mark::Arrow {
                continue;
            }
            for c in 0..d {
                if c == a || !pag.adjacent(b, c) || pag.adjacent(a, c) {
                    continue;
                }
                if pag.mark(c, b) == Mark::Circle {
                    pag.set_mark(c, b, Mark::Tail);
                    pag.set_mark(b, c, Mark::Arrow);
                    changed = true;
                }
            }
        }
    }

    // R2: a -> b *-> c or a *-> b -> c, with a *-o c  =>  a *-> c
    for a in 0..d {
        for c in 0..d {
            if a == c || !pag.adjacent(a, c) || pag.mark(a, c) != Mark::Circle {
                continue;
            }
            let fires = (0..d).any(|b| {
                b != a
                    && b != c
                    && pag.adjacent(a, b)
                    && pag.adjacent(b, c)
                    && ((is_parent(pag, a, b) && pag.mark(b, c) == Mark::Arrow)
                        || (pag.mark(a, b) == Mark::Arrow && is_parent(pag, b, c)))
            });
            if fires {
                pag.set_mark(a, c, Mark::Arrow);
                changed = true;
            }
        }
    }

    // R3: a *-> b <-* c, a *-o t o-* c, a and c non-adjacent, t *-o b  =>  t *-> b
    for b in 0..d {
        for t in 0..d {
            if t == b || !pag.adjacent(t, b) || pag.mark(t, b) != Mark::Circle {
                continue;
            }
            let fires = (0..d).any(|a| {
                (a + 1..d).any(|c| {
                    a != b
                        && c != b
                        && a != t
                        && c != t
                        && !pag.adjacent(a, c)
                        && pag.adjacent(a, b)
                        && pag.adjacent(c, b)
                        && pag.mark(a, b) == Mark::Arrow
                        && pag.mark(c, b) == Mark::Arrow
                        && pag.adjacent(a, t)
                        && pag.adjacent(c, t)
                        && pag.mark(a, t) == Mark::Circle
                        && pag.mark(c, t) == Mark::Circle
                })
            });
            if fires {
                pag.set_mark(t, b, Mark::Arrow);
                changed = true;
            }
        }
    }

    // R4: discriminating path <t, ..., a, b, c> for b with b o-* c
    for b in 0..d {
        for c in 0..d {
            if b == c || !pag.adjacent(b, c) || pag.mark(c, b) != Mark::Circle {
                continue;
            }
            if let Some((t, a)) = discriminating_path(pag, b, c) {
                let sep = sepsets.get(t, c).unwrap_or(&[]);
                if sep.contains(&b) {
                    pag.set_mark(c, b, Mark::Tail);
                    pag.set_mark(b, c, Mark::Arrow);
                } else {
                    pag.set_mark(a, b, Mark::Arrow);
                    pag.set_mark(b, a, Mark::Arrow);
                    pag.set_mark(b, c, Mark::Arrow);
                    pag.set_mark(c, b, Mark::Arrow);
                }
                changed = true;
            }
        }
    }

    changed
}

/// Searches for `<t, ..., a, b, c>` where every vertex strictly between `t`
/// and `b` is a collider on the path and a parent of `c`, and `t` is not
/// adjacent to `c`. Returns `(t, a)`.
fn discriminating_path(pag: &Pag, b: usize, c: usize) -> Option<(usize, usize)> {
    let d = pag.d();
    for a in 0..d {
        if a == b
            || a == c
            || !pag.adjacent(a, b)
            || !pag.adjacent(a, c)
            || !is_parent(pag, a, c)
            || pag.mark(b, a) != Mark::Arrow
        {
            continue;
        }
        let mut visited = vec![false; d];
        visited[b] = true;
        visited[c] = true;
        visited[a] = true;
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            for w in 0..d {
                if visited[w] || !pag.adjacent(w, v) || pag.mark(w, v) != Mark::Arrow {
                    continue;
                }
                if !pag.adjacent(w, c) {
                    return Some((w, a));
                }
                if is_parent(pag, w, c) && pag.mark(v, w) == Mark::Arrow {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    None
}
