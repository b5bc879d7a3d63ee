//! Partial ancestral graphs: oracle FCI conversion and PAG-level metrics.

mod fci;
mod format;
mod metrics;

pub use fci::{fci_oracle, fci_oracle_with_sepsets, SepsetTable};
pub use format::{parse_pag, serialize_pag};
pub use metrics::{arrowhead_f1, shd, skeleton_f1, MetricError, Metrics};

/// Edge-end mark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    None,
    Circle,
    Arrow,
    Tail,
}

impl Mark {
    pub fn symbol(self) -> char {
        match self {
            Mark::None => '.',
            Mark::Circle => 'c',
            Mark::Arrow => 'a',
            Mark::Tail => 't',
        }
    }
}

/// `marks[i][j]` is the mark at `j` on the edge between `i` and `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pag {
    d: usize,
    marks: Vec<Mark>,
}

impl Pag {
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            marks: vec![Mark::None; d * d],
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Mark at `j` on the edge `i - j`.
    pub fn mark(&self, i: usize, j: usize) -> Mark {
        self.marks[i * self.d + j]
    }

    pub(crate) fn set_mark(&mut self, i: usize, j: usize, m: Mark) {
        self.marks[i * self.d + j] = m;
    }

    /// Sets both ends of the edge `i - j`: `at_i` at `i`, `at_j` at `j`.
    pub fn set_edge(&mut self, i: usize, j: usize, at_i: Mark, at_j: Mark) {
        assert!(i != j && i < self.d && j < self.d, "invalid edge {i}-{j}");
        assert_eq!(at_i == Mark::None, at_j == Mark::None, "half-removed edge {i}-{j}");
        self.set_mark(j, i, at_i);
        self.set_mark(i, j, at_j);
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.set_edge(i, j, Mark::None, Mark::None);
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.mark(i, j) != Mark::None
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.d).filter(move |&w| self.adjacent(v, w))
    }

    /// Unordered adjacent pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let d = self.d;
        (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacent(i, j))
            .collect()
    }

    pub fn arrowhead_count(&self) -> usize {
        self.marks.iter().filter(|&&m| m == Mark::Arrow).count()
    }
}
