//! Skyline (profile) LU factorization with reverse Cuthill-McKee ordering.
//!
//! The condensed HDG matrix couples face unknowns only through shared
//! elements, so a profile solver with a bandwidth-reducing ordering handles
//! desk-scale meshes directly. The profile is structurally symmetric; values
//! need not be (the Newton path produces unsymmetric matrices). Factorization
//! is Doolittle without pivoting, which is stable for the symmetric positive
//! definite matrices the diffusion problem produces.

use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of an undirected graph given as an
/// adjacency list. Returns `perm` with `perm[new_index] = old_index`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let degree = |v: usize| adjacency[v].len();

    // Process each connected component from a pseudo-peripheral vertex.
    for start in 0..n {
        if visited[start] {
            continue;
        }
        // Double BFS to find a far-away low-degree start.
        let component_start = {
            let far = bfs_far_vertex(adjacency, start);
            bfs_far_vertex(adjacency, far)
        };
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(component_start);
        visited[component_start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut neighbors: Vec<usize> = adjacency[v]
                .iter()
                .copied()
                .filter(|&u| !visited[u])
                .collect();
            neighbors.sort_by_key(|&u| (degree(u), u));
            for u in neighbors {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_far_vertex(adjacency: &[Vec<usize>], start: usize) -> usize {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    seen[start] = true;
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        last = v;
        let mut neighbors: Vec<usize> = adjacency[v]
            .iter()
            .copied()
            .filter(|&u| !seen[u])
            .collect();
        neighbors.sort_by_key(|&u| (adjacency[u].len(), u));
        for u in neighbors {
            seen[u] = true;
            queue.push_back(u);
        }
    }
    last
}

/// Skyline matrix with a structurally symmetric profile.
///
/// Row i stores lower-triangle entries for columns `low[i]..i`; column i
/// stores upper-triangle entries for rows `low[i]..i`; the diagonal is kept
/// separately.
pub struct SkylineMatrix {
    n: usize,
    low: Vec<usize>,
    ptr: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
    factored: bool,
}

impl SkylineMatrix {
    /// Allocate from the set of coupled index pairs (i, j), i != j.
    pub fn new(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut low: Vec<usize> = (0..n).collect();
        for (i, j) in pairs {
            let (hi, lo) = (i.max(j), i.min(j));
            low[hi] = low[hi].min(lo);
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + (i - low[i]);
        }
        let nnz = ptr[n];
        Self {
            n,
            low,
            ptr,
            lower: vec![0.0; nnz],
            upper: vec![0.0; nnz],
            diag: vec![0.0; n],
            factored: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn profile_len(&self) -> usize {
        self.lower.len()
    }

    /// Add `value` at (i, j). The pair must lie inside the profile.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(!self.factored, "matrix already factored");
        if i == j {
            self.diag[i] += value;
        } else if i > j {
            debug_assert!(j >= self.low[i]);
            self.lower[self.ptr[i] + (j - self.low[i])] += value;
        } else {
            debug_assert!(i >= self.low[j]);
            self.upper[self.ptr[j] + (i - self.low[j])] += value;
        }
    }

    fn l(&self, i: usize, k: usize) -> f64 {
        self.lower[self.ptr[i] + (k - self.low[i])]
    }

    fn u(&self, k: usize, j: usize) -> f64 {
        self.upper[self.ptr[j] + (k - self.low[j])]
    }

    /// In-place Doolittle LU within the profile.
    pub fn factorize(&mut self) -> Result<()> {
        assert!(!self.factored);
        for i in 0..self.n {
            let li = self.low[i];
            // Column i of U for rows r = low[i]..i.
            for r in li..i {
                let start = self.low[r].max(li);
                let mut sum = self.u(r, i);
                for k in start..r {
                    sum -= self.l(r, k) * self.u(k, i);
                }
                self.upper[self.ptr[i] + (r - li)] = sum;
            }
            // Row i of L for columns j = low[i]..i.
            for j in li..i {
                let start = self.low[j].max(li);
                let mut sum = self.l(i, j);
                for k in start..j {
                    sum -= self.l(i, k) * self.u(k, j);
                }
                if self.diag[j] == 0.0 {
                    return Err(Error::LinearAlgebra(format!("zero pivot at row {j}")));
                }
                self.lower[self.ptr[i] + (j - li)] = sum / self.diag[j];
            }
            // Diagonal pivot.
            let mut sum = self.diag[i];
            for k in li..i {
                sum -= self.l(i, k) * self.u(k, i);
            }
            if sum == 0.0 {
                return Err(Error::LinearAlgebra(format!("zero pivot at row {i}")));
            }
            self.diag[i] = sum;
        }
        self.factored = true;
        Ok(())
    }

    /// Solve LUx = b in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert!(self.factored, "solve before factorization");
        assert_eq!(b.len(), self.n);
        // Forward: L has unit diagonal.
        for i in 0..self.n {
            let li = self.low[i];
            let mut sum = b[i];
            for k in li..i {
                sum -= self.l(i, k) * b[k];
            }
            b[i] = sum;
        }
        // Backward, column-oriented so only the stored profile is touched.
        for j in (0..self.n).rev() {
            b[j] /= self.diag[j];
            let xj = b[j];
            for r in self.low[j]..j {
                b[r] -= self.u(r, j) * xj;
            }
        }
    }
}
