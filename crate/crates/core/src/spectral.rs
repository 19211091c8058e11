//! Hermitian eigendecomposition split over the connected blocks of a matrix.
//!
//! Generators that conserve an excitation number are block diagonal in the
//! Fock basis; the blocks are found from the nonzero pattern and diagonalized
//! independently, so a 1681-dimensional `O²` costs 41 small eigenproblems.

use nalgebra::{DMatrix, DVector};

use crate::C64;

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    eigenvalues: Vec<f64>,
    vectors: DMatrix<C64>,
}

#[derive(Clone, Debug)]
pub struct Spectral {
    dim: usize,
    blocks: Vec<Block>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Index sets of the connected components of the nonzero pattern of `m`.
pub(crate) fn connected_blocks(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != C64::from(0.0) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

impl Spectral {
    /// Diagonalizes `h`, which the caller guarantees is Hermitian.
    pub fn new(h: &DMatrix<C64>) -> Self {
        let dim = h.nrows();
        let blocks = connected_blocks(h)
            .into_iter()
            .map(|indices| {
                let k = indices.len();
                let sub = DMatrix::from_fn(k, k, |i, j| h[(indices[i], indices[j])]);
                let eig = sub.symmetric_eigen();
                Block {
                    indices,
                    eigenvalues: eig.eigenvalues.iter().copied().collect(),
                    vectors: eig.eigenvectors,
                }
            })
            .collect();
        Self { dim, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.blocks.iter().flat_map(|b| b.eigenvalues.iter().copied()).collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `f(H) v`.
    pub fn apply_fn(&self, v: &DVector<C64>, f: impl Fn(f64) -> C64) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        for b in &self.blocks {
            let sub = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| v[i]));
            let mut coeffs = b.vectors.ad_mul(&sub);
            for (c, &e) in coeffs.iter_mut().zip(&b.eigenvalues) {
                *c *= f(e);
            }
            let back = &b.vectors * coeffs;
            for (k, &i) in b.indices.iter().enumerate() {
                out[i] = back[k];
            }
        }
        out
    }

    /// `e^{−iHt} v`.
    pub fn evolve(&self, v: &DVector<C64>, t: f64) -> DVector<C64> {
        self.apply_fn(v, |e| C64::from_polar(1.0, -e * t))
    }

    /// The dense matrix `f(H)`.
    pub fn matrix_fn(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let k = b.indices.len();
            let scaled = DMatrix::from_fn(k, k, |i, j| b.vectors[(i, j)] * f(b.eigenvalues[j]));
            let sub = scaled * b.vectors.adjoint();
            for (bi, &i) in b.indices.iter().enumerate() {
                for (bj, &j) in b.indices.iter().enumerate() {
                    out[(i, j)] = sub[(bi, bj)];
                }
            }
        }
        out
    }
}
