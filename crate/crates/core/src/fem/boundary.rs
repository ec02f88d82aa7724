use alloc::vec;
use alloc::vec::Vec;

use super::space::MixedSpace;
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::{Error, Result};

/// Prescribed values on a sorted set of velocity unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub constrained_dofs: Vec<usize>,
    pub values: Vec<f64>,
}

impl BoundaryCondition {
    pub fn new(constrained_dofs: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if constrained_dofs.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: constrained_dofs.len(),
                actual: values.len(),
            });
        }
        let mut pairs: Vec<(usize, f64)> = constrained_dofs.into_iter().zip(values).collect();
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        Ok(Self {
            constrained_dofs: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Velocity prescribed by `g` at every wall node.
    pub fn from_velocity<G>(space: &MixedSpace, g: G) -> Self
    where
        G: Fn(f64, f64) -> [f64; 2],
    {
        let mut dofs = Vec::with_capacity(2 * space.velocity.wall_nodes.len());
        let mut values = Vec::with_capacity(dofs.capacity());
        for &node in &space.velocity.wall_nodes {
            let [x, y] = space.velocity.node_coords[node];
            let v = g(x, y);
            dofs.extend_from_slice(&[2 * node, 2 * node + 1]);
            values.extend_from_slice(&v);
        }
        Self {
            constrained_dofs: dofs,
            values,
        }
    }

    pub fn homogeneous(space: &MixedSpace) -> Self {
        Self::from_velocity(space, |_, _| [0.0, 0.0])
    }

    /// Full-length vector with the prescribed values and zeros elsewhere.
    pub fn lifting(&self, n: usize) -> Vec<f64> {
        let mut g = vec![0.0; n];
        for (&i, &v) in self.constrained_dofs.iter().zip(&self.values) {
            g[i] = v;
        }
        g
    }

    /// Complement of the constrained set in `0..n`.
    pub fn free_dofs(&self, n: usize) -> Vec<usize> {
        let mut constrained = vec![false; n];
        for &i in &self.constrained_dofs {
            constrained[i] = true;
        }
        (0..n).filter(|&i| !constrained[i]).collect()
    }
}

/// Symmetric elimination of Dirichlet unknowns.
///
/// Constrained rows and columns are zeroed with a unit diagonal, the
/// right-hand side of free rows receives `-A_fc g_c`, and constrained rows
/// carry the prescribed values, so a solve reproduces them exactly.
pub fn apply_dirichlet(matrix: &SparseMatrix, rhs: &[f64], bc: &BoundaryCondition) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = matrix.n_rows();
    if !matrix.is_square() {
        return Err(Error::NotSquare {
            rows: n,
            cols: matrix.n_cols(),
        });
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    if let Some(&bad) = bc.constrained_dofs.iter().find(|&&i| i >= n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad,
        });
    }
    let mut constrained = vec![false; n];
    for &i in &bc.constrained_dofs {
        constrained[i] = true;
    }
    let g = bc.lifting(n);
    let mut b = rhs.to_vec();
    let mut tb = TripletBuilder::with_capacity(n, n, matrix.nnz());
    for i in 0..n {
        if constrained[i] {
            tb.push(i, i, 1.0);
            b[i] = g[i];
            continue;
        }
        for (j, v) in matrix.row(i) {
            if constrained[j] {
                b[i] -= v * g[j];
            } else {
                tb.push(i, j, v);
            }
        }
    }
    Ok((tb.build(), b))
}
