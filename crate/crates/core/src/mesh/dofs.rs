use alloc::vec;
use alloc::vec::Vec;

use super::{BoundaryTag, EdgeTable, Mesh, Point};
use crate::{Error, Result};

/// Global numbering of the Lagrange nodes of degree `k` on a mesh.
///
/// Vertices come first, then edge nodes (`k - 1` per edge, edge `e` owning
/// `V + (k-1)e ..`), then the interior node of each cell for `k = 3`. Local
/// node order within a cell is: the three vertices, the nodes of local edges
/// 0-1, 1-2, 2-0 (walking each edge from its first local vertex), then the
/// interior node. The barycentric positions are given by
/// [`DofMap::reference_nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub degree: usize,
    pub node_coords: Vec<Point>,
    cell_nodes: Vec<usize>,
    /// Sorted nodes lying on ∂Ω.
    pub boundary_nodes: Vec<usize>,
    /// Sorted nodes lying on a [`BoundaryTag::Wall`] edge.
    pub wall_nodes: Vec<usize>,
    pub n_nodes: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, k: usize) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(Error::UnsupportedDegree(k));
        }
        let edges = mesh.edge_table();
        let nv = mesh.n_vertices();
        let ne = edges.len();
        let nt = mesh.n_triangles();
        let per_edge = k - 1;
        let per_cell = if k == 3 { 1 } else { 0 };
        let n_nodes = nv + per_edge * ne + per_cell * nt;
        let nloc = Self::local_count(k);

        let mut cell_nodes = Vec::with_capacity(nloc * nt);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            cell_nodes.extend_from_slice(tri);
            for e in 0..3 {
                let g = edges.triangle_edges[t][e];
                let forward = tri[e] < tri[(e + 1) % 3];
                match per_edge {
                    1 => cell_nodes.push(nv + g),
                    2 if forward => cell_nodes.extend_from_slice(&[nv + 2 * g, nv + 2 * g + 1]),
                    2 => cell_nodes.extend_from_slice(&[nv + 2 * g + 1, nv + 2 * g]),
                    _ => {}
                }
            }
            if per_cell == 1 {
                cell_nodes.push(nv + 2 * ne + t);
            }
        }

        let mut node_coords = vec![[0.0; 2]; n_nodes];
        let reference = Self::reference_nodes(k);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
            for (l, bary) in reference.iter().enumerate() {
                let node = cell_nodes[t * nloc + l];
                node_coords[node] = if l < 3 {
                    p[l]
                } else {
                    [
                        bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                        bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
                    ]
                };
            }
        }

        let (boundary_nodes, wall_nodes) = boundary_node_sets(mesh, &edges, k, n_nodes);
        Ok(Self {
            degree: k,
            node_coords,
            cell_nodes,
            boundary_nodes,
            wall_nodes,
            n_nodes,
        })
    }

    /// Nodes per cell, `(k+1)(k+2)/2`.
    pub fn local_count(k: usize) -> usize {
        (k + 1) * (k + 2) / 2
    }

    pub fn nodes_per_cell(&self) -> usize {
        Self::local_count(self.degree)
    }

    pub fn n_cells(&self) -> usize {
        self.cell_nodes.len() / self.nodes_per_cell()
    }

    pub fn cell_nodes(&self, t: usize) -> &[usize] {
        let n = self.nodes_per_cell();
        &self.cell_nodes[t * n..(t + 1) * n]
    }

    /// Barycentric coordinates of the local nodes, in local order.
    pub fn reference_nodes(k: usize) -> Vec<[f64; 3]> {
        let mut nodes = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        match k {
            2 => nodes.extend_from_slice(&[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
            3 => {
                let (a, b) = (2.0 / 3.0, 1.0 / 3.0);
                nodes.extend_from_slice(&[
                    [a, b, 0.0],
                    [b, a, 0.0],
                    [0.0, a, b],
                    [0.0, b, a],
                    [b, 0.0, a],
                    [a, 0.0, b],
                    [b, b, b],
                ]);
            }
            _ => {}
        }
        nodes
    }
}

fn boundary_node_sets(mesh: &Mesh, edges: &EdgeTable, k: usize, n_nodes: usize) -> (Vec<usize>, Vec<usize>) {
    let nv = mesh.n_vertices();
    let mut tag: Vec<Option<BoundaryTag>> = vec![None; n_nodes];
    let mut mark = |node: usize, t: BoundaryTag| {
        // a node touching any wall edge is a wall node
        tag[node] = match (tag[node], t) {
            (Some(BoundaryTag::Wall), _) | (_, BoundaryTag::Wall) => Some(BoundaryTag::Wall),
            _ => Some(t),
        };
    };
    for &([a, b], t) in &mesh.boundary_edges {
        mark(a, t);
        mark(b, t);
        if let Some(g) = edges.find(a, b) {
            for j in 0..k - 1 {
                mark(nv + (k - 1) * g + j, t);
            }
        }
    }
    let boundary = (0..n_nodes).filter(|&i| tag[i].is_some()).collect();
    let wall = (0..n_nodes).filter(|&i| tag[i] == Some(BoundaryTag::Wall)).collect();
    (boundary, wall)
}
