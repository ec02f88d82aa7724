//! Triangulations of the unit square and Lagrange node layouts.

mod dofs;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result};

pub use dofs::DofMap;

pub type Point = [f64; 2];

/// Tag carried by every boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Velocity is prescribed (Dirichlet).
    Wall,
    /// Natural (do-nothing) outflow boundary.
    Open,
}

impl BoundaryTag {
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Wall => 0,
            BoundaryTag::Open => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BoundaryTag::Wall),
            1 => Some(BoundaryTag::Open),
            _ => None,
        }
    }
}

/// Conforming triangulation of the unit square.
///
/// Triangles are counter-clockwise. After [`refine`](Mesh::refine), the
/// children of parent triangle `t` are `4t..4t + 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<([usize; 2], BoundaryTag)>,
    pub level: usize,
}

/// Unique edges of a mesh and the edge index of each local triangle edge.
///
/// Local edge `e` of a triangle joins local vertices `e` and `(e + 1) % 3`.
/// Edge endpoints are stored with the smaller vertex index first.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
    /// Number of triangles adjacent to each edge (1 or 2 in a valid mesh).
    pub multiplicity: Vec<u8>,
    lookup: BTreeMap<(usize, usize), usize>,
}

impl EdgeTable {
    pub fn new(triangles: &[[usize; 3]]) -> Self {
        let mut lookup = BTreeMap::new();
        let mut edges = Vec::new();
        let mut multiplicity = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in triangles {
            let mut te = [0; 3];
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    multiplicity.push(0u8);
                    edges.len() - 1
                });
                multiplicity[id] = multiplicity[id].saturating_add(1);
                te[e] = id;
            }
            triangle_edges.push(te);
        }
        Self {
            edges,
            triangle_edges,
            multiplicity,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&(a.min(b), a.max(b))).copied()
    }
}

const MAX_JITTER_RETRIES: usize = 4;

/// Structured criss-cross triangulation of `[0,1]²` with `n` squares per
/// side, interior vertices jittered by up to `perturbation·h` per
/// coordinate.
///
/// Diagonals alternate in a checkerboard, except that the four corner
/// squares always take the diagonal through the domain corner so that no
/// triangle has all three vertices on the boundary. If the jitter inverts a
/// triangle the amplitude is halved (same seed) a few times before giving up.
pub fn build_unit_square_mesh(n: usize, perturbation: f64, seed: u64) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::TooFewSubdivisions(n));
    }
    if !(0.0..=0.3).contains(&perturbation) {
        return Err(Error::BadPerturbation(perturbation));
    }
    let structured = structured_mesh(n);
    if perturbation == 0.0 {
        return Ok(structured);
    }
    let h = 1.0 / n as f64;
    let mut amplitude = perturbation;
    let mut worst = (0, 0.0);
    for _ in 0..=MAX_JITTER_RETRIES {
        let mut mesh = structured.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in 1..n {
            for i in 1..n {
                let v = &mut mesh.vertices[j * (n + 1) + i];
                v[0] += amplitude * h * symmetric_unit(&mut rng);
                v[1] += amplitude * h * symmetric_unit(&mut rng);
            }
        }
        worst = mesh.min_area();
        if worst.1 > 0.0 {
            return Ok(mesh);
        }
        amplitude *= 0.5;
    }
    Err(Error::InvertedTriangle {
        triangle: worst.0,
        area: worst.1,
    })
}

/// Uniform sample in [-1, 1).
fn symmetric_unit(rng: &mut ChaCha8Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

fn structured_mesh(n: usize) -> Mesh {
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints so boundary coordinates are exactly 0 or 1
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            let corner_slash = (i == 0 && j == 0) || (i == n - 1 && j == n - 1);
            let corner_backslash = (i == n - 1 && j == 0) || (i == 0 && j == n - 1);
            let slash = if corner_slash {
                true
            } else if corner_backslash {
                false
            } else {
                (i + j) % 2 == 0
            };
            if slash {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary_edges.push(([idx(i, 0), idx(i + 1, 0)], BoundaryTag::Wall));
        boundary_edges.push(([idx(n, i), idx(n, i + 1)], BoundaryTag::Wall));
        boundary_edges.push(([idx(i + 1, n), idx(i, n)], BoundaryTag::Wall));
        boundary_edges.push(([idx(0, i + 1), idx(0, i)], BoundaryTag::Wall));
    }
    Mesh {
        vertices,
        triangles,
        boundary_edges,
        level: 0,
    }
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_table(&self) -> EdgeTable {
        EdgeTable::new(&self.triangles)
    }

    /// Signed area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Index and value of the smallest signed triangle area.
    pub fn min_area(&self) -> (usize, f64) {
        (0..self.n_triangles())
            .map(|t| (t, self.area(t)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Retags every boundary edge on the side `x = 1` as [`BoundaryTag::Open`].
    pub fn with_open_right_side(mut self) -> Self {
        for (e, tag) in &mut self.boundary_edges {
            if self.vertices[e[0]][0] == 1.0 && self.vertices[e[1]][0] == 1.0 {
                *tag = BoundaryTag::Open;
            }
        }
        self
    }

    pub fn has_open_boundary(&self) -> bool {
        self.boundary_edges.iter().any(|(_, t)| *t == BoundaryTag::Open)
    }

    /// Checks orientation, edge multiplicities, boundary-edge consistency
    /// and that the triangles tile the unit square.
    pub fn validate(&self) -> Result<()> {
        let nv = self.n_vertices();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(alloc::format!(
                    "triangle {t} references a missing vertex"
                )));
            }
        }
        let (t, area) = self.min_area();
        if !(area > 0.0) && self.n_triangles() > 0 {
            return Err(Error::InvertedTriangle { triangle: t, area });
        }
        let edges = self.edge_table();
        let mut on_boundary = vec![false; edges.len()];
        for (e, _) in &self.boundary_edges {
            match edges.find(e[0], e[1]) {
                Some(id) if edges.multiplicity[id] == 1 && !on_boundary[id] => on_boundary[id] = true,
                _ => {
                    return Err(Error::InvalidMesh(alloc::format!(
                        "boundary edge ({}, {}) is not a free edge",
                        e[0],
                        e[1]
                    )))
                }
            }
        }
        for (id, &m) in edges.multiplicity.iter().enumerate() {
            let ok = if on_boundary[id] { m == 1 } else { m == 2 };
            if !ok {
                return Err(Error::InvalidMesh(alloc::format!(
                    "edge {:?} has {m} adjacent triangles",
                    edges.edges[id]
                )));
            }
        }
        let total = self.total_area();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMesh(alloc::format!("total area {total} != 1")));
        }
        Ok(())
    }

    /// Uniform red refinement: every triangle is split at its edge midpoints
    /// into four children, new vertex `V + e` sitting on edge `e`.
    pub fn refine(&self) -> Mesh {
        let edges = self.edge_table();
        let nv = self.n_vertices();
        let mut vertices = self.vertices.clone();
        vertices.reserve(edges.len());
        for &[a, b] in &edges.edges {
            let (p, q) = (self.vertices[a], self.vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
        let mut triangles = Vec::with_capacity(4 * self.n_triangles());
        for (tri, te) in self.triangles.iter().zip(&edges.triangle_edges) {
            let [v0, v1, v2] = *tri;
            let (m01, m12, m20) = (nv + te[0], nv + te[1], nv + te[2]);
            triangles.push([v0, m01, m20]);
            triangles.push([m01, v1, m12]);
            triangles.push([m20, m12, v2]);
            triangles.push([m01, m12, m20]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for &([a, b], tag) in &self.boundary_edges {
            let m = nv + edges.find(a, b).expect("boundary edge missing from edge table");
            boundary_edges.push(([a, m], tag));
            boundary_edges.push(([m, b], tag));
        }
        Mesh {
            vertices,
            triangles,
            boundary_edges,
            level: self.level + 1,
        }
    }

    /// Builds the node layout for Lagrange elements of degree `k`.
    pub fn lagrange_dof_layout(&self, k: usize) -> Result<DofMap> {
        DofMap::new(self, k)
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}
