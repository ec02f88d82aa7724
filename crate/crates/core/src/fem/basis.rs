use alloc::vec;
use alloc::vec::Vec;

use super::quadrature::TriangleRule;
use crate::mesh::{DofMap, Point};
use crate::{Error, Result};

/// Values of the degree-`k` Lagrange basis at barycentric point `l`, in
/// [`DofMap`] local order.
pub fn lagrange_values(k: usize, l: [f64; 3], out: &mut [f64]) {
    let [a, b, c] = l;
    match k {
        1 => out[..3].copy_from_slice(&l),
        2 => {
            out[0] = a * (2.0 * a - 1.0);
            out[1] = b * (2.0 * b - 1.0);
            out[2] = c * (2.0 * c - 1.0);
            out[3] = 4.0 * a * b;
            out[4] = 4.0 * b * c;
            out[5] = 4.0 * c * a;
        }
        3 => {
            let v = |x: f64| 0.5 * x * (3.0 * x - 1.0) * (3.0 * x - 2.0);
            // node near `x` on the edge joining x and y
            let e = |x: f64, y: f64| 4.5 * x * y * (3.0 * x - 1.0);
            out[0] = v(a);
            out[1] = v(b);
            out[2] = v(c);
            out[3] = e(a, b);
            out[4] = e(b, a);
            out[5] = e(b, c);
            out[6] = e(c, b);
            out[7] = e(c, a);
            out[8] = e(a, c);
            out[9] = 27.0 * a * b * c;
        }
        _ => unreachable!("degree checked by caller"),
    }
}

/// Partial derivatives of the basis with respect to the three barycentric
/// coordinates, treated as independent variables.
pub fn lagrange_barycentric_gradients(k: usize, l: [f64; 3], out: &mut [[f64; 3]]) {
    let [a, b, c] = l;
    match k {
        1 => {
            out[0] = [1.0, 0.0, 0.0];
            out[1] = [0.0, 1.0, 0.0];
            out[2] = [0.0, 0.0, 1.0];
        }
        2 => {
            out[0] = [4.0 * a - 1.0, 0.0, 0.0];
            out[1] = [0.0, 4.0 * b - 1.0, 0.0];
            out[2] = [0.0, 0.0, 4.0 * c - 1.0];
            out[3] = [4.0 * b, 4.0 * a, 0.0];
            out[4] = [0.0, 4.0 * c, 4.0 * b];
            out[5] = [4.0 * c, 0.0, 4.0 * a];
        }
        3 => {
            let dv = |x: f64| 0.5 * (27.0 * x * x - 18.0 * x + 2.0);
            // d/dx and d/dy of 9/2 x y (3x - 1)
            let dex = |x: f64, y: f64| 4.5 * y * (6.0 * x - 1.0);
            let dey = |x: f64, _y: f64| 4.5 * x * (3.0 * x - 1.0);
            out[0] = [dv(a), 0.0, 0.0];
            out[1] = [0.0, dv(b), 0.0];
            out[2] = [0.0, 0.0, dv(c)];
            out[3] = [dex(a, b), dey(a, b), 0.0];
            out[4] = [dey(b, a), dex(b, a), 0.0];
            out[5] = [0.0, dex(b, c), dey(b, c)];
            out[6] = [0.0, dey(c, b), dex(c, b)];
            out[7] = [dey(c, a), 0.0, dex(c, a)];
            out[8] = [dex(a, c), 0.0, dey(a, c)];
            out[9] = [27.0 * b * c, 27.0 * a * c, 27.0 * a * b];
        }
        _ => unreachable!("degree checked by caller"),
    }
}

/// Basis values and barycentric gradients tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub degree: usize,
    pub n_local: usize,
    /// `values[q * n_local + i]`
    pub values: Vec<f64>,
    /// `grads[q * n_local + i]`
    pub grads: Vec<[f64; 3]>,
}

impl Tabulation {
    pub fn new(k: usize, rule: &TriangleRule) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(Error::UnsupportedDegree(k));
        }
        let n_local = DofMap::local_count(k);
        let mut values = vec![0.0; rule.len() * n_local];
        let mut grads = vec![[0.0; 3]; rule.len() * n_local];
        for (q, &p) in rule.points.iter().enumerate() {
            lagrange_values(k, p, &mut values[q * n_local..(q + 1) * n_local]);
            lagrange_barycentric_gradients(k, p, &mut grads[q * n_local..(q + 1) * n_local]);
        }
        Ok(Self {
            degree: k,
            n_local,
            values,
            grads,
        })
    }

    #[inline]
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n_local + i]
    }

    /// Physical gradient of basis `i` at point `q` given the cell's
    /// barycentric gradients.
    #[inline]
    pub fn gradient(&self, q: usize, i: usize, geo: &CellGeometry) -> [f64; 2] {
        let g = self.grads[q * self.n_local + i];
        let d = &geo.grad_lambda;
        [
            g[0] * d[0][0] + g[1] * d[1][0] + g[2] * d[2][0],
            g[0] * d[0][1] + g[1] * d[1][1] + g[2] * d[2][1],
        ]
    }
}

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let two_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let s = 1.0 / two_area;
        let grad_lambda = [
            [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
            [(p2[1] - p0[1]) * s, (p0[0] - p2[0]) * s],
            [(p0[1] - p1[1]) * s, (p1[0] - p0[0]) * s],
        ];
        Self {
            vertices,
            area: 0.5 * two_area,
            grad_lambda,
        }
    }

    pub fn point(&self, l: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.vertices;
        [
            l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
            l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
        ]
    }
}
