use alloc::vec;
use alloc::vec::Vec;

use super::basis::{CellGeometry, Tabulation};
use super::quadrature::TriangleRule;
use super::space::MixedSpace;
use crate::mesh::{DofMap, Mesh};
use crate::{Error, Result};

fn geometry(mesh: &Mesh, t: usize) -> CellGeometry {
    let [a, b, c] = mesh.triangles[t];
    CellGeometry::new([mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]])
}

/// Load vector `F_i = ∫ f·φ_i` with the assembly quadrature.
pub fn assemble_load<F>(space: &MixedSpace, f: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> [f64; 2],
{
    let rule = TriangleRule::exact_to(space.quadrature_degree());
    let tab = Tabulation::new(space.velocity_degree(), &rule).expect("valid degree");
    let mut load = vec![0.0; space.n_velocity()];
    for t in 0..space.mesh.n_triangles() {
        let geo = geometry(&space.mesh, t);
        let nodes = space.velocity.cell_nodes(t);
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let [x, y] = geo.point(p);
            let fv = f(x, y);
            let w = w * geo.area;
            for (i, &node) in nodes.iter().enumerate() {
                let phi = w * tab.value(q, i);
                load[2 * node] += phi * fv[0];
                load[2 * node + 1] += phi * fv[1];
            }
        }
    }
    load
}

/// Nodal interpolant of a scalar field.
pub fn interpolate<F>(field: F, dofs: &DofMap) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64,
{
    dofs.node_coords.iter().map(|&[x, y]| field(x, y)).collect()
}

/// Nodal interpolant of a velocity field, node-major interleaved.
pub fn interpolate_velocity<F>(field: F, space: &MixedSpace) -> Vec<f64>
where
    F: Fn(f64, f64) -> [f64; 2],
{
    space
        .velocity
        .node_coords
        .iter()
        .flat_map(|&[x, y]| field(x, y))
        .collect()
}

/// Relative errors of a discrete field against an exact one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeErrors {
    pub l2: f64,
    pub l1: f64,
}

/// `‖u − u_h‖ / ‖u‖` in L² and L¹ for a field with `components` values per
/// node (1 for pressure, 2 for velocity).
///
/// With `remove_mean` both fields are first shifted to zero mean, which is
/// how pressures defined up to a constant are compared.
pub fn relative_errors<F>(
    coeffs: &[f64],
    dofs: &DofMap,
    mesh: &Mesh,
    components: usize,
    exact: F,
    remove_mean: bool,
) -> Result<RelativeErrors>
where
    F: Fn(f64, f64, &mut [f64]),
{
    if coeffs.len() != components * dofs.n_nodes {
        return Err(Error::DimensionMismatch {
            expected: components * dofs.n_nodes,
            actual: coeffs.len(),
        });
    }
    let rule = TriangleRule::exact_to(2 * dofs.degree + 4);
    let tab = Tabulation::new(dofs.degree, &rule)?;
    let mut ex = [0.0; 2];
    let ex = &mut ex[..components];
    let (mut shift_h, mut shift_e) = ([0.0; 2], [0.0; 2]);
    let mut visit = |f: &mut dyn FnMut(f64, &[f64], &[f64])| {
        for t in 0..mesh.n_triangles() {
            let geo = geometry(mesh, t);
            let nodes = dofs.cell_nodes(t);
            for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let [x, y] = geo.point(p);
                exact(x, y, ex);
                let mut uh = [0.0; 2];
                for (i, &node) in nodes.iter().enumerate() {
                    let phi = tab.value(q, i);
                    for c in 0..components {
                        uh[c] += phi * coeffs[components * node + c];
                    }
                }
                f(w * geo.area, &uh[..components], ex);
            }
        }
    };
    if remove_mean {
        let mut area = 0.0;
        visit(&mut |w, uh, ue| {
            area += w;
            for c in 0..components {
                shift_h[c] += w * uh[c];
                shift_e[c] += w * ue[c];
            }
        });
        for c in 0..components {
            shift_h[c] /= area;
            shift_e[c] /= area;
        }
    }
    let (mut err2, mut err1, mut ref2, mut ref1) = (0.0, 0.0, 0.0, 0.0);
    visit(&mut |w, uh, ue| {
        let (mut d2, mut e2) = (0.0, 0.0);
        for c in 0..components {
            let e = ue[c] - shift_e[c];
            let d = e - (uh[c] - shift_h[c]);
            d2 += d * d;
            e2 += e * e;
        }
        err2 += w * d2;
        ref2 += w * e2;
        err1 += w * libm::sqrt(d2);
        ref1 += w * libm::sqrt(e2);
    });
    if ref2 == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(RelativeErrors {
        l2: libm::sqrt(err2 / ref2),
        l1: err1 / ref1,
    })
}

/// Relative L² error of a discrete velocity.
pub fn relative_l2_error_velocity<F>(u_h: &[f64], space: &MixedSpace, exact: F) -> Result<f64>
where
    F: Fn(f64, f64) -> [f64; 2],
{
    relative_errors(
        u_h,
        &space.velocity,
        &space.mesh,
        2,
        |x, y, out| out.copy_from_slice(&exact(x, y)),
        false,
    )
    .map(|e| e.l2)
}

/// Relative L² and L¹ errors of a discrete pressure, both fields taken with
/// zero mean.
pub fn relative_errors_pressure<F>(p_h: &[f64], space: &MixedSpace, exact: F) -> Result<RelativeErrors>
where
    F: Fn(f64, f64) -> f64,
{
    relative_errors(
        p_h,
        &space.pressure,
        &space.mesh,
        1,
        |x, y, out| out[0] = exact(x, y),
        true,
    )
}

/// Relative L² error of a scalar field without mean removal.
pub fn relative_l2_error<F>(u_h: &[f64], dofs: &DofMap, mesh: &Mesh, exact: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    relative_errors(u_h, dofs, mesh, 1, |x, y, out| out[0] = exact(x, y), false).map(|e| e.l2)
}
