use alloc::vec;
use alloc::vec::Vec;

use super::basis::{lagrange_values, CellGeometry, Tabulation};
use super::quadrature::TriangleRule;
use super::space::MixedSpace;
use crate::mesh::DofMap;
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::{Error, Result};

/// The bilinear forms of the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    /// `M_V`: ∫ u·v
    MassVelocity,
    /// `M_Q`: ∫ p q
    MassPressure,
    /// `E_V`: ∫ 2 e(u):e(v)
    StrainStiffness,
    /// `L_V`: ∫ ∇u:∇v
    VectorLaplacian,
    /// `D`: ∫ (∇·u)(∇·v)
    GradDiv,
    /// `B`: ∫ q ∇·u, shape pressure × velocity
    Divergence,
    /// `L_Q`: ∫ ∇p·∇q
    PressureLaplacian,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 7] = [
        MatrixKind::MassVelocity,
        MatrixKind::MassPressure,
        MatrixKind::StrainStiffness,
        MatrixKind::VectorLaplacian,
        MatrixKind::GradDiv,
        MatrixKind::Divergence,
        MatrixKind::PressureLaplacian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::MassVelocity => "mass_velocity",
            MatrixKind::MassPressure => "mass_pressure",
            MatrixKind::StrainStiffness => "strain_stiffness",
            MatrixKind::VectorLaplacian => "vector_laplacian",
            MatrixKind::GradDiv => "grad_div",
            MatrixKind::Divergence => "divergence",
            MatrixKind::PressureLaplacian => "pressure_laplacian",
        }
    }

    pub fn is_symmetric(self) -> bool {
        self != MatrixKind::Divergence
    }
}

/// Assembles one of the matrices on the full (unconstrained) spaces.
pub fn assemble(kind: MatrixKind, space: &MixedSpace) -> SparseMatrix {
    let rule = TriangleRule::exact_to(space.quadrature_degree());
    let tv = Tabulation::new(space.velocity_degree(), &rule).expect("valid degree");
    let tp = Tabulation::new(space.pressure_degree(), &rule).expect("valid degree");
    match kind {
        MatrixKind::MassPressure => scalar_form(&space.pressure, &space.mesh, &rule, &tp, false),
        MatrixKind::PressureLaplacian => scalar_form(&space.pressure, &space.mesh, &rule, &tp, true),
        MatrixKind::Divergence => divergence(space, &rule, &tv, &tp),
        _ => vector_form(kind, space, &rule, &tv),
    }
}

fn geometry(mesh: &crate::mesh::Mesh, t: usize) -> CellGeometry {
    let [a, b, c] = mesh.triangles[t];
    CellGeometry::new([mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]])
}

fn scalar_form(
    dofs: &DofMap,
    mesh: &crate::mesh::Mesh,
    rule: &TriangleRule,
    tab: &Tabulation,
    laplacian: bool,
) -> SparseMatrix {
    let nl = tab.n_local;
    let mut tb = TripletBuilder::with_capacity(dofs.n_nodes, dofs.n_nodes, mesh.n_triangles() * nl * nl);
    let mut local = vec![0.0; nl * nl];
    let mut grads = vec![[0.0; 2]; nl];
    for t in 0..mesh.n_triangles() {
        let geo = geometry(mesh, t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &wq) in rule.weights.iter().enumerate() {
            let w = wq * geo.area;
            if laplacian {
                for (i, g) in grads.iter_mut().enumerate() {
                    *g = tab.gradient(q, i, &geo);
                }
                for i in 0..nl {
                    for j in 0..nl {
                        local[i * nl + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    }
                }
            } else {
                for i in 0..nl {
                    let wi = w * tab.value(q, i);
                    for j in 0..nl {
                        local[i * nl + j] += wi * tab.value(q, j);
                    }
                }
            }
        }
        let nodes = dofs.cell_nodes(t);
        for i in 0..nl {
            for j in 0..nl {
                tb.push(nodes[i], nodes[j], local[i * nl + j]);
            }
        }
    }
    tb.build()
}

fn vector_form(kind: MatrixKind, space: &MixedSpace, rule: &TriangleRule, tab: &Tabulation) -> SparseMatrix {
    let nl = tab.n_local;
    let n = 2 * nl;
    let nv = space.n_velocity();
    let mesh = &space.mesh;
    let mut tb = TripletBuilder::with_capacity(nv, nv, mesh.n_triangles() * n * n);
    let mut local = vec![0.0; n * n];
    let mut grads = vec![[0.0; 2]; nl];
    for t in 0..mesh.n_triangles() {
        let geo = geometry(mesh, t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &wq) in rule.weights.iter().enumerate() {
            let w = wq * geo.area;
            for (i, g) in grads.iter_mut().enumerate() {
                *g = tab.gradient(q, i, &geo);
            }
            // row (i, d) is the test function φ_i e_d, column (j, c) the trial φ_j e_c
            for i in 0..nl {
                for j in 0..nl {
                    let gi = grads[i];
                    let gj = grads[j];
                    let dot = gi[0] * gj[0] + gi[1] * gj[1];
                    for d in 0..2 {
                        for c in 0..2 {
                            let v = match kind {
                                MatrixKind::MassVelocity => {
                                    if c == d {
                                        tab.value(q, i) * tab.value(q, j)
                                    } else {
                                        0.0
                                    }
                                }
                                MatrixKind::VectorLaplacian => {
                                    if c == d {
                                        dot
                                    } else {
                                        0.0
                                    }
                                }
                                MatrixKind::GradDiv => gj[c] * gi[d],
                                MatrixKind::StrainStiffness => (if c == d { dot } else { 0.0 }) + gj[d] * gi[c],
                                _ => unreachable!("scalar kinds handled elsewhere"),
                            };
                            local[(2 * i + d) * n + 2 * j + c] += w * v;
                        }
                    }
                }
            }
        }
        let nodes = space.velocity.cell_nodes(t);
        for i in 0..nl {
            for d in 0..2 {
                for j in 0..nl {
                    for c in 0..2 {
                        let block_diagonal = matches!(kind, MatrixKind::MassVelocity | MatrixKind::VectorLaplacian);
                        if block_diagonal && c != d {
                            continue;
                        }
                        tb.push(2 * nodes[i] + d, 2 * nodes[j] + c, local[(2 * i + d) * n + 2 * j + c]);
                    }
                }
            }
        }
    }
    tb.build()
}

fn divergence(space: &MixedSpace, rule: &TriangleRule, tv: &Tabulation, tp: &Tabulation) -> SparseMatrix {
    let (nlv, nlp) = (tv.n_local, tp.n_local);
    let mesh = &space.mesh;
    let mut tb = TripletBuilder::with_capacity(
        space.n_pressure(),
        space.n_velocity(),
        mesh.n_triangles() * nlp * 2 * nlv,
    );
    let mut local = vec![0.0; nlp * 2 * nlv];
    for t in 0..mesh.n_triangles() {
        let geo = geometry(mesh, t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &wq) in rule.weights.iter().enumerate() {
            let w = wq * geo.area;
            for j in 0..nlv {
                let g = tv.gradient(q, j, &geo);
                for k in 0..nlp {
                    let wk = w * tp.value(q, k);
                    local[k * 2 * nlv + 2 * j] += wk * g[0];
                    local[k * 2 * nlv + 2 * j + 1] += wk * g[1];
                }
            }
        }
        let pn = space.pressure.cell_nodes(t);
        let vn = space.velocity.cell_nodes(t);
        for k in 0..nlp {
            for j in 0..nlv {
                for c in 0..2 {
                    tb.push(pn[k], 2 * vn[j] + c, local[k * 2 * nlv + 2 * j + c]);
                }
            }
        }
    }
    tb.build()
}

/// `A = M_V/τ + μ E_V`.
///
/// `μ = 0` is accepted (pure mass limit); negative `μ` and non-positive `τ`
/// are rejected.
pub fn assemble_velocity_system(space: &MixedSpace, tau: f64, mu: f64) -> Result<SparseMatrix> {
    check_tau_mu(tau, mu)?;
    let m = assemble(MatrixKind::MassVelocity, space);
    let e = assemble(MatrixKind::StrainStiffness, space);
    Ok(m.add(1.0 / tau, &e, mu))
}

pub(crate) fn check_tau_mu(tau: f64, mu: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
        });
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter { name: "mu", value: mu });
    }
    Ok(())
}

/// `∫|φ_i|` over the reference triangle for each local basis function,
/// divided by the reference area.
///
/// Every degree-`k` basis function changes sign only along the lines of the
/// uniform `k²` subdivision, so integrating exactly on each piece and taking
/// absolute values gives the exact result.
pub fn reference_abs_integrals(k: usize) -> Vec<f64> {
    let nl = DofMap::local_count(k);
    let rule = TriangleRule::exact_to(k);
    let mut out = vec![0.0; nl];
    let mut vals = vec![0.0; nl];
    let kf = k as f64;
    let corner = |i: usize, j: usize| [1.0 - (i + j) as f64 / kf, i as f64 / kf, j as f64 / kf];
    let mut pieces = Vec::new();
    for j in 0..k {
        for i in 0..k - j {
            pieces.push([corner(i, j), corner(i + 1, j), corner(i, j + 1)]);
            if i + j + 1 < k {
                pieces.push([corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)]);
            }
        }
    }
    let weight = 1.0 / pieces.len() as f64;
    let mut piece_integral = vec![0.0; nl];
    for piece in &pieces {
        piece_integral.iter_mut().for_each(|v| *v = 0.0);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let mut l = [0.0; 3];
            for (c, lc) in l.iter_mut().enumerate() {
                *lc = p[0] * piece[0][c] + p[1] * piece[1][c] + p[2] * piece[2][c];
            }
            lagrange_values(k, l, &mut vals);
            for i in 0..nl {
                piece_integral[i] += w * vals[i];
            }
        }
        for i in 0..nl {
            out[i] += weight * piece_integral[i].abs();
        }
    }
    out
}

/// Diagonal `Λ` with `Λ_ii = ∫|φ_i|` for a scalar Lagrange space.
pub fn lumped_mass(dofs: &DofMap, mesh: &crate::mesh::Mesh) -> Vec<f64> {
    let c = reference_abs_integrals(dofs.degree);
    let mut diag = vec![0.0; dofs.n_nodes];
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        for (l, &node) in dofs.cell_nodes(t).iter().enumerate() {
            diag[node] += area * c[l];
        }
    }
    diag
}

/// Lumped velocity mass `Λ_V` (both components).
pub fn lump_velocity_mass(space: &MixedSpace) -> SparseMatrix {
    let scalar = lumped_mass(&space.velocity, &space.mesh);
    let diag: Vec<f64> = scalar.iter().flat_map(|&v| [v, v]).collect();
    SparseMatrix::from_diagonal(&diag)
}
