use crate::mesh::{DofMap, Mesh};
use crate::{Error, Result};

/// Taylor–Hood pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementPair {
    P2P1,
    P3P2,
}

impl ElementPair {
    pub fn velocity_degree(self) -> usize {
        match self {
            ElementPair::P2P1 => 2,
            ElementPair::P3P2 => 3,
        }
    }

    pub fn pressure_degree(self) -> usize {
        self.velocity_degree() - 1
    }
}

/// Continuous `P_{k+1}` vector velocity and `P_k` pressure on one mesh.
///
/// Velocity unknowns are node-major: unknown `2·node + c` is component `c`
/// at velocity node `node`.
#[derive(Debug, Clone)]
pub struct MixedSpace {
    pub mesh: Mesh,
    pub pair: ElementPair,
    pub velocity: DofMap,
    pub pressure: DofMap,
}

impl MixedSpace {
    pub fn new(mesh: Mesh, pair: ElementPair) -> Result<Self> {
        if mesh.n_triangles() == 0 {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let velocity = mesh.lagrange_dof_layout(pair.velocity_degree())?;
        let pressure = mesh.lagrange_dof_layout(pair.pressure_degree())?;
        Ok(Self {
            mesh,
            pair,
            velocity,
            pressure,
        })
    }

    pub fn velocity_degree(&self) -> usize {
        self.pair.velocity_degree()
    }

    pub fn pressure_degree(&self) -> usize {
        self.pair.pressure_degree()
    }

    /// Number of velocity nodes (the `N` of the time-step rule).
    pub fn n_velocity_nodes(&self) -> usize {
        self.velocity.n_nodes
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.velocity.n_nodes
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure.n_nodes
    }

    /// Velocity unknowns constrained by the Dirichlet condition (both
    /// components of every wall node), sorted.
    pub fn dirichlet_dofs(&self) -> alloc::vec::Vec<usize> {
        self.velocity
            .wall_nodes
            .iter()
            .flat_map(|&n| [2 * n, 2 * n + 1])
            .collect()
    }

    /// Quadrature degree that integrates every bilinear form exactly.
    pub fn quadrature_degree(&self) -> usize {
        2 * self.velocity_degree() + 2
    }
}
