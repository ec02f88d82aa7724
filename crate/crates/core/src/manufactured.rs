//! Manufactured solutions for the velocity problem and the Stokes system.

use core::f64::consts::PI;

use libm::{cos, sin};

/// Wave number used by the solver tables.
pub const DEFAULT_WAVE: f64 = 16.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    /// `u = (sin kx sin ky, cos kx cos ky)`, so `∇·u = 0`.
    DivFree,
    /// `u = (sin 2kx sin ky, cos kx cos ky)`.
    NonDivFree,
}

/// An exact velocity and pressure with the matching forcing.
///
/// The pressure is `p = sin(k(x − y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub k: f64,
    pub mu: f64,
    pub lambda: f64,
    pub tau: f64,
}

pub fn manufactured_case(kind: CaseKind, k: f64, mu: f64, lambda: f64, tau: f64) -> ManufacturedCase {
    ManufacturedCase {
        kind,
        k,
        mu,
        lambda,
        tau,
    }
}

impl ManufacturedCase {
    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let k = self.k;
        let u1 = match self.kind {
            CaseKind::DivFree => sin(k * x) * sin(k * y),
            CaseKind::NonDivFree => sin(2.0 * k * x) * sin(k * y),
        };
        [u1, cos(k * x) * cos(k * y)]
    }

    pub fn pressure(&self, x: f64, y: f64) -> f64 {
        sin(self.k * (x - y))
    }

    pub fn divergence(&self, x: f64, y: f64) -> f64 {
        let k = self.k;
        let d2 = -k * cos(k * x) * sin(k * y);
        match self.kind {
            CaseKind::DivFree => k * cos(k * x) * sin(k * y) + d2,
            CaseKind::NonDivFree => 2.0 * k * cos(2.0 * k * x) * sin(k * y) + d2,
        }
    }

    fn laplacian(&self, x: f64, y: f64) -> [f64; 2] {
        let k2 = self.k * self.k;
        let [u1, u2] = self.velocity(x, y);
        match self.kind {
            CaseKind::DivFree => [-2.0 * k2 * u1, -2.0 * k2 * u2],
            CaseKind::NonDivFree => [-5.0 * k2 * u1, -2.0 * k2 * u2],
        }
    }

    fn grad_div(&self, x: f64, y: f64) -> [f64; 2] {
        let k = self.k;
        let k2 = k * k;
        let common = [k2 * sin(k * x) * sin(k * y), -k2 * cos(k * x) * cos(k * y)];
        match self.kind {
            CaseKind::DivFree => [
                -k2 * sin(k * x) * sin(k * y) + common[0],
                k2 * cos(k * x) * cos(k * y) + common[1],
            ],
            CaseKind::NonDivFree => [
                -4.0 * k2 * sin(2.0 * k * x) * sin(k * y) + common[0],
                2.0 * k2 * cos(2.0 * k * x) * cos(k * y) + common[1],
            ],
        }
    }

    fn pressure_gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let c = self.k * cos(self.k * (x - y));
        [c, -c]
    }

    /// `f = u/τ − μΔu − (1 + λ)μ∇(∇·u)`: the right-hand side of the
    /// augmented velocity problem `A_λ u = f` alone.
    pub fn velocity_forcing(&self, x: f64, y: f64) -> [f64; 2] {
        self.forcing_with(x, y, 1.0 + self.lambda, false)
    }

    /// `f = u/τ − ∇·(2μe(u)) + ∇p`: the right-hand side of the Stokes
    /// system. The augmentation is added algebraically by the solvers.
    pub fn stokes_forcing(&self, x: f64, y: f64) -> [f64; 2] {
        self.forcing_with(x, y, 1.0, true)
    }

    fn forcing_with(&self, x: f64, y: f64, grad_div_factor: f64, with_pressure: bool) -> [f64; 2] {
        let u = self.velocity(x, y);
        let lap = self.laplacian(x, y);
        let gd = self.grad_div(x, y);
        let gp = if with_pressure {
            self.pressure_gradient(x, y)
        } else {
            [0.0; 2]
        };
        let mut f = [0.0; 2];
        for c in 0..2 {
            f[c] = u[c] / self.tau - self.mu * lap[c] - grad_div_factor * self.mu * gd[c] + gp[c];
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(kind: CaseKind) -> ManufacturedCase {
        manufactured_case(kind, 3.0, 0.7, 2.0, 0.1)
    }

    fn points() -> impl Iterator<Item = (f64, f64)> {
        (0..100).map(|i| {
            let t = i as f64;
            ((t * 0.618_034).fract(), (t * 0.414_214 + 0.1).fract())
        })
    }

    // centred second differences of the velocity as an independent check of
    // the closed-form derivatives
    fn fd_laplacian_and_grad_div(c: &ManufacturedCase, x: f64, y: f64) -> ([f64; 2], [f64; 2]) {
        let h = 1e-4;
        let u = |x, y| c.velocity(x, y);
        let mut lap = [0.0; 2];
        for comp in 0..2 {
            lap[comp] = (u(x + h, y)[comp] + u(x - h, y)[comp] + u(x, y + h)[comp] + u(x, y - h)[comp]
                - 4.0 * u(x, y)[comp])
                / (h * h);
        }
        let div = |x, y| (u(x + h, y)[0] - u(x - h, y)[0]) / (2.0 * h) + (u(x, y + h)[1] - u(x, y - h)[1]) / (2.0 * h);
        let gd = [
            (div(x + h, y) - div(x - h, y)) / (2.0 * h),
            (div(x, y + h) - div(x, y - h)) / (2.0 * h),
        ];
        (lap, gd)
    }

    #[test]
    fn div_free_field_has_zero_divergence() {
        let c = manufactured_case(CaseKind::DivFree, DEFAULT_WAVE, 1.0, 1.0, 0.01);
        for (x, y) in points() {
            let k = c.k;
            let d = k * cos(k * x) * sin(k * y) - k * cos(k * x) * sin(k * y);
            assert!(d.abs() <= 1e-12);
            assert!(c.divergence(x, y).abs() <= 1e-12);
        }
    }

    #[test]
    fn non_div_free_divergence_is_generic() {
        let c = case(CaseKind::NonDivFree);
        assert!(points().any(|(x, y)| c.divergence(x, y).abs() > 0.1));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for kind in [CaseKind::DivFree, CaseKind::NonDivFree] {
            let c = case(kind);
            for (x, y) in points().take(20) {
                let (lap, gd) = fd_laplacian_and_grad_div(&c, x, y);
                let (el, eg) = (c.laplacian(x, y), c.grad_div(x, y));
                for comp in 0..2 {
                    assert!(
                        (lap[comp] - el[comp]).abs() < 1e-3 * (1.0 + el[comp].abs()),
                        "{kind:?} lap"
                    );
                    assert!(
                        (gd[comp] - eg[comp]).abs() < 1e-3 * (1.0 + eg[comp].abs()),
                        "{kind:?} grad div"
                    );
                }
            }
        }
    }

    #[test]
    fn forcings_differ_by_augmentation_and_pressure() {
        let c = case(CaseKind::NonDivFree);
        let (x, y) = (0.3, 0.8);
        let fv = c.velocity_forcing(x, y);
        let fs = c.stokes_forcing(x, y);
        let gd = c.grad_div(x, y);
        let gp = c.pressure_gradient(x, y);
        for comp in 0..2 {
            let expected = fs[comp] - gp[comp] - c.lambda * c.mu * gd[comp];
            assert!((fv[comp] - expected).abs() < 1e-9 * (1.0 + fv[comp].abs()));
        }
    }
}
