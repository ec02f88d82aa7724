use std::f64::consts::PI;

use proptest::prelude::*;
use stokes_core::fem::{
    interpolate, relative_errors_pressure, relative_l2_error_velocity, BoundaryCondition, ElementPair, MixedSpace,
};
use stokes_core::manufactured::{manufactured_case, CaseKind, ManufacturedCase};
use stokes_core::mesh::build_unit_square_mesh;
use stokes_core::multigrid::AmgMode;
use stokes_core::sparse::vector::{dot, mean, norm, norm1, remove_mean, sub};
use stokes_core::sparse::{generalized_eigs_sym, DenseMatrix};
use stokes_core::stokes::{
    compute_tau, method1_solve, method2_solve, projection_step, schur_residual, BmbtMass, NullspacePolicy,
    SchurPrecondKind, SolverOptions, StokesRhs, StokesSystem, VelocityPrecond, VelocityPrecondKind,
};

fn space(n: usize, open: bool) -> MixedSpace {
    let mut mesh = build_unit_square_mesh(n, 0.2, 11).unwrap();
    if open {
        mesh = mesh.with_open_right_side();
    }
    MixedSpace::new(mesh, ElementPair::P2P1).unwrap()
}

fn homogeneous(n: usize, mu: f64, lambda: f64, policy: NullspacePolicy) -> StokesSystem {
    StokesSystem::new(space(n, policy == NullspacePolicy::OpenBoundary), mu, lambda, policy).unwrap()
}

/// System with the wall data of a manufactured case and its Stokes right-hand side.
fn manufactured(
    n: usize,
    k: f64,
    mu: f64,
    lambda: f64,
    policy: NullspacePolicy,
) -> (StokesSystem, ManufacturedCase, StokesRhs) {
    let s = space(n, false);
    let tau = compute_tau(s.n_velocity_nodes()).unwrap();
    let case = manufactured_case(CaseKind::DivFree, k, mu, lambda, tau);
    let bc = BoundaryCondition::from_velocity(&s, |x, y| case.velocity(x, y));
    let sys = StokesSystem::with_boundary(s, tau, mu, lambda, policy, bc).unwrap();
    let rhs = sys.rhs_from_forcing(|x, y| case.stokes_forcing(x, y)).unwrap();
    (sys, case, rhs)
}

fn seeded(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

fn max_rel_defect(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.add(1.0, b, -1.0).max_abs() / a.max_abs()
}

// Dense oracles built from the assembled matrices only.

fn dense_a_lambda(sys: &StokesSystem, lambda: f64) -> DenseMatrix {
    let b = sys.b.to_dense();
    let mq_inv = sys.m_q.to_dense().inverse().unwrap();
    let aug = b.transpose().matmul(&mq_inv).matmul(&b);
    sys.a.to_dense().add(1.0, &aug, lambda * sys.mu)
}

fn dense_schur(sys: &StokesSystem, lambda: f64) -> DenseMatrix {
    let b = sys.b.to_dense();
    b.matmul(&dense_a_lambda(sys, lambda).inverse().unwrap())
        .matmul(&b.transpose())
}

fn operator_columns(n: usize, mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, v) in apply(&e).into_iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

#[test]
fn a_lambda_matches_dense_oracle() {
    let sys = homogeneous(3, 0.5, 3.0, NullspacePolicy::ProjectMeanZero);
    let n = sys.n_velocity();
    let m = operator_columns(n, |x| {
        let mut y = vec![0.0; n];
        sys.apply_a_lambda(x, &mut y).unwrap();
        y
    });
    assert!(max_rel_defect(&dense_a_lambda(&sys, 3.0), &m) <= 1e-8);
}

#[test]
fn schur_matches_dense_oracle_on_open_mesh() {
    let sys = homogeneous(3, 1.0, 1.0, NullspacePolicy::OpenBoundary);
    let m = operator_columns(sys.n_pressure(), |p| sys.apply_schur(p, 1e-12).unwrap());
    assert!(max_rel_defect(&dense_schur(&sys, 1.0), &m) <= 1e-7);
}

#[test]
fn schur_is_symmetric_on_mean_zero_vectors() {
    let sys = homogeneous(4, 1e-2, 1.0, NullspacePolicy::ProjectMeanZero);
    let (mut x, mut y) = (seeded(sys.n_pressure(), 1), seeded(sys.n_pressure(), 2));
    remove_mean(&mut x);
    remove_mean(&mut y);
    let (sx, sy) = (sys.apply_schur(&x, 1e-10).unwrap(), sys.apply_schur(&y, 1e-10).unwrap());
    let (l, r) = (dot(&y, &sx), dot(&x, &sy));
    assert!((l - r).abs() <= 1e-8 * l.abs().max(r.abs()));
    assert!(mean(&sx).abs() <= 1e-13 * norm(&sx));
}

#[test]
fn augmented_inverse_identity_on_mean_zero_subspace() {
    // S_λ⁻¹ = λμ M_Q⁻¹ + S₀⁻¹ restricted to mean-zero vectors
    for (lambda, mu) in [(1.0, 1.0), (10.0, 1e-2)] {
        let sys = homogeneous(3, mu, lambda, NullspacePolicy::ProjectMeanZero);
        let np = sys.n_pressure();
        let pi = DenseMatrix::identity(np).add(
            1.0,
            &DenseMatrix::from_row_major(np, np, vec![1.0 / np as f64; np * np]).unwrap(),
            -1.0,
        );
        let lhs = dense_schur(&sys, lambda).pinv().unwrap();
        let mq_inv = sys.m_q.to_dense().inverse().unwrap();
        let rhs = mq_inv
            .scaled(lambda * mu)
            .add(1.0, &dense_schur(&sys, 0.0).pinv().unwrap(), 1.0);
        let (l, r) = (pi.matmul(&lhs).matmul(&pi), pi.matmul(&rhs).matmul(&pi));
        assert!(max_rel_defect(&l, &r) <= 1e-7, "lambda {lambda} mu {mu}");
    }
}

#[test]
fn augmented_spectrum_inclusion() {
    for (lambda, mu) in [(1.0, 1.0), (10.0, 1e-2)] {
        let sys = homogeneous(3, mu, lambda, NullspacePolicy::OpenBoundary);
        let rho = lambda * mu;
        let mq = sys.m_q.to_dense();
        let s0 = generalized_eigs_sym(&dense_schur(&sys, 0.0), &mq).unwrap();
        let (lo, hi) = (s0[0], *s0.last().unwrap());
        let bounds = (1.0 / (rho + 1.0 / lo), 1.0 / (rho + 1.0 / hi));
        let s_rho = dense_schur(&sys, lambda);
        let s_rho = s_rho.add(0.5, &s_rho.transpose(), 0.5);
        for e in generalized_eigs_sym(&s_rho, &mq).unwrap() {
            assert!(
                e >= bounds.0 * (1.0 - 1e-8) && e <= bounds.1 * (1.0 + 1e-8),
                "{e} {bounds:?}"
            );
        }
    }
}

#[test]
fn schur_spectrum_bounds_from_continuity_and_inf_sup_constants() {
    let sys = homogeneous(3, 1.0, 0.0, NullspacePolicy::OpenBoundary);
    let k = sys.m_v.add(1.0, &sys.l_v, 1.0).to_dense();
    let a = sys.a.to_dense();
    let a = a.add(0.5, &a.transpose(), 0.5);
    let ka = generalized_eigs_sym(&a, &k).unwrap();
    let (alpha, a_norm) = (ka[0], *ka.last().unwrap());
    let b = sys.b.to_dense();
    let bkb = b.matmul(&k.inverse().unwrap()).matmul(&b.transpose());
    let bkb = bkb.add(0.5, &bkb.transpose(), 0.5);
    let mq = sys.m_q.to_dense();
    let bb = generalized_eigs_sym(&bkb, &mq).unwrap();
    let (beta2, b_norm2) = (bb[0], *bb.last().unwrap());
    let m = mq.eigs_sym().unwrap();
    let (mu_min, mu_max) = (m[0], *m.last().unwrap());
    let s = dense_schur(&sys, 0.0);
    let s = s.add(0.5, &s.transpose(), 0.5);
    let (lo, hi) = (mu_min * beta2 / a_norm, mu_max * b_norm2 / alpha);
    assert!(beta2 > 0.0);
    for e in s.eigs_sym().unwrap() {
        assert!(
            e >= lo * (1.0 - 1e-8) && e <= hi * (1.0 + 1e-8),
            "{e} not in [{lo}, {hi}]"
        );
    }
}

#[test]
fn schur_precond_is_linear_in_lambda() {
    let r = {
        let mut r = seeded(
            homogeneous(4, 1.0, 0.0, NullspacePolicy::ProjectMeanZero).n_pressure(),
            5,
        );
        remove_mean(&mut r);
        r
    };
    let mu = 0.3;
    let kind = SchurPrecondKind::CDelta {
        a: AmgMode::TWO_VC,
        b: AmgMode::TWO_VC,
    };
    let s0 = homogeneous(4, mu, 0.0, NullspacePolicy::ProjectMeanZero);
    let s3 = homogeneous(4, mu, 3.0, NullspacePolicy::ProjectMeanZero);
    let y0 = s0.apply_schur_precond(kind, &r).unwrap();
    let y3 = s3.apply_schur_precond(kind, &r).unwrap();
    let (mass, _) = s0.schur_precond_terms(kind, &r).unwrap();
    // the mass term of s0 is μ(M_Q)_a⁻¹r, so the difference is three of it
    let diff = sub(&y3, &y0);
    let expected: Vec<f64> = mass.iter().map(|v| 3.0 * v).collect();
    assert!(norm(&sub(&diff, &expected)) <= 1e-13 * norm(&y3));
}

#[test]
fn bmbt_recovers_interpolated_pressure() {
    let sys = homogeneous(8, 1.0, 0.0, NullspacePolicy::ProjectMeanZero);
    let mut p = interpolate(|x, y| (16.0 * PI * (x - y)).sin(), &sys.space.pressure);
    remove_mean(&mut p);
    let mut counts = Vec::new();
    for mass in [BmbtMass::ConsistentTh, BmbtMass::Lumped] {
        let w = sys.bt.spmv(&p).unwrap();
        let z: Vec<f64> = match mass {
            BmbtMass::Lumped => w.iter().zip(&sys.lumped_v).map(|(a, d)| a / d).collect(),
            _ => sys.m_v.to_dense().solve(&w).unwrap(),
        };
        let mut rhs = sys.b.spmv(&z).unwrap();
        remove_mean(&mut rhs);
        let (x, rep) = sys.solve_bmbt(&rhs, mass, 1e-10).unwrap();
        assert!(rep.converged);
        assert!(norm1(&sub(&x, &p)) / norm1(&p) <= 1e-9, "{mass:?}");
        counts.push(rep.iterations);
    }
    assert!(counts[1] <= 25);
    assert!(counts[1] >= counts[0], "{counts:?}");
}

#[test]
fn methods_agree_and_are_discretely_incompressible() {
    let (sys, _, rhs) = manufactured(8, 2.0 * PI, 1e-2, 1.0, NullspacePolicy::ProjectMeanZero);
    let opts = SolverOptions::default();
    let schur = SchurPrecondKind::CLambda { a: AmgMode::TWO_VC };
    let (u1, p1, r1) = method1_solve(&sys, &rhs, schur, &opts).unwrap();
    let (u2, p2, r2) = method2_solve(&sys, &rhs, schur, VelocityPrecond::A3_2VC, &opts).unwrap();
    assert!(r1.converged && r2.converged);
    assert!(norm(&sub(&u1, &u2)) <= 1e-8 * norm(&u1));
    assert!(norm(&sub(&p1, &p2)) <= 1e-8 * norm(&p1));
    assert!(mean(&p1).abs() <= 1e-13 * norm(&p1));
    for u in [&u1, &u2] {
        let mut d = sys.b.spmv(u).unwrap();
        let g = &rhs.g;
        d.iter_mut().zip(g).for_each(|(a, b)| *a -= b);
        sys.project(&mut d);
        assert!(norm(&d) <= 10.0 * opts.rel_tol * norm(&rhs.f));
    }
    // two velocity-preconditioner applications per outer iteration of Method 2
    assert_eq!(r2.inner.velocity_solves, 2 * r2.outer.iterations);
    // the outer residual holds up against fresh, tighter inner solves
    let fresh = schur_residual(&sys, &rhs, &p1, 1e-13).unwrap();
    assert!(fresh <= 1.1 * opts.rel_tol, "{fresh}");
}

#[test]
fn pinned_and_projected_pressures_agree_up_to_a_constant() {
    let (s1, _, rhs1) = manufactured(6, 2.0 * PI, 1.0, 0.0, NullspacePolicy::ProjectMeanZero);
    let (s2, _, rhs2) = manufactured(6, 2.0 * PI, 1.0, 0.0, NullspacePolicy::Pinned);
    let schur = SchurPrecondKind::CLambda { a: AmgMode::TWO_VC };
    let opts = SolverOptions::default();
    let (u1, p1, _) = method1_solve(&s1, &rhs1, schur, &opts).unwrap();
    let (u2, mut p2, rep) = method1_solve(&s2, &rhs2, schur, &opts).unwrap();
    assert!(rep.converged);
    assert_eq!(p2[0], 0.0);
    remove_mean(&mut p2);
    assert!(norm(&sub(&p1, &p2)) <= 1e-7 * norm(&p1));
    assert!(norm(&sub(&u1, &u2)) <= 1e-7 * norm(&u1));
}

#[test]
fn manufactured_rates_for_taylor_hood() {
    let mut errs = Vec::new();
    for n in [8, 16, 32] {
        let (sys, case, rhs) = manufactured(n, 2.0 * PI, 1.0, 1.0, NullspacePolicy::ProjectMeanZero);
        let (u, p, rep) = method1_solve(
            &sys,
            &rhs,
            SchurPrecondKind::CLambda { a: AmgMode::TWO_VC },
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(rep.converged);
        let ve = relative_l2_error_velocity(&sys.full_velocity(&u), &sys.space, |x, y| case.velocity(x, y)).unwrap();
        let pe = relative_errors_pressure(&p, &sys.space, |x, y| case.pressure(x, y))
            .unwrap()
            .l2;
        errs.push((ve, pe));
    }
    for w in errs.windows(2) {
        let (rv, rp) = (w[0].0 / w[1].0, w[0].1 / w[1].1);
        assert!((5.6..=10.4).contains(&rv), "velocity ratio {rv} {errs:?}");
        assert!((2.4..=5.6).contains(&rp), "pressure ratio {rp} {errs:?}");
    }
}

#[test]
fn velocity_problem_converges_at_third_order() {
    let mut errs = Vec::new();
    let mut iters = Vec::new();
    for n in [4, 8, 16] {
        let s = space(n, false);
        let tau = compute_tau(s.n_velocity_nodes()).unwrap();
        let case = manufactured_case(CaseKind::NonDivFree, 2.0 * PI, 1.0, 1.0, tau);
        let bc = BoundaryCondition::from_velocity(&s, |x, y| case.velocity(x, y));
        let sys = StokesSystem::with_boundary(s, tau, 1.0, 1.0, NullspacePolicy::ProjectMeanZero, bc).unwrap();
        let load = stokes_core::fem::assemble_load(&sys.space, |x, y| case.velocity_forcing(x, y));
        let f = sys.velocity_rhs(&load).unwrap();
        let th = VelocityPrecond {
            kind: VelocityPrecondKind::A3,
            mode: AmgMode::TH,
        };
        let (u, rep) = sys.solve_velocity(&f, th, 1e-10).unwrap();
        let (_, rep2) = sys.solve_velocity(&f, VelocityPrecond::A3_2VC, 1e-10).unwrap();
        assert!(rep.converged && rep2.converged);
        assert!(
            rep2.iterations <= 2 * rep.iterations,
            "{} vs {}",
            rep2.iterations,
            rep.iterations
        );
        iters.push(rep.iterations);
        errs.push(relative_l2_error_velocity(&sys.full_velocity(&u), &sys.space, |x, y| case.velocity(x, y)).unwrap());
    }
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((5.6..=10.4).contains(&r), "ratio {r} {errs:?}");
    }
    assert!(iters[2] <= iters[1] + 2, "{iters:?}");
}

#[test]
fn projection_step_runs_three_converged_solves() {
    let (sys, _, rhs) = manufactured(8, 2.0 * PI, 1.0, 0.0, NullspacePolicy::ProjectMeanZero);
    let (_, p, rep) = projection_step(&sys, &rhs, &SolverOptions::default()).unwrap();
    assert!(rep.converged);
    for r in [&rep.velocity, &rep.laplacian, &rep.mass] {
        assert!(r.converged && r.final_residual <= 1e-10);
    }
    assert!(mean(&p).abs() <= 1e-13 * norm(&p));
}

#[test]
fn pressure_laplacian_stage_matches_pseudoinverse() {
    // the projection step's L_Q solve, checked on its own against a dense pseudoinverse
    let sys = homogeneous(4, 1.0, 0.0, NullspacePolicy::ProjectMeanZero);
    let mut rhs = seeded(sys.n_pressure(), 9);
    remove_mean(&mut rhs);
    let h = sys
        .hierarchy(stokes_core::stokes::HierarchyKind::PressureLaplacian)
        .unwrap();
    let pc = stokes_core::krylov::FnOperator::new(sys.n_pressure(), |x: &[f64], y: &mut [f64]| {
        h.fixed_cycles_into(x, y, 2);
        remove_mean(y);
        Ok(())
    });
    let (x, rep) = stokes_core::krylov::cg(&sys.l_q, &pc, &rhs, 1e-10, 200).unwrap();
    assert!(rep.converged);
    let oracle = sys.l_q.to_dense().pinv().unwrap().matvec(&rhs);
    let mut x = x;
    remove_mean(&mut x);
    assert!(norm(&sub(&x, &oracle)) <= 1e-8 * norm(&oracle));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn projected_pressures_stay_mean_zero(seed in 0u64..10_000, lambda in 0.0f64..10.0) {
        let sys = homogeneous(3, 1.0, lambda, NullspacePolicy::ProjectMeanZero);
        let mut r = seeded(sys.n_pressure(), seed);
        remove_mean(&mut r);
        let kind = SchurPrecondKind::C { a: AmgMode::TWO_VC, b: AmgMode::TWO_VC };
        for y in [sys.apply_schur(&r, 1e-10).unwrap(), sys.apply_schur_precond(kind, &r).unwrap()] {
            prop_assert!(mean(&y).abs() <= 1e-13 * norm(&y));
        }
    }

    #[test]
    fn a_lambda_is_symmetric_positive(seed in 0u64..10_000, lambda in 0.0f64..10.0) {
        let sys = homogeneous(3, 0.1, lambda, NullspacePolicy::ProjectMeanZero);
        let n = sys.n_velocity();
        let (x, z) = (seeded(n, seed), seeded(n, seed + 1));
        let (mut ax, mut az) = (vec![0.0; n], vec![0.0; n]);
        sys.apply_a_lambda(&x, &mut ax).unwrap();
        sys.apply_a_lambda(&z, &mut az).unwrap();
        let (l, r) = (dot(&z, &ax), dot(&x, &az));
        prop_assert!((l - r).abs() <= 1e-9 * l.abs().max(r.abs()).max(1e-300));
        prop_assert!(dot(&x, &ax) > 0.0);
    }
}
