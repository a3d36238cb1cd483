//! Randomized invariants: algebraic identities that must hold for every
//! input, checked over generated matrices and angles rather than pinned
//! examples.

use std::f64::consts::PI;

use proptest::prelude::*;

use qsl_core::bounds::{mt_open_bound, speed_v};
use qsl_core::linalg::{CMatrix, C64};
use qsl_core::lindblad::Lindbladian;
use qsl_core::models::dephasing_model;
use qsl_core::quantum::{bloch_to_density, plus_state, relative_purity, BlochState, DensityMatrix};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn entry() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c(re, im))
}

prop_compose! {
    fn matrix(n: usize)(data in prop::collection::vec(entry(), n * n)) -> CMatrix {
        CMatrix::new(n, n, data).unwrap()
    }
}

prop_compose! {
    fn hermitian(n: usize)(m in matrix(n)) -> CMatrix {
        (&m + &m.dagger()).scale(c(0.5, 0.0))
    }
}

prop_compose! {
    fn density(n: usize)(m in matrix(n)) -> DensityMatrix {
        let gg = &m * &m.dagger();
        // Mix toward the identity so the trace never vanishes.
        let reg = &gg + &CMatrix::identity(n).scale(c(1e-3, 0.0));
        let tr = reg.trace().re;
        DensityMatrix::new(reg.scale(c(1.0 / tr, 0.0))).unwrap()
    }
}

prop_compose! {
    fn lindbladian(n: usize, jumps: usize)
        (h in hermitian(n), fs in prop::collection::vec(matrix(n), jumps)) -> Lindbladian {
        Lindbladian::new(h, fs).unwrap()
    }
}

fn vec_of(m: &CMatrix) -> Vec<C64> {
    let (r, cdim) = (m.rows(), m.cols());
    let mut out = Vec::with_capacity(r * cdim);
    for i in 0..r {
        for j in 0..cdim {
            out.push(m.get(i, j));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // (A (x) B)(C (x) D) = (A C) (x) (B D)
    #[test]
    fn kron_respects_the_mixed_product(
        a in matrix(2), b in matrix(3), cm in matrix(2), d in matrix(3)
    ) {
        let lhs = &a.kron(&b).unwrap() * &cm.kron(&d).unwrap();
        let rhs = (&a * &cm).kron(&(&b * &d)).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
    }

    // tr[(L^dag a)^dag b] = tr[a^dag (L b)] for arbitrary a, b: the adjoint
    // really is the Hilbert-Schmidt adjoint of the generator.
    #[test]
    fn generator_and_adjoint_are_hs_duals(
        lind in lindbladian(3, 2), a in matrix(3), b in matrix(3)
    ) {
        let lhs = qsl_core::linalg::trace_product(&lind.apply_adjoint_to(&a).dagger(), &b);
        let rhs = qsl_core::linalg::trace_product(&a.dagger(), &lind.apply(&b));
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    // The dense superoperator acts on row-major vec(rho) exactly as the
    // generator acts on rho.
    #[test]
    fn superoperator_matches_direct_application(
        lind in lindbladian(2, 2), a in matrix(2)
    ) {
        let m = lind.liouvillian_matrix().unwrap();
        let direct = vec_of(&lind.apply(&a));
        let v = vec_of(&a);
        for (i, want) in direct.iter().enumerate() {
            let acc: C64 = v
                .iter()
                .enumerate()
                .map(|(j, vj)| m.get(i, j) * vj)
                .sum();
            prop_assert!((acc - want).norm() < 1e-10);
        }
    }

    // |cos(theta) - 1| >= 4 theta^2 / pi^2 on (0, pi/2]: the tight angular
    // factor dominates the weak one, so the tight bound never drops below
    // the weak bound.
    #[test]
    fn tight_angular_factor_dominates_weak(theta in 1e-12..(PI / 2.0)) {
        prop_assert!((theta.cos() - 1.0).abs() + 1e-15 >= 4.0 * theta * theta / (PI * PI));
    }

    // Bound reports are monotone in the target angle.
    #[test]
    fn bound_grows_with_the_angle(theta1 in 0.05..1.55f64, theta2 in 0.05..1.55f64) {
        let (lo, hi) = if theta1 <= theta2 { (theta1, theta2) } else { (theta2, theta1) };
        let lind = dephasing_model(1, 1.0).unwrap();
        let rho0 = plus_state();
        let b_lo = mt_open_bound(&lind, &rho0, lo).unwrap().tau_lower;
        let b_hi = mt_open_bound(&lind, &rho0, hi).unwrap().tau_lower;
        prop_assert!(b_lo <= b_hi + 1e-12);
    }

    // Evolution preserves density-matrix validity, starts at relative
    // purity one, and the speed is gauge invariant under H -> H + c I.
    #[test]
    fn evolution_stays_physical_and_speed_is_gauge_invariant(
        lind in lindbladian(2, 1), rho0 in density(2),
        t in 0.0..3.0f64, shift in -2.0..2.0f64
    ) {
        let m = lind.liouvillian_matrix().unwrap();
        let rho_t = lind.evolve_at_with(&m, &rho0, t).unwrap();
        let f0 = relative_purity(&rho0, &rho0).unwrap();
        let ft = relative_purity(&rho0, &rho_t).unwrap();
        prop_assert!((f0 - 1.0).abs() < 1e-12);
        prop_assert!(ft.is_finite() && ft > -1e-12);

        let shifted = Lindbladian::new(
            lind.hamiltonian() + &CMatrix::identity(2).scale(c(shift, 0.0)),
            lind.jumps().to_vec(),
        ).unwrap();
        let v1 = speed_v(&lind, &rho0).unwrap();
        let v2 = speed_v(&shifted, &rho0).unwrap();
        prop_assert!((v1 - v2).abs() < 1e-9 * v1.max(1.0));
    }

    // Purity of a Bloch state is (1 + |r|^2) / 2.
    #[test]
    fn bloch_purity_tracks_the_radius(x in -0.57..0.57f64, y in -0.57..0.57f64, z in -0.57..0.57f64) {
        let b = BlochState::new(x, y, z).unwrap();
        let rho = bloch_to_density(&b);
        prop_assert!((rho.purity() - (1.0 + b.norm_sq()) / 2.0).abs() < 1e-12);
    }
}
