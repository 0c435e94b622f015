use ars_core::acceptance::{bisection_eigenvalues, leibniz_det};
use ars_core::filters::drem_mix;
use ars_core::laws::{
    directional_forgetting, eigen_forgetting, proposed_update, tanh_forgetting, uniform_forgetting, LawParams,
};
use ars_core::linalg::{self, Mat};
use ars_core::{ThetaJump, ThetaSchedule};
use proptest::prelude::*;

fn mat(r: usize, c: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-2.0f64..2.0, r * c).prop_map(move |d| Mat::new(r, c, d).unwrap())
}

fn square() -> impl Strategy<Value = Mat> {
    (1usize..=6).prop_flat_map(|n| mat(n, n))
}

/// Symmetric positive definite with eigenvalues at least 1.
fn spd(n: usize) -> impl Strategy<Value = Mat> {
    mat(n, n).prop_map(move |g| &(&g.transpose() * &g) + &Mat::identity(n))
}

proptest! {
    #[test]
    fn adjugate_times_matrix_is_det_identity(m in square()) {
        let n = m.rows();
        let (d, adj) = linalg::det_adj(&m).unwrap();
        let resid = (&(&adj * &m) - &Mat::identity(n).scale(d)).frobenius_norm();
        let f = m.frobenius_norm();
        prop_assert!(resid <= 1e-10 * (1.0 + f.powi(n as i32)));
    }

    #[test]
    fn determinant_matches_permutation_sum(m in (1usize..=5).prop_flat_map(|n| mat(n, n))) {
        let (d, _) = linalg::det_adj(&m).unwrap();
        let oracle = leibniz_det(&m);
        prop_assert!((d - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()));
    }

    #[test]
    fn symmetric_eigenpairs(m in (1usize..=6).prop_flat_map(|n| mat(n, n)).prop_map(|m| m.symmetrized())) {
        let e = linalg::sym_eigen(&m).unwrap();
        let oracle = bisection_eigenvalues(&m);
        for (a, b) in e.values.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + m.frobenius_norm()));
        }
        let av = &m * &e.vectors;
        let vl = &e.vectors * &Mat::diag(&e.values);
        prop_assert!((&av - &vl).frobenius_norm() <= 1e-10 * (1.0 + m.frobenius_norm()));
        let vtv = &e.vectors.transpose() * &e.vectors;
        prop_assert!((&vtv - &Mat::identity(m.rows())).max_abs() <= 1e-12);
    }

    #[test]
    fn mixing_recovers_parameters(phi in spd(4), theta in mat(4, 2)) {
        let y = &phi * &theta;
        let mix = drem_mix(&phi, &y).unwrap();
        let target = theta.scale(mix.omega);
        prop_assert!(mix.omega > 0.0);
        prop_assert!((&mix.y_mixed - &target).frobenius_norm() <= 1e-9 * (1.0 + target.frobenius_norm()));
    }

    #[test]
    fn lyapunov_solution_is_spd(g in mat(3, 3), k in mat(3, 3)) {
        let a = &(&(&g.transpose() * &g).scale(-1.0) - &Mat::identity(3)) + &(&k - &k.transpose());
        let q = Mat::diag(&[1.0, 2.0, 3.0]);
        let p = linalg::solve_lyapunov(&a, &q).unwrap();
        prop_assert!(linalg::lyapunov_residual(&a, &q, &p) <= 1e-9 * q.frobenius_norm());
        prop_assert!(p.asymmetry() <= 1e-10 * (1.0 + p.frobenius_norm()));
        prop_assert!(linalg::sym_eig_min(&p).unwrap() > 0.0);
    }

    #[test]
    fn drem_only_rate_shrinks_every_component(
        theta in mat(5, 1),
        theta_hat in mat(5, 1),
        omega in 1e-3f64..1.0,
        gamma2 in 1e-2f64..1e3,
    ) {
        let mut params = LawParams::wing_rock(5);
        params.gamma1 = Mat::zeros(5, 5);
        let upsilon = theta.scale(omega);
        let pb = Mat::new(2, 1, vec![1.0, 1.0]).unwrap();
        let r = proposed_update(&params, &theta_hat, gamma2, &[0.0; 5], &[1.0, -1.0], &pb, &upsilon, omega);
        let tilde = &theta - &theta_hat;
        for i in 0..5 {
            // d/dt Θ̃ = −Θ̂̇ must oppose Θ̃
            prop_assert!(-r.theta_hat[(i, 0)] * tilde[(i, 0)] <= 0.0);
            let expect = gamma2 * omega * omega * tilde[(i, 0)];
            prop_assert!((r.theta_hat[(i, 0)] - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn gamma2_rate_respects_the_cap(gamma2 in 1.0f64..1e3, omega in 0.0f64..1e-3) {
        let mut params = LawParams::wing_rock(1);
        params.gamma2_cap = gamma2;
        let z = Mat::zeros(1, 1);
        let pb = Mat::new(1, 1, vec![1.0]).unwrap();
        let r = proposed_update(&params, &z, gamma2, &[0.0], &[0.0], &pb, &z, omega);
        prop_assert!(r.gamma2 <= 0.0);
    }

    #[test]
    fn forgetting_factors_stay_in_range(x in 0.0f64..1e3, lam in -1e-3f64..1e-3) {
        let l = tanh_forgetting(0.1, 10.0, 1.0, x);
        prop_assert!((0.1..=10.0).contains(&l));
        let e = eigen_forgetting(10.0, 1e-12, 1e-5, lam);
        prop_assert!((0.0..=10.0).contains(&e));
    }

    #[test]
    fn extension_preserves_the_regression_manifold(
        phi in spd(3),
        theta in mat(3, 1),
        v in prop::collection::vec(-1.0f64..1.0, 3),
        l in 0.0f64..20.0,
    ) {
        // with y = φΘ and δ = Θᵀφ_f the rates satisfy ẏ = φ̇Θ
        let y = &phi * &theta;
        let delta = theta.tr_mul_vec(&v);
        let u = uniform_forgetting(&y, &phi, &v, &delta, l);
        prop_assert!((&u.y - &(&u.phi * &theta)).frobenius_norm() <= 1e-9 * (1.0 + u.y.frobenius_norm()));
        let d = directional_forgetting(&y, &phi, &v, &delta, l, 1e-10, 1e-12).unwrap();
        prop_assert!((&d.y - &(&d.phi * &theta)).frobenius_norm() <= 1e-9 * (1.0 + d.y.frobenius_norm()));
        prop_assert!(d.phi.asymmetry() <= 1e-12 * (1.0 + d.phi.frobenius_norm()));
    }

    #[test]
    fn theta_schedule_is_right_continuous(t1 in 0.5f64..5.0, dt in 0.5f64..5.0, d in mat(2, 1)) {
        let theta0 = Mat::new(2, 1, vec![1.0, -1.0]).unwrap();
        let jumps = vec![
            ThetaJump { t: t1, delta: d.clone() },
            ThetaJump { t: t1 + dt, delta: d.scale(-1.0) },
        ];
        let s = ThetaSchedule::new(theta0.clone(), jumps, 0.0).unwrap();
        prop_assert_eq!(s.theta_at(t1 - 1e-9), theta0.clone());
        prop_assert_eq!(s.theta_at(t1), &theta0 + &d);
        prop_assert_eq!(s.theta_at(t1 + dt), &(&theta0 + &d) - &d);
    }
}
