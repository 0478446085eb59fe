use proptest::prelude::*;
use wnuc::geometry::{make_prior_instance, principal_angles, SubspacePrior};
use wnuc::numerics::{gaussian_matrix, random_orthogonal, rng_from_seed, shrinkage_sq};
use wnuc::optweights::{gss, weights_consistency_check};
use wnuc::sdim::{psi_nuclear, psi_weighted, PsiOptions, ScaledWeights};
use wnuc::weighting::{apply_h, apply_h_inverse, WeightVector};

fn prior() -> impl Strategy<Value = SubspacePrior> {
    (6usize..12)
        .prop_flat_map(|n| (Just(n), 1usize..=n / 3))
        .prop_flat_map(|(n, r)| (Just(n), Just(r), r..=n - r))
        .prop_flat_map(|(n, r, rp)| {
            (
                Just(n),
                Just(r),
                Just(rp),
                proptest::collection::vec(0.01f64..89.99, r),
                proptest::collection::vec(0.01f64..89.99, r),
            )
        })
        .prop_map(|(n, r, rp, tu, tv)| SubspacePrior::new(n, r, rp, tu, tv).unwrap())
}

fn weights() -> impl Strategy<Value = WeightVector> {
    (0.01f64..10.0, 0.01f64..10.0, 0.01f64..10.0).prop_map(|(a, b, c)| WeightVector::new(a, b, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_round_trip(p in prior(), w in weights(), seed in 0u64..1000) {
        let inst = make_prior_instance(&p, seed).unwrap();
        let z = gaussian_matrix(p.n, p.n, seed + 1);
        let back = apply_h_inverse(&w, &inst.u_tilde, &inst.v_tilde, &apply_h(&w, &inst.u_tilde, &inst.v_tilde, &z));
        prop_assert!((back - &z).amax() <= 1e-9 * z.amax().max(1.0));
    }

    #[test]
    fn h_self_adjoint(p in prior(), w in weights(), seed in 0u64..1000) {
        let inst = make_prior_instance(&p, seed).unwrap();
        let a = gaussian_matrix(p.n, p.n, seed + 2);
        let b = gaussian_matrix(p.n, p.n, seed + 3);
        let lhs = apply_h(&w, &inst.u_tilde, &inst.v_tilde, &a).dot(&b);
        let rhs = a.dot(&apply_h(&w, &inst.u_tilde, &inst.v_tilde, &b));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn instance_round_trips_angles(p in prior(), seed in 0u64..1000) {
        let inst = make_prior_instance(&p, seed).unwrap();
        let got = principal_angles(&inst.truth.u, &inst.u_tilde).unwrap();
        for (a, b) in got.iter().zip(&p.theta_u) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn angles_invariant_under_rotation(n in 4usize..10, seed in 0u64..1000) {
        let mut rng = rng_from_seed(seed);
        let r = 1 + (seed as usize) % (n / 2);
        let a = random_orthogonal(&mut rng, n).columns(0, r).into_owned();
        let b = random_orthogonal(&mut rng, n).columns(0, r).into_owned();
        let q = random_orthogonal(&mut rng, r);
        let x = principal_angles(&a, &b).unwrap();
        let y = principal_angles(&a, &(&b * q)).unwrap();
        prop_assert!(x.iter().all(|t| (0.0..=90.0).contains(t)));
        prop_assert!(x.windows(2).all(|w| w[0] >= w[1]));
        for (s, t) in x.iter().zip(&y) {
            prop_assert!((s - t).abs() <= 1e-8);
        }
    }

    #[test]
    fn shrinkage_is_distance_to_interval(g in -10.0f64..10.0, a in 0.0f64..5.0) {
        let nearest = g.clamp(-a, a);
        prop_assert!((shrinkage_sq(g, a) - (g - nearest).powi(2)).abs() <= 1e-12 * g.powi(2).max(1.0));
    }

    #[test]
    fn equal_weights_reduce(p in prior(), t in 0.0f64..8.0) {
        let opts = PsiOptions::default();
        let a = psi_weighted(&ScaledWeights::new(t, t, t).unwrap(), &p, opts).unwrap();
        let b = psi_nuclear(t, p.n, p.r, p.r_prime, opts).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
    }

    #[test]
    fn gss_finds_quadratic_minimum(c in 0.5f64..9.5, k in 0.1f64..10.0) {
        let x = gss(|x| k * (x - c).powi(2), 0.0, 10.0, 1e-10, 300);
        prop_assert!((x - c).abs() <= 1e-6);
    }

    #[test]
    fn derived_fourth_weight_is_consistent(w in weights()) {
        prop_assert!(weights_consistency_check(w.as_array()).consistent);
        let r = w.reciprocal();
        prop_assert!((r.w4() * w.w4() - 1.0).abs() <= 1e-12);
    }
}
