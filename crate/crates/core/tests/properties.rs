use flipflop_core::rng::Stream;
use flipflop_core::tucker::{tucker_error_direct, tucker_error_identity};
use flipflop_core::{flip_flop_srqr, st_hosvd, truncated_svd_oracle, DenseTensor, Engine, SketchParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flip_flop_output_is_a_valid_svd(m in 12usize..80, n in 12usize..80, k in 1usize..8, extra in 0usize..4, seed in 0u64..1000) {
        let a = Stream::new(seed, 5).gaussian_matrix(m, n);
        let l = (k + extra).min(m.min(n) - 1);
        let s = flip_flop_srqr(&a, &SketchParams::new(k).with_l(l).with_block(l.min(8), 3).with_seed(seed)).unwrap();
        prop_assert_eq!(s.u.shape(), (m, k));
        prop_assert_eq!(s.v.shape(), (n, k));
        prop_assert!(s.u.orthogonality_defect() <= 1e-12 * (k as f64).sqrt() * 10.0);
        prop_assert!(s.v.orthogonality_defect() <= 1e-12 * (k as f64).sqrt() * 10.0);
        prop_assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]) && s.sigma.iter().all(|&x| x >= 0.0));
        let opt = truncated_svd_oracle(&a, k).unwrap();
        // No rank-k approximation beats the truncated SVD, and Σ_k never exceeds σ(A).
        prop_assert!(s.relative_error(&a) >= opt.relative_error(&a) * (1.0 - 1e-12));
        for (got, exact) in s.sigma.iter().zip(&opt.sigma) {
            prop_assert!(*got <= exact * (1.0 + 1e-12));
        }
    }

    #[test]
    fn st_hosvd_factors_and_error(d0 in 2usize..9, d1 in 2usize..9, d2 in 2usize..9, r in 1usize..4, seed in 0u64..1000) {
        let mut st = Stream::new(seed, 9);
        let x = DenseTensor::from_fn(&[d0, d1, d2], |_| st.normal());
        let ranks = [r.min(d0), r.min(d1), r.min(d2)];
        let t = st_hosvd(&x, &ranks, None, &Engine::flip_flop(seed)).unwrap();
        prop_assert_eq!(t.ranks(), ranks.to_vec());
        prop_assert!(t.max_orthogonality_defect() <= 1e-11);
        prop_assert!(t.core.norm_fro() <= x.norm_fro() * (1.0 + 1e-12));
        let direct = tucker_error_direct(&x, &t).unwrap();
        let identity = tucker_error_identity(&x, &t).unwrap();
        prop_assert!((direct - identity).abs() <= 1e-6);
        prop_assert!(direct <= 1.0 + 1e-12);
    }
}
