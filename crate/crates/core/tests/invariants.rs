//! Property tests over the public metric and algebra surface.

use kvn_forms::grassmann::{contraction_op, wedge_op, Algebra};
use kvn_forms::linalg::{c, hermiticity_deviation, max_abs};
use kvn_forms::metrics::{
    adjoint, gauge_metric, general_metric, svh_metric, symplectic_metric, GeneralFamily,
};
use ndarray::Array1;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn builders_yield_conjugate_symmetric_metrics_with_real_norms(
        b in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
        re in proptest::collection::vec(-2.0..2.0f64, 4),
        im in proptest::collection::vec(-2.0..2.0f64, 4),
    ) {
        let alg = Algebra::new(1);
        let metrics = vec![
            svh_metric(&alg),
            gauge_metric(&alg).unwrap(),
            symplectic_metric(&alg),
            general_metric(&alg, GeneralFamily::A { b }).unwrap(),
        ];
        let psi = Array1::from_shape_fn(4, |k| c(re[k], im[k]));
        for m in metrics {
            prop_assert!(hermiticity_deviation(m.matrix()) < 1e-12);
            let norm = m.pairing(&psi, &psi);
            prop_assert!(norm.im.abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_respects_products_and_involution(
        b in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
        seed in 0u64..500,
    ) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let alg = Algebra::new(1);
        let metric = general_metric(&alg, GeneralFamily::A { b }).unwrap();
        let m = ndarray::Array2::from_shape_fn((4, 4), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let op = kvn_forms::GrassmannOperator::new(&alg, m.clone(), kvn_forms::Parity::Even)
            .unwrap();
        let twice = adjoint(&metric, &adjoint(&metric, &op).unwrap()).unwrap();
        prop_assert!(max_abs(&(&twice.matrix - &m)) < 1e-10);
    }

    #[test]
    fn wedge_contraction_adjoint_pairs_under_svh(n in 1usize..3, a in 0usize..4) {
        let alg = Algebra::new(n);
        prop_assume!(a < 2 * n);
        let svh = svh_metric(&alg);
        let w = wedge_op(&alg, a).unwrap();
        let d = contraction_op(&alg, a).unwrap();
        let adj = adjoint(&svh, &w).unwrap();
        prop_assert!(max_abs(&(&adj.matrix - &d.matrix)) < 1e-12);
    }
}
