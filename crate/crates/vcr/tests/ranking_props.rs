use ndarray::{concatenate, Array1, Array2, Axis};
use proptest::prelude::*;
use vcr::ranking::{fit_cav, sensitivity, student_t_sf, t_test_one_sample};

fn matrix(n: usize, d: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-3.0f64..3.0, n * d).prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
}

fn vector(n: usize) -> impl Strategy<Value = Array1<f64>> {
    prop::collection::vec(-3.0f64..3.0, n).prop_map(Array1::from)
}

fn problem() -> impl Strategy<Value = (Array2<f64>, Array1<f64>)> {
    (3usize..20, 1usize..8).prop_flat_map(|(n, d)| (matrix(n, d), vector(n)))
}

fn nondegenerate(y: &Array1<f64>) -> bool {
    let m = y.mean().unwrap();
    y.iter().any(|v| (v - m).abs() > 1e-3)
}

proptest! {
    #[test]
    fn cav_is_unit((a, y) in problem(), lambda in 0.01f64..10.0) {
        prop_assume!(nondegenerate(&y));
        if let Ok(c) = fit_cav(a.view(), y.view(), lambda, true) {
            prop_assert!((c.unit_vector.dot(&c.unit_vector).sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_is_stationary((a, y) in problem(), lambda in 0.1f64..10.0) {
        prop_assume!(nondegenerate(&y));
        if let Ok(c) = fit_cav(a.view(), y.view(), lambda, true) {
            let ac = &a - &a.mean_axis(Axis(0)).unwrap();
            let yc = &y - y.mean().unwrap();
            let w = &c.raw_weights;
            let grad = ac.t().dot(&(ac.dot(w) - &yc)) + w * lambda;
            prop_assert!(grad.iter().all(|g| g.abs() < 1e-8), "{grad}");
        }
    }

    #[test]
    fn positive_label_scaling_keeps_the_direction((a, y) in problem(), c in 0.01f64..100.0) {
        prop_assume!(nondegenerate(&y));
        if let (Ok(u), Ok(v)) = (fit_cav(a.view(), y.view(), 1.0, true), fit_cav(a.view(), (&y * c).view(), 1.0, true)) {
            prop_assert!((&u.unit_vector - &v.unit_vector).iter().all(|d| d.abs() < 1e-9));
        }
    }

    #[test]
    fn sensitivity_is_linear_and_mean_invariant((a, y) in (3usize..20).prop_flat_map(|n| (matrix(n, 7), vector(n))), c in -5.0f64..5.0, g in matrix(6, 7)) {
        prop_assume!(nondegenerate(&y));
        if let Ok(cav) = fit_cav(a.view(), y.view(), 1.0, true) {
            let psi = sensitivity(g.view(), &cav).unwrap();
            prop_assert!((sensitivity((&g * c).view(), &cav).unwrap() - c * psi).abs() < 1e-9);
            let twice = concatenate(Axis(0), &[g.view(), g.view()]).unwrap();
            prop_assert!((sensitivity(twice.view(), &cav).unwrap() - psi).abs() < 1e-12);
            let mut neg = cav.clone();
            neg.unit_vector.mapv_inplace(|v| -v);
            prop_assert!((sensitivity(g.view(), &neg).unwrap() + psi).abs() < 1e-12);
        }
    }

    #[test]
    fn t_tail_is_symmetric(t in -50.0f64..50.0, df in 1u64..200) {
        let s = student_t_sf(t, df).unwrap() + student_t_sf(-t, df).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_values_are_probabilities(samples in prop::collection::vec(-10.0f64..10.0, 2..40)) {
        let (_, p) = t_test_one_sample(&samples).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}
