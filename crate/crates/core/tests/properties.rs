use proptest::prelude::*;
use tenclass::classifiers::{classify, recheck_witness, Class, Classifier, Config};
use tenclass::subdivision::{component_coeffs, Simplex};
use tenclass::{io, Tensor};

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4, 1usize..=3)
}

fn tensor() -> impl Strategy<Value = Tensor> {
    shape().prop_flat_map(|(m, n)| {
        prop::collection::vec(-4i32..=4, n.pow(m as u32)).prop_map(move |v| {
            Tensor::new(m, n, v.into_iter().map(|e| e as f64 / 2.0).collect()).unwrap()
        })
    })
}

fn tensor_and_point() -> impl Strategy<Value = (Tensor, Vec<f64>)> {
    tensor().prop_flat_map(|t| {
        let n = t.dim();
        (Just(t), prop::collection::vec(0.0f64..1.0, n))
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn json_round_trip(t in tensor()) {
        prop_assert_eq!(io::from_json(&io::to_json(&t)).unwrap(), t);
    }

    #[test]
    fn permutation_relabels_components((t, x) in tensor_and_point(), rot in 0usize..3) {
        let n = t.dim();
        let sigma: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let b = t.permute(&sigma).unwrap();
        let mut y = vec![0.0; n];
        for j in 0..n {
            y[sigma[j]] = x[j];
        }
        let fb = b.apply(&x).unwrap();
        let fa = t.apply(&y).unwrap();
        for i in 0..n {
            prop_assert!(close(fb[i], fa[sigma[i]]));
        }
    }

    #[test]
    fn symmetrize_keeps_the_form((t, x) in tensor_and_point()) {
        let s = t.symmetrize();
        prop_assert!(s.is_symmetric());
        for (u, v) in s.symmetrize().entries().iter().zip(s.entries()) {
            prop_assert!(close(*u, *v));
        }
        prop_assert!(close(s.form_value(&x).unwrap(), t.form_value(&x).unwrap()));
    }

    #[test]
    fn mode_scaling_is_a_change_of_variables((t, x) in tensor_and_point(), d in prop::collection::vec(0.25f64..4.0, 3)) {
        let d = &d[..t.dim()];
        let scaled = t.scale_modes(d).unwrap();
        let dx: Vec<f64> = x.iter().zip(d).map(|(a, b)| a * b).collect();
        for (u, v) in scaled.apply(&x).unwrap().iter().zip(t.apply(&dx).unwrap()) {
            prop_assert!(close(*u, v));
        }
    }

    #[test]
    fn unit_simplex_coefficients_are_entries(t in tensor()) {
        let c = component_coeffs(&t, &Simplex::unit(t.dim())).unwrap();
        let flat: Vec<f64> = c.into_iter().flatten().collect();
        prop_assert_eq!(flat, t.entries().to_vec());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn witnesses_re_check_and_reports_are_consistent(t in tensor()) {
        let cfg = Config::default();
        let report = classify(&t, &cfg).unwrap();
        prop_assert!(report.consistency_violations.is_empty(), "{:?}", report.consistency_violations);
        for (class, v) in &report.verdicts {
            prop_assert!(recheck_witness(&t, *class, v, cfg.interior_margin).is_ok(), "{class}");
        }
    }

    #[test]
    fn positive_scaling_preserves_semi_positivity(t in tensor(), k in 0.1f64..10.0) {
        let cfg = Config::default();
        let a = Classifier::new(&t, &cfg).unwrap().verdict(Class::E0).unwrap().status();
        let b = Classifier::new(&t.scale(k), &cfg).unwrap().verdict(Class::E0).unwrap().status();
        prop_assert_eq!(a, b);
    }
}
