mod support;

use proptest::prelude::*;
use support::random_architecture;
use xaieval_core::metrics::complexity::{complexity, effective_complexity, sparseness};
use xaieval_core::metrics::faithfulness::{monotonicity, perturbation_curve, CurveOptions};
use xaieval_core::metrics::localisation::{localisation_auc, pointing_game, relevance_rank_accuracy, top_k_intersection};
use xaieval_core::{BaselineSpec, Classifier, Rng};

const D: usize = 12;

/// Strictly increasing maps on `[-2, 2]`.
fn monotone(kind: u8, p: f64, v: f64) -> f64 {
    match kind % 4 {
        0 => (1.0 + p) * v + 3.0 * p - 1.0,
        1 => v * v * v + p * v,
        2 => (p * v).exp() + v,
        _ => v.atan() * (1.0 + p) - 7.0,
    }
}

fn attribution() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![(-2.0..2.0f64), (0u8..4).prop_map(|k| f64::from(k) * 0.5 - 1.0)], D)
}

fn mask() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), D).prop_filter("mixed mask", |m| m.iter().any(|&b| b) && !m.iter().all(|&b| b))
}

fn setup(seed: u64) -> (xaieval_core::Model, Vec<f64>) {
    let mut rng = Rng::from_seed(seed);
    let model = loop {
        let m = random_architecture(&mut rng);
        if m.input_len() <= 64 {
            break m;
        }
    };
    let x = (0..model.input_len()).map(|_| rng.uniform()).collect();
    (model, x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn localisation_is_rank_invariant(a in attribution(), m in mask(), kind in 0u8..4, p in 0.1..1.0f64, k in 1usize..=D) {
        let b: Vec<f64> = a.iter().map(|&v| monotone(kind, p, v)).collect();
        prop_assert_eq!(pointing_game(&a, &m).unwrap(), pointing_game(&b, &m).unwrap());
        prop_assert_eq!(top_k_intersection(&a, &m, k).unwrap(), top_k_intersection(&b, &m, k).unwrap());
        prop_assert_eq!(relevance_rank_accuracy(&a, &m).unwrap(), relevance_rank_accuracy(&b, &m).unwrap());
        prop_assert_eq!(localisation_auc(&a, &m).unwrap(), localisation_auc(&b, &m).unwrap());
    }

    #[test]
    fn faithfulness_orderings_are_rank_invariant(
        seed in any::<u64>(),
        kind in 0u8..4,
        p in 0.1..1.0f64,
        step in 1usize..5,
        noise in any::<bool>(),
    ) {
        let (model, x) = setup(seed);
        let mut rng = Rng::from_seed(seed);
        let a: Vec<f64> = (0..x.len()).map(|i| if i % 5 == 0 { 0.5 } else { rng.uniform_range(-2.0, 2.0) }).collect();
        let b: Vec<f64> = a.iter().map(|&v| monotone(kind, p, v)).collect();
        let opts = CurveOptions {
            features_in_step: step,
            baseline: if noise { BaselineSpec::UniformNoise } else { BaselineSpec::Black },
            ..CurveOptions::default()
        };
        let shape = model.input_shape().to_vec();
        let class = seed as usize % model.num_classes();
        let run = |attr: &[f64]| perturbation_curve(&model, &x, &shape, class, attr, &opts, &mut Rng::from_seed(seed)).unwrap();
        prop_assert_eq!(run(&a), run(&b));
        let mono = |attr: &[f64]| monotonicity(&model, &x, &shape, class, attr, 1, &opts.baseline, &mut Rng::from_seed(seed));
        match (mono(&a), mono(&b)) {
            (Ok(u), Ok(v)) => prop_assert_eq!(u, v),
            (Err(u), Err(v)) => prop_assert_eq!(u.code(), v.code()),
            (u, v) => prop_assert!(false, "{:?} vs {:?}", u, v),
        }
    }

    #[test]
    fn complexity_is_scale_invariant(a in attribution(), c in 1e-3..1e3f64) {
        prop_assume!(a.iter().any(|&v| v != 0.0));
        let b: Vec<f64> = a.iter().map(|&v| c * v).collect();
        prop_assert!((sparseness(&a).unwrap() - sparseness(&b).unwrap()).abs() <= 1e-12);
        prop_assert!((complexity(&a).unwrap() - complexity(&b).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(effective_complexity(&a, 1e-5).unwrap(), effective_complexity(&b, 1e-5).unwrap());
    }
}
