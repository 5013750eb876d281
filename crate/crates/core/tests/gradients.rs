mod support;

use support::*;
use xaieval_core::{Classifier, Rng};

#[test]
fn input_gradients_match_central_differences() {
    let mut rng = Rng::from_seed(20);
    for arch in 0..20 {
        let model = random_architecture(&mut rng);
        for _ in 0..3 {
            let x: Vec<f64> = (0..model.input_len()).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let err = gradient_relative_error(&model, &x, 1e-5);
            assert!(err <= 1e-5, "architecture {arch}: relative error {err}");
        }
    }
}

#[test]
fn linear_model_gradient_is_the_weight_row() {
    let mut rng = Rng::from_seed(21);
    let model = linear_model(6, &mut rng);
    let x = vec![0.3; 6];
    let g0 = model.logit_gradient(&x, 0).unwrap();
    let g1 = model.logit_gradient(&x, 1).unwrap();
    let e = |i: usize| {
        let mut v = vec![0.0; 6];
        v[i] = 1.0;
        v
    };
    let zero = model.logits(&[0.0; 6]);
    for i in 0..6 {
        let z = model.logits(&e(i));
        assert!((z[0] - zero[0] - g0[i]).abs() < 1e-12);
        assert!((z[1] - zero[1] - g1[i]).abs() < 1e-12);
    }
}
