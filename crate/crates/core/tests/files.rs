use xaieval_core::fixture::Fixture;
use xaieval_core::io::{read_qtensor, write_qtensor, DType};
use xaieval_core::model::qnn::{load_model, save_model};
use xaieval_core::{Error, Rng, Tensor};

#[test]
fn f64_tensors_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.qten");
    let mut rng = Rng::from_seed(1);
    let t = Tensor::new(vec![3, 2, 5], (0..30).map(|_| rng.normal() * 1e3).collect()).unwrap();
    write_qtensor(&t, DType::F64, &path).unwrap();
    let back = read_qtensor(&path).unwrap();
    assert_eq!(back.shape(), t.shape());
    assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn f32_and_u32_round_trip_at_their_precision() {
    let dir = tempfile::tempdir().unwrap();
    let t = Tensor::new(vec![4], vec![0.1, -2.5, 3.0, 1e-3]).unwrap();
    let p = dir.path().join("f.qten");
    write_qtensor(&t, DType::F32, &p).unwrap();
    let back = read_qtensor(&p).unwrap();
    for (a, b) in back.data().iter().zip(t.data()) {
        assert_eq!(*a, f64::from(*b as f32));
    }
    let u = Tensor::new(vec![2, 2], vec![0.0, 1.0, 7.0, 4_000_000_000.0]).unwrap();
    let p = dir.path().join("u.qten");
    write_qtensor(&u, DType::U32, &p).unwrap();
    assert_eq!(read_qtensor(&p).unwrap().data(), u.data());
}

#[test]
fn truncated_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.qten");
    write_qtensor(&Tensor::new(vec![8], vec![1.0; 8]).unwrap(), DType::F64, &p).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
    match read_qtensor(&p) {
        Err(Error::TruncatedPayload { expected, actual }) => assert_eq!((expected, actual), (64, 59)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn saved_fixture_model_keeps_its_predictions() {
    let fx = Fixture::build(0).unwrap();
    assert!(fx.test_accuracy >= 0.95, "accuracy {}", fx.test_accuracy);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("model.json");
    save_model(&fx.model, &p).unwrap();
    let (loaded, notes) = load_model(&p).unwrap();
    assert!(notes.is_empty());
    let before = fx.model.forward(&fx.test.inputs).unwrap();
    let after = loaded.forward(&fx.test.inputs).unwrap();
    let worst = before.data().iter().zip(after.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5, "max output change {worst}");
}
