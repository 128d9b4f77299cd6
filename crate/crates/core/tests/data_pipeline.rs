mod common;

use std::io::Write;

use gradcf::data::{
    load_csv, load_idx, read_idx_images, sample_reference_set, synth_gaussian, write_idx, Membership, Normalizer, Split,
    SynthSpec,
};
use gradcf::net::{accuracy, train, ModelFile, NetworkModel, Shape, TrainConfig};
use gradcf::rng::{stream, Stream};

const MNIST: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/mnist");

fn trained(spec: &SynthSpec, hidden: &[usize], epochs: usize) -> (NetworkModel, f64) {
    let (tr, te) = synth_gaussian(spec).unwrap();
    let mut dims = vec![spec.d];
    dims.extend_from_slice(hidden);
    dims.push(spec.classes);
    let mut m = NetworkModel::mlp(&dims, &mut stream(spec.seed, Stream::Init, 0)).unwrap();
    let cfg = TrainConfig {
        epochs,
        seed: spec.seed,
        ..TrainConfig::default()
    };
    let rep = train(&mut m, &tr, Some(&te), &cfg).unwrap();
    (m, rep.test_accuracy.unwrap())
}

#[test]
fn separable_two_dimensional_blobs_are_learned() {
    let spec = SynthSpec {
        d: 2,
        seed: 3,
        ..SynthSpec::default()
    };
    let (_, acc) = trained(&spec, &[16], 30);
    assert!(acc >= 0.98, "{acc}");
}

#[test]
fn indistinguishable_classes_stay_at_chance() {
    let spec = SynthSpec {
        d: 2,
        separation: 0.0,
        seed: 3,
        ..SynthSpec::default()
    };
    let (_, acc) = trained(&spec, &[16], 30);
    assert!((acc - 0.5).abs() <= 0.1, "{acc}");
}

#[test]
fn zero_epochs_leave_the_model_unchanged() {
    let spec = SynthSpec::default();
    let (tr, _) = synth_gaussian(&spec).unwrap();
    let before = NetworkModel::mlp(&[10, 8, 2], &mut stream(1, Stream::Init, 0)).unwrap();
    let mut after = before.clone();
    train(&mut after, &tr, None, &TrainConfig { epochs: 0, ..TrainConfig::default() }).unwrap();
    assert_eq!(before, after);
}

#[test]
fn training_is_reproducible_and_round_trips() {
    let spec = SynthSpec {
        seed: 5,
        ..SynthSpec::default()
    };
    let (a, _) = trained(&spec, &[12], 5);
    let (b, _) = trained(&spec, &[12], 5);
    assert_eq!(a, b);

    let (tr, te) = synth_gaussian(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    ModelFile::new(a.clone(), tr.normalizer().unwrap().clone(), Shape::Flat(10))
        .unwrap()
        .save(&path)
        .unwrap();
    let loaded = ModelFile::load(&path).unwrap();
    for x in te.instances() {
        let (p, q) = (a.forward(x.values()).unwrap(), loaded.model.forward(x.values()).unwrap());
        assert!(p.0.iter().zip(&q.0).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
    assert_eq!(&loaded.normalizer, tr.normalizer().unwrap());
}

#[test]
fn reference_sets_are_deterministic_and_prediction_based() {
    let spec = SynthSpec {
        seed: 2,
        ..SynthSpec::default()
    };
    let (m, _) = trained(&spec, &[12], 10);
    let (tr, _) = synth_gaussian(&spec).unwrap();
    let a = sample_reference_set(&tr, &m, 1, 100, 9, Membership::Predicted).unwrap();
    let b = sample_reference_set(&tr, &m, 1, 100, 9, Membership::Predicted).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.count(), 100);
    for &i in &a.samples {
        assert_eq!(m.predict(tr.instances()[i].values()).unwrap(), 1);
    }
    let c = sample_reference_set(&tr, &m, 1, 100, 10, Membership::Predicted).unwrap();
    assert_ne!(a.samples, c.samples);
}

#[test]
fn heloc_shaped_csv_has_22_features() {
    let names: Vec<String> = (0..22).map(|i| format!("f{i}")).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heloc.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "RiskPerformance,{}", names.join(",")).unwrap();
    for r in 0..5 {
        let row: Vec<String> = (0..22).map(|i| (r * i).to_string()).collect();
        writeln!(f, "{},{}", if r % 2 == 0 { "Bad" } else { "Good" }, row.join(",")).unwrap();
    }
    drop(f);
    let ds = load_csv(&path, "RiskPerformance", Split::Train, None).unwrap();
    assert_eq!(ds.dim(), Some(22));
    assert_eq!(ds.labels(), &[0, 1, 0, 1, 0]);
    let norm = Normalizer::fit(&ds).unwrap();
    let n = norm.apply(&ds).unwrap();
    for x in n.instances() {
        assert!(x.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
    assert!(n.instances().iter().all(|x| x.values()[0] == 0.0));
}

#[test]
fn bundled_mnist_loads_and_round_trips() {
    let train_ds = load_idx(
        format!("{MNIST}/train-images-idx3-ubyte.gz"),
        format!("{MNIST}/train-labels-idx1-ubyte.gz"),
        Split::Train,
    )
    .unwrap();
    let test_ds = load_idx(
        format!("{MNIST}/t10k-images-idx3-ubyte.gz"),
        format!("{MNIST}/t10k-labels-idx1-ubyte.gz"),
        Split::Test,
    )
    .unwrap();
    assert_eq!((train_ds.len(), test_ds.len()), (4000, 1000));
    assert_eq!(test_ds.shape(), Some(Shape::Image { height: 28, width: 28 }));
    assert_eq!(test_ds.class_count(), 10);

    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("i"), dir.path().join("l"));
    let small = test_ds.take(50);
    write_idx(&img, &lab, &small).unwrap();
    let (_, _, rewritten) = read_idx_images(&img).unwrap();
    let (_, _, original) = read_idx_images(format!("{MNIST}/t10k-images-idx3-ubyte.gz")).unwrap();
    assert_eq!(&rewritten[..], &original[..50]);
}

#[test]
fn untrained_model_accuracy_is_measurable() {
    let (_, te) = synth_gaussian(&SynthSpec::default()).unwrap();
    let m = NetworkModel::mlp(&[10, 4, 2], &mut stream(0, Stream::Init, 0)).unwrap();
    let acc = accuracy(&m, &te).unwrap();
    assert!((0.0..=1.0).contains(&acc));
}
