mod common;

use common::{central_difference, Lcg};
use sdf_collide::collision::SdfProvider;
use sdf_collide::geometry::NormalizationTransform;
use sdf_collide::neural::{load_model, save_model, train, NeuralSdf, TrainConfig};
use sdf_collide::sampling::{SamplingConfig, SdfDataset, SdfSample};
use sdf_collide::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::OnceLock;

/// Radius-0.9 sphere: 80% of the points in a Gaussian shell around the
/// surface, the rest uniform in [-2.2, 2.2]^3 clipped to the ball of radius 2.2.
fn sphere_dataset(n: usize, seed: u64) -> SdfDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    while samples.len() < n {
        let p = if samples.len() % 5 != 0 {
            let dir = Vec3::from_fn(|_, _| StandardNormal.sample(&mut rng)).normalize();
            let r: f64 = StandardNormal.sample(&mut rng);
            dir * (0.9 + 0.05 * r)
        } else {
            Vec3::from_fn(|_, _| rng.random_range(-2.2..2.2))
        };
        if p.norm() <= 2.2 {
            samples.push(SdfSample::new(p, p.norm() - 0.9));
        }
    }
    let validation = samples.split_off(n - n / 20);
    SdfDataset::from_parts(samples, validation, NormalizationTransform::identity(), SamplingConfig::default())
}

fn small_config(m: usize) -> TrainConfig {
    TrainConfig {
        epochs: 3,
        batch_size: 256,
        learning_rate: 1e-3,
        fourier_features: m,
        fourier_scale: 0.25,
        layers: 3,
        hidden_width: 32,
        seed: 3,
        ..Default::default()
    }
}

struct Fit {
    model: NeuralSdf,
    validation: f64,
}

/// The full 4x256 network on 200k sphere samples (a few minutes).
fn trained() -> &'static Fit {
    static FIT: OnceLock<Fit> = OnceLock::new();
    FIT.get_or_init(|| {
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 256,
            learning_rate: 1e-3,
            final_learning_rate: Some(1e-5),
            fourier_features: 0,
            layers: 4,
            hidden_width: 256,
            seed: 3,
            ..Default::default()
        };
        let init = NeuralSdf::init(&cfg, NormalizationTransform::identity()).unwrap();
        let (model, history) = train(&init, &sphere_dataset(200_000, 1), &cfg).unwrap();
        assert!(history.final_validation_loss() < history.initial_validation_loss);
        Fit { model, validation: history.final_validation_loss() }
    })
}

#[test]
fn learns_an_analytic_sphere() {
    let fit = trained();
    assert!(fit.validation < 1e-3, "validation L1 {}", fit.validation);
    let d = fit.model.forward(&[Vec3::new(2.0, 0.0, 0.0), Vec3::zeros()]);
    assert!((d[0] - 1.1).abs() < 5e-3, "{}", d[0]);
    // few samples land deep inside, so the centre is only roughly right
    assert!((d[1] + 0.9).abs() < 0.1, "{}", d[1]);
}

#[test]
fn normals_point_away_from_the_centre() {
    let model = &trained().model;
    let n = model.normal(&[Vec3::new(0.0, 0.0, 1.35)])[0];
    // piecewise-linear networks carry a few degrees of gradient noise
    assert!((n - Vec3::z()).norm() < 0.1, "{n}");
    let mut rng = Lcg(2);
    let pts: Vec<Vec3> = (0..400).map(|_| rng.point(1.6)).filter(|p| (1.0..1.6).contains(&p.norm())).collect();
    let cosines: Vec<f64> = model.normal(&pts).iter().zip(&pts).map(|(n, p)| n.dot(&p.normalize())).collect();
    let mean = cosines.iter().sum::<f64>() / cosines.len() as f64;
    let worst = cosines.iter().cloned().fold(1.0, f64::min);
    assert!(mean > 0.95 && worst > 0.5, "mean cosine {mean}, worst {worst}");
}

#[test]
fn input_gradient_matches_finite_differences() {
    let model = &trained().model;
    let mut rng = Lcg(12);
    let pts: Vec<Vec3> = (0..64).map(|_| rng.point(1.2)).collect();
    let grads = model.input_gradient(&pts);
    for (p, g) in pts.iter().zip(&grads) {
        let fd = central_difference(|x| model.forward(&[*x])[0], p, 1e-6);
        let rel = (g - fd).norm() / g.norm().max(1e-3);
        assert!(rel < 1e-4, "{:?} vs {:?}", g.as_slice(), fd.as_slice());
    }
}

#[test]
fn model_file_round_trip_is_bit_identical() {
    let model = &trained().model;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.nsdf");
    save_model(model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let mut rng = Lcg(6);
    let pts: Vec<Vec3> = (0..500).map(|_| rng.point(1.2)).collect();
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(model.forward(&pts)), bits(back.forward(&pts)));
    assert_eq!(model.input_gradient(&pts), back.input_gradient(&pts));
    assert_eq!(back.config(), model.config());
}

#[test]
fn training_is_deterministic_and_plain_mlp_works() {
    let cfg = small_config(0);
    let data = sphere_dataset(4000, 9);
    let init = NeuralSdf::init(&cfg, NormalizationTransform::identity()).unwrap();
    let (a, _) = train(&init, &data, &cfg).unwrap();
    let (b, _) = train(&init, &data, &cfg).unwrap();
    assert_eq!(a.params(), b.params());
    assert_eq!(a.dims()[0], 3);
    assert_eq!(NeuralSdf::init(&small_config(16), NormalizationTransform::identity()).unwrap().dims()[0], 32);
}

#[test]
fn truncated_model_file_is_rejected() {
    let model = &trained().model;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.nsdf");
    save_model(model, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(load_model(&path).is_err());
    assert!(load_model(dir.path().join("missing.nsdf")).is_err());
}
