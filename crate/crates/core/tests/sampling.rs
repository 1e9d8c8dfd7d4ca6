mod common;

use common::brute_signed_distance;
use sdf_collide::geometry::{normalize, MeshSdf};
use sdf_collide::sampling::{build_dataset, read_dataset, write_dataset, SamplingConfig, SAMPLE_BOX_HALF};
use sdf_collide::shapes;

fn bunny() -> (MeshSdf, sdf_collide::geometry::NormalizationTransform) {
    let (mesh, norm) = normalize(&shapes::bunny(24)).unwrap();
    (MeshSdf::new(mesh).unwrap(), norm)
}

#[test]
fn labels_agree_with_independent_oracle() {
    let (oracle, norm) = bunny();
    let cfg = SamplingConfig { total: 2000, seed: 5, ..Default::default() };
    let ds = build_dataset(&oracle, &norm, &cfg).unwrap();
    assert_eq!(ds.len(), 2000);
    assert_eq!(ds.validation.len(), 100);
    for s in ds.samples().step_by(20) {
        let exact = brute_signed_distance(oracle.mesh(), &s.point());
        assert!((s.d as f64 - exact).abs() < 1e-5, "{} vs {exact}", s.d);
    }
    assert!(ds.samples().all(|s| s.p.iter().all(|c| c.abs() <= SAMPLE_BOX_HALF as f32 + 0.5)));
}

#[test]
fn near_ratio_shapes_the_distribution() {
    let (oracle, norm) = bunny();
    let near = |ratio: f64| {
        let cfg = SamplingConfig { total: 4000, near_ratio: ratio, seed: 2, ..Default::default() };
        let ds = build_dataset(&oracle, &norm, &cfg).unwrap();
        ds.samples().filter(|s| s.d.abs() < 0.1).count() as f64 / ds.len() as f64
    };
    let (hi, lo) = (near(0.9), near(0.1));
    assert!(hi > 0.8 && lo < 0.4, "{hi} {lo}");
}

#[test]
fn same_seed_gives_identical_files() {
    let (oracle, norm) = bunny();
    let cfg = SamplingConfig { total: 3000, seed: 17, ..Default::default() };
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.sdfd"), dir.path().join("b.sdfd"));
    write_dataset(&build_dataset(&oracle, &norm, &cfg).unwrap(), &a).unwrap();
    write_dataset(&build_dataset(&oracle, &norm, &cfg).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let back = read_dataset(&a).unwrap();
    let fresh = build_dataset(&oracle, &norm, &cfg).unwrap();
    assert!(back.train == fresh.train && back.validation == fresh.validation);
    assert_eq!(back.config, cfg);
    assert!((back.norm.scale - norm.scale).abs() < 1e-5 * norm.scale);

    let other = build_dataset(&oracle, &norm, &SamplingConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(other.train, back.train);
}

#[test]
fn invalid_configs_are_rejected() {
    let (oracle, norm) = bunny();
    for cfg in [
        SamplingConfig { near_ratio: 1.5, ..Default::default() },
        SamplingConfig { margin: 0.0, ..Default::default() },
    ] {
        assert!(build_dataset(&oracle, &norm, &cfg).is_err());
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sdfd");
    std::fs::write(&bad, b"XXXX0000").unwrap();
    assert!(read_dataset(&bad).is_err());
}
