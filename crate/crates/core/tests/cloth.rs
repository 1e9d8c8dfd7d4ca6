use sdf_collide::cloth::{init_cloth, simulate, step, ClothState, ObjFrameWriter, SimConfig};
use sdf_collide::collision::{BoxSdf, CollisionConfig, SdfProvider, SphereSdf};
use sdf_collide::geometry::{normalize, MeshSdf};
use sdf_collide::{shapes, Vec3};

fn drop_config(steps: usize, epsilon: f64, iters: usize) -> SimConfig {
    SimConfig {
        steps,
        collision: CollisionConfig::new(epsilon, iters).unwrap(),
        ..Default::default()
    }
}

fn cloth(n: usize, size: f64, height: f64) -> ClothState {
    let mut c = init_cloth(n, n, size / (n - 1) as f64, 0.1, &[]).unwrap();
    c.translate(Vec3::new(0.013, height, -0.007));
    c
}

#[test]
fn every_frame_stays_outside_a_sphere() {
    let sphere = SphereSdf::new(Vec3::zeros(), 0.3);
    let cfg = drop_config(200, 1e-3, 2);
    let mut state = cloth(20, 0.5, 0.33);
    let mut worst = f64::INFINITY;
    simulate(&mut state, &cfg, Some(&sphere), 1, &mut |_: usize, s: &ClothState| {
        worst = worst.min(sphere.distance(&s.positions).into_iter().fold(f64::INFINITY, f64::min));
        Ok(())
    })
    .unwrap();
    assert!(worst >= cfg.collision.epsilon - 1e-6, "min distance {worst}");
    // the cloth settled onto the sphere rather than stopping early
    let top = sphere.distance(&state.positions).into_iter().fold(f64::INFINITY, f64::min);
    assert!(top < 2e-3, "{top}");
}

#[test]
fn cloth_drapes_over_a_box_edge() {
    let cube = BoxSdf::new(Vec3::new(0.1, 0.0, 0.0), Vec3::repeat(0.2));
    let cfg = drop_config(150, 2e-3, 2);
    let mut state = cloth(16, 0.5, 0.25);
    simulate(&mut state, &cfg, Some(&cube), 10, &mut |_: usize, _: &ClothState| Ok(())).unwrap();
    let d = cube.distance(&state.positions);
    assert!(d.iter().all(|&v| v >= cfg.collision.epsilon - 1e-6));
    // vertices past the edge have fallen below the top face
    assert!(state.positions.iter().any(|p| p.y < 0.15));
}

#[test]
fn mesh_oracle_contains_cloth() {
    let (mesh, _) = normalize(&shapes::icosphere(3, 1.0)).unwrap();
    let oracle = MeshSdf::new(mesh).unwrap();
    let mut cfg = drop_config(120, 0.01, 3);
    cfg.gravity = [0.0, -9.81 * 10.0, 0.0];
    let mut state = cloth(16, 2.0, 1.0);
    simulate(&mut state, &cfg, Some(&oracle), 1, &mut |_: usize, s: &ClothState| {
        let d = oracle.distance(&s.positions);
        let ok = d.iter().filter(|&&v| v >= 0.01 - 1e-3).count();
        assert!(ok as f64 >= 0.999 * d.len() as f64);
        Ok(())
    })
    .unwrap();
}

#[test]
fn frames_are_written_and_deterministic() {
    let sphere = SphereSdf::new(Vec3::zeros(), 0.3);
    let cfg = drop_config(30, 1e-3, 1);
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let mut state = cloth(8, 0.4, 0.35);
        let mut w = ObjFrameWriter::new(dir.path().join(sub), Some(&sphere), 1e-3 - 1e-6).unwrap();
        simulate(&mut state, &cfg, Some(&sphere), 10, &mut w).unwrap();
        w.write_csv(dir.path().join(sub).join("stats.csv")).unwrap();
        (state, w.stats.len())
    };
    let (a, frames) = run("a");
    let (b, _) = run("b");
    assert_eq!(frames, 4);
    assert_eq!(a.positions, b.positions);
    for f in 0..frames {
        let name = format!("frame_{f:05}.obj");
        let fa = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        assert_eq!(fa, std::fs::read(dir.path().join("b").join(&name)).unwrap());
        let text = String::from_utf8(fa).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 64);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 49);
    }
}

#[test]
fn free_fall_without_field_matches_recurrence() {
    let cfg = SimConfig {
        damping: 0.0,
        substeps: Some(1),
        dt: 1e-3,
        ..Default::default()
    };
    let mut state = init_cloth(3, 3, 0.1, 0.01, &[]).unwrap();
    let start = state.positions.clone();
    for s in 1..=1000 {
        step(&mut state, &cfg, None, s).unwrap();
    }
    let n = 1000.0f64;
    let drop = n * (n + 1.0) / 2.0 * 9.81 * 1e-6;
    for (p, q) in state.positions.iter().zip(&start) {
        let expect = q.y - drop;
        assert!(((p.y - expect) / expect).abs() < 1e-9);
    }
}

#[test]
fn invalid_configs_fail_before_stepping() {
    let mut state = cloth(4, 0.1, 0.0);
    for cfg in [
        SimConfig { dt: 0.0, ..Default::default() },
        SimConfig { damping: 1.0, ..Default::default() },
        SimConfig { substeps: Some(0), ..Default::default() },
    ] {
        assert!(simulate(&mut state, &cfg, None, 1, &mut |_: usize, _: &ClothState| Ok(())).is_err());
    }
}

#[test]
fn full_size_cloth_on_sphere_is_fully_contained() {
    let sphere = SphereSdf::new(Vec3::zeros(), 0.1);
    let cfg = drop_config(500, 1e-3, 3);
    let mut state = init_cloth(64, 64, 0.3 / 63.0, 0.2, &[]).unwrap();
    state.translate(Vec3::new(0.0, 0.111, 0.0));
    simulate(&mut state, &cfg, Some(&sphere), 500, &mut |_: usize, _: &ClothState| Ok(())).unwrap();
    let d = sphere.distance(&state.positions);
    assert!(d.iter().all(|&v| v >= cfg.collision.epsilon - 1e-4));
}
