mod common;

use common::Lcg;
use sdf_collide::collision::{SdfProvider, SphereSdf};
use sdf_collide::geometry::{normalize, Aabb, MeshSdf};
use sdf_collide::sampling::{sample_near_surface, sampling_box};
use sdf_collide::voxel::{VoxelGrid, VOXEL_HEADER_BYTES};
use sdf_collide::{shapes, Vec3};

fn near_error(grid: &VoxelGrid, oracle: &MeshSdf, n: usize) -> (f64, f64) {
    let pts: Vec<Vec3> = sample_near_surface(oracle, n, 0.02, 77).iter().map(|s| s.point()).collect();
    let exact = oracle.distance(&pts);
    let got = grid.distance(&pts);
    let errs: Vec<f64> = exact.iter().zip(&got).map(|(a, b)| (a - b).abs()).collect();
    (errs.iter().sum::<f64>() / n as f64, errs.iter().cloned().fold(0.0, f64::max))
}

#[test]
fn bunny_grid_error_is_below_cell_diagonal_and_shrinks() {
    let (mesh, _) = normalize(&shapes::default_bunny()).unwrap();
    let oracle = MeshSdf::new(mesh).unwrap();
    let coarse = VoxelGrid::build(&oracle, 24, sampling_box(), false).unwrap();
    let fine = VoxelGrid::build(&oracle, 48, sampling_box(), false).unwrap();
    let (mean_c, max_c) = near_error(&coarse, &oracle, 3000);
    let (mean_f, max_f) = near_error(&fine, &oracle, 3000);
    assert!(max_c < coarse.cell_diagonal(), "{max_c} vs {}", coarse.cell_diagonal());
    assert!(max_f < fine.cell_diagonal(), "{max_f} vs {}", fine.cell_diagonal());
    assert!(mean_f < mean_c, "{mean_f} !< {mean_c}");
}

#[test]
fn nodes_hold_exact_values() {
    let sphere = SphereSdf::new(Vec3::new(0.1, 0.0, -0.1), 0.5);
    let grid = VoxelGrid::build(&sphere, 20, sampling_box(), false).unwrap();
    for (i, j, k) in [(0, 0, 0), (3, 7, 11), (19, 19, 19), (10, 0, 5)] {
        let p = grid.node(i, j, k);
        let exact = sphere.distance(&[p])[0];
        assert!((grid.value_at(i, j, k) as f64 - exact).abs() < 1e-6);
        assert!((grid.query_trilinear(&p).value - exact).abs() < 1e-6);
    }
}

#[test]
fn outside_queries_are_clamped_and_flagged() {
    let sphere = SphereSdf::new(Vec3::zeros(), 0.5);
    let grid = VoxelGrid::build(&sphere, 16, Aabb { min: Vec3::repeat(-1.0), max: Vec3::repeat(1.0) }, false).unwrap();
    let s = grid.query_trilinear(&Vec3::new(3.0, 0.0, 0.0));
    assert!(s.clamped);
    assert!(s.value > 0.0);
    assert!(!grid.query_trilinear(&Vec3::new(0.2, 0.1, 0.0)).clamped);
}

#[test]
fn file_round_trip_is_bit_identical() {
    let sphere = SphereSdf::new(Vec3::zeros(), 0.5);
    let dir = tempfile::tempdir().unwrap();
    for gradients in [false, true] {
        let grid = VoxelGrid::build(&sphere, 12, sampling_box(), gradients).unwrap();
        let path = dir.path().join("g.vsdf");
        grid.save(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, grid.file_bytes());
        let back = VoxelGrid::load(&path).unwrap();
        let mut rng = Lcg(8);
        let pts: Vec<Vec3> = (0..500).map(|_| rng.point(1.3)).collect();
        let (a, ga) = grid.distance_gradient(&pts);
        let (b, gb) = back.distance_gradient(&pts);
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(ga, gb);
    }
}

#[test]
fn payload_size_follows_resolution() {
    let sphere = SphereSdf::new(Vec3::zeros(), 0.5);
    let grid = VoxelGrid::build(&sphere, 32, sampling_box(), false).unwrap();
    assert_eq!(grid.payload_bytes(), 32 * 32 * 32 * 4);
    assert_eq!(grid.file_bytes(), 32 * 32 * 32 * 4 + VOXEL_HEADER_BYTES);
    let with_grad = VoxelGrid::build(&sphere, 32, sampling_box(), true).unwrap();
    assert_eq!(with_grad.payload_bytes(), 32 * 32 * 32 * 16);
}

#[test]
fn corrupt_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.vsdf");
    let sphere = SphereSdf::new(Vec3::zeros(), 0.5);
    VoxelGrid::build(&sphere, 8, sampling_box(), false).unwrap().save(&path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 4);
    std::fs::write(&path, &bytes).unwrap();
    assert!(VoxelGrid::load(&path).is_err());
    assert!(VoxelGrid::from_values(1, sampling_box(), vec![0.0]).is_err());
}
