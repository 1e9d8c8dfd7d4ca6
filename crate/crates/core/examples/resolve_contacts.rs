//! Collision detection and response against interchangeable fields: points
//! inside the `epsilon` offset surface are projected back along the normal.
//! The same code works on an analytic sphere, a posed mesh oracle and a
//! voxel grid.

use sdf_collide::collision::{resolve, CollisionConfig, RigidTransform, SdfProvider, SphereSdf, Transformed};
use sdf_collide::geometry::{normalize, MeshSdf};
use sdf_collide::sampling::sampling_box;
use sdf_collide::voxel::VoxelGrid;
use sdf_collide::{shapes, Vec3};

fn report(name: &str, field: &dyn SdfProvider, points: &[Vec3], cfg: &CollisionConfig) {
    let out = resolve(field, points, cfg);
    let after = field.distance(&out.resolved);
    let worst = after.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "{name:<16} {:>4} of {} points collided, min f after projection {worst:+.2e} (epsilon {})",
        out.collided_count(),
        points.len(),
        cfg.epsilon
    );
}

fn main() -> sdf_collide::Result<()> {
    let points: Vec<Vec3> = (0..1000)
        .map(|i| {
            let t = i as f64 * 0.618_033_988_75;
            Vec3::new((t * 7.0).sin(), (t * 3.0).cos(), (t * 5.0).sin() * (t * 2.0).cos()) * 0.8
        })
        .collect();
    let cfg = CollisionConfig::new(0.01, 3)?;

    report("sphere", &SphereSdf::new(Vec3::zeros(), 0.5), &points, &cfg);

    let (mesh, _) = normalize(&shapes::default_bunny())?;
    let oracle = MeshSdf::new(mesh)?;
    let pose = RigidTransform::from_axis_angle(Vec3::y(), 0.7, Vec3::new(0.1, 0.0, 0.0));
    report("posed oracle", &Transformed::new(&oracle, pose), &points, &cfg);

    let grid = VoxelGrid::build(&oracle, 64, sampling_box(), false)?;
    report("voxel grid", &grid, &points, &cfg);
    Ok(())
}
