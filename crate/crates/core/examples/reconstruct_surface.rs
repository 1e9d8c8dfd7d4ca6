//! Marching cubes on a voxel field, with the chamfer distance to the source
//! mesh and the near-surface error against the exact oracle.
//!
//!     cargo run --release --example reconstruct_surface [out.obj]

use sdf_collide::geometry::{normalize, write_obj, MeshSdf};
use sdf_collide::reconstruct::{evaluate_accuracy, marching_cubes, AccuracyConfig};
use sdf_collide::sampling::sampling_box;
use sdf_collide::shapes;
use sdf_collide::voxel::VoxelGrid;

fn main() -> sdf_collide::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("bunny_mc.obj").display().to_string());
    let (mesh, norm) = normalize(&shapes::default_bunny())?;
    let oracle = MeshSdf::new(mesh)?;
    let grid = VoxelGrid::build(&oracle, 64, sampling_box(), false)?;

    let surface = marching_cubes(&grid, 96, &sampling_box(), 0.0)?;
    println!(
        "{} triangles, watertight: {}, volume {:.4} (source {:.4})",
        surface.triangle_count(),
        surface.is_watertight(),
        surface.signed_volume(),
        oracle.mesh().signed_volume()
    );
    let cfg = AccuracyConfig { resolution: Some(96), chamfer_samples: 20_000, ..Default::default() };
    println!("{}", evaluate_accuracy(&grid, &oracle, &norm, &cfg)?);

    write_obj(&surface.map_vertices(|v| norm.invert(v)), &out)?;
    println!("wrote {out}");
    Ok(())
}
