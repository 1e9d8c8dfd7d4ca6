//! Samples the exact oracle on a regular grid and answers queries by
//! trilinear interpolation; shows the error shrinking with resolution.
//!
//!     cargo run --release --example voxelize_mesh [out.vsdf]

use sdf_collide::collision::SdfProvider;
use sdf_collide::geometry::{normalize, MeshSdf};
use sdf_collide::sampling::{sample_near_surface, sampling_box};
use sdf_collide::voxel::VoxelGrid;
use sdf_collide::{shapes, Vec3};

fn main() -> sdf_collide::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("bunny.vsdf").display().to_string());
    let (mesh, norm) = normalize(&shapes::default_bunny())?;
    let oracle = MeshSdf::new(mesh)?;
    let probe: Vec<Vec3> = sample_near_surface(&oracle, 5000, 0.05, 3).iter().map(|s| s.point()).collect();
    let exact = oracle.distance(&probe);

    let mut last = None;
    for n in [16, 32, 64] {
        let grid = VoxelGrid::build(&oracle, n, sampling_box(), false)?;
        let got = grid.distance(&probe);
        let errors: Vec<f64> = got.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let max = errors.iter().cloned().fold(0.0, f64::max);
        println!(
            "N = {n:>3}: {:>9} bytes  mean |error| {mean:.2e} ({:.3} mm)  max {max:.2e}  cell diagonal {:.2e}",
            grid.file_bytes(),
            norm.length_to_mm(mean),
            grid.cell_diagonal()
        );
        last = Some(grid);
    }
    let grid = last.unwrap();
    grid.save(&out)?;
    println!("wrote {out}");
    Ok(())
}
