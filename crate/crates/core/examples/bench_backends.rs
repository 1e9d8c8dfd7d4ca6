//! Times the contact-point computation for the oracle and voxel backends on
//! two meshes of different size and writes the CSV report.
//!
//!     cargo run --release --example bench_backends [out.csv]

use sdf_collide::bench::{default_thread_modes, run_bench, BenchCase, BenchConfig};
use sdf_collide::geometry::{normalize, MeshSdf};
use sdf_collide::sampling::sampling_box;
use sdf_collide::shapes;
use sdf_collide::voxel::VoxelGrid;

fn main() -> sdf_collide::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("bench.csv").display().to_string());
    let small = MeshSdf::new(normalize(&shapes::default_bunny())?.0)?;
    let large = MeshSdf::new(normalize(&shapes::bunny(160))?.0)?;
    let small_grid = VoxelGrid::build(&small, 48, sampling_box(), false)?;
    let large_grid = VoxelGrid::build(&large, 48, sampling_box(), false)?;
    println!("meshes: {} and {} triangles", small.mesh().triangle_count(), large.mesh().triangle_count());

    let cases = [
        BenchCase { mesh: "bunny".into(), providers: vec![&small, &small_grid] },
        BenchCase { mesh: "bunny-fine".into(), providers: vec![&large, &large_grid] },
    ];
    let cfg = BenchConfig { query_counts: vec![5_000, 20_000], threads: default_thread_modes(), ..Default::default() };
    let report = run_bench(&cases, &cfg)?;
    print!("{report}");
    report.write_csv(&out)?;
    println!("wrote {out}");
    Ok(())
}
