//! Exact signed distance on a triangle mesh: load (or generate) a mesh,
//! normalize it and query distance, closest point and normal.
//!
//!     cargo run --release --example oracle_query [mesh.obj|mesh.ply]

use sdf_collide::geometry::{load_mesh, normalize, MeshSdf};
use sdf_collide::{shapes, Vec3};

fn main() -> sdf_collide::Result<()> {
    let mesh = match std::env::args().nth(1) {
        Some(path) => load_mesh(path)?,
        None => shapes::default_bunny(),
    };
    println!("{} triangles, watertight: {}", mesh.triangle_count(), mesh.is_watertight());

    let (normalized, norm) = normalize(&mesh)?;
    let oracle = MeshSdf::new(normalized)?;
    println!("1 normalized unit = {:.2} mm", norm.length_to_mm(1.0));

    for q in [Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.5, 0.2, -0.3), Vec3::new(1.1, -0.4, 0.0)] {
        let hit = oracle.query(&q);
        let c = hit.closest.point;
        println!(
            "q = ({:+.2}, {:+.2}, {:+.2})  f = {:+.5} ({:+.3} mm)  closest = ({:+.3}, {:+.3}, {:+.3})  n = ({:+.2}, {:+.2}, {:+.2})",
            q.x, q.y, q.z, hit.distance, norm.length_to_mm(hit.distance), c.x, c.y, c.z,
            hit.normal.x, hit.normal.y, hit.normal.z
        );
    }
    Ok(())
}
