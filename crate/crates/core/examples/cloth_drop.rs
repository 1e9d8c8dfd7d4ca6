//! Drops a mass-spring cloth onto the bunny oracle and writes
//! `frame_%05d.obj` files plus a containment CSV.
//!
//!     cargo run --release --example cloth_drop [out_dir]

use sdf_collide::cloth::{init_cloth, simulate, ObjFrameWriter, SimConfig};
use sdf_collide::collision::{CollisionConfig, ModelFrame};
use sdf_collide::geometry::{normalize, MeshSdf};
use sdf_collide::{shapes, Vec3};

fn main() -> sdf_collide::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("cloth_drop").display().to_string());
    let bunny = shapes::default_bunny();
    let (lo, hi) = bunny.bounding_box();
    let (mesh, norm) = normalize(&bunny)?;
    let oracle = MeshSdf::new(mesh)?;
    // the simulation runs in meters
    let field = ModelFrame::new(&oracle, norm);

    let mut cloth = init_cloth(32, 32, 0.2 / 31.0, 0.1, &[])?;
    let centre = (lo + hi) * 0.5;
    cloth.translate(Vec3::new(centre.x, hi.y + 0.01, centre.z));
    let cfg = SimConfig { steps: 300, collision: CollisionConfig::new(1e-3, 3)?, ..Default::default() };
    println!("{} substeps per step", cfg.substeps_for(&cloth));

    let mut writer = ObjFrameWriter::new(&out, Some(&field), cfg.collision.epsilon - 1e-5)?;
    simulate(&mut cloth, &cfg, Some(&field), 30, &mut writer)?;
    writer.write_csv(std::path::Path::new(&out).join("containment.csv"))?;
    for s in &writer.stats {
        println!("frame {:>3} step {:>3}: min distance {:.3} mm, contained {:.1}%", s.frame, s.step, s.min_distance * 1e3, s.contained * 100.0);
    }
    println!("frames in {out}");
    Ok(())
}
