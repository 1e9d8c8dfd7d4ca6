//! Labelled training samples: near-surface Gaussian offsets plus uniform box
//! samples, written as an SDFD file.
//!
//!     cargo run --release --example build_dataset [out.sdfd]

use sdf_collide::geometry::{normalize, MeshSdf};
use sdf_collide::sampling::{build_dataset, read_dataset, write_dataset, SamplingConfig};
use sdf_collide::shapes;

fn main() -> sdf_collide::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("bunny.sdfd").display().to_string());
    let (mesh, norm) = normalize(&shapes::default_bunny())?;
    let oracle = MeshSdf::new(mesh)?;

    let cfg = SamplingConfig { total: 50_000, seed: 7, ..Default::default() };
    let dataset = build_dataset(&oracle, &norm, &cfg)?;
    let inside = dataset.samples().filter(|s| s.d < 0.0).count();
    let near = dataset.samples().filter(|s| s.d.abs() < 0.05).count();
    println!(
        "{} samples ({} train / {} validation), {inside} inside, {near} within 0.05 of the surface",
        dataset.len(),
        dataset.train.len(),
        dataset.validation.len()
    );

    write_dataset(&dataset, &out)?;
    let back = read_dataset(&out)?;
    assert_eq!(back.train, dataset.train);
    println!("wrote {out} ({} bytes)", std::fs::metadata(&out)?.len());
    Ok(())
}
