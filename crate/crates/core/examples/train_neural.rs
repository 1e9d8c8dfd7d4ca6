//! Trains a small Fourier-feature network on the bunny, compares it with the
//! exact oracle and saves it as NSDF. The full-size configuration (4x256,
//! 128 frequencies, 200k samples, 100 epochs) takes several minutes; this one
//! finishes in well under a minute.
//!
//!     cargo run --release --example train_neural [out.nsdf]

use sdf_collide::geometry::{normalize, MeshSdf};
use sdf_collide::neural::{load_model, save_model, train, NeuralSdf, TrainConfig};
use sdf_collide::reconstruct::{evaluate_accuracy, AccuracyConfig};
use sdf_collide::sampling::{build_dataset, SamplingConfig};
use sdf_collide::shapes;

fn main() -> sdf_collide::Result<()> {
    env_logger::init();
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("bunny.nsdf").display().to_string());
    let (mesh, norm) = normalize(&shapes::default_bunny())?;
    let oracle = MeshSdf::new(mesh)?;
    let dataset = build_dataset(&oracle, &norm, &SamplingConfig { total: 40_000, seed: 1, ..Default::default() })?;

    let cfg = TrainConfig {
        epochs: 15,
        batch_size: 512,
        learning_rate: 1e-3,
        final_learning_rate: Some(1e-4),
        fourier_features: 32,
        fourier_scale: 0.5,
        layers: 3,
        hidden_width: 128,
        ..Default::default()
    };
    let init = NeuralSdf::init(&cfg, norm)?;
    println!("{} parameters", init.param_count());
    let (model, history) = train(&init, &dataset, &cfg)?;
    for e in history.epochs.iter().step_by(3) {
        println!("epoch {:>3}  train L1 {:.5}  validation L1 {:.5}", e.epoch, e.train_loss, e.validation_loss);
    }

    let report = evaluate_accuracy(&model, &oracle, &norm, &AccuracyConfig::default())?;
    println!("{report}");

    save_model(&model, &out)?;
    let back = load_model(&out)?;
    assert_eq!(back.params(), model.params());
    println!("wrote {out}");
    Ok(())
}
