//! The `sdfc` command line: one subcommand per pipeline stage. Every run that
//! writes files also writes a provenance JSON next to them.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::bench::{self, BenchCase, BenchConfig};
use crate::cloth::{self, ObjFrameWriter, SimConfig};
use crate::collision::{CollisionConfig, ModelFrame, SdfProvider, SphereSdf};
use crate::geometry::{load_mesh, normalize, write_obj, MeshSdf, NormalizationTransform, TriangleMesh};
use crate::neural::{load_model, save_model, train, NeuralSdf, TrainConfig};
use crate::reconstruct::{evaluate_accuracy, marching_cubes, AccuracyConfig};
use crate::sampling::{build_dataset, read_dataset, sampling_box, write_dataset, SamplingConfig};
use crate::voxel::VoxelGrid;
use crate::{shapes, Error, Result, Vec3};

#[derive(Debug, Parser, Serialize)]
#[command(name = "sdfc", version, about = "Signed-distance collision toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Meshes are OBJ or binary PLY files in meters, or `builtin:bunny`,
/// `builtin:dragon`, `builtin:sphere`. Backends are `oracle`, `voxel:<N>`,
/// `voxel:<file.vsdf>`, `neural:<file.nsdf>` or `sphere:<radius>`.
#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Print triangle count, watertightness and bounding box.
    MeshInfo { path: String },
    /// Generate a labelled SDFD dataset.
    Sample(SampleArgs),
    /// Train a neural SDF; writes the model and a loss-history CSV.
    Train(TrainArgs),
    /// Compare a backend with the exact oracle on fresh near-surface points.
    Eval(EvalArgs),
    /// Fill a VSDF voxel grid from the exact oracle.
    Voxelize(VoxelizeArgs),
    /// Extract the zero level set of a backend as OBJ.
    Reconstruct(ReconstructArgs),
    /// Drop a cloth on a backend; writes OBJ frames and a containment CSV.
    Simulate(SimulateArgs),
    /// Time contact-point queries; writes a CSV report.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub mesh: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.8)]
    pub near_ratio: f64,
    /// Near-surface offset standard deviation in meters.
    #[arg(long, default_value_t = 0.005)]
    pub margin: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Mesh to sample; ignored when --dataset is given.
    #[arg(long, required_unless_present = "dataset")]
    pub mesh: Option<String>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.005)]
    pub margin: f64,
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    /// Number of Fourier frequencies; 0 feeds raw coordinates.
    #[arg(long, default_value_t = 128)]
    pub fourier: usize,
    #[arg(long, default_value_t = 6.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 8192)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    /// Learning rate at the last epoch (geometric decay).
    #[arg(long)]
    pub final_lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub mesh: String,
    #[arg(long)]
    pub sdf: String,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Near-surface offset standard deviation in meters.
    #[arg(long, default_value_t = 0.005)]
    pub margin: f64,
    #[arg(long, default_value_t = 0x5eed_7e57)]
    pub seed: u64,
    /// Marching-cubes resolution for the chamfer metric.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VoxelizeArgs {
    #[arg(long)]
    pub mesh: String,
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    #[arg(long)]
    pub gradients: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub sdf: String,
    /// Needed for `oracle` and `voxel:` backends.
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0.0)]
    pub iso: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Grid size as ROWSxCOLS.
    #[arg(long, default_value = "64x64")]
    pub cloth: String,
    #[arg(long)]
    pub sdf: String,
    /// Mesh the backend stands for; also used as the containment monitor.
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// Cloth edge length in meters.
    #[arg(long, default_value_t = 0.16)]
    pub size: f64,
    /// Height of the cloth above the object top, meters.
    #[arg(long, default_value_t = 0.01)]
    pub drop: f64,
    #[arg(long, default_value_t = 0.2)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon_mm: f64,
    #[arg(long, default_value_t = 1)]
    pub iters: usize,
    /// Write every k-th frame.
    #[arg(long, default_value_t = 10)]
    pub every: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Comma-separated meshes.
    #[arg(long, value_delimiter = ',')]
    pub mesh: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "oracle,voxel:128")]
    pub backends: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "10000,40000,100000")]
    pub queries: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Thread counts; defaults to serial plus all cores.
    #[arg(long, value_delimiter = ',')]
    pub threads: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// A normalized mesh with its exact oracle.
pub struct Scene {
    pub name: String,
    pub oracle: MeshSdf,
    pub norm: NormalizationTransform,
    /// Bounding box of the input mesh, model units.
    pub model_bounds: (Vec3, Vec3),
}

pub fn load_input_mesh(spec: &str) -> Result<TriangleMesh> {
    match spec {
        "builtin:bunny" => Ok(shapes::default_bunny()),
        "builtin:dragon" => Ok(shapes::default_dragon()),
        "builtin:sphere" => Ok(shapes::icosphere(4, 0.1)),
        _ => load_mesh(spec),
    }
}

fn mesh_name(spec: &str) -> String {
    let s = spec.strip_prefix("builtin:").unwrap_or(spec);
    Path::new(s)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| s.to_string())
}

pub fn load_scene(spec: &str) -> Result<Scene> {
    let mesh = load_input_mesh(spec)?;
    if mesh.degenerate_dropped() > 0 {
        log::warn!("{spec}: dropped {} degenerate triangles", mesh.degenerate_dropped());
    }
    let model_bounds = mesh.bounding_box();
    let (normalized, norm) = normalize(&mesh)?;
    Ok(Scene {
        name: mesh_name(spec),
        oracle: MeshSdf::new(normalized)?,
        norm,
        model_bounds,
    })
}

/// A backend in normalized units plus the transform to model units, when
/// known.
pub struct Backend {
    pub provider: Box<dyn SdfProvider>,
    pub norm: Option<NormalizationTransform>,
}

pub fn open_backend(spec: &str, scene: Option<&Scene>) -> Result<Backend> {
    let need_scene = || scene.ok_or_else(|| Error::Config(format!("backend `{spec}` needs --mesh")));
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "oracle" => {
            let s = need_scene()?;
            Ok(Backend {
                provider: Box::new(MeshSdf::with_bvh(s.oracle.mesh().clone(), s.oracle.bvh().clone())?),
                norm: Some(s.norm),
            })
        }
        "voxel" => {
            let grid = match arg.parse::<usize>() {
                Ok(n) => VoxelGrid::build(&need_scene()?.oracle, n, sampling_box(), false)?,
                Err(_) => VoxelGrid::load(arg)?,
            };
            Ok(Backend {
                provider: Box::new(grid),
                norm: scene.map(|s| s.norm),
            })
        }
        "neural" => {
            let model = load_model(arg)?;
            let norm = *model.normalization();
            Ok(Backend {
                provider: Box::new(model),
                norm: Some(norm),
            })
        }
        "sphere" => {
            let r: f64 = arg.parse().map_err(|_| Error::Config(format!("bad sphere radius in `{spec}`")))?;
            Ok(Backend {
                provider: Box::new(SphereSdf::new(Vec3::zeros(), r)),
                norm: Some(NormalizationTransform::identity()),
            })
        }
        _ => Err(Error::Config(format!("unknown backend `{spec}`"))),
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    argv: Vec<String>,
    command: &'a Command,
    unix_time: u64,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    details: serde_json::Value,
}

/// `out.provenance.json` beside a file, or `provenance.json` inside a
/// directory.
pub fn provenance_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("provenance.json")
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".provenance.json");
        out.with_file_name(name)
    }
}

fn write_provenance(cmd: &Command, out: &Path, outputs: &[PathBuf], details: serde_json::Value) -> Result<()> {
    let p = Provenance {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        argv: std::env::args().collect(),
        command: cmd,
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        details,
    };
    std::fs::write(provenance_path(out), serde_json::to_string_pretty(&p)?)?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn parse_cloth(spec: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("cloth size must look like 64x64, got `{spec}`"));
    let (r, c) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

pub fn run(cli: &Cli) -> Result<()> {
    let cmd = &cli.command;
    match cmd {
        Command::MeshInfo { path } => {
            let mesh = load_input_mesh(path)?;
            let (lo, hi) = mesh.bounding_box();
            println!("triangles   {}", mesh.triangle_count());
            println!("vertices    {}", mesh.vertices().len());
            println!("watertight  {}", mesh.is_watertight());
            println!("degenerate  {} dropped", mesh.degenerate_dropped());
            println!("bbox min    {:.6} {:.6} {:.6}", lo.x, lo.y, lo.z);
            println!("bbox max    {:.6} {:.6} {:.6}", hi.x, hi.y, hi.z);
            Ok(())
        }
        Command::Sample(a) => {
            let scene = load_scene(&a.mesh)?;
            let cfg = SamplingConfig {
                total: a.samples,
                near_ratio: a.near_ratio,
                margin: a.margin,
                seed: a.seed,
            };
            let ds = build_dataset(&scene.oracle, &scene.norm, &cfg)?;
            ensure_parent(&a.out)?;
            write_dataset(&ds, &a.out)?;
            println!("{} samples ({} train, {} validation) -> {}", ds.len(), ds.train.len(), ds.validation.len(), a.out.display());
            write_provenance(cmd, &a.out, std::slice::from_ref(&a.out), serde_json::to_value(&cfg)?)
        }
        Command::Train(a) => {
            let ds = match (&a.dataset, &a.mesh) {
                (Some(path), _) => read_dataset(path)?,
                (None, Some(mesh)) => {
                    let scene = load_scene(mesh)?;
                    let cfg = SamplingConfig {
                        total: a.samples,
                        margin: a.margin,
                        seed: a.seed,
                        ..Default::default()
                    };
                    build_dataset(&scene.oracle, &scene.norm, &cfg)?
                }
                (None, None) => return Err(Error::Config("either --mesh or --dataset is required".into())),
            };
            let cfg = TrainConfig {
                epochs: a.epochs,
                batch_size: a.batch,
                learning_rate: a.lr,
                final_learning_rate: a.final_lr,
                seed: a.seed,
                fourier_features: a.fourier,
                fourier_scale: a.sigma,
                layers: a.layers,
                hidden_width: a.width,
                ..Default::default()
            };
            let model = NeuralSdf::init(&cfg, ds.norm)?;
            info!("training {} parameters on {} samples", model.param_count(), ds.train.len());
            let (model, history) = train(&model, &ds, &cfg)?;
            ensure_parent(&a.out)?;
            save_model(&model, &a.out)?;
            let loss = with_suffix(&a.out, ".loss.csv");
            history.write_csv(&loss)?;
            println!(
                "validation L1 {:.3e} -> {:.3e} in {:.1}s; model -> {}",
                history.initial_validation_loss,
                history.final_validation_loss(),
                history.seconds,
                a.out.display()
            );
            write_provenance(
                cmd,
                &a.out,
                &[a.out.clone(), loss],
                serde_json::json!({ "train": cfg, "sampling": ds.config, "seconds": history.seconds }),
            )
        }
        Command::Eval(a) => {
            let scene = load_scene(&a.mesh)?;
            let backend = open_backend(&a.sdf, Some(&scene))?;
            let cfg = AccuracyConfig {
                test_samples: a.samples,
                margin: scene.norm.length_to_normalized(a.margin),
                seed: a.seed,
                resolution: a.resolution,
                ..Default::default()
            };
            let report = evaluate_accuracy(backend.provider.as_ref(), &scene.oracle, &scene.norm, &cfg)?;
            println!("{report}");
            if let Some(out) = &a.out {
                ensure_parent(out)?;
                report.write_json(out)?;
                write_provenance(cmd, out, std::slice::from_ref(out), serde_json::to_value(&cfg)?)?;
            }
            Ok(())
        }
        Command::Voxelize(a) => {
            let scene = load_scene(&a.mesh)?;
            let t = std::time::Instant::now();
            let grid = VoxelGrid::build(&scene.oracle, a.resolution, sampling_box(), a.gradients)?;
            let secs = t.elapsed().as_secs_f64();
            ensure_parent(&a.out)?;
            grid.save(&a.out)?;
            println!(
                "{} nodes in {:.2}s, {} payload bytes -> {}",
                grid.node_count(),
                secs,
                grid.payload_bytes(),
                a.out.display()
            );
            write_provenance(
                cmd,
                &a.out,
                std::slice::from_ref(&a.out),
                serde_json::json!({ "normalization": scene.norm, "seconds": secs }),
            )
        }
        Command::Reconstruct(a) => {
            let scene = a.mesh.as_deref().map(load_scene).transpose()?;
            let backend = open_backend(&a.sdf, scene.as_ref())?;
            let mesh = marching_cubes(backend.provider.as_ref(), a.resolution, &sampling_box(), a.iso)?;
            ensure_parent(&a.out)?;
            write_obj(&mesh, &a.out)?;
            println!("{} triangles -> {}", mesh.triangle_count(), a.out.display());
            write_provenance(cmd, &a.out, std::slice::from_ref(&a.out), serde_json::Value::Null)
        }
        Command::Simulate(a) => simulate(cmd, a),
        Command::Bench(a) => {
            let scenes = a.mesh.iter().map(|m| load_scene(m)).collect::<Result<Vec<_>>>()?;
            let mut backends = Vec::new();
            for s in &scenes {
                let list = a
                    .backends
                    .iter()
                    .map(|b| open_backend(b, Some(s)))
                    .collect::<Result<Vec<_>>>()?;
                backends.push(list);
            }
            let cases: Vec<BenchCase> = scenes
                .iter()
                .zip(&backends)
                .map(|(s, list)| BenchCase {
                    mesh: s.name.clone(),
                    providers: list.iter().map(|b| b.provider.as_ref()).collect(),
                })
                .collect();
            let cfg = BenchConfig {
                query_counts: a.queries.clone(),
                repeats: a.repeats,
                threads: if a.threads.is_empty() { bench::default_thread_modes() } else { a.threads.clone() },
                seed: a.seed,
                ..Default::default()
            };
            let report = bench::run_bench(&cases, &cfg)?;
            print!("{report}");
            ensure_parent(&a.out)?;
            report.write_csv(&a.out)?;
            write_provenance(
                cmd,
                &a.out,
                std::slice::from_ref(&a.out),
                serde_json::json!({ "threads": cfg.threads, "epsilon": cfg.epsilon, "warmup": cfg.warmup }),
            )
        }
    }
}

fn simulate(cmd: &Command, a: &SimulateArgs) -> Result<()> {
    let (rows, cols) = parse_cloth(&a.cloth)?;
    let scene = a.mesh.as_deref().map(load_scene).transpose()?;
    let backend = open_backend(&a.sdf, scene.as_ref())?;
    let norm = backend.norm.unwrap_or_default();
    // everything below runs in meters
    let field = ModelFrame::new(backend.provider, norm);
    let monitor = scene.as_ref().map(|s| ModelFrame::new(&s.oracle, s.norm));

    let (lo, hi) = match &scene {
        Some(s) => s.model_bounds,
        None => (norm.invert(&Vec3::repeat(-0.9)), norm.invert(&Vec3::repeat(0.9))),
    };
    let centre = (lo + hi) * 0.5;
    let mut state = cloth::init_cloth(rows, cols, a.size / (cols.max(rows) - 1) as f64, a.mass, &[])?;
    state.translate(Vec3::new(centre.x, hi.y + a.drop, centre.z));

    let cfg = SimConfig {
        steps: a.steps,
        collision: CollisionConfig::new(a.epsilon_mm * 1e-3, a.iters)?,
        ..Default::default()
    };
    // containment: f >= epsilon - 1e-3 normalized units
    let threshold = cfg.collision.epsilon - norm.length_to_model(1e-3);
    let monitor_ref: &dyn SdfProvider = match &monitor {
        Some(m) => m,
        None => &field,
    };
    std::fs::create_dir_all(&a.out)?;
    let mut writer = ObjFrameWriter::new(&a.out, Some(monitor_ref), threshold)?;
    info!("{} substeps per step", cfg.substeps_for(&state));
    cloth::simulate(&mut state, &cfg, Some(&field), a.every, &mut writer)?;

    let csv = a.out.join("containment.csv");
    writer.write_csv(&csv)?;
    let config = a.out.join("simulation.json");
    std::fs::write(&config, serde_json::to_string_pretty(&cfg)?)?;
    let last = writer.stats.last().expect("initial frame is always written");
    println!(
        "{} frames -> {}; final containment {:.4}, min distance {:.3e} m",
        writer.stats.len(),
        a.out.display(),
        last.contained,
        last.min_distance
    );
    write_provenance(
        cmd,
        &a.out,
        &[a.out.clone(), csv, config],
        serde_json::json!({ "simulation": cfg, "substeps": cfg.substeps_for(&state) }),
    )
}
