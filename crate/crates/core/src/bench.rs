//! Timing and memory harness for collision queries and backend construction.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collision::{contact_points, SdfProvider};
use crate::geometry::{Bvh, MeshSdf};
use crate::sampling::SAMPLE_BOX_HALF;
use crate::voxel::VoxelGrid;
use crate::{Error, Result, Vec3};

pub const CSV_HEADER: &str = "backend,mesh,queries,threads,median_ms,p10_ms,p90_ms,mem_bytes";

/// Published timings for the original setup (48-core CPU KD-tree, Tesla T4
/// network, TensorFlow voxel lookup), printed next to measurements for
/// context only: `(queries, kd bunny, kd dragon, voxel, neural bunny,
/// neural dragon)` in ms, parallel KD-tree.
pub const REFERENCE_TIMINGS_MS: [(usize, f64, f64, f64, f64, f64); 3] = [
    (10_000, 11.7, 51.9, 0.1, 0.73, 1.00),
    (40_000, 45.3, 209.9, 0.1, 4.35, 0.95),
    (1_000_000, 1415.0, 9900.0, 0.1, 350.0, 255.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub query_counts: Vec<usize>,
    pub repeats: usize,
    pub warmup: usize,
    pub threads: Vec<usize>,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            query_counts: vec![10_000, 40_000, 100_000],
            repeats: 5,
            warmup: 1,
            threads: vec![1],
            epsilon: 0.01,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats < 5 {
            return Err(Error::Config(format!("at least 5 repeats required, got {}", self.repeats)));
        }
        if self.threads.contains(&0) {
            return Err(Error::Config("thread counts must be positive".into()));
        }
        Ok(())
    }
}

/// Both thread modes supported by the machine: serial and all cores.
pub fn default_thread_modes() -> Vec<usize> {
    let all = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub backend: String,
    pub mesh: String,
    pub queries: usize,
    pub threads: usize,
    pub median_ms: f64,
    pub p10_ms: f64,
    pub p90_ms: f64,
    pub mem_bytes: usize,
    #[serde(skip)]
    pub samples_ms: Vec<f64>,
}

impl BenchRow {
    pub fn per_query_ns(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.median_ms * 1e6 / self.queries as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn find(&self, backend: &str, mesh: &str, queries: usize, threads: usize) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.backend == backend && r.mesh == mesh && r.queries == queries && r.threads == threads)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:<10} {:>9} {:>4} {:>11} {:>11} {:>11} {:>10} {:>12}",
            "backend", "mesh", "queries", "thr", "median ms", "p10 ms", "p90 ms", "ns/query", "bytes"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<14} {:<10} {:>9} {:>4} {:>11.3} {:>11.3} {:>11.3} {:>10.1} {:>12}",
                r.backend, r.mesh, r.queries, r.threads, r.median_ms, r.p10_ms, r.p90_ms, r.per_query_ns(), r.mem_bytes
            )?;
        }
        writeln!(f, "\nreference (GPU / 48-core CPU, ms):")?;
        writeln!(f, "{:>9} {:>9} {:>9} {:>7} {:>9} {:>9}", "queries", "kd bun", "kd drg", "voxel", "nn bun", "nn drg")?;
        for (q, a, b, c, d, e) in REFERENCE_TIMINGS_MS {
            writeln!(f, "{q:>9} {a:>9.1} {b:>9.1} {c:>7.1} {d:>9.2} {e:>9.2}")?;
        }
        Ok(())
    }
}

/// Linear-interpolated percentile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Uniform query points in the sampling box.
pub fn query_points(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Vec3::from_fn(|_, _| rng.random_range(-SAMPLE_BOX_HALF..SAMPLE_BOX_HALF)))
        .collect()
}

/// A mesh name with the providers built for it.
pub struct BenchCase<'a> {
    pub mesh: String,
    pub providers: Vec<&'a dyn SdfProvider>,
}

/// Times the full contact-point computation (distance, gradient, projection)
/// for every provider, query count and thread count. Query sets depend only
/// on the count and seed, so all backends see the same points.
pub fn run_bench(cases: &[BenchCase], cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut report = BenchReport::default();
    for &threads in &cfg.threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        for &queries in &cfg.query_counts {
            let pts = query_points(queries, cfg.seed);
            let all: Vec<(&BenchCase, &dyn SdfProvider)> =
                cases.iter().flat_map(|c| c.providers.iter().map(move |p| (c, *p))).collect();
            // round-robin repeats so slow stretches on a shared machine hit every provider alike
            let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.repeats); all.len()];
            pool.install(|| {
                for _ in 0..cfg.warmup {
                    for (_, provider) in &all {
                        std::hint::black_box(contact_points(*provider, &pts, cfg.epsilon));
                    }
                }
                for _ in 0..cfg.repeats {
                    for (k, (_, provider)) in all.iter().enumerate() {
                        let t = Instant::now();
                        std::hint::black_box(contact_points(*provider, &pts, cfg.epsilon));
                        samples[k].push(t.elapsed().as_secs_f64() * 1e3);
                    }
                }
            });
            for ((case, provider), raw) in all.iter().zip(samples) {
                let mut sorted = raw.clone();
                sorted.sort_by(f64::total_cmp);
                report.rows.push(BenchRow {
                    backend: provider.label(),
                    mesh: case.mesh.clone(),
                    queries,
                    threads,
                    median_ms: percentile(&sorted, 0.5),
                    p10_ms: percentile(&sorted, 0.1),
                    p90_ms: percentile(&sorted, 0.9),
                    mem_bytes: provider.size_bytes(),
                    samples_ms: raw,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Construction {
    pub backend: String,
    pub mesh: String,
    pub seconds: f64,
    /// Oracle evaluations performed (voxel fills).
    pub evaluations: usize,
    pub bytes: usize,
}

/// Which artifact to build for [`measure_construction`].
#[derive(Debug, Clone, PartialEq)]
pub enum BackendKind {
    Bvh,
    Voxel { resolution: usize, gradients: bool },
}

/// Builds the artifact and reports wall time and size. Neural construction
/// cost comes from the training history instead (see `neural::TrainHistory`).
pub fn measure_construction(oracle: &MeshSdf, mesh: &str, kind: &BackendKind) -> Result<Construction> {
    match *kind {
        BackendKind::Bvh => {
            let t = Instant::now();
            let bvh = Bvh::build(oracle.mesh())?;
            Ok(Construction {
                backend: "bvh".into(),
                mesh: mesh.into(),
                seconds: t.elapsed().as_secs_f64(),
                evaluations: 0,
                bytes: bvh.size_bytes(),
            })
        }
        BackendKind::Voxel { resolution, gradients } => {
            let t = Instant::now();
            let grid = VoxelGrid::build(oracle, resolution, crate::sampling::sampling_box(), gradients)?;
            Ok(Construction {
                backend: grid.label(),
                mesh: mesh.into(),
                seconds: t.elapsed().as_secs_f64(),
                evaluations: grid.node_count(),
                bytes: grid.file_bytes(),
            })
        }
    }
}
