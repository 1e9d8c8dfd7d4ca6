//! Quad-grid mass-spring cloth with explicit Verlet integration and contact
//! projection against any [`SdfProvider`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::collision::{resolve, CollisionConfig, SdfProvider};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpringKind {
    Structural,
    Shear,
    Bend,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring {
    pub i: usize,
    pub j: usize,
    pub rest: f64,
    pub kind: SpringKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClothState {
    pub rows: usize,
    pub cols: usize,
    pub positions: Vec<Vec3>,
    pub previous: Vec<Vec3>,
    pub springs: Vec<Spring>,
    /// Pinned vertex indices with their fixed locations.
    pub pins: Vec<(usize, Vec3)>,
    /// Mass per vertex (kg).
    pub mass: f64,
    /// Per-vertex lower bound on `f - epsilon` carried between steps to skip
    /// field queries far from the surface; `-inf` when unknown.
    pub clearance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub gravity: [f64; 3],
    /// Fraction of velocity removed per `dt`.
    pub damping: f64,
    pub structural_stiffness: f64,
    pub shear_stiffness: f64,
    pub bend_stiffness: f64,
    pub steps: usize,
    /// Integration substeps per step; `None` picks the smallest count that
    /// satisfies the explicit stability bound.
    pub substeps: Option<usize>,
    pub collision: CollisionConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 300.0,
            gravity: [0.0, -9.81, 0.0],
            damping: 0.01,
            structural_stiffness: 5000.0,
            shear_stiffness: 500.0,
            bend_stiffness: 50.0,
            steps: 500,
            substeps: None,
            collision: CollisionConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::Config(format!("damping {} outside [0, 1)", self.damping)));
        }
        if self.substeps == Some(0) {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        self.collision.validate()
    }

    pub fn stiffness(&self, kind: SpringKind) -> f64 {
        match kind {
            SpringKind::Structural => self.structural_stiffness,
            SpringKind::Shear => self.shear_stiffness,
            SpringKind::Bend => self.bend_stiffness,
        }
    }

    /// Substeps used for `state`. The automatic count keeps the substep
    /// below `sqrt(2 m / K)`, where `K` is the largest total stiffness
    /// attached to one vertex (a Gershgorin bound on the spring system).
    pub fn substeps_for(&self, state: &ClothState) -> usize {
        if let Some(n) = self.substeps {
            return n;
        }
        let mut total = vec![0.0; state.positions.len()];
        for s in &state.springs {
            let k = self.stiffness(s.kind);
            total[s.i] += k;
            total[s.j] += k;
        }
        let k_max = total.iter().cloned().fold(0.0, f64::max);
        if k_max <= 0.0 {
            return 1;
        }
        let h_max = (2.0 * state.mass / k_max).sqrt();
        ((self.dt / h_max).ceil() as usize).max(1)
    }
}

/// `rows x cols` grid in the xz-plane centred on the origin, vertex
/// `r * cols + c` at `(c, 0, r) * spacing` minus the centre. Structural
/// springs join 4-neighbours, shear springs both diagonals, bend springs
/// vertices two apart.
pub fn init_cloth(rows: usize, cols: usize, spacing: f64, mass_total: f64, pins: &[usize]) -> Result<ClothState> {
    if rows < 2 || cols < 2 {
        return Err(Error::Config(format!("cloth must be at least 2x2, got {rows}x{cols}")));
    }
    if !(spacing > 0.0) || !(mass_total > 0.0) {
        return Err(Error::Config("spacing and mass must be positive".into()));
    }
    let n = rows * cols;
    if let Some(&bad) = pins.iter().find(|&&p| p >= n) {
        return Err(Error::Config(format!("pin {bad} out of range for {n} vertices")));
    }
    let centre = Vec3::new((cols - 1) as f64, 0.0, (rows - 1) as f64) * (0.5 * spacing);
    let positions: Vec<Vec3> = (0..n)
        .map(|v| Vec3::new((v % cols) as f64, 0.0, (v / cols) as f64) * spacing - centre)
        .collect();

    let id = |r: usize, c: usize| r * cols + c;
    let mut springs = Vec::new();
    let mut add = |i: usize, j: usize, kind: SpringKind| {
        springs.push(Spring {
            i,
            j,
            rest: (positions[i] - positions[j]).norm(),
            kind,
        })
    };
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                add(id(r, c), id(r, c + 1), SpringKind::Structural);
            }
            if r + 1 < rows {
                add(id(r, c), id(r + 1, c), SpringKind::Structural);
            }
        }
    }
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            add(id(r, c), id(r + 1, c + 1), SpringKind::Shear);
            add(id(r, c + 1), id(r + 1, c), SpringKind::Shear);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            if c + 2 < cols {
                add(id(r, c), id(r, c + 2), SpringKind::Bend);
            }
            if r + 2 < rows {
                add(id(r, c), id(r + 2, c), SpringKind::Bend);
            }
        }
    }

    let mut pins: Vec<usize> = pins.to_vec();
    pins.sort_unstable();
    pins.dedup();
    Ok(ClothState {
        rows,
        cols,
        previous: positions.clone(),
        pins: pins.into_iter().map(|p| (p, positions[p])).collect(),
        positions,
        springs,
        mass: mass_total / n as f64,
        clearance: vec![f64::NEG_INFINITY; n],
    })
}

impl ClothState {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    /// Moves the cloth (and its pins) without changing its velocity.
    pub fn translate(&mut self, offset: Vec3) {
        for p in self.positions.iter_mut().chain(self.previous.iter_mut()) {
            *p += offset;
        }
        for (_, p) in &mut self.pins {
            *p += offset;
        }
        self.forget_contacts();
    }

    /// Drops cached clearances; needed after editing positions directly or
    /// switching fields.
    pub fn forget_contacts(&mut self) {
        self.clearance.fill(f64::NEG_INFINITY);
    }

    pub fn count(&self, kind: SpringKind) -> usize {
        self.springs.iter().filter(|s| s.kind == kind).count()
    }

    fn accelerations(&self, cfg: &SimConfig, out: &mut [Vec3]) {
        let g = Vec3::from(cfg.gravity);
        out.fill(g);
        let inv_m = 1.0 / self.mass;
        for s in &self.springs {
            let d = self.positions[s.j] - self.positions[s.i];
            let len = d.norm();
            if len <= 0.0 {
                continue;
            }
            let f = d * (cfg.stiffness(s.kind) * (len - s.rest) / len * inv_m);
            out[s.i] += f;
            out[s.j] -= f;
        }
    }

    fn apply_pins(&mut self) {
        for &(i, p) in &self.pins {
            self.positions[i] = p;
            self.previous[i] = p;
        }
    }

    /// Writes the cloth as an OBJ with one quad per grid cell.
    pub fn write_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for p in &self.positions {
            writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
        }
        for r in 0..self.rows - 1 {
            for c in 0..self.cols - 1 {
                let v = r * self.cols + c + 1;
                writeln!(w, "f {} {} {} {}", v, v + self.cols, v + self.cols + 1, v + 1)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Learned fields are only approximately 1-Lipschitz; travel is inflated by
/// this factor when certifying that a vertex cannot reach the surface.
const CLEARANCE_SAFETY: f64 = 1.5;

/// Advances one step of `cfg.dt`: Verlet substeps under gravity and spring
/// forces, then contact projection against `provider`, then pins.
///
/// The provider is queried once per step for vertices that may reach the
/// surface; their tangent planes at the `epsilon` level are enforced on every
/// substep, and the step ends with the full projection against the field.
/// Projected vertices keep their tangential velocity and lose any velocity
/// into the surface.
pub fn step(state: &mut ClothState, cfg: &SimConfig, provider: Option<&dyn SdfProvider>, index: usize) -> Result<()> {
    let substeps = cfg.substeps_for(state);
    let h = cfg.dt / substeps as f64;
    let keep = (1.0 - cfg.damping).powf(1.0 / substeps as f64);
    let n = state.vertex_count();
    let eps = cfg.collision.epsilon;

    // contact planes n . x >= c for vertices that may reach the surface
    let mut planes: Vec<Option<(Vec3, f64)>> = vec![None; n];
    if let Some(provider) = provider {
        let reach: Vec<f64> = (0..n)
            .map(|i| {
                let v = (state.positions[i] - state.previous[i]).norm() * substeps as f64;
                CLEARANCE_SAFETY * (2.0 * v + Vec3::from(cfg.gravity).norm() * cfg.dt * cfg.dt) + 10.0 * eps
            })
            .collect();
        let near: Vec<usize> = (0..n).filter(|&i| state.clearance[i] < reach[i]).collect();
        let pts: Vec<Vec3> = near.iter().map(|&i| state.positions[i]).collect();
        let (dist, grad) = provider.distance_gradient(&pts);
        for (k, &i) in near.iter().enumerate() {
            state.clearance[i] = dist[k] - eps;
            let len = grad[k].norm();
            if dist[k] - eps < reach[i] && len >= crate::collision::MIN_GRADIENT_NORM {
                let normal = grad[k] / len;
                planes[i] = Some((normal, normal.dot(&pts[k]) + eps - dist[k]));
            }
        }
    }

    let mut travel = vec![0.0; n];
    let mut acc = vec![Vec3::zeros(); n];
    for _ in 0..substeps {
        state.accelerations(cfg, &mut acc);
        for i in 0..n {
            let x = state.positions[i];
            let mut next = x + (x - state.previous[i]) * keep + acc[i] * (h * h);
            let mut prev = x;
            if let Some((normal, c)) = planes[i] {
                let gap = c - normal.dot(&next);
                if gap > 0.0 {
                    next += normal * gap;
                    let vn = (next - prev).dot(&normal);
                    if vn < 0.0 {
                        prev += normal * vn;
                    }
                }
            }
            travel[i] += (next - x).norm();
            state.previous[i] = prev;
            state.positions[i] = next;
        }
        state.apply_pins();
    }

    if let Some(provider) = provider {
        let check: Vec<usize> = (0..n)
            .filter(|&i| state.clearance[i] - CLEARANCE_SAFETY * travel[i] < 0.0)
            .collect();
        let pts: Vec<Vec3> = check.iter().map(|&i| state.positions[i]).collect();
        let contact = resolve(provider, &pts, &cfg.collision);
        for (k, &i) in check.iter().enumerate() {
            state.clearance[i] = (contact.distances[k] - eps).max(0.0);
            if !contact.collided[k] {
                continue;
            }
            let shift = contact.resolved[k] - state.positions[i];
            let len = shift.norm();
            let mut v = state.positions[i] - state.previous[i];
            if len > 0.0 {
                let normal = shift / len;
                let vn = v.dot(&normal);
                if vn < 0.0 {
                    v -= normal * vn;
                }
            }
            state.positions[i] = contact.resolved[k];
            state.previous[i] = contact.resolved[k] - v;
        }
        let checked: std::collections::HashSet<usize> = check.into_iter().collect();
        for i in 0..n {
            if !checked.contains(&i) {
                state.clearance[i] -= CLEARANCE_SAFETY * travel[i];
            }
        }
        state.apply_pins();
    }

    if state.positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::SimulationNan { step: index });
    }
    Ok(())
}

/// Receives the initial state (step 0) and the state after selected steps.
pub trait FrameSink {
    fn frame(&mut self, step: usize, state: &ClothState) -> Result<()>;
}

impl<F: FnMut(usize, &ClothState) -> Result<()>> FrameSink for F {
    fn frame(&mut self, step: usize, state: &ClothState) -> Result<()> {
        self(step, state)
    }
}

/// Runs `cfg.steps` steps, handing every `every`-th state (and the initial
/// and final ones) to `sink`.
pub fn simulate(
    state: &mut ClothState,
    cfg: &SimConfig,
    provider: Option<&dyn SdfProvider>,
    every: usize,
    sink: &mut dyn FrameSink,
) -> Result<()> {
    cfg.validate()?;
    let every = every.max(1);
    state.forget_contacts();
    sink.frame(0, state)?;
    for s in 1..=cfg.steps {
        step(state, cfg, provider, s)?;
        if s % every == 0 || s == cfg.steps {
            sink.frame(s, state)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameStats {
    pub frame: usize,
    pub step: usize,
    pub min_distance: f64,
    /// Fraction of vertices with `f >= epsilon - tolerance`.
    pub contained: f64,
}

/// Writes `frame_%05d.obj` files into a directory and, given a monitor
/// field, records per-frame containment statistics.
pub struct ObjFrameWriter<'a> {
    dir: PathBuf,
    monitor: Option<&'a dyn SdfProvider>,
    threshold: f64,
    pub stats: Vec<FrameStats>,
}

impl<'a> ObjFrameWriter<'a> {
    /// `threshold` is the containment level in the monitor's units.
    pub fn new(dir: impl Into<PathBuf>, monitor: Option<&'a dyn SdfProvider>, threshold: f64) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            monitor,
            threshold,
            stats: Vec::new(),
        })
    }

    pub fn frame_path(&self, frame: usize) -> PathBuf {
        self.dir.join(format!("frame_{frame:05}.obj"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for s in &self.stats {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl FrameSink for ObjFrameWriter<'_> {
    fn frame(&mut self, step: usize, state: &ClothState) -> Result<()> {
        let frame = self.stats.len();
        state.write_obj(self.frame_path(frame))?;
        let (min_distance, contained) = match self.monitor {
            Some(m) => {
                let d = m.distance(&state.positions);
                let ok = d.iter().filter(|&&v| v >= self.threshold).count();
                (d.iter().cloned().fold(f64::INFINITY, f64::min), ok as f64 / d.len() as f64)
            }
            None => (f64::NAN, f64::NAN),
        };
        self.stats.push(FrameStats {
            frame,
            step,
            min_distance,
            contained,
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::SphereSdf;

    #[test]
    fn spring_counts() {
        let c = init_cloth(2, 2, 0.1, 1.0, &[]).unwrap();
        assert_eq!(c.count(SpringKind::Structural), 4);
        assert_eq!(c.count(SpringKind::Shear), 2);
        assert_eq!(c.count(SpringKind::Bend), 0);
        let c = init_cloth(200, 200, 0.01, 0.2, &[]).unwrap();
        assert_eq!(c.vertex_count(), 40_000);
        let c = init_cloth(3, 4, 0.01, 0.2, &[]).unwrap();
        let rest = |k| c.springs.iter().find(|s| s.kind == k).unwrap().rest;
        assert!((rest(SpringKind::Structural) - 0.01).abs() < 1e-15);
        assert!((rest(SpringKind::Shear) - 0.01 * 2f64.sqrt()).abs() < 1e-15);
        assert!((rest(SpringKind::Bend) - 0.02).abs() < 1e-15);
        assert!(c.springs.iter().all(|s| s.i != s.j && s.rest > 0.0));
    }

    #[test]
    fn bad_pins_and_sizes() {
        assert!(init_cloth(1, 5, 0.1, 1.0, &[]).is_err());
        assert!(init_cloth(2, 2, 0.1, 1.0, &[4]).is_err());
    }

    #[test]
    fn free_fall_matches_closed_form() {
        let mut c = init_cloth(2, 2, 0.1, 1.0, &[]).unwrap();
        c.springs.clear();
        let cfg = SimConfig { damping: 0.0, ..Default::default() };
        assert_eq!(cfg.substeps_for(&c), 1);
        let x0 = c.positions.clone();
        for s in 1..=1000 {
            step(&mut c, &cfg, None, s).unwrap();
        }
        let g = Vec3::from(cfg.gravity);
        let n = 1000.0;
        for (x, x0) in c.positions.iter().zip(&x0) {
            let expected = x0 + g * (n * (n + 1.0) / 2.0 * cfg.dt * cfg.dt);
            assert!((x - expected).norm() <= 1e-9 * (expected - x0).norm());
        }
    }

    #[test]
    fn pinned_vertices_stay_put() {
        let mut c = init_cloth(4, 4, 0.05, 0.1, &[0, 3]).unwrap();
        let pinned = [c.positions[0], c.positions[3]];
        let cfg = SimConfig::default();
        for s in 1..=50 {
            step(&mut c, &cfg, None, s).unwrap();
            assert_eq!([c.positions[0], c.positions[3]], pinned);
            assert_eq!([c.previous[0], c.previous[3]], pinned);
        }
        assert!(c.positions[15].y < -0.01);
    }

    #[test]
    fn stretched_spring_contracts_symmetrically() {
        let mut c = init_cloth(2, 2, 1.0, 1.0, &[]).unwrap();
        c.springs.retain(|s| s.i == 0 && s.j == 1);
        c.springs[0].rest = 1.0 / 1.1;
        let cfg = SimConfig { gravity: [0.0; 3], damping: 0.0, substeps: Some(1), ..Default::default() };
        let com = |c: &ClothState| c.positions[0] + c.positions[1];
        let before = com(&c);
        step(&mut c, &cfg, None, 1).unwrap();
        let (d0, d1) = (c.positions[0].x - -0.5, c.positions[1].x - 0.5);
        assert!(d0 > 0.0 && d1 < 0.0);
        assert!((d0 + d1).abs() < 1e-15);
        for s in 2..100 {
            step(&mut c, &cfg, None, s).unwrap();
        }
        assert!((com(&c) - before).norm() < 1e-9);
    }

    #[test]
    fn nan_is_reported_with_step() {
        let mut c = init_cloth(2, 2, 0.1, 1.0, &[]).unwrap();
        let cfg = SimConfig { gravity: [f64::NAN, 0.0, 0.0], ..Default::default() };
        match step(&mut c, &cfg, None, 7) {
            Err(Error::SimulationNan { step }) => assert_eq!(step, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cloth_rests_on_sphere() {
        let sphere = SphereSdf::new(Vec3::zeros(), 0.1);
        let mut c = init_cloth(16, 16, 0.3 / 15.0, 0.05, &[]).unwrap();
        c.translate(Vec3::new(0.0, 0.12, 0.0));
        let cfg = SimConfig {
            steps: 150,
            collision: CollisionConfig::new(1e-3, 2).unwrap(),
            ..Default::default()
        };
        let mut frames = 0;
        let mut count = |_s: usize, _c: &ClothState| -> Result<()> {
            frames += 1;
            Ok(())
        };
        simulate(&mut c, &cfg, Some(&sphere), 50, &mut count).unwrap();
        assert_eq!(frames, 4);
        let d = sphere.distance(&c.positions);
        assert!(d.iter().all(|&v| v >= 1e-3 - 1e-9));
        // resting, not hovering
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min < 1e-3 + 1e-4, "{min}");
    }
}
