//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use sdf_collide::geometry::TriangleMesh;
use sdf_collide::Vec3;

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance to a triangle: plane distance when the projection falls inside,
/// otherwise the nearest edge.
pub fn triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = (b - a).cross(&(c - a));
    let n2 = n.norm_squared();
    let proj = p - n * ((p - a).dot(&n) / n2);
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| (*v - *u).cross(&(proj - *u)).dot(&n) >= 0.0);
    if inside {
        (p - proj).norm()
    } else {
        segment_distance(p, a, b)
            .min(segment_distance(p, b, c))
            .min(segment_distance(p, c, a))
    }
}

pub fn brute_distance(mesh: &TriangleMesh, p: &Vec3) -> f64 {
    (0..mesh.triangle_count())
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            triangle_distance(p, &a, &b, &c)
        })
        .fold(f64::INFINITY, f64::min)
}

fn ray_hits(mesh: &TriangleMesh, origin: &Vec3, dir: &Vec3) -> usize {
    let mut hits = 0;
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.corners(t);
        let e1 = b - a;
        let e2 = c - a;
        let pv = dir.cross(&e2);
        let det = e1.dot(&pv);
        if det.abs() < 1e-14 {
            continue;
        }
        let inv = 1.0 / det;
        let tv = origin - a;
        let u = tv.dot(&pv) * inv;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let qv = tv.cross(&e1);
        let v = dir.dot(&qv) * inv;
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        if e2.dot(&qv) * inv > 0.0 {
            hits += 1;
        }
    }
    hits
}

/// Inside test by crossing parity, majority vote over three skew rays.
pub fn ray_parity_inside(mesh: &TriangleMesh, p: &Vec3) -> bool {
    let dirs = [
        Vec3::new(0.5377, 0.8313, 0.1411),
        Vec3::new(-0.2617, 0.3271, -0.9080),
        Vec3::new(0.7071, -0.5774, 0.4082),
    ];
    let votes = dirs.iter().filter(|d| ray_hits(mesh, p, &d.normalize()) % 2 == 1).count();
    votes >= 2
}

/// Brute-force distance with ray-parity sign.
pub fn brute_signed_distance(mesh: &TriangleMesh, p: &Vec3) -> f64 {
    let d = brute_distance(mesh, p);
    if ray_parity_inside(mesh, p) {
        -d
    } else {
        d
    }
}

/// Two smallest per-triangle distances.
pub fn two_nearest(mesh: &TriangleMesh, p: &Vec3) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.corners(t);
        let d = triangle_distance(p, &a, &b, &c);
        if d < best.0 {
            best = (d, best.0);
        } else if d < best.1 {
            best.1 = d;
        }
    }
    best
}

pub fn central_difference(f: impl Fn(&Vec3) -> f64, p: &Vec3, h: f64) -> Vec3 {
    let mut g = Vec3::zeros();
    for a in 0..3 {
        let mut e = Vec3::zeros();
        e[a] = h;
        g[a] = (f(&(p + e)) - f(&(p - e))) / (2.0 * h);
    }
    g
}

/// Simple deterministic generator for test points.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn point(&mut self, half: f64) -> Vec3 {
        Vec3::new(self.range(-half, half), self.range(-half, half), self.range(-half, half))
    }
}
