//! Procedural test meshes.
//!
//! `bunny` and `dragon` are stand-ins for scanned models: watertight,
//! organically shaped surfaces extracted from smooth implicit blends. The
//! dragon-class mesh carries more than ten times the triangles of the
//! default bunny.

use crate::geometry::TriangleMesh;
use crate::reconstruct::marching_cubes::{extract_with_margin, ScalarGrid};
use crate::Vec3;

/// Axis-aligned box with outward winding.
pub fn box_mesh(center: Vec3, half: Vec3) -> TriangleMesh {
    let vertices = (0..8)
        .map(|c| {
            let s = Vec3::new(
                if c & 1 == 1 { 1.0 } else { -1.0 },
                if c & 2 == 2 { 1.0 } else { -1.0 },
                if c & 4 == 4 { 1.0 } else { -1.0 },
            );
            center + s.component_mul(&half)
        })
        .collect();
    let triangles = vec![
        [0, 2, 3], [0, 3, 1], // -z
        [4, 5, 7], [4, 7, 6], // +z
        [0, 1, 5], [0, 5, 4], // -y
        [2, 6, 7], [2, 7, 3], // +y
        [0, 4, 6], [0, 6, 2], // -x
        [1, 3, 7], [1, 7, 5], // +x
    ];
    TriangleMesh::new(vertices, triangles).expect("valid box")
}

pub fn cube(center: Vec3, size: f64) -> TriangleMesh {
    box_mesh(center, Vec3::repeat(0.5 * size))
}

/// Subdivided icosahedron: `20 * 4^subdivisions` triangles, vertices on the
/// sphere of the given radius.
pub fn icosphere(subdivisions: u32, radius: f64) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints = std::collections::HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push((verts[a as usize] + verts[b as usize]).normalize());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| v * radius).collect();
    TriangleMesh::new(verts, faces).expect("valid icosphere")
}

fn smin(a: f64, b: f64, k: f64) -> f64 {
    let h = (0.5 + 0.5 * (b - a) / k).clamp(0.0, 1.0);
    b + (a - b) * h - k * h * (1.0 - h)
}

fn ellipsoid(p: Vec3, c: Vec3, r: Vec3) -> f64 {
    let q = (p - c).component_div(&r);
    (q.norm() - 1.0) * r.min()
}

fn capsule(p: Vec3, a: Vec3, b: Vec3, r: f64) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - a - ab * t).norm() - r
}

fn bunny_field(p: Vec3) -> f64 {
    let v = Vec3::new;
    let mut d = ellipsoid(p, v(0.0, 0.5, 0.0), v(0.72, 0.52, 0.55));
    d = smin(d, ellipsoid(p, v(-0.38, 0.38, 0.0), v(0.45, 0.4, 0.52)), 0.12);
    d = smin(d, ellipsoid(p, v(0.62, 0.98, 0.0), v(0.34, 0.3, 0.28)), 0.12);
    d = smin(d, ellipsoid(p, v(0.92, 0.92, 0.0), v(0.12, 0.1, 0.12)), 0.05);
    d = smin(d, capsule(p, v(0.55, 1.12, 0.11), v(0.38, 1.72, 0.2), 0.075), 0.06);
    d = smin(d, capsule(p, v(0.52, 1.12, -0.11), v(0.2, 1.62, -0.24), 0.07), 0.06);
    d = smin(d, ellipsoid(p, v(-0.8, 0.6, 0.0), v(0.14, 0.14, 0.14)), 0.06);
    d = smin(d, ellipsoid(p, v(0.35, 0.08, 0.25), v(0.26, 0.1, 0.13)), 0.08);
    d = smin(d, ellipsoid(p, v(0.35, 0.08, -0.25), v(0.26, 0.1, 0.13)), 0.08);
    d
}

fn dragon_field(p: Vec3) -> f64 {
    let spine = |t: f64| {
        Vec3::new(
            -1.6 + 3.2 * t,
            0.55 + 0.25 * (t * 9.0).sin(),
            0.45 * (t * 5.5).sin(),
        )
    };
    let segments = 24;
    let mut d = capsule(p, spine(0.0), spine(1.0 / segments as f64), 0.08);
    for s in 1..segments {
        let t0 = s as f64 / segments as f64;
        let t1 = (s + 1) as f64 / segments as f64;
        let r = 0.08 + 0.14 * (std::f64::consts::PI * t0).sin();
        d = smin(d, capsule(p, spine(t0), spine(t1), r), 0.05);
    }
    // dorsal spikes
    for s in 1..18 {
        let t = s as f64 / 18.0;
        let base = spine(t);
        let r = 0.08 + 0.14 * (std::f64::consts::PI * t).sin();
        let tip = base + Vec3::new(0.05, r + 0.14, 0.0);
        d = smin(d, capsule(p, base, tip, 0.025), 0.03);
    }
    // head, horns and legs
    let head = spine(1.0) + Vec3::new(0.12, 0.08, 0.0);
    d = smin(d, ellipsoid(p, head, Vec3::new(0.22, 0.12, 0.11)), 0.05);
    for z in [-0.06, 0.06] {
        d = smin(d, capsule(p, head + Vec3::new(-0.05, 0.08, z), head + Vec3::new(-0.22, 0.28, 3.0 * z), 0.02), 0.02);
    }
    for (t, z) in [(0.3, 0.2), (0.3, -0.2), (0.7, 0.2), (0.7, -0.2)] {
        let hip = spine(t);
        d = smin(d, capsule(p, hip, Vec3::new(hip.x + 0.05, 0.0, hip.z + z), 0.045), 0.04);
    }
    // scale ridges
    d + 0.006 * ((p.x * 60.0).sin() * (p.y * 55.0).sin() * (p.z * 50.0).sin())
}

fn extract_field(field: impl Fn(Vec3) -> f64, lo: Vec3, hi: Vec3, resolution: usize, meters: f64) -> TriangleMesh {
    let extent = hi - lo;
    let h = extent.max() / resolution as f64;
    let dims = extent.map(|e| (e / h).ceil() as usize + 1);
    let grid = ScalarGrid::sample([dims.x, dims.y, dims.z], lo, Vec3::repeat(h), |ps| {
        ps.iter().map(|&p| field(p)).collect()
    });
    extract_with_margin(&grid, 0.0, 0.02).map_vertices(|v| v * meters)
}

/// Bunny-like blob about 15 cm across, in meters. `resolution` is the cell
/// count along the longest axis; 46 gives just under 10k triangles.
pub fn bunny(resolution: usize) -> TriangleMesh {
    extract_field(
        bunny_field,
        Vec3::new(-1.05, -0.1, -0.7),
        Vec3::new(1.05, 1.92, 0.7),
        resolution,
        0.08,
    )
}

pub fn default_bunny() -> TriangleMesh {
    bunny(46)
}

/// Serpentine ridged body about 28 cm long, in meters.
pub fn dragon(resolution: usize) -> TriangleMesh {
    extract_field(
        dragon_field,
        Vec3::new(-1.75, -0.1, -0.8),
        Vec3::new(1.95, 1.35, 0.8),
        resolution,
        0.075,
    )
}

pub fn default_dragon() -> TriangleMesh {
    dragon(300)
}
