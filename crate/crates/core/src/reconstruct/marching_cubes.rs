//! Marching cubes over a regular scalar grid.
//!
//! The 256-case triangle table is generated once from the cube topology:
//! each face contributes contour segments (ambiguous faces always separate
//! the inside corners), segments are chained into loops, and loops are
//! fan-triangulated. Face decisions depend only on the four face corners, so
//! neighbouring cells always agree and the output is crack-free.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::geometry::TriangleMesh;
use crate::Vec3;

/// Corner `c` sits at `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

fn corner_pos(c: usize) -> Vec3 {
    Vec3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64)
}

fn edge_between(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|&(i, j)| (i, j) == (a, b) || (i, j) == (b, a))
        .expect("corners share an edge")
}

/// Triangles (as edge-index triples) for each of the 256 inside/outside
/// corner configurations. Bit `c` set means corner `c` is inside.
pub fn triangle_table() -> &'static [Vec<[u8; 3]>; 256] {
    static TABLE: OnceLock<[Vec<[u8; 3]>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(build_case))
}

fn build_case(mask: usize) -> Vec<[u8; 3]> {
    let inside = |c: usize| mask >> c & 1 == 1;
    let mid = |e: usize| 0.5 * (corner_pos(EDGES[e].0) + corner_pos(EDGES[e].1));
    let mut next = [usize::MAX; 12];

    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let mut normal = Vec3::zeros();
            normal[axis] = if side == 0 { -1.0 } else { 1.0 };
            let cyc: [usize; 4] = [(0, 0), (1, 0), (1, 1), (0, 1)]
                .map(|(a, b)| side << axis | a << u | b << v);

            let mut push = |e1: usize, e2: usize, toward: Vec3| {
                let (a, b) = (mid(e1), mid(e2));
                let (s, t) = if (b - a).cross(&normal).dot(&(toward - a)) > 0.0 {
                    (e1, e2)
                } else {
                    (e2, e1)
                };
                debug_assert_eq!(next[s], usize::MAX);
                next[s] = t;
            };

            let crossings: Vec<usize> = (0..4)
                .filter(|&k| inside(cyc[k]) != inside(cyc[(k + 1) % 4]))
                .map(|k| edge_between(cyc[k], cyc[(k + 1) % 4]))
                .collect();
            match crossings.len() {
                0 => {}
                2 => {
                    let ins: Vec<Vec3> = cyc.iter().filter(|&&c| inside(c)).map(|&c| corner_pos(c)).collect();
                    let centroid = ins.iter().sum::<Vec3>() / ins.len() as f64;
                    push(crossings[0], crossings[1], centroid);
                }
                4 => {
                    for k in 0..4 {
                        if inside(cyc[k]) {
                            let prev = edge_between(cyc[(k + 3) % 4], cyc[k]);
                            let next_e = edge_between(cyc[k], cyc[(k + 1) % 4]);
                            push(prev, next_e, corner_pos(cyc[k]));
                        }
                    }
                }
                _ => unreachable!("a square face has an even number of sign changes"),
            }
        }
    }

    let mut tris = Vec::new();
    let mut seen = [false; 12];
    for start in 0..12 {
        if next[start] == usize::MAX || seen[start] {
            continue;
        }
        let mut lp = vec![start];
        seen[start] = true;
        let mut e = next[start];
        while e != start {
            seen[e] = true;
            lp.push(e);
            e = next[e];
        }
        for k in 1..lp.len() - 1 {
            tris.push([lp[0] as u8, lp[k] as u8, lp[k + 1] as u8]);
        }
    }
    tris
}

/// Samples on a regular grid, `x` varying fastest.
#[derive(Debug, Clone)]
pub struct ScalarGrid {
    pub dims: [usize; 3],
    pub origin: Vec3,
    pub spacing: Vec3,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + self.spacing.component_mul(&Vec3::new(i as f64, j as f64, k as f64))
    }

    /// Fills a grid by evaluating `f` on every node.
    pub fn sample(dims: [usize; 3], origin: Vec3, spacing: Vec3, f: impl Fn(&[Vec3]) -> Vec<f64>) -> Self {
        let mut grid = Self {
            dims,
            origin,
            spacing,
            values: Vec::with_capacity(dims[0] * dims[1] * dims[2]),
        };
        let mut slice = Vec::with_capacity(dims[0] * dims[1]);
        for k in 0..dims[2] {
            slice.clear();
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    slice.push(grid.position(i, j, k));
                }
            }
            grid.values.extend(f(&slice));
        }
        grid
    }
}

/// Extracts the `iso` level set; cells below `iso` are inside and triangles
/// face toward increasing values.
pub fn extract(grid: &ScalarGrid, iso: f64) -> TriangleMesh {
    extract_with_margin(grid, iso, 0.0)
}

/// As [`extract`], with edge interpolation parameters clamped to
/// `[margin, 1 - margin]` so that no two output vertices coincide.
pub fn extract_with_margin(grid: &ScalarGrid, iso: f64, margin: f64) -> TriangleMesh {
    let table = triangle_table();
    let [nx, ny, nz] = grid.dims;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut welded: HashMap<(usize, u8), u32> = HashMap::new();

    if nx < 2 || ny < 2 || nz < 2 {
        return TriangleMesh::new(vertices, triangles).expect("empty mesh is valid");
    }

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let node = |c: usize| (i + (c & 1), j + (c >> 1 & 1), k + (c >> 2 & 1));
                let mut mask = 0usize;
                let mut vals = [0.0; 8];
                for (c, v) in vals.iter_mut().enumerate() {
                    let (a, b, d) = node(c);
                    *v = grid.values[grid.index(a, b, d)];
                    if *v < iso {
                        mask |= 1 << c;
                    }
                }
                let case = &table[mask];
                if case.is_empty() {
                    continue;
                }

                let mut edge_vertex = [u32::MAX; 12];
                for tri in case {
                    for &e in tri {
                        let e = e as usize;
                        if edge_vertex[e] != u32::MAX {
                            continue;
                        }
                        let (c0, c1) = EDGES[e];
                        let (a0, b0, d0) = node(c0);
                        let axis = (c0 ^ c1).trailing_zeros() as u8;
                        let key = (grid.index(a0, b0, d0), axis);
                        let id = *welded.entry(key).or_insert_with(|| {
                            let (a1, b1, d1) = node(c1);
                            let (v0, v1) = (vals[c0], vals[c1]);
                            let t = ((iso - v0) / (v1 - v0)).clamp(margin, 1.0 - margin);
                            let p0 = grid.position(a0, b0, d0);
                            let p1 = grid.position(a1, b1, d1);
                            vertices.push(p0 + (p1 - p0) * t);
                            (vertices.len() - 1) as u32
                        });
                        edge_vertex[e] = id;
                    }
                }
                for tri in case {
                    triangles.push(tri.map(|e| edge_vertex[e as usize]));
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles).expect("indices are in range")
}
