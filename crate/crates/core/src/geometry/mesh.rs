use std::collections::HashMap;

use crate::{Error, Result, Vec3};

/// Triangle surface with validated indices.
///
/// Degenerate (zero-area) triangles are removed on construction and counted in
/// [`TriangleMesh::degenerate_dropped`].
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    normals: Option<Vec<Vec3>>,
    watertight: bool,
    degenerate_dropped: usize,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i as usize >= n)) {
            return Err(Error::Format(format!(
                "triangle {t:?} references a vertex beyond {n}"
            )));
        }

        let diag = bounds(&vertices).map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0);
        let area_tol = 1e-14 * diag * diag;
        let before = triangles.len();
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|&[a, b, c]| {
                if a == b || b == c || a == c {
                    return false;
                }
                let (pa, pb, pc) = (vertices[a as usize], vertices[b as usize], vertices[c as usize]);
                0.5 * (pb - pa).cross(&(pc - pa)).norm() > area_tol
            })
            .collect();
        let degenerate_dropped = before - triangles.len();
        if degenerate_dropped > 0 {
            log::warn!("dropped {degenerate_dropped} degenerate triangles");
        }
        let watertight = is_watertight(&triangles);
        Ok(Self {
            vertices,
            triangles,
            normals: None,
            watertight,
            degenerate_dropped,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    pub fn degenerate_dropped(&self) -> usize {
        self.degenerate_dropped
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unnormalized face normal; its length is twice the triangle area.
    pub fn face_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn area(&self, t: usize) -> f64 {
        0.5 * self.face_cross(t).norm()
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let used = self.triangles.iter().flatten().map(|&i| self.vertices[i as usize]);
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in used {
            lo = lo.inf(&v);
            hi = hi.sup(&v);
        }
        (lo, hi)
    }

    /// Signed enclosed volume (positive for outward-facing winding).
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Area-weighted per-vertex normals, stored on the mesh.
    pub fn compute_vertex_normals(&mut self) {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for tri in &self.triangles {
            let [a, b, c] = *tri;
            let (pa, pb, pc) = (
                self.vertices[a as usize],
                self.vertices[b as usize],
                self.vertices[c as usize],
            );
            let n = (pb - pa).cross(&(pc - pa));
            for &i in tri {
                acc[i as usize] += n;
            }
        }
        for n in &mut acc {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        self.normals = Some(acc);
    }

    /// Applies `f` to every vertex, keeping the topology.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            normals: None,
            watertight: self.watertight,
            degenerate_dropped: self.degenerate_dropped,
        }
    }

    /// Mirror across the `x = 0` plane, flipping winding to stay outward.
    pub fn mirrored_x(&self) -> Self {
        let mut m = self.map_vertices(|v| Vec3::new(-v.x, v.y, v.z));
        for t in &mut m.triangles {
            t.swap(1, 2);
        }
        m
    }
}

fn bounds(vertices: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *vertices.first()?;
    Some(vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
}

/// Every undirected edge is used exactly twice, once in each direction.
fn is_watertight(triangles: &[[u32; 3]]) -> bool {
    if triangles.is_empty() {
        return false;
    }
    let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(triangles.len() * 3);
    for t in triangles {
        for k in 0..3 {
            *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    directed
        .iter()
        .all(|(&(a, b), &count)| count == 1 && directed.get(&(b, a)) == Some(&1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn cube_is_watertight() {
        let cube = shapes::cube(Vec3::zeros(), 1.0);
        assert!(cube.is_watertight());
        assert_eq!(cube.triangle_count(), 12);
        assert!((cube.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_cube_is_not_watertight() {
        let cube = shapes::cube(Vec3::zeros(), 1.0);
        let tris = cube.triangles()[2..].to_vec();
        let open = TriangleMesh::new(cube.vertices().to_vec(), tris).unwrap();
        assert!(!open.is_watertight());
    }

    #[test]
    fn flipped_winding_is_not_watertight() {
        let cube = shapes::cube(Vec3::zeros(), 1.0);
        let mut tris = cube.triangles().to_vec();
        tris[0].swap(1, 2);
        let m = TriangleMesh::new(cube.vertices().to_vec(), tris).unwrap();
        assert!(!m.is_watertight());
    }

    #[test]
    fn degenerate_triangles_are_dropped() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 1, 2], [0, 1, 3], [1, 1, 2]]).unwrap();
        assert_eq!(m.triangle_count(), 1);
        assert_eq!(m.degenerate_dropped(), 2);
    }

    #[test]
    fn bad_index_and_empty_are_errors() {
        let v = vec![Vec3::zeros(); 3];
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        let empty = TriangleMesh::new(v, vec![]).unwrap();
        assert!(empty.is_empty() && !empty.is_watertight());
    }

    #[test]
    fn mirror_keeps_orientation() {
        let s = shapes::icosphere(2, 1.0);
        let m = s.mirrored_x();
        assert!(m.is_watertight());
        assert!((m.signed_volume() - s.signed_volume()).abs() < 1e-12);
    }
}
