use std::collections::HashMap;

use super::bvh::{Bvh, ClosestHit};
use super::mesh::TriangleMesh;
use super::triangle::Feature;
use crate::{Error, Result, Vec3};

/// Exact signed distance to a watertight mesh.
///
/// Magnitude comes from the BVH closest-point query; the sign from the
/// angle-weighted pseudonormal of the closest feature (face, edge or vertex),
/// negative inside.
#[derive(Debug, Clone)]
pub struct MeshSdf {
    mesh: TriangleMesh,
    bvh: Bvh,
    face_normals: Vec<Vec3>,
    edge_normals: Vec<[Vec3; 3]>,
    vertex_normals: Vec<Vec3>,
}

#[derive(Debug, Clone, Copy)]
pub struct SignedHit {
    pub distance: f64,
    pub closest: ClosestHit,
    /// Unit gradient of the signed distance at the query point.
    pub normal: Vec3,
}

impl MeshSdf {
    pub fn new(mesh: TriangleMesh) -> Result<Self> {
        if !mesh.is_watertight() {
            return Err(Error::NotWatertight);
        }
        let bvh = Bvh::build(&mesh)?;
        Self::with_bvh(mesh, bvh)
    }

    pub fn with_bvh(mesh: TriangleMesh, bvh: Bvh) -> Result<Self> {
        if !mesh.is_watertight() {
            return Err(Error::NotWatertight);
        }
        let tris = mesh.triangles();
        let verts = mesh.vertices();
        let face_normals: Vec<Vec3> = (0..tris.len())
            .map(|t| mesh.face_cross(t).normalize())
            .collect();

        let mut vertex_normals = vec![Vec3::zeros(); verts.len()];
        let mut edge_sum: HashMap<(u32, u32), Vec3> = HashMap::with_capacity(tris.len() * 3 / 2);
        for (t, tri) in tris.iter().enumerate() {
            let n = face_normals[t];
            for k in 0..3 {
                let (i, j, l) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let e1 = (verts[j as usize] - verts[i as usize]).normalize();
                let e2 = (verts[l as usize] - verts[i as usize]).normalize();
                let angle = e1.dot(&e2).clamp(-1.0, 1.0).acos();
                vertex_normals[i as usize] += angle * n;
                *edge_sum.entry(edge_key(i, j)).or_insert_with(Vec3::zeros) += n;
            }
        }
        let edge_normals = tris
            .iter()
            .map(|tri| std::array::from_fn(|k| edge_sum[&edge_key(tri[k], tri[(k + 1) % 3])]))
            .collect();

        Ok(Self {
            mesh,
            bvh,
            face_normals,
            edge_normals,
            vertex_normals,
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn closest_point(&self, q: &Vec3) -> ClosestHit {
        self.bvh.closest_point(&self.mesh, q)
    }

    /// Pseudonormal of the feature the hit landed on (not unit length).
    pub fn pseudonormal(&self, hit: &ClosestHit) -> Vec3 {
        match hit.feature {
            Feature::Face => self.face_normals[hit.triangle],
            Feature::Edge(k) => self.edge_normals[hit.triangle][k as usize],
            Feature::Vertex(k) => {
                self.vertex_normals[self.mesh.triangles()[hit.triangle][k as usize] as usize]
            }
        }
    }

    pub fn query(&self, q: &Vec3) -> SignedHit {
        let closest = self.closest_point(q);
        let pseudo = self.pseudonormal(&closest);
        let delta = q - closest.point;
        let inside = delta.dot(&pseudo) < 0.0;
        let distance = if inside { -closest.distance } else { closest.distance };
        let normal = if closest.distance > 0.0 {
            let dir = delta / closest.distance;
            if inside {
                -dir
            } else {
                dir
            }
        } else {
            pseudo.normalize()
        };
        SignedHit {
            distance,
            closest,
            normal,
        }
    }

    pub fn signed_distance(&self, q: &Vec3) -> f64 {
        self.query(q).distance
    }

    pub fn size_bytes(&self) -> usize {
        self.bvh.size_bytes()
            + self.mesh.vertices().len() * 24
            + self.mesh.triangle_count() * 12
    }
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
