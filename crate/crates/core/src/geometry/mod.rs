//! Triangle meshes, spatial acceleration and the exact signed-distance oracle.

mod bvh;
mod io;
mod mesh;
mod normalize;
mod oracle;
mod triangle;

pub use bvh::{Aabb, Bvh, BvhNode, ClosestHit};
pub use io::{load_mesh, read_obj, read_ply, write_obj, write_ply};
pub use mesh::TriangleMesh;
pub use normalize::{normalize, NormalizationTransform};
pub use oracle::MeshSdf;
pub use triangle::{closest_point_on_triangle, Feature, TrianglePoint};
