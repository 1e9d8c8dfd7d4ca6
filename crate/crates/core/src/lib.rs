//! Signed-distance collision handling for physically based simulation.
//!
//! Three interchangeable distance backends share one [`collision::SdfProvider`]
//! contract:
//!
//! - [`geometry::MeshSdf`]: exact closest point on a triangle mesh through a BVH,
//!   signed with angle-weighted pseudonormals. Ground truth for everything else.
//! - [`voxel::VoxelGrid`]: a regular grid of exact distances with trilinear lookup.
//! - [`neural::NeuralSdf`]: a Fourier-feature MLP trained on labelled samples,
//!   with an exact input gradient for contact normals.
//!
//! Contacts are resolved by projecting penetrating points along the field
//! normal to the `epsilon` offset surface. The [`cloth`] module drives this from
//! a Verlet mass-spring simulator, [`reconstruct`] validates fidelity with
//! marching cubes and error metrics, and [`bench`] times the full contact path.
//!
//! All geometry is processed in normalized units (longest bounding box axis
//! spans `[-0.9, 0.9]`); [`geometry::NormalizationTransform`] converts back to
//! model units, which are taken to be meters.

pub mod bench;
pub mod cli;
pub mod cloth;
pub mod collision;
pub mod error;
pub mod geometry;
pub mod neural;
pub mod reconstruct;
pub mod sampling;
pub mod shapes;
pub mod voxel;

pub use error::{Error, Result};

/// Points, directions and normals.
pub type Vec3 = nalgebra::Vector3<f64>;
