//! File formats and synthetic data: XYZ and ascii PLY point clouds, STL
//! surface sampling, Gaussian noise, primitive generators, and the sparse
//! operator dump.
//!
//! Every writer is bit-deterministic for identical inputs; floats are written
//! in shortest round-trip decimal form.

mod dump;
mod noise;
mod ply;
mod primitives;
mod stl;
mod xyz;

pub use dump::{read_sparse_dump, write_sparse_dump};
pub use noise::{add_noise, NoiseSpec};
pub use ply::{read_labeled_ply, read_ply, write_labeled_ply, PALETTE};
pub use primitives::{generate_primitive, Primitive, PrimitiveKind};
pub use stl::{read_stl_triangles, sample_stl, sample_stl_reader};
pub use xyz::{read_xyz, read_xyz_reader, write_xyz, write_xyz_writer};
