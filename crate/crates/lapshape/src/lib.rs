//! Shape description, similarity, and segmentation directly on 3D point
//! clouds — no surface reconstruction.
//!
//! The pipeline: build a symmetric point-cloud Laplacian from local tangent
//! frames ([`spcl`]), solve its generalized eigenproblem ([`eigen`]), compute
//! heat-kernel signatures ([`hks`]), then segment and compare shapes
//! ([`segmentation`], [`retrieval`]). File formats, synthetic data, and noise
//! live in [`io`].
//!
//! All numeric kernels are generic over the scalar type via [`real::Real`];
//! `f64` aliases for the main types are exported at the crate root.

pub mod cloud;
pub mod eigen;
pub mod error;
pub mod frame;
pub mod linalg;
pub mod hks;
pub mod normals;
pub mod segmentation;
pub mod real;
pub mod cluster1d;
pub mod spatial;
pub mod spcl;

pub use cloud::{estimate_spacing, PointCloud, UnitBoxTransform};
pub use eigen::{solve_eigs, solve_eigs_with, EigenSystem, SolveOptions};
pub use error::{Error, Result};
pub use frame::{build_local_frame, triangulate_frame, LocalFrame, LocalTriangulation};
pub use hks::{
    build_feature_vector, compute_heat_kernel, compute_heat_kernel_with_cap, compute_hks,
    default_t_scales, FeatureVector, HeatKernelMatrix, HksField,
};
pub use normals::{detect_sharp_edges, estimate_normals, normal_variation};
pub use real::Real;
pub use segmentation::{
    clustering_balance, curvature_segment, heat_walk, persistence_segment, recluster_by_type,
    remove_small_segments, tau_for_segment_count, Segmentation,
};
pub use spcl::{assemble_spcl, assemble_spcl_with, RingEstimate, SpclOperator};

/// `f64` aliases for the main domain types.
pub type PointCloud64 = PointCloud<f64>;
pub type PointCloud32 = PointCloud<f32>;
