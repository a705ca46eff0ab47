//! Distance learning on single-chart surfaces: geodesic approximation,
//! metric learning, generalized k-means, evaluation and surface MDS.

pub mod clustering;
pub mod error;
pub mod eval;
pub mod geodesic;
pub mod graph;
pub mod io;
pub mod mds;
pub mod metric_learning;
pub mod optimize;
pub mod quadrature;
pub mod seed;
pub mod surfaces;
pub mod synthetic;

pub use clustering::{kmeans_fit, ClusterAssignment, KMeansConfig};
pub use error::{Error, Result};
pub use eval::{EvalReport, Split};
pub use geodesic::{base_distance, GeodesicConfig};
pub use graph::{Dissimilarity, GraphDataset};
pub use mds::{mds_embed, Embedding};
pub use metric_learning::{fit, FitResult, LinearTransform, ObjectiveKind, OptimizerConfig};
pub use surfaces::{surface_from_spec, SharedSurface, BasePointSet, Surface};
