//! Annealed Hebbian node embeddings on weighted graphs.
//!
//! The pipeline: load an edge list into a [`WeightedGraph`] whose arcs carry
//! transition probabilities, train a [`EmbeddingMatrix`] by iteratively
//! propagating noise-perturbed embeddings along arcs (noise variance shrinks
//! geometrically each sweep), and evaluate the result with ranking protocols:
//! graph reconstruction MAP, link-prediction MAP, binary link AP, and
//! item-to-item HitRate@k.
//!
//! All numeric kernels are generic over the scalar type via [`Scalar`];
//! `f64` aliases are exported at the crate root. Training and evaluation are
//! deterministic functions of their inputs and seeds: randomness comes from
//! per-node counter-based streams, so results do not depend on thread count.

pub mod engine;
pub mod eval;
pub mod graph;
pub mod persist;
pub mod scalar;
pub mod stream;

pub use engine::{
    AnnealingSchedule, EmbeddingMatrix, EngineError, IterationStats, TrainConfig, TrainOutcome,
    UpdateMode,
};
pub use eval::{EvalError, EvalReport, InteractionLog};
pub use graph::{EdgeSplit, GraphError, NodeId, RawEdgeList, WeightedGraph};
pub use persist::PersistError;
pub use scalar::Scalar;

/// Concrete double-precision aliases; the CLI and the file formats use these.
pub type GraphF64 = graph::WeightedGraph<f64>;
pub type EdgeSplitF64 = graph::EdgeSplit<f64>;
pub type EmbeddingsF64 = engine::EmbeddingMatrix<f64>;
pub type TrainConfigF64 = engine::TrainConfig<f64>;

/// Single-precision variants for memory-constrained sweeps.
pub type GraphF32 = graph::WeightedGraph<f32>;
pub type EmbeddingsF32 = engine::EmbeddingMatrix<f32>;
pub type TrainConfigF32 = engine::TrainConfig<f32>;
