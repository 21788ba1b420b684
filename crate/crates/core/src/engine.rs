//! Embedding initialization, annealed noisy propagation, negative-edge
//! repulsion, and the training loop.
//!
//! Each sweep perturbs every node's embedding with zero-mean Gaussian noise
//! whose variance follows a geometric annealing schedule, propagates the
//! perturbed vector along every arc scaled by the arc's transition
//! probability and the learning rate, and pushes a repulsive update across
//! one sampled non-edge per node. The default `Batched` mode reads a
//! start-of-iteration snapshot and applies all deltas at the end of the
//! sweep, which is what makes the shared-nothing parallel contract possible;
//! `InPlace` is the sequential reference that applies every update
//! immediately.
//!
//! Determinism: all randomness is drawn from streams keyed by
//! `(seed, domain, iteration, node)`, and deltas accumulate in ascending
//! source order per target, so training is a pure function of
//! `(graph, config)` regardless of worker count.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{NodeId, WeightedGraph};
use crate::scalar::{norm, Scalar};
use crate::stream::{stream, Domain};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("non-finite embedding for node {node} at iteration {iteration}")]
    NonFinite { node: NodeId, iteration: u32 },
    #[error("embedding has {emb_rows} rows but graph has {graph_nodes} nodes")]
    ShapeMismatch { emb_rows: usize, graph_nodes: usize },
}

/// Dense row-major `P x K` matrix; row `i` is the embedding of node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    rows: usize,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            data: vec![T::zero(); rows * dim],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        let count = rows.len();
        for row in rows {
            assert_eq!(row.len(), dim, "ragged embedding rows");
            data.extend(row);
        }
        Self {
            rows: count,
            dim,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: NodeId) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: NodeId) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// Id of the first row containing a non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<NodeId> {
        (0..self.rows).find(|&i| self.row(i).iter().any(|v| !v.is_finite()))
    }
}

/// Geometric noise-variance decay: the variance entering sweep `m` is
/// `sigma2_0 / tau^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealingSchedule<T> {
    pub sigma2_0: T,
    pub tau: T,
}

impl<T: Scalar> AnnealingSchedule<T> {
    pub fn new(sigma2_0: T, tau: T) -> Self {
        Self { sigma2_0, tau }
    }

    /// Closed-form variance for sweep `m`. Evaluated with plain IEEE
    /// multiplications (not the `powi` intrinsic, whose rounding differs
    /// between const-folded and runtime lowerings), so the value is
    /// reproducible bit-for-bit and stays within one ulp of `sigma2_0/tau^m`.
    pub fn sigma2_at(&self, m: u32) -> T {
        let mut tau_pow = T::one();
        for _ in 0..m {
            tau_pow *= self.tau;
        }
        self.sigma2_0 / tau_pow
    }
}

impl<T: Scalar> Default for AnnealingSchedule<T> {
    fn default() -> Self {
        Self {
            sigma2_0: T::from_config(10.0),
            tau: T::from_config(1.1),
        }
    }
}

/// One annealing update: divide the variance by the reduction factor.
pub fn anneal_step<T: Scalar>(sigma2: T, tau: T) -> T {
    sigma2 / tau
}

/// Whether a sweep reads a start-of-iteration snapshot or mutates as it goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    #[default]
    Batched,
    InPlace,
}

impl UpdateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpdateMode::Batched => "batched",
            UpdateMode::InPlace => "in-place",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "batched" => Some(UpdateMode::Batched),
            "in-place" | "in_place" => Some(UpdateMode::InPlace),
            _ => None,
        }
    }
}

/// Training hyper-parameters. `new` gives the reference configuration:
/// 10 sweeps, learning rate 1, initial variance 10 decaying by 1.1, batched
/// updates. Negative-edge repulsion (one sampled non-edge per node, weight
/// 0.5) is available behind `negatives_enabled`; it is off by default
/// because it measurably degrades every ranking benchmark on the public
/// graphs, which reproduce only without it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub dim: usize,
    pub iterations: u32,
    pub learning_rate: T,
    pub schedule: AnnealingSchedule<T>,
    pub negative_weight: T,
    pub negatives_enabled: bool,
    pub seed: u64,
    pub update_mode: UpdateMode,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            iterations: 10,
            learning_rate: T::one(),
            schedule: AnnealingSchedule::default(),
            negative_weight: T::from_config(0.5),
            negatives_enabled: false,
            seed,
            update_mode: UpdateMode::Batched,
        }
    }

    pub fn with_iterations(mut self, n: u32) -> Self {
        self.iterations = n;
        self
    }

    pub fn with_learning_rate(mut self, eta: T) -> Self {
        self.learning_rate = eta;
        self
    }

    pub fn with_schedule(mut self, schedule: AnnealingSchedule<T>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_negative_weight(mut self, w: T) -> Self {
        self.negative_weight = w;
        self
    }

    pub fn with_negatives(mut self, enabled: bool) -> Self {
        self.negatives_enabled = enabled;
        self
    }

    pub fn with_update_mode(mut self, mode: UpdateMode) -> Self {
        self.update_mode = mode;
        self
    }
}

/// Per-sweep telemetry row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub iteration: u32,
    pub sigma2: f64,
    pub mean_norm: f64,
    pub max_norm: f64,
    pub seconds: f64,
}

/// Final embeddings plus per-sweep telemetry.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub embeddings: EmbeddingMatrix<T>,
    pub telemetry: Vec<IterationStats>,
}

/// Draws row `i` i.i.d. from `N(0, sigma2_0)` using the node's own stream,
/// so the initialization of a node does not depend on the node count or on
/// visit order.
pub fn init_embeddings<T: Scalar>(node_count: usize, config: &TrainConfig<T>) -> EmbeddingMatrix<T> {
    let sigma = config.schedule.sigma2_0.sqrt();
    let dim = config.dim;
    let seed = config.seed;
    let rows: Vec<Vec<T>> = (0..node_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Domain::Init, i as u64, 0);
            (0..dim).map(|_| sigma * T::standard_normal(&mut rng)).collect()
        })
        .collect();
    let mut emb = EmbeddingMatrix::from_rows(rows);
    if node_count == 0 || dim == 0 {
        emb = EmbeddingMatrix::zeros(node_count, dim);
    }
    emb
}

/// `w + g` with `g` i.i.d. `N(0, sigma2)` per coordinate. Zero variance
/// returns `w` unchanged and draws nothing.
pub fn perturb<T: Scalar, R: Rng + ?Sized>(w: &[T], sigma2: T, rng: &mut R) -> Vec<T> {
    if sigma2 <= T::zero() {
        return w.to_vec();
    }
    let sigma = sigma2.sqrt();
    w.iter()
        .map(|&x| x + sigma * T::standard_normal(rng))
        .collect()
}

fn axpy<T: Scalar>(acc: &mut [T], coeff: T, src: &[T]) {
    for (a, &s) in acc.iter_mut().zip(src.iter()) {
        *a += coeff * s;
    }
}

/// Perturbed start-of-iteration snapshot; one draw per node per sweep.
fn perturbed_snapshot<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    sigma2: T,
    seed: u64,
    iteration: u32,
) -> Vec<Vec<T>> {
    (0..emb.rows())
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Domain::Perturb, iteration as u64, i as u64);
            perturb(emb.row(i), sigma2, &mut rng)
        })
        .collect()
}

fn negative_selections<T: Scalar>(
    graph: &WeightedGraph<T>,
    seed: u64,
    iteration: u32,
) -> Vec<Option<NodeId>> {
    (0..graph.node_count())
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Domain::Negative, iteration as u64, i as u64);
            graph.sample_negative(i, &mut rng)
        })
        .collect()
}

/// One training sweep. See the module docs for the two update modes; the
/// returned matrix is a new allocation, the input is untouched.
pub fn iterate<T: Scalar>(
    graph: &WeightedGraph<T>,
    emb: &EmbeddingMatrix<T>,
    config: &TrainConfig<T>,
    sigma2: T,
    iteration: u32,
) -> Result<EmbeddingMatrix<T>, EngineError> {
    if emb.rows() != graph.node_count() {
        return Err(EngineError::ShapeMismatch {
            emb_rows: emb.rows(),
            graph_nodes: graph.node_count(),
        });
    }
    let next = match config.update_mode {
        UpdateMode::Batched => iterate_batched(graph, emb, config, sigma2, iteration),
        UpdateMode::InPlace => iterate_in_place(graph, emb, config, sigma2, iteration),
    };
    if let Some(node) = next.first_non_finite() {
        return Err(EngineError::NonFinite { node, iteration });
    }
    Ok(next)
}

fn iterate_batched<T: Scalar>(
    graph: &WeightedGraph<T>,
    emb: &EmbeddingMatrix<T>,
    config: &TrainConfig<T>,
    sigma2: T,
    iteration: u32,
) -> EmbeddingMatrix<T> {
    let node_count = graph.node_count();
    let dim = emb.dim();
    let eta = config.learning_rate;
    let tilde = perturbed_snapshot(emb, sigma2, config.seed, iteration);

    let selections = if config.negatives_enabled {
        negative_selections(graph, config.seed, iteration)
    } else {
        vec![None; node_count]
    };
    // targets of negative propagation, grouped with sources ascending
    let mut negative_inbox: Vec<Vec<NodeId>> = vec![Vec::new(); node_count];
    for (i, sel) in selections.iter().enumerate() {
        if let Some(target) = *sel {
            negative_inbox[target].push(i);
        }
    }

    let neg_coeff = eta * config.negative_weight;
    let rows: Vec<Vec<T>> = (0..node_count)
        .into_par_iter()
        .map(|j| {
            let mut delta = vec![T::zero(); dim];
            for arc in graph.incoming(j) {
                axpy(&mut delta, eta * arc.prob, &tilde[arc.source]);
            }
            for &source in &negative_inbox[j] {
                axpy(&mut delta, -neg_coeff, &tilde[source]);
            }
            if let Some(target) = selections[j] {
                axpy(&mut delta, -neg_coeff, &tilde[target]);
            }
            let mut row = emb.row(j).to_vec();
            for (w, d) in row.iter_mut().zip(delta) {
                *w += d;
            }
            row
        })
        .collect();
    EmbeddingMatrix::from_rows(rows)
}

/// Sequential reference sweep: every arc update lands immediately, in
/// ascending `(i, j)` order, with a fresh perturbation per arc. Negative
/// propagation for node `i` is applied right after its arcs, drawing both
/// perturbations from node `i`'s stream.
fn iterate_in_place<T: Scalar>(
    graph: &WeightedGraph<T>,
    emb: &EmbeddingMatrix<T>,
    config: &TrainConfig<T>,
    sigma2: T,
    iteration: u32,
) -> EmbeddingMatrix<T> {
    let node_count = graph.node_count();
    let eta = config.learning_rate;
    let neg_coeff = eta * config.negative_weight;
    let mut current = emb.clone();

    for i in 0..node_count {
        let mut rng = stream(config.seed, Domain::Perturb, iteration as u64, i as u64);
        for arc in graph.neighbors(i) {
            let tilde_i = perturb(current.row(i), sigma2, &mut rng);
            let coeff = eta * arc.prob;
            axpy(current.row_mut(arc.neighbor), coeff, &tilde_i);
        }
        if config.negatives_enabled {
            let mut neg_rng = stream(config.seed, Domain::Negative, iteration as u64, i as u64);
            if let Some(target) = graph.sample_negative(i, &mut neg_rng) {
                let tilde_i = perturb(current.row(i), sigma2, &mut rng);
                let tilde_t = perturb(current.row(target), sigma2, &mut rng);
                axpy(current.row_mut(target), -neg_coeff, &tilde_i);
                axpy(current.row_mut(i), -neg_coeff, &tilde_t);
            }
        }
    }
    current
}

/// Runs `init_embeddings` followed by `iterations` sweeps with the variance
/// following the closed-form schedule. Pure function of `(graph, config)`.
pub fn train<T: Scalar>(
    graph: &WeightedGraph<T>,
    config: &TrainConfig<T>,
) -> Result<TrainOutcome<T>, EngineError> {
    let mut emb = init_embeddings(graph.node_count(), config);
    let mut telemetry = Vec::with_capacity(config.iterations as usize);

    for m in 0..config.iterations {
        let sigma2 = config.schedule.sigma2_at(m);
        let started = Instant::now();
        emb = iterate(graph, &emb, config, sigma2, m)?;
        let seconds = started.elapsed().as_secs_f64();

        let mut max_norm = 0.0f64;
        let mut sum_norm = 0.0f64;
        for row in emb.iter_rows() {
            let n = norm(row).to_f64().unwrap_or(f64::NAN);
            max_norm = max_norm.max(n);
            sum_norm += n;
        }
        let mean_norm = if emb.rows() == 0 {
            0.0
        } else {
            sum_norm / emb.rows() as f64
        };
        telemetry.push(IterationStats {
            iteration: m,
            sigma2: sigma2.to_f64().unwrap_or(f64::NAN),
            mean_norm,
            max_norm,
            seconds,
        });
    }
    Ok(TrainOutcome {
        embeddings: emb,
        telemetry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::scalar::dot;

    fn graph(edges: &[(usize, usize)], nodes: usize) -> WeightedGraph<f64> {
        let weighted: Vec<(usize, usize, f64)> =
            edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        WeightedGraph::from_edges(nodes, &weighted, true).unwrap()
    }

    fn config(dim: usize) -> TrainConfig<f64> {
        TrainConfig::new(dim, 42)
    }

    fn zero_noise(dim: usize) -> TrainConfig<f64> {
        config(dim)
            .with_schedule(AnnealingSchedule::new(0.0, 1.1))
            .with_negatives(false)
    }

    #[test]
    fn defaults_match_the_reference_configuration() {
        let cfg = TrainConfig::<f64>::new(128, 0);
        assert_eq!(cfg.iterations, 10);
        assert_eq!(cfg.learning_rate, 1.0);
        assert_eq!(cfg.schedule.sigma2_0, 10.0);
        assert_eq!(cfg.schedule.tau, 1.1);
        assert_eq!(cfg.negative_weight, 0.5);
        assert_eq!(cfg.update_mode, UpdateMode::Batched);
    }

    #[test]
    fn anneal_step_divides() {
        let next = anneal_step(10.0f64, 1.1);
        assert_eq!(next, 10.0 / 1.1);
        assert!((next - 9.090909090909091).abs() < 1e-14);
    }

    #[test]
    fn anneal_repeated_matches_closed_form_approximately() {
        let mut sigma2 = 10.0f64;
        for _ in 0..10 {
            sigma2 = anneal_step(sigma2, 1.1);
        }
        assert!((sigma2 - 3.8554328942953166).abs() < 1e-12);
        let schedule = AnnealingSchedule::new(10.0, 1.1);
        assert!((schedule.sigma2_at(10) - sigma2).abs() < 1e-12);
    }

    #[test]
    fn anneal_strictly_decreases_positive_variance() {
        for &x in &[1e-12, 0.5, 10.0, 1e12] {
            let next = anneal_step(x, 1.1);
            assert!(next < x && next > 0.0);
        }
    }

    #[test]
    fn schedule_is_strictly_decreasing() {
        let schedule = AnnealingSchedule::<f64>::default();
        for m in 0..20 {
            assert!(schedule.sigma2_at(m + 1) < schedule.sigma2_at(m));
            assert!(schedule.sigma2_at(m) > 0.0);
        }
    }

    #[test]
    fn init_is_deterministic_and_independent_of_node_count() {
        let cfg = config(8);
        let small = init_embeddings(5, &cfg);
        let large = init_embeddings(100, &cfg);
        assert_eq!(init_embeddings(5, &cfg), small);
        for i in 0..5 {
            assert_eq!(small.row(i), large.row(i));
        }
    }

    #[test]
    fn init_matches_requested_moments() {
        let cfg = config(16);
        let emb = init_embeddings(10_000, &cfg);
        let n = (10_000 * 16) as f64;
        let mean: f64 = emb.iter_rows().flatten().sum::<f64>() / n;
        let var: f64 = emb
            .iter_rows()
            .flatten()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (n - 1.0);
        assert!(mean.abs() < 0.05, "sample mean {mean}");
        assert!((var - 10.0).abs() < 0.3, "sample variance {var}");
    }

    #[test]
    fn zero_variance_init_is_all_zero() {
        let cfg = config(4).with_schedule(AnnealingSchedule::new(0.0, 1.1));
        let emb = init_embeddings(6, &cfg);
        assert!(emb.iter_rows().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn perturb_zero_variance_is_identity() {
        let w = vec![1.0, -2.5, 3.25];
        let mut rng = stream(1, Domain::Perturb, 0, 0);
        assert_eq!(perturb(&w, 0.0, &mut rng), w);
    }

    #[test]
    fn perturb_moments_match() {
        let w = vec![0.0f64; 1];
        let mut rng = stream(7, Domain::Perturb, 0, 0);
        let draws = 100_000;
        let samples: Vec<f64> = (0..draws).map(|_| perturb(&w, 4.0, &mut rng)[0]).collect();
        let mean = samples.iter().sum::<f64>() / draws as f64;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (draws - 1) as f64;
        let std = var.sqrt();
        assert!((std - 2.0).abs() < 0.04, "sample std {std}");
        // std of the sample mean is 2/sqrt(draws) ~ 0.0063
        assert!(mean.abs() < 0.04, "sample mean {mean}");
    }

    #[test]
    fn perturb_is_centered_on_w() {
        let w = vec![3.0f64, -7.0];
        let mut rng = stream(11, Domain::Perturb, 1, 0);
        let draws = 100_000;
        let mut acc = [0.0f64; 2];
        for _ in 0..draws {
            let p = perturb(&w, 1.0, &mut rng);
            acc[0] += p[0];
            acc[1] += p[1];
        }
        for (a, target) in acc.iter().zip(w.iter()) {
            let mean = a / draws as f64;
            // std of the mean is 1/sqrt(draws) ~ 0.0032
            assert!((mean - target).abs() < 0.02, "mean {mean} target {target}");
        }
    }

    #[test]
    fn zero_edge_graph_is_unchanged_without_negatives() {
        let g = graph(&[], 3);
        let cfg = zero_noise(4);
        let emb = init_embeddings(3, &cfg);
        for mode in [UpdateMode::Batched, UpdateMode::InPlace] {
            let cfg = cfg.clone().with_update_mode(mode);
            let next = iterate(&g, &emb, &cfg, 0.0, 0).unwrap();
            assert_eq!(next, emb);
        }
    }

    #[test]
    fn two_node_zero_noise_batched_adds_neighbors() {
        let g = graph(&[(0, 1)], 2);
        let emb = EmbeddingMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let next = iterate(&g, &emb, &zero_noise(2), 0.0, 0).unwrap();
        assert_eq!(next.row(0), &[1.0, 1.0]);
        assert_eq!(next.row(1), &[1.0, 1.0]);
    }

    #[test]
    fn path_graph_hand_traced_sweeps() {
        // path 0-1-2 with unit counts: p01 = 1, p10 = p12 = 1/2, p21 = 1
        let g = graph(&[(0, 1), (1, 2)], 3);
        let start = EmbeddingMatrix::from_rows(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![2.0, 0.0],
        ]);

        let batched = iterate(&g, &start, &zero_noise(2), 0.0, 0).unwrap();
        assert_eq!(batched.row(0), &[1.0, 0.5]);
        assert_eq!(batched.row(1), &[3.0, 1.0]);
        assert_eq!(batched.row(2), &[2.0, 0.5]);

        let cfg = zero_noise(2).with_update_mode(UpdateMode::InPlace);
        let sequential = iterate(&g, &start, &cfg, 0.0, 0).unwrap();
        assert_eq!(sequential.row(0), &[1.5, 0.5]);
        assert_eq!(sequential.row(1), &[3.5, 1.5]);
        assert_eq!(sequential.row(2), &[2.5, 0.5]);

        assert_ne!(batched, sequential);
    }

    #[test]
    fn zero_noise_batched_equals_dense_transition_map() {
        // w' = w + eta * P^T w on a small graph, checked against dense arithmetic
        let g = graph(&[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], 4);
        let cfg = zero_noise(3);
        let emb = init_embeddings(4, &cfg);
        let next = iterate(&g, &emb, &cfg, 0.0, 0).unwrap();

        let n = 4;
        let mut p = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for arc in g.neighbors(i) {
                p[i][arc.neighbor] = arc.prob;
            }
        }
        for j in 0..n {
            for k in 0..3 {
                let mut expect = emb.row(j)[k];
                for i in 0..n {
                    expect += p[i][j] * emb.row(i)[k];
                }
                assert!((next.row(j)[k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn iterate_rejects_shape_mismatch() {
        let g = graph(&[(0, 1)], 2);
        let emb = EmbeddingMatrix::<f64>::zeros(3, 2);
        assert!(matches!(
            iterate(&g, &emb, &zero_noise(2), 0.0, 0),
            Err(EngineError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn negative_repulsion_reduces_inner_product() {
        // two isolated nodes: each is the other's only negative candidate
        let g = graph(&[], 2);
        let mut initial_sum = 0.0;
        let mut final_sum = 0.0;
        for seed in 0..100 {
            let cfg = TrainConfig::new(4, seed).with_negatives(true);
            let start = init_embeddings(2, &cfg);
            let outcome = train(&g, &cfg).unwrap();
            initial_sum += dot(start.row(0), start.row(1));
            final_sum += dot(outcome.embeddings.row(0), outcome.embeddings.row(1));
        }
        assert!(
            final_sum / 100.0 < initial_sum / 100.0,
            "mean inner product did not drop: {} -> {}",
            initial_sum / 100.0,
            final_sum / 100.0
        );
    }

    #[test]
    fn train_zero_iterations_returns_initialization() {
        let g = graph(&[(0, 1), (1, 2)], 3);
        let cfg = config(5).with_iterations(0);
        let outcome = train(&g, &cfg).unwrap();
        assert_eq!(outcome.embeddings, init_embeddings(3, &cfg));
        assert!(outcome.telemetry.is_empty());
    }

    #[test]
    fn train_is_deterministic() {
        let g = graph(&[(0, 1), (1, 2), (2, 0), (2, 3)], 4);
        let cfg = config(6).with_iterations(5);
        let a = train(&g, &cfg).unwrap();
        let b = train(&g, &cfg).unwrap();
        assert_eq!(a.embeddings, b.embeddings);
    }

    #[test]
    fn train_telemetry_follows_closed_form_schedule() {
        let g = graph(&[(0, 1)], 2);
        let cfg = config(3);
        let outcome = train(&g, &cfg).unwrap();
        assert_eq!(outcome.telemetry.len(), 10);
        let mut tau_pow = 1.0f64;
        for (m, stats) in outcome.telemetry.iter().enumerate() {
            assert_eq!(stats.iteration as usize, m);
            assert_eq!(stats.sigma2, 10.0 / tau_pow);
            assert!(stats.max_norm.is_finite());
            tau_pow *= 1.1;
        }
    }

    #[test]
    fn two_cliques_share_more_similarity_inside_than_across() {
        // two K4 cliques joined by a single bridge edge
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in (a + 1)..4 {
                edges.push((a, b));
                edges.push((a + 4, b + 4));
            }
        }
        edges.push((0, 4));
        let g = graph(&edges, 8);
        let outcome = train(&g, &TrainConfig::new(8, 7)).unwrap();
        let emb = &outcome.embeddings;

        let mut within = Vec::new();
        let mut across = Vec::new();
        for a in 0..8 {
            for b in (a + 1)..8 {
                let score = dot(emb.row(a), emb.row(b));
                if (a < 4) == (b < 4) {
                    within.push(score);
                } else {
                    across.push(score);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&within) > mean(&across),
            "within {} vs across {}",
            mean(&within),
            mean(&across)
        );
    }

    #[test]
    fn divergence_aborts_with_node_and_iteration() {
        let g = graph(&[(0, 1)], 2);
        let cfg = config(2).with_learning_rate(1e300);
        match train(&g, &cfg) {
            Err(EngineError::NonFinite { iteration, .. }) => {
                assert!(iteration >= 1, "overflow needs one growth step");
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
