//! Ranking-based evaluation protocols: graph-reconstruction MAP,
//! link-prediction MAP, binary link average precision, and item-to-item
//! HitRate@k.
//!
//! Every protocol is a deterministic function of its inputs and a seed.
//! Queries are ranked by raw inner product with ties broken by ascending
//! node id; per-query rows are reported sorted by query so that the mean is
//! reproducible bit-for-bit.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::EmbeddingMatrix;
use crate::graph::{EdgeSplit, NodeId, WeightedGraph};
use crate::scalar::{dot, Scalar};
use crate::stream::{stream, Domain};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("embedding has {emb_rows} rows but graph has {graph_nodes} nodes")]
    ShapeMismatch { emb_rows: usize, graph_nodes: usize },
    #[error("no sampled query is eligible: {0}")]
    NoEligibleQueries(&'static str),
    #[error("cannot sample {needed} negative pairs: only {available} non-edges exist")]
    NotEnoughNonEdges { needed: usize, available: usize },
    #[error("split holds no test edges")]
    NoTestEdges,
    #[error("interaction log: {0}")]
    LogFormat(String),
    #[error("interaction log read failed: {0}")]
    LogRead(#[from] csv::Error),
    #[error("no user has two or more distinct resolvable items")]
    NoEligibleUsers,
}

/// Metric outcome with one row per included query.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub metric: String,
    /// Mean of the per-query scores.
    pub value: f64,
    /// `(query id, score)` sorted by query.
    pub per_query: Vec<(String, f64)>,
    /// Exact sampling parameters and seed used, for auditability.
    pub config_echo: String,
}

impl EvalReport {
    fn from_rows(metric: &str, per_query: Vec<(String, f64)>, config_echo: String) -> Self {
        let value = per_query.iter().map(|(_, s)| *s).sum::<f64>() / per_query.len() as f64;
        Self {
            metric: metric.to_string(),
            value,
            per_query,
            config_echo,
        }
    }
}

/// Inner-product similarity between two nodes.
pub fn score<T: Scalar>(emb: &EmbeddingMatrix<T>, i: NodeId, j: NodeId) -> T {
    dot(emb.row(i), emb.row(j))
}

/// All nodes except `query` and `exclusions` (a sorted slice), ordered by
/// descending inner product with ties broken by ascending node id.
pub fn rank_candidates<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    query: NodeId,
    exclusions: &[NodeId],
) -> Vec<NodeId> {
    let reference = emb.row(query);
    let mut scored: Vec<(NodeId, T)> = (0..emb.rows())
        .filter(|&j| j != query && exclusions.binary_search(&j).is_err())
        .map(|j| (j, dot(reference, emb.row(j))))
        .collect();
    scored.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.into_iter().map(|(j, _)| j).collect()
}

/// Average precision of a ranked list against a relevant set: the mean of
/// precision-at-rank over the relevant items that appear in the list, zero
/// if none do.
pub fn average_precision<I: Eq + std::hash::Hash>(ranked: &[I], relevant: &HashSet<I>) -> f64 {
    let mut hits = 0usize;
    let mut precision_sum = 0.0f64;
    for (idx, item) in ranked.iter().enumerate() {
        if relevant.contains(item) {
            hits += 1;
            precision_sum += hits as f64 / (idx + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        precision_sum / hits as f64
    }
}

fn check_shape<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    graph: &WeightedGraph<T>,
) -> Result<(), EvalError> {
    if emb.rows() != graph.node_count() {
        return Err(EvalError::ShapeMismatch {
            emb_rows: emb.rows(),
            graph_nodes: graph.node_count(),
        });
    }
    Ok(())
}

/// Seeded query-node sample shared by the MAP protocols (`tag` 0 =
/// reconstruction, 1 = link prediction). Exposed so independent oracles can
/// score the exact same queries.
pub fn query_sample(node_count: usize, sample_size: usize, seed: u64, tag: u64) -> Vec<NodeId> {
    let n = sample_size.min(node_count);
    let mut rng = stream(seed, Domain::EvalSample, tag, 0);
    let mut nodes: Vec<NodeId> = rand::seq::index::sample(&mut rng, node_count, n).into_vec();
    nodes.sort_unstable();
    nodes
}

/// Ranks the nodes of `pool` (minus the query and `exclusions`) against the
/// query, with the same ordering contract as [`rank_candidates`].
fn rank_within_pool<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    query: NodeId,
    pool: &[NodeId],
    exclusions: &[NodeId],
) -> Vec<NodeId> {
    let reference = emb.row(query);
    let mut scored: Vec<(NodeId, T)> = pool
        .iter()
        .copied()
        .filter(|&j| j != query && exclusions.binary_search(&j).is_err())
        .map(|j| (j, dot(reference, emb.row(j))))
        .collect();
    scored.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.into_iter().map(|(j, _)| j).collect()
}

/// Reconstruction MAP: sampled query nodes must rank their graph neighbors
/// above everything else. Zero-degree queries are excluded from the mean.
pub fn map_reconstruction<T: Scalar>(
    graph: &WeightedGraph<T>,
    emb: &EmbeddingMatrix<T>,
    sample_size: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    check_shape(emb, graph)?;
    let sampled = query_sample(graph.node_count(), sample_size, seed, 0);
    let queries: Vec<NodeId> = sampled
        .iter()
        .copied()
        .filter(|&q| graph.degree(q) >= 1)
        .collect();
    if queries.is_empty() {
        return Err(EvalError::NoEligibleQueries(
            "every sampled node has degree zero",
        ));
    }

    let per_query: Vec<(String, f64)> = queries
        .par_iter()
        .map(|&q| {
            let relevant: HashSet<NodeId> =
                graph.neighbors(q).iter().map(|e| e.neighbor).collect();
            let ranked = rank_candidates(emb, q, &[]);
            (graph.label(q).to_string(), average_precision(&ranked, &relevant))
        })
        .collect();

    let echo = format!(
        "protocol=reconstruction sample_size={sample_size} seed={seed} sampled={} included={} excluded_zero_degree={}",
        sampled.len(),
        queries.len(),
        sampled.len() - queries.len(),
    );
    Ok(EvalReport::from_rows("map_reconstruction", per_query, echo))
}

/// Link-prediction MAP: queries must rank their held-out test neighbors
/// highly; the query's training neighbors are excluded from the candidate
/// list. Queries with no test edge are excluded from the mean.
pub fn map_link_prediction<T: Scalar>(
    split: &EdgeSplit<T>,
    emb: &EmbeddingMatrix<T>,
    sample_size: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let graph = &split.train;
    check_shape(emb, graph)?;
    let test_adj = split.test_adjacency();
    let sampled = query_sample(graph.node_count(), sample_size, seed, 1);
    let queries: Vec<NodeId> = sampled
        .iter()
        .copied()
        .filter(|&q| !test_adj[q].is_empty())
        .collect();
    if queries.is_empty() {
        return Err(EvalError::NoEligibleQueries(
            "no sampled node has a held-out test edge",
        ));
    }

    let per_query: Vec<(String, f64)> = queries
        .par_iter()
        .map(|&q| {
            let exclusions: Vec<NodeId> =
                graph.neighbors(q).iter().map(|e| e.neighbor).collect();
            let relevant: HashSet<NodeId> = test_adj[q].iter().copied().collect();
            let ranked = rank_candidates(emb, q, &exclusions);
            (graph.label(q).to_string(), average_precision(&ranked, &relevant))
        })
        .collect();

    let echo = format!(
        "protocol=link-prediction sample_size={sample_size} seed={seed} sampled={} included={} excluded_no_test_edge={}",
        sampled.len(),
        queries.len(),
        sampled.len() - queries.len(),
    );
    Ok(EvalReport::from_rows("map_link_prediction", per_query, echo))
}

/// Benchmark-scope reconstruction MAP: candidates and relevant sets are both
/// restricted to the sampled node set (the induced-subgraph protocol used by
/// the public graph-embedding benchmark suite). Sampled nodes without a
/// within-sample neighbor are excluded from the mean.
pub fn map_reconstruction_sampled<T: Scalar>(
    graph: &WeightedGraph<T>,
    emb: &EmbeddingMatrix<T>,
    sample_size: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    check_shape(emb, graph)?;
    let sampled = query_sample(graph.node_count(), sample_size, seed, 0);
    let in_sample: HashSet<NodeId> = sampled.iter().copied().collect();
    let queries: Vec<NodeId> = sampled
        .iter()
        .copied()
        .filter(|&q| {
            graph
                .neighbors(q)
                .iter()
                .any(|e| in_sample.contains(&e.neighbor))
        })
        .collect();
    if queries.is_empty() {
        return Err(EvalError::NoEligibleQueries(
            "no sampled node has a neighbor inside the sample",
        ));
    }

    let per_query: Vec<(String, f64)> = queries
        .par_iter()
        .map(|&q| {
            let relevant: HashSet<NodeId> = graph
                .neighbors(q)
                .iter()
                .map(|e| e.neighbor)
                .filter(|j| in_sample.contains(j))
                .collect();
            let ranked = rank_within_pool(emb, q, &sampled, &[]);
            (graph.label(q).to_string(), average_precision(&ranked, &relevant))
        })
        .collect();

    let echo = format!(
        "protocol=reconstruction scope=sampled sample_size={sample_size} seed={seed} sampled={} included={} excluded_no_in_sample_neighbor={}",
        sampled.len(),
        queries.len(),
        sampled.len() - queries.len(),
    );
    Ok(EvalReport::from_rows(
        "map_reconstruction_sampled",
        per_query,
        echo,
    ))
}

/// Benchmark-scope link-prediction MAP: candidates and relevant test
/// neighbors restricted to the sampled node set; the query's training
/// neighbors stay excluded.
pub fn map_link_prediction_sampled<T: Scalar>(
    split: &EdgeSplit<T>,
    emb: &EmbeddingMatrix<T>,
    sample_size: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let graph = &split.train;
    check_shape(emb, graph)?;
    let test_adj = split.test_adjacency();
    let sampled = query_sample(graph.node_count(), sample_size, seed, 1);
    let in_sample: HashSet<NodeId> = sampled.iter().copied().collect();
    let queries: Vec<NodeId> = sampled
        .iter()
        .copied()
        .filter(|&q| test_adj[q].iter().any(|j| in_sample.contains(j)))
        .collect();
    if queries.is_empty() {
        return Err(EvalError::NoEligibleQueries(
            "no sampled node has a held-out test edge inside the sample",
        ));
    }

    let per_query: Vec<(String, f64)> = queries
        .par_iter()
        .map(|&q| {
            let exclusions: Vec<NodeId> =
                graph.neighbors(q).iter().map(|e| e.neighbor).collect();
            let relevant: HashSet<NodeId> = test_adj[q]
                .iter()
                .copied()
                .filter(|j| in_sample.contains(j))
                .collect();
            let ranked = rank_within_pool(emb, q, &sampled, &exclusions);
            (graph.label(q).to_string(), average_precision(&ranked, &relevant))
        })
        .collect();

    let echo = format!(
        "protocol=link-prediction scope=sampled sample_size={sample_size} seed={seed} sampled={} included={} excluded_no_in_sample_test_edge={}",
        sampled.len(),
        queries.len(),
        sampled.len() - queries.len(),
    );
    Ok(EvalReport::from_rows(
        "map_link_prediction_sampled",
        per_query,
        echo,
    ))
}

/// Uniformly samples `count` unordered node pairs that are edges in neither
/// the train graph nor the test set. Exposed so that independent oracles can
/// score the exact same pairs.
pub fn sample_non_edge_pairs<T: Scalar>(
    split: &EdgeSplit<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<(NodeId, NodeId)>, EvalError> {
    let n = split.train.node_count();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let mut occupied: BTreeSet<(NodeId, NodeId)> = split.train.undirected_edges().into_iter().collect();
    occupied.extend(split.test_edges.iter().copied());
    let available = total_pairs - occupied.len();
    if available < count {
        return Err(EvalError::NotEnoughNonEdges {
            needed: count,
            available,
        });
    }

    let mut rng = stream(seed, Domain::EvalPairs, 0, 0);
    let mut chosen: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    if available <= count.saturating_mul(2) {
        // dense regime: enumerate the non-edges and sample indices directly
        let mut non_edges = Vec::with_capacity(available);
        for u in 0..n {
            for v in (u + 1)..n {
                if !occupied.contains(&(u, v)) {
                    non_edges.push((u, v));
                }
            }
        }
        for idx in rand::seq::index::sample(&mut rng, non_edges.len(), count) {
            chosen.insert(non_edges[idx]);
        }
    } else {
        use rand::Rng;
        while chosen.len() < count {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v {
                continue;
            }
            let pair = (u.min(v), u.max(v));
            if occupied.contains(&pair) || chosen.contains(&pair) {
                continue;
            }
            chosen.insert(pair);
        }
    }
    Ok(chosen.into_iter().collect())
}

/// Binary link prediction: held-out test edges are positives, an equal
/// number of sampled non-edges are negatives, all pairs are ranked by inner
/// product, and the report carries the average precision of the positive
/// class. Each per-query row is one positive pair with its precision at the
/// rank where it appears.
pub fn binary_link_ap<T: Scalar>(
    split: &EdgeSplit<T>,
    emb: &EmbeddingMatrix<T>,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let graph = &split.train;
    check_shape(emb, graph)?;
    if split.test_edges.is_empty() {
        return Err(EvalError::NoTestEdges);
    }
    let positives = &split.test_edges;
    let negatives = sample_non_edge_pairs(split, positives.len(), seed)?;

    // pairs keep a stable ascending order for tie-breaking
    let mut pairs: Vec<((NodeId, NodeId), bool)> = positives
        .iter()
        .map(|&p| (p, true))
        .chain(negatives.iter().map(|&p| (p, false)))
        .collect();
    pairs.sort_unstable_by_key(|&(pair, _)| pair);

    let scored: Vec<(T, (NodeId, NodeId), bool)> = pairs
        .iter()
        .map(|&((u, v), pos)| (score(emb, u, v), (u, v), pos))
        .collect();
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        scored[b]
            .0
            .partial_cmp(&scored[a].0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| scored[a].1.cmp(&scored[b].1))
    });

    let mut hits = 0usize;
    let mut rows: Vec<((NodeId, NodeId), f64)> = Vec::with_capacity(positives.len());
    for (rank, &idx) in order.iter().enumerate() {
        let (_, pair, pos) = scored[idx];
        if pos {
            hits += 1;
            rows.push((pair, hits as f64 / (rank + 1) as f64));
        }
    }
    rows.sort_unstable_by_key(|&(pair, _)| pair);
    let per_query: Vec<(String, f64)> = rows
        .into_iter()
        .map(|((u, v), p)| (format!("{}-{}", graph.label(u), graph.label(v)), p))
        .collect();

    let echo = format!(
        "protocol=binary-link-ap seed={seed} positives={} negatives={}",
        positives.len(),
        negatives.len(),
    );
    Ok(EvalReport::from_rows("binary_link_ap", per_query, echo))
}

/// User interaction histories resolved against a graph's node labels.
#[derive(Debug, Clone)]
pub struct InteractionLog {
    /// `(user id, distinct item nodes)` sorted by user id, items ascending.
    users: Vec<(String, Vec<NodeId>)>,
    /// Interaction records whose item label is not a graph node.
    pub unresolved_items: usize,
}

impl InteractionLog {
    /// Parses `user_id,item_id` CSV (header required) and resolves item
    /// labels against the graph. Unresolvable items are dropped and counted.
    pub fn from_csv<T: Scalar, R: Read>(
        reader: R,
        graph: &WeightedGraph<T>,
    ) -> Result<Self, EvalError> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        {
            let headers = csv_reader.headers()?;
            let expected = ["user_id", "item_id"];
            if headers.len() != 2
                || !headers.iter().map(str::trim).eq(expected.iter().copied())
            {
                return Err(EvalError::LogFormat(format!(
                    "expected header `user_id,item_id`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }

        let mut grouped: BTreeMap<String, BTreeSet<NodeId>> = BTreeMap::new();
        let mut unresolved = 0usize;
        for record in csv_reader.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(EvalError::LogFormat(format!(
                    "expected 2 fields, found {}",
                    record.len()
                )));
            }
            match graph.node_id(&record[1]) {
                Some(item) => {
                    grouped.entry(record[0].to_string()).or_default().insert(item);
                }
                None => unresolved += 1,
            }
        }

        Ok(Self {
            users: grouped
                .into_iter()
                .map(|(user, items)| (user, items.into_iter().collect()))
                .collect(),
            unresolved_items: unresolved,
        })
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[(String, Vec<NodeId>)] {
        &self.users
    }
}

/// HitRate@k: for each user with at least two distinct items, pick one item
/// uniformly, rank all other nodes against it, and score a hit when the
/// top-k intersects the rest of the user's history.
pub fn hit_rate_at_k<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    log: &InteractionLog,
    k: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    use rand::Rng;
    let eligible: Vec<&(String, Vec<NodeId>)> =
        log.users.iter().filter(|(_, items)| items.len() >= 2).collect();
    let excluded = log.users.len() - eligible.len();
    if eligible.is_empty() {
        return Err(EvalError::NoEligibleUsers);
    }

    // one pick per user, drawn in sorted-user order from a single stream
    let mut rng = stream(seed, Domain::EvalHitRate, 0, 0);
    let picks: Vec<NodeId> = eligible
        .iter()
        .map(|(_, items)| items[rng.gen_range(0..items.len())])
        .collect();

    let per_query: Vec<(String, f64)> = eligible
        .par_iter()
        .zip(picks.par_iter())
        .map(|((user, items), &query)| {
            let top: Vec<NodeId> = rank_candidates(emb, query, &[])
                .into_iter()
                .take(k)
                .collect();
            let hit = top
                .iter()
                .any(|candidate| items.binary_search(candidate).is_ok() && *candidate != query);
            (user.clone(), if hit { 1.0 } else { 0.0 })
        })
        .collect();

    let echo = format!(
        "protocol=hitrate k={k} seed={seed} users={} included={} excluded_single_item={excluded} unresolved_items={}",
        log.users.len(),
        eligible.len(),
        log.unresolved_items,
    );
    Ok(EvalReport::from_rows("hit_rate_at_k", per_query, echo))
}
