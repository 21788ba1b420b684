//! Brute-force oracles for the ranking metrics, independent of the library's
//! evaluation path. Rankings are produced by repeated argmax over a dense
//! score matrix and AP is computed from its definition. Seeded sampling
//! helpers (`query_sample`, `sample_non_edge_pairs`) are shared with the
//! implementation so both sides score the same queries and pairs; everything
//! downstream of sampling is recomputed here.

use std::collections::HashSet;

use hebb_core::engine::EmbeddingMatrix;
use hebb_core::eval::{query_sample, sample_non_edge_pairs};
use hebb_core::graph::{EdgeSplit, NodeId, WeightedGraph};

/// Dense score matrix from plain left-to-right dot products.
pub fn score_matrix(emb: &EmbeddingMatrix<f64>) -> Vec<Vec<f64>> {
    let n = emb.rows();
    let mut scores = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..emb.dim() {
                acc += emb.row(i)[k] * emb.row(j)[k];
            }
            scores[i][j] = acc;
        }
    }
    scores
}

/// Ranking by repeated argmax: highest score first, ties to the lowest id.
fn rank_by_selection(scores: &[f64], candidates: &[NodeId]) -> Vec<NodeId> {
    let mut remaining: Vec<NodeId> = candidates.to_vec();
    let mut ranked = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let mut best_idx = 0;
        for idx in 1..remaining.len() {
            let (cand, best) = (remaining[idx], remaining[best_idx]);
            if scores[cand] > scores[best] || (scores[cand] == scores[best] && cand < best) {
                best_idx = idx;
            }
        }
        ranked.push(remaining.remove(best_idx));
    }
    ranked
}

/// AP by definition: mean of precision-at-rank over relevant items present
/// in the list; 0 when none appear.
pub fn ap_by_definition(ranked: &[NodeId], relevant: &HashSet<NodeId>) -> f64 {
    let mut hits = 0usize;
    let mut total = 0.0;
    for (idx, item) in ranked.iter().enumerate() {
        if relevant.contains(item) {
            hits += 1;
            total += hits as f64 / (idx + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        total / hits as f64
    }
}

fn mean_in_query_order(aps: &[f64]) -> f64 {
    aps.iter().sum::<f64>() / aps.len() as f64
}

/// Brute-force reconstruction MAP; `scope_sampled` restricts candidates and
/// relevant sets to the sampled node set.
pub fn map_reconstruction(
    graph: &WeightedGraph<f64>,
    emb: &EmbeddingMatrix<f64>,
    sample_size: usize,
    seed: u64,
    scope_sampled: bool,
) -> Option<f64> {
    let scores = score_matrix(emb);
    let sampled = query_sample(graph.node_count(), sample_size, seed, 0);
    let in_sample: HashSet<NodeId> = sampled.iter().copied().collect();
    let mut aps = Vec::new();
    for &q in &sampled {
        let relevant: HashSet<NodeId> = graph
            .neighbors(q)
            .iter()
            .map(|e| e.neighbor)
            .filter(|j| !scope_sampled || in_sample.contains(j))
            .collect();
        if relevant.is_empty() {
            continue;
        }
        let candidates: Vec<NodeId> = if scope_sampled {
            sampled.iter().copied().filter(|&j| j != q).collect()
        } else {
            (0..graph.node_count()).filter(|&j| j != q).collect()
        };
        let ranked = rank_by_selection(&scores[q], &candidates);
        aps.push(ap_by_definition(&ranked, &relevant));
    }
    if aps.is_empty() {
        None
    } else {
        Some(mean_in_query_order(&aps))
    }
}

/// Brute-force link-prediction MAP with train-neighbor exclusion.
pub fn map_link_prediction(
    split: &EdgeSplit<f64>,
    emb: &EmbeddingMatrix<f64>,
    sample_size: usize,
    seed: u64,
    scope_sampled: bool,
) -> Option<f64> {
    let graph = &split.train;
    let scores = score_matrix(emb);
    let test_adj = split.test_adjacency();
    let sampled = query_sample(graph.node_count(), sample_size, seed, 1);
    let in_sample: HashSet<NodeId> = sampled.iter().copied().collect();
    let mut aps = Vec::new();
    for &q in &sampled {
        let relevant: HashSet<NodeId> = test_adj[q]
            .iter()
            .copied()
            .filter(|j| !scope_sampled || in_sample.contains(j))
            .collect();
        if relevant.is_empty() {
            continue;
        }
        let exclude: HashSet<NodeId> = graph.neighbors(q).iter().map(|e| e.neighbor).collect();
        let candidates: Vec<NodeId> = if scope_sampled {
            sampled
                .iter()
                .copied()
                .filter(|&j| j != q && !exclude.contains(&j))
                .collect()
        } else {
            (0..graph.node_count())
                .filter(|&j| j != q && !exclude.contains(&j))
                .collect()
        };
        let ranked = rank_by_selection(&scores[q], &candidates);
        aps.push(ap_by_definition(&ranked, &relevant));
    }
    if aps.is_empty() {
        None
    } else {
        Some(mean_in_query_order(&aps))
    }
}

/// Brute-force binary link AP over the same positives/negatives as the
/// implementation: rank all pairs (score desc, pair asc), take the mean of
/// precision-at-rank over positives ordered by pair.
pub fn binary_link_ap(split: &EdgeSplit<f64>, emb: &EmbeddingMatrix<f64>, seed: u64) -> Option<f64> {
    if split.test_edges.is_empty() {
        return None;
    }
    let negatives = sample_non_edge_pairs(split, split.test_edges.len(), seed).ok()?;
    let scores = score_matrix(emb);

    let mut pairs: Vec<((NodeId, NodeId), bool)> = split
        .test_edges
        .iter()
        .map(|&p| (p, true))
        .chain(negatives.iter().map(|&p| (p, false)))
        .collect();
    pairs.sort_unstable_by_key(|&(p, _)| p);

    // repeated argmax over pairs
    let mut remaining: Vec<usize> = (0..pairs.len()).collect();
    let mut order = Vec::with_capacity(pairs.len());
    while !remaining.is_empty() {
        let mut best = 0;
        for idx in 1..remaining.len() {
            let (pa, _) = pairs[remaining[idx]];
            let (pb, _) = pairs[remaining[best]];
            let (sa, sb) = (scores[pa.0][pa.1], scores[pb.0][pb.1]);
            if sa > sb || (sa == sb && pa < pb) {
                best = idx;
            }
        }
        order.push(remaining.remove(best));
    }

    let mut found: Vec<((NodeId, NodeId), f64)> = Vec::new();
    let mut hits = 0usize;
    for (rank, &idx) in order.iter().enumerate() {
        let (pair, positive) = pairs[idx];
        if positive {
            hits += 1;
            found.push((pair, hits as f64 / (rank + 1) as f64));
        }
    }
    found.sort_unstable_by_key(|&(p, _)| p);
    let precisions: Vec<f64> = found.into_iter().map(|(_, p)| p).collect();
    Some(mean_in_query_order(&precisions))
}

/// Deterministic random graph family for oracle sweeps: `n` nodes, each pair
/// kept with probability ~0.4, counts in {1, 2, 3}. Roughly half the cases
/// get integer-quantized embeddings so that score ties actually occur.
pub fn random_graph_case(case: u64) -> (WeightedGraph<f64>, EmbeddingMatrix<f64>) {
    use rand::Rng;
    let mut rng = hebb_core::stream::stream(0xC0FFEE, hebb_core::stream::Domain::EvalSample, case, 0);
    let n = rng.gen_range(2..=8usize);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(0.4) {
                let count = rng.gen_range(1..=3) as f64;
                edges.push((u, v, count));
            }
        }
    }
    if edges.is_empty() {
        let u = rng.gen_range(0..n);
        let v = (u + 1) % n;
        edges.push((u.min(v), u.max(v), 1.0));
    }
    let graph = WeightedGraph::from_edges(n, &edges, true).unwrap();

    let dim = rng.gen_range(1..=4usize);
    let quantize = case % 2 == 0;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let v: f64 = rng.gen_range(-2.0..2.0);
                    if quantize {
                        v.round()
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    (graph, EmbeddingMatrix::from_rows(rows))
}
