//! Property tests for the structural invariants: row-stochastic transition
//! rows, symmetric structure with independent weights, label round-trips,
//! split disjointness, worker-count independence, and file round-trips.

use proptest::prelude::*;

use hebb_core::engine::{init_embeddings, train, TrainConfig};
use hebb_core::graph::WeightedGraph;
use hebb_core::persist::{load_embeddings, save_embeddings, EmbeddingFormat};

fn arb_edges() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    proptest::collection::vec(
        (0usize..10, 0usize..10, 0.1f64..8.0),
        1..24,
    )
    .prop_map(|edges| {
        edges
            .into_iter()
            .filter(|(a, b, _)| a != b)
            .collect::<Vec<_>>()
    })
    .prop_filter("needs at least one edge", |edges| !edges.is_empty())
}

fn build(edges: &[(usize, usize, f64)]) -> WeightedGraph<f64> {
    let nodes = edges
        .iter()
        .flat_map(|&(a, b, _)| [a, b])
        .max()
        .unwrap()
        + 1;
    WeightedGraph::from_edges(nodes, edges, true).unwrap()
}

proptest! {
    #[test]
    fn rows_stochastic_after_build_and_split(edges in arb_edges(), seed in 0u64..64) {
        let graph = build(&edges);
        let check = |g: &WeightedGraph<f64>| {
            for i in 0..g.node_count() {
                let row = g.neighbors(i);
                if row.is_empty() {
                    continue;
                }
                let sum: f64 = row.iter().map(|e| e.prob).sum();
                prop_assert!((sum - 1.0).abs() < 1e-9, "node {i} sums to {sum}");
                prop_assert!(row.iter().all(|e| e.prob > 0.0 && e.prob <= 1.0));
            }
            Ok(())
        };
        check(&graph)?;
        if graph.undirected_edge_count() >= 2 {
            let split = graph.split_edges(0.5, seed).unwrap();
            check(&split.train)?;
        }
    }

    #[test]
    fn structure_symmetric_weights_independent(edges in arb_edges()) {
        let graph = build(&edges);
        for i in 0..graph.node_count() {
            for arc in graph.neighbors(i) {
                prop_assert!(graph
                    .neighbors(arc.neighbor)
                    .iter()
                    .any(|back| back.neighbor == i));
            }
        }
    }

    #[test]
    fn labels_round_trip(edges in arb_edges()) {
        let graph = build(&edges);
        for i in 0..graph.node_count() {
            prop_assert_eq!(graph.node_id(graph.label(i)), Some(i));
        }
    }

    #[test]
    fn split_is_disjoint_and_sized(edges in arb_edges(), seed in 0u64..64) {
        let graph = build(&edges);
        let total = graph.undirected_edge_count();
        prop_assume!(total >= 2);
        let split = graph.split_edges(0.5, seed).unwrap();
        prop_assert_eq!(
            split.test_edges.len(),
            (0.5 * total as f64).round() as usize
        );
        for &(u, v) in &split.test_edges {
            prop_assert!(!split.train.has_edge(u, v));
        }
        prop_assert_eq!(split.train.node_count(), graph.node_count());
        prop_assert_eq!(
            split.train.undirected_edge_count() + split.test_edges.len(),
            total
        );
    }

    #[test]
    fn training_is_worker_count_independent(edges in arb_edges(), seed in 0u64..16) {
        let graph = build(&edges);
        let config = TrainConfig::<f64>::new(4, seed)
            .with_iterations(3)
            .with_negatives(true);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| train(&graph, &config).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| train(&graph, &config).unwrap());
        prop_assert_eq!(single.embeddings, parallel.embeddings);
    }

    #[test]
    fn trained_embeddings_stay_finite(edges in arb_edges(), seed in 0u64..16) {
        let graph = build(&edges);
        let outcome = train(&graph, &TrainConfig::<f64>::new(6, seed).with_negatives(true)).unwrap();
        prop_assert!(outcome.embeddings.first_non_finite().is_none());
    }

    #[test]
    fn embedding_files_round_trip(rows in 1usize..12, dim in 1usize..9, seed in 0u64..32) {
        let emb = init_embeddings(rows, &TrainConfig::<f64>::new(dim, seed));
        let labels: Vec<String> = (0..rows).map(|i| format!("n{i}")).collect();
        for format in [EmbeddingFormat::Text, EmbeddingFormat::Binary] {
            let mut buf = Vec::new();
            save_embeddings(&emb, &labels, &mut buf, format).unwrap();
            let (loaded, loaded_labels) = load_embeddings::<f64, _>(buf.as_slice()).unwrap();
            prop_assert_eq!(&loaded, &emb);
            prop_assert_eq!(&loaded_labels, &labels);
        }
    }
}
