//! Directional sanity on the real collaboration graph: more dimensions mean
//! better rankings, for reconstruction and for link prediction.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use hebb_core::engine::{train, TrainConfig};
use hebb_core::eval::{map_link_prediction, map_reconstruction};
use hebb_core::graph::{RawEdgeList, WeightedGraph};

fn grqc() -> WeightedGraph<f64> {
    let base = std::env::var("HEBB_DATA_DIR").unwrap_or_else(|_| "../../data".to_string());
    let path = PathBuf::from(base).join("ca-GrQc.txt");
    let raw = RawEdgeList::<f64>::from_reader(BufReader::new(File::open(path).unwrap())).unwrap();
    WeightedGraph::from_raw(&raw, true).unwrap()
}

#[test]
fn map_grows_with_dimension_for_both_protocols() {
    let graph = grqc();
    let split = graph.split_edges(0.1, 1).unwrap();

    let mut recon = Vec::new();
    let mut linkpred = Vec::new();
    for dim in [10usize, 200] {
        let cfg = TrainConfig::<f64>::new(dim, 1);
        let full = train(&graph, &cfg).unwrap();
        recon.push(
            map_reconstruction(&graph, &full.embeddings, 1024, 1)
                .unwrap()
                .value,
        );
        let held = train(&split.train, &cfg).unwrap();
        linkpred.push(
            map_link_prediction(&split, &held.embeddings, 1024, 1)
                .unwrap()
                .value,
        );
    }
    assert!(recon[0] < recon[1], "reconstruction: {recon:?}");
    assert!(linkpred[0] < linkpred[1], "link prediction: {linkpred:?}");
}
