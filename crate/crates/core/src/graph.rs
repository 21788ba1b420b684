//! Edge-list ingestion, transition-probability construction, edge splitting,
//! and negative-node sampling.
//!
//! Node labels are arbitrary strings interned to dense ids in first-appearance
//! order; everything downstream works on dense ids. Arcs carry both the raw
//! count and the normalized transition probability `p = count(i->j) / sum_k
//! count(i->k)`, so a graph can be re-normalized after edges are removed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use rand::Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::stream::{scoped, Domain};

/// Dense node identifier in `[0, node_count)`.
pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge list contains no usable records")]
    Empty,
    #[error("split fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("split would remove all {0} edges")]
    SplitRemovesAllEdges(usize),
    #[error("node id {0} out of range for {1} nodes")]
    NodeOutOfRange(NodeId, usize),
}

/// One deduplicated directed record from an edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord<T> {
    pub source: String,
    pub target: String,
    pub count: T,
}

/// Parsed edge list: directed multiplicity counts, self-loops already dropped.
#[derive(Debug, Clone)]
pub struct RawEdgeList<T> {
    pub records: Vec<EdgeRecord<T>>,
    /// Every label mentioned in the input, in first-appearance order. A node
    /// whose only mention is a dropped self-loop still belongs to the graph
    /// (it just ends up isolated).
    pub labels: Vec<String>,
    /// Number of `src == dst` input lines that were discarded.
    pub self_loops_dropped: usize,
}

impl<T: Scalar> RawEdgeList<T> {
    /// Parses whitespace-separated `src dst [count]` lines. `#` starts a
    /// comment line; duplicate `(src, dst)` lines have their counts summed.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, GraphError> {
        let mut records: Vec<EdgeRecord<T>> = Vec::new();
        let mut seen: HashMap<(String, String), usize> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut label_set: HashMap<String, ()> = HashMap::new();
        let mut self_loops = 0usize;
        let mention = |label: &str, labels: &mut Vec<String>, set: &mut HashMap<String, ()>| {
            if !set.contains_key(label) {
                set.insert(label.to_string(), ());
                labels.push(label.to_string());
            }
        };

        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let src = fields.next().expect("non-empty line has a first field");
            let dst = fields.next().ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: "expected `src dst [count]`".into(),
            })?;
            let count = match fields.next() {
                None => T::one(),
                Some(raw) => raw.parse::<T>().ok().filter(|c| c.is_finite()).ok_or_else(|| {
                    GraphError::Parse {
                        line: line_no,
                        message: format!("unparseable count `{raw}`"),
                    }
                })?,
            };
            if fields.next().is_some() {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: "expected at most 3 fields".into(),
                });
            }
            if count <= T::zero() {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: "count must be strictly positive".into(),
                });
            }
            mention(src, &mut labels, &mut label_set);
            mention(dst, &mut labels, &mut label_set);
            if src == dst {
                self_loops += 1;
                continue;
            }
            let key = (src.to_string(), dst.to_string());
            match seen.get(&key) {
                Some(&slot) => records[slot].count += count,
                None => {
                    seen.insert(key, records.len());
                    records.push(EdgeRecord {
                        source: src.to_string(),
                        target: dst.to_string(),
                        count,
                    });
                }
            }
        }

        if records.is_empty() {
            return Err(GraphError::Empty);
        }
        Ok(Self {
            records,
            labels,
            self_loops_dropped: self_loops,
        })
    }

    pub fn from_str_input(input: &str) -> Result<Self, GraphError> {
        Self::from_reader(input.as_bytes())
    }
}

/// Outgoing arc: raw count and normalized transition probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjEntry<T> {
    pub neighbor: NodeId,
    pub count: T,
    pub prob: T,
}

/// Incoming arc view: `prob` is the transition probability from `source` to
/// the node owning the list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InEntry<T> {
    pub source: NodeId,
    pub prob: T,
}

/// Node-indexed adjacency with per-arc transition probabilities.
///
/// Immutable after construction; safe to share across any number of readers.
#[derive(Debug, Clone)]
pub struct WeightedGraph<T> {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    out: Vec<Vec<AdjEntry<T>>>,
    incoming: Vec<Vec<InEntry<T>>>,
    symmetric: bool,
}

impl<T: Scalar> WeightedGraph<T> {
    /// Builds the graph from parsed records. With `symmetrize` (the usual
    /// mode for undirected input) every record contributes its count to both
    /// directions before per-node normalization.
    pub fn from_raw(raw: &RawEdgeList<T>, symmetrize: bool) -> Result<Self, GraphError> {
        if raw.records.is_empty() {
            return Err(GraphError::Empty);
        }
        let labels = raw.labels.clone();
        let index: HashMap<String, NodeId> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();

        let mut counts: Vec<BTreeMap<NodeId, T>> = vec![BTreeMap::new(); labels.len()];
        for record in &raw.records {
            let s = index[&record.source];
            let t = index[&record.target];
            *counts[s].entry(t).or_insert_with(T::zero) += record.count;
            if symmetrize {
                *counts[t].entry(s).or_insert_with(T::zero) += record.count;
            }
        }
        Ok(Self::from_parts(labels, index, counts, symmetrize))
    }

    /// Programmatic construction over dense ids `[0, node_count)`; labels are
    /// the decimal ids. Intended for tests and synthetic graphs.
    pub fn from_edges(
        node_count: usize,
        edges: &[(NodeId, NodeId, T)],
        symmetrize: bool,
    ) -> Result<Self, GraphError> {
        let labels: Vec<String> = (0..node_count).map(|i| i.to_string()).collect();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let mut counts: Vec<BTreeMap<NodeId, T>> = vec![BTreeMap::new(); node_count];
        for &(s, t, c) in edges {
            if s >= node_count {
                return Err(GraphError::NodeOutOfRange(s, node_count));
            }
            if t >= node_count {
                return Err(GraphError::NodeOutOfRange(t, node_count));
            }
            if s == t {
                continue;
            }
            *counts[s].entry(t).or_insert_with(T::zero) += c;
            if symmetrize {
                *counts[t].entry(s).or_insert_with(T::zero) += c;
            }
        }
        Ok(Self::from_parts(labels, index, counts, symmetrize))
    }

    fn from_parts(
        labels: Vec<String>,
        index: HashMap<String, NodeId>,
        counts: Vec<BTreeMap<NodeId, T>>,
        symmetric: bool,
    ) -> Self {
        let node_count = labels.len();
        let mut out: Vec<Vec<AdjEntry<T>>> = Vec::with_capacity(node_count);
        for map in counts.iter() {
            let total: T = map.values().copied().sum();
            let row = map
                .iter()
                .map(|(&neighbor, &count)| AdjEntry {
                    neighbor,
                    count,
                    prob: count / total,
                })
                .collect();
            out.push(row);
        }
        out.resize_with(node_count, Vec::new);

        let mut incoming: Vec<Vec<InEntry<T>>> = vec![Vec::new(); node_count];
        for (source, row) in out.iter().enumerate() {
            for entry in row {
                incoming[entry.neighbor].push(InEntry {
                    source,
                    prob: entry.prob,
                });
            }
        }

        Self {
            labels,
            index,
            out,
            incoming,
            symmetric,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// Outgoing arcs of `i`, sorted by neighbor id.
    pub fn neighbors(&self, i: NodeId) -> &[AdjEntry<T>] {
        &self.out[i]
    }

    /// Incoming arcs of `i`, sorted by source id.
    pub fn incoming(&self, i: NodeId) -> &[InEntry<T>] {
        &self.incoming[i]
    }

    /// Undirected degree: number of distinct nodes sharing an arc with `i`.
    pub fn degree(&self, i: NodeId) -> usize {
        if self.symmetric {
            return self.out[i].len();
        }
        let mut merged: BTreeSet<NodeId> = self.out[i].iter().map(|e| e.neighbor).collect();
        merged.extend(self.incoming[i].iter().map(|e| e.source));
        merged.len()
    }

    /// True if `i` and `j` share an arc in either direction.
    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.out[i].binary_search_by_key(&j, |e| e.neighbor).is_ok()
            || self.out[j].binary_search_by_key(&i, |e| e.neighbor).is_ok()
    }

    /// Whether the graph was built with symmetrized counts.
    pub fn symmetrized(&self) -> bool {
        self.symmetric
    }

    /// Unordered node pairs sharing at least one arc, ascending.
    pub fn undirected_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut pairs = BTreeSet::new();
        for (i, row) in self.out.iter().enumerate() {
            for entry in row {
                let j = entry.neighbor;
                pairs.insert((i.min(j), i.max(j)));
            }
        }
        pairs.into_iter().collect()
    }

    pub fn undirected_edge_count(&self) -> usize {
        self.undirected_edges().len()
    }

    pub fn label(&self, i: NodeId) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_id(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    /// Uniform draw from the non-neighbors of `i` (excluding `i`), or `None`
    /// when every other node is adjacent. Rejection sampling; the acceptance
    /// event conditions the uniform proposal on the candidate set.
    pub fn sample_negative<R: Rng + ?Sized>(&self, i: NodeId, rng: &mut R) -> Option<NodeId> {
        let n = self.node_count();
        if n < 2 || self.degree(i) >= n - 1 {
            return None;
        }
        loop {
            let j = rng.gen_range(0..n);
            if j != i && !self.has_edge(i, j) {
                return Some(j);
            }
        }
    }

    /// Holds out `round(fraction * E)` undirected edges chosen uniformly
    /// without replacement, then rebuilds the train graph from the remaining
    /// counts with re-normalized probabilities. Deterministic in `seed`.
    pub fn split_edges(&self, fraction: f64, seed: u64) -> Result<EdgeSplit<T>, GraphError> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(GraphError::BadFraction(fraction));
        }
        let edges = self.undirected_edges();
        let total = edges.len();
        let held_out = (fraction * total as f64).round() as usize;
        if held_out >= total {
            return Err(GraphError::SplitRemovesAllEdges(total));
        }

        let mut rng = scoped(seed, Domain::Split);
        let mut test_edges: Vec<(NodeId, NodeId)> =
            rand::seq::index::sample(&mut rng, total, held_out)
                .into_iter()
                .map(|idx| edges[idx])
                .collect();
        test_edges.sort_unstable();

        let removed: BTreeSet<(NodeId, NodeId)> = test_edges.iter().copied().collect();
        let mut counts: Vec<BTreeMap<NodeId, T>> = vec![BTreeMap::new(); self.node_count()];
        for (i, row) in self.out.iter().enumerate() {
            for entry in row {
                let j = entry.neighbor;
                if removed.contains(&(i.min(j), i.max(j))) {
                    continue;
                }
                counts[i].insert(j, entry.count);
            }
        }
        let train = Self::from_parts(
            self.labels.clone(),
            self.index.clone(),
            counts,
            self.symmetric,
        );

        Ok(EdgeSplit {
            train,
            test_edges,
            fraction,
            seed,
        })
    }
}

/// Train graph plus the held-out undirected test edges.
#[derive(Debug, Clone)]
pub struct EdgeSplit<T> {
    pub train: WeightedGraph<T>,
    /// Held-out pairs, each `(u, v)` with `u < v`, ascending.
    pub test_edges: Vec<(NodeId, NodeId)>,
    pub fraction: f64,
    pub seed: u64,
}

impl<T: Scalar> EdgeSplit<T> {
    pub fn is_test_edge(&self, u: NodeId, v: NodeId) -> bool {
        let key = (u.min(v), u.max(v));
        self.test_edges.binary_search(&key).is_ok()
    }

    /// Test-edge neighbor lists, indexed by node.
    pub fn test_adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.train.node_count()];
        for &(u, v) in &self.test_edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        adj
    }
}
