//! File formats and round-trip guarantees: embeddings (text and binary),
//! edge-list and split files, run manifests, telemetry and report CSVs.
//!
//! Text embeddings are human-auditable (`P K` header, then `label v1 .. vK`
//! with shortest round-trip decimals). The binary variant exists because
//! high-dimensional sweeps on large graphs make text I/O a bottleneck:
//! magic bytes, shape, then per row a length-prefixed label and little-endian
//! 64-bit floats.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{
    AnnealingSchedule, EmbeddingMatrix, IterationStats, TrainConfig, UpdateMode,
};
use crate::eval::EvalReport;
use crate::graph::{EdgeSplit, GraphError, RawEdgeList, WeightedGraph};
use crate::scalar::Scalar;

/// Magic prefix of the binary embedding format.
pub const BINARY_MAGIC: &[u8; 8] = b"HEBBEMB1";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("binary format: {0}")]
    Binary(String),
    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },
    #[error("{0}")]
    Graph(#[from] GraphError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingFormat {
    #[default]
    Text,
    Binary,
}

impl EmbeddingFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingFormat::Text => "text",
            EmbeddingFormat::Binary => "binary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "text" => Some(EmbeddingFormat::Text),
            "binary" => Some(EmbeddingFormat::Binary),
            _ => None,
        }
    }
}

/// Writes `P K` then one `label v1 .. vK` line per node (text) or the
/// length-prefixed binary layout. Rejects non-finite values up front.
pub fn save_embeddings<T: Scalar, W: Write>(
    emb: &EmbeddingMatrix<T>,
    labels: &[String],
    mut sink: W,
    format: EmbeddingFormat,
) -> Result<(), PersistError> {
    assert_eq!(labels.len(), emb.rows(), "label/row count mismatch");
    if let Some(row) = emb.first_non_finite() {
        return Err(PersistError::NonFinite { row });
    }
    match format {
        EmbeddingFormat::Text => {
            let mut out = String::new();
            out.push_str(&format!("{} {}\n", emb.rows(), emb.dim()));
            for (label, row) in labels.iter().zip(emb.iter_rows()) {
                out.push_str(label);
                for v in row {
                    out.push(' ');
                    out.push_str(&format!("{v}"));
                }
                out.push('\n');
            }
            sink.write_all(out.as_bytes())?;
        }
        EmbeddingFormat::Binary => {
            sink.write_all(BINARY_MAGIC)?;
            sink.write_all(&(emb.rows() as u64).to_le_bytes())?;
            sink.write_all(&(emb.dim() as u64).to_le_bytes())?;
            for (label, row) in labels.iter().zip(emb.iter_rows()) {
                sink.write_all(&(label.len() as u32).to_le_bytes())?;
                sink.write_all(label.as_bytes())?;
                for v in row {
                    let bits = v.to_f64().expect("finite scalar converts");
                    sink.write_all(&bits.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// Loads either format, sniffing the binary magic. Validates the declared
/// shape and rejects non-finite values.
pub fn load_embeddings<T: Scalar, R: BufRead>(
    mut source: R,
) -> Result<(EmbeddingMatrix<T>, Vec<String>), PersistError> {
    let head = source.fill_buf()?;
    if head.starts_with(BINARY_MAGIC) {
        load_binary(source)
    } else {
        load_text(source)
    }
}

fn load_text<T: Scalar, R: BufRead>(source: R) -> Result<(EmbeddingMatrix<T>, Vec<String>), PersistError> {
    let mut lines = source.lines();
    let header = lines
        .next()
        .ok_or_else(|| PersistError::Format {
            line: 1,
            message: "missing `P K` header".into(),
        })??;
    let mut parts = header.split_whitespace();
    let parse_dim = |s: Option<&str>| {
        s.and_then(|v| v.parse::<usize>().ok()).ok_or(PersistError::Format {
            line: 1,
            message: format!("malformed header `{header}`"),
        })
    };
    let rows = parse_dim(parts.next())?;
    let dim = parse_dim(parts.next())?;
    if parts.next().is_some() {
        return Err(PersistError::Format {
            line: 1,
            message: format!("malformed header `{header}`"),
        });
    }

    let mut labels = Vec::with_capacity(rows);
    let mut matrix = Vec::with_capacity(rows);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        if labels.len() == rows {
            return Err(PersistError::Format {
                line: line_no,
                message: format!("more than the declared {rows} rows"),
            });
        }
        let mut fields = line.split_whitespace();
        let label = fields.next().expect("non-empty line");
        let values: Vec<T> = fields
            .map(|f| {
                f.parse::<T>().map_err(|_| PersistError::Format {
                    line: line_no,
                    message: format!("unparseable value `{f}`"),
                })
            })
            .collect::<Result<_, _>>()?;
        if values.len() != dim {
            return Err(PersistError::Format {
                line: line_no,
                message: format!("expected {dim} values, found {}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PersistError::Format {
                line: line_no,
                message: "non-finite value".into(),
            });
        }
        labels.push(label.to_string());
        matrix.push(values);
    }
    if labels.len() != rows {
        return Err(PersistError::Format {
            line: labels.len() + 2,
            message: format!("declared {rows} rows, found {}", labels.len()),
        });
    }
    let emb = if rows == 0 {
        EmbeddingMatrix::zeros(0, dim)
    } else {
        EmbeddingMatrix::from_rows(matrix)
    };
    Ok((emb, labels))
}

fn load_binary<T: Scalar, R: Read>(mut source: R) -> Result<(EmbeddingMatrix<T>, Vec<String>), PersistError> {
    let mut magic = [0u8; 8];
    source.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(PersistError::Binary("bad magic".into()));
    }
    let mut u64buf = [0u8; 8];
    source.read_exact(&mut u64buf)?;
    let rows = u64::from_le_bytes(u64buf) as usize;
    source.read_exact(&mut u64buf)?;
    let dim = u64::from_le_bytes(u64buf) as usize;

    let mut labels = Vec::with_capacity(rows);
    let mut matrix: Vec<Vec<T>> = Vec::with_capacity(rows);
    for row_idx in 0..rows {
        let mut u32buf = [0u8; 4];
        source.read_exact(&mut u32buf).map_err(|_| {
            PersistError::Binary(format!("truncated at row {row_idx}: missing label"))
        })?;
        let label_len = u32::from_le_bytes(u32buf) as usize;
        let mut label = vec![0u8; label_len];
        source.read_exact(&mut label)?;
        let label = String::from_utf8(label)
            .map_err(|_| PersistError::Binary(format!("row {row_idx}: label not UTF-8")))?;

        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            source.read_exact(&mut u64buf).map_err(|_| {
                PersistError::Binary(format!("truncated at row {row_idx}: missing values"))
            })?;
            let v = f64::from_le_bytes(u64buf);
            if !v.is_finite() {
                return Err(PersistError::NonFinite { row: row_idx });
            }
            values.push(T::from_config(v));
        }
        labels.push(label);
        matrix.push(values);
    }
    let mut trailing = [0u8; 1];
    if source.read(&mut trailing)? != 0 {
        return Err(PersistError::Binary("trailing bytes after last row".into()));
    }
    let emb = if rows == 0 {
        EmbeddingMatrix::zeros(0, dim)
    } else {
        EmbeddingMatrix::from_rows(matrix)
    };
    Ok((emb, labels))
}

/// Writes one `src dst count` line per undirected pair (`src < dst` by node
/// id). Isolated nodes are preserved as self-loop records, which the loader
/// drops while keeping the node in the universe.
pub fn save_edge_list<T: Scalar, W: Write>(
    graph: &WeightedGraph<T>,
    mut sink: W,
) -> Result<(), PersistError> {
    let mut out = String::new();
    for i in 0..graph.node_count() {
        for arc in graph.neighbors(i) {
            if arc.neighbor > i {
                out.push_str(&format!(
                    "{} {} {}\n",
                    graph.label(i),
                    graph.label(arc.neighbor),
                    arc.count
                ));
            }
        }
        if graph.degree(i) == 0 {
            out.push_str(&format!("{} {} 1\n", graph.label(i), graph.label(i)));
        }
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

/// One-line JSON sidecar describing a split.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SplitMeta {
    pub fraction: f64,
    pub seed: u64,
    pub total_edges: usize,
    pub train_edges: usize,
    pub test_edges: usize,
}

/// Writes `train.edges`, `test.edges`, and `split.json` into `dir`.
pub fn write_split<T: Scalar>(split: &EdgeSplit<T>, dir: &Path) -> Result<(), PersistError> {
    std::fs::create_dir_all(dir)?;
    let train_file = std::fs::File::create(dir.join("train.edges"))?;
    save_edge_list(&split.train, std::io::BufWriter::new(train_file))?;

    let mut test_out = String::new();
    for &(u, v) in &split.test_edges {
        test_out.push_str(&format!(
            "{} {}\n",
            split.train.label(u),
            split.train.label(v)
        ));
    }
    std::fs::write(dir.join("test.edges"), test_out)?;

    let meta = SplitMeta {
        fraction: split.fraction,
        seed: split.seed,
        total_edges: split.train.undirected_edge_count() + split.test_edges.len(),
        train_edges: split.train.undirected_edge_count(),
        test_edges: split.test_edges.len(),
    };
    let mut line = serde_json::to_string(&meta)?;
    line.push('\n');
    std::fs::write(dir.join("split.json"), line)?;
    Ok(())
}

/// Rebuilds an [`EdgeSplit`] from `train.edges` + `test.edges` files. Test
/// pairs are resolved through the train graph's label map, which preserves
/// the full node set by construction.
pub fn read_split<T: Scalar>(
    train_path: &Path,
    test_path: &Path,
    meta_path: Option<&Path>,
) -> Result<EdgeSplit<T>, PersistError> {
    let train_raw = RawEdgeList::<T>::from_reader(std::io::BufReader::new(
        std::fs::File::open(train_path)?,
    ))?;
    let train = WeightedGraph::from_raw(&train_raw, true)?;

    let mut test_edges = Vec::new();
    for (idx, line) in std::fs::read_to_string(test_path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (a, b) = match (fields.next(), fields.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(PersistError::Format {
                    line: idx + 1,
                    message: "expected `src dst`".into(),
                })
            }
        };
        let resolve = |label: &str| {
            train.node_id(label).ok_or_else(|| PersistError::Format {
                line: idx + 1,
                message: format!("test node `{label}` missing from train graph"),
            })
        };
        let (u, v) = (resolve(a)?, resolve(b)?);
        test_edges.push((u.min(v), u.max(v)));
    }
    test_edges.sort_unstable();
    test_edges.dedup();

    let (fraction, seed) = match meta_path {
        Some(path) => {
            let meta: SplitMeta = serde_json::from_str(std::fs::read_to_string(path)?.trim())?;
            (meta.fraction, meta.seed)
        }
        None => (0.0, 0),
    };
    Ok(EdgeSplit {
        train,
        test_edges,
        fraction,
        seed,
    })
}

/// SHA-256 over the graph's labels, arcs, and counts; detects evaluating
/// embeddings against a different edge file.
pub fn graph_sha256<T: Scalar>(graph: &WeightedGraph<T>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(graph.node_count().to_le_bytes());
    for i in 0..graph.node_count() {
        hasher.update(graph.label(i).as_bytes());
        hasher.update([0u8]);
        for arc in graph.neighbors(i) {
            hasher.update(arc.neighbor.to_le_bytes());
            hasher.update(format!("{}", arc.count).as_bytes());
            hasher.update([1u8]);
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Flat `key=value` record of a training run; enough to reproduce the
/// embedding file bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub dataset: String,
    pub graph_sha256: String,
    pub nodes: usize,
    pub edges: usize,
    pub symmetrize: bool,
    pub dim: usize,
    pub iterations: u32,
    pub learning_rate: f64,
    pub sigma2_0: f64,
    pub tau: f64,
    pub negative_weight: f64,
    pub negatives_enabled: bool,
    pub seed: u64,
    pub update_mode: UpdateMode,
    pub format: EmbeddingFormat,
    pub train_seconds: f64,
}

impl RunManifest {
    pub fn config(&self) -> TrainConfig<f64> {
        TrainConfig::new(self.dim, self.seed)
            .with_iterations(self.iterations)
            .with_learning_rate(self.learning_rate)
            .with_schedule(AnnealingSchedule::new(self.sigma2_0, self.tau))
            .with_negative_weight(self.negative_weight)
            .with_negatives(self.negatives_enabled)
            .with_update_mode(self.update_mode)
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<(), PersistError> {
        let text = format!(
            "tool_version={}\ndataset={}\ngraph_sha256={}\nnodes={}\nedges={}\nsymmetrize={}\ndim={}\niterations={}\nlearning_rate={}\nsigma2_0={}\ntau={}\nnegative_weight={}\nnegatives_enabled={}\nseed={}\nupdate_mode={}\nformat={}\ntrain_seconds={}\n",
            self.tool_version,
            self.dataset,
            self.graph_sha256,
            self.nodes,
            self.edges,
            self.symmetrize,
            self.dim,
            self.iterations,
            self.learning_rate,
            self.sigma2_0,
            self.tau,
            self.negative_weight,
            self.negatives_enabled,
            self.seed,
            self.update_mode.as_str(),
            self.format.as_str(),
            self.train_seconds,
        );
        sink.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self, PersistError> {
        let mut fields = std::collections::HashMap::new();
        for line in source.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PersistError::Manifest(format!("malformed line `{line}`")))?;
            fields.insert(key.to_string(), value.to_string());
        }
        let get = |key: &str| {
            fields
                .get(key)
                .cloned()
                .ok_or_else(|| PersistError::Manifest(format!("missing key `{key}`")))
        };
        let parse = |key: &str, value: &str| PersistError::Manifest(format!("bad {key}=`{value}`"));
        macro_rules! field {
            ($key:literal, $ty:ty) => {{
                let raw = get($key)?;
                raw.parse::<$ty>().map_err(|_| parse($key, &raw))?
            }};
        }
        Ok(Self {
            tool_version: get("tool_version")?,
            dataset: get("dataset")?,
            graph_sha256: get("graph_sha256")?,
            nodes: field!("nodes", usize),
            edges: field!("edges", usize),
            symmetrize: field!("symmetrize", bool),
            dim: field!("dim", usize),
            iterations: field!("iterations", u32),
            learning_rate: field!("learning_rate", f64),
            sigma2_0: field!("sigma2_0", f64),
            tau: field!("tau", f64),
            negative_weight: field!("negative_weight", f64),
            negatives_enabled: field!("negatives_enabled", bool),
            seed: field!("seed", u64),
            update_mode: {
                let raw = get("update_mode")?;
                UpdateMode::parse(&raw).ok_or_else(|| parse("update_mode", &raw))?
            },
            format: {
                let raw = get("format")?;
                EmbeddingFormat::parse(&raw).ok_or_else(|| parse("format", &raw))?
            },
            train_seconds: field!("train_seconds", f64),
        })
    }
}

/// Telemetry CSV: `iter,sigma2,mean_norm,max_norm,seconds` with a leading
/// comment naming the producing invocation.
pub fn write_telemetry<W: Write>(
    mut sink: W,
    telemetry: &[IterationStats],
    comment: &str,
) -> Result<(), PersistError> {
    let mut out = format!("# {comment}\niter,sigma2,mean_norm,max_norm,seconds\n");
    for s in telemetry {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.iteration, s.sigma2, s.mean_norm, s.max_norm, s.seconds
        ));
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

/// Report CSV: metadata comments, then a summary row and (optionally) one
/// detail row per query.
pub fn write_report<W: Write>(
    mut sink: W,
    report: &EvalReport,
    per_query: bool,
    comment: &str,
) -> Result<(), PersistError> {
    let mut out = format!("# {comment}\n# {}\nkind,id,value\n", report.config_echo);
    out.push_str(&format!("summary,{},{}\n", report.metric, report.value));
    if per_query {
        for (id, score) in &report.per_query {
            out.push_str(&format!("query,{id},{score}\n"));
        }
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}
