//! Citation-graph ingestion and preprocessing: TSV loading, symmetric
//! normalization of the self-loop-augmented adjacency, train/val/test edge
//! splits with sampled negatives, and the weighted reconstruction target.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::RngStream;
use crate::{Mat, SpMat};

/// An attributed, undirected graph. The adjacency is binary, symmetric, and
/// zero on the diagonal; feature rows follow the node order of the source
/// file. Labels are class indices assigned in first-seen order, with the
/// original label strings kept for exports.
#[derive(Clone, Debug)]
pub struct Graph {
    pub n: usize,
    pub node_ids: Vec<String>,
    pub adjacency: SpMat,
    pub features: Mat,
    pub labels: Option<Vec<usize>>,
    pub num_classes: Option<usize>,
    pub label_names: Option<Vec<String>>,
}

/// Train/validation/test partition of the undirected edge set, with sampled
/// negative pairs for evaluation. Negatives are non-edges of the FULL graph,
/// so a validation negative can never be a held-out test positive.
#[derive(Clone, Debug)]
pub struct EdgeSplit {
    pub train_adjacency: SpMat,
    pub val_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
    pub seed: u64,
}

/// Serializable record of a split, enough to reproduce evaluation exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub val_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
}

/// Reconstruction target: the training adjacency plus self-loops, with the
/// class-imbalance weights used by the reconstruction loss. On a sparse
/// graph an unweighted loss collapses to the all-zero prediction, so
/// positive entries are up-weighted by `pos_weight` and the whole loss is
/// rescaled by `norm`.
#[derive(Clone, Debug)]
pub struct ReconTarget {
    pub labels: SpMat,
    pub pos_weight: f64,
    pub norm: f64,
}

impl EdgeSplit {
    pub fn manifest(&self, val_frac: f64, test_frac: f64) -> SplitManifest {
        SplitManifest {
            seed: self.seed,
            val_frac,
            test_frac,
            val_pos: self.val_pos.clone(),
            val_neg: self.val_neg.clone(),
            test_pos: self.test_pos.clone(),
            test_neg: self.test_neg.clone(),
        }
    }

    /// Rebuilds a split against a graph from its manifest.
    pub fn from_manifest(g: &Graph, m: &SplitManifest) -> Result<EdgeSplit> {
        let held: HashSet<(usize, usize)> = m
            .val_pos
            .iter()
            .chain(&m.test_pos)
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        let mut train_pairs = Vec::new();
        for (i, j, _) in g.adjacency.iter() {
            if i < j && !held.contains(&(i, j)) {
                train_pairs.push((i, j));
            }
        }
        Ok(EdgeSplit {
            train_adjacency: adjacency_from_pairs(g.n, &train_pairs)?,
            val_pos: m.val_pos.clone(),
            val_neg: m.val_neg.clone(),
            test_pos: m.test_pos.clone(),
            test_neg: m.test_neg.clone(),
            seed: m.seed,
        })
    }
}

fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('#')
}

/// Loads a dataset from two TSV files.
///
/// Nodes: `id <TAB> f1 .. fm <TAB> label`, one node per line, labels mapped
/// to class indices in first-seen order. Edges: `src <TAB> dst` per line,
/// referencing node ids. Lines starting with `#` and blank lines are
/// ignored in both files. The adjacency comes out deduplicated, symmetric,
/// and self-loop-free (self-referencing edge lines are dropped).
pub fn load_citation_dataset(nodes_path: &Path, edges_path: &Path) -> Result<Graph> {
    let nodes_name = nodes_path.display().to_string();
    let reader = BufReader::new(File::open(nodes_path)?);

    let mut node_ids = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut feature_rows: Vec<f64> = Vec::new();
    let mut m: Option<usize> = None;
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut label_index: HashMap<String, usize> = HashMap::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if is_comment_or_blank(&line) {
            continue;
        }
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::Format {
                path: nodes_name.clone(),
                line: lineno,
                msg: format!("expected id, features, label; got {} fields", fields.len()),
            });
        }
        let this_m = fields.len() - 2;
        match m {
            None => m = Some(this_m),
            Some(m) if m != this_m => {
                return Err(Error::Format {
                    path: nodes_name.clone(),
                    line: lineno,
                    msg: format!("ragged row: {this_m} features where previous rows had {m}"),
                });
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if index_of.insert(id.clone(), node_ids.len()).is_some() {
            return Err(Error::Format {
                path: nodes_name.clone(),
                line: lineno,
                msg: format!("duplicate node id {id:?}"),
            });
        }
        node_ids.push(id);
        for raw in &fields[1..fields.len() - 1] {
            let v: f64 = raw.parse().map_err(|_| Error::Format {
                path: nodes_name.clone(),
                line: lineno,
                msg: format!("unparseable feature value {raw:?}"),
            })?;
            feature_rows.push(v);
        }
        let label = fields[fields.len() - 1];
        let class = *label_index.entry(label.to_string()).or_insert_with(|| {
            label_names.push(label.to_string());
            label_names.len() - 1
        });
        labels.push(class);
    }

    let n = node_ids.len();
    if n == 0 {
        return Err(Error::Format {
            path: nodes_name,
            line: 0,
            msg: "no nodes".into(),
        });
    }
    let m = m.unwrap();
    let features = Mat::from_vec(n, m, feature_rows)?;

    let edges_name = edges_path.display().to_string();
    let reader = BufReader::new(File::open(edges_path)?);
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if is_comment_or_blank(&line) {
            continue;
        }
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Format {
                path: edges_name.clone(),
                line: lineno,
                msg: format!("expected src <TAB> dst; got {} fields", fields.len()),
            });
        }
        let mut endpoints = [0usize; 2];
        for (k, raw) in fields.iter().enumerate() {
            endpoints[k] = *index_of.get(*raw).ok_or_else(|| Error::Reference {
                path: edges_name.clone(),
                line: lineno,
                id: raw.to_string(),
            })?;
        }
        let (a, b) = (endpoints[0], endpoints[1]);
        if a == b {
            continue;
        }
        pairs.insert((a.min(b), a.max(b)));
    }
    let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    pairs.sort_unstable();

    let num_classes = label_names.len();
    Ok(Graph {
        n,
        node_ids,
        adjacency: adjacency_from_pairs(n, &pairs)?,
        features,
        labels: Some(labels),
        num_classes: Some(num_classes),
        label_names: Some(label_names),
    })
}

/// Writes a graph back out in the TSV format `load_citation_dataset` reads.
/// Feature values print in shortest round-trip form, so a load/save/load
/// cycle reproduces the graph exactly.
pub fn save_citation_dataset(g: &Graph, nodes_path: &Path, edges_path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(nodes_path)?);
    for i in 0..g.n {
        write!(w, "{}", g.node_ids[i])?;
        for v in g.features.row(i) {
            write!(w, "\t{v}")?;
        }
        let label = match (&g.labels, &g.label_names) {
            (Some(labels), Some(names)) => names[labels[i]].clone(),
            _ => "0".to_string(),
        };
        writeln!(w, "\t{label}")?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(edges_path)?);
    for (i, j, _) in g.adjacency.iter() {
        if i < j {
            writeln!(w, "{}\t{}", g.node_ids[i], g.node_ids[j])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Symmetric binary adjacency from undirected pairs (each listed once).
fn adjacency_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<SpMat> {
    let mut triplets = Vec::with_capacity(pairs.len() * 2);
    for &(a, b) in pairs {
        triplets.push((a, b, 1.0));
        triplets.push((b, a, 1.0));
    }
    SpMat::from_triplets(n, n, &triplets)
}

/// D̃^(−1/2)·(A + I)·D̃^(−1/2) where D̃ is the degree matrix of A + I: the
/// propagation operator of the graph convolution. Isolated nodes keep a
/// well-defined self-loop entry of 1. The input must be square, symmetric,
/// and zero-diagonal.
pub fn build_normalized_adjacency(adjacency: &SpMat) -> SpMat {
    let n = adjacency.rows();
    assert_eq!(n, adjacency.cols(), "adjacency must be square");
    debug_assert!(adjacency.is_symmetric(0.0), "adjacency must be symmetric");
    debug_assert!(
        (0..n).all(|i| adjacency.get(i, i) == 0.0),
        "adjacency must be zero-diagonal"
    );

    let degrees = adjacency.row_sums();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / (d + 1.0).sqrt()).collect();

    let mut triplets = Vec::with_capacity(adjacency.nnz() + n);
    for (i, j, v) in adjacency.iter() {
        triplets.push((i, j, v * inv_sqrt[i] * inv_sqrt[j]));
    }
    for (i, &s) in inv_sqrt.iter().enumerate() {
        triplets.push((i, i, s * s));
    }
    SpMat::from_triplets(n, n, &triplets).expect("triplets are in range")
}

/// Divides each feature row by its L1 norm; all-zero rows pass through.
pub fn row_normalize_features(features: &Mat) -> Mat {
    let mut out = features.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let norm: f64 = row.iter().map(|v| v.abs()).sum();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    out
}

/// Splits the undirected edge set into train/validation/test and samples an
/// equal number of negative (non-edge) pairs for each evaluation set.
///
/// Edges are enumerated once as i<j pairs and shuffled; floor(test_frac·E)
/// go to test, then floor(val_frac·E) to validation, and the remainder is
/// rebuilt into a symmetric training adjacency. Negatives are drawn
/// uniformly without replacement from the non-edges of the full graph
/// (self-loops excluded), test set first.
pub fn split_edges(
    g: &Graph,
    val_frac: f64,
    test_frac: f64,
    rng: &mut RngStream,
) -> Result<EdgeSplit> {
    if val_frac < 0.0 || test_frac < 0.0 || val_frac + test_frac >= 1.0 {
        return Err(Error::Argument(format!(
            "invalid split fractions val={val_frac} test={test_frac}"
        )));
    }
    let n = g.n;
    let mut edges: Vec<(usize, usize)> = g
        .adjacency
        .iter()
        .filter(|&(i, j, _)| i < j)
        .map(|(i, j, _)| (i, j))
        .collect();
    let e = edges.len();
    let n_val = (val_frac * e as f64).floor() as usize;
    let n_test = (test_frac * e as f64).floor() as usize;

    rng.shuffle(&mut edges);
    let test_pos: Vec<(usize, usize)> = edges[..n_test].to_vec();
    let val_pos: Vec<(usize, usize)> = edges[n_test..n_test + n_val].to_vec();
    let train_pairs: Vec<(usize, usize)> = edges[n_test + n_val..].to_vec();

    let full_edges: HashSet<(usize, usize)> = g
        .adjacency
        .iter()
        .filter(|&(i, j, _)| i < j)
        .map(|(i, j, _)| (i, j))
        .collect();
    let needed = n_test + n_val;
    let possible = n * (n - 1) / 2 - e;
    if needed > possible {
        return Err(Error::Sampling(format!(
            "need {needed} negative pairs but only {possible} non-edges exist"
        )));
    }

    let mut negatives: Vec<(usize, usize)> = Vec::with_capacity(needed);
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(needed);
    let mut attempts: usize = 0;
    let max_attempts = 1000 * needed.max(1);
    while negatives.len() < needed {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Sampling(format!(
                "gave up after {attempts} attempts with {} of {needed} sampled; graph too dense",
                negatives.len()
            )));
        }
        let a = rng.index(n);
        let b = rng.index(n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if full_edges.contains(&pair) || !seen.insert(pair) {
            continue;
        }
        negatives.push(pair);
    }
    let test_neg = negatives[..n_test].to_vec();
    let val_neg = negatives[n_test..].to_vec();

    Ok(EdgeSplit {
        train_adjacency: adjacency_from_pairs(n, &train_pairs)?,
        val_pos,
        val_neg,
        test_pos,
        test_neg,
        seed: rng.seed(),
    })
}

/// Builds the reconstruction target from a training adjacency: labels are
/// A + I, `pos_weight` = (n² − nnz)/nnz and `norm` = n²/(2·(n² − nnz)).
/// A fully-positive target (every pair an edge) would zero both formulas'
/// useful range, so that degenerate case clamps both to 1.
pub fn build_recon_target(train_adjacency: &SpMat) -> ReconTarget {
    let n = train_adjacency.rows();
    assert_eq!(n, train_adjacency.cols(), "adjacency must be square");

    let mut triplets: Vec<(usize, usize, f64)> = train_adjacency.iter().collect();
    for i in 0..n {
        triplets.push((i, i, 1.0));
    }
    let labels = SpMat::from_triplets(n, n, &triplets).expect("triplets are in range");

    let total = (n * n) as f64;
    let nnz = labels.nnz() as f64;
    let negatives = total - nnz;
    let (pos_weight, norm) = if negatives == 0.0 {
        (1.0, 1.0)
    } else {
        (negatives / nnz, total / (2.0 * negatives))
    };
    ReconTarget {
        labels,
        pos_weight,
        norm,
    }
}
