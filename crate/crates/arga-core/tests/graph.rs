use std::collections::HashSet;
use std::fs;
use std::path::Path;

use arga_core::graph::{
    build_normalized_adjacency, build_recon_target, load_citation_dataset, row_normalize_features,
    save_citation_dataset, split_edges, EdgeSplit, SplitManifest,
};
use arga_core::tensor::RngStream;
use arga_core::{Error, Mat, SpMat};
use proptest::prelude::*;

fn write_dataset(dir: &Path, nodes: &str, edges: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let n = dir.join("nodes.tsv");
    let e = dir.join("edges.tsv");
    fs::write(&n, nodes).unwrap();
    fs::write(&e, edges).unwrap();
    (n, e)
}

#[test]
fn loads_two_node_graph_with_bidirectional_edge_deduped() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = write_dataset(dir.path(), "a\t1\t0\tx\nb\t0\t1\ty\n", "a\tb\nb\ta\n");
    let g = load_citation_dataset(&n, &e).unwrap();
    assert_eq!(g.n, 2);
    assert_eq!(g.adjacency.nnz(), 2);
    assert_eq!(g.adjacency.get(0, 1), 1.0);
    assert_eq!(g.adjacency.get(1, 0), 1.0);
    assert_eq!(g.node_ids, vec!["a", "b"]);
    assert_eq!(g.labels.as_deref(), Some(&[0usize, 1][..]));
    assert_eq!(g.num_classes, Some(2));
}

#[test]
fn loader_ignores_comments_and_drops_self_loops() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = write_dataset(
        dir.path(),
        "# header\na\t1\tx\nb\t0\tx\n",
        "# an edge list\na\ta\na\tb\n",
    );
    let g = load_citation_dataset(&n, &e).unwrap();
    assert_eq!(g.adjacency.nnz(), 2);
    assert_eq!(g.adjacency.get(0, 0), 0.0);
}

#[test]
fn loader_rejects_ragged_rows_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = write_dataset(dir.path(), "a\t1\t2\tx\nb\t1\ty\n", "");
    match load_citation_dataset(&n, &e).unwrap_err() {
        Error::Format { line, .. } => assert_eq!(line, 2),
        other => panic!("expected format error, got {other:?}"),
    }
}

#[test]
fn loader_rejects_unknown_edge_endpoint_with_reference_error() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = write_dataset(dir.path(), "a\t1\tx\nb\t0\ty\n", "a\tzzz\n");
    match load_citation_dataset(&n, &e).unwrap_err() {
        Error::Reference { id, line, .. } => {
            assert_eq!(id, "zzz");
            assert_eq!(line, 1);
        }
        other => panic!("expected reference error, got {other:?}"),
    }
}

#[test]
fn loader_rejects_duplicate_node_ids() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = write_dataset(dir.path(), "a\t1\tx\na\t0\ty\n", "");
    assert!(matches!(
        load_citation_dataset(&n, &e),
        Err(Error::Format { .. })
    ));
}

#[test]
fn loader_rejects_unparseable_feature() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = write_dataset(dir.path(), "a\tnot_a_number\tx\n", "");
    assert!(matches!(
        load_citation_dataset(&n, &e),
        Err(Error::Format { .. })
    ));
}

#[test]
fn loader_missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.tsv");
    let e = dir.path().join("edges.tsv");
    fs::write(&e, "").unwrap();
    assert!(matches!(
        load_citation_dataset(&missing, &e),
        Err(Error::Io(_))
    ));
}

#[test]
fn save_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = write_dataset(
        dir.path(),
        "a\t1\t0.5\tx\nb\t0\t0.25\ty\nc\t1\t1\tx\n",
        "a\tb\nb\tc\n",
    );
    let g = load_citation_dataset(&n, &e).unwrap();
    let n2 = dir.path().join("nodes2.tsv");
    let e2 = dir.path().join("edges2.tsv");
    save_citation_dataset(&g, &n2, &e2).unwrap();
    let g2 = load_citation_dataset(&n2, &e2).unwrap();
    assert_eq!(g.node_ids, g2.node_ids);
    assert_eq!(g.adjacency, g2.adjacency);
    assert_eq!(g.features, g2.features);
    assert_eq!(g.labels, g2.labels);
}

#[test]
fn normalized_adjacency_single_isolated_node() {
    let a = SpMat::empty(1, 1);
    let norm = build_normalized_adjacency(&a);
    assert_eq!(norm.get(0, 0), 1.0);
}

#[test]
fn normalized_adjacency_two_nodes_one_edge() {
    let a = SpMat::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let norm = build_normalized_adjacency(&a);
    for i in 0..2 {
        for j in 0..2 {
            assert!((norm.get(i, j) - 0.5).abs() < 1e-15);
        }
    }
}

#[test]
fn normalized_adjacency_matches_dense_oracle_on_path_graph() {
    let a =
        SpMat::from_triplets(3, 3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]).unwrap();
    let norm = build_normalized_adjacency(&a).densify();
    // D̃^(−1/2)(A+I)D̃^(−1/2) with degrees+1 = (2, 3, 2).
    let deg = [2.0f64, 3.0, 2.0];
    let mut oracle = Mat::zeros(3, 3);
    let tilde = [[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]];
    for i in 0..3 {
        for j in 0..3 {
            oracle[(i, j)] = tilde[i][j] / (deg[i].sqrt() * deg[j].sqrt());
        }
    }
    assert!(norm.max_abs_diff(&oracle).unwrap() < 1e-12);
}

#[test]
fn normalized_adjacency_symmetric_with_bounded_spectrum() {
    let mut rng = RngStream::new(13);
    let mut triplets = Vec::new();
    let n = 12;
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.uniform_f64() < 0.3 {
                triplets.push((i, j, 1.0));
                triplets.push((j, i, 1.0));
            }
        }
    }
    let a = SpMat::from_triplets(n, n, &triplets).unwrap();
    let norm = build_normalized_adjacency(&a);
    assert!(norm.is_symmetric(1e-12));
    // Power iteration bounds the dominant |eigenvalue| by 1.
    let dense = norm.densify();
    let mut v = vec![1.0f64; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut w = vec![0.0f64; n];
        for i in 0..n {
            for j in 0..n {
                w[i] += dense[(i, j)] * v[j];
            }
        }
        lambda = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if lambda == 0.0 {
            break;
        }
        for (wi, vi) in w.iter().zip(v.iter_mut()) {
            *vi = wi / lambda;
        }
    }
    assert!(lambda <= 1.0 + 1e-9, "spectral radius {lambda}");
}

#[test]
fn row_normalize_examples() {
    let m = Mat::from_vec(1, 2, vec![2.0, 2.0]).unwrap();
    assert_eq!(row_normalize_features(&m).data(), &[0.5, 0.5]);
    let z = Mat::zeros(1, 2);
    assert_eq!(row_normalize_features(&z), z);
}

#[test]
fn row_normalize_rows_sum_to_one() {
    let mut rng = RngStream::new(2);
    let m = rng.uniform_matrix::<f64>(4, 3, 0.1, 1.0);
    let normed = row_normalize_features(&m);
    for i in 0..4 {
        let s: f64 = normed.row(i).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn recon_target_degenerate_fully_positive_clamps() {
    let a = SpMat::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let t = build_recon_target(&a);
    assert_eq!(t.labels.nnz(), 4);
    assert_eq!(t.pos_weight, 1.0);
    assert_eq!(t.norm, 1.0);
}

#[test]
fn recon_target_three_isolated_nodes() {
    let a = SpMat::empty(3, 3);
    let t = build_recon_target(&a);
    assert_eq!(t.labels.nnz(), 3);
    for i in 0..3 {
        assert_eq!(t.labels.get(i, i), 1.0);
    }
    assert!((t.pos_weight - 2.0).abs() < 1e-15);
    assert!((t.norm - 0.75).abs() < 1e-15);
}

fn ring_graph(n: usize) -> arga_core::graph::Graph {
    let mut triplets = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        triplets.push((i, j, 1.0));
        triplets.push((j, i, 1.0));
    }
    let adjacency = SpMat::from_triplets(n, n, &triplets).unwrap();
    let mut rng = RngStream::new(99);
    arga_core::graph::Graph {
        n,
        node_ids: (0..n).map(|i| format!("n{i}")).collect(),
        adjacency,
        features: rng.uniform_matrix::<f64>(n, 4, 0.1, 1.0),
        labels: Some((0..n).map(|i| i % 3).collect()),
        num_classes: Some(3),
        label_names: Some(vec!["a".into(), "b".into(), "c".into()]),
    }
}

fn undirected_edges(adj: &SpMat) -> HashSet<(usize, usize)> {
    adj.iter()
        .filter(|&(i, j, _)| i < j)
        .map(|(i, j, _)| (i, j))
        .collect()
}

#[test]
fn split_counts_follow_floor_rule() {
    let g = ring_graph(40);
    let mut rng = RngStream::new(1).substream(0);
    let split = split_edges(&g, 0.05, 0.10, &mut rng).unwrap();
    assert_eq!(split.test_pos.len(), 4);
    assert_eq!(split.val_pos.len(), 2);
    assert_eq!(split.test_neg.len(), 4);
    assert_eq!(split.val_neg.len(), 2);
}

#[test]
fn split_zero_fractions_keep_graph_intact() {
    let g = ring_graph(10);
    let mut rng = RngStream::new(1);
    let split = split_edges(&g, 0.0, 0.0, &mut rng).unwrap();
    assert_eq!(split.train_adjacency, g.adjacency);
    assert!(split.val_pos.is_empty() && split.test_pos.is_empty());
}

#[test]
fn split_is_deterministic_per_seed() {
    let g = ring_graph(30);
    let s1 = split_edges(&g, 0.1, 0.2, &mut RngStream::new(7)).unwrap();
    let s2 = split_edges(&g, 0.1, 0.2, &mut RngStream::new(7)).unwrap();
    assert_eq!(s1.test_pos, s2.test_pos);
    assert_eq!(s1.val_neg, s2.val_neg);
    let s3 = split_edges(&g, 0.1, 0.2, &mut RngStream::new(8)).unwrap();
    assert_ne!(s1.test_pos, s3.test_pos);
}

#[test]
fn split_partitions_edges_and_negatives_are_non_edges() {
    let g = ring_graph(24);
    let mut rng = RngStream::new(5);
    let split = split_edges(&g, 0.15, 0.25, &mut rng).unwrap();
    let full = undirected_edges(&g.adjacency);
    let train = undirected_edges(&split.train_adjacency);
    let val: HashSet<_> = split.val_pos.iter().copied().collect();
    let test: HashSet<_> = split.test_pos.iter().copied().collect();

    assert!(train.is_disjoint(&val));
    assert!(train.is_disjoint(&test));
    assert!(val.is_disjoint(&test));
    let mut union = train.clone();
    union.extend(&val);
    union.extend(&test);
    assert_eq!(union, full);

    assert!(split.train_adjacency.is_symmetric(0.0));

    let mut negs: Vec<(usize, usize)> = split
        .val_neg
        .iter()
        .chain(&split.test_neg)
        .copied()
        .collect();
    for &(i, j) in &negs {
        assert!(i < j, "negatives must be ordered pairs: ({i},{j})");
        assert!(!full.contains(&(i, j)), "negative ({i},{j}) is a real edge");
    }
    let total = negs.len();
    negs.sort_unstable();
    negs.dedup();
    assert_eq!(negs.len(), total, "duplicate negatives");
}

#[test]
fn split_errors_when_negatives_cannot_be_sampled() {
    // Complete graph: no non-edges to sample.
    let n = 5;
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                triplets.push((i, j, 1.0));
            }
        }
    }
    let g = arga_core::graph::Graph {
        n,
        node_ids: (0..n).map(|i| i.to_string()).collect(),
        adjacency: SpMat::from_triplets(n, n, &triplets).unwrap(),
        features: Mat::zeros(n, 2),
        labels: None,
        num_classes: None,
        label_names: None,
    };
    let err = split_edges(&g, 0.2, 0.3, &mut RngStream::new(1)).unwrap_err();
    assert!(matches!(err, Error::Sampling(_)), "{err:?}");
}

#[test]
fn split_rejects_bad_fractions() {
    let g = ring_graph(10);
    assert!(split_edges(&g, 0.6, 0.5, &mut RngStream::new(1)).is_err());
    assert!(split_edges(&g, -0.1, 0.2, &mut RngStream::new(1)).is_err());
}

#[test]
fn split_manifest_round_trips_exactly() {
    let g = ring_graph(30);
    let split = split_edges(&g, 0.1, 0.2, &mut RngStream::new(3)).unwrap();
    let manifest = split.manifest(0.1, 0.2);
    let json = serde_json::to_string(&manifest).unwrap();
    let parsed: SplitManifest = serde_json::from_str(&json).unwrap();
    let rebuilt = EdgeSplit::from_manifest(&g, &parsed).unwrap();
    assert_eq!(rebuilt.train_adjacency, split.train_adjacency);
    assert_eq!(rebuilt.val_pos, split.val_pos);
    assert_eq!(rebuilt.val_neg, split.val_neg);
    assert_eq!(rebuilt.test_pos, split.test_pos);
    assert_eq!(rebuilt.test_neg, split.test_neg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn split_integrity_on_random_graphs(seed in any::<u64>(), n in 6usize..30, p in 0.1f64..0.6) {
        let mut rng = RngStream::new(seed);
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.uniform_f64() < p {
                    triplets.push((i, j, 1.0));
                    triplets.push((j, i, 1.0));
                }
            }
        }
        prop_assume!(!triplets.is_empty());
        let adjacency = SpMat::from_triplets(n, n, &triplets).unwrap();
        let g = arga_core::graph::Graph {
            n,
            node_ids: (0..n).map(|i| i.to_string()).collect(),
            adjacency,
            features: Mat::zeros(n, 2),
            labels: None,
            num_classes: None,
            label_names: None,
        };
        let mut srng = RngStream::new(seed ^ 0xabcd);
        let split = match split_edges(&g, 0.1, 0.15, &mut srng) {
            Ok(s) => s,
            // Dense random graphs may legitimately run out of non-edges.
            Err(Error::Sampling(_)) => return Ok(()),
            Err(other) => return Err(TestCaseError::fail(format!("{other:?}"))),
        };
        let full = undirected_edges(&g.adjacency);
        let train = undirected_edges(&split.train_adjacency);
        prop_assert_eq!(train.len() + split.val_pos.len() + split.test_pos.len(), full.len());
        prop_assert!(split.train_adjacency.is_symmetric(0.0));
        for (i, j) in split.val_neg.iter().chain(&split.test_neg) {
            prop_assert!(!full.contains(&(*i, *j)));
            prop_assert!(i != j);
        }
    }
}
