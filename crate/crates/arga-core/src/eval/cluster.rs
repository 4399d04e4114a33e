//! Node clustering: K-means on the embedding, then label-matched metrics
//! (accuracy, NMI, ARI, F1, precision) against ground-truth classes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::RngStream;
use crate::Mat;

/// Clustering scores plus the raw cluster assignment that produced them.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterEvalResult {
    pub acc: f64,
    pub nmi: f64,
    pub f1: f64,
    pub precision: f64,
    pub ari: f64,
    pub assignment: Vec<usize>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// K-means++ seeding: first center uniform, later centers D²-sampled.
fn seed_centroids(z: &Mat, k: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
    let n = z.rows();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(z.row(rng.index(n)).to_vec());
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.uniform_f64() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining mass at the chosen centers; any point works.
            rng.index(n)
        };
        centroids.push(z.row(pick).to_vec());
        for (i, slot) in d2.iter_mut().enumerate() {
            let d = sq_dist(z.row(i), centroids.last().unwrap());
            if d < *slot {
                *slot = d;
            }
        }
    }
    centroids
}

fn lloyd(
    z: &Mat,
    k: usize,
    rng: &mut RngStream,
    trace: Option<&mut Vec<f64>>,
) -> (Vec<usize>, f64) {
    let n = z.rows();
    let d = z.cols();
    let mut centroids = seed_centroids(z, k, rng);
    let mut assignment = vec![0usize; n];
    let mut inertia = f64::INFINITY;
    let mut trace = trace;
    for _ in 0..300 {
        // Assignment step.
        let mut new_inertia = 0.0;
        for (i, slot) in assignment.iter_mut().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for (c, centroid) in centroids.iter().enumerate() {
                let dist = sq_dist(z.row(i), centroid);
                if dist < best.1 {
                    best = (c, dist);
                }
            }
            *slot = best.0;
            new_inertia += best.1;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(new_inertia);
        }
        // Empty clusters grab the point farthest from its current centroid.
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(z.row(a), &centroids[assignment[a]])
                            .partial_cmp(&sq_dist(z.row(b), &centroids[assignment[b]]))
                            .unwrap()
                    })
                    .unwrap();
                counts[assignment[far]] -= 1;
                assignment[far] = c;
                counts[c] = 1;
            }
        }
        // Update step.
        let mut sums = vec![vec![0.0f64; d]; k];
        for i in 0..n {
            for (s, &v) in sums[assignment[i]].iter_mut().zip(z.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            }
        }
        let rel = (inertia - new_inertia).abs() / inertia.max(1e-300);
        inertia = new_inertia;
        if rel < 1e-6 {
            break;
        }
    }
    // Final inertia against the updated centroids.
    let mut final_inertia = 0.0;
    for (i, slot) in assignment.iter_mut().enumerate() {
        let mut best = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let dist = sq_dist(z.row(i), centroid);
            if dist < best {
                best = dist;
                *slot = c;
            }
        }
        final_inertia += best;
    }
    (assignment, final_inertia)
}

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// inertia (earliest restart wins ties). Each restart draws from its own
/// substream, so the result is seed-deterministic regardless of scheduling.
pub fn kmeans(z: &Mat, k: usize, rng: &RngStream, restarts: usize) -> Result<Vec<usize>> {
    let n = z.rows();
    if k == 0 || k > n {
        return Err(Error::Argument(format!(
            "kmeans needs 0 < k ≤ n, got k={k}, n={n}"
        )));
    }
    if restarts == 0 {
        return Err(Error::Argument("kmeans needs at least one restart".into()));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..restarts {
        let (assignment, inertia) = lloyd(z, k, &mut rng.substream(r as u64), None);
        if best.as_ref().is_none_or(|(bi, _)| inertia < *bi) {
            best = Some((inertia, assignment));
        }
    }
    Ok(best.unwrap().1)
}

/// Single Lloyd run that also reports the per-iteration assignment inertia
/// (non-increasing while no cluster empties out).
pub fn kmeans_inertia_trace(z: &Mat, k: usize, rng: &RngStream) -> Result<(Vec<usize>, Vec<f64>)> {
    if k == 0 || k > z.rows() {
        return Err(Error::Argument(format!(
            "kmeans needs 0 < k ≤ n, got k={k}, n={}",
            z.rows()
        )));
    }
    let mut trace = Vec::new();
    let (assignment, _) = lloyd(z, k, &mut rng.substream(0), Some(&mut trace));
    Ok((assignment, trace))
}

/// Contingency counts with labels compacted to 0..k ids (first-seen order).
fn contingency(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<usize>>> {
    if pred.len() != truth.len() {
        return Err(Error::Argument(format!(
            "assignment lengths differ: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Argument("empty assignments".into()));
    }
    let compact = |ids: &[usize]| -> (Vec<usize>, usize) {
        let mut map = std::collections::HashMap::new();
        let out = ids
            .iter()
            .map(|&v| {
                let next = map.len();
                *map.entry(v).or_insert(next)
            })
            .collect();
        (out, map.len())
    };
    let (p, kp) = compact(pred);
    let (t, kt) = compact(truth);
    let mut table = vec![vec![0usize; kt]; kp];
    for (&a, &b) in p.iter().zip(&t) {
        table[a][b] += 1;
    }
    Ok(table)
}

/// Minimum-cost assignment on a square cost matrix (Kuhn–Munkres with
/// potentials, O(k³)). Returns the column chosen for each row.
pub fn hungarian_min_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    assert!(
        cost.iter().all(|row| row.len() == n),
        "cost matrix must be square"
    );
    if n == 0 {
        return Vec::new();
    }
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut ans = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            ans[p[j] - 1] = j - 1;
        }
    }
    ans
}

/// Hungarian-optimal injective cluster → class map over the contingency
/// table, padded square. Returns (map per compact cluster id, matched count);
/// clusters matched to padding columns map to None.
fn optimal_map(table: &[Vec<usize>]) -> (Vec<Option<usize>>, usize) {
    let kp = table.len();
    let kt = table[0].len();
    let size = kp.max(kt);
    let max_entry = table.iter().flatten().copied().max().unwrap_or(0) as f64;
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    let agree = if i < kp && j < kt {
                        table[i][j] as f64
                    } else {
                        0.0
                    };
                    max_entry - agree
                })
                .collect()
        })
        .collect();
    let cols = hungarian_min_assignment(&cost);
    let mut matched = 0usize;
    let map: Vec<Option<usize>> = (0..kp)
        .map(|i| {
            let j = cols[i];
            if j < kt {
                matched += table[i][j];
                Some(j)
            } else {
                None
            }
        })
        .collect();
    (map, matched)
}

/// Best-case agreement fraction over injective cluster → class relabelings.
pub fn cluster_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let (_, matched) = optimal_map(&table);
    Ok(matched as f64 / pred.len() as f64)
}

/// Mutual information over sqrt(H(pred)·H(truth)). A zero entropy means a
/// single-cluster partition: identical partitions score 1, otherwise 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = pred.len() as f64;
    let row_sums: Vec<f64> = table
        .iter()
        .map(|r| r.iter().sum::<usize>() as f64)
        .collect();
    let col_sums: Vec<f64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum::<usize>() as f64)
        .collect();
    let entropy = |sums: &[f64]| -> f64 {
        -sums
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| (s / n) * (s / n).ln())
            .sum::<f64>()
    };
    let hp = entropy(&row_sums);
    let ht = entropy(&col_sums);
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    if hp == 0.0 || ht == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let pij = c as f64 / n;
                mi += pij * (pij * n * n / (row_sums[i] * col_sums[j])).ln();
            }
        }
    }
    Ok(mi / (hp * ht).sqrt())
}

/// Adjusted Rand index via the pair-counting contingency formula. The
/// degenerate case (both partitions all-singletons or both one cluster,
/// denominator 0) scores 1.
pub fn adjusted_rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let choose2 = |x: usize| -> f64 { (x as f64) * (x as f64 - 1.0) / 2.0 };
    let sum_ij: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_a: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let sum_b: f64 = (0..table[0].len())
        .map(|j| choose2(table.iter().map(|r| r[j]).sum()))
        .sum();
    let total = choose2(pred.len());
    let expected = sum_a * sum_b / total;
    let max_index = (sum_a + sum_b) / 2.0;
    if (max_index - expected).abs() < 1e-300 {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max_index - expected))
}

/// Support-weighted per-class F1 and precision after applying the Hungarian
/// map from [`cluster_accuracy`]. Clusters left unmatched (more clusters
/// than classes) count as wrong for every class.
pub fn mapped_f1_precision(pred: &[usize], truth: &[usize]) -> Result<(f64, f64)> {
    let table = contingency(pred, truth)?;
    let (map, _) = optimal_map(&table);
    let kt = table[0].len();

    // Recompact exactly as contingency did so map indices line up.
    let compact = |ids: &[usize]| -> Vec<usize> {
        let mut m = std::collections::HashMap::new();
        ids.iter()
            .map(|&v| {
                let next = m.len();
                *m.entry(v).or_insert(next)
            })
            .collect()
    };
    let p = compact(pred);
    let t = compact(truth);
    // Unmatched clusters take a sentinel class no true label carries.
    let mapped: Vec<usize> = p.iter().map(|&c| map[c].unwrap_or(kt)).collect();

    let n = pred.len() as f64;
    let mut f1_sum = 0.0;
    let mut precision_sum = 0.0;
    for class in 0..kt {
        let tp = mapped
            .iter()
            .zip(&t)
            .filter(|&(&m, &tr)| m == class && tr == class)
            .count() as f64;
        let fp = mapped
            .iter()
            .zip(&t)
            .filter(|&(&m, &tr)| m == class && tr != class)
            .count() as f64;
        let fn_ = mapped
            .iter()
            .zip(&t)
            .filter(|&(&m, &tr)| m != class && tr == class)
            .count() as f64;
        let support = tp + fn_;
        let prec = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let rec = if support > 0.0 { tp / support } else { 0.0 };
        let f1 = if prec + rec > 0.0 {
            2.0 * prec * rec / (prec + rec)
        } else {
            0.0
        };
        f1_sum += f1 * support;
        precision_sum += prec * support;
    }
    Ok((f1_sum / n, precision_sum / n))
}

/// K-means on the embedding followed by the full metric suite.
pub fn evaluate_clustering(
    z: &Mat,
    truth: &[usize],
    k: usize,
    rng: &RngStream,
    restarts: usize,
) -> Result<ClusterEvalResult> {
    if truth.len() != z.rows() {
        return Err(Error::Argument(format!(
            "label count {} does not match embedding rows {}",
            truth.len(),
            z.rows()
        )));
    }
    let assignment = kmeans(z, k, rng, restarts)?;
    let acc = cluster_accuracy(&assignment, truth)?;
    let nmi_v = nmi(&assignment, truth)?;
    let ari = adjusted_rand_index(&assignment, truth)?;
    let (f1, precision) = mapped_f1_precision(&assignment, truth)?;
    Ok(ClusterEvalResult {
        acc,
        nmi: nmi_v,
        f1,
        precision,
        ari,
        assignment,
    })
}
