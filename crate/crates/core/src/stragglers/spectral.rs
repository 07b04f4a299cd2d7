//! Community-detection attack on a permuted code.
//!
//! The attacker sees `G` with rows and columns shuffled. Columns from the same
//! block share many functions, so the column co-occurrence matrix `GᵀG` carries
//! the block structure. We embed each column with the top `m = ⌈k/s⌉`
//! eigenvectors of that matrix, normalize rows, and group them with k-means.

use itertools::Itertools;
use faer::{Mat, Side};
use rand::Rng;

use super::{PermutedCode, StragglerPattern};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::seeding;

pub const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITER: usize = 100;
const CLUSTERING_SEED: u64 = 0x5bc0_de5e_ed00_0001;

/// Cluster labels in `0..m` for the columns of `g`.
pub fn spectral_groups(g: &Matrix, m: usize, seed: u64) -> Result<Vec<usize>> {
    let k = g.cols();
    if m == 0 || m > k {
        return Err(Error::invalid(format!("need 1 <= m <= k, got m={m}, k={k}")));
    }
    let co = g.tr_mul(g)?;
    let sym = Mat::<f64>::from_fn(k, k, |i, j| 0.5 * (co.get(i, j) + co.get(j, i)));
    let eig = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition did not converge: {e:?}")))?;
    let values = eig.S().column_vector();
    let vectors = eig.U();

    let order: Vec<usize> = (0..k)
        .sorted_by(|&a, &b| {
            values[b]
                .total_cmp(&values[a])
                .then(a.cmp(&b))
        })
        .take(m)
        .collect();
    let points: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = order.iter().map(|&c| vectors[(i, c)]).collect();
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
            row
        })
        .collect();

    Ok(kmeans(&points, m, KMEANS_RESTARTS, seed))
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = dist_sq(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` by inertia.
fn kmeans(points: &[Vec<f64>], m: usize, restarts: usize, seed: u64) -> Vec<usize> {
    let n = points.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..restarts {
        let mut rng = seeding::rng(seeding::derive(seed, restart as u64));

        let mut centers = vec![points[rng.random_range(0..n)].clone()];
        let mut d2: Vec<f64> = points.iter().map(|p| dist_sq(p, &centers[0])).collect();
        while centers.len() < m {
            let total: f64 = d2.iter().sum();
            let pick = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut chosen = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    if target < w {
                        chosen = i;
                        break;
                    }
                    target -= w;
                }
                chosen
            } else {
                rng.random_range(0..n)
            };
            centers.push(points[pick].clone());
            for (d, p) in d2.iter_mut().zip(points) {
                *d = d.min(dist_sq(p, &centers[centers.len() - 1]));
            }
        }

        let mut labels = vec![usize::MAX; n];
        for _ in 0..KMEANS_MAX_ITER {
            let mut changed = false;
            for (i, p) in points.iter().enumerate() {
                let (c, _) = nearest(p, &centers);
                if labels[i] != c {
                    labels[i] = c;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            let dim = points[0].len();
            let mut sums = vec![vec![0.0; dim]; m];
            let mut counts = vec![0usize; m];
            for (p, &l) in points.iter().zip(&labels) {
                counts[l] += 1;
                for (s, x) in sums[l].iter_mut().zip(p) {
                    *s += x;
                }
            }
            for c in 0..m {
                // an emptied cluster keeps its previous center
                if counts[c] > 0 {
                    centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                }
            }
        }

        let inertia: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| dist_sq(p, &centers[l]))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| inertia < b - 1e-12) {
            best = Some((inertia, labels));
        }
    }
    best.expect("restarts >= 1").1
}

/// Recovered groups ordered by mean within-group co-occurrence, largest first.
fn ranked_groups(g: &Matrix, labels: &[usize]) -> Result<Vec<Vec<usize>>> {
    let co = g.tr_mul(g)?;
    let m = labels.iter().copied().max().map_or(0, |x| x + 1);
    let mut groups = vec![Vec::new(); m];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups.retain(|grp| !grp.is_empty());
    let cohesion = |grp: &Vec<usize>| -> f64 {
        if grp.len() == 1 {
            return co.get(grp[0], grp[0]);
        }
        let pairs = grp.iter().tuple_combinations::<(_, _)>();
        let (sum, count) = pairs.fold((0.0, 0usize), |(s, c), (&a, &b)| (s + co.get(a, b), c + 1));
        sum / count as f64
    };
    let mut scored: Vec<(f64, Vec<usize>)> = groups.into_iter().map(|g| (cohesion(&g), g)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1[0].cmp(&b.1[0])));
    Ok(scored.into_iter().map(|(_, g)| g).collect())
}

/// Straggles recovered communities of the permuted code, most cohesive first.
///
/// Groups are taken whole while the budget of `k − r` stragglers allows; the
/// remainder comes from the lowest indices of the next group. The returned
/// pattern indexes the permuted matrix.
pub fn spectral_community_attack(pg: &PermutedCode, r: usize) -> Result<StragglerPattern> {
    let g = &pg.matrix;
    let k = g.k();
    if r == 0 || r > k {
        return Err(Error::invalid(format!("need 1 <= r <= k, got r={r}, k={k}")));
    }
    if r == k {
        return Ok(StragglerPattern::all(k));
    }
    let labels = spectral_groups(&g.g, g.spec.num_blocks(), CLUSTERING_SEED)?;
    let mut budget = k - r;
    let mut stragglers = Vec::with_capacity(budget);
    for group in ranked_groups(&g.g, &labels)? {
        if budget == 0 {
            break;
        }
        let take = group.len().min(budget);
        stragglers.extend_from_slice(&group[..take]);
        budget -= take;
    }
    StragglerPattern::from_stragglers(k, &stragglers)
}

/// Fraction of points whose label disagrees with `truth` under the best
/// relabeling. Exact over all relabelings for up to 8 groups; greedy by
/// overlap beyond that.
pub fn misclassification_fraction(labels: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(labels.len(), truth.len());
    let n = labels.len();
    let m = labels.iter().chain(truth).copied().max().map_or(0, |x| x + 1);
    let mut overlap = vec![vec![0usize; m]; m];
    for (&l, &t) in labels.iter().zip(truth) {
        overlap[l][t] += 1;
    }
    let matched = if m <= 8 {
        (0..m)
            .permutations(m)
            .map(|perm| (0..m).map(|l| overlap[l][perm[l]]).sum::<usize>())
            .max()
            .unwrap_or(0)
    } else {
        let mut used_l = vec![false; m];
        let mut used_t = vec![false; m];
        let mut cells: Vec<(usize, usize, usize)> = (0..m)
            .flat_map(|l| (0..m).map(move |t| (l, t)))
            .map(|(l, t)| (overlap[l][t], l, t))
            .collect();
        cells.sort_by(|a, b| b.cmp(a));
        let mut total = 0;
        for (c, l, t) in cells {
            if !used_l[l] && !used_t[t] {
                used_l[l] = true;
                used_t[t] = true;
                total += c;
            }
        }
        total
    };
    (n - matched) as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{construct_frc, construct_sbc, CodeSpec};
    use crate::decoding::optimal_error;

    #[test]
    fn recovers_permuted_frc_exactly() {
        for (k, s, seed) in [(12, 3, 1), (20, 5, 2), (100, 10, 3)] {
            let g = construct_frc(k, s).unwrap();
            let pg = PermutedCode::new(&g, seed);
            let labels = spectral_groups(&pg.matrix.g, k / s, 9).unwrap();
            assert_eq!(misclassification_fraction(&labels, &pg.true_labels()), 0.0);
        }
    }

    #[test]
    fn attack_on_permuted_frc_reaches_k_minus_r() {
        let g = construct_frc(20, 5).unwrap();
        let pg = PermutedCode::new(&g, 5);
        let t = spectral_community_attack(&pg, 10).unwrap();
        assert_eq!(t.r(), 10);
        let e = optimal_error(&pg.matrix.g, t.indices()).unwrap();
        assert!((e - 10.0).abs() < 1e-9, "err = {e}");
    }

    #[test]
    fn attack_returns_r_nodes_for_partial_budget() {
        let g = construct_sbc(CodeSpec::sbc(12, 3, 0.9, 0.1).unwrap(), 1).unwrap();
        let pg = PermutedCode::new(&g, 3);
        for r in 1..=12 {
            assert_eq!(spectral_community_attack(&pg, r).unwrap().r(), r);
        }
    }

    #[test]
    fn misclassification_is_label_invariant() {
        assert_eq!(misclassification_fraction(&[1, 1, 0, 0], &[0, 0, 1, 1]), 0.0);
        assert_eq!(misclassification_fraction(&[0, 1, 0, 1], &[0, 0, 1, 1]), 0.5);
        assert_eq!(misclassification_fraction(&[0, 0, 0, 1], &[0, 0, 1, 1]), 0.25);
    }
}
