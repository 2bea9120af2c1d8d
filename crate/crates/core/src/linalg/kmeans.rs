use nalgebra::DMatrix;
use rand::Rng;

use crate::bag::MilDataset;
use crate::error::{MilError, Result};

use super::rng_stream;

pub const KMEANS_MAX_ITERS: usize = 25;

const STREAM_POSITIVE: u64 = 0x5053;
const STREAM_NEGATIVE: u64 = 0x4e45;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, ties to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations.
///
/// Clusters that lose all their points keep their previous centroid.
pub fn lloyd_kmeans<R: Rng>(points: &[&[f64]], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(k >= 1 && points.len() >= k, "need at least k points");
    let dim = points[0].len();

    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].to_vec());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].to_vec();
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }

    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (p, a) in points.iter().zip(assign.iter_mut()) {
            let (k_best, _) = nearest(p, &centroids);
            if *a != k_best {
                *a = k_best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    centroids
}

/// Instances of bags with the given label, in (bag id, instance index) order.
fn class_instances(dataset: &MilDataset, label: bool) -> Vec<Vec<f64>> {
    let mut bags: Vec<_> = dataset.bags.iter().filter(|b| b.label == label).collect();
    bags.sort_by(|a, b| a.id.cmp(&b.id));
    bags.iter()
        .flat_map(|b| (0..b.len()).map(move |i| b.instance(i)))
        .collect()
}

/// Inducing locations: `per_class.0` centroids from instances of positive
/// bags followed by `per_class.1` from instances of negative bags.
pub(crate) fn kmeans_per_class(
    dataset: &MilDataset,
    per_class: (usize, usize),
    seed: u64,
) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(per_class.0 + per_class.1);
    for (label, k, stream) in [
        (true, per_class.0, STREAM_POSITIVE),
        (false, per_class.1, STREAM_NEGATIVE),
    ] {
        if k == 0 {
            continue;
        }
        let pts = class_instances(dataset, label);
        if pts.len() < k {
            return Err(MilError::input(
                "kmeans",
                format!(
                    "{} {} centroids requested but {} bags only hold {} instances",
                    k,
                    if label { "positive" } else { "negative" },
                    if label { "positive" } else { "negative" },
                    pts.len()
                ),
            ));
        }
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let mut rng = rng_stream(seed, stream);
        rows.extend(lloyd_kmeans(&refs, k, &mut rng));
    }
    if rows.is_empty() {
        return Err(MilError::input("kmeans", "zero inducing points requested"));
    }
    let dim = dataset.dim;
    Ok(DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]))
}

/// `m / 2` centroids over instances of positive bags and `m / 2` over
/// instances of negative bags, deterministic given `seed`.
pub fn kmeans_inducing(dataset: &MilDataset, m: usize, seed: u64) -> Result<DMatrix<f64>> {
    if m == 0 || m % 2 != 0 {
        return Err(MilError::input(
            "kmeans",
            format!("inducing count must be even and positive, got {m}"),
        ));
    }
    kmeans_per_class(dataset, (m / 2, m / 2), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::Bag;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn bag(id: &str, label: bool, rows: Vec<[f64; 2]>) -> Bag {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Bag::unlabelled_instances(id, label, DMatrix::from_row_slice(n, 2, &flat), None).unwrap()
    }

    fn two_cluster_dataset(seed: u64) -> MilDataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut draw = |cx: f64, cy: f64, n: usize| -> Vec<[f64; 2]> {
            (0..n)
                .map(|_| [cx + noise.sample(&mut rng), cy + noise.sample(&mut rng)])
                .collect()
        };
        MilDataset::new(vec![
            bag("p1", true, draw(10.0, 10.0, 50)),
            bag("p2", true, draw(-10.0, 10.0, 50)),
            bag("n1", false, draw(10.0, -10.0, 50)),
            bag("n2", false, draw(-10.0, -10.0, 50)),
        ])
        .unwrap()
    }

    #[test]
    fn identical_positive_points_collapse() {
        let ds = MilDataset::new(vec![
            bag("p", true, vec![[1.5, -2.0]; 6]),
            bag("n", false, vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]),
        ])
        .unwrap();
        let z = kmeans_inducing(&ds, 6, 3).unwrap();
        assert_eq!(z.nrows(), 6);
        for i in 0..3 {
            assert_eq!(z[(i, 0)], 1.5);
            assert_eq!(z[(i, 1)], -2.0);
        }
    }

    #[test]
    fn recovers_cluster_means() {
        let ds = two_cluster_dataset(5);
        let z = kmeans_inducing(&ds, 4, 17).unwrap();
        // analytic means of each generated cluster, tolerance ~ 5 standard errors
        let expected_pos = [[10.0, 10.0], [-10.0, 10.0]];
        let expected_neg = [[10.0, -10.0], [-10.0, -10.0]];
        let check = |rows: std::ops::Range<usize>, truth: &[[f64; 2]; 2]| {
            for t in truth {
                let hit = rows
                    .clone()
                    .any(|i| (z[(i, 0)] - t[0]).abs() < 0.1 && (z[(i, 1)] - t[1]).abs() < 0.1);
                assert!(hit, "no centroid near {t:?}: {z}");
            }
        };
        check(0..2, &expected_pos);
        check(2..4, &expected_neg);
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let ds = two_cluster_dataset(9);
        let a = kmeans_inducing(&ds, 6, 42).unwrap();
        let b = kmeans_inducing(&ds, 6, 42).unwrap();
        assert_eq!(a, b);
        let mut shuffled = ds.clone();
        shuffled.bags.reverse();
        assert_eq!(kmeans_inducing(&shuffled, 6, 42).unwrap(), a);
    }

    #[test]
    fn too_few_instances_and_odd_counts() {
        let ds = MilDataset::new(vec![
            bag("p", true, vec![[0.0, 0.0]]),
            bag("n", false, vec![[1.0, 0.0], [2.0, 0.0]]),
        ])
        .unwrap();
        assert!(kmeans_inducing(&ds, 4, 0).unwrap_err().is_input());
        assert!(kmeans_inducing(&ds, 3, 0).unwrap_err().is_input());
        assert!(kmeans_inducing(&ds, 2, 0).is_ok());
    }
}
