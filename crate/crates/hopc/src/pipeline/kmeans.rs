//! Seeded, bit-deterministic k-means for codebook construction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A clustered codebook. `keep_mask` marks the codewords that survived
/// feature selection; freshly trained codebooks keep everything.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub centroids: Vec<Vec<f64>>,
    pub keep_mask: Vec<bool>,
    pub seed: u64,
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, |c| c.len())
    }

    pub fn kept_indices(&self) -> Vec<usize> {
        (0..self.k()).filter(|&i| self.keep_mask[i]).collect()
    }

    pub fn k_prime(&self) -> usize {
        self.keep_mask.iter().filter(|&&m| m).count()
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = dist2(point, &centroids[0]);
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(point, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Σ of squared distances to assigned centroids.
pub fn inertia(descriptors: &[Vec<f64>], codebook: &Codebook) -> f64 {
    descriptors
        .iter()
        .map(|d| nearest(d, &codebook.centroids).1)
        .sum()
}

fn seed_centroids(descriptors: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = descriptors.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    centroids.push(descriptors[first].clone());
    let mut weights: Vec<f64> = descriptors
        .iter()
        .map(|d| dist2(d, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = weights.iter().sum();
        let chosen = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                acc += w;
                if r < acc {
                    pick = Some(i);
                    break;
                }
            }
            // r can land past the accumulated sum through rounding; fall
            // back to the last point with positive weight.
            pick.unwrap_or_else(|| {
                weights
                    .iter()
                    .rposition(|&w| w > 0.0)
                    .expect("total > 0 implies a positive weight")
            })
        } else {
            // All points coincide with a centroid already: duplicate seeds
            // are unavoidable, take the lowest index for determinism.
            0
        };
        centroids.push(descriptors[chosen].clone());
        for (w, d) in weights.iter_mut().zip(descriptors) {
            let nd = dist2(d, centroids.last().unwrap());
            if nd < *w {
                *w = nd;
            }
        }
    }
    centroids
}

/// Lloyd iterations with k-means++ seeding from a ChaCha8 stream. Fixed seed
/// and inputs give bit-identical centroids: assignment is a pure parallel
/// map, accumulation always runs serially in point order, and empty clusters
/// are re-seeded from the farthest point (lowest index on ties).
pub fn kmeans(
    descriptors: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Codebook> {
    if k == 0 {
        return Err(Error::BadParameter("k must be at least 1".into()));
    }
    if descriptors.len() < k {
        return Err(Error::TooFewSamples {
            got: descriptors.len(),
            k,
        });
    }
    let dim = descriptors[0].len();
    if descriptors.iter().any(|d| d.len() != dim) {
        return Err(Error::BadParameter("descriptor dimensions differ".into()));
    }
    if descriptors
        .iter()
        .any(|d| d.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::BadParameter("non-finite descriptor entry".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(descriptors, k, &mut rng);
    let mut assignment: Vec<usize> = vec![usize::MAX; descriptors.len()];

    for _ in 0..max_iter {
        let new_assignment: Vec<usize> = descriptors
            .par_iter()
            .map(|d| nearest(d, &centroids).0)
            .collect();
        let converged = new_assignment == assignment;
        assignment = new_assignment;
        if converged {
            break;
        }

        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (d, &a) in descriptors.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(d) {
                *s += x;
            }
        }
        let mut claimed: Vec<bool> = vec![false; descriptors.len()];
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *dst = s * inv;
                }
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed from the farthest unclaimed point.
                let mut far = None;
                let mut far_d = -1.0;
                for (i, d) in descriptors.iter().enumerate() {
                    if claimed[i] {
                        continue;
                    }
                    let dd = dist2(d, &centroids[assignment[i]]);
                    if dd > far_d {
                        far_d = dd;
                        far = Some(i);
                    }
                }
                let i = far.expect("more descriptors than clusters");
                claimed[i] = true;
                centroids[c] = descriptors[i].clone();
            }
        }
    }

    Ok(Codebook {
        keep_mask: vec![true; k],
        centroids,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_descs(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let descs = random_descs(1, 40, 5);
        let cb = kmeans(&descs, 1, 7, 50).unwrap();
        let mut mean = vec![0.0; 5];
        for d in &descs {
            for (m, x) in mean.iter_mut().zip(d) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= 40.0;
        }
        for (c, m) in cb.centroids[0].iter().zip(&mean) {
            assert_abs_diff_eq!(c, m, epsilon = 1e-12);
        }
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let descs = random_descs(2, 12, 4);
        let cb = kmeans(&descs, 12, 3, 50).unwrap();
        assert_abs_diff_eq!(inertia(&descs, &cb), 0.0, epsilon = 1e-18);
        // Every input is its own centroid (as a set).
        for d in &descs {
            assert!(cb.centroids.iter().any(|c| dist2(c, d) == 0.0));
        }
    }

    #[test]
    fn fixed_seed_is_bit_deterministic() {
        let descs = random_descs(3, 200, 8);
        let a = kmeans(&descs, 10, 42, 100).unwrap();
        let b = kmeans(&descs, 10, 42, 100).unwrap();
        assert_eq!(a.centroids, b.centroids);
        let c = kmeans(&descs, 10, 43, 100).unwrap();
        assert_ne!(a.centroids, c.centroids);
    }

    #[test]
    fn inertia_never_increases() {
        let descs = random_descs(4, 300, 6);
        let mut previous = f64::INFINITY;
        for iters in 1..8 {
            let cb = kmeans(&descs, 12, 11, iters).unwrap();
            let j = inertia(&descs, &cb);
            assert!(
                j <= previous + 1e-9,
                "inertia rose from {previous} to {j} at {iters} iterations"
            );
            previous = j;
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        let descs = random_descs(5, 3, 4);
        assert!(matches!(
            kmeans(&descs, 5, 0, 10),
            Err(Error::TooFewSamples { got: 3, k: 5 })
        ));
    }

    #[test]
    fn duplicate_points_do_not_break_clustering() {
        let mut descs = random_descs(6, 10, 3);
        for _ in 0..30 {
            descs.push(descs[0].clone());
        }
        let cb = kmeans(&descs, 4, 1, 50).unwrap();
        assert_eq!(cb.k(), 4);
        assert!(cb
            .centroids
            .iter()
            .all(|c| c.iter().all(|x| x.is_finite())));
    }
}
