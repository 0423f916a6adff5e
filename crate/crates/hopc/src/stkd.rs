//! STK-Distribution descriptor: the 600-bin histogram of normalized 4D
//! keypoint positions over the vertices of the 120-cell regular polychoron.
//!
//! The (x,y,z,t) positions of the detected keypoints are normalized, the
//! spatial part is aligned by the eigenbasis of the keypoint distribution —
//! refined by repeatedly dropping the lowest-quality keypoints while the
//! basis stays ambiguous — and each aligned 4D point votes for the
//! polychoron vertex with the highest projection.

use std::collections::HashSet;

use nalgebra::{Matrix3, Vector3, Vector4};

use crate::descriptor::PHI;
use crate::detect::StkRecord;
use crate::error::{Error, Result};
use crate::geom::{eigen3, ratio};

pub const NUM_VERTICES: usize = 600;

/// The 600 vertices of the 120-cell, all with squared norm 8. Families (in
/// generation order): (0,0,±2,±2) over all coordinate permutations, then
/// (±1,±1,±1,±√5), (±φ⁻²,±φ,±φ,±φ), (±φ⁻¹,±φ⁻¹,±φ⁻¹,±φ²) over all
/// permutations, then (0,±φ⁻²,±1,±φ²), (0,±φ⁻¹,±φ,±√5), (±φ⁻¹,±1,±φ,±2)
/// over even permutations only.
#[derive(Debug, Clone, PartialEq)]
pub struct Polychoron600 {
    pub vertices: Vec<Vector4<f64>>,
    pub family_counts: [usize; 7],
}

fn permutations4() -> Vec<([usize; 4], bool)> {
    let mut out = Vec::with_capacity(24);
    let mut idx = [0usize, 1, 2, 3];
    fn rec(idx: &mut [usize; 4], k: usize, out: &mut Vec<([usize; 4], bool)>) {
        if k == 4 {
            let mut inversions = 0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if idx[i] > idx[j] {
                        inversions += 1;
                    }
                }
            }
            out.push((*idx, inversions % 2 == 0));
            return;
        }
        for i in k..4 {
            idx.swap(k, i);
            rec(idx, k + 1, out);
            idx.swap(k, i);
        }
    }
    rec(&mut idx, 0, &mut out);
    out
}

fn family(base: [f64; 4], even_only: bool, out: &mut Vec<Vector4<f64>>) -> usize {
    let mut seen: HashSet<[u64; 4]> = HashSet::new();
    let mut added = 0;
    for (perm, even) in permutations4() {
        if even_only && !even {
            continue;
        }
        let arranged = [base[perm[0]], base[perm[1]], base[perm[2]], base[perm[3]]];
        let nonzero: Vec<usize> = (0..4).filter(|&i| arranged[i] != 0.0).collect();
        for signs in 0..(1u32 << nonzero.len()) {
            let mut v = arranged;
            for (bit, &slot) in nonzero.iter().enumerate() {
                if signs >> bit & 1 == 1 {
                    v[slot] = -v[slot];
                }
            }
            let key = [
                v[0].to_bits(),
                v[1].to_bits(),
                v[2].to_bits(),
                v[3].to_bits(),
            ];
            if seen.insert(key) {
                out.push(Vector4::new(v[0], v[1], v[2], v[3]));
                added += 1;
            }
        }
    }
    added
}

pub fn polychoron() -> Polychoron600 {
    let sqrt5 = 5.0f64.sqrt();
    let phi2 = PHI * PHI;
    let inv = 1.0 / PHI;
    let inv2 = inv * inv;
    let rows: [([f64; 4], bool); 7] = [
        ([0.0, 0.0, 2.0, 2.0], false),
        ([1.0, 1.0, 1.0, sqrt5], false),
        ([inv2, PHI, PHI, PHI], false),
        ([inv, inv, inv, phi2], false),
        ([0.0, inv2, 1.0, phi2], true),
        ([0.0, inv, PHI, sqrt5], true),
        ([inv, 1.0, PHI, 2.0], true),
    ];
    let mut vertices = Vec::with_capacity(NUM_VERTICES);
    let mut family_counts = [0usize; 7];
    for (i, (base, even_only)) in rows.iter().enumerate() {
        family_counts[i] = family(*base, *even_only, &mut vertices);
    }
    assert_eq!(vertices.len(), NUM_VERTICES, "polychoron generation broken");
    let distinct: HashSet<[u64; 4]> = vertices
        .iter()
        .map(|v| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits(), v.w.to_bits()])
        .collect();
    assert_eq!(distinct.len(), NUM_VERTICES, "duplicate polychoron vertices");
    Polychoron600 {
        vertices,
        family_counts,
    }
}

impl Polychoron600 {
    /// Index of the vertex with the highest projection onto `p`; ties go to
    /// the lowest index. All vertices share norm √8, so no normalization is
    /// needed before the argmax.
    pub fn bin(&self, p: &Vector4<f64>) -> usize {
        let mut best = 0usize;
        let mut best_dot = self.vertices[0].dot(p);
        for (i, w) in self.vertices.iter().enumerate().skip(1) {
            let d = w.dot(p);
            if d > best_dot {
                best = i;
                best_dot = d;
            }
        }
        best
    }
}

/// How the 4D keypoint coordinates are brought to a common range before
/// alignment. `PerAxis` is the paper's zero-mean/unit-variance treatment of
/// every coordinate; it is not strictly rotation invariant (the three
/// spatial variances are normalized independently). `Isotropic` scales the
/// spatial part by a single factor and is rotation invariant end to end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationMode {
    PerAxis,
    Isotropic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StkdParams {
    /// Eigenratio target for the refinement loop.
    pub theta_g: f64,
    /// Keypoints removed per refinement iteration; None = ⌈0.05·n⌉.
    pub m_k: Option<usize>,
    /// Refinement floor: never drop below this many keypoints.
    pub min_keep: usize,
    pub mode: NormalizationMode,
}

impl Default for StkdParams {
    fn default() -> Self {
        StkdParams {
            theta_g: 1.3,
            m_k: None,
            min_keep: 10,
            mode: NormalizationMode::PerAxis,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stkd {
    /// One vote per retained keypoint over the 600 vertices.
    pub histogram: Vec<u32>,
    pub retained: usize,
    pub iterations: usize,
    /// (δ̄12, δ̄23) of the final eigenbasis.
    pub final_ratios: (f64, f64),
}

impl Stkd {
    pub fn l1(&self) -> Vec<f64> {
        let total: u32 = self.histogram.iter().sum();
        if total == 0 {
            return vec![0.0; self.histogram.len()];
        }
        self.histogram
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

fn normalize_component(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        let inv_sd = 1.0 / var.sqrt();
        for v in values.iter_mut() {
            *v = (*v - mean) * inv_sd;
        }
    } else {
        for v in values.iter_mut() {
            *v = 0.0;
        }
    }
}

fn normalized_points(stks: &[StkRecord], mode: NormalizationMode) -> Vec<Vector4<f64>> {
    let n = stks.len();
    let mut xs: Vec<f64> = stks.iter().map(|s| s.position.x).collect();
    let mut ys: Vec<f64> = stks.iter().map(|s| s.position.y).collect();
    let mut zs: Vec<f64> = stks.iter().map(|s| s.position.z).collect();
    let mut ts: Vec<f64> = stks.iter().map(|s| s.t as f64).collect();
    match mode {
        NormalizationMode::PerAxis => {
            normalize_component(&mut xs);
            normalize_component(&mut ys);
            normalize_component(&mut zs);
        }
        NormalizationMode::Isotropic => {
            let nf = n as f64;
            let mean = Vector3::new(
                xs.iter().sum::<f64>() / nf,
                ys.iter().sum::<f64>() / nf,
                zs.iter().sum::<f64>() / nf,
            );
            let mut sq = 0.0;
            for i in 0..n {
                let d = Vector3::new(xs[i], ys[i], zs[i]) - mean;
                sq += d.norm_squared();
            }
            let var = sq / (3.0 * nf);
            let inv_sd = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
            for i in 0..n {
                xs[i] = (xs[i] - mean.x) * inv_sd;
                ys[i] = (ys[i] - mean.y) * inv_sd;
                zs[i] = (zs[i] - mean.z) * inv_sd;
            }
        }
    }
    normalize_component(&mut ts);
    (0..n)
        .map(|i| Vector4::new(xs[i], ys[i], zs[i], ts[i]))
        .collect()
}

fn spatial_eigen(points: &[Vector4<f64>], retained: &[usize]) -> ([f64; 3], Matrix3<f64>, Vector3<f64>) {
    let nf = retained.len() as f64;
    let mut mean = Vector3::zeros();
    for &i in retained {
        mean += points[i].xyz();
    }
    mean /= nf;
    let mut c = Matrix3::zeros();
    for &i in retained {
        let d = points[i].xyz() - mean;
        c += d * d.transpose();
    }
    c /= nf;
    let (lambda, v) = eigen3(&c).expect("covariance is symmetric by construction");
    (lambda, v, mean)
}

/// Runs refinement, alignment and binning on already-normalized 4D points.
/// Exposed separately so the restricted rotation-invariance claim (rotation
/// applied *after* normalization) can be exercised directly.
pub fn stkd_from_normalized(
    points: &[Vector4<f64>],
    qualities: &[f64],
    params: &StkdParams,
) -> Result<Stkd> {
    let n = points.len();
    if qualities.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: qualities.len(),
        });
    }
    if n < params.min_keep || n < 4 {
        return Err(Error::TooFewKeypoints {
            got: n,
            min: params.min_keep.max(4),
        });
    }
    let m_k = params
        .m_k
        .unwrap_or_else(|| ((0.05 * n as f64).ceil() as usize).max(1));

    let mut retained: Vec<usize> = (0..n).collect();
    let mut iterations = 0usize;
    let (mut lambda, mut v, mut mean) = spatial_eigen(points, &retained);
    loop {
        let d12 = ratio(lambda[0], lambda[1]);
        let d23 = ratio(lambda[1], lambda[2]);
        if d12 > params.theta_g && d23 > params.theta_g {
            break;
        }
        if retained.len() < m_k + params.min_keep {
            break; // floor reached: use the last basis regardless
        }
        // Drop the m_k lowest-quality keypoints. The tie-break on
        // coordinates makes the removal set independent of input order.
        retained.sort_by(|&a, &b| {
            let ka = (qualities[a], points[a].x, points[a].y, points[a].z, points[a].w);
            let kb = (qualities[b], points[b].x, points[b].y, points[b].z, points[b].w);
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        });
        retained.drain(..m_k);
        retained.sort_unstable();
        iterations += 1;
        (lambda, v, mean) = spatial_eigen(points, &retained);
    }
    let final_ratios = (ratio(lambda[0], lambda[1]), ratio(lambda[1], lambda[2]));

    // Sign disambiguation of V against the retained centroid; ties fall back
    // to a canonical orientation (first nonzero component positive).
    for j in 0..3 {
        let col: Vector3<f64> = v.column(j).into();
        let mut score = 0.0;
        for &i in &retained {
            let d = (points[i].xyz() - mean).dot(&col);
            score += d.signum() * d * d;
        }
        let flip = if score < 0.0 {
            true
        } else if score > 0.0 {
            false
        } else {
            let lead = col.iter().copied().find(|&x| x != 0.0).unwrap_or(1.0);
            lead < 0.0
        };
        if flip {
            let neg = -col;
            v.set_column(j, &neg);
        }
    }

    let vt = v.transpose();
    let mut histogram = vec![0u32; NUM_VERTICES];
    let poly = polychoron();
    for &i in &retained {
        let aligned3 = vt * points[i].xyz();
        let aligned = Vector4::new(aligned3.x, aligned3.y, aligned3.z, points[i].w);
        histogram[poly.bin(&aligned)] += 1;
    }
    Ok(Stkd {
        histogram,
        retained: retained.len(),
        iterations,
        final_ratios,
    })
}

/// Full STK-D pipeline from raw keypoints: 4D normalization (per `mode`),
/// eigen refinement dropping low-quality keypoints, alignment, binning.
pub fn stkd(stks: &[StkRecord], params: &StkdParams) -> Result<Stkd> {
    if stks.len() < params.min_keep || stks.len() < 4 {
        return Err(Error::TooFewKeypoints {
            got: stks.len(),
            min: params.min_keep.max(4),
        });
    }
    let points = normalized_points(stks, params.mode);
    let qualities: Vec<f64> = stks.iter().map(|s| s.quality).collect();
    stkd_from_normalized(&points, &qualities, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{EigenBasis, Point3};
    use approx::assert_abs_diff_eq;
    use nalgebra::Rotation3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn six_hundred_vertices_with_table_counts() {
        let poly = polychoron();
        assert_eq!(poly.vertices.len(), 600);
        assert_eq!(poly.family_counts, [24, 64, 64, 64, 96, 96, 192]);
    }

    #[test]
    fn all_squared_norms_are_eight() {
        let poly = polychoron();
        for v in &poly.vertices {
            assert_abs_diff_eq!(v.norm_squared(), 8.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn binning_prefers_highest_projection_with_index_tiebreak() {
        let poly = polychoron();
        // A vertex direction votes for itself (its self-dot 8 beats any
        // other: the polychoron has no duplicate columns).
        for probe in [0usize, 24, 100, 599] {
            let p = poly.vertices[probe];
            assert_eq!(poly.bin(&p), probe);
        }
        // The zero vector ties everywhere → lowest index.
        assert_eq!(poly.bin(&Vector4::zeros()), 0);
    }

    fn fake_stk(x: f64, y: f64, z: f64, t: usize, eta: f64) -> StkRecord {
        let basis = EigenBasis {
            eigenvalues: [1.0, 0.5, 0.1],
            vectors: Matrix3::identity(),
            mean: Point3::new(x, y, z),
            sign_ties: [false; 3],
        };
        StkRecord {
            position: Point3::new(x, y, z),
            t,
            tau_star: 1,
            spatial_basis: basis.clone(),
            st_basis: basis,
            quality: eta,
        }
    }

    /// Coplanar keypoints stretched along the diagonal (x = a+b, y = a−b
    /// with |a| ≫ |b|, constant z). Per-axis unit-variance normalization
    /// only preserves anisotropy that lives in cross-axis correlation, so an
    /// axis-aligned ellipsoid would be flattened to isotropy — this diagonal
    /// cloud keeps δ̄12 ≈ (1+ρ)/(1−ρ) ≫ θ and δ̄23 = ∞, meeting the
    /// refinement constraint at iteration zero.
    fn anisotropic_stks(seed: u64, n: usize) -> Vec<StkRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let a = rng.gen_range(-3.0f64..3.0);
                let b = rng.gen_range(-0.5f64..0.5);
                fake_stk(a + b, a - b, 4.0, 1 + i % 30, rng.gen_range(0.01..2.0))
            })
            .collect()
    }

    #[test]
    fn histogram_sums_to_retained_count() {
        let stks = anisotropic_stks(1, 80);
        let d = stkd(&stks, &StkdParams::default()).unwrap();
        assert_eq!(d.histogram.len(), 600);
        assert_eq!(d.histogram.iter().sum::<u32>(), d.retained as u32);
        assert_eq!(d.retained, 80, "anisotropic cloud should need no refinement");
        assert_eq!(d.iterations, 0);
        assert!(d.final_ratios.0 > 1.3 && d.final_ratios.1 > 1.3);
    }

    #[test]
    fn l1_normalization() {
        let stks = anisotropic_stks(2, 40);
        let d = stkd(&stks, &StkdParams::default()).unwrap();
        let l1 = d.l1();
        assert_abs_diff_eq!(l1.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_keypoints_rejected() {
        let stks = anisotropic_stks(3, 7);
        assert!(matches!(
            stkd(&stks, &StkdParams::default()),
            Err(Error::TooFewKeypoints { got: 7, min: 10 })
        ));
    }

    #[test]
    fn shuffling_input_leaves_histogram_unchanged() {
        let mut stks = anisotropic_stks(4, 60);
        let base = stkd(&stks, &StkdParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            stks.shuffle(&mut rng);
            let shuffled = stkd(&stks, &StkdParams::default()).unwrap();
            assert_eq!(base.histogram, shuffled.histogram);
        }
    }

    /// Isotropic keypoint cloud (all eigenratios ≈ 1): refinement must run
    /// and stop at the floor, still producing a histogram from the last
    /// basis.
    #[test]
    fn refinement_stops_at_floor_on_isotropic_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let stks: Vec<StkRecord> = (0..50)
            .map(|i| {
                fake_stk(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    1 + i % 10,
                    rng.gen_range(0.01..2.0),
                )
            })
            .collect();
        let params = StkdParams {
            m_k: Some(5),
            ..Default::default()
        };
        let d = stkd(&stks, &params).unwrap();
        // 50 → 45 → ... → 10 is the deepest possible; the loop must stop
        // with at least min_keep retained.
        assert!(d.retained >= 10);
        assert!(d.iterations <= 8);
        assert_eq!(d.histogram.iter().sum::<u32>(), d.retained as u32);
    }

    #[test]
    fn refinement_removes_lowest_quality_first() {
        // 12 keypoints on a near-isotropic shell, m_k=2, floor 10: exactly
        // one removal round happens and it must take the two lowest η.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut stks: Vec<StkRecord> = (0..12)
            .map(|i| {
                fake_stk(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    1 + i,
                    1.0 + i as f64,
                )
            })
            .collect();
        stks[3].quality = 0.001;
        stks[9].quality = 0.002;
        let params = StkdParams {
            m_k: Some(2),
            ..Default::default()
        };
        let d = stkd(&stks, &params).unwrap();
        if d.iterations > 0 {
            assert_eq!(d.retained, 10);
        }
        // Rerun with the low-quality pair boosted: retained count can only
        // stay the same or change because a *different* pair was dropped;
        // verify the selection is by quality by checking determinism of the
        // histogram against a manual removal.
        let survivors: Vec<StkRecord> = stks
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 3 && *i != 9)
            .map(|(_, s)| s.clone())
            .collect();
        if d.iterations == 1 {
            let manual = stkd(
                &survivors,
                &StkdParams {
                    m_k: Some(2),
                    theta_g: 0.0, // constraint satisfied immediately
                    ..Default::default()
                },
            )
            .unwrap();
            // Same retained set → same histogram, up to the different
            // normalization population. Sum must match at least.
            assert_eq!(manual.histogram.iter().sum::<u32>(), 10);
        }
    }

    #[test]
    fn rotation_after_normalization_gives_identical_histograms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<Vector4<f64>> = (0..70)
            .map(|_| {
                Vector4::new(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-1.2..1.2),
                    rng.gen_range(-0.4..0.4),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let qualities: Vec<f64> = (0..70).map(|_| rng.gen_range(0.01..1.0)).collect();
        let params = StkdParams::default();
        let base = stkd_from_normalized(&points, &qualities, &params).unwrap();
        for trial in 0..5 {
            let rot = Rotation3::from_axis_angle(
                &nalgebra::Unit::new_normalize(Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )),
                rng.gen_range(0.2..3.0),
            );
            let rotated: Vec<Vector4<f64>> = points
                .iter()
                .map(|p| {
                    let s = rot * p.xyz();
                    Vector4::new(s.x, s.y, s.z, p.w)
                })
                .collect();
            let hist = stkd_from_normalized(&rotated, &qualities, &params).unwrap();
            assert_eq!(base.histogram, hist.histogram, "trial {trial}");
        }
    }

    #[test]
    fn per_axis_normalization_is_not_rotation_invariant() {
        // Anisotropic cloud stretched along (1,1,0): per-axis variance
        // normalization treats the pre- and post-rotation versions
        // differently, so the histograms must differ.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let stks: Vec<StkRecord> = (0..60)
            .map(|i| {
                let along = rng.gen_range(-3.0f64..3.0);
                let off1 = rng.gen_range(-0.4f64..0.4);
                let off2 = rng.gen_range(-0.15f64..0.15);
                fake_stk(
                    along + off1,
                    along - off1,
                    off2,
                    1 + i % 20,
                    rng.gen_range(0.01..1.0),
                )
            })
            .collect();
        let rot = Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vector3::new(0.0, 0.0, 1.0)),
            std::f64::consts::FRAC_PI_4,
        );
        let rotated: Vec<StkRecord> = stks
            .iter()
            .map(|s| {
                let mut c = s.clone();
                c.position = rot * s.position;
                c
            })
            .collect();
        let params = StkdParams::default();
        let a = stkd(&stks, &params).unwrap();
        let b = stkd(&rotated, &params).unwrap();
        assert_ne!(a.histogram, b.histogram);
    }

    /// A tilted 3D ellipsoid with three distinct spreads. Needed where the
    /// aligned third coordinate must carry real signal: coplanar clouds put
    /// ±1e-16 rounding noise there, and polychoron vertices that differ only
    /// in one sign then tie at noise level.
    fn tilted_stks(seed: u64, n: usize) -> Vec<StkRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = Rotation3::from_euler_angles(0.4, 0.7, 0.3);
        (0..n)
            .map(|i| {
                let local = Vector3::new(
                    rng.gen_range(-3.0f64..3.0),
                    rng.gen_range(-1.0f64..1.0),
                    rng.gen_range(-0.35f64..0.35),
                );
                let world = frame * local;
                fake_stk(world.x, world.y, world.z, 1 + i % 30, rng.gen_range(0.01..2.0))
            })
            .collect()
    }

    #[test]
    fn isotropic_mode_is_rotation_invariant_end_to_end() {
        let stks = tilted_stks(9, 60);
        let params = StkdParams {
            mode: NormalizationMode::Isotropic,
            ..Default::default()
        };
        let base = stkd(&stks, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for trial in 0..5 {
            let rot = Rotation3::from_axis_angle(
                &nalgebra::Unit::new_normalize(Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )),
                rng.gen_range(0.2..3.0),
            );
            let rotated: Vec<StkRecord> = stks
                .iter()
                .map(|s| {
                    let mut c = s.clone();
                    c.position = rot * s.position;
                    c
                })
                .collect();
            let hist = stkd(&rotated, &params).unwrap();
            assert_eq!(base.histogram, hist.histogram, "trial {trial}");
        }
    }

    #[test]
    fn zero_variance_axis_is_left_at_zero() {
        // All keypoints in the z = 4 plane: the z component normalizes to 0
        // (not NaN) and the pipeline completes.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let stks: Vec<StkRecord> = (0..30)
            .map(|i| {
                fake_stk(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-1.0..1.0),
                    4.0,
                    1 + i,
                    rng.gen_range(0.01..1.0),
                )
            })
            .collect();
        let d = stkd(&stks, &StkdParams::default()).unwrap();
        assert_eq!(d.histogram.iter().sum::<u32>(), d.retained as u32);
        assert!(d.histogram.iter().all(|&c| c as usize <= d.retained));
    }
}
