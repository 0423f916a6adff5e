//! Adaptive support scales: spatial radius from subject height and automatic
//! per-point temporal scale selection.
//!
//! The spatial radius is r = σ·h_s where h_s is a robust vertical extent of
//! the first non-empty frame. The temporal half-window τ* minimizes
//! A_p(τ) = λ2/λ1 + λ3/λ2 of the spatio-temporal support over τ = 1..τ_m;
//! points whose minimum sits at τ_m are flagged for discard (their motion
//! extends past the largest window we are willing to trust).

use crate::error::{Error, Result};
use crate::geom::{
    build_support, covariance, eigen3, Point3, PointCloudSequence, SequenceIndex, SupportKind,
    SupportVolume,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    /// Fraction of subject height used as support radius, in (0,1).
    pub sigma: f64,
    /// Upper percentile (e.g. 0.99) of the vertical coordinate; the extent is
    /// measured between it and its mirror 1−p.
    pub height_percentile: f64,
}

impl Default for ScaleParams {
    fn default() -> Self {
        ScaleParams {
            sigma: 0.2,
            height_percentile: 0.99,
        }
    }
}

/// Default maximum temporal half-window: ⌈0.2·n_f⌉, at least 1.
pub fn default_tau_max(n_f: usize) -> usize {
    ((n_f as f64 * 0.2).ceil() as usize).max(1)
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let w = rank - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Support radius r = σ·h_s from the robust vertical (Y) extent of the first
/// non-empty frame.
pub fn spatial_scale(seq: &PointCloudSequence, params: &ScaleParams) -> Result<f64> {
    if !(params.sigma > 0.0 && params.sigma < 1.0) {
        return Err(Error::BadSigma(params.sigma));
    }
    let frame = seq
        .frames
        .iter()
        .find(|f| !f.points.is_empty())
        .ok_or(Error::EmptySequence)?;
    let mut ys: Vec<f64> = frame.points.iter().map(|p| p.y).collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let hp = params.height_percentile.clamp(0.5, 1.0);
    let h_s = percentile(&ys, hp) - percentile(&ys, 1.0 - hp);
    if !(h_s > 0.0) {
        return Err(Error::BadParameter(format!(
            "vertical extent {h_s} is not positive; cannot derive a radius"
        )));
    }
    Ok(params.sigma * h_s)
}

/// Eigenratio objective of one spatio-temporal support volume:
/// A = λ2/λ1 + λ3/λ2 ∈ [0,2], with 0/0 ≡ 1. Volumes with fewer than 4
/// points or λ1 = 0 cannot support a meaningful basis and score the worst
/// value 2.
pub fn a_objective(vol: &SupportVolume) -> f64 {
    if vol.n_points() < 4 {
        return 2.0;
    }
    let Ok((_, c)) = covariance(vol) else {
        return 2.0;
    };
    let Ok((lambda, _)) = eigen3(&c) else {
        return 2.0;
    };
    if lambda[0] == 0.0 {
        return 2.0;
    }
    let second = if lambda[1] > 0.0 {
        lambda[2] / lambda[1]
    } else {
        1.0 // 0/0 convention
    };
    lambda[1] / lambda[0] + second
}

fn select_tau(a_values: &[f64]) -> (usize, bool) {
    let mut best = 0usize;
    for (i, &a) in a_values.iter().enumerate().skip(1) {
        if a < a_values[best] {
            best = i;
        }
    }
    let tau_star = best + 1;
    (tau_star, tau_star != a_values.len())
}

/// Scans τ = 1..τ_m and returns (τ*, keep). `keep` is false exactly when the
/// minimum sits at τ_m, i.e. the motion never stabilizes inside the scan
/// range and the point should be discarded.
pub fn temporal_scale(
    seq: &PointCloudSequence,
    p: &Point3,
    t: usize,
    r: f64,
    tau_max: usize,
) -> (usize, bool) {
    let a: Vec<f64> = (1..=tau_max)
        .map(|tau| a_objective(&build_support(seq, p, t, r, tau, SupportKind::SpatioTemporal)))
        .collect();
    select_tau(&a)
}

/// Same scan through a [`SequenceIndex`]; per-frame neighbor lists are
/// gathered once and windows are assembled frame-ascending, so every A value
/// is bit-identical to [`temporal_scale`].
pub fn temporal_scale_indexed(
    index: &SequenceIndex<'_>,
    p: &Point3,
    t: usize,
    tau_max: usize,
) -> (usize, bool) {
    let seq = index.sequence();
    let r = index.cell_size();
    let window = seq.clip_window(t, tau_max);
    let (lo, hi) = (*window.start(), *window.end());
    let mut per_frame: Vec<Vec<Point3>> = Vec::with_capacity(hi - lo + 1);
    let mut ids = Vec::new();
    for f in lo..=hi {
        index.frame_neighbors(f, p, r, &mut ids);
        let frame = seq.frame(f).expect("frame in clipped window");
        per_frame.push(ids.iter().map(|&i| frame.points[i as usize]).collect());
    }
    let a: Vec<f64> = (1..=tau_max)
        .map(|tau| {
            let w = seq.clip_window(t, tau);
            let mut members = Vec::new();
            let mut member_frames = Vec::new();
            for f in w {
                members.extend_from_slice(&per_frame[f - lo]);
                member_frames
                    .extend(std::iter::repeat(f as u32).take(per_frame[f - lo].len()));
            }
            a_objective(&SupportVolume {
                center: *p,
                t,
                kind: SupportKind::SpatioTemporal,
                radius: r,
                tau,
                members,
                member_frames,
            })
        })
        .collect();
    select_tau(&a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    fn two_level_frame(lo: f64, hi: f64) -> Vec<Point3> {
        // 50 points at each level: the 1st/99th percentiles coincide with the
        // extremes, so the extent is exactly hi − lo.
        let mut pts = Vec::new();
        for i in 0..50 {
            pts.push(pt(i as f64 * 0.01, lo, 0.0));
            pts.push(pt(i as f64 * 0.01, hi, 0.0));
        }
        pts
    }

    #[test]
    fn radius_is_sigma_times_height() {
        let seq = PointCloudSequence::from_points(vec![two_level_frame(0.0, 1.8)]);
        let r = spatial_scale(&seq, &ScaleParams::default()).unwrap();
        assert_abs_diff_eq!(r, 0.36, epsilon = 1e-12);
    }

    #[test]
    fn radius_scales_linearly_with_subject() {
        let seq = PointCloudSequence::from_points(vec![two_level_frame(0.0, 1.8)]);
        let scaled = PointCloudSequence::from_points(vec![two_level_frame(0.0, 2.7)]);
        let params = ScaleParams::default();
        let r0 = spatial_scale(&seq, &params).unwrap();
        let r1 = spatial_scale(&scaled, &params).unwrap();
        assert_abs_diff_eq!(r1, 1.5 * r0, epsilon = 1e-12);
    }

    #[test]
    fn radius_ignores_horizontal_translation() {
        let base = two_level_frame(0.2, 1.9);
        let shifted: Vec<Point3> = base.iter().map(|p| p + pt(10.0, 0.0, -3.0)).collect();
        let params = ScaleParams::default();
        let r0 =
            spatial_scale(&PointCloudSequence::from_points(vec![base]), &params).unwrap();
        let r1 =
            spatial_scale(&PointCloudSequence::from_points(vec![shifted]), &params).unwrap();
        assert_abs_diff_eq!(r0, r1, epsilon = 1e-12);
    }

    #[test]
    fn bad_sigma_rejected() {
        let seq = PointCloudSequence::from_points(vec![two_level_frame(0.0, 1.0)]);
        for sigma in [0.0, 1.0, -0.5, f64::NAN] {
            let err = spatial_scale(&seq, &ScaleParams { sigma, ..Default::default() });
            assert!(matches!(err, Err(Error::BadSigma(_))));
        }
    }

    #[test]
    fn empty_sequences_rejected() {
        let seq = PointCloudSequence::from_points(vec![vec![], vec![]]);
        assert!(matches!(
            spatial_scale(&seq, &ScaleParams::default()),
            Err(Error::EmptySequence)
        ));
        let none = PointCloudSequence::from_points(vec![]);
        assert!(matches!(
            spatial_scale(&none, &ScaleParams::default()),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn skips_leading_empty_frames() {
        let seq =
            PointCloudSequence::from_points(vec![vec![], two_level_frame(0.0, 1.8), vec![]]);
        let r = spatial_scale(&seq, &ScaleParams::default()).unwrap();
        assert_abs_diff_eq!(r, 0.36, epsilon = 1e-12);
    }

    #[test]
    fn default_tau_max_is_fifth_of_length() {
        assert_eq!(default_tau_max(10), 2);
        assert_eq!(default_tau_max(11), 3);
        assert_eq!(default_tau_max(3), 1);
        assert_eq!(default_tau_max(1), 1);
    }

    /// A cloud fixed over time, built on a dyadic grid so that covariance
    /// sums are exact and A(τ) is bit-identical for every τ. The tie rule
    /// must then select τ* = 1.
    #[test]
    fn static_scene_selects_smallest_tau() {
        let cloud = vec![
            pt(0.0, 0.0, 0.0),
            pt(0.25, 0.0, 0.0),
            pt(0.0, 0.5, 0.25),
            pt(0.75, 0.25, 0.5),
        ];
        let seq = PointCloudSequence::from_points(vec![cloud; 10]);
        let (tau, keep) = temporal_scale(&seq, &pt(0.0, 0.0, 0.0), 5, 4.0, 2);
        assert_eq!(tau, 1);
        assert!(keep);
    }

    /// A small blob translating along x: the longer the window, the more the
    /// trail dominates and A keeps falling, so the minimum lands on τ_m and
    /// the point is discarded.
    #[test]
    fn runaway_minimum_discards_point() {
        let blob = [
            pt(0.0, 0.0, 0.0),
            pt(0.1, 0.0, 0.0),
            pt(0.0, 0.1, 0.0),
            pt(0.0, 0.0, 0.1),
            pt(0.07, 0.07, 0.07),
        ];
        let frames: Vec<Vec<Point3>> = (0..13)
            .map(|t| {
                let shift = pt(0.5 * t as f64, 0.0, 0.0);
                blob.iter().map(|p| p + shift).collect()
            })
            .collect();
        let seq = PointCloudSequence::from_points(frames);
        let center = pt(0.5 * 6.0, 0.0, 0.0);
        let (tau, keep) = temporal_scale(&seq, &center, 7, 100.0, 4);
        assert_eq!(tau, 4);
        assert!(!keep);
    }

    #[test]
    fn a_objective_degenerate_conventions() {
        let seq = PointCloudSequence::from_points(vec![vec![
            pt(0.0, 0.0, 0.0),
            pt(1.0, 0.0, 0.0),
            pt(2.0, 0.0, 0.0),
        ]]);
        // 3 points < 4.
        let vol = build_support(&seq, &pt(0.0, 0.0, 0.0), 1, 10.0, 0, SupportKind::Spatial);
        assert_eq!(a_objective(&vol), 2.0);

        // 4 identical points: λ1 = 0.
        let seq = PointCloudSequence::from_points(vec![vec![pt(1.0, 1.0, 1.0); 4]]);
        let vol = build_support(&seq, &pt(1.0, 1.0, 1.0), 1, 1.0, 0, SupportKind::Spatial);
        assert_eq!(a_objective(&vol), 2.0);

        // 4 collinear points: λ2 = λ3 = 0 → A = 0 + 0/0 = 1.
        let seq = PointCloudSequence::from_points(vec![vec![
            pt(0.0, 0.0, 0.0),
            pt(1.0, 0.0, 0.0),
            pt(2.0, 0.0, 0.0),
            pt(4.0, 0.0, 0.0),
        ]]);
        let vol = build_support(&seq, &pt(0.0, 0.0, 0.0), 1, 10.0, 0, SupportKind::Spatial);
        assert_abs_diff_eq!(a_objective(&vol), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn a_objective_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [4usize, 7, 20, 60] {
            let pts: Vec<Point3> = (0..n)
                .map(|_| {
                    pt(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let seq = PointCloudSequence::from_points(vec![pts]);
            let vol = build_support(&seq, &pt(0.0, 0.0, 0.0), 1, 10.0, 0, SupportKind::Spatial);
            let a = a_objective(&vol);
            assert!((0.0..=2.0).contains(&a), "A = {a} out of range");
        }
    }

    #[test]
    fn indexed_scan_matches_brute_force_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let frames: Vec<Vec<Point3>> = (0..9)
            .map(|t| {
                (0..40)
                    .map(|_| {
                        pt(
                            rng.gen_range(-1.0..1.0) + 0.1 * t as f64,
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        )
                    })
                    .collect()
            })
            .collect();
        let seq = PointCloudSequence::from_points(frames);
        let r = 0.45;
        let index = SequenceIndex::new(&seq, r).unwrap();
        for t in 1..=9 {
            for i in [0usize, 11, 23, 37] {
                let p = seq.frame(t).unwrap().points[i];
                let brute = temporal_scale(&seq, &p, t, r, 3);
                let fast = temporal_scale_indexed(&index, &p, t, 3);
                assert_eq!(brute, fast);
            }
        }
    }
}
