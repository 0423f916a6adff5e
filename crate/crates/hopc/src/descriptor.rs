//! The 60-dimensional histogram of oriented principal components.
//!
//! Each disambiguated eigenvector is projected onto the 20 vertex directions
//! of a regular dodecahedron, the projection is quantized against the
//! adjacent-vertex threshold ψ, unit-normalized, scaled by its eigenvalue and
//! the three blocks are concatenated in descending eigenvalue order.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geom::{EigenBasis, SupportVolume};

/// Golden ratio φ = (1+√5)/2.
pub const PHI: f64 = 1.618_033_988_749_894_8;

pub const NUM_DIRECTIONS: usize = 20;
pub const HOPC_LEN: usize = 3 * NUM_DIRECTIONS;

/// A fixed set of projection directions with its quantization threshold ψ
/// (the maximal dot product between distinct columns).
///
/// Bin order is part of the format: bins 0–7 are the cube vertices
/// (±1,±1,±1), bins 8–11 the family (0,±φ⁻¹,±φ), bins 12–15 (±φ⁻¹,±φ,0) and
/// bins 16–19 (±φ,0,±φ⁻¹), each family enumerated in lexicographic sign
/// order with − before +.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    pub dirs: Vec<Vector3<f64>>,
    pub psi: f64,
}

fn raw_vertices() -> Vec<Vector3<f64>> {
    let inv = 1.0 / PHI;
    let mut v = Vec::with_capacity(NUM_DIRECTIONS);
    for &sx in &[-1.0, 1.0] {
        for &sy in &[-1.0, 1.0] {
            for &sz in &[-1.0, 1.0] {
                v.push(Vector3::new(sx, sy, sz));
            }
        }
    }
    for &sa in &[-1.0, 1.0] {
        for &sb in &[-1.0, 1.0] {
            v.push(Vector3::new(0.0, sa * inv, sb * PHI));
        }
    }
    for &sa in &[-1.0, 1.0] {
        for &sb in &[-1.0, 1.0] {
            v.push(Vector3::new(sa * inv, sb * PHI, 0.0));
        }
    }
    for &sa in &[-1.0, 1.0] {
        for &sb in &[-1.0, 1.0] {
            v.push(Vector3::new(sa * PHI, 0.0, sb * inv));
        }
    }
    v
}

fn max_pairwise_dot(dirs: &[Vector3<f64>]) -> f64 {
    let mut psi = f64::NEG_INFINITY;
    for (i, a) in dirs.iter().enumerate() {
        for b in dirs.iter().skip(i + 1) {
            psi = psi.max(a.dot(b));
        }
    }
    psi
}

/// The 20 dodecahedron vertex directions, normalized to unit length, with
/// ψ = √5/3 ≈ 0.745356 (adjacent-vertex dot of the normalized set).
pub fn dodecahedron() -> DirectionSet {
    let dirs: Vec<_> = raw_vertices().iter().map(|v| v.normalize()).collect();
    let psi = max_pairwise_dot(&dirs);
    DirectionSet { dirs, psi }
}

/// Unnormalized vertices (norm √3) with ψ = √5. A unit vector can never
/// project past √3 < √5, so every histogram quantizes to zero — kept only so
/// the effect of the normalization choice can be measured.
pub fn dodecahedron_raw() -> DirectionSet {
    let dirs = raw_vertices();
    let psi = max_pairwise_dot(&dirs);
    DirectionSet { dirs, psi }
}

impl DirectionSet {
    pub fn m(&self) -> usize {
        self.dirs.len()
    }

    /// Index of the bin whose direction is the exact negation of bin `i`.
    pub fn antipode(&self, i: usize) -> usize {
        let neg = -self.dirs[i];
        self.dirs
            .iter()
            .position(|u| *u == neg)
            .expect("direction set is centrally symmetric")
    }
}

/// Projects a unit vector onto all directions and quantizes: entries at most
/// ψ are zeroed, the rest keep their excess over ψ.
pub fn project_quantize(v: &Vector3<f64>, dirs: &DirectionSet) -> Result<Vec<f64>> {
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnit(norm));
    }
    Ok(dirs
        .dirs
        .iter()
        .map(|u| {
            let b = u.dot(v);
            if b <= dirs.psi {
                0.0
            } else {
                b - dirs.psi
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopcDescriptor {
    pub h: [f64; HOPC_LEN],
}

impl HopcDescriptor {
    pub fn zeros() -> Self {
        HopcDescriptor { h: [0.0; HOPC_LEN] }
    }

    /// Block for eigenvector `j` (0 = most principal).
    pub fn block(&self, j: usize) -> &[f64] {
        &self.h[j * NUM_DIRECTIONS..(j + 1) * NUM_DIRECTIONS]
    }
}

/// Assembles the HOPC descriptor of a support volume from its disambiguated
/// basis: h_j = λ_j · b̂_j / ‖b̂_j‖₂ per eigenvector, zero when λ_j = 0 or the
/// quantized projection vanishes.
pub fn hopc(vol: &SupportVolume, basis: &EigenBasis, dirs: &DirectionSet) -> Result<HopcDescriptor> {
    if vol.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut out = HopcDescriptor::zeros();
    for j in 0..3 {
        let lambda = basis.eigenvalues[j];
        if lambda == 0.0 {
            continue;
        }
        let quantized = project_quantize(&basis.eigenvector(j), dirs)?;
        let norm = quantized.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let scale = lambda / norm;
        for (slot, q) in out.h[j * NUM_DIRECTIONS..(j + 1) * NUM_DIRECTIONS]
            .iter_mut()
            .zip(&quantized)
        {
            *slot = q * scale;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{basis_for, Point3, SupportKind};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn twenty_unit_directions_centrally_symmetric() {
        let d = dodecahedron();
        assert_eq!(d.m(), 20);
        for (i, u) in d.dirs.iter().enumerate() {
            assert_abs_diff_eq!(u.norm(), 1.0, epsilon = 1e-12);
            let j = d.antipode(i);
            assert_ne!(i, j);
            assert_eq!(d.antipode(j), i);
        }
    }

    #[test]
    fn adjacency_threshold_values() {
        let d = dodecahedron();
        assert_abs_diff_eq!(d.psi, 5.0f64.sqrt() / 3.0, epsilon = 1e-12);

        let raw = dodecahedron_raw();
        assert_abs_diff_eq!(raw.psi, 5.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(raw.psi, PHI + 1.0 / PHI, epsilon = 1e-12);
        for u in &raw.dirs {
            assert_abs_diff_eq!(u.norm(), 3.0f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn vertex_projection_is_one_hot() {
        let d = dodecahedron();
        let expected = 1.0 - 5.0f64.sqrt() / 3.0; // ≈ 0.254644
        for (i, u) in d.dirs.iter().enumerate() {
            let b = project_quantize(u, &d).unwrap();
            let nonzero: Vec<usize> = (0..20).filter(|&z| b[z] != 0.0).collect();
            assert_eq!(nonzero, vec![i], "vertex {i} not one-hot");
            assert_abs_diff_eq!(b[i], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn antipodal_vertex_votes_into_antipodal_bin() {
        let d = dodecahedron();
        for i in 0..20 {
            let v = -d.dirs[i];
            let b = project_quantize(&v, &d).unwrap();
            let j = d.antipode(i);
            let nonzero: Vec<usize> = (0..20).filter(|&z| b[z] != 0.0).collect();
            assert_eq!(nonzero, vec![j]);
        }
    }

    /// The 12 face centers are the directions farthest from every vertex;
    /// even there the nearest-vertex dot is φ²/√(3(1+φ²)) ≈ 0.7947 > ψ, so a
    /// unit vector always excites at least one bin (here: the five vertices
    /// of the face, all by the same amount).
    #[test]
    fn face_centers_excite_their_five_face_vertices() {
        let d = dodecahedron();
        let mut centers = Vec::new();
        for &sa in &[-1.0f64, 1.0] {
            for &sb in &[-1.0f64, 1.0] {
                centers.push(Vector3::new(sa, 0.0, sb * PHI).normalize());
                centers.push(Vector3::new(sb * PHI, sa, 0.0).normalize());
                centers.push(Vector3::new(0.0, sb * PHI, sa).normalize());
            }
        }
        assert_eq!(centers.len(), 12);
        let face_dot = PHI * PHI / (3.0 * (1.0 + PHI * PHI)).sqrt();
        assert!(face_dot > d.psi);
        let expected = face_dot - d.psi; // ≈ 0.049298
        for c in &centers {
            let b = project_quantize(c, &d).unwrap();
            let nonzero: Vec<f64> = b.iter().copied().filter(|&x| x != 0.0).collect();
            assert_eq!(nonzero.len(), 5, "face center should see its 5 vertices");
            for x in nonzero {
                assert_abs_diff_eq!(x, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn every_unit_vector_excites_some_bin() {
        let d = dodecahedron();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let v = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm() < 1e-3 {
                continue;
            }
            let v = v.normalize();
            let b = project_quantize(&v, &d).unwrap();
            assert!(b.iter().any(|&x| x > 0.0));
            assert!(b.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn raw_mode_quantizes_everything_to_zero() {
        let raw = dodecahedron_raw();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let v = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let b = project_quantize(&v, &raw).unwrap();
            assert!(b.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn non_unit_vector_rejected() {
        let d = dodecahedron();
        let err = project_quantize(&Vector3::new(0.0, 0.0, 2.0), &d);
        assert!(matches!(err, Err(Error::NotUnit(_))));
    }

    #[test]
    fn quantization_is_locally_lipschitz() {
        let d = dodecahedron();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let v = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let b0 = project_quantize(&v, &d).unwrap();
            // Skip samples sitting on a quantization boundary.
            if b0.iter().any(|&x| x > 0.0 && x < 1e-5) {
                continue;
            }
            let delta = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0,),
            ) * 1e-6;
            let w = (v + delta).normalize();
            let b1 = project_quantize(&w, &d).unwrap();
            let step = (w - v).norm();
            for z in 0..20 {
                assert!((b1[z] - b0[z]).abs() <= step + 1e-12);
            }
        }
    }

    fn spatial_vol(members: Vec<Point3>) -> crate::geom::SupportVolume {
        let seq = crate::geom::PointCloudSequence::from_points(vec![members]);
        crate::geom::build_support(
            &seq,
            &Point3::new(0.0, 0.0, 0.0),
            1,
            1e6,
            0,
            SupportKind::Spatial,
        )
    }

    #[test]
    fn collinear_volume_fills_only_the_first_block() {
        // Mass strictly on +x of the center, so v1 = +x after disambiguation.
        let vol = spatial_vol(vec![
            Point3::new(0.5, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(4.0, 0.0, 0.0),
        ]);
        let basis = basis_for(&vol).unwrap();
        assert!(basis.eigenvalues[0] > 0.0);
        assert_abs_diff_eq!(basis.eigenvalues[1], 0.0, epsilon = 1e-12);
        let d = dodecahedron();
        let h = hopc(&vol, &basis, &d).unwrap();
        assert!(h.block(1).iter().all(|&x| x == 0.0));
        assert!(h.block(2).iter().all(|&x| x == 0.0));
        // +x is equidistant from the two vertices (φ,0,±φ⁻¹): bins 18 and 19.
        let nonzero: Vec<usize> = (0..20).filter(|&z| h.block(0)[z] != 0.0).collect();
        assert_eq!(nonzero, vec![18, 19]);
        let norm = h.block(0).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, basis.eigenvalues[0], epsilon = 1e-12);
    }

    #[test]
    fn planar_volume_zeroes_the_third_block() {
        let mut members = Vec::new();
        for i in 0..6 {
            for j in 0..4 {
                members.push(Point3::new(0.3 + i as f64 * 0.25, j as f64 * 0.4, 0.0));
            }
        }
        let vol = spatial_vol(members);
        let basis = basis_for(&vol).unwrap();
        assert_abs_diff_eq!(basis.eigenvalues[2], 0.0, epsilon = 1e-12);
        let d = dodecahedron();
        let h = hopc(&vol, &basis, &d).unwrap();
        assert!(h.block(2).iter().all(|&x| x == 0.0));
        assert!(h.block(0).iter().any(|&x| x > 0.0));
    }

    #[test]
    fn block_norms_bounded_by_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = dodecahedron();
        for _ in 0..30 {
            let members: Vec<Point3> = (0..25)
                .map(|_| {
                    Point3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let vol = spatial_vol(members);
            let basis = basis_for(&vol).unwrap();
            let h = hopc(&vol, &basis, &d).unwrap();
            assert_eq!(h.h.len(), 60);
            assert!(h.h.iter().all(|&x| x >= 0.0));
            for j in 0..3 {
                let norm = h.block(j).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(norm <= basis.eigenvalues[j] + 1e-9);
            }
        }
    }

    #[test]
    fn translation_leaves_descriptor_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let members: Vec<Point3> = (0..40)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let d = dodecahedron();
        let vol = spatial_vol(members.clone());
        let h0 = hopc(&vol, &basis_for(&vol).unwrap(), &d).unwrap();

        let shift = Point3::new(5.0, -2.0, 1.5);
        let shifted: Vec<Point3> = members.iter().map(|q| q + shift).collect();
        let seq = crate::geom::PointCloudSequence::from_points(vec![shifted]);
        let svol = crate::geom::build_support(&seq, &shift, 1, 1e6, 0, SupportKind::Spatial);
        let h1 = hopc(&svol, &basis_for(&svol).unwrap(), &d).unwrap();
        for z in 0..60 {
            assert_abs_diff_eq!(h0.h[z], h1.h[z], epsilon = 1e-9);
        }
    }

    #[test]
    fn empty_volume_rejected() {
        let vol = spatial_vol(vec![]);
        let d = dodecahedron();
        let basis = EigenBasis {
            eigenvalues: [1.0, 0.5, 0.1],
            vectors: nalgebra::Matrix3::identity(),
            mean: Point3::zeros(),
            sign_ties: [false; 3],
        };
        assert!(matches!(hopc(&vol, &basis, &d), Err(Error::EmptySupport)));
    }
}
