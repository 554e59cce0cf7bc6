use nalgebra::DVector;
use optimistic::geometry::{three_point_gap, NormTag};
use optimistic::{bregman_distance, Error, Euclidean, MirrorMap};
use proptest::prelude::*;

/// Weighted quadratic Φ(z) = ½Σ w_i z_i² using the generic distance.
#[derive(Debug)]
struct Weighted(Vec<f64>);

impl MirrorMap for Weighted {
    fn phi(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.iter().zip(&self.0).map(|(v, w)| w * v * v).sum::<f64>()
    }
    fn grad_phi(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(z.len(), z.iter().zip(&self.0).map(|(v, w)| w * v))
    }
    fn smoothness(&self) -> f64 {
        self.0.iter().cloned().fold(0.0, f64::max)
    }
    fn symmetry(&self) -> f64 {
        1.0
    }
    fn norm_tag(&self) -> NormTag {
        NormTag::L2
    }
    fn dim(&self) -> Option<usize> {
        Some(self.0.len())
    }
}

fn vec_of(len: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-10.0..10.0f64, len).prop_map(DVector::from_vec)
}

proptest! {
    #[test]
    fn euclidean_distance_is_half_squared_norm(u in vec_of(6), v in vec_of(6)) {
        let d = bregman_distance(&Euclidean, &u, &v).unwrap();
        let direct: f64 = u.iter().zip(v.iter()).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
        prop_assert!((d - direct).abs() <= 1e-12 * (1.0 + direct));
        prop_assert!(d >= 0.0);
    }

    #[test]
    fn three_point_identity(u in vec_of(5), v in vec_of(5), w in vec_of(5),
                            weights in prop::collection::vec(0.1..5.0f64, 5)) {
        let scale = 1.0 + u.norm_squared() + v.norm_squared() + w.norm_squared();
        let g = three_point_gap(&Euclidean, &u, &v, &w).unwrap();
        prop_assert!(g.abs() <= 1e-10 * scale * 5.0);
        let map = Weighted(weights);
        let g = three_point_gap(&map, &u, &v, &w).unwrap();
        prop_assert!(g.abs() <= 1e-10 * scale * 5.0 * map.smoothness());
    }

    #[test]
    fn generic_distance_matches_closed_form(u in vec_of(4), v in vec_of(4)) {
        let map = Weighted(vec![1.0; 4]);
        let a = bregman_distance(&map, &u, &v).unwrap();
        let b = bregman_distance(&Euclidean, &u, &v).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b));
    }

    #[test]
    fn distance_lower_bound_from_strong_convexity(u in vec_of(4), v in vec_of(4),
                                                  weights in prop::collection::vec(1.0..3.0f64, 4)) {
        // Weights at least one make Φ 1-strongly convex in ℓ2.
        let map = Weighted(weights);
        let d = bregman_distance(&map, &u, &v).unwrap();
        prop_assert!(d + 1e-9 >= 0.5 * (&u - &v).norm_squared());
    }
}

#[test]
fn euclidean_declares_its_constants() {
    assert_eq!(Euclidean.smoothness(), 1.0);
    assert_eq!(Euclidean.symmetry(), 1.0);
    assert!(Euclidean.is_euclidean());
    let z = DVector::from_row_slice(&[3.0, 4.0]);
    assert_eq!(Euclidean.norm(&z), 5.0);
    assert_eq!(Euclidean.dual_norm(&z), 5.0);
}

#[test]
fn dimension_mismatch_is_reported() {
    let u = DVector::zeros(3);
    let v = DVector::zeros(4);
    assert_eq!(bregman_distance(&Euclidean, &u, &v), Err(Error::DimensionMismatch { expected: 3, got: 4 }));
    let map = Weighted(vec![1.0; 2]);
    assert!(matches!(bregman_distance(&map, &u, &u), Err(Error::DimensionMismatch { .. })));
}
