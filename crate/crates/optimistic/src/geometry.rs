//! Bregman geometry: mirror maps, distances and the three-point identity.
//!
//! Every solver takes a `&dyn MirrorMap`. Only the Euclidean map ships; the
//! closed-form subsolvers refuse anything else.

use std::fmt;

use nalgebra::DVector;

use crate::error::{check_dim, Result};

/// Norm pair attached to a mirror map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormTag {
    /// ℓ2 primal norm, self-dual.
    L2,
}

pub trait MirrorMap: Send + Sync + fmt::Debug {
    fn phi(&self, z: &DVector<f64>) -> f64;

    fn grad_phi(&self, z: &DVector<f64>) -> DVector<f64>;

    /// Lipschitz constant of the mirror gradient.
    fn smoothness(&self) -> f64;

    /// Declared symmetry coefficient in [0, 1].
    fn symmetry(&self) -> f64;

    fn norm_tag(&self) -> NormTag;

    /// Fixed dimension, or `None` if the map works in any dimension.
    fn dim(&self) -> Option<usize> {
        None
    }

    /// True when the distance is half the squared ℓ2 distance.
    fn is_euclidean(&self) -> bool {
        false
    }

    fn norm(&self, z: &DVector<f64>) -> f64 {
        match self.norm_tag() {
            NormTag::L2 => z.norm(),
        }
    }

    fn dual_norm(&self, z: &DVector<f64>) -> f64 {
        match self.norm_tag() {
            NormTag::L2 => z.norm(),
        }
    }

    /// Unchecked Bregman distance. Implementors with a closed form should override.
    fn distance(&self, z_to: &DVector<f64>, z_from: &DVector<f64>) -> f64 {
        let g = self.grad_phi(z_from);
        let d = self.phi(z_to) - self.phi(z_from) - g.dot(&(z_to - z_from));
        d.max(0.0)
    }
}

/// Φ(z) = ½‖z‖².
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Euclidean;

impl MirrorMap for Euclidean {
    fn phi(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.norm_squared()
    }

    fn grad_phi(&self, z: &DVector<f64>) -> DVector<f64> {
        z.clone()
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn symmetry(&self) -> f64 {
        1.0
    }

    fn norm_tag(&self) -> NormTag {
        NormTag::L2
    }

    fn is_euclidean(&self) -> bool {
        true
    }

    fn distance(&self, z_to: &DVector<f64>, z_from: &DVector<f64>) -> f64 {
        0.5 * (z_to - z_from).norm_squared()
    }
}

fn check_points(map: &dyn MirrorMap, pts: &[&DVector<f64>]) -> Result<()> {
    let d = map.dim().unwrap_or(pts[0].len());
    for p in pts {
        check_dim(d, p.len())?;
    }
    Ok(())
}

/// D(z_to, z_from) = Φ(z_to) − Φ(z_from) − ⟨∇Φ(z_from), z_to − z_from⟩.
pub fn bregman_distance(map: &dyn MirrorMap, z_to: &DVector<f64>, z_from: &DVector<f64>) -> Result<f64> {
    check_points(map, &[z_to, z_from])?;
    Ok(map.distance(z_to, z_from))
}

/// ⟨∇Φ(u) − ∇Φ(v), u − w⟩ − [D(u,v) + D(w,u) − D(w,v)], which vanishes for every Φ.
pub fn three_point_gap(map: &dyn MirrorMap, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    check_points(map, &[u, v, w])?;
    let lhs = (map.grad_phi(u) - map.grad_phi(v)).dot(&(u - w));
    let rhs = map.distance(u, v) + map.distance(w, u) - map.distance(w, v);
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn euclidean_distance_basic_cases() {
        let e = Euclidean;
        assert_eq!(bregman_distance(&e, &v(&[1.0, 2.0]), &v(&[1.0, 2.0])).unwrap(), 0.0);
        assert_eq!(bregman_distance(&e, &v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 0.5);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let e = Euclidean;
        assert!(bregman_distance(&e, &v(&[1.0]), &v(&[0.0, 0.0])).is_err());
        assert!(three_point_gap(&e, &v(&[1.0]), &v(&[1.0]), &v(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn three_point_gap_at_coincident_points() {
        let p = v(&[0.3, -1.2, 4.0]);
        assert_eq!(three_point_gap(&Euclidean, &p, &p, &p).unwrap(), 0.0);
    }
}
