//! Axis cones, diagonal dominance and the independence determinant.
//!
//! Axes are 0-based here: `axis = j − 1` for the basis vector `e_j`.

use nalgebra::DMatrix;

use crate::pointset::Vector;

/// Vectors `x` with `scale·3p² < |x| < (1 + (2p)⁻²)·|⟨x, e_axis⟩|`.
///
/// `scale = 1` gives the unscaled radius `3p²`; `scale` only moves the lower
/// radius, the angular condition does not depend on it.
pub fn cone_filter(vectors: &[Vector], axis: usize, p: usize, scale: f64) -> Vec<Vector> {
    let pf = p as f64;
    let lower = scale * 3.0 * pf * pf;
    let slope = 1.0 + 1.0 / (4.0 * pf * pf);
    vectors
        .iter()
        .filter(|x| {
            let n = x.norm();
            axis < x.dim() && lower < n && n < slope * x[axis].abs()
        })
        .cloned()
        .collect()
}

/// `|T| < (1 + 1/(2p²))·|T_axis|` and `max_{k≠axis} |T_k| < |T_axis| / (p − 1)`.
///
/// For `p = 1` the second condition is vacuous.
pub fn dominance_check(t: &Vector, axis: usize, p: usize) -> bool {
    if axis >= t.dim() {
        return false;
    }
    let pf = p as f64;
    let diag = t[axis].abs();
    let first = t.norm() < (1.0 + 1.0 / (2.0 * pf * pf)) * diag;
    if p < 2 {
        return first;
    }
    let off = (0..t.dim())
        .filter(|&k| k != axis)
        .map(|k| t[k].abs())
        .fold(0.0, f64::max);
    first && off < diag / (pf - 1.0)
}

/// Determinant of the matrix whose rows are `vectors`.
pub fn independence_det(vectors: &[Vector]) -> f64 {
    let p = vectors.len();
    if p == 0 || vectors.iter().any(|v| v.dim() != p) {
        return 0.0;
    }
    DMatrix::from_fn(p, p, |r, c| vectors[r][c]).determinant()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c)
    }

    #[test]
    fn cone_examples() {
        // 3p² = 12 and 1 + (2p)⁻² = 1.0625 for p = 2
        assert_eq!(cone_filter(&[v(&[13.0, 0.0])], 0, 2, 1.0).len(), 1);
        // |(13,5)| ≈ 13.93 ≥ 13.8125
        assert!(cone_filter(&[v(&[13.0, 5.0])], 0, 2, 1.0).is_empty());
        assert!(cone_filter(&[v(&[5.0, 0.0])], 0, 2, 1.0).is_empty());
        assert_eq!(cone_filter(&[v(&[5.0, 0.0])], 0, 2, 0.25).len(), 1);
        assert_eq!(cone_filter(&[v(&[0.0, -13.0])], 1, 2, 1.0).len(), 1);
    }

    #[test]
    fn dominance_examples() {
        assert!(dominance_check(&v(&[13.0, 0.0]), 0, 2));
        assert!(!dominance_check(&v(&[10.0, 10.0]), 0, 2));
        // |T| ≈ 20.45 < 21.11 and 3 < 10
        assert!(dominance_check(&v(&[20.0, 3.0, 3.0]), 0, 3));
        assert!(!dominance_check(&v(&[20.0, 11.0, 0.0]), 0, 3));
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(independence_det(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]), 1.0);
        assert_eq!(independence_det(&[v(&[1.0, 0.0]), v(&[2.0, 0.0])]), 0.0);
        assert!((independence_det(&[v(&[2.0, 0.0]), v(&[1.0, 1.0])]) - 2.0).abs() < 1e-12);
    }
}
