//! Residue sets and verification of `A = L + F` on a window.

use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use crate::error::{Error, Result};
use crate::pointset::{Point, WindowedSet};

/// Witness lists are truncated to this many entries.
pub const MAX_WITNESSES: usize = 32;

/// One coset representative per translate of `L` met by the window.
///
/// Points with `|a| < Σ|T_j|` are reduced to fractional lattice coordinates;
/// cosets are identified within the lattice's `coord_tol` (0 and 1 agree).
/// Each coset is reported as `B·frac`, with `frac` taken from its member
/// nearest the origin. Output is in canonical order.
pub fn residues(set: &WindowedSet, lattice: &Lattice) -> Result<Vec<Point>> {
    let reach = lattice.basis_norm_sum();
    if set.radius() < reach {
        return Err(Error::WindowTooSmall(format!(
            "residue radius {reach} exceeds window radius {}",
            set.radius()
        )));
    }
    let tol = lattice.coord_tol();
    let mut near: Vec<(f64, usize)> = set
        .points()
        .iter()
        .enumerate()
        .map(|(i, a)| (a.norm(), i))
        .filter(|(n, _)| *n < reach)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut cosets: Vec<Vec<f64>> = Vec::new();
    for (_, i) in near {
        let frac = lattice.fractional_coordinates(&set.points()[i]);
        let seen = cosets.iter().any(|c| {
            c.iter().zip(&frac).all(|(x, y)| {
                let d = (x - y).abs();
                d.min(1.0 - d) <= tol
            })
        });
        if !seen {
            cosets.push(frac);
        }
    }
    let p = lattice.dim();
    let mut out: Vec<Point> = cosets
        .iter()
        .map(|frac| {
            let mut x = Point::zeros(p);
            for (f, t) in frac.iter().zip(lattice.basis()) {
                for (xk, tk) in x.coords_mut().iter_mut().zip(t.coords()) {
                    *xk += f * tk;
                }
            }
            x
        })
        .collect();
    out.sort_by(Point::lex_cmp);
    Ok(out)
}

/// A lattice, its residues, and how well `L + F` reproduces the window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrystalDecomposition {
    pub lattice: Lattice,
    pub residues: Vec<Point>,
    /// Fraction of points of `L + F` inside `|x| ≤ R − tol` found in the window.
    pub coverage_in: f64,
    /// Fraction of core points `|a| ≤ R − Σ|T_j|` expressible as `t + f`.
    pub coverage_out: f64,
    pub max_residual: f64,
    pub checked_in: usize,
    pub checked_out: usize,
    /// Points of `L + F` with no window point nearby, nearest the origin first.
    pub missing: Vec<Point>,
    /// Core points not within tolerance of `L + F`, nearest the origin first.
    pub unexplained: Vec<Point>,
}

impl CrystalDecomposition {
    pub fn is_verified(&self) -> bool {
        self.checked_in > 0
            && self.checked_out > 0
            && self.coverage_in == 1.0
            && self.coverage_out == 1.0
    }
}

/// Check both inclusions `L + F ⊂ A` and `A ⊂ L + F` on the window.
pub fn verify_decomposition(
    set: &WindowedSet,
    lattice: &Lattice,
    residues: &[Point],
    tol_exact: f64,
) -> Result<CrystalDecomposition> {
    if !(tol_exact > 0.0) {
        return Err(Error::Config(format!(
            "tol_exact must be positive, got {tol_exact}"
        )));
    }
    if lattice.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: lattice.dim(),
        });
    }
    let mut max_residual: f64 = 0.0;

    let inner = set.radius() - tol_exact;
    let mut checked_in = 0usize;
    let mut found_in = 0usize;
    let mut missing = Vec::new();
    for f in residues {
        for n in lattice.points_in_ball(&-f, inner) {
            let x = &lattice.point(&n) + f;
            if x.norm() > inner {
                continue;
            }
            checked_in += 1;
            match set.find_near(&x, tol_exact) {
                Some((_, d)) => {
                    found_in += 1;
                    max_residual = max_residual.max(d);
                }
                None => missing.push(x),
            }
        }
    }

    let core = set.radius() - lattice.basis_norm_sum();
    let mut checked_out = 0usize;
    let mut found_out = 0usize;
    let mut unexplained = Vec::new();
    for a in set.points().iter().filter(|a| a.norm() <= core) {
        checked_out += 1;
        let best = residues
            .iter()
            .map(|f| lattice.distance(&(a - f)))
            .fold(f64::INFINITY, f64::min);
        if best <= tol_exact {
            found_out += 1;
            max_residual = max_residual.max(best);
        } else {
            unexplained.push(a.clone());
        }
    }
    nearest_first(&mut missing);
    nearest_first(&mut unexplained);

    let fraction = |found: usize, checked: usize| {
        if checked == 0 {
            1.0
        } else {
            found as f64 / checked as f64
        }
    };
    Ok(CrystalDecomposition {
        lattice: lattice.clone(),
        residues: residues.to_vec(),
        coverage_in: fraction(found_in, checked_in),
        coverage_out: fraction(found_out, checked_out),
        max_residual,
        checked_in,
        checked_out,
        missing,
        unexplained,
    })
}

/// Keep the [`MAX_WITNESSES`] points nearest the origin.
fn nearest_first(points: &mut Vec<Point>) {
    points.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then_with(|| a.lex_cmp(b)));
    points.truncate(MAX_WITNESSES);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::almost_period::TOL_EXACT;
    use crate::crystal::lattice::{build_lattice, COORD_TOL};
    use crate::generators::gen_ideal_crystal;
    use crate::pointset::Vector;

    fn lat(rows: &[&[f64]]) -> Lattice {
        build_lattice(
            rows.iter().map(|r| Vector::from_slice(r)).collect(),
            COORD_TOL,
        )
        .unwrap()
    }

    fn z2(radius: f64) -> WindowedSet {
        gen_ideal_crystal(
            &[[1.0, 0.0].into(), [0.0, 1.0].into()],
            &[Point::zeros(2)],
            radius,
        )
        .unwrap()
    }

    #[test]
    fn residues_of_square_lattice() {
        let s = z2(10.0);
        assert_eq!(
            residues(&s, &lat(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap(),
            vec![Point::zeros(2)]
        );

        let f = residues(&s, &lat(&[&[2.0, 0.0], &[0.0, 2.0]])).unwrap();
        let expected: Vec<Point> = vec![
            [0.0, 0.0].into(),
            [0.0, 1.0].into(),
            [1.0, 0.0].into(),
            [1.0, 1.0].into(),
        ];
        assert_eq!(f, expected);
    }

    #[test]
    fn residues_of_decorated_line() {
        let s = gen_ideal_crystal(&[[2.0].into()], &[[0.0].into(), [0.5].into()], 40.0).unwrap();
        let f = residues(&s, &lat(&[&[2.0]])).unwrap();
        assert_eq!(f, vec![Point::from([0.0]), Point::from([0.5])]);
    }

    #[test]
    fn residues_need_a_large_enough_window() {
        let s = z2(1.5);
        assert!(matches!(
            residues(&s, &lat(&[&[2.0, 0.0], &[0.0, 2.0]])),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn square_lattice_decomposes_exactly() {
        let s = z2(20.0);
        let l = lat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let d = verify_decomposition(&s, &l, &[Point::zeros(2)], TOL_EXACT).unwrap();
        assert!(d.is_verified());
        // the 12 points with |x| = 20 lie outside R - tol
        assert_eq!(d.checked_in, s.len() - 12);
        assert!(d.max_residual < 1e-12);
    }

    #[test]
    fn spurious_residue_is_caught() {
        let s = z2(20.0);
        let l = lat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let d =
            verify_decomposition(&s, &l, &[Point::zeros(2), [0.5, 0.0].into()], TOL_EXACT).unwrap();
        assert!(d.coverage_in < 1.0);
        assert_eq!(d.coverage_out, 1.0);
        assert!(d
            .missing
            .iter()
            .any(|m| m.distance(&[0.5, 0.0].into()) < 1e-12));
    }

    #[test]
    fn missing_residue_is_caught() {
        let s = gen_ideal_crystal(&[[2.0].into()], &[[0.0].into(), [0.5].into()], 40.0).unwrap();
        let l = lat(&[&[2.0]]);
        let full = verify_decomposition(&s, &l, &[[0.0].into(), [0.5].into()], TOL_EXACT).unwrap();
        assert!(full.is_verified());
        let partial = verify_decomposition(&s, &l, &[[0.0].into()], TOL_EXACT).unwrap();
        assert_eq!(partial.coverage_in, 1.0);
        assert!(partial.coverage_out < 1.0);
    }
}
