//! Integer arithmetic for lattice refinement: row-style Hermite normal form
//! and continued-fraction rationalization.

/// Best rational approximation `num / den` of `x` with `den ≤ max_den`,
/// taken from the continued-fraction convergents, provided it lies within
/// `tol` of `x`.
pub(crate) fn rationalize(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h_prev, mut h) = (0i64, 1i64);
    let (mut k_prev, mut k) = (1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let h_next = a.checked_mul(h)?.checked_add(h_prev)?;
        let k_next = a.checked_mul(k)?.checked_add(k_prev)?;
        if k_next > max_den {
            return None;
        }
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);
        if (x - h as f64 / k as f64).abs() <= tol {
            return Some((h, k));
        }
        let frac = rest - rest.floor();
        if frac < 1e-15 {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

/// Row-style Hermite normal form of an integer matrix.
///
/// Returns the nonzero rows of the echelon form: pivots are positive and the
/// entries above each pivot are reduced into `[0, pivot)`. The rows span the
/// same integer row lattice as the input.
pub(crate) fn hermite_normal_form(mut rows: Vec<Vec<i128>>) -> Vec<Vec<i128>> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivot = 0;
    for col in 0..ncols {
        if pivot == rows.len() {
            break;
        }
        // Euclid on the column: repeatedly reduce by the smallest nonzero entry.
        while let Some(best) = (pivot..rows.len())
            .filter(|&i| rows[i][col] != 0)
            .min_by_key(|&i| rows[i][col].abs())
        {
            rows.swap(pivot, best);
            let mut clean = true;
            for i in pivot + 1..rows.len() {
                if rows[i][col] != 0 {
                    let q = rows[i][col] / rows[pivot][col];
                    sub_multiple(&mut rows, i, pivot, q);
                    if rows[i][col] != 0 {
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        if rows[pivot][col] == 0 {
            continue;
        }
        if rows[pivot][col] < 0 {
            for v in rows[pivot].iter_mut() {
                *v = -*v;
            }
        }
        let p = rows[pivot][col];
        for i in 0..pivot {
            let q = rows[i][col].div_euclid(p);
            sub_multiple(&mut rows, i, pivot, q);
        }
        pivot += 1;
    }
    rows.truncate(pivot);
    rows
}

fn sub_multiple(rows: &mut [Vec<i128>], target: usize, source: usize, q: i128) {
    if q == 0 {
        return;
    }
    let (src, dst) = if source < target {
        let (a, b) = rows.split_at_mut(target);
        (&a[source], &mut b[0])
    } else {
        let (a, b) = rows.split_at_mut(source);
        (&b[0], &mut a[target])
    };
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d -= q * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationalize_simple_fractions() {
        assert_eq!(rationalize(0.5, 64, 1e-9), Some((1, 2)));
        assert_eq!(rationalize(-1.0 / 3.0, 64, 1e-9), Some((-1, 3)));
        assert_eq!(rationalize(3.0, 64, 1e-9), Some((3, 1)));
        assert_eq!(rationalize(7.0 / 64.0 + 1e-13, 64, 1e-9), Some((7, 64)));
        assert_eq!(rationalize(1.0 / 137.0, 64, 1e-9), None);
        assert_eq!(rationalize(std::f64::consts::SQRT_2, 64, 1e-9), None);
    }

    #[test]
    fn hnf_checkerboard() {
        let h = hermite_normal_form(vec![vec![2, 0], vec![0, 2], vec![1, 1]]);
        assert_eq!(h, vec![vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn hnf_of_one_dimensional_generators_is_gcd() {
        let h = hermite_normal_form(vec![vec![12], vec![-18], vec![30]]);
        assert_eq!(h, vec![vec![6]]);
    }

    #[test]
    fn hnf_preserves_determinant_up_to_sign() {
        let h = hermite_normal_form(vec![vec![3, 1, 0], vec![1, 4, 2], vec![0, 2, 5]]);
        let det = h[0][0] * h[1][1] * h[2][2];
        // det of the input is 3(20-4) - 1(5-0) = 43
        assert_eq!(det, 43);
        for (i, row) in h.iter().enumerate() {
            for j in 0..i {
                assert_eq!(row[j], 0);
            }
        }
    }
}
