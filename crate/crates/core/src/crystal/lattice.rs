//! Full-rank lattices spanned by period vectors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

use super::intlat::{hermite_normal_form, rationalize};
use crate::error::{Error, Result};
use crate::pointset::Vector;

/// Default integrality tolerance on lattice coordinates.
pub const COORD_TOL: f64 = 1e-6;

/// Relative singularity floor: `|det|` must exceed this times `∏ |T_j|`.
pub const DET_FLOOR_REL: f64 = 1e-6;

/// The lattice `{ n₁T₁ + … + n_pT_p : n ∈ ℤ^p }`.
#[derive(Debug, Clone)]
pub struct Lattice {
    basis: Vec<Vector>,
    det: f64,
    inv: DMatrix<f64>,
    coord_tol: f64,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis && self.coord_tol == other.coord_tol
    }
}

impl Serialize for Lattice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            basis: &'a [Vector],
            det: f64,
        }
        Repr {
            basis: &self.basis,
            det: self.det,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            basis: Vec<Vector>,
        }
        let repr = Repr::deserialize(d)?;
        build_lattice(repr.basis, COORD_TOL).map_err(serde::de::Error::custom)
    }
}

fn matrix_of(rows: &[Vector]) -> DMatrix<f64> {
    let p = rows.len();
    DMatrix::from_fn(p, p, |r, c| rows[r][c])
}

/// Construct the lattice spanned by `basis` (one vector per row).
///
/// Fails with `SingularBasis` unless `|det| > 1e−6 · ∏ |T_j|`.
pub fn build_lattice(basis: Vec<Vector>, coord_tol: f64) -> Result<Lattice> {
    let p = basis.len();
    if p == 0 {
        return Err(Error::Config("lattice basis is empty".into()));
    }
    if let Some(bad) = basis.iter().find(|b| b.dim() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: bad.dim(),
        });
    }
    if !(coord_tol > 0.0 && coord_tol < 0.5) {
        return Err(Error::Config(format!(
            "coord_tol must lie in (0, 0.5), got {coord_tol}"
        )));
    }
    let m = matrix_of(&basis);
    let det = m.determinant();
    let floor = DET_FLOOR_REL * basis.iter().map(Vector::norm).product::<f64>();
    if !(det.abs() > floor) || !det.is_finite() {
        return Err(Error::SingularBasis { det });
    }
    let inv = m.try_inverse().ok_or(Error::SingularBasis { det })?;
    Ok(Lattice {
        basis,
        det,
        inv,
        coord_tol,
    })
}

impl Lattice {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn coord_tol(&self) -> f64 {
        self.coord_tol
    }

    /// `Σ |T_j|`, the residue radius.
    pub fn basis_norm_sum(&self) -> f64 {
        self.basis.iter().map(Vector::norm).sum()
    }

    /// Real coordinates `n` with `x = Σ n_j T_j`.
    pub fn coordinates(&self, x: &Vector) -> Vec<f64> {
        let p = self.dim();
        (0..p)
            .map(|k| (0..p).map(|i| x[i] * self.inv[(i, k)]).sum())
            .collect()
    }

    /// Fractional coordinates in `[0, 1)`, with values within `coord_tol` of
    /// an integer snapped to 0.
    pub fn fractional_coordinates(&self, x: &Vector) -> Vec<f64> {
        self.coordinates(x)
            .into_iter()
            .map(|c| {
                let f = c - c.floor();
                if f <= self.coord_tol || 1.0 - f <= self.coord_tol {
                    0.0
                } else {
                    f
                }
            })
            .collect()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.coordinates(x)
            .iter()
            .all(|c| (c - c.round()).abs() <= self.coord_tol)
    }

    /// `Σ n_j T_j`.
    pub fn point(&self, n: &[i64]) -> Vector {
        let p = self.dim();
        let mut x = Vector::zeros(p);
        for (nj, t) in n.iter().zip(&self.basis) {
            let nj = *nj as f64;
            for (xk, tk) in x.coords_mut().iter_mut().zip(t.coords()) {
                *xk += nj * tk;
            }
        }
        x
    }

    /// Lattice point obtained by rounding the coordinates of `x`.
    pub fn nearest(&self, x: &Vector) -> Vector {
        let n: Vec<i64> = self
            .coordinates(x)
            .iter()
            .map(|c| c.round() as i64)
            .collect();
        self.point(&n)
    }

    /// Distance from `x` to its rounded lattice point. Exact whenever `x` is
    /// close to the lattice compared with its shortest vector.
    pub fn distance(&self, x: &Vector) -> f64 {
        x.distance(&self.nearest(x))
    }

    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }

    /// `|det(self)| / |det(other)|`, the index when `self ⊆ other`.
    pub fn index_in(&self, other: &Lattice) -> f64 {
        (self.det / other.det).abs()
    }

    /// Integer coordinate vectors of all lattice points within `radius` of
    /// `center` (plus a relative slack of 1e−9; callers filter exactly).
    pub fn points_in_ball(&self, center: &Vector, radius: f64) -> Vec<Vec<i64>> {
        let (reduced, transform) = lll_reduce(&self.basis);
        let p = self.dim();
        let (gs, mu) = gram_schmidt(&reduced);
        let gs_norm2: Vec<f64> = gs.iter().map(Vector::norm_squared).collect();
        let c: Vec<f64> = (0..p).map(|i| center.dot(&gs[i]) / gs_norm2[i]).collect();
        let r = radius * (1.0 + 1e-9) + 1e-12;
        let mut out = Vec::new();
        let mut m = vec![0i64; p];
        enumerate(p, r * r, &c, &mu, &gs_norm2, &mut m, &mut |m| {
            // back to coordinates in the original basis: n = m · U
            let n: Vec<i64> = (0..p)
                .map(|k| (0..p).map(|j| m[j] * transform[j][k]).sum())
                .collect();
            out.push(n);
        });
        out.sort();
        out
    }

    /// Shortest nonzero lattice vector length.
    pub fn shortest_vector_norm(&self) -> f64 {
        let bound = self
            .basis
            .iter()
            .map(Vector::norm)
            .fold(f64::INFINITY, f64::min);
        self.points_in_ball(&Vector::zeros(self.dim()), bound)
            .iter()
            .filter(|n| n.iter().any(|&x| x != 0))
            .map(|n| self.point(n).norm())
            .fold(bound, f64::min)
    }
}

/// Depth-first enumeration over the Gram–Schmidt layers, last coordinate
/// first (Fincke–Pohst).
fn enumerate(
    level: usize,
    budget: f64,
    c: &[f64],
    mu: &[Vec<f64>],
    gs_norm2: &[f64],
    m: &mut Vec<i64>,
    emit: &mut impl FnMut(&[i64]),
) {
    if level == 0 {
        emit(m);
        return;
    }
    let i = level - 1;
    let p = m.len();
    let shift: f64 = (i + 1..p).map(|j| m[j] as f64 * mu[j][i]).sum();
    let center = c[i] - shift;
    let half = (budget.max(0.0) / gs_norm2[i]).sqrt();
    let lo = (center - half).ceil() as i64;
    let hi = (center + half).floor() as i64;
    for v in lo..=hi {
        let dev = v as f64 - center;
        let used = dev * dev * gs_norm2[i];
        if used <= budget {
            m[i] = v;
            enumerate(i, budget - used, c, mu, gs_norm2, m, emit);
        }
    }
    m[i] = 0;
}

/// Gram–Schmidt vectors and coefficients `mu[j][i] = ⟨b_j, b*_i⟩ / |b*_i|²`.
fn gram_schmidt(basis: &[Vector]) -> (Vec<Vector>, Vec<Vec<f64>>) {
    let p = basis.len();
    let mut gs: Vec<Vector> = Vec::with_capacity(p);
    let mut mu = vec![vec![0.0; p]; p];
    for j in 0..p {
        let mut v = basis[j].clone();
        for i in 0..j {
            mu[j][i] = basis[j].dot(&gs[i]) / gs[i].norm_squared();
            v = &v - &gs[i].scale(mu[j][i]);
        }
        gs.push(v);
    }
    (gs, mu)
}

/// LLL reduction (δ = 3/4). Returns the reduced rows and the unimodular
/// transform `U` with `reduced = U · basis`.
pub(crate) fn lll_reduce(basis: &[Vector]) -> (Vec<Vector>, Vec<Vec<i64>>) {
    let p = basis.len();
    let mut b = basis.to_vec();
    let mut u: Vec<Vec<i64>> = (0..p)
        .map(|i| (0..p).map(|j| i64::from(i == j)).collect())
        .collect();
    let delta = 0.75;
    let mut k = 1;
    let mut guard = 0;
    while k < p && guard < 10_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (_, mu) = gram_schmidt(&b);
            let q = mu[k][j].round();
            if q != 0.0 {
                b[k] = &b[k] - &b[j].scale(q);
                let q = q as i64;
                for col in 0..p {
                    u[k][col] -= q * u[j][col];
                }
            }
        }
        let (gs, mu) = gram_schmidt(&b);
        let lhs = gs[k].norm_squared();
        let rhs = (delta - mu[k][k - 1] * mu[k][k - 1]) * gs[k - 1].norm_squared();
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    (b, u)
}

/// Result of extending a lattice by verified periods.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub lattice: Lattice,
    /// Number of periods that enlarged the lattice.
    pub extended: usize,
    /// Periods whose coordinates admit no rational fit; left out.
    pub dropped: Vec<Vector>,
}

/// Coordinates of `t` as `numerators / denominator` with the denominator at
/// most `max_denominator`.
pub fn rational_coordinates(
    lattice: &Lattice,
    t: &Vector,
    max_denominator: u32,
) -> Result<(Vec<i64>, i64)> {
    let coords = lattice.coordinates(t);
    let mut fracs = Vec::with_capacity(coords.len());
    for c in &coords {
        let f = rationalize(*c, i64::from(max_denominator), lattice.coord_tol)
            .ok_or(Error::NoRationalFit { max_denominator })?;
        fracs.push(f);
    }
    let den = fracs.iter().fold(1i64, |acc, &(_, d)| lcm(acc, d));
    if den > i64::from(max_denominator) {
        return Err(Error::NoRationalFit { max_denominator });
    }
    let nums = fracs.iter().map(|&(n, d)| n * (den / d)).collect();
    Ok((nums, den))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

/// Grow `lattice` to the group generated by it and `periods`.
///
/// Each period outside the lattice is written in lattice coordinates with a
/// common denominator `d ≤ max_denominator`; the generators `d·e_k` and the
/// numerators are brought to Hermite normal form, whose rows divided by `d`
/// give the new basis. Periods that fail to fit are retried after every
/// successful extension and reported as dropped if they never fit. An
/// extended basis is LLL-reduced, which leaves the group unchanged.
pub fn refine_lattice(
    lattice: &Lattice,
    periods: &[Vector],
    max_denominator: u32,
) -> Result<Refinement> {
    let mut current = lattice.clone();
    let mut pending: Vec<Vector> = periods.to_vec();
    let mut extended = 0;
    loop {
        let mut progress = false;
        let mut still = Vec::new();
        for t in pending {
            if current.contains(&t) {
                continue;
            }
            match rational_coordinates(&current, &t, max_denominator) {
                Ok((nums, den)) => {
                    current = extend(&current, &nums, den)?;
                    extended += 1;
                    progress = true;
                }
                Err(Error::NoRationalFit { .. }) => still.push(t),
                Err(e) => return Err(e),
            }
        }
        pending = still;
        if !progress || pending.is_empty() {
            break;
        }
    }
    if extended > 0 {
        let (reduced, _) = lll_reduce(current.basis());
        current = build_lattice(reduced, current.coord_tol)?;
    }
    Ok(Refinement {
        lattice: current,
        extended,
        dropped: pending,
    })
}

fn extend(lattice: &Lattice, nums: &[i64], den: i64) -> Result<Lattice> {
    let p = lattice.dim();
    let mut rows: Vec<Vec<i128>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| if i == j { i128::from(den) } else { 0 })
                .collect()
        })
        .collect();
    rows.push(nums.iter().map(|&n| i128::from(n)).collect());
    let h = hermite_normal_form(rows);
    debug_assert_eq!(h.len(), p);
    let basis: Vec<Vector> = h
        .iter()
        .map(|row| {
            let mut v = Vector::zeros(p);
            for (coef, t) in row.iter().zip(lattice.basis()) {
                let s = *coef as f64 / den as f64;
                for (vk, tk) in v.coords_mut().iter_mut().zip(t.coords()) {
                    *vk += s * tk;
                }
            }
            v
        })
        .collect();
    build_lattice(basis, lattice.coord_tol)
}
