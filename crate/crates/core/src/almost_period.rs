//! Almost periods on windows, snapping to exact periods, and exact-period
//! verification.
//!
//! A vector `τ` is an ε-almost period of a window when the core points
//! `|a| ≤ R − |τ| − ε` can be matched injectively to window points `b` with
//! `|a + τ − b| < ε`. Points translated past the window edge are excluded
//! from the core rather than counted as failures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::difference_vectors;
use crate::matching::maximum_matching;
use crate::pointset::{Point, Vector, WindowedSet, TOL_EQ};

/// Default tolerance for exact period checks.
pub const TOL_EXACT: f64 = 10.0 * TOL_EQ;

/// Largest core accepted by [`brute_force_almost_period`].
pub const BRUTE_FORCE_CORE_LIMIT: usize = 8;

/// Witness that `tau` is an `epsilon`-almost period of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostPeriodCertificate {
    pub tau: Vector,
    pub epsilon: f64,
    /// `(core point, window point)` index pairs, sorted by core index.
    pub matched: Vec<(usize, usize)>,
    pub core_radius: f64,
    pub max_displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub tau: Vector,
    pub epsilon: f64,
    pub core_size: usize,
    pub unmatched: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlmostPeriodVerdict {
    Accepted(AlmostPeriodCertificate),
    Rejected(Rejection),
}

impl AlmostPeriodVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, AlmostPeriodVerdict::Accepted(_))
    }

    pub fn certificate(&self) -> Option<&AlmostPeriodCertificate> {
        match self {
            AlmostPeriodVerdict::Accepted(c) => Some(c),
            AlmostPeriodVerdict::Rejected(_) => None,
        }
    }
}

/// Core of the almost-period test, checked against the preconditions.
fn almost_period_core(set: &WindowedSet, tau: &Vector, epsilon: f64) -> Result<(f64, Vec<usize>)> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if tau.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: tau.dim(),
        });
    }
    if tau.norm() + epsilon >= set.radius() {
        return Err(Error::WindowTooSmall(format!(
            "|tau| + epsilon = {} reaches the window radius {}",
            tau.norm() + epsilon,
            set.radius()
        )));
    }
    let core_radius = set.radius() - tau.norm() - epsilon;
    let core: Vec<usize> = set
        .norms()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n <= core_radius)
        .map(|(i, _)| i)
        .collect();
    if core.is_empty() {
        return Err(Error::WindowTooSmall(format!(
            "no points within core radius {core_radius}"
        )));
    }
    Ok((core_radius, core))
}

/// Window points strictly within `epsilon` of `q`, nearest first.
fn targets(set: &WindowedSet, q: &Point, epsilon: f64) -> SmallVec<[usize; 2]> {
    let mut hits: SmallVec<[(f64, usize); 2]> = SmallVec::new();
    let eps2 = epsilon * epsilon;
    set.grid()
        .for_each_within(set.points(), q, epsilon, |j, d2| {
            if d2 < eps2 {
                hits.push((d2, j));
            }
        });
    if hits.len() > 1 {
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    hits.into_iter().map(|(_, j)| j).collect()
}

/// Decide whether `tau` is an `epsilon`-almost period of the window.
///
/// Builds the bipartite graph from core points to window points within
/// `epsilon` of their translate and accepts iff a matching saturates the
/// core. When `epsilon` is below half the minimum separation every vertex has
/// degree at most one and the matching is a plain lookup.
pub fn is_almost_period(
    set: &WindowedSet,
    tau: &Vector,
    epsilon: f64,
) -> Result<AlmostPeriodVerdict> {
    let (core_radius, core) = almost_period_core(set, tau, epsilon)?;
    let points = set.points();
    let adj: Vec<SmallVec<[usize; 2]>> = core
        .iter()
        .map(|&i| targets(set, &(&points[i] + tau), epsilon))
        .collect();
    let matching = maximum_matching(&adj, points.len());
    let unmatched = matching.iter().filter(|m| m.is_none()).count();
    if unmatched > 0 {
        return Ok(AlmostPeriodVerdict::Rejected(Rejection {
            tau: tau.clone(),
            epsilon,
            core_size: core.len(),
            unmatched,
        }));
    }
    let mut max_displacement: f64 = 0.0;
    let matched: Vec<(usize, usize)> = core
        .iter()
        .zip(&matching)
        .map(|(&i, m)| {
            let j = m.expect("saturating matching");
            max_displacement = max_displacement.max((&points[i] + tau).distance(&points[j]));
            (i, j)
        })
        .collect();
    Ok(AlmostPeriodVerdict::Accepted(AlmostPeriodCertificate {
        tau: tau.clone(),
        epsilon,
        matched,
        core_radius,
        max_displacement,
    }))
}

/// Result of [`scan_isolated_period`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum IsolatedScan {
    NotAlmostPeriod,
    /// Accepted at `epsilon`; `verified_radius` is set when `tau` is also an
    /// exact period at `tol_exact`.
    Accepted {
        core_radius: f64,
        max_displacement: f64,
        verified_radius: Option<f64>,
    },
}

/// Points per work unit of [`scan_isolated_periods`].
const SCAN_CHUNK: usize = 16_384;

#[derive(Debug, Clone, Copy)]
struct ScanState {
    core_radius: f64,
    exact_radius: f64,
    outer: f64,
    dead: bool,
    core_size: usize,
    max_d2: f64,
    exact: bool,
}

impl ScanState {
    fn merge(&mut self, other: &ScanState) {
        self.dead |= other.dead;
        self.core_size += other.core_size;
        self.max_d2 = self.max_d2.max(other.max_d2);
        self.exact &= other.exact;
    }
}

/// [`is_almost_period`] at `epsilon` and [`verify_exact_period`] at
/// `tol_exact` for every translation in `taus`, in one pass over the window.
///
/// Only valid when `2·epsilon` is below the minimum separation: every
/// translate then has at most one target, so the matching reduces to a
/// lookup. Points are visited in grid-cell order so that consecutive
/// queries land in neighboring cells; the outcome does not depend on the
/// order.
pub(crate) fn scan_isolated_periods(
    set: &WindowedSet,
    taus: &[Vector],
    epsilon: f64,
    tol_exact: f64,
) -> Result<Vec<IsolatedScan>> {
    if !(epsilon > 0.0 && tol_exact > 0.0) {
        return Err(Error::Config(format!(
            "tolerances must be positive, got {epsilon} and {tol_exact}"
        )));
    }
    if let Some(tau) = taus.iter().find(|t| t.dim() != set.dim()) {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: tau.dim(),
        });
    }
    let initial: Vec<ScanState> = taus
        .iter()
        .map(|tau| {
            let norm = tau.norm();
            let core_radius = set.radius() - norm - epsilon;
            let exact_radius = set.radius() - norm - tol_exact;
            ScanState {
                core_radius,
                exact_radius,
                outer: core_radius.max(exact_radius),
                dead: norm + epsilon >= set.radius(),
                core_size: 0,
                max_d2: 0.0,
                exact: true,
            }
        })
        .collect();
    let grid = set.grid();
    let order: Vec<u32> = match grid.cell_order() {
        Some(items) => items.to_vec(),
        None => (0..set.len() as u32).collect(),
    };
    let partials: Vec<Vec<ScanState>> = order
        .par_chunks(SCAN_CHUNK)
        .map(|chunk| scan_chunk(set, taus, &initial, chunk, epsilon, tol_exact))
        .collect();
    let mut states = initial;
    for partial in &partials {
        for (s, p) in states.iter_mut().zip(partial) {
            s.merge(p);
        }
    }
    Ok(states
        .into_iter()
        .map(|s| {
            if s.dead || s.core_size == 0 {
                IsolatedScan::NotAlmostPeriod
            } else {
                IsolatedScan::Accepted {
                    core_radius: s.core_radius,
                    max_displacement: s.max_d2.sqrt(),
                    verified_radius: s.exact.then_some(s.exact_radius),
                }
            }
        })
        .collect())
}

fn scan_chunk(
    set: &WindowedSet,
    taus: &[Vector],
    initial: &[ScanState],
    chunk: &[u32],
    epsilon: f64,
    tol_exact: f64,
) -> Vec<ScanState> {
    let (eps2, tol2) = (epsilon * epsilon, tol_exact * tol_exact);
    let points = set.points();
    let norms = set.norms();
    let grid = set.grid();
    let mut states: Vec<ScanState> = initial
        .iter()
        .map(|s| ScanState {
            core_size: 0,
            max_d2: 0.0,
            exact: true,
            ..*s
        })
        .collect();
    let mut live: Vec<usize> = (0..taus.len()).filter(|&k| !states[k].dead).collect();
    for &i in chunk {
        let (a, n) = (&points[i as usize], norms[i as usize]);
        let mut died = false;
        for &k in &live {
            let s = &mut states[k];
            if n > s.outer {
                continue;
            }
            let q = a + &taus[k];
            let mut best = f64::INFINITY;
            grid.for_each_within(points, &q, epsilon, |_, d2| best = best.min(d2));
            if n <= s.core_radius {
                if !(best < eps2) {
                    s.dead = true;
                    died = true;
                    continue;
                }
                s.core_size += 1;
                s.max_d2 = s.max_d2.max(best);
            }
            if s.exact && n <= s.exact_radius && !(best <= tol2) {
                s.exact = false;
            }
        }
        if died {
            live.retain(|&k| !states[k].dead);
            if live.is_empty() {
                break;
            }
        }
    }
    states
}

/// The snap target of `tau`: `c − a` for the anchor `a` and the unique point
/// `c` within `epsilon / 2` of `a + tau`.
pub(crate) fn snap_target(set: &WindowedSet, tau: &Vector, epsilon: f64) -> Option<Vector> {
    let anchor = &set.points()[set.nearest_to_origin()?];
    match targets(set, &(anchor + tau), epsilon / 2.0).as_slice() {
        [c] => Some(&set.points()[*c] - anchor),
        _ => None,
    }
}

/// Exhaustive reference for [`is_almost_period`]: tries every injection of
/// the core into the window.
pub fn brute_force_almost_period(set: &WindowedSet, tau: &Vector, epsilon: f64) -> Result<bool> {
    let (_, core) = almost_period_core(set, tau, epsilon)?;
    if core.len() > BRUTE_FORCE_CORE_LIMIT {
        return Err(Error::CoreTooLarge {
            size: core.len(),
            limit: BRUTE_FORCE_CORE_LIMIT,
        });
    }
    let points = set.points();
    let images: Vec<Point> = core.iter().map(|&i| &points[i] + tau).collect();
    let mut used = vec![false; points.len()];

    fn assign(
        k: usize,
        images: &[Point],
        points: &[Point],
        epsilon: f64,
        used: &mut [bool],
    ) -> bool {
        if k == images.len() {
            return true;
        }
        for j in 0..points.len() {
            if !used[j] && images[k].distance(&points[j]) < epsilon {
                used[j] = true;
                if assign(k + 1, images, points, epsilon, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }

    Ok(assign(0, &images, points, epsilon, &mut used))
}

/// Candidate almost periods: difference vectors with `r_min ≤ |v| ≤ r_max`,
/// sorted by length, then lexicographically.
///
/// Every exact period is a difference vector, and every ε/2-almost period
/// lies within ε/2 of one, so no grid scan is needed. `epsilon` is the
/// tolerance the candidates are meant to be tested at; it is validated but
/// does not prune the list.
pub fn candidate_almost_periods(
    set: &WindowedSet,
    epsilon: f64,
    r_min: f64,
    r_max: f64,
) -> Result<Vec<Vector>> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::Config(format!(
            "candidate annulus needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if r_max > set.radius() / 2.0 {
        return Err(Error::Config(format!(
            "r_max = {r_max} exceeds half the window radius {}",
            set.radius()
        )));
    }
    let diffs = difference_vectors(set, r_max)?;
    let mut out: Vec<(f64, Vector)> = diffs
        .vectors()
        .iter()
        .map(|v| (v.norm(), v.clone()))
        .filter(|(n, _)| *n >= r_min && *n <= r_max)
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.lex_cmp(&b.1)));
    Ok(out.into_iter().map(|(_, v)| v).collect())
}

/// The candidates that can snap: `c − a` for window points `c`, where `a` is
/// the point nearest the origin, with `r_min ≤ |c − a| ≤ r_max`. Same order as
/// [`candidate_almost_periods`].
///
/// A candidate `τ` snaps only if some `c` has `|a + τ − c| < ε/2`, and then
/// `τ` and `c − a` are the same difference vector because distinct ones are
/// at least `2ε` apart.
pub fn anchored_candidates(
    set: &WindowedSet,
    epsilon: f64,
    r_min: f64,
    r_max: f64,
) -> Result<Vec<Vector>> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::Config(format!(
            "candidate annulus needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if r_max > set.radius() / 2.0 {
        return Err(Error::Config(format!(
            "r_max = {r_max} exceeds half the window radius {}",
            set.radius()
        )));
    }
    let a = match set.nearest_to_origin() {
        Some(i) => &set.points()[i],
        None => return Err(Error::EmptyWindow),
    };
    let mut out: Vec<(f64, Vector)> = Vec::new();
    set.grid().for_each_within(set.points(), a, r_max, |j, d2| {
        let n = d2.sqrt();
        if n >= r_min && n <= r_max {
            out.push((n, &set.points()[j] - a));
        }
    });
    for entry in out.iter_mut() {
        entry.0 = entry.1.norm();
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.lex_cmp(&y.1)));
    Ok(out.into_iter().map(|(_, v)| v).collect())
}

/// An exact translation symmetry of the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    #[serde(rename = "T")]
    pub t: Vector,
    pub verified_radius: f64,
    pub anchor: Point,
    pub source_tau: Vector,
}

/// Point whose translate is missing from the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureWitness {
    pub index: usize,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PeriodCheck {
    Verified { verified_radius: f64 },
    Failed(FailureWitness),
}

impl PeriodCheck {
    pub fn is_verified(&self) -> bool {
        matches!(self, PeriodCheck::Verified { .. })
    }
}

/// Check that `a + T` is a window point (within `tol_exact`) for every `a`
/// with `|a| ≤ R − |T| − tol_exact`. Reports the first offending point in
/// canonical order.
pub fn verify_exact_period(set: &WindowedSet, t: &Vector, tol_exact: f64) -> Result<PeriodCheck> {
    if !(tol_exact > 0.0) {
        return Err(Error::Config(format!(
            "tol_exact must be positive, got {tol_exact}"
        )));
    }
    if t.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: t.dim(),
        });
    }
    if t.norm() >= set.radius() {
        return Err(Error::WindowTooSmall(format!(
            "|T| = {} reaches the window radius {}",
            t.norm(),
            set.radius()
        )));
    }
    let verified_radius = set.radius() - t.norm() - tol_exact;
    for (index, (a, &n)) in set.points().iter().zip(set.norms()).enumerate() {
        if n > verified_radius {
            continue;
        }
        if set.find_near(&(a + t), tol_exact).is_none() {
            return Ok(PeriodCheck::Failed(FailureWitness {
                index,
                point: a.clone(),
            }));
        }
    }
    Ok(PeriodCheck::Verified { verified_radius })
}

/// Snap an almost period to the exact period `T = c − a`, where `a` is the
/// point nearest the origin and `c` the unique point with `|a + τ − c| < ε/2`.
pub fn snap_to_period(
    set: &WindowedSet,
    tau: &Vector,
    epsilon: f64,
    tol_exact: f64,
) -> Result<Period> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if tau.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: tau.dim(),
        });
    }
    let anchor_idx = set.nearest_to_origin().ok_or(Error::EmptyWindow)?;
    let anchor = &set.points()[anchor_idx];
    let hits = targets(set, &(anchor + tau), epsilon / 2.0);
    let c = match hits.as_slice() {
        [] => return Err(Error::NoSnapTarget),
        [c] => &set.points()[*c],
        _ => return Err(Error::AmbiguousSnap),
    };
    let t = c - anchor;
    match verify_exact_period(set, &t, tol_exact)? {
        PeriodCheck::Verified { verified_radius } => Ok(Period {
            t,
            verified_radius,
            anchor: anchor.clone(),
            source_tau: tau.clone(),
        }),
        PeriodCheck::Failed(_) => Err(Error::NotExactPeriod),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_ideal_crystal;

    fn line_crystal(period: f64, residues: &[f64], radius: f64) -> WindowedSet {
        let f: Vec<Point> = residues.iter().map(|&r| Point::from([r])).collect();
        gen_ideal_crystal(&[[period].into()], &f, radius).unwrap()
    }

    fn line(coords: &[f64], radius: f64) -> WindowedSet {
        let pts = coords.iter().map(|&c| Point::from([c])).collect();
        WindowedSet::new(pts, 1, Some(radius), "").unwrap()
    }

    fn v1(x: f64) -> Vector {
        Vector::from([x])
    }

    #[test]
    fn zero_translation_is_accepted_with_identity_matching() {
        let s = line_crystal(1.0, &[0.0, 0.3], 10.0);
        let cert = is_almost_period(&s, &v1(0.0), 0.2).unwrap();
        let cert = cert.certificate().unwrap();
        assert_eq!(cert.max_displacement, 0.0);
        assert!(cert.matched.iter().all(|(i, j)| i == j));
    }

    #[test]
    fn integers_accept_unit_shift_and_reject_half_shift() {
        let z = line_crystal(1.0, &[0.0], 10.0);
        assert!(is_almost_period(&z, &v1(1.0), 0.1).unwrap().is_accepted());
        match is_almost_period(&z, &v1(0.5), 0.1).unwrap() {
            AlmostPeriodVerdict::Rejected(r) => assert_eq!(r.unmatched, r.core_size),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_core_is_an_error() {
        let s = line(&[9.0], 10.0);
        assert!(matches!(
            is_almost_period(&s, &v1(1.0), 0.5),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn brute_force_examples() {
        let s = line(&[0.0, 1.0], 3.0);
        assert!(brute_force_almost_period(&s, &v1(0.0), 0.1).unwrap());
        // core radius 3 - 1 - 0.5 = 1.5 holds both points; 1 + 1 = 2 has no target.
        assert!(!brute_force_almost_period(&s, &v1(1.0), 0.5).unwrap());
        let s = line(&[0.0, 1.0], 2.0);
        // core radius 0.5 holds only 0, which maps to 1
        assert!(brute_force_almost_period(&s, &v1(1.0), 0.5).unwrap());

        let s = line(&[0.0, 0.4], 3.0);
        let decision = brute_force_almost_period(&s, &v1(0.2), 0.25).unwrap();
        assert_eq!(
            decision,
            is_almost_period(&s, &v1(0.2), 0.25).unwrap().is_accepted()
        );
    }

    #[test]
    fn brute_force_limits_core_size() {
        let z = line_crystal(1.0, &[0.0], 10.0);
        assert!(matches!(
            brute_force_almost_period(&z, &v1(1.0), 0.1),
            Err(Error::CoreTooLarge { .. })
        ));
    }

    #[test]
    fn candidates_in_square_lattice() {
        let z2 = gen_ideal_crystal(
            &[[1.0, 0.0].into(), [0.0, 1.0].into()],
            &[Point::zeros(2)],
            10.0,
        )
        .unwrap();
        let c = candidate_almost_periods(&z2, 0.5, 0.5, 2.5).unwrap();
        // oracle: enumerate integer vectors of norm in [0.5, 2.5]
        let mut expected = Vec::new();
        for x in -3i32..=3 {
            for y in -3i32..=3 {
                let n = f64::from(x * x + y * y).sqrt();
                if (0.5..=2.5).contains(&n) {
                    expected.push((n, Point::from([f64::from(x), f64::from(y)])));
                }
            }
        }
        expected.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.lex_cmp(&b.1)));
        let expected: Vec<Point> = expected.into_iter().map(|(_, p)| p).collect();
        assert_eq!(c.len(), 20);
        assert_eq!(c, expected);
        assert!(candidate_almost_periods(&z2, 0.5, 3.0, 2.0).is_err());
    }

    #[test]
    fn anchored_candidates_are_difference_vectors_from_the_anchor() {
        let s = line_crystal(2.0, &[0.0, 0.5], 40.0);
        let all = candidate_almost_periods(&s, 0.25, 0.25, 6.0).unwrap();
        let anchored = anchored_candidates(&s, 0.25, 0.25, 6.0).unwrap();
        assert!(anchored
            .iter()
            .all(|v| all.iter().any(|w| w.distance(v) < 1e-6)));
        let expect: Vec<f64> = vec![
            0.5, -1.5, -2.0, 2.0, 2.5, -3.5, -4.0, 4.0, 4.5, -5.5, -6.0, 6.0,
        ];
        let got: Vec<f64> = anchored.iter().map(|v| v[0]).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn snap_examples() {
        let z = line_crystal(1.0, &[0.0], 20.0);
        let p = snap_to_period(&z, &v1(1.1), 0.5, TOL_EXACT).unwrap();
        assert_eq!(p.t, v1(1.0));
        assert_eq!(p.anchor, v1(0.0));

        let s = line_crystal(2.0, &[0.0, 0.5], 40.0);
        let p = snap_to_period(&s, &v1(2.05), 0.3, TOL_EXACT).unwrap();
        assert_eq!(p.t, v1(2.0));

        assert_eq!(
            snap_to_period(&s, &v1(1.0), 0.3, TOL_EXACT),
            Err(Error::NoSnapTarget)
        );
        // 0.5 and 2.0 both lie within 1.0 of 0 + 1.25
        assert_eq!(
            snap_to_period(&s, &v1(1.25), 2.0, TOL_EXACT),
            Err(Error::AmbiguousSnap)
        );
        // snapping to 0.5 succeeds but 0.5 is not a period
        assert_eq!(
            snap_to_period(&s, &v1(0.5), 0.3, TOL_EXACT),
            Err(Error::NotExactPeriod)
        );
    }

    #[test]
    fn verification_examples() {
        let z2 = gen_ideal_crystal(
            &[[1.0, 0.0].into(), [0.0, 1.0].into()],
            &[Point::zeros(2)],
            10.0,
        )
        .unwrap();
        assert!(
            verify_exact_period(&z2, &Point::from([1.0, 0.0]), TOL_EXACT)
                .unwrap()
                .is_verified()
        );

        let s = line_crystal(2.0, &[0.0, 0.5], 40.0);
        match verify_exact_period(&s, &v1(1.0), TOL_EXACT).unwrap() {
            // canonical order: -40 and -39.5 fall outside the core, -38 is first
            PeriodCheck::Failed(w) => assert_eq!(w.point, v1(-38.0)),
            other => panic!("{other:?}"),
        }
        match verify_exact_period(&s, &v1(2.0), TOL_EXACT).unwrap() {
            PeriodCheck::Verified { verified_radius } => {
                assert!((verified_radius - (38.0 - TOL_EXACT)).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn isolated_scan_agrees_with_the_two_step_test() {
        let s = gen_ideal_crystal(
            &[[1.0, 0.0].into(), [0.2, 1.1].into()],
            &[[0.0, 0.0].into(), [0.31, 0.4].into()],
            12.0,
        )
        .unwrap();
        let (eps, tol) = (0.06, TOL_EXACT);
        let taus = anchored_candidates(&s, eps, 0.1, 5.0).unwrap();
        let scans = scan_isolated_periods(&s, &taus, eps, tol).unwrap();
        assert_eq!(scans.len(), taus.len());
        for (tau, scan) in taus.into_iter().zip(scans) {
            let two_step = is_almost_period(&s, &tau, eps).unwrap();
            match (scan, two_step.certificate()) {
                (IsolatedScan::NotAlmostPeriod, None) => {}
                (
                    IsolatedScan::Accepted {
                        core_radius,
                        max_displacement,
                        verified_radius,
                    },
                    Some(c),
                ) => {
                    assert_eq!(core_radius, c.core_radius);
                    assert_eq!(max_displacement, c.max_displacement);
                    let exact = verify_exact_period(&s, &tau, tol).unwrap();
                    match exact {
                        PeriodCheck::Verified { verified_radius: r } => {
                            assert_eq!(verified_radius, Some(r))
                        }
                        PeriodCheck::Failed(_) => assert_eq!(verified_radius, None),
                    }
                }
                (scan, cert) => panic!("{tau}: scan {scan:?} vs {:?}", cert.is_some()),
            }
        }
    }

    #[test]
    fn snap_target_of_an_anchored_candidate_is_itself() {
        let s = line_crystal(2.0, &[0.0, 0.5], 10.0);
        for tau in anchored_candidates(&s, 0.1, 0.25, 4.0).unwrap() {
            assert_eq!(snap_target(&s, &tau, 0.1), Some(tau));
        }
        assert_eq!(snap_target(&s, &v1(1.0), 0.1), None);
    }
}
