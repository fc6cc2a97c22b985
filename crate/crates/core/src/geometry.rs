//! Difference sets, the finite-type gap and the denseness radius.
//!
//! These are the two scale parameters every later stage depends on: the
//! radius `D` within which every point has a neighbor, and the tolerance `ε`
//! that separates distinct short difference vectors.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::grid::min_pair_distance;
use crate::pointset::{Vector, WindowedSet, TOL_EQ};

/// Distinct difference vectors `a − b` of bounded length, with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSet {
    vectors: Vec<Vector>,
    multiplicity: Vec<usize>,
    cutoff: f64,
}

impl DifferenceSet {
    /// Vectors in canonical lexicographic order.
    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Number of ordered pairs realizing the stored vector within `TOL_EQ` of `v`.
    pub fn multiplicity(&self, v: &Vector) -> usize {
        self.vectors
            .iter()
            .position(|u| u.distance(v) <= TOL_EQ)
            .map_or(0, |i| self.multiplicity[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vector, usize)> {
        self.vectors.iter().zip(self.multiplicity.iter().copied())
    }
}

/// Incremental merging of vectors that agree within `TOL_EQ`.
///
/// Buckets are much coarser than the tolerance, so almost every insertion
/// probes a single bucket; neighbours are probed only for coordinates lying
/// within `TOL_EQ` of a bucket face.
struct VectorMerger {
    bucket: f64,
    buckets: FxHashMap<SmallVec<[i64; 4]>, SmallVec<[u32; 2]>>,
    reps: Vec<Vector>,
    counts: Vec<usize>,
}

impl VectorMerger {
    fn new() -> Self {
        VectorMerger {
            bucket: 1000.0 * TOL_EQ,
            buckets: FxHashMap::default(),
            reps: Vec::new(),
            counts: Vec::new(),
        }
    }

    fn insert(&mut self, v: Vector) {
        let dim = v.dim();
        let scaled: SmallVec<[f64; 4]> = v.coords().iter().map(|c| c / self.bucket).collect();
        let home: SmallVec<[i64; 4]> = scaled.iter().map(|s| s.floor() as i64).collect();
        let slack = TOL_EQ / self.bucket;
        let mut offsets: SmallVec<[SmallVec<[i64; 2]>; 4]> = SmallVec::new();
        for s in &scaled {
            let frac = s - s.floor();
            let mut o: SmallVec<[i64; 2]> = smallvec::smallvec![0];
            if frac <= slack {
                o.push(-1);
            }
            if 1.0 - frac <= slack {
                o.push(1);
            }
            offsets.push(o);
        }
        let mut choice: SmallVec<[usize; 4]> = smallvec::smallvec![0; dim];
        loop {
            let key: SmallVec<[i64; 4]> =
                (0..dim).map(|k| home[k] + offsets[k][choice[k]]).collect();
            if let Some(ids) = self.buckets.get(&key) {
                if let Some(&id) = ids
                    .iter()
                    .find(|&&id| self.reps[id as usize].distance(&v) <= TOL_EQ)
                {
                    self.counts[id as usize] += 1;
                    return;
                }
            }
            let mut k = 0;
            loop {
                if k == dim {
                    let id = self.reps.len() as u32;
                    self.buckets.entry(home).or_default().push(id);
                    self.reps.push(v);
                    self.counts.push(1);
                    return;
                }
                choice[k] += 1;
                if choice[k] < offsets[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }
}

/// All differences `a − b` with `a, b ∈ S` and `|a − b| ≤ cutoff`, merged
/// within `TOL_EQ`.
///
/// The result is symmetric under negation and contains the zero vector with
/// multiplicity `|S|`.
pub fn difference_vectors(set: &WindowedSet, cutoff: f64) -> Result<DifferenceSet> {
    if !(cutoff > 0.0) {
        return Err(Error::Config(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    if set.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let points = set.points();
    let grid = set.grid();
    let mut merger = VectorMerger::new();
    let mut neighbors = Vec::new();
    for (i, a) in points.iter().enumerate() {
        neighbors.clear();
        grid.for_each_within(points, a, cutoff, |j, _| {
            if j != i {
                neighbors.push(j);
            }
        });
        neighbors.sort_unstable();
        for &j in &neighbors {
            let v = &points[j] - a;
            // Only one orientation is merged; negatives are mirrored below so
            // the symmetry is exact.
            if v.is_positive_within(TOL_EQ) {
                merger.insert(v);
            }
        }
    }
    let mut entries: Vec<(Vector, usize)> = Vec::with_capacity(2 * merger.reps.len() + 1);
    entries.push((Vector::zeros(set.dim()), points.len()));
    for (v, c) in merger.reps.into_iter().zip(merger.counts) {
        entries.push((-&v, c));
        entries.push((v, c));
    }
    entries.sort_by(|a, b| a.0.lex_cmp(&b.0));
    let (vectors, multiplicity) = entries.into_iter().unzip();
    Ok(DifferenceSet {
        vectors,
        multiplicity,
        cutoff,
    })
}

/// Largest nearest-neighbor distance over the core `|a| ≤ R − core_margin`.
///
/// Neighbors are drawn from the whole window so that truncation at the
/// boundary cannot inflate the result.
pub fn denseness_radius(set: &WindowedSet, core_margin: f64) -> Result<f64> {
    if !(core_margin >= 0.0) {
        return Err(Error::Config(format!(
            "core margin must be non-negative, got {core_margin}"
        )));
    }
    if set.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: set.len(),
        });
    }
    let core_radius = set.radius() - core_margin;
    let points = set.points();
    let grid = set.grid();
    let mut d: Option<f64> = None;
    for (i, a) in points.iter().enumerate() {
        if a.norm() > core_radius {
            continue;
        }
        if let Some((_, dist)) = grid.nearest_excluding(points, a, i) {
            d = Some(d.map_or(dist, |m| m.max(dist)));
        }
    }
    d.ok_or(Error::MarginTooLarge {
        margin: core_margin,
        radius: set.radius(),
    })
}

/// The finite-type tolerance and the quantities it is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeGapReport {
    pub epsilon: f64,
    /// Minimum distance between distinct difference vectors of length ≤ D + 1.
    /// Infinite when no two points are that close.
    pub gap: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub pair_count: usize,
}

/// Tolerance from half the gap of the difference set at cutoff `D + 1`.
///
/// `ε = min(1, g) / 2`, which also keeps `ε` below the minimum separation.
pub fn finite_type_gap(set: &WindowedSet, d: f64) -> Result<TypeGapReport> {
    if !(d > 0.0) {
        return Err(Error::Config(format!(
            "denseness radius must be positive, got {d}"
        )));
    }
    let cutoff = d + 1.0;
    let diffs = difference_vectors(set, cutoff)?;
    let gap = min_pair_distance(diffs.vectors(), set.dim(), cutoff);
    if gap <= 2.0 * TOL_EQ {
        return Err(Error::DegenerateGap { gap, cutoff });
    }
    Ok(TypeGapReport {
        epsilon: gap.min(1.0) / 2.0,
        gap,
        d,
        pair_count: diffs.len(),
    })
}

/// Largest number of points in a closed ball of radius `r` centred at a point
/// of the core `|a| ≤ R − r`.
pub fn max_ball_count(set: &WindowedSet, r: f64) -> usize {
    let points = set.points();
    let grid = set.grid();
    points
        .iter()
        .filter(|a| a.norm() <= set.radius() - r)
        .map(|a| {
            let mut n = 0;
            grid.for_each_within(points, a, r, |_, _| n += 1);
            n
        })
        .max()
        .unwrap_or(0)
}
