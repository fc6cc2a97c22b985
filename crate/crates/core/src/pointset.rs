//! Point-set model, file ingestion and elementary metrics.
//!
//! A [`WindowedSet`] is a finite set of points in ℝ^p understood as the
//! restriction of a larger (conceptually infinite) set to the closed ball of
//! radius `R` about the origin. All analysis is carried out on such windows,
//! with explicit margins wherever a translate may leave the ball.

use std::cmp::Ordering;
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::ops::{Add, Index, Neg, Sub};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::grid::{self, SpatialGrid};

/// Two points closer than this are treated as equal.
pub const TOL_EQ: f64 = 1e-9;

/// A point (or translation vector) in ℝ^p.
#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(SmallVec<[f64; 4]>);

/// Translations share the point representation.
pub type Vector = Point;

impl Point {
    pub fn new(coords: impl Into<SmallVec<[f64; 4]>>) -> Self {
        Point(coords.into())
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(smallvec::smallvec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn distance_squared(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Lexicographic total order on coordinates.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }

    /// True if the first nonzero coordinate is positive.
    ///
    /// Exactly one of `v` and `-v` is positive for every nonzero `v`.
    pub fn is_positive(&self) -> bool {
        self.0.iter().find(|c| **c != 0.0).is_some_and(|c| *c > 0.0)
    }

    /// Like [`Point::is_positive`], treating coordinates with `|c| ≤ tol` as zero.
    ///
    /// Rounding noise, such as a first coordinate of `±1e-16`, then has no
    /// effect on orientation.
    pub fn is_positive_within(&self, tol: f64) -> bool {
        self.0
            .iter()
            .find(|c| c.abs() > tol)
            .is_some_and(|c| *c > 0.0)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Point {
    /// Coordinatewise `op`; inline points skip the collecting iterator.
    #[inline]
    fn zip_with(&self, rhs: &Point, op: impl Fn(f64, f64) -> f64) -> Point {
        let n = self.0.len().min(rhs.0.len());
        if n <= 4 {
            let mut buf = [0.0; 4];
            for k in 0..n {
                buf[k] = op(self.0[k], rhs.0[k]);
            }
            return Point(SmallVec::from_buf_and_len(buf, n));
        }
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| op(*a, *b)).collect())
    }
}

impl Add for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point(self.0.iter().map(|c| -c).collect())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point::from_slice(&v)
    }
}

/// Supported point-file encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guess the format from a file name; anything not ending in `.json` is CSV.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// A finite window of a discrete point set.
///
/// Points are kept in canonical lexicographic order, pairwise separated by
/// more than [`TOL_EQ`], and inside the closed ball of radius `radius`.
pub struct WindowedSet {
    points: Vec<Point>,
    dim: usize,
    radius: f64,
    label: String,
    norms: Vec<f64>,
    grid: OnceLock<SpatialGrid>,
}

impl Clone for WindowedSet {
    fn clone(&self) -> Self {
        WindowedSet {
            points: self.points.clone(),
            dim: self.dim,
            radius: self.radius,
            label: self.label.clone(),
            norms: self.norms.clone(),
            grid: OnceLock::new(),
        }
    }
}

impl fmt::Debug for WindowedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WindowedSet")
            .field("dim", &self.dim)
            .field("radius", &self.radius)
            .field("label", &self.label)
            .field("len", &self.points.len())
            .finish()
    }
}

impl PartialEq for WindowedSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.radius == other.radius
            && self.label == other.label
            && self.points == other.points
    }
}

impl WindowedSet {
    /// Build a window from raw points.
    ///
    /// With `radius = None` the radius is the largest point norm. Points are
    /// sorted into canonical order; coincident points are rejected.
    pub fn new(
        mut points: Vec<Point>,
        dim: usize,
        radius: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        for (index, p) in points.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            if !p.is_finite() {
                return Err(Error::NonFinite { index });
            }
        }
        let max_norm = points.iter().map(Point::norm).fold(0.0, f64::max);
        let radius = match radius {
            Some(r) => {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::Config(format!("invalid window radius {r}")));
                }
                if let Some(index) = points.iter().position(|p| p.norm() > r + TOL_EQ) {
                    return Err(Error::OutsideWindow { index, radius: r });
                }
                r
            }
            None => max_norm,
        };
        points.sort_by(Point::lex_cmp);
        let set = WindowedSet {
            norms: points.iter().map(Point::norm).collect(),
            points,
            dim,
            radius,
            label: label.into(),
            grid: OnceLock::new(),
        };
        if let Some((first, second)) = set.find_coincident(TOL_EQ) {
            return Err(Error::DuplicatePoint { first, second });
        }
        Ok(set)
    }

    fn find_coincident(&self, tol: f64) -> Option<(usize, usize)> {
        if self.points.len() < 2 {
            return None;
        }
        let grid = self.grid();
        self.points.iter().enumerate().find_map(|(i, p)| {
            let mut hit = None;
            grid.for_each_within(&self.points, p, tol, |j, _| {
                if j != i && hit.is_none() {
                    hit = Some((i.min(j), i.max(j)));
                }
            });
            hit
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `|a|` for every point, in canonical order.
    pub(crate) fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Spatial index over the points, built on first use.
    pub(crate) fn grid(&self) -> &SpatialGrid {
        self.grid.get_or_init(|| {
            let cell = grid::default_cell_size(self.points.len(), self.dim, self.radius);
            SpatialGrid::new(&self.points, cell)
        })
    }

    /// Index of the point nearest to `q`, if one lies within `tol`
    /// (closed ball).
    pub fn find_near(&self, q: &Point, tol: f64) -> Option<(usize, f64)> {
        self.grid().closest_within(&self.points, q, tol)
    }

    /// Subset of points with `|a| ≤ r`, as a window of radius `r`.
    pub fn window_restrict(&self, r: f64) -> Result<WindowedSet> {
        if !(r > 0.0 && r <= self.radius) {
            return Err(Error::Config(format!(
                "restriction radius {r} must lie in (0, {}]",
                self.radius
            )));
        }
        if r == self.radius {
            return Ok(self.clone());
        }
        let points: Vec<Point> = self
            .points
            .iter()
            .filter(|p| p.norm() <= r)
            .cloned()
            .collect();
        if points.is_empty() {
            return Err(Error::EmptyWindow);
        }
        Ok(WindowedSet {
            norms: points.iter().map(Point::norm).collect(),
            points,
            dim: self.dim,
            radius: r,
            label: self.label.clone(),
            grid: OnceLock::new(),
        })
    }

    /// Smallest distance between two distinct points.
    pub fn min_separation(&self) -> Result<f64> {
        if self.points.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                found: self.points.len(),
            });
        }
        Ok(grid::min_pair_distance(&self.points, self.dim, self.radius))
    }

    /// Point nearest the origin; ties go to the canonically first point.
    pub fn nearest_to_origin(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in self.points.iter().enumerate() {
            let n = p.norm_squared();
            if best.is_none_or(|(_, b)| n < b) {
                best = Some((i, n));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Parse a window from a byte stream.
    pub fn load<R: Read>(source: R, format: Format) -> Result<WindowedSet> {
        match format {
            Format::Csv => load_csv(source),
            Format::Json => load_json(source),
        }
    }

    /// Serialize in the given format. CSV does not carry the radius.
    pub fn write<W: Write>(&self, out: W, format: Format) -> Result<()> {
        self.write_with_metadata(out, format, None)
    }

    /// Serialize, attaching a generator description to JSON output.
    pub fn write_with_metadata<W: Write>(
        &self,
        mut out: W,
        format: Format,
        generator: Option<&serde_json::Value>,
    ) -> Result<()> {
        match format {
            Format::Csv => {
                let mut buf = String::new();
                for p in &self.points {
                    for (i, c) in p.coords().iter().enumerate() {
                        if i > 0 {
                            buf.push(',');
                        }
                        buf.push_str(&c.to_string());
                    }
                    buf.push('\n');
                }
                out.write_all(buf.as_bytes())?;
            }
            Format::Json => {
                let file = PointFile {
                    dim: self.dim,
                    radius: self.radius,
                    label: self.label.clone(),
                    points: self.points.clone(),
                    generator: generator.cloned(),
                };
                serde_json::to_writer(&mut out, &file).map_err(|e| Error::Io(e.to_string()))?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PointFile {
    dim: usize,
    radius: f64,
    #[serde(default)]
    label: String,
    points: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<serde_json::Value>,
}

fn load_csv<R: Read>(source: R) -> Result<WindowedSet> {
    let reader = std::io::BufReader::new(source);
    let mut points = Vec::new();
    let mut dim = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: coords.len(),
                })
            }
            _ => {}
        }
        points.push(Point::from(coords));
    }
    let dim = dim.ok_or(Error::Parse {
        line: 0,
        message: "no points".into(),
    })?;
    WindowedSet::new(points, dim, None, "csv")
}

fn load_json<R: Read>(source: R) -> Result<WindowedSet> {
    let file: PointFile = serde_json::from_reader(source).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    WindowedSet::new(file.points, file.dim, Some(file.radius), file.label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_ideal_crystal;

    fn csv(s: &str) -> Result<WindowedSet> {
        WindowedSet::load(s.as_bytes(), Format::Csv)
    }

    fn line(coords: &[f64]) -> WindowedSet {
        let pts = coords.iter().map(|&c| Point::from([c])).collect();
        WindowedSet::new(pts, 1, None, "").unwrap()
    }

    #[test]
    fn orientation_ignores_rounding_noise() {
        let a = Point::from([1e-17, 1.0]);
        let b = Point::from([-1e-17, 1.0]);
        assert!(a.is_positive() && !b.is_positive());
        assert!(a.is_positive_within(TOL_EQ) && b.is_positive_within(TOL_EQ));
        assert!(!(-&b).is_positive_within(TOL_EQ));
    }

    #[test]
    fn loads_one_dimensional_csv() {
        let s = csv("0\n1\n2\n").unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.len(), 3);
        assert_eq!(s.radius(), 2.0);
    }

    #[test]
    fn loads_two_dimensional_csv_with_comments() {
        let s = csv("# header\n0,0\n1,0\n\n0,1\n").unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.len(), 3);
        assert_eq!(s.radius(), 1.0);
        // canonical order
        assert_eq!(s.points()[0], Point::from([0.0, 0.0]));
        assert_eq!(s.points()[1], Point::from([0.0, 1.0]));
        assert_eq!(s.points()[2], Point::from([1.0, 0.0]));
    }

    #[test]
    fn rejects_duplicates_ragged_rows_and_garbage() {
        assert!(matches!(csv("0\n0\n"), Err(Error::DuplicatePoint { .. })));
        assert!(matches!(
            csv("0\n1e-12\n"),
            Err(Error::DuplicatePoint { .. })
        ));
        assert!(matches!(
            csv("0,0\n1\n"),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(csv("0\nabc\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(csv("nan\n"), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn json_carries_radius_and_label() {
        let text = r#"{"dim": 1, "radius": 5.0, "label": "demo", "points": [[2.0], [-1.0]]}"#;
        let s = WindowedSet::load(text.as_bytes(), Format::Json).unwrap();
        assert_eq!(s.radius(), 5.0);
        assert_eq!(s.label(), "demo");
        assert_eq!(s.points()[0], Point::from([-1.0]));

        let outside = r#"{"dim": 1, "radius": 1.0, "points": [[2.0]]}"#;
        assert!(matches!(
            WindowedSet::load(outside.as_bytes(), Format::Json),
            Err(Error::OutsideWindow { .. })
        ));
    }

    #[test]
    fn restrict_window() {
        let s = line(&[0.0, 1.0, 2.0]);
        let r = s.window_restrict(1.0).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.radius(), 1.0);
        assert_eq!(s.window_restrict(2.0).unwrap(), s);
        assert!(s.window_restrict(3.0).is_err());

        let z2 = gen_ideal_crystal(
            &[[1.0, 0.0].into(), [0.0, 1.0].into()],
            &[Point::zeros(2)],
            10.0,
        )
        .unwrap();
        assert_eq!(z2.window_restrict(1.5).unwrap().len(), 9);
    }

    #[test]
    fn restrict_to_empty_window_fails() {
        let s = line(&[-3.0, 3.0]);
        assert_eq!(s.window_restrict(1.0), Err(Error::EmptyWindow));
    }

    #[test]
    fn min_separation_examples() {
        let z: Vec<f64> = (-5..=5).map(f64::from).collect();
        assert_eq!(line(&z).min_separation().unwrap(), 1.0);
        assert_eq!(line(&[0.0, 0.25, 1.0]).min_separation().unwrap(), 0.25);
        assert!(matches!(
            line(&[1.0]).min_separation(),
            Err(Error::TooFewPoints { .. })
        ));

        let crystal = gen_ideal_crystal(
            &[[1.0, 0.0].into(), [0.0, 1.0].into()],
            &[Point::zeros(2), [0.3, 0.0].into()],
            6.0,
        )
        .unwrap();
        let brute = brute_min_separation(crystal.points());
        let fast = crystal.min_separation().unwrap();
        assert!((fast - brute).abs() < 1e-12);
        assert!((fast - 0.3).abs() < 1e-12);
    }

    fn brute_min_separation(points: &[Point]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                best = best.min(points[i].distance(&points[j]));
            }
        }
        best
    }

    #[test]
    fn nearest_to_origin_breaks_ties_canonically() {
        let s = line(&[-1.0, 1.0, 3.0]);
        assert_eq!(s.nearest_to_origin(), Some(0));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let pts = vec![Point::from([0.1, -0.7]), Point::from([1.0 / 3.0, 2.5])];
        let s = WindowedSet::new(pts, 2, None, "csv").unwrap();
        let mut buf = Vec::new();
        s.write(&mut buf, Format::Csv).unwrap();
        let back = WindowedSet::load(buf.as_slice(), Format::Csv).unwrap();
        assert_eq!(back, s);
    }
}
