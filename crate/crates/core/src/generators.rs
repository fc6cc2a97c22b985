//! Seeded point-set generators: ideal crystals, almost periodic
//! perturbations of lattices, cut-and-project chains and Poisson clouds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::crystal::{build_lattice, independence_det, rationalize, COORD_TOL};
use crate::error::{Error, Result};
use crate::pointset::{Point, Vector, WindowedSet, TOL_EQ};

/// The golden ratio `(1 + √5) / 2`.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// A reproducible description of a generated window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub kind: GeneratorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Crystal {
        basis: Vec<Vector>,
        residues: Vec<Point>,
    },
    Perturbed {
        basis: Vec<Vector>,
        amplitude: f64,
        freqs: Vec<f64>,
    },
    CutProject {
        slope: f64,
        window: [f64; 2],
    },
    Poisson {
        intensity: f64,
        dim: usize,
    },
}

impl GeneratorSpec {
    pub fn dim(&self) -> usize {
        match &self.kind {
            GeneratorKind::Crystal { basis, .. } | GeneratorKind::Perturbed { basis, .. } => {
                basis.len()
            }
            GeneratorKind::CutProject { .. } => 1,
            GeneratorKind::Poisson { dim, .. } => *dim,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GeneratorKind::Crystal { .. } => "crystal",
            GeneratorKind::Perturbed { .. } => "perturbed",
            GeneratorKind::CutProject { .. } => "cut_project",
            GeneratorKind::Poisson { .. } => "poisson",
        }
    }

    /// The golden-ratio chain on `[-radius, radius]`.
    pub fn fibonacci(radius: f64) -> Self {
        GeneratorSpec {
            radius,
            seed: 0,
            kind: GeneratorKind::CutProject {
                slope: GOLDEN,
                window: [0.0, 1.0 + GOLDEN],
            },
        }
    }
}

/// Lattice covolume and coset count of the decomposition a spec generates,
/// when it is an ideal crystal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCrystal {
    pub det: f64,
    pub residue_count: usize,
}

impl ExpectedCrystal {
    /// Points per unit volume.
    pub fn density(&self) -> f64 {
        self.residue_count as f64 / self.det
    }
}

impl GeneratorSpec {
    /// The generating decomposition, if any.
    ///
    /// With rational frequencies the phase `⟨freqs, n⟩ mod 1` takes values in
    /// `(1/q)ℤ`, `q = lcm` of the denominators. The period lattice is the
    /// preimage of the phase shifts `k/q` that leave `sin(2π·)` unchanged on
    /// that group; its index is the smallest such `k`, one coset per step.
    pub fn expected_crystal(&self) -> Option<ExpectedCrystal> {
        match &self.kind {
            GeneratorKind::Crystal { basis, residues } => Some(ExpectedCrystal {
                det: independence_det(basis).abs(),
                residue_count: residues.len(),
            }),
            GeneratorKind::Perturbed {
                basis,
                amplitude,
                freqs,
            } => {
                let det = independence_det(basis).abs();
                let mut q: i64 = 1;
                for f in freqs {
                    let (_, d) = rationalize(*f, 64, 1e-12)?;
                    q = q / gcd(q, d) * d;
                }
                let wave = |j: i64| (std::f64::consts::TAU * j as f64 / q as f64).sin();
                let index = if *amplitude == 0.0 {
                    1
                } else {
                    (1..=q)
                        .find(|&k| {
                            q % k == 0 && (0..q).all(|j| (wave(j + k) - wave(j)).abs() < 1e-12)
                        })
                        .unwrap_or(q)
                };
                Some(ExpectedCrystal {
                    det: det * index as f64,
                    residue_count: index as usize,
                })
            }
            GeneratorKind::CutProject { .. } | GeneratorKind::Poisson { .. } => None,
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Run the generator described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<WindowedSet> {
    if !(spec.radius > 0.0 && spec.radius.is_finite()) {
        return Err(Error::Config(format!(
            "radius must be positive, got {}",
            spec.radius
        )));
    }
    match &spec.kind {
        GeneratorKind::Crystal { basis, residues } => {
            gen_ideal_crystal(basis, residues, spec.radius)
        }
        GeneratorKind::Perturbed {
            basis,
            amplitude,
            freqs,
        } => gen_perturbed_lattice(basis, *amplitude, freqs, spec.radius),
        GeneratorKind::CutProject { slope, window } => {
            gen_cut_and_project(*slope, (window[0], window[1]), spec.radius)
        }
        GeneratorKind::Poisson { intensity, dim } => {
            gen_poisson(*intensity, *dim, spec.radius, spec.seed)
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "radius must be positive, got {radius}"
        )))
    }
}

/// All points `t + f` with `t ∈ L(basis)`, `f ∈ residues` and `|t + f| ≤ radius`.
pub fn gen_ideal_crystal(basis: &[Vector], residues: &[Point], radius: f64) -> Result<WindowedSet> {
    check_radius(radius)?;
    let lattice = build_lattice(basis.to_vec(), COORD_TOL)?;
    let p = lattice.dim();
    if residues.is_empty() {
        return Err(Error::Config("at least one residue required".into()));
    }
    if let Some(f) = residues.iter().find(|f| f.dim() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: f.dim(),
        });
    }
    let fracs: Vec<Vec<f64>> = residues
        .iter()
        .map(|f| lattice.fractional_coordinates(f))
        .collect();
    for i in 0..fracs.len() {
        for j in 0..i {
            let same = fracs[i].iter().zip(&fracs[j]).all(|(a, b)| {
                let d = (a - b).abs();
                d.min(1.0 - d) <= COORD_TOL
            });
            if same {
                return Err(Error::CosetCollision {
                    first: j,
                    second: i,
                });
            }
        }
    }
    let mut points = Vec::new();
    for f in residues {
        for n in lattice.points_in_ball(&-f, radius) {
            let x = &lattice.point(&n) + f;
            if x.norm() <= radius + TOL_EQ {
                points.push(x);
            }
        }
    }
    WindowedSet::new(points, p, Some(radius), "crystal")
}

/// Lattice points displaced by `amplitude·sin(2π⟨freqs, n⟩)` along the first
/// basis direction.
pub fn gen_perturbed_lattice(
    basis: &[Vector],
    amplitude: f64,
    freqs: &[f64],
    radius: f64,
) -> Result<WindowedSet> {
    check_radius(radius)?;
    let lattice = build_lattice(basis.to_vec(), COORD_TOL)?;
    let p = lattice.dim();
    if freqs.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: freqs.len(),
        });
    }
    let limit = lattice.shortest_vector_norm() / 4.0;
    if !(amplitude >= 0.0 && amplitude < limit) {
        return Err(Error::AmplitudeTooLarge { amplitude, limit });
    }
    let u = basis[0].scale(1.0 / basis[0].norm());
    let mut points = Vec::new();
    for n in lattice.points_in_ball(&Vector::zeros(p), radius + amplitude) {
        let phase: f64 = n.iter().zip(freqs).map(|(&k, w)| k as f64 * w).sum();
        let shift = amplitude * (std::f64::consts::TAU * phase).sin();
        let x = &lattice.point(&n) + &u.scale(shift);
        if x.norm() <= radius {
            points.push(x);
        }
    }
    WindowedSet::new(points, p, Some(radius), "perturbed")
}

/// The 1-D model set `{m + n·slope : m·slope − n ∈ [lo, hi)}` on `[-radius, radius]`.
pub fn gen_cut_and_project(slope: f64, window: (f64, f64), radius: f64) -> Result<WindowedSet> {
    check_radius(radius)?;
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::EmptyAcceptanceWindow);
    }
    if !slope.is_finite() {
        return Err(Error::Config(format!("slope must be finite, got {slope}")));
    }
    // m = (x + slope·y) / (1 + slope²) with x the physical and y the internal coordinate
    let w = lo.abs().max(hi.abs());
    let m_max = ((radius + slope.abs() * w) / (1.0 + slope * slope)).ceil() as i64 + 1;
    let mut points = Vec::new();
    for m in -m_max..=m_max {
        let ms = m as f64 * slope;
        let mut n = (ms - hi).floor() as i64;
        while (n as f64) <= ms - lo {
            let y = ms - n as f64;
            if y >= lo && y < hi {
                let x = m as f64 + n as f64 * slope;
                if x.abs() <= radius {
                    points.push(Point::from([x]));
                }
            }
            n += 1;
        }
    }
    WindowedSet::new(points, 1, Some(radius), "cut_project")
}

/// Uniform points in the ball with a Poisson-distributed count.
pub fn gen_poisson(intensity: f64, dim: usize, radius: f64, seed: u64) -> Result<WindowedSet> {
    check_radius(radius)?;
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::Config(format!(
            "intensity must be positive, got {intensity}"
        )));
    }
    if dim == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let mean = intensity * ball_volume(dim, radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(mean)
        .map_err(|e| Error::Config(format!("poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let x: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(-radius..=radius))
            .collect();
        let x = Point::from(x);
        if x.norm() <= radius {
            points.push(x);
        }
    }
    loop {
        match WindowedSet::new(points.clone(), dim, Some(radius), "poisson") {
            Err(Error::DuplicatePoint { second, .. }) => {
                let mut sorted = points;
                sorted.sort_by(Point::lex_cmp);
                sorted.remove(second);
                points = sorted;
            }
            other => return other,
        }
    }
}

fn ball_volume(dim: usize, radius: f64) -> f64 {
    // V_d = V_{d-2} · 2π / d
    let unit = match dim {
        0 => 1.0,
        _ => {
            let (mut v, start) = if dim.is_multiple_of(2) {
                (1.0, 2)
            } else {
                (2.0, 3)
            };
            let mut d = start;
            while d <= dim {
                v *= std::f64::consts::TAU / d as f64;
                d += 2;
            }
            v
        }
    };
    unit * radius.powi(dim as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(s: &WindowedSet) -> Vec<f64> {
        s.points().iter().map(|p| p[0]).collect()
    }

    #[test]
    fn integer_line() {
        let s = gen_ideal_crystal(&[[1.0].into()], &[[0.0].into()], 3.0).unwrap();
        assert_eq!(coords(&s), vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn decorated_line() {
        let s = gen_ideal_crystal(&[[2.0].into()], &[[0.0].into(), [0.5].into()], 4.0).unwrap();
        assert_eq!(
            coords(&s),
            vec![-4.0, -3.5, -2.0, -1.5, 0.0, 0.5, 2.0, 2.5, 4.0]
        );
    }

    #[test]
    fn square_lattice_small_window() {
        let s = gen_ideal_crystal(
            &[[1.0, 0.0].into(), [0.0, 1.0].into()],
            &[Point::zeros(2)],
            1.5,
        )
        .unwrap();
        assert_eq!(s.len(), 9);
    }

    #[test]
    fn crystal_errors() {
        assert!(matches!(
            gen_ideal_crystal(
                &[[1.0, 0.0].into(), [2.0, 0.0].into()],
                &[Point::zeros(2)],
                5.0
            ),
            Err(Error::SingularBasis { .. })
        ));
        assert!(matches!(
            gen_ideal_crystal(&[[1.0].into()], &[[0.0].into(), [2.0].into()], 5.0),
            Err(Error::CosetCollision {
                first: 0,
                second: 1
            })
        ));
    }

    #[test]
    fn zero_amplitude_is_the_lattice() {
        let basis: Vec<Vector> = vec![[1.0, 0.0].into(), [0.2, 1.1].into()];
        let a = gen_perturbed_lattice(&basis, 0.0, &[GOLDEN, 0.0], 10.0).unwrap();
        let b = gen_ideal_crystal(&basis, &[Point::zeros(2)], 10.0).unwrap();
        assert_eq!(a.points(), b.points());
    }

    #[test]
    fn amplitude_limit() {
        assert!(matches!(
            gen_perturbed_lattice(&[[1.0].into()], 0.25, &[0.5], 10.0),
            Err(Error::AmplitudeTooLarge { .. })
        ));
        assert!(gen_perturbed_lattice(&[[1.0].into()], 0.24, &[0.5], 10.0).is_ok());
    }

    #[test]
    fn fibonacci_has_two_tiles_in_golden_ratio() {
        let s = generate(&GeneratorSpec::fibonacci(30.0)).unwrap();
        let x = coords(&s);
        let mut tiles: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        tiles.sort_by(f64::total_cmp);
        tiles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(tiles.len(), 2, "{tiles:?}");
        assert!((tiles[1] / tiles[0] - GOLDEN).abs() < 1e-9);
    }

    #[test]
    fn empty_acceptance_window() {
        assert_eq!(
            gen_cut_and_project(GOLDEN, (1.0, 1.0), 10.0).unwrap_err(),
            Error::EmptyAcceptanceWindow
        );
    }

    #[test]
    fn poisson_is_seeded() {
        let a = gen_poisson(1.0, 2, 50.0, 7).unwrap();
        let b = gen_poisson(1.0, 2, 50.0, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_poisson(1.0, 2, 50.0, 8).unwrap());
        assert!(a.points().iter().all(|p| p.norm() <= 50.0));
    }

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1, 2.0) - 4.0).abs() < 1e-12);
        assert!((ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn expected_crystals() {
        let perturbed = |f: f64| GeneratorSpec {
            radius: 50.0,
            seed: 0,
            kind: GeneratorKind::Perturbed {
                basis: vec![[1.0].into()],
                amplitude: 0.1,
                freqs: vec![f],
            },
        };
        let e = perturbed(1.0 / 3.0).expected_crystal().unwrap();
        assert_eq!((e.det, e.residue_count), (3.0, 3));
        // sin(πn) vanishes on the integers
        assert_eq!(perturbed(0.5).expected_crystal().unwrap().residue_count, 1);
        assert_eq!(perturbed(0.25).expected_crystal().unwrap().residue_count, 4);
        assert!(perturbed(2f64.sqrt()).expected_crystal().is_none());
        assert!(GeneratorSpec::fibonacci(50.0).expected_crystal().is_none());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = GeneratorSpec {
            radius: 60.0,
            seed: 3,
            kind: GeneratorKind::Crystal {
                basis: vec![[1.0, 0.0].into(), [0.2, 1.1].into()],
                residues: vec![[0.0, 0.0].into(), [0.31, 0.4].into()],
            },
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"crystal\""));
        let back: GeneratorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
