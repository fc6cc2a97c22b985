//! The recovery pipeline: tolerance, verified periods, basis, lattice,
//! residues and decomposition, in that order.

use std::time::Instant;

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use super::cone::{cone_filter, independence_det};
use super::decomposition::{residues, verify_decomposition, CrystalDecomposition, MAX_WITNESSES};
use super::lattice::{build_lattice, refine_lattice, COORD_TOL, DET_FLOOR_REL};
use crate::almost_period::{
    anchored_candidates, is_almost_period, scan_isolated_periods, snap_target, snap_to_period,
    IsolatedScan, Period, TOL_EXACT,
};
use crate::error::{Error, Result};
use crate::geometry::{denseness_radius, finite_type_gap};
use crate::pointset::{Point, Vector, WindowedSet, TOL_EQ};

/// Default bound on denominators when refining a lattice.
pub const MAX_DENOMINATOR: u32 = 64;

/// Default minimum window size.
pub const MIN_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    GreedyDet,
    PaperCone,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy-det" => Ok(Strategy::GreedyDet),
            "paper-cone" => Ok(Strategy::PaperCone),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Parameters of [`recover_crystal`]. `None` fields are derived from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub strategy: Strategy,
    pub cone_scale: f64,
    /// Inner radius of the candidate annulus; half the minimum separation.
    pub r_min: Option<f64>,
    /// Outer radius; grown by doubling from `2(D + 1)` when unset.
    pub r_max: Option<f64>,
    /// Boundary layer ignored by the denseness radius; `R / 10`.
    pub core_margin: Option<f64>,
    pub tol_exact: f64,
    pub coord_tol: f64,
    pub max_denominator: u32,
    pub min_points: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            strategy: Strategy::GreedyDet,
            cone_scale: 1.0,
            r_min: None,
            r_max: None,
            core_margin: None,
            tol_exact: TOL_EXACT,
            coord_tol: COORD_TOL,
            max_denominator: MAX_DENOMINATOR,
            min_points: MIN_POINTS,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("cone_scale", self.cone_scale)?;
        positive("tol_exact", self.tol_exact)?;
        positive("coord_tol", self.coord_tol)?;
        if self.coord_tol >= 0.5 {
            return Err(Error::Config(format!(
                "coord_tol must be below 0.5, got {}",
                self.coord_tol
            )));
        }
        if let Some(r) = self.r_min {
            positive("r_min", r)?;
        }
        if let Some(r) = self.r_max {
            positive("r_max", r)?;
        }
        if let (Some(lo), Some(hi)) = (self.r_min, self.r_max) {
            if lo >= hi {
                return Err(Error::Config(format!(
                    "r_min = {lo} must be below r_max = {hi}"
                )));
            }
        }
        if let Some(m) = self.core_margin {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::Config(format!(
                    "core_margin must be non-negative, got {m}"
                )));
            }
        }
        if self.max_denominator == 0 {
            return Err(Error::Config("max_denominator must be at least 1".into()));
        }
        Ok(())
    }
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Input,
    DensenessRadius,
    FiniteTypeGap,
    PeriodVerification,
    BasisSelection,
    Lattice,
    Residues,
    Decomposition,
}

/// Per-stage wall time in milliseconds, serialized as an ordered map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings(pub Vec<(Stage, f64)>);

impl Timings {
    fn record(&mut self, stage: Stage, start: Instant) {
        self.0.push((stage, start.elapsed().as_secs_f64() * 1e3));
    }

    pub fn total(&self) -> f64 {
        self.0.iter().map(|(_, ms)| ms).sum()
    }
}

impl Serialize for Timings {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (stage, ms) in &self.0 {
            map.serialize_entry(stage, ms)?;
        }
        map.end()
    }
}

/// Quantities measured along the way, whatever the verdict.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub points: usize,
    pub dim: usize,
    pub radius: f64,
    pub core_margin: f64,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub epsilon: Option<f64>,
    pub gap: Option<f64>,
    pub pair_count: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub candidate_count: usize,
    pub almost_period_count: usize,
    pub verified_count: usize,
    pub dropped_periods: usize,
}

/// The almost-period evidence behind a verified period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub tau: Vector,
    pub epsilon: f64,
    pub core_radius: f64,
    pub max_displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedPeriod {
    #[serde(rename = "T")]
    pub t: Vector,
    pub verified_radius: f64,
    pub certificate: CertificateSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrystalRecovery {
    pub decomposition: CrystalDecomposition,
    pub periods: Vec<VerifiedPeriod>,
    /// Basis picked before refinement.
    pub selected: Vec<Vector>,
    /// Verified periods with no rational fit in the lattice.
    pub dropped: Vec<Vector>,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoCrystalEvidence {
    pub stage: Stage,
    pub reason: String,
    pub witnesses: Vec<Point>,
    pub periods: Vec<VerifiedPeriod>,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Crystal(Box<CrystalRecovery>),
    NoCrystal(Box<NoCrystalEvidence>),
}

impl Verdict {
    pub fn is_crystal(&self) -> bool {
        matches!(self, Verdict::Crystal(_))
    }

    pub fn crystal(&self) -> Option<&CrystalRecovery> {
        match self {
            Verdict::Crystal(c) => Some(c),
            Verdict::NoCrystal(_) => None,
        }
    }

    pub fn evidence(&self) -> Option<&NoCrystalEvidence> {
        match self {
            Verdict::Crystal(_) => None,
            Verdict::NoCrystal(e) => Some(e),
        }
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        match self {
            Verdict::Crystal(c) => &c.diagnostics,
            Verdict::NoCrystal(e) => &e.diagnostics,
        }
    }

    pub fn timings(&self) -> &Timings {
        match self {
            Verdict::Crystal(c) => &c.timings,
            Verdict::NoCrystal(e) => &e.timings,
        }
    }
}

enum Outcome {
    NotAlmostPeriod,
    SnapFailed,
    Verified(Box<VerifiedPeriod>),
}

/// Outcomes in candidate order. Candidates whose snap target is themselves
/// share one batched scan; the rest take the matching path.
fn test_candidates(
    set: &WindowedSet,
    candidates: &[Vector],
    epsilon: f64,
    tol_exact: f64,
) -> Result<Vec<Outcome>> {
    let half = epsilon / 2.0;
    let self_snapping: Vec<bool> = candidates
        .par_iter()
        .map(|tau| snap_target(set, tau, epsilon).as_ref() == Some(tau))
        .collect();
    let batch: Vec<Vector> = candidates
        .iter()
        .zip(&self_snapping)
        .filter(|(_, &fast)| fast)
        .map(|(tau, _)| tau.clone())
        .collect();
    // ε is at most half the type gap and the gap at most the minimum
    // separation, so ε/2 is well below half the separation.
    let mut scans = scan_isolated_periods(set, &batch, half, tol_exact)?.into_iter();
    candidates
        .iter()
        .zip(&self_snapping)
        .map(|(tau, &fast)| {
            if !fast {
                return test_candidate(set, tau, epsilon, tol_exact);
            }
            Ok(
                match scans.next().expect("one scan per batched candidate") {
                    IsolatedScan::NotAlmostPeriod => Outcome::NotAlmostPeriod,
                    IsolatedScan::Accepted {
                        verified_radius: None,
                        ..
                    } => Outcome::SnapFailed,
                    IsolatedScan::Accepted {
                        core_radius,
                        max_displacement,
                        verified_radius: Some(verified_radius),
                    } => Outcome::Verified(Box::new(VerifiedPeriod {
                        t: oriented(tau.clone()),
                        verified_radius,
                        certificate: CertificateSummary {
                            tau: tau.clone(),
                            epsilon: half,
                            core_radius,
                            max_displacement,
                        },
                    })),
                },
            )
        })
        .collect()
}

fn test_candidate(
    set: &WindowedSet,
    tau: &Vector,
    epsilon: f64,
    tol_exact: f64,
) -> Result<Outcome> {
    let half = epsilon / 2.0;
    let cert = match is_almost_period(set, tau, half) {
        Ok(verdict) => match verdict.certificate() {
            Some(c) => CertificateSummary {
                tau: c.tau.clone(),
                epsilon: c.epsilon,
                core_radius: c.core_radius,
                max_displacement: c.max_displacement,
            },
            None => return Ok(Outcome::NotAlmostPeriod),
        },
        Err(Error::WindowTooSmall(_)) => return Ok(Outcome::NotAlmostPeriod),
        Err(e) => return Err(e),
    };
    match snap_to_period(set, tau, epsilon, tol_exact) {
        Ok(Period {
            t, verified_radius, ..
        }) => Ok(Outcome::Verified(Box::new(VerifiedPeriod {
            t: oriented(t),
            verified_radius,
            certificate: cert,
        }))),
        Err(
            Error::NoSnapTarget
            | Error::AmbiguousSnap
            | Error::NotExactPeriod
            | Error::WindowTooSmall(_),
        ) => Ok(Outcome::SnapFailed),
        Err(e) => Err(e),
    }
}

fn oriented(t: Vector) -> Vector {
    if t.is_positive_within(TOL_EQ) {
        t
    } else {
        -&t
    }
}

/// Normalized volume `√det(G) / ∏|v|` of the parallelotope spanned by `vs`.
fn normalized_volume(vs: &[&Vector]) -> f64 {
    let k = vs.len();
    let g = nalgebra::DMatrix::from_fn(k, k, |i, j| vs[i].dot(vs[j]));
    let prod: f64 = vs.iter().map(|v| v.norm()).product();
    g.determinant().max(0.0).sqrt() / prod
}

/// Pick `p` periods greedily: at each step the shortest one whose normalized
/// volume with the chosen ones is at least half the best available.
fn select_greedy(periods: &[Vector], p: usize) -> Option<Vec<Vector>> {
    let mut chosen: Vec<usize> = Vec::with_capacity(p);
    for _ in 0..p {
        let scores: Vec<(usize, f64)> = (0..periods.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| {
                let mut vs: Vec<&Vector> = chosen.iter().map(|&c| &periods[c]).collect();
                vs.push(&periods[i]);
                (i, normalized_volume(&vs))
            })
            .collect();
        let best = scores.iter().map(|s| s.1).fold(0.0, f64::max);
        if best <= DET_FLOOR_REL {
            return None;
        }
        let pick = scores.iter().find(|s| s.1 >= 0.5 * best)?.0;
        chosen.push(pick);
    }
    let basis: Vec<Vector> = chosen.iter().map(|&i| periods[i].clone()).collect();
    let floor = DET_FLOOR_REL * basis.iter().map(|v| v.norm()).product::<f64>();
    (independence_det(&basis).abs() > floor).then_some(basis)
}

/// Per axis, the shortest period in its cone; the first empty axis otherwise.
fn select_cone(
    periods: &[Vector],
    p: usize,
    scale: f64,
) -> std::result::Result<Vec<Vector>, usize> {
    (0..p)
        .map(|j| {
            cone_filter(periods, j, p, scale)
                .into_iter()
                .next()
                .ok_or(j)
        })
        .collect()
}

enum Selection {
    Basis(Vec<Vector>),
    Incomplete(String),
}

fn select(periods: &[Vector], p: usize, config: &RecoveryConfig) -> Selection {
    if periods.is_empty() {
        return Selection::Incomplete("no verified periods".into());
    }
    if p == 1 {
        return Selection::Basis(vec![periods[0].clone()]);
    }
    match config.strategy {
        Strategy::GreedyDet => match select_greedy(periods, p) {
            Some(b) => Selection::Basis(b),
            None => Selection::Incomplete(format!("verified periods do not span {p} dimensions")),
        },
        Strategy::PaperCone => match select_cone(periods, p, config.cone_scale) {
            Ok(b) => Selection::Basis(b),
            Err(j) => Selection::Incomplete(format!("empty cone on axis {}", j + 1)),
        },
    }
}

struct Run {
    diagnostics: Diagnostics,
    timings: Timings,
    periods: Vec<VerifiedPeriod>,
}

impl Run {
    fn fail(self, stage: Stage, reason: impl Into<String>, witnesses: Vec<Point>) -> Verdict {
        Verdict::NoCrystal(Box::new(NoCrystalEvidence {
            stage,
            reason: reason.into(),
            witnesses,
            periods: self.periods,
            diagnostics: self.diagnostics,
            timings: self.timings,
        }))
    }
}

/// Decide whether the window is an ideal crystal and, if so, recover `L + F`.
///
/// Only configuration errors are returned as `Err`; every analysis failure
/// is a [`Verdict::NoCrystal`] naming the stage that stopped the pipeline.
pub fn recover_crystal(set: &WindowedSet, config: &RecoveryConfig) -> Result<Verdict> {
    config.validate()?;
    let p = set.dim();
    let margin = config.core_margin.unwrap_or(set.radius() / 10.0);
    let mut run = Run {
        diagnostics: Diagnostics {
            points: set.len(),
            dim: p,
            radius: set.radius(),
            core_margin: margin,
            ..Diagnostics::default()
        },
        timings: Timings::default(),
        periods: Vec::new(),
    };

    let start = Instant::now();
    let input_ok = set.len() >= config.min_points.max(2);
    run.timings.record(Stage::Input, start);
    if !input_ok {
        let n = set.len();
        return Ok(run.fail(
            Stage::Input,
            format!("{n} points, at least {} required", config.min_points.max(2)),
            vec![],
        ));
    }

    let start = Instant::now();
    let d = denseness_radius(set, margin);
    run.timings.record(Stage::DensenessRadius, start);
    let d = match d {
        Ok(d) => d,
        Err(e @ (Error::MarginTooLarge { .. } | Error::TooFewPoints { .. })) => {
            return Ok(run.fail(Stage::DensenessRadius, e.to_string(), vec![]))
        }
        Err(e) => return Err(e),
    };
    run.diagnostics.d = Some(d);

    let start = Instant::now();
    let gap = finite_type_gap(set, d);
    run.timings.record(Stage::FiniteTypeGap, start);
    let gap = match gap {
        Ok(g) => g,
        Err(e @ Error::DegenerateGap { gap, .. }) => {
            run.diagnostics.gap = Some(gap);
            return Ok(run.fail(Stage::FiniteTypeGap, e.to_string(), vec![]));
        }
        Err(e) => return Err(e),
    };
    let epsilon = gap.epsilon;
    run.diagnostics.epsilon = Some(epsilon);
    run.diagnostics.gap = Some(gap.gap);
    run.diagnostics.pair_count = Some(gap.pair_count);

    let start = Instant::now();
    let r_min = match config.r_min {
        Some(r) => r,
        None => set.min_separation()? / 2.0,
    };
    let cap = set.radius() / 2.0;
    let schedule: Vec<f64> = match config.r_max {
        Some(r) => vec![r],
        None => {
            let mut rs = Vec::new();
            let mut r = (2.0 * (d + 1.0)).max(2.0 * r_min).min(cap);
            loop {
                rs.push(r);
                if r >= cap {
                    break;
                }
                r = (2.0 * r).min(cap);
            }
            rs
        }
    };
    run.diagnostics.r_min = Some(r_min);
    if schedule[0] <= r_min {
        run.timings.record(Stage::PeriodVerification, start);
        return Err(Error::Config(format!(
            "candidate annulus [{r_min}, {}] is empty; window radius {} is too small",
            schedule[0],
            set.radius()
        )));
    }

    let mut tested_up_to = 0.0;
    let mut selection = Selection::Incomplete("no verified periods".into());
    let mut near_misses: Vec<Point> = Vec::new();
    for &r in &schedule {
        let candidates: Vec<Vector> = anchored_candidates(set, epsilon, r_min, r)?
            .into_iter()
            .filter(|v| v.is_positive_within(TOL_EQ) && v.norm() > tested_up_to)
            .collect();
        tested_up_to = r;
        run.diagnostics.r_max = Some(r);
        run.diagnostics.candidate_count += candidates.len();
        let outcomes = test_candidates(set, &candidates, epsilon, config.tol_exact)?;
        for (tau, outcome) in candidates.iter().zip(outcomes) {
            match outcome {
                Outcome::NotAlmostPeriod => {}
                Outcome::SnapFailed => {
                    run.diagnostics.almost_period_count += 1;
                    if near_misses.len() < MAX_WITNESSES {
                        near_misses.push(tau.clone());
                    }
                }
                Outcome::Verified(v) => {
                    run.diagnostics.almost_period_count += 1;
                    let dup = run
                        .periods
                        .iter()
                        .any(|q| q.t.distance(&v.t) <= config.tol_exact);
                    if !dup {
                        run.periods.push(*v);
                    }
                }
            }
        }
        run.periods.sort_by(|a, b| {
            a.t.norm()
                .total_cmp(&b.t.norm())
                .then_with(|| a.t.lex_cmp(&b.t))
        });
        run.diagnostics.verified_count = run.periods.len();
        let ts: Vec<Vector> = run.periods.iter().map(|v| v.t.clone()).collect();
        selection = select(&ts, p, config);
        if matches!(selection, Selection::Basis(_)) {
            break;
        }
        if run.periods.is_empty() && r >= 8.0 * (d + 1.0) {
            break;
        }
    }
    run.timings.record(Stage::PeriodVerification, start);
    if run.periods.is_empty() {
        let reason = format!(
            "no verified periods among {} candidates with {r_min} ≤ |T| ≤ {tested_up_to}",
            run.diagnostics.candidate_count
        );
        return Ok(run.fail(Stage::PeriodVerification, reason, near_misses));
    }

    let start = Instant::now();
    let basis = match selection {
        Selection::Basis(b) => b,
        Selection::Incomplete(reason) => {
            run.timings.record(Stage::BasisSelection, start);
            let witnesses = run
                .periods
                .iter()
                .take(MAX_WITNESSES)
                .map(|v| v.t.clone())
                .collect();
            return Ok(run.fail(Stage::BasisSelection, reason, witnesses));
        }
    };
    run.timings.record(Stage::BasisSelection, start);

    let start = Instant::now();
    let lattice = build_lattice(basis.clone(), config.coord_tol).and_then(|l| {
        let ts: Vec<Vector> = run.periods.iter().map(|v| v.t.clone()).collect();
        refine_lattice(&l, &ts, config.max_denominator)
    });
    run.timings.record(Stage::Lattice, start);
    let refinement = match lattice {
        Ok(r) => r,
        Err(e @ Error::SingularBasis { .. }) => {
            return Ok(run.fail(Stage::Lattice, e.to_string(), basis))
        }
        Err(e) => return Err(e),
    };
    run.diagnostics.dropped_periods = refinement.dropped.len();
    let lattice = refinement.lattice;

    let start = Instant::now();
    let f = residues(set, &lattice);
    run.timings.record(Stage::Residues, start);
    let f = match f {
        Ok(f) => f,
        Err(e @ Error::WindowTooSmall(_)) => {
            return Ok(run.fail(Stage::Residues, e.to_string(), lattice.basis().to_vec()))
        }
        Err(e) => return Err(e),
    };

    let start = Instant::now();
    let decomposition = verify_decomposition(set, &lattice, &f, config.tol_exact)?;
    run.timings.record(Stage::Decomposition, start);
    if !decomposition.is_verified() {
        let reason = format!(
            "coverage_in = {}, coverage_out = {}",
            decomposition.coverage_in, decomposition.coverage_out
        );
        let witnesses = decomposition
            .missing
            .iter()
            .chain(&decomposition.unexplained)
            .take(MAX_WITNESSES)
            .cloned()
            .collect();
        return Ok(run.fail(Stage::Decomposition, reason, witnesses));
    }
    Ok(Verdict::Crystal(Box::new(CrystalRecovery {
        decomposition,
        periods: run.periods,
        selected: basis,
        dropped: refinement.dropped,
        diagnostics: run.diagnostics,
        timings: run.timings,
    })))
}
