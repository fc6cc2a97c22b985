//! Detection of exact periodicity in finite windows of discrete point sets.
//!
//! The pipeline measures a finite-type tolerance from the difference set,
//! tests candidate translations as almost periods by bipartite matching,
//! snaps them to exact periods, and assembles a lattice `L` and residue set
//! `F` with `A = L + F` verified on the window. When no such decomposition
//! exists the result is a structured [`NoCrystalEvidence`].

pub mod almost_period;
pub mod crystal;
pub mod error;
pub mod generators;
pub mod geometry;
mod grid;
mod matching;
pub mod pointset;

pub use almost_period::{
    anchored_candidates, brute_force_almost_period, candidate_almost_periods, is_almost_period,
    snap_to_period, verify_exact_period, AlmostPeriodCertificate, AlmostPeriodVerdict,
    FailureWitness, Period, PeriodCheck, Rejection, BRUTE_FORCE_CORE_LIMIT, TOL_EXACT,
};
pub use crystal::{
    build_lattice, cone_filter, dominance_check, independence_det, recover_crystal, refine_lattice,
    residues, verify_decomposition, CrystalDecomposition, CrystalRecovery, Diagnostics, Lattice,
    NoCrystalEvidence, RecoveryConfig, Stage, Strategy, Verdict, VerifiedPeriod,
};
pub use error::{Error, Result};
pub use generators::{
    gen_cut_and_project, gen_ideal_crystal, gen_perturbed_lattice, gen_poisson, generate,
    ExpectedCrystal, GeneratorKind, GeneratorSpec,
};
pub use geometry::{
    denseness_radius, difference_vectors, finite_type_gap, max_ball_count, DifferenceSet,
    TypeGapReport,
};
pub use pointset::{Format, Point, Vector, WindowedSet, TOL_EQ};
