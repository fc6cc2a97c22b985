//! Lattices, period selection, residues and the recovery pipeline.

mod cone;
mod decomposition;
mod intlat;
mod lattice;
mod recover;

pub use cone::{cone_filter, dominance_check, independence_det};
pub use decomposition::{residues, verify_decomposition, CrystalDecomposition, MAX_WITNESSES};
pub(crate) use intlat::rationalize;
pub use lattice::{
    build_lattice, rational_coordinates, refine_lattice, Lattice, Refinement, COORD_TOL,
    DET_FLOOR_REL,
};
pub use recover::{
    recover_crystal, CertificateSummary, CrystalRecovery, Diagnostics, NoCrystalEvidence,
    RecoveryConfig, Stage, Strategy, Timings, Verdict, VerifiedPeriod, MAX_DENOMINATOR, MIN_POINTS,
};
