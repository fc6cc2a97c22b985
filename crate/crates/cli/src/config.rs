use std::str::FromStr;

use clap::{Args, ValueEnum};
use crystal_core::crystal::{COORD_TOL, MAX_DENOMINATOR, MIN_POINTS};
use crystal_core::{RecoveryConfig, Strategy, TOL_EXACT};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    GreedyDet,
    PaperCone,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::GreedyDet => Strategy::GreedyDet,
            StrategyArg::PaperCone => Strategy::PaperCone,
        }
    }
}

/// Analysis settings shared by `analyze` and `roundtrip`.
#[derive(Debug, Clone, PartialEq, Args, Serialize)]
pub struct RunConfig {
    /// Basis-selection strategy.
    #[arg(long, value_enum, default_value = "greedy-det")]
    #[serde(serialize_with = "strategy_name")]
    pub strategy: StrategyArg,

    /// Multiplier on the cone radius `3p²` in paper-cone mode.
    #[arg(long, default_value_t = 1.0)]
    pub cone_scale: f64,

    /// Inner radius of the candidate annulus [default: half the minimum separation].
    #[arg(long)]
    pub r_min: Option<f64>,

    /// Outer radius of the candidate annulus [default: grown until a basis is found].
    #[arg(long)]
    pub r_max: Option<f64>,

    /// Boundary layer excluded from the denseness radius [default: R/10].
    #[arg(long)]
    pub core_margin: Option<f64>,

    #[arg(long, default_value_t = TOL_EXACT)]
    pub tol_exact: f64,

    #[arg(long, default_value_t = COORD_TOL)]
    pub coord_tol: f64,

    #[arg(long, default_value_t = MAX_DENOMINATOR)]
    pub max_denominator: u32,

    #[arg(long, default_value_t = MIN_POINTS)]
    pub min_points: usize,

    /// Recorded in the report; the analysis itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value = "json")]
    pub output: OutputFormat,
}

fn strategy_name<S: serde::Serializer>(s: &StrategyArg, ser: S) -> Result<S::Ok, S::Error> {
    Strategy::from(*s).serialize(ser)
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            strategy: StrategyArg::GreedyDet,
            cone_scale: 1.0,
            r_min: None,
            r_max: None,
            core_margin: None,
            tol_exact: TOL_EXACT,
            coord_tol: COORD_TOL,
            max_denominator: MAX_DENOMINATOR,
            min_points: MIN_POINTS,
            seed: 0,
            output: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn recovery(&self) -> RecoveryConfig {
        RecoveryConfig {
            strategy: self.strategy.into(),
            cone_scale: self.cone_scale,
            r_min: self.r_min,
            r_max: self.r_max,
            core_margin: self.core_margin,
            tol_exact: self.tol_exact,
            coord_tol: self.coord_tol,
            max_denominator: self.max_denominator,
            min_points: self.min_points,
        }
    }
}

/// Rows separated by `;`, coordinates by `,`: `"1,0;0.2,1.1"`.
pub fn parse_rows(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(parse_list)
        .collect()
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|c| f64::from_str(c.trim()).map_err(|e| format!("{c:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows() {
        assert_eq!(
            parse_rows("1,0;0.2,1.1").unwrap(),
            vec![vec![1.0, 0.0], vec![0.2, 1.1]]
        );
        assert_eq!(parse_rows(" 2 ").unwrap(), vec![vec![2.0]]);
        assert!(parse_rows("1,x").is_err());
    }

    #[test]
    fn defaults_match_the_library() {
        assert_eq!(RunConfig::default().recovery(), RecoveryConfig::default());
    }
}
