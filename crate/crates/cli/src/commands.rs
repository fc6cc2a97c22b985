use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use crystal_core::generators::GOLDEN;
use crystal_core::{
    generate, recover_crystal, Error, Format, GeneratorKind, GeneratorSpec, Point, Vector, Verdict,
    WindowedSet,
};

use crate::config::{parse_list, parse_rows, OutputFormat, RunConfig};
use crate::report::Report;

pub const EXIT_CRYSTAL: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_NO_CRYSTAL: i32 = 3;

/// Failure to run a command at all, as opposed to a negative verdict.
#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum GeneratorKindArg {
    Crystal,
    Perturbed,
    CutProject,
    Poisson,
}

/// Generator parameters; each kind reads the ones it needs.
#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// Lattice basis rows, e.g. "1,0;0.2,1.1".
    #[arg(long, default_value = "1,0;0.2,1.1")]
    pub basis: String,

    /// Residue points for `crystal`, e.g. "0,0;0.31,0.4".
    #[arg(long, default_value = "0,0;0.31,0.4")]
    pub residues: String,

    /// Perturbation amplitude for `perturbed`.
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,

    /// Perturbation frequencies for `perturbed`, one per basis vector
    /// [default: √2 then zeros].
    #[arg(long)]
    pub freqs: Option<String>,

    /// Slope for `cut_project`.
    #[arg(long, default_value_t = GOLDEN)]
    pub slope: f64,

    /// Acceptance window "lo,hi" for `cut_project` [default: 0,1+slope].
    #[arg(long)]
    pub window: Option<String>,

    /// Points per unit volume for `poisson`.
    #[arg(long, default_value_t = 1.0)]
    pub intensity: f64,

    /// Dimension for `poisson`.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,

    #[arg(long, default_value_t = 60.0)]
    pub radius: f64,
}

impl GeneratorArgs {
    pub fn spec(&self, kind: GeneratorKindArg, seed: u64) -> CliResult<GeneratorSpec> {
        let vectors = |s: &str| -> CliResult<Vec<Vector>> {
            Ok(parse_rows(s)
                .map_err(CliError)?
                .into_iter()
                .map(Point::from)
                .collect())
        };
        let kind = match kind {
            GeneratorKindArg::Crystal => GeneratorKind::Crystal {
                basis: vectors(&self.basis)?,
                residues: vectors(&self.residues)?,
            },
            GeneratorKindArg::Perturbed => {
                let basis = vectors(&self.basis)?;
                let freqs = match &self.freqs {
                    Some(f) => parse_list(f).map_err(CliError)?,
                    None => {
                        let mut f = vec![0.0; basis.len()];
                        if let Some(first) = f.first_mut() {
                            *first = std::f64::consts::SQRT_2;
                        }
                        f
                    }
                };
                GeneratorKind::Perturbed {
                    basis,
                    amplitude: self.amplitude,
                    freqs,
                }
            }
            GeneratorKindArg::CutProject => {
                let window = match &self.window {
                    Some(w) => match parse_list(w).map_err(CliError)?.as_slice() {
                        [lo, hi] => [*lo, *hi],
                        _ => return Err(CliError(format!("window must be \"lo,hi\", got {w:?}"))),
                    },
                    None => [0.0, 1.0 + self.slope],
                };
                GeneratorKind::CutProject {
                    slope: self.slope,
                    window,
                }
            }
            GeneratorKindArg::Poisson => GeneratorKind::Poisson {
                intensity: self.intensity,
                dim: self.dim,
            },
        };
        Ok(GeneratorSpec {
            radius: self.radius,
            seed,
            kind,
        })
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError(e.to_string()))?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn load_points(path: &Path) -> CliResult<WindowedSet> {
    let file = File::open(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    WindowedSet::load(io::BufReader::new(file), Format::from_path(path))
        .map_err(|e| CliError(format!("{}: {e}", path.display())))
}

/// Analyze the point file at `input` and return the report with its exit code.
pub fn analyze(input: &Path, config: &RunConfig) -> CliResult<(Report, i32)> {
    let set = load_points(input)?;
    let verdict = recover_crystal(&set, &config.recovery())?;
    let code = if verdict.is_crystal() {
        EXIT_CRYSTAL
    } else {
        EXIT_NO_CRYSTAL
    };
    Ok((
        Report::new(&input.display().to_string(), &set, config, &verdict),
        code,
    ))
}

pub fn render(report: &Report, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => report.to_json_bytes(),
        OutputFormat::Text => report.to_text().into_bytes(),
    }
}

pub fn cmd_analyze(input: &Path, config: &RunConfig, out: Option<&Path>) -> CliResult<i32> {
    let (report, code) = analyze(input, config)?;
    emit(out, &render(&report, config.output))?;
    Ok(code)
}

pub fn cmd_generate(
    spec: &GeneratorSpec,
    out: Option<&Path>,
    format: Option<Format>,
) -> CliResult<i32> {
    let set = generate(spec)?;
    let format = format.unwrap_or_else(|| out.map_or(Format::Json, Format::from_path));
    let meta = serde_json::to_value(spec).map_err(|e| CliError(e.to_string()))?;
    let mut bytes = Vec::new();
    set.write_with_metadata(&mut bytes, format, Some(&meta))?;
    emit(out, &bytes)?;
    eprintln!("{meta}");
    eprintln!("{} points", set.len());
    Ok(EXIT_CRYSTAL)
}

/// The generate → recover → compare table, and whether it matched.
pub fn roundtrip(spec: &GeneratorSpec, config: &RunConfig) -> CliResult<(String, i32)> {
    let set = generate(spec)?;
    let verdict = recover_crystal(&set, &config.recovery())?;
    let expected = spec.expected_crystal();
    let mut table = String::new();
    let row = |t: &mut String, k: &str, a: String, b: String| {
        let _ = writeln!(t, "{k:<16}{a:<24}{b}");
    };
    row(&mut table, "", "generated".into(), "recovered".into());
    row(
        &mut table,
        "kind",
        spec.kind_name().into(),
        verdict_name(&verdict).into(),
    );
    row(
        &mut table,
        "points",
        set.len().to_string(),
        set.len().to_string(),
    );
    let code = match (&verdict, expected) {
        (Verdict::NoCrystal(e), exp) => {
            row(
                &mut table,
                "det",
                exp.map_or("-".into(), |x| format!("{:.9}", x.det)),
                "-".into(),
            );
            let _ = writeln!(
                table,
                "stage {}: {}",
                crate::report::stage_name(e.stage),
                e.reason
            );
            EXIT_NO_CRYSTAL
        }
        (Verdict::Crystal(c), Some(exp)) => {
            let d = &c.decomposition;
            let det = d.lattice.det().abs();
            let ratio = exp.det / det;
            let index = ratio.round();
            let integral = index >= 1.0 && (ratio - index).abs() <= 1e-6 * ratio;
            let residues_ok =
                integral && d.residues.len() as f64 == exp.residue_count as f64 / index;
            row(
                &mut table,
                "det",
                format!("{:.9}", exp.det),
                format!("{det:.9}"),
            );
            row(&mut table, "det ratio", "".into(), format!("{ratio:.9}"));
            row(
                &mut table,
                "residues",
                exp.residue_count.to_string(),
                d.residues.len().to_string(),
            );
            row(
                &mut table,
                "coverage",
                "1, 1".into(),
                format!("{}, {}", d.coverage_in, d.coverage_out),
            );
            if integral && residues_ok && d.is_verified() {
                EXIT_CRYSTAL
            } else {
                EXIT_MISMATCH
            }
        }
        (Verdict::Crystal(c), None) => {
            row(
                &mut table,
                "det",
                "-".into(),
                format!("{:.9}", c.decomposition.lattice.det().abs()),
            );
            EXIT_MISMATCH
        }
    };
    Ok((table, code))
}

pub fn cmd_roundtrip(spec: &GeneratorSpec, config: &RunConfig) -> CliResult<i32> {
    let (table, code) = roundtrip(spec, config)?;
    print!("{table}");
    Ok(code)
}

fn verdict_name(v: &Verdict) -> &'static str {
    if v.is_crystal() {
        "crystal"
    } else {
        "no-crystal"
    }
}
