//! Configured convergence studies: mesh, assemble, solve and measure on a
//! sequence of refinement levels.

use crate::analysis::{compute_errors, convergence_rates, ConvergenceReport, ErrorRecord, ManufacturedSolution};
use crate::polymesh::{generate, MeshFamily};
use crate::weakops::DegreeMode;
use crate::wgsystem::{assemble, solve, AssemblyOptions, SaddleSystem, SolveReport, SolverOptions};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Inclusive range of refinement levels, written `A..B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LevelSpec", into = "String")]
pub struct LevelRange {
    pub first: u32,
    pub last: u32,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LevelSpec {
    Text(String),
    Pair([u32; 2]),
}

impl TryFrom<LevelSpec> for LevelRange {
    type Error = Error;
    fn try_from(s: LevelSpec) -> Result<Self> {
        match s {
            LevelSpec::Text(t) => t.parse(),
            LevelSpec::Pair([a, b]) => LevelRange::new(a, b),
        }
    }
}

impl From<LevelRange> for String {
    fn from(r: LevelRange) -> String {
        r.to_string()
    }
}

impl LevelRange {
    pub fn new(first: u32, last: u32) -> Result<Self> {
        if first == 0 || last < first {
            return Err(Error::InvalidConfig(format!("level range {first}..{last} is empty or starts below 1")));
        }
        Ok(LevelRange { first, last })
    }

    pub fn iter(self) -> impl Iterator<Item = u32> {
        self.first..=self.last
    }
}

impl FromStr for LevelRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot read level range `{s}`, expected A..B"));
        let (a, b) = s.split_once("..").unwrap_or((s, s));
        let b = b.strip_prefix('=').unwrap_or(b);
        LevelRange::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Both,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_boost() -> usize {
    2
}

fn default_cap() -> Option<usize> {
    Some(200_000)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub family: MeshFamily,
    pub levels: LevelRange,
    pub k: usize,
    #[serde(default)]
    pub degree_mode: DegreeMode,
    pub solution: String,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_boost")]
    pub quadrature_exactness_boost: usize,
    #[serde(default)]
    pub output: OutputFormat,
    /// Where CSV output and system dumps go; CSV goes to stdout when unset.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub dump_system: bool,
    /// Per-level cap on free unknowns; `null` removes it.
    #[serde(default = "default_cap")]
    pub max_dofs: Option<usize>,
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: StudyConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::DegreeTooLow(self.k));
        }
        let sol = ManufacturedSolution::by_name(&self.solution)?;
        if sol.dim() != self.family.dim() {
            return Err(Error::InvalidConfig(format!(
                "solution `{}` is {}D but family `{}` is {}D",
                self.solution,
                sol.dim(),
                self.family,
                self.family.dim()
            )));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::InvalidConfig("solver_tol must be positive".into()));
        }
        LevelRange::new(self.levels.first, self.levels.last)?;
        Ok(())
    }

    pub fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions {
            k: self.k,
            degree_mode: self.degree_mode,
            boost: self.quadrature_exactness_boost,
            dof_cap: self.max_dofs,
        }
    }
}

/// Wall clock; reads zero on `wasm32`, where `Instant` is unavailable.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}

/// Everything computed on one level.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub record: ErrorRecord,
    pub solve: SolveReport,
    pub system: SaddleSystem,
    /// Full `V_h` vector including boundary values.
    pub u_h: Vec<f64>,
    pub p_h: Vec<f64>,
}

/// Solves one level of `family` with the manufactured solution `exact`.
pub fn run_level(
    family: MeshFamily,
    level: u32,
    exact: &ManufacturedSolution,
    opts: &AssemblyOptions,
    solver: &SolverOptions,
) -> Result<LevelOutcome> {
    let start = Stopwatch::start();
    let mesh = generate(family, level as usize)?;
    let system = exact.with_problem(|problem, _| assemble(&mesh, &problem, opts))?;
    let (x, solve_report) = solve(&system, solver)?;
    let (u_h, p_h) = system.dofs.expand(&x, &system.lift);
    let errors = compute_errors(&mesh, opts, exact, &u_h, &p_h)?;
    let mut record = ErrorRecord::new(level, mesh.h(), system.size(), errors);
    record.runtime = start.seconds();
    Ok(LevelOutcome { record, solve: solve_report, system, u_h, p_h })
}

/// Runs every level of `config` in order; `progress` sees each finished
/// level.
pub fn run_study_with(config: &StudyConfig, mut progress: impl FnMut(&LevelOutcome)) -> Result<ConvergenceReport> {
    config.validate()?;
    let exact = ManufacturedSolution::by_name(&config.solution)?;
    let opts = config.assembly_options();
    let solver = SolverOptions { tol: config.solver_tol, ..SolverOptions::default() };
    let mut records = Vec::new();
    for level in config.levels.iter() {
        let tag = |e: Error| Error::AtLevel { level, source: Box::new(e) };
        let out = run_level(config.family, level, &exact, &opts, &solver).map_err(tag)?;
        if config.dump_system {
            let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).map_err(|e| tag(e.into()))?;
            let file = std::fs::File::create(dir.join(format!("system_level{level}.txt"))).map_err(|e| tag(e.into()))?;
            out.system.dump(std::io::BufWriter::new(file)).map_err(tag)?;
        }
        progress(&out);
        records.push(out.record);
    }
    Ok(convergence_rates(config.family.name(), config.k, &config.solution, records))
}

pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    run_study_with(config, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> serde_json::Result<StudyConfig> {
        serde_json::from_str(json)
    }

    #[test]
    fn parses_config_with_defaults() {
        let c = config(r#"{"family": "kuhn-tet-3d", "levels": "1..3", "k": 3, "solution": "e3-3d"}"#).unwrap();
        assert_eq!(c.levels, LevelRange { first: 1, last: 3 });
        assert_eq!(c.degree_mode, DegreeMode::Auto);
        assert_eq!(c.solver_tol, 1e-10);
        assert_eq!(c.quadrature_exactness_boost, 2);
        assert_eq!(c.max_dofs, Some(200_000));
        c.validate().unwrap();
        let c = config(
            r#"{"family": "nonconvex-poly-2d", "levels": [2, 2], "k": 2, "solution": "e1-2d",
                "degree_mode": {"explicit": [9, 10]}, "output": "both", "max_dofs": null}"#,
        )
        .unwrap();
        assert_eq!(c.degree_mode, DegreeMode::Explicit([9, 10]));
        assert_eq!(c.max_dofs, None);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(config(r#"{"family": "kuhn-tet-3d", "levels": "3..1", "k": 3, "solution": "e3-3d"}"#).is_err());
        assert!(config(r#"{"family": "kuhn-tet-3d", "levels": "1..2", "k": 3, "solution": "e3-3d", "extra": 1}"#).is_err());
        let c = config(r#"{"family": "kuhn-tet-3d", "levels": "1..2", "k": 2, "solution": "e1-2d"}"#).unwrap();
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        assert!("0..2".parse::<LevelRange>().is_err());
        assert_eq!("4".parse::<LevelRange>().unwrap(), LevelRange { first: 4, last: 4 });
    }
}
