//! Configuration-driven experiments: single runs with diagnostics and
//! convergence studies over the number of particles.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{diagnose, DiagnosticsReport};
use crate::dynamics::{integrate, IntegratorMetadata, IntegratorSettings, Trajectory};
use crate::error::{Error, Result};
use crate::initial_data::InitialDatum;
use crate::measures::{
    check_density, empirical, hat_density, l1_distance, wasserstein, write_pseudo_inverse_csv,
    MassDistribution, PiecewiseConstantDensity,
};
use crate::reference::{godunov, ExactSolution};
use crate::scenario::Scenario;
use crate::velocity::{VelocityModel, VelocitySpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Exact solution when available at `t_end`, Godunov otherwise.
    #[default]
    Auto,
    Exact,
    Godunov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    #[serde(default)]
    pub kind: OracleKind,
    /// Godunov cell size; defaults to the support span over 4096.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Cells of the projection of the exact solution used for the
    /// Wasserstein column.
    #[serde(default = "default_projection_cells")]
    pub projection_cells: usize,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_projection_cells() -> usize {
    8192
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            kind: OracleKind::Auto,
            dx: None,
            cfl: default_cfl(),
            projection_cells: default_projection_cells(),
        }
    }
}

/// Godunov cells across the initial support when `oracle.dx` is absent.
pub const DEFAULT_GODUNOV_CELLS: f64 = 4096.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_velocity")]
    pub velocity: VelocitySpec,
    pub n_list: Vec<usize>,
    pub t_end: f64,
    /// Defaults to ten equal steps up to `t_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_velocity() -> VelocitySpec {
    serde_json::from_str(r#"{"kind":"greenshields"}"#).expect("static spec")
}

/// A validated configuration with its model and datum built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub model: VelocityModel,
    pub datum: InitialDatum,
    pub sample_times: Vec<f64>,
    /// `δ`, dropped when `t_end = 0`.
    pub delta: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Checks every field and builds the model and the datum.
    pub fn prepare(&self) -> Result<Prepared> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_list.is_empty() {
            return bad("n_list must not be empty".into());
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("n_list must be strictly ascending".into());
        }
        if self.n_list[0] < 2 {
            return bad("every N must be at least 2".into());
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        let delta = if self.t_end == 0.0 {
            None
        } else {
            match self.delta {
                Some(d) if !(d > 0.0 && d < self.t_end) => {
                    return bad(format!("delta must lie in (0, t_end = {}), got {d}", self.t_end))
                }
                d => d,
            }
        };
        let sample_times = match &self.sample_times {
            Some(s) => {
                if s.iter().any(|&t| !(t >= 0.0 && t <= self.t_end)) {
                    return bad(format!("sample times must lie in [0, {}]", self.t_end));
                }
                let mut s = s.clone();
                s.push(0.0);
                if self.t_end > 0.0 {
                    s.push(self.t_end);
                }
                s.sort_by(f64::total_cmp);
                s.dedup();
                s
            }
            None if self.t_end == 0.0 => vec![0.0],
            None => (0..=10).map(|k| self.t_end * k as f64 / 10.0).collect(),
        };
        self.integrator.validate()?;
        if let Some(dx) = self.oracle.dx {
            if !(dx.is_finite() && dx > 0.0) {
                return bad(format!("oracle.dx must be > 0, got {dx}"));
            }
        }
        if !(self.oracle.cfl > 0.0 && self.oracle.cfl < 1.0) {
            return bad(format!("oracle.cfl must lie in (0, 1), got {}", self.oracle.cfl));
        }
        if self.oracle.projection_cells == 0 {
            return bad("oracle.projection_cells must be positive".into());
        }
        let model = self.velocity.build()?;
        let datum = self.scenario.datum()?;
        if datum.sup_norm() > model.density_limit() {
            return bad(format!(
                "datum exceeds the density range of the velocity table ({})",
                model.density_limit()
            ));
        }
        Ok(Prepared {
            config: self.clone(),
            model,
            datum,
            sample_times,
            delta,
        })
    }
}

/// Outcome of one particle count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub passed: bool,
    pub violations: usize,
    pub warnings: Vec<String>,
    pub integrator: IntegratorMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub runs: Vec<RunRecord>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(|r| r.passed)
    }
}

/// Trajectory and diagnostics for one `N`, without touching the filesystem.
pub fn simulate(p: &Prepared, n: usize) -> Result<(Trajectory, DiagnosticsReport)> {
    let c0 = p.datum.atomize(n)?;
    let traj = integrate(&c0, &p.model, p.config.t_end, &p.config.integrator, &p.sample_times)?;
    let report = diagnose(&traj, &p.model, &p.datum, p.delta)?;
    Ok((traj, report))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    writeln!(out, "t,i,x")?;
    for s in &traj.states {
        for (i, x) in s.positions().iter().enumerate() {
            writeln!(out, "{},{},{}", s.time(), i, x)?;
        }
    }
    Ok(())
}

fn write_run_files(dir: &Path, traj: &Trajectory, report: &DiagnosticsReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = create(&dir.join("trajectory.csv"))?;
    write_trajectory_csv(traj, &mut f)?;
    f.flush()?;
    for (label, state) in [("initial", traj.initial()), ("final", traj.last())] {
        let mut f = create(&dir.join(format!("hat_{label}.csv")))?;
        hat_density(state).write_csv(&mut f)?;
        f.flush()?;
        let mut f = create(&dir.join(format!("check_{label}.csv")))?;
        check_density(state).write_csv(&mut f)?;
        f.flush()?;
        let mut f = create(&dir.join(format!("pseudo_inverse_{label}.csv")))?;
        write_pseudo_inverse_csv(&empirical(state).pseudo_inverse(), &mut f)?;
        f.flush()?;
    }
    let mut f = create(&dir.join("diagnostics.json"))?;
    report.write_json(&mut f)?;
    f.flush()?;
    let mut f = create(&dir.join("diagnostics.csv"))?;
    report.write_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

/// Runs every `N` of the configuration and writes, under `out`:
/// `n_<N>/{trajectory,hat_*,check_*,pseudo_inverse_*,diagnostics}.{csv,json}`
/// and `manifest.json`. Nothing is written if the configuration is invalid.
/// `jobs = 0` uses all cores.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, jobs: usize) -> Result<RunSummary> {
    let p = config.prepare()?;
    let results: Vec<Result<(Trajectory, DiagnosticsReport)>> = thread_pool(jobs)?
        .install(|| p.config.n_list.par_iter().map(|&n| simulate(&p, n)).collect());
    let results: Vec<_> = results.into_iter().collect::<Result<_>>()?;

    fs::create_dir_all(out)?;
    let mut runs = Vec::with_capacity(results.len());
    for (&n, (traj, report)) in p.config.n_list.iter().zip(&results) {
        write_run_files(&out.join(format!("n_{n}")), traj, report)?;
        runs.push(RunRecord {
            n,
            passed: report.passed(),
            violations: report.violations.len(),
            warnings: report.warnings.clone(),
            integrator: traj.metadata.clone(),
        });
    }
    let summary = RunSummary { runs };
    write_manifest(out, config, &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    version: &'a str,
    config: &'a ExperimentConfig,
    results: &'a T,
    files: BTreeMap<String, String>,
}

/// Writes `manifest.json` with the SHA-256 of every other file under `out`.
pub fn write_manifest<T: Serialize>(out: &Path, config: &ExperimentConfig, results: &T) -> Result<()> {
    let mut files = BTreeMap::new();
    collect_checksums(out, out, &mut files)?;
    files.remove("manifest.json");
    let manifest = Manifest {
        version: VERSION,
        config,
        results,
        files,
    };
    let mut f = create(&out.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn collect_checksums(root: &Path, dir: &Path, files: &mut BTreeMap<String, String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_checksums(root, &path, files)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("walk stays under the root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            files.insert(rel, format!("{:x}", Sha256::digest(fs::read(&path)?)));
        }
    }
    Ok(())
}

/// Reference solution at `t_end`.
#[derive(Debug, Clone)]
pub enum Oracle {
    Exact {
        solution: ExactSolution,
        projection: PiecewiseConstantDensity,
    },
    Godunov {
        density: PiecewiseConstantDensity,
    },
}

impl Oracle {
    pub fn build(p: &Prepared) -> Result<Self> {
        let t = p.config.t_end;
        let settings = &p.config.oracle;
        let exact = || -> Result<Self> {
            let solution = ExactSolution::new(&p.datum, &p.model)?;
            if t > solution.horizon() {
                return Err(Error::UnsupportedFlux(format!(
                    "waves interact at t = {} before t_end = {t}",
                    solution.horizon()
                )));
            }
            let projection = solution.projection(t, settings.projection_cells)?;
            Ok(Self::Exact {
                solution,
                projection,
            })
        };
        let godunov_oracle = || -> Result<Self> {
            let dx = settings
                .dx
                .unwrap_or(p.datum.support_span() / DEFAULT_GODUNOV_CELLS);
            let run = godunov(&p.datum, &p.model, dx, settings.cfl, t)?;
            Ok(Self::Godunov {
                density: run.grid.density()?,
            })
        };
        if t <= 0.0 {
            return Err(Error::Config("a convergence study needs t_end > 0".into()));
        }
        match settings.kind {
            OracleKind::Exact => exact(),
            OracleKind::Godunov => godunov_oracle(),
            OracleKind::Auto => exact().or_else(|e| match e {
                Error::UnsupportedFlux(_) => godunov_oracle(),
                other => Err(other),
            }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Exact { .. } => "exact",
            Self::Godunov { .. } => "godunov",
        }
    }

    pub fn density(&self) -> &PiecewiseConstantDensity {
        match self {
            Self::Exact { projection, .. } => projection,
            Self::Godunov { density } => density,
        }
    }

    /// `L¹` distance to `rho` at time `t`; exact quadrature for the exact oracle.
    pub fn l1_error(&self, rho: &PiecewiseConstantDensity, t: f64) -> Result<f64> {
        match self {
            Self::Exact { solution, .. } => solution.l1_error(rho, t),
            Self::Godunov { density } => Ok(l1_distance(rho, density)),
        }
    }

    pub fn wasserstein(&self, rho: &PiecewiseConstantDensity) -> Result<f64> {
        wasserstein(rho, self.density())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub ell: f64,
    /// `d(ρ̃(0), ρ̄)`.
    pub initial_distance: f64,
    /// `ℓ (x̄_max − x̄_min)`.
    pub initial_bound: f64,
    pub initial_bound_holds: bool,
    /// `d(ρ̂(T), oracle)`.
    pub wasserstein_error: f64,
    /// `∫|ρ̂(T) − oracle|`.
    pub l1_error: f64,
    /// `log(e_prev/e) / log(N/N_prev)`, absent on the first row.
    pub l1_order: Option<f64>,
    pub wasserstein_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub oracle: String,
    pub t_end: f64,
    pub mass: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn initial_bounds_hold(&self) -> bool {
        self.rows.iter().all(|r| r.initial_bound_holds)
    }

    pub fn l1_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].l1_error < w[0].l1_error)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "n,ell,initial_distance,initial_bound,wasserstein_error,l1_error,l1_order,wasserstein_order"
        )?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.ell,
                r.initial_distance,
                r.initial_bound,
                r.wasserstein_error,
                r.l1_error,
                opt(r.l1_order),
                opt(r.wasserstein_order)
            )?;
        }
        Ok(())
    }
}

/// Slack on the initial-distance bound.
pub const INITIAL_BOUND_TOLERANCE: f64 = 1e-10;

fn order(prev: &ConvergenceRow, e_prev: f64, n: usize, e: f64) -> Option<f64> {
    if e_prev > 0.0 && e > 0.0 {
        Some((e_prev / e).ln() / (n as f64 / prev.n as f64).ln())
    } else {
        None
    }
}

/// Errors against the oracle at `t_end` for every `N` of the configuration.
pub fn convergence_study(config: &ExperimentConfig, jobs: usize) -> Result<ConvergenceTable> {
    let p = config.prepare()?;
    if p.config.n_list.len() < 3 {
        return Err(Error::Config("a convergence study needs at least three values of N".into()));
    }
    let oracle = Oracle::build(&p)?;
    let span = p.datum.support_span();
    let t = p.config.t_end;
    let cells: Vec<Result<(usize, f64, f64, f64, f64)>> = thread_pool(jobs)?.install(|| {
        p.config
            .n_list
            .par_iter()
            .map(|&n| {
                let c0 = p.datum.atomize(n)?;
                let initial = wasserstein(&empirical(&c0), &p.datum)?;
                let traj = integrate(&c0, &p.model, t, &p.config.integrator, &[t])?;
                let rho = hat_density(traj.last());
                let w = oracle.wasserstein(&rho)?;
                let l1 = oracle.l1_error(&rho, t)?;
                Ok((n, c0.mass_per_particle(), initial, w, l1))
            })
            .collect()
    });
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(cells.len());
    for cell in cells {
        let (n, ell, initial, w, l1) = cell?;
        let bound = ell * span;
        let (l1_order, wasserstein_order) = match rows.last() {
            Some(prev) => (order(prev, prev.l1_error, n, l1), order(prev, prev.wasserstein_error, n, w)),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            n,
            ell,
            initial_distance: initial,
            initial_bound: bound,
            initial_bound_holds: initial <= bound + INITIAL_BOUND_TOLERANCE,
            wasserstein_error: w,
            l1_error: l1,
            l1_order,
            wasserstein_order,
        });
    }
    Ok(ConvergenceTable {
        scenario: p.config.scenario.label().into(),
        oracle: oracle.label().into(),
        t_end: t,
        mass: p.datum.total_mass(),
        rows,
    })
}

/// Runs [`convergence_study`] and writes `convergence.{csv,json}` and
/// `manifest.json` under `out`.
pub fn write_convergence(config: &ExperimentConfig, out: &Path, jobs: usize) -> Result<ConvergenceTable> {
    let table = convergence_study(config, jobs)?;
    fs::create_dir_all(out)?;
    let mut f = create(&out.join("convergence.csv"))?;
    table.write_csv(&mut f)?;
    f.flush()?;
    let mut f = create(&out.join("convergence.json"))?;
    serde_json::to_writer_pretty(&mut f, &table)?;
    writeln!(f)?;
    f.flush()?;
    write_manifest(out, config, &table)?;
    Ok(table)
}

/// Sampled assumption and concavity report for the configured model on
/// `[0, R]`, `R` the sup norm of the configured datum.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub model: String,
    pub r: f64,
    pub assumptions: crate::velocity::AssumptionReport,
    pub flux_concave: bool,
}

impl AssumptionCheck {
    pub fn passed(&self) -> bool {
        self.assumptions.all_hold()
    }
}

pub fn check_assumptions(config: &ExperimentConfig) -> Result<AssumptionCheck> {
    let p = config.prepare()?;
    let r = p.datum.sup_norm();
    Ok(AssumptionCheck {
        model: format!("{:?}", p.model.kind()),
        r,
        assumptions: p.model.check_assumptions(r, crate::diagnostics::ASSUMPTION_SAMPLES)?,
        flux_concave: p.model.flux_is_concave(r, crate::reference::CONCAVITY_SAMPLES),
    })
}
