//! Experiment runner: configuration, seeded execution of the basis/DG
//! pipeline over an `n_b` sweep, and CSV/JSON reports.

mod report;
mod setup;

pub use report::{emit_report, parse_csv, to_csv, to_json, ReportFormat};
pub use setup::{wells, Setup};

use std::path::PathBuf;
use std::time::Instant;

use log::info;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{build_gcalb, build_lcalb, build_opt_basis, DGBasis};
use crate::dg::{discretize, relative_eigenvalue_error, solve_dg_eig};
use crate::domain::{Partition, UniformGrid};
use crate::eig::{lowest_eigenpairs, LobpcgConfig};
use crate::filter::{apply_filter, build_filter, FilterSpec};
use crate::krylov::SolverConfig;
use crate::operator::{build_gaussian_potential, Hamiltonian};
use crate::scf::{outer_scf, HFModelSpec, InnerSolver, OuterRecord, SCFConfig, SCFSystem};
use crate::{Error, Result};


#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    #[default]
    Lin1d,
    Lin2d,
    Lin3d,
    Weak2d,
    Scf1d,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lin1d => "lin1d",
            Self::Lin2d => "lin2d",
            Self::Lin3d => "lin3d",
            Self::Weak2d => "weak2d",
            Self::Scf1d => "scf1d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Gcalb,
    Lcalb,
    Opt,
    Planewave,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gcalb => "gcalb",
            Self::Lcalb => "lcalb",
            Self::Opt => "opt",
            Self::Planewave => "planewave",
        }
    }
}

/// Experiment configuration. Unset sizes take the experiment's defaults;
/// see [`Setup::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub method: Method,
    /// Grid points per dimension. For `planewave` the `nb` sweep overrides it.
    pub grid_points: Option<usize>,
    pub reference_points: Option<usize>,
    pub elements: Option<usize>,
    pub lgl_points: Option<usize>,
    /// Basis functions per element; grid points per dimension for `planewave`.
    pub nb: Vec<usize>,
    pub n: Option<usize>,
    /// Number of copies of the base box per dimension (`weak2d`).
    pub rep: usize,
    /// `b_plus - lambda_n` of the filter window.
    pub b_plus_offset: Option<f64>,
    pub poles: usize,
    pub oversampling: usize,
    /// Buffer width in elements for LC-ALB.
    pub buffer: usize,
    pub penalty_safety: f64,
    pub seed: u64,
    /// Serial pole solves and element loops; reproducible bit for bit.
    pub serial: bool,
    /// Run sweep entries concurrently.
    pub parallel_sweep: bool,
    pub gmres: SolverConfig,
    pub lobpcg_tol: f64,
    /// Directory for cached reference eigenvalues; no caching when absent.
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: HFModelSpec,
    pub scf: SCFConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentId::Lin1d,
            method: Method::Gcalb,
            grid_points: None,
            reference_points: None,
            elements: None,
            lgl_points: None,
            nb: Vec::new(),
            n: None,
            rep: 1,
            b_plus_offset: None,
            poles: 16,
            oversampling: 5,
            buffer: 1,
            penalty_safety: crate::dg::DEFAULT_SAFETY,
            seed: 0,
            serial: false,
            parallel_sweep: false,
            gmres: SolverConfig::default(),
            lobpcg_tol: 1e-12,
            cache_dir: None,
            out: None,
            model: HFModelSpec::default(),
            scf: SCFConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId, method: Method) -> Self {
        Self {
            experiment,
            method,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Sets one value by dotted key path, e.g. `scf.mix_beta = 0.3`. The
    /// value is parsed as a TOML value, falling back to a bare string.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parsed: toml::Value = toml::from_str(&format!("v = {value}"))
            .map(|t: toml::Table| t["v"].clone())
            .unwrap_or_else(|_| toml::Value::String(value.to_string()));
        let mut root = toml::Value::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("{key}: not a table")))?;
            if i + 1 == parts.len() {
                table.insert(part.to_string(), parsed.clone());
                break;
            }
            node = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        *self = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{key}: {e}")))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let supported = match self.experiment {
            ExperimentId::Scf1d => matches!(self.method, Method::Gcalb | Method::Planewave),
            ExperimentId::Weak2d => self.method != Method::Planewave,
            _ => true,
        };
        if !supported {
            return Err(Error::Config(format!(
                "method {} is not available for {}",
                self.method.name(),
                self.experiment.name()
            )));
        }
        if self.nb.contains(&0) {
            return Err(Error::Config("sweep values must be positive".into()));
        }
        if self.rep == 0 || self.poles == 0 {
            return Err(Error::Config("rep and poles must be positive".into()));
        }
        if self.rep > 1 && self.experiment != ExperimentId::Weak2d {
            return Err(Error::Config("rep applies to weak2d only".into()));
        }
        if [
            self.grid_points,
            self.reference_points,
            self.elements,
            self.lgl_points,
            self.n,
        ]
        .contains(&Some(0))
        {
            return Err(Error::Config("sizes must be positive".into()));
        }
        self.gmres.validate()
    }

    /// Sweep values, defaulting per experiment.
    pub fn sweep(&self) -> Vec<usize> {
        if !self.nb.is_empty() {
            return self.nb.clone();
        }
        match (self.experiment, self.method) {
            (ExperimentId::Scf1d, _) => vec![self.scf.nb],
            (ExperimentId::Weak2d, _) => vec![20],
            (ExperimentId::Lin1d, Method::Planewave) => vec![40, 60, 80, 100, 140],
            (ExperimentId::Lin2d, Method::Planewave) => vec![40, 60, 80, 100, 140],
            (ExperimentId::Lin3d, Method::Planewave) => vec![8, 10, 12, 14, 16, 20, 24, 32, 40],
            (ExperimentId::Lin1d, _) => vec![6, 8, 10, 12, 14],
            (ExperimentId::Lin2d, _) => vec![6, 8, 10, 12, 14, 16, 18, 20, 22],
            (ExperimentId::Lin3d, _) => vec![6, 8, 10, 14, 20],
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex_digest(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// One row of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub method: Method,
    pub n_b: usize,
    /// Relative eigenvalue error; for `scf1d` the final relative `E_X` change.
    pub err: f64,
    pub t_basis_s: f64,
    pub t_dg_s: f64,
    /// Krylov iterations per right-hand side summed over poles; for
    /// `scf1d` the total number of inner SCF steps.
    pub n_tot_iter: f64,
    pub dofs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
    pub experiment: ExperimentId,
}

/// SCF extras of an `scf1d` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScfSummary {
    pub e_x: f64,
    pub outer_iterations: usize,
    pub records: Vec<OuterRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub metadata: ReportMetadata,
    pub rows: Vec<RunMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scf: Option<ScfSummary>,
}

/// Reference eigenvalues of the experiment, cached on disk under the hash
/// of everything they depend on.
pub fn reference_eigenvalues(setup: &Setup, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    #[derive(Serialize)]
    struct Key<'a> {
        lengths: &'a [f64],
        points: usize,
        kinetic: f64,
        wells: &'a crate::operator::GaussianWellSpec,
        n: usize,
        tol: f64,
    }
    let key = Key {
        lengths: &setup.lengths,
        points: setup.reference_points,
        kinetic: setup.kinetic,
        wells: &setup.wells,
        n: setup.n,
        tol: cfg.lobpcg_tol,
    };
    let digest = hex_digest(serde_json::to_string(&key)?.as_bytes());
    let path = cfg
        .cache_dir
        .as_ref()
        .map(|d| d.join(format!("reference-{digest}.json")));
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
                if v.len() == setup.n {
                    info!("reference eigenvalues from {}", p.display());
                    return Ok(v);
                }
            }
        }
    }
    let h = setup.hamiltonian(setup.reference_points)?;
    let eig = lowest_eigenpairs(&h, setup.n, &setup.lobpcg(cfg))?;
    if let Some(p) = &path {
        std::fs::create_dir_all(p.parent().unwrap())?;
        std::fs::write(p, serde_json::to_string(&eig.eigenvalues)?)?;
    }
    Ok(eig.eigenvalues)
}

/// Runs the configured sweep and returns one row per sweep value.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let metadata = ReportMetadata {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.experiment,
    };
    let wrap = |e: Error| Error::Experiment {
        experiment: cfg.experiment.name().into(),
        source: Box::new(e),
    };
    if cfg.experiment == ExperimentId::Scf1d {
        let (rows, scf) = run_scf(cfg).map_err(wrap)?;
        return Ok(Report {
            metadata,
            rows,
            scf: Some(scf),
        });
    }
    let rows = run_linear(cfg).map_err(wrap)?;
    Ok(Report {
        metadata,
        rows,
        scf: None,
    })
}

fn run_linear(cfg: &ExperimentConfig) -> Result<Vec<RunMetrics>> {
    let setup = Setup::resolve(cfg)?;
    let reference = reference_eigenvalues(&setup, cfg)?;
    let sweep = cfg.sweep();
    if cfg.method == Method::Planewave {
        let run = |&points: &usize| -> Result<RunMetrics> {
            let t = Instant::now();
            let h = setup.hamiltonian(points)?;
            let eig = lowest_eigenpairs(&h, setup.n, &setup.lobpcg(cfg))?;
            let t_dg = t.elapsed().as_secs_f64();
            let err = relative_eigenvalue_error(&eig.eigenvalues, &reference)?;
            let dofs = points.pow(setup.dim() as u32);
            Ok(RunMetrics {
                method: cfg.method,
                n_b: points,
                err,
                t_basis_s: 0.0,
                t_dg_s: t_dg,
                n_tot_iter: 0.0,
                dofs,
            })
        };
        return sweep_map(cfg, &sweep, run);
    }

    let h = setup.hamiltonian(setup.grid_points)?;
    let grid = h.grid().clone();
    let partition = Partition::new(&grid, vec![setup.elements; setup.dim()], setup.lgl_points)?;
    let max_nb = sweep.iter().copied().max().unwrap_or(0);
    // exact eigenpairs on the working grid: window for GC-ALB, projector for Opt
    let needs_grid_eig = matches!(cfg.method, Method::Gcalb | Method::Opt);
    let grid_eig = if needs_grid_eig {
        let count = if cfg.method == Method::Opt {
            setup.n.max(max_nb)
        } else {
            setup.n
        };
        Some(lowest_eigenpairs(
            &h,
            count.min(grid.len()),
            &setup.lobpcg(cfg),
        )?)
    } else {
        None
    };
    let filter = match (&grid_eig, cfg.method) {
        (Some(e), Method::Gcalb) => {
            let (a, b) = (e.eigenvalues[0], e.eigenvalues[setup.n - 1]);
            Some(build_filter(FilterSpec::semi_infinite(
                a,
                b,
                b + setup.b_plus_offset,
                cfg.poles,
            ))?)
        }
        _ => None,
    };

    let run = |&nb: &usize| -> Result<RunMetrics> {
        let t = Instant::now();
        let mut n_tot_iter = 0.0;
        let basis: DGBasis = match cfg.method {
            Method::Gcalb => build_gcalb(
                |r| {
                    let fb =
                        apply_filter(filter.as_ref().unwrap(), &h, r, &cfg.gmres, !cfg.serial)?;
                    n_tot_iter = fb.iterations_per_rhs();
                    Ok(fb.block)
                },
                &grid,
                &partition,
                nb,
                cfg.oversampling,
                cfg.seed,
            )?,
            Method::Lcalb => build_lcalb(&h, &partition, nb, cfg.buffer, &setup.lobpcg(cfg))?,
            Method::Opt => {
                let psi: DMatrix<f64> = grid_eig
                    .as_ref()
                    .unwrap()
                    .eigenvectors
                    .columns(0, setup.n)
                    .into_owned();
                build_opt_basis(&grid, &partition, &psi, nb)?
            }
            Method::Planewave => unreachable!(),
        };
        let t_basis = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let (a, _) = discretize(&h, &basis, cfg.penalty_safety, None)?;
        let sol = solve_dg_eig(&a, setup.n.min(a.dim()))?;
        let t_dg = t.elapsed().as_secs_f64();
        let err = if sol.eigenvalues.len() == setup.n {
            relative_eigenvalue_error(&sol.eigenvalues, &reference)?
        } else {
            f64::INFINITY
        };
        info!(
            "{} {} n_b = {nb}: err {err:.3e}",
            cfg.experiment.name(),
            cfg.method.name()
        );
        Ok(RunMetrics {
            method: cfg.method,
            n_b: nb,
            err,
            t_basis_s: t_basis,
            t_dg_s: t_dg,
            n_tot_iter,
            dofs: basis.total(),
        })
    };
    sweep_map(cfg, &sweep, run)
}

fn sweep_map<F>(cfg: &ExperimentConfig, sweep: &[usize], run: F) -> Result<Vec<RunMetrics>>
where
    F: Fn(&usize) -> Result<RunMetrics> + Sync + Send,
{
    if cfg.parallel_sweep && !cfg.serial {
        sweep.par_iter().map(run).collect()
    } else {
        sweep.iter().map(run).collect()
    }
}

fn run_scf(cfg: &ExperimentConfig) -> Result<(Vec<RunMetrics>, ScfSummary)> {
    let nb = cfg.sweep()[0];
    let mut scf = cfg.scf.clone();
    scf.nb = nb;
    scf.seed = cfg.seed;
    scf.parallel = !cfg.serial;
    let solver = match cfg.method {
        Method::Planewave => InnerSolver::Planewave,
        _ => InnerSolver::Gcalb,
    };
    let sys = SCFSystem::new(cfg.model.clone(), scf)?;
    let t = Instant::now();
    let run = outer_scf(&sys, solver)?;
    let elapsed = t.elapsed().as_secs_f64();
    let last = run.records.last().unwrap();
    let dofs = match solver {
        InnerSolver::Planewave => sys.grid.len(),
        InnerSolver::Gcalb => nb * sys.cfg.elements,
    };
    let row = RunMetrics {
        method: cfg.method,
        n_b: nb,
        err: last.rel_change.unwrap_or(f64::NAN),
        t_basis_s: elapsed,
        t_dg_s: 0.0,
        n_tot_iter: run.records.iter().map(|r| r.inner_iterations as f64).sum(),
        dofs,
    };
    let summary = ScfSummary {
        e_x: run.state.e_x,
        outer_iterations: run.records.len(),
        records: run.records,
    };
    Ok((vec![row], summary))
}

/// Grid for a given number of points per dimension.
pub(crate) fn cube_grid(lengths: &[f64], points: usize) -> Result<UniformGrid> {
    UniformGrid::new(lengths.to_vec(), vec![points; lengths.len()])
}

pub(crate) fn potential_on(setup: &Setup, grid: &UniformGrid) -> Result<Vec<f64>> {
    build_gaussian_potential(&setup.wells, grid)
}

impl Setup {
    /// Hamiltonian with `points` grid points per dimension.
    pub fn hamiltonian(&self, points: usize) -> Result<Hamiltonian> {
        let grid = cube_grid(&self.lengths, points)?;
        let v = potential_on(self, &grid)?;
        Ok(Hamiltonian::new(grid, self.kinetic, v)?.with_analytic_potential(self.wells.clone()))
    }

    pub fn lobpcg(&self, cfg: &ExperimentConfig) -> LobpcgConfig {
        LobpcgConfig {
            tol: cfg.lobpcg_tol,
            seed: cfg.seed,
            ..LobpcgConfig::default()
        }
    }
}
