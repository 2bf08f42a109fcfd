//! One-dimensional Hartree-Fock-like model with a Yukawa interaction,
//! solved by a two-level SCF iteration.

mod anderson;
mod kernel;

pub use anderson::{anderson_mix, anderson_mix_preconditioned, AndersonHistory};
pub use kernel::{exchange_energy, hartree_potential, yukawa_symbol, KernelMode, YukawaKernel};

use log::{debug, info};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::build_gcalb;
use crate::dg::{
    discretize, functions_at_nodes, solve_dg_eig, GridSampler, LglExchange, DEFAULT_SAFETY,
};
use crate::domain::{Partition, UniformGrid};
use crate::eig::{lowest_eigenpairs, LobpcgConfig};
use crate::filter::{apply_filter, build_filter, FilterSpec};
use crate::krylov::SolverConfig;
use crate::operator::{
    build_gaussian_potential, lanczos_ritz_values, GaussianWellSpec, GridFft, Hamiltonian,
    NonlocalExchange,
};
use crate::{Error, Result};


/// Physical parameters of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HFModelSpec {
    pub length: f64,
    pub nuclei: usize,
    /// Nuclear positions; equally spaced at `(i - 1/2) L / nuclei` when absent.
    pub positions: Option<Vec<f64>>,
    pub sigma: f64,
    pub charge: f64,
    pub mu: f64,
    pub eps0: f64,
    pub alpha_x: f64,
    pub occupied: usize,
    pub kinetic: f64,
    pub kernel: KernelMode,
    /// Filter interval `[a, b]` upper end and gap end; the lower end is
    /// tracked from the spectrum and `a_-` is `-inf`.
    pub fermi_b: f64,
    pub b_plus: f64,
    pub poles: usize,
}

impl Default for HFModelSpec {
    fn default() -> Self {
        Self {
            length: 80.0,
            nuclei: 8,
            positions: None,
            sigma: 3.0,
            charge: 2.0,
            mu: 0.01,
            eps0: 10.0,
            alpha_x: 0.05,
            occupied: 16,
            kinetic: 0.5,
            kernel: KernelMode::Periodic,
            fermi_b: -3.388,
            b_plus: 0.0,
            poles: 16,
        }
    }
}

impl HFModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || self.nuclei == 0 || self.occupied == 0 {
            return Err(Error::Config(
                "length, nuclei and occupied count must be positive".into(),
            ));
        }
        if !(self.charge > 0.0) || self.charge.fract() != 0.0 {
            return Err(Error::Config(format!(
                "nuclear charge must be a positive integer, got {}",
                self.charge
            )));
        }
        if !(self.mu > 0.0) || !(self.eps0 > 0.0) || !(self.sigma > 0.0) || !(self.kinetic > 0.0) {
            return Err(Error::Config(
                "mu, eps0, sigma and the kinetic coefficient must be positive".into(),
            ));
        }
        if self.alpha_x < 0.0 {
            return Err(Error::Config(
                "exchange fraction must be non-negative".into(),
            ));
        }
        if let Some(p) = &self.positions {
            if p.len() != self.nuclei {
                return Err(Error::Config(format!(
                    "{} positions given for {} nuclei",
                    p.len(),
                    self.nuclei
                )));
            }
        }
        if !(self.fermi_b < self.b_plus) {
            return Err(Error::Config("fermi_b must lie below b_plus".into()));
        }
        Ok(())
    }

    pub fn positions(&self) -> Vec<f64> {
        self.positions.clone().unwrap_or_else(|| {
            (0..self.nuclei)
                .map(|i| (i as f64 + 0.5) * self.length / self.nuclei as f64)
                .collect()
        })
    }

    /// Nuclear background `m(x) = -sum Z / sqrt(2 pi sigma^2) exp(-(x-R)^2 / 2 sigma^2)`.
    pub fn background(&self, grid: &UniformGrid) -> Result<Vec<f64>> {
        let depth = -self.charge / (2.0 * std::f64::consts::PI * self.sigma * self.sigma).sqrt();
        let spec = GaussianWellSpec::uniform(
            self.positions().into_iter().map(|r| vec![r]).collect(),
            depth,
            self.sigma,
        );
        build_gaussian_potential(&spec, grid)
    }
}

/// Inner eigensolver used at every SCF step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerSolver {
    Gcalb,
    Planewave,
}

/// Numerical settings of the SCF iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SCFConfig {
    pub grid_points: usize,
    pub elements: usize,
    pub lgl_points: usize,
    pub nb: usize,
    pub oversampling: usize,
    pub seed: u64,
    pub inner_tol: f64,
    pub inner_max: usize,
    pub outer_tol: f64,
    pub outer_max: usize,
    pub mix_depth: usize,
    pub mix_beta: f64,
    /// Kerker wavenumber `k0`; the mixing step is filtered by
    /// `(k^2 + mu^2) / (k^2 + mu^2 + k0^2)`. Zero disables the filter.
    pub kerker_k0: f64,
    pub lanczos_steps: usize,
    /// Width of the fallback filter gap relative to `lambda_n - a`.
    pub window_gap: f64,
    pub parallel: bool,
    pub gmres: SolverConfig,
}

impl Default for SCFConfig {
    fn default() -> Self {
        Self {
            grid_points: 160,
            elements: 8,
            lgl_points: 40,
            nb: 16,
            oversampling: 5,
            seed: 0,
            inner_tol: 1e-6,
            inner_max: 30,
            outer_tol: 1e-5,
            outer_max: 20,
            mix_depth: 5,
            mix_beta: 0.5,
            kerker_k0: 0.5,
            lanczos_steps: 40,
            window_gap: 0.25,
            parallel: true,
            gmres: SolverConfig {
                restart: 160,
                max_restarts: 20,
                ..SolverConfig::default()
            },
        }
    }
}

/// Filter interval `[a, b]` with gap `(b, b_plus)`; `a_-` is `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterWindow {
    pub a: f64,
    pub b: f64,
    pub b_plus: f64,
}

/// How the GC-ALB solver should choose its filter window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowHint {
    /// Reuse a window from an earlier step.
    Keep(FilterWindow),
    /// Place a new window from an estimate of `(lambda_n, lambda_{n+1})`.
    Edge(f64, f64),
    /// Estimate the edge by Lanczos first.
    Unknown,
}

/// Occupied orbitals from one eigensolve.
#[derive(Debug, Clone)]
pub struct Orbitals {
    pub eigenvalues: Vec<f64>,
    /// Grid samples, `N_g x n`, normalized so that `sum psi^2 h = 1`.
    pub grid: DMatrix<f64>,
    /// Element-major LGL nodal values (DG solver only).
    pub nodes: Option<DMatrix<f64>>,
    /// Unoccupied eigenvalues from the same solve, as many as the sketch
    /// oversampling.
    pub unoccupied: Vec<f64>,
    /// Filter window used by the GC-ALB solver.
    pub window: Option<FilterWindow>,
    /// Krylov iterations spent in the filter.
    pub krylov_iterations: f64,
}

impl Orbitals {
    /// `(lambda_n, lambda_{n+1})` estimate from this solve.
    pub fn edge(&self) -> (f64, f64) {
        let ln = *self.eigenvalues.last().unwrap();
        (
            ln,
            self.unoccupied.first().copied().unwrap_or(f64::INFINITY),
        )
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.grid * self.grid.transpose()
    }

    /// Grid density rescaled to hold exactly `n` electrons; the rescaling
    /// only removes quadrature error from sampling discontinuous orbitals.
    pub fn density(&self, grid: &UniformGrid) -> Vec<f64> {
        let rho: Vec<f64> = self.grid.row_iter().map(|r| r.norm_squared()).collect();
        let total: f64 = rho.iter().sum::<f64>() * grid.cell_volume();
        let scale = self.eigenvalues.len() as f64 / total;
        rho.into_iter().map(|r| r * scale).collect()
    }
}

/// Converged quantities of one inner loop.
#[derive(Debug, Clone)]
pub struct SCFState {
    pub density: Vec<f64>,
    pub potential: Vec<f64>,
    pub projector: DMatrix<f64>,
    pub orbitals: Orbitals,
    pub e_x: f64,
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub state: SCFState,
    pub iterations: usize,
    /// Relative local-potential change at every inner step.
    pub potential_changes: Vec<f64>,
    pub krylov_iterations: f64,
}

/// One row of the outer-loop report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterRecord {
    pub inner_iterations: usize,
    pub e_x: f64,
    /// `|E_X^k - E_X^{k-1}| / |E_X^k|`; absent for the first outer step.
    pub rel_change: Option<f64>,
    pub potential_changes: Vec<f64>,
    pub krylov_iterations: f64,
}

#[derive(Debug, Clone)]
pub struct SCFRun {
    pub state: SCFState,
    pub records: Vec<OuterRecord>,
}

/// Nonlocal exchange frozen at a previous projector.
#[derive(Debug, Clone, Default)]
pub struct FrozenExchange {
    grid: Option<NonlocalExchange>,
    lgl: Option<LglExchange>,
}

/// Everything fixed for the duration of a run.
#[derive(Debug, Clone)]
pub struct SCFSystem {
    pub model: HFModelSpec,
    pub cfg: SCFConfig,
    pub grid: UniformGrid,
    pub partition: Partition,
    pub kernel: YukawaKernel,
    kernel_matrix: DMatrix<f64>,
    background: Vec<f64>,
    lgl_coords: Vec<f64>,
}

impl SCFSystem {
    pub fn new(model: HFModelSpec, cfg: SCFConfig) -> Result<Self> {
        model.validate()?;
        if cfg.grid_points == 0
            || cfg.elements == 0
            || !cfg.grid_points.is_multiple_of(cfg.elements)
        {
            return Err(Error::Config(format!(
                "{} grid points do not split over {} elements",
                cfg.grid_points, cfg.elements
            )));
        }
        if model.occupied > cfg.grid_points {
            return Err(Error::Config(format!(
                "{} occupied states exceed the grid",
                model.occupied
            )));
        }
        let grid = UniformGrid::new(vec![model.length], vec![cfg.grid_points])?;
        let partition = Partition::new(&grid, vec![cfg.elements], cfg.lgl_points)?;
        let kernel = YukawaKernel::new(&grid, model.mu, model.eps0, model.kernel)?;
        let kernel_matrix = kernel.matrix();
        let background = model.background(&grid)?;
        let lgl_coords = partition
            .elements()
            .iter()
            .flat_map(|e| e.nodes[0].clone())
            .collect();
        Ok(Self {
            model,
            cfg,
            grid,
            partition,
            kernel,
            kernel_matrix,
            background,
            lgl_coords,
        })
    }

    pub fn background(&self) -> &[f64] {
        &self.background
    }

    pub fn kernel_matrix(&self) -> &DMatrix<f64> {
        &self.kernel_matrix
    }

    /// Neutral starting density `-m(x)`.
    pub fn initial_density(&self) -> Vec<f64> {
        self.background.iter().map(|m| -m).collect()
    }

    /// `int K(x,y) (m(y) + rho(y)) dy`.
    pub fn local_potential(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let q: Vec<f64> = self
            .background
            .iter()
            .zip(rho)
            .map(|(m, r)| m + r)
            .collect();
        hartree_potential(&q, &self.kernel)
    }

    /// Kerker filter of a potential residual.
    pub fn kerker(&self, r: &[f64]) -> Vec<f64> {
        let k0 = self.cfg.kerker_k0;
        if k0 == 0.0 {
            return r.to_vec();
        }
        let mu2 = self.model.mu * self.model.mu;
        let symbol: Vec<f64> = self
            .grid
            .k_squared()
            .iter()
            .map(|k2| (k2 + mu2) / (k2 + mu2 + k0 * k0))
            .collect();
        let fft = GridFft::new(&self.grid);
        fft.multiply_real_pair(r, None, &symbol).0
    }

    pub fn exchange_energy(&self, p: &DMatrix<f64>) -> Result<f64> {
        exchange_energy(p, &self.kernel_matrix, &self.grid)
    }

    /// Exchange operator built from the given orbitals; none when the exchange
    /// fraction vanishes.
    pub fn freeze_exchange(&self, orbitals: Option<&Orbitals>) -> Result<FrozenExchange> {
        let Some(orb) = orbitals else {
            return Ok(FrozenExchange::default());
        };
        if self.model.alpha_x == 0.0 {
            return Ok(FrozenExchange::default());
        }
        let grid = NonlocalExchange::new(
            &self.grid,
            self.kernel_matrix.clone(),
            orb.projector(),
            self.model.alpha_x,
        )?;
        let lgl = orb.nodes.as_ref().map(|nodes| {
            let p = nodes * nodes.transpose();
            let k = self.kernel.at_points(&self.lgl_coords, &self.lgl_coords);
            LglExchange {
                matrix: k.component_mul(&p) * (-self.model.alpha_x),
            }
        });
        Ok(FrozenExchange {
            grid: Some(grid),
            lgl,
        })
    }

    fn hamiltonian(&self, potential: Vec<f64>, exchange: &FrozenExchange) -> Result<Hamiltonian> {
        let h = Hamiltonian::new(self.grid.clone(), self.model.kinetic, potential)?;
        match &exchange.grid {
            Some(x) => h.with_exchange(x.clone()),
            None => Ok(h),
        }
    }

    /// Lowest occupied states of `H` at the given local potential.
    pub fn solve(
        &self,
        potential: Vec<f64>,
        exchange: &FrozenExchange,
        solver: InnerSolver,
        hint: WindowHint,
    ) -> Result<Orbitals> {
        let h = self.hamiltonian(potential, exchange)?;
        let n = self.model.occupied;
        match solver {
            InnerSolver::Planewave => {
                let extra = self.extra_states(h.len());
                let mut res = lowest_eigenpairs(
                    &h,
                    n + extra,
                    &LobpcgConfig {
                        seed: self.cfg.seed,
                        ..LobpcgConfig::default()
                    },
                )?;
                let unoccupied = res.eigenvalues.split_off(n);
                let grid = res.eigenvectors.columns(0, n).into_owned();
                Ok(Orbitals {
                    eigenvalues: res.eigenvalues,
                    grid,
                    nodes: None,
                    unoccupied,
                    window: None,
                    krylov_iterations: 0.0,
                })
            }
            InnerSolver::Gcalb => self.solve_gcalb(&h, exchange, hint),
        }
    }

    fn extra_states(&self, dim: usize) -> usize {
        1.min(dim.saturating_sub(self.model.occupied))
    }

    fn is_fixed_window(&self, w: &FilterWindow) -> bool {
        (w.b, w.b_plus) == (self.model.fermi_b, self.model.b_plus)
    }

    /// Whether a window placed earlier still suits the spectrum of `orb`.
    pub fn window_fits(&self, w: &FilterWindow, orb: &Orbitals) -> bool {
        let (ln, ln1) = orb.edge();
        let low_ok = orb.eigenvalues[0] >= w.a - 0.25 * (w.b - w.a);
        if self.is_fixed_window(w) {
            low_ok && ln < w.b && ln1 > w.b_plus
        } else {
            low_ok && ln <= w.b && w.b - ln <= 0.1 * (w.b_plus - w.b)
        }
    }

    /// The configured window when it separates the occupied states from the
    /// rest, otherwise a gap of relative width `window_gap` just above the
    /// estimated occupied edge.
    pub fn place_window(&self, a: f64, edge: (f64, f64)) -> FilterWindow {
        let (b, b_plus) = (self.model.fermi_b, self.model.b_plus);
        let (ln, ln1) = edge;
        if a < b && ln < b && ln1 > b_plus {
            return FilterWindow { a, b, b_plus };
        }
        let ln = ln.max(a + 1e-8 * (1.0 + a.abs()));
        let width = self.cfg.window_gap * (ln - a);
        let b = ln + 0.02 * width;
        FilterWindow {
            a,
            b,
            b_plus: b + width,
        }
    }

    fn solve_gcalb(
        &self,
        h: &Hamiltonian,
        exchange: &FrozenExchange,
        hint: WindowHint,
    ) -> Result<Orbitals> {
        let cfg = &self.cfg;
        let n = self.model.occupied;
        let window = match hint {
            WindowHint::Keep(w) => w,
            WindowHint::Edge(..) | WindowHint::Unknown => {
                let steps = match hint {
                    WindowHint::Unknown => cfg.lanczos_steps.max(4 * (n + 1)),
                    _ => cfg.lanczos_steps,
                }
                .min(h.len());
                let (ritz, _) = lanczos_ritz_values(h, steps, cfg.seed)?;
                let edge = match hint {
                    WindowHint::Edge(ln, ln1) => (ln, ln1),
                    _ if ritz.len() > n => (ritz[n - 1], ritz[n]),
                    _ => {
                        return Err(Error::Config(format!(
                            "{} Lanczos steps cannot resolve {} states",
                            ritz.len(),
                            n + 1
                        )))
                    }
                };
                // lowest Ritz value; states slightly below it stay in the
                // controlled region between the Mobius pole and a
                self.place_window(ritz[0], edge)
            }
        };
        let FilterWindow { a, b, b_plus } = window;
        debug!("filter window [{a:.4}, {b:.4}] gap to {b_plus:.4}");

        let filter = build_filter(FilterSpec::semi_infinite(a, b, b_plus, self.model.poles))?;
        let mut krylov = 0.0;
        let basis = build_gcalb(
            |r| {
                let fb = apply_filter(&filter, h, r, &cfg.gmres, cfg.parallel)?;
                krylov = fb.iterations_per_rhs();
                Ok(fb.block)
            },
            &self.grid,
            &self.partition,
            cfg.nb,
            cfg.oversampling,
            cfg.seed,
        )?;
        if exchange.grid.is_some() && exchange.lgl.is_none() {
            return Err(Error::Config(
                "the DG solver needs nodal orbitals to freeze the exchange".into(),
            ));
        }
        let (a, _) = discretize(h, &basis, DEFAULT_SAFETY, exchange.lgl.as_ref())?;
        let mut sol = solve_dg_eig(&a, (n + self.extra_states(a.dim())).min(a.dim()))?;
        let unoccupied = sol.eigenvalues.split_off(n);
        let coeffs = sol.coefficients.columns(0, n).into_owned();
        let sampler = GridSampler::new(&self.grid, &self.partition)?;
        let grid = sampler.functions(&basis, &coeffs);
        let nodes = functions_at_nodes(&basis, &coeffs);
        Ok(Orbitals {
            eigenvalues: sol.eigenvalues,
            grid,
            nodes: Some(nodes),
            unoccupied,
            window: Some(window),
            krylov_iterations: krylov,
        })
    }
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let num: f64 = new
        .iter()
        .zip(old)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = new.iter().map(|a| a * a).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Self-consistency in the local potential with the exchange held fixed.
pub fn inner_scf(
    sys: &SCFSystem,
    exchange: &FrozenExchange,
    solver: InnerSolver,
    rho0: &[f64],
    mut hint: WindowHint,
) -> Result<InnerResult> {
    let cfg = &sys.cfg;
    let mut history = AndersonHistory::new(cfg.mix_depth);
    let mut v_in = sys.local_potential(rho0)?;
    let mut changes = Vec::new();
    let mut krylov = 0.0;
    let mut window = None;
    for it in 1..=cfg.inner_max {
        let orbitals = sys.solve(v_in.clone(), exchange, solver, hint)?;
        if orbitals.window != window {
            // a new filter defines a different fixed-point map
            history.clear();
            window = orbitals.window;
        }
        // the window moves only when the spectrum leaves it, so the
        // fixed-point map stays smooth in the potential
        hint = match orbitals.window {
            Some(w) if sys.window_fits(&w, &orbitals) => WindowHint::Keep(w),
            _ => {
                let (ln, ln1) = orbitals.edge();
                WindowHint::Edge(ln, ln1)
            }
        };
        krylov += orbitals.krylov_iterations;
        let rho_out = orbitals.density(&sys.grid);
        let v_out = sys.local_potential(&rho_out)?;
        let change = relative_change(&v_out, &v_in);
        changes.push(change);
        debug!("inner step {it}: potential change {change:.3e}");

        if change <= cfg.inner_tol {
            let projector = orbitals.projector();
            let e_x = sys.exchange_energy(&projector)?;
            let state = SCFState {
                density: rho_out,
                potential: v_out,
                projector,
                orbitals,
                e_x,
            };
            return Ok(InnerResult {
                state,
                iterations: it,
                potential_changes: changes,
                krylov_iterations: krylov,
            });
        }
        v_in = anderson_mix_preconditioned(&mut history, &v_in, &v_out, cfg.mix_beta, |r| {
            sys.kerker(r)
        });
    }
    Err(Error::NonConvergence {
        what: "inner SCF".into(),
        iterations: cfg.inner_max,
        residual: changes.last().copied().unwrap_or(f64::NAN),
    })
}

/// Two-level SCF: the exchange is refrozen at the last converged projector
/// until `E_X` stops changing.
pub fn outer_scf(sys: &SCFSystem, solver: InnerSolver) -> Result<SCFRun> {
    let cfg = &sys.cfg;
    let mut records: Vec<OuterRecord> = Vec::new();
    let mut state: Option<SCFState> = None;
    for k in 0..cfg.outer_max {
        let inner = match &state {
            // without exchange the frozen operator never changes
            Some(s) if sys.model.alpha_x == 0.0 => InnerResult {
                state: s.clone(),
                iterations: 0,
                potential_changes: Vec::new(),
                krylov_iterations: 0.0,
            },
            _ => {
                let exchange = sys.freeze_exchange(state.as_ref().map(|s| &s.orbitals))?;
                let rho0 = state
                    .as_ref()
                    .map(|s| s.density.clone())
                    .unwrap_or_else(|| sys.initial_density());
                let hint = match &state {
                    Some(s) => {
                        let (ln, ln1) = s.orbitals.edge();
                        WindowHint::Edge(ln, ln1)
                    }
                    None => WindowHint::Unknown,
                };
                inner_scf(sys, &exchange, solver, &rho0, hint)?
            }
        };
        let e_x = inner.state.e_x;
        let rel_change = records.last().map(|r| ((e_x - r.e_x) / e_x).abs());
        info!(
            "outer step {}: {} inner steps, E_X = {e_x:.6}, change {:?}",
            k + 1,
            inner.iterations,
            rel_change
        );
        records.push(OuterRecord {
            inner_iterations: inner.iterations,
            e_x,
            rel_change,
            potential_changes: inner.potential_changes,
            krylov_iterations: inner.krylov_iterations,
        });
        state = Some(inner.state);
        if rel_change.is_some_and(|r| r <= cfg.outer_tol) {
            return Ok(SCFRun {
                state: state.unwrap(),
                records,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "outer SCF".into(),
        iterations: cfg.outer_max,
        residual: records
            .last()
            .and_then(|r| r.rel_change)
            .unwrap_or(f64::NAN),
    })
}
