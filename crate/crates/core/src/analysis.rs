//! Error norms, fine-mesh references, convergence tables, Richardson
//! extrapolation and the iteration / efficiency studies.

use std::time::Duration;

use rayon::prelude::*;

use crate::algebra::{ComponentKind, NodeState};
use crate::error::{Error, Result};
use crate::mesh::{restrict_onto, tau_for_courant, Grid1D, GridFunction, TimeGrid};
use crate::problems::ProblemSpec;
use crate::stepping::{integrate, PredictorKind, RelaxationConfig, RunReport};

/// Relaxation tolerance used for fine-mesh reference runs.
pub const REFERENCE_DELTA: f64 = 1e-12;

/// Maximum node modulus, boundary included.
pub fn cheb_norm<V: NodeState>(f: &GridFunction<V>) -> f64 {
    f.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Discrete L2 norm with trapezoid weights (endpoints half-weighted).
pub fn l2_norm<V: NodeState>(f: &GridFunction<V>) -> f64 {
    let h = f.grid().h();
    let last = f.len() - 1;
    let sum: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            w * v.norm() * v.norm()
        })
        .sum();
    (h * sum).sqrt()
}

fn component_norms<V: NodeState>(f: &GridFunction<V>, k: usize) -> (f64, f64) {
    let h = f.grid().h();
    let last = f.len() - 1;
    let mut cmax = 0.0f64;
    let mut sum = 0.0;
    for (j, v) in f.values().iter().enumerate() {
        let c = v.components()[k].abs();
        cmax = cmax.max(c);
        let w = if j == 0 || j == last { 0.5 } else { 1.0 };
        sum += w * c * c;
    }
    (cmax, (h * sum).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentError {
    pub name: &'static str,
    pub c_norm: f64,
    pub l2_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub c_norm: f64,
    pub l2_norm: f64,
    /// Per-equation errors; filled for real pairs only.
    pub components: Vec<ComponentError>,
}

impl ErrorReport {
    pub fn of_difference<V: NodeState>(diff: &GridFunction<V>) -> Self {
        let components = if V::KIND == ComponentKind::RealPair {
            V::KIND
                .component_names()
                .iter()
                .enumerate()
                .map(|(k, &name)| {
                    let (c, l2) = component_norms(diff, k);
                    ComponentError {
                        name,
                        c_norm: c,
                        l2_norm: l2,
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            c_norm: cheb_norm(diff),
            l2_norm: l2_norm(diff),
            components,
        }
    }

    /// C-norm errors that rates are computed from: one per equation for
    /// pairs, otherwise the single node-modulus error.
    pub fn rate_errors(&self) -> Vec<f64> {
        if self.components.is_empty() {
            vec![self.c_norm]
        } else {
            self.components.iter().map(|c| c.c_norm).collect()
        }
    }
}

pub fn error_report<V: NodeState>(approx: &GridFunction<V>, reference: &GridFunction<V>) -> Result<ErrorReport> {
    Ok(ErrorReport::of_difference(&approx.difference(reference)?))
}

/// `log2(coarse / fine)`, defined when both errors are positive.
pub fn observed_rate(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite()).then(|| (coarse / fine).log2())
}

/// Time ladder shared by every grid of a study.
///
/// The coarsest grid fixes `M0 = max(1, round(T / tau))` with
/// `tau = nu h0^2 / max|D|`; a grid with `r` times as many intervals takes
/// `M0 r^2` steps. All grids then end exactly at `T` with one common
/// effective Courant number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyLadder {
    pub nu_nominal: f64,
    pub nu_effective: f64,
    pub base_intervals: usize,
    pub base_steps: usize,
    pub t_final: f64,
}

impl StudyLadder {
    pub fn new<V: NodeState>(problem: &ProblemSpec<V>, nu: f64, base_intervals: usize) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::InvalidParameter(format!("Courant number must be positive, got {nu}")));
        }
        let grid = problem.grid(base_intervals)?;
        let tau = tau_for_courant(nu, problem.diffusion, grid.h());
        let t_final = problem.t_final;
        let base_steps = if t_final == 0.0 {
            0
        } else {
            ((t_final / tau).round() as usize).max(1)
        };
        let nu_effective = if base_steps == 0 {
            nu
        } else {
            nu * (t_final / base_steps as f64) / tau
        };
        Ok(Self {
            nu_nominal: nu,
            nu_effective,
            base_intervals,
            base_steps,
            t_final,
        })
    }

    pub fn time_grid(&self, intervals: usize) -> Result<TimeGrid> {
        if intervals % self.base_intervals != 0 {
            return Err(Error::IncompatibleGrids(format!(
                "{intervals} intervals is not a multiple of the study base {}",
                self.base_intervals
            )));
        }
        let r = intervals / self.base_intervals;
        let steps = self.base_steps * r * r;
        if steps == 0 {
            return TimeGrid::new(1.0, 0);
        }
        TimeGrid::new(self.t_final / steps as f64, steps)
    }
}

/// Integrates `problem` on `intervals` intervals along `ladder`.
pub fn run_on_ladder<V: NodeState>(
    problem: &ProblemSpec<V>,
    ladder: &StudyLadder,
    intervals: usize,
    predictor: PredictorKind,
    cfg: &RelaxationConfig,
) -> Result<RunReport<V>> {
    let grid = problem.grid(intervals)?;
    let time = ladder.time_grid(intervals)?;
    integrate(problem, &grid, &time, predictor, cfg)
}

/// Where reference values come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceSource {
    Analytic,
    FineMesh { intervals: usize },
}

impl ReferenceSource {
    /// Analytic when available, otherwise a mesh four times finer than the
    /// finest compared grid.
    pub fn default_for<V: NodeState>(problem: &ProblemSpec<V>, finest: usize) -> Self {
        if problem.analytic.is_some() {
            ReferenceSource::Analytic
        } else {
            ReferenceSource::FineMesh { intervals: 4 * finest }
        }
    }
}

/// Reference values at the final time.
#[derive(Debug, Clone)]
pub enum Reference<V: NodeState> {
    Analytic {
        problem: ProblemSpec<V>,
        t: f64,
    },
    Mesh {
        solution: GridFunction<V>,
        /// C-norm difference between the reference and the same run on half
        /// as many intervals, at the coarser nodes.
        self_difference: f64,
    },
}

impl<V: NodeState> Reference<V> {
    pub fn on(&self, grid: &Grid1D) -> Result<GridFunction<V>> {
        match self {
            Reference::Analytic { problem, t } => problem
                .analytic_state(grid, *t)
                .ok_or_else(|| Error::InvalidParameter("problem has no analytic solution".into())),
            Reference::Mesh { solution, .. } => restrict_onto(solution, grid),
        }
    }

    pub fn self_difference(&self) -> Option<f64> {
        match self {
            Reference::Analytic { .. } => None,
            Reference::Mesh { self_difference, .. } => Some(*self_difference),
        }
    }

    pub fn intervals(&self) -> Option<usize> {
        match self {
            Reference::Analytic { .. } => None,
            Reference::Mesh { solution, .. } => Some(solution.grid().intervals()),
        }
    }
}

/// Fine-mesh reference on `n_ref` intervals along `ladder`, relaxed to
/// [`REFERENCE_DELTA`], with its self-difference against `n_ref / 2`.
pub fn reference_solution<V: NodeState>(
    problem: &ProblemSpec<V>,
    ladder: &StudyLadder,
    n_ref: usize,
    predictor: PredictorKind,
    cfg: &RelaxationConfig,
) -> Result<Reference<V>> {
    let cfg = cfg.clone().with_delta(REFERENCE_DELTA);
    let (fine, half) = rayon::join(
        || run_on_ladder(problem, ladder, n_ref, predictor, &cfg),
        || run_on_ladder(problem, ladder, n_ref / 2, predictor, &cfg),
    );
    let (fine, half) = (fine?, half?);
    let self_difference = cheb_norm(&restrict_onto(&fine.state, half.state.grid())?.difference(&half.state)?);
    Ok(Reference::Mesh {
        solution: fine.state,
        self_difference,
    })
}

pub fn build_reference<V: NodeState>(
    problem: &ProblemSpec<V>,
    ladder: &StudyLadder,
    source: ReferenceSource,
    predictor: PredictorKind,
    cfg: &RelaxationConfig,
) -> Result<Reference<V>> {
    match source {
        ReferenceSource::Analytic => {
            if problem.analytic.is_none() {
                return Err(Error::InvalidParameter(format!("{} has no analytic solution", problem.name)));
            }
            Ok(Reference::Analytic {
                problem: problem.clone(),
                t: ladder.t_final,
            })
        }
        ReferenceSource::FineMesh { intervals } => reference_solution(problem, ladder, intervals, predictor, cfg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub errors: ErrorReport,
    /// Rate against the previous (coarser) row; mean over equations for pairs.
    pub rate: Option<f64>,
    /// Per-equation rates (one entry for scalar and complex states).
    pub component_rates: Vec<Option<f64>>,
    pub average_iterations: f64,
}

/// A convergence table with the reference it was measured against.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub ladder: StudyLadder,
    pub reference_intervals: Option<usize>,
    pub reference_self_difference: Option<f64>,
}

fn check_doubling(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::InvalidParameter("empty list of grid sizes".into()));
    }
    for w in ns.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(Error::InvalidParameter(format!(
                "grid sizes must double from row to row, got {ns:?}"
            )));
        }
    }
    Ok(())
}

fn attach_rates(rows: &mut [ConvergenceRow]) {
    for i in 1..rows.len() {
        let coarse = rows[i - 1].errors.rate_errors();
        let fine = rows[i].errors.rate_errors();
        let rates: Vec<Option<f64>> = coarse.iter().zip(&fine).map(|(&c, &f)| observed_rate(c, f)).collect();
        let rate = if rates.iter().all(Option::is_some) {
            Some(rates.iter().map(|r| r.unwrap()).sum::<f64>() / rates.len() as f64)
        } else {
            None
        };
        rows[i].rate = rate;
        rows[i].component_rates = rates;
    }
}

/// Errors of the base scheme on each grid in `ns` (strictly doubling) at a
/// fixed Courant number.
pub fn convergence_table<V: NodeState>(
    problem: &ProblemSpec<V>,
    predictor: PredictorKind,
    nu: f64,
    ns: &[usize],
    cfg: &RelaxationConfig,
    source: ReferenceSource,
) -> Result<ConvergenceStudy> {
    check_doubling(ns)?;
    let ladder = StudyLadder::new(problem, nu, ns[0])?;
    let (reference, runs) = rayon::join(
        || build_reference(problem, &ladder, source, predictor, cfg),
        || {
            ns.par_iter()
                .map(|&n| run_on_ladder(problem, &ladder, n, predictor, cfg))
                .collect::<Result<Vec<_>>>()
        },
    );
    let (reference, runs) = (reference?, runs?);
    let mut rows = runs
        .iter()
        .map(|run| {
            let exact = reference.on(run.state.grid())?;
            Ok(ConvergenceRow {
                n: run.state.grid().intervals(),
                errors: error_report(&run.state, &exact)?,
                rate: None,
                component_rates: Vec::new(),
                average_iterations: run.average_iterations(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    attach_rates(&mut rows);
    Ok(ConvergenceStudy {
        rows,
        ladder,
        reference_intervals: reference.intervals(),
        reference_self_difference: reference.self_difference(),
    })
}

/// `(16 u_{h/2} - u_h) / 15` on the coarse nodes.
pub fn richardson<V: NodeState>(coarse: &GridFunction<V>, fine: &GridFunction<V>) -> Result<GridFunction<V>> {
    if fine.grid().intervals() != 2 * coarse.grid().intervals() {
        return Err(Error::IncompatibleGrids(format!(
            "Richardson needs a doubled grid, got {} and {} intervals",
            coarse.grid().intervals(),
            fine.grid().intervals()
        )));
    }
    let fine_on_coarse = restrict_onto(fine, coarse.grid())?;
    let values = coarse
        .values()
        .iter()
        .zip(fine_on_coarse.values())
        .map(|(&c, &f)| (f * 16.0 - c) * (1.0 / 15.0))
        .collect();
    GridFunction::from_values(*coarse.grid(), values)
}

/// Errors of the Richardson-extrapolated solutions built from each `N` in
/// `ns` and its doubled grid.
pub fn richardson_table<V: NodeState>(
    problem: &ProblemSpec<V>,
    predictor: PredictorKind,
    nu: f64,
    ns: &[usize],
    cfg: &RelaxationConfig,
    source: ReferenceSource,
) -> Result<ConvergenceStudy> {
    check_doubling(ns)?;
    let ladder = StudyLadder::new(problem, nu, ns[0])?;
    let mut all: Vec<usize> = ns.to_vec();
    all.push(2 * ns[ns.len() - 1]);
    let (reference, runs) = rayon::join(
        || build_reference(problem, &ladder, source, predictor, cfg),
        || {
            all.par_iter()
                .map(|&n| run_on_ladder(problem, &ladder, n, predictor, cfg))
                .collect::<Result<Vec<_>>>()
        },
    );
    let (reference, runs) = (reference?, runs?);
    let mut rows = Vec::with_capacity(ns.len());
    for pair in runs.windows(2) {
        let extrapolated = richardson(&pair[0].state, &pair[1].state)?;
        let exact = reference.on(extrapolated.grid())?;
        rows.push(ConvergenceRow {
            n: extrapolated.grid().intervals(),
            errors: error_report(&extrapolated, &exact)?,
            rate: None,
            component_rates: Vec::new(),
            average_iterations: 0.5 * (pair[0].average_iterations() + pair[1].average_iterations()),
        });
    }
    attach_rates(&mut rows);
    Ok(ConvergenceStudy {
        rows,
        ladder,
        reference_intervals: reference.intervals(),
        reference_self_difference: reference.self_difference(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub nu: f64,
    pub delta: f64,
    pub n: usize,
    pub predictor: PredictorKind,
    pub average_iterations: f64,
}

/// Average relaxation passes per time step for every `(nu, delta, N, predictor)`
/// cell. Cells are independent, so each grid takes its own ladder and keeps
/// its effective Courant number as close to `nu` as the final time allows.
pub fn iteration_study<V: NodeState>(
    problem: &ProblemSpec<V>,
    predictors: &[PredictorKind],
    nus: &[f64],
    ns: &[usize],
    deltas: &[f64],
    cfg: &RelaxationConfig,
) -> Result<Vec<IterationRecord>> {
    let mut cells = Vec::new();
    for &nu in nus {
        for &delta in deltas {
            for &n in ns {
                for &predictor in predictors {
                    cells.push((StudyLadder::new(problem, nu, n)?, nu, delta, n, predictor));
                }
            }
        }
    }
    cells
        .par_iter()
        .map(|&(ladder, nu, delta, n, predictor)| {
            let run = run_on_ladder(problem, &ladder, n, predictor, &cfg.clone().with_delta(delta))?;
            Ok(IterationRecord {
                nu,
                delta,
                n,
                predictor,
                average_iterations: run.average_iterations(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub n: usize,
    pub predictor: PredictorKind,
    pub nu: f64,
    pub delta: f64,
    pub error: f64,
}

/// Candidate regimes for the efficiency search.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegimeGrid {
    pub predictors: Vec<PredictorKind>,
    pub ns: Vec<usize>,
    pub deltas: Vec<f64>,
    pub nus: Vec<f64>,
}

impl RegimeGrid {
    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty() || self.ns.is_empty() || self.deltas.is_empty() || self.nus.is_empty()
    }
}

/// Reference for studies mixing Courant numbers: the smallest Courant number
/// of the grid on four times the largest `N` (analytic when available).
pub fn shared_reference<V: NodeState>(
    problem: &ProblemSpec<V>,
    regimes: &RegimeGrid,
    cfg: &RelaxationConfig,
) -> Result<Reference<V>> {
    let n_max = *regimes.ns.iter().max().expect("non-empty grid");
    let n_min = *regimes.ns.iter().min().expect("non-empty grid");
    let nu_min = regimes.nus.iter().copied().fold(f64::INFINITY, f64::min);
    let ladder = StudyLadder::new(problem, nu_min, n_min)?;
    let source = ReferenceSource::default_for(problem, n_max);
    build_reference(problem, &ladder, source, PredictorKind::AdamsBashforth, cfg)
}

/// One record `(N, predictor, nu, delta, C-norm error)` per regime; each
/// grid uses its own ladder, as in [`iteration_study`].
pub fn error_vs_delta_study<V: NodeState>(
    problem: &ProblemSpec<V>,
    regimes: &RegimeGrid,
    cfg: &RelaxationConfig,
    reference: &Reference<V>,
) -> Result<Vec<ErrorRecord>> {
    let mut cells = Vec::new();
    for &nu in &regimes.nus {
        for &delta in &regimes.deltas {
            for &n in &regimes.ns {
                let ladder = StudyLadder::new(problem, nu, n)?;
                for &predictor in &regimes.predictors {
                    cells.push((ladder, nu, delta, n, predictor));
                }
            }
        }
    }
    cells
        .par_iter()
        .map(|&(ladder, nu, delta, n, predictor)| {
            let run = run_on_ladder(problem, &ladder, n, predictor, &cfg.clone().with_delta(delta))?;
            let exact = reference.on(run.state.grid())?;
            Ok(ErrorRecord {
                n,
                predictor,
                nu,
                delta,
                error: cheb_norm(&run.state.difference(&exact)?),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeResult {
    pub target: f64,
    pub predictor: PredictorKind,
    pub n: usize,
    pub delta: f64,
    pub nu: f64,
    pub error: f64,
    /// Best of the timed repeats.
    pub wall_time: Duration,
    pub average_iterations: f64,
    pub total_sweeps: usize,
}

/// Every regime of the grid, timed (best of `repeats`) and scored against
/// `reference`. Runs sequentially so timings do not contend.
pub fn evaluate_regimes<V: NodeState>(
    problem: &ProblemSpec<V>,
    regimes: &RegimeGrid,
    cfg: &RelaxationConfig,
    reference: &Reference<V>,
    repeats: usize,
) -> Result<Vec<RegimeResult>> {
    let mut out = Vec::new();
    for &nu in &regimes.nus {
        for &predictor in &regimes.predictors {
            for &n in &regimes.ns {
                let ladder = StudyLadder::new(problem, nu, n)?;
                for &delta in &regimes.deltas {
                    let cfg = cfg.clone().with_delta(delta);
                    let mut best: Option<RunReport<V>> = None;
                    for _ in 0..repeats.max(1) {
                        let run = run_on_ladder(problem, &ladder, n, predictor, &cfg)?;
                        if best.as_ref().is_none_or(|b| run.wall_time < b.wall_time) {
                            best = Some(run);
                        }
                    }
                    let run = best.expect("at least one repeat");
                    let exact = reference.on(run.state.grid())?;
                    out.push(RegimeResult {
                        target: f64::NAN,
                        predictor,
                        n,
                        delta,
                        nu,
                        error: cheb_norm(&run.state.difference(&exact)?),
                        wall_time: run.wall_time,
                        average_iterations: run.average_iterations(),
                        total_sweeps: run.total_sweeps(),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// For each target error, the fastest evaluated regime reaching it (ties
/// broken by fewer total sweeps). Targets no regime reaches are omitted.
pub fn select_efficient(evaluated: &[RegimeResult], targets: &[f64]) -> Vec<RegimeResult> {
    targets
        .iter()
        .filter_map(|&target| {
            evaluated
                .iter()
                .filter(|r| r.error <= target)
                .min_by(|a, b| {
                    a.wall_time
                        .cmp(&b.wall_time)
                        .then(a.total_sweeps.cmp(&b.total_sweeps))
                })
                .map(|r| RegimeResult { target, ..r.clone() })
        })
        .collect()
}

pub fn efficiency_search<V: NodeState>(
    problem: &ProblemSpec<V>,
    targets: &[f64],
    regimes: &RegimeGrid,
    cfg: &RelaxationConfig,
    reference: &Reference<V>,
    repeats: usize,
) -> Result<Vec<RegimeResult>> {
    let evaluated = evaluate_regimes(problem, regimes, cfg, reference, repeats)?;
    Ok(select_efficient(&evaluated, targets))
}
