//! Time stepping: explicit first guess, relaxation sweeps, the per-step
//! nonlinear solve and the outer integration loop.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::algebra::{JacobianMode, LinearizationGuard, NodeState};
use crate::error::{Error, Result};
use crate::mesh::{courant, Grid1D, GridFunction, TimeGrid};
use crate::problems::ProblemSpec;
use crate::scheme::{compact_coefficients, CompactCoefficients, Nonlinearity, StepSystem};

/// Explicit scheme supplying the first guess of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    Euler,
    /// Half-step Euler followed by a full step evaluated at the midpoint.
    /// Named Adams-Bashforth after its usual label; second order in time.
    AdamsBashforth,
}

impl PredictorKind {
    /// Explicit applications per step.
    pub fn stages(self) -> u32 {
        match self {
            PredictorKind::Euler => 1,
            PredictorKind::AdamsBashforth => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Euler => "euler",
            PredictorKind::AdamsBashforth => "ab",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PredictorKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(PredictorKind::Euler),
            "ab" | "adams_bashforth" | "adams-bashforth" => Ok(PredictorKind::AdamsBashforth),
            other => Err(format!("unknown predictor '{other}' (expected euler or ab)")),
        }
    }
}

/// Order in which the interior nodes are corrected within one relaxation pass.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SweepOrdering {
    /// All corrections computed from the frozen guess, then applied together.
    Simultaneous,
    /// Even nodes from the frozen guess, then odd nodes using the updated evens.
    Chess,
    /// Left-to-right, each node seeing its already-updated left neighbour.
    ForwardGs,
    /// Forward on even passes, right-to-left on odd passes.
    AlternatingGs,
    /// From the middle node outwards, alternating sides.
    CenterOut,
    /// From both ends inwards.
    OutCenter,
    /// Contiguous blocks relaxed independently: Gauss-Seidel inside a block,
    /// values from the start of the pass across block edges. The sweep
    /// direction alternates between passes.
    Blocked(usize),
    /// One ordering per pass, cycling through the list.
    Composite(Vec<SweepOrdering>),
}

impl fmt::Display for SweepOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepOrdering::Simultaneous => f.write_str("simultaneous"),
            SweepOrdering::Chess => f.write_str("chess"),
            SweepOrdering::ForwardGs => f.write_str("forward_gs"),
            SweepOrdering::AlternatingGs => f.write_str("alternating_gs"),
            SweepOrdering::CenterOut => f.write_str("center_out"),
            SweepOrdering::OutCenter => f.write_str("out_center"),
            SweepOrdering::Blocked(parts) => write!(f, "blocked:{parts}"),
            SweepOrdering::Composite(list) => {
                let names: Vec<String> = list.iter().map(|o| o.to_string()).collect();
                write!(f, "composite:{}", names.join("+"))
            }
        }
    }
}

impl std::str::FromStr for SweepOrdering {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(rest) = s.strip_prefix("composite:") {
            let parts = rest
                .split('+')
                .map(|p| p.parse())
                .collect::<std::result::Result<Vec<SweepOrdering>, String>>()?;
            if parts.is_empty() {
                return Err("composite ordering needs at least one member".into());
            }
            return Ok(SweepOrdering::Composite(parts));
        }
        if let Some(rest) = s.strip_prefix("blocked:") {
            let parts: usize = rest
                .parse()
                .map_err(|_| format!("bad block count '{rest}'"))?;
            if parts == 0 {
                return Err("blocked ordering needs at least one part".into());
            }
            return Ok(SweepOrdering::Blocked(parts));
        }
        match s.as_str() {
            "simultaneous" | "i" => Ok(SweepOrdering::Simultaneous),
            "chess" | "ii" => Ok(SweepOrdering::Chess),
            "forward_gs" | "iii" => Ok(SweepOrdering::ForwardGs),
            "alternating_gs" | "iv" => Ok(SweepOrdering::AlternatingGs),
            "center_out" => Ok(SweepOrdering::CenterOut),
            "out_center" => Ok(SweepOrdering::OutCenter),
            other => Err(format!("unknown sweep ordering '{other}'")),
        }
    }
}

/// Settings of the per-step relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationConfig {
    pub ordering: SweepOrdering,
    /// Stop once every node's correction norm is at most this.
    pub delta_stop: f64,
    pub max_iterations: usize,
    pub omega: f64,
    pub jacobian_mode: JacobianMode,
    pub guard: LinearizationGuard,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            ordering: SweepOrdering::Chess,
            delta_stop: 1e-12,
            max_iterations: 10_000,
            omega: 1.0,
            jacobian_mode: JacobianMode::Diagonal,
            guard: LinearizationGuard::default(),
        }
    }
}

impl RelaxationConfig {
    pub fn with_delta(mut self, delta_stop: f64) -> Self {
        self.delta_stop = delta_stop;
        self
    }

    pub fn with_ordering(mut self, ordering: SweepOrdering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_stop > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_stop must be positive, got {}",
                self.delta_stop
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {}", self.omega)));
        }
        Ok(())
    }
}

/// Dirichlet data at both ends.
#[derive(Clone)]
pub enum BoundaryData<V> {
    StaticZero,
    StaticValues(V, V),
    TimeDependent(Arc<dyn Fn(f64) -> (V, V) + Send + Sync>),
}

impl<V: NodeState> BoundaryData<V> {
    pub fn at(&self, t: f64) -> (V, V) {
        match self {
            BoundaryData::StaticZero => (V::zero(), V::zero()),
            BoundaryData::StaticValues(l, r) => (*l, *r),
            BoundaryData::TimeDependent(f) => f(t),
        }
    }
}

impl<V: fmt::Debug> fmt::Debug for BoundaryData<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::StaticZero => f.write_str("StaticZero"),
            BoundaryData::StaticValues(l, r) => f.debug_tuple("StaticValues").field(l).field(r).finish(),
            BoundaryData::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Relaxation passes.
    pub iterations: usize,
    pub final_max_correction: f64,
    pub converged: bool,
    /// Explicit predictor applications (1 for Euler, 2 for the midpoint scheme).
    pub explicit_stages: u32,
}

/// Courant number, time step and scheme weights of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization<W> {
    pub nu: W,
    pub tau: f64,
    pub coefs: CompactCoefficients<W>,
}

impl<W: crate::algebra::Weight> Discretization<W> {
    pub fn new(nu: W, tau: f64) -> Self {
        Self {
            nu,
            tau,
            coefs: compact_coefficients(nu, tau),
        }
    }
}

fn explicit_stage<V: NodeState>(
    base: &[V],
    slope_from: &[V],
    nu: V::Weight,
    tau: f64,
    phi: &(impl Nonlinearity<V> + ?Sized),
    out: &mut [V],
) {
    let n = base.len();
    for j in 1..n - 1 {
        let lap = slope_from[j - 1] - slope_from[j] * 2.0 + slope_from[j + 1];
        out[j] = base[j] + V::weigh(nu, lap) + phi.eval(slope_from[j]) * tau;
    }
}

/// Explicit Euler guess for the next level; boundary from `bc` at `t_next`.
pub fn euler_predict<V: NodeState>(
    previous: &GridFunction<V>,
    nu: V::Weight,
    tau: f64,
    phi: &(impl Nonlinearity<V> + ?Sized),
    bc: &BoundaryData<V>,
    t_next: f64,
) -> GridFunction<V> {
    let mut out = previous.clone();
    explicit_stage(previous.values(), previous.values(), nu, tau, phi, out.values_mut());
    out.set_boundary(bc.at(t_next));
    out
}

/// Two-stage guess: Euler to the half step, then a full step from the old
/// level with the spatial operator and source evaluated at the midpoint.
pub fn ab_predict<V: NodeState>(
    previous: &GridFunction<V>,
    nu: V::Weight,
    tau: f64,
    phi: &(impl Nonlinearity<V> + ?Sized),
    bc: &BoundaryData<V>,
    t_next: f64,
) -> GridFunction<V> {
    use crate::algebra::Weight;
    let mut mid = previous.clone();
    explicit_stage(previous.values(), previous.values(), nu.scaled(0.5), 0.5 * tau, phi, mid.values_mut());
    mid.set_boundary(bc.at(t_next - 0.5 * tau));
    let mut out = previous.clone();
    explicit_stage(previous.values(), mid.values(), nu, tau, phi, out.values_mut());
    out.set_boundary(bc.at(t_next));
    out
}

pub fn predict<V: NodeState>(
    kind: PredictorKind,
    previous: &GridFunction<V>,
    nu: V::Weight,
    tau: f64,
    phi: &(impl Nonlinearity<V> + ?Sized),
    bc: &BoundaryData<V>,
    t_next: f64,
) -> GridFunction<V> {
    match kind {
        PredictorKind::Euler => euler_predict(previous, nu, tau, phi, bc, t_next),
        PredictorKind::AdamsBashforth => ab_predict(previous, nu, tau, phi, bc, t_next),
    }
}

/// Mutable guess of one step plus the cached `phi` of every node.
struct Relaxer<V> {
    guess: Vec<V>,
    phi: Vec<V>,
    scratch: Vec<V>,
    scratch_phi: Vec<V>,
}

impl<V: NodeState> Relaxer<V> {
    fn new<N: Nonlinearity<V> + ?Sized>(guess: Vec<V>, phi: &N) -> Self {
        let cache = guess.iter().map(|&v| phi.eval(v)).collect();
        Self {
            guess,
            phi: cache,
            scratch: Vec::new(),
            scratch_phi: Vec::new(),
        }
    }

    #[inline]
    fn visit<N: Nonlinearity<V> + ?Sized>(
        &mut self,
        sys: &StepSystem<'_, V, N>,
        j: usize,
        cfg: &RelaxationConfig,
    ) -> Result<f64> {
        let left = (self.guess[j - 1], self.phi[j - 1]);
        let right = (self.guess[j + 1], self.phi[j + 1]);
        let d = sys.relax_node(j, left, self.guess[j], right, cfg.omega, cfg.jacobian_mode, &cfg.guard)?;
        self.guess[j] += d;
        self.phi[j] = sys.phi().eval(self.guess[j]);
        Ok(d.norm())
    }

    fn in_place<N: Nonlinearity<V> + ?Sized>(
        &mut self,
        sys: &StepSystem<'_, V, N>,
        order: impl Iterator<Item = usize>,
        cfg: &RelaxationConfig,
    ) -> Result<f64> {
        let mut max = 0.0f64;
        for j in order {
            max = max.max(self.visit(sys, j, cfg)?);
        }
        Ok(max)
    }

    fn pass<N: Nonlinearity<V> + ?Sized>(
        &mut self,
        sys: &StepSystem<'_, V, N>,
        ordering: &SweepOrdering,
        pass: usize,
        cfg: &RelaxationConfig,
    ) -> Result<f64> {
        let last = self.guess.len() - 1;
        match ordering {
            SweepOrdering::Simultaneous => {
                let mut deltas = std::mem::take(&mut self.scratch);
                deltas.clear();
                deltas.resize(self.guess.len(), V::zero());
                let mut max = 0.0f64;
                for j in 1..last {
                    let left = (self.guess[j - 1], self.phi[j - 1]);
                    let right = (self.guess[j + 1], self.phi[j + 1]);
                    let d = sys.relax_node(j, left, self.guess[j], right, cfg.omega, cfg.jacobian_mode, &cfg.guard)?;
                    max = max.max(d.norm());
                    deltas[j] = d;
                }
                for j in 1..last {
                    self.guess[j] += deltas[j];
                    self.phi[j] = sys.phi().eval(self.guess[j]);
                }
                self.scratch = deltas;
                Ok(max)
            }
            SweepOrdering::Chess => {
                let evens = self.in_place(sys, (2..last).step_by(2), cfg)?;
                let odds = self.in_place(sys, (1..last).step_by(2), cfg)?;
                Ok(evens.max(odds))
            }
            SweepOrdering::ForwardGs => self.in_place(sys, 1..last, cfg),
            SweepOrdering::AlternatingGs => {
                if pass % 2 == 0 {
                    self.in_place(sys, 1..last, cfg)
                } else {
                    self.in_place(sys, (1..last).rev(), cfg)
                }
            }
            SweepOrdering::CenterOut => self.in_place(sys, center_out(last), cfg),
            SweepOrdering::OutCenter => self.in_place(sys, out_center(last), cfg),
            SweepOrdering::Blocked(parts) => self.blocked(sys, *parts, pass, cfg),
            SweepOrdering::Composite(list) => {
                let member = &list[pass % list.len()];
                self.pass(sys, member, pass / list.len(), cfg)
            }
        }
    }

    fn blocked<N: Nonlinearity<V> + ?Sized>(
        &mut self,
        sys: &StepSystem<'_, V, N>,
        parts: usize,
        pass: usize,
        cfg: &RelaxationConfig,
    ) -> Result<f64> {
        let last = self.guess.len() - 1;
        self.scratch.clone_from(&self.guess);
        self.scratch_phi.clone_from(&self.phi);
        let mut max = 0.0f64;
        for (lo, hi) in block_bounds(last - 1, parts) {
            let order: Box<dyn Iterator<Item = usize>> = if pass % 2 == 0 {
                Box::new(lo..=hi)
            } else {
                Box::new((lo..=hi).rev())
            };
            for j in order {
                let left = if j == lo {
                    (self.scratch[j - 1], self.scratch_phi[j - 1])
                } else {
                    (self.guess[j - 1], self.phi[j - 1])
                };
                let right = if j == hi {
                    (self.scratch[j + 1], self.scratch_phi[j + 1])
                } else {
                    (self.guess[j + 1], self.phi[j + 1])
                };
                let d = sys.relax_node(j, left, self.guess[j], right, cfg.omega, cfg.jacobian_mode, &cfg.guard)?;
                self.guess[j] += d;
                self.phi[j] = sys.phi().eval(self.guess[j]);
                max = max.max(d.norm());
            }
        }
        Ok(max)
    }
}

/// Splits interior nodes `1..=interior` into at most `parts` contiguous,
/// non-empty, inclusive ranges.
pub fn block_bounds(interior: usize, parts: usize) -> Vec<(usize, usize)> {
    let parts = parts.clamp(1, interior.max(1));
    let base = interior / parts;
    let extra = interior % parts;
    let mut out = Vec::with_capacity(parts);
    let mut lo = 1;
    for k in 0..parts {
        let len = base + usize::from(k < extra);
        if len == 0 {
            continue;
        }
        out.push((lo, lo + len - 1));
        lo += len;
    }
    out
}

fn center_out(last: usize) -> impl Iterator<Item = usize> {
    let mid = last / 2;
    let mut order = Vec::with_capacity(last.saturating_sub(1));
    order.push(mid);
    for k in 1..last {
        if mid > k {
            order.push(mid - k);
        }
        if mid + k < last {
            order.push(mid + k);
        }
    }
    order.into_iter()
}

fn out_center(last: usize) -> impl Iterator<Item = usize> {
    let (mut lo, mut hi) = (1usize, last - 1);
    let mut order = Vec::with_capacity(last.saturating_sub(1));
    while lo <= hi {
        order.push(lo);
        if hi != lo {
            order.push(hi);
        }
        lo += 1;
        hi -= 1;
    }
    order.into_iter()
}

/// One relaxation pass over `guess` for the step starting from `previous`.
/// Returns the updated guess and the largest correction norm applied.
pub fn sweep<V: NodeState, N: Nonlinearity<V> + ?Sized>(
    guess: &GridFunction<V>,
    previous: &GridFunction<V>,
    coefs: &CompactCoefficients<V::Weight>,
    phi: &N,
    cfg: &RelaxationConfig,
) -> Result<(GridFunction<V>, f64)> {
    sweep_pass(guess, previous, coefs, phi, cfg, 0)
}

/// As [`sweep`], with an explicit pass index for orderings that depend on it.
pub fn sweep_pass<V: NodeState, N: Nonlinearity<V> + ?Sized>(
    guess: &GridFunction<V>,
    previous: &GridFunction<V>,
    coefs: &CompactCoefficients<V::Weight>,
    phi: &N,
    cfg: &RelaxationConfig,
    pass: usize,
) -> Result<(GridFunction<V>, f64)> {
    if guess.grid() != previous.grid() {
        return Err(Error::IncompatibleGrids("guess and previous level differ".into()));
    }
    let sys = StepSystem::new(previous.values(), *coefs, phi);
    let mut relaxer = Relaxer::new(guess.values().to_vec(), phi);
    let max = relaxer.pass(&sys, &cfg.ordering, pass, cfg)?;
    Ok((GridFunction::from_values(*guess.grid(), relaxer.guess)?, max))
}

/// Relaxes `guess` until the largest correction is within `cfg.delta_stop`.
pub fn relax_to_convergence<V: NodeState, N: Nonlinearity<V> + ?Sized>(
    guess: GridFunction<V>,
    previous: &GridFunction<V>,
    coefs: &CompactCoefficients<V::Weight>,
    phi: &N,
    cfg: &RelaxationConfig,
) -> Result<(GridFunction<V>, usize, f64)> {
    let grid = *guess.grid();
    let sys = StepSystem::new(previous.values(), *coefs, phi);
    let mut relaxer = Relaxer::new(guess.into_values(), phi);
    let mut max = f64::INFINITY;
    let mut passes = 0;
    while passes < cfg.max_iterations {
        max = relaxer.pass(&sys, &cfg.ordering, passes, cfg)?;
        passes += 1;
        if max <= cfg.delta_stop {
            return Ok((GridFunction::from_values(grid, relaxer.guess)?, passes, max));
        }
        if !max.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: passes,
        max_correction: max,
        tolerance: cfg.delta_stop,
    })
}

/// Advances one time step: predict, then relax until converged.
pub fn solve_step<V: NodeState, N: Nonlinearity<V> + ?Sized>(
    previous: &GridFunction<V>,
    predictor: PredictorKind,
    disc: &Discretization<V::Weight>,
    phi: &N,
    cfg: &RelaxationConfig,
    bc: &BoundaryData<V>,
    t_next: f64,
) -> Result<(GridFunction<V>, StepStats)> {
    let guess = predict(predictor, previous, disc.nu, disc.tau, phi, bc, t_next);
    let (state, iterations, max) = relax_to_convergence(guess, previous, &disc.coefs, phi, cfg)?;
    Ok((
        state,
        StepStats {
            iterations,
            final_max_correction: max,
            converged: true,
            explicit_stages: predictor.stages(),
        },
    ))
}

/// Outcome of an integration.
#[derive(Debug, Clone)]
pub struct RunReport<V> {
    pub state: GridFunction<V>,
    pub t_final: f64,
    /// Labelled Courant number `max|D| tau / h^2`.
    pub courant: f64,
    pub tau: f64,
    pub steps: Vec<StepStats>,
    pub wall_time: Duration,
}

impl<V> RunReport<V> {
    pub fn total_sweeps(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }

    /// Relaxation passes per time step (0 when no step was taken).
    pub fn average_iterations(&self) -> f64 {
        if self.steps.is_empty() {
            0.0
        } else {
            self.total_sweeps() as f64 / self.steps.len() as f64
        }
    }
}

/// Integrates `problem` on `grid` over `time`.
pub fn integrate<V: NodeState>(
    problem: &ProblemSpec<V>,
    grid: &Grid1D,
    time: &TimeGrid,
    predictor: PredictorKind,
    cfg: &RelaxationConfig,
) -> Result<RunReport<V>> {
    cfg.validate()?;
    let nu = courant(problem.diffusion, time.tau(), grid.h())?;
    let disc = Discretization::new(nu.value, time.tau());
    let phi = problem.nonlinearity.as_ref();
    let mut state = problem.initial_state(grid);
    let mut steps = Vec::with_capacity(time.steps());
    let started = Instant::now();
    for n in 0..time.steps() {
        let (next, stats) = solve_step(&state, predictor, &disc, phi, cfg, &problem.boundary, time.t(n + 1))
            .map_err(|e| Error::StepFailed {
                step: n + 1,
                source: Box::new(e),
            })?;
        state = next;
        steps.push(stats);
    }
    Ok(RunReport {
        state,
        t_final: time.t_final(),
        courant: nu.star,
        tau: time.tau(),
        steps,
        wall_time: started.elapsed(),
    })
}
