//! Uniform space/time grids and the per-node state container.

use crate::algebra::{ComponentKind, NodeState, Weight};
use crate::error::{Error, Result};

/// Uniform grid `x_j = x_left + j h`, `j = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_left: f64,
    x_right: f64,
    intervals: usize,
}

impl Grid1D {
    pub fn new(x_left: f64, x_right: f64, intervals: usize) -> Result<Self> {
        make_grid(x_left, x_right, intervals)
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    /// Interval count `N`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.x_right - self.x_left) / self.intervals as f64
    }

    /// Node position, anchored at the left endpoint; the last node is `x_right` exactly.
    pub fn x(&self, j: usize) -> f64 {
        if j == self.intervals {
            self.x_right
        } else {
            self.x_left + j as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.intervals).map(move |j| self.x(j))
    }

    /// Same endpoints, `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Grid1D {
        Grid1D {
            intervals: self.intervals * factor,
            ..*self
        }
    }
}

pub fn make_grid(x_left: f64, x_right: f64, intervals: usize) -> Result<Grid1D> {
    if intervals < 2 || !(x_right > x_left) || !x_left.is_finite() || !x_right.is_finite() {
        return Err(Error::DegenerateDomain {
            x_left,
            x_right,
            intervals,
        });
    }
    Ok(Grid1D {
        x_left,
        x_right,
        intervals,
    })
}

/// Temporal ladder `t_n = n tau`, `n = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, steps: usize) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
        }
        Ok(Self { tau, steps })
    }

    /// The coarsest uniform ladder reaching `t_final` exactly with steps no
    /// longer than `tau_max`.
    pub fn covering(t_final: f64, tau_max: f64) -> Result<Self> {
        if !(t_final >= 0.0) || !(tau_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need t_final >= 0 and tau > 0, got t_final={t_final}, tau={tau_max}"
            )));
        }
        if t_final == 0.0 {
            return Self::new(tau_max, 0);
        }
        // Tolerate rounding in t_final / tau_max landing just above an integer.
        let steps = (t_final / tau_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self::new(t_final / steps as f64, steps)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn t_final(&self) -> f64 {
        self.t(self.steps)
    }
}

/// Courant number(s) of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CourantNumber<W> {
    /// `D tau / h^2` in the weight algebra: one value per equation for systems,
    /// purely imaginary for the Schrodinger case.
    pub value: W,
    /// `max_k |D_k| tau / h^2`, the single number used to label a run.
    pub star: f64,
}

pub fn courant<W: Weight>(diffusion: W, tau: f64, h: f64) -> Result<CourantNumber<W>> {
    if !(h > 0.0) || !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "courant number needs h > 0 and tau > 0, got h={h}, tau={tau}"
        )));
    }
    let ratio = tau / (h * h);
    Ok(CourantNumber {
        value: diffusion.scaled(ratio),
        star: diffusion.max_modulus() * ratio,
    })
}

/// Time step giving the labelled Courant number `nu_star = max|D| tau / h^2`.
pub fn tau_for_courant<W: Weight>(nu_star: f64, diffusion: W, h: f64) -> f64 {
    nu_star * h * h / diffusion.max_modulus()
}

/// Node values on a grid. The component kind is fixed by the node type.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<V> {
    grid: Grid1D,
    values: Vec<V>,
}

impl<V: NodeState> GridFunction<V> {
    pub fn from_values(grid: Grid1D, values: Vec<V>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::IncompatibleGrids(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![V::zero(); grid.len()],
        }
    }

    pub fn sample(grid: Grid1D, f: impl Fn(f64) -> V) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn kind(&self) -> ComponentKind {
        V::KIND
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<V> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn set_boundary(&mut self, (left, right): (V, V)) {
        self.values[0] = left;
        let last = self.values.len() - 1;
        self.values[last] = right;
    }

    pub fn boundary(&self) -> (V, V) {
        (self.values[0], self.values[self.values.len() - 1])
    }

    /// Node-wise `self - other` on identical grids.
    pub fn difference(&self, other: &GridFunction<V>) -> Result<GridFunction<V>> {
        if self.grid != other.grid {
            return Err(Error::IncompatibleGrids(format!(
                "cannot subtract functions on {:?} and {:?}",
                self.grid, other.grid
            )));
        }
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(V) -> V) -> GridFunction<V> {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().copied().map(f).collect(),
        }
    }
}

/// Keeps every second node of a function on `2N` intervals.
pub fn restrict<V: NodeState>(fine: &GridFunction<V>) -> Result<GridFunction<V>> {
    restrict_by(fine, 2)
}

/// Keeps every `factor`-th node. The coarse grid has the same endpoints.
pub fn restrict_by<V: NodeState>(fine: &GridFunction<V>, factor: usize) -> Result<GridFunction<V>> {
    let n_fine = fine.grid.intervals();
    if factor == 0 || n_fine % factor != 0 || n_fine / factor < 2 {
        return Err(Error::IncompatibleGrids(format!(
            "cannot restrict {n_fine} intervals by a factor of {factor}"
        )));
    }
    let grid = make_grid(fine.grid.x_left(), fine.grid.x_right(), n_fine / factor)?;
    let values = fine.values.iter().step_by(factor).copied().collect();
    Ok(GridFunction { grid, values })
}

/// Restricts `fine` onto `coarse`'s nodes; the interval counts must divide.
pub fn restrict_onto<V: NodeState>(fine: &GridFunction<V>, coarse: &Grid1D) -> Result<GridFunction<V>> {
    let (nf, nc) = (fine.grid.intervals(), coarse.intervals());
    if fine.grid.x_left() != coarse.x_left() || fine.grid.x_right() != coarse.x_right() {
        return Err(Error::IncompatibleGrids(format!(
            "endpoints differ: {:?} vs {:?}",
            fine.grid, coarse
        )));
    }
    if nf % nc != 0 {
        return Err(Error::IncompatibleGrids(format!(
            "{nf} intervals are not a multiple of {nc}"
        )));
    }
    restrict_by(fine, nf / nc)
}
