//! Independent oracles for the per-step nonlinear system.
//!
//! Nothing here calls the library's coefficient or residual code: the step
//! equations are rebuilt from the textbook weights in complex arithmetic
//! and solved densely.
#![allow(dead_code)]

use compact_scheme::{ComponentKind, Nonlinearity, NodeState};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Weights `(a0, a1, b0, b1)` for a (possibly imaginary) Courant number.
pub fn weights(nu: Complex64) -> [Complex64; 4] {
    let one = Complex64::new(1.0, 0.0);
    [
        (nu * 6.0 - one) * 2.0,
        -(nu * 6.0 + one) * 2.0,
        -(nu * 6.0 + one * 5.0) * 4.0,
        (nu * 6.0 - one * 5.0) * 4.0,
    ]
}

/// Node values as two real lanes.
#[derive(Clone, Copy)]
pub struct Lanes {
    pub kind: ComponentKind,
    /// Courant number of each lane (the second is unused for scalars).
    pub nu: [Complex64; 2],
}

impl Lanes {
    pub fn real(nu: f64) -> Self {
        Self { kind: ComponentKind::RealScalar, nu: [Complex64::new(nu, 0.0); 2] }
    }

    pub fn pair(nu: [f64; 2]) -> Self {
        Self {
            kind: ComponentKind::RealPair,
            nu: [Complex64::new(nu[0], 0.0), Complex64::new(nu[1], 0.0)],
        }
    }

    pub fn schrodinger(tau_over_h2: f64) -> Self {
        Self {
            kind: ComponentKind::ComplexScalar,
            nu: [Complex64::new(0.0, tau_over_h2); 2],
        }
    }

    fn width(&self) -> usize {
        self.kind.component_count()
    }

    /// Applies weight number `k` of the lane weights to `x`.
    fn mul(&self, k: usize, x: [f64; 2]) -> [f64; 2] {
        match self.kind {
            ComponentKind::RealScalar => [weights(self.nu[0])[k].re * x[0], 0.0],
            ComponentKind::RealPair => [weights(self.nu[0])[k].re * x[0], weights(self.nu[1])[k].re * x[1]],
            ComponentKind::ComplexScalar => {
                let z = weights(self.nu[0])[k] * Complex64::new(x[0], x[1]);
                [z.re, z.im]
            }
        }
    }
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale(s: f64, a: [f64; 2]) -> [f64; 2] {
    [s * a[0], s * a[1]]
}

/// Residual vector of the step equations (interior nodes, lanes flattened).
pub fn step_equations<V: NodeState>(
    lanes: &Lanes,
    tau: f64,
    phi: &dyn Nonlinearity<V>,
    previous: &[V],
    next: &[V],
) -> Vec<f64> {
    let n = previous.len();
    let m = lanes.width();
    let p = -tau;
    let q = -10.0 * tau;
    let f = |v: V| phi.eval(v).components();
    let c = |v: V| v.components();
    let mut out = Vec::with_capacity((n - 2) * m);
    for j in 1..n - 1 {
        let lhs = add(lanes.mul(0, add(c(next[j - 1]), c(next[j + 1]))), lanes.mul(2, c(next[j])));
        let mut rhs = add(lanes.mul(1, add(c(previous[j - 1]), c(previous[j + 1]))), lanes.mul(3, c(previous[j])));
        let side = add(add(f(previous[j - 1]), f(previous[j + 1])), add(f(next[j - 1]), f(next[j + 1])));
        rhs = add(rhs, scale(p, side));
        rhs = add(rhs, scale(q, add(f(next[j]), f(previous[j]))));
        let r = add(lhs, scale(-1.0, rhs));
        out.extend_from_slice(&r[..m]);
    }
    out
}

/// Dense Newton solve of the step equations, starting from `start`, with a
/// central-difference Jacobian. Boundary values are taken from `start`.
pub fn newton_step<V: NodeState>(
    lanes: &Lanes,
    tau: f64,
    phi: &dyn Nonlinearity<V>,
    previous: &[V],
    start: &[V],
) -> Vec<V> {
    let n = previous.len();
    let m = lanes.width();
    let dim = (n - 2) * m;
    let unpack = |x: &DVector<f64>| -> Vec<V> {
        let mut v = start.to_vec();
        for j in 1..n - 1 {
            let mut comps = [0.0; 2];
            comps[..m].copy_from_slice(&x.as_slice()[(j - 1) * m..j * m]);
            v[j] = V::from_components(comps);
        }
        v
    };
    let mut x = DVector::from_iterator(dim, start[1..n - 1].iter().flat_map(|v| v.components()[..m].to_vec()));
    let eval = |x: &DVector<f64>| DVector::from_vec(step_equations(lanes, tau, phi, previous, &unpack(x)));
    for _ in 0..60 {
        let fx = eval(&x);
        if fx.amax() < 1e-15 {
            break;
        }
        let mut jac = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let h = 1e-6 * x[k].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let col = (eval(&xp) - eval(&xm)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let dx = jac.lu().solve(&fx).expect("nonsingular Newton matrix");
        x -= dx;
    }
    unpack(&x)
}

/// Thomas elimination of `a u_{j-1} + b u_j + a u_{j+1} = d_j` on the
/// interior with Dirichlet values already folded into `d`.
pub fn thomas(a: f64, b: f64, d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut c_star = vec![0.0; n];
    let mut d_star = vec![0.0; n];
    c_star[0] = a / b;
    d_star[0] = d[0] / b;
    for i in 1..n {
        let m = b - a * c_star[i - 1];
        c_star[i] = a / m;
        d_star[i] = (d[i] - a * d_star[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_star[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_star[i] - c_star[i] * x[i + 1];
    }
    x
}

/// Direct solve of the linear (source-free) compact step for real data.
pub fn linear_step(nu: f64, previous: &[f64], left: f64, right: f64) -> Vec<f64> {
    let [a0, a1, b0, b1] = weights(Complex64::new(nu, 0.0)).map(|z| z.re);
    let n = previous.len();
    let mut d: Vec<f64> = (1..n - 1)
        .map(|j| a1 * (previous[j - 1] + previous[j + 1]) + b1 * previous[j])
        .collect();
    d[0] -= a0 * left;
    let last = d.len() - 1;
    d[last] -= a0 * right;
    let mut out = vec![left];
    out.extend(thomas(a0, b0, &d));
    out.push(right);
    out
}

pub fn max_diff<V: NodeState>(a: &[V], b: &[V]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).norm()).fold(0.0, f64::max)
}

/// One step from the problem's initial state: relaxation (library) against
/// dense Newton (oracle). Returns the max node difference.
pub fn relaxation_vs_newton<V: NodeState>(
    problem: &compact_scheme::ProblemSpec<V>,
    intervals: usize,
    lanes: Lanes,
    tau: f64,
    cfg: &compact_scheme::RelaxationConfig,
) -> f64 {
    use compact_scheme::mesh::courant;
    use compact_scheme::stepping::{euler_predict, solve_step, Discretization, PredictorKind};
    let grid = problem.grid(intervals).unwrap();
    let previous = problem.initial_state(&grid);
    let nu = courant(problem.diffusion, tau, grid.h()).unwrap().value;
    let disc = Discretization::new(nu, tau);
    let phi = problem.nonlinearity.as_ref();
    let (relaxed, _) = solve_step(&previous, PredictorKind::Euler, &disc, phi, cfg, &problem.boundary, tau).unwrap();
    let start = euler_predict(&previous, nu, tau, phi, &problem.boundary, tau);
    let newton = newton_step(&lanes, tau, phi, previous.values(), start.values());
    max_diff(relaxed.values(), &newton)
}

/// Final states of a short run under every sweep ordering (simultaneous,
/// chess, forward, alternating, centre-out, out-centre, blocked, composite).
pub fn final_states<V: NodeState>(
    problem: &compact_scheme::ProblemSpec<V>,
    n: usize,
    nu: f64,
    steps: usize,
    delta: f64,
) -> Vec<Vec<V>> {
    use compact_scheme::mesh::{tau_for_courant, TimeGrid};
    use compact_scheme::{PredictorKind, RelaxationConfig, SweepOrdering};
    let g = problem.grid(n).unwrap();
    let tau = tau_for_courant(nu, problem.diffusion, g.h());
    let time = TimeGrid::new(tau, steps).unwrap();
    [
        SweepOrdering::Simultaneous,
        SweepOrdering::Chess,
        SweepOrdering::ForwardGs,
        SweepOrdering::AlternatingGs,
        SweepOrdering::CenterOut,
        SweepOrdering::OutCenter,
        SweepOrdering::Blocked(4),
        SweepOrdering::Composite(vec![SweepOrdering::Chess, SweepOrdering::ForwardGs]),
    ]
    .into_iter()
    .map(|o| {
        let cfg = RelaxationConfig::default().with_delta(delta).with_ordering(o);
        compact_scheme::integrate(problem, &g, &time, PredictorKind::AdamsBashforth, &cfg)
            .unwrap()
            .state
            .into_values()
    })
    .collect()
}

pub fn spread<V: NodeState>(states: &[Vec<V>]) -> f64 {
    states.iter().map(|s| max_diff(s, &states[0])).fold(0.0, f64::max)
}
