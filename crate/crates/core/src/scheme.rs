//! Compact-scheme weights, the per-node residual of the implicit nonlinear
//! system, and the linearized relaxation correction.
//!
//! For `u_t = D u_xx + phi(u)` one step `n -> n+1` solves, at every interior node,
//!
//! ```text
//! a0 (U[j-1] + U[j+1]) + b0 U[j]
//!     = a1 (u[j-1] + u[j+1]) + b1 u[j]
//!     + p (phi(u[j-1]) + phi(u[j+1]) + phi(U[j-1]) + phi(U[j+1]))
//!     + q (phi(U[j]) + phi(u[j]))
//! ```
//!
//! with `U` the new level and `u` the old one. The weights are
//! `a0 = 2(6nu - 1)`, `a1 = -2(6nu + 1)`, `b0 = -4(6nu + 5)`, `b1 = 4(6nu - 5)`,
//! `p = -tau`, `q = -10 tau`, where `nu = D tau / h^2` may be real (diffusion)
//! or purely imaginary (Schrodinger, `D = i`).

use crate::algebra::{JacobianMode, LinearizationGuard, Mat2, NodeState, Weight};
use crate::error::{Error, Result};

/// The six weights of the compact scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactCoefficients<W> {
    pub a0: W,
    pub a1: W,
    pub b0: W,
    pub b1: W,
    pub p: f64,
    pub q: f64,
}

pub fn compact_coefficients<W: Weight>(nu: W, tau: f64) -> CompactCoefficients<W> {
    CompactCoefficients {
        a0: nu.affine(12.0, -2.0),
        a1: nu.affine(-12.0, -2.0),
        b0: nu.affine(-24.0, -20.0),
        b1: nu.affine(24.0, -20.0),
        p: -tau,
        q: -10.0 * tau,
    }
}

/// A smooth source term `phi` with its Jacobian.
pub trait Nonlinearity<V: NodeState>: Send + Sync {
    fn eval(&self, v: V) -> V;
    fn jacobian(&self, v: V) -> V::Jacobian;
}

impl<V: NodeState, N: Nonlinearity<V> + ?Sized> Nonlinearity<V> for &N {
    fn eval(&self, v: V) -> V {
        (**self).eval(v)
    }
    fn jacobian(&self, v: V) -> V::Jacobian {
        (**self).jacobian(v)
    }
}

impl<V: NodeState, N: Nonlinearity<V> + ?Sized> Nonlinearity<V> for std::sync::Arc<N> {
    fn eval(&self, v: V) -> V {
        (**self).eval(v)
    }
    fn jacobian(&self, v: V) -> V::Jacobian {
        (**self).jacobian(v)
    }
}

/// `phi = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoSource;

impl Nonlinearity<f64> for NoSource {
    fn eval(&self, _: f64) -> f64 {
        0.0
    }
    fn jacobian(&self, _: f64) -> f64 {
        0.0
    }
}

impl Nonlinearity<crate::algebra::Pair> for NoSource {
    fn eval(&self, _: crate::algebra::Pair) -> crate::algebra::Pair {
        crate::algebra::Pair::default()
    }
    fn jacobian(&self, _: crate::algebra::Pair) -> Mat2 {
        Mat2::ZERO
    }
}

impl Nonlinearity<num_complex::Complex64> for NoSource {
    fn eval(&self, _: num_complex::Complex64) -> num_complex::Complex64 {
        num_complex::Complex64::new(0.0, 0.0)
    }
    fn jacobian(&self, _: num_complex::Complex64) -> Mat2 {
        Mat2::ZERO
    }
}

/// The six values entering the equation of one interior node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStencil<V> {
    /// `u^n_{j-1}, u^n_j, u^n_{j+1}`.
    pub previous: [V; 3],
    /// Current guesses for `u^{n+1}_{j-1}, u^{n+1}_j, u^{n+1}_{j+1}`.
    pub guess: [V; 3],
}

/// Old-level part of node `j`'s equation (constant during one time step).
pub fn known_part<V: NodeState>(
    previous: [V; 3],
    c: &CompactCoefficients<V::Weight>,
    phi: &(impl Nonlinearity<V> + ?Sized),
) -> V {
    let [l, m, r] = previous;
    V::weigh(c.a1, l + r) + V::weigh(c.b1, m) + (phi.eval(l) + phi.eval(r)) * c.p + phi.eval(m) * c.q
}

/// Residual of node `j`'s equation: right-hand side minus left-hand side
/// evaluated at the guess. Zero exactly when the guess satisfies it.
pub fn residual<V: NodeState>(
    st: &NodeStencil<V>,
    c: &CompactCoefficients<V::Weight>,
    phi: &(impl Nonlinearity<V> + ?Sized),
) -> V {
    let [gl, gm, gr] = st.guess;
    known_part(st.previous, c, phi) + (phi.eval(gl) + phi.eval(gr)) * c.p + phi.eval(gm) * c.q
        - V::weigh(c.a0, gl + gr)
        - V::weigh(c.b0, gm)
}

/// Damped correction `omega (B0 - q J)^{-1} r` for node `node`.
pub fn correction<V: NodeState>(
    node: usize,
    residual: V,
    c: &CompactCoefficients<V::Weight>,
    jacobian: V::Jacobian,
    omega: f64,
    guard: &LinearizationGuard,
) -> Result<V> {
    V::correction(c.b0, c.q, jacobian, residual, omega, guard)
        .map_err(|detail| Error::SingularLinearization { node, detail })
}

/// One step's nonlinear system: the old level folded into per-node constants
/// and a cache of `phi` at the current guess.
pub struct StepSystem<'a, V: NodeState, N: ?Sized> {
    coefs: CompactCoefficients<V::Weight>,
    phi: &'a N,
    known: Vec<V>,
}

impl<'a, V: NodeState, N: Nonlinearity<V> + ?Sized> StepSystem<'a, V, N> {
    pub fn new(previous: &[V], coefs: CompactCoefficients<V::Weight>, phi: &'a N) -> Self {
        let n = previous.len();
        let phi_prev: Vec<V> = previous.iter().map(|&v| phi.eval(v)).collect();
        let mut known = vec![V::zero(); n];
        for j in 1..n - 1 {
            known[j] = V::weigh(coefs.a1, previous[j - 1] + previous[j + 1])
                + V::weigh(coefs.b1, previous[j])
                + (phi_prev[j - 1] + phi_prev[j + 1]) * coefs.p
                + phi_prev[j] * coefs.q;
        }
        Self { coefs, phi, known }
    }

    pub fn coefficients(&self) -> &CompactCoefficients<V::Weight> {
        &self.coefs
    }

    pub fn phi(&self) -> &N {
        self.phi
    }

    /// Residual at node `j` given neighbour guesses and their cached `phi`.
    #[inline]
    pub fn residual_with(&self, j: usize, left: (V, V), centre: V, phi_centre: V, right: (V, V)) -> V {
        let c = &self.coefs;
        self.known[j] + (left.1 + right.1) * c.p + phi_centre * c.q
            - V::weigh(c.a0, left.0 + right.0)
            - V::weigh(c.b0, centre)
    }

    /// Total correction for node `j` (one relaxation visit).
    #[inline]
    pub fn relax_node(
        &self,
        j: usize,
        left: (V, V),
        centre: V,
        right: (V, V),
        omega: f64,
        mode: JacobianMode,
        guard: &LinearizationGuard,
    ) -> Result<V> {
        V::relax(
            centre,
            |v| self.residual_with(j, left, v, self.phi.eval(v), right),
            |v| self.phi.jacobian(v),
            self.coefs.b0,
            self.coefs.q,
            omega,
            mode,
            guard,
        )
        .map_err(|detail| Error::SingularLinearization { node: j, detail })
    }

    /// Residuals at every interior node for a full guess (boundary entries zero).
    pub fn residuals(&self, guess: &[V]) -> Vec<V> {
        let n = guess.len();
        let phi: Vec<V> = guess.iter().map(|&v| self.phi.eval(v)).collect();
        let mut out = vec![V::zero(); n];
        for j in 1..n - 1 {
            out[j] = self.residual_with(j, (guess[j - 1], phi[j - 1]), guess[j], phi[j], (guess[j + 1], phi[j + 1]));
        }
        out
    }
}

/// Operator norm of `B0 - q J(v)`, the factor linking the correction size to
/// the residual size at a converged node.
pub fn linearization_norm<V: NodeState>(
    c: &CompactCoefficients<V::Weight>,
    phi: &(impl Nonlinearity<V> + ?Sized),
    v: V,
) -> f64 {
    V::linearization(c.b0, c.q, phi.jacobian(v)).singular_values().0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Pair;
    use num_complex::Complex64;

    struct Fisher;
    impl Nonlinearity<f64> for Fisher {
        fn eval(&self, u: f64) -> f64 {
            u * (1.0 - u)
        }
        fn jacobian(&self, u: f64) -> f64 {
            1.0 - 2.0 * u
        }
    }

    struct ConstantSource(f64);
    impl Nonlinearity<f64> for ConstantSource {
        fn eval(&self, _: f64) -> f64 {
            self.0
        }
        fn jacobian(&self, _: f64) -> f64 {
            0.0
        }
    }

    struct Affine(f64, f64);
    impl Nonlinearity<f64> for Affine {
        fn eval(&self, u: f64) -> f64 {
            self.0 * u + self.1
        }
        fn jacobian(&self, _: f64) -> f64 {
            self.0
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn coefficients_at_small_courant() {
        let c = compact_coefficients(0.1, 0.01);
        assert!(close(c.a0, -0.8));
        assert!(close(c.a1, -3.2));
        assert!(close(c.b0, -22.4));
        assert!(close(c.b1, -17.6));
        assert_eq!(c.p, -0.01);
        assert!(close(c.q, -0.1));
    }

    #[test]
    fn coefficients_at_large_courant() {
        let c = compact_coefficients(3.2, 1.0);
        assert!(close(c.a0, 36.4));
        assert!(close(c.a1, -40.4));
        assert!(close(c.b0, -96.8));
        assert!(close(c.b1, 56.8));
        assert_eq!(compact_coefficients(1.0 / 6.0, 1.0).a0.abs() < 1e-15, true);
    }

    #[test]
    fn imaginary_courant_identities() {
        let nu = Complex64::new(0.0, 0.37);
        let c = compact_coefficients(nu, 0.01);
        assert!((c.a0 - c.a1 - nu * 24.0).norm() < 1e-14);
        assert!((c.a0 + c.a1 + 4.0).norm() < 1e-14);
        assert!((c.b1 - c.b0 - nu * 48.0).norm() < 1e-14);
        assert!((c.b0 + c.b1 + 40.0).norm() < 1e-14);
    }

    #[test]
    fn zero_stencil_has_zero_residual() {
        let c = compact_coefficients(0.1, 0.01);
        let st = NodeStencil { previous: [0.0; 3], guess: [0.0; 3] };
        assert_eq!(residual(&st, &c, &Fisher), 0.0);
    }

    #[test]
    fn linear_profile_without_source_is_steady() {
        let c = compact_coefficients(0.7, 0.01);
        let u = [0.3, 0.5, 0.7];
        let st = NodeStencil { previous: u, guess: u };
        assert!(residual(&st, &c, &NoSource).abs() < 1e-14);
    }

    #[test]
    fn constant_source_advances_by_tau_times_source() {
        let (tau, s, u0) = (0.02, 1.7, 0.4);
        let c = compact_coefficients(2.3, tau);
        let good = NodeStencil { previous: [u0; 3], guess: [u0 + tau * s; 3] };
        assert!(residual(&good, &c, &ConstantSource(s)).abs() < 1e-13);
        let bad = NodeStencil { previous: [u0; 3], guess: [u0 + 0.5 * tau * s; 3] };
        assert!(residual(&bad, &c, &ConstantSource(s)).abs() > 1e-3);
    }

    #[test]
    fn correction_examples() {
        let c = compact_coefficients(0.1, 0.01);
        let guard = LinearizationGuard::default();
        let zero = correction(1, 0.0, &c, Fisher.jacobian(0.3), 1.0, &guard).unwrap();
        assert_eq!(zero, 0.0);
        let d = correction(1, 1.0, &c, Fisher.jacobian(0.0), 1.0, &guard).unwrap();
        // 1 / (-22.4 + 0.1)
        assert!((d - (-0.044843049327354)).abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn one_correction_is_exact_for_affine_source() {
        // N = 2: a single unknown between two fixed boundary values.
        let phi = Affine(-0.8, 0.3);
        let c = compact_coefficients(0.9, 0.05);
        let prev = [0.2, 0.6, -0.1];
        let guess0 = [0.25, 0.0, -0.05];
        let st = NodeStencil { previous: prev, guess: guess0 };
        let r = residual(&st, &c, &phi);
        let d = correction(1, r, &c, phi.jacobian(0.0), 1.0, &LinearizationGuard::default()).unwrap();
        let solved = NodeStencil { previous: prev, guess: [0.25, d, -0.05] };
        assert!(residual(&solved, &c, &phi).abs() < 1e-14);
    }

    #[test]
    fn step_system_matches_stencil_residual() {
        let c = compact_coefficients(0.4, 0.01);
        let prev = [0.0, 0.3, 0.8, 0.6, 0.0];
        let guess = [0.0, 0.31, 0.79, 0.62, 0.0];
        let sys = StepSystem::new(&prev, c, &Fisher);
        let rs = sys.residuals(&guess);
        for j in 1..4 {
            let st = NodeStencil {
                previous: [prev[j - 1], prev[j], prev[j + 1]],
                guess: [guess[j - 1], guess[j], guess[j + 1]],
            };
            assert!((rs[j] - residual(&st, &c, &Fisher)).abs() < 1e-15);
        }
    }

    #[test]
    fn b0_bounded_away_from_zero() {
        for &nu in &[1e-3, 0.1, 1.0, 64.0] {
            assert!(compact_coefficients(nu, 1.0).b0.abs() >= 20.0);
        }
    }

    #[test]
    fn pair_weights_act_componentwise() {
        let c = compact_coefficients([0.1, 0.4], 0.01);
        let st = NodeStencil {
            previous: [Pair::new(1.0, 1.0); 3],
            guess: [Pair::new(1.0, 1.0); 3],
        };
        struct Zero;
        impl Nonlinearity<Pair> for Zero {
            fn eval(&self, _: Pair) -> Pair {
                Pair::default()
            }
            fn jacobian(&self, _: Pair) -> Mat2 {
                Mat2::ZERO
            }
        }
        let r = residual(&st, &c, &Zero);
        assert!(r.u.abs() < 1e-14 && r.w.abs() < 1e-14);
    }
}
