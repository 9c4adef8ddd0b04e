//! The small scalar algebra the scheme kernels are written over.
//!
//! A node of the state carries one real value, a real pair `(u, w)`, or one
//! complex value `psi = u + i w`. Scheme weights act on node values through
//! [`NodeState::weigh`]: ordinary multiplication for real scalars,
//! componentwise multiplication for pairs (each equation of a quasi-diagonal
//! system has its own Courant number), and complex multiplication for the
//! Schrodinger case.
//!
//! The linearized correction needs a small linear solve per node. For real
//! scalars it is a division; for pairs and complex values it is a 2x2 real
//! system, because the complex nonlinearity `i beta |psi|^2 psi` has no complex
//! derivative and its Jacobian is only available as a real 2x2 matrix.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

/// Which component layout a grid function carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    RealScalar,
    RealPair,
    ComplexScalar,
}

impl ComponentKind {
    pub fn component_count(self) -> usize {
        match self {
            ComponentKind::RealScalar => 1,
            ComponentKind::RealPair | ComponentKind::ComplexScalar => 2,
        }
    }

    /// Column names used when a state is written out component by component.
    pub fn component_names(self) -> &'static [&'static str] {
        match self {
            ComponentKind::RealScalar => &["u"],
            ComponentKind::RealPair => &["u", "w"],
            ComponentKind::ComplexScalar => &["re", "im"],
        }
    }
}

/// Row-major real 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([[a, 0.0], [0.0, b]])
    }

    /// Real representation of multiplication by a complex number.
    pub fn from_complex(z: Complex64) -> Self {
        Mat2([[z.re, -z.im], [z.im, z.re]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = &self.0;
        Mat2([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    pub fn sub(&self, other: &Mat2) -> Self {
        let (a, b) = (&self.0, &other.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Largest and smallest singular values.
    pub fn singular_values(&self) -> (f64, f64) {
        let fro2: f64 = self.0.iter().flatten().map(|x| x * x).sum();
        let det = self.det().abs();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        let smax = ((fro2 + disc) / 2.0).sqrt();
        let smin = if smax > 0.0 { det / smax } else { 0.0 };
        (smax, smin)
    }

    /// Solves `self * x = rhs` by Cramer's rule. Caller checks conditioning.
    pub fn solve(&self, rhs: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        let det = self.det();
        [
            (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det,
            (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
        ]
    }
}

/// Thresholds that turn a near-singular linearization into an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationGuard {
    /// Relative floor: the smallest singular value of `B0 - qJ` must exceed
    /// `floor * max(1, |b0|)`.
    pub floor: f64,
    /// Cap on the 2x2 condition number.
    pub condition_cap: f64,
}

impl Default for LinearizationGuard {
    fn default() -> Self {
        Self {
            floor: 1e-8,
            condition_cap: 1e12,
        }
    }
}

/// How a pair-valued node is corrected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Each equation corrected with its own diagonal derivative, `u` then `w`.
    #[default]
    Diagonal,
    /// Both components corrected jointly with the full 2x2 Jacobian.
    Block,
}

/// Scalar type of the scheme weights and Courant numbers.
pub trait Weight: Copy + Debug + PartialEq + Send + Sync + 'static {
    /// `slope * self + offset`, the shape of every compact-scheme weight.
    fn affine(self, slope: f64, offset: f64) -> Self;
    fn scaled(self, s: f64) -> Self;
    /// Largest modulus over components.
    fn max_modulus(self) -> f64;
}

impl Weight for f64 {
    fn affine(self, slope: f64, offset: f64) -> Self {
        slope * self + offset
    }
    fn scaled(self, s: f64) -> Self {
        self * s
    }
    fn max_modulus(self) -> f64 {
        self.abs()
    }
}

impl Weight for [f64; 2] {
    fn affine(self, slope: f64, offset: f64) -> Self {
        [slope * self[0] + offset, slope * self[1] + offset]
    }
    fn scaled(self, s: f64) -> Self {
        [self[0] * s, self[1] * s]
    }
    fn max_modulus(self) -> f64 {
        self[0].abs().max(self[1].abs())
    }
}

impl Weight for Complex64 {
    fn affine(self, slope: f64, offset: f64) -> Self {
        self * slope + offset
    }
    fn scaled(self, s: f64) -> Self {
        self * s
    }
    fn max_modulus(self) -> f64 {
        self.norm()
    }
}

/// Value held at one grid node.
pub trait NodeState:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
{
    type Weight: Weight;
    type Jacobian: Copy + Debug + Send + Sync;

    const KIND: ComponentKind;

    fn zero() -> Self;

    /// Action of a scheme weight on a node value.
    fn weigh(w: Self::Weight, v: Self) -> Self;

    /// Euclidean modulus of the node value.
    fn norm(self) -> f64;

    fn components(self) -> [f64; 2];

    /// Inverse of [`NodeState::components`]; the second slot is ignored for scalars.
    fn from_components(c: [f64; 2]) -> Self;

    /// `B0 - q J` as a real matrix (only the `[0][0]` entry for real scalars).
    fn linearization(b0: Self::Weight, q: f64, jac: Self::Jacobian) -> Mat2;

    /// Damped linearized correction `omega (B0 - qJ)^{-1} r`.
    fn correction(
        b0: Self::Weight,
        q: f64,
        jac: Self::Jacobian,
        r: Self,
        omega: f64,
        guard: &LinearizationGuard,
    ) -> std::result::Result<Self, String>;

    /// One relaxation visit to a node. `residual_at` evaluates the node's
    /// equation residual with the node value replaced by its argument and
    /// `jacobian_at` the nonlinearity Jacobian; the returned value is the
    /// total correction applied to `current`.
    fn relax<R, J>(
        current: Self,
        residual_at: R,
        jacobian_at: J,
        b0: Self::Weight,
        q: f64,
        omega: f64,
        _mode: JacobianMode,
        guard: &LinearizationGuard,
    ) -> std::result::Result<Self, String>
    where
        R: Fn(Self) -> Self,
        J: Fn(Self) -> Self::Jacobian,
    {
        let r = residual_at(current);
        Self::correction(b0, q, jacobian_at(current), r, omega, guard)
    }
}

fn check_matrix(m: &Mat2, b0_scale: f64, guard: &LinearizationGuard) -> std::result::Result<(), String> {
    let (smax, smin) = m.singular_values();
    let floor = guard.floor * b0_scale.max(1.0);
    if !(smin > floor) {
        return Err(format!(
            "smallest singular value {smin:e} of B0 - qJ below floor {floor:e}"
        ));
    }
    let cond = smax / smin;
    if cond > guard.condition_cap {
        return Err(format!(
            "condition number {cond:e} of B0 - qJ exceeds cap {:e}",
            guard.condition_cap
        ));
    }
    Ok(())
}

fn scalar_correction(
    b0: f64,
    q: f64,
    dphi: f64,
    r: f64,
    omega: f64,
    guard: &LinearizationGuard,
) -> std::result::Result<f64, String> {
    let denom = b0 - q * dphi;
    let floor = guard.floor * b0.abs().max(1.0);
    if !(denom.abs() > floor) {
        return Err(format!(
            "denominator b0 - q*phi' = {denom:e} below floor {floor:e}"
        ));
    }
    Ok(omega * r / denom)
}

impl NodeState for f64 {
    type Weight = f64;
    type Jacobian = f64;
    const KIND: ComponentKind = ComponentKind::RealScalar;

    fn zero() -> Self {
        0.0
    }
    fn weigh(w: f64, v: f64) -> f64 {
        w * v
    }
    fn norm(self) -> f64 {
        self.abs()
    }
    fn components(self) -> [f64; 2] {
        [self, 0.0]
    }
    fn from_components(c: [f64; 2]) -> Self {
        c[0]
    }
    fn linearization(b0: f64, q: f64, jac: f64) -> Mat2 {
        Mat2([[b0 - q * jac, 0.0], [0.0, 0.0]])
    }
    fn correction(
        b0: f64,
        q: f64,
        jac: f64,
        r: f64,
        omega: f64,
        guard: &LinearizationGuard,
    ) -> std::result::Result<f64, String> {
        scalar_correction(b0, q, jac, r, omega, guard)
    }
}

/// Node value of a two-equation quasi-diagonal system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pair {
    pub u: f64,
    pub w: f64,
}

impl Pair {
    pub const fn new(u: f64, w: f64) -> Self {
        Pair { u, w }
    }
}

impl Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair::new(self.u + o.u, self.w + o.w)
    }
}

impl Sub for Pair {
    type Output = Pair;
    fn sub(self, o: Pair) -> Pair {
        Pair::new(self.u - o.u, self.w - o.w)
    }
}

impl Neg for Pair {
    type Output = Pair;
    fn neg(self) -> Pair {
        Pair::new(-self.u, -self.w)
    }
}

impl Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, s: f64) -> Pair {
        Pair::new(self.u * s, self.w * s)
    }
}

impl AddAssign for Pair {
    fn add_assign(&mut self, o: Pair) {
        self.u += o.u;
        self.w += o.w;
    }
}

impl NodeState for Pair {
    type Weight = [f64; 2];
    type Jacobian = Mat2;
    const KIND: ComponentKind = ComponentKind::RealPair;

    fn zero() -> Self {
        Pair::default()
    }
    fn weigh(w: [f64; 2], v: Pair) -> Pair {
        Pair::new(w[0] * v.u, w[1] * v.w)
    }
    fn norm(self) -> f64 {
        self.u.hypot(self.w)
    }
    fn components(self) -> [f64; 2] {
        [self.u, self.w]
    }
    fn from_components(c: [f64; 2]) -> Self {
        Pair::new(c[0], c[1])
    }
    fn linearization(b0: [f64; 2], q: f64, jac: Mat2) -> Mat2 {
        Mat2::diag(b0[0], b0[1]).sub(&jac.scale(q))
    }
    fn correction(
        b0: [f64; 2],
        q: f64,
        jac: Mat2,
        r: Pair,
        omega: f64,
        guard: &LinearizationGuard,
    ) -> std::result::Result<Pair, String> {
        let m = Self::linearization(b0, q, jac);
        check_matrix(&m, b0.max_modulus(), guard)?;
        let d = m.solve([r.u, r.w]);
        Ok(Pair::new(omega * d[0], omega * d[1]))
    }

    fn relax<R, J>(
        current: Pair,
        residual_at: R,
        jacobian_at: J,
        b0: [f64; 2],
        q: f64,
        omega: f64,
        mode: JacobianMode,
        guard: &LinearizationGuard,
    ) -> std::result::Result<Pair, String>
    where
        R: Fn(Pair) -> Pair,
        J: Fn(Pair) -> Mat2,
    {
        match mode {
            JacobianMode::Block => {
                let r = residual_at(current);
                Self::correction(b0, q, jacobian_at(current), r, omega, guard)
            }
            JacobianMode::Diagonal => {
                let r = residual_at(current);
                let du = scalar_correction(b0[0], q, jacobian_at(current).0[0][0], r.u, omega, guard)?;
                let moved = Pair::new(current.u + du, current.w);
                let r = residual_at(moved);
                let dw = scalar_correction(b0[1], q, jacobian_at(moved).0[1][1], r.w, omega, guard)?;
                Ok(Pair::new(du, dw))
            }
        }
    }
}

impl NodeState for Complex64 {
    type Weight = Complex64;
    type Jacobian = Mat2;
    const KIND: ComponentKind = ComponentKind::ComplexScalar;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn weigh(w: Complex64, v: Complex64) -> Complex64 {
        w * v
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
    fn components(self) -> [f64; 2] {
        [self.re, self.im]
    }
    fn from_components(c: [f64; 2]) -> Self {
        Complex64::new(c[0], c[1])
    }
    fn linearization(b0: Complex64, q: f64, jac: Mat2) -> Mat2 {
        Mat2::from_complex(b0).sub(&jac.scale(q))
    }
    fn correction(
        b0: Complex64,
        q: f64,
        jac: Mat2,
        r: Complex64,
        omega: f64,
        guard: &LinearizationGuard,
    ) -> std::result::Result<Complex64, String> {
        let m = Self::linearization(b0, q, jac);
        check_matrix(&m, b0.norm(), guard)?;
        let d = m.solve([r.re, r.im]);
        Ok(Complex64::new(omega * d[0], omega * d[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat2_solve_and_singular_values() {
        let m = Mat2([[3.0, 1.0], [2.0, 4.0]]);
        let x = m.solve([5.0, 10.0]);
        let back = m.apply(x);
        assert!((back[0] - 5.0).abs() < 1e-14 && (back[1] - 10.0).abs() < 1e-14);
        let (smax, smin) = Mat2::diag(5.0, -2.0).singular_values();
        assert!((smax - 5.0).abs() < 1e-14);
        assert!((smin - 2.0).abs() < 1e-14);
    }

    #[test]
    fn complex_weight_matches_matrix_action() {
        let w = Complex64::new(0.3, -1.7);
        let v = Complex64::new(-2.0, 0.5);
        let direct = <Complex64 as NodeState>::weigh(w, v);
        let via = Mat2::from_complex(w).apply([v.re, v.im]);
        assert!((direct.re - via[0]).abs() < 1e-15);
        assert!((direct.im - via[1]).abs() < 1e-15);
    }

    #[test]
    fn diagonal_pair_correction_decouples() {
        let guard = LinearizationGuard::default();
        let b0 = [-22.4, -30.0];
        let q = -0.1;
        let jac = Mat2::diag(0.7, -1.3);
        let r = Pair::new(1.0, -2.0);
        let d = Pair::correction(b0, q, jac, r, 1.0, &guard).unwrap();
        let du = f64::correction(b0[0], q, 0.7, 1.0, 1.0, &guard).unwrap();
        let dw = f64::correction(b0[1], q, -1.3, -2.0, 1.0, &guard).unwrap();
        assert!((d.u - du).abs() < 1e-16);
        assert!((d.w - dw).abs() < 1e-16);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let guard = LinearizationGuard::default();
        // B0 - qJ = 0 when J = B0 / q.
        let b0 = [-20.0, -20.0];
        let q = -1.0;
        let jac = Mat2::diag(20.0, 20.0);
        assert!(Pair::correction(b0, q, jac, Pair::new(1.0, 1.0), 1.0, &guard).is_err());
        assert!(f64::correction(-20.0, -1.0, 20.0, 1.0, 1.0, &guard).is_err());
    }
}
