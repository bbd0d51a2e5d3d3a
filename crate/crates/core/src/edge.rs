//! Closed-form solutions of `−u″ + κ²u = 0` on a single edge.
//!
//! Orientation convention: `∂_ν` at an endpoint is the derivative taken in
//! the direction pointing out of the edge at that endpoint. With `H` the
//! edge block,
//!
//! ```text
//! (∂_ν u(A), ∂_ν u(B)) = H · (u(A), u(B))
//! ```
//!
//! which is the one-edge form of `∫ u′v′ + κ²uv = Σ_endpoints v ∂_ν u`.
//! Summing `H` over edges gives the vertex stiffness matrix, and a zero row
//! sum of outward derivatives at a vertex is the Kirchhoff condition.
//!
//! Every hyperbolic function is evaluated through `exp` of a nonpositive
//! argument so that very long or very stiff edges never overflow.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Below this `κl` the block is evaluated by its Taylor series around `κ = 0`.
pub const SERIES_THRESHOLD: f64 = 1e-6;
/// Above this `κl` the block is evaluated by its exponential asymptotics.
pub const ASYMPTOTIC_THRESHOLD: f64 = 350.0;

/// Symmetric 2×2 Dirichlet-to-Neumann block of one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDnBlock<T> {
    pub aa: T,
    pub ab: T,
    pub ba: T,
    pub bb: T,
}

impl<T: Scalar> EdgeDnBlock<T> {
    pub fn apply(&self, ua: T, ub: T) -> (T, T) {
        (self.aa * ua + self.ab * ub, self.ba * ua + self.bb * ub)
    }

    pub fn quadratic(&self, ua: T, ub: T) -> T {
        let (da, db) = self.apply(ua, ub);
        ua * da + ub * db
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (T, T) {
        let mean = (self.aa + self.bb) * T::half();
        let dev = ((self.aa - self.bb) * T::half()).hypot(self.ab);
        (mean - dev, mean + dev)
    }

    pub fn as_array(&self) -> [[T; 2]; 2] {
        [[self.aa, self.ab], [self.ba, self.bb]]
    }
}

/// `(z·coth z, z·csch z)` evaluated stably for `z ≥ 0`.
fn scaled_coth_csch<T: Scalar>(z: T) -> (T, T) {
    if z < T::lit(SERIES_THRESHOLD) {
        let z2 = z * z;
        let z4 = z2 * z2;
        let c = T::one() + z2 / T::lit(3.0) - z4 / T::lit(45.0);
        let s = T::one() - z2 / T::lit(6.0) + T::lit(7.0) * z4 / T::lit(360.0);
        (c, s)
    } else if z > T::lit(ASYMPTOTIC_THRESHOLD) {
        (z, T::two() * z * (-z).exp())
    } else {
        let em = -(-T::two() * z).exp_m1();
        ((T::two() - em) / em * z, T::two() * (-z).exp() / em * z)
    }
}

/// `sinh(a) / sinh(b)` for `0 ≤ a ≤ b`, `b > 0`, without overflow.
fn sinh_ratio<T: Scalar>(a: T, b: T) -> T {
    if a <= T::zero() {
        return T::zero();
    }
    (a - b).exp() * (-T::two() * a).exp_m1() / (-T::two() * b).exp_m1()
}

/// `cosh(a) / sinh(b)` for `0 ≤ a ≤ b`, `b > 0`.
fn cosh_sinh_ratio<T: Scalar>(a: T, b: T) -> T {
    (a - b).exp() * (T::one() + (-T::two() * a).exp()) / -(-T::two() * b).exp_m1()
}

fn check_edge<T: Scalar>(length: T, kappa2: T) -> Result<()> {
    if !(length > T::zero() && length.is_finite()) {
        return Err(Error::Domain(format!("edge length must be positive, got {length}")));
    }
    if !(kappa2 >= T::zero() && kappa2.is_finite()) {
        return Err(Error::Domain(format!("kappa^2 must be nonnegative, got {kappa2}")));
    }
    Ok(())
}

/// The Dirichlet-to-Neumann block of an edge of length `length` carrying potential `kappa2`.
pub fn edge_dn_block<T: Scalar>(length: T, kappa2: T) -> Result<EdgeDnBlock<T>> {
    check_edge(length, kappa2)?;
    let z = kappa2.sqrt() * length;
    let (c, s) = scaled_coth_csch(z);
    let diag = c / length;
    let off = -s / length;
    Ok(EdgeDnBlock { aa: diag, ab: off, ba: off, bb: diag })
}

/// The solution of `−u″ + κ²u = 0` on `[0, l]` with prescribed endpoint values.
///
/// `c0, c1` are the coordinates in the basis `{cosh κx, sinh(κx)/κ}`
/// (`{1, x}` when `κ = 0`); evaluation goes through the endpoint form
/// `u(x) = u_A sinh κ(l−x)/sinh κl + u_B sinh κx/sinh κl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSolution<T> {
    pub length: T,
    pub kappa2: T,
    pub c0: T,
    pub c1: T,
    pub ua: T,
    pub ub: T,
}

pub fn solve_edge<T: Scalar>(length: T, kappa2: T, ua: T, ub: T) -> Result<EdgeSolution<T>> {
    check_edge(length, kappa2)?;
    let mut s = EdgeSolution { length, kappa2, c0: ua, c1: T::zero(), ua, ub };
    s.c1 = s.derivative(T::zero());
    Ok(s)
}

impl<T: Scalar> EdgeSolution<T> {
    fn kappa(&self) -> T {
        self.kappa2.sqrt()
    }

    fn is_linear(&self) -> bool {
        self.kappa() * self.length < T::lit(SERIES_THRESHOLD)
    }

    /// `u(x)` for `x ∈ [0, l]`.
    pub fn value(&self, x: T) -> T {
        let l = self.length;
        if self.is_linear() {
            return self.ua + (self.ub - self.ua) * x / l;
        }
        let k = self.kappa();
        let z = k * l;
        self.ua * sinh_ratio(k * (l - x), z) + self.ub * sinh_ratio(k * x, z)
    }

    /// `u′(x)` in the edge coordinate (increasing from `A` to `B`).
    pub fn derivative(&self, x: T) -> T {
        let l = self.length;
        if self.is_linear() {
            return (self.ub - self.ua) / l;
        }
        let k = self.kappa();
        let z = k * l;
        k * (self.ub * cosh_sinh_ratio(k * x, z) - self.ua * cosh_sinh_ratio(k * (l - x), z))
    }

    /// Outward derivatives `(∂_ν u(A), ∂_ν u(B))`.
    pub fn outward_derivatives(&self) -> (T, T) {
        if self.is_linear() {
            // Keep the O(z²) correction the linear shortcut would drop.
            let b = edge_dn_block(self.length, self.kappa2).expect("validated edge");
            return b.apply(self.ua, self.ub);
        }
        (-self.derivative(T::zero()), self.derivative(self.length))
    }

    /// `∫_0^l u dx`.
    pub fn integral(&self) -> T {
        let l = self.length;
        let z = self.kappa() * l;
        // ∫ sinh(κx)/sinh(κl) dx = tanh(z/2)/κ = l · tanh(z/2)/z
        let t = if z < T::lit(SERIES_THRESHOLD) {
            T::half() * (T::one() - z * z / T::lit(12.0))
        } else {
            -(-z).exp_m1() / (T::one() + (-z).exp()) / z
        };
        (self.ua + self.ub) * l * t
    }

    /// `∫_0^l κ² u dx`, the edge's share of `∫ u q`.
    pub fn potential_integral(&self) -> T {
        self.kappa2 * self.integral()
    }

    /// Interior critical point `(x, u(x))` with `0 < x < l`, if any.
    ///
    /// Solutions are linear (`κ = 0`) or combinations of two exponentials, so there
    /// is at most one.
    pub fn interior_extremum(&self) -> Option<(T, T)> {
        if self.is_linear() || self.ua == T::zero() {
            return None;
        }
        let k = self.kappa();
        let z = k * self.length;
        let (c, s) = scaled_coth_csch(z);
        // u′(x) = 0  ⇔  tanh(κx) = r,  r = (u_A z coth z − u_B z csch z)/(u_A z),
        // so e^{2κx} = (1 + r)/(1 − r) = p/m below.
        let z_minus_c = -T::two() * z * (-T::two() * z).exp() / -(-T::two() * z).exp_m1();
        let scale = self.ua * z;
        let p = (self.ua * (z + c) - self.ub * s) / scale;
        let m = (self.ua * z_minus_c + self.ub * s) / scale;
        if !(p > T::zero() && m > T::zero()) {
            return None;
        }
        let x = T::half() * (p.ln() - m.ln()) / k;
        if x > T::zero() && x < self.length {
            Some((x, self.value(x)))
        } else {
            None
        }
    }
}

/// `∫_0^l (u′)² + κ²u² dx`, the edge's contribution to the energy form.
pub fn edge_energy<T: Scalar>(s: &EdgeSolution<T>) -> T {
    let l = s.length;
    let z = s.kappa2.sqrt() * l;
    let (ua, ub) = (s.ua, s.ub);
    if s.kappa2 == T::zero() {
        let d = ub - ua;
        return d * d / l;
    }
    // Integrating the squared endpoint form gives
    // κ[(u_A² + u_B²) coth z − 2 u_A u_B csch z]
    //   = [(u_A − u_B)² · z csch z + (u_A² + u_B²)(z coth z − z csch z)] / l,
    // the second form staying nonnegative term by term.
    let (c, cs) = scaled_coth_csch(z);
    let d = ua - ub;
    ((d * d) * cs + (ua * ua + ub * ub) * (c - cs)) / l
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_potential_block() {
        let b = edge_dn_block(1.0, 0.0).unwrap();
        assert_eq!(b.as_array(), [[1.0, -1.0], [-1.0, 1.0]]);
        let b = edge_dn_block(4.0, 0.0).unwrap();
        assert_eq!(b.as_array(), [[0.25, -0.25], [-0.25, 0.25]]);
    }

    #[test]
    fn unit_potential_block() {
        let b = edge_dn_block(1.0, 1.0).unwrap();
        let coth1 = 1.0f64.cosh() / 1.0f64.sinh();
        let csch1 = 1.0 / 1.0f64.sinh();
        assert_relative_eq!(b.aa, coth1, max_relative = 1e-15);
        assert_relative_eq!(b.ab, -csch1, max_relative = 1e-15);
        assert_relative_eq!(b.aa, 1.313035, epsilon = 1e-6);
        assert_relative_eq!(b.ab, -0.850918, epsilon = 1e-6);
    }

    #[test]
    fn huge_kappa_l_does_not_overflow() {
        let b = edge_dn_block(1.0f64, 490000.0).unwrap();
        assert_eq!(b.aa, 700.0);
        assert_eq!(b.bb, 700.0);
        assert!(b.ab.abs() < 1e-290 && b.ab.is_finite());
        let b = edge_dn_block(1e3, 1e6).unwrap();
        assert_eq!(b.aa, 1e3);
    }

    #[test]
    fn branches_agree_at_crossovers() {
        let exact = |z: f64| {
            let em = -(-2.0 * z).exp_m1();
            ((2.0 - em) / em * z, 2.0 * (-z).exp() / em * z)
        };
        for z in [SERIES_THRESHOLD, SERIES_THRESHOLD * 0.999] {
            let (c, s) = scaled_coth_csch(z);
            let (ce, se) = exact(z);
            assert_relative_eq!(c, ce, max_relative = 1e-12);
            assert_relative_eq!(s, se, max_relative = 1e-12);
        }
        for z in [ASYMPTOTIC_THRESHOLD, ASYMPTOTIC_THRESHOLD * 1.001] {
            let (c, s) = scaled_coth_csch(z);
            let (ce, se) = exact(z);
            assert_relative_eq!(c, ce, max_relative = 1e-12);
            assert_relative_eq!(s, se, max_relative = 1e-12);
        }
    }

    #[test]
    fn invalid_length() {
        assert!(matches!(edge_dn_block(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(edge_dn_block(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn edge_solutions() {
        let s = solve_edge(1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(s.value(0.3), 0.3);
        assert_eq!((s.c0, s.c1), (0.0, 1.0));
        let s = solve_edge(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(s.value(0.5), 0.5f64.sinh() / 1.0f64.sinh(), max_relative = 1e-14);
        assert_relative_eq!(s.value(0.5), 0.443409, epsilon = 1e-6);
        assert_relative_eq!(s.c1, 1.0 / 1.0f64.sinh(), max_relative = 1e-14);
        let s = solve_edge(2.0, 0.0, 3.5, 3.5).unwrap();
        assert_eq!(s.value(1.3), 3.5);
        assert_eq!(edge_energy(&s), 0.0);
    }

    #[test]
    fn energies() {
        assert_eq!(edge_energy(&solve_edge(1.0, 0.0, 0.0, 1.0).unwrap()), 1.0);
        let s = solve_edge(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(edge_energy(&s), 1.0f64.cosh() / 1.0f64.sinh(), max_relative = 1e-14);
    }

    #[test]
    fn potential_integral_matches_closed_form() {
        let s = solve_edge(1.0, 1.0, 0.0, 1.0).unwrap();
        let expected = (1.0f64.cosh() - 1.0) / 1.0f64.sinh();
        assert_relative_eq!(s.potential_integral(), expected, max_relative = 1e-14);
        assert_relative_eq!(s.potential_integral(), 0.462117, epsilon = 1e-6);
    }

    #[test]
    fn interior_minimum_of_convex_solution() {
        // u = cosh(x − 1/2)/cosh(1/2) has its minimum at the midpoint.
        let s = solve_edge(1.0, 1.0, 1.0, 1.0).unwrap();
        let (x, v) = s.interior_extremum().unwrap();
        assert_relative_eq!(x, 0.5, epsilon = 1e-14);
        assert_relative_eq!(v, 1.0 / 0.5f64.cosh(), max_relative = 1e-14);
        assert!(solve_edge(1.0, 1.0, 0.0, 1.0).unwrap().interior_extremum().is_none());
        assert!(solve_edge(1.0, 0.0, 1.0, 1.0).unwrap().interior_extremum().is_none());
    }

    #[test]
    fn stiff_edge_evaluates_without_overflow() {
        let s = solve_edge(10.0f64, 1e4, 1.0, 2.0).unwrap();
        assert!(s.value(5.0).abs() < 1e-200);
        assert_relative_eq!(s.value(10.0), 2.0, max_relative = 1e-13);
        let (da, db) = s.outward_derivatives();
        assert_relative_eq!(da, 100.0, max_relative = 1e-13);
        assert_relative_eq!(db, 200.0, max_relative = 1e-13);
    }

    #[test]
    fn single_precision_block() {
        let b = edge_dn_block(1.0f32, 1.0f32).unwrap();
        assert!((b.aa - 1.313035f32).abs() < 1e-5);
    }
}
