//! Closed-form comparison functions: the one-dimensional barrier profile,
//! its planar extension from a boundary point, and the radial supersolution.

use alloc::format;
use alloc::vec::Vec;
use libm::{exp, expm1, fabs, sqrt};

use crate::error::{Error, Result};
use crate::geometry::{dot, Grid, Point};

/// Default ceiling for fitted universal constants.
pub const DEFAULT_C_CEILING: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BarrierMode {
    Elliptic,
    /// Carries `g0 = ‖∇φ₀‖∞`.
    Parabolic { g0: f64 },
}

/// Solution of `-φ'' = a φ' + 2f`, `φ(0) = 0`, `φ'(0) = λ`:
///
/// `φ'(s) = (λ + 2f/a) e^{-as} - 2f/a`,
/// `φ(s) = (λ + 2f/a)(1 - e^{-as})/a - 2fs/a`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Barrier {
    a: f64,
    f: f64,
    r: f64,
    lambda: f64,
    mode: BarrierMode,
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {x}")))
    }
}

impl Barrier {
    /// `a = K + 1`, `λ = 2f/a·e^{aR}`, plus `2 g0 e^{aR}` in parabolic mode.
    pub fn build(k: f64, f: f64, r: f64, mode: BarrierMode) -> Result<Self> {
        check_nonneg("K", k)?;
        check_nonneg("f", f)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("R must be > 0, got {r}")));
        }
        let a = k + 1.0;
        let growth = exp(a * r);
        let mut lambda = 2.0 * f / a * growth;
        if let BarrierMode::Parabolic { g0 } = mode {
            check_nonneg("g0", g0)?;
            lambda += 2.0 * g0 * growth;
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("barrier slope overflows for a R = {}", a * r)));
        }
        let b = Barrier { a, f, r, lambda, mode };
        let end = b.dphi(r);
        let ok = match mode {
            BarrierMode::Elliptic => f == 0.0 || end > 0.0,
            BarrierMode::Parabolic { g0 } => (f == 0.0 && g0 == 0.0) || end > g0,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("sign condition fails: φ'(R) = {end}")));
        }
        Ok(b)
    }

    /// Same profile with a prescribed slope at the origin (negative controls
    /// and alternative normalizations). No sign condition is enforced.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Barrier { lambda, ..*self }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn k(&self) -> f64 {
        self.a - 1.0
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> BarrierMode {
        self.mode
    }

    fn shift(&self) -> f64 {
        2.0 * self.f / self.a
    }

    pub fn phi(&self, s: f64) -> f64 {
        let c = self.lambda + self.shift();
        c * (-expm1(-self.a * s)) / self.a - self.shift() * s
    }

    pub fn dphi(&self, s: f64) -> f64 {
        (self.lambda + self.shift()) * exp(-self.a * s) - self.shift()
    }

    pub fn d2phi(&self, s: f64) -> f64 {
        -self.a * (self.lambda + self.shift()) * exp(-self.a * s)
    }

    /// `-φ'' - (a φ' + 2f)`, zero up to rounding.
    pub fn ode_residual(&self, s: f64) -> f64 {
        -self.d2phi(s) - (self.a * self.dphi(s) + 2.0 * self.f)
    }

    /// `(s, φ(s), φ'(s))` at `n + 1` equispaced points of `[0, R]`.
    pub fn profile(&self, n: usize) -> Vec<[f64; 3]> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                let s = self.r * i as f64 / n as f64;
                [s, self.phi(s), self.dphi(s)]
            })
            .collect()
    }
}

/// `v(x) = φ((x - y)·ν)` at every node, for a boundary point `y` and the
/// unit normal `ν` at `y` pointing into the domain.
pub fn planar_supersolution(barrier: &Barrier, grid: &Grid, y: Point, nu: Point) -> Result<Vec<f64>> {
    let len = sqrt(dot(nu, nu));
    if fabs(len - 1.0) > 1e-12 {
        return Err(Error::InvalidParameter(format!("normal must be a unit vector, |ν| = {len}")));
    }
    Ok(grid
        .points()
        .iter()
        .map(|x| barrier.phi(dot([x[0] - y[0], x[1] - y[1]], nu)))
        .collect())
}

/// Planar supersolution anchored at boundary node `b`, using the inward normal.
pub fn planar_supersolution_at(barrier: &Barrier, grid: &Grid, b: usize) -> Result<Vec<f64>> {
    let n = grid.normal(b);
    planar_supersolution(barrier, grid, grid.point(b), [-n[0], -n[1]])
}

/// `φ(r) = (e^{aR} - e^{ar})/a` on the ball of radius `R` in dimension `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialSupersolution {
    a: f64,
    r: f64,
    dim: usize,
}

impl RadialSupersolution {
    pub fn build(k: f64, r: f64, dim: usize) -> Result<Self> {
        check_nonneg("K", k)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("R must be > 0, got {r}")));
        }
        if dim < 2 {
            return Err(Error::InvalidParameter("radial supersolution needs dimension N >= 2".into()));
        }
        Ok(RadialSupersolution { a: k + 1.0, r, dim })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn phi(&self, r: f64) -> f64 {
        (exp(self.a * self.r) - exp(self.a * r)) / self.a
    }

    pub fn dphi(&self, r: f64) -> f64 {
        -exp(self.a * r)
    }

    /// Outward normal derivative on the sphere `r = R`.
    pub fn boundary_normal_derivative(&self) -> f64 {
        -exp(self.a * self.r)
    }

    /// `-Δφ + W·∇φ + Vφ` at radius `r` for radial drift component
    /// `w_r = W·x/r` and potential `v`.
    pub fn residual(&self, r: f64, w_r: f64, v: f64) -> f64 {
        let n1 = (self.dim - 1) as f64;
        exp(self.a * r) * (self.a + n1 / r - w_r) + v * self.phi(r)
    }

    /// Smallest residual over `|W| <= K`, `V >= 0` at radius `r`.
    pub fn worst_residual(&self, r: f64) -> f64 {
        let k = self.a - 1.0;
        self.residual(r, k, 0.0).min(self.residual(r, -k, 0.0))
    }
}

/// Gradient bound `exp(C(1 + K + √M) R)·f`; for `M = 0` the constructive
/// slope `λ = 2f/(K+1)·e^{(K+1)R}` with no free constant.
pub fn explicit_grad_bound(k: f64, m: f64, f: f64, r: f64, c: f64) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    if m == 0.0 {
        let a = k + 1.0;
        return 2.0 * f / a * exp(a * r);
    }
    exp(c * (1.0 + k + sqrt(m)) * r) * f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::pde::{assemble, BoundaryCondition, CoefficientSet, OperatorForm};
    use proptest::prelude::*;

    const E: f64 = core::f64::consts::E;

    /// RK4 for `φ' = p`, `p' = -(a p + 2f)`.
    fn rk4_profile(b: &Barrier, s_end: f64, steps: usize) -> (f64, f64) {
        let (a, f) = (b.a(), b.f());
        let rhs = |_: f64, y: [f64; 2]| [y[1], -(a * y[1] + 2.0 * f)];
        let h = s_end / steps as f64;
        let mut y = [0.0, b.lambda()];
        let mut s = 0.0;
        for _ in 0..steps {
            let k1 = rhs(s, y);
            let k2 = rhs(s + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = rhs(s + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = rhs(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            s += h;
        }
        (y[0], y[1])
    }

    #[test]
    fn elliptic_reference_values() {
        let b = Barrier::build(0.0, 1.0, 1.0, BarrierMode::Elliptic).unwrap();
        assert_eq!(b.a(), 1.0);
        assert!((b.lambda() - 2.0 * E).abs() < 1e-14);
        assert!((b.lambda() - 5.436564).abs() < 1e-6);
        assert!((b.dphi(1.0) - 2.0 / E).abs() < 1e-14);
        assert_eq!(b.phi(0.0), 0.0);
    }

    #[test]
    fn zero_forcing_gives_zero_barrier() {
        let b = Barrier::build(2.0, 0.0, 1.0, BarrierMode::Elliptic).unwrap();
        assert_eq!(b.lambda(), 0.0);
        for s in [0.0, 0.3, 1.0] {
            assert_eq!(b.phi(s), 0.0);
        }
    }

    #[test]
    fn parabolic_reference_values() {
        let b = Barrier::build(0.0, 1.0, 1.0, BarrierMode::Parabolic { g0: 1.0 }).unwrap();
        assert!((b.lambda() - 4.0 * E).abs() < 1e-13);
        assert!((b.dphi(1.0) - (2.0 + 2.0 / E)).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Barrier::build(-1.0, 1.0, 1.0, BarrierMode::Elliptic).is_err());
        assert!(Barrier::build(0.0, 1.0, 0.0, BarrierMode::Elliptic).is_err());
        assert!(Barrier::build(0.0, 1.0, 1.0, BarrierMode::Parabolic { g0: -1.0 }).is_err());
        assert!(RadialSupersolution::build(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn closed_form_matches_rk4() {
        for (k, f, r) in [(0.0, 1.0, 1.0), (2.5, 0.7, 1.3), (1.0, 2.0, 2.0)] {
            let b = Barrier::build(k, f, r, BarrierMode::Elliptic).unwrap();
            let (p, dp) = rk4_profile(&b, r, 4000);
            assert!((p - b.phi(r)).abs() < 1e-9 * (1.0 + b.lambda()));
            assert!((dp - b.dphi(r)).abs() < 1e-9 * (1.0 + b.lambda()));
        }
    }

    #[test]
    fn planar_supersolution_reduces_to_profile_in_1d() {
        let b = Barrier::build(0.0, 1.0, 1.0, BarrierMode::Elliptic).unwrap();
        let g = Grid::new(ConvexDomain::interval(0.0, 1.0).unwrap(), 0.1).unwrap();
        let v = planar_supersolution_at(&b, &g, 0).unwrap();
        assert_eq!(v[0], 0.0);
        for (p, vi) in g.points().iter().zip(&v) {
            assert!((vi - b.phi(p[0])).abs() < 1e-15);
        }
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        let zero = Barrier::build(0.0, 0.0, 1.0, BarrierMode::Elliptic).unwrap();
        assert!(planar_supersolution_at(&zero, &g, 0).unwrap().iter().all(|x| *x == 0.0));
        assert!(planar_supersolution(&b, &g, [0.0, 0.0], [2.0, 0.0]).is_err());
    }

    #[test]
    fn planar_supersolution_residual_on_disk() {
        let b = Barrier::build(0.0, 1.0, 1.0, BarrierMode::Elliptic).unwrap();
        let g = Grid::new(ConvexDomain::disk([0.0, 0.0], 1.0).unwrap(), 0.01).unwrap();
        let v = planar_supersolution(&b, &g, [1.0, 0.0], [-1.0, 0.0]).unwrap();
        let c = CoefficientSet::constant(&g, [0.0, 0.0], 0.0, 0.0).unwrap();
        let op = assemble(&g, &c, BoundaryCondition::Dirichlet, OperatorForm::Advective).unwrap();
        let lv = op.apply(&v).unwrap();
        for i in g.interior_nodes() {
            assert!(lv[i] >= -1e-6, "residual {} at {:?}", lv[i], g.point(i));
        }
    }

    #[test]
    fn radial_reference_values() {
        let s = RadialSupersolution::build(0.0, 1.0, 2).unwrap();
        assert!((s.phi(0.5) - (E - libm::exp(0.5))).abs() < 1e-15);
        assert_eq!(s.phi(1.0), 0.0);
        assert!((s.boundary_normal_derivative() + E).abs() < 1e-15);
        assert!(s.residual(1.0, 0.0, 0.0) >= 1.0);
    }

    #[test]
    fn explicit_bound_values() {
        assert!((explicit_grad_bound(0.0, 0.0, 1.0, 1.0, 10.0) - 2.0 * E).abs() < 1e-14);
        assert_eq!(explicit_grad_bound(1.0, 4.0, 0.0, 1.0, 3.0), 0.0);
        let v = explicit_grad_bound(1.0, 4.0, 1.0, 1.0, 3.0);
        assert!((v / libm::exp(12.0) - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn barrier_invariants(k in 0.0f64..3.0, f in 0.0f64..2.0, r in 0.1f64..2.5, g0 in 0.0f64..2.0, par in any::<bool>()) {
            let mode = if par { BarrierMode::Parabolic { g0 } } else { BarrierMode::Elliptic };
            let b = Barrier::build(k, f, r, mode).unwrap();
            let tol = 1e-10 * (1.0 + b.lambda());
            for i in 0..=400 {
                let s = 2.0 * r * i as f64 / 400.0;
                prop_assert!(b.ode_residual(s).abs() < tol);
                prop_assert!(b.phi(s) - 2.0 * b.phi(s / 2.0) <= tol);
                if s <= r && b.lambda() > 0.0 {
                    prop_assert!(b.dphi(s) > 0.0);
                    prop_assert!(b.d2phi(s) < 0.0);
                }
            }
        }

        #[test]
        fn radial_residual_at_least_one(k in 0.0f64..5.0, r in 0.1f64..3.0, n in 2usize..4) {
            let s = RadialSupersolution::build(k, r, n).unwrap();
            for i in 1..=500 {
                let rr = r * i as f64 / 500.0;
                prop_assert!(s.worst_residual(rr) >= 1.0 - 1e-9);
                prop_assert!(s.dphi(rr) < 0.0);
            }
        }
    }
}
