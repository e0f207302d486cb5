//! One-dimensional duality pipeline for `-u'' - (Wu)' + Vu = 0` on
//! `[-R, R]`.
//!
//! The adjoint problem `-φ'' + Wφ' + Vφ = sign(u)`, `φ(-R) = φ'(-R) = 0`
//! is integrated as the first-order system `Φ' = MΦ + Θ` with
//! `M = [[0, 1], [V, W]]` and `Θ = (0, -sign(u))`. Multiplying by `u` and
//! integrating by parts leaves only boundary terms at `x = R`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use libm::{exp, fabs, pow};

use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// Overflow guard for trajectories.
pub const OVERFLOW_GUARD: f64 = 1e300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SignConvention {
    /// `sign(s) ∈ {-1, 0, 1}`.
    #[default]
    Usual,
    /// `s` for `s >= 0` and `-s` otherwise, i.e. `|s|`.
    Literal,
}

impl SignConvention {
    pub fn apply(self, s: f64) -> f64 {
        match self {
            SignConvention::Usual => {
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            SignConvention::Literal => fabs(s),
        }
    }
}

/// Coefficients of the adjoint system. `theta(x)` is the value of
/// `sign(u(x))` entering the forcing `Θ = (0, -theta)`.
pub struct FirstOrderSystem<'a> {
    pub w: &'a dyn Fn(f64) -> f64,
    pub v: &'a dyn Fn(f64) -> f64,
    pub theta: &'a dyn Fn(f64) -> f64,
}

impl FirstOrderSystem<'_> {
    fn rhs(&self, x: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], (self.v)(x) * y[0] + (self.w)(x) * y[1] - (self.theta)(x)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub h: f64,
}

/// Classical RK4 on `[-R, R]` with `2R/h` steps (rounded to the nearest
/// integer, at least one).
pub fn integrate_adjoint(sys: &FirstOrderSystem<'_>, r: f64, h: f64) -> Result<Trajectory> {
    if !(r > 0.0 && r.is_finite()) || !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("need R > 0 and h > 0, got R = {r}, h = {h}")));
    }
    let steps = (libm::round(2.0 * r / h) as usize).max(1);
    let h = 2.0 * r / steps as f64;
    let mut xs = Vec::with_capacity(steps + 1);
    let mut phi = Vec::with_capacity(steps + 1);
    let mut dphi = Vec::with_capacity(steps + 1);
    let mut y = [0.0f64; 2];
    xs.push(-r);
    phi.push(0.0);
    dphi.push(0.0);
    for k in 0..steps {
        let x = -r + k as f64 * h;
        let k1 = sys.rhs(x, y);
        let k2 = sys.rhs(x + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = sys.rhs(x + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = sys.rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let xn = if k + 1 == steps { r } else { -r + (k + 1) as f64 * h };
        if !(fabs(y[0]) + fabs(y[1]) <= OVERFLOW_GUARD) {
            return Err(Error::Overflow { x: xn });
        }
        xs.push(xn);
        phi.push(y[0]);
        dphi.push(y[1]);
    }
    Ok(Trajectory { xs, phi, dphi, h })
}

/// `1 + max_x ‖M(x)‖∞ + max_x |Θ(x)|` over the trajectory abscissae
/// (row-sum norm; the first row of `M` contributes 1).
pub fn gronwall_constant(sys: &FirstOrderSystem<'_>, traj: &Trajectory) -> f64 {
    let mut m = 1.0f64;
    let mut t = 0.0f64;
    for &x in &traj.xs {
        m = m.max(fabs((sys.v)(x)) + fabs((sys.w)(x)));
        t = t.max(fabs((sys.theta)(x)));
    }
    1.0 + m + t
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvelopeCheck {
    pub holds: bool,
    /// `max (|φ| + |φ'|) / (C e^{C (x + R)})`.
    pub max_ratio: f64,
}

pub fn check_gronwall_envelope(traj: &Trajectory, c: f64) -> EnvelopeCheck {
    let x0 = traj.xs[0];
    let mut max_ratio = 0.0f64;
    for i in 0..traj.xs.len() {
        let env = c * exp(c * fabs(traj.xs[i] - x0));
        max_ratio = max_ratio.max((fabs(traj.phi[i]) + fabs(traj.dphi[i])) / env);
    }
    EnvelopeCheck { holds: max_ratio <= 1.0, max_ratio }
}

type Func = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Positive `u` with a drift `W`; the potential is derived so that
/// `-u'' - (Wu)' + Vu = 0` holds identically.
pub struct ManufacturedSolution {
    pub u: Func,
    pub du: Func,
    pub d2u: Func,
    pub w: Func,
    pub dw: Func,
    /// Decay metadata: `|u| <= c_u e^{-|x|^{1+ε}}`, `|u'| <= c_du e^{-|x|^{1+ε}}`.
    pub epsilon: f64,
    pub c_u: f64,
    pub c_du: f64,
}

impl ManufacturedSolution {
    /// `u = e^{-x²}` with constant drift `w`.
    pub fn gaussian(w: f64) -> Self {
        ManufacturedSolution {
            u: Box::new(|x| exp(-x * x)),
            du: Box::new(|x| -2.0 * x * exp(-x * x)),
            d2u: Box::new(|x| (4.0 * x * x - 2.0) * exp(-x * x)),
            w: Box::new(move |_| w),
            dw: Box::new(|_| 0.0),
            epsilon: 0.5,
            c_u: 1.12,
            c_du: 2.2,
        }
    }

    /// `V = (u'' + (Wu)')/u`.
    pub fn potential(&self, x: f64) -> f64 {
        let u = (self.u)(x);
        ((self.d2u)(x) + (self.dw)(x) * u + (self.w)(x) * (self.du)(x)) / u
    }

    /// `-u'' - (Wu)' + Vu` (zero up to rounding).
    pub fn residual(&self, x: f64) -> f64 {
        let u = (self.u)(x);
        -(self.d2u)(x) - ((self.dw)(x) * u + (self.w)(x) * (self.du)(x)) + self.potential(x) * u
    }

    pub fn potential_sup(&self, r: f64, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| fabs(self.potential(-r + 2.0 * r * i as f64 / samples as f64)))
            .fold(0.0, f64::max)
    }

    pub fn decay_envelope(&self, x: f64) -> f64 {
        exp(-pow(fabs(x), 1.0 + self.epsilon))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DualityReport {
    /// `∫ sign(u) u` by composite Simpson.
    pub lhs: f64,
    /// `-φ'(R)u(R) + φ(R)u'(R) + W(R)u(R)φ(R)`.
    pub rhs: f64,
    pub relative_residual: f64,
    pub phi_end: f64,
    pub dphi_end: f64,
    pub gronwall_c: f64,
}

pub fn check_duality_identity(
    ms: &ManufacturedSolution,
    r: f64,
    h: f64,
    conv: SignConvention,
) -> Result<DualityReport> {
    let v = |x: f64| ms.potential(x);
    let theta = |x: f64| conv.apply((ms.u)(x));
    let sys = FirstOrderSystem { w: &*ms.w, v: &v, theta: &theta };
    let traj = integrate_adjoint(&sys, r, h)?;
    let integrand: Vec<f64> = traj.xs.iter().map(|&x| theta(x) * (ms.u)(x)).collect();
    let lhs = simpson(&integrand, traj.h);
    let (p, dp) = (*traj.phi.last().unwrap(), *traj.dphi.last().unwrap());
    let (u, du, w) = ((ms.u)(r), (ms.du)(r), (ms.w)(r));
    let rhs = -dp * u + p * du + w * u * p;
    let relative_residual = if lhs != 0.0 { fabs(lhs - rhs) / fabs(lhs) } else { fabs(rhs) };
    Ok(DualityReport {
        lhs,
        rhs,
        relative_residual,
        phi_end: p,
        dphi_end: dp,
        gronwall_c: gronwall_constant(&sys, &traj),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayRow {
    pub r: f64,
    pub integral: f64,
    /// Sum of the boundary terms (equals `integral` by the identity).
    pub boundary_sum: f64,
    /// `|u(R)| + |u'(R)|`, the decaying factor of the boundary terms.
    pub u_boundary: f64,
    /// `|φ(R)| + |φ'(R)|`, the growing factor.
    pub phi_boundary: f64,
    /// `C e^{2RC}` with the constructive Gronwall constant.
    pub gronwall_bound: f64,
    pub v_sup: f64,
    pub relative_residual: f64,
}

pub fn decay_demo(ms: &ManufacturedSolution, radii: &[f64], h: f64) -> Result<Vec<DecayRow>> {
    radii
        .iter()
        .map(|&r| {
            let rep = check_duality_identity(ms, r, h, SignConvention::Usual)?;
            Ok(DecayRow {
                r,
                integral: rep.lhs,
                boundary_sum: rep.rhs,
                u_boundary: fabs((ms.u)(r)) + fabs((ms.du)(r)),
                phi_boundary: fabs(rep.phi_end) + fabs(rep.dphi_end),
                gronwall_bound: rep.gronwall_c * exp(2.0 * r * rep.gronwall_c),
                v_sup: ms.potential_sup(r, 2000),
                relative_residual: rep.relative_residual,
            })
        })
        .collect()
}
