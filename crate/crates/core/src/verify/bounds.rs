//! Measured gradients against the gradient bounds, and the pointwise
//! boundary bound `|φ(x)| <= ϕ(d(x))`.

use alloc::vec::Vec;
use libm::{exp, log, sqrt};

use crate::barrier::{Barrier, BarrierMode, DEFAULT_C_CEILING};
use crate::elliptic::EllipticSolution;
use crate::error::Result;
use crate::geometry::Grid;
use crate::parabolic::ParabolicRun;
use crate::pde::CoefficientSet;

/// Relative slack of the explicit comparison `measured <= λ`.
pub const EXPLICIT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundPath {
    /// `V = 0`: the barrier slope, no free constant.
    Explicit,
    /// `V >= 0`: exponential form with the constant fitted from data.
    Fitted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub measured: f64,
    pub bound: f64,
    pub path: BoundPath,
    /// `log(measured / f_eff) / ((1 + K + √M) diam)`, or 0 when the log is not positive.
    pub c_eff: f64,
    pub f_eff: f64,
    pub k: f64,
    pub m: f64,
    pub diam: f64,
    /// `T` for evolution problems, 0 otherwise.
    pub t_final: f64,
    pub c_ceiling: f64,
    pub pass: bool,
}

fn effective_constant(measured: f64, f_eff: f64, rate: f64) -> f64 {
    if measured <= 0.0 || f_eff <= 0.0 || rate <= 0.0 {
        return 0.0;
    }
    let c = log(measured / f_eff) / rate;
    if c > 0.0 {
        c
    } else {
        0.0
    }
}

/// Stationary bound. Explicit path when the potential vanishes.
pub fn check_gradient_bound(sol: &EllipticSolution, coeffs: &CoefficientSet, grid: &Grid) -> Result<BoundReport> {
    check_gradient_bound_with(sol.sup_grad, coeffs, grid, DEFAULT_C_CEILING)
}

pub fn check_gradient_bound_with(
    measured: f64,
    coeffs: &CoefficientSet,
    grid: &Grid,
    c_ceiling: f64,
) -> Result<BoundReport> {
    let (k, m, f) = (coeffs.k(), coeffs.m(), coeffs.f_norm());
    let diam = grid.domain().diameter();
    let rate = (1.0 + k + sqrt(m)) * diam;
    let c_eff = effective_constant(measured, f, rate);
    let (path, bound, pass) = if coeffs.potential_vanishes() {
        let lambda = Barrier::build(k, f, diam, BarrierMode::Elliptic)?.lambda();
        (BoundPath::Explicit, lambda, measured <= lambda * (1.0 + EXPLICIT_SLACK))
    } else {
        (BoundPath::Fitted, exp(c_ceiling * rate) * f, c_eff <= c_ceiling)
    };
    Ok(BoundReport { measured, bound, path, c_eff, f_eff: f, k, m, diam, t_final: 0.0, c_ceiling, pass })
}

/// Evolution bound over all recorded steps; `coeffs` must be the ones the
/// run was computed with.
pub fn check_parabolic_bound(run: &ParabolicRun, coeffs: &CoefficientSet, grid: &Grid) -> Result<BoundReport> {
    check_parabolic_bound_with(run, coeffs, grid, DEFAULT_C_CEILING)
}

pub fn check_parabolic_bound_with(
    run: &ParabolicRun,
    coeffs: &CoefficientSet,
    grid: &Grid,
    c_ceiling: f64,
) -> Result<BoundReport> {
    let measured = run.max_grad();
    let (k, m, f) = (coeffs.k(), coeffs.m(), coeffs.f_norm());
    let diam = grid.domain().diameter();
    let f_eff = run.g0 + f;
    let rate = (1.0 + k + sqrt(m)) * diam;
    let (path, bound, pass, c_eff) = if coeffs.potential_vanishes() {
        let lambda = Barrier::build(k, f, diam, BarrierMode::Parabolic { g0: run.g0 })?.lambda();
        let c = effective_constant(measured, f_eff, rate);
        (BoundPath::Explicit, lambda, measured <= lambda * (1.0 + EXPLICIT_SLACK), c)
    } else {
        let rate_t = run.t_final * m + rate;
        let c = effective_constant(measured, f_eff, rate_t);
        (BoundPath::Fitted, exp(c_ceiling * rate_t) * f_eff, c <= c_ceiling, c)
    };
    Ok(BoundReport { measured, bound, path, c_eff, f_eff, k, m, diam, t_final: run.t_final, c_ceiling, pass })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointwiseReport {
    /// `max_x |φ(x)| - ϕ(d(x))`.
    pub max_violation: f64,
    pub node: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// `|φ(x)| <= ϕ(d(x))` with `d` the exact distance to `∂Ω`.
pub fn dirichlet_pointwise_check(grid: &Grid, values: &[f64], barrier: &Barrier) -> PointwiseReport {
    let d: Vec<f64> = grid.points().iter().map(|p| grid.domain().distance_to_boundary(*p)).collect();
    pointwise(&d, core::iter::once(values), barrier)
}

/// Same check at every snapshot of an evolution run.
pub fn parabolic_pointwise_check(grid: &Grid, run: &ParabolicRun, barrier: &Barrier) -> PointwiseReport {
    let d: Vec<f64> = grid.points().iter().map(|p| grid.domain().distance_to_boundary(*p)).collect();
    pointwise(&d, run.snapshots.iter().map(|s| s.as_slice()), barrier)
}

fn pointwise<'a>(d: &[f64], fields: impl Iterator<Item = &'a [f64]>, barrier: &Barrier) -> PointwiseReport {
    let bar: Vec<f64> = d.iter().map(|s| barrier.phi(*s)).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut node = 0;
    for values in fields {
        for (i, (u, b)) in values.iter().zip(&bar).enumerate() {
            let v = u.abs() - b;
            if v > worst {
                worst = v;
                node = i;
            }
        }
    }
    let tolerance = 1e-8 * barrier.lambda();
    PointwiseReport { max_violation: worst, node, tolerance, pass: worst <= tolerance }
}
