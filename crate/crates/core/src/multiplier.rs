//! Positive multiplier `ψ` solving `-Δψ + W·∇ψ + Vψ = 0` on `B(c, 2R)`,
//! squeezed between `ψ₁ = e^{μ(x₁ - c₁)}` and `ψ₂ = e^{2Rμ}` with
//! `μ = K + √M`, and the reduction `φ̂ = φ/ψ` that removes the potential.

use alloc::vec::Vec;
use libm::{exp, fabs, log, sqrt};

use crate::elliptic::{solve_elliptic_with, EllipticOptions, EllipticSolution};
use crate::error::{Error, Result};
use crate::geometry::{dist, BoundaryGradient, ConvexDomain, Grid, Point};
use crate::pde::{BoundaryCondition, CoefficientSet, OperatorForm};
use crate::solver::SolverOptions;

/// Fraction of `R` bounding the region where the log-gradient is measured.
pub const INNER_FRACTION: f64 = 1.4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierOptions {
    /// Allowed envelope excess, relative to `ψ₂`.
    pub envelope_tol: f64,
    /// Zero the coefficients outside `B(c, R)`; off keeps them on the whole ball.
    pub extend_by_zero: bool,
    pub solver: SolverOptions,
}

impl Default for MultiplierOptions {
    fn default() -> Self {
        MultiplierOptions { envelope_tol: 1e-7, extend_by_zero: true, solver: SolverOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct MultiplierResult {
    pub grid: Grid,
    pub center: Point,
    pub r: f64,
    pub k: f64,
    pub m: f64,
    pub psi: Vec<f64>,
    pub psi1: Vec<f64>,
    pub psi2: f64,
    pub log_grad: Vec<Point>,
    /// `sup_{|x-c| <= 1.4R} |∇log ψ| / (K + √M)`, zero when `K = M = 0`.
    pub c_eff: f64,
    /// `max(ψ₁ - ψ, ψ - ψ₂, 0) / ψ₂` over nodes.
    pub envelope_excess: f64,
    pub residual: f64,
}

impl MultiplierResult {
    pub fn mu(&self) -> f64 {
        self.k + sqrt(self.m)
    }
}

/// Centre and radius of the disk (or interval) circumscribing `domain`.
pub fn circumscribed_ball(domain: &ConvexDomain) -> (Point, f64) {
    (domain.center(), 0.5 * domain.diameter())
}

/// Builds `ψ` on `B(center, 2r)` in dimension `dim` from coefficient
/// functions given on `B(center, r)`.
pub fn build_multiplier(
    center: Point,
    r: f64,
    dim: usize,
    h: f64,
    w: impl Fn(Point) -> Point,
    v: impl Fn(Point) -> f64,
    opts: &MultiplierOptions,
) -> Result<MultiplierResult> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("R must be > 0, got {r}")));
    }
    let big = match dim {
        1 => ConvexDomain::interval(center[0] - 2.0 * r, center[0] + 2.0 * r)?,
        2 => ConvexDomain::disk(center, 2.0 * r)?,
        _ => return Err(Error::InvalidParameter(alloc::format!("dimension must be 1 or 2, got {dim}"))),
    };
    let grid = Grid::new(big, h)?;
    let inside = |p: Point| !opts.extend_by_zero || dist(p, center) <= r * (1.0 + 1e-12);
    let coeffs = CoefficientSet::sample(
        &grid,
        |p| if inside(p) { w(p) } else { [0.0, 0.0] },
        |p| if inside(p) { v(p) } else { 0.0 },
        |_| 0.0,
    )?;
    coeffs.check_nonnegative_potential()?;
    let (k, m) = (coeffs.k(), coeffs.m());
    let mu = k + sqrt(m);
    let psi1: Vec<f64> = grid.points().iter().map(|p| exp(mu * (p[0] - center[0]))).collect();
    let psi2 = exp(2.0 * r * mu);
    let eopts = EllipticOptions { solver: opts.solver, form: OperatorForm::Advective, allow_negative_potential: false };
    let sol = solve_elliptic_with(&grid, &coeffs, BoundaryCondition::Dirichlet, Some(&psi1), &eopts)?;
    let psi = sol.phi.into_inner();

    let mut excess = 0.0f64;
    let mut worst = 0usize;
    for (i, (p, p1)) in psi.iter().zip(&psi1).enumerate() {
        let e = (p1 - p).max(p - psi2).max(0.0) / psi2;
        if e > excess {
            excess = e;
            worst = i;
        }
    }
    if excess > opts.envelope_tol {
        return Err(Error::EnvelopeViolation { node: worst, relative: excess });
    }
    if let Some(i) = psi.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::EnvelopeViolation { node: i, relative: fabs(psi[i]) / psi2 });
    }

    let logs: Vec<f64> = psi.iter().map(|p| log(*p)).collect();
    let log_grad = grid.gradient(&logs, BoundaryGradient::OneSidedAxes);
    let mut sup = 0.0f64;
    for (p, g) in grid.points().iter().zip(&log_grad) {
        if dist(*p, center) <= INNER_FRACTION * r {
            sup = sup.max(sqrt(g[0] * g[0] + g[1] * g[1]));
        }
    }
    let c_eff = if mu > 0.0 { sup / mu } else { 0.0 };
    Ok(MultiplierResult {
        grid,
        center,
        r,
        k,
        m,
        psi,
        psi1,
        psi2,
        log_grad,
        c_eff,
        envelope_excess: excess,
        residual: sol.residual,
    })
}

/// Effective constant of the log-gradient bound; finite by construction.
pub fn verify_log_grad_bound(result: &MultiplierResult) -> f64 {
    debug_assert!(result.c_eff.is_finite());
    result.c_eff
}

/// Potential-free problem on Ω: `Ŵ = W - 2∇log ψ`, `F̂ = F/ψ`, `V̂ = 0`,
/// with `ψ` and `∇log ψ` carried to Ω's nodes.
#[derive(Clone, Debug)]
pub struct ReducedProblem {
    pub coeffs: CoefficientSet,
    pub psi: Vec<f64>,
    pub log_grad: Vec<Point>,
}

impl ReducedProblem {
    /// `φ = ψ φ̂`, `∇φ = φ̂ ψ ∇log ψ + ψ ∇φ̂`.
    pub fn back_map(&self, grid: &Grid, phi_hat: &[f64], grad_hat: &[Point]) -> (Vec<f64>, Vec<Point>) {
        let phi = phi_hat.iter().zip(&self.psi).map(|(u, p)| u * p).collect();
        let grad = (0..grid.len())
            .map(|i| {
                let (u, p, lg, gh) = (phi_hat[i], self.psi[i], self.log_grad[i], grad_hat[i]);
                [u * p * lg[0] + p * gh[0], u * p * lg[1] + p * gh[1]]
            })
            .collect();
        (phi, grad)
    }

    /// Solves the reduced Dirichlet problem and maps the solution back.
    pub fn solve(&self, grid: &Grid, solver: &SolverOptions) -> Result<(EllipticSolution, Vec<f64>, Vec<Point>)> {
        let opts = EllipticOptions { solver: *solver, ..Default::default() };
        let hat = solve_elliptic_with(grid, &self.coeffs, BoundaryCondition::Dirichlet, None, &opts)?;
        let (phi, grad) = self.back_map(grid, &hat.phi, &hat.grad_phi);
        Ok((hat, phi, grad))
    }
}

pub fn reduce_to_zero_potential(
    grid: &Grid,
    coeffs: &CoefficientSet,
    mult: &MultiplierResult,
) -> Result<ReducedProblem> {
    if coeffs.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: coeffs.len() });
    }
    let mg = &mult.grid;
    let gx: Vec<f64> = mult.log_grad.iter().map(|g| g[0]).collect();
    let gy: Vec<f64> = mult.log_grad.iter().map(|g| g[1]).collect();
    let mut psi = Vec::with_capacity(grid.len());
    let mut log_grad = Vec::with_capacity(grid.len());
    for (i, p) in grid.points().iter().enumerate() {
        let outside = || Error::InvalidParameter(alloc::format!("node {i} lies outside the multiplier grid"));
        let ps = mg.interpolate(&mult.psi, *p).ok_or_else(outside)?;
        if !(ps > 0.0) {
            return Err(Error::EnvelopeViolation { node: i, relative: 0.0 });
        }
        let lx = mg.interpolate(&gx, *p).ok_or_else(outside)?;
        let ly = if grid.dim() == 2 { mg.interpolate(&gy, *p).ok_or_else(outside)? } else { 0.0 };
        psi.push(ps);
        log_grad.push([lx, ly]);
    }
    let w_hat: Vec<Point> =
        coeffs.w().iter().zip(&log_grad).map(|(w, g)| [w[0] - 2.0 * g[0], w[1] - 2.0 * g[1]]).collect();
    let f_hat: Vec<f64> = coeffs.f().iter().zip(&psi).map(|(f, p)| f / p).collect();
    let c = CoefficientSet::from_samples(grid, w_hat, alloc::vec![0.0; grid.len()], f_hat)?;
    Ok(ReducedProblem { coeffs: c, psi, log_grad })
}
