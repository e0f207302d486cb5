//! Mass ratios for solutions of the adjoint equation
//! `-Δu - ∇·(W u) + V u = 0`: inner disk against an annulus, and inner disk
//! against its boundary circle, with the dual normal-derivative check.

use alloc::vec::Vec;
use libm::{exp, log, sqrt};

use crate::barrier::{RadialSupersolution, DEFAULT_C_CEILING};
use crate::elliptic::{solve_elliptic_with, EllipticOptions};
use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Grid, Point};
use crate::pde::{BoundaryCondition, CoefficientSet, OperatorForm};
use crate::quadrature::{annulus_abs_integral, circle_abs_integral};
use crate::solver::SolverOptions;

/// Outer masses below this are treated as a vanishing solution.
pub const DEGENERATE_MASS: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ContinuationKind {
    /// `∫_{|x-c|<R} |u|` against `∫_{R<|x-c|<2R} |u|`.
    Annulus,
    /// `∫_{|x-c|<R} |u|` against `∫_{|x-c|=R} |u| dσ`.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DualCheck {
    /// `max |∂ν φ_R|` over boundary nodes.
    pub max_normal_derivative: f64,
    /// `e^{(K+1)R}`.
    pub bound: f64,
    pub nodes_checked: usize,
    pub violations: usize,
    /// `min` over sampled `r ∈ (0, R]` of the worst-case radial residual.
    pub min_radial_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuationReport {
    pub kind: ContinuationKind,
    pub r: f64,
    pub h: f64,
    pub k: f64,
    pub m: f64,
    pub inner: f64,
    pub outer: f64,
    pub ratio: f64,
    /// `log(inner/outer)` over `(1 + K + √M) R` (annulus) or `(1 + K) R` (boundary).
    pub c_req: f64,
    pub c_ceiling: f64,
    /// The outer mass vanished, so no constant can be implied.
    pub degenerate: bool,
    pub dual: Option<DualCheck>,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions {
    pub c_ceiling: f64,
    pub solver: SolverOptions,
    /// Minimum `|d·ν|` of the grid line used for normal derivatives.
    pub min_alignment: f64,
    /// Radii sampled in the radial residual check.
    pub radial_samples: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            c_ceiling: DEFAULT_C_CEILING,
            solver: SolverOptions::default(),
            min_alignment: 0.5,
            radial_samples: 10_000,
        }
    }
}

/// Problem data: drift and potential as functions of position, Dirichlet
/// data on the outer circle.
pub struct ContinuationProblem<'a> {
    pub center: Point,
    pub r: f64,
    pub h: f64,
    pub w: &'a dyn Fn(Point) -> Point,
    pub v: &'a dyn Fn(Point) -> f64,
    pub g: &'a dyn Fn(Point) -> f64,
}

struct Solved {
    grid: Grid,
    coeffs: CoefficientSet,
    u: Vec<f64>,
}

fn solve_adjoint(p: &ContinuationProblem, radius: f64, opts: &ContinuationOptions) -> Result<Solved> {
    if !(p.r > 0.0 && p.r.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("R must be > 0, got {}", p.r)));
    }
    let grid = Grid::new(ConvexDomain::disk(p.center, radius)?, p.h)?;
    let coeffs = CoefficientSet::sample(&grid, p.w, p.v, |_| 0.0)?;
    let data: Vec<f64> = grid.points().iter().map(|x| (p.g)(*x)).collect();
    let eo = EllipticOptions { solver: opts.solver, form: OperatorForm::Divergence, allow_negative_potential: false };
    let sol = solve_elliptic_with(&grid, &coeffs, BoundaryCondition::Dirichlet, Some(&data), &eo)?;
    Ok(Solved { grid, coeffs, u: sol.phi.into_inner() })
}

fn finish(
    kind: ContinuationKind,
    p: &ContinuationProblem,
    k: f64,
    m: f64,
    inner: f64,
    outer: f64,
    rate: f64,
    dual: Option<DualCheck>,
    opts: &ContinuationOptions,
) -> ContinuationReport {
    let degenerate = !(outer > DEGENERATE_MASS);
    let (ratio, c_req) = if degenerate {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (inner / outer, log(inner / outer) / rate)
    };
    let pass = !degenerate && c_req <= opts.c_ceiling && dual.is_none_or(|d| d.pass);
    ContinuationReport {
        kind,
        r: p.r,
        h: p.h,
        k,
        m,
        inner,
        outer,
        ratio,
        c_req,
        c_ceiling: opts.c_ceiling,
        degenerate,
        dual,
        pass,
    }
}

/// Solves on `B(c, 2R)` and compares the inner disk with the annulus.
pub fn continuation_ratio_annulus(p: &ContinuationProblem, opts: &ContinuationOptions) -> Result<ContinuationReport> {
    let s = solve_adjoint(p, 2.0 * p.r, opts)?;
    let dom = *s.grid.domain();
    let exterior = |x: Point| (p.g)(dom.project_to_boundary(x));
    let inner = annulus_abs_integral(&s.grid, &s.u, p.center, 0.0, p.r, exterior)?;
    let outer = annulus_abs_integral(&s.grid, &s.u, p.center, p.r, 2.0 * p.r, exterior)?;
    let (k, m) = (s.coeffs.k(), s.coeffs.m());
    let rate = (1.0 + k + sqrt(m)) * p.r;
    Ok(finish(ContinuationKind::Annulus, p, k, m, inner, outer, rate, None, opts))
}

/// Solves on `B(c, R)` and compares the disk with its boundary circle; also
/// runs the dual problem with source `sign(u)`.
pub fn continuation_ratio_boundary(p: &ContinuationProblem, opts: &ContinuationOptions) -> Result<ContinuationReport> {
    let s = solve_adjoint(p, p.r, opts)?;
    let dom = *s.grid.domain();
    let exterior = |x: Point| (p.g)(dom.project_to_boundary(x));
    let inner = annulus_abs_integral(&s.grid, &s.u, p.center, 0.0, p.r, exterior)?;
    let outer = circle_abs_integral(&s.grid, &s.u, p.center, p.r)?;
    let (k, m) = (s.coeffs.k(), s.coeffs.m());
    let sign: Vec<f64> = s.u.iter().map(|u| if *u > 0.0 { 1.0 } else if *u < 0.0 { -1.0 } else { 0.0 }).collect();
    let dual = dual_normal_check(&s.grid, &s.coeffs.with_forcing(sign)?, p.r, opts)?;
    let rate = (1.0 + k) * p.r;
    Ok(finish(ContinuationKind::Boundary, p, k, m, inner, outer, rate, Some(dual), opts))
}

/// `|∂ν φ_R| <= e^{(K+1)R}` for `-Δφ + W·∇φ + Vφ = F`, `|F| <= 1`, zero
/// Dirichlet data on `B(c, R)`.
pub fn dual_normal_check(grid: &Grid, coeffs: &CoefficientSet, r: f64, opts: &ContinuationOptions) -> Result<DualCheck> {
    if coeffs.f_norm() > 1.0 {
        return Err(Error::InvalidParameter(alloc::format!("dual source must satisfy |F| <= 1, got {}", coeffs.f_norm())));
    }
    let eo = EllipticOptions { solver: opts.solver, ..Default::default() };
    let phi = solve_elliptic_with(grid, coeffs, BoundaryCondition::Dirichlet, None, &eo)?.phi.into_inner();
    let a = coeffs.k() + 1.0;
    let bound = exp(a * r);
    let mut max_nd = 0.0f64;
    let mut checked = 0;
    let mut violations = 0;
    for b in grid.boundary_nodes() {
        if let Some(d) = grid.normal_derivative(&phi, b, opts.min_alignment) {
            checked += 1;
            max_nd = max_nd.max(d.abs());
            if d.abs() > bound * (1.0 + 1e-9) {
                violations += 1;
            }
        }
    }
    let radial = RadialSupersolution::build(coeffs.k(), r, grid.dim().max(2))?;
    let n = opts.radial_samples.max(1);
    let min_radial = (1..=n).map(|i| radial.worst_residual(r * i as f64 / n as f64)).fold(f64::INFINITY, f64::min);
    let pass = violations == 0 && checked > 0 && min_radial >= 1.0 - 1e-9;
    Ok(DualCheck {
        max_normal_derivative: max_nd,
        bound,
        nodes_checked: checked,
        violations,
        min_radial_residual: min_radial,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    /// Modified Bessel functions by their power series.
    fn bessel_i(nu: u32, x: f64) -> f64 {
        let mut term = libm::pow(0.5 * x, nu as f64);
        for k in 1..=nu {
            term /= k as f64;
        }
        let mut sum = term;
        for k in 1..200 {
            term *= 0.25 * x * x / (k as f64 * (k + nu) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum
    }

    fn problem<'a>(
        r: f64,
        h: f64,
        w: &'a dyn Fn(Point) -> Point,
        v: &'a dyn Fn(Point) -> f64,
        g: &'a dyn Fn(Point) -> f64,
    ) -> ContinuationProblem<'a> {
        ContinuationProblem { center: [0.0, 0.0], r, h, w, v, g }
    }

    #[test]
    fn constant_solution_ratios() {
        let (w, v, one) = (|_: Point| [0.0, 0.0], |_: Point| 0.0, |_: Point| 1.0);
        let h = 0.02;
        let opts = ContinuationOptions::default();
        let a = continuation_ratio_annulus(&problem(1.0, h, &w, &v, &one), &opts).unwrap();
        assert!((a.ratio - 1.0 / 3.0).abs() <= 5.0 * h * h, "{a:?}");
        assert!(a.c_req < 0.0 && a.pass);
        let b = continuation_ratio_boundary(&problem(1.0, h, &w, &v, &one), &opts).unwrap();
        assert!((b.inner - PI).abs() < 1e-9);
        assert!((b.ratio - 0.5).abs() <= 5.0 * h * h, "{b:?}");
        let d = b.dual.unwrap();
        assert!((d.max_normal_derivative - 0.5).abs() < 1e-2, "{d:?}");
        assert_eq!(d.violations, 0);
        assert!(d.min_radial_residual >= 1.0 && b.pass);
    }

    #[test]
    fn bessel_oracle() {
        let (w, v, one) = (|_: Point| [0.0, 0.0], |_: Point| 1.0, |_: Point| 1.0);
        let h = 0.02;
        let a = continuation_ratio_annulus(&problem(1.0, h, &w, &v, &one), &ContinuationOptions::default()).unwrap();
        let i02 = bessel_i(0, 2.0);
        let inner = 2.0 * PI * bessel_i(1, 1.0) / i02;
        let outer = 2.0 * PI * (2.0 * bessel_i(1, 2.0) - bessel_i(1, 1.0)) / i02;
        assert!((a.inner - inner).abs() < 1e-3 * inner, "{} vs {inner}", a.inner);
        assert!((a.outer - outer).abs() < 1e-3 * outer, "{} vs {outer}", a.outer);
        assert!(a.c_req < 10.0 && a.pass);
    }

    #[test]
    fn large_potential_boundary_ratio() {
        let (w, v, one) = (|_: Point| [0.0, 0.0], |_: Point| 100.0, |_: Point| 1.0);
        let b = continuation_ratio_boundary(&problem(1.0, 0.02, &w, &v, &one), &ContinuationOptions::default()).unwrap();
        assert!(b.c_req <= 10.0 && b.pass, "{b:?}");
        assert_eq!(b.dual.unwrap().violations, 0);
    }

    #[test]
    fn variable_drift() {
        let w = |p: Point| [libm::sin(3.0 * p[1]), 1.5 * libm::cos(p[0])];
        let v = |p: Point| 2.0 + p[0];
        let g = |p: Point| 1.0 + 0.5 * p[1];
        let opts = ContinuationOptions::default();
        let a = continuation_ratio_annulus(&problem(0.8, 0.02, &w, &v, &g), &opts).unwrap();
        assert!(a.pass && a.inner > 0.0 && a.outer > 0.0);
        let b = continuation_ratio_boundary(&problem(0.8, 0.02, &w, &v, &g), &opts).unwrap();
        assert!(b.pass, "{b:?}");
    }

    #[test]
    fn oversized_dual_source_rejected() {
        let g = Grid::new(ConvexDomain::disk([0.0, 0.0], 1.0).unwrap(), 0.1).unwrap();
        let c = CoefficientSet::constant(&g, [0.0, 0.0], 0.0, 2.0).unwrap();
        assert!(dual_normal_check(&g, &c, 1.0, &ContinuationOptions::default()).is_err());
    }
}
