//! Stationary boundary-value problem `-Δφ + W·∇φ + Vφ = F` in Ω.

use alloc::vec::Vec;
use libm::sqrt;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryGradient, Grid, Point};
use crate::pde::{assemble, rhs, BoundaryCondition, CoefficientSet, OperatorForm, ScalarField};
use crate::solver::{solve, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticOptions {
    pub solver: SolverOptions,
    pub form: OperatorForm,
    /// Accept negative potential samples under Dirichlet data (exploratory runs).
    pub allow_negative_potential: bool,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        EllipticOptions {
            solver: SolverOptions::default(),
            form: OperatorForm::Advective,
            allow_negative_potential: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticSolution {
    pub phi: ScalarField,
    pub grad_phi: Vec<Point>,
    pub sup_grad: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bc: BoundaryCondition,
    pub gauge: Option<usize>,
}

/// Solves with default options and homogeneous boundary data.
pub fn solve_elliptic(grid: &Grid, coeffs: &CoefficientSet, bc: BoundaryCondition) -> Result<EllipticSolution> {
    solve_elliptic_with(grid, coeffs, bc, None, &EllipticOptions::default())
}

/// Solves with optional boundary data (Dirichlet values or outward normal
/// derivatives, indexed by node; interior entries are ignored).
pub fn solve_elliptic_with(
    grid: &Grid,
    coeffs: &CoefficientSet,
    bc: BoundaryCondition,
    boundary: Option<&[f64]>,
    opts: &EllipticOptions,
) -> Result<EllipticSolution> {
    if let Some(g) = boundary {
        if g.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: g.len() });
        }
    }
    match bc {
        BoundaryCondition::Dirichlet if !opts.allow_negative_potential => coeffs.check_nonnegative_potential()?,
        BoundaryCondition::Neumann if !coeffs.potential_vanishes() => {
            return Err(Error::Unsupported("Neumann problems are posed with V = 0 only"));
        }
        _ => {}
    }
    let op = assemble(grid, coeffs, bc, opts.form)?;
    let b = rhs(grid, coeffs, boundary);
    let out = solve(&op, &b, &opts.solver)?;
    let mut x = out.x;
    if bc == BoundaryCondition::Dirichlet && boundary.is_none() {
        for i in grid.boundary_nodes() {
            x[i] = 0.0;
        }
    }
    let mode = match (bc, boundary) {
        (BoundaryCondition::Dirichlet, None) => BoundaryGradient::ZeroTrace,
        _ => BoundaryGradient::OneSidedAxes,
    };
    let grad_phi = grid.gradient(&x, mode);
    let sup_grad = max_norm(&grad_phi);
    Ok(EllipticSolution {
        phi: ScalarField::new(grid, x)?,
        grad_phi,
        sup_grad,
        residual: out.residual,
        iterations: out.iterations,
        bc,
        gauge: out.gauge,
    })
}

fn max_norm(g: &[Point]) -> f64 {
    g.iter().fold(0.0f64, |m, p| m.max(sqrt(p[0] * p[0] + p[1] * p[1])))
}

/// Max over nodes of the Euclidean norm of the difference-quotient gradient.
pub fn measure_sup_grad(sol: &EllipticSolution) -> f64 {
    max_norm(&sol.grad_phi)
}

/// Same measurement for an arbitrary nodal field.
pub fn sup_gradient(grid: &Grid, values: &[f64], mode: BoundaryGradient) -> f64 {
    max_norm(&grid.gradient(values, mode))
}
