//! Evolution problem `∂ₜφ - Δφ + W·∇φ + Vφ = F` with zero Dirichlet data.
//!
//! One implicit Euler step followed by Crank–Nicolson. Coefficients are
//! time independent; the source may carry an exponential decay factor.

use alloc::vec;
use alloc::vec::Vec;
use libm::{ceil, exp, fabs};

use crate::elliptic::sup_gradient;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryGradient, Grid};
use crate::pde::{assemble, BoundaryCondition, CoefficientSet, OperatorForm};
use crate::solver::{PreparedSolver, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicSpec {
    pub t_final: f64,
    /// Requested step; `None` means `h`. Shrunk so that it divides `t_final`.
    pub dt: Option<f64>,
    /// Keep every `stride`-th state (the first and last are always kept).
    pub snapshot_stride: usize,
    /// Source is `e^{-r t} F(x)` with this `r`.
    pub forcing_decay: f64,
    pub solver: SolverOptions,
}

impl Default for ParabolicSpec {
    fn default() -> Self {
        ParabolicSpec {
            t_final: 1.0,
            dt: None,
            snapshot_stride: 10,
            forcing_decay: 0.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicRun {
    pub phi0: Vec<f64>,
    /// `‖∇φ₀‖∞` of the discrete initial datum.
    pub g0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    /// `(t, sup|∇φ(t,·)|)` at `t = 0` and after every step.
    pub grad_history: Vec<(f64, f64)>,
    pub final_phi: Vec<f64>,
}

impl ParabolicRun {
    pub fn max_grad(&self) -> f64 {
        self.grad_history.iter().fold(0.0f64, |m, (_, g)| m.max(*g))
    }
}

fn check_spec(spec: &ParabolicSpec, h: f64) -> Result<(f64, usize)> {
    if !(spec.t_final >= 0.0 && spec.t_final.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("T must be >= 0, got {}", spec.t_final)));
    }
    let dt = spec.dt.unwrap_or(h);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("dt must be > 0, got {dt}")));
    }
    if spec.snapshot_stride == 0 {
        return Err(Error::InvalidParameter("snapshot stride must be >= 1".into()));
    }
    if spec.t_final == 0.0 {
        return Ok((dt, 0));
    }
    let steps = ceil(spec.t_final / dt - 1e-9).max(1.0) as usize;
    Ok((spec.t_final / steps as f64, steps))
}

pub fn solve_parabolic(
    grid: &Grid,
    coeffs: &CoefficientSet,
    phi0: &[f64],
    spec: &ParabolicSpec,
) -> Result<ParabolicRun> {
    let n = grid.len();
    if phi0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: phi0.len() });
    }
    let tol = 1e-12 * phi0.iter().fold(1.0f64, |m, x| m.max(fabs(*x)));
    for b in grid.boundary_nodes() {
        if fabs(phi0[b]) > tol || !phi0[b].is_finite() {
            return Err(Error::NonzeroBoundaryData { node: b, value: phi0[b] });
        }
    }
    let (dt, steps) = check_spec(spec, grid.h())?;
    let a = assemble(grid, coeffs, BoundaryCondition::Dirichlet, OperatorForm::Advective)?;
    let mode = BoundaryGradient::ZeroTrace;
    let mut u: Vec<f64> = phi0.to_vec();
    for b in grid.boundary_nodes() {
        u[b] = 0.0;
    }
    let g0 = sup_gradient(grid, &u, mode);
    let mut run = ParabolicRun {
        phi0: u.clone(),
        g0,
        t_final: spec.t_final,
        dt,
        steps,
        snapshot_times: vec![0.0],
        snapshots: vec![u.clone()],
        grad_history: vec![(0.0, g0)],
        final_phi: Vec::new(),
    };
    let f = coeffs.f();
    let decay = spec.forcing_decay;
    let source = |t: f64| exp(-decay * t);
    let interior: Vec<bool> = (0..n).map(|i| grid.is_interior(i)).collect();

    let mut euler: Option<PreparedSolver> = None;
    let mut cn: Option<PreparedSolver> = None;
    let mut au = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let t1 = step as f64 * dt;
        let solver = if step == 1 {
            // (I + dt A) u1 = u0 + dt F(t1)
            for i in 0..n {
                rhs[i] = if interior[i] { u[i] + dt * source(t1) * f[i] } else { 0.0 };
            }
            euler.get_or_insert(PreparedSolver::new(a.affine(dt, 1.0), &spec.solver)?)
        } else {
            // (I + dt/2 A) u1 = (I - dt/2 A) u0 + dt/2 (F(t0) + F(t1))
            a.matvec(&u, &mut au);
            let s = 0.5 * dt * (source(t0) + source(t1));
            for i in 0..n {
                rhs[i] = if interior[i] { u[i] - 0.5 * dt * au[i] + s * f[i] } else { 0.0 };
            }
            if cn.is_none() {
                cn = Some(PreparedSolver::new(a.affine(0.5 * dt, 1.0), &spec.solver)?);
            }
            cn.as_ref().unwrap()
        };
        let out = solver.solve(&rhs, Some(&u))?;
        u = out.x;
        run.grad_history.push((t1, sup_gradient(grid, &u, mode)));
        if step % spec.snapshot_stride == 0 || step == steps {
            run.snapshot_times.push(t1);
            run.snapshots.push(u.clone());
        }
    }
    run.final_phi = u;
    Ok(run)
}

/// Shift `V ↦ V + m` with `m = ‖V⁻‖∞`. If `ψ` solves the shifted problem
/// with source `e^{-mt}F`, then `φ = e^{mt}ψ` solves the original one.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialShift {
    pub coeffs: CoefficientSet,
    pub shift: f64,
}

impl PotentialShift {
    /// Factor restoring the original solution at time `t`.
    pub fn factor(&self, t: f64) -> f64 {
        exp(self.shift * t)
    }
}

pub fn reduce_potential(coeffs: &CoefficientSet) -> Result<PotentialShift> {
    let m = coeffs.negative_part();
    if m == 0.0 {
        return Ok(PotentialShift { coeffs: coeffs.clone(), shift: 0.0 });
    }
    let v: Vec<f64> = coeffs.v().iter().map(|x| x + m).collect();
    Ok(PotentialShift { coeffs: coeffs.with_potential(v)?, shift: m })
}

/// Runs the shifted problem and maps every stored state back.
pub fn solve_parabolic_shifted(
    grid: &Grid,
    coeffs: &CoefficientSet,
    phi0: &[f64],
    spec: &ParabolicSpec,
) -> Result<ParabolicRun> {
    let red = reduce_potential(coeffs)?;
    let spec2 = ParabolicSpec { forcing_decay: spec.forcing_decay + red.shift, ..*spec };
    let mut run = solve_parabolic(grid, &red.coeffs, phi0, &spec2)?;
    for (t, s) in run.snapshot_times.iter().zip(run.snapshots.iter_mut()) {
        let c = red.factor(*t);
        s.iter_mut().for_each(|x| *x *= c);
    }
    for (t, g) in run.grad_history.iter_mut() {
        *g *= red.factor(*t);
    }
    let c = red.factor(run.t_final);
    run.final_phi.iter_mut().for_each(|x| *x *= c);
    Ok(run)
}
