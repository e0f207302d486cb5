//! Linear solvers: BiCGSTAB with Jacobi or multigrid preconditioning, banded LU for narrow
//! (one-dimensional) systems, and a dense LU oracle for cross-checking.

use alloc::vec;
use alloc::vec::Vec;
use libm::fabs;

use crate::amg::Multigrid;
use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Dense oracle size cap.
pub const DENSE_ORACLE_MAX: usize = 2000;

/// Systems whose total bandwidth is at most this go to the banded direct solver.
const BANDED_MAX_WIDTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    /// Banded elimination for narrow systems, BiCGSTAB otherwise.
    Auto,
    Iterative,
    Banded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    /// Multigrid from [`MULTIGRID_MIN`] unknowns up, Jacobi below.
    Auto,
    Jacobi,
    Multigrid,
}

/// Smallest system preconditioned with multigrid under [`Preconditioner::Auto`].
pub const MULTIGRID_MIN: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance on `||Ax - b||_inf / ||b||_inf`.
    pub tol: f64,
    /// Iteration cap; `None` means `20 n`.
    pub max_iter: Option<usize>,
    pub method: SolverMethod,
    pub preconditioner: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: None, method: SolverMethod::Auto, preconditioner: Preconditioner::Auto }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    /// Achieved relative residual (infinity norm).
    pub residual: f64,
    pub iterations: usize,
    /// Node pinned to zero when the operator has a constant kernel.
    pub gauge: Option<usize>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(fabs(*x)))
}

fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative infinity-norm residual of `x` for `A x = b`.
pub fn relative_residual(op: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
    let mut r = vec![0.0; op.n()];
    op.matvec(x, &mut r);
    let num = r.iter().zip(b).fold(0.0f64, |m, (ax, bi)| m.max(fabs(ax - bi)));
    let den = inf_norm(b);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Solves `op x = rhs`. Operators with a constant kernel (pure Neumann,
/// no potential) get node 0 pinned to zero; the pinned node is reported.
pub fn solve(op: &SparseOperator, rhs: &[f64], opts: &SolverOptions) -> Result<SolveOutcome> {
    solve_with_guess(op, rhs, None, opts)
}

pub fn solve_with_guess(
    op: &SparseOperator,
    rhs: &[f64],
    guess: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    let n = op.n();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("tolerance must be > 0, got {}", opts.tol)));
    }
    if op.has_constant_kernel() {
        let pinned = op.with_identity_row(0);
        let mut b = rhs.to_vec();
        b[0] = 0.0;
        let mut out = solve_with_guess(&pinned, &b, guess, opts)?;
        // pivoting can leave rounding noise on the pinned row
        out.x[0] = 0.0;
        out.gauge = Some(0);
        return Ok(out);
    }
    let (lo, up) = op.bandwidth();
    let banded = match opts.method {
        SolverMethod::Banded => true,
        SolverMethod::Iterative => false,
        SolverMethod::Auto => lo + up <= BANDED_MAX_WIDTH,
    };
    if banded {
        let lu = BandedLu::factor(op)?;
        let x = lu.solve(rhs);
        let residual = relative_residual(op, &x, rhs);
        return Ok(SolveOutcome { x, residual, iterations: 1, gauge: None });
    }
    bicgstab(op, rhs, guess, opts)
}

/// Operator prepared for repeated solves: banded systems are factored
/// once, others keep the operator for warm-started BiCGSTAB.
#[derive(Clone, Debug)]
pub enum PreparedSolver {
    Banded { op: SparseOperator, lu: BandedLu },
    Iterative { op: SparseOperator, opts: SolverOptions, pre: Precond },
}

impl PreparedSolver {
    pub fn new(op: SparseOperator, opts: &SolverOptions) -> Result<Self> {
        if op.has_constant_kernel() {
            return Err(Error::Unsupported("prepared solves need a nonsingular operator"));
        }
        let (lo, up) = op.bandwidth();
        let banded = match opts.method {
            SolverMethod::Banded => true,
            SolverMethod::Iterative => false,
            SolverMethod::Auto => lo + up <= BANDED_MAX_WIDTH,
        };
        if banded {
            let lu = BandedLu::factor(&op)?;
            Ok(PreparedSolver::Banded { op, lu })
        } else {
            let pre = Precond::build(&op, opts.preconditioner);
            Ok(PreparedSolver::Iterative { op, opts: *opts, pre })
        }
    }

    pub fn operator(&self) -> &SparseOperator {
        match self {
            PreparedSolver::Banded { op, .. } | PreparedSolver::Iterative { op, .. } => op,
        }
    }

    pub fn solve(&self, rhs: &[f64], guess: Option<&[f64]>) -> Result<SolveOutcome> {
        match self {
            PreparedSolver::Banded { op, lu } => {
                if rhs.len() != op.n() {
                    return Err(Error::DimensionMismatch { expected: op.n(), found: rhs.len() });
                }
                let x = lu.solve(rhs);
                let residual = relative_residual(op, &x, rhs);
                Ok(SolveOutcome { x, residual, iterations: 1, gauge: None })
            }
            PreparedSolver::Iterative { op, opts, pre } => bicgstab_with(op, rhs, guess, opts, pre),
        }
    }
}

/// Multiple of `ε (|A||x| + |b|)` below which a residual is rounding noise.
/// Systems whose tolerance lies under this floor (Shortley–Weller rows next
/// to snapped boundary nodes carrying large data) stop there instead.
const ROUNDING_FLOOR: f64 = 64.0;

/// Restarts without halving the true residual before giving up; reaching
/// this means the tolerance is below the rounding floor of the system.
const MAX_STALLS: usize = 25;

/// Right preconditioner of [`bicgstab_with`].
#[derive(Clone, Debug)]
pub enum Precond {
    Jacobi(Vec<f64>),
    Multigrid(Multigrid),
}

impl Precond {
    pub fn build(op: &SparseOperator, kind: Preconditioner) -> Self {
        let mg = match kind {
            Preconditioner::Auto => op.n() >= MULTIGRID_MIN,
            Preconditioner::Jacobi => false,
            Preconditioner::Multigrid => true,
        };
        if mg {
            Precond::Multigrid(Multigrid::new(op))
        } else {
            Precond::Jacobi(op.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect())
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Jacobi(inv) => {
                for ((zi, ri), d) in z.iter_mut().zip(r).zip(inv) {
                    *zi = d * ri;
                }
            }
            Precond::Multigrid(mg) => mg.apply(r, z),
        }
    }
}

/// Preconditioned BiCGSTAB. Convergence is declared on the true
/// infinity-norm residual; the recurrence restarts when it drifts.
pub fn bicgstab(
    op: &SparseOperator,
    b: &[f64],
    guess: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    if b.len() != op.n() {
        return Err(Error::DimensionMismatch { expected: op.n(), found: b.len() });
    }
    if inf_norm(b) == 0.0 {
        return Ok(SolveOutcome { x: vec![0.0; op.n()], residual: 0.0, iterations: 0, gauge: None });
    }
    bicgstab_with(op, b, guess, opts, &Precond::build(op, opts.preconditioner))
}

pub fn bicgstab_with(
    op: &SparseOperator,
    b: &[f64],
    guess: Option<&[f64]>,
    opts: &SolverOptions,
    pre: &Precond,
) -> Result<SolveOutcome> {
    let n = op.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let bnorm = inf_norm(b);
    if bnorm == 0.0 {
        return Ok(SolveOutcome { x: vec![0.0; n], residual: 0.0, iterations: 0, gauge: None });
    }
    let target = opts.tol * bnorm;
    let max_iter = opts.max_iter.unwrap_or(20 * n.max(1));

    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        _ => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    // Returns the residual norm and its rounding floor `c ε max_i (|A||x| + |b|)_i`.
    let true_residual = |x: &[f64], r: &mut [f64]| {
        let mut floor = 0.0f64;
        for i in 0..n {
            let (mut ax, mut mag) = (0.0, fabs(b[i]));
            for (j, a) in op.row(i) {
                ax += a * x[j];
                mag += fabs(a * x[j]);
            }
            r[i] = b[i] - ax;
            floor = floor.max(mag);
        }
        (inf_norm(r), ROUNDING_FLOOR * f64::EPSILON * floor)
    };
    let (mut rnorm, mut floor) = true_residual(&x, &mut r);
    if rnorm <= target.max(floor) {
        return Ok(SolveOutcome { x, residual: rnorm / bnorm, iterations: 0, gauge: None });
    }
    let mut best = rnorm;
    let mut stalls = 0usize;
    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut restart = false;

    for it in 1..=max_iter {
        if restart {
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            restart = false;
        }
        let rho_new = dotp(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            true_residual(&x, &mut r);
            restart = true;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut y);
        op.matvec(&y, &mut v);
        let rv = dotp(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            true_residual(&x, &mut r);
            restart = true;
            continue;
        }
        alpha = rho_new / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if inf_norm(&s) <= target.max(floor) {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            (rnorm, floor) = true_residual(&x, &mut r);
            if rnorm <= target.max(floor) {
                return Ok(SolveOutcome { x, residual: rnorm / bnorm, iterations: it, gauge: None });
            }
            if rnorm < 0.5 * best {
                best = rnorm;
                stalls = 0;
            } else {
                stalls += 1;
                if stalls > MAX_STALLS {
                    return Err(Error::NotConverged { iterations: it, residual: rnorm / bnorm });
                }
            }
            restart = true;
            continue;
        }
        pre.apply(&s, &mut z);
        op.matvec(&z, &mut t);
        let tt = dotp(&t, &t);
        omega = if tt > 0.0 { dotp(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        if omega == 0.0 {
            true_residual(&x, &mut r);
            restart = true;
            continue;
        }
        if inf_norm(&r) <= target.max(floor) {
            (rnorm, floor) = true_residual(&x, &mut r);
            if rnorm <= target.max(floor) {
                return Ok(SolveOutcome { x, residual: rnorm / bnorm, iterations: it, gauge: None });
            }
            if rnorm < 0.5 * best {
                best = rnorm;
                stalls = 0;
            } else {
                stalls += 1;
                if stalls > MAX_STALLS {
                    return Err(Error::NotConverged { iterations: it, residual: rnorm / bnorm });
                }
            }
            restart = true;
        }
    }
    (rnorm, _) = true_residual(&x, &mut r);
    Err(Error::NotConverged { iterations: max_iter, residual: rnorm / bnorm })
}

/// LU factorization with partial pivoting of a banded matrix.
///
/// Row `i` of the working matrix is stored over columns
/// `[i - kl, i + kl + ku]`; pivoting never moves support outside it.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    rows: Vec<f64>,
    piv: Vec<usize>,
    mult: Vec<f64>,
}

impl BandedLu {
    pub fn factor(op: &SparseOperator) -> Result<Self> {
        let n = op.n();
        let (kl, ku) = op.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut rows = vec![0.0; n * width];
        let col0 = |i: usize| i as isize - kl as isize;
        for i in 0..n {
            for (j, v) in op.row(i) {
                let k = (j as isize - col0(i)) as usize;
                rows[i * width + k] += v;
            }
        }
        let mut piv = vec![0usize; n];
        let mut mult = vec![0.0; n * kl.max(1)];
        let at = |rows: &Vec<f64>, i: usize, j: usize| -> f64 {
            let k = j as isize - col0(i);
            if k < 0 || k as usize >= width {
                0.0
            } else {
                rows[i * width + k as usize]
            }
        };
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = fabs(at(&rows, k, k));
            for i in k + 1..=last {
                let v = fabs(at(&rows, i, k));
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular { row: k });
            }
            piv[k] = p;
            let hi = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=hi {
                    let a = (j as isize - col0(k)) as usize;
                    let b = (j as isize - col0(p)) as usize;
                    rows.swap(k * width + a, p * width + b);
                }
            }
            let pivot = at(&rows, k, k);
            for i in k + 1..=last {
                let lik = at(&rows, i, k) / pivot;
                mult[k * kl.max(1) + (i - k - 1)] = lik;
                if lik == 0.0 {
                    continue;
                }
                for j in k..=hi {
                    let ukj = at(&rows, k, j);
                    if ukj != 0.0 {
                        let idx = (j as isize - col0(i)) as usize;
                        rows[i * width + idx] -= lik * ukj;
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, width, rows, piv, mult })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, kl, width) = (self.n, self.kl, self.width);
        let mut b = rhs.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let last = (k + kl).min(n.saturating_sub(1));
            for i in k + 1..=last {
                b[i] -= self.mult[k * kl.max(1) + (i - k - 1)] * b[k];
            }
        }
        let ku_total = width - kl - 1;
        for i in (0..n).rev() {
            let base = i * width;
            let off = kl; // column i sits at offset kl
            let mut s = b[i];
            for d in 1..=ku_total {
                let j = i + d;
                if j >= n {
                    break;
                }
                s -= self.rows[base + off + d] * b[j];
            }
            b[i] = s / self.rows[base + off];
        }
        b
    }
}

/// Dense LU with partial pivoting. Independent oracle for [`solve`].
pub fn dense_oracle_solve(op: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = op.n();
    if n > DENSE_ORACLE_MAX {
        return Err(Error::TooLarge { n, max: DENSE_ORACLE_MAX });
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let mut a = op.to_dense();
    let mut b = rhs.to_vec();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(fabs(*v)));
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| fabs(a[i][k]).partial_cmp(&fabs(a[j][k])).unwrap()).unwrap();
        if fabs(a[p][k]) <= 1e-14 * scale {
            return Err(Error::Singular { row: k });
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            if l == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * b[j];
        }
        b[i] = s / a[i][i];
    }
    Ok(b)
}
