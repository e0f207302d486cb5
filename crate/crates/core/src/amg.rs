//! Smoothed-aggregation multigrid, used as a BiCGSTAB preconditioner for
//! large two-dimensional systems.
//!
//! Identity rows (Dirichlet nodes) are left out of every aggregate; the
//! Gauss–Seidel smoother resolves them exactly.

use alloc::vec;
use alloc::vec::Vec;
use libm::fabs;

use crate::sparse::SparseOperator;

/// Coarsening stops at this many unknowns.
const COARSE_MAX: usize = 400;
const MAX_LEVELS: usize = 25;
/// Strength threshold for `-a_ij >= θ max_k(-a_ik)`.
const THETA: f64 = 0.25;

#[derive(Clone, Debug)]
struct Csr {
    n_rows: usize,
    n_cols: usize,
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn from_operator(op: &SparseOperator) -> Self {
        let n = op.n();
        let mut ptr = Vec::with_capacity(n + 1);
        let mut idx = Vec::with_capacity(op.nnz());
        let mut val = Vec::with_capacity(op.nnz());
        ptr.push(0);
        for i in 0..n {
            for (j, v) in op.row(i) {
                idx.push(j);
                val.push(v);
            }
            ptr.push(idx.len());
        }
        Csr { n_rows: n, n_cols: n, ptr, idx, val }
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.ptr[i], self.ptr[i + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).find(|(j, _)| **j == i).map_or(0.0, |(_, v)| *v)
            })
            .collect()
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(j, a)| a * x[*j]).sum();
        }
    }

    fn transpose(&self) -> Csr {
        let mut count = vec![0usize; self.n_cols + 1];
        for j in &self.idx {
            count[j + 1] += 1;
        }
        for k in 1..count.len() {
            count[k] += count[k - 1];
        }
        let mut fill = count.clone();
        let mut idx = vec![0; self.idx.len()];
        let mut val = vec![0.0; self.val.len()];
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                idx[fill[*j]] = i;
                val[fill[*j]] = *a;
                fill[*j] += 1;
            }
        }
        Csr { n_rows: self.n_cols, n_cols: self.n_rows, ptr: count, idx, val }
    }

    /// `self * other` with a dense accumulator; column order within a row
    /// follows first touch, which is deterministic.
    fn mul(&self, other: &Csr) -> Csr {
        let mut marker = vec![usize::MAX; other.n_cols];
        let mut acc = vec![0.0; other.n_cols];
        let mut ptr = Vec::with_capacity(self.n_rows + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.n_rows {
            touched.clear();
            let (c, v) = self.row(i);
            for (k, a) in c.iter().zip(v) {
                let (c2, v2) = other.row(*k);
                for (j, b) in c2.iter().zip(v2) {
                    if marker[*j] != i {
                        marker[*j] = i;
                        acc[*j] = 0.0;
                        touched.push(*j);
                    }
                    acc[*j] += a * b;
                }
            }
            touched.sort_unstable();
            for j in &touched {
                if acc[*j] != 0.0 {
                    idx.push(*j);
                    val.push(acc[*j]);
                }
            }
            ptr.push(idx.len());
        }
        Csr { n_rows: self.n_rows, n_cols: other.n_cols, ptr, idx, val }
    }
}

/// Greedy aggregation on the strength graph. Returns the aggregate of each
/// node (`None` for isolated nodes) and the aggregate count.
fn aggregate(a: &Csr) -> (Vec<Option<usize>>, usize) {
    let n = a.n_rows;
    let mut strong: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let (c, v) = a.row(i);
        let mx = c.iter().zip(v).filter(|(j, _)| **j != i).fold(0.0f64, |m, (_, x)| m.max(-x));
        let s = if mx > 0.0 {
            c.iter().zip(v).filter(|(j, x)| **j != i && -**x >= THETA * mx).map(|(j, _)| *j).collect()
        } else {
            Vec::new()
        };
        strong.push(s);
    }
    let mut agg: Vec<Option<usize>> = vec![None; n];
    let isolated: Vec<bool> = strong.iter().map(|s| s.is_empty()).collect();
    let mut count = 0;
    // pass 1: roots whose whole neighbourhood is free
    for i in 0..n {
        if isolated[i] || agg[i].is_some() {
            continue;
        }
        if strong[i].iter().all(|j| agg[*j].is_none()) {
            agg[i] = Some(count);
            for j in &strong[i] {
                if !isolated[*j] {
                    agg[*j] = Some(count);
                }
            }
            count += 1;
        }
    }
    // pass 2: attach leftovers to a neighbouring aggregate
    let snapshot = agg.clone();
    for i in 0..n {
        if isolated[i] || agg[i].is_some() {
            continue;
        }
        if let Some(a) = strong[i].iter().find_map(|j| snapshot[*j]) {
            agg[i] = Some(a);
        }
    }
    // pass 3: whatever remains forms new aggregates
    for i in 0..n {
        if isolated[i] || agg[i].is_some() {
            continue;
        }
        agg[i] = Some(count);
        for j in &strong[i] {
            if !isolated[*j] && agg[*j].is_none() {
                agg[*j] = Some(count);
            }
        }
        count += 1;
    }
    (agg, count)
}

/// `P = (I - ω D⁻¹ A) P₀` with `ω = 4/(3ρ)`, `ρ` the Gershgorin bound of `D⁻¹A`.
fn smoothed_prolongator(a: &Csr, agg: &[Option<usize>], n_agg: usize) -> Csr {
    let n = a.n_rows;
    let mut ptr = Vec::with_capacity(n + 1);
    let mut idx = Vec::with_capacity(n);
    let mut val = Vec::with_capacity(n);
    ptr.push(0);
    for g in agg {
        if let Some(g) = g {
            idx.push(*g);
            val.push(1.0);
        }
        ptr.push(idx.len());
    }
    let p0 = Csr { n_rows: n, n_cols: n_agg, ptr, idx, val };
    let diag = a.diagonal();
    let mut rho = 0.0f64;
    for (i, d) in diag.iter().enumerate() {
        let (_, v) = a.row(i);
        let s: f64 = v.iter().map(|x| fabs(*x)).sum();
        if *d != 0.0 {
            rho = rho.max(s / fabs(*d));
        }
    }
    let omega = if rho > 0.0 { 4.0 / (3.0 * rho) } else { 0.0 };
    // S = I - ω D⁻¹ A
    let mut sp = Vec::with_capacity(n + 1);
    let mut si = Vec::with_capacity(a.idx.len());
    let mut sv = Vec::with_capacity(a.idx.len());
    sp.push(0);
    for i in 0..n {
        let (c, v) = a.row(i);
        let scale = if diag[i] != 0.0 { omega / diag[i] } else { 0.0 };
        for (j, x) in c.iter().zip(v) {
            let mut e = -scale * x;
            if *j == i {
                e += 1.0;
            }
            si.push(*j);
            sv.push(e);
        }
        sp.push(si.len());
    }
    let s = Csr { n_rows: n, n_cols: n, ptr: sp, idx: si, val: sv };
    s.mul(&p0)
}

#[derive(Clone, Debug)]
struct Level {
    a: Csr,
    p: Csr,
    r: Csr,
}

/// Dense LU with partial pivoting for the coarsest level.
#[derive(Clone, Debug)]
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    fn factor(a: &Csr) -> Self {
        let n = a.n_rows;
        let mut lu = vec![0.0; n * n];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (j, x) in c.iter().zip(v) {
                lu[i * n + j] += x;
            }
        }
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if fabs(lu[i * n + k]) > fabs(lu[p * n + k]) {
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = lu[k * n + k];
            if d == 0.0 {
                // singular coarse block: leave the column, the smoother carries it
                lu[k * n + k] = 1.0;
                continue;
            }
            for i in k + 1..n {
                let m = lu[i * n + k] / d;
                lu[i * n + k] = m;
                if m != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= m * lu[k * n + j];
                    }
                }
            }
        }
        DenseLu { n, lu, piv }
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
    }
}

/// Multigrid hierarchy; [`apply`](Self::apply) is one V(1,1) cycle from a
/// zero guess with forward/backward Gauss–Seidel smoothing.
#[derive(Clone, Debug)]
pub struct Multigrid {
    levels: Vec<Level>,
    coarse_a: Csr,
    coarse: DenseLu,
    inv_diag: Vec<Vec<f64>>,
}

impl Multigrid {
    pub fn new(op: &SparseOperator) -> Self {
        let mut a = Csr::from_operator(op);
        let mut levels = Vec::new();
        while a.n_rows > COARSE_MAX && levels.len() < MAX_LEVELS {
            let (agg, n_agg) = aggregate(&a);
            if n_agg == 0 || n_agg * 10 > a.n_rows * 9 {
                break;
            }
            let p = smoothed_prolongator(&a, &agg, n_agg);
            let r = p.transpose();
            let coarse = r.mul(&a).mul(&p);
            levels.push(Level { a, p, r });
            a = coarse;
        }
        let mut inv_diag: Vec<Vec<f64>> = levels
            .iter()
            .map(|l| l.a.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 0.0 }).collect())
            .collect();
        inv_diag.push(a.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 0.0 }).collect());
        let coarse = DenseLu::factor(&a);
        Multigrid { levels, coarse_a: a, coarse, inv_diag }
    }

    pub fn levels(&self) -> usize {
        self.levels.len() + 1
    }

    /// Sum of nonzeros over all levels divided by the finest count.
    pub fn operator_complexity(&self) -> f64 {
        let fine = self.levels.first().map_or(self.coarse_a.idx.len(), |l| l.a.idx.len());
        let total: usize = self.levels.iter().map(|l| l.a.idx.len()).sum::<usize>() + self.coarse_a.idx.len();
        total as f64 / fine.max(1) as f64
    }

    pub fn apply(&self, b: &[f64], x: &mut [f64]) {
        self.cycle(0, b, x);
    }

    fn cycle(&self, k: usize, b: &[f64], x: &mut [f64]) {
        if k == self.levels.len() {
            self.coarse.solve(b, x);
            return;
        }
        let lvl = &self.levels[k];
        let a = &lvl.a;
        let d = &self.inv_diag[k];
        x.iter_mut().for_each(|e| *e = 0.0);
        gauss_seidel(a, d, b, x, false);
        let mut r = vec![0.0; a.n_rows];
        a.matvec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut rc = vec![0.0; lvl.r.n_rows];
        lvl.r.matvec(&r, &mut rc);
        let mut xc = vec![0.0; rc.len()];
        self.cycle(k + 1, &rc, &mut xc);
        lvl.p.matvec(&xc, &mut r);
        for (xi, ci) in x.iter_mut().zip(&r) {
            *xi += ci;
        }
        gauss_seidel(a, d, b, x, true);
    }
}

fn gauss_seidel(a: &Csr, inv_diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let n = a.n_rows;
    let mut step = |i: usize| {
        let (c, v) = a.row(i);
        let mut s = b[i];
        for (j, aij) in c.iter().zip(v) {
            if *j != i {
                s -= aij * x[*j];
            }
        }
        x[i] = s * inv_diag[i];
    };
    if backward {
        for i in (0..n).rev() {
            step(i);
        }
    } else {
        for i in 0..n {
            step(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexDomain, Grid};
    use crate::pde::{assemble, BoundaryCondition, CoefficientSet, OperatorForm};

    fn disk_operator(h: f64) -> SparseOperator {
        let g = Grid::new(ConvexDomain::disk([0.0, 0.0], 1.0).unwrap(), h).unwrap();
        let c = CoefficientSet::sample(&g, |p| [2.0 * p[1], -1.0], |_| 1.0, |_| 1.0).unwrap();
        assemble(&g, &c, BoundaryCondition::Dirichlet, OperatorForm::Advective).unwrap()
    }

    #[test]
    fn hierarchy_coarsens() {
        let op = disk_operator(0.02);
        let mg = Multigrid::new(&op);
        assert!(mg.levels() >= 3);
        assert!(mg.operator_complexity() < 2.0, "{}", mg.operator_complexity());
    }

    #[test]
    fn stationary_cycle_contracts() {
        let op = disk_operator(0.02);
        let mg = Multigrid::new(&op);
        let n = op.n();
        let b: Vec<f64> = (0..n).map(|i| libm::sin(i as f64)).collect();
        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let r0 = norm(&r);
        for _ in 0..20 {
            let mut e = vec![0.0; n];
            mg.apply(&r, &mut e);
            for (xi, ei) in x.iter_mut().zip(&e) {
                *xi += ei;
            }
            let mut ax = vec![0.0; n];
            op.matvec(&x, &mut ax);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        assert!(norm(&r) < 1e-3 * r0, "{}", norm(&r) / r0);
    }

    #[test]
    fn small_systems_are_solved_directly() {
        let op = SparseOperator::from_dense(&[vec![4.0, -1.0], vec![-1.0, 3.0]]);
        let mg = Multigrid::new(&op);
        assert_eq!(mg.levels(), 1);
        let mut x = vec![0.0; 2];
        mg.apply(&[3.0, 2.0], &mut x);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }
}
