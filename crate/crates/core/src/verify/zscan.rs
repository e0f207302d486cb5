//! Two-point scans of `Z(x, y) = φ(y) - φ(x) - 2ϕ(|y - x|/2)` over node
//! pairs, where `ϕ` is the barrier profile.
//!
//! Pairs are unordered and scanned through `|φ(y) - φ(x)|`. The scan first
//! covers every pair closer than `4h`, which fixes a floor for the running
//! maximum. A pair `(x, y)` can then only beat the floor when
//! `2ϕ(|y-x|/2) < Δ(x) - floor`, with `Δ(x) = max_y |φ(y) - φ(x)|`, so every
//! node only needs partners inside a radius read from a monotone table.
//! When that pruned pass is too expensive the interior pairs are subsampled;
//! the near-diagonal and boundary strata are never subsampled.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use libm::{ceil, exp, fabs, floor, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barrier::Barrier;
use crate::geometry::{dist, Grid, Point};
use crate::parabolic::ParabolicRun;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZScanOptions {
    /// Above this many pairs the scan is stratified.
    pub exhaustive_limit: u64,
    /// Pair budget of the pruned pass before falling back to subsampling.
    pub pruned_budget: u64,
    /// Interior pairs drawn when subsampling.
    pub random_pairs: u64,
    pub seed: u64,
    /// Near-diagonal stratum radius in units of `h`.
    pub near_factor: f64,
}

impl Default for ZScanOptions {
    fn default() -> Self {
        ZScanOptions {
            exhaustive_limit: 10_000_000,
            pruned_budget: 400_000_000,
            random_pairs: 2_000_000,
            seed: 0,
            near_factor: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZScanReport {
    pub max_z: f64,
    pub argmax: Option<(usize, usize)>,
    pub x_star: Point,
    pub y_star: Point,
    /// `n(n-1)/2`.
    pub pairs_total: u64,
    /// Pairs where `Z` was evaluated.
    pub pairs_scanned: u64,
    /// Every pair was evaluated or excluded by the pruning bound.
    pub complete: bool,
    pub tolerance: f64,
    pub lambda: f64,
    /// Parabolic shift `ε` (zero for elliptic scans).
    pub epsilon: f64,
    pub time: f64,
    pub pass: bool,
}

/// Running maximum over a set of pairs; merging is associative and the
/// arg-max tie-break (smallest pair) keeps results order independent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialScan {
    pub max_z: f64,
    pub argmax: Option<(usize, usize)>,
    pub scanned: u64,
}

impl Default for PartialScan {
    fn default() -> Self {
        PartialScan { max_z: f64::NEG_INFINITY, argmax: None, scanned: 0 }
    }
}

impl PartialScan {
    #[inline]
    fn offer(&mut self, z: f64, i: usize, j: usize) {
        self.scanned += 1;
        let pair = if i < j { (i, j) } else { (j, i) };
        if z > self.max_z || (z == self.max_z && self.argmax.is_none_or(|a| pair < a)) {
            self.max_z = z;
            self.argmax = Some(pair);
        }
    }

    pub fn merge(self, other: PartialScan) -> PartialScan {
        let scanned = self.scanned + other.scanned;
        let pick_other = other.max_z > self.max_z
            || (other.max_z == self.max_z
                && match (other.argmax, self.argmax) {
                    (Some(a), Some(b)) => a < b,
                    (Some(_), None) => true,
                    _ => false,
                });
        let mut out = if pick_other { other } else { self };
        out.scanned = scanned;
        out
    }
}

/// Spatial hash of node positions with square buckets.
struct Buckets {
    origin: Point,
    cell: f64,
    dims: [usize; 2],
    starts: Vec<usize>,
    items: Vec<u32>,
}

impl Buckets {
    fn new(points: &[Point], cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let dims = [
            (floor((hi[0] - lo[0]) / cell) as usize) + 1,
            (floor((hi[1] - lo[1]) / cell) as usize) + 1,
        ];
        let key = |p: &Point| {
            let i = (floor((p[0] - lo[0]) / cell) as usize).min(dims[0] - 1);
            let j = (floor((p[1] - lo[1]) / cell) as usize).min(dims[1] - 1);
            j * dims[0] + i
        };
        let mut counts = vec![0usize; dims[0] * dims[1] + 1];
        for p in points {
            counts[key(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (id, p) in points.iter().enumerate() {
            let k = key(p);
            items[fill[k]] = id as u32;
            fill[k] += 1;
        }
        Buckets { origin: lo, cell, dims, starts: counts, items }
    }

    /// Calls `f(j)` for every node whose bucket intersects the square of
    /// half-side `radius` around `p`.
    fn for_each_near(&self, p: Point, radius: f64, mut f: impl FnMut(usize)) {
        let r = ceil(radius / self.cell) as isize;
        let ci = floor((p[0] - self.origin[0]) / self.cell) as isize;
        let cj = floor((p[1] - self.origin[1]) / self.cell) as isize;
        let (i0, i1) = ((ci - r).max(0), (ci + r).min(self.dims[0] as isize - 1));
        let (j0, j1) = ((cj - r).max(0), (cj + r).min(self.dims[1] as isize - 1));
        for j in j0..=j1 {
            for i in i0..=i1 {
                let k = j as usize * self.dims[0] + i as usize;
                for &id in &self.items[self.starts[k]..self.starts[k + 1]] {
                    f(id as usize);
                }
            }
        }
    }

    fn count_near(&self, p: Point, radius: f64) -> u64 {
        let r = ceil(radius / self.cell) as isize;
        let ci = floor((p[0] - self.origin[0]) / self.cell) as isize;
        let cj = floor((p[1] - self.origin[1]) / self.cell) as isize;
        let (i0, i1) = ((ci - r).max(0), (ci + r).min(self.dims[0] as isize - 1));
        let (j0, j1) = ((cj - r).max(0), (cj + r).min(self.dims[1] as isize - 1));
        let mut c = 0u64;
        for j in j0..=j1 {
            let row = j as usize * self.dims[0];
            c += (self.starts[row + i1 as usize + 1] - self.starts[row + i0 as usize]) as u64;
        }
        c
    }
}

/// Lower envelope of `g(d) = 2ϕ(d/2)` from the right, tabulated so that
/// `g(d') >= t` for every `d' >= radius_for(t)`.
struct SeparationTable {
    step: f64,
    /// `min_{j >= k} g(d_j)` minus a Lipschitz margin.
    tail_min: Vec<f64>,
}

impl SeparationTable {
    const SAMPLES: usize = 4096;

    fn new(barrier: &Barrier, max_dist: f64) -> Self {
        let step = max_dist / Self::SAMPLES as f64;
        let g: Vec<f64> = (0..=Self::SAMPLES).map(|k| 2.0 * barrier.phi(0.5 * k as f64 * step)).collect();
        // |g'(d)| = |ϕ'(d/2)| <= |λ| + 4f/a on the table range
        let lip = fabs(barrier.lambda()) + 4.0 * barrier.f() / barrier.a()
            + fabs(barrier.lambda()) * (1.0 - exp(-barrier.a() * max_dist));
        let mut tail_min = vec![0.0; g.len()];
        let mut m = f64::INFINITY;
        for k in (0..g.len()).rev() {
            m = m.min(g[k]);
            tail_min[k] = m - lip * step;
        }
        SeparationTable { step, tail_min }
    }

    /// Distance beyond which no pair can reach separation deficit `t`.
    fn radius_for(&self, t: f64) -> f64 {
        if !(t > self.tail_min[0]) {
            return 0.0;
        }
        // tail_min is nondecreasing: binary search for the first k with tail_min[k] >= t
        let (mut lo, mut hi) = (0usize, self.tail_min.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.tail_min[mid] >= t {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo >= self.tail_min.len() {
            f64::INFINITY
        } else {
            (lo + 1) as f64 * self.step
        }
    }
}

/// Pair scanner over one nodal field. Range methods let callers split the
/// work across threads and merge the partial results.
pub struct ZScanner<'a> {
    grid: &'a Grid,
    values: &'a [f64],
    barrier: Barrier,
    buckets: Buckets,
    table: SeparationTable,
    phi_min: f64,
    phi_max: f64,
    near_radius: f64,
}

impl<'a> ZScanner<'a> {
    pub fn new(grid: &'a Grid, values: &'a [f64], barrier: &Barrier, near_factor: f64) -> Self {
        let near_radius = near_factor * grid.h();
        let buckets = Buckets::new(grid.points(), near_radius.max(grid.h()));
        let max_dist = grid.domain().diameter() * (1.0 + 1e-9) + grid.h();
        let (phi_min, phi_max) =
            values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        ZScanner {
            grid,
            values,
            barrier: *barrier,
            buckets,
            table: SeparationTable::new(barrier, max_dist),
            phi_min,
            phi_max,
            near_radius,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn pairs_total(&self) -> u64 {
        let n = self.len() as u64;
        n * n.saturating_sub(1) / 2
    }

    #[inline]
    fn z(&self, i: usize, j: usize) -> f64 {
        let d = dist(self.grid.point(i), self.grid.point(j));
        fabs(self.values[j] - self.values[i]) - 2.0 * self.barrier.phi(0.5 * d)
    }

    fn spread(&self, i: usize) -> f64 {
        (self.phi_max - self.values[i]).max(self.values[i] - self.phi_min)
    }

    /// All pairs `(i, j)` with `i` in `rows` and `j > i`.
    pub fn scan_all(&self, rows: Range<usize>) -> PartialScan {
        let mut acc = PartialScan::default();
        for i in rows {
            for j in i + 1..self.len() {
                acc.offer(self.z(i, j), i, j);
            }
        }
        acc
    }

    /// Pairs with `j > i` closer than the near-diagonal radius.
    pub fn scan_near(&self, rows: Range<usize>) -> PartialScan {
        let mut acc = PartialScan::default();
        let r = self.near_radius;
        for i in rows {
            let p = self.grid.point(i);
            self.buckets.for_each_near(p, r, |j| {
                if j > i && dist(p, self.grid.point(j)) < r {
                    acc.offer(self.z(i, j), i, j);
                }
            });
        }
        acc
    }

    fn radius(&self, i: usize, floor_z: f64) -> f64 {
        self.table.radius_for(self.spread(i) - floor_z)
    }

    /// Pairs `(i, j)`, `j > i` (or every `j != i` when `i` is a boundary node
    /// and `all_partners_for_boundary` is set), that can exceed `floor_z`.
    pub fn scan_pruned(&self, rows: Range<usize>, floor_z: f64, boundary_rows_only: bool) -> PartialScan {
        let mut acc = PartialScan::default();
        for i in rows {
            let boundary = !self.grid.is_interior(i);
            if boundary_rows_only && !boundary {
                continue;
            }
            let r = self.radius(i, floor_z);
            if r == 0.0 {
                continue;
            }
            let p = self.grid.point(i);
            let keep = |j: usize| if boundary_rows_only { j != i } else { j > i };
            if r.is_infinite() {
                for j in 0..self.len() {
                    if keep(j) {
                        acc.offer(self.z(i, j), i, j);
                    }
                }
            } else {
                self.buckets.for_each_near(p, r, |j| {
                    if keep(j) && dist(p, self.grid.point(j)) < r {
                        acc.offer(self.z(i, j), i, j);
                    }
                });
            }
        }
        acc
    }

    /// Upper estimate of the pairs [`scan_pruned`](Self::scan_pruned) visits.
    pub fn pruned_cost(&self, rows: Range<usize>, floor_z: f64) -> u64 {
        let n = self.len() as u64;
        rows.map(|i| {
            let r = self.radius(i, floor_z);
            if r == 0.0 {
                0
            } else if r.is_infinite() {
                n
            } else {
                self.buckets.count_near(self.grid.point(i), r).min(n)
            }
        })
        .sum()
    }

    /// Uniformly drawn interior pairs farther apart than the near radius.
    pub fn scan_random(&self, count: u64, seed: u64) -> PartialScan {
        let mut acc = PartialScan::default();
        let interior: Vec<usize> = self.grid.interior_nodes().collect();
        if interior.len() < 2 {
            return acc;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let i = interior[rng.gen_range(0..interior.len())];
            let j = interior[rng.gen_range(0..interior.len())];
            if i != j && dist(self.grid.point(i), self.grid.point(j)) >= self.near_radius {
                acc.offer(self.z(i, j), i, j);
            }
        }
        acc
    }

    pub fn report(&self, acc: PartialScan, complete: bool, tolerance: f64) -> ZScanReport {
        let (x_star, y_star) = match acc.argmax {
            Some((i, j)) => (self.grid.point(i), self.grid.point(j)),
            None => ([0.0; 2], [0.0; 2]),
        };
        let max_z = if acc.argmax.is_some() { acc.max_z } else { f64::NEG_INFINITY };
        ZScanReport {
            max_z,
            argmax: acc.argmax,
            x_star,
            y_star,
            pairs_total: self.pairs_total(),
            pairs_scanned: acc.scanned,
            complete,
            tolerance,
            lambda: self.barrier.lambda(),
            epsilon: 0.0,
            time: 0.0,
            pass: max_z <= tolerance,
        }
    }

    /// Sequential stratified scan.
    pub fn run(&self, opts: &ZScanOptions, tolerance: f64) -> ZScanReport {
        let n = self.len();
        if self.pairs_total() <= opts.exhaustive_limit {
            return self.report(self.scan_all(0..n), true, tolerance);
        }
        let near = self.scan_near(0..n);
        let floor_z = near.max_z;
        if self.pruned_cost(0..n, floor_z) <= opts.pruned_budget {
            let rest = self.scan_pruned(0..n, floor_z, false);
            return self.report(near.merge(rest), true, tolerance);
        }
        let boundary = self.scan_pruned(0..n, floor_z, true);
        let random = self.scan_random(opts.random_pairs, opts.seed);
        self.report(near.merge(boundary).merge(random), false, tolerance)
    }
}

/// Default tolerance `1e-8 (λ + f)`.
pub fn default_tolerance(barrier: &Barrier) -> f64 {
    1e-8 * (barrier.lambda() + barrier.f())
}

pub fn z_scan_elliptic(grid: &Grid, values: &[f64], barrier: &Barrier, opts: &ZScanOptions) -> ZScanReport {
    ZScanner::new(grid, values, barrier, opts.near_factor).run(opts, default_tolerance(barrier))
}

/// Default `ε = 1e-6 (g0 + f + 1)`.
pub fn default_epsilon(g0: f64, f: f64) -> f64 {
    1e-6 * (g0 + f + 1.0)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParabolicZReport {
    pub snapshots: Vec<ZScanReport>,
    pub max_z: f64,
    pub first_violation: Option<f64>,
    pub pass: bool,
}

/// Scans every snapshot with `Z_ε = Z - ε e^t`.
pub fn z_scan_parabolic(
    grid: &Grid,
    run: &ParabolicRun,
    barrier: &Barrier,
    epsilon: f64,
    opts: &ZScanOptions,
) -> ParabolicZReport {
    let tol = default_tolerance(barrier);
    let mut snapshots = Vec::with_capacity(run.snapshots.len());
    for (t, values) in run.snapshot_times.iter().zip(&run.snapshots) {
        let mut rep = ZScanner::new(grid, values, barrier, opts.near_factor).run(opts, tol);
        rep.max_z -= epsilon * exp(*t);
        rep.epsilon = epsilon;
        rep.time = *t;
        rep.pass = rep.max_z <= tol;
        snapshots.push(rep);
    }
    let max_z = snapshots.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.max_z));
    let first_violation = snapshots.iter().find(|r| !r.pass).map(|r| r.time);
    ParabolicZReport { pass: first_violation.is_none(), snapshots, max_z, first_violation }
}

/// `sqrt` of the number of pairs, used by callers sizing thread chunks.
pub fn balanced_row_split(n: usize, parts: usize) -> Vec<Range<usize>> {
    // rows near the start carry more `j > i` partners in `scan_all`
    let parts = parts.max(1);
    let total = (n as f64) * (n as f64) / 2.0;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0usize;
    for k in 1..=parts {
        let target = total * k as f64 / parts as f64;
        // rows [0, e) carry about n e - e²/2 pairs
        let nf = n as f64;
        let e = nf - sqrt((nf * nf - 2.0 * target).max(0.0));
        let end = if k == parts { n } else { (e as usize).clamp(start, n) };
        out.push(start..end);
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::BarrierMode;
    use crate::elliptic::solve_elliptic;
    use crate::geometry::ConvexDomain;
    use crate::pde::{BoundaryCondition, CoefficientSet};
    use crate::parabolic::{solve_parabolic, ParabolicSpec};
    use proptest::prelude::*;

    fn brute(grid: &Grid, v: &[f64], b: &Barrier) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for i in 0..v.len() {
            for j in 0..v.len() {
                if i != j {
                    let d = dist(grid.point(i), grid.point(j));
                    m = m.max(v[j] - v[i] - 2.0 * b.phi(0.5 * d));
                }
            }
        }
        m
    }

    fn standard_1d(h: f64) -> (Grid, Vec<f64>) {
        let g = Grid::new(ConvexDomain::interval(0.0, 1.0).unwrap(), h).unwrap();
        let c = CoefficientSet::constant(&g, [0.0, 0.0], 0.0, 1.0).unwrap();
        let s = solve_elliptic(&g, &c, BoundaryCondition::Dirichlet).unwrap();
        (g, s.phi.into_inner())
    }

    #[test]
    fn zero_field_scan_is_negative() {
        let g = Grid::new(ConvexDomain::interval(0.0, 1.0).unwrap(), 0.01).unwrap();
        let b = Barrier::build(0.0, 1.0, 1.0, BarrierMode::Elliptic).unwrap();
        let r = z_scan_elliptic(&g, &vec![0.0; g.len()], &b, &ZScanOptions::default());
        assert!(r.max_z < 0.0 && r.max_z > -2.0 * b.phi(0.01));
        assert!(r.complete && r.pass);
    }

    #[test]
    fn standard_problem_and_negative_control() {
        let (g, v) = standard_1d(1e-3);
        let b = Barrier::build(0.0, 1.0, 1.0, BarrierMode::Elliptic).unwrap();
        let r = z_scan_elliptic(&g, &v, &b, &ZScanOptions::default());
        assert!(r.max_z <= 1e-8, "{r:?}");
        let weak = b.with_lambda(0.01 * b.lambda());
        let r = z_scan_elliptic(&g, &v, &weak, &ZScanOptions::default());
        assert!(r.max_z > 0.0);
        assert!(!r.pass);
    }

    #[test]
    fn stratified_scan_matches_brute_force() {
        let g = Grid::new(ConvexDomain::disk([0.0, 0.0], 1.0).unwrap(), 0.08).unwrap();
        let c = CoefficientSet::sample(&g, |p| [1.0, p[0]], |_| 0.0, |p| 1.0 + p[1]).unwrap();
        let s = solve_elliptic(&g, &c, BoundaryCondition::Dirichlet).unwrap();
        let b = Barrier::build(c.k(), c.f_norm(), 2.0, BarrierMode::Elliptic).unwrap();
        let exact = brute(&g, &s.phi, &b);
        for lambda_scale in [1.0, 0.01] {
            let bb = b.with_lambda(lambda_scale * b.lambda());
            let exact = if lambda_scale == 1.0 { exact } else { brute(&g, &s.phi, &bb) };
            let opts = ZScanOptions { exhaustive_limit: 0, ..Default::default() };
            let r = z_scan_elliptic(&g, &s.phi, &bb, &opts);
            assert!(r.complete);
            assert_eq!(r.max_z, exact);
            assert!(r.pairs_scanned < r.pairs_total || lambda_scale != 1.0);
        }
    }

    #[test]
    fn subsampled_scan_keeps_mandatory_strata() {
        let (g, v) = standard_1d(0.01);
        let b = Barrier::build(0.0, 1.0, 1.0, BarrierMode::Elliptic).unwrap();
        let opts = ZScanOptions { exhaustive_limit: 0, pruned_budget: 0, random_pairs: 100, ..Default::default() };
        let r = z_scan_elliptic(&g, &v, &b, &opts);
        assert!(!r.complete);
        let exact = brute(&g, &v, &b);
        assert_eq!(r.max_z, exact);
    }

    #[test]
    fn parabolic_scans() {
        let g = Grid::new(ConvexDomain::interval(0.0, 1.0).unwrap(), 0.01).unwrap();
        let zero = CoefficientSet::constant(&g, [0.0, 0.0], 0.0, 0.0).unwrap();
        let spec = ParabolicSpec { t_final: 0.5, dt: Some(0.01), snapshot_stride: 10, ..Default::default() };
        let run = solve_parabolic(&g, &zero, &vec![0.0; g.len()], &spec).unwrap();
        let b = Barrier::build(0.0, 0.0, 1.0, BarrierMode::Parabolic { g0: 0.0 }).unwrap();
        let eps = default_epsilon(0.0, 0.0);
        let rep = z_scan_parabolic(&g, &run, &b, eps, &ZScanOptions::default());
        for s in &rep.snapshots {
            assert!((s.max_z + eps * exp(s.time)).abs() < 1e-15);
        }
        let phi0: Vec<f64> = g.points().iter().map(|p| libm::sin(core::f64::consts::PI * p[0])).collect();
        let run = solve_parabolic(&g, &zero, &phi0, &spec).unwrap();
        let b = Barrier::build(0.0, 0.0, 1.0, BarrierMode::Parabolic { g0: run.g0 }).unwrap();
        for eps in [default_epsilon(run.g0, 0.0), 0.0] {
            let rep = z_scan_parabolic(&g, &run, &b, eps, &ZScanOptions::default());
            assert!(rep.pass && rep.max_z <= 1e-8, "{:?}", rep.max_z);
        }
    }

    #[test]
    fn row_split_covers_everything() {
        let parts = balanced_row_split(1000, 7);
        assert_eq!(parts.len(), 7);
        assert_eq!(parts[0].start, 0);
        assert_eq!(parts[6].end, 1000);
        for w in parts.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn pruning_is_exact(
            vals in proptest::collection::vec(-1.0f64..1.0, 41),
            lam in 0.05f64..20.0,
            k in 0.0f64..3.0,
        ) {
            let g = Grid::new(ConvexDomain::interval(0.0, 1.0).unwrap(), 0.025).unwrap();
            prop_assume!(g.len() == vals.len());
            let b = Barrier::build(k, 1.0, 1.0, BarrierMode::Elliptic).unwrap().with_lambda(lam);
            let opts = ZScanOptions { exhaustive_limit: 0, ..Default::default() };
            let r = z_scan_elliptic(&g, &vals, &b, &opts);
            prop_assert_eq!(r.max_z, brute(&g, &vals, &b));
        }

        #[test]
        fn merge_is_associative(
            a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
            ia in 0usize..5, ib in 0usize..5, ic in 0usize..5,
        ) {
            let mk = |z: f64, i: usize| {
                let mut p = PartialScan::default();
                p.offer(z, i, i + 1);
                p
            };
            let (x, y, w) = (mk(a, ia), mk(b, ib), mk(c, ic));
            prop_assert_eq!(x.merge(y).merge(w), x.merge(y.merge(w)));
            prop_assert_eq!(x.merge(y).argmax, y.merge(x).argmax);
        }
    }
}
