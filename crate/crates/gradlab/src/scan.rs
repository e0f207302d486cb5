//! Row-partitioned Z-scans on the rayon pool. Partial maxima are merged in
//! partition order, and the merge is associative with an order-free
//! tie-break, so the report matches the sequential scan exactly.

use std::ops::Range;

use rayon::prelude::*;

use gradlab_core::verify::zscan::{balanced_row_split, default_tolerance, ParabolicZReport, PartialScan, ZScanOptions, ZScanReport, ZScanner};
use gradlab_core::{Barrier, Grid, ParabolicRun};

fn fold(rows: &[Range<usize>], f: impl Fn(Range<usize>) -> PartialScan + Sync) -> PartialScan {
    let parts: Vec<PartialScan> = rows.par_iter().map(|r| f(r.clone())).collect();
    parts.into_iter().fold(PartialScan::default(), PartialScan::merge)
}

/// Same strata and decisions as `ZScanner::run`, split over `parts` row ranges.
pub fn z_scan_parallel(
    grid: &Grid,
    values: &[f64],
    barrier: &Barrier,
    opts: &ZScanOptions,
    tolerance: f64,
    parts: usize,
) -> ZScanReport {
    let sc = ZScanner::new(grid, values, barrier, opts.near_factor);
    let rows = balanced_row_split(sc.len(), parts.max(1));
    if sc.pairs_total() <= opts.exhaustive_limit {
        return sc.report(fold(&rows, |r| sc.scan_all(r)), true, tolerance);
    }
    let near = fold(&rows, |r| sc.scan_near(r));
    let floor_z = near.max_z;
    let cost: u64 = rows.par_iter().map(|r| sc.pruned_cost(r.clone(), floor_z)).sum();
    if cost <= opts.pruned_budget {
        let rest = fold(&rows, |r| sc.scan_pruned(r, floor_z, false));
        return sc.report(near.merge(rest), true, tolerance);
    }
    let boundary = fold(&rows, |r| sc.scan_pruned(r, floor_z, true));
    let random = sc.scan_random(opts.random_pairs, opts.seed);
    sc.report(near.merge(boundary).merge(random), false, tolerance)
}

pub fn z_scan_parabolic_parallel(
    grid: &Grid,
    run: &ParabolicRun,
    barrier: &Barrier,
    epsilon: f64,
    opts: &ZScanOptions,
    parts: usize,
) -> ParabolicZReport {
    let tol = default_tolerance(barrier);
    let snapshots: Vec<ZScanReport> = run
        .snapshot_times
        .iter()
        .zip(&run.snapshots)
        .map(|(t, values)| {
            let mut rep = z_scan_parallel(grid, values, barrier, opts, tol, parts);
            rep.max_z -= epsilon * t.exp();
            rep.epsilon = epsilon;
            rep.time = *t;
            rep.pass = rep.max_z <= tol;
            rep
        })
        .collect();
    let max_z = snapshots.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.max_z));
    let first_violation = snapshots.iter().find(|r| !r.pass).map(|r| r.time);
    ParabolicZReport { pass: first_violation.is_none(), snapshots, max_z, first_violation }
}
