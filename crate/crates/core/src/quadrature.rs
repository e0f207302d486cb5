//! Quadrature rules: composite Simpson on uniform samples, cell quadrature
//! with exact cell/disk intersection areas, and the trapezoid rule along a
//! circle through boundary nodes.

use alloc::vec::Vec;
use libm::{asin, atan2, sqrt};

use crate::error::{Error, Result};
use crate::geometry::{Grid, Point};

/// Composite Simpson rule for equispaced samples. An odd number of
/// intervals closes with a 3/8 panel.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let intervals = n - 1;
            let (end, tail) = if intervals % 2 == 0 { (n - 1, 0.0) } else {
                let k = n - 4;
                let t = 3.0 * h / 8.0 * (values[k] + 3.0 * values[k + 1] + 3.0 * values[k + 2] + values[k + 3]);
                (k, t)
            };
            let mut s = values[0] + values[end];
            for (i, v) in values.iter().enumerate().take(end).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            h / 3.0 * s + tail
        }
    }
}

/// `∫ √(ρ² - t²) dt`
fn circ_antiderivative(t: f64, rho: f64) -> f64 {
    let t = t.clamp(-rho, rho);
    0.5 * (t * sqrt((rho * rho - t * t).max(0.0)) + rho * rho * asin(t / rho))
}

/// Exact area of `[x0,x1]×[y0,y1] ∩ B(0, ρ)`.
pub fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, rho: f64) -> f64 {
    if rho <= 0.0 || x1 <= -rho || x0 >= rho || y1 <= -rho || y0 >= rho {
        return 0.0;
    }
    let a = x0.max(-rho);
    let b = x1.min(rho);
    let mut cuts: Vec<f64> = alloc::vec![a, b];
    for y in [y0, y1] {
        if y.abs() < rho {
            let c = sqrt(rho * rho - y * y);
            for t in [-c, c] {
                if t > a && t < b {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (l, r) = (w[0], w[1]);
        if r <= l {
            continue;
        }
        let m = 0.5 * (l + r);
        let s = sqrt((rho * rho - m * m).max(0.0));
        let top_is_circle = s < y1;
        let bottom_is_circle = -s > y0;
        if -s >= y1 || s <= y0 {
            continue;
        }
        let circle = circ_antiderivative(r, rho) - circ_antiderivative(l, rho);
        let top = if top_is_circle { circle } else { y1 * (r - l) };
        let bottom = if bottom_is_circle { -circle } else { y0 * (r - l) };
        area += top - bottom;
    }
    area
}

/// Exact area of the square cell of side `h` centred at `p` inside the
/// annulus `r0 < |x - c| < r1` (`r0 = 0` for a disk).
pub fn cell_annulus_area(p: Point, h: f64, c: Point, r0: f64, r1: f64) -> f64 {
    let (x0, x1) = (p[0] - c[0] - 0.5 * h, p[0] - c[0] + 0.5 * h);
    let (y0, y1) = (p[1] - c[1] - 0.5 * h, p[1] - c[1] + 0.5 * h);
    rect_disk_area(x0, x1, y0, y1, r1) - rect_disk_area(x0, x1, y0, y1, r0)
}

/// Midpoint cell quadrature of `|u|` over the annulus `r0 < |x - c| < r1`
/// with exact cell areas. Cells whose centre is not a grid node take
/// `exterior(x)` (typically the boundary data at the projection of `x`).
pub fn annulus_abs_integral(
    grid: &Grid,
    values: &[f64],
    c: Point,
    r0: f64,
    r1: f64,
    exterior: impl Fn(Point) -> f64,
) -> Result<f64> {
    if grid.dim() != 2 {
        return Err(Error::Unsupported("cell quadrature is two dimensional"));
    }
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
    }
    let h = grid.h();
    let [ni, nj] = grid.lattice_dims();
    let mut total = 0.0;
    for j in 0..nj {
        for i in 0..ni {
            let p = grid.lattice_point(i, j);
            let area = cell_annulus_area(p, h, c, r0, r1);
            if area <= 0.0 {
                continue;
            }
            let u = match grid.lattice_node(i, j) {
                Some(id) => values[id],
                None => exterior(p),
            };
            total += area * u.abs();
        }
    }
    Ok(total)
}

/// Trapezoid rule for `∫ |u| dσ` over the circle `|x - c| = ρ` through the
/// boundary nodes of `grid`, ordered by angle; spacing is arc length.
pub fn circle_abs_integral(grid: &Grid, values: &[f64], c: Point, rho: f64) -> Result<f64> {
    if grid.dim() != 2 {
        return Err(Error::Unsupported("boundary integral is two dimensional"));
    }
    let mut nodes: Vec<(f64, f64)> = grid
        .boundary_nodes()
        .map(|b| {
            let p = grid.point(b);
            (atan2(p[1] - c[1], p[0] - c[0]), values[b].abs())
        })
        .collect();
    if nodes.len() < 3 {
        return Err(Error::EmptyGrid);
    }
    nodes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut total = 0.0;
    for k in 0..nodes.len() {
        let (t0, u0) = nodes[k];
        let (t1, u1) = if k + 1 < nodes.len() {
            nodes[k + 1]
        } else {
            (nodes[0].0 + 2.0 * core::f64::consts::PI, nodes[0].1)
        };
        total += 0.5 * (u0 + u1) * (t1 - t0) * rho;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        for n in [5usize, 6, 7, 10] {
            let h = 2.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|i| {
                let x = -1.0 + i as f64 * h;
                x * x * x + 2.0 * x * x - x + 1.0
            }).collect();
            assert!((simpson(&v, h) - (4.0 / 3.0 + 2.0)).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn full_and_partial_disk_areas() {
        assert!((rect_disk_area(-2.0, 2.0, -2.0, 2.0, 1.0) - PI).abs() < 1e-14);
        assert!((rect_disk_area(0.0, 2.0, 0.0, 2.0, 1.0) - PI / 4.0).abs() < 1e-14);
        assert!((rect_disk_area(-0.5, 0.5, -0.5, 0.5, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(rect_disk_area(1.0, 2.0, 1.0, 2.0, 1.0), 0.0);
        // half-strip: {0 < y < 2} ∩ B(0,1) is half the disk
        assert!((rect_disk_area(-3.0, 3.0, 0.0, 2.0, 1.0) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_integrals_are_exact() {
        let r = 1.0;
        let g = Grid::new(ConvexDomain::disk([0.0, 0.0], 2.0 * r).unwrap(), 0.05).unwrap();
        let ones = alloc::vec![1.0; g.len()];
        let inner = annulus_abs_integral(&g, &ones, [0.0, 0.0], 0.0, r, |_| 1.0).unwrap();
        let outer = annulus_abs_integral(&g, &ones, [0.0, 0.0], r, 2.0 * r, |_| 1.0).unwrap();
        assert!((inner - PI).abs() < 1e-12);
        assert!((outer - 3.0 * PI).abs() < 1e-12);
        let line = circle_abs_integral(&g, &ones, [0.0, 0.0], 2.0).unwrap();
        assert!((line - 4.0 * PI).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn area_additivity(x0 in -1.5f64..1.5, y0 in -1.5f64..1.5, w in 0.01f64..1.0, t in 0.0f64..1.0, rho in 0.2f64..1.5) {
            let xm = x0 + t * w;
            let whole = rect_disk_area(x0, x0 + w, y0, y0 + w, rho);
            let parts = rect_disk_area(x0, xm, y0, y0 + w, rho) + rect_disk_area(xm, x0 + w, y0, y0 + w, rho);
            prop_assert!((whole - parts).abs() < 1e-12);
            prop_assert!(whole >= -1e-15 && whole <= w * w + 1e-15);
        }

        #[test]
        fn area_matches_sampling(x0 in -1.2f64..1.0, y0 in -1.2f64..1.0, rho in 0.3f64..1.2) {
            let w = 0.4;
            let n = 400;
            let mut hits = 0usize;
            for i in 0..n {
                for j in 0..n {
                    let x = x0 + (i as f64 + 0.5) * w / n as f64;
                    let y = y0 + (j as f64 + 0.5) * w / n as f64;
                    if x * x + y * y < rho * rho { hits += 1; }
                }
            }
            let est = hits as f64 * (w / n as f64).powi(2);
            prop_assert!((rect_disk_area(x0, x0 + w, y0, y0 + w, rho) - est).abs() < 2e-3);
        }
    }
}
