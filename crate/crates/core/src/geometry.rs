//! Strictly convex domains and their boundary-fitted Cartesian grids.
//!
//! Grids are built on a lattice of spacing `h` centred on the domain centre.
//! Lattice points strictly inside become interior nodes; lattice points lying
//! on the boundary (within a snapping tolerance) become boundary nodes in
//! place; every grid line leaving the domain between an interior point and an
//! exterior point contributes one extra boundary node at the exact crossing.
//! Interior nodes therefore always see 2N neighbours, some at a shortened
//! distance (Shortley–Weller stencils).

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Relative snapping tolerance (in units of `h`) for lattice points on the boundary.
const SNAP: f64 = 1e-6;

#[inline]
pub fn norm(p: Point) -> f64 {
    libm::hypot(p[0], p[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sq(x: f64) -> f64 {
    x * x
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ConvexDomain {
    Interval { a: f64, b: f64 },
    Disk { center: Point, radius: f64 },
    Ellipse { center: Point, semi_axes: [f64; 2] },
}

impl ConvexDomain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidParameter(alloc::format!(
                "interval needs finite a < b, got ({a}, {b})"
            )));
        }
        Ok(ConvexDomain::Interval { a, b })
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !(center[0].is_finite() && center[1].is_finite()) || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "disk needs a finite center and radius > 0, got {radius}"
            )));
        }
        Ok(ConvexDomain::Disk { center, radius })
    }

    pub fn ellipse(center: Point, p: f64, q: f64) -> Result<Self> {
        let ok = center.iter().all(|c| c.is_finite())
            && p > 0.0
            && q > 0.0
            && p.is_finite()
            && q.is_finite();
        if !ok {
            return Err(Error::InvalidParameter(alloc::format!(
                "ellipse needs semi-axes > 0, got ({p}, {q})"
            )));
        }
        Ok(ConvexDomain::Ellipse { center, semi_axes: [p, q] })
    }

    /// Re-runs the constructor checks (useful after deserialization).
    pub fn validated(self) -> Result<Self> {
        match self {
            ConvexDomain::Interval { a, b } => Self::interval(a, b),
            ConvexDomain::Disk { center, radius } => Self::disk(center, radius),
            ConvexDomain::Ellipse { center, semi_axes } => Self::ellipse(center, semi_axes[0], semi_axes[1]),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            ConvexDomain::Interval { a, b } => b - a,
            ConvexDomain::Disk { radius, .. } => 2.0 * radius,
            ConvexDomain::Ellipse { semi_axes, .. } => 2.0 * semi_axes[0].max(semi_axes[1]),
        }
    }

    pub fn center(&self) -> Point {
        match *self {
            ConvexDomain::Interval { a, b } => [0.5 * (a + b), 0.0],
            ConvexDomain::Disk { center, .. } | ConvexDomain::Ellipse { center, .. } => center,
        }
    }

    /// Half-widths of the axis-aligned bounding box.
    fn half_extent(&self) -> [f64; 2] {
        match *self {
            ConvexDomain::Interval { a, b } => [0.5 * (b - a), 0.0],
            ConvexDomain::Disk { radius, .. } => [radius, radius],
            ConvexDomain::Ellipse { semi_axes, .. } => semi_axes,
        }
    }

    /// Signed distance to the boundary: negative inside, zero on the boundary.
    pub fn signed_distance(&self, x: Point) -> f64 {
        match *self {
            ConvexDomain::Interval { a, b } => -(x[0] - a).min(b - x[0]),
            ConvexDomain::Disk { center, radius } => dist(x, center) - radius,
            ConvexDomain::Ellipse { center, semi_axes } => {
                let rel = [x[0] - center[0], x[1] - center[1]];
                let (d, _) = ellipse_closest(semi_axes, rel);
                let level = sq(rel[0] / semi_axes[0]) + sq(rel[1] / semi_axes[1]) - 1.0;
                if level < 0.0 {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Euclidean distance from `x` to the boundary.
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        fabs(self.signed_distance(x))
    }

    pub fn contains(&self, x: Point) -> bool {
        self.signed_distance(x) < 0.0
    }

    /// Closest point of the boundary to `x`.
    pub fn project_to_boundary(&self, x: Point) -> Point {
        match *self {
            ConvexDomain::Interval { a, b } => {
                if (x[0] - a).abs() <= (b - x[0]).abs() {
                    [a, 0.0]
                } else {
                    [b, 0.0]
                }
            }
            ConvexDomain::Disk { center, radius } => {
                let rel = [x[0] - center[0], x[1] - center[1]];
                let r = norm(rel);
                if r == 0.0 {
                    [center[0] + radius, center[1]]
                } else {
                    [center[0] + radius * rel[0] / r, center[1] + radius * rel[1] / r]
                }
            }
            ConvexDomain::Ellipse { center, semi_axes } => {
                let rel = [x[0] - center[0], x[1] - center[1]];
                let (_, c) = ellipse_closest(semi_axes, rel);
                [center[0] + c[0], center[1] + c[1]]
            }
        }
    }

    /// Outward unit normal at a boundary point `y`.
    pub fn outward_normal(&self, y: Point) -> Point {
        match *self {
            ConvexDomain::Interval { a, b } => {
                if (y[0] - a).abs() <= (b - y[0]).abs() {
                    [-1.0, 0.0]
                } else {
                    [1.0, 0.0]
                }
            }
            ConvexDomain::Disk { center, .. } => {
                let rel = [y[0] - center[0], y[1] - center[1]];
                let r = norm(rel);
                [rel[0] / r, rel[1] / r]
            }
            ConvexDomain::Ellipse { center, semi_axes } => {
                let g = [
                    (y[0] - center[0]) / (semi_axes[0] * semi_axes[0]),
                    (y[1] - center[1]) / (semi_axes[1] * semi_axes[1]),
                ];
                let n = norm(g);
                [g[0] / n, g[1] / n]
            }
        }
    }

    /// Distance from the interior point `p` to the boundary along `±e_axis`.
    fn axis_crossing(&self, p: Point, axis: usize, sign: f64) -> f64 {
        match *self {
            ConvexDomain::Interval { a, b } => {
                if sign > 0.0 {
                    b - p[0]
                } else {
                    p[0] - a
                }
            }
            ConvexDomain::Disk { center, radius } => {
                let other = 1 - axis;
                let off = p[other] - center[other];
                let half = sqrt((radius * radius - off * off).max(0.0));
                let along = p[axis] - center[axis];
                if sign > 0.0 {
                    half - along
                } else {
                    along + half
                }
            }
            ConvexDomain::Ellipse { center, semi_axes } => {
                let other = 1 - axis;
                let off = (p[other] - center[other]) / semi_axes[other];
                let half = semi_axes[axis] * sqrt((1.0 - off * off).max(0.0));
                let along = p[axis] - center[axis];
                if sign > 0.0 {
                    half - along
                } else {
                    along + half
                }
            }
        }
    }
}

/// Closest point on the axis-aligned ellipse with semi-axes `e` (centred at
/// the origin) to `y`, together with the distance. Robust bisection on the
/// Lagrange-multiplier equation.
fn ellipse_closest(e: [f64; 2], y: Point) -> (f64, Point) {
    let swap = e[0] < e[1];
    let (e0, e1) = if swap { (e[1], e[0]) } else { (e[0], e[1]) };
    let (ya, yb) = if swap { (y[1], y[0]) } else { (y[0], y[1]) };
    let (y0, y1) = (fabs(ya), fabs(yb));
    let (x0, x1);
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1) * (e0 / e1);
                let sbar = ellipse_root(r0, z0, z1, g);
                x0 = r0 * y0 / (sbar + r0);
                x1 = y1 / (sbar + 1.0);
            } else {
                x0 = y0;
                x1 = y1;
            }
        } else {
            x0 = 0.0;
            x1 = e1;
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            x0 = e0 * xde0;
            x1 = e1 * sqrt((1.0 - xde0 * xde0).max(0.0));
        } else {
            x0 = e0;
            x1 = 0.0;
        }
    }
    let d = libm::hypot(x0 - y0, x1 - y1);
    let cx = if ya < 0.0 { -x0 } else { x0 };
    let cy = if yb < 0.0 { -x1 } else { x1 };
    let c = if swap { [cy, cx] } else { [cx, cy] };
    (d, c)
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { libm::hypot(n0, z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
}

/// Classification of a lattice point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeClass {
    Interior(usize),
    Boundary(usize),
    Exterior,
}

/// Directed grid-line neighbour: target node and distance along the axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub node: usize,
    pub dist: f64,
}

/// Link slot for axis `axis` in direction `side` (0 = negative, 1 = positive).
#[inline]
pub fn slot(axis: usize, side: usize) -> usize {
    2 * axis + side
}

/// How to form the gradient at boundary nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryGradient {
    /// Field has zero trace: gradient is normal, recovered from the one-sided
    /// derivative along the best-aligned inward grid line.
    ZeroTrace,
    /// One-sided derivative along every available inward grid line; axes with
    /// no inward line get a zero component.
    OneSidedAxes,
}

#[derive(Clone, Debug)]
pub struct Grid {
    domain: ConvexDomain,
    h: f64,
    points: Vec<Point>,
    kinds: Vec<NodeKind>,
    links: Vec<[Option<Link>; 4]>,
    normals: Vec<Point>,
    lattice_origin: Point,
    lattice_dims: [usize; 2],
    lattice: Vec<u32>,
    interior_count: usize,
}

const NO_NODE: u32 = u32::MAX;

impl Grid {
    /// Discretizes `domain` with spacing `h` (requires `0 < h <= diam/4`).
    pub fn new(domain: ConvexDomain, h: f64) -> Result<Self> {
        let domain = domain.validated()?;
        let diam = domain.diameter();
        if !(h > 0.0 && h.is_finite()) || h > 0.25 * diam * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(alloc::format!(
                "grid spacing h = {h} must satisfy 0 < h <= diameter/4 = {}",
                0.25 * diam
            )));
        }
        let dim = domain.dim();
        let c = domain.center();
        let ext = domain.half_extent();
        let ni = (ext[0] / h) as usize + 2;
        let nj = if dim == 2 { (ext[1] / h) as usize + 2 } else { 0 };
        let dims = [2 * ni + 1, 2 * nj + 1];
        let origin = [c[0] - ni as f64 * h, c[1] - nj as f64 * h];
        let coord = |i: usize, j: usize| [origin[0] + i as f64 * h, origin[1] + j as f64 * h];

        let mut points = Vec::new();
        let mut kinds = Vec::new();
        let mut lattice = vec![NO_NODE; dims[0] * dims[1]];
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let mut p = coord(i, j);
                let sd = domain.signed_distance(p);
                let kind = if sd < -SNAP * h {
                    NodeKind::Interior
                } else if sd <= SNAP * h {
                    if dim == 1 {
                        p = domain.project_to_boundary(p);
                    }
                    NodeKind::Boundary
                } else {
                    continue;
                };
                lattice[j * dims[0] + i] = points.len() as u32;
                points.push(p);
                kinds.push(kind);
            }
        }
        let mut links: Vec<[Option<Link>; 4]> = vec![[None; 4]; points.len()];
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let id = lattice[j * dims[0] + i];
                if id == NO_NODE || kinds[id as usize] != NodeKind::Interior {
                    continue;
                }
                let id = id as usize;
                let p = points[id];
                for axis in 0..dim {
                    for side in 0..2 {
                        let (ii, jj) = match (axis, side) {
                            (0, 0) => (i - 1, j),
                            (0, _) => (i + 1, j),
                            (_, 0) => (i, j - 1),
                            _ => (i, j + 1),
                        };
                        let nb = lattice[jj * dims[0] + ii];
                        let back = slot(axis, 1 - side);
                        if nb != NO_NODE {
                            let nb = nb as usize;
                            let d = dist(p, points[nb]);
                            links[id][slot(axis, side)] = Some(Link { node: nb, dist: d });
                            if kinds[nb] == NodeKind::Boundary {
                                links[nb][back] = Some(Link { node: id, dist: d });
                            }
                        } else {
                            let sign = if side == 0 { -1.0 } else { 1.0 };
                            let t = domain.axis_crossing(p, axis, sign).clamp(SNAP * h, h);
                            let mut q = p;
                            q[axis] += sign * t;
                            let nb = points.len();
                            points.push(q);
                            kinds.push(NodeKind::Boundary);
                            links.push([None; 4]);
                            links[nb][back] = Some(Link { node: id, dist: t });
                            links[id][slot(axis, side)] = Some(Link { node: nb, dist: t });
                        }
                    }
                }
            }
        }
        let interior_count = kinds.iter().filter(|k| **k == NodeKind::Interior).count();
        if interior_count == 0 {
            return Err(Error::EmptyGrid);
        }

        // Renumber by (y, x) so that 1D grids are ordered left to right and
        // 2D grids keep row locality.
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (points[a], points[b]);
            pa[1].partial_cmp(&pb[1]).unwrap().then(pa[0].partial_cmp(&pb[0]).unwrap())
        });
        let mut new_id = vec![0usize; points.len()];
        for (new, &old) in order.iter().enumerate() {
            new_id[old] = new;
        }
        let points: Vec<Point> = order.iter().map(|&o| points[o]).collect();
        let kinds: Vec<NodeKind> = order.iter().map(|&o| kinds[o]).collect();
        let links: Vec<[Option<Link>; 4]> = order
            .iter()
            .map(|&o| {
                let mut l = links[o];
                for s in l.iter_mut().flatten() {
                    s.node = new_id[s.node];
                }
                l
            })
            .collect();
        for v in lattice.iter_mut() {
            if *v != NO_NODE {
                *v = new_id[*v as usize] as u32;
            }
        }
        let normals = points
            .iter()
            .zip(&kinds)
            .map(|(p, k)| match k {
                NodeKind::Interior => [0.0, 0.0],
                NodeKind::Boundary => domain.outward_normal(domain.project_to_boundary(*p)),
            })
            .collect();

        Ok(Grid {
            domain,
            h,
            points,
            kinds,
            links,
            normals,
            lattice_origin: origin,
            lattice_dims: dims,
            lattice,
            interior_count,
        })
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.kinds[i] == NodeKind::Interior
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub fn boundary_count(&self) -> usize {
        self.len() - self.interior_count
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| !self.is_interior(i))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_interior(i))
    }

    /// Grid-line neighbours indexed by [`slot`]. Interior nodes have all 2N;
    /// boundary nodes only carry links back into the interior.
    pub fn links(&self, i: usize) -> &[Option<Link>; 4] {
        &self.links[i]
    }

    /// Outward unit normal at a boundary node (zero for interior nodes).
    pub fn normal(&self, i: usize) -> Point {
        self.normals[i]
    }

    pub fn lattice_dims(&self) -> [usize; 2] {
        self.lattice_dims
    }

    pub fn lattice_point(&self, i: usize, j: usize) -> Point {
        [
            self.lattice_origin[0] + i as f64 * self.h,
            self.lattice_origin[1] + j as f64 * self.h,
        ]
    }

    pub fn lattice_class(&self, i: usize, j: usize) -> LatticeClass {
        if i >= self.lattice_dims[0] || j >= self.lattice_dims[1] {
            return LatticeClass::Exterior;
        }
        match self.lattice[j * self.lattice_dims[0] + i] {
            NO_NODE => LatticeClass::Exterior,
            id => {
                let id = id as usize;
                match self.kinds[id] {
                    NodeKind::Interior => LatticeClass::Interior(id),
                    NodeKind::Boundary => LatticeClass::Boundary(id),
                }
            }
        }
    }

    /// Node sitting on lattice point `(i, j)`, if any.
    pub fn lattice_node(&self, i: usize, j: usize) -> Option<usize> {
        match self.lattice_class(i, j) {
            LatticeClass::Interior(id) | LatticeClass::Boundary(id) => Some(id),
            LatticeClass::Exterior => None,
        }
    }

    /// Lattice coordinates of the cell containing `x` plus the fractional
    /// offsets within it (for multilinear interpolation).
    pub fn locate(&self, x: Point) -> ([usize; 2], [f64; 2]) {
        let mut idx = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..self.dim() {
            let s = (x[a] - self.lattice_origin[a]) / self.h;
            let fl = libm::floor(s).clamp(0.0, (self.lattice_dims[a] - 2) as f64);
            idx[a] = fl as usize;
            frac[a] = s - fl;
        }
        (idx, frac)
    }

    /// Multilinear interpolation of a nodal field from the surrounding lattice
    /// nodes. Returns `None` when a corner is not a node.
    pub fn interpolate(&self, values: &[f64], x: Point) -> Option<f64> {
        let ([i, j], [fx, fy]) = self.locate(x);
        if self.dim() == 1 {
            let a = values[self.lattice_node(i, 0)?];
            let b = values[self.lattice_node(i + 1, 0)?];
            return Some(a + fx * (b - a));
        }
        let v00 = values[self.lattice_node(i, j)?];
        let v10 = values[self.lattice_node(i + 1, j)?];
        let v01 = values[self.lattice_node(i, j + 1)?];
        let v11 = values[self.lattice_node(i + 1, j + 1)?];
        Some(
            (1.0 - fx) * (1.0 - fy) * v00
                + fx * (1.0 - fy) * v10
                + (1.0 - fx) * fy * v01
                + fx * fy * v11,
        )
    }

    /// Largest pairwise node distance (attained on the boundary nodes).
    pub fn node_diameter(&self) -> f64 {
        let b: Vec<Point> = self.boundary_nodes().map(|i| self.points[i]).collect();
        let mut best = 0.0f64;
        for (k, p) in b.iter().enumerate() {
            for q in &b[k + 1..] {
                best = best.max(dist(*p, *q));
            }
        }
        best
    }

    /// Distance to the boundary of every node.
    pub fn boundary_distances(&self) -> Vec<f64> {
        self.points
            .iter()
            .zip(&self.kinds)
            .map(|(p, k)| match k {
                NodeKind::Boundary => 0.0,
                NodeKind::Interior => self.domain.distance_to_boundary(*p),
            })
            .collect()
    }

    /// One-sided derivative at boundary node `b` along the inward link in
    /// `slot`, using the next node further along the same line when present.
    pub fn inward_derivative(&self, values: &[f64], b: usize, slot_idx: usize) -> Option<f64> {
        let first = self.links[b][slot_idx]?;
        let t1 = first.dist;
        let f0 = values[b];
        let f1 = values[first.node];
        match self.links[first.node][slot_idx] {
            Some(second) if self.is_interior(first.node) => {
                let t2 = t1 + second.dist;
                let f2 = values[second.node];
                Some(
                    -(t1 + t2) / (t1 * t2) * f0 + t2 / (t1 * (t2 - t1)) * f1
                        - t1 / (t2 * (t2 - t1)) * f2,
                )
            }
            _ => Some((f1 - f0) / t1),
        }
    }

    /// Unit direction of link slot `s`.
    pub fn slot_direction(s: usize) -> Point {
        match s {
            0 => [-1.0, 0.0],
            1 => [1.0, 0.0],
            2 => [0.0, -1.0],
            _ => [0.0, 1.0],
        }
    }

    /// Outward normal derivative at boundary node `b` for a field with zero
    /// trace, from the inward grid line best aligned with the normal. Lines
    /// with `|d·ν| < min_alignment` are not used.
    pub fn normal_derivative(&self, values: &[f64], b: usize, min_alignment: f64) -> Option<f64> {
        let nu = self.normals[b];
        let mut best: Option<(f64, usize)> = None;
        for s in 0..2 * self.dim() {
            if self.links[b][s].is_some() {
                let al = fabs(dot(Self::slot_direction(s), nu));
                if al >= min_alignment && best.is_none_or(|(a, _)| al > a) {
                    best = Some((al, s));
                }
            }
        }
        let (_, s) = best?;
        let d = Self::slot_direction(s);
        let deriv = self.inward_derivative(values, b, s)?;
        Some(deriv / dot(d, nu))
    }

    /// Difference-quotient gradient at every node: nonuniform centred
    /// differences on interior nodes, one-sided at boundary nodes.
    pub fn gradient(&self, values: &[f64], mode: BoundaryGradient) -> Vec<Point> {
        let dim = self.dim();
        (0..self.len())
            .map(|i| {
                let mut g = [0.0; 2];
                if self.is_interior(i) {
                    for (axis, ga) in g.iter_mut().enumerate().take(dim) {
                        let m = self.links[i][slot(axis, 0)].unwrap();
                        let p = self.links[i][slot(axis, 1)].unwrap();
                        let (hm, hp) = (m.dist, p.dist);
                        *ga = -hp / (hm * (hm + hp)) * values[m.node]
                            + (hp - hm) / (hm * hp) * values[i]
                            + hm / (hp * (hm + hp)) * values[p.node];
                    }
                    return g;
                }
                if dim == 1 {
                    for s in 0..2 {
                        if let Some(d) = self.inward_derivative(values, i, s) {
                            g[0] = Self::slot_direction(s)[0] * d;
                        }
                    }
                    return g;
                }
                match mode {
                    BoundaryGradient::ZeroTrace => {
                        if let Some(dn) = self.normal_derivative(values, i, 0.0) {
                            let nu = self.normals[i];
                            g = [dn * nu[0], dn * nu[1]];
                        }
                    }
                    BoundaryGradient::OneSidedAxes => {
                        for s in 0..4 {
                            if let Some(d) = self.inward_derivative(values, i, s) {
                                let dir = Self::slot_direction(s);
                                let axis = s / 2;
                                g[axis] = dir[axis] * d;
                            }
                        }
                    }
                }
                g
            })
            .collect()
    }
}
