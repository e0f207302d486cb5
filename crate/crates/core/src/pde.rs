//! Coefficients, nodal fields and the finite-difference assembly of
//! `L = -Δ + W·∇ + V`.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Deref;
use libm::{fabs, sqrt};

use crate::error::{Error, Result};
use crate::geometry::{slot, Grid, Point};
use crate::sparse::{CsrBuilder, SparseOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Form of the first-order term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorForm {
    /// `W·∇u`
    Advective,
    /// `-∇·(W u)`, the formal adjoint's drift term.
    Divergence,
}

/// One value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {i}")));
        }
        Ok(ScalarField { values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Self {
        ScalarField { values: grid.points().iter().map(|p| f(*p)).collect() }
    }

    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { values: alloc::vec![0.0; grid.len()] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(fabs(*x)))
}

/// Nodal samples of the drift `W`, potential `V` and source `F`, with their
/// exact max-norms over the samples.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    w: Vec<Point>,
    v: Vec<f64>,
    f: Vec<f64>,
    k: f64,
    m: f64,
    f_norm: f64,
}

impl CoefficientSet {
    pub fn from_samples(grid: &Grid, w: Vec<Point>, v: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        for len in [w.len(), v.len(), f.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        let dim = grid.dim();
        let mut w = w;
        if dim == 1 {
            for wi in w.iter_mut() {
                wi[1] = 0.0;
            }
        }
        let finite = w.iter().all(|p| p[0].is_finite() && p[1].is_finite())
            && v.iter().all(|x| x.is_finite())
            && f.iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("coefficient samples must be finite".into()));
        }
        let k = w.iter().fold(0.0f64, |m, p| m.max(sqrt(p[0] * p[0] + p[1] * p[1])));
        let m = sup_norm(&v);
        let f_norm = sup_norm(&f);
        Ok(CoefficientSet { w, v, f, k, m, f_norm })
    }

    /// Samples the three coefficient functions at every node.
    pub fn sample(
        grid: &Grid,
        w: impl Fn(Point) -> Point,
        v: impl Fn(Point) -> f64,
        f: impl Fn(Point) -> f64,
    ) -> Result<Self> {
        let pts = grid.points();
        Self::from_samples(
            grid,
            pts.iter().map(|p| w(*p)).collect(),
            pts.iter().map(|p| v(*p)).collect(),
            pts.iter().map(|p| f(*p)).collect(),
        )
    }

    pub fn constant(grid: &Grid, w: Point, v: f64, f: f64) -> Result<Self> {
        Self::sample(grid, |_| w, |_| v, |_| f)
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn w(&self) -> &[Point] {
        &self.w
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    /// `‖W‖∞` (Euclidean norm pointwise).
    pub fn k(&self) -> f64 {
        self.k
    }

    /// `‖V‖∞`
    pub fn m(&self) -> f64 {
        self.m
    }

    /// `‖F‖∞`
    pub fn f_norm(&self) -> f64 {
        self.f_norm
    }

    /// `‖V⁻‖∞`
    pub fn negative_part(&self) -> f64 {
        self.v.iter().fold(0.0f64, |m, x| m.max(-x))
    }

    /// Errors on the first negative potential sample.
    pub fn check_nonnegative_potential(&self) -> Result<()> {
        match self.v.iter().position(|x| *x < 0.0) {
            Some(node) => Err(Error::NegativePotential { node, value: self.v[node] }),
            None => Ok(()),
        }
    }

    pub fn potential_vanishes(&self) -> bool {
        self.m == 0.0
    }

    pub fn with_forcing(&self, f: Vec<f64>) -> Result<Self> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: f.len() });
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("forcing samples must be finite".into()));
        }
        let f_norm = sup_norm(&f);
        Ok(CoefficientSet { f, f_norm, ..self.clone() })
    }

    pub fn with_potential(&self, v: Vec<f64>) -> Result<Self> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("potential samples must be finite".into()));
        }
        let m = sup_norm(&v);
        Ok(CoefficientSet { v, m, ..self.clone() })
    }

    pub fn with_drift(&self, w: Vec<Point>) -> Result<Self> {
        if w.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: w.len() });
        }
        if w.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidParameter("drift samples must be finite".into()));
        }
        let k = w.iter().fold(0.0f64, |m, p| m.max(sqrt(p[0] * p[0] + p[1] * p[1])));
        Ok(CoefficientSet { w, k, ..self.clone() })
    }

    /// Scales the source term by `c`.
    pub fn scaled_forcing(&self, c: f64) -> Self {
        let f: Vec<f64> = self.f.iter().map(|x| c * x).collect();
        CoefficientSet { f_norm: fabs(c) * self.f_norm, f, ..self.clone() }
    }
}

/// Whether assembly upwinds the first-order term: cell Péclet `K h > 2`.
pub fn uses_upwinding(grid: &Grid, coeffs: &CoefficientSet) -> bool {
    coeffs.k() * grid.h() > 2.0
}

/// Assembles the discrete operator.
///
/// Interior rows use Shortley–Weller second differences. The first-order
/// term is upwinded when `K h > 2` and centred otherwise. Dirichlet boundary
/// rows are identity rows; Neumann rows (1D only) discretize the outward
/// normal derivative with a second-order one-sided stencil.
pub fn assemble(
    grid: &Grid,
    coeffs: &CoefficientSet,
    bc: BoundaryCondition,
    form: OperatorForm,
) -> Result<SparseOperator> {
    let n = grid.len();
    if coeffs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: coeffs.len() });
    }
    if bc == BoundaryCondition::Neumann && grid.dim() != 1 {
        return Err(Error::Unsupported("Neumann boundary rows are implemented in one dimension only"));
    }
    let dim = grid.dim();
    let upwind = uses_upwinding(grid, coeffs);
    let w = coeffs.w();
    let v = coeffs.v();
    let mut b = CsrBuilder::new(n, n * (2 * dim + 1));
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * dim + 1);
    for i in 0..n {
        row.clear();
        if !grid.is_interior(i) {
            match bc {
                BoundaryCondition::Dirichlet => b.push_identity_row(),
                BoundaryCondition::Neumann => {
                    neumann_row(grid, i, &mut row)?;
                    b.push_row(&mut row);
                }
            }
            continue;
        }
        let links = grid.links(i);
        let mut diag = v[i];
        for axis in 0..dim {
            let lm = links[slot(axis, 0)].expect("interior node without neighbour");
            let lp = links[slot(axis, 1)].expect("interior node without neighbour");
            let (hm, hp) = (lm.dist, lp.dist);
            let s = hm + hp;
            let mut cm = -2.0 / (hm * s);
            let mut cp = -2.0 / (hp * s);
            diag += 2.0 / (hm * hp);
            match form {
                OperatorForm::Advective => {
                    let wa = w[i][axis];
                    if upwind {
                        if wa > 0.0 {
                            cm -= wa / hm;
                            diag += wa / hm;
                        } else {
                            cp += wa / hp;
                            diag -= wa / hp;
                        }
                    } else {
                        cm -= wa * hp / (hm * s);
                        cp += wa * hm / (hp * s);
                        diag += wa * (hp - hm) / (hm * hp);
                    }
                }
                OperatorForm::Divergence => {
                    // -(G+ - G-) / (s/2) with face fluxes G = w_face u_face
                    let half = 0.5 * s;
                    let w_minus = 0.5 * (w[i][axis] + w[lm.node][axis]);
                    let w_plus = 0.5 * (w[i][axis] + w[lp.node][axis]);
                    if upwind {
                        if w_plus > 0.0 {
                            cp -= w_plus / half;
                        } else {
                            diag -= w_plus / half;
                        }
                        if w_minus < 0.0 {
                            cm += w_minus / half;
                        } else {
                            diag += w_minus / half;
                        }
                    } else {
                        cp -= 0.5 * w_plus / half;
                        diag -= 0.5 * w_plus / half;
                        cm += 0.5 * w_minus / half;
                        diag += 0.5 * w_minus / half;
                    }
                }
            }
            row.push((lm.node, cm));
            row.push((lp.node, cp));
        }
        row.push((i, diag));
        b.push_row(&mut row);
    }
    let kernel = bc == BoundaryCondition::Neumann
        && coeffs.potential_vanishes()
        && (form == OperatorForm::Advective || coeffs.k() == 0.0);
    Ok(b.finish(bc, kernel))
}

/// Outward normal derivative at a 1D boundary node from the node and the two
/// next ones inwards.
fn neumann_row(grid: &Grid, i: usize, row: &mut Vec<(usize, f64)>) -> Result<()> {
    let links = grid.links(i);
    let s = (0..2).find(|&s| links[s].is_some()).ok_or(Error::EmptyGrid)?;
    let first = links[s].unwrap();
    // derivative along the inward direction; outward derivative is its negative
    let t1 = first.dist;
    match grid.links(first.node)[s] {
        Some(second) if grid.is_interior(first.node) => {
            let t2 = t1 + second.dist;
            row.push((i, (t1 + t2) / (t1 * t2)));
            row.push((first.node, -t2 / (t1 * (t2 - t1))));
            row.push((second.node, t1 / (t2 * (t2 - t1))));
        }
        _ => {
            row.push((i, 1.0 / t1));
            row.push((first.node, -1.0 / t1));
        }
    }
    Ok(())
}

/// Right-hand side: `F` on interior rows, `boundary` data (or zero) on
/// boundary rows.
pub fn rhs(grid: &Grid, coeffs: &CoefficientSet, boundary: Option<&[f64]>) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            if grid.is_interior(i) {
                coeffs.f()[i]
            } else {
                boundary.map_or(0.0, |g| g[i])
            }
        })
        .collect()
}
