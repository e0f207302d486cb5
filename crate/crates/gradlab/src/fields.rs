//! Coefficient sources built from a spec: constants, expressions, or a
//! seeded random field.

use gradlab_core::{CoefficientSet, Grid, Point};

use crate::expr::Expr;
use crate::random::RandomField;
use crate::spec::{parse_expr, CoefficientSpec, ConfigError};

#[derive(Clone, Debug)]
pub enum FieldSource {
    Constant { w: Point, v: f64, f: f64 },
    Expression { w: [Expr; 2], v: Expr, f: Expr },
    Random(RandomField),
}

impl FieldSource {
    /// `seed` only matters for random fields.
    pub fn new(spec: &CoefficientSpec, seed: u64, dim: usize) -> Result<Self, ConfigError> {
        Ok(match spec {
            CoefficientSpec::Constant { w, v, f } => FieldSource::Constant { w: *w, v: *v, f: *f },
            CoefficientSpec::Expression { w, v, f } => FieldSource::Expression {
                w: [parse_expr("coefficients.w[0]", &w[0])?, parse_expr("coefficients.w[1]", &w[1])?],
                v: parse_expr("coefficients.v", v)?,
                f: parse_expr("coefficients.f", f)?,
            },
            CoefficientSpec::Random { k, m, f, cell } => {
                FieldSource::Random(RandomField { seed, k: *k, m: *m, f: *f, cell: *cell, dim })
            }
        })
    }

    pub fn w(&self, p: Point) -> Point {
        match self {
            FieldSource::Constant { w, .. } => *w,
            FieldSource::Expression { w, .. } => [w[0].at(p), w[1].at(p)],
            FieldSource::Random(r) => r.drift(p),
        }
    }

    pub fn v(&self, p: Point) -> f64 {
        match self {
            FieldSource::Constant { v, .. } => *v,
            FieldSource::Expression { v, .. } => v.at(p),
            FieldSource::Random(r) => r.potential(p),
        }
    }

    pub fn f(&self, p: Point) -> f64 {
        match self {
            FieldSource::Constant { f, .. } => *f,
            FieldSource::Expression { f, .. } => f.at(p),
            FieldSource::Random(r) => r.forcing(p),
        }
    }

    pub fn sample(&self, grid: &Grid) -> gradlab_core::Result<CoefficientSet> {
        CoefficientSet::sample(grid, |p| self.w(p), |p| self.v(p), |p| self.f(p))
    }
}
