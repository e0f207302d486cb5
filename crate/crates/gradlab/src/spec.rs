//! Experiment specs: TOML text, deserialized strictly, then validated with
//! field-path diagnostics.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use gradlab_core::solver::Preconditioner;
use gradlab_core::{BoundaryCondition, ConvexDomain, SolverOptions};

use crate::expr::Expr;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("field `{field}`: {msg}")]
    Field { field: String, msg: String },
}

fn field_err(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.to_string(), msg: msg.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EllipticBound,
    ParabolicBound,
    ZScan,
    Multiplier,
    Landis1d,
    Continuation,
    ConvergenceStudy,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::EllipticBound,
        ExperimentKind::ParabolicBound,
        ExperimentKind::ZScan,
        ExperimentKind::Multiplier,
        ExperimentKind::Landis1d,
        ExperimentKind::Continuation,
        ExperimentKind::ConvergenceStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::EllipticBound => "elliptic_bound",
            ExperimentKind::ParabolicBound => "parabolic_bound",
            ExperimentKind::ZScan => "z_scan",
            ExperimentKind::Multiplier => "multiplier",
            ExperimentKind::Landis1d => "landis1d",
            ExperimentKind::Continuation => "continuation",
            ExperimentKind::ConvergenceStudy => "convergence_study",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::EllipticBound => "stationary solve; sup|∇φ| against the barrier slope (V = 0) or the fitted exponential bound",
            ExperimentKind::ParabolicBound => "evolution run; sup over time of |∇φ| against the parabolic slope or fitted bound",
            ExperimentKind::ZScan => "two-point function Z over node pairs of a stationary solution",
            ExperimentKind::Multiplier => "positive multiplier ψ on the doubled ball: envelope, log-gradient constant, reduction round trip",
            ExperimentKind::Landis1d => "one-dimensional duality identity, Gronwall envelopes and decay table",
            ExperimentKind::Continuation => "inner mass against annulus or boundary mass for the adjoint equation",
            ExperimentKind::ConvergenceStudy => "manufactured-solution errors under h-halving",
        }
    }

    /// File name of the JSON report written by `run`.
    pub fn report_file(self) -> &'static str {
        match self {
            ExperimentKind::EllipticBound => "bound_report.json",
            ExperimentKind::ParabolicBound => "parabolic_report.json",
            ExperimentKind::ZScan => "zscan_report.json",
            ExperimentKind::Multiplier => "multiplier_report.json",
            ExperimentKind::Landis1d => "landis_report.json",
            ExperimentKind::Continuation => "continuation_report.json",
            ExperimentKind::ConvergenceStudy => "convergence_report.json",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<ConvexDomain, ConfigError> {
        let d = match *self {
            DomainSpec::Interval { a, b } => ConvexDomain::interval(a, b),
            DomainSpec::Disk { center, radius } => ConvexDomain::disk(center, radius),
            DomainSpec::Ellipse { center, semi_axes } => ConvexDomain::ellipse(center, semi_axes[0], semi_axes[1]),
        };
        d.map_err(|e| field_err("domain", e.to_string()))
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant {
        #[serde(default)]
        w: [f64; 2],
        #[serde(default)]
        v: f64,
        #[serde(default)]
        f: f64,
    },
    Expression {
        #[serde(default = "zero_pair")]
        w: [String; 2],
        #[serde(default = "zero_expr")]
        v: String,
        #[serde(default = "zero_expr")]
        f: String,
    },
    /// Cellwise constant, redrawn for every sweep entry.
    Random {
        k: f64,
        #[serde(default)]
        m: f64,
        f: f64,
        #[serde(default = "default_cell")]
        cell: f64,
    },
}

fn zero_expr() -> String {
    "0".into()
}

fn zero_pair() -> [String; 2] {
    [zero_expr(), zero_expr()]
}

fn default_cell() -> f64 {
    0.1
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        CoefficientSpec::Constant { w: [0.0; 2], v: 0.0, f: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerSpec {
    #[default]
    Auto,
    Jacobi,
    Multigrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub preconditioner: PreconditionerSpec,
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { tol: default_tol(), max_iter: None, preconditioner: PreconditionerSpec::Auto }
    }
}

impl SolverSpec {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            preconditioner: match self.preconditioner {
                PreconditionerSpec::Auto => Preconditioner::Auto,
                PreconditionerSpec::Jacobi => Preconditioner::Jacobi,
                PreconditionerSpec::Multigrid => Preconditioner::Multigrid,
            },
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { count: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_final: f64,
    pub dt: Option<f64>,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Initial datum; must vanish on the boundary.
    #[serde(default = "zero_expr")]
    pub initial: String,
    #[serde(default)]
    pub forcing_decay: f64,
}

fn default_stride() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZScanSpec {
    /// Multiplies the barrier slope; values below 1 make negative controls.
    #[serde(default = "unit")]
    pub lambda_scale: f64,
    /// Negative control: the check passes iff the scan finds `max Z > 0`.
    #[serde(default)]
    pub expect_violation: bool,
    #[serde(default = "default_exhaustive")]
    pub exhaustive_limit: u64,
    #[serde(default = "default_random_pairs")]
    pub random_pairs: u64,
    /// Parabolic shift; default `1e-6 (g0 + f + 1)`.
    pub epsilon: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

fn default_exhaustive() -> u64 {
    10_000_000
}

fn default_random_pairs() -> u64 {
    2_000_000
}

impl Default for ZScanSpec {
    fn default() -> Self {
        ZScanSpec {
            lambda_scale: 1.0,
            expect_violation: false,
            exhaustive_limit: default_exhaustive(),
            random_pairs: default_random_pairs(),
            epsilon: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSpec {
    #[serde(default = "default_envelope_tol")]
    pub envelope_tol: f64,
    #[serde(default = "yes")]
    pub extend_by_zero: bool,
    #[serde(default = "default_ceiling")]
    pub c_ceiling: f64,
    /// Solve the potential-free reduced problem on the domain and compare
    /// the back-mapped solution with a direct solve.
    #[serde(default)]
    pub round_trip: bool,
    /// Closed form of the solution on the domain, for the round trip.
    pub exact: Option<String>,
}

fn default_envelope_tol() -> f64 {
    1e-7
}

fn yes() -> bool {
    true
}

fn default_ceiling() -> f64 {
    10.0
}

impl Default for MultiplierSpec {
    fn default() -> Self {
        MultiplierSpec {
            envelope_tol: default_envelope_tol(),
            extend_by_zero: true,
            c_ceiling: default_ceiling(),
            round_trip: false,
            exact: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSpec {
    #[default]
    Usual,
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandisSpec {
    #[serde(default = "two")]
    pub r: f64,
    #[serde(default = "default_landis_h")]
    pub h: f64,
    /// Constant drift of the Gaussian manufactured solution.
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub sign: SignSpec,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    /// Bounds of the random systems checked against the Gronwall envelope
    /// (one per sweep entry).
    #[serde(default = "five")]
    pub w_max: f64,
    #[serde(default = "five")]
    pub v_max: f64,
    #[serde(default = "three")]
    pub r_max: f64,
}

fn two() -> f64 {
    2.0
}

fn three() -> f64 {
    3.0
}

fn five() -> f64 {
    5.0
}

fn default_landis_h() -> f64 {
    1e-3
}

fn default_radii() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

fn default_residual_tol() -> f64 {
    1e-6
}

impl Default for LandisSpec {
    fn default() -> Self {
        LandisSpec {
            r: 2.0,
            h: default_landis_h(),
            drift: 0.0,
            sign: SignSpec::Usual,
            radii: default_radii(),
            residual_tol: default_residual_tol(),
            w_max: 5.0,
            v_max: 5.0,
            r_max: 3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationVariant {
    Annulus,
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSpec {
    pub variant: ContinuationVariant,
    #[serde(default = "unit")]
    pub r: f64,
    #[serde(default)]
    pub center: [f64; 2],
    /// Dirichlet data on the outer circle.
    #[serde(default = "unit_expr")]
    pub g: String,
    #[serde(default = "default_ceiling")]
    pub c_ceiling: f64,
    /// Known ratio (constant solutions), checked within `5 h²`.
    pub expect_ratio: Option<f64>,
}

fn unit_expr() -> String {
    "1".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    /// Closed-form solution; also supplies the Dirichlet data.
    pub exact: String,
    /// Number of grids, each halving `grid.h`.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_ratio_range")]
    pub ratio_range: [f64; 2],
    /// Bound on the max-norm error at the coarsest level.
    pub max_error: Option<f64>,
}

fn default_levels() -> usize {
    2
}

fn default_ratio_range() -> [f64; 2] {
    [3.5, 4.5]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    #[default]
    Dirichlet,
    Neumann,
}

impl From<BoundarySpec> for BoundaryCondition {
    fn from(b: BoundarySpec) -> Self {
        match b {
            BoundarySpec::Dirichlet => BoundaryCondition::Dirichlet,
            BoundarySpec::Neumann => BoundaryCondition::Neumann,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the output root unless absolute.
    pub output: Option<String>,
    /// Write `fields_<i>.csv` (x, y, φ, ∇φ) per entry; elliptic_bound and z_scan only.
    #[serde(default)]
    pub save_fields: bool,
    #[serde(default)]
    pub boundary: BoundarySpec,
    pub domain: Option<DomainSpec>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    pub time: Option<TimeSpec>,
    pub zscan: Option<ZScanSpec>,
    pub multiplier: Option<MultiplierSpec>,
    pub landis: Option<LandisSpec>,
    pub continuation: Option<ContinuationSpec>,
    pub convergence: Option<ConvergenceSpec>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), msg: e.to_string() })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: origin.clone(), source })?;
        Ok((Self::from_toml(&text, &origin)?, text))
    }

    pub fn h(&self) -> f64 {
        self.grid.as_ref().map_or(0.0, |g| g.h)
    }

    /// Replaces the mesh width everywhere it appears.
    pub fn override_h(&mut self, h: f64) -> Result<(), ConfigError> {
        if let Some(g) = self.grid.as_mut() {
            g.h = h;
        }
        if let Some(l) = self.landis.as_mut() {
            l.h = h;
        }
        self.validate()
    }

    pub fn domain(&self) -> Result<ConvexDomain, ConfigError> {
        self.domain.as_ref().ok_or_else(|| field_err("domain", "required for this experiment"))?.build()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        use ExperimentKind::*;
        if self.name.trim().is_empty() {
            return Err(field_err("name", "must not be empty"));
        }
        if self.name.contains(['/', '\\']) {
            return Err(field_err("name", "must not contain path separators"));
        }
        let needs_grid = !matches!(self.experiment, Landis1d);
        let needs_domain = !matches!(self.experiment, Landis1d | Continuation);
        if needs_grid {
            let g = self.grid.as_ref().ok_or_else(|| field_err("grid", "missing [grid] table"))?;
            positive("grid.h", g.h)?;
        }
        if needs_domain {
            let d = self.domain.as_ref().ok_or_else(|| field_err("domain", "missing [domain] table"))?;
            d.build()?;
            if let Some(g) = &self.grid {
                let size = self.domain()?.diameter();
                if g.h >= size {
                    return Err(field_err("grid.h", format!("must be below the domain diameter {size} (got {})", g.h)));
                }
            }
        }
        positive("solver.tol", self.solver.tol)?;
        if self.solver.max_iter == Some(0) {
            return Err(field_err("solver.max_iter", "must be >= 1"));
        }
        if self.sweep.count == 0 {
            return Err(field_err("sweep.count", "must be >= 1"));
        }
        if self.save_fields && !matches!(self.experiment, EllipticBound | ZScan) {
            return Err(field_err("save_fields", format!("not available for {}", self.experiment)));
        }
        self.validate_coefficients()?;
        if self.boundary == BoundarySpec::Neumann && !matches!(self.experiment, EllipticBound) {
            return Err(field_err("boundary", "Neumann data is only supported by elliptic_bound"));
        }

        match self.experiment {
            ParabolicBound => {
                let t = self.time.as_ref().ok_or_else(|| field_err("time", "missing [time] table"))?;
                nonneg("time.t_final", t.t_final)?;
                if let Some(dt) = t.dt {
                    positive("time.dt", dt)?;
                }
                if t.stride == 0 {
                    return Err(field_err("time.stride", "must be >= 1"));
                }
                nonneg("time.forcing_decay", t.forcing_decay)?;
                parse_expr("time.initial", &t.initial)?;
            }
            Multiplier => {
                let m = self.multiplier.clone().unwrap_or_default();
                positive("multiplier.envelope_tol", m.envelope_tol)?;
                positive("multiplier.c_ceiling", m.c_ceiling)?;
                if let Some(e) = &m.exact {
                    parse_expr("multiplier.exact", e)?;
                }
            }
            Landis1d => {
                let l = self.landis.clone().unwrap_or_default();
                positive("landis.r", l.r)?;
                positive("landis.h", l.h)?;
                if l.h >= l.r {
                    return Err(field_err("landis.h", format!("must be below landis.r = {} (got {})", l.r, l.h)));
                }
                finite("landis.drift", l.drift)?;
                for (i, r) in l.radii.iter().enumerate() {
                    positive(&format!("landis.radii[{i}]"), *r)?;
                }
                positive("landis.residual_tol", l.residual_tol)?;
                nonneg("landis.w_max", l.w_max)?;
                nonneg("landis.v_max", l.v_max)?;
                positive("landis.r_max", l.r_max)?;
            }
            Continuation => {
                let c = self.continuation.as_ref().ok_or_else(|| field_err("continuation", "missing [continuation] table"))?;
                positive("continuation.r", c.r)?;
                finite("continuation.center[0]", c.center[0])?;
                finite("continuation.center[1]", c.center[1])?;
                positive("continuation.c_ceiling", c.c_ceiling)?;
                parse_expr("continuation.g", &c.g)?;
                if self.h() >= c.r {
                    return Err(field_err("grid.h", format!("must be below continuation.r = {}", c.r)));
                }
            }
            ConvergenceStudy => {
                let c = self.convergence.as_ref().ok_or_else(|| field_err("convergence", "missing [convergence] table"))?;
                parse_expr("convergence.exact", &c.exact)?;
                if !(2..=8).contains(&c.levels) {
                    return Err(field_err("convergence.levels", format!("must be in 2..=8 (got {})", c.levels)));
                }
                let [lo, hi] = c.ratio_range;
                positive("convergence.ratio_range[0]", lo)?;
                if !(hi >= lo) {
                    return Err(field_err("convergence.ratio_range", format!("upper end {hi} is below lower end {lo}")));
                }
                if let Some(e) = c.max_error {
                    positive("convergence.max_error", e)?;
                }
            }
            ZScan => {
                let z = self.zscan.clone().unwrap_or_default();
                positive("zscan.lambda_scale", z.lambda_scale)?;
                if let Some(e) = z.epsilon {
                    nonneg("zscan.epsilon", e)?;
                }
            }
            EllipticBound => {}
        }
        if let Some(z) = &self.zscan {
            positive("zscan.lambda_scale", z.lambda_scale)?;
        }
        Ok(())
    }

    fn validate_coefficients(&self) -> Result<(), ConfigError> {
        match &self.coefficients {
            CoefficientSpec::Constant { w, v, f } => {
                finite("coefficients.w[0]", w[0])?;
                finite("coefficients.w[1]", w[1])?;
                finite("coefficients.v", *v)?;
                finite("coefficients.f", *f)?;
                if *v < 0.0 {
                    return Err(field_err("coefficients.v", format!("potential must be >= 0 (got {v})")));
                }
            }
            CoefficientSpec::Expression { w, v, f } => {
                parse_expr("coefficients.w[0]", &w[0])?;
                parse_expr("coefficients.w[1]", &w[1])?;
                parse_expr("coefficients.v", v)?;
                parse_expr("coefficients.f", f)?;
            }
            CoefficientSpec::Random { k, m, f, cell } => {
                nonneg("coefficients.k", *k)?;
                nonneg("coefficients.m", *m)?;
                nonneg("coefficients.f", *f)?;
                positive("coefficients.cell", *cell)?;
            }
        }
        Ok(())
    }
}

pub fn parse_expr(field: &str, src: &str) -> Result<Expr, ConfigError> {
    Expr::parse(src).map_err(|e| field_err(field, format!("expression '{src}' {e}")))
}

fn finite(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be finite (got {x})")))
    }
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be > 0 (got {x})")))
    }
}

fn nonneg(field: &str, x: f64) -> Result<(), ConfigError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be >= 0 (got {x})")))
    }
}
