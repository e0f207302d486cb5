//! Bound checks: two-point scans, gradient bounds against measured
//! gradients, and mass ratios for unique continuation.

pub mod bounds;
pub mod continuation;
pub mod zscan;

pub use bounds::{
    check_gradient_bound, check_parabolic_bound, dirichlet_pointwise_check, parabolic_pointwise_check, BoundPath,
    BoundReport, PointwiseReport,
};
pub use continuation::{
    continuation_ratio_annulus, continuation_ratio_boundary, ContinuationKind, ContinuationOptions,
    ContinuationProblem, ContinuationReport, DualCheck,
};
pub use zscan::{z_scan_elliptic, z_scan_parabolic, ParabolicZReport, ZScanOptions, ZScanReport, ZScanner};
