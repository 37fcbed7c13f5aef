//! Gradients and Euler–Lagrange residuals of the quadratic functionals
//! `ρ = ∫|Ric|²`, `S = ∫R²` and `F_t = ρ + t S`, together with the
//! σ₂-specific equations that hold on critical metrics in dimension three.
//!
//! Every evaluator takes a [`CurvatureData`], so one jet evaluation per point
//! serves all of them.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{curvature_data, CurvatureData};
use crate::metric::{MetricChart, MetricError};
use crate::tensor::{self, Mat3};

/// Coupling for which `F_t` is proportional to the σ₂ functional:
/// `F₂ = −½ F_{−3/8}`.
pub const SIGMA2_COUPLING: f64 = -3.0 / 8.0;

/// `(∇ρ)_ij = −ΔR_ij − 2 R_ikjl R_kl + ∇²_ij R − ½(ΔR) g_ij + ½|Ric|² g_ij`
pub fn grad_rho(cd: &CurvatureData) -> Mat3 {
    let g = &cd.metric;
    let rm_ric = tensor::curvature_contract(&cd.riemann, &cd.ricci, &cd.metric_inv);
    let ric2 = cd.ricci_norm_sq();
    let lap_ric = cd.lap_ricci();
    tensor::from_fn(|i, j| {
        -lap_ric[i][j] - 2.0 * rm_ric[i][j] + cd.hess_r[i][j] - 0.5 * cd.lap_r * g[i][j]
            + 0.5 * ric2 * g[i][j]
    })
}

/// `(∇S)_ij = 2∇²_ij R − 2(ΔR) g_ij − 2 R R_ij + ½R² g_ij`
pub fn grad_s(cd: &CurvatureData) -> Mat3 {
    let g = &cd.metric;
    let r = cd.scalar;
    tensor::from_fn(|i, j| {
        2.0 * cd.hess_r[i][j] - 2.0 * cd.lap_r * g[i][j] - 2.0 * r * cd.ricci[i][j]
            + 0.5 * r * r * g[i][j]
    })
}

/// Gradient of `F_t`, assembled directly rather than as `∇ρ + t∇S`.
pub fn grad_ft(cd: &CurvatureData, t: f64) -> Mat3 {
    let g = &cd.metric;
    let r = cd.scalar;
    let rm_ric = tensor::curvature_contract(&cd.riemann, &cd.ricci, &cd.metric_inv);
    let ric2 = cd.ricci_norm_sq();
    let lap_ric = cd.lap_ricci();
    tensor::from_fn(|i, j| {
        -lap_ric[i][j] + (1.0 + 2.0 * t) * cd.hess_r[i][j]
            - 0.5 * (1.0 + 4.0 * t) * cd.lap_r * g[i][j]
            + 0.5 * (ric2 + t * r * r) * g[i][j]
            - 2.0 * rm_ric[i][j]
            - 2.0 * t * r * cd.ricci[i][j]
    })
}

/// `2 tr(∇F_t) + (3 + 8t) ΔR + (|Ric|² + t R²)`, which vanishes for every
/// metric in dimension three.
pub fn trace_identity_residual(cd: &CurvatureData, t: f64) -> f64 {
    let tr = tensor::trace(&grad_ft(cd, t), &cd.metric_inv);
    let r = cd.scalar;
    2.0 * tr + (3.0 + 8.0 * t) * cd.lap_r + (cd.ricci_norm_sq() + t * r * r)
}

/// Criticality equations for `F_t` written for a general dimension `n`,
/// evaluated on three-dimensional curvature data. Returns the tensor residual
/// `ΔE − RHS` and the scalar trace equation residual.
pub fn general_el_residuals(cd: &CurvatureData, n: f64, t: f64) -> (Mat3, f64) {
    let g = &cd.metric;
    let r = cd.scalar;
    let e = tensor::axpy(&cd.ricci, -r / n, g);
    let lap_e = tensor::axpy(&cd.lap_ricci(), -cd.lap_r / n, g);
    let rm_e = tensor::curvature_contract(&cd.riemann, &e, &cd.metric_inv);
    let ric2 = cd.ricci_norm_sq();
    let tensor_res = tensor::from_fn(|i, j| {
        let rhs = (1.0 + 2.0 * t) * cd.hess_r[i][j]
            - (n + 2.0 + 4.0 * n * t) / (2.0 * n) * cd.lap_r * g[i][j]
            - 2.0 * rm_e[i][j]
            - (2.0 + 2.0 * n * t) / n * r * e[i][j]
            + 0.5 * (ric2 - (4.0 - n * (n - 4.0) * t) / (n * n) * r * r) * g[i][j];
        lap_e[i][j] - rhs
    });
    let trace_res = (n + 4.0 * (n - 1.0) * t) * cd.lap_r - (n - 4.0) * (ric2 + t * r * r);
    (tensor_res, trace_res)
}

/// The σ₂ system in dimension three. `eq1 = ΔE − RHS`, `eq2 = |E|² − R²/24`.
pub fn f2_residuals(cd: &CurvatureData) -> (Mat3, f64) {
    let g = &cd.metric;
    let r = cd.scalar;
    let e = &cd.traceless;
    let e_sq = cd.e_squared();
    let e2 = cd.e_norm_sq();
    let eq1 = tensor::from_fn(|i, j| {
        let rhs = 0.25 * cd.hess_r[i][j] - cd.lap_r / 12.0 * g[i][j]
            + 4.0 * e_sq[i][j]
            + 5.0 / 12.0 * r * e[i][j]
            - 0.5 * (3.0 * e2 - r * r / 72.0) * g[i][j];
        cd.lap_e[i][j] - rhs
    });
    (eq1, e2 - r * r / 24.0)
}

/// Left minus right side of the Weitzenböck formula for critical metrics,
/// with `Δ|E|² = 2 E^{ij} ΔE_ij + 2|∇E|²`.
pub fn weitzenbock_residual(cd: &CurvatureData) -> f64 {
    let ginv = &cd.metric_inv;
    let half_lap_e2 = tensor::inner(&cd.traceless, &cd.lap_e, ginv) + cd.norm_grad_e_sq;
    let rhs = cd.norm_grad_e_sq
        + 0.25 * tensor::inner(&cd.traceless, &cd.hess_r, ginv)
        + 4.0 * cd.e_cubed_trace()
        + 5.0 / 12.0 * cd.scalar * cd.e_norm_sq();
    half_lap_e2 - rhs
}

/// Scalar PDE for `R` on critical metrics with `|E|² = R²/24`, and the slack
/// of the differential inequality `(R g − 6E)^{ij} ∇²_ij R ≥ R³/12`.
pub fn pde_residual(cd: &CurvatureData) -> (f64, f64) {
    let r = cd.scalar;
    let a = tensor::axpy(&tensor::scale(&cd.metric, r), -6.0, &cd.traceless);
    let lhs_full = tensor::inner(&a, &cd.hess_r, &cd.metric_inv);
    let rhs = cd.norm_grad_e_sq - cd.grad_r_norm_sq() / 24.0
        + 4.0 * cd.e_cubed_trace()
        + 5.0 / 12.0 * r * cd.e_norm_sq();
    (lhs_full / 24.0 - rhs, lhs_full - r * r * r / 12.0)
}

/// Frobenius norm with both indices raised by the metric.
pub fn tensor_norm(t: &Mat3, cd: &CurvatureData) -> f64 {
    tensor::norm_sq(t, &cd.metric_inv).max(0.0).sqrt()
}

/// Residuals of every equation at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualRecord {
    pub point: [f64; 3],
    pub scalar_curvature: f64,
    pub grad_ft_norm: f64,
    pub eq1_norm: f64,
    pub eq2_value: f64,
    pub weitzenbock_residual: f64,
    pub pde_residual: f64,
    pub cor34_slack: f64,
}

/// Per-field curvature scales used to turn raw residuals into relative ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualScales {
    pub quadratic: f64,
    pub weitzenbock: f64,
    pub cubic: f64,
}

impl ResidualScales {
    pub fn at(scalar: f64) -> Self {
        let r2 = scalar * scalar;
        ResidualScales {
            quadratic: 1.0 + r2,
            weitzenbock: (1.0 + r2 * r2).sqrt(),
            cubic: 1.0 + scalar.abs().powi(3),
        }
    }
}

impl ResidualRecord {
    pub fn from_curvature(cd: &CurvatureData, t: f64) -> Self {
        let (eq1, eq2) = f2_residuals(cd);
        let (pde, slack) = pde_residual(cd);
        ResidualRecord {
            point: cd.point,
            scalar_curvature: cd.scalar,
            grad_ft_norm: tensor_norm(&grad_ft(cd, t), cd),
            eq1_norm: tensor_norm(&eq1, cd),
            eq2_value: eq2,
            weitzenbock_residual: weitzenbock_residual(cd),
            pde_residual: pde,
            cor34_slack: slack,
        }
    }

    /// The five criticality residuals divided by their curvature scales, as
    /// `(grad_ft, eq1, eq2, weitzenbock, pde)`.
    pub fn scaled(&self) -> [f64; 5] {
        let s = ResidualScales::at(self.scalar_curvature);
        [
            self.grad_ft_norm / s.quadratic,
            self.eq1_norm / s.quadratic,
            self.eq2_value.abs() / s.quadratic,
            self.weitzenbock_residual.abs() / s.weitzenbock,
            self.pde_residual.abs() / s.cubic,
        ]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FieldSummary {
    pub max: f64,
    pub mean: f64,
}

impl FieldSummary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut n = 0usize;
        for v in values {
            max = max.max(v);
            sum += v;
            n += 1;
        }
        if n == 0 {
            return FieldSummary::default();
        }
        FieldSummary { max, mean: sum / n as f64 }
    }
}

/// Max and mean of the magnitude of every residual field, unscaled.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RawSummary {
    pub grad_ft_norm: FieldSummary,
    pub eq1_norm: FieldSummary,
    pub eq2_value: FieldSummary,
    pub weitzenbock_residual: FieldSummary,
    pub pde_residual: FieldSummary,
}

/// Maxima of the scaled residuals (see [`ResidualRecord::scaled`]).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportSummary {
    pub max_grad_ft_norm: f64,
    pub max_eq1_norm: f64,
    pub max_eq2_value: f64,
    pub max_weitzenbock_residual: f64,
    pub max_pde_residual: f64,
    /// Minimum over the points; negative values are reported, not asserted.
    pub cor34_slack_min: f64,
    pub raw: RawSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElReport {
    pub metric_name: String,
    pub t: f64,
    pub points: Vec<ResidualRecord>,
    pub summary: ReportSummary,
}

impl ElReport {
    pub fn from_records(metric_name: impl Into<String>, t: f64, points: Vec<ResidualRecord>) -> Self {
        let summary = if points.is_empty() {
            ReportSummary::default()
        } else {
            let field = |f: fn(&ResidualRecord) -> f64| FieldSummary::of(points.iter().map(|r| f(r).abs()));
            let scaled_max = |k: usize| points.iter().map(|r| r.scaled()[k]).fold(0.0, f64::max);
            ReportSummary {
                max_grad_ft_norm: scaled_max(0),
                max_eq1_norm: scaled_max(1),
                max_eq2_value: scaled_max(2),
                max_weitzenbock_residual: scaled_max(3),
                max_pde_residual: scaled_max(4),
                cor34_slack_min: points.iter().map(|r| r.cor34_slack).fold(f64::INFINITY, f64::min),
                raw: RawSummary {
                    grad_ft_norm: field(|r| r.grad_ft_norm),
                    eq1_norm: field(|r| r.eq1_norm),
                    eq2_value: field(|r| r.eq2_value),
                    weitzenbock_residual: field(|r| r.weitzenbock_residual),
                    pde_residual: field(|r| r.pde_residual),
                },
            }
        };
        ElReport { metric_name: metric_name.into(), t, points, summary }
    }

    /// Largest scaled criticality residual over all fields and points.
    pub fn max_scaled(&self) -> f64 {
        let s = &self.summary;
        [
            s.max_grad_ft_norm,
            s.max_eq1_norm,
            s.max_eq2_value,
            s.max_weitzenbock_residual,
            s.max_pde_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates the residual record at each point, in parallel, keeping the
/// input point order.
pub fn el_report(chart: &MetricChart, points: &[[f64; 3]], t: f64) -> Result<ElReport, MetricError> {
    let records = points
        .par_iter()
        .map(|p| curvature_data(chart, *p).map(|cd| ResidualRecord::from_curvature(&cd, t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ElReport::from_records(chart.name.clone(), t, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::catalog_metric;

    fn sphere_cd() -> CurvatureData {
        curvature_data(&catalog_metric("round_sphere").unwrap(), [1.2, 0.9, 0.5]).unwrap()
    }

    fn assert_multiple_of_metric(t: &Mat3, cd: &CurvatureData, factor: f64, tol: f64) {
        for i in 0..3 {
            for j in 0..3 {
                let expected = factor * cd.metric[i][j];
                assert!((t[i][j] - expected).abs() < tol, "[{i}][{j}] {} vs {}", t[i][j], expected);
            }
        }
    }

    #[test]
    fn flat_metric_has_zero_gradients() {
        let cd = curvature_data(&MetricChart::flat(), [0.1, 0.2, 0.3]).unwrap();
        assert_eq!(grad_rho(&cd), tensor::zeros());
        assert_eq!(grad_s(&cd), tensor::zeros());
        assert_eq!(grad_ft(&cd, 0.7), tensor::zeros());
        assert_eq!(trace_identity_residual(&cd, -0.3), 0.0);
        assert_eq!(f2_residuals(&cd), (tensor::zeros(), 0.0));
        assert_eq!(weitzenbock_residual(&cd), 0.0);
        assert_eq!(pde_residual(&cd), (0.0, 0.0));
    }

    #[test]
    fn sphere_gradients() {
        let cd = sphere_cd();
        assert_multiple_of_metric(&grad_rho(&cd), &cd, -2.0, 1e-10);
        assert_multiple_of_metric(&grad_s(&cd), &cd, -6.0, 1e-10);
        for t in [-1.0, -0.5, -1.0 / 3.0, SIGMA2_COUPLING, 0.0, 0.8] {
            assert_multiple_of_metric(&grad_ft(&cd, t), &cd, -2.0 * (1.0 + 3.0 * t), 1e-10);
        }
        assert_multiple_of_metric(&grad_ft(&cd, SIGMA2_COUPLING), &cd, 0.25, 1e-10);
        assert!(tensor_norm(&grad_ft(&cd, -1.0 / 3.0), &cd) < 1e-10);
        assert!(trace_identity_residual(&cd, SIGMA2_COUPLING).abs() < 1e-10);
    }

    #[test]
    fn einstein_point_scalar_gradient() {
        // any data with ∇R = ∇²R = 0 and Ric = (R/3) g
        let mut cd = sphere_cd();
        cd.hess_r = tensor::zeros();
        cd.lap_r = 0.0;
        let r = 4.5;
        cd.scalar = r;
        cd.ricci = tensor::scale(&cd.metric, r / 3.0);
        assert_multiple_of_metric(&grad_s(&cd), &cd, -r * r / 6.0, 1e-12);
    }

    #[test]
    fn sphere_is_not_sigma2_critical() {
        let (_, eq2) = f2_residuals(&sphere_cd());
        assert!((eq2 + 1.5).abs() < 1e-10);
    }

    #[test]
    fn gv_example_origin_residuals() {
        let cd = curvature_data(&catalog_metric("gv_example").unwrap(), [0.0; 3]).unwrap();
        let (eq1, eq2) = f2_residuals(&cd);
        assert!(eq2.abs() < 1e-12);
        assert!(tensor_norm(&eq1, &cd) < 1e-8);
        assert!(tensor_norm(&grad_ft(&cd, SIGMA2_COUPLING), &cd) < 1e-8);
    }

    #[test]
    fn general_form_specializes_to_sigma2_system() {
        let chart = crate::metric::load_metric_spec(
            "g11 = \"1 + 0.2*y^2\"\ng13 = \"0.1*x*y\"\ng22 = \"1 + 0.1*sin(z)\"\ng33 = \"(1.5 + 0.3*x - 0.2*x*y)^2\"",
        )
        .unwrap();
        let cd = curvature_data(&chart, [0.1, 0.3, -0.2]).unwrap();
        let (general, trace_res) = general_el_residuals(&cd, 3.0, SIGMA2_COUPLING);
        let (eq1, _) = f2_residuals(&cd);
        let ft = grad_ft(&cd, SIGMA2_COUPLING);
        for i in 0..3 {
            for j in 0..3 {
                assert!((general[i][j] - eq1[i][j]).abs() < 1e-10, "eq1 [{i}][{j}]");
                // the tensor equation is −∇F_t rewritten
                assert!((general[i][j] + ft[i][j]).abs() < 1e-10, "grad [{i}][{j}]");
            }
        }
        // trace equation = −2 tr(∇F_t) in dimension three
        let expected = -2.0 * tensor::trace(&ft, &cd.metric_inv);
        assert!((trace_res - expected).abs() < 1e-9);
    }

    #[test]
    fn weitzenbock_is_contraction_of_eq1() {
        let chart = crate::metric::catalog_metric("warped_template:1.3 + 0.4*x - 0.5*x*y + 0.2*y^2").unwrap();
        let cd = curvature_data(&chart, [0.2, -0.4, 0.0]).unwrap();
        let (eq1, _) = f2_residuals(&cd);
        let contracted = tensor::inner(&cd.traceless, &eq1, &cd.metric_inv);
        let w = weitzenbock_residual(&cd);
        assert!((w - contracted).abs() <= 1e-10 * (1.0 + w.abs()));
        assert!(w.abs() > 1e-6, "chart should be far from critical");
    }

    #[test]
    fn report_summary_bounds_entries() {
        let gv = catalog_metric("gv_example").unwrap();
        let pts = [[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [-1.5, 0.5, 1.0]];
        let rep = el_report(&gv, &pts, SIGMA2_COUPLING).unwrap();
        assert_eq!(rep.points.len(), 3);
        for (r, p) in rep.points.iter().zip(&pts) {
            assert_eq!(&r.point, p);
            assert!(rep.summary.raw.eq1_norm.max >= r.eq1_norm);
            assert!(rep.summary.raw.grad_ft_norm.max >= r.grad_ft_norm);
            assert!(r.grad_ft_norm >= 0.0 && r.eq1_norm >= 0.0);
        }
        assert!(rep.max_scaled() < 1e-8);

        let flat = el_report(&MetricChart::flat(), &[[0.0; 3]], 0.0).unwrap();
        let r = &flat.points[0];
        assert_eq!(
            [r.grad_ft_norm, r.eq1_norm, r.eq2_value, r.weitzenbock_residual, r.pde_residual, r.cor34_slack],
            [0.0; 6]
        );
    }
}
