//! Pointwise curvature of a metric chart, computed exactly (to rounding) from
//! order-4 Taylor jets of the metric components.
//!
//! Index conventions: `riemann[a][b][c][d]` is the fully lowered tensor with
//! `riemann[a][b][a][b] > 0` for a round sphere, so that
//! `R_ij = g^{kl} riemann[i][k][j][l]` and the three-dimensional decomposition
//! `R_ikjl = E_ij g_kl - E_il g_jk + E_kl g_ij - E_kj g_il + R/6 (g_ij g_kl - g_il g_jk)`
//! holds with these signs.

use crate::jets::{Jet, MAX_ORDER};
use crate::metric::{MetricChart, MetricError};
use crate::tensor::{self, Mat3, Tensor3, Tensor4, Vec3};

pub type JetMat = [[Jet; 3]; 3];
type JetTensor3 = [[[Jet; 3]; 3]; 3];
type JetTensor4 = [[[[Jet; 3]; 3]; 3]; 3];

fn jet_mat(order: u8, f: impl Fn(usize, usize) -> Jet) -> JetMat {
    let mut m = [[Jet::zero(order); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = f(i, j);
        }
    }
    m
}

fn values(m: &JetMat) -> Mat3 {
    tensor::from_fn(|i, j| m[i][j].value())
}

/// Metric and inverse metric as order-4 jets at one point.
#[derive(Clone, Debug)]
pub struct MetricJets {
    pub point: [f64; 3],
    pub g: JetMat,
    pub g_inv: JetMat,
}

impl MetricJets {
    /// Jets from already-expanded components; used by charts and by callers
    /// that build Taylor data some other way.
    pub fn from_components(point: [f64; 3], g: JetMat) -> Result<Self, MetricError> {
        let g0 = values(&g);
        if !tensor::is_positive_definite(&g0) {
            return Err(MetricError::NotPositiveDefinite { point });
        }
        let order = g[0][0].order();
        let cof = |i: usize, j: usize| {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            g[r0][c0] * g[r1][c1] - g[r0][c1] * g[r1][c0]
        };
        let det = g[0][0] * cof(0, 0) + g[0][1] * cof(0, 1) + g[0][2] * cof(0, 2);
        let inv_det = det.recip().map_err(|_| MetricError::SingularInverse { point })?;
        let g_inv = jet_mat(order, |i, j| cof(j, i) * inv_det);
        Ok(MetricJets { point, g, g_inv })
    }

    pub fn metric(&self) -> Mat3 {
        values(&self.g)
    }

    pub fn metric_inv(&self) -> Mat3 {
        values(&self.g_inv)
    }

    /// `sqrt(det g)` as a jet.
    pub fn volume_density(&self) -> Jet {
        let g = &self.g;
        let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
            - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
            + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
        det.sqrt().expect("positive definite metric has positive determinant")
    }
}

/// Evaluates every component of the chart to an order-4 jet and inverts.
pub fn metric_jets(chart: &MetricChart, point: [f64; 3]) -> Result<MetricJets, MetricError> {
    if !chart.guard_holds(point) {
        return Err(MetricError::GuardViolation { point });
    }
    let mut g = [[Jet::zero(MAX_ORDER); 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let jet = chart.component(i, j).eval_jet(point, MAX_ORDER)?;
            g[i][j] = jet;
            g[j][i] = jet;
        }
    }
    MetricJets::from_components(point, g)
}

/// Christoffel symbols `gamma[k][i][j] = Γ^k_ij` and their partials
/// `partials[m][k][i][j] = ∂_m Γ^k_ij`.
#[derive(Clone, Debug)]
pub struct Christoffel {
    pub values: Tensor3,
    pub partials: Tensor4,
}

fn gamma_jets(mj: &MetricJets) -> JetTensor3 {
    let order = mj.g[0][0].order() - 1;
    let mut dg = [[[Jet::zero(order); 3]; 3]; 3];
    for (l, slab) in dg.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                slab[i][j] = mj.g[i][j].partial(l);
            }
        }
    }
    // first kind: Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut first = [[[Jet::zero(order); 3]; 3]; 3];
    for (l, slab) in first.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                slab[i][j] = (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]).scale(0.5);
            }
        }
    }
    let mut gamma = [[[Jet::zero(order); 3]; 3]; 3];
    for (k, slab) in gamma.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Jet::zero(order);
                for (l, fl) in first.iter().enumerate() {
                    acc += mj.g_inv[k][l] * fl[i][j];
                }
                slab[i][j] = acc;
            }
        }
    }
    gamma
}

pub fn christoffel(mj: &MetricJets) -> Christoffel {
    christoffel_from_jets(&gamma_jets(mj))
}

fn christoffel_from_jets(gamma: &JetTensor3) -> Christoffel {
    let mut values = [[[0.0; 3]; 3]; 3];
    let mut partials = [[[[0.0; 3]; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                values[k][i][j] = gamma[k][i][j].value();
                for (m, p) in partials.iter_mut().enumerate() {
                    p[k][i][j] = gamma[k][i][j].partial(m).value();
                }
            }
        }
    }
    Christoffel { values, partials }
}

/// `mixed[a][b][c][d] = R^a_bcd` as order-2 jets, with
/// `R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb`.
fn riemann_mixed(gamma: &JetTensor3) -> Box<JetTensor4> {
    let order = gamma[0][0][0].order() - 1;
    let mut dgamma = Box::new([[[[Jet::zero(order); 3]; 3]; 3]; 3]);
    for (m, slab) in dgamma.iter_mut().enumerate() {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    slab[k][i][j] = gamma[k][i][j].partial(m);
                }
            }
        }
    }
    let gamma_t: JetTensor3 = {
        let mut t = [[[Jet::zero(order); 3]; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    t[k][i][j] = gamma[k][i][j].truncate(order);
                }
            }
        }
        t
    };
    let mut out = Box::new([[[[Jet::zero(order); 3]; 3]; 3]; 3]);
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    if c == d {
                        continue;
                    }
                    let mut acc = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..3 {
                        acc += gamma_t[a][c][e] * gamma_t[e][d][b];
                        acc -= gamma_t[a][d][e] * gamma_t[e][c][b];
                    }
                    out[a][b][c][d] = acc;
                }
            }
        }
    }
    out
}

/// Fully lowered curvature values plus the mixed tensor as order-2 jets.
#[derive(Clone, Debug)]
pub struct Riemann {
    pub lowered: Tensor4,
    pub mixed: Box<JetTensor4>,
}

pub fn riemann_tensor(mj: &MetricJets) -> Riemann {
    let mixed = riemann_mixed(&gamma_jets(mj));
    Riemann { lowered: lower_riemann(&mj.metric(), &mixed), mixed }
}

fn lower_riemann(g: &Mat3, mixed: &JetTensor4) -> Tensor4 {
    let mut out = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    out[a][b][c][d] = (0..3).map(|e| g[a][e] * mixed[e][b][c][d].value()).sum();
                }
            }
        }
    }
    out
}

/// Jet-level intermediate quantities, exposed for independent cross-checks.
#[derive(Clone, Debug)]
pub struct CurvatureJets {
    /// `Γ^k_ij`, order 3.
    pub gamma: JetTensor3,
    /// `R^a_bcd`, order 2.
    pub riemann_mixed: Box<JetTensor4>,
    /// `R_ij`, order 2.
    pub ricci: JetMat,
    /// `R`, order 2.
    pub scalar: Jet,
    /// `E_ij`, order 2.
    pub traceless: JetMat,
}

pub fn curvature_jets(mj: &MetricJets) -> CurvatureJets {
    let gamma = gamma_jets(mj);
    let riemann_mixed = riemann_mixed(&gamma);
    let order = riemann_mixed[0][0][0][1].order();
    let ricci = jet_mat(order, |b, d| {
        let mut acc = Jet::zero(order);
        for a in 0..3 {
            acc += riemann_mixed[a][b][a][d];
        }
        acc
    });
    let mut scalar = Jet::zero(order);
    for i in 0..3 {
        for j in 0..3 {
            scalar += mj.g_inv[i][j] * ricci[i][j];
        }
    }
    let third = scalar.scale(1.0 / 3.0);
    let traceless = jet_mat(order, |i, j| ricci[i][j] - third * mj.g[i][j]);
    CurvatureJets { gamma, riemann_mixed, ricci, scalar, traceless }
}

/// Every pointwise curvature quantity at one chart point.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub point: [f64; 3],
    pub metric: Mat3,
    pub metric_inv: Mat3,
    /// `gamma[k][i][j] = Γ^k_ij`
    pub gamma: Tensor3,
    /// `gamma_partials[m][k][i][j] = ∂_m Γ^k_ij`
    pub gamma_partials: Tensor4,
    pub riemann: Tensor4,
    pub ricci: Mat3,
    pub scalar: f64,
    /// Traceless Ricci tensor `E = Ric − (R/3) g`.
    pub traceless: Mat3,
    /// `A = Ric − (R/4) g`.
    pub schouten: Mat3,
    pub sigma2: f64,
    pub grad_r: Vec3,
    pub hess_r: Mat3,
    pub lap_r: f64,
    /// `grad_e[k][i][j] = ∇_k E_ij`
    pub grad_e: Tensor3,
    pub lap_e: Mat3,
    pub norm_grad_e_sq: f64,
}

impl CurvatureData {
    /// Quantities that only need `g`, `Ric` and `R`; derivative fields are
    /// left at zero.
    pub fn algebraic(
        point: [f64; 3],
        metric: Mat3,
        metric_inv: Mat3,
        riemann: Tensor4,
        ricci: Mat3,
    ) -> Self {
        let scalar = tensor::trace(&ricci, &metric_inv);
        let traceless = tensor::axpy(&ricci, -scalar / 3.0, &metric);
        let schouten = tensor::axpy(&ricci, -scalar / 4.0, &metric);
        let tr_a = tensor::trace(&schouten, &metric_inv);
        let sigma2 = 0.5 * (tr_a * tr_a - tensor::norm_sq(&schouten, &metric_inv));
        CurvatureData {
            point,
            metric,
            metric_inv,
            gamma: [[[0.0; 3]; 3]; 3],
            gamma_partials: [[[[0.0; 3]; 3]; 3]; 3],
            riemann,
            ricci,
            scalar,
            traceless,
            schouten,
            sigma2,
            grad_r: [0.0; 3],
            hess_r: tensor::zeros(),
            lap_r: 0.0,
            grad_e: [[[0.0; 3]; 3]; 3],
            lap_e: tensor::zeros(),
            norm_grad_e_sq: 0.0,
        }
    }

    pub fn e_norm_sq(&self) -> f64 {
        tensor::norm_sq(&self.traceless, &self.metric_inv)
    }

    pub fn ricci_norm_sq(&self) -> f64 {
        tensor::norm_sq(&self.ricci, &self.metric_inv)
    }

    /// `E_ip E_jp`
    pub fn e_squared(&self) -> Mat3 {
        tensor::contract_middle(&self.traceless, &self.traceless, &self.metric_inv)
    }

    /// `E_ip E_jp E_ij`
    pub fn e_cubed_trace(&self) -> f64 {
        let e = &self.traceless;
        tensor::triple_trace(e, e, e, &self.metric_inv)
    }

    /// `|∇R|²`
    pub fn grad_r_norm_sq(&self) -> f64 {
        tensor::covector_norm_sq(&self.grad_r, &self.metric_inv)
    }

    /// `ΔR_ij = ΔE_ij + (ΔR/3) g_ij`
    pub fn lap_ricci(&self) -> Mat3 {
        tensor::axpy(&self.lap_e, self.lap_r / 3.0, &self.metric)
    }

    /// `E^{ij} ∇_k E_ij`, i.e. `½ ∇_k |E|²`.
    pub fn half_grad_e_norm_sq(&self) -> Vec3 {
        let e_up = tensor::matmul(&tensor::matmul(&self.metric_inv, &self.traceless), &self.metric_inv);
        let mut v = [0.0; 3];
        for (k, vk) in v.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    *vk += e_up[i][j] * self.grad_e[k][i][j];
                }
            }
        }
        v
    }

    /// Magnitude of the curvature at this point, `max(|Riem|, |R|)`.
    pub fn riemann_norm(&self) -> f64 {
        let gi = &self.metric_inv;
        let rm = &self.riemann;
        let mut acc = 0.0;
        // raise all four indices one at a time
        let mut up = *rm;
        for slot in 0..4 {
            let mut next = [[[[0.0; 3]; 3]; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        for d in 0..3 {
                            let mut s = 0.0;
                            for e in 0..3 {
                                let (ia, ib, ic, id) = match slot {
                                    0 => (e, b, c, d),
                                    1 => (a, e, c, d),
                                    2 => (a, b, e, d),
                                    _ => (a, b, c, e),
                                };
                                let idx = [a, b, c, d][slot];
                                s += gi[idx][e] * up[ia][ib][ic][id];
                            }
                            next[a][b][c][d] = s;
                        }
                    }
                }
            }
            up = next;
        }
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        acc += rm[a][b][c][d] * up[a][b][c][d];
                    }
                }
            }
        }
        acc.max(0.0).sqrt()
    }
}

/// Populates [`CurvatureData`] from metric jets.
pub fn curvature_data_from_jets(mj: &MetricJets) -> CurvatureData {
    let cj = curvature_jets(mj);
    let metric = mj.metric();
    let metric_inv = mj.metric_inv();
    let chr = christoffel_from_jets(&cj.gamma);
    let gam = &chr.values;
    let riemann = lower_riemann(&metric, &cj.riemann_mixed);
    let ricci = values(&cj.ricci);
    let mut cd = CurvatureData::algebraic(mj.point, metric, metric_inv, riemann, ricci);
    cd.gamma = chr.values;
    cd.gamma_partials = chr.partials;
    // keep the jet-derived scalar so R and its derivatives come from one source
    cd.scalar = cj.scalar.value();

    let r = &cj.scalar;
    let dr: [Jet; 3] = [r.partial(0), r.partial(1), r.partial(2)];
    cd.grad_r = [dr[0].value(), dr[1].value(), dr[2].value()];
    cd.hess_r = tensor::from_fn(|i, j| {
        let second = dr[j].partial(i).value();
        second - (0..3).map(|k| gam[k][i][j] * cd.grad_r[k]).sum::<f64>()
    });
    cd.lap_r = tensor::trace(&cd.hess_r, &metric_inv);

    // ∇_k E_ij as order-1 jets
    let e = &cj.traceless;
    let gamma1 = |k: usize, i: usize, j: usize| cj.gamma[k][i][j].truncate(1);
    let e1 = |i: usize, j: usize| e[i][j].truncate(1);
    let mut cov_e = [[[Jet::zero(1); 3]; 3]; 3];
    for (k, slab) in cov_e.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = e[i][j].partial(k).truncate(1);
                for l in 0..3 {
                    acc -= gamma1(l, k, i) * e1(l, j);
                    acc -= gamma1(l, k, j) * e1(i, l);
                }
                slab[i][j] = acc;
            }
        }
    }
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                cd.grad_e[k][i][j] = cov_e[k][i][j].value();
            }
        }
    }
    let ge = &cd.grad_e;
    cd.lap_e = tensor::from_fn(|i, j| {
        let mut s = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                let mut second = cov_e[l][i][j].partial(k).value();
                for m in 0..3 {
                    second -= gam[m][k][l] * ge[m][i][j];
                    second -= gam[m][k][i] * ge[l][m][j];
                    second -= gam[m][k][j] * ge[l][i][m];
                }
                s += metric_inv[k][l] * second;
            }
        }
        s
    });
    cd.norm_grad_e_sq = tensor::tensor3_norm_sq(&cd.grad_e, &metric_inv);
    cd
}

pub fn curvature_data(chart: &MetricChart, point: [f64; 3]) -> Result<CurvatureData, MetricError> {
    Ok(curvature_data_from_jets(&metric_jets(chart, point)?))
}

/// `Δf = |g|^{-1/2} ∂_i(|g|^{1/2} g^{ij} ∂_j f)` for a scalar jet of order >= 2.
///
/// Shares no Christoffel code with [`CurvatureData::lap_r`]; used as an
/// independent route to the Laplacian.
pub fn divergence_laplacian(mj: &MetricJets, f: &Jet) -> f64 {
    let vol = mj.volume_density();
    let df: [Jet; 3] = [f.partial(0), f.partial(1), f.partial(2)];
    let mut total = 0.0;
    for i in 0..3 {
        let mut flux = Jet::zero(1);
        for (j, dfj) in df.iter().enumerate() {
            flux += mj.g_inv[i][j] * *dfj;
        }
        total += (vol * flux).partial(i).value();
    }
    total / vol.value()
}

/// `|E|²` as an order-2 jet.
pub fn e_norm_sq_jet(mj: &MetricJets, cj: &CurvatureJets) -> Jet {
    let e = &cj.traceless;
    let mut acc = Jet::zero(2);
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    acc += mj.g_inv[i][a] * mj.g_inv[j][b] * e[i][j] * e[a][b];
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{catalog_metric, load_metric_spec};
    use std::f64::consts::FRAC_PI_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn flat_jets_are_identity() {
        let mj = metric_jets(&MetricChart::flat(), [0.3, -1.0, 2.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_eq!(mj.g[i][j], Jet::constant(e, 4));
                assert_eq!(mj.g_inv[i][j], Jet::constant(e, 4));
            }
        }
    }

    #[test]
    fn gv_example_jets_at_origin() {
        let mj = metric_jets(&catalog_metric("gv_example").unwrap(), [0.0; 3]).unwrap();
        // (1 + x² + y²)² = 1 + 2x² + 2y² + x⁴ + 2x²y² + y⁴
        let g33 = &mj.g[2][2];
        assert_eq!(g33.coeff([0, 0, 0]), 1.0);
        assert_eq!(g33.coeff([2, 0, 0]), 2.0);
        assert_eq!(g33.coeff([0, 2, 0]), 2.0);
        assert_eq!(g33.coeff([4, 0, 0]), 1.0);
        assert_eq!(g33.coeff([2, 2, 0]), 2.0);
        assert_eq!(mj.metric_inv(), tensor::identity());
        // g · g⁻¹ = I as jets
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Jet::zero(4);
                for k in 0..3 {
                    acc += mj.g[i][k] * mj.g_inv[k][j];
                }
                let e = if i == j { 1.0 } else { 0.0 };
                assert!(acc.max_abs_diff(&Jet::constant(e, 4)) < 1e-11);
            }
        }
    }

    #[test]
    fn negative_component_rejected() {
        let chart = load_metric_spec("g11 = \"-1\"").unwrap();
        assert!(matches!(metric_jets(&chart, [0.0; 3]), Err(MetricError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn christoffel_examples() {
        let flat = christoffel(&metric_jets(&MetricChart::flat(), [1.0, 2.0, 3.0]).unwrap());
        assert!(flat.values.iter().flatten().flatten().all(|v| *v == 0.0));

        let gv = catalog_metric("gv_example").unwrap();
        let at0 = christoffel(&metric_jets(&gv, [0.0; 3]).unwrap());
        assert_eq!(at0.values[2][0][2], 0.0);
        let at1 = christoffel(&metric_jets(&gv, [1.0, 0.0, 0.0]).unwrap());
        // Γ^z_xz = f_x / f = 2/2
        assert!((at1.values[2][0][2] - 1.0).abs() < 1e-14);
        assert_eq!(at1.values[2][0][2], at1.values[2][2][0]);

        let sphere = catalog_metric("round_sphere").unwrap();
        let c = christoffel(&metric_jets(&sphere, [FRAC_PI_2, FRAC_PI_2, 0.0]).unwrap());
        assert!(c.values[0][1][1].abs() < 1e-15);
        let c = christoffel(&metric_jets(&sphere, [1.0, 1.2, 0.0]).unwrap());
        assert!((c.values[0][1][1] + 1f64.sin() * 1f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn sphere_sectional_curvature_is_one() {
        let sphere = catalog_metric("round_sphere").unwrap();
        let mj = metric_jets(&sphere, [1.1, 0.7, 0.4]).unwrap();
        let rm = riemann_tensor(&mj).lowered;
        let g = mj.metric();
        for i in 0..3 {
            for k in 0..3 {
                if i != k {
                    let expected = g[i][i] * g[k][k] - g[i][k] * g[i][k];
                    assert!(close(rm[i][k][i][k], expected, 1e-13), "{i}{k}");
                }
            }
        }
    }

    #[test]
    fn flat_curvature_vanishes() {
        let cd = curvature_data(&MetricChart::flat(), [0.5, 0.5, 0.5]).unwrap();
        assert_eq!(cd.scalar, 0.0);
        assert_eq!(cd.sigma2, 0.0);
        assert_eq!(cd.lap_r, 0.0);
        assert_eq!(cd.norm_grad_e_sq, 0.0);
        assert!(cd.riemann.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
        assert_eq!(cd.ricci, tensor::zeros());
        assert_eq!(cd.lap_e, tensor::zeros());
    }

    #[test]
    fn gv_example_origin_values() {
        let cd = curvature_data(&catalog_metric("gv_example").unwrap(), [0.0; 3]).unwrap();
        let tol = 1e-13;
        assert!(close(cd.scalar, -8.0, tol));
        let ric = [-2.0, -2.0, -4.0];
        let e = [2.0 / 3.0, 2.0 / 3.0, -4.0 / 3.0];
        for i in 0..3 {
            assert!(close(cd.ricci[i][i], ric[i], tol));
            assert!(close(cd.traceless[i][i], e[i], tol));
        }
        assert!(close(cd.e_norm_sq(), 8.0 / 3.0, tol));
        assert!(close(cd.e_norm_sq(), cd.scalar * cd.scalar / 24.0, tol));
        assert!(cd.sigma2.abs() < 1e-13);
    }

    #[test]
    fn gv_example_scalar_curvature_formula() {
        let gv = catalog_metric("gv_example").unwrap();
        let cd = curvature_data(&gv, [1.0, 1.0, 0.0]).unwrap();
        assert!(close(cd.scalar, -8.0 / 3.0, 1e-13));
        let cd = curvature_data(&gv, [-1.3, 0.4, 2.0]).unwrap();
        assert!(close(cd.scalar, -8.0 / (1.0 + 1.69 + 0.16), 1e-13));
    }

    #[test]
    fn sphere_is_einstein() {
        let cd = curvature_data(&catalog_metric("round_sphere").unwrap(), [1.0, 2.0, 0.3]).unwrap();
        assert!(close(cd.scalar, 6.0, 1e-12));
        assert!(tensor::max_abs(&cd.traceless) < 1e-12);
        assert!(close(cd.sigma2, 0.75, 1e-12));
        assert!(cd.lap_r.abs() < 1e-11);
        assert!(tensor::max_abs(&cd.lap_e) < 1e-11);
    }

    #[test]
    fn laplacian_two_routes_agree() {
        let chart = load_metric_spec(
            "g11 = \"1 + 0.3*x*y\"\ng12 = \"0.1*z^2\"\ng22 = \"exp(0.2*x)\"\ng33 = \"(1 + x^2 + 0.5*y)^2\"",
        )
        .unwrap();
        let mj = metric_jets(&chart, [0.2, -0.1, 0.4]).unwrap();
        let cd = curvature_data_from_jets(&mj);
        let cj = curvature_jets(&mj);
        let direct = divergence_laplacian(&mj, &cj.scalar);
        assert!((cd.lap_r - direct).abs() <= 1e-9 * (1.0 + direct.abs()));

        // Bochner: Δ|E|² = 2 E^{ij} ΔE_ij + 2|∇E|²
        let lap_e2 = divergence_laplacian(&mj, &e_norm_sq_jet(&mj, &cj));
        let bochner = 2.0 * tensor::inner(&cd.traceless, &cd.lap_e, &cd.metric_inv) + 2.0 * cd.norm_grad_e_sq;
        assert!((lap_e2 - bochner).abs() <= 1e-9 * (1.0 + bochner.abs()));
    }
}
