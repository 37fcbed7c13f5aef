//! Gradient descent of `F_t` for periodic metrics on the torus `[0, 2π)³`.
//!
//! Curvature comes from fourth-order central differences. The descent
//! direction is the continuum gradient formula evaluated cell by cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curvature::CurvatureData;
use crate::functionals::{grad_ft, SIGMA2_COUPLING};
use crate::metric::{MetricChart, MetricError};
use crate::tensor::{self, Mat3, Tensor3, Tensor4};

/// Every cell's smallest metric eigenvalue must stay above this.
pub const POSITIVITY_MARGIN: f64 = 0.1;
/// Step-size halvings tried before a step is declared stalled.
pub const MAX_HALVINGS: u32 = 10;
pub const MAX_AMPLITUDE: f64 = 0.05;
/// Largest wavenumber per axis in random initial perturbations.
pub const MAX_WAVENUMBER: i32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("grid resolution must be even and at least 8, got {0}")]
    Resolution(usize),
    #[error("amplitude must lie in [0, {MAX_AMPLITUDE}], got {0}")]
    Amplitude(f64),
    #[error("step size must be positive and finite, got {0}")]
    StepSize(f64),
    #[error("cell {cell} has smallest metric eigenvalue {min_eigenvalue} (margin {POSITIVITY_MARGIN})")]
    Degenerate { cell: usize, min_eigenvalue: f64 },
    #[error("backtracking exhausted after {MAX_HALVINGS} halvings (last step size {eta:e})")]
    Stalled { state: Box<FlowState>, eta: f64, trajectory: Trajectory },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A metric sampled on an `n³` periodic grid, plus descent bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub n: usize,
    pub h: f64,
    /// Cell `(i, j, k)` at `(ih, jh, kh)` lives at index `(i n + j) n + k`.
    pub g_field: Vec<Mat3>,
    pub t: f64,
    pub step: usize,
    pub energy_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
}

/// Curvature at one grid cell from finite differences of the metric.
#[derive(Clone, Debug)]
pub struct CellCurvature {
    pub metric: Mat3,
    pub metric_inv: Mat3,
    pub gamma: Tensor3,
    /// `gamma_partials[m][k][i][j] = ∂_m Γ^k_ij`
    pub gamma_partials: Tensor4,
    pub riemann: Tensor4,
    pub ricci: Mat3,
    pub scalar: f64,
}

/// One row of a flow trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub max_abs_ric: f64,
    #[serde(rename = "max_neg_R")]
    pub max_neg_r: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

fn check_resolution(n: usize) -> Result<(), FlowError> {
    if n < 8 || n % 2 != 0 {
        return Err(FlowError::Resolution(n));
    }
    Ok(())
}

fn pack(g: &Mat3) -> [f64; 6] {
    [g[0][0], g[0][1], g[0][2], g[1][1], g[1][2], g[2][2]]
}

fn unpack(p: &[f64; 6]) -> Mat3 {
    [[p[0], p[1], p[2]], [p[1], p[3], p[4]], [p[2], p[4], p[5]]]
}

/// Periodic difference operators over a field read through `get`, which
/// packs each cell as `[g11, g12, g13, g22, g23, g33]` or `[R11, …, R33, R]`.
struct Stencil<'a, T, const N: usize> {
    n: usize,
    h: f64,
    field: &'a [T],
    get: fn(&T) -> [f64; N],
}

impl<T, const N: usize> Stencil<'_, T, N> {
    fn at(&self, c: [usize; 3], off: [isize; 3]) -> [f64; N] {
        let n = self.n as isize;
        let w = |a: usize| (c[a] as isize + off[a]).rem_euclid(n) as usize;
        (self.get)(&self.field[(w(0) * self.n + w(1)) * self.n + w(2)])
    }

    fn d1(&self, c: [usize; 3], a: usize) -> [f64; N] {
        let mut out = [0.0; N];
        for (s, w) in D1.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let mut off = [0; 3];
            off[a] = s as isize - 2;
            let v = self.at(c, off);
            for q in 0..N {
                out[q] += w * v[q];
            }
        }
        let inv = 1.0 / (12.0 * self.h);
        out.map(|v| v * inv)
    }

    /// `D1_a D1_b`, including `a == b`.
    fn d2(&self, c: [usize; 3], a: usize, b: usize) -> [f64; N] {
        let mut out = [0.0; N];
        for (s, ws) in D1.iter().enumerate() {
            for (r, wr) in D1.iter().enumerate() {
                let w = ws * wr;
                if w == 0.0 {
                    continue;
                }
                let mut off = [0; 3];
                off[a] += s as isize - 2;
                off[b] += r as isize - 2;
                let v = self.at(c, off);
                for q in 0..N {
                    out[q] += w * v[q];
                }
            }
        }
        let inv = 1.0 / (144.0 * self.h * self.h);
        out.map(|v| v * inv)
    }
}

/// Curvature from the metric and its first and second partials,
/// `dg[m] = ∂_m g`, `ddg[m][l] = ∂_m ∂_l g`.
pub fn curvature_from_partials(g: &Mat3, dg: &[Mat3; 3], ddg: &[[Mat3; 3]; 3]) -> Option<CellCurvature> {
    let ginv = tensor::inverse(g)?;
    let dginv: [Mat3; 3] = std::array::from_fn(|m| {
        tensor::scale(&tensor::matmul(&tensor::matmul(&ginv, &dg[m]), &ginv), -1.0)
    });
    // Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut first = [[[0.0; 3]; 3]; 3];
    let mut dfirst = [[[[0.0; 3]; 3]; 3]; 3];
    for l in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                first[l][i][j] = 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                for m in 0..3 {
                    dfirst[m][l][i][j] = 0.5 * (ddg[m][i][j][l] + ddg[m][j][i][l] - ddg[m][l][i][j]);
                }
            }
        }
    }
    let mut gamma = [[[0.0; 3]; 3]; 3];
    let mut gamma_partials = [[[[0.0; 3]; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += ginv[k][l] * first[l][i][j];
                }
                gamma[k][i][j] = s;
                for m in 0..3 {
                    let mut s = 0.0;
                    for l in 0..3 {
                        s += dginv[m][k][l] * first[l][i][j] + ginv[k][l] * dfirst[m][l][i][j];
                    }
                    gamma_partials[m][k][i][j] = s;
                }
            }
        }
    }
    let mut mixed = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    if c == d {
                        continue;
                    }
                    let mut s = gamma_partials[c][a][d][b] - gamma_partials[d][a][c][b];
                    for e in 0..3 {
                        s += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    mixed[a][b][c][d] = s;
                }
            }
        }
    }
    let mut riemann = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    riemann[a][b][c][d] = (0..3).map(|e| g[a][e] * mixed[e][b][c][d]).sum();
                }
            }
        }
    }
    let raw = tensor::from_fn(|b, d| (0..3).map(|a| mixed[a][b][a][d]).sum());
    let ricci = tensor::from_fn(|i, j| 0.5 * (raw[i][j] + raw[j][i]));
    let scalar = tensor::trace(&ricci, &ginv);
    Some(CellCurvature { metric: *g, metric_inv: ginv, gamma, gamma_partials, riemann, ricci, scalar })
}

fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= f64::abs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn min_eigenvalue(g: &Mat3) -> f64 {
    tensor::sym_eigenvalues(g)[0]
}

/// Smallest index of a cell violating the positivity margin.
fn check_positivity(field: &[Mat3]) -> Result<(), FlowError> {
    let bad = field
        .par_iter()
        .enumerate()
        .map(|(cell, g)| (cell, min_eigenvalue(g)))
        .filter(|(_, ev)| !(*ev > POSITIVITY_MARGIN))
        .min_by_key(|(cell, _)| *cell);
    match bad {
        Some((cell, min_eigenvalue)) => Err(FlowError::Degenerate { cell, min_eigenvalue }),
        None => Ok(()),
    }
}

/// Identity plus `amplitude` times a random symmetric field built from
/// Fourier modes with wavenumbers in `[−2, 2]³`. Each component is normalized
/// to a grid maximum of 1, so every eigenvalue stays within `3·amplitude` of 1.
pub fn init_grid(n: usize, amplitude: f64, seed: u64) -> Result<FlowState, FlowError> {
    init_grid_with_t(n, amplitude, seed, SIGMA2_COUPLING)
}

pub fn init_grid_with_t(n: usize, amplitude: f64, seed: u64, t: f64) -> Result<FlowState, FlowError> {
    check_resolution(n)?;
    if !(0.0..=MAX_AMPLITUDE).contains(&amplitude) {
        return Err(FlowError::Amplitude(amplitude));
    }
    let mut state = FlowState::flat(n, t)?;
    if amplitude == 0.0 {
        return Ok(state);
    }
    let pert = random_symmetric_field(n, seed);
    for (g, p) in state.g_field.iter_mut().zip(&pert) {
        *g = tensor::axpy(g, amplitude, p);
    }
    check_positivity(&state.g_field)?;
    Ok(state)
}

/// Band-limited random symmetric field, each component scaled to grid
/// maximum 1.
pub fn random_symmetric_field(n: usize, seed: u64) -> Vec<Mat3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for kx in -MAX_WAVENUMBER..=MAX_WAVENUMBER {
        for ky in -MAX_WAVENUMBER..=MAX_WAVENUMBER {
            for kz in -MAX_WAVENUMBER..=MAX_WAVENUMBER {
                // one representative of each ±k pair
                if (kx, ky, kz) > (0, 0, 0) {
                    modes.push([kx as f64, ky as f64, kz as f64]);
                }
            }
        }
    }
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut comps: Vec<Vec<f64>> = Vec::with_capacity(6);
    for _ in 0..6 {
        let coeffs: Vec<(f64, f64)> =
            modes.iter().map(|_| (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))).collect();
        let mut values: Vec<f64> = (0..n * n * n)
            .into_par_iter()
            .map(|cell| {
                let p = cell_point(n, h, cell);
                modes
                    .iter()
                    .zip(&coeffs)
                    .map(|(k, (a, b))| {
                        let phase = k[0] * p[0] + k[1] * p[1] + k[2] * p[2];
                        a * phase.cos() + b * phase.sin()
                    })
                    .sum()
            })
            .collect();
        let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max > 0.0 {
            values.iter_mut().for_each(|v| *v /= max);
        }
        comps.push(values);
    }
    (0..n * n * n)
        .map(|cell| unpack(&std::array::from_fn(|q| comps[q][cell])))
        .collect()
}

fn cell_point(n: usize, h: f64, cell: usize) -> [f64; 3] {
    let (i, j, k) = (cell / (n * n), (cell / n) % n, cell % n);
    [i as f64 * h, j as f64 * h, k as f64 * h]
}

impl FlowState {
    pub fn flat(n: usize, t: f64) -> Result<Self, FlowError> {
        check_resolution(n)?;
        Ok(FlowState {
            n,
            h: 2.0 * std::f64::consts::PI / n as f64,
            g_field: vec![tensor::identity(); n * n * n],
            t,
            step: 0,
            energy_history: Vec::new(),
            grad_norm_history: Vec::new(),
        })
    }

    /// Samples a chart at the grid points. The chart should be 2π-periodic
    /// in each coordinate.
    pub fn from_chart(chart: &MetricChart, n: usize, t: f64) -> Result<Self, FlowError> {
        let mut state = Self::flat(n, t)?;
        let h = state.h;
        state.g_field = (0..n * n * n)
            .into_par_iter()
            .map(|cell| chart.eval(cell_point(n, h, cell)))
            .collect::<Result<_, _>>()?;
        check_positivity(&state.g_field)?;
        Ok(state)
    }

    pub fn cells(&self) -> usize {
        self.g_field.len()
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn cell_point(&self, cell: usize) -> [f64; 3] {
        cell_point(self.n, self.h, cell)
    }

    /// The same metric shifted periodically by `(di, dj, dk)` cells.
    pub fn shifted(&self, di: usize, dj: usize, dk: usize) -> Self {
        let n = self.n;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let to = self.cell_index((i + di) % n, (j + dj) % n, (k + dk) % n);
                    out.g_field[to] = self.g_field[self.cell_index(i, j, k)];
                }
            }
        }
        out
    }

    fn coords(&self, cell: usize) -> [usize; 3] {
        let n = self.n;
        [cell / (n * n), (cell / n) % n, cell % n]
    }

    /// Finite-difference curvature at one cell.
    pub fn cell_curvature(&self, cell: usize) -> CellCurvature {
        let st = Stencil { n: self.n, h: self.h, field: &self.g_field, get: pack };
        let c = self.coords(cell);
        let g = self.g_field[cell];
        let dg: [Mat3; 3] = std::array::from_fn(|m| unpack(&st.d1(c, m)));
        let ddg: [[Mat3; 3]; 3] = std::array::from_fn(|m| std::array::from_fn(|l| unpack(&st.d2(c, m, l))));
        curvature_from_partials(&g, &dg, &ddg).expect("grid metric stays positive definite")
    }

    fn curvature_field(&self) -> Vec<CellCurvature> {
        (0..self.cells()).into_par_iter().map(|cell| self.cell_curvature(cell)).collect()
    }

    fn energy_of(&self, curv: &[CellCurvature]) -> f64 {
        let dv = self.h.powi(3);
        let t = self.t;
        neumaier_sum(curv.iter().map(|c| {
            let ric2 = tensor::norm_sq(&c.ricci, &c.metric_inv);
            (ric2 + t * c.scalar * c.scalar) * tensor::det(&c.metric).sqrt() * dv
        }))
    }

    /// `Σ (|Ric|² + t R²) √det g h³` over all cells.
    pub fn discrete_energy(&self) -> f64 {
        self.energy_of(&self.curvature_field())
    }

    fn gradient_of(&self, curv: &[CellCurvature]) -> Vec<Mat3> {
        let ricci: Vec<[f64; 7]> = curv
            .iter()
            .map(|c| {
                let p = pack(&c.ricci);
                [p[0], p[1], p[2], p[3], p[4], p[5], c.scalar]
            })
            .collect();
        let st = Stencil { n: self.n, h: self.h, field: &ricci, get: |v: &[f64; 7]| *v };
        (0..self.cells())
            .into_par_iter()
            .map(|cell| {
                let c = self.coords(cell);
                let cc = &curv[cell];
                let d1: [[f64; 7]; 3] = std::array::from_fn(|a| st.d1(c, a));
                let d2: [[[f64; 7]; 3]; 3] = std::array::from_fn(|a| std::array::from_fn(|b| st.d2(c, a, b)));
                let cd = cell_data(cc, &d1, &d2);
                let grad = grad_ft(&cd, self.t);
                tensor::scale(&grad, tensor::det(&cc.metric).sqrt())
            })
            .collect()
    }

    /// Cellwise `(∇F_t)_ij √det g`.
    pub fn discrete_gradient(&self) -> Vec<Mat3> {
        self.gradient_of(&self.curvature_field())
    }

    /// `(Σ_cells ⟨G, δ⟩_g h³)` for a field `G` returned by
    /// [`FlowState::discrete_gradient`].
    pub fn pair(&self, gradient: &[Mat3], direction: &[Mat3]) -> f64 {
        let dv = self.h.powi(3);
        let terms: Vec<f64> = (0..self.cells())
            .into_par_iter()
            .map(|cell| {
                let ginv = tensor::inverse(&self.g_field[cell]).expect("positive definite");
                tensor::inner(&gradient[cell], &direction[cell], &ginv) * dv
            })
            .collect();
        neumaier_sum(terms)
    }

    fn evaluate(&self) -> Evaluation {
        let curv = self.curvature_field();
        let energy = self.energy_of(&curv);
        let gradient = self.gradient_of(&curv);
        let dv = self.h.powi(3);
        let grad_sq = neumaier_sum(curv.iter().zip(&gradient).map(|(c, g)| {
            tensor::norm_sq(g, &c.metric_inv) / tensor::det(&c.metric).sqrt() * dv
        }));
        let max_abs_ric =
            curv.iter().map(|c| tensor::norm_sq(&c.ricci, &c.metric_inv).max(0.0).sqrt()).fold(0.0, f64::max);
        let max_neg_r = curv.iter().map(|c| (-c.scalar).max(0.0)).fold(0.0, f64::max);
        Evaluation { energy, gradient, grad_norm: grad_sq.max(0.0).sqrt(), max_abs_ric, max_neg_r }
    }

    fn with_step(&self, gradient: &[Mat3], eta: f64) -> Vec<Mat3> {
        self.g_field
            .par_iter()
            .zip(gradient)
            .map(|(g, grad)| tensor::axpy(g, -eta / tensor::det(g).sqrt(), grad))
            .collect()
    }

    fn descend(mut self, eval: &Evaluation, eta: f64) -> Result<FlowState, FlowError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(FlowError::StepSize(eta));
        }
        let mut eta_k = eta;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = self.clone();
            trial.g_field = self.with_step(&eval.gradient, eta_k);
            if check_positivity(&trial.g_field).is_ok() {
                let energy = trial.discrete_energy();
                if energy <= eval.energy {
                    self.g_field = trial.g_field;
                    self.step += 1;
                    self.energy_history.push(energy);
                    self.grad_norm_history.push(eval.grad_norm);
                    return Ok(self);
                }
            }
            eta_k *= 0.5;
        }
        Err(FlowError::Stalled { state: Box::new(self), eta: eta_k * 2.0, trajectory: Trajectory::default() })
    }
}

struct Evaluation {
    energy: f64,
    gradient: Vec<Mat3>,
    grad_norm: f64,
    max_abs_ric: f64,
    max_neg_r: f64,
}

/// Assembles [`CurvatureData`] for the gradient formula from cell curvature
/// and partials of the packed `(Ric, R)` field.
fn cell_data(cc: &CellCurvature, d1: &[[f64; 7]; 3], d2: &[[[f64; 7]; 3]; 3]) -> CurvatureData {
    let mut cd = CurvatureData::algebraic([0.0; 3], cc.metric, cc.metric_inv, cc.riemann, cc.ricci);
    cd.scalar = cc.scalar;
    let gam = &cc.gamma;
    let dgam = &cc.gamma_partials;
    let ric = &cc.ricci;
    let dric: [Mat3; 3] = std::array::from_fn(|a| unpack(&std::array::from_fn(|q| d1[a][q])));
    let ddric: [[Mat3; 3]; 3] =
        std::array::from_fn(|a| std::array::from_fn(|b| unpack(&std::array::from_fn(|q| d2[a][b][q]))));
    let dr: [f64; 3] = std::array::from_fn(|a| d1[a][6]);

    // ∇_b R_ij
    let mut nab = [[[0.0; 3]; 3]; 3];
    for b in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = dric[b][i][j];
                for p in 0..3 {
                    s -= gam[p][b][i] * ric[p][j] + gam[p][b][j] * ric[i][p];
                }
                nab[b][i][j] = s;
            }
        }
    }
    let gi = &cc.metric_inv;
    let lap_ric = tensor::from_fn(|i, j| {
        let mut total = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                if gi[a][b] == 0.0 {
                    continue;
                }
                let mut s = ddric[a][b][i][j];
                for p in 0..3 {
                    s -= dgam[a][p][b][i] * ric[p][j] + gam[p][b][i] * dric[a][p][j];
                    s -= dgam[a][p][b][j] * ric[i][p] + gam[p][b][j] * dric[a][i][p];
                    s -= gam[p][a][b] * nab[p][i][j];
                    s -= gam[p][a][i] * nab[b][p][j];
                    s -= gam[p][a][j] * nab[b][i][p];
                }
                total += gi[a][b] * s;
            }
        }
        total
    });
    cd.grad_r = dr;
    cd.hess_r = tensor::from_fn(|a, b| d2[a][b][6] - (0..3).map(|p| gam[p][a][b] * dr[p]).sum::<f64>());
    cd.lap_r = tensor::trace(&cd.hess_r, gi);
    cd.lap_e = tensor::axpy(&lap_ric, -cd.lap_r / 3.0, &cc.metric);
    cd
}

/// One descent step `g ← g − η ∇F_t`, halving `η` until the energy does not
/// increase and the positivity margin holds.
pub fn flow_step(state: FlowState, eta: f64) -> Result<FlowState, FlowError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(FlowError::StepSize(eta));
    }
    let eval = state.evaluate();
    state.descend(&eval, eta)
}

/// Iterates [`flow_step`] until the gradient norm is at most
/// `target_grad_norm` or `max_steps` steps have been taken. Row `k` of the
/// trajectory describes the state after `k` steps. A stalled run returns the
/// last accepted state together with the trajectory so far.
pub fn flow_run(
    state: FlowState,
    max_steps: usize,
    target_grad_norm: f64,
    eta: f64,
) -> Result<(FlowState, Trajectory), FlowError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(FlowError::StepSize(eta));
    }
    let mut state = state;
    let mut traj = Trajectory::default();
    let mut taken = 0;
    loop {
        let eval = state.evaluate();
        traj.rows.push(TrajectoryRow {
            step: state.step,
            energy: eval.energy,
            grad_norm: eval.grad_norm,
            max_abs_ric: eval.max_abs_ric,
            max_neg_r: eval.max_neg_r,
        });
        if eval.grad_norm <= target_grad_norm || taken == max_steps {
            return Ok((state, traj));
        }
        state = match state.descend(&eval, eta) {
            Ok(next) => next,
            Err(FlowError::Stalled { state, eta, .. }) => {
                return Err(FlowError::Stalled { state, eta, trajectory: traj });
            }
            Err(e) => return Err(e),
        };
        taken += 1;
    }
}

/// Default step size for [`flow_run`].
pub const DEFAULT_ETA: f64 = 0.05;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::curvature_data;
    use crate::expr::parse_expr;
    use crate::metric::load_metric_spec;

    #[test]
    fn init_grid_examples() {
        let flat = init_grid(8, 0.0, 3).unwrap();
        assert!(flat.g_field.iter().all(|g| *g == tensor::identity()));
        let s = init_grid(8, 0.01, 7).unwrap();
        let min = s.g_field.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min);
        assert!(min >= 0.9, "{min}");
        assert_ne!(s, flat);
        assert_eq!(init_grid(8, 0.5, 7), Err(FlowError::Amplitude(0.5)));
        assert_eq!(init_grid(7, 0.01, 7), Err(FlowError::Resolution(7)));
        assert_eq!(init_grid(6, 0.01, 7), Err(FlowError::Resolution(6)));
        assert_eq!(init_grid(8, 0.01, 7).unwrap(), s);
    }

    #[test]
    fn flat_is_a_fixed_point() {
        let flat = FlowState::flat(8, SIGMA2_COUPLING).unwrap();
        assert_eq!(flat.discrete_energy(), 0.0);
        assert!(flat.discrete_gradient().iter().all(|g| tensor::max_abs(g) <= 1e-13));
        let next = flow_step(flat.clone(), 0.1).unwrap();
        assert_eq!(next.g_field, flat.g_field);
        assert_eq!(next.energy_history, vec![0.0]);
        let (end, traj) = flow_run(flat, 100, 1e-12, DEFAULT_ETA).unwrap();
        assert_eq!(end.step, 0);
        assert_eq!(traj.rows.len(), 1);
    }

    fn single_mode(n: usize, eps: f64) -> FlowState {
        let chart = load_metric_spec(&format!("g33 = \"1 + {eps}*sin(x)\"")).unwrap();
        FlowState::from_chart(&chart, n, SIGMA2_COUPLING).unwrap()
    }

    #[test]
    fn single_mode_gradient_sits_in_the_perturbed_block() {
        let s = single_mode(16, 0.05);
        let grad = s.discrete_gradient();
        let off = grad.iter().map(|g| g[0][1].abs().max(g[0][2].abs()).max(g[1][2].abs())).fold(0.0, f64::max);
        let on = grad.iter().map(|g| g[2][2].abs()).fold(0.0, f64::max);
        assert!(on > 1e-4, "{on}");
        assert!(off < 1e-14, "{off}");
    }

    #[test]
    fn energy_matches_jet_quadrature() {
        let eps = 0.05;
        let chart = load_metric_spec(&format!("g33 = \"1 + {eps}*sin(x)\"")).unwrap();
        // integrand depends on x only; the periodic trapezoid rule is spectrally accurate
        let m = 256;
        let mut acc = 0.0;
        for i in 0..m {
            let x = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let cd = curvature_data(&chart, [x, 0.0, 0.0]).unwrap();
            let dens = cd.ricci_norm_sq() + SIGMA2_COUPLING * cd.scalar * cd.scalar;
            acc += dens * tensor::det(&cd.metric).sqrt();
        }
        let exact = acc * 2.0 * std::f64::consts::PI / m as f64 * (2.0 * std::f64::consts::PI).powi(2);
        let discrete = single_mode(32, eps).discrete_energy();
        assert!(((discrete - exact) / exact).abs() < 0.02, "{discrete} vs {exact}");
    }

    #[test]
    fn finite_difference_curvature_converges_at_fourth_order() {
        let doc = "g11 = \"1 + 0.1*sin(y)\"\ng12 = \"0.05*cos(z)\"\ng33 = \"1 + 0.1*cos(x)\"";
        let chart = load_metric_spec(doc).unwrap();
        let errors: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let s = FlowState::from_chart(&chart, n, 0.0).unwrap();
                let stride = n / 8;
                let mut worst: f64 = 0.0;
                for i in (0..n).step_by(stride) {
                    for j in (0..n).step_by(stride) {
                        for k in (0..n).step_by(stride) {
                            let cell = s.cell_index(i, j, k);
                            let fd = s.cell_curvature(cell);
                            let cd = curvature_data(&chart, s.cell_point(cell)).unwrap();
                            worst = worst.max((fd.scalar - cd.scalar).abs());
                            worst = worst.max(tensor::max_abs(&tensor::sub(&fd.ricci, &cd.ricci)));
                        }
                    }
                }
                worst
            })
            .collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((3.5..=4.5).contains(&order), "{errors:?}");
        }
    }

    #[test]
    fn curvature_from_partials_matches_jets() {
        let chart = load_metric_spec("g11 = \"1 + x^2\"\ng13 = \"0.2*y*z\"\ng22 = \"exp(0.3*z)\"").unwrap();
        let p = [0.3, -0.2, 0.5];
        let mj = crate::curvature::metric_jets(&chart, p).unwrap();
        let d = |i: usize, j: usize, idx: [u8; 3]| mj.g[i][j].derivative(idx).unwrap();
        let g = mj.metric();
        let dg: [Mat3; 3] = std::array::from_fn(|m| {
            let mut idx = [0u8; 3];
            idx[m] = 1;
            tensor::from_fn(|i, j| d(i, j, idx))
        });
        let ddg: [[Mat3; 3]; 3] = std::array::from_fn(|m| {
            std::array::from_fn(|l| {
                let mut idx = [0u8; 3];
                idx[m] += 1;
                idx[l] += 1;
                tensor::from_fn(|i, j| d(i, j, idx))
            })
        });
        let fd = curvature_from_partials(&g, &dg, &ddg).unwrap();
        let cd = curvature_data(&chart, p).unwrap();
        assert!((fd.scalar - cd.scalar).abs() < 1e-12);
        assert!(tensor::max_abs(&tensor::sub(&fd.ricci, &cd.ricci)) < 1e-12);
    }

    #[test]
    fn gradient_matches_energy_derivative() {
        let s = init_grid(16, 0.01, 3).unwrap();
        let dir = random_symmetric_field(16, 99);
        let predicted = s.pair(&s.discrete_gradient(), &dir);
        let eps = 1e-3;
        let moved = |sign: f64| {
            let mut m = s.clone();
            for (g, d) in m.g_field.iter_mut().zip(&dir) {
                *g = tensor::axpy(g, sign * eps, d);
            }
            m.discrete_energy()
        };
        let measured = (moved(1.0) - moved(-1.0)) / (2.0 * eps);
        assert!(((measured - predicted) / measured).abs() < 1e-3, "{measured} vs {predicted}");
    }

    #[test]
    fn energy_decreases_on_the_first_step() {
        let s = init_grid(8, 0.01, 7).unwrap();
        let e0 = s.discrete_energy();
        let next = flow_step(s, 1e-3).unwrap();
        assert!(next.energy_history[0] < e0);
    }

    #[test]
    fn huge_step_backtracks_or_stalls_without_increase() {
        let s = init_grid(8, 0.01, 7).unwrap();
        let e0 = s.discrete_energy();
        match flow_step(s.clone(), 1e3) {
            Ok(next) => assert!(next.energy_history[0] <= e0),
            Err(FlowError::Stalled { state, .. }) => assert_eq!(*state, s),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn run_is_deterministic_and_monotone() {
        let s = init_grid(8, 0.01, 7).unwrap();
        let (a, ta) = flow_run(s.clone(), 20, 0.0, DEFAULT_ETA).unwrap();
        let (b, tb) = flow_run(s, 20, 0.0, DEFAULT_ETA).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        for w in ta.rows.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
    }

    #[test]
    fn translation_equivariance() {
        let s = init_grid(8, 0.01, 11).unwrap();
        let shifted = s.shifted(1, 0, 0);
        let (a, _) = flow_run(s, 5, 0.0, DEFAULT_ETA).unwrap();
        let (b, _) = flow_run(shifted, 5, 0.0, DEFAULT_ETA).unwrap();
        let a_shift = a.shifted(1, 0, 0);
        let diff = a_shift.g_field.iter().zip(&b.g_field).map(|(x, y)| tensor::max_abs(&tensor::sub(x, y))).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
        assert_eq!(a.step, b.step);
    }

    #[test]
    fn chart_sampling_rejects_degenerate_metrics() {
        let chart = MetricChart::warped("w", parse_expr("0.2*sin(x)").unwrap());
        assert!(FlowState::from_chart(&chart, 8, 0.0).is_err());
    }
}
