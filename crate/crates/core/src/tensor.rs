//! Small fixed-size tensor helpers. Lower indices are the storage default;
//! every contraction takes the inverse metric explicitly.

use nalgebra::{Matrix3, SymmetricEigen};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];
pub type Tensor3 = [[[f64; 3]; 3]; 3];
pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

pub fn identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn zeros() -> Mat3 {
    [[0.0; 3]; 3]
}

pub fn from_fn(f: impl Fn(usize, usize) -> f64) -> Mat3 {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = f(i, j);
        }
    }
    m
}

pub fn transpose(a: &Mat3) -> Mat3 {
    from_fn(|i, j| a[j][i])
}

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    from_fn(|i, j| (0..3).map(|k| a[i][k] * b[k][j]).sum())
}

pub fn add(a: &Mat3, b: &Mat3) -> Mat3 {
    from_fn(|i, j| a[i][j] + b[i][j])
}

pub fn sub(a: &Mat3, b: &Mat3) -> Mat3 {
    from_fn(|i, j| a[i][j] - b[i][j])
}

pub fn scale(a: &Mat3, s: f64) -> Mat3 {
    from_fn(|i, j| s * a[i][j])
}

/// `a + s * b`
pub fn axpy(a: &Mat3, s: f64, b: &Mat3) -> Mat3 {
    from_fn(|i, j| a[i][j] + s * b[i][j])
}

pub fn trace_plain(a: &Mat3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Inverse by cofactors; `None` if the determinant vanishes.
pub fn inverse(a: &Mat3) -> Option<Mat3> {
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]
    };
    Some(from_fn(|i, j| c(j, i) / d))
}

/// Sylvester's criterion on the leading principal minors.
pub fn is_positive_definite(a: &Mat3) -> bool {
    let m1 = a[0][0];
    let m2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    m1 > 0.0 && m2 > 0.0 && det(a) > 0.0
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &Mat3) -> Vec3 {
    let m = Matrix3::from_fn(|i, j| 0.5 * (a[i][j] + a[j][i]));
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    [ev[0], ev[1], ev[2]]
}

/// `g^{ij} T_ij`
pub fn trace(t: &Mat3, ginv: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += ginv[i][j] * t[i][j];
        }
    }
    s
}

/// `S_ij T^ij` with both indices raised by `ginv`.
pub fn inner(s: &Mat3, t: &Mat3, ginv: &Mat3) -> f64 {
    let t_up = matmul(&matmul(ginv, t), ginv);
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += s[i][j] * t_up[i][j];
        }
    }
    acc
}

pub fn norm_sq(t: &Mat3, ginv: &Mat3) -> f64 {
    inner(t, t, ginv)
}

/// `A_ip B_jp` with the contracted index raised: `A g^{-1} Bᵀ`.
pub fn contract_middle(a: &Mat3, b: &Mat3, ginv: &Mat3) -> Mat3 {
    matmul(&matmul(a, ginv), &transpose(b))
}

/// `A_ip B_pq C_qi` fully contracted, for symmetric arguments.
pub fn triple_trace(a: &Mat3, b: &Mat3, c: &Mat3, ginv: &Mat3) -> f64 {
    let ma = matmul(ginv, a);
    let mb = matmul(ginv, b);
    let mc = matmul(ginv, c);
    trace_plain(&matmul(&matmul(&ma, &mb), &mc))
}

/// `R_{ikjl} T^{kl}` for a fully lowered curvature tensor.
pub fn curvature_contract(rm: &Tensor4, t: &Mat3, ginv: &Mat3) -> Mat3 {
    let t_up = matmul(&matmul(ginv, t), ginv);
    from_fn(|i, j| {
        let mut s = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                s += rm[i][k][j][l] * t_up[k][l];
            }
        }
        s
    })
}

/// `|v|²` for a covector.
pub fn covector_norm_sq(v: &Vec3, ginv: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += ginv[i][j] * v[i] * v[j];
        }
    }
    s
}

/// `T_{kij} T^{kij}` for a 3-tensor with all indices lowered.
pub fn tensor3_norm_sq(t: &Tensor3, ginv: &Mat3) -> f64 {
    let mut up = [[[0.0; 3]; 3]; 3];
    for (k, slab) in up.iter_mut().enumerate() {
        for (i, row) in slab.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            s += ginv[k][a] * ginv[i][b] * ginv[j][c] * t[a][b][c];
                        }
                    }
                }
                *v = s;
            }
        }
    }
    let mut acc = 0.0;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                acc += t[k][i][j] * up[k][i][j];
            }
        }
    }
    acc
}

pub fn max_abs(a: &Mat3) -> f64 {
    a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let a = [[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 0.9]];
        let inv = inverse(&a).unwrap();
        let id = matmul(&a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[i][j] - e).abs() < 1e-14);
            }
        }
        assert!(inverse(&zeros()).is_none());
    }

    #[test]
    fn positive_definite_and_eigen() {
        assert!(is_positive_definite(&identity()));
        assert!(!is_positive_definite(&[[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]));
        assert_eq!(sym_eigenvalues(&[[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]), [-1.0, 1.0, 3.0]);
    }

    #[test]
    fn contractions_in_non_euclidean_metric() {
        // g = diag(1, 4, 9): |dx ⊗ dx|² = 1, |dy ⊗ dy|² = 1/16
        let ginv = [[1.0, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 1.0 / 9.0]];
        let mut t = zeros();
        t[1][1] = 1.0;
        assert!((norm_sq(&t, &ginv) - 1.0 / 16.0).abs() < 1e-15);
        assert!((trace(&t, &ginv) - 0.25).abs() < 1e-15);
        assert!((triple_trace(&t, &t, &t, &ginv) - 1.0 / 64.0).abs() < 1e-15);
    }
}
