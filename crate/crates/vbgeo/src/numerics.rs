//! Small dense tensors and the finite-difference engine shared by charts,
//! bundles and the curvature oracle.
//!
//! Index conventions used throughout the crate:
//! - `Tensor3` as Christoffel storage: `t.get(k, i, j)` is the symbol with
//!   upper index `k`.
//! - `Tensor4` as Riemann storage: `r.get(i, j, k, l)` equals
//!   `-g(R(d_i, d_j) d_k, d_l)` with `R(X,Y) = [nab_X, nab_Y] - nab_[X,Y]`,
//!   so `r.get(i, j, i, j) > 0` on positively curved coordinate planes.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct Tensor3 {
    d0: usize,
    d1: usize,
    d2: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Tensor3 { d0, d1, d2, data: vec![0.0; d0 * d1 * d2] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.d1 + j) * self.d2 + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.d1 + j) * self.d2 + k] = v;
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d0, self.d1, self.d2)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct Tensor4 {
    d0: usize,
    d1: usize,
    d2: usize,
    d3: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(d0: usize, d1: usize, d2: usize, d3: usize) -> Self {
        Tensor4 { d0, d1, d2, d3, data: vec![0.0; d0 * d1 * d2 * d3] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.d1 + j) * self.d2 + k) * self.d3 + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[((i * self.d1 + j) * self.d2 + k) * self.d3 + l] = v;
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.d0, self.d1, self.d2, self.d3)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Per-coordinate step for central differences: `base` scaled by the local
/// coordinate magnitude.
pub fn fd_step(base: f64, x: f64) -> f64 {
    base * x.abs().max(1.0)
}

/// First derivatives of a matrix-valued map by central differences.
/// Returns `t.get(c, a, b) = d_c f(x)[a][b]`.
pub fn fd_dmatrix<F>(f: &F, x: &[f64], base_step: f64) -> Tensor3
where
    F: Fn(&[f64]) -> DMatrix<f64> + ?Sized,
{
    let n = x.len();
    let probe = f(x);
    let (ra, rb) = (probe.nrows(), probe.ncols());
    let mut out = Tensor3::zeros(n, ra, rb);
    let mut xp = x.to_vec();
    for c in 0..n {
        let h = fd_step(base_step, x[c]);
        xp[c] = x[c] + h;
        let fp = f(&xp);
        xp[c] = x[c] - h;
        let fm = f(&xp);
        xp[c] = x[c];
        for a in 0..ra {
            for b in 0..rb {
                out.set(c, a, b, (fp[(a, b)] - fm[(a, b)]) / (2.0 * h));
            }
        }
    }
    out
}

/// Christoffel symbols of a metric closure at `x`:
/// `Gamma^k_{ij} = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)`.
pub fn christoffel_of_metric<F>(metric: &F, x: &[f64], base_step: f64) -> Tensor3
where
    F: Fn(&[f64]) -> DMatrix<f64> + ?Sized,
{
    let g = metric(x);
    let dg = fd_dmatrix(metric, x, base_step);
    christoffel_from_parts(&g, &dg)
}

/// Christoffel symbols from the metric and its first derivatives.
pub fn christoffel_from_parts(g: &DMatrix<f64>, dg: &Tensor3) -> Tensor3 {
    let n = g.nrows();
    let ginv = g
        .clone()
        .try_inverse()
        .expect("metric must be invertible at evaluation points");
    let mut gamma = Tensor3::zeros(n, n, n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut v = 0.0;
                for l in 0..n {
                    v += ginv[(k, l)] * (dg.get(i, l, j) + dg.get(j, l, i) - dg.get(l, i, j));
                }
                v *= 0.5;
                gamma.set(k, i, j, v);
                gamma.set(k, j, i, v);
            }
        }
    }
    gamma
}

/// Riemann tensor (storage convention of this module) from a Christoffel
/// closure, differencing the symbols with step `base_step`.
pub fn riemann_of_christoffel<F, G>(
    christoffel: &F,
    metric: &G,
    x: &[f64],
    base_step: f64,
) -> Tensor4
where
    F: Fn(&[f64]) -> Tensor3 + ?Sized,
    G: Fn(&[f64]) -> DMatrix<f64> + ?Sized,
{
    let n = x.len();
    let g = metric(x);
    let gamma = christoffel(x);
    // dgamma.get(c, k, i, j) = d_c Gamma^k_{ij}
    let mut dgamma = Tensor4::zeros(n, n, n, n);
    let mut xp = x.to_vec();
    for c in 0..n {
        let h = fd_step(base_step, x[c]);
        xp[c] = x[c] + h;
        let gp = christoffel(&xp);
        xp[c] = x[c] - h;
        let gm = christoffel(&xp);
        xp[c] = x[c];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dgamma.set(c, k, i, j, (gp.get(k, i, j) - gm.get(k, i, j)) / (2.0 * h));
                }
            }
        }
    }
    riemann_from_parts(&g, &gamma, &dgamma)
}

/// Lowered Riemann tensor in the crate storage convention
/// (`R_{ijkl} = -g(R(d_i,d_j)d_k, d_l)`).
pub fn riemann_from_parts(g: &DMatrix<f64>, gamma: &Tensor3, dgamma: &Tensor4) -> Tensor4 {
    let n = g.nrows();
    let mut out = Tensor4::zeros(n, n, n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                // operator component (R(d_i,d_j) d_k)^q
                let mut up = vec![0.0; n];
                for q in 0..n {
                    let mut v = dgamma.get(i, q, j, k) - dgamma.get(j, q, i, k);
                    for p in 0..n {
                        v += gamma.get(p, j, k) * gamma.get(q, i, p)
                            - gamma.get(p, i, k) * gamma.get(q, j, p);
                    }
                    up[q] = v;
                }
                for l in 0..n {
                    let mut low = 0.0;
                    for q in 0..n {
                        low += g[(l, q)] * up[q];
                    }
                    out.set(i, j, k, l, -low);
                    out.set(j, i, k, l, low);
                }
            }
        }
    }
    out
}

/// Full finite-difference Riemann tensor of a metric closure. `h_metric`
/// feeds the Christoffel differencing, `h_gamma` the Riemann differencing.
pub fn fd_riemann_of_metric<F>(metric: &F, x: &[f64], h_metric: f64, h_gamma: f64) -> Tensor4
where
    F: Fn(&[f64]) -> DMatrix<f64> + Sync + ?Sized,
{
    let gamma_fn = |p: &[f64]| christoffel_of_metric(metric, p, h_metric);
    riemann_of_christoffel(&gamma_fn, metric, x, h_gamma)
}

/// Ricci tensor from the stored Riemann convention:
/// `ric_{jk} = -g^{il} R_{ijkl}`.
pub fn ricci_from_riemann(g: &DMatrix<f64>, riem: &Tensor4) -> DMatrix<f64> {
    let n = g.nrows();
    let ginv = g.clone().try_inverse().expect("metric invertible");
    let mut ric = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let mut v = 0.0;
            for i in 0..n {
                for l in 0..n {
                    v -= ginv[(i, l)] * riem.get(i, j, k, l);
                }
            }
            ric[(j, k)] = v;
        }
    }
    ric
}

pub fn scalar_from_ricci(g: &DMatrix<f64>, ric: &DMatrix<f64>) -> f64 {
    let ginv = g.clone().try_inverse().expect("metric invertible");
    let n = g.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for k in 0..n {
            s += ginv[(j, k)] * ric[(j, k)];
        }
    }
    s
}

/// Gram-Schmidt on the coordinate basis in fixed column order. Returns `F`
/// with `F^T g F = I`; column `a` holds the coordinate components of the
/// a-th frame vector.
pub fn gram_schmidt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut f = DMatrix::<f64>::identity(n, n);
    for a in 0..n {
        let mut col = f.column(a).clone_owned();
        for b in 0..a {
            let prev = f.column(b).clone_owned();
            let proj = (g * &col).dot(&prev);
            col -= prev * proj;
        }
        let norm2 = (g * &col).dot(&col);
        assert!(norm2 > 0.0, "metric not positive definite in gram_schmidt");
        col /= norm2.sqrt();
        f.set_column(a, &col);
    }
    f
}

/// Max-norm of a matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}
