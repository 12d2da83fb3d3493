//! The weighted metric on the total space: horizontal/vertical splitting,
//! metric assembly in coordinates, the correction tensors C, A and
//! `calR = pi* R^E( , ) xi`, and the Levi-Civita connection in component
//! form. Also the Musso-Tricerri and generalized Bergery variants with the
//! conformal-equivalence check.
//!
//! All brackets `< , >_M`, `< , >_E` and the duality `xi_flat` are taken in
//! the unweighted pullback metrics; the weights enter only through explicit
//! `e^{2 phi}` factors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::numerics::{Tensor3, Tensor4};
use crate::scenario::Scene;
use crate::weights::ConnectionCoefficients;
use crate::{Error, Result};

/// Point of the total space: base coordinates plus fibre coordinates in the
/// orthonormal bundle frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalPoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl TotalPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> TotalPoint {
        TotalPoint { x: DVector::from_vec(x), y: DVector::from_vec(y) }
    }

    pub fn zero_section(x: Vec<f64>, k: usize) -> TotalPoint {
        TotalPoint { x: DVector::from_vec(x), y: DVector::zeros(k) }
    }

    /// Squared fibre norm.
    pub fn r(&self) -> f64 {
        self.y.norm_squared()
    }
}

/// Tangent vector in the horizontal + vertical frame
/// `(pi* d_i, pi* e_alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVector {
    pub h: DVector<f64>,
    pub v: DVector<f64>,
}

impl SplitVector {
    pub fn new(h: Vec<f64>, v: Vec<f64>) -> SplitVector {
        SplitVector { h: DVector::from_vec(h), v: DVector::from_vec(v) }
    }

    pub fn zeros(m: usize, k: usize) -> SplitVector {
        SplitVector { h: DVector::zeros(m), v: DVector::zeros(k) }
    }

    pub fn horizontal(h: DVector<f64>, k: usize) -> SplitVector {
        SplitVector { v: DVector::zeros(k), h }
    }

    pub fn vertical(m: usize, v: DVector<f64>) -> SplitVector {
        SplitVector { h: DVector::zeros(m), v }
    }

    /// The tautological field at a point.
    pub fn xi(point: &TotalPoint, m: usize) -> SplitVector {
        SplitVector { h: DVector::zeros(m), v: point.y.clone() }
    }

    pub fn scale(&self, c: f64) -> SplitVector {
        SplitVector { h: &self.h * c, v: &self.v * c }
    }

    pub fn add(&self, other: &SplitVector) -> SplitVector {
        SplitVector { h: &self.h + &other.h, v: &self.v + &other.v }
    }

    pub fn max_abs(&self) -> f64 {
        self.h
            .iter()
            .chain(self.v.iter())
            .fold(0.0_f64, |acc, t| acc.max(t.abs()))
    }
}

/// Metric at a point in both the coordinate frame `(d_i, d_{y^alpha})` and
/// the split frame; the two are congruent via the splitting map.
#[derive(Debug, Clone)]
pub struct MetricAtPoint {
    pub coord: DMatrix<f64>,
    pub split: DMatrix<f64>,
}

/// Vector field data at a point: split components plus the Jacobian of the
/// coordinate-frame components with respect to `(x, y)`. Derivatives of the
/// splitting itself are handled internally.
#[derive(Debug, Clone)]
pub struct FieldJet {
    pub value: SplitVector,
    pub jacobian: DMatrix<f64>,
}

impl FieldJet {
    /// A field with constant coordinate components.
    pub fn constant_coord(scene: &Scene, point: &TotalPoint, coord: &DVector<f64>) -> FieldJet {
        let n = scene.dim_total();
        FieldJet { value: split(scene, point, coord), jacobian: DMatrix::zeros(n, n) }
    }

    /// The tautological field `xi`.
    pub fn xi(scene: &Scene, point: &TotalPoint) -> FieldJet {
        let (m, k) = (scene.m(), scene.k());
        let n = m + k;
        let mut j = DMatrix::zeros(n, n);
        for beta in 0..k {
            j[(m + beta, m + beta)] = 1.0;
        }
        FieldJet { value: SplitVector::xi(point, m), jacobian: j }
    }

    /// Build a jet from a closure giving coordinate components, with the
    /// Jacobian by central differences.
    pub fn from_coord_fn(
        scene: &Scene,
        point: &TotalPoint,
        f: &dyn Fn(&TotalPoint) -> DVector<f64>,
    ) -> FieldJet {
        let n = scene.dim_total();
        let m = scene.m();
        let mut jac = DMatrix::zeros(n, n);
        let mut q = point.clone();
        for c in 0..n {
            let h = 1e-6;
            bump(&mut q, m, c, h);
            let fp = f(&q);
            bump(&mut q, m, c, -2.0 * h);
            let fm = f(&q);
            bump(&mut q, m, c, h);
            for a in 0..n {
                jac[(a, c)] = (fp[a] - fm[a]) / (2.0 * h);
            }
        }
        FieldJet { value: split(scene, point, &f(point)), jacobian: jac }
    }
}

fn bump(p: &mut TotalPoint, m: usize, c: usize, h: f64) {
    if c < m {
        p.x[c] += h;
    } else {
        p.y[c - m] += h;
    }
}

/// Per-point evaluation context shared by the total-space operations.
pub(crate) struct Ctx {
    pub m: usize,
    pub k: usize,
    pub r: f64,
    pub e1: f64,
    pub e2: f64,
    /// `e^{2(phi2 - phi1)}`
    pub e2diff: f64,
    pub coef: ConnectionCoefficients,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub sym_m: Tensor3,
    pub gam_e: Tensor3,
    pub r_e: Tensor4,
    /// `GY[(beta, i)] = y^alpha Gamma^{E,beta}_{i alpha}`
    pub gy: DMatrix<f64>,
}

pub(crate) fn ctx(scene: &Scene, p: &TotalPoint) -> Result<Ctx> {
    check_point(scene, p)?;
    let (m, k) = (scene.m(), scene.k());
    let r = p.r();
    let x = p.x.as_slice();
    let coef = scene.weights.coefficients(r)?;
    let g = scene.chart.metric(x);
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular base metric".into()))?;
    let gam_e = scene.bundle.gamma(x);
    let r_e = scene.bundle.curvature(x);
    let gy = gamma_y(&gam_e, &p.y, m, k);
    Ok(Ctx {
        m,
        k,
        r,
        e1: scene.weights.e2phi1(r),
        e2: scene.weights.e2phi2(r),
        e2diff: (2.0 * (scene.weights.phi2(r) - scene.weights.phi1(r))).exp(),
        coef,
        g,
        ginv,
        sym_m: scene.chart.christoffel(x),
        gam_e,
        r_e,
        gy,
    })
}

pub fn check_point(scene: &Scene, p: &TotalPoint) -> Result<()> {
    scene.chart.check_interior(p.x.as_slice())?;
    scene.weights.check_domain(p.r())
}

fn gamma_y(gam_e: &Tensor3, y: &DVector<f64>, m: usize, k: usize) -> DMatrix<f64> {
    let mut gy = DMatrix::zeros(k, m);
    for beta in 0..k {
        for i in 0..m {
            let mut v = 0.0;
            for alpha in 0..k {
                v += y[alpha] * gam_e.get(i, alpha, beta);
            }
            gy[(beta, i)] = v;
        }
    }
    gy
}

/// Decompose a coordinate-frame vector into the split frame.
pub fn split(scene: &Scene, p: &TotalPoint, coord: &DVector<f64>) -> SplitVector {
    let (m, k) = (scene.m(), scene.k());
    let gam_e = scene.bundle.gamma(p.x.as_slice());
    let gy = gamma_y(&gam_e, &p.y, m, k);
    split_with(&gy, m, k, coord)
}

pub(crate) fn split_with(gy: &DMatrix<f64>, m: usize, k: usize, coord: &DVector<f64>) -> SplitVector {
    let h = coord.rows(0, m).clone_owned();
    let mut v = coord.rows(m, k).clone_owned();
    for beta in 0..k {
        for i in 0..m {
            v[beta] += coord[i] * gy[(beta, i)];
        }
    }
    SplitVector { h, v }
}

/// Inverse of [`split`].
pub fn unsplit(scene: &Scene, p: &TotalPoint, sv: &SplitVector) -> DVector<f64> {
    let (m, k) = (scene.m(), scene.k());
    let gam_e = scene.bundle.gamma(p.x.as_slice());
    let gy = gamma_y(&gam_e, &p.y, m, k);
    unsplit_with(&gy, m, k, sv)
}

pub(crate) fn unsplit_with(gy: &DMatrix<f64>, m: usize, k: usize, sv: &SplitVector) -> DVector<f64> {
    let mut coord = DVector::zeros(m + k);
    for i in 0..m {
        coord[i] = sv.h[i];
    }
    for beta in 0..k {
        let mut v = sv.v[beta];
        for i in 0..m {
            v -= sv.h[i] * gy[(beta, i)];
        }
        coord[m + beta] = v;
    }
    coord
}

/// Unweighted pullback brackets and the xi-duality.
pub(crate) fn inner_m(c: &Ctx, a: &SplitVector, b: &SplitVector) -> f64 {
    (&c.g * &b.h).dot(&a.h)
}

pub(crate) fn inner_e(a: &SplitVector, b: &SplitVector) -> f64 {
    a.v.dot(&b.v)
}

pub(crate) fn xi_flat(p: &TotalPoint, a: &SplitVector) -> f64 {
    p.y.dot(&a.v)
}

/// Weighted metric value on split vectors.
pub fn metric_value(scene: &Scene, p: &TotalPoint, a: &SplitVector, b: &SplitVector) -> Result<f64> {
    let c = ctx(scene, p)?;
    Ok(c.e1 * inner_m(&c, a, b) + c.e2 * inner_e(a, b))
}

/// Assemble the metric matrix in the coordinate frame and the split frame.
pub fn assemble_metric(scene: &Scene, p: &TotalPoint) -> Result<MetricAtPoint> {
    let c = ctx(scene, p)?;
    Ok(assemble_from_ctx(&c))
}

pub(crate) fn assemble_from_ctx(c: &Ctx) -> MetricAtPoint {
    let (m, k) = (c.m, c.k);
    let n = m + k;
    let mut coord = DMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let mut v = c.e1 * c.g[(i, j)];
            for beta in 0..k {
                v += c.e2 * c.gy[(beta, i)] * c.gy[(beta, j)];
            }
            coord[(i, j)] = v;
        }
        for beta in 0..k {
            let v = c.e2 * c.gy[(beta, i)];
            coord[(i, m + beta)] = v;
            coord[(m + beta, i)] = v;
        }
    }
    for alpha in 0..k {
        coord[(m + alpha, m + alpha)] = c.e2;
    }
    let mut split = DMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            split[(i, j)] = c.e1 * c.g[(i, j)];
        }
    }
    for alpha in 0..k {
        split[(m + alpha, m + alpha)] = c.e2;
    }
    MetricAtPoint { coord, split }
}

/// The symmetric correction tensor
/// `C_X Y = a (xi^b(X) Y^h + xi^b(Y) X^h) + c1 <X,Y>_M xi + c2 <X,Y>_E xi
///  + b (xi^b(X) Y^v + xi^b(Y) X^v)`.
pub fn tensor_c(scene: &Scene, p: &TotalPoint, x: &SplitVector, y: &SplitVector) -> Result<SplitVector> {
    let c = ctx(scene, p)?;
    Ok(tensor_c_ctx(&c, p, x, y))
}

pub(crate) fn tensor_c_ctx(c: &Ctx, p: &TotalPoint, x: &SplitVector, y: &SplitVector) -> SplitVector {
    let xb_x = xi_flat(p, x);
    let xb_y = xi_flat(p, y);
    let h = (&y.h * xb_x + &x.h * xb_y) * c.coef.a;
    let radial = c.coef.c1 * inner_m(c, x, y) + c.coef.c2 * inner_e(x, y);
    let v = &p.y * radial + (&y.v * xb_x + &x.v * xb_y) * c.coef.b;
    SplitVector { h, v }
}

/// `calR(X, Y) = pi* R^E(X^h, Y^h) xi`, vertical-valued and skew.
pub fn cal_r(scene: &Scene, p: &TotalPoint, x: &SplitVector, y: &SplitVector) -> Result<SplitVector> {
    let c = ctx(scene, p)?;
    Ok(cal_r_ctx(&c, p, x, y))
}

pub(crate) fn cal_r_ctx(c: &Ctx, p: &TotalPoint, x: &SplitVector, y: &SplitVector) -> SplitVector {
    let mut v = DVector::zeros(c.k);
    for beta in 0..c.k {
        let mut acc = 0.0;
        for alpha in 0..c.k {
            let ya = p.y[alpha];
            if ya == 0.0 {
                continue;
            }
            for i in 0..c.m {
                for j in 0..c.m {
                    acc += x.h[i] * y.h[j] * c.r_e.get(beta, alpha, i, j) * ya;
                }
            }
        }
        v[beta] = acc;
    }
    SplitVector { h: DVector::zeros(c.m), v }
}

/// The horizontal-valued symmetric tensor A defined by
/// `e^{2 phi1} <A(X,Y), Z>_M =
///  e^{2 phi2}/2 (<calR(X,Z), Y>_E + <calR(Y,Z), X>_E)`.
pub fn tensor_a(scene: &Scene, p: &TotalPoint, x: &SplitVector, y: &SplitVector) -> Result<SplitVector> {
    let c = ctx(scene, p)?;
    Ok(tensor_a_ctx(&c, p, x, y))
}

pub(crate) fn tensor_a_ctx(c: &Ctx, p: &TotalPoint, x: &SplitVector, y: &SplitVector) -> SplitVector {
    // omega_j = e^{2(phi2-phi1)}/2 *
    //   sum_{i,alpha,beta} y^alpha (X^h_i Y^v_beta + Y^h_i X^v_beta) R^E_{beta alpha i j}
    let mut omega = DVector::zeros(c.m);
    for j in 0..c.m {
        let mut acc = 0.0;
        for alpha in 0..c.k {
            let ya = p.y[alpha];
            if ya == 0.0 {
                continue;
            }
            for beta in 0..c.k {
                for i in 0..c.m {
                    acc += ya
                        * (x.h[i] * y.v[beta] + y.h[i] * x.v[beta])
                        * c.r_e.get(beta, alpha, i, j);
                }
            }
        }
        omega[j] = 0.5 * c.e2diff * acc;
    }
    SplitVector { h: &c.ginv * omega, v: DVector::zeros(c.k) }
}

/// Covariant derivative `nabla_X Y` of the weighted metric, from the four
/// component equations for the split frame directions.
pub fn levi_civita(scene: &Scene, p: &TotalPoint, x: &SplitVector, yf: &FieldJet) -> Result<SplitVector> {
    let c = ctx(scene, p)?;
    let dgam_e = scene.bundle.dgamma(p.x.as_slice());
    Ok(levi_civita_ctx(&c, &dgam_e, p, x, yf))
}

pub(crate) fn levi_civita_ctx(
    c: &Ctx,
    dgam_e: &Tensor4,
    p: &TotalPoint,
    x: &SplitVector,
    yf: &FieldJet,
) -> SplitVector {
    let (m, k) = (c.m, c.k);
    let jac = &yf.jacobian;
    let yh = &yf.value.h;
    let bv = &yf.value.v;
    let u = unsplit_with(&c.gy, m, k, &yf.value);
    let ydotb = p.y.dot(bv);

    // split-component partials of B^alpha = u^{m+alpha} + u^j y^gamma G^{E,alpha}_{j gamma}
    // db_dx[(i, alpha)] and db_dy[(beta, alpha)]
    let mut db_dx = DMatrix::<f64>::zeros(m, k);
    for i in 0..m {
        for alpha in 0..k {
            let mut v = jac[(m + alpha, i)];
            for j in 0..m {
                v += jac[(j, i)] * c.gy[(alpha, j)];
                let mut dgy = 0.0;
                for gamma in 0..k {
                    dgy += p.y[gamma] * dgam_e.get(i, j, gamma, alpha);
                }
                v += u[j] * dgy;
            }
            db_dx[(i, alpha)] = v;
        }
    }
    let mut db_dy = DMatrix::<f64>::zeros(k, k);
    for beta in 0..k {
        for alpha in 0..k {
            let mut v = jac[(m + alpha, m + beta)];
            for j in 0..m {
                v += jac[(j, m + beta)] * c.gy[(alpha, j)] + u[j] * c.gam_e.get(j, beta, alpha);
            }
            db_dy[(beta, alpha)] = v;
        }
    }

    // directional derivative along pi* d_i of a split-component function,
    // given its x- and y-partials
    let dir_h = |i: usize, ddx: f64, ddy: &dyn Fn(usize) -> f64| -> f64 {
        let mut v = ddx;
        for beta in 0..k {
            v -= c.gy[(beta, i)] * ddy(beta);
        }
        v
    };

    let mut out_h = DVector::zeros(m);
    let mut out_v = DVector::zeros(k);

    // contributions of the horizontal directions X^h_i
    for i in 0..m {
        let xi_h = x.h[i];
        if xi_h == 0.0 {
            continue;
        }
        for q in 0..m {
            let dyq = dir_h(i, jac[(q, i)], &|beta| jac[(q, m + beta)]);
            let mut v = dyq;
            for l in 0..m {
                v += yh[l] * c.sym_m.get(q, i, l);
            }
            if q == i {
                v += c.coef.a * ydotb;
            }
            let mut curv = 0.0;
            for alpha in 0..k {
                let ya = p.y[alpha];
                if ya == 0.0 {
                    continue;
                }
                for beta in 0..k {
                    for j in 0..m {
                        curv += ya * bv[beta] * c.r_e.get(beta, alpha, i, j) * c.ginv[(j, q)];
                    }
                }
            }
            v += 0.5 * c.e2diff * curv;
            out_h[q] += xi_h * v;
        }
        for alpha in 0..k {
            let dba = dir_h(i, db_dx[(i, alpha)], &|beta| db_dy[(beta, alpha)]);
            let mut v = dba;
            for beta in 0..k {
                v += bv[beta] * c.gam_e.get(i, beta, alpha);
            }
            let gdotyh: f64 = (0..m).map(|j| c.g[(i, j)] * yh[j]).sum();
            v += c.coef.c1 * p.y[alpha] * gdotyh;
            let mut curv = 0.0;
            for j in 0..m {
                if yh[j] == 0.0 {
                    continue;
                }
                for beta in 0..k {
                    curv += yh[j] * p.y[beta] * c.r_e.get(alpha, beta, i, j);
                }
            }
            v -= 0.5 * curv;
            out_v[alpha] += xi_h * v;
        }
    }

    // contributions of the vertical directions X^v_beta
    for beta in 0..k {
        let xv = x.v[beta];
        if xv == 0.0 {
            continue;
        }
        for q in 0..m {
            let mut v = jac[(q, m + beta)] + c.coef.a * p.y[beta] * yh[q];
            let mut curv = 0.0;
            for alpha in 0..k {
                let ya = p.y[alpha];
                if ya == 0.0 {
                    continue;
                }
                for j in 0..m {
                    for l in 0..m {
                        curv += ya * yh[j] * c.r_e.get(beta, alpha, j, l) * c.ginv[(l, q)];
                    }
                }
            }
            v += 0.5 * c.e2diff * curv;
            out_h[q] += xv * v;
        }
        for alpha in 0..k {
            let mut v = db_dy[(beta, alpha)]
                + c.coef.c2 * bv[beta] * p.y[alpha]
                + c.coef.b * p.y[beta] * bv[alpha];
            if alpha == beta {
                v += c.coef.b * ydotb;
            }
            out_v[alpha] += xv * v;
        }
    }

    SplitVector { h: out_h, v: out_v }
}

/// Lie derivative of the weighted metric along the field X, evaluated on
/// `(Y, Z)`. Vanishes exactly when X is Killing.
pub fn killing_residual(
    scene: &Scene,
    p: &TotalPoint,
    xf: &FieldJet,
    yv: &SplitVector,
    zv: &SplitVector,
) -> Result<f64> {
    let c = ctx(scene, p)?;
    let dgam_e = scene.bundle.dgamma(p.x.as_slice());
    let dg = scene.chart.dmetric(p.x.as_slice());
    let (m, k) = (c.m, c.k);
    let n = m + k;
    let jac = &xf.jacobian;
    let u = unsplit_with(&c.gy, m, k, &xf.value);
    let xh = &xf.value.h;
    let xv = &xf.value.v;

    // coordinate components of Y and Z
    let yc = unsplit_with(&c.gy, m, k, yv);
    let zc = unsplit_with(&c.gy, m, k, zv);

    // --- coordinate data of the two degenerate pullback tensors ---
    // T_M: [[g, 0], [0, 0]],  T_E: [[GY^T GY, GY^T], [GY, I]]
    let mut t_m = DMatrix::<f64>::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            t_m[(i, j)] = c.g[(i, j)];
        }
    }
    let mut t_e = DMatrix::<f64>::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let mut v = 0.0;
            for beta in 0..k {
                v += c.gy[(beta, i)] * c.gy[(beta, j)];
            }
            t_e[(i, j)] = v;
        }
        for beta in 0..k {
            t_e[(i, m + beta)] = c.gy[(beta, i)];
            t_e[(m + beta, i)] = c.gy[(beta, i)];
        }
    }
    for alpha in 0..k {
        t_e[(m + alpha, m + alpha)] = 1.0;
    }

    // d_C GY[(beta, i)] for all n coordinate directions
    let dgy = |cc: usize, beta: usize, i: usize| -> f64 {
        if cc < m {
            let mut v = 0.0;
            for gamma in 0..k {
                v += p.y[gamma] * dgam_e.get(cc, i, gamma, beta);
            }
            v
        } else {
            c.gam_e.get(i, cc - m, beta)
        }
    };

    let dt_m = |cc: usize, a: usize, b: usize| -> f64 {
        if cc < m && a < m && b < m {
            dg.get(cc, a, b)
        } else {
            0.0
        }
    };
    let dt_e = |cc: usize, a: usize, b: usize| -> f64 {
        if a < m && b < m {
            let mut v = 0.0;
            for beta in 0..k {
                v += dgy(cc, beta, a) * c.gy[(beta, b)] + c.gy[(beta, a)] * dgy(cc, beta, b);
            }
            v
        } else if a < m {
            dgy(cc, b - m, a)
        } else if b < m {
            dgy(cc, a - m, b)
        } else {
            0.0
        }
    };

    // --- coordinate fields X^h and X^v with their Jacobians ---
    // A = X^h: A^j = u^j (j < m), A^{m+beta} = -sum_j u^j GY[beta][j]
    let a_comp = |idx: usize| -> f64 {
        if idx < m {
            u[idx]
        } else {
            let beta = idx - m;
            -(0..m).map(|j| u[j] * c.gy[(beta, j)]).sum::<f64>()
        }
    };
    let da_comp = |idx: usize, cc: usize| -> f64 {
        if idx < m {
            jac[(idx, cc)]
        } else {
            let beta = idx - m;
            let mut v = 0.0;
            for j in 0..m {
                v -= jac[(j, cc)] * c.gy[(beta, j)] + u[j] * dgy(cc, beta, j);
            }
            v
        }
    };
    // B = X^v: B^{m+beta} = split v-component as a function, B^{j} = 0
    // v-component B^beta = u^{m+beta} + sum_j u^j GY[beta][j]
    let b_comp = |idx: usize| -> f64 { if idx < m { 0.0 } else { xv[idx - m] } };
    let db_comp = |idx: usize, cc: usize| -> f64 {
        if idx < m {
            0.0
        } else {
            let beta = idx - m;
            let mut v = jac[(m + beta, cc)];
            for j in 0..m {
                v += jac[(j, cc)] * c.gy[(beta, j)] + u[j] * dgy(cc, beta, j);
            }
            v
        }
    };

    let lie = |comp: &dyn Fn(usize) -> f64,
               dcomp: &dyn Fn(usize, usize) -> f64,
               t: &DMatrix<f64>,
               dt: &dyn Fn(usize, usize, usize) -> f64|
     -> f64 {
        let mut acc = 0.0;
        for d in 0..n {
            if yc[d] == 0.0 {
                continue;
            }
            for e in 0..n {
                if zc[e] == 0.0 {
                    continue;
                }
                let mut v = 0.0;
                for cc in 0..n {
                    v += comp(cc) * dt(cc, d, e);
                    v += t[(cc, e)] * dcomp(cc, d);
                    v += t[(d, cc)] * dcomp(cc, e);
                }
                acc += yc[d] * zc[e] * v;
            }
        }
        acc
    };

    let lie_m = lie(&a_comp, &da_comp, &t_m, &dt_m);
    let lie_e = lie(&b_comp, &db_comp, &t_e, &dt_e);

    let xb = xi_flat(p, &xf.value);
    let _ = xh;
    let rxz = cal_r_ctx(&c, p, &xf.value, zv);
    let rxy = cal_r_ctx(&c, p, &xf.value, yv);

    Ok(c.e1 * lie_m
        + c.e2 * lie_e
        + 2.0 * c.coef.a * c.e1 * xb * inner_m(&c, yv, zv)
        + 2.0 * c.coef.b * c.e2 * xb * inner_e(yv, zv)
        + c.e2 * (inner_e(&rxz, yv) + inner_e(&rxy, zv)))
}

/// Odd radial profile for the generalized Bergery metric, `f(0) = 0` and
/// `f'(0) = 1`.
#[derive(Clone)]
pub struct RadialFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    name: String,
}

impl std::fmt::Debug for RadialFn {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fm, "RadialFn({})", self.name)
    }
}

impl RadialFn {
    pub fn identity() -> RadialFn {
        RadialFn { f: Arc::new(|t| t), name: "t".into() }
    }

    pub fn sinh() -> RadialFn {
        RadialFn { f: Arc::new(f64::sinh), name: "sinh".into() }
    }

    /// `t + t^3/6`, the first two terms of sinh.
    pub fn cubic() -> RadialFn {
        RadialFn { f: Arc::new(|t| t + t * t * t / 6.0), name: "t+t^3/6".into() }
    }

    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<RadialFn> {
        let h = 1e-6;
        if f(0.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("radial profile {name}: f(0) != 0")));
        }
        let d0 = (f(h) - f(-h)) / (2.0 * h);
        if (d0 - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!("radial profile {name}: f'(0) != 1")));
        }
        for t in [0.3, 1.1] {
            if (f(t) + f(-t)).abs() > 1e-10 * f(t).abs().max(1.0) {
                return Err(Error::InvalidParameter(format!("radial profile {name}: not odd")));
            }
        }
        Ok(RadialFn { f: Arc::new(f), name: name.into() })
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// Musso-Tricerri metric `g_{M,E} + f3 xi^b (x) xi^b` at a point; `f3` is
/// the value of the scalar function there.
pub fn musso_tricerri(scene: &Scene, p: &TotalPoint, f3: f64) -> Result<MetricAtPoint> {
    let c = ctx(scene, p)?;
    if c.e2 + f3 <= 0.0 {
        return Err(Error::Domain(format!(
            "Musso-Tricerri positivity violated: e^(2 phi2) + f3 = {}",
            c.e2 + f3
        )));
    }
    let base = assemble_from_ctx(&c);
    let xb = xi_flat_coord(&c, p);
    let coord = base.coord + &xb * xb.transpose() * f3;
    let mut split_xb = DVector::zeros(c.m + c.k);
    for alpha in 0..c.k {
        split_xb[c.m + alpha] = p.y[alpha];
    }
    let split = base.split + &split_xb * split_xb.transpose() * f3;
    Ok(MetricAtPoint { coord, split })
}

fn xi_flat_coord(c: &Ctx, p: &TotalPoint) -> DVector<f64> {
    let (m, k) = (c.m, c.k);
    let mut out = DVector::zeros(m + k);
    for i in 0..m {
        let mut v = 0.0;
        for beta in 0..k {
            v += p.y[beta] * c.gy[(beta, i)];
        }
        out[i] = v;
    }
    for beta in 0..k {
        out[m + beta] = p.y[beta];
    }
    out
}

/// Generalized Bergery metric: the fibre metric is radially deformed by an
/// odd profile `f`. The fibre block in the bundle frame is
/// `e^{2 phi2} [ (f^2/r)(I - P) + P ]` with `P = y y^T / r`, extended
/// smoothly by `f'(0)^2 = 1` at the origin.
pub fn bergery_metric(scene: &Scene, p: &TotalPoint, f: &RadialFn) -> Result<MetricAtPoint> {
    let c = ctx(scene, p)?;
    let r = c.r;
    let t = r.sqrt();
    if t > 0.0 && f.eval(t) <= 0.0 {
        return Err(Error::Domain(format!(
            "Bergery profile must be positive for t > 0 (f({t}) = {})",
            f.eval(t)
        )));
    }
    let (m, k) = (c.m, c.k);
    let fib = if r < 1e-12 {
        DMatrix::<f64>::identity(k, k) * c.e2
    } else {
        let f2 = f.eval(t) * f.eval(t);
        let pmat = &p.y * p.y.transpose() / r;
        ((DMatrix::identity(k, k) - &pmat) * (f2 / r) + pmat) * c.e2
    };
    let n = m + k;
    let mut coord = DMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let mut v = c.e1 * c.g[(i, j)];
            for alpha in 0..k {
                for beta in 0..k {
                    v += c.gy[(alpha, i)] * fib[(alpha, beta)] * c.gy[(beta, j)];
                }
            }
            coord[(i, j)] = v;
        }
        for beta in 0..k {
            let mut v = 0.0;
            for alpha in 0..k {
                v += c.gy[(alpha, i)] * fib[(alpha, beta)];
            }
            coord[(i, m + beta)] = v;
            coord[(m + beta, i)] = v;
        }
    }
    for alpha in 0..k {
        for beta in 0..k {
            coord[(m + alpha, m + beta)] = fib[(alpha, beta)];
        }
    }
    let mut split = DMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            split[(i, j)] = c.e1 * c.g[(i, j)];
        }
    }
    for alpha in 0..k {
        for beta in 0..k {
            split[(m + alpha, m + beta)] = fib[(alpha, beta)];
        }
    }
    Ok(MetricAtPoint { coord, split })
}

/// Max-norm deviation between the Bergery metric and the conformally scaled
/// Musso-Tricerri form
/// `(f^2/r) [ (r/f^2) e^{2 phi1} pi* g_M + e^{2 phi2} pi* g_E
///   + e^{2 phi2} (1/f^2 - 1/r) xi^b (x) xi^b ]`.
pub fn conformal_check(scene: &Scene, p: &TotalPoint, f: &RadialFn) -> Result<f64> {
    let r = p.r();
    if r <= 0.0 {
        return Err(Error::Domain("conformal check needs r > 0".into()));
    }
    let c = ctx(scene, p)?;
    let (m, k) = (c.m, c.k);
    let n = m + k;
    let t = r.sqrt();
    let f2 = f.eval(t) * f.eval(t);

    // pi* g_M and pi* g_E in coordinates
    let mut pm = DMatrix::<f64>::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            pm[(i, j)] = c.g[(i, j)];
        }
    }
    let mut pe = DMatrix::<f64>::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let mut v = 0.0;
            for beta in 0..k {
                v += c.gy[(beta, i)] * c.gy[(beta, j)];
            }
            pe[(i, j)] = v;
        }
        for beta in 0..k {
            pe[(i, m + beta)] = c.gy[(beta, i)];
            pe[(m + beta, i)] = c.gy[(beta, i)];
        }
    }
    for alpha in 0..k {
        pe[(m + alpha, m + alpha)] = 1.0;
    }
    let xb = xi_flat_coord(&c, p);
    let rhs = pm * c.e1
        + pe * (c.e2 * f2 / r)
        + &xb * xb.transpose() * (c.e2 * (f2 / r) * (1.0 / f2 - 1.0 / r));

    let lhs = bergery_metric(scene, p, f)?.coord;
    Ok(crate::numerics::max_abs(&(lhs - rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{lambda2_bundle, trivial_bundle, BundleSign};
    use crate::chart::{model_chart, ChartKind};
    use crate::numerics::{max_abs, min_eigenvalue_sym};
    use crate::weights::WeightProfile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bs_s4_scene() -> Scene {
        let chart = model_chart(ChartKind::Sphere { curv: 1.0 }, 4).unwrap();
        let bundle = lambda2_bundle(&chart, BundleSign::Minus).unwrap();
        let weights = WeightProfile::bryant_salamon(1.0, 1.0, 1.0).unwrap();
        Scene::new(chart, bundle, weights)
    }

    fn flat_scene(m: usize, k: usize, w: WeightProfile) -> Scene {
        let chart = model_chart(ChartKind::Flat, m).unwrap();
        let bundle = trivial_bundle(&chart, k).unwrap();
        Scene::new(chart, bundle, w)
    }

    fn rand_split<R: Rng>(rng: &mut R, m: usize, k: usize) -> SplitVector {
        SplitVector {
            h: DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
            v: DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0)),
        }
    }

    fn rand_point<R: Rng>(scene: &Scene, rng: &mut R, rmax_frac: f64) -> TotalPoint {
        let x = scene.chart.sample_interior(rng);
        let cap = if scene.weights.r_max().is_finite() {
            scene.weights.r_max() * rmax_frac
        } else {
            1.5
        };
        let mut y = DVector::from_fn(scene.k(), |_, _| rng.random_range(-1.0..1.0));
        let norm = y.norm();
        if norm > 0.0 {
            y *= rng.random_range(0.05..cap.sqrt() * 0.95) / norm;
        }
        TotalPoint { x: DVector::from_vec(x), y }
    }

    #[test]
    fn split_is_identity_for_flat_bundles() {
        let scene = flat_scene(2, 3, WeightProfile::constant(0.0, 0.0));
        let p = TotalPoint::new(vec![0.4, -0.7], vec![0.1, 0.2, 0.3]);
        let coord = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let sv = split(&scene, &p, &coord);
        assert_eq!(sv.h.as_slice(), &[1.0, 2.0]);
        assert_eq!(sv.v.as_slice(), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn tautological_field_is_vertical() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = rand_point(&scene, &mut rng, 0.5);
        let mut coord = DVector::zeros(7);
        for beta in 0..3 {
            coord[4 + beta] = p.y[beta];
        }
        let sv = split(&scene, &p, &coord);
        assert!(sv.h.norm() < 1e-15);
        assert!((sv.v.clone() - p.y.clone()).norm() < 1e-15);
    }

    #[test]
    fn split_of_coordinate_field_picks_up_connection() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = rand_point(&scene, &mut rng, 0.5);
        let mut coord = DVector::zeros(7);
        coord[0] = 1.0;
        let sv = split(&scene, &p, &coord);
        let gam = scene.bundle.gamma(p.x.as_slice());
        for beta in 0..3 {
            let expect: f64 = (0..3).map(|alpha| p.y[alpha] * gam.get(0, alpha, beta)).sum();
            assert!((sv.v[beta] - expect).abs() < 1e-14);
        }
        // and the connection matrix is skew in the frame indices
        for i in 0..4 {
            for a in 0..3 {
                for b in 0..3 {
                    assert!((gam.get(i, a, b) + gam.get(i, b, a)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn split_roundtrip_is_identity() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = rand_point(&scene, &mut rng, 0.5);
            let coord = DVector::from_fn(7, |_, _| rng.random_range(-2.0..2.0));
            let back = unsplit(&scene, &p, &split(&scene, &p, &coord));
            assert!((back - coord).norm() < 1e-13);
        }
    }

    #[test]
    fn assemble_metric_trivial_cases() {
        // constant weights 0 + flat bundle: block-diag(g, I)
        let scene = flat_scene(2, 2, WeightProfile::constant(0.0, 0.0));
        let p = TotalPoint::new(vec![0.3, 0.4], vec![0.5, 0.1]);
        let m = assemble_metric(&scene, &p).unwrap();
        assert!(max_abs(&(m.coord.clone() - DMatrix::identity(4, 4))) < 1e-15);

        // on the zero section cross terms vanish for any data
        let scene = bs_s4_scene();
        let p = TotalPoint::zero_section(vec![0.1, 0.2, -0.1, 0.3], 3);
        let m = assemble_metric(&scene, &p).unwrap();
        let g = scene.chart.metric(p.x.as_slice());
        let e1 = scene.weights.e2phi1(0.0);
        let e2 = scene.weights.e2phi2(0.0);
        for i in 0..4 {
            for beta in 0..3 {
                assert_eq!(m.coord[(i, 4 + beta)], 0.0);
            }
            for j in 0..4 {
                assert!((m.coord[(i, j)] - e1 * g[(i, j)]).abs() < 1e-14);
            }
        }
        for alpha in 0..3 {
            assert!((m.coord[(4 + alpha, 4 + alpha)] - e2).abs() < 1e-14);
        }
    }

    #[test]
    fn assembled_metric_positive_definite_and_congruent() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let p = rand_point(&scene, &mut rng, 0.5);
            let m = assemble_metric(&scene, &p).unwrap();
            assert!(min_eigenvalue_sym(&m.coord) > 0.0);
            // congruence: g_coord(u, w) = g_split(split u, split w)
            for _ in 0..5 {
                let u = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
                let w = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
                let su = split(&scene, &p, &u);
                let sw = split(&scene, &p, &w);
                let lhs = (&m.coord * &w).dot(&u);
                let mut sv_u = DVector::zeros(7);
                let mut sv_w = DVector::zeros(7);
                for i in 0..4 {
                    sv_u[i] = su.h[i];
                    sv_w[i] = sw.h[i];
                }
                for a in 0..3 {
                    sv_u[4 + a] = su.v[a];
                    sv_w[4 + a] = sw.v[a];
                }
                let rhs = (&m.split * &sv_w).dot(&sv_u);
                assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn tensor_c_trivial_and_xi_cases() {
        let scene = flat_scene(2, 2, WeightProfile::constant(0.4, -0.3));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = TotalPoint::new(vec![0.1, 0.2], vec![0.3, -0.4]);
        let x = rand_split(&mut rng, 2, 2);
        let y = rand_split(&mut rng, 2, 2);
        assert!(tensor_c(&scene, &p, &x, &y).unwrap().max_abs() < 1e-15);

        // C_xi xi = b r xi
        let scene = bs_s4_scene();
        let p = rand_point(&scene, &mut rng, 0.5);
        let xi = SplitVector::xi(&p, 4);
        let c = tensor_c(&scene, &p, &xi, &xi).unwrap();
        let b = scene.weights.coefficients(p.r()).unwrap().b;
        let expect = xi.scale(b * p.r());
        assert!(c.add(&expect.scale(-1.0)).max_abs() < 1e-13);
    }

    #[test]
    fn tensor_c_symmetric() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let p = rand_point(&scene, &mut rng, 0.5);
            let x = rand_split(&mut rng, 4, 3);
            let y = rand_split(&mut rng, 4, 3);
            let cxy = tensor_c(&scene, &p, &x, &y).unwrap();
            let cyx = tensor_c(&scene, &p, &y, &x).unwrap();
            assert!(cxy.add(&cyx.scale(-1.0)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn tensor_a_structure() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = rand_point(&scene, &mut rng, 0.5);
        // flat bundle: A = 0
        let flat = flat_scene(2, 2, WeightProfile::constant(0.2, 0.1));
        let pf = TotalPoint::new(vec![0.1, 0.1], vec![0.2, 0.3]);
        let xf = rand_split(&mut rng, 2, 2);
        let yf = rand_split(&mut rng, 2, 2);
        assert!(tensor_a(&flat, &pf, &xf, &yf).unwrap().max_abs() < 1e-15);

        // both horizontal: A = 0
        let xh = SplitVector::horizontal(DVector::from_vec(vec![1.0, 0.2, -0.4, 0.5]), 3);
        let yh = SplitVector::horizontal(DVector::from_vec(vec![0.3, -1.0, 0.2, 0.1]), 3);
        assert!(tensor_a(&scene, &p, &xh, &yh).unwrap().max_abs() < 1e-14);

        // symmetric, horizontal-valued
        let x = rand_split(&mut rng, 4, 3);
        let y = rand_split(&mut rng, 4, 3);
        let axy = tensor_a(&scene, &p, &x, &y).unwrap();
        let ayx = tensor_a(&scene, &p, &y, &x).unwrap();
        assert!(axy.v.norm() == 0.0);
        assert!(axy.add(&ayx.scale(-1.0)).max_abs() < 1e-14);
    }

    #[test]
    fn a_minus_half_calr_skew_adjoint() {
        // g(A(X,Y) - calR(X,Y)/2, Z) = -g(Y, A(X,Z) - calR(X,Z)/2)
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let p = rand_point(&scene, &mut rng, 0.5);
            let x = rand_split(&mut rng, 4, 3);
            let y = rand_split(&mut rng, 4, 3);
            let z = rand_split(&mut rng, 4, 3);
            let op = |u: &SplitVector, w: &SplitVector| -> SplitVector {
                let a = tensor_a(&scene, &p, u, w).unwrap();
                let r = cal_r(&scene, &p, u, w).unwrap();
                a.add(&r.scale(-0.5))
            };
            let lhs = metric_value(&scene, &p, &op(&x, &y), &z).unwrap();
            let rhs = -metric_value(&scene, &p, &y, &op(&x, &z)).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn cal_r_vanishing_cases() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = rand_point(&scene, &mut rng, 0.5);
        let x = rand_split(&mut rng, 4, 3);
        // calR(X, xi) = 0
        let xi = SplitVector::xi(&p, 4);
        assert!(cal_r(&scene, &p, &x, &xi).unwrap().max_abs() < 1e-14);
        // skew
        let y = rand_split(&mut rng, 4, 3);
        let rxy = cal_r(&scene, &p, &x, &y).unwrap();
        let ryx = cal_r(&scene, &p, &y, &x).unwrap();
        assert!(rxy.add(&ryx).max_abs() < 1e-14);
    }

    #[test]
    fn nabla_xi_identity() {
        // nabla_X xi = a r X^h + (1 + b r) X^v, exact
        let scenes = [
            bs_s4_scene(),
            flat_scene(2, 2, WeightProfile::poly(vec![0.0, 1.0], vec![0.1, 0.5])),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for scene in &scenes {
            for _ in 0..25 {
                let p = rand_point(scene, &mut rng, 0.5);
                let x = rand_split(&mut rng, scene.m(), scene.k());
                let xi = FieldJet::xi(scene, &p);
                let got = levi_civita(scene, &p, &x, &xi).unwrap();
                let c = scene.weights.coefficients(p.r()).unwrap();
                let expect = SplitVector {
                    h: &x.h * (c.a * p.r()),
                    v: &x.v * (1.0 + c.b * p.r()),
                };
                assert!(got.add(&expect.scale(-1.0)).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn levi_civita_reduces_to_christoffel_action() {
        // constant weights + flat bundle + constant split components
        let scene = {
            let chart = model_chart(ChartKind::Sphere { curv: 1.0 }, 2).unwrap();
            let bundle = trivial_bundle(&chart, 2).unwrap();
            Scene::new(chart, bundle, WeightProfile::constant(0.0, 0.0))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = rand_point(&scene, &mut rng, 0.5);
        let y_comp = rand_split(&mut rng, 2, 2);
        let yf = FieldJet {
            value: y_comp.clone(),
            jacobian: DMatrix::zeros(4, 4),
        };
        let x = rand_split(&mut rng, 2, 2);
        let got = levi_civita(&scene, &p, &x, &yf).unwrap();
        let sym = scene.chart.christoffel(p.x.as_slice());
        let mut expect_h = DVector::zeros(2);
        for q in 0..2 {
            for i in 0..2 {
                for l in 0..2 {
                    expect_h[q] += x.h[i] * y_comp.h[l] * sym.get(q, i, l);
                }
            }
        }
        assert!((got.h - expect_h).norm() < 1e-12);
        assert!(got.v.norm() < 1e-12);
    }

    #[test]
    fn metric_compatibility_residual() {
        // X g(Y,Z) = g(nabla_X Y, Z) + g(Y, nabla_X Z) for constant
        // coordinate fields, against an FD directional derivative
        let scenes = [bs_s4_scene(), flat_scene(2, 3, WeightProfile::poly(vec![0.0, 0.4], vec![0.0, -0.2, 0.1]))];
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for scene in &scenes {
            let n = scene.dim_total();
            let m = scene.m();
            for _ in 0..25 {
                let p = rand_point(scene, &mut rng, 0.4);
                let xc = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let yc = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let zc = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let yf = FieldJet::constant_coord(scene, &p, &yc);
                let zf = FieldJet::constant_coord(scene, &p, &zc);
                let xs = split(scene, &p, &xc);

                let h = 1e-6;
                let mut q = p.clone();
                let sval = |q: &TotalPoint| -> f64 {
                    let g = assemble_metric(scene, q).unwrap().coord;
                    (&g * &zc).dot(&yc)
                };
                let mut lhs = 0.0;
                for cidx in 0..n {
                    if xc[cidx] == 0.0 {
                        continue;
                    }
                    bump(&mut q, m, cidx, h);
                    let fp = sval(&q);
                    bump(&mut q, m, cidx, -2.0 * h);
                    let fm = sval(&q);
                    bump(&mut q, m, cidx, h);
                    lhs += xc[cidx] * (fp - fm) / (2.0 * h);
                }

                let ny = levi_civita(scene, &p, &xs, &yf).unwrap();
                let nz = levi_civita(scene, &p, &xs, &zf).unwrap();
                let rhs = metric_value(scene, &p, &ny, &zf.value).unwrap()
                    + metric_value(scene, &p, &yf.value, &nz).unwrap();
                assert!(
                    (lhs - rhs).abs() < 1e-5 * lhs.abs().max(1.0),
                    "residual {} at r={}",
                    (lhs - rhs).abs(),
                    p.r()
                );
            }
        }
    }

    #[test]
    fn torsion_free_for_coordinate_fields() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p = rand_point(&scene, &mut rng, 0.5);
        let n = scene.dim_total();
        for a in 0..n {
            for b in (a + 1)..n {
                let mut ea = DVector::zeros(n);
                ea[a] = 1.0;
                let mut eb = DVector::zeros(n);
                eb[b] = 1.0;
                let fa = FieldJet::constant_coord(&scene, &p, &ea);
                let fb = FieldJet::constant_coord(&scene, &p, &eb);
                let dab = levi_civita(&scene, &p, &fa.value, &fb).unwrap();
                let dba = levi_civita(&scene, &p, &fb.value, &fa).unwrap();
                assert!(
                    dab.add(&dba.scale(-1.0)).max_abs() < 1e-6,
                    "torsion at pair ({a},{b})"
                );
            }
        }
    }

    #[test]
    fn auxiliary_connection_torsion_equals_cal_r() {
        // T^{D** + C}(X, Y) = calR(X, Y) for coordinate fields
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let p = rand_point(&scene, &mut rng, 0.5);
        let n = scene.dim_total();
        for _ in 0..5 {
            let xc = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let yc = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let fx = FieldJet::constant_coord(&scene, &p, &xc);
            let fy = FieldJet::constant_coord(&scene, &p, &yc);
            let dstar = |u: &FieldJet, w: &FieldJet| -> SplitVector {
                // D** = nabla - C - A + calR/2
                let lc = levi_civita(&scene, &p, &u.value, w).unwrap();
                let cc = tensor_c(&scene, &p, &u.value, &w.value).unwrap();
                let aa = tensor_a(&scene, &p, &u.value, &w.value).unwrap();
                let rr = cal_r(&scene, &p, &u.value, &w.value).unwrap();
                lc.add(&cc.scale(-1.0)).add(&aa.scale(-1.0)).add(&rr.scale(0.5))
            };
            let torsion = dstar(&fx, &fy).add(&dstar(&fy, &fx).scale(-1.0));
            let expect = cal_r(&scene, &p, &fx.value, &fy.value).unwrap();
            assert!(torsion.add(&expect.scale(-1.0)).max_abs() < 1e-6);
        }
    }

    #[test]
    fn dr_equals_twice_xi_flat() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let p = rand_point(&scene, &mut rng, 0.5);
        let n = scene.dim_total();
        let m = scene.m();
        for _ in 0..5 {
            let xc = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let xs = split(&scene, &p, &xc);
            // FD directional derivative of r
            let h = 1e-7;
            let mut q = p.clone();
            let mut dr = 0.0;
            for cidx in 0..n {
                bump(&mut q, m, cidx, h);
                let rp = q.r();
                bump(&mut q, m, cidx, -2.0 * h);
                let rm = q.r();
                bump(&mut q, m, cidx, h);
                dr += xc[cidx] * (rp - rm) / (2.0 * h);
            }
            assert!((dr - 2.0 * xi_flat(&p, &xs)).abs() < 1e-7);
        }
    }

    #[test]
    fn structured_parallel_field_rank_one() {
        // k = 1, phi1 constant, Y = c e^{-phi2} pi* e  is parallel
        let chart = model_chart(ChartKind::Flat, 2).unwrap();
        let bundle = trivial_bundle(&chart, 1).unwrap();
        let weights = WeightProfile::poly(vec![0.7], vec![0.0, 0.5, -0.1]);
        let scene = Scene::new(chart, bundle, weights);
        let cconst = 1.3;
        let field = |q: &TotalPoint| -> DVector<f64> {
            let g = cconst * (-scene.weights.phi2(q.r())).exp();
            DVector::from_vec(vec![0.0, 0.0, g])
        };
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..10 {
            let p = rand_point(&scene, &mut rng, 0.5);
            let jet = FieldJet::from_coord_fn(&scene, &p, &field);
            let x = rand_split(&mut rng, 2, 1);
            let nab = levi_civita(&scene, &p, &x, &jet).unwrap();
            assert!(nab.max_abs() < 1e-8, "|nabla Y| = {}", nab.max_abs());
        }
    }

    #[test]
    fn killing_residual_cases() {
        // parallel coordinate field on fully flat data
        let scene = flat_scene(2, 2, WeightProfile::constant(0.0, 0.0));
        let p = TotalPoint::new(vec![0.3, -0.2], vec![0.4, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let xc = DVector::from_vec(vec![1.0, 0.5, -0.3, 0.2]);
        let xf = FieldJet::constant_coord(&scene, &p, &xc);
        let y = rand_split(&mut rng, 2, 2);
        let z = rand_split(&mut rng, 2, 2);
        assert!(killing_residual(&scene, &p, &xf, &y, &z).unwrap().abs() < 1e-14);

        // fibre rotation generator is a Killing field (flat base, constant weights)
        let rot = |q: &TotalPoint| -> DVector<f64> {
            DVector::from_vec(vec![0.0, 0.0, -q.y[1], q.y[0]])
        };
        let jet = FieldJet::from_coord_fn(&scene, &p, &rot);
        assert!(killing_residual(&scene, &p, &jet, &y, &z).unwrap().abs() < 1e-9);
    }

    #[test]
    fn killing_residual_matches_levi_civita_identity() {
        // (L_X g)(Y,Z) = g(nabla_Y X, Z) + g(Y, nabla_Z X)
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let p = rand_point(&scene, &mut rng, 0.4);
            let n = scene.dim_total();
            // a generic polynomial field in coordinates
            let coeffs: Vec<f64> = (0..n * (n + 1)).map(|_| rng.random_range(-0.5..0.5)).collect();
            let field = {
                let coeffs = coeffs.clone();
                move |q: &TotalPoint| -> DVector<f64> {
                    let mut out = DVector::zeros(7);
                    let coords: Vec<f64> =
                        q.x.iter().chain(q.y.iter()).copied().collect();
                    for a in 0..7 {
                        let mut v = coeffs[a * 8];
                        for (c, item) in coords.iter().enumerate() {
                            v += coeffs[a * 8 + 1 + c] * item;
                        }
                        out[a] = v;
                    }
                    out
                }
            };
            let jet = FieldJet::from_coord_fn(&scene, &p, &field);
            let y = rand_split(&mut rng, 4, 3);
            let z = rand_split(&mut rng, 4, 3);
            let lie = killing_residual(&scene, &p, &jet, &y, &z).unwrap();
            let ny = levi_civita(&scene, &p, &y, &jet).unwrap();
            let nz = levi_civita(&scene, &p, &z, &jet).unwrap();
            let rhs = metric_value(&scene, &p, &ny, &z).unwrap()
                + metric_value(&scene, &p, &y, &nz).unwrap();
            assert!(
                (lie - rhs).abs() < 1e-6 * lie.abs().max(1.0),
                "Lie {lie} vs nabla form {rhs}"
            );
        }
    }

    #[test]
    fn killing_residual_matches_fd_lie_derivative() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let p = rand_point(&scene, &mut rng, 0.4);
        let n = scene.dim_total();
        let m = scene.m();
        let field = |q: &TotalPoint| -> DVector<f64> {
            let mut out = DVector::zeros(7);
            out[0] = 0.3 * q.x[1];
            out[2] = -0.2 * q.x[0] + 0.1 * q.y[0];
            out[5] = 0.4 * q.y[2] + 0.2 * q.x[3];
            out[6] = -0.1 * q.y[1];
            out
        };
        let jet = FieldJet::from_coord_fn(&scene, &p, &field);
        let y = rand_split(&mut rng, 4, 3);
        let z = rand_split(&mut rng, 4, 3);
        let yc = unsplit(&scene, &p, &y);
        let zc = unsplit(&scene, &p, &z);

        // FD Lie derivative: X^C d_C g(Y,Z) + g d_Y X ... in coordinates
        let h = 1e-5;
        let gmat = |q: &TotalPoint| assemble_metric(scene_ref(&scene), q).unwrap().coord;
        fn scene_ref(s: &Scene) -> &Scene {
            s
        }
        let xc = unsplit(&scene, &p, &jet.value);
        let mut q = p.clone();
        let mut lie_fd = 0.0;
        // X^C d_C (g_{DE}) Y^D Z^E
        for cidx in 0..n {
            if xc[cidx] == 0.0 {
                continue;
            }
            bump(&mut q, m, cidx, h);
            let gp = gmat(&q);
            bump(&mut q, m, cidx, -2.0 * h);
            let gm = gmat(&q);
            bump(&mut q, m, cidx, h);
            let dg = (gp - gm) / (2.0 * h);
            lie_fd += xc[cidx] * (&dg * &zc).dot(&yc);
        }
        // + g(d_Y X, Z) + g(Y, d_Z X) with FD Jacobian of the coordinate field
        let g0 = gmat(&p);
        let mut jx = DMatrix::<f64>::zeros(n, n);
        for cidx in 0..n {
            bump(&mut q, m, cidx, h);
            let fp = field(&q);
            bump(&mut q, m, cidx, -2.0 * h);
            let fm = field(&q);
            bump(&mut q, m, cidx, h);
            for a in 0..n {
                jx[(a, cidx)] = (fp[a] - fm[a]) / (2.0 * h);
            }
        }
        let dxy = &jx * &yc;
        let dxz = &jx * &zc;
        lie_fd += (&g0 * &zc).dot(&dxy) + (&g0 * &dxz).dot(&yc);

        let lie = killing_residual(&scene, &p, &jet, &y, &z).unwrap();
        assert!(
            (lie - lie_fd).abs() < 1e-5 * lie.abs().max(1.0),
            "formula {lie} vs FD {lie_fd}"
        );
    }

    #[test]
    fn musso_tricerri_reduces_to_base_metric() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let p = rand_point(&scene, &mut rng, 0.5);
        let base = assemble_metric(&scene, &p).unwrap();
        let mt = musso_tricerri(&scene, &p, 0.0).unwrap();
        assert!(max_abs(&(mt.coord - base.coord.clone())) < 1e-15);

        // on the zero section any f3 gives the base metric back
        let p0 = TotalPoint::zero_section(p.x.iter().copied().collect(), 3);
        let base0 = assemble_metric(&scene, &p0).unwrap();
        let mt0 = musso_tricerri(&scene, &p0, 3.7).unwrap();
        assert!(max_abs(&(mt0.coord - base0.coord)) < 1e-15);

        // positivity gate
        let e2 = scene.weights.e2phi2(p.r());
        assert!(musso_tricerri(&scene, &p, -e2 - 0.1).is_err());
    }

    #[test]
    fn bergery_identity_profile_is_base_metric() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let p = rand_point(&scene, &mut rng, 0.5);
        let base = assemble_metric(&scene, &p).unwrap();
        let b = bergery_metric(&scene, &p, &RadialFn::identity()).unwrap();
        assert!(max_abs(&(b.coord - base.coord)) < 1e-12);
    }

    #[test]
    fn bergery_small_radius_limit() {
        let scene = flat_scene(2, 3, WeightProfile::constant(0.0, 0.3));
        let p = TotalPoint::new(vec![0.0, 0.0], vec![1e-8, 0.0, 0.0]);
        let b = bergery_metric(&scene, &p, &RadialFn::sinh()).unwrap();
        let e2 = scene.weights.e2phi2(p.r());
        for alpha in 0..3 {
            for beta in 0..3 {
                let expect = if alpha == beta { e2 } else { 0.0 };
                assert!((b.coord[(2 + alpha, 2 + beta)] - expect).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn bergery_sinh_eigenvalues() {
        // fibre block eigenvalues {e^{2 phi2} sinh^2(1), e^{2 phi2}} with
        // multiplicities {k-1, 1} at r = 1
        let scene = flat_scene(2, 3, WeightProfile::constant(0.0, 0.2));
        let p = TotalPoint::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0]);
        let b = bergery_metric(&scene, &p, &RadialFn::sinh()).unwrap();
        let fib = b.coord.view((2, 2), (3, 3)).clone_owned();
        let mut eig: Vec<f64> = fib.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let e2 = scene.weights.e2phi2(1.0);
        let s2 = 1.0_f64.sinh().powi(2);
        assert!((eig[0] - e2).abs() < 1e-12);
        assert!((eig[1] - e2 * s2).abs() < 1e-12);
        assert!((eig[2] - e2 * s2).abs() < 1e-12);
    }

    #[test]
    fn radial_fn_validation() {
        assert!(RadialFn::custom("bad0", |t| t + 0.1).is_err());
        assert!(RadialFn::custom("badslope", |t| 2.0 * t).is_err());
        assert!(RadialFn::custom("even", |t| t + t * t).is_err());
        assert!(RadialFn::custom("ok", |t| t + t.powi(3) / 6.0).is_ok());
    }

    #[test]
    fn conformal_equivalence_identity_profile() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let p = rand_point(&scene, &mut rng, 0.5);
        assert!(conformal_check(&scene, &p, &RadialFn::identity()).unwrap() < 1e-15);
    }

    #[test]
    fn conformal_equivalence_sinh() {
        let scene = bs_s4_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for _ in 0..20 {
            let x = scene.chart.sample_interior(&mut rng);
            let r = rng.random_range(0.1..2.0_f64);
            let mut y = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            y *= r.sqrt() / y.norm();
            let p = TotalPoint { x: DVector::from_vec(x), y };
            let dev = conformal_check(&scene, &p, &RadialFn::sinh()).unwrap();
            assert!(dev < 1e-10, "deviation {dev} at r = {r}");
        }
    }

    #[test]
    fn conformal_equivalence_near_origin() {
        let scene = flat_scene(2, 3, WeightProfile::constant(0.1, -0.2));
        let r: f64 = 1e-6;
        let p = TotalPoint::new(vec![0.0, 0.0], vec![r.sqrt(), 0.0, 0.0]);
        let dev = conformal_check(&scene, &p, &RadialFn::cubic()).unwrap();
        assert!(dev < 1e-8, "deviation {dev}");
    }
}
