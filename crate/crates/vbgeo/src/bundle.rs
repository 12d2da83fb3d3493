//! Bundle connections over a chart: coefficients `Gamma^{E,beta}_{i alpha}`
//! in an orthonormal frame, curvature `R^E_{beta alpha i j}`, and the
//! rank-3 bundles of (anti-)self-dual 2-forms on oriented 4-manifolds with
//! the curvature-operator block decomposition.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{BaseChart, ChartKind, EvalT3, EvalT4};
use crate::numerics::{fd_step, Tensor3, Tensor4};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleSign {
    Plus,
    Minus,
}

/// Rank-k bundle with metric connection data over a chart.
#[derive(Clone)]
pub struct BundleConnection {
    pub k: usize,
    pub is_flat: bool,
    pub is_tangent_bundle: bool,
    gamma: EvalT3,
    dgamma: EvalT4,
    curvature: EvalT4,
    label: String,
}

impl std::fmt::Debug for BundleConnection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BundleConnection({}, k={})", self.label, self.k)
    }
}

impl BundleConnection {
    /// `Gamma^{E,beta}_{i alpha}`, indexed `(i, alpha, beta)`.
    pub fn gamma(&self, x: &[f64]) -> Tensor3 {
        (self.gamma)(x)
    }

    /// `d_c Gamma^{E,beta}_{i alpha}`, indexed `(c, i, alpha, beta)`.
    pub fn dgamma(&self, x: &[f64]) -> Tensor4 {
        (self.dgamma)(x)
    }

    /// `R^E_{beta alpha i j} = <R^E(d_i, d_j) e_alpha, e_beta>_E`,
    /// indexed `(beta, alpha, i, j)`.
    pub fn curvature(&self, x: &[f64]) -> Tensor4 {
        (self.curvature)(x)
    }
}

/// Flat bundle with the zero connection in its own frame.
pub fn trivial_bundle(chart: &BaseChart, k: usize) -> Result<BundleConnection> {
    if k < 1 {
        return Err(Error::InvalidParameter("bundle rank must be >= 1".into()));
    }
    let m = chart.m;
    Ok(BundleConnection {
        k,
        is_flat: true,
        is_tangent_bundle: false,
        gamma: Arc::new(move |_| Tensor3::zeros(m, k, k)),
        dgamma: Arc::new(move |_| Tensor4::zeros(m, m, k, k)),
        curvature: Arc::new(move |_| Tensor4::zeros(k, k, m, m)),
        label: format!("trivial(k={k})"),
    })
}

/// Tangent bundle with the Levi-Civita connection, expressed in the chart's
/// Gram-Schmidt orthonormal frame.
pub fn tangent_bundle(chart: &BaseChart) -> BundleConnection {
    let m = chart.m;
    let ch = chart.clone();
    let gamma: EvalT3 = Arc::new(move |x| {
        let f = ch.frame(x);
        let df = ch.frame_deriv(x);
        let g = ch.metric(x);
        let sym = ch.christoffel(x);
        let mut t = Tensor3::zeros(m, m, m);
        for i in 0..m {
            // nabla_i F_alpha = dF_alpha + Gamma_i F_alpha
            let mut gam_i = DMatrix::<f64>::zeros(m, m);
            for l in 0..m {
                for p in 0..m {
                    gam_i[(l, p)] = sym.get(l, i, p);
                }
            }
            let cov = &df[i] + &gam_i * &f;
            let paired = f.transpose() * &g * cov; // (beta, alpha)
            for alpha in 0..m {
                for beta in 0..m {
                    t.set(i, alpha, beta, paired[(beta, alpha)]);
                }
            }
        }
        t
    });
    let dgamma = fd_dgamma(gamma.clone(), m, m);
    let ch = chart.clone();
    let curvature: EvalT4 = Arc::new(move |x| {
        let f = ch.frame(x);
        let riem = ch.riemann(x);
        let mut t = Tensor4::zeros(m, m, m, m);
        for beta in 0..m {
            for alpha in 0..m {
                for i in 0..m {
                    for j in (i + 1)..m {
                        // <R^M(d_i,d_j) F_alpha, F_beta> = -F^k_a F^l_b R[i][j][k][l]
                        let mut v = 0.0;
                        for k in 0..m {
                            for l in 0..m {
                                v -= f[(k, alpha)] * f[(l, beta)] * riem.get(i, j, k, l);
                            }
                        }
                        t.set(beta, alpha, i, j, v);
                        t.set(beta, alpha, j, i, -v);
                    }
                }
            }
        }
        t
    });
    BundleConnection {
        k: m,
        is_flat: matches!(chart.kind, ChartKind::Flat),
        is_tangent_bundle: true,
        gamma,
        dgamma,
        curvature,
        label: "tangent".into(),
    }
}

fn fd_dgamma(gamma: EvalT3, m: usize, k: usize) -> EvalT4 {
    Arc::new(move |x| {
        let mut out = Tensor4::zeros(m, m, k, k);
        let mut xp = x.to_vec();
        for c in 0..m {
            let h = fd_step(1e-5, x[c]);
            xp[c] = x[c] + h;
            let gp = gamma(&xp);
            xp[c] = x[c] - h;
            let gm = gamma(&xp);
            xp[c] = x[c];
            for i in 0..m {
                for alpha in 0..k {
                    for beta in 0..k {
                        out.set(
                            c,
                            i,
                            alpha,
                            beta,
                            (gp.get(i, alpha, beta) - gm.get(i, alpha, beta)) / (2.0 * h),
                        );
                    }
                }
            }
        }
        out
    })
}

/// Constant frame-component matrices of the Lambda^2_+/- basis 2-forms.
/// Index convention: frame vectors 0..3 play the paper's e_4..e_7, so
/// e^1 = e^{45} +/- e^{67}, e^2 = e^{46} -/+ e^{57}, e^3 = e^{47} +/- e^{56}.
pub fn lambda2_frame_matrices(sign: BundleSign) -> [DMatrix<f64>; 3] {
    let s = match sign {
        BundleSign::Plus => 1.0,
        BundleSign::Minus => -1.0,
    };
    let e = |a: usize, b: usize| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        m[(a, b)] = 1.0;
        m[(b, a)] = -1.0;
        m
    };
    [
        e(0, 1) + e(2, 3) * s,
        e(0, 2) - e(1, 3) * s,
        e(0, 3) + e(1, 2) * s,
    ]
}

/// Wedge pairs with signs for the six basis 2-vectors (3 plus, 3 minus).
fn lambda2_wedges() -> [[((usize, usize), f64); 2]; 6] {
    [
        [((0, 1), 1.0), ((2, 3), 1.0)],
        [((0, 2), 1.0), ((1, 3), -1.0)],
        [((0, 3), 1.0), ((1, 2), 1.0)],
        [((0, 1), 1.0), ((2, 3), -1.0)],
        [((0, 2), 1.0), ((1, 3), 1.0)],
        [((0, 3), 1.0), ((1, 2), -1.0)],
    ]
}

/// Curvature operator on 2-forms of an oriented 4-manifold in the
/// `(Lambda_+, Lambda_-)` block frame.
#[derive(Debug, Clone)]
pub struct FourManifoldCurvatureOperator {
    /// Full 6x6 symmetric matrix in the orthonormalized basis.
    pub blocks: DMatrix<f64>,
    /// `Scal^M / 12`.
    pub s: f64,
    pub w_plus: DMatrix<f64>,
    pub w_minus: DMatrix<f64>,
    pub ric0: DMatrix<f64>,
}

/// Riemann tensor contracted into the orthonormal frame on all four slots.
fn frame_riemann(chart: &BaseChart, x: &[f64]) -> Tensor4 {
    let m = chart.m;
    let f = chart.frame(x);
    let riem = chart.riemann(x);
    let mut out = Tensor4::zeros(m, m, m, m);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let mut v = 0.0;
                    for i in 0..m {
                        let fa = f[(i, a)];
                        if fa == 0.0 {
                            continue;
                        }
                        for j in 0..m {
                            let fb = f[(j, b)];
                            if fb == 0.0 {
                                continue;
                            }
                            for k in 0..m {
                                for l in 0..m {
                                    v += fa * fb * f[(k, c)] * f[(l, d)] * riem.get(i, j, k, l);
                                }
                            }
                        }
                    }
                    out.set(a, b, c, d, v);
                }
            }
        }
    }
    out
}

/// 6x6 curvature-operator matrix in the basis of [`lambda2_wedges`].
fn operator_matrix(rfr: &Tensor4) -> DMatrix<f64> {
    let wedges = lambda2_wedges();
    let mut m6 = DMatrix::zeros(6, 6);
    for (a_idx, wa) in wedges.iter().enumerate() {
        for (b_idx, wb) in wedges.iter().enumerate() {
            let mut v = 0.0;
            for ((a, b), sa) in wa.iter() {
                for ((c, d), sb) in wb.iter() {
                    v += sa * sb * rfr.get(*c, *d, *a, *b);
                }
            }
            m6[(a_idx, b_idx)] = 0.5 * v;
        }
    }
    m6
}

/// Decompose the curvature operator of a 4-dimensional chart at `x`.
pub fn curvature_operator(chart: &BaseChart, x: &[f64]) -> Result<FourManifoldCurvatureOperator> {
    if chart.m != 4 {
        return Err(Error::InvalidParameter(format!(
            "curvature operator needs a 4-dimensional chart (m = {})",
            chart.m
        )));
    }
    let rfr = frame_riemann(chart, x);
    let blocks = operator_matrix(&rfr);
    let s = chart.scalar(x) / 12.0;
    let id3 = DMatrix::<f64>::identity(3, 3);
    let w_plus = blocks.view((0, 0), (3, 3)).clone_owned() - &id3 * s;
    let w_minus = blocks.view((3, 3), (3, 3)).clone_owned() - &id3 * s;
    let ric0 = blocks.view((0, 3), (3, 3)).clone_owned();
    Ok(FourManifoldCurvatureOperator { blocks, s, w_plus, w_minus, ric0 })
}

/// Bundle of (anti-)self-dual 2-forms over an oriented 4-manifold chart.
///
/// The bundle metric makes `{e^1, e^2, e^3}` orthonormal (half the usual
/// 2-form metric). The curvature is read off the curvature operator: the
/// skew matrix `S = mat(R(d_i /\ d_j))` acts on the basis forms by
/// commutator, giving `R^E e^i = rho^k e^j - rho^j e^k` over cycles.
pub fn lambda2_bundle(chart: &BaseChart, sign: BundleSign) -> Result<BundleConnection> {
    if chart.m != 4 {
        return Err(Error::InvalidParameter(format!(
            "lambda2 bundle needs m = 4 (got {})",
            chart.m
        )));
    }
    let m = 4;
    let base = match sign {
        BundleSign::Plus => 0,
        BundleSign::Minus => 3,
    };
    let mats = lambda2_frame_matrices(sign);

    let ch = chart.clone();
    let gamma: EvalT3 = Arc::new(move |x| {
        let f = ch.frame(x);
        let df = ch.frame_deriv(x);
        let g = ch.metric(x);
        let sym = ch.christoffel(x);
        // bivector coordinate components of the three basis sections
        let wedges = lambda2_wedges();
        let biv = |w: &[((usize, usize), f64); 2], fm: &DMatrix<f64>| -> DMatrix<f64> {
            let mut t = DMatrix::zeros(4, 4);
            for ((a, b), s) in w.iter() {
                let col_a = fm.column(*a);
                let col_b = fm.column(*b);
                t += (col_a * col_b.transpose() - col_b * col_a.transpose()) * *s;
            }
            t
        };
        let sections: Vec<DMatrix<f64>> =
            (0..3).map(|l| biv(&wedges[base + l], &f)).collect();
        let mut t = Tensor3::zeros(m, 3, 3);
        for i in 0..m {
            let mut gam_i = DMatrix::<f64>::zeros(4, 4);
            for l in 0..4 {
                for p in 0..4 {
                    gam_i[(l, p)] = sym.get(l, i, p);
                }
            }
            // d_i of each section: product rule through the frame columns
            for alpha in 0..3 {
                let mut dsec = DMatrix::<f64>::zeros(4, 4);
                for ((a, b), s) in wedges[base + alpha].iter() {
                    let fa = f.column(*a).clone_owned();
                    let fb = f.column(*b).clone_owned();
                    let dfa = df[i].column(*a).clone_owned();
                    let dfb = df[i].column(*b).clone_owned();
                    dsec += (&dfa * fb.transpose() - &fb * dfa.transpose()) * *s;
                    dsec += (&fa * dfb.transpose() - &dfb * fa.transpose()) * *s;
                }
                let cov = dsec + &gam_i * &sections[alpha] + &sections[alpha] * gam_i.transpose();
                // <cov, section_beta>_E = 1/4 sum (g cov g) .* section_beta
                let gcg = &g * &cov * &g;
                for beta in 0..3 {
                    let mut v = 0.0;
                    for p in 0..4 {
                        for q in 0..4 {
                            v += gcg[(p, q)] * sections[beta][(p, q)];
                        }
                    }
                    t.set(i, alpha, beta, 0.25 * v);
                }
            }
        }
        t
    });
    let dgamma = fd_dgamma(gamma.clone(), m, 3);

    let ch = chart.clone();
    let curvature: EvalT4 = Arc::new(move |x| {
        let f = ch.frame(x);
        let g = ch.metric(x);
        let rfr = frame_riemann(&ch, x);
        let op = operator_matrix(&rfr);
        let wedges = lambda2_wedges();
        let gf = &g * &f;
        let mut t = Tensor4::zeros(3, 3, m, m);
        for i in 0..m {
            for j in (i + 1)..m {
                // frame components of d_i /\ d_j
                let mut v = DMatrix::<f64>::zeros(4, 4);
                for a in 0..4 {
                    for b in 0..4 {
                        v[(a, b)] = gf[(i, a)] * gf[(j, b)] - gf[(i, b)] * gf[(j, a)];
                    }
                }
                // coefficients against the six basis 2-vectors
                let mut coef = [0.0; 6];
                for (idx, w) in wedges.iter().enumerate() {
                    coef[idx] = 0.5 * w.iter().map(|((a, b), s)| s * v[(*a, *b)]).sum::<f64>();
                }
                // S = mat(curvature operator applied to d_i /\ d_j)
                let mut s_mat = DMatrix::<f64>::zeros(4, 4);
                for (a_idx, w) in wedges.iter().enumerate() {
                    let d: f64 = (0..6).map(|b_idx| op[(a_idx, b_idx)] * coef[b_idx]).sum();
                    if d != 0.0 {
                        for ((a, b), s) in w.iter() {
                            s_mat[(*a, *b)] += d * s;
                            s_mat[(*b, *a)] -= d * s;
                        }
                    }
                }
                for alpha in 0..3 {
                    let bracket = &s_mat * &mats[alpha] - &mats[alpha] * &s_mat;
                    for beta in 0..3 {
                        let v = -0.25 * (&bracket * &mats[beta]).trace();
                        t.set(beta, alpha, i, j, v);
                        t.set(beta, alpha, j, i, -v);
                    }
                }
            }
        }
        t
    });

    Ok(BundleConnection {
        k: 3,
        is_flat: matches!(chart.kind, ChartKind::Flat),
        is_tangent_bundle: false,
        gamma,
        dgamma,
        curvature,
        label: format!("lambda2({sign:?})"),
    })
}

/// Curvature 2-forms `rho^i` of a Lambda^2 bundle at `x`, as antisymmetric
/// matrices of values on frame pairs: `rho[i][(a,b)] = rho^i(F_a, F_b)`.
pub fn lambda2_rho(chart: &BaseChart, sign: BundleSign, x: &[f64]) -> Result<[DMatrix<f64>; 3]> {
    let bundle = lambda2_bundle(chart, sign)?;
    let curv = bundle.curvature(x);
    let f = chart.frame(x);
    let m = chart.m;
    let mut rho = [
        DMatrix::<f64>::zeros(4, 4),
        DMatrix::<f64>::zeros(4, 4),
        DMatrix::<f64>::zeros(4, 4),
    ];
    for (i, j, k) in [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
        for a in 0..4 {
            for b in 0..4 {
                // rho^k(F_a, F_b) = <R^E(F_a, F_b) e^i, e^j>_E
                let mut v = 0.0;
                for p in 0..m {
                    for q in 0..m {
                        v += f[(p, a)] * f[(q, b)] * curv.get(j, i, p, q);
                    }
                }
                rho[k][(a, b)] = v;
            }
        }
    }
    Ok(rho)
}
