//! Base-manifold charts: metric, Christoffel symbols, Riemann tensor and a
//! deterministic orthonormal frame field on a coordinate box.
//!
//! Model spaces use the conformal chart `g = (4 / (1 +/- curv |x|^2)^2) delta`
//! whose constant sectional curvature is `+curv` (sphere) or `-curv`
//! (hyperbolic). Custom charts supply only a metric closure; symbols and
//! curvature then come from central differences, with one Richardson pass
//! when the symmetry probe fails at the base step.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::numerics::{
    self, christoffel_from_parts, fd_dmatrix, fd_riemann_of_metric, ricci_from_riemann,
    scalar_from_ricci, Tensor3, Tensor4,
};
use crate::{Error, Result};

pub type EvalMat = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type EvalT3 = Arc<dyn Fn(&[f64]) -> Tensor3 + Send + Sync>;
pub type EvalT4 = Arc<dyn Fn(&[f64]) -> Tensor4 + Send + Sync>;
pub type EvalFrames = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartKind {
    Flat,
    Sphere { curv: f64 },
    Hyperbolic { curv: f64 },
    Custom,
}

/// A single coordinate chart of the base manifold.
#[derive(Clone)]
pub struct BaseChart {
    pub m: usize,
    pub kind: ChartKind,
    /// Coordinate box; all sampling stays inside with a 10% margin.
    pub domain: Vec<(f64, f64)>,
    metric: EvalMat,
    dmetric: EvalT3,
    christoffel: EvalT3,
    riemann: EvalT4,
    frame: EvalMat,
    frame_deriv: EvalFrames,
}

impl std::fmt::Debug for BaseChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BaseChart(m={}, kind={:?})", self.m, self.kind)
    }
}

impl BaseChart {
    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        (self.metric)(x)
    }

    /// `d_c g_ab`, indexed `(c, a, b)`.
    pub fn dmetric(&self, x: &[f64]) -> Tensor3 {
        (self.dmetric)(x)
    }

    /// `Gamma^k_{ij}`, indexed `(k, i, j)`.
    pub fn christoffel(&self, x: &[f64]) -> Tensor3 {
        (self.christoffel)(x)
    }

    /// Lowered Riemann tensor, storage convention of [`crate::numerics`]:
    /// `R[i][j][i][j] > 0` on positively curved coordinate planes.
    pub fn riemann(&self, x: &[f64]) -> Tensor4 {
        (self.riemann)(x)
    }

    /// `<R(X,Y) Z, W>_M` from the stored tensor (sign bridge to the
    /// operator convention).
    pub fn riemann_op_value(&self, riem: &Tensor4, xv: &[f64], yv: &[f64], zv: &[f64], wv: &[f64]) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for i in 0..m {
            if xv[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                if yv[j] == 0.0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        acc -= riem.get(i, j, k, l) * xv[i] * yv[j] * zv[k] * wv[l];
                    }
                }
            }
        }
        acc
    }

    pub fn ricci(&self, x: &[f64]) -> DMatrix<f64> {
        ricci_from_riemann(&self.metric(x), &self.riemann(x))
    }

    pub fn scalar(&self, x: &[f64]) -> f64 {
        let g = self.metric(x);
        scalar_from_ricci(&g, &ricci_from_riemann(&g, &self.riemann(x)))
    }

    /// Orthonormal tangent frame; column `a` holds the coordinate
    /// components of the a-th frame vector. Deterministic (Gram-Schmidt in
    /// fixed column order).
    pub fn frame(&self, x: &[f64]) -> DMatrix<f64> {
        (self.frame)(x)
    }

    /// `d_c F` for the frame field, one matrix per coordinate.
    pub fn frame_deriv(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        (self.frame_deriv)(x)
    }

    pub fn origin(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.m
            && x.iter()
                .zip(&self.domain)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn check_interior(&self, x: &[f64]) -> Result<()> {
        if !self.contains(x) {
            return Err(Error::Domain(format!("point {x:?} outside chart box")));
        }
        Ok(())
    }

    /// Uniform sample from the box shrunk by a 10% margin per side.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.domain
            .iter()
            .map(|(lo, hi)| {
                let pad = 0.1 * (hi - lo);
                rng.random_range(lo + pad..hi - pad)
            })
            .collect()
    }

    /// Custom chart from a metric closure; everything else is
    /// finite-difference with step `1e-4` times the local coordinate scale.
    pub fn custom(
        m: usize,
        domain: Vec<(f64, f64)>,
        metric: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Result<BaseChart> {
        if m < 1 || domain.len() != m {
            return Err(Error::InvalidParameter(
                "custom chart needs m >= 1 and a box per coordinate".into(),
            ));
        }
        let metric: EvalMat = Arc::new(metric);
        let met = metric.clone();
        let dmetric: EvalT3 = Arc::new(move |x| fd_dmatrix(met.as_ref(), x, 1e-4));
        let met = metric.clone();
        let dmet = dmetric.clone();
        let christoffel: EvalT3 =
            Arc::new(move |x| christoffel_from_parts(&met(x), &dmet(x)));
        let met = metric.clone();
        let plain: EvalT4 = Arc::new(move |x| fd_riemann_of_metric(met.as_ref(), x, 1e-4, 1e-4));

        // Symmetry probe at the box centre; on failure switch to one
        // Richardson extrapolation pass in the differencing steps.
        let centre: Vec<f64> = domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        let probe = plain(&centre);
        let scale = probe.max_abs().max(1.0);
        let riemann: EvalT4 = if riemann_symmetry_residual(&probe) > 1e-4 * scale {
            let met = metric.clone();
            Arc::new(move |x| {
                let coarse = fd_riemann_of_metric(met.as_ref(), x, 1e-4, 1e-4);
                let fine = fd_riemann_of_metric(met.as_ref(), x, 5e-5, 5e-5);
                let (n, _, _, _) = coarse.dims();
                let mut out = Tensor4::zeros(n, n, n, n);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                out.set(
                                    i,
                                    j,
                                    k,
                                    l,
                                    (4.0 * fine.get(i, j, k, l) - coarse.get(i, j, k, l)) / 3.0,
                                );
                            }
                        }
                    }
                }
                out
            })
        } else {
            plain
        };

        let met = metric.clone();
        let frame: EvalMat = Arc::new(move |x| numerics::gram_schmidt(&met(x)));
        let fr = frame.clone();
        let frame_deriv: EvalFrames = Arc::new(move |x| fd_frame_deriv(fr.as_ref(), x));

        Ok(BaseChart {
            m,
            kind: ChartKind::Custom,
            domain,
            metric,
            dmetric,
            christoffel,
            riemann,
            frame,
            frame_deriv,
        })
    }
}

fn riemann_symmetry_residual(r: &Tensor4) -> f64 {
    let (n, _, _, _) = r.dims();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r.get(i, j, k, l);
                    worst = worst.max((v + r.get(j, i, k, l)).abs());
                    worst = worst.max((v + r.get(i, j, l, k)).abs());
                    worst = worst.max((v - r.get(k, l, i, j)).abs());
                    worst = worst
                        .max((v + r.get(j, k, i, l) + r.get(k, i, j, l)).abs());
                }
            }
        }
    }
    worst
}

fn fd_frame_deriv(frame: &(dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync), x: &[f64]) -> Vec<DMatrix<f64>> {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        let h = numerics::fd_step(1e-5, x[c]);
        xp[c] = x[c] + h;
        let fp = frame(&xp);
        xp[c] = x[c] - h;
        let fm = frame(&xp);
        xp[c] = x[c];
        out.push((fp - fm) / (2.0 * h));
    }
    out
}

/// Builtin model chart. `curv` must be positive for sphere/hyperbolic; the
/// resulting sectional curvature is `+curv` resp. `-curv`.
pub fn model_chart(kind: ChartKind, m: usize) -> Result<BaseChart> {
    if m < 1 {
        return Err(Error::InvalidParameter(format!("invalid dimension m = {m}")));
    }
    // sigma multiplies |x|^2 in the conformal factor; sect is the constant
    // sectional curvature.
    let (sigma, sect, half_width) = match kind {
        ChartKind::Flat => (0.0, 0.0, 8.0),
        ChartKind::Sphere { curv } => {
            if !(curv > 0.0) {
                return Err(Error::InvalidParameter("sphere chart needs curv > 0".into()));
            }
            (curv, curv, 0.75)
        }
        ChartKind::Hyperbolic { curv } => {
            if !(curv > 0.0) {
                return Err(Error::InvalidParameter(
                    "hyperbolic chart needs curv > 0".into(),
                ));
            }
            // keep |x|^2 < 1/curv with headroom
            (-curv, -curv, 0.85 / (curv * m as f64).sqrt())
        }
        ChartKind::Custom => {
            return Err(Error::InvalidParameter(
                "use BaseChart::custom for custom charts".into(),
            ))
        }
    };
    let domain = vec![(-half_width, half_width); m];

    let lam = move |x: &[f64]| {
        if sigma == 0.0 {
            return 1.0;
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        2.0 / (1.0 + sigma * r2)
    };
    // w_i = d_i log(lambda)
    let w = move |x: &[f64]| -> Vec<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let d = 1.0 + sigma * r2;
        x.iter().map(|v| -2.0 * sigma * v / d).collect()
    };

    let metric: EvalMat = Arc::new(move |x| {
        let l = lam(x);
        DMatrix::identity(x.len(), x.len()) * (l * l)
    });

    let dmetric: EvalT3 = Arc::new(move |x| {
        let n = x.len();
        let l2 = lam(x) * lam(x);
        let wv = w(x);
        let mut t = Tensor3::zeros(n, n, n);
        for c in 0..n {
            for a in 0..n {
                t.set(c, a, a, 2.0 * l2 * wv[c]);
            }
        }
        t
    });

    let christoffel: EvalT3 = Arc::new(move |x| {
        let n = x.len();
        let wv = w(x);
        let mut t = Tensor3::zeros(n, n, n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if k == i {
                        v += wv[j];
                    }
                    if k == j {
                        v += wv[i];
                    }
                    if i == j {
                        v -= wv[k];
                    }
                    t.set(k, i, j, v);
                }
            }
        }
        t
    });

    let riemann: EvalT4 = Arc::new(move |x| {
        let n = x.len();
        let l2 = lam(x) * lam(x);
        let mut t = Tensor4::zeros(n, n, n, n);
        if sect != 0.0 {
            // g = l2 * I: R_{ijkl} = sect (g_ik g_jl - g_il g_jk)
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        t.set(i, j, i, j, sect * l2 * l2);
                        t.set(i, j, j, i, -sect * l2 * l2);
                    }
                }
            }
        }
        t
    });

    let frame: EvalMat = Arc::new(move |x| {
        let n = x.len();
        DMatrix::identity(n, n) / lam(x)
    });

    let frame_deriv: EvalFrames = Arc::new(move |x| {
        let n = x.len();
        let l = lam(x);
        let wv = w(x);
        (0..n)
            .map(|c| DMatrix::identity(n, n) * (-wv[c] / l))
            .collect()
    });

    Ok(BaseChart {
        m,
        kind,
        domain,
        metric,
        dmetric,
        christoffel,
        riemann,
        frame,
        frame_deriv,
    })
}
