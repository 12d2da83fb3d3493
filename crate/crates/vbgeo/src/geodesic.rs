//! Geodesic flow of the weighted metric, in the paper's state variables
//! `(gamma, y, gamma_dot, z)` with `z^beta = ydot^beta + gamma_dot^i y^alpha
//! Gamma^{E,beta}_{i alpha}`, plus the standalone spherically symmetric
//! fibre system on R^k. Fixed-step classical RK4; results are bit-stable
//! across runs for pinned steps.

use nalgebra::DVector;

use crate::numerics::Tensor3;
use crate::scenario::Scene;
use crate::weights::WeightProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub dx: DVector<f64>,
    pub z: DVector<f64>,
}

impl GeodesicState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dx: Vec<f64>, z: Vec<f64>) -> GeodesicState {
        GeodesicState {
            x: DVector::from_vec(x),
            y: DVector::from_vec(y),
            dx: DVector::from_vec(dx),
            z: DVector::from_vec(z),
        }
    }

    pub fn r(&self) -> f64 {
        self.y.norm_squared()
    }

    /// Recover `ydot^beta = z^beta - dx^i y^alpha Gamma^{E,beta}_{i alpha}`.
    pub fn ydot(&self, scene: &Scene) -> DVector<f64> {
        let gam = scene.bundle.gamma(self.x.as_slice());
        recover_ydot(&gam, &self.y, &self.dx, &self.z)
    }
}

fn recover_ydot(
    gam: &Tensor3,
    y: &DVector<f64>,
    dx: &DVector<f64>,
    z: &DVector<f64>,
) -> DVector<f64> {
    let m = dx.len();
    let k = z.len();
    let mut out = z.clone();
    for beta in 0..k {
        for i in 0..m {
            for alpha in 0..k {
                out[beta] -= dx[i] * y[alpha] * gam.get(i, alpha, beta);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct GeodesicDeriv {
    pub dx: DVector<f64>,
    pub dy: DVector<f64>,
    pub ddx: DVector<f64>,
    pub dz: DVector<f64>,
}

/// Right-hand side of the geodesic system.
pub fn geodesic_rhs(scene: &Scene, st: &GeodesicState) -> Result<GeodesicDeriv> {
    let (m, k) = (scene.m(), scene.k());
    scene.chart.check_interior(st.x.as_slice())?;
    let r = st.r();
    let coef = scene.weights.coefficients(r)?;
    let e2diff = (2.0 * (scene.weights.phi2(r) - scene.weights.phi1(r))).exp();
    let x = st.x.as_slice();
    let g = scene.chart.metric(x);
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular base metric".into()))?;
    let sym = scene.chart.christoffel(x);
    let gam = scene.bundle.gamma(x);
    let re = scene.bundle.curvature(x);

    let zdoty = st.z.dot(&st.y);
    let zdotz = st.z.dot(&st.z);

    let mut ddx = DVector::zeros(m);
    for p in 0..m {
        let mut v = 0.0;
        for i in 0..m {
            for j in 0..m {
                v += st.dx[i] * st.dx[j] * sym.get(p, i, j);
            }
        }
        v += 2.0 * coef.a * st.dx[p] * zdoty;
        let mut curv = 0.0;
        for i in 0..m {
            if st.dx[i] == 0.0 {
                continue;
            }
            for beta in 0..k {
                for mu in 0..k {
                    if st.y[mu] == 0.0 {
                        continue;
                    }
                    for q in 0..m {
                        curv += st.dx[i] * st.z[beta] * st.y[mu] * re.get(beta, mu, i, q)
                            * ginv[(q, p)];
                    }
                }
            }
        }
        v += e2diff * curv;
        ddx[p] = -v;
    }

    let mut dz = DVector::zeros(k);
    let dxgdx = {
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += st.dx[i] * st.dx[j] * g[(i, j)];
            }
        }
        acc
    };
    for alpha in 0..k {
        let mut v = coef.c1 * dxgdx * st.y[alpha];
        for i in 0..m {
            for beta in 0..k {
                v += st.dx[i] * st.z[beta] * gam.get(i, beta, alpha);
            }
        }
        v += -coef.b * zdotz * st.y[alpha] + 2.0 * coef.b * st.z[alpha] * zdoty;
        dz[alpha] = -v;
    }

    Ok(GeodesicDeriv {
        dx: st.dx.clone(),
        dy: recover_ydot(&gam, &st.y, &st.dx, &st.z),
        ddx,
        dz,
    })
}

/// Norm of the velocity in the weighted metric: the split components of the
/// velocity are `(dx, z)`, so the speed is
/// `sqrt(e^{2 phi1} g_ij dx^i dx^j + e^{2 phi2} z.z)`.
pub fn speed(scene: &Scene, st: &GeodesicState) -> Result<f64> {
    let r = st.r();
    scene.weights.check_domain(r)?;
    let g = scene.chart.metric(st.x.as_slice());
    let base = (&g * &st.dx).dot(&st.dx);
    Ok((scene.weights.e2phi1(r) * base + scene.weights.e2phi2(r) * st.z.dot(&st.z)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationStatus {
    Completed,
    /// Left the chart box or the weight domain; trajectory truncated.
    BoundaryExit { t: f64 },
    NumericalError { t: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(t, state, speed)` at every accepted step, starting at t = 0.
    pub samples: Vec<(f64, GeodesicState, f64)>,
    pub status: IntegrationStatus,
    pub max_speed_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &GeodesicState {
        &self.samples.last().expect("trajectory has samples").1
    }
}

/// Classical fixed-step RK4.
pub fn integrate(scene: &Scene, init: &GeodesicState, t_end: f64, step: f64) -> Result<Trajectory> {
    if !(step > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidParameter("need step > 0 and t_end > 0".into()));
    }
    let speed0 = speed(scene, init)?;
    let mut samples = vec![(0.0, init.clone(), speed0)];
    let mut st = init.clone();
    let mut t = 0.0;
    let nsteps = (t_end / step).round() as usize;
    let mut max_drift: f64 = 0.0;

    for n in 0..nsteps {
        let mut boundary = false;
        let mut stages: Vec<GeodesicDeriv> = Vec::with_capacity(4);
        for (coeff, prev) in [(0.0, 0usize), (0.5, 0), (0.5, 1), (1.0, 2)] {
            let probe = if stages.is_empty() {
                st.clone()
            } else {
                step_state(&st, &stages[prev], coeff * step)
            };
            match geodesic_rhs(scene, &probe) {
                Ok(d) => stages.push(d),
                Err(Error::Domain(_)) => {
                    boundary = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if boundary {
            return Ok(Trajectory {
                samples,
                status: IntegrationStatus::BoundaryExit { t },
                max_speed_drift: max_drift,
            });
        }
        let combined = GeodesicDeriv {
            dx: (&stages[0].dx + &stages[1].dx * 2.0 + &stages[2].dx * 2.0 + &stages[3].dx) / 6.0,
            dy: (&stages[0].dy + &stages[1].dy * 2.0 + &stages[2].dy * 2.0 + &stages[3].dy) / 6.0,
            ddx: (&stages[0].ddx + &stages[1].ddx * 2.0 + &stages[2].ddx * 2.0 + &stages[3].ddx)
                / 6.0,
            dz: (&stages[0].dz + &stages[1].dz * 2.0 + &stages[2].dz * 2.0 + &stages[3].dz) / 6.0,
        };
        st = step_state(&st, &combined, step);
        t = (n + 1) as f64 * step;
        let has_nan = st
            .x
            .iter()
            .chain(st.y.iter())
            .chain(st.dx.iter())
            .chain(st.z.iter())
            .any(|v| !v.is_finite());
        if has_nan {
            return Ok(Trajectory {
                samples,
                status: IntegrationStatus::NumericalError { t },
                max_speed_drift: max_drift,
            });
        }
        if !scene.chart.contains(st.x.as_slice()) || st.r() >= scene.weights.r_max() {
            return Ok(Trajectory {
                samples,
                status: IntegrationStatus::BoundaryExit { t },
                max_speed_drift: max_drift,
            });
        }
        let sp = speed(scene, &st)?;
        if speed0 > 0.0 {
            max_drift = max_drift.max((sp - speed0).abs() / speed0);
        }
        samples.push((t, st.clone(), sp));
    }

    Ok(Trajectory { samples, status: IntegrationStatus::Completed, max_speed_drift: max_drift })
}

fn step_state(s: &GeodesicState, d: &GeodesicDeriv, h: f64) -> GeodesicState {
    GeodesicState {
        x: &s.x + &d.dx * h,
        y: &s.y + &d.dy * h,
        dx: &s.dx + &d.ddx * h,
        z: &s.z + &d.dz * h,
    }
}

/// Standalone fibre system on `R^k` with metric `e^{2 phi2} sum (dy)^2`:
/// `yddot^alpha = -2 b ydot^alpha (ydot . y) + b (ydot . ydot) y^alpha`.
pub fn fiber_geodesic_rhs(w: &WeightProfile, y: &DVector<f64>, ydot: &DVector<f64>) -> Result<DVector<f64>> {
    let r = y.norm_squared();
    w.check_domain(r)?;
    let b = 2.0 * w.dphi2(r);
    let ydoty = ydot.dot(y);
    let ydot2 = ydot.dot(ydot);
    Ok(ydot * (-2.0 * b * ydoty) + y * (b * ydot2))
}
