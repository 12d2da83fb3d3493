//! Generalized Sasaki almost-Hermitian structure on tangent-bundle
//! scenarios: the almost-complex structure `J = e^{-psi} B - e^{psi} B^t`
//! with `psi = phi2 - phi1`, its fundamental 2-form
//! `omega(X, Y) = g(J X, Y)`, and a finite-difference closedness test.
//!
//! `d omega` is computed on the coordinate-frame components of `omega`;
//! the split-frame components are never differentiated because the frame
//! itself depends on the base point.

use nalgebra::{DMatrix, DVector};

use crate::scenario::Scene;
use crate::total::{self, SplitVector, TotalPoint};
use crate::{Error, Result};

fn require_tangent(scene: &Scene) -> Result<()> {
    if !scene.bundle.is_tangent_bundle {
        return Err(Error::InvalidParameter(
            "Sasaki structure requires a tangent-bundle scenario".into(),
        ));
    }
    Ok(())
}

/// `psi = phi2 - phi1` at radius r.
pub fn psi(scene: &Scene, r: f64) -> f64 {
    scene.weights.phi2(r) - scene.weights.phi1(r)
}

/// `psibar = phi2 + phi1` at radius r.
pub fn psibar(scene: &Scene, r: f64) -> f64 {
    scene.weights.phi2(r) + scene.weights.phi1(r)
}

/// Matrix of J in the orthonormal split frame:
/// `[[0, -e^{psi} I], [e^{-psi} I, 0]]`.
pub fn sasaki_j(scene: &Scene, p: &TotalPoint) -> Result<DMatrix<f64>> {
    require_tangent(scene)?;
    total::check_point(scene, p)?;
    let m = scene.m();
    let ps = psi(scene, p.r());
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = -ps.exp();
        j[(m + i, i)] = (-ps).exp();
    }
    Ok(j)
}

/// Apply J to a split vector. Horizontal components live in the coordinate
/// lift frame, vertical ones in the orthonormal bundle frame, so the
/// identification `B Z^h = Z^v` routes through the chart frame.
pub fn apply_j(scene: &Scene, p: &TotalPoint, v: &SplitVector) -> Result<SplitVector> {
    require_tangent(scene)?;
    total::check_point(scene, p)?;
    let ps = psi(scene, p.r());
    let frame = scene.chart.frame(p.x.as_slice());
    let finv = frame
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular frame".into()))?;
    Ok(SplitVector {
        h: &frame * &v.v * (-ps.exp()),
        v: &finv * &v.h * (-ps).exp(),
    })
}

/// `omega(X, Y) = g_{M,E}(J X, Y)` as a matrix in the coordinate frame.
pub fn omega_coord(scene: &Scene, p: &TotalPoint) -> Result<DMatrix<f64>> {
    require_tangent(scene)?;
    let n = scene.dim_total();
    let metric = total::assemble_metric(scene, p)?.coord;
    let mut out = DMatrix::zeros(n, n);
    let mut cols = Vec::with_capacity(n);
    for a in 0..n {
        let mut ea = DVector::zeros(n);
        ea[a] = 1.0;
        let ja = apply_j(scene, p, &total::split(scene, p, &ea))?;
        cols.push(total::unsplit(scene, p, &ja));
    }
    for a in 0..n {
        for b in 0..n {
            out[(a, b)] = (&metric * &cols[a]).dot(&{
                let mut eb = DVector::zeros(n);
                eb[b] = 1.0;
                eb
            });
        }
    }
    Ok(out)
}

/// The canonical 2-form `omega^{S,0}` (unweighted metric, psi = 0) in the
/// coordinate frame.
pub fn omega_canonical_coord(scene: &Scene, p: &TotalPoint) -> Result<DMatrix<f64>> {
    require_tangent(scene)?;
    let unweighted = Scene::new(
        scene.chart.clone(),
        scene.bundle.clone(),
        crate::weights::WeightProfile::constant(0.0, 0.0),
    );
    omega_coord(&unweighted, p)
}

/// Max-norm of the finite-difference exterior derivative of `omega` over
/// all coordinate index triples.
pub fn d_omega_norm(scene: &Scene, p: &TotalPoint) -> Result<f64> {
    require_tangent(scene)?;
    total::check_point(scene, p)?;
    let n = scene.dim_total();
    let m = scene.m();
    if n < 3 {
        // a 3-form on a manifold of dimension < 3 is identically zero
        return Ok(0.0);
    }
    let h = 1e-4;
    // boundary guard for the differencing
    for (v, (lo, hi)) in p.x.iter().zip(&scene.chart.domain) {
        if *v - h < *lo || *v + h > *hi {
            return Err(Error::Domain("too close to the chart boundary for d omega".into()));
        }
    }
    if scene.weights.r_max().is_finite() {
        let reach = p.y.norm() + h;
        if reach * reach >= scene.weights.r_max() {
            return Err(Error::Domain("too close to the fibre bound for d omega".into()));
        }
    }

    // d omega_{ABC} = d_A w_BC - d_B w_AC + d_C w_AB on coordinates
    let mut domega: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut qp = p.clone();
        bump(&mut qp, m, c, h);
        let wp = omega_coord(scene, &qp)?;
        bump(&mut qp, m, c, -2.0 * h);
        let wm = omega_coord(scene, &qp)?;
        domega.push((wp - wm) / (2.0 * h));
    }
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let v = domega[a][(b, c)] - domega[b][(a, c)] + domega[c][(a, b)];
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

fn bump(p: &mut TotalPoint, m: usize, c: usize, h: f64) {
    if c < m {
        p.x[c] += h;
    } else {
        p.y[c - m] += h;
    }
}
