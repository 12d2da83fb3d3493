//! Radial weight functions and the derived connection coefficients.
//!
//! A profile carries the two weights as functions of the squared fibre norm
//! `r`, together with analytic first and second derivatives and an upper
//! domain bound. Derivative consistency is never trusted: the test suite
//! checks every profile against central differences.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The pair of radial weights with their first two derivatives in `r`.
#[derive(Clone)]
pub struct WeightProfile {
    phi1: Scalar,
    dphi1: Scalar,
    d2phi1: Scalar,
    phi2: Scalar,
    dphi2: Scalar,
    d2phi2: Scalar,
    r_max: f64,
    label: String,
}

impl fmt::Debug for WeightProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightProfile({}, r_max={})", self.label, self.r_max)
    }
}

/// Values of the metric-connection coefficients at a given radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionCoefficients {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

impl WeightProfile {
    /// Constant weights; the whole half-line is admissible.
    pub fn constant(phi1: f64, phi2: f64) -> Self {
        WeightProfile {
            phi1: Arc::new(move |_| phi1),
            dphi1: Arc::new(|_| 0.0),
            d2phi1: Arc::new(|_| 0.0),
            phi2: Arc::new(move |_| phi2),
            dphi2: Arc::new(|_| 0.0),
            d2phi2: Arc::new(|_| 0.0),
            r_max: f64::INFINITY,
            label: "constant".into(),
        }
    }

    /// Bryant-Salamon weights `phi1 = 1/4 log(2 c0^2 s r + c1)`,
    /// `phi2 = -phi1 + log c0`. For `s < 0` the domain is the open disk
    /// bundle on which the log argument stays positive.
    pub fn bryant_salamon(c0: f64, c1: f64, s: f64) -> Result<Self> {
        if !(c0 > 0.0) || !(c1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bryant_salamon requires c0, c1 > 0 (got c0={c0}, c1={c1})"
            )));
        }
        let slope = 2.0 * c0 * c0 * s;
        let r_max = if s < 0.0 { -c1 / slope } else { f64::INFINITY };
        let u = move |r: f64| slope * r + c1;
        let logc0 = c0.ln();
        Ok(WeightProfile {
            phi1: Arc::new(move |r| 0.25 * u(r).ln()),
            dphi1: Arc::new(move |r| 0.25 * slope / u(r)),
            d2phi1: Arc::new(move |r| -0.25 * slope * slope / (u(r) * u(r))),
            phi2: Arc::new(move |r| -0.25 * u(r).ln() + logc0),
            dphi2: Arc::new(move |r| -0.25 * slope / u(r)),
            d2phi2: Arc::new(move |r| 0.25 * slope * slope / (u(r) * u(r))),
            r_max,
            label: format!("bryant_salamon(c0={c0}, c1={c1}, s={s})"),
        })
    }

    /// Kaehler disk-bundle family: `e^{2 phi1} = sqrt(c1 + kappa r)`,
    /// `e^{2 phi2} = 1 / sqrt(c1 + kappa r)`.
    pub fn kahler_disk(c1: f64, kappa: f64) -> Result<Self> {
        if !(c1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kahler_disk requires c1 > 0 (got {c1})"
            )));
        }
        let r_max = if kappa < 0.0 { -c1 / kappa } else { f64::INFINITY };
        let u = move |r: f64| c1 + kappa * r;
        Ok(WeightProfile {
            phi1: Arc::new(move |r| 0.25 * u(r).ln()),
            dphi1: Arc::new(move |r| 0.25 * kappa / u(r)),
            d2phi1: Arc::new(move |r| -0.25 * kappa * kappa / (u(r) * u(r))),
            phi2: Arc::new(move |r| -0.25 * u(r).ln()),
            dphi2: Arc::new(move |r| -0.25 * kappa / u(r)),
            d2phi2: Arc::new(move |r| 0.25 * kappa * kappa / (u(r) * u(r))),
            r_max,
            label: format!("kahler_disk(c1={c1}, kappa={kappa})"),
        })
    }

    /// Polynomial weights in `r`, coefficients in ascending powers.
    pub fn poly(coeffs1: Vec<f64>, coeffs2: Vec<f64>) -> Self {
        fn eval(c: &[f64], r: f64) -> f64 {
            c.iter().rev().fold(0.0, |acc, &a| acc * r + a)
        }
        fn deriv(c: &[f64]) -> Vec<f64> {
            c.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect()
        }
        let d1 = deriv(&coeffs1);
        let dd1 = deriv(&d1);
        let d2 = deriv(&coeffs2);
        let dd2 = deriv(&d2);
        let label = format!("poly(phi1={coeffs1:?}, phi2={coeffs2:?})");
        let (c1a, c2a) = (coeffs1.clone(), coeffs2.clone());
        WeightProfile {
            phi1: Arc::new(move |r| eval(&c1a, r)),
            dphi1: Arc::new(move |r| eval(&d1, r)),
            d2phi1: Arc::new(move |r| eval(&dd1, r)),
            phi2: Arc::new(move |r| eval(&c2a, r)),
            dphi2: Arc::new(move |r| eval(&d2, r)),
            d2phi2: Arc::new(move |r| eval(&dd2, r)),
            r_max: f64::INFINITY,
            label,
        }
    }

    /// Custom profile from evaluator callbacks. `r_max = None` leaves the
    /// domain unbounded.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        phi1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dphi1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2phi1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dphi2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2phi2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r_max: Option<f64>,
    ) -> Self {
        WeightProfile {
            phi1: Arc::new(phi1),
            dphi1: Arc::new(dphi1),
            d2phi1: Arc::new(d2phi1),
            phi2: Arc::new(phi2),
            dphi2: Arc::new(dphi2),
            d2phi2: Arc::new(d2phi2),
            r_max: r_max.unwrap_or(f64::INFINITY),
            label: "custom".into(),
        }
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Domain check `0 <= r < r_max`.
    pub fn check_domain(&self, r: f64) -> Result<()> {
        if !(r >= 0.0) || r >= self.r_max {
            return Err(Error::Domain(format!(
                "r = {r} outside weight domain [0, {})",
                self.r_max
            )));
        }
        Ok(())
    }

    pub fn phi1(&self, r: f64) -> f64 {
        (self.phi1)(r)
    }
    pub fn dphi1(&self, r: f64) -> f64 {
        (self.dphi1)(r)
    }
    pub fn d2phi1(&self, r: f64) -> f64 {
        (self.d2phi1)(r)
    }
    pub fn phi2(&self, r: f64) -> f64 {
        (self.phi2)(r)
    }
    pub fn dphi2(&self, r: f64) -> f64 {
        (self.dphi2)(r)
    }
    pub fn d2phi2(&self, r: f64) -> f64 {
        (self.d2phi2)(r)
    }

    /// Weight factors `e^{2 phi_i(r)}`.
    pub fn e2phi1(&self, r: f64) -> f64 {
        (2.0 * self.phi1(r)).exp()
    }
    pub fn e2phi2(&self, r: f64) -> f64 {
        (2.0 * self.phi2(r)).exp()
    }

    /// Connection coefficients at radius `r`:
    /// `a = 2 phi1'`, `b = 2 phi2'`, `c2 = -b`,
    /// `c1 = -a e^{2(phi1 - phi2)}`.
    pub fn coefficients(&self, r: f64) -> Result<ConnectionCoefficients> {
        self.check_domain(r)?;
        let a = 2.0 * self.dphi1(r);
        let b = 2.0 * self.dphi2(r);
        let c1 = -a * (2.0 * (self.phi1(r) - self.phi2(r))).exp();
        let c2 = -b;
        Ok(ConnectionCoefficients { a, b, c1, c2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn builtins() -> Vec<WeightProfile> {
        vec![
            WeightProfile::constant(0.3, -0.2),
            WeightProfile::bryant_salamon(1.0, 1.0, 1.0).unwrap(),
            WeightProfile::bryant_salamon(1.0, 2.0, -1.0).unwrap(),
            WeightProfile::kahler_disk(1.5, -0.7).unwrap(),
            WeightProfile::kahler_disk(0.8, 2.0).unwrap(),
            WeightProfile::poly(vec![0.0, 1.0], vec![0.1, -0.3, 0.05]),
        ]
    }

    #[test]
    fn coefficients_constant_profile_vanish() {
        let w = WeightProfile::constant(0.7, -1.1);
        let c = w.coefficients(2.5).unwrap();
        assert_eq!((c.a, c.b, c.c1, c.c2), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn coefficients_bryant_salamon_at_zero() {
        // a = -b = c2 = c0^2 s / c1, c1 = -s
        let w = WeightProfile::bryant_salamon(1.0, 1.0, 1.0).unwrap();
        let c = w.coefficients(0.0).unwrap();
        assert!((c.a - 1.0).abs() < 1e-15);
        assert!((c.b + 1.0).abs() < 1e-15);
        assert!((c.c1 + 1.0).abs() < 1e-15);
        assert!((c.c2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coefficients_linear_phi1() {
        let w = WeightProfile::poly(vec![0.0, 1.0], vec![0.0]);
        let c = w.coefficients(1.0).unwrap();
        assert!((c.a - 2.0).abs() < 1e-15);
        assert_eq!(c.b, 0.0);
        assert_eq!(c.c2, 0.0);
        let e2 = (2.0_f64).exp();
        assert!((c.c1 + 2.0 * e2).abs() < 1e-12);
    }

    #[test]
    fn builtin_profile_bryant_salamon_values() {
        let w = WeightProfile::bryant_salamon(1.0, 1.0, 1.0).unwrap();
        assert!((w.phi1(0.0)).abs() < 1e-15);
        assert!((w.e2phi1(0.0) - 1.0).abs() < 1e-15);
        assert!((w.dphi1(0.0) - 0.5).abs() < 1e-15);
        assert!((w.dphi2(0.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn builtin_profile_disk_bound() {
        let w = WeightProfile::bryant_salamon(1.0, 2.0, -1.0).unwrap();
        assert!((w.r_max() - 1.0).abs() < 1e-15);
        assert!(w.coefficients(0.999).is_ok());
        assert!(w.coefficients(1.0).is_err());
        assert!(w.coefficients(-0.1).is_err());

        let c = WeightProfile::constant(0.0, 0.0);
        assert_eq!(c.r_max(), f64::INFINITY);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(WeightProfile::bryant_salamon(0.0, 1.0, 1.0).is_err());
        assert!(WeightProfile::bryant_salamon(1.0, -1.0, 1.0).is_err());
        assert!(WeightProfile::kahler_disk(0.0, 1.0).is_err());
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for w in builtins() {
            let hi = if w.r_max().is_finite() { w.r_max() } else { 4.0 };
            for _ in 0..100 {
                let r = rng.random_range(hi * 0.02..hi * 0.9);
                let fd1 = (w.phi1(r + h) - w.phi1(r - h)) / (2.0 * h);
                let fd2 = (w.phi2(r + h) - w.phi2(r - h)) / (2.0 * h);
                let fdd1 = (w.dphi1(r + h) - w.dphi1(r - h)) / (2.0 * h);
                let fdd2 = (w.dphi2(r + h) - w.dphi2(r - h)) / (2.0 * h);
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
                assert!(rel(fd1, w.dphi1(r)) < 1e-6, "{} dphi1 at r={r}", w.label());
                assert!(rel(fd2, w.dphi2(r)) < 1e-6, "{} dphi2 at r={r}", w.label());
                assert!(rel(fdd1, w.d2phi1(r)) < 1e-6, "{} d2phi1 at r={r}", w.label());
                assert!(rel(fdd2, w.d2phi2(r)) < 1e-6, "{} d2phi2 at r={r}", w.label());
            }
        }
    }

    #[test]
    fn coefficient_identity_holds_for_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for w in builtins() {
            let hi = if w.r_max().is_finite() { w.r_max() } else { 4.0 };
            for _ in 0..50 {
                let r = rng.random_range(0.0..hi * 0.9);
                let c = w.coefficients(r).unwrap();
                // c1 e^{2 phi2} = -a e^{2 phi1}, implicit in the metric-connection theorem
                let lhs = c.c1 * w.e2phi2(r);
                let rhs = -c.a * w.e2phi1(r);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn bryant_salamon_identity_a_equals_minus_b() {
        for (c0, c1, s) in [(1.0, 1.0, 1.0), (0.7, 1.3, 1.0), (1.2, 2.0, -1.0)] {
            let w = WeightProfile::bryant_salamon(c0, c1, s).unwrap();
            let c = w.coefficients(0.0).unwrap();
            assert!((c.a + c.b).abs() < 1e-14);
            assert!((c.a - c0 * c0 * s / c1).abs() < 1e-14);
            assert!((c.c1 + s).abs() < 1e-14);
        }
    }
}
