//! Jacobi elliptic functions and the complete elliptic integral of the first kind.
//!
//! Everything is expressed in terms of the *parameter* `m = k²`, never the
//! modulus `k`. `K(m)` comes from the arithmetic-geometric mean and the triple
//! `(sn, cn, dn)` from the descending Landen transformation, which shares the
//! same AGM ladder.

use std::f64::consts::FRAC_PI_2;

use crate::error::{ensure, Error, Result};

const AGM_MAX_ITER: usize = 64;
const AGM_TOL: f64 = 1e-15;

/// Above this parameter the hyperbolic expansion is considered.
const NEAR_ONE: f64 = 1.0 - 1e-10;

/// The elliptic parameter `m ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EllipticParameter(f64);

impl EllipticParameter {
    pub fn new(m: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&m), "m", m, "0 <= m <= 1")?;
        Ok(Self(m))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The complementary parameter `1 - m`.
    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

impl TryFrom<f64> for EllipticParameter {
    type Error = Error;

    fn try_from(m: f64) -> Result<Self> {
        Self::new(m)
    }
}

impl From<EllipticParameter> for f64 {
    fn from(m: EllipticParameter) -> f64 {
        m.0
    }
}

/// Arithmetic-geometric mean of two positive numbers.
fn agm(mut a: f64, mut b: f64) -> Result<f64> {
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_TOL * a {
            return Ok(0.5 * (a + b));
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Err(Error::NoConvergence("arithmetic-geometric mean"))
}

/// Complete elliptic integral of the first kind,
/// `K(m) = ∫₀^{π/2} dθ / √(1 − m sin²θ)`.
///
/// `K(1)` is infinite and reported as [`Error::Divergence`].
pub fn complete_k(m: EllipticParameter) -> Result<f64> {
    let m = m.value();
    if m == 1.0 {
        return Err(Error::Divergence {
            what: "K(m)",
            name: "m",
            value: m,
        });
    }
    if m == 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok(FRAC_PI_2 / agm(1.0, (1.0 - m).sqrt())?)
}

/// Complementary integral `K'(m) = K(1 − m)`, computed as
/// `π / (2 AGM(1, √m))` so that small `m` loses no precision to `1 − m`.
pub fn complete_k_prime(m: EllipticParameter) -> Result<f64> {
    let m = m.value();
    if m == 0.0 {
        return Err(Error::Divergence {
            what: "K(1 - m)",
            name: "m",
            value: m,
        });
    }
    if m == 1.0 {
        return Ok(FRAC_PI_2);
    }
    Ok(FRAC_PI_2 / agm(1.0, m.sqrt())?)
}

/// The triple `(sn, cn, dn)` at a single argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobi {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

/// Jacobi elliptic functions for a fixed parameter.
///
/// Construction runs the AGM ladder once; every evaluation afterwards only
/// walks it back down, so this is the type to hold on to when the same `m`
/// is evaluated many times.
#[derive(Debug, Clone)]
pub struct EllipticFunctions {
    m: EllipticParameter,
    /// `K(m)`, infinite at `m = 1`.
    quarter_period: f64,
    /// `a_0..a_N` of the AGM ladder.
    a: Vec<f64>,
    /// `c_0..c_N` of the AGM ladder.
    c: Vec<f64>,
}

impl EllipticFunctions {
    pub fn new(m: EllipticParameter) -> Result<Self> {
        let mv = m.value();
        if mv == 1.0 {
            return Ok(Self {
                m,
                quarter_period: f64::INFINITY,
                a: Vec::new(),
                c: Vec::new(),
            });
        }
        let mut a = vec![1.0];
        let mut c = vec![mv.sqrt()];
        let mut b = (1.0 - mv).sqrt();
        while c[c.len() - 1] > AGM_TOL * a[a.len() - 1] {
            if a.len() > AGM_MAX_ITER {
                return Err(Error::NoConvergence("descending Landen transformation"));
            }
            let ai = a[a.len() - 1];
            c.push(0.5 * (ai - b));
            a.push(0.5 * (ai + b));
            b = (ai * b).sqrt();
        }
        let quarter_period = if mv == 0.0 {
            FRAC_PI_2
        } else {
            FRAC_PI_2 / a[a.len() - 1]
        };
        Ok(Self {
            m,
            quarter_period,
            a,
            c,
        })
    }

    pub fn parameter(&self) -> EllipticParameter {
        self.m
    }

    /// `K(m)`; `f64::INFINITY` when `m = 1`.
    pub fn quarter_period(&self) -> f64 {
        self.quarter_period
    }

    /// Evaluates `(sn, cn, dn)(u | m)`. The argument must be finite.
    pub fn eval(&self, u: f64) -> Result<Jacobi> {
        ensure(u.is_finite(), "u", u, "u must be finite")?;
        Ok(self.eval_unchecked(u))
    }

    pub(crate) fn eval_unchecked(&self, u: f64) -> Jacobi {
        let m = self.m.value();
        if m == 0.0 {
            let (sn, cn) = u.sin_cos();
            return Jacobi { sn, cn, dn: 1.0 };
        }
        if m == 1.0 {
            let sech = 1.0 / u.cosh();
            return Jacobi {
                sn: u.tanh(),
                cn: sech,
                dn: sech,
            };
        }

        // reduce to [-2K, 2K]
        let period = 4.0 * self.quarter_period;
        let u = u - period * (u / period).round();

        if m > NEAR_ONE {
            let cosh = u.cosh();
            // second-order remainder of the expansion is ~ ((1-m) cosh²u)²
            if (1.0 - m) * cosh * cosh <= 1e-6 {
                return hyperbolic_expansion(u, m);
            }
        }
        self.landen(u)
    }

    fn landen(&self, u: f64) -> Jacobi {
        let n = self.a.len() - 1;
        let mut phi = (2f64).powi(n as i32) * self.a[n] * u;
        for i in (1..=n).rev() {
            let t = self.c[i] * phi.sin() / self.a[i];
            phi = 0.5 * (t.asin() + phi);
        }
        let (sn, cn) = phi.sin_cos();
        // 1 - m sn^2 written without cancellation near sn = 1
        let m = self.m.value();
        let dn = (self.m.complement().value() + m * cn * cn).sqrt();
        Jacobi { sn, cn, dn }
    }
}

/// First-order expansion in `1 - m` about the hyperbolic limit.
fn hyperbolic_expansion(u: f64, m: f64) -> Jacobi {
    let q = 0.25 * (1.0 - m);
    let cosh = u.cosh();
    let sech = 1.0 / cosh;
    let tanh = u.tanh();
    let shch = cosh * u.sinh();
    let sn = tanh + q * (shch - u) / (cosh * cosh);
    let r = q * tanh * sech;
    Jacobi {
        sn,
        cn: sech - r * (shch - u),
        dn: sech + r * (shch + u),
    }
}

/// One-shot evaluation of `(sn, cn, dn)(u | m)`.
pub fn sn_cn_dn(u: f64, m: EllipticParameter) -> Result<Jacobi> {
    EllipticFunctions::new(m)?.eval(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn param(m: f64) -> EllipticParameter {
        EllipticParameter::new(m).unwrap()
    }

    #[test]
    fn parameter_domain() {
        assert!(EllipticParameter::new(-1e-9).is_err());
        assert!(EllipticParameter::new(1.0 + 1e-12).is_err());
        assert!(EllipticParameter::new(f64::NAN).is_err());
        assert!(EllipticParameter::new(0.0).is_ok());
        assert!(EllipticParameter::new(1.0).is_ok());
    }

    #[test]
    fn k_at_zero_and_one() {
        assert_eq!(complete_k(param(0.0)).unwrap(), PI / 2.0);
        assert!(matches!(
            complete_k(param(1.0)),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn k_reference_values() {
        // mpmath, 40 digits
        let cases = [
            (0.5, 1.854_074_677_301_371_9),
            (0.9, 2.578_092_113_348_172_9),
            (0.99, 3.695_637_362_989_874_8),
        ];
        for (m, k) in cases {
            let got = complete_k(param(m)).unwrap();
            assert!(((got - k) / k).abs() < 1e-13, "m={m}: {got} vs {k}");
        }
    }

    #[test]
    fn complementary_integral() {
        for m in [1e-3, 0.25, 0.5, 0.8] {
            let direct = complete_k(param(m).complement()).unwrap();
            let kp = complete_k_prime(param(m)).unwrap();
            assert!(((kp - direct) / direct).abs() < 1e-13);
        }
        // K(1 - m) ~ ln(4/√m) for small m
        let kp = complete_k_prime(param(1e-30)).unwrap();
        assert!((kp - (4.0 / 1e-15f64).ln()).abs() < 1e-12);
        assert!(complete_k_prime(param(0.0)).is_err());
    }

    #[test]
    fn ladder_and_agm_agree() {
        for m in [1e-8, 0.3, 0.7, 0.999_999] {
            let f = EllipticFunctions::new(param(m)).unwrap();
            let k = complete_k(param(m)).unwrap();
            assert!(((f.quarter_period() - k) / k).abs() < 1e-14);
        }
    }

    #[test]
    fn trigonometric_limit() {
        for u in [-3.0, -0.2, 0.0, 1.0, 7.5] {
            let j = sn_cn_dn(u, param(0.0)).unwrap();
            assert_eq!(j.sn, f64::sin(u));
            assert_eq!(j.cn, f64::cos(u));
            assert_eq!(j.dn, 1.0);
        }
    }

    #[test]
    fn hyperbolic_limit() {
        for u in [-3.0, -0.2, 0.0, 1.0, 7.5] {
            let j = sn_cn_dn(u, param(1.0)).unwrap();
            assert!((j.sn - u.tanh()).abs() < 1e-15);
            assert!((j.cn - 1.0 / u.cosh()).abs() < 1e-15);
            assert!((j.dn - 1.0 / u.cosh()).abs() < 1e-15);
        }
    }

    #[test]
    fn values_at_quarter_period() {
        for m in [0.1, 0.5, 0.7, 0.95] {
            let f = EllipticFunctions::new(param(m)).unwrap();
            let j = f.eval(f.quarter_period()).unwrap();
            assert!((j.sn - 1.0).abs() < 1e-13);
            assert!(j.cn.abs() < 1e-12);
            assert!((j.dn - (1.0 - m).sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn near_one_branches_are_continuous() {
        // both sides of the switch to the hyperbolic expansion
        let m = 1.0 - 1e-11;
        let f = EllipticFunctions::new(param(m)).unwrap();
        let u_switch = (1e-6 / (1.0 - m)).sqrt().acosh();
        let lo = f.eval(u_switch - 1e-9).unwrap();
        let hi = f.eval(u_switch + 1e-9).unwrap();
        assert!((lo.sn - hi.sn).abs() < 1e-11);
        assert!((lo.dn - hi.dn).abs() < 1e-11);
        let j = f.eval(f.quarter_period()).unwrap();
        assert!((j.sn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_argument_rejected() {
        assert!(sn_cn_dn(f64::NAN, param(0.5)).is_err());
        assert!(sn_cn_dn(f64::INFINITY, param(0.5)).is_err());
    }

    #[test]
    fn large_arguments_reduced() {
        let f = EllipticFunctions::new(param(0.8)).unwrap();
        let k = f.quarter_period();
        let a = f.eval(0.37).unwrap();
        let b = f.eval(0.37 + 400.0 * k).unwrap();
        assert!((a.sn - b.sn).abs() < 1e-11);
        assert!((a.cn - b.cn).abs() < 1e-11);
    }
}
