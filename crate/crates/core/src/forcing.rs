//! The elliptic AC force, its half-period impulse, and the reduction of the
//! laboratory Hamiltonian to scaled units.
//!
//! In scaled time `τ = ωt` the force
//!
//! ```text
//! F(τ; m) = N(m) sn(Ωτ | m) dn(Ωτ | m),   Ω = 2K(m)/π
//! ```
//!
//! has period `2π` for every shape parameter `m`. `m = 0` is the sine,
//! `m ≈ 0.72` is close to a square wave, and the force collapses onto ever
//! narrower double-humped pulses as `m → 1`, vanishing in the limit.

use std::f64::consts::PI;

use crate::elliptic::{complete_k, EllipticFunctions, EllipticParameter};
use crate::error::{ensure, Result};
use crate::quadrature;

const NORM_A: f64 = 0.43932;
const NORM_B: f64 = 0.69796;
const NORM_C: f64 = 0.3727;
const NORM_D: f64 = 0.26883;

/// Force period in scaled time.
pub const PERIOD: f64 = 2.0 * PI;

/// Fitted amplitude normalization `N(m) = 1 / (a + b / (1 + e^{(m-c)/d}))`.
///
/// This is a sigmoid fit, so `max |F|` is unity only to within about half a
/// percent.
pub fn normalization(m: EllipticParameter) -> f64 {
    let m = m.value();
    1.0 / (NORM_A + NORM_B / (1.0 + ((m - NORM_C) / NORM_D).exp()))
}

/// Dimensionless parameters of the scaled Hamiltonian
/// `H = p²/2 − κ cos[x − λ F(τ; m)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    kappa: f64,
    lambda: f64,
    m: EllipticParameter,
    hbar_eff: f64,
    omega: f64,
}

impl ScaledParams {
    pub fn new(kappa: f64, lambda: f64, m: EllipticParameter, hbar_eff: f64) -> Result<Self> {
        ensure(kappa.is_finite() && kappa > 0.0, "kappa", kappa, "kappa > 0")?;
        ensure(lambda.is_finite() && lambda >= 0.0, "lambda", lambda, "lambda >= 0")?;
        ensure(
            hbar_eff.is_finite() && hbar_eff > 0.0,
            "hbar_eff",
            hbar_eff,
            "hbar_eff > 0",
        )?;
        let omega = match complete_k(m) {
            Ok(k) => 2.0 * k / PI,
            Err(_) => f64::INFINITY,
        };
        Ok(Self {
            kappa,
            lambda,
            m,
            hbar_eff,
            omega,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m(&self) -> EllipticParameter {
        self.m
    }

    pub fn hbar_eff(&self) -> f64 {
        self.hbar_eff
    }

    /// `Ω = 2K(m)/π`, infinite at `m = 1`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.kappa, lambda, self.m, self.hbar_eff)
    }

    pub fn with_m(&self, m: EllipticParameter) -> Result<Self> {
        Self::new(self.kappa, self.lambda, m, self.hbar_eff)
    }

    pub fn waveform(&self) -> Waveform {
        Waveform::new(self.m)
    }
}

/// Laboratory parameters of the shaken lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mass: f64,
    pub wave_number: f64,
    pub potential_depth: f64,
    pub period: f64,
    pub hbar: f64,
    pub lambda: f64,
    pub m: EllipticParameter,
}

/// Maps laboratory parameters to scaled ones:
/// `κ = V₀k²T²/(π²M)`, `ħ_eff = 2ħk²T/(πM)`; `λ` and `m` pass through.
pub fn scale_physical(p: &PhysicalParams) -> Result<ScaledParams> {
    for (name, v) in [
        ("mass", p.mass),
        ("wave_number", p.wave_number),
        ("potential_depth", p.potential_depth),
        ("period", p.period),
        ("hbar", p.hbar),
    ] {
        ensure(v.is_finite() && v > 0.0, name, v, "must be strictly positive")?;
    }
    let k2 = p.wave_number * p.wave_number;
    let kappa = p.potential_depth * k2 * p.period * p.period / (PI * PI * p.mass);
    let hbar_eff = 2.0 * p.hbar * k2 * p.period / (PI * p.mass);
    ScaledParams::new(kappa, p.lambda, p.m, hbar_eff)
}

/// The normalized force `F(τ; m)` with period `2π`.
#[derive(Debug, Clone)]
pub struct Waveform {
    functions: EllipticFunctions,
    norm: f64,
    omega: f64,
}

impl Waveform {
    pub fn new(m: EllipticParameter) -> Self {
        // the ladder only fails to converge for invalid m, which the newtype excludes
        let functions = EllipticFunctions::new(m).expect("AGM ladder for a valid parameter");
        let omega = 2.0 * functions.quarter_period() / PI;
        Self {
            functions,
            norm: normalization(m),
            omega,
        }
    }

    pub fn m(&self) -> EllipticParameter {
        self.functions.parameter()
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        PERIOD
    }

    /// `F(τ; m)`. Identically zero at `m = 1`.
    #[inline]
    pub fn value(&self, tau: f64) -> f64 {
        if !self.omega.is_finite() {
            return 0.0;
        }
        let j = self.functions.eval_unchecked(self.omega * tau);
        self.norm * j.sn * j.dn
    }
}

/// `F(τ; m)` for a one-off evaluation; build a [`Waveform`] for repeated use.
pub fn force(tau: f64, m: EllipticParameter) -> Result<f64> {
    ensure(tau.is_finite(), "tau", tau, "tau must be finite")?;
    Ok(Waveform::new(m).value(tau))
}

/// Half-period impulse `I(m, T) = T N(m) / (2K(m))`.
///
/// At `m = 1` the force vanishes and the limit value `0` is returned.
pub fn impulse_closed_form(m: EllipticParameter, period: f64) -> Result<f64> {
    ensure(period.is_finite() && period > 0.0, "T", period, "T > 0")?;
    if m.value() == 1.0 {
        return Ok(0.0);
    }
    Ok(period * normalization(m) / (2.0 * complete_k(m)?))
}

/// `I(m, T) = ∫₀^{T/2} F(t; m, T) dt` by adaptive quadrature.
///
/// The integral is taken in scaled time over `[0, π]` and rescaled by `T/2π`,
/// so the absolute tolerance is relative to the `T = 2π` problem.
pub fn impulse_quadrature(m: EllipticParameter, period: f64) -> Result<f64> {
    ensure(period.is_finite() && period > 0.0, "T", period, "T > 0")?;
    let wave = Waveform::new(m);
    let scaled = quadrature::integrate(|tau| wave.value(tau), 0.0, PI, 1e-12)?;
    Ok(scaled.value * period / PERIOD)
}

/// `I(m, T) / I(0, T)`, independent of `T`.
pub fn normalized_impulse(m: EllipticParameter) -> Result<f64> {
    let zero = EllipticParameter::new(0.0)?;
    Ok(impulse_closed_form(m, PERIOD)? / impulse_closed_form(zero, PERIOD)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(m: f64) -> EllipticParameter {
        EllipticParameter::new(m).unwrap()
    }

    #[test]
    fn normalization_reference_points() {
        // direct evaluation of the sigmoid
        assert!((normalization(param(0.0)) - 1.002_307_973_516_834).abs() < 1e-12);
        assert!((normalization(param(1.0)) - 1.995_955_546_084_52).abs() < 1e-12);
        let mid = normalization(param(NORM_C));
        assert!((mid - 1.0 / (NORM_A + NORM_B / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn force_at_origin_vanishes() {
        for m in [0.0, 0.3, 0.9, 0.9999, 1.0] {
            assert_eq!(force(0.0, param(m)).unwrap(), 0.0);
        }
    }

    #[test]
    fn force_quarter_period_value() {
        let m = param(0.7);
        let f = force(PI / 2.0, m).unwrap();
        let expected = normalization(m) * (0.3f64).sqrt();
        assert!((f - expected).abs() < 1e-12);
    }

    #[test]
    fn force_vanishes_at_m_one() {
        for tau in [0.3, 1.0, 4.0] {
            assert_eq!(force(tau, param(1.0)).unwrap(), 0.0);
        }
        assert_eq!(impulse_closed_form(param(1.0), PERIOD).unwrap(), 0.0);
        assert_eq!(impulse_quadrature(param(1.0), PERIOD).unwrap(), 0.0);
    }

    #[test]
    fn impulse_sine_case() {
        let t = 3.7;
        let i = impulse_closed_form(param(0.0), t).unwrap();
        assert!((i - t * normalization(param(0.0)) / PI).abs() < 1e-15);
        let q = impulse_quadrature(param(0.0), PERIOD).unwrap();
        assert!((q - 2.0 * normalization(param(0.0))).abs() < 1e-12);
    }

    #[test]
    fn impulse_rejects_bad_period() {
        assert!(impulse_closed_form(param(0.5), 0.0).is_err());
        assert!(impulse_quadrature(param(0.5), -1.0).is_err());
    }

    #[test]
    fn scaling_power_counting() {
        let base = PhysicalParams {
            mass: 2.0,
            wave_number: 1.5,
            potential_depth: 0.7,
            period: 3.0,
            hbar: 0.1,
            lambda: 2.0,
            m: param(0.4),
        };
        let a = scale_physical(&base).unwrap();
        let b = scale_physical(&PhysicalParams {
            period: 6.0,
            ..base
        })
        .unwrap();
        assert!((b.kappa() / a.kappa() - 4.0).abs() < 1e-14);
        assert!((b.hbar_eff() / a.hbar_eff() - 2.0).abs() < 1e-14);
        assert_eq!(a.lambda(), 2.0);
        assert_eq!(a.m(), param(0.4));
    }

    #[test]
    fn scaling_hits_working_kappa() {
        // V0 k² T² = 0.36 π² M
        let p = PhysicalParams {
            mass: 3.0,
            wave_number: 2.0,
            potential_depth: 0.36 * PI * PI * 3.0 / (4.0 * 1.5 * 1.5),
            period: 1.5,
            hbar: 1.0,
            lambda: 0.0,
            m: param(0.0),
        };
        assert!((scale_physical(&p).unwrap().kappa() - 0.36).abs() < 1e-14);
    }

    #[test]
    fn scaled_params_validation() {
        let m = param(0.5);
        assert!(ScaledParams::new(-1.0, 1.0, m, 0.16).is_err());
        assert!(ScaledParams::new(0.36, -0.1, m, 0.16).is_err());
        assert!(ScaledParams::new(0.36, 1.0, m, 0.0).is_err());
        let p = ScaledParams::new(0.36, 1.0, m, 0.16).unwrap();
        let k = complete_k(m).unwrap();
        assert!((p.omega() - 2.0 * k / PI).abs() < 1e-12);
    }
}
