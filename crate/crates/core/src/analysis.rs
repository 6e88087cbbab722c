//! Chaotic-layer width, the localization strength `Δp_{C−Q}`, and sweeps
//! over the waveform shape.

use std::f64::consts::PI;

use crate::classical::{self, ClassicalEnsemble, Integrator};
use crate::elliptic::{complete_k, complete_k_prime, EllipticParameter};
use crate::error::{ensure, Error, Result};
use crate::forcing::{normalization, normalized_impulse, ScaledParams, Waveform, PERIOD};
use crate::quadrature;
use crate::quantum::{self, QuantumSettings};
use crate::stats;

const SERIES_MAX_TERMS: usize = 200;
const SERIES_REL_TOL: f64 = 1e-14;

/// First-order estimate of the energy width of the separatrix chaotic layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerWidthResult {
    pub d: f64,
    pub n_terms: usize,
    /// Rigorous upper bound on the neglected tail of the series, times the
    /// prefactor.
    pub truncation_error_bound: f64,
}

/// `d(λ, κ, m) = 4π³λN(m) / (κ√m K²(m)) Σₙ aₙ(κ) bₙ(m)` with
/// `aₙ = (n+½)³ sech[(n+½)π/√κ]` and `bₙ = sech[(n+½)πK(1−m)/K(m)]`.
///
/// At `m = 0` the `1/√m` prefactor and `b₀ ~ √m/2` balance, and only the
/// `n = 0` term survives: `d(λ, κ, 0) = 8πλN(0) a₀(κ)/κ`. At `m = 1` the
/// force vanishes and `d = 0`.
pub fn layer_width(lambda: f64, kappa: f64, m: EllipticParameter) -> Result<LayerWidthResult> {
    ensure(lambda.is_finite() && lambda >= 0.0, "lambda", lambda, "lambda >= 0")?;
    ensure(kappa.is_finite() && kappa > 0.0, "kappa", kappa, "kappa > 0")?;
    let mv = m.value();
    let a = |n: f64| (n + 0.5).powi(3) / ((n + 0.5) * PI / kappa.sqrt()).cosh();
    if mv == 1.0 {
        return Ok(LayerWidthResult {
            d: 0.0,
            n_terms: 1,
            truncation_error_bound: 0.0,
        });
    }
    if mv == 0.0 {
        return Ok(LayerWidthResult {
            d: 8.0 * PI * lambda * normalization(m) * a(0.0) / kappa,
            n_terms: 1,
            truncation_error_bound: 0.0,
        });
    }

    let k = complete_k(m)?;
    let kp = complete_k_prime(m)?;
    let prefactor = 4.0 * PI.powi(3) * lambda * normalization(m) / (kappa * mv.sqrt() * k * k);
    let b = |n: f64| 1.0 / ((n + 0.5) * PI * kp / k).cosh();

    let mut sum = 0.0;
    let mut n = 0usize;
    loop {
        let term = a(n as f64) * b(n as f64);
        sum += term;
        n += 1;
        let next = a(n as f64) * b(n as f64);
        if next < SERIES_REL_TOL * sum || n >= SERIES_MAX_TERMS {
            break;
        }
    }

    // sech y ≤ 2e^{-y}, so the tail from index n is dominated by
    // 4 Σ (j+½)³ e^{-(j+½)C}, whose term ratios decrease with j.
    let c = PI / kappa.sqrt() + PI * kp / k;
    let nf = n as f64;
    let first = 4.0 * (nf + 0.5).powi(3) * (-(nf + 0.5) * c).exp();
    let ratio = ((nf + 1.5) / (nf + 0.5)).powi(3) * (-c).exp();
    let tail = if ratio < 1.0 {
        first / (1.0 - ratio)
    } else {
        f64::INFINITY
    };

    Ok(LayerWidthResult {
        d: prefactor * sum,
        n_terms: n,
        truncation_error_bound: prefactor * tail,
    })
}

/// Classification of a located maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Interior,
    /// The coarse scan peaked at an end of the bracket.
    Boundary,
    /// The function is flat over the bracket.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub m_star: f64,
    pub f_star: f64,
    pub kind: ExtremumKind,
}

/// Coarse scan at resolution `1e-3` followed by golden-section refinement
/// of the best bracket.
pub fn find_max_over_m<F>(f: F, bracket: (f64, f64)) -> Result<Maximum>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = bracket;
    if !(0.0..1.0).contains(&lo) || !(lo..=1.0).contains(&hi) || hi <= lo {
        return Err(Error::Config(format!("bracket ({lo}, {hi}) must lie inside [0, 1]")));
    }
    const STEP: f64 = 1e-3;
    let n = ((hi - lo) / STEP).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * STEP).min(hi)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Config("objective is not finite on the bracket".into()));
    }
    let (best, &f_best) = ys
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, y)| if *y > *acc.1 { (i, y) } else { acc });
    let f_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if f_best - f_min <= 1e-14 * f_best.abs().max(1.0) {
        return Ok(Maximum {
            m_star: xs[best],
            f_star: f_best,
            kind: ExtremumKind::Degenerate,
        });
    }
    if best == 0 || best == n {
        return Ok(Maximum {
            m_star: xs[best],
            f_star: f_best,
            kind: ExtremumKind::Boundary,
        });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (xs[best - 1], xs[best + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-7 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let m_star = 0.5 * (a + b);
    let f_star = f(m_star);
    Ok(Maximum {
        m_star,
        f_star: f_star.max(f_best),
        kind: ExtremumKind::Interior,
    })
}

/// Numerical settings for a classical-versus-quantum comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlConfig {
    pub ensemble_size: usize,
    pub classical_steps_per_period: usize,
    pub n_periods: usize,
    pub n_packets: usize,
    pub seed: u64,
    /// Also carries `Δp₀` and the averaging window used on both sides.
    pub quantum: QuantumSettings,
}

impl Default for DlConfig {
    fn default() -> Self {
        Self {
            ensemble_size: classical::DEFAULT_ENSEMBLE_SIZE,
            classical_steps_per_period: classical::DEFAULT_STEPS_PER_PERIOD,
            n_periods: 50,
            n_packets: quantum::DEFAULT_N_PACKETS,
            seed: 0,
            quantum: QuantumSettings::default(),
        }
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub m: f64,
    pub lambda: f64,
    pub dp_c: f64,
    pub dp_q: f64,
    /// `dp_c − dp_q`.
    pub dp_cmq: f64,
    /// `I(m, T) / I(0, T)`.
    pub impulse_norm: f64,
    pub layer_width: f64,
}

/// `Δp_C` averaged over the final strobes of a classical ensemble run.
pub fn classical_dpc(params: &ScaledParams, config: &DlConfig) -> Result<f64> {
    let ensemble = ClassicalEnsemble::sample(config.ensemble_size, config.quantum.dp0, config.seed)?;
    if config.n_periods == 0 {
        return Ok(classical::momentum_width(&ensemble, params));
    }
    let integrator = Integrator::new(params, config.classical_steps_per_period)?;
    let mut widths = Vec::with_capacity(config.n_periods);
    classical::evolve_ensemble_with(ensemble, config.n_periods, &integrator, |_, e| {
        widths.push(classical::momentum_width(e, params))
    });
    Ok(quantum::tail_mean(&widths, config.quantum.average_strobes))
}

/// Classical and quantum momentum widths at identical parameters and
/// horizon, and their difference `Δp_{C−Q}`.
pub fn dl_strength(params: &ScaledParams, config: &DlConfig) -> Result<SweepRecord> {
    let dp_c = classical_dpc(params, config)?;
    let dp_q = quantum::averaged_dpq(params, config.n_packets, config.n_periods, &config.quantum)?;
    Ok(SweepRecord {
        m: params.m().value(),
        lambda: params.lambda(),
        dp_c,
        dp_q,
        dp_cmq: dp_c - dp_q,
        impulse_norm: normalized_impulse(params.m())?,
        layer_width: layer_width(params.lambda(), params.kappa(), params.m())?.d,
    })
}

/// `Δp_{C−Q}`, layer width and impulse on a common grid of shape
/// parameters. Records come back in grid order.
pub fn correlation_study(
    kappa: f64,
    lambda: f64,
    hbar_eff: f64,
    m_grid: &[f64],
    config: &DlConfig,
) -> Result<Vec<SweepRecord>> {
    m_grid
        .iter()
        .map(|&m| {
            ensure((0.0..1.0).contains(&m), "m", m, "0 <= m < 1 in a sweep grid")?;
            let params = ScaledParams::new(kappa, lambda, EllipticParameter::new(m)?, hbar_eff)?;
            dl_strength(&params, config)
        })
        .collect()
}

/// Smallest `λ` in a sweep at which `Δp_{C−Q}` exceeds `threshold`.
pub fn onset_lambda(records: &[SweepRecord], threshold: f64) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.dp_cmq > threshold)
        .map(|r| r.lambda)
        .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.min(l))))
}

/// Root-mean-square difference over one period between the two waveforms,
/// each rescaled to unit peak amplitude.
pub fn waveform_distance(m1: EllipticParameter, m2: EllipticParameter) -> Result<f64> {
    let w1 = Waveform::new(m1);
    let w2 = Waveform::new(m2);
    let peak = |w: &Waveform| -> f64 {
        // |F| peaks within every half period
        let n = 20_000;
        (0..=n)
            .map(|i| w.value(PI * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    };
    let (p1, p2) = (peak(&w1), peak(&w2));
    if p1 == 0.0 || p2 == 0.0 {
        return Err(Error::Config("waveform distance undefined for a vanishing force".into()));
    }
    let sq = quadrature::integrate(
        |t| {
            let d = w1.value(t) / p1 - w2.value(t) / p2;
            d * d
        },
        0.0,
        PERIOD,
        1e-12,
    )?;
    Ok((sq.value / PERIOD).sqrt())
}

/// Pearson correlation between the normalized impulse `I(m)/I(0)` and the
/// layer width `d(λ, κ, m)` on `m_grid`.
pub fn impulse_width_correlation(lambda: f64, kappa: f64, m_grid: &[f64]) -> Result<f64> {
    let mut imp = Vec::with_capacity(m_grid.len());
    let mut wid = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        let m = EllipticParameter::new(m)?;
        imp.push(normalized_impulse(m)?);
        wid.push(layer_width(lambda, kappa, m)?.d);
    }
    Ok(stats::pearson(&imp, &wid))
}
