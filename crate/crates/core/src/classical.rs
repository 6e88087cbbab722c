//! Classical dynamics of the driven pendulum
//! `H = p²/2 − κ cos[x − λF(τ; m)]`.
//!
//! The Liouville equation is solved by characteristics: an ensemble of
//! trajectories is pushed through Hamilton's equations with a fourth-order
//! symplectic integrator, and momentum moments are read off the ensemble.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::forcing::{ScaledParams, Waveform, PERIOD};
use crate::phase_space::wrap_centered;
use crate::stats;

/// Initial momentum width of the classical ensemble.
pub const DEFAULT_DP0: f64 = 0.386;
pub const DEFAULT_STEPS_PER_PERIOD: usize = 1000;
pub const DEFAULT_ENSEMBLE_SIZE: usize = 100_000;

/// A point `(x, p)` in scaled phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub x: f64,
    pub p: f64,
}

impl PhaseState {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }
}

/// Unperturbed pendulum energy `H₀ = p²/2 − κ cos x`.
#[inline]
pub fn pendulum_energy(s: PhaseState, kappa: f64) -> f64 {
    0.5 * s.p * s.p - kappa * s.x.cos()
}

/// Hamilton's equations: `(ẋ, ṗ) = (p, −κ sin[x − λF(τ)])`.
pub fn hamilton_rhs(s: PhaseState, tau: f64, params: &ScaledParams) -> (f64, f64) {
    let shift = params.lambda() * params.waveform().value(tau);
    (s.p, -params.kappa() * (s.x - shift).sin())
}

// Yoshida's triple-jump composition of position Verlet.
const W1: f64 = 1.351_207_191_959_657_8;
const W0: f64 = -1.702_414_383_919_315_3;
const DRIFT: [f64; 4] = [0.5 * W1, 0.5 * (W0 + W1), 0.5 * (W0 + W1), 0.5 * W1];
const KICK: [f64; 3] = [W1, W0, W1];
/// Kick times as fractions of the step.
const KICK_AT: [f64; 3] = [0.5 * W1, 0.5, 1.0 - 0.5 * W1];

#[inline]
fn yoshida(mut s: PhaseState, h: f64, kappa: f64, shifts: &[f64; 3]) -> PhaseState {
    s.x += DRIFT[0] * h * s.p;
    for k in 0..3 {
        s.p -= KICK[k] * h * kappa * (s.x - shifts[k]).sin();
        s.x += DRIFT[k + 1] * h * s.p;
    }
    s
}

fn kick_shifts(wave: &Waveform, lambda: f64, tau: f64, h: f64) -> [f64; 3] {
    KICK_AT.map(|c| lambda * wave.value(tau + c * h))
}

/// One fourth-order symplectic step of length `dtau` from time `tau`.
///
/// The scheme is symmetric, so a step of `-dtau` from `tau + dtau` undoes it.
pub fn step(s: PhaseState, tau: f64, dtau: f64, params: &ScaledParams) -> Result<PhaseState> {
    ensure(dtau.is_finite() && dtau > 0.0, "dtau", dtau, "dtau > 0")?;
    let wave = params.waveform();
    let shifts = kick_shifts(&wave, params.lambda(), tau, dtau);
    Ok(yoshida(s, dtau, params.kappa(), &shifts))
}

/// Fixed-step propagator over whole drive periods.
///
/// The lattice shifts `λF` at every kick time of one period are tabulated
/// once and reused for every period and every trajectory.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: ScaledParams,
    wave: Waveform,
    steps_per_period: usize,
    shifts: Vec<[f64; 3]>,
}

impl Integrator {
    pub fn new(params: &ScaledParams, steps_per_period: usize) -> Result<Self> {
        if steps_per_period == 0 {
            return Err(Error::Config("steps_per_period must be at least 1".into()));
        }
        let wave = params.waveform();
        let h = PERIOD / steps_per_period as f64;
        let shifts = (0..steps_per_period)
            .map(|j| kick_shifts(&wave, params.lambda(), j as f64 * h, h))
            .collect();
        Ok(Self {
            params: *params,
            wave,
            steps_per_period,
            shifts,
        })
    }

    pub fn params(&self) -> &ScaledParams {
        &self.params
    }

    pub fn dtau(&self) -> f64 {
        PERIOD / self.steps_per_period as f64
    }

    pub fn steps_per_period(&self) -> usize {
        self.steps_per_period
    }

    /// Advances one full period. The start time must be a multiple of `2π`.
    #[inline]
    pub fn period(&self, mut s: PhaseState) -> PhaseState {
        let h = self.dtau();
        let kappa = self.params.kappa();
        for shifts in &self.shifts {
            s = yoshida(s, h, kappa, shifts);
        }
        s
    }

    /// [`Integrator::period`] for a batch of independent states. Advancing
    /// several trajectories in lockstep overlaps their sine evaluations;
    /// each result is bit-identical to the one-at-a-time path.
    pub fn period_batch(&self, states: &mut [PhaseState]) {
        const LANES: usize = 8;
        let h = self.dtau();
        let kappa = self.params.kappa();
        let mut chunks = states.chunks_exact_mut(LANES);
        for chunk in &mut chunks {
            let mut x = [0.0; LANES];
            let mut p = [0.0; LANES];
            for (i, s) in chunk.iter().enumerate() {
                x[i] = s.x;
                p[i] = s.p;
            }
            for shifts in &self.shifts {
                for i in 0..LANES {
                    x[i] += DRIFT[0] * h * p[i];
                }
                for k in 0..3 {
                    for i in 0..LANES {
                        p[i] -= KICK[k] * h * kappa * (x[i] - shifts[k]).sin();
                    }
                    for i in 0..LANES {
                        x[i] += DRIFT[k + 1] * h * p[i];
                    }
                }
            }
            for (i, s) in chunk.iter_mut().enumerate() {
                *s = PhaseState::new(x[i], p[i]);
            }
        }
        for s in chunks.into_remainder() {
            *s = self.period(*s);
        }
    }

    pub fn periods(&self, mut s: PhaseState, n: usize) -> PhaseState {
        for _ in 0..n {
            s = self.period(s);
        }
        s
    }

    /// Runs `n` periods backwards in time, ending at `tau_end - 2πn`.
    /// The drive is evaluated at the explicit (decreasing) times.
    pub fn retrace(&self, mut s: PhaseState, tau_end: f64, n: usize) -> PhaseState {
        let h = -self.dtau();
        let kappa = self.params.kappa();
        let lambda = self.params.lambda();
        let mut tau = tau_end;
        for k in 0..n * self.steps_per_period {
            let shifts = kick_shifts(&self.wave, lambda, tau, h);
            s = yoshida(s, h, kappa, &shifts);
            tau = tau_end + (k + 1) as f64 * h;
        }
        s
    }
}

/// An ensemble of independent trajectories sampling the classical phase-space
/// density.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    pub states: Vec<PhaseState>,
    pub seed: u64,
    /// Current scaled time.
    pub t: f64,
}

impl ClassicalEnsemble {
    /// `size` trajectories with `x` uniform on `[0, 2π)` and `p` Gaussian
    /// with standard deviation `dp0`.
    ///
    /// Trajectory `i` draws from stream `i` of a ChaCha generator keyed by
    /// `seed`, so the sample does not depend on thread count.
    pub fn sample(size: usize, dp0: f64, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("ensemble size must be at least 1".into()));
        }
        ensure(dp0.is_finite() && dp0 >= 0.0, "dp0", dp0, "dp0 >= 0")?;
        let states = (0..size)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let ux: f64 = rng.gen();
                // Box-Muller; 1 - u keeps the logarithm finite
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                let gauss = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
                PhaseState::new(2.0 * PI * ux, dp0 * gauss)
            })
            .collect();
        Ok(Self { states, seed, t: 0.0 })
    }

    pub fn from_states(states: Vec<PhaseState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Config("ensemble size must be at least 1".into()));
        }
        Ok(Self { states, seed: 0, t: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn momenta(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.p).collect()
    }
}

/// `√(⟨p²⟩ − ⟨p⟩²) / ħ_eff` over the ensemble.
pub fn momentum_width(e: &ClassicalEnsemble, params: &ScaledParams) -> f64 {
    stats::variance(&e.momenta()).sqrt() / params.hbar_eff()
}

/// Advances every member by `n_periods` drive periods. Positions are stored
/// reduced to `[0, 2π)`.
///
/// `observe` is called after every period with the period index (1-based)
/// and the ensemble at that strobe.
pub fn evolve_ensemble_with<F>(
    mut e: ClassicalEnsemble,
    n_periods: usize,
    integrator: &Integrator,
    mut observe: F,
) -> ClassicalEnsemble
where
    F: FnMut(usize, &ClassicalEnsemble),
{
    let two_pi = 2.0 * PI;
    for j in 1..=n_periods {
        e.states.par_chunks_mut(256).for_each(|chunk| {
            integrator.period_batch(chunk);
            chunk.iter_mut().for_each(|s| s.x = s.x.rem_euclid(two_pi));
        });
        e.t += PERIOD;
        observe(j, &e);
    }
    e
}

/// [`evolve_ensemble_with`] at the given step count, without observation.
pub fn evolve_ensemble(
    e: ClassicalEnsemble,
    n_periods: usize,
    params: &ScaledParams,
    steps_per_period: usize,
) -> Result<ClassicalEnsemble> {
    let integrator = Integrator::new(params, steps_per_period)?;
    Ok(evolve_ensemble_with(e, n_periods, &integrator, |_, _| {}))
}

/// Stroboscopic Poincaré section.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceOfSection {
    /// Strobe points with `x ∈ [−π, π)`, grouped by trajectory.
    pub points: Vec<PhaseState>,
    pub strobe_period: f64,
    pub n_periods: usize,
}

/// Records `(x mod 2π, p)` of every trajectory at `τ = 2πj`, `j = 1..=n_periods`.
pub fn psos(
    initial_conditions: &[PhaseState],
    n_periods: usize,
    params: &ScaledParams,
    steps_per_period: usize,
) -> Result<SurfaceOfSection> {
    if n_periods == 0 {
        return Err(Error::Config("a surface of section needs at least one strobe".into()));
    }
    let integrator = Integrator::new(params, steps_per_period)?;
    let per_trajectory: Vec<Vec<PhaseState>> = initial_conditions
        .par_iter()
        .map(|&s0| {
            let mut s = s0;
            (0..n_periods)
                .map(|_| {
                    s = integrator.period(s);
                    s.x = wrap_centered(s.x);
                    s
                })
                .collect()
        })
        .collect();
    Ok(SurfaceOfSection {
        points: per_trajectory.into_iter().flatten().collect(),
        strobe_period: PERIOD,
        n_periods,
    })
}

/// Uniform `nx × np` grid of initial conditions over `[−π, π) × [p_lo, p_hi)`.
pub fn initial_condition_grid(nx: usize, np: usize, p_range: (f64, f64)) -> Vec<PhaseState> {
    let dx = 2.0 * PI / nx as f64;
    let dp = (p_range.1 - p_range.0) / np as f64;
    (0..np)
        .flat_map(|j| {
            (0..nx).map(move |i| PhaseState::new(-PI + (i as f64 + 0.5) * dx, p_range.0 + (j as f64 + 0.5) * dp))
        })
        .collect()
}

/// Upper or lower branch of the separatrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

/// Point on the separatrix of `H₀` at time `tau` for a passage through
/// `x = 0` at `tau0`:
/// `x = ±2 arctan sinh[√κ(τ−τ₀)]`, `p = ±2√κ sech[√κ(τ−τ₀)]`.
pub fn separatrix(tau: f64, tau0: f64, kappa: f64, branch: Branch) -> Result<PhaseState> {
    ensure(kappa.is_finite() && kappa > 0.0, "kappa", kappa, "kappa > 0")?;
    let sign = match branch {
        Branch::Upper => 1.0,
        Branch::Lower => -1.0,
    };
    let root = kappa.sqrt();
    let s = root * (tau - tau0);
    Ok(PhaseState::new(
        sign * 2.0 * s.sinh().atan(),
        sign * 2.0 * root / s.cosh(),
    ))
}
