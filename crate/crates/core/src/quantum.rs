//! Split-operator propagation of
//! `iħ ∂_τ ψ = −[(ħ²/2) ∂²_x + κ cos(x − λF(τ; m))] ψ`
//! on a periodic box of `n_cells` lattice periods, and Husimi-based quantum
//! surfaces of section.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure, Error, Result};
use crate::forcing::{ScaledParams, PERIOD};
use crate::phase_space::{PhaseSpaceGrid, PhaseWindow};
use crate::stats;

pub const DEFAULT_N_CELLS: usize = 16;
pub const DEFAULT_POINTS_PER_CELL: usize = 128;
pub const DEFAULT_STEPS_PER_PERIOD: usize = 2048;
pub const DEFAULT_N_PACKETS: usize = 8;
pub const DEFAULT_AVERAGE_STROBES: usize = 10;
pub const DEFAULT_ALPHA: f64 = 3.0;
pub const DEFAULT_N_MAX: usize = 4;

/// Periodic box `[0, L)`, `L = 2π n_cells`, sampled with `points_per_cell`
/// points per lattice period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpatialGrid {
    n_cells: usize,
    points_per_cell: usize,
}

impl SpatialGrid {
    pub fn new(n_cells: usize, points_per_cell: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::Config("n_cells must be at least 1".into()));
        }
        if points_per_cell < 32 || !points_per_cell.is_power_of_two() {
            return Err(Error::Config(format!(
                "points_per_cell must be a power of two >= 32, got {points_per_cell}"
            )));
        }
        Ok(Self {
            n_cells,
            points_per_cell,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell
    }

    pub fn len(&self) -> usize {
        self.n_cells * self.points_per_cell
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        2.0 * PI * self.n_cells as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.points_per_cell as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    /// Wave number of FFT bin `j`, in standard FFT order.
    pub fn wave_number(&self, j: usize) -> f64 {
        let n = self.len() as i64;
        let j = j as i64;
        let signed = if j < n / 2 { j } else { j - n };
        2.0 * PI * signed as f64 / self.length()
    }
}

impl Default for SpatialGrid {
    fn default() -> Self {
        Self {
            n_cells: DEFAULT_N_CELLS,
            points_per_cell: DEFAULT_POINTS_PER_CELL,
        }
    }
}

/// Complex amplitudes on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub amplitudes: Vec<Complex64>,
    pub grid: SpatialGrid,
    /// Current scaled time.
    pub t: f64,
}

impl WaveFunction {
    /// `Σ |ψ_j|² dx`.
    pub fn norm_squared(&self) -> f64 {
        let d: Vec<f64> = self.amplitudes.iter().map(|c| c.norm_sqr()).collect();
        stats::pairwise_sum(&d) * self.grid.dx()
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm_squared().sqrt();
        self.amplitudes.iter_mut().for_each(|c| *c *= s);
    }

    /// `(⟨x⟩, ⟨x²⟩ − ⟨x⟩²)` using the box coordinates `[0, L)`.
    pub fn position_moments(&self) -> (f64, f64) {
        let w: Vec<f64> = self.amplitudes.iter().map(|c| c.norm_sqr()).collect();
        let total = stats::pairwise_sum(&w);
        let x1: Vec<f64> = w.iter().enumerate().map(|(j, v)| v * self.grid.x(j)).collect();
        let mean = stats::pairwise_sum(&x1) / total;
        let x2: Vec<f64> = w
            .iter()
            .enumerate()
            .map(|(j, v)| v * (self.grid.x(j) - mean).powi(2))
            .collect();
        (mean, stats::pairwise_sum(&x2) / total)
    }

    /// Probability weights of the discrete momentum components, FFT order.
    pub fn momentum_weights(&self) -> Vec<f64> {
        let mut buf = self.amplitudes.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `(⟨p⟩, ⟨p²⟩ − ⟨p⟩²)` with `p = ħ_eff k` on the discrete momentum grid.
    pub fn momentum_moments(&self, hbar_eff: f64) -> (f64, f64) {
        momentum_moments_from_weights(&self.momentum_weights(), &self.grid, hbar_eff)
    }
}

fn momentum_moments_from_weights(w: &[f64], grid: &SpatialGrid, hbar: f64) -> (f64, f64) {
    let total = stats::pairwise_sum(w);
    let p1: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(j, v)| v * hbar * grid.wave_number(j))
        .collect();
    let mean = stats::pairwise_sum(&p1) / total;
    let p2: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(j, v)| v * (hbar * grid.wave_number(j) - mean).powi(2))
        .collect();
    (mean, stats::pairwise_sum(&p2) / total)
}

/// `√(⟨p²⟩ − ⟨p⟩²) / ħ_eff` from the discrete momentum representation.
pub fn quantum_momentum_width(psi: &WaveFunction, params: &ScaledParams) -> f64 {
    psi.momentum_moments(params.hbar_eff()).1.sqrt() / params.hbar_eff()
}

/// How the width parameter `Δx₀` of the initial packet
/// `ψ ∝ exp[−(x−x₀)²/(2Δx₀) + i x p₀/ħ]` is tied to `Δp₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PacketWidth {
    /// `Δx₀ = ħ²/(2Δp₀²)`: the packet's momentum standard deviation equals
    /// `Δp₀`, the width of the classical ensemble.
    #[default]
    Matched,
    /// `Δx₀ = ħ/Δp₀` taken literally; momentum standard deviation
    /// `√(ħΔp₀/2)`.
    Literal,
}

impl PacketWidth {
    pub fn dx0(self, dp0: f64, hbar_eff: f64) -> f64 {
        match self {
            PacketWidth::Matched => hbar_eff * hbar_eff / (2.0 * dp0 * dp0),
            PacketWidth::Literal => hbar_eff / dp0,
        }
    }
}

/// A Gaussian packet `(πΔx₀)^{-1/4} exp[−(x−x₀)²/(2Δx₀) + i x p₀/ħ]`.
///
/// Position variance is `Δx₀/2`, momentum variance `ħ²/(2Δx₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub x0: f64,
    pub p0: f64,
    /// `Δx₀`, in units of length squared.
    pub dx0: f64,
}

impl Packet {
    pub fn new(x0: f64, p0: f64, dx0: f64) -> Self {
        Self { x0, p0, dx0 }
    }
}

/// Samples `packet` on `grid` and renormalizes.
///
/// The packet is placed at the minimum-image distance from `x₀`, so packets
/// sitting on the box edge wrap around smoothly; the plane-wave phase is
/// measured from `x₀` for the same reason.
pub fn gaussian_packet(packet: &Packet, hbar_eff: f64, grid: SpatialGrid) -> Result<WaveFunction> {
    let len = grid.length();
    ensure(
        packet.x0.is_finite() && (0.0..len).contains(&packet.x0),
        "x0",
        packet.x0,
        "0 <= x0 < L",
    )?;
    ensure(packet.p0.is_finite(), "p0", packet.p0, "p0 must be finite")?;
    ensure(packet.dx0.is_finite() && packet.dx0 > 0.0, "dx0", packet.dx0, "dx0 > 0")?;
    ensure(hbar_eff > 0.0, "hbar_eff", hbar_eff, "hbar_eff > 0")?;
    let sigma = (0.5 * packet.dx0).sqrt();
    if sigma > 0.25 * len {
        return Err(Error::Config(format!(
            "packet width {sigma} exceeds a quarter of the box length {len}"
        )));
    }
    let pref = (PI * packet.dx0).powf(-0.25);
    let amplitudes = (0..grid.len())
        .map(|j| {
            let d = (grid.x(j) - packet.x0 + 0.5 * len).rem_euclid(len) - 0.5 * len;
            let envelope = pref * (-d * d / (2.0 * packet.dx0)).exp();
            let phase = (packet.x0 + d) * packet.p0 / hbar_eff;
            Complex64::from_polar(envelope, phase)
        })
        .collect();
    let mut psi = WaveFunction {
        amplitudes,
        grid,
        t: 0.0,
    };
    psi.normalize();
    Ok(psi)
}

/// Strang-split spectral propagator over whole drive periods.
///
/// Each step is `K(dτ/2) V(τ + dτ/2) K(dτ/2)`; adjacent kinetic half steps
/// inside a period are fused, so the state is exactly the Strang result at
/// every strobe.
pub struct Propagator {
    grid: SpatialGrid,
    params: ScaledParams,
    steps_per_period: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    /// Kinetic phases for half and full steps, with the inverse-FFT `1/N` folded in.
    kinetic_half: Vec<Complex64>,
    kinetic_full: Vec<Complex64>,
    cos_x: Vec<f64>,
    sin_x: Vec<f64>,
    /// `λF` at the midpoint of each step in one period.
    shifts: Vec<f64>,
}

impl Propagator {
    pub fn new(params: &ScaledParams, grid: SpatialGrid, steps_per_period: usize) -> Result<Self> {
        if steps_per_period == 0 {
            return Err(Error::Config("steps_per_period must be at least 1".into()));
        }
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let hbar = params.hbar_eff();
        let dt = PERIOD / steps_per_period as f64;
        let inv_n = 1.0 / n as f64;
        let kinetic = |frac: f64| -> Vec<Complex64> {
            (0..n)
                .map(|j| {
                    let k = grid.wave_number(j);
                    Complex64::from_polar(inv_n, -0.5 * hbar * k * k * frac * dt)
                })
                .collect()
        };
        let wave = params.waveform();
        let shifts = (0..steps_per_period)
            .map(|s| params.lambda() * wave.value((s as f64 + 0.5) * dt))
            .collect();
        Ok(Self {
            grid,
            params: *params,
            steps_per_period,
            fft,
            ifft,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            kinetic_half: kinetic(0.5),
            kinetic_full: kinetic(1.0),
            cos_x: (0..n).map(|j| grid.x(j).cos()).collect(),
            sin_x: (0..n).map(|j| grid.x(j).sin()).collect(),
            shifts,
        })
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn dtau(&self) -> f64 {
        PERIOD / self.steps_per_period as f64
    }

    fn kinetic(&mut self, psi: &mut [Complex64], full: bool) {
        self.fft.process_with_scratch(psi, &mut self.scratch);
        let phases = if full { &self.kinetic_full } else { &self.kinetic_half };
        psi.iter_mut().zip(phases).for_each(|(c, k)| *c *= k);
        self.ifft.process_with_scratch(psi, &mut self.scratch);
    }

    fn potential(&self, psi: &mut [Complex64], shift: f64) {
        // exp(+i κ cos(x − s) dτ/ħ)
        let scale = self.params.kappa() * self.dtau() / self.params.hbar_eff();
        let (sin_s, cos_s) = shift.sin_cos();
        for ((c, &cx), &sx) in psi.iter_mut().zip(&self.cos_x).zip(&self.sin_x) {
            let theta = scale * (cx * cos_s + sx * sin_s);
            let (s, co) = theta.sin_cos();
            *c *= Complex64::new(co, s);
        }
    }

    /// Advances one full drive period; `psi.t` must be a multiple of `2π`.
    pub fn period(&mut self, psi: &mut WaveFunction) {
        assert_eq!(psi.grid, self.grid, "wave function lives on a different grid");
        let amps = &mut psi.amplitudes;
        self.kinetic(amps, false);
        let last = self.steps_per_period - 1;
        for s in 0..self.steps_per_period {
            self.potential(amps, self.shifts[s]);
            self.kinetic(amps, s != last);
        }
        psi.t += PERIOD;
    }

    /// Advances `n_periods`, calling `observe(j, ψ)` at every strobe `j`.
    pub fn propagate_with<F>(&mut self, psi: &mut WaveFunction, n_periods: usize, mut observe: F)
    where
        F: FnMut(usize, &WaveFunction),
    {
        for j in 1..=n_periods {
            self.period(psi);
            observe(j, psi);
        }
    }
}

/// Propagates `psi` by `n_periods` drive periods.
pub fn propagate(
    mut psi: WaveFunction,
    n_periods: usize,
    params: &ScaledParams,
    steps_per_period: usize,
) -> Result<WaveFunction> {
    let mut prop = Propagator::new(params, psi.grid, steps_per_period)?;
    prop.propagate_with(&mut psi, n_periods, |_, _| {});
    Ok(psi)
}

/// Numerical settings of the quantum runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumSettings {
    pub grid: SpatialGrid,
    pub steps_per_period: usize,
    /// Momentum width the initial packets are derived from.
    pub dp0: f64,
    pub packet_width: PacketWidth,
    /// Number of final strobes over which `Δp_Q` is time-averaged.
    pub average_strobes: usize,
}

impl Default for QuantumSettings {
    fn default() -> Self {
        Self {
            grid: SpatialGrid::default(),
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
            dp0: crate::classical::DEFAULT_DP0,
            packet_width: PacketWidth::default(),
            average_strobes: DEFAULT_AVERAGE_STROBES,
        }
    }
}

impl QuantumSettings {
    pub fn packet_at(&self, x0: f64, p0: f64, hbar_eff: f64) -> Packet {
        Packet::new(x0, p0, self.packet_width.dx0(self.dp0, hbar_eff))
    }
}

/// Starting positions of the averaged packets: evenly spread over one
/// lattice period in the central cell of the box, so that the mixture
/// samples every phase of the lattice once.
pub fn packet_origins(n_packets: usize, grid: &SpatialGrid) -> Vec<f64> {
    let centre_cell = (grid.n_cells() / 2) as f64 * 2.0 * PI;
    (0..n_packets)
        .map(|j| centre_cell + 2.0 * PI * j as f64 / n_packets as f64)
        .collect()
}

/// `Δp_Q` trace of one packet, one entry per strobe `1..=n_periods`.
pub fn momentum_width_history(
    packet: &Packet,
    params: &ScaledParams,
    n_periods: usize,
    settings: &QuantumSettings,
) -> Result<Vec<f64>> {
    let hbar = params.hbar_eff();
    Ok(momentum_moment_history(packet, params, n_periods, settings)?
        .into_iter()
        .map(|(_, var)| var.sqrt() / hbar)
        .collect())
}

/// `(⟨p⟩, ⟨p²⟩ − ⟨p⟩²)` of one packet at every strobe `1..=n_periods`.
pub fn momentum_moment_history(
    packet: &Packet,
    params: &ScaledParams,
    n_periods: usize,
    settings: &QuantumSettings,
) -> Result<Vec<(f64, f64)>> {
    let hbar = params.hbar_eff();
    let mut psi = gaussian_packet(packet, hbar, settings.grid)?;
    let mut prop = Propagator::new(params, settings.grid, settings.steps_per_period)?;
    let mut out = Vec::with_capacity(n_periods);
    prop.propagate_with(&mut psi, n_periods, |_, psi| out.push(psi.momentum_moments(hbar)));
    Ok(out)
}

/// Mean of the trailing `window` entries (all of them if fewer).
pub(crate) fn tail_mean(values: &[f64], window: usize) -> f64 {
    let start = values.len().saturating_sub(window.max(1));
    stats::mean(&values[start..])
}

/// Width of an equal-weight incoherent mixture from the members'
/// `(mean, variance)` pairs, divided by `ħ_eff`.
fn mixture_width(moments: &[(f64, f64)], hbar: f64) -> f64 {
    let means: Vec<f64> = moments.iter().map(|m| m.0).collect();
    let vars: Vec<f64> = moments.iter().map(|m| m.1).collect();
    // law of total variance
    (stats::mean(&vars) + stats::variance(&means)).sqrt() / hbar
}

/// `Δp_Q` of the incoherent mixture of `n_packets` packets at rest, spread
/// over one lattice period (see [`packet_origins`]), time-averaged over the
/// final strobes.
///
/// The mixture plays the role of the classical ensemble, which is uniform
/// in `x`: its width includes the spread of the packets' mean momenta.
pub fn averaged_dpq(
    params: &ScaledParams,
    n_packets: usize,
    n_periods: usize,
    settings: &QuantumSettings,
) -> Result<f64> {
    if n_packets == 0 {
        return Err(Error::Config("n_packets must be at least 1".into()));
    }
    let hbar = params.hbar_eff();
    let origins = packet_origins(n_packets, &settings.grid);
    if n_periods == 0 {
        let moments = origins
            .iter()
            .map(|&x0| {
                let packet = settings.packet_at(x0, 0.0, hbar);
                gaussian_packet(&packet, hbar, settings.grid).map(|psi| psi.momentum_moments(hbar))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(mixture_width(&moments, hbar));
    }
    let histories = origins
        .par_iter()
        .map(|&x0| {
            let packet = settings.packet_at(x0, 0.0, hbar);
            momentum_moment_history(&packet, params, n_periods, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    let widths: Vec<f64> = (0..n_periods)
        .map(|j| {
            let at_strobe: Vec<(f64, f64)> = histories.iter().map(|h| h[j]).collect();
            mixture_width(&at_strobe, hbar)
        })
        .collect();
    Ok(tail_mean(&widths, settings.average_strobes))
}

/// Husimi distribution sampled on a phase-space window.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub grid: PhaseSpaceGrid,
    pub alpha: f64,
    /// Expected integral of `grid` over the whole `p` axis.
    pub normalization: f64,
}

/// Precomputed kernels for evaluating the periodic-image Husimi sum on one
/// window shape.
struct HusimiKernel {
    window: PhaseWindow,
    /// Index of the lattice cell the window is centred on.
    cell: i64,
    /// First image index `n`.
    n_lo: i64,
    /// `exp[−(x_i − z)²/(2α)]` for each window column and relative `z`.
    gauss: Vec<f64>,
    /// `exp(−i z p_k / ħ)` for each window row and relative `z`.
    phase: Vec<Complex64>,
    span: usize,
}

impl HusimiKernel {
    fn new(window: &PhaseWindow, grid: &SpatialGrid, alpha: f64, hbar: f64, n_max: usize) -> Self {
        let ppc = grid.points_per_cell();
        let dz = grid.dx();
        let centre = 0.5 * (window.x_min + window.x_max);
        let cell = (centre / (2.0 * PI)).floor() as i64;
        let n_lo = cell - n_max as i64;
        let n_images = 2 * n_max + 1;
        let span = n_images * ppc;
        let z0 = n_lo as f64 * 2.0 * PI;
        // z relative to the start of the window's cell keeps the phase table
        // independent of where the window sits; the dropped global phase
        // cancels in the modulus.
        let z_rel: Vec<f64> = (0..span).map(|q| (n_lo - cell) as f64 * 2.0 * PI + q as f64 * dz).collect();
        let gauss = (0..window.nx)
            .flat_map(|i| {
                let x = window.x_node(i);
                (0..span).map(move |q| {
                    let z = z0 + q as f64 * dz;
                    (-(x - z) * (x - z) / (2.0 * alpha)).exp()
                })
            })
            .collect();
        let phase = (0..window.np)
            .flat_map(|k| {
                let p = window.p_node(k);
                z_rel
                    .iter()
                    .map(move |&z| Complex64::from_polar(1.0, -z * p / hbar))
            })
            .collect();
        Self {
            window: *window,
            cell,
            n_lo,
            gauss,
            phase,
            span,
        }
    }

    /// Adds `|amplitude|²` at every window node to `out`, for the window
    /// translated by `shift_cells` lattice periods.
    fn accumulate(&self, psi: &WaveFunction, shift_cells: i64, out: &mut [f64]) {
        let grid = psi.grid;
        let ppc = grid.points_per_cell() as i64;
        let n = grid.len() as i64;
        let dz = grid.dx();
        let first = (self.n_lo + shift_cells) * ppc;
        let samples: Vec<Complex64> = (0..self.span as i64)
            .map(|q| psi.amplitudes[(first + q).rem_euclid(n) as usize] * dz)
            .collect();
        let w = &self.window;
        let mut weighted = vec![Complex64::new(0.0, 0.0); self.span];
        for i in 0..w.nx {
            let g = &self.gauss[i * self.span..(i + 1) * self.span];
            weighted
                .iter_mut()
                .zip(samples.iter().zip(g))
                .for_each(|(wv, (s, gv))| *wv = s * gv);
            for k in 0..w.np {
                let ph = &self.phase[k * self.span..(k + 1) * self.span];
                let amp: Complex64 = weighted.iter().zip(ph).map(|(a, b)| a * b).sum();
                out[w.index(i, k)] += amp.norm_sqr();
            }
        }
    }
}

/// Full-line integral of the Husimi distribution of a normalized state:
/// `2πħ √(πα)`.
pub fn husimi_total(alpha: f64, hbar_eff: f64) -> f64 {
    2.0 * PI * hbar_eff * (PI * alpha).sqrt()
}

/// Husimi distribution
/// `|Σ_n ∫₀^{2π} exp{−[x−(z+2πn)]²/(2α) − i(z+2πn)p/ħ} ψ(z+2πn) dz|²`
/// on `window`, with images `n` running over `n_max` lattice periods either
/// side of the window's cell and the `z` integral done on the wave-function
/// grid.
///
/// `normalization` is the share of the full-line integral whose Gaussian
/// weight falls inside the window's `x` range; the window's `p` range
/// truncates the rest.
pub fn husimi(
    psi: &WaveFunction,
    window: &PhaseWindow,
    alpha: f64,
    hbar_eff: f64,
    n_max: usize,
) -> Result<HusimiGrid> {
    ensure(alpha.is_finite() && alpha > 0.0, "alpha", alpha, "alpha > 0")?;
    ensure(hbar_eff > 0.0, "hbar_eff", hbar_eff, "hbar_eff > 0")?;
    window.validate()?;
    let kernel = HusimiKernel::new(window, &psi.grid, alpha, hbar_eff, n_max);
    let mut grid = PhaseSpaceGrid::zeros(*window);
    kernel.accumulate(psi, 0, &mut grid.values);

    // share of |ψ|² whose Gaussian x-smearing lands in the window
    let len = psi.grid.length();
    let s = alpha.sqrt();
    let weights: Vec<f64> = (0..psi.grid.len())
        .map(|j| {
            let mut z = psi.grid.x(j);
            let centre = 0.5 * (window.x_min + window.x_max);
            z += len * ((centre - z) / len).round();
            let frac = 0.5 * (libm::erf((window.x_max - z) / s) - libm::erf((window.x_min - z) / s));
            psi.amplitudes[j].norm_sqr() * frac
        })
        .collect();
    let share = stats::pairwise_sum(&weights) * psi.grid.dx();
    Ok(HusimiGrid {
        grid,
        alpha,
        normalization: husimi_total(alpha, hbar_eff) * share,
    })
}

/// Husimi distribution with `x` reduced into the window's lattice cell: the
/// window is translated over every cell of the box and the results added.
/// The result is rescaled to unit integral.
pub fn folded_husimi(
    psi: &WaveFunction,
    window: &PhaseWindow,
    alpha: f64,
    hbar_eff: f64,
    n_max: usize,
) -> Result<HusimiGrid> {
    ensure(alpha.is_finite() && alpha > 0.0, "alpha", alpha, "alpha > 0")?;
    window.validate()?;
    let kernel = HusimiKernel::new(window, &psi.grid, alpha, hbar_eff, n_max);
    let mut grid = PhaseSpaceGrid::zeros(*window);
    let shifts: Vec<i64> = (0..psi.grid.n_cells() as i64).map(|c| c - kernel.cell).collect();
    let parts: Vec<Vec<f64>> = shifts
        .par_iter()
        .map(|&s| {
            let mut part = vec![0.0; window.len()];
            kernel.accumulate(psi, s, &mut part);
            part
        })
        .collect();
    for part in parts {
        grid.values.iter_mut().zip(part).for_each(|(g, v)| *g += v);
    }
    grid.normalize_to(1.0);
    Ok(HusimiGrid {
        grid,
        alpha,
        normalization: 1.0,
    })
}

/// Settings for quantum surfaces of section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QsosSettings {
    pub quantum: QuantumSettings,
    pub alpha: f64,
    pub n_max: usize,
}

impl Default for QsosSettings {
    fn default() -> Self {
        Self {
            quantum: QuantumSettings::default(),
            alpha: DEFAULT_ALPHA,
            n_max: DEFAULT_N_MAX,
        }
    }
}

/// Folded Husimi distributions at the strobes `τ = 2πj`, `j = 1..=n_periods`.
pub fn qsos_sequence(
    packet: &Packet,
    n_periods: usize,
    params: &ScaledParams,
    window: &PhaseWindow,
    settings: &QsosSettings,
) -> Result<Vec<HusimiGrid>> {
    if n_periods == 0 {
        return Err(Error::Config("a quantum surface of section needs at least one strobe".into()));
    }
    window.validate()?;
    let hbar = params.hbar_eff();
    let grid = settings.quantum.grid;
    let mut psi = gaussian_packet(packet, hbar, grid)?;
    let mut prop = Propagator::new(params, grid, settings.quantum.steps_per_period)?;
    let mut out = Vec::with_capacity(n_periods);
    let mut failure = None;
    prop.propagate_with(&mut psi, n_periods, |_, psi| {
        match folded_husimi(psi, window, settings.alpha, hbar, settings.n_max) {
            Ok(h) => out.push(h),
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Stroboscopic average of [`qsos_sequence`], renormalized to unit integral.
pub fn qsos_average(
    packet: &Packet,
    n_periods: usize,
    params: &ScaledParams,
    window: &PhaseWindow,
    settings: &QsosSettings,
) -> Result<HusimiGrid> {
    let frames = qsos_sequence(packet, n_periods, params, window, settings)?;
    Ok(average_frames(&frames))
}

/// Sum of Husimi frames, renormalized to unit integral.
pub fn average_frames(frames: &[HusimiGrid]) -> HusimiGrid {
    let window = frames[0].grid.window;
    let mut grid = PhaseSpaceGrid::zeros(window);
    for f in frames {
        grid.values.iter_mut().zip(&f.grid.values).for_each(|(g, v)| *g += v);
    }
    grid.normalize_to(1.0);
    HusimiGrid {
        grid,
        alpha: frames[0].alpha,
        normalization: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::EllipticParameter;

    fn params(kappa: f64, lambda: f64, m: f64) -> ScaledParams {
        ScaledParams::new(kappa, lambda, EllipticParameter::new(m).unwrap(), 0.16).unwrap()
    }

    fn small_grid() -> SpatialGrid {
        SpatialGrid::new(4, 64).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpatialGrid::new(0, 64).is_err());
        assert!(SpatialGrid::new(4, 48).is_err());
        assert!(SpatialGrid::new(4, 16).is_err());
        let g = SpatialGrid::new(3, 32).unwrap();
        assert_eq!(g.len(), 96);
        assert!((g.length() - 6.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn wave_numbers_in_fft_order() {
        let g = SpatialGrid::new(1, 32).unwrap();
        assert_eq!(g.wave_number(0), 0.0);
        assert_eq!(g.wave_number(1), 1.0);
        assert_eq!(g.wave_number(16), -16.0);
        assert_eq!(g.wave_number(31), -1.0);
    }

    #[test]
    fn packet_centred_at_rest() {
        let grid = small_grid();
        let hbar = 0.16;
        let pk = Packet::new(grid.length() / 2.0, 0.0, PacketWidth::Literal.dx0(0.386, hbar));
        let psi = gaussian_packet(&pk, hbar, grid).unwrap();
        assert!((psi.norm_squared() - 1.0).abs() < 1e-13);
        let (x, _) = psi.position_moments();
        let (p, _) = psi.momentum_moments(hbar);
        assert!((x - grid.length() / 2.0).abs() < 1e-10);
        assert!(p.abs() < 1e-10);
    }

    #[test]
    fn packet_too_wide_rejected() {
        let grid = SpatialGrid::new(1, 32).unwrap();
        // sigma = sqrt(dx0/2) > L/4
        let pk = Packet::new(1.0, 0.0, 2.0 * (PI / 2.0 + 0.1).powi(2));
        assert!(matches!(gaussian_packet(&pk, 0.16, grid), Err(Error::Config(_))));
        let outside = Packet::new(-0.1, 0.0, 0.1);
        assert!(gaussian_packet(&outside, 0.16, grid).is_err());
    }

    #[test]
    fn packet_straddling_box_edge_is_smooth() {
        let grid = small_grid();
        let pk = Packet::new(0.0, -0.805, 0.1);
        let psi = gaussian_packet(&pk, 0.16, grid).unwrap();
        let (p, var) = psi.momentum_moments(0.16);
        assert!((p + 0.805).abs() < 1e-8, "{p}");
        assert!((var - 0.16 * 0.16 / 0.2).abs() < 1e-8);
    }

    #[test]
    fn zero_periods_identity() {
        let grid = small_grid();
        let pk = Packet::new(3.0, 0.5, 0.1);
        let psi = gaussian_packet(&pk, 0.16, grid).unwrap();
        let out = propagate(psi.clone(), 0, &params(0.36, 2.0, 0.5), 256).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn norm_conserved() {
        let grid = small_grid();
        let pk = Packet::new(3.0, 0.5, 0.1);
        let psi = gaussian_packet(&pk, 0.16, grid).unwrap();
        let out = propagate(psi, 3, &params(0.36, 2.0, 0.5), 256).unwrap();
        assert!((out.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_momentum_component_has_zero_width() {
        let grid = small_grid();
        let k = grid.wave_number(5);
        let amps = (0..grid.len())
            .map(|j| Complex64::from_polar(1.0, k * grid.x(j)))
            .collect();
        let mut psi = WaveFunction {
            amplitudes: amps,
            grid,
            t: 0.0,
        };
        psi.normalize();
        let w = quantum_momentum_width(&psi, &params(0.36, 0.0, 0.0));
        assert!(w < 1e-6, "{w}");
    }

    #[test]
    fn packet_origins_cover_one_period() {
        let grid = SpatialGrid::default();
        let xs = packet_origins(8, &grid);
        assert_eq!(xs.len(), 8);
        let reduced: Vec<f64> = xs.iter().map(|x| x.rem_euclid(2.0 * PI)).collect();
        for (j, r) in reduced.iter().enumerate() {
            assert!((r - 2.0 * PI * j as f64 / 8.0).abs() < 1e-12);
        }
        assert!(xs.iter().all(|&x| x >= 0.0 && x < grid.length()));
    }

    #[test]
    fn tail_mean_window() {
        assert_eq!(tail_mean(&[1.0, 2.0, 3.0, 5.0], 2), 4.0);
        assert_eq!(tail_mean(&[1.0, 3.0], 10), 2.0);
    }

    #[test]
    fn husimi_nonnegative_and_normalized() {
        let grid = small_grid();
        let hbar = 0.16;
        let pk = Packet::new(4.0 * PI + 0.3, 0.8, 0.2);
        let psi = gaussian_packet(&pk, hbar, grid).unwrap();
        let window = PhaseWindow::new((3.0 * PI, 5.0 * PI), 48, (-1.5, 3.0), 96).unwrap();
        let h = husimi(&psi, &window, 3.0, hbar, 4).unwrap();
        assert!(h.grid.is_nonnegative());
        let rel = (h.grid.integral() - h.normalization).abs() / h.normalization;
        assert!(rel < 0.02, "relative mismatch {rel}");
    }

    #[test]
    fn husimi_rejects_bad_alpha() {
        let grid = small_grid();
        let psi = gaussian_packet(&Packet::new(1.0, 0.0, 0.2), 0.16, grid).unwrap();
        let window = PhaseWindow::unit_cell((-1.0, 1.0), 8, 8).unwrap();
        assert!(husimi(&psi, &window, 0.0, 0.16, 4).is_err());
    }
}
