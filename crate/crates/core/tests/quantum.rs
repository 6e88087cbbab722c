use dynloc::phase_space::PhaseWindow;
use dynloc::quantum::{
    averaged_dpq, gaussian_packet, husimi, husimi_total, momentum_width_history, propagate, quantum_momentum_width,
    Packet, PacketWidth, Propagator, QuantumSettings, SpatialGrid, WaveFunction,
};
use dynloc::{EllipticParameter, ScaledParams};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

const HBAR: f64 = 0.16;

fn params(kappa: f64, lambda: f64, m: f64) -> ScaledParams {
    ScaledParams::new(kappa, lambda, EllipticParameter::new(m).unwrap(), HBAR).unwrap()
}

fn packet(x0: f64, p0: f64) -> Packet {
    Packet::new(x0, p0, PacketWidth::Matched.dx0(0.386, HBAR))
}

fn l2_distance(a: &WaveFunction, b: &WaveFunction) -> f64 {
    let s: f64 = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(u, v)| (u - v).norm_sqr())
        .sum();
    (s * a.grid.dx()).sqrt()
}

/// `⟨p²/2 − κ cos x⟩`.
fn pendulum_expectation(psi: &WaveFunction, kappa: f64) -> f64 {
    let (mean, var) = psi.momentum_moments(HBAR);
    let cos: f64 = psi
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, c)| c.norm_sqr() * psi.grid.x(j).cos())
        .sum();
    0.5 * (var + mean * mean) - kappa * cos * psi.grid.dx()
}

/// `∫ exp[−(x−z)²/(2α) − izp/ħ] ψ(z) dz` for the packet
/// `(πΔ)^{-1/4} exp[−(z−x₀)²/(2Δ) + izp₀/ħ]`, squared modulus.
fn gaussian_husimi(x: f64, p: f64, x0: f64, p0: f64, delta: f64, alpha: f64) -> f64 {
    let a = 0.5 / alpha + 0.5 / delta;
    let b = Complex64::new(x / alpha + x0 / delta, (p0 - p) / HBAR);
    let c = x * x / (2.0 * alpha) + x0 * x0 / (2.0 * delta);
    let exponent = b * b / (4.0 * a) - c;
    (PI / a) * (2.0 * exponent.re).exp() / (PI * delta).sqrt()
}

#[test]
fn packet_moments() {
    let grid = SpatialGrid::default();
    let pk = packet(grid.length() / 2.0, 0.0);
    let psi = gaussian_packet(&pk, HBAR, grid).unwrap();
    let (x_mean, x_var) = psi.position_moments();
    let (p_mean, p_var) = psi.momentum_moments(HBAR);
    assert!((x_mean - grid.length() / 2.0).abs() < 1e-10);
    assert!(p_mean.abs() < 1e-10);
    assert!((x_var - pk.dx0 / 2.0).abs() < 1e-10);
    assert!((p_var - HBAR * HBAR / (2.0 * pk.dx0)).abs() < 1e-10);
    // the matched width reproduces the classical momentum spread
    assert!((quantum_momentum_width(&psi, &params(0.36, 0.0, 0.0)) - 0.386 / HBAR).abs() < 1e-9);
}

#[test]
fn literal_packet_width() {
    let dx0 = PacketWidth::Literal.dx0(0.386, HBAR);
    assert!((dx0 - HBAR / 0.386).abs() < 1e-15);
    let psi = gaussian_packet(&Packet::new(3.0, 0.0, dx0), HBAR, SpatialGrid::default()).unwrap();
    let w = quantum_momentum_width(&psi, &params(0.36, 0.0, 0.0));
    assert!((w - 1.0 / (2.0 * dx0).sqrt()).abs() < 1e-9);
}

#[test]
fn packet_too_wide_rejected() {
    let grid = SpatialGrid::new(1, 32).unwrap();
    assert!(gaussian_packet(&Packet::new(1.0, 0.0, 10.0), HBAR, grid).is_err());
    assert!(gaussian_packet(&Packet::new(-1.0, 0.0, 0.1), HBAR, grid).is_err());
}

#[test]
fn plane_wave_has_zero_width() {
    let grid = SpatialGrid::new(4, 32).unwrap();
    let k = 3.0 / 4.0;
    let amps = (0..grid.len())
        .map(|j| Complex64::from_polar(1.0, k * grid.x(j)))
        .collect();
    let mut psi = WaveFunction {
        amplitudes: amps,
        grid,
        t: 0.0,
    };
    psi.normalize();
    assert!(quantum_momentum_width(&psi, &params(0.36, 0.0, 0.0)) < 1e-7);
}

#[test]
fn norm_conserved_over_fifty_periods() {
    let grid = SpatialGrid::default();
    for (lambda, m) in [(0.0, 0.0), (2.0, 0.5), (7.0, 0.9)] {
        let p = params(0.36, lambda, m);
        let mut psi = gaussian_packet(&packet(50.0, 0.0), HBAR, grid).unwrap();
        let mut prop = Propagator::new(&p, grid, 2048).unwrap();
        prop.propagate_with(&mut psi, 50, |_, psi| {
            assert!((psi.norm_squared().sqrt() - 1.0).abs() <= 1e-10);
        });
        assert_eq!(psi.t, 50.0 * 2.0 * PI);
    }
}

#[test]
fn zero_periods_is_identity() {
    let psi = gaussian_packet(&packet(10.0, 1.0), HBAR, SpatialGrid::default()).unwrap();
    assert_eq!(propagate(psi.clone(), 0, &params(0.36, 2.0, 0.5), 64).unwrap(), psi);
}

#[test]
fn strang_second_order() {
    let grid = SpatialGrid::new(4, 64).unwrap();
    let p = params(0.36, 2.0, 0.5);
    let psi = gaussian_packet(&packet(7.0, 0.5), HBAR, grid).unwrap();
    let run = |steps| propagate(psi.clone(), 1, &p, steps).unwrap();
    let reference = run(2048);
    let coarse = l2_distance(&run(128), &reference);
    let fine = l2_distance(&run(256), &reference);
    let ratio = coarse / fine;
    assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn free_motion_keeps_momentum_distribution() {
    let grid = SpatialGrid::new(8, 64).unwrap();
    let p = params(1e-300, 0.0, 0.0);
    let psi0 = gaussian_packet(&packet(20.0, 0.8), HBAR, grid).unwrap();
    let w0 = psi0.momentum_weights();
    let dp0 = quantum_momentum_width(&psi0, &p);
    let mut psi = psi0;
    let mut prop = Propagator::new(&p, grid, 128).unwrap();
    prop.propagate_with(&mut psi, 10, |_, psi| {
        assert!((quantum_momentum_width(psi, &p) - dp0).abs() <= 1e-10);
    });
    let total: f64 = w0.iter().sum();
    for (a, b) in w0.iter().zip(psi.momentum_weights()) {
        assert!((a - b).abs() <= 1e-10 * total);
    }
}

#[test]
fn undriven_energy_constant() {
    let p = params(0.36, 0.0, 0.0);
    let grid = SpatialGrid::default();
    let mut psi = gaussian_packet(&packet(51.0, 0.3), HBAR, grid).unwrap();
    let e0 = pendulum_expectation(&psi, 0.36);
    // The splitting error in <H0> is bounded but O(dtau^2); 1e-8 needs
    // twice the default step count.
    let mut prop = Propagator::new(&p, grid, 4096).unwrap();
    prop.propagate_with(&mut psi, 50, |_, psi| {
        let e = pendulum_expectation(psi, 0.36);
        assert!((e - e0).abs() <= 1e-8, "{e} vs {e0}");
    });
}

#[test]
fn lattice_translation_of_packets() {
    let p = params(0.36, 2.0, 0.5);
    let settings = QuantumSettings::default();
    let a = momentum_width_history(&packet(40.0, 0.0), &p, 10, &settings).unwrap();
    let b = momentum_width_history(&packet(40.0 + 2.0 * PI, 0.0), &p, 10, &settings).unwrap();
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-6);
    }
}

#[test]
fn undriven_width_stationary() {
    // The undriven mixture dephases slowly, so the width is averaged over
    // the second half of long runs on a small box.
    let p = params(0.36, 0.0, 0.0);
    let settings = |n: usize| QuantumSettings {
        grid: SpatialGrid::new(4, 64).unwrap(),
        steps_per_period: 512,
        average_strobes: n / 2,
        ..QuantumSettings::default()
    };
    let a = averaged_dpq(&p, 8, 400, &settings(400)).unwrap();
    let b = averaged_dpq(&p, 8, 800, &settings(800)).unwrap();
    assert!((a - b).abs() < 1e-3 * a.max(1.0), "{a} vs {b}");
}

#[test]
fn spatial_resolution_converged() {
    let p = params(0.36, 2.0, 0.5);
    let coarse = QuantumSettings::default();
    let fine = QuantumSettings {
        grid: SpatialGrid::new(coarse.grid.n_cells(), 2 * coarse.grid.points_per_cell()).unwrap(),
        ..coarse
    };
    let a = averaged_dpq(&p, 1, 50, &coarse).unwrap();
    let b = averaged_dpq(&p, 1, 50, &fine).unwrap();
    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
}

#[test]
fn husimi_matches_gaussian_overlap() {
    let alpha = 3.0;
    let grid = SpatialGrid::default();
    let (x0, p0) = (16.0 * PI + 1.0, 0.7);
    let psi = gaussian_packet(&Packet::new(x0, p0, alpha), HBAR, grid).unwrap();
    let window = PhaseWindow::new((16.0 * PI - PI, 16.0 * PI + 3.0 * PI), 40, (-2.0, 3.0), 50).unwrap();
    let h = husimi(&psi, &window, alpha, HBAR, 4).unwrap();
    let mut peak = 0.0f64;
    for ip in 0..window.np {
        for ix in 0..window.nx {
            let oracle = gaussian_husimi(window.x_node(ix), window.p_node(ip), x0, p0, alpha, alpha);
            assert!((h.grid.get(ix, ip) - oracle).abs() < 1e-10 * (1.0 + oracle));
            peak = peak.max(oracle);
        }
    }
    assert!(h.grid.is_nonnegative());
    // matched width: the peak sits on the packet centre
    let at_centre = gaussian_husimi(x0, p0, x0, p0, alpha, alpha);
    assert!(at_centre >= peak);
    let fine = PhaseWindow::new((x0 - 0.5, x0 + 0.5), 21, (p0 - 0.1, p0 + 0.1), 21).unwrap();
    let hf = husimi(&psi, &fine, alpha, HBAR, 4).unwrap();
    let (ix, ip) = hf.grid.argmax();
    assert!((fine.x_node(ix) - x0).abs() <= fine.dx() && (fine.p_node(ip) - p0).abs() <= fine.dp());
}

#[test]
fn husimi_integral_matches_normalization() {
    let grid = SpatialGrid::default();
    let psi = gaussian_packet(&packet(17.0 * PI, 0.2), HBAR, grid).unwrap();
    let window = PhaseWindow::new((16.0 * PI - 4.0 * PI, 16.0 * PI + 6.0 * PI), 160, (-3.0, 3.0), 120).unwrap();
    let h = husimi(&psi, &window, 3.0, HBAR, 4).unwrap();
    assert!((h.grid.integral() / h.normalization - 1.0).abs() < 0.02);
    assert!(h.normalization <= husimi_total(3.0, HBAR) * (1.0 + 1e-12));
}

#[test]
fn husimi_image_truncation_stable() {
    let p = params(0.36, 2.0, 0.5);
    let grid = SpatialGrid::default();
    let psi = propagate(gaussian_packet(&packet(16.0 * PI + PI, 1.0), HBAR, grid).unwrap(), 5, &p, 512).unwrap();
    let window = PhaseWindow::new((16.0 * PI - PI, 16.0 * PI + PI), 24, (-3.0, 3.0), 24).unwrap();
    let a = husimi(&psi, &window, 3.0, HBAR, 4).unwrap();
    let b = husimi(&psi, &window, 3.0, HBAR, 8).unwrap();
    for (u, v) in a.grid.values.iter().zip(&b.grid.values) {
        assert!((u - v).abs() < 1e-10);
    }
}

#[test]
fn husimi_lattice_covariance() {
    let p = params(0.36, 2.0, 0.7);
    let grid = SpatialGrid::default();
    let psi = propagate(gaussian_packet(&packet(16.0 * PI, 0.5), HBAR, grid).unwrap(), 3, &p, 512).unwrap();
    let mut shifted = psi.clone();
    shifted.amplitudes.rotate_right(grid.points_per_cell());
    let window = PhaseWindow::new((15.0 * PI, 17.0 * PI), 24, (-3.0, 3.0), 24).unwrap();
    let a = husimi(&psi, &window, 3.0, HBAR, 4).unwrap();
    let b = husimi(&shifted, &window.translated(2.0 * PI), 3.0, HBAR, 4).unwrap();
    for (u, v) in a.grid.values.iter().zip(&b.grid.values) {
        assert!((u - v).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn husimi_nonnegative(x0 in 10.0f64..90.0, p0 in -2.0f64..2.0, lambda in 0.0f64..4.0) {
        let grid = SpatialGrid::new(16, 32).unwrap();
        let psi = gaussian_packet(&packet(x0, p0), HBAR, grid).unwrap();
        let psi = propagate(psi, 1, &params(0.36, lambda, 0.5), 128).unwrap();
        let window = PhaseWindow::new((x0 - PI, x0 + PI), 16, (-3.0, 3.0), 16).unwrap();
        prop_assert!(husimi(&psi, &window, 3.0, HBAR, 4).unwrap().grid.is_nonnegative());
    }

    #[test]
    fn norm_preserved(x0 in 10.0f64..90.0, p0 in -2.0f64..2.0, lambda in 0.0f64..7.0, m in 0.0f64..1.0) {
        let grid = SpatialGrid::new(16, 32).unwrap();
        let psi = gaussian_packet(&packet(x0, p0), HBAR, grid).unwrap();
        let psi = propagate(psi, 2, &params(0.36, lambda, m), 256).unwrap();
        prop_assert!((psi.norm_squared() - 1.0).abs() < 1e-10);
    }
}

