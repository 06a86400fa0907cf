//! Seeded Monte Carlo simulation of both measurement protocols.
//!
//! Randomness is counter-based: every shot draws from its own stream keyed
//! by `(seed, shot index)`, so results are bit-identical for a fixed seed no
//! matter how the shots are split across workers. Direction outcomes use
//! inverse-CDF sampling of the one-dimensional density; frame outcomes use
//! rejection sampling under a provable Cauchy-Schwarz envelope.

use num_complex::Complex64;
use thiserror::Error;

use crate::direction::{outcome_density, DirectionSignal};
use crate::frame::{FiducialVector, FrameSignal, MeritKind};
use crate::numerics::gauss_legendre;
use crate::spinmath::{classical_rotation, rotation_angle, wigner_small_d, EulerAngles, HalfInt};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("empty sample set")]
    EmptySample,
    #[error("rejection envelope violated: density {density} > bound {bound} (implementation bug)")]
    EnvelopeViolation { density: f64, bound: f64 },
}

/// Simulation size, seed, and worker count. Results depend only on
/// `(shots, seed)`; `workers` changes the wall clock, never the values.
#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    pub shots: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn new(shots: u64, seed: u64) -> Self {
        SimConfig {
            shots,
            seed,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

/// Sample statistics against an analytic reference.
#[derive(Clone, Copy, Debug)]
pub struct EstimateReport {
    pub mean: f64,
    /// Sample standard deviation over `√shots`.
    pub stderr: f64,
    pub shots: u64,
    pub analytic: f64,
    /// `|mean - analytic| / stderr`.
    pub sigma_distance: f64,
}

// ---------------------------------------------------------------------------
// Counter-based randomness
// ---------------------------------------------------------------------------

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// splitmix64 stream keyed by `(seed, counter)`.
struct ShotRng {
    state: u64,
}

impl ShotRng {
    fn new(seed: u64, counter: u64) -> Self {
        ShotRng {
            state: mix64(seed ^ mix64(counter.wrapping_add(1).wrapping_mul(GOLDEN))),
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits.
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Splits `0..total` into `workers` contiguous chunks and fills `out`
/// in parallel; the result is position-deterministic because every shot
/// only consults its own counter stream.
fn fill_parallel<T: Send, F: Fn(u64) -> T + Sync>(out: &mut [T], workers: usize, f: F) {
    let total = out.len();
    let workers = workers.max(1).min(total.max(1));
    if workers <= 1 {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i as u64);
        }
        return;
    }
    let chunk = total.div_ceil(workers);
    std::thread::scope(|scope| {
        let mut rest = &mut out[..];
        let mut base = 0u64;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            let fref = &f;
            scope.spawn(move || {
                for (i, slot) in head.iter_mut().enumerate() {
                    *slot = fref(base + i as u64);
                }
            });
            rest = tail;
            base += take as u64;
        }
    });
}

/// Pairwise (cascade) sum in a fixed order, independent of worker count.
fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 128 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn report(values: &[f64], analytic: f64) -> Result<EstimateReport, SimError> {
    if values.is_empty() {
        return Err(SimError::EmptySample);
    }
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if values.len() > 1 {
        pairwise_sum(&sq) / (n - 1.0)
    } else {
        0.0
    };
    let stderr = (var / n).sqrt();
    let sigma_distance = if stderr > 0.0 {
        (mean - analytic).abs() / stderr
    } else if mean == analytic {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(EstimateReport {
        mean,
        stderr,
        shots: values.len() as u64,
        analytic,
        sigma_distance,
    })
}

// ---------------------------------------------------------------------------
// Direction sampling: inverse CDF
// ---------------------------------------------------------------------------

const CDF_CELLS: usize = 2048;

/// Tabulated CDF of the outcome density on a uniform grid. The panel rule
/// is exact for the polynomial density, so grid values carry only roundoff;
/// inversion then solves the exact CDF inside one cell.
struct InverseCdf<'a> {
    signal: &'a DirectionSignal,
    xs: Vec<f64>,
    cdf: Vec<f64>,
    panel: crate::numerics::QuadratureRule,
    /// Raw density mass before the roundoff-level renormalization.
    total: f64,
}

impl<'a> InverseCdf<'a> {
    fn build(signal: &'a DirectionSignal) -> Self {
        // exact for panel densities of degree <= 2*order - 1 >= N
        let panel_order = (signal.n_spins() as usize / 2 + 2).max(8);
        let panel = gauss_legendre(panel_order);
        let mut xs = Vec::with_capacity(CDF_CELLS + 1);
        let mut cdf = Vec::with_capacity(CDF_CELLS + 1);
        let h = 2.0 / CDF_CELLS as f64;
        let mut acc = 0.0;
        xs.push(-1.0);
        cdf.push(0.0);
        for cell in 0..CDF_CELLS {
            let a = -1.0 + cell as f64 * h;
            let b = a + h;
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let mut integral = 0.0;
            for (&t, &w) in panel.nodes.iter().zip(&panel.weights) {
                integral += w * outcome_density(signal, mid + half * t);
            }
            acc += integral * half;
            xs.push(b);
            cdf.push(acc);
        }
        // roundoff-level renormalization so u in [0,1) always lands
        let total = acc;
        if total > 0.0 {
            for v in cdf.iter_mut() {
                *v /= total;
            }
        }
        InverseCdf {
            signal,
            xs,
            cdf,
            panel,
            total: if total > 0.0 { total } else { 1.0 },
        }
    }

    fn invert(&self, u: f64) -> f64 {
        let mut lo = 0usize;
        let mut hi = self.cdf.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (x0, x1) = (self.xs[lo], self.xs[hi]);
        let (c0, c1) = (self.cdf[lo], self.cdf[hi]);
        let mass = c1 - c0;
        if mass <= 0.0 {
            return x0;
        }
        // Newton on the monotone CDF within the cell, with the exact density
        // as the derivative and bisection as the safety net.
        let (mut a, mut b) = (x0, x1);
        let mut x = x0 + (u - c0) / mass * (x1 - x0);
        for _ in 0..40 {
            let f = self.cdf_local(lo, x) - u;
            if f > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let p = outcome_density(self.signal, x);
            let step = if p > 1e-300 { f / p } else { 0.0 };
            let mut next = x - step;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() < 1e-14 {
                return next;
            }
            x = next;
        }
        x
    }

    /// CDF at `x` inside cell `lo`, by exact panel quadrature from the left
    /// edge of the cell (same normalization as the grid values).
    fn cdf_local(&self, lo: usize, x: f64) -> f64 {
        let x0 = self.xs[lo];
        let mid = 0.5 * (x0 + x);
        let half = 0.5 * (x - x0);
        let mut integral = 0.0;
        for (&t, &w) in self.panel.nodes.iter().zip(&self.panel.weights) {
            integral += w * outcome_density(self.signal, mid + half * t);
        }
        self.cdf[lo] + integral * half / self.total
    }

    /// CDF lookup for diagnostics (piecewise-exact at grid points).
    fn cdf_at(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let cell = (((x + 1.0) / 2.0) * CDF_CELLS as f64) as usize;
        let cell = cell.min(CDF_CELLS - 1);
        self.cdf_local(cell, x)
    }
}

/// Samples outcome values `x = cos χ` from the signal's detection density.
/// The azimuthal outcome is uniform by symmetry and omitted.
pub fn sample_direction_outcomes(signal: &DirectionSignal, config: &SimConfig) -> Vec<f64> {
    let inv = InverseCdf::build(signal);
    let mut out = vec![0.0f64; config.shots as usize];
    fill_parallel(&mut out, config.workers, |shot| {
        let mut rng = ShotRng::new(config.seed, shot);
        inv.invert(rng.next_f64())
    });
    out
}

/// Empirical CDF reference for tests: the exact integrated density.
pub fn direction_cdf(signal: &DirectionSignal, x: f64) -> f64 {
    InverseCdf::build(signal).cdf_at(x)
}

/// Mean fidelity `(1 + x)/2` over direction samples.
pub fn estimate_direction_fidelity(
    samples: &[f64],
    analytic: f64,
) -> Result<EstimateReport, SimError> {
    let values: Vec<f64> = samples.iter().map(|x| (1.0 + x) / 2.0).collect();
    report(&values, analytic)
}

// ---------------------------------------------------------------------------
// Frame sampling: rejection under a Cauchy-Schwarz envelope
// ---------------------------------------------------------------------------

/// Amplitude `⟨A|U(αβγ)|B⟩` with the POVM block weights `√(2j+1)`.
fn frame_amplitude(
    alice: &FrameSignal,
    bob: &FiducialVector,
    angles: &EulerAngles,
) -> Complex64 {
    let n = alice.n();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let d = wigner_small_d(HalfInt::from_int(j as i32), angles.beta);
        let weight = f64::from(2 * j + 1).sqrt();
        for im in 0..(2 * j + 1) as usize {
            let m = j as i32 - im as i32;
            let pm = Complex64::new(0.0, f64::from(m) * angles.alpha).exp();
            for ir in 0..(2 * j + 1) as usize {
                let r = j as i32 - ir as i32;
                let pr = Complex64::new(0.0, f64::from(r) * angles.gamma).exp();
                acc += weight * alice.amp(j, m).conj() * bob.amp(j, r) * pm * pr * d[(im, ir)];
            }
        }
    }
    acc
}

/// Per-block Cauchy-Schwarz bound on the density `|⟨A|U|B⟩|²`:
/// `C = (Σ_j √(2j+1) ‖a_j‖)²` (each `b` block is unit).
fn envelope_bound(alice: &FrameSignal) -> f64 {
    let n = alice.n();
    let mut sum = 0.0;
    for j in 0..n {
        let start = (j * j) as usize;
        let len = (2 * j + 1) as usize;
        let block: f64 = alice.amplitudes()[start..start + len]
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt();
        sum += f64::from(2 * j + 1).sqrt() * block;
    }
    sum * sum
}

/// Rejection-samples error-angle triples `(α, β, γ)` from the density
/// `|⟨A|U(αβγ)|B⟩|²` under the Haar measure. Every accepted sample is a
/// deterministic function of `(seed, shot index)`.
pub fn sample_frame_outcomes(
    alice: &FrameSignal,
    bob: &FiducialVector,
    config: &SimConfig,
) -> Result<Vec<EulerAngles>, SimError> {
    let bound = envelope_bound(alice);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = vec![(EulerAngles::new(0.0, 0.0, 0.0), 0.0f64); config.shots as usize];
    fill_parallel(&mut out, config.workers, |shot| {
        let mut rng = ShotRng::new(config.seed, shot);
        let mut worst = 0.0f64;
        loop {
            let alpha = two_pi * rng.next_f64();
            let x = 2.0 * rng.next_f64() - 1.0;
            let gamma = two_pi * rng.next_f64();
            let angles = EulerAngles::new(alpha, x.acos(), gamma);
            let density = frame_amplitude(alice, bob, &angles).norm_sqr();
            worst = worst.max(density);
            if rng.next_f64() * bound <= density {
                return (angles, worst);
            }
        }
    });
    let mut worst = 0.0f64;
    for &(_, w) in &out {
        worst = worst.max(w);
    }
    if worst > bound * (1.0 + 1e-12) {
        return Err(SimError::EnvelopeViolation {
            density: worst,
            bound,
        });
    }
    Ok(out.into_iter().map(|(angles, _)| angles).collect())
}

/// Per-sample axis-fidelity average evaluated through the classical error
/// rotation: `cos ω_z = R_zz`, `cos ω_x + cos ω_y = R_xx + R_yy`, and
/// `1 + 2 cos Ω = trace`.
pub fn estimate_frame_merit(
    samples: &[EulerAngles],
    kind: MeritKind,
    analytic: f64,
) -> Result<EstimateReport, SimError> {
    let values: Vec<f64> = samples
        .iter()
        .map(|angles| {
            let r = classical_rotation(angles);
            match kind {
                MeritKind::ZAxis => r.entry(2, 2),
                MeritKind::XYAxes => r.entry(0, 0) + r.entry(1, 1),
                MeritKind::AllAxes => 1.0 + 2.0 * rotation_angle(&r).cos(),
                MeritKind::Weighted([wx, wy, wz]) => {
                    wx * r.entry(0, 0) + wy * r.entry(1, 1) + wz * r.entry(2, 2)
                }
            }
        })
        .collect();
    report(&values, analytic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction::solve_optimal;
    use crate::frame::{alternating_optimize, MeritKind, OptimizeOptions};
    use approx::assert_abs_diff_eq;

    #[test]
    fn estimate_report_basics() {
        assert!(matches!(
            estimate_direction_fidelity(&[], 0.5),
            Err(SimError::EmptySample)
        ));
        let r = estimate_direction_fidelity(&[1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.sigma_distance, 0.0);
    }

    #[test]
    fn direction_sampling_determinism_and_mean() {
        let s = solve_optimal(1, HalfInt::HALF, 1e-12).unwrap();
        let config = SimConfig::new(100_000, 42);
        let a = sample_direction_outcomes(&s.signal, &config);
        let b = sample_direction_outcomes(&s.signal, &config);
        assert_eq!(a, b); // bit-identical

        let c = sample_direction_outcomes(&s.signal, &config.with_workers(4));
        assert_eq!(a, c); // worker count cannot change values

        // p(x) = (1+x)/2 has mean 1/3
        let est = estimate_direction_fidelity(&a, 2.0 / 3.0).unwrap();
        assert!(est.sigma_distance < 4.0, "sigma {}", est.sigma_distance);
    }

    #[test]
    fn direction_sampling_mp_signal() {
        let s = solve_optimal(10, HalfInt::from_twice(10), 1e-12).unwrap();
        let samples =
            sample_direction_outcomes(&s.signal, &SimConfig::new(100_000, 7).with_workers(2));
        let est = estimate_direction_fidelity(&samples, 11.0 / 12.0).unwrap();
        assert!(est.sigma_distance < 4.0, "sigma {}", est.sigma_distance);
    }

    #[test]
    fn direction_inverse_cdf_ks_distance() {
        // Kolmogorov-Smirnov distance between the empirical sample CDF and
        // the integrated density, for a structured N=6 signal.
        let s = solve_optimal(6, HalfInt::ZERO, 1e-12).unwrap();
        let mut samples =
            sample_direction_outcomes(&s.signal, &SimConfig::new(100_000, 3));
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let mut ks: f64 = 0.0;
        // scan a subsample for speed; the CDF is smooth
        for (i, &x) in samples.iter().enumerate().step_by(97) {
            let empirical = (i + 1) as f64 / n;
            let exact = direction_cdf(&s.signal, x);
            ks = ks.max((empirical - exact).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn frame_sampling_haar_uniform_scalar() {
        let alice = FrameSignal::new(1, vec![Complex64::new(1.0, 0.0)]).unwrap();
        let bob = FiducialVector::uniform(1);
        let samples =
            sample_frame_outcomes(&alice, &bob, &SimConfig::new(50_000, 11)).unwrap();
        // scalar representation: density == 1, every proposal accepted,
        // and cos β is uniform on [-1, 1] with mean 0
        let est = estimate_frame_merit(&samples, MeritKind::ZAxis, 0.0).unwrap();
        assert!(est.sigma_distance < 4.0, "sigma {}", est.sigma_distance);
        // Haar average of the trace is 0
        let est = estimate_frame_merit(&samples, MeritKind::AllAxes, 0.0).unwrap();
        assert!(est.sigma_distance < 4.0, "sigma {}", est.sigma_distance);
    }

    #[test]
    fn frame_sampling_z_optimal_pair() {
        let sol = alternating_optimize(
            2,
            MeritKind::ZAxis,
            &OptimizeOptions {
                restarts: 1,
                ..OptimizeOptions::default()
            },
        )
        .unwrap();
        let config = SimConfig::new(50_000, 5).with_workers(3);
        let samples = sample_frame_outcomes(&sol.alice, &sol.bob, &config).unwrap();
        let est =
            estimate_frame_merit(&samples, MeritKind::ZAxis, 1.0 / 3.0f64.sqrt()).unwrap();
        assert!(est.sigma_distance < 4.0, "sigma {}", est.sigma_distance);

        // determinism across reruns and worker counts
        let again =
            sample_frame_outcomes(&sol.alice, &sol.bob, &SimConfig::new(50_000, 5)).unwrap();
        assert_eq!(samples.len(), again.len());
        for (a, b) in samples.iter().zip(&again) {
            assert_eq!((a.alpha, a.beta, a.gamma), (b.alpha, b.beta, b.gamma));
        }
    }

    #[test]
    fn frame_sampling_all_axes_pair() {
        // converged n=2 all-axes pair: empirical merit matches the analytic
        // contraction within the statistical bound
        let sol = alternating_optimize(2, MeritKind::AllAxes, &OptimizeOptions::default())
            .unwrap();
        let samples =
            sample_frame_outcomes(&sol.alice, &sol.bob, &SimConfig::new(40_000, 23)).unwrap();
        let est = estimate_frame_merit(&samples, MeritKind::AllAxes, sol.merit).unwrap();
        assert!(est.sigma_distance < 4.0, "sigma {}", est.sigma_distance);
    }

    #[test]
    fn frame_merit_identity_samples() {
        let identity = vec![EulerAngles::new(0.0, 0.0, 0.0); 10];
        let est = estimate_frame_merit(&identity, MeritKind::ZAxis, 1.0).unwrap();
        assert_abs_diff_eq!(est.mean, 1.0, epsilon = 1e-14);
        let est = estimate_frame_merit(&identity, MeritKind::AllAxes, 3.0).unwrap();
        assert_abs_diff_eq!(est.mean, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sigma_distance_calibration() {
        // Over 20 seeds, the 4-sigma bound should essentially never trip
        // (coarse normality check: at most 2 seeds above 3 sigma).
        let s = solve_optimal(4, HalfInt::ZERO, 1e-12).unwrap();
        let mut above_three = 0;
        for seed in 0..20u64 {
            let samples = sample_direction_outcomes(&s.signal, &SimConfig::new(20_000, seed));
            let est = estimate_direction_fidelity(&samples, s.fidelity).unwrap();
            if est.sigma_distance > 3.0 {
                above_three += 1;
            }
            assert!(est.sigma_distance < 6.0, "seed {seed}: {}", est.sigma_distance);
        }
        assert!(above_three <= 2, "{above_three} seeds above 3 sigma");
    }
}
