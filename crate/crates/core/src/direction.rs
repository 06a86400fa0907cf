//! Transmission of a single spatial direction with `N` spins.
//!
//! Alice encodes the direction `n` in the state
//! `|A⟩ = Σ_j c_j |j, m(n)⟩` with one magnetic index `m` shared by every
//! total-angular-momentum block `j = m, m+1, …, N/2`. Bob measures with the
//! continuous rank-one POVM whose fiducial vector weights each block by
//! `√(2j+1)`. The mean cosine of the error angle is then a quadratic form
//! `⟨x⟩ = cᵀ A c` in the signal coefficients, with `A` symmetric tridiagonal,
//! so the optimal signal is the top eigenvector of `A` and the fidelity is
//! `F = (1 + λ_max)/2`.

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{gauss_legendre, symtridiag_top_eig, NumericsError, SymTridiag};
use crate::spinmath::{coherent_state, hilbert_dim, jacobi_poly, HalfInt};

/// First zero of the Bessel function J0; controls the large-`N` error floor
/// `1 - F → (j_{0,1}/(N+3))²`.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404825557695773;

#[derive(Debug, Error)]
pub enum DirectionError {
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Alice's signal: one magnetic index `m` and real coefficients `c_j`
/// over `j = m, m+1, …, N/2`, normalized to unit length.
#[derive(Clone, Debug)]
pub struct DirectionSignal {
    n_spins: u32,
    m: HalfInt,
    coeffs: Vec<f64>,
}

impl DirectionSignal {
    pub fn new(n_spins: u32, m: HalfInt, coeffs: Vec<f64>) -> Result<Self, DirectionError> {
        check_indices(n_spins, m)?;
        let expected = block_count(n_spins, m);
        if coeffs.len() != expected {
            return Err(DirectionError::InvalidIndex(format!(
                "expected {expected} coefficients for N={n_spins}, m={m}, got {}",
                coeffs.len()
            )));
        }
        let norm_sq: f64 = coeffs.iter().map(|c| c * c).sum();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(DirectionError::InvalidIndex(format!(
                "coefficients not normalized: |c|^2 = {norm_sq}"
            )));
        }
        Ok(DirectionSignal { n_spins, m, coeffs })
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn m(&self) -> HalfInt {
        self.m
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The `j` labels of the coefficient blocks, ascending.
    pub fn j_labels(&self) -> impl Iterator<Item = HalfInt> + '_ {
        j_labels(self.n_spins, self.m)
    }
}

/// Optimal signal plus the solved expectation `⟨x⟩ = ⟨cos χ⟩` and fidelity.
#[derive(Clone, Debug)]
pub struct DirectionSolution {
    pub signal: DirectionSignal,
    pub x_mean: f64,
    pub fidelity: f64,
}

/// `1 - F`, the Bessel-zero limit `(j_{0,1}/(N+3))²`, and their ratio.
#[derive(Clone, Copy, Debug)]
pub struct AsymptoteGap {
    pub one_minus_f: f64,
    pub limit: f64,
    pub ratio: f64,
}

fn check_indices(n_spins: u32, m: HalfInt) -> Result<(), DirectionError> {
    if n_spins == 0 {
        return Err(DirectionError::InvalidIndex("N must be at least 1".into()));
    }
    let tm = m.twice();
    if tm < 0 {
        return Err(DirectionError::InvalidIndex(format!(
            "m must be non-negative, got {m}"
        )));
    }
    if tm > n_spins as i32 {
        return Err(DirectionError::InvalidIndex(format!(
            "m={m} exceeds N/2={}",
            HalfInt::from_twice(n_spins as i32)
        )));
    }
    if (n_spins as i32 - tm) % 2 != 0 {
        return Err(DirectionError::InvalidIndex(format!(
            "N/2 - m must be an integer: N={n_spins}, m={m}"
        )));
    }
    Ok(())
}

fn block_count(n_spins: u32, m: HalfInt) -> usize {
    ((n_spins as i32 - m.twice()) / 2 + 1) as usize
}

fn j_labels(n_spins: u32, m: HalfInt) -> impl Iterator<Item = HalfInt> {
    let tm = m.twice();
    (0..block_count(n_spins, m) as i32).map(move |i| HalfInt::from_twice(tm + 2 * i))
}

/// The symmetric tridiagonal matrix of `⟨x⟩ = Σ c_j c_k A_jk` for signals
/// with magnetic index `m`: `A_jj = m²/(j(j+1))` (zero at `j = 0`) and
/// `A_{j,j-1} = (j² - m²)/(j √(4j² - 1))`, indexed ascending in `j`.
pub fn build_a_matrix(n_spins: u32, m: HalfInt) -> Result<SymTridiag, DirectionError> {
    check_indices(n_spins, m)?;
    let mv = m.value();
    let js: Vec<f64> = j_labels(n_spins, m).map(|j| j.value()).collect();
    let diag: Vec<f64> = js
        .iter()
        .map(|&j| if j == 0.0 { 0.0 } else { mv * mv / (j * (j + 1.0)) })
        .collect();
    let offdiag: Vec<f64> = js[1..]
        .iter()
        .map(|&j| (j * j - mv * mv) / (j * (4.0 * j * j - 1.0).sqrt()))
        .collect();
    Ok(SymTridiag::new(diag, offdiag)?)
}

/// Optimal signal for `(N, m)`: the top eigenpair of the `A` matrix.
pub fn solve_optimal(
    n_spins: u32,
    m: HalfInt,
    tol: f64,
) -> Result<DirectionSolution, DirectionError> {
    let a = build_a_matrix(n_spins, m)?;
    let (x_mean, coeffs) = symtridiag_top_eig(&a, tol)?;
    let signal = DirectionSignal { n_spins, m, coeffs };
    Ok(DirectionSolution {
        signal,
        x_mean,
        fidelity: (1.0 + x_mean) / 2.0,
    })
}

/// Fidelity `(N+1)/(N+2)` of the parallel-spin (maximal `m = N/2`) signal.
pub fn mp_baseline(n_spins: u32) -> f64 {
    let n = f64::from(n_spins);
    (n + 1.0) / (n + 2.0)
}

/// `1 - F` for the optimal even-`N`, `m = 0` signal against the
/// `(j_{0,1}/(N+3))²` limit.
pub fn asymptote_gap(n_spins: u32) -> Result<AsymptoteGap, DirectionError> {
    if !n_spins.is_multiple_of(2) {
        return Err(DirectionError::InvalidIndex(format!(
            "asymptote_gap needs even N (m = 0 optimum), got {n_spins}"
        )));
    }
    let solution = solve_optimal(n_spins, HalfInt::ZERO, 1e-12)?;
    let one_minus_f = 1.0 - solution.fidelity;
    let limit = (BESSEL_J0_FIRST_ZERO / (f64::from(n_spins) + 3.0)).powi(2);
    Ok(AsymptoteGap {
        one_minus_f,
        limit,
        ratio: one_minus_f / limit,
    })
}

/// Probability density of the outcome variable `x = cos χ` for a signal:
/// `p(x) = ½ |Σ_j c_j √(2j+1) ((1+x)/2)^m P^{(0,2m)}_{j-m}(x)|²`,
/// normalized to 1 on `[-1, 1]`.
pub fn outcome_density(signal: &DirectionSignal, x: f64) -> f64 {
    let m = signal.m;
    let mv = m.value();
    let tm = m.twice() as u32;
    let mut amp = 0.0;
    for (c, j) in signal.coeffs.iter().zip(signal.j_labels()) {
        let degree = ((j.twice() - m.twice()) / 2) as u32;
        amp += c
            * f64::from(j.twice() + 1).sqrt()
            * ((1.0 + x) / 2.0).powf(mv)
            * jacobi_poly(degree, 0, tm, x);
    }
    0.5 * amp * amp
}

/// Numerically integrates the POVM over the sphere in the direct-sum basis
/// `⊕_j span{|j, m'⟩}` (Gauss-Legendre in `cos θ`, uniform in `φ`) and
/// returns the maximum absolute deviation from the identity, including the
/// off-diagonal `j₁ ≠ j₂` blocks that must vanish.
pub fn povm_completeness_check(
    n_spins: u32,
    m: HalfInt,
    quad_order: usize,
    phi_points: usize,
) -> Result<f64, DirectionError> {
    check_indices(n_spins, m)?;
    if quad_order == 0 || phi_points == 0 {
        return Err(DirectionError::InvalidIndex(
            "quad_order and phi_points must be positive".into(),
        ));
    }
    let js: Vec<HalfInt> = j_labels(n_spins, m).collect();
    let dim: usize = js.iter().map(|j| j.multiplicity()).sum();
    let rule = gauss_legendre(quad_order);
    let mut acc = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut fiducial = vec![Complex64::new(0.0, 0.0); dim];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let theta = x.clamp(-1.0, 1.0).acos();
        for p in 0..phi_points {
            let phi = 2.0 * std::f64::consts::PI * (p as f64) / (phi_points as f64);
            let mut off = 0;
            for &j in &js {
                let state = coherent_state(j, m, theta, phi);
                let weight = f64::from(j.twice() + 1).sqrt();
                for (i, a) in state.amplitudes.iter().enumerate() {
                    fiducial[off + i] = a * weight;
                }
                off += j.multiplicity();
            }
            // dμ = dx dφ / 4π discretized as w/2 × 1/phi_points
            let wt = w / (2.0 * phi_points as f64);
            for r in 0..dim {
                let vr = fiducial[r] * wt;
                for c in 0..dim {
                    acc[r * dim + c] += vr * fiducial[c].conj();
                }
            }
        }
    }
    let mut dev: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let target = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((acc[r * dim + c] - target).norm());
        }
    }
    // Completeness only holds because the direct sum counts each j once;
    // cross-check the dimension bookkeeping while we are here.
    debug_assert!(
        m.twice() > 1 || dim as u64 == hilbert_dim(n_spins),
        "direct-sum dimension {dim} disagrees with the dimension count"
    );
    Ok(dev)
}
