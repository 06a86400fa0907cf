//! Transmission of a full Cartesian frame with a single level of principal
//! quantum number `n` (angular momenta `j = 0..n-1`, dimension `d = n²`).
//!
//! Alice sends `|A⟩ = Σ a_jm |j,m⟩`; Bob measures the covariant POVM
//! generated by rotating a fiducial vector `|B⟩ = Σ_j √(2j+1) Σ_m b_jm |j,m⟩`
//! over SO(3) (the `b` amplitudes are normalized per `j`-block). The
//! expectation of an axis-fidelity function of the error rotation is an
//! exact contraction `Σ f_{jkmnrs} a*_jm b_jr a_kn b*_ks`; the sparse
//! coefficients for `⟨cos ω_z⟩` and `⟨cos ω_x + cos ω_y⟩` are assembled here
//! from the `g` and `h` matrices and cross-checked against direct Haar-
//! measure quadrature.
//!
//! The optimum alternates between the top eigenvector of
//! `M_{jm,kn} = Σ_rs f_{jkmnrs} b_jr b*_ks` (best Alice for fixed Bob) and
//! the per-block renormalization `b_jm = a_jm / ‖a_j‖` (best Bob for fixed
//! Alice, observed fixed-point shape).

use num_complex::Complex64;
use thiserror::Error;

use crate::direction;
use crate::numerics::{
    gauss_legendre, hermitian_top_eig, HermitianMatrix, NumericsError,
};
use crate::spinmath::{wigner_small_d, HalfInt, Rotation3};

use ndarray::Array2;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("unsupported weights: {0}")]
    UnsupportedWeights(String),
    #[error("degenerate j={j} block: amplitudes have vanishing norm")]
    DegenerateBlock { j: u32 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Direction(#[from] direction::DirectionError),
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Linear index of `(j, m)` inside the direct-sum layout: block `j` starts
/// at offset `j²` and runs `m = j, j-1, …, -j`.
pub fn state_index(j: u32, m: i32) -> usize {
    debug_assert!(m.unsigned_abs() <= j);
    (j * j) as usize + (j as i32 - m) as usize
}

fn total_dim(n: u32) -> usize {
    (n * n) as usize
}

fn block_norm(amps: &[Complex64], j: u32) -> f64 {
    let start = (j * j) as usize;
    let end = start + (2 * j + 1) as usize;
    amps[start..end]
        .iter()
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Alice's signal amplitudes `a_{jm}`, normalized to unit total norm.
#[derive(Clone, Debug)]
pub struct FrameSignal {
    n: u32,
    amps: Vec<Complex64>,
}

/// Bob's fiducial amplitudes `b_{jm}`, normalized within every `j` block.
/// The per-block `√(2j+1)` POVM weight is applied by the operations, not
/// stored here.
#[derive(Clone, Debug)]
pub struct FiducialVector {
    n: u32,
    amps: Vec<Complex64>,
}

impl FrameSignal {
    pub fn new(n: u32, amps: Vec<Complex64>) -> Result<Self, FrameError> {
        if n == 0 {
            return Err(FrameError::InvalidInput("n must be at least 1".into()));
        }
        if amps.len() != total_dim(n) {
            return Err(FrameError::InvalidInput(format!(
                "expected {} amplitudes for n={n}, got {}",
                total_dim(n),
                amps.len()
            )));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(FrameError::InvalidInput(format!(
                "amplitudes not normalized: |a|^2 = {norm_sq}"
            )));
        }
        Ok(FrameSignal { n, amps })
    }

    pub fn from_unnormalized(n: u32, mut amps: Vec<Complex64>) -> Result<Self, FrameError> {
        if amps.len() != total_dim(n) {
            return Err(FrameError::InvalidInput(format!(
                "expected {} amplitudes for n={n}, got {}",
                total_dim(n),
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(FrameError::InvalidInput("zero amplitude vector".into()));
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(FrameSignal { n, amps })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, j: u32, m: i32) -> Complex64 {
        self.amps[state_index(j, m)]
    }
}

impl FiducialVector {
    pub fn new(n: u32, amps: Vec<Complex64>) -> Result<Self, FrameError> {
        if n == 0 {
            return Err(FrameError::InvalidInput("n must be at least 1".into()));
        }
        if amps.len() != total_dim(n) {
            return Err(FrameError::InvalidInput(format!(
                "expected {} amplitudes for n={n}, got {}",
                total_dim(n),
                amps.len()
            )));
        }
        for j in 0..n {
            let norm = block_norm(&amps, j);
            if (norm - 1.0).abs() > 1e-12 {
                return Err(FrameError::InvalidInput(format!(
                    "block j={j} not normalized: |b_j| = {norm}"
                )));
            }
        }
        Ok(FiducialVector { n, amps })
    }

    /// Uniform real-positive fiducial: `b_jm = 1/√(2j+1)`.
    pub fn uniform(n: u32) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); total_dim(n)];
        for j in 0..n {
            let v = 1.0 / f64::from(2 * j + 1).sqrt();
            for m in -(j as i32)..=(j as i32) {
                amps[state_index(j, m)] = Complex64::new(v, 0.0);
            }
        }
        FiducialVector { n, amps }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, j: u32, m: i32) -> Complex64 {
        self.amps[state_index(j, m)]
    }
}

// ---------------------------------------------------------------------------
// Merit tensors
// ---------------------------------------------------------------------------

/// Which axis-fidelity function the tensor encodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeritKind {
    /// `⟨cos ω_z⟩ = ⟨cos β⟩`
    ZAxis,
    /// `⟨cos ω_x + cos ω_y⟩ = ⟨(1 + cos β) cos(α + γ)⟩`
    XYAxes,
    /// `⟨cos ω_x + cos ω_y + cos ω_z⟩ = ⟨1 + 2 cos Ω⟩`
    AllAxes,
    /// `w_x ⟨cos ω_x⟩ + w_y ⟨cos ω_y⟩ + w_z ⟨cos ω_z⟩`; requires `w_x = w_y`
    /// because only the paired x+y expectation has an analytic tensor.
    Weighted([f64; 3]),
}

/// One sparse coefficient of `Σ f a*_{jm} b_{jr} a_{kn} b*_{ks}`.
#[derive(Clone, Copy, Debug)]
pub struct TensorEntry {
    pub j: u32,
    pub k: u32,
    pub m: i32,
    pub n: i32,
    pub r: i32,
    pub s: i32,
    pub coeff: f64,
}

/// Sparse merit tensor `f_{jkmnrs}` for one level and kind.
#[derive(Clone, Debug)]
pub struct MeritTensor {
    kind: MeritKind,
    n: u32,
    entries: Vec<TensorEntry>,
}

impl MeritTensor {
    pub fn kind(&self) -> MeritKind {
        self.kind
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }
}

/// Element `g_{jk}(n, s)` of the `⟨cos β⟩` coupling matrix:
/// `g_jj = ns/(j(j+1))` (zero at `j = 0`) and
/// `g_{j,j-1} = g_{j-1,j} = (1/j) √((j²-n²)(j²-s²)/(4j²-1))`.
pub fn g_element(j: u32, k: u32, n: i32, s: i32) -> Result<f64, FrameError> {
    let min_jk = j.min(k) as i32;
    if n.abs() > min_jk || s.abs() > min_jk || j.abs_diff(k) > 1 {
        return Err(FrameError::InvalidIndex(format!(
            "g_element out of range: j={j}, k={k}, n={n}, s={s}"
        )));
    }
    if j == k {
        if j == 0 {
            return Ok(0.0); // 0/0 resolved by the vanishing numerator
        }
        let jf = f64::from(j);
        Ok(f64::from(n) * f64::from(s) / (jf * (jf + 1.0)))
    } else {
        let big = f64::from(j.max(k));
        let nn = f64::from(n);
        let ss = f64::from(s);
        Ok((1.0 / big)
            * ((big * big - nn * nn) * (big * big - ss * ss) / (4.0 * big * big - 1.0)).sqrt())
    }
}

/// Element `h_{jk}(n, s)` of the `⟨(1+cos β) e^{i(α+γ)}⟩` coupling matrix
/// (row `j`, column `k`; `n` and `s` are the larger magnetic indices of the
/// two delta-linked pairs). The matrix is not symmetric.
pub fn h_element(j: u32, k: u32, n: i32, s: i32) -> Result<f64, FrameError> {
    let (jc, kc) = (j as i32, k as i32);
    let valid = j.abs_diff(k) <= 1
        && n.abs() <= kc
        && (n - 1).abs() <= jc
        && s.abs() <= kc
        && (s - 1).abs() <= jc;
    if !valid {
        return Err(FrameError::InvalidIndex(format!(
            "h_element out of range: j={j}, k={k}, n={n}, s={s}"
        )));
    }
    let nn = f64::from(n);
    let ss = f64::from(s);
    if j == k {
        let jf = f64::from(j);
        Ok(((jf - nn + 1.0) * (jf + nn) * (jf - ss + 1.0) * (jf + ss)).sqrt()
            / (2.0 * jf * (jf + 1.0)))
    } else if j == k + 1 {
        let jf = f64::from(j);
        Ok(((jf - nn + 1.0) * (jf - nn) * (jf - ss + 1.0) * (jf - ss)).sqrt()
            / (2.0 * jf * (4.0 * jf * jf - 1.0).sqrt()))
    } else {
        let jf = f64::from(k); // the larger index names the formula
        Ok(((jf + nn - 1.0) * (jf + nn) * (jf + ss - 1.0) * (jf + ss)).sqrt()
            / (2.0 * jf * (4.0 * jf * jf - 1.0).sqrt()))
    }
}

fn push_z_entries(entries: &mut Vec<TensorEntry>, n_level: u32, scale: f64) {
    for j in 0..n_level {
        for k in j.saturating_sub(1)..=(j + 1).min(n_level - 1) {
            let lim = j.min(k) as i32;
            for m in -lim..=lim {
                for r in -lim..=lim {
                    let coeff = g_element(j, k, m, r).expect("in-range g index") * scale;
                    if coeff != 0.0 {
                        entries.push(TensorEntry { j, k, m, n: m, r, s: r, coeff });
                    }
                }
            }
        }
    }
}

fn push_xy_entries(entries: &mut Vec<TensorEntry>, n_level: u32, scale: f64) {
    for j in 0..n_level {
        for k in j.saturating_sub(1)..=(j + 1).min(n_level - 1) {
            let (jc, kc) = (j as i32, k as i32);
            // first delta pattern: m = n-1, r = s-1, coefficient h_{jk}(n, s)
            for n in -kc..=kc {
                if (n - 1).abs() > jc {
                    continue;
                }
                for s in -kc..=kc {
                    if (s - 1).abs() > jc {
                        continue;
                    }
                    let coeff = h_element(j, k, n, s).expect("in-range h index") * scale;
                    if coeff != 0.0 {
                        entries.push(TensorEntry { j, k, m: n - 1, n, r: s - 1, s, coeff });
                    }
                }
            }
            // mirrored pattern: n = m-1, s = r-1, coefficient h_{kj}(m, r)
            for m in -jc..=jc {
                if (m - 1).abs() > kc {
                    continue;
                }
                for r in -jc..=jc {
                    if (r - 1).abs() > kc {
                        continue;
                    }
                    let coeff = h_element(k, j, m, r).expect("in-range h index") * scale;
                    if coeff != 0.0 {
                        entries.push(TensorEntry { j, k, m, n: m - 1, r, s: r - 1, coeff });
                    }
                }
            }
        }
    }
}

/// Assembles the sparse `f_{jkmnrs}` tensor for a level and merit kind.
pub fn build_merit_tensor(kind: MeritKind, n: u32) -> Result<MeritTensor, FrameError> {
    if n == 0 {
        return Err(FrameError::InvalidInput("n must be at least 1".into()));
    }
    let mut entries = Vec::new();
    match kind {
        MeritKind::ZAxis => push_z_entries(&mut entries, n, 1.0),
        MeritKind::XYAxes => push_xy_entries(&mut entries, n, 1.0),
        MeritKind::AllAxes => {
            push_z_entries(&mut entries, n, 1.0);
            push_xy_entries(&mut entries, n, 1.0);
        }
        MeritKind::Weighted([wx, wy, wz]) => {
            let scale = wx.abs().max(wy.abs()).max(1.0);
            if (wx - wy).abs() > 1e-9 * scale {
                return Err(FrameError::UnsupportedWeights(format!(
                    "x and y weights must be equal (got {wx} and {wy}); only the paired \
                     x+y expectation has an analytic tensor"
                )));
            }
            push_z_entries(&mut entries, n, wz);
            push_xy_entries(&mut entries, n, wx);
        }
    }
    Ok(MeritTensor { kind, n, entries })
}

/// The Hermitian matrix `M_{jm,kn} = Σ_rs f_{jkmnrs} b_jr b*_ks` whose top
/// eigenvector is Alice's best signal for the given Bob. Block-diagonal in
/// `m` for the z-axis tensor.
pub fn build_m_matrix(tensor: &MeritTensor, bob: &FiducialVector) -> Result<HermitianMatrix, FrameError> {
    if bob.n() != tensor.n {
        return Err(FrameError::InvalidInput(format!(
            "fiducial level {} does not match tensor level {}",
            bob.n(),
            tensor.n
        )));
    }
    let d = total_dim(tensor.n);
    let mut m = Array2::<Complex64>::zeros((d, d));
    for e in &tensor.entries {
        let row = state_index(e.j, e.m);
        let col = state_index(e.k, e.n);
        m[(row, col)] += e.coeff * bob.amp(e.j, e.r) * bob.amp(e.k, e.s).conj();
    }
    // The analytic tensor is exactly conjugate-symmetric; symmetrize away
    // the floating-point dust so the Hermitian validation cannot trip.
    let mt = m.t().mapv(|v| v.conj());
    let sym = (&m + &mt).mapv(|v| v * 0.5);
    Ok(HermitianMatrix::new(sym)?)
}

/// Full contraction `Σ f_{jkmnrs} a*_jm b_jr a_kn b*_ks` (real by symmetry).
pub fn merit_expectation(
    tensor: &MeritTensor,
    alice: &FrameSignal,
    bob: &FiducialVector,
) -> Result<f64, FrameError> {
    if alice.n() != tensor.n || bob.n() != tensor.n {
        return Err(FrameError::InvalidInput(
            "alice/bob level does not match tensor level".into(),
        ));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for e in &tensor.entries {
        acc += e.coeff
            * alice.amp(e.j, e.m).conj()
            * bob.amp(e.j, e.r)
            * alice.amp(e.k, e.n)
            * bob.amp(e.k, e.s).conj();
    }
    debug_assert!(acc.im.abs() < 1e-10, "merit has imaginary part {}", acc.im);
    Ok(acc.re)
}

// ---------------------------------------------------------------------------
// Haar-measure quadrature oracle
// ---------------------------------------------------------------------------

/// Direct numerical integration of `f(αβγ) |⟨A|U(αβγ)|B⟩|²` over the Haar
/// measure: Gauss-Legendre in `cos β`, uniform grids in `α` and `γ`. Unlike
/// the analytic tensor, the oracle evaluates any diagonal weighting,
/// including unequal x/y weights (through the x-y difference
/// `cos ω_x - cos ω_y = (1 - cos β) cos(α - γ)`).
pub fn quadrature_merit_oracle(
    alice: &FrameSignal,
    bob: &FiducialVector,
    kind: MeritKind,
    beta_order: usize,
    angle_points: usize,
) -> Result<f64, FrameError> {
    let acc = oracle_core(alice, bob, beta_order, angle_points)?;
    Ok(match kind {
        MeritKind::ZAxis => acc.z,
        MeritKind::XYAxes => acc.xy_sum,
        MeritKind::AllAxes => acc.z + acc.xy_sum,
        MeritKind::Weighted([wx, wy, wz]) => {
            wz * acc.z + 0.5 * (wx + wy) * acc.xy_sum + 0.5 * (wx - wy) * acc.xy_diff
        }
    })
}

/// The Haar normalization `∫ |⟨A|U|B⟩|² dμ`, which equals 1 exactly when the
/// rotated fiducial family resolves the identity.
pub fn haar_normalization(
    alice: &FrameSignal,
    bob: &FiducialVector,
    beta_order: usize,
    angle_points: usize,
) -> Result<f64, FrameError> {
    Ok(oracle_core(alice, bob, beta_order, angle_points)?.norm)
}

struct OracleAccumulators {
    /// ⟨cos β⟩
    z: f64,
    /// ⟨(1 + cos β) cos(α + γ)⟩ = ⟨cos ω_x + cos ω_y⟩
    xy_sum: f64,
    /// ⟨(cos β - 1) cos(α - γ)⟩ = ⟨cos ω_x - cos ω_y⟩
    xy_diff: f64,
    /// ∫ |⟨A|U|B⟩|² dμ
    norm: f64,
}

fn oracle_core(
    alice: &FrameSignal,
    bob: &FiducialVector,
    beta_order: usize,
    angle_points: usize,
) -> Result<OracleAccumulators, FrameError> {
    if alice.n() != bob.n() {
        return Err(FrameError::InvalidInput(
            "alice and bob levels differ".into(),
        ));
    }
    if beta_order == 0 || angle_points == 0 {
        return Err(FrameError::InvalidInput(
            "quadrature orders must be positive".into(),
        ));
    }
    let n = alice.n();
    let span = (2 * n - 1) as usize;
    let rule = gauss_legendre(beta_order);
    let p = angle_points;
    let two_pi = 2.0 * std::f64::consts::PI;
    let phases: Vec<Vec<Complex64>> = (0..p)
        .map(|ip| {
            let angle = two_pi * (ip as f64) / (p as f64);
            (0..span)
                .map(|f| Complex64::new(0.0, (f as f64 - (n as f64 - 1.0)) * angle).exp())
                .collect()
        })
        .collect();
    let mut z_acc = 0.0;
    let mut xy_acc = 0.0;
    let mut xy_diff_acc = 0.0;
    let mut norm_acc = 0.0;
    let mut table = vec![Complex64::new(0.0, 0.0); span * span];
    let mut partial = vec![Complex64::new(0.0, 0.0); span];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let beta = x.clamp(-1.0, 1.0).acos();
        table.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for j in 0..n {
            let d = wigner_small_d(HalfInt::from_int(j as i32), beta);
            let weight = f64::from(2 * j + 1).sqrt();
            for im in 0..(2 * j + 1) as usize {
                let m = j as i32 - im as i32;
                let fm = (m + n as i32 - 1) as usize;
                for ir in 0..(2 * j + 1) as usize {
                    let r = j as i32 - ir as i32;
                    let fr = (r + n as i32 - 1) as usize;
                    table[fm * span + fr] +=
                        weight * alice.amp(j, m).conj() * bob.amp(j, r) * d[(im, ir)];
                }
            }
        }
        let base_w = w / (2.0 * (p * p) as f64);
        for (ia, pa) in phases.iter().enumerate() {
            let alpha = two_pi * (ia as f64) / (p as f64);
            partial.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for fm in 0..span {
                let u = pa[fm];
                for fr in 0..span {
                    partial[fr] += u * table[fm * span + fr];
                }
            }
            for (ig, pg) in phases.iter().enumerate() {
                let gamma = two_pi * (ig as f64) / (p as f64);
                let mut amp = Complex64::new(0.0, 0.0);
                for fr in 0..span {
                    amp += partial[fr] * pg[fr];
                }
                let density = amp.norm_sqr() * base_w;
                norm_acc += density;
                z_acc += density * x;
                xy_acc += density * (1.0 + x) * (alpha + gamma).cos();
                xy_diff_acc += density * (x - 1.0) * (alpha - gamma).cos();
            }
        }
    }
    Ok(OracleAccumulators {
        z: z_acc,
        xy_sum: xy_acc,
        xy_diff: xy_diff_acc,
        norm: norm_acc,
    })
}

// ---------------------------------------------------------------------------
// Alternating optimization
// ---------------------------------------------------------------------------

/// Per-block renormalization of Alice's amplitudes, the observed fixed-point
/// shape of the optimal Bob: `b_jm = a_jm / ‖a_j‖`.
pub fn bob_from_alice(alice: &FrameSignal) -> Result<FiducialVector, FrameError> {
    let n = alice.n();
    let mut amps = alice.amps.clone();
    for j in 0..n {
        let norm = block_norm(&amps, j);
        if norm < 1e-14 {
            return Err(FrameError::DegenerateBlock { j });
        }
        let start = (j * j) as usize;
        for a in &mut amps[start..start + (2 * j + 1) as usize] {
            *a /= norm;
        }
    }
    Ok(FiducialVector { n, amps })
}

/// Like [`bob_from_alice`], with degenerate blocks reset to the uniform
/// block (their merit contribution is second order there).
pub fn bob_from_alice_or_uniform(alice: &FrameSignal) -> FiducialVector {
    let n = alice.n();
    let mut amps = alice.amps.clone();
    for j in 0..n {
        let norm = block_norm(&amps, j);
        let start = (j * j) as usize;
        let len = (2 * j + 1) as usize;
        if norm < 1e-14 {
            let v = Complex64::new(1.0 / (len as f64).sqrt(), 0.0);
            amps[start..start + len].iter_mut().for_each(|a| *a = v);
        } else {
            amps[start..start + len].iter_mut().for_each(|a| *a /= norm);
        }
    }
    FiducialVector { n, amps }
}

/// Options for [`alternating_optimize`].
#[derive(Clone, Debug)]
pub struct OptimizeOptions {
    /// Fixed-point tolerance on `‖bob_from_alice(a) - b‖`.
    pub tol: f64,
    pub max_iters: u32,
    /// Number of extra random initializations beyond the uniform one.
    pub restarts: u32,
    pub seed: u64,
    /// Worker threads for running restarts in parallel.
    pub workers: usize,
    /// Explicit initialization for the first restart (uniform otherwise).
    pub init: Option<FiducialVector>,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            tol: 1e-9,
            max_iters: 500,
            restarts: 5,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |v| v.get()),
            init: None,
        }
    }
}

/// Converged signal/fiducial pair and its merit diagnostics.
#[derive(Clone, Debug)]
pub struct FrameSolution {
    pub alice: FrameSignal,
    pub bob: FiducialVector,
    pub merit: f64,
    /// `(⟨cos ω_x⟩, ⟨cos ω_y⟩, ⟨cos ω_z⟩)`; x and y are reported as their
    /// common average since only the paired expectation is available.
    pub per_axis: [f64; 3],
    /// `Σ_k (1 - ⟨cos ω_k⟩)/2 = 1 - ⟨cos Ω⟩`.
    pub mse_total: f64,
    pub iters: u32,
    pub converged: bool,
    /// Eigenvalue after each iteration of the winning restart.
    pub merit_history: Vec<f64>,
    /// False if any iteration decreased the merit (the fixed-point step is
    /// not provably monotone).
    pub monotone: bool,
    pub restarts_used: u32,
}

struct RestartOutcome {
    alice: FrameSignal,
    bob: FiducialVector,
    merit: f64,
    iters: u32,
    converged: bool,
    history: Vec<f64>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn random_fiducial(n: u32, seed: u64) -> FiducialVector {
    let mut state = seed;
    let mut amps = vec![Complex64::new(0.0, 0.0); total_dim(n)];
    for a in &mut amps {
        let re = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        let im = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        *a = Complex64::new(re, im);
    }
    for j in 0..n {
        let norm = block_norm(&amps, j);
        let start = (j * j) as usize;
        let len = (2 * j + 1) as usize;
        if norm < 1e-14 {
            let v = Complex64::new(1.0 / (len as f64).sqrt(), 0.0);
            amps[start..start + len].iter_mut().for_each(|a| *a = v);
        } else {
            amps[start..start + len].iter_mut().for_each(|a| *a /= norm);
        }
    }
    FiducialVector { n, amps }
}

fn run_restart(
    tensor: &MeritTensor,
    mut bob: FiducialVector,
    tol: f64,
    max_iters: u32,
) -> Result<RestartOutcome, FrameError> {
    // The fixed-point residual bottoms out at the eigenvector noise, so the
    // eigensolver must run well below the alternation tolerance.
    let eigen_tol = (tol * 1e-3).clamp(5e-13, 1e-11);
    let mut history = Vec::new();
    let mut best: Option<RestartOutcome> = None;
    for iter in 1..=max_iters {
        let m = build_m_matrix(tensor, &bob)?;
        let (lambda, vec) = hermitian_top_eig(&m, eigen_tol)?;
        let alice = FrameSignal {
            n: tensor.n,
            amps: vec,
        };
        history.push(lambda);
        let bob_next = bob_from_alice_or_uniform(&alice);
        let delta: f64 = bob_next
            .amplitudes()
            .iter()
            .zip(bob.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let is_best = best.as_ref().is_none_or(|b| lambda > b.merit);
        if is_best || delta < tol {
            best = Some(RestartOutcome {
                alice: alice.clone(),
                bob: bob.clone(),
                merit: lambda,
                iters: iter,
                converged: delta < tol,
                history: history.clone(),
            });
        }
        if delta < tol {
            break;
        }
        bob = bob_next;
    }
    best.ok_or(FrameError::InvalidInput("no iterations performed".into()))
}

/// Alternates "top eigenvector of `M(b)`" with the per-block fixed-point map
/// until `‖bob_from_alice(a) - b‖ < tol`. Runs the uniform initialization
/// plus `restarts` random ones (in parallel), keeps the best converged merit
/// (ties broken by lowest restart index), and flags non-monotone histories
/// rather than hiding them.
pub fn alternating_optimize(
    n: u32,
    kind: MeritKind,
    options: &OptimizeOptions,
) -> Result<FrameSolution, FrameError> {
    if n == 0 {
        return Err(FrameError::InvalidInput("n must be at least 1".into()));
    }
    let tensor = build_merit_tensor(kind, n)?;
    let n_runs = options.restarts as usize + 1;
    let mut inits: Vec<FiducialVector> = Vec::with_capacity(n_runs);
    inits.push(match &options.init {
        Some(b) => {
            if b.n() != n {
                return Err(FrameError::InvalidInput(format!(
                    "init fiducial has level {}, expected {n}",
                    b.n()
                )));
            }
            b.clone()
        }
        None => FiducialVector::uniform(n),
    });
    for r in 0..options.restarts {
        let mut state = options.seed ^ (u64::from(r).wrapping_add(1).wrapping_mul(0x9e3779b97f4a7c15));
        let seed = splitmix64(&mut state);
        inits.push(random_fiducial(n, seed));
    }

    let workers = options.workers.max(1).min(n_runs);
    let mut outcomes: Vec<Option<Result<RestartOutcome, FrameError>>> =
        (0..n_runs).map(|_| None).collect();
    if workers == 1 {
        for (slot, init) in outcomes.iter_mut().zip(inits) {
            *slot = Some(run_restart(&tensor, init, options.tol, options.max_iters));
        }
    } else {
        let tensor_ref = &tensor;
        let chunk = n_runs.div_ceil(workers);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            let mut rest = inits;
            let mut start_idx = 0;
            while !rest.is_empty() {
                let take = chunk.min(rest.len());
                let batch: Vec<FiducialVector> = rest.drain(..take).collect();
                let tol = options.tol;
                let max_iters = options.max_iters;
                handles.push((
                    start_idx,
                    scope.spawn(move || {
                        batch
                            .into_iter()
                            .map(|init| run_restart(tensor_ref, init, tol, max_iters))
                            .collect::<Vec<_>>()
                    }),
                ));
                start_idx += take;
            }
            for (base, handle) in handles {
                for (off, res) in handle.join().expect("restart worker panicked").into_iter().enumerate() {
                    outcomes[base + off] = Some(res);
                }
            }
        });
    }

    let mut winner: Option<RestartOutcome> = None;
    let mut fallback: Option<RestartOutcome> = None;
    for slot in outcomes.into_iter() {
        let outcome = slot.expect("restart not executed")?;
        // Accept only runs whose final merit dominates their first iterate.
        let accepted = outcome.converged
            && outcome
                .history
                .first()
                .is_none_or(|first| outcome.merit >= first - 1e-12);
        let target = if accepted { &mut winner } else { &mut fallback };
        let better = target.as_ref().is_none_or(|w| outcome.merit > w.merit);
        if better {
            *target = Some(outcome);
        }
    }
    let (outcome, converged) = match winner {
        Some(w) => (w, true),
        None => (
            fallback.ok_or(FrameError::InvalidInput("no restarts executed".into()))?,
            false,
        ),
    };

    let z_tensor = build_merit_tensor(MeritKind::ZAxis, n)?;
    let xy_tensor = build_merit_tensor(MeritKind::XYAxes, n)?;
    let cos_wz = merit_expectation(&z_tensor, &outcome.alice, &outcome.bob)?;
    let xy_sum = merit_expectation(&xy_tensor, &outcome.alice, &outcome.bob)?;
    let monotone = outcome
        .history
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-12);
    Ok(FrameSolution {
        alice: outcome.alice,
        bob: outcome.bob,
        merit: outcome.merit,
        per_axis: [xy_sum / 2.0, xy_sum / 2.0, cos_wz],
        mse_total: (3.0 - xy_sum - cos_wz) / 2.0,
        iters: outcome.iters,
        converged,
        merit_history: outcome.history,
        monotone,
        restarts_used: options.restarts,
    })
}

// ---------------------------------------------------------------------------
// Weighted direction sets
// ---------------------------------------------------------------------------

/// Reduces a weighted set of directions to three principal axes: the merit
/// `Σ_μ w_μ ⟨cos ω_μ⟩ = Σ_mn ⟨R_mn⟩ C_mn` depends only on
/// `C = Σ_μ w_μ e_μ e_μᵀ`. Returns the eigenvalues of `C` (descending) and
/// the principal-axis frame as a proper rotation.
pub fn weighted_merit_reduction(
    directions: &[[f64; 3]],
    weights: &[f64],
) -> Result<([f64; 3], Rotation3), FrameError> {
    if directions.is_empty() || directions.len() != weights.len() {
        return Err(FrameError::InvalidInput(
            "need equal nonzero numbers of directions and weights".into(),
        ));
    }
    if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
        return Err(FrameError::InvalidInput("weights must be positive".into()));
    }
    let mut c = [[0.0f64; 3]; 3];
    for (e, &w) in directions.iter().zip(weights) {
        let norm = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
        if norm < 1e-14 {
            return Err(FrameError::InvalidInput("zero direction vector".into()));
        }
        let u = [e[0] / norm, e[1] / norm, e[2] / norm];
        for (i, row) in c.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                *cell += w * u[i] * u[k];
            }
        }
    }
    let (vals, vecs) = jacobi_eigen_3x3(c);
    Ok((vals, vecs))
}

/// Cyclic Jacobi eigensolver for a symmetric 3x3 matrix; eigenvalues are
/// returned descending with the matching eigenvector columns forming a
/// proper rotation.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen_3x3(mut a: [[f64; 3]; 3]) -> ([f64; 3], Rotation3) {
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < 1e-15 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let cos = 1.0 / (t * t + 1.0).sqrt();
            let sin = t * cos;
            for row in a.iter_mut() {
                let akp = row[p];
                let akq = row[q];
                row[p] = cos * akp - sin * akq;
                row[q] = sin * akp + cos * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = cos * apk - sin * aqk;
                a[q][k] = sin * apk + cos * aqk;
            }
            for row in &mut v {
                let vp = row[p];
                let vq = row[q];
                row[p] = cos * vp - sin * vq;
                row[q] = sin * vp + cos * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &k| a[k][k].total_cmp(&a[i][i]));
    let vals = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let mut cols = [[0.0f64; 3]; 3];
    for (new_idx, &old_idx) in order.iter().enumerate() {
        for row in 0..3 {
            cols[new_idx][row] = v[row][old_idx];
        }
    }
    // deterministic signs: first two columns largest-entry positive, third
    // completes a right-handed frame
    for col in cols.iter_mut().take(2) {
        let mut biggest = 0usize;
        for i in 1..3 {
            if col[i].abs() > col[biggest].abs() {
                biggest = i;
            }
        }
        if col[biggest] < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
    cols[2] = [
        cols[0][1] * cols[1][2] - cols[0][2] * cols[1][1],
        cols[0][2] * cols[1][0] - cols[0][0] * cols[1][2],
        cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0],
    ];
    let m = [
        [cols[0][0], cols[1][0], cols[2][0]],
        [cols[0][1], cols[1][1], cols[2][1]],
        [cols[0][2], cols[1][2], cols[2][2]],
    ];
    (vals, Rotation3::from_parts_unchecked(m))
}

// ---------------------------------------------------------------------------
// Split-vs-collective comparison
// ---------------------------------------------------------------------------

/// Outcome of comparing the split strategy (half the spins per axis, each
/// half an independent direction transmission) against the collective
/// covariant measurement with the same maximal angular momentum.
#[derive(Clone, Debug)]
pub struct SplitCompare {
    pub split_per_axis_mse: f64,
    pub collective_per_axis_mse: f64,
    /// `4/(3N)`, the reported covariant-measurement error, for context only.
    pub bbm_reference: f64,
}

/// At `N` spins: the split strategy sends `N/2` spins per axis, so its
/// per-axis error is `1 - F` of the direction problem at `N/2`; the
/// collective strategy is the all-axes optimum at `j_max = N/2`
/// (level `n = N/2 + 1`), averaged per axis.
pub fn split_strategy_compare(n_spins: u32) -> Result<SplitCompare, FrameError> {
    if n_spins < 4 || !(n_spins / 2).is_multiple_of(2) {
        return Err(FrameError::InvalidInput(format!(
            "need N >= 4 with N/2 even so each half has an m = 0 optimum, got {n_spins}"
        )));
    }
    let half = n_spins / 2;
    let split = 1.0 - direction::solve_optimal(half, HalfInt::ZERO, 1e-12)?.fidelity;
    let options = OptimizeOptions {
        restarts: 2,
        ..OptimizeOptions::default()
    };
    let solution = alternating_optimize(half + 1, MeritKind::AllAxes, &options)?;
    Ok(SplitCompare {
        split_per_axis_mse: split,
        collective_per_axis_mse: solution.mse_total / 3.0,
        bbm_reference: 4.0 / (3.0 * f64::from(n_spins)),
    })
}
