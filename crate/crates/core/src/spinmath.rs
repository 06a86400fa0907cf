//! Rotation-group kernels in one fixed convention.
//!
//! Conventions used throughout the crate:
//!
//! * Angular-momentum labels are exact half-integers ([`HalfInt`], stored as
//!   twice the value).
//! * Basis ordering inside a spin-`j` block is `m = j, j-1, …, -j`
//!   (descending). Every matrix and amplitude vector in this crate uses this
//!   order.
//! * Euler angles are z-y-z, active. The classical rotation is
//!   `R(α,β,γ) = R_z(α) R_y(β) R_z(γ)`.
//! * The spin-`j` rotation matrix element is
//!   `D^j_{mr}(α,β,γ) = e^{i(mα + rγ)} d^j_{mr}(β)`, with the real small-d
//!   matrix fixed by `d^{1/2}(β) = [[cos β/2, -sin β/2], [sin β/2, cos β/2]]`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

/// Largest factorial argument the Wigner-d prefactor tables support.
const LN_FACTORIAL_MAX: usize = 4096;

#[derive(Debug, Error)]
pub enum SpinMathError {
    #[error("matrix is not a proper rotation: {0}")]
    NotARotation(String),
    #[error("cannot parse {0:?} as a half-integer (expected e.g. \"2\", \"1/2\", \"-3/2\")")]
    ParseHalfInt(String),
}

// ---------------------------------------------------------------------------
// HalfInt
// ---------------------------------------------------------------------------

/// Exact half-integer, stored as twice its value so parity checks are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };

    pub fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    pub fn from_int(v: i32) -> Self {
        HalfInt { twice: 2 * v }
    }

    pub fn twice(self) -> i32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// Valid total-angular-momentum label: `j >= 0`.
    pub fn is_valid_j(self) -> bool {
        self.twice >= 0
    }

    /// Valid `(j, m)` pair: `|m| <= j` and `j - m` a non-negative integer.
    pub fn is_valid_pair(j: HalfInt, m: HalfInt) -> bool {
        j.is_valid_j() && m.twice.abs() <= j.twice && (j.twice - m.twice) % 2 == 0
    }

    /// Dimension `2j + 1` of the spin-`j` block.
    pub fn multiplicity(self) -> usize {
        debug_assert!(self.is_valid_j());
        self.twice as usize + 1
    }

    /// Magnetic labels `j, j-1, …, -j` in the crate's descending order.
    pub fn m_labels(self) -> impl Iterator<Item = HalfInt> {
        let tj = self.twice;
        (0..=tj).map(move |i| HalfInt::from_twice(tj - 2 * i))
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for HalfInt {
    type Err = SpinMathError;

    /// Accepts `"2"`, `"1/2"`, `"-3/2"` and decimal forms `"0.5"`, `"1.0"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let err = || SpinMathError::ParseHalfInt(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            if den.trim() != "2" {
                return Err(err());
            }
            let n: i32 = num.trim().parse().map_err(|_| err())?;
            return Ok(HalfInt::from_twice(n));
        }
        if let Ok(n) = s.parse::<i32>() {
            return Ok(HalfInt::from_int(n));
        }
        let v: f64 = s.parse().map_err(|_| err())?;
        let twice = 2.0 * v;
        if twice.fract() != 0.0 || twice.abs() > i32::MAX as f64 {
            return Err(err());
        }
        Ok(HalfInt::from_twice(twice as i32))
    }
}

// ---------------------------------------------------------------------------
// Euler angles and classical rotations
// ---------------------------------------------------------------------------

/// z-y-z Euler triple for an active rotation, canonicalized to
/// `beta ∈ [0, π]`, `alpha, gamma ∈ [0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

fn wrap_two_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y < 0.0 {
        y += two_pi;
    }
    if y >= two_pi {
        y = 0.0;
    }
    y
}

impl EulerAngles {
    /// Canonicalizes an arbitrary triple onto the same rotation:
    /// `(α, -β, γ)` and `(α+π, β, γ+π)` describe identical z-y-z rotations.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        let pi = std::f64::consts::PI;
        let mut alpha = alpha;
        let mut beta = wrap_two_pi(beta);
        let mut gamma = gamma;
        if beta > pi {
            beta = 2.0 * pi - beta;
            alpha += pi;
            gamma += pi;
        }
        EulerAngles {
            alpha: wrap_two_pi(alpha),
            beta,
            gamma: wrap_two_pi(gamma),
        }
    }
}

/// Proper orthogonal 3x3 matrix (direction cosines).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation3 {
    m: [[f64; 3]; 3],
}

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Validates orthogonality and unit determinant to 1e-12.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self, SpinMathError> {
        let r = Rotation3 { m };
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((dot - target).abs());
            }
        }
        if dev > 1e-12 {
            return Err(SpinMathError::NotARotation(format!(
                "R R^T deviates from identity by {dev:.3e}"
            )));
        }
        let det_dev = (r.det() - 1.0).abs();
        if det_dev > 1e-12 {
            return Err(SpinMathError::NotARotation(format!(
                "determinant deviates from 1 by {det_dev:.3e}"
            )));
        }
        Ok(r)
    }

    pub(crate) fn from_parts_unchecked(m: [[f64; 3]; 3]) -> Self {
        Rotation3 { m }
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for k in 0..3 {
                    *cell += self.m[i][k] * other.m[k][j];
                }
            }
        }
        Rotation3 { m: out }
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }
}

/// Active z-y-z rotation matrix `R_z(α) R_y(β) R_z(γ)`.
pub fn classical_rotation(angles: &EulerAngles) -> Rotation3 {
    let (sa, ca) = angles.alpha.sin_cos();
    let (sb, cb) = angles.beta.sin_cos();
    let (sg, cg) = angles.gamma.sin_cos();
    Rotation3::from_parts_unchecked([
        [
            ca * cb * cg - sa * sg,
            -ca * cb * sg - sa * cg,
            ca * sb,
        ],
        [
            sa * cb * cg + ca * sg,
            -sa * cb * sg + ca * cg,
            sa * sb,
        ],
        [-sb * cg, sb * sg, cb],
    ])
}

/// Net rotation angle `Ω = arccos((trace - 1)/2)`, clamped to `[0, π]`.
pub fn rotation_angle(r: &Rotation3) -> f64 {
    (((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0)).acos()
}

/// z-y-z Euler triple of a rotation matrix (inverse of [`classical_rotation`]).
pub fn euler_angles(r: &Rotation3) -> EulerAngles {
    let m = r.matrix();
    let cb = m[2][2].clamp(-1.0, 1.0);
    let sb = (m[0][2] * m[0][2] + m[1][2] * m[1][2]).sqrt();
    if sb < 1e-14 {
        // Degenerate: only alpha ± gamma is defined; put it all in alpha.
        if cb > 0.0 {
            EulerAngles::new(m[1][0].atan2(m[0][0]), 0.0, 0.0)
        } else {
            EulerAngles::new((-m[1][0]).atan2(-m[0][0]), std::f64::consts::PI, 0.0)
        }
    } else {
        let alpha = m[1][2].atan2(m[0][2]);
        let gamma = m[2][1].atan2(-m[2][0]);
        EulerAngles::new(alpha, cb.acos(), gamma)
    }
}

/// Dimension of the direction-signal Hilbert space for `N` spins, counting
/// each total angular momentum `j = 0 or 1/2, …, N/2` exactly once:
/// `(N+2)²/4` for even `N`, `(N+1)(N+3)/4` for odd `N`.
pub fn hilbert_dim(n_spins: u32) -> u64 {
    let n = u64::from(n_spins);
    if n % 2 == 0 {
        (n + 2) * (n + 2) / 4
    } else {
        (n + 1) * (n + 3) / 4
    }
}

// ---------------------------------------------------------------------------
// Jacobi polynomials and Wigner matrices
// ---------------------------------------------------------------------------

/// Jacobi polynomial `P_n^{(a,b)}(x)` by the standard three-term recurrence.
pub fn jacobi_poly(n: u32, a: u32, b: u32, x: f64) -> f64 {
    let (af, bf) = (f64::from(a), f64::from(b));
    if n == 0 {
        return 1.0;
    }
    let mut p_prev = 1.0;
    let mut p = (af + 1.0) + (af + bf + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let kf = f64::from(k);
        let c1 = 2.0 * kf * (kf + af + bf) * (2.0 * kf + af + bf - 2.0);
        let c2 = (2.0 * kf + af + bf - 1.0)
            * ((2.0 * kf + af + bf) * (2.0 * kf + af + bf - 2.0) * x + af * af - bf * bf);
        let c3 = 2.0 * (kf + af - 1.0) * (kf + bf - 1.0) * (2.0 * kf + af + bf);
        let p_next = (c2 * p - c3 * p_prev) / c1;
        p_prev = p;
        p = p_next;
    }
    p
}

fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_MAX + 1);
        t.push(0.0);
        let mut acc = 0.0;
        for i in 1..=LN_FACTORIAL_MAX {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    table[n]
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Single element `d^j_{mr}(β)` of the Wigner small-d matrix, evaluated
/// through Jacobi polynomials, which is stable for all strip positions:
///
/// `d^j_{mr} = (-1)^λ sqrt(C(2j-κ, κ+a) / C(κ+b, b)) sin^a(β/2) cos^b(β/2)
///  P_κ^{(a,b)}(cos β)`
///
/// with `κ = min(j±m, j±r)` selecting the corner of the matrix. The diagonal
/// reduces to `cos^{2m}(β/2) P^{(0,2m)}_{j-m}(cos β)`.
pub fn wigner_small_d_element(j: HalfInt, m: HalfInt, r: HalfInt, beta: f64) -> f64 {
    assert!(
        HalfInt::is_valid_pair(j, m) && HalfInt::is_valid_pair(j, r),
        "invalid (j, m) or (j, r) pair: j={j}, m={m}, r={r}"
    );
    let tj = j.twice();
    let (tm, tr) = (m.twice(), r.twice());
    let jpr = ((tj + tr) / 2) as i64;
    let jmr = ((tj - tr) / 2) as i64;
    let jpm = ((tj + tm) / 2) as i64;
    let jmm = ((tj - tm) / 2) as i64;
    let kappa = jpr.min(jmr).min(jpm).min(jmm);
    let (a, lambda) = if kappa == jpr {
        ((tm - tr) / 2, (tm - tr) / 2)
    } else if kappa == jmr || kappa == jpm {
        ((tr - tm) / 2, 0)
    } else {
        ((tm - tr) / 2, (tm - tr) / 2)
    };
    let a = i64::from(a);
    let b = i64::from(tj) - 2 * kappa - a;
    debug_assert!(a >= 0 && b >= 0 && kappa >= 0);
    let sign = if lambda % 2 == 0 { 1.0 } else { -1.0 };
    let ln_pref = 0.5
        * (ln_binomial((tj as i64 - kappa) as usize, (kappa + a) as usize)
            - ln_binomial((kappa + b) as usize, b as usize));
    let half = beta / 2.0;
    sign * ln_pref.exp()
        * half.sin().powi(a as i32)
        * half.cos().powi(b as i32)
        * jacobi_poly(kappa as u32, a as u32, b as u32, beta.cos())
}

/// Full `(2j+1) x (2j+1)` small-d matrix; rows and columns ordered
/// `m = j, j-1, …, -j`. The matrix is real orthogonal.
pub fn wigner_small_d(j: HalfInt, beta: f64) -> Array2<f64> {
    assert!(j.is_valid_j(), "j must be non-negative, got {j}");
    let dim = j.multiplicity();
    let mut out = Array2::zeros((dim, dim));
    for (im, m) in j.m_labels().enumerate() {
        for (ir, r) in j.m_labels().enumerate() {
            out[(im, ir)] = wigner_small_d_element(j, m, r, beta);
        }
    }
    out
}

/// Rotation-matrix element `D^j_{mr}(α,β,γ) = e^{i(mα + rγ)} d^j_{mr}(β)`.
pub fn wigner_d_element(j: HalfInt, m: HalfInt, r: HalfInt, angles: &EulerAngles) -> Complex64 {
    let phase = Complex64::new(0.0, m.value() * angles.alpha + r.value() * angles.gamma).exp();
    phase * wigner_small_d_element(j, m, r, angles.beta)
}

// ---------------------------------------------------------------------------
// Coherent angular-momentum states
// ---------------------------------------------------------------------------

/// Eigenstate of `n·J` with eigenvalue `m`, where `n = (θ, φ)`.
#[derive(Clone, Debug)]
pub struct CoherentState {
    pub j: HalfInt,
    pub m: HalfInt,
    pub theta: f64,
    pub phi: f64,
    /// Amplitudes in the standard `J_z` basis, ordered `m' = j, …, -j`.
    pub amplitudes: Vec<Complex64>,
}

/// Builds `|j, m(θ, φ)⟩` by rotating `|j, m⟩` so that the quantization axis
/// points along `(θ, φ)`; the residual phase freedom (third Euler angle) is
/// fixed to zero. Amplitudes are `e^{-i m' φ} d^j_{m'm}(θ)`.
pub fn coherent_state(j: HalfInt, m: HalfInt, theta: f64, phi: f64) -> CoherentState {
    assert!(
        HalfInt::is_valid_pair(j, m),
        "invalid (j, m) pair: j={j}, m={m}"
    );
    let amplitudes = j
        .m_labels()
        .map(|mp| {
            Complex64::new(0.0, -mp.value() * phi).exp() * wigner_small_d_element(j, mp, m, theta)
        })
        .collect();
    CoherentState {
        j,
        m,
        theta,
        phi,
        amplitudes,
    }
}
