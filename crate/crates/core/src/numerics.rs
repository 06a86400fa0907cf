//! Self-contained numerical kernels: extreme eigenpairs of symmetric
//! tridiagonal and dense Hermitian matrices, Gauss-Legendre quadrature, and a
//! derivative-free maximizer used for cross-validation at small dimension.
//!
//! Only the top eigenpair is ever needed, so the solvers are specialized:
//! bisection on the Sturm sequence plus inverse iteration for tridiagonals,
//! and shifted power iteration with a restart safeguard for dense Hermitian
//! matrices.

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal top eigenpair
// ---------------------------------------------------------------------------

/// Real symmetric tridiagonal matrix stored as its diagonal and off-diagonal.
#[derive(Clone, Debug)]
pub struct SymTridiag {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self, NumericsError> {
        if diag.is_empty() {
            return Err(NumericsError::InvalidInput("empty diagonal".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(NumericsError::InvalidInput(format!(
                "off-diagonal length {} does not match dimension {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if !diag.iter().chain(offdiag.iter()).all(|v| v.is_finite()) {
            return Err(NumericsError::InvalidInput("non-finite entry".into()));
        }
        Ok(SymTridiag { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let d = self.dim();
        let mut out = Array2::zeros((d, d));
        for i in 0..d {
            out[(i, i)] = self.diag[i];
            if i + 1 < d {
                out[(i, i + 1)] = self.offdiag[i];
                out[(i + 1, i)] = self.offdiag[i];
            }
        }
        out
    }

    fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < d {
                acc += self.offdiag[i] * v[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via the shifted
    /// LDLᵀ pivots).
    fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            if q.abs() < tiny {
                q = -tiny;
            }
            q = self.diag[i] - x - self.offdiag[i - 1] * self.offdiag[i - 1] / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solves `(T - shift) x = rhs` in place by Gaussian elimination with
    /// partial pivoting (the factor gains one extra superdiagonal).
    fn solve_shifted(&self, shift: f64, rhs: &mut [f64]) {
        let d = self.dim();
        let mut main: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let mut upper1 = self.offdiag.clone();
        let mut upper2 = vec![0.0; d.saturating_sub(2)];
        let mut lower = self.offdiag.clone();
        let tiny = f64::EPSILON * f64::MIN_POSITIVE.sqrt();
        for i in 0..d - 1 {
            if lower[i].abs() > main[i].abs() {
                rhs.swap(i, i + 1);
                std::mem::swap(&mut main[i], &mut lower[i]);
                std::mem::swap(&mut upper1[i], &mut main[i + 1]);
                if i + 2 < d {
                    upper2[i] = upper1[i + 1];
                    upper1[i + 1] = 0.0;
                }
            }
            let pivot = if main[i].abs() < tiny {
                tiny.copysign(if main[i] == 0.0 { 1.0 } else { main[i] })
            } else {
                main[i]
            };
            let l = lower[i] / pivot;
            main[i + 1] -= l * upper1[i];
            if i + 2 < d {
                upper1[i + 1] -= l * upper2[i];
            }
            rhs[i + 1] -= l * rhs[i];
            main[i] = pivot;
        }
        if main[d - 1].abs() < tiny {
            main[d - 1] = tiny.copysign(if main[d - 1] == 0.0 { 1.0 } else { main[d - 1] });
        }
        rhs[d - 1] /= main[d - 1];
        if d >= 2 {
            rhs[d - 2] = (rhs[d - 2] - upper1[d - 2] * rhs[d - 1]) / main[d - 2];
        }
        for i in (0..d.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - upper1[i] * rhs[i + 1] - upper2[i] * rhs[i + 2]) / main[i];
        }
    }
}

/// Normalizes in place, scaling by the largest component first so inverse-
/// iteration vectors near 1e170 cannot overflow the sum of squares. Returns
/// 0 when the vector is zero or non-finite.
fn normalize(v: &mut [f64]) -> f64 {
    let maxabs = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if maxabs == 0.0 || !maxabs.is_finite() {
        return 0.0;
    }
    for x in v.iter_mut() {
        *x /= maxabs;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    norm * maxabs
}

/// Flips the sign so the largest-magnitude entry is positive.
fn canonicalize_sign(v: &mut [f64]) {
    let mut idx = 0;
    let mut best = 0.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Largest eigenvalue and its unit eigenvector of a symmetric tridiagonal
/// matrix. Bisection on the Sturm sequence brackets the top eigenvalue to
/// machine precision; inverse iteration recovers the eigenvector. The
/// eigenvector sign is fixed so its largest-magnitude entry is positive.
pub fn symtridiag_top_eig(
    t: &SymTridiag,
    tol: f64,
) -> Result<(f64, Vec<f64>), NumericsError> {
    if tol <= 0.0 {
        return Err(NumericsError::InvalidInput("tol must be positive".into()));
    }
    let d = t.dim();
    if d == 1 {
        return Ok((t.diag[0], vec![1.0]));
    }

    // Gershgorin bracket for the whole spectrum.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d {
        let mut radius = 0.0;
        if i > 0 {
            radius += t.offdiag[i - 1].abs();
        }
        if i + 1 < d {
            radius += t.offdiag[i].abs();
        }
        lo = lo.min(t.diag[i] - radius);
        hi = hi.max(t.diag[i] + radius);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);

    // Bisect until the bracket around the largest eigenvalue is at rounding
    // level: count < d on the left of the bracket, == d on the right.
    let mut a = lo - scale * 1e-12;
    let mut b = hi + scale * 1e-12;
    for _ in 0..128 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if t.sturm_count(mid) >= d {
            b = mid;
        } else {
            a = mid;
        }
    }
    let lambda = 0.5 * (a + b);

    // Inverse iteration with the converged shift.
    let mut v = vec![0.0; d];
    for (i, x) in v.iter_mut().enumerate() {
        *x = 1.0 + 0.5 * ((i % 3) as f64 - 1.0); // deterministic, not axis-aligned
    }
    normalize(&mut v);
    let mut residual = f64::INFINITY;
    let mut tv = vec![0.0; d];
    const MAX_ITERS: usize = 64;
    for _ in 0..MAX_ITERS {
        t.solve_shifted(lambda, &mut v);
        if normalize(&mut v) == 0.0 {
            return Err(NumericsError::NonConvergence {
                what: "tridiagonal inverse iteration",
                iterations: MAX_ITERS,
            });
        }
        t.matvec(&v, &mut tv);
        residual = tv
            .iter()
            .zip(&v)
            .map(|(av, vv)| (av - lambda * vv).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(NumericsError::NonConvergence {
            what: "tridiagonal inverse iteration",
            iterations: MAX_ITERS,
        });
    }
    canonicalize_sign(&mut v);
    // Rayleigh quotient sharpens the eigenvalue beyond the bisection bracket.
    t.matvec(&v, &mut tv);
    let rayleigh = tv.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    Ok((rayleigh, v))
}

// ---------------------------------------------------------------------------
// Dense Hermitian top eigenpair
// ---------------------------------------------------------------------------

/// Dense Hermitian matrix, validated to 1e-12 against its conjugate
/// transpose on construction.
#[derive(Clone, Debug)]
pub struct HermitianMatrix {
    data: Array2<Complex64>,
}

impl HermitianMatrix {
    pub fn new(data: Array2<Complex64>) -> Result<Self, NumericsError> {
        let (rows, cols) = data.dim();
        if rows != cols {
            return Err(NumericsError::InvalidInput(format!(
                "matrix is {rows}x{cols}, not square"
            )));
        }
        let mut dev: f64 = 0.0;
        for i in 0..rows {
            for k in i..cols {
                dev = dev.max((data[(i, k)] - data[(k, i)].conj()).norm());
            }
        }
        if dev > 1e-12 {
            return Err(NumericsError::InvalidInput(format!(
                "matrix deviates from Hermitian by {dev:.3e}"
            )));
        }
        Ok(HermitianMatrix { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.data
    }

    fn matvec(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (slot, row) in out.iter_mut().zip(self.data.rows()) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, x) in row.iter().zip(v) {
                acc += m * x;
            }
            *slot = acc;
        }
    }
}

fn cnormalize(v: &mut [Complex64]) -> f64 {
    let maxabs = v.iter().fold(0.0f64, |acc, x| acc.max(x.re.abs().max(x.im.abs())));
    if maxabs == 0.0 || !maxabs.is_finite() {
        return 0.0;
    }
    for x in v.iter_mut() {
        *x /= maxabs;
    }
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    norm * maxabs
}

/// Fixes the global phase so the largest-magnitude entry is real positive.
fn canonicalize_phase(v: &mut [Complex64]) {
    let mut idx = 0;
    let mut best = 0.0;
    for (i, x) in v.iter().enumerate() {
        if x.norm_sqr() > best {
            best = x.norm_sqr();
            idx = i;
        }
    }
    let mag = v[idx].norm();
    if mag > 0.0 {
        let phase = v[idx].conj() / mag;
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Largest eigenvalue and eigenvector of a Hermitian matrix by power
/// iteration on `M + σ1` (σ from the Gershgorin lower bound, so the shifted
/// matrix is positive semidefinite and the dominant eigenvalue is the
/// largest one). A second deterministic restart guards against a start
/// vector orthogonal to the top eigenspace. The eigenvector phase is fixed
/// so its largest-magnitude entry is real positive.
pub fn hermitian_top_eig(
    m: &HermitianMatrix,
    tol: f64,
) -> Result<(f64, Vec<Complex64>), NumericsError> {
    if tol <= 0.0 {
        return Err(NumericsError::InvalidInput("tol must be positive".into()));
    }
    let d = m.dim();
    if d == 1 {
        return Ok((m.data[(0, 0)].re, vec![Complex64::new(1.0, 0.0)]));
    }

    let mut lo = f64::INFINITY;
    for i in 0..d {
        let mut radius = 0.0;
        for k in 0..d {
            if k != i {
                radius += m.data[(i, k)].norm();
            }
        }
        lo = lo.min(m.data[(i, i)].re - radius);
    }
    let shift = if lo < 0.0 { -lo } else { 0.0 };

    const MAX_ITERS: usize = 200_000;
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for restart in 0..2u64 {
        let mut rng = 0x5eed_0000u64 ^ (restart.wrapping_mul(0x9e3779b97f4a7c15));
        let mut v: Vec<Complex64> = (0..d)
            .map(|_| {
                let re = (splitmix64(&mut rng) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                let im = (splitmix64(&mut rng) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                Complex64::new(re, im)
            })
            .collect();
        cnormalize(&mut v);
        let mut mv = vec![Complex64::new(0.0, 0.0); d];
        let mut converged = false;
        let mut lambda = 0.0;
        for _ in 0..MAX_ITERS {
            m.matvec(&v, &mut mv);
            lambda = mv
                .iter()
                .zip(&v)
                .map(|(a, b)| (b.conj() * a).re)
                .sum::<f64>();
            let residual = mv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * lambda).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if residual <= tol {
                converged = true;
                break;
            }
            for (x, y) in mv.iter_mut().zip(&v) {
                *x += y * shift;
            }
            v.copy_from_slice(&mv);
            if cnormalize(&mut v) == 0.0 {
                break;
            }
        }
        if converged {
            match &best {
                Some((l, _)) if *l >= lambda => {}
                _ => best = Some((lambda, v)),
            }
        }
    }

    match best {
        Some((lambda, mut v)) => {
            canonicalize_phase(&mut v);
            Ok((lambda, v))
        }
        None => Err(NumericsError::NonConvergence {
            what: "Hermitian power iteration",
            iterations: MAX_ITERS,
        }),
    }
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

/// Nodes and weights on `[-1, 1]`, exact for polynomials up to degree
/// `2·order - 1`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integral of `f` over `[-1, 1]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Legendre `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule of the given order via Newton iteration on the
/// Legendre roots from Chebyshev initial guesses.
pub fn gauss_legendre(order: usize) -> QuadratureRule {
    assert!(order >= 1, "order must be at least 1");
    if order == 1 {
        return QuadratureRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        };
    }
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(order, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(order, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Chebyshev guesses enumerate roots in descending order.
        nodes[order - 1 - i] = x;
        weights[order - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if order % 2 == 1 {
        let mid = order / 2;
        let (_, dp) = legendre_with_derivative(order, 0.0);
        nodes[mid] = 0.0;
        weights[mid] = 2.0 / (dp * dp);
    }
    QuadratureRule { nodes, weights }
}

// ---------------------------------------------------------------------------
// Derivative-free maximization (Powell's method)
// ---------------------------------------------------------------------------

/// Golden-section minimization of `f` along a bracketed interval.
fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut guard = 0;
    while (b - a).abs() > xtol && guard < 200 {
        guard += 1;
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Brackets a minimum of `f` along t >= 0 starting from t = 0 by geometric
/// expansion, then returns the golden-section minimizer over the bracket.
fn line_minimize<F: FnMut(f64) -> f64>(mut f: F, f0: f64, xtol: f64) -> (f64, f64) {
    let mut step = 1.0;
    let mut t_prev = 0.0;
    let mut t = step;
    let mut ft = f(t);
    if ft > f0 {
        // try the other direction
        step = -1.0;
        t = step;
        ft = f(t);
        if ft > f0 {
            // minimum is between -1 and 1
            let (tm, fm) = golden_section(&mut f, -1.0, 1.0, xtol);
            return if fm < f0 { (tm, fm) } else { (0.0, f0) };
        }
    }
    // expand until the function turns upward
    for _ in 0..60 {
        let t_next = t + step * 1.618_033_988_749_895;
        step *= 1.618_033_988_749_895;
        let f_next = f(t_next);
        if f_next > ft {
            let (lo, hi) = if t_prev < t_next {
                (t_prev, t_next)
            } else {
                (t_next, t_prev)
            };
            let (tm, fm) = golden_section(&mut f, lo, hi, xtol);
            return if fm < ft { (tm, fm) } else { (t, ft) };
        }
        t_prev = t;
        t = t_next;
        ft = f_next;
    }
    (t, ft)
}

/// Powell's derivative-free method, maximizing `objective` from `start`.
/// Cycles line searches over an evolving direction set; the direction of
/// largest gain is replaced by the net cycle displacement. Returns the
/// argmax and the value. Only used for validation at small dimension.
pub fn derivative_free_maximize<F: Fn(&[f64]) -> f64>(
    objective: F,
    start: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, f64), NumericsError> {
    if start.is_empty() {
        return Err(NumericsError::InvalidInput("empty start point".into()));
    }
    let dim = start.len();
    let f = |x: &[f64]| -objective(x);
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut directions: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    let xtol = (tol * 1e-2).max(1e-14);
    const MAX_CYCLES: usize = 600;
    for _ in 0..MAX_CYCLES {
        let x_cycle_start = x.clone();
        let f_cycle_start = fx;
        let mut biggest_drop = 0.0;
        let mut biggest_idx = 0;
        for (i, dir) in directions.iter().enumerate() {
            let f_before = fx;
            let line = |t: f64| {
                let probe: Vec<f64> =
                    x.iter().zip(dir).map(|(xi, di)| xi + t * di).collect();
                f(&probe)
            };
            let (t_best, f_best) = line_minimize(line, fx, xtol);
            if f_best < fx {
                for (xi, di) in x.iter_mut().zip(dir) {
                    *xi += t_best * di;
                }
                fx = f_best;
            }
            if f_before - fx > biggest_drop {
                biggest_drop = f_before - fx;
                biggest_idx = i;
            }
        }
        let gain = f_cycle_start - fx;
        if gain <= tol {
            return Ok((x, -fx));
        }
        // Powell direction update: replace the direction of the largest gain
        // with the normalized net displacement, if the displacement is useful.
        let net: Vec<f64> = x
            .iter()
            .zip(&x_cycle_start)
            .map(|(a, b)| a - b)
            .collect();
        let net_norm = net.iter().map(|v| v * v).sum::<f64>().sqrt();
        if net_norm > 1e-300 {
            let extrapolated: Vec<f64> = x.iter().zip(&net).map(|(a, b)| a + b).collect();
            let f_ext = f(&extrapolated);
            if f_ext < f_cycle_start {
                let d1 = f_cycle_start - fx - biggest_drop;
                let d2 = f_cycle_start - f_ext;
                let crit = 2.0 * (f_cycle_start - 2.0 * fx + f_ext) * d1 * d1
                    - biggest_drop * d2 * d2;
                if crit < 0.0 {
                    directions[biggest_idx] = net.iter().map(|v| v / net_norm).collect();
                }
            }
        }
    }
    Err(NumericsError::NonConvergence {
        what: "Powell maximization",
        iterations: MAX_CYCLES,
    })
}
