//! Low-level numeric helpers: compensated phase accumulation, unit complex
//! exponentials, spectral norms, and Hermitian eigenproblems via the real
//! symmetric embedding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Accumulates a sum of products a_i * b_i with error-free transformations
/// (FMA two-product + Neumaier summation), so the final value carries a
/// compensation term. Needed because cocycle phases are only meaningful mod 1
/// and naive accumulation of k^T M m loses absolute accuracy for large k.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseAccumulator {
    hi: f64,
    lo: f64,
}

impl PhaseAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a*b exactly (product error captured via FMA).
    pub fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let err = f64::mul_add(a, b, -p);
        self.add(p);
        self.lo += err;
    }

    /// Neumaier-compensated add.
    pub fn add(&mut self, x: f64) {
        let s = self.hi + x;
        if self.hi.abs() >= x.abs() {
            self.lo += (self.hi - s) + x;
        } else {
            self.lo += (x - s) + self.hi;
        }
        self.hi = s;
    }

    /// Total as an ordinary f64.
    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    /// Total reduced mod 1 into [0, 1); the reduction happens on the exact
    /// hi/lo pair so the result keeps full precision even when the raw sum
    /// is of order 1e4.
    pub fn rem_one(&self) -> f64 {
        let r = self.hi.fract() + self.lo;
        r.rem_euclid(1.0)
    }
}

/// e^{2 pi i turns}, with the argument interpreted in full turns.
pub fn unit_phase(turns: f64) -> Complex64 {
    let t = turns.rem_euclid(1.0);
    let (s, c) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Compensated bilinear form x^T M y, reduced mod 1 (turns).
pub fn bilinear_turns(x: &[f64], m: &DMatrix<f64>, y: &[f64]) -> f64 {
    debug_assert_eq!(m.nrows(), x.len());
    debug_assert_eq!(m.ncols(), y.len());
    let mut acc = PhaseAccumulator::new();
    for i in 0..x.len() {
        if x[i] == 0.0 {
            continue;
        }
        for j in 0..y.len() {
            if y[j] == 0.0 {
                continue;
            }
            let p = m[(i, j)] * y[j];
            let e = f64::mul_add(m[(i, j)], y[j], -p);
            acc.add_product(x[i], p);
            acc.add_product(x[i], e);
        }
    }
    acc.rem_one()
}

/// Operator 2-norm (largest singular value) of a real matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values[0]
}

/// Max |entry| deviation from skew-symmetry.
pub fn skew_defect(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] + m[(j, i)]).abs());
        }
    }
    worst
}

/// Strictly lower-triangular part.
pub fn strict_lower(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..i.min(m.ncols()) {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

/// Embeds a complex Hermitian matrix H = A + iB as the real symmetric
/// [[A, -B], [B, A]]; eigenvalues of H appear twice, and f(H) acting on a
/// complex vector can be read off from the embedded action.
fn real_embedding(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    r
}

/// Eigenvalues of a complex Hermitian matrix (ascending), via the real
/// symmetric embedding (each eigenvalue of H shows up twice there).
pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let n = h.nrows();
    if n == 0 {
        return Vec::new();
    }
    let r = real_embedding(h);
    let mut evs: Vec<f64> = r.symmetric_eigen().eigenvalues.iter().copied().collect();
    evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // keep every other one: the embedding doubles each eigenvalue
    evs.into_iter().step_by(2).collect()
}

/// Applies the spectral function `f` of a complex Hermitian matrix to a
/// complex vector: returns f(H) v.
pub fn hermitian_matfunc_apply(
    h: &DMatrix<Complex64>,
    v: &DVector<Complex64>,
    f: impl Fn(f64) -> f64,
) -> DVector<Complex64> {
    let n = h.nrows();
    assert_eq!(v.len(), n);
    let r = real_embedding(h);
    let eig = r.symmetric_eigen();
    let mut x = DVector::zeros(2 * n);
    for i in 0..n {
        x[i] = v[i].re;
        x[i + n] = v[i].im;
    }
    let coeffs = eig.eigenvectors.transpose() * x;
    let mut y = DVector::zeros(2 * n);
    for (j, &c) in coeffs.iter().enumerate() {
        let fc = f(eig.eigenvalues[j]) * c;
        y += eig.eigenvectors.column(j) * fc;
    }
    DVector::from_fn(n, |i, _| Complex64::new(y[i], y[i + n]))
}
