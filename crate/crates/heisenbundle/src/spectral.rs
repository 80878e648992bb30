//! Operator-norm and spectrum estimation for twisted algebra elements via
//! compressions of the regular representation, plus Neumann-series inversion
//! and the Newton iteration for inverse square roots.
//!
//! The norm model: the C*-norm of an element is the operator norm of its
//! integrated representation on L2(R^d); we compute the twisted
//! regular-representation norm on l2(Z^n) instead. The two coincide because
//! Z^n is amenable, which makes the regular representation faithful and
//! isometric. This identification is the load-bearing numerical decision of
//! the whole crate.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{box_indices, rep_matrix, tconv, tstar, AlgElem, Coeffs, SeqNorm};
use crate::error::{Error, Result};
use crate::numeric::{hermitian_matfunc_apply, unit_phase, PhaseAccumulator};

pub const DEFAULT_MAX_BOX: i64 = 64;

/// A converged lower estimate of an operator norm together with the scaled
/// l1 upper bound it can never exceed.
#[derive(Debug, Clone)]
pub struct NormEstimate {
    pub value: f64,
    pub lower_certified: bool,
    pub upper_bound: f64,
    pub box_radius: i64,
    pub tol: f64,
    /// Whether the box-doubling protocol reached its stopping rule.
    pub converged: bool,
    /// Per-box lower estimates (cumulative max, hence nondecreasing).
    pub history: Vec<(i64, f64)>,
}

impl NormEstimate {
    /// Enclosure used by inequality checks: the true norm lies in
    /// [value, min(upper_bound, value + tol)], where the tol allowance is
    /// the heuristic convergence budget of the stopping rule.
    pub fn enclosure(&self) -> (f64, f64) {
        (self.value, self.upper_bound.min(self.value + self.tol))
    }
}

/// Flat indexing of the box [-n_box, n_box]^n, lexicographic.
struct BoxMap {
    n: usize,
    n_box: i64,
    side: i64,
    dim: usize,
}

impl BoxMap {
    fn new(n: usize, n_box: i64) -> Self {
        let side = 2 * n_box + 1;
        let dim = (side as usize).pow(n as u32);
        BoxMap { n, n_box, side, dim }
    }

    /// Position of an in-box index vector, or None.
    fn pos(&self, k: &[i64]) -> Option<usize> {
        let mut p: i64 = 0;
        for &ki in k {
            if ki.abs() > self.n_box {
                return None;
            }
            p = p * self.side + (ki + self.n_box);
        }
        Some(p as usize)
    }

    fn decode(&self, mut p: usize, out: &mut [i64]) {
        for i in (0..self.n).rev() {
            out[i] = (p as i64 % self.side) - self.n_box;
            p /= self.side as usize;
        }
    }
}

/// Banded application of the truncated regular representation: never
/// materializes dense matrices, per the truncation protocol.
struct RepOperator<'a> {
    elem: &'a AlgElem,
    map: BoxMap,
    /// Per support point: (offset k, coefficient haar*a(k), row of k^T M).
    bands: Vec<(Vec<i64>, Complex64, Vec<f64>)>,
}

impl<'a> RepOperator<'a> {
    fn new(elem: &'a AlgElem, n_box: i64) -> Self {
        let n = elem.n();
        let map = BoxMap::new(n, n_box);
        let m = &elem.alg.cocycle.m;
        let bands = elem
            .coeffs
            .iter()
            .map(|(k, v)| {
                let mut row = vec![0.0; n];
                for (j, r) in row.iter_mut().enumerate() {
                    let mut acc = PhaseAccumulator::new();
                    for (i, &ki) in k.iter().enumerate() {
                        acc.add_product(ki as f64, m[(i, j)]);
                    }
                    *r = acc.value();
                }
                (k.clone(), v * elem.alg.haar_scale, row)
            })
            .collect();
        RepOperator { elem, map, bands }
    }

    fn dim(&self) -> usize {
        self.map.dim
    }

    /// out = A v, with A(row n, col m) = haar a(n-m) zeta(n-m, m).
    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        let mut idx = vec![0i64; self.map.n];
        let mut target = vec![0i64; self.map.n];
        for (p, &vp) in v.iter().enumerate() {
            if vp == Complex64::new(0.0, 0.0) {
                continue;
            }
            self.map.decode(p, &mut idx);
            for (k, coeff, mrow) in &self.bands {
                for i in 0..self.map.n {
                    target[i] = idx[i] + k[i];
                }
                if let Some(q) = self.map.pos(&target) {
                    let mut acc = PhaseAccumulator::new();
                    for i in 0..self.map.n {
                        acc.add_product(mrow[i], idx[i] as f64);
                    }
                    out[q] += coeff * unit_phase(acc.rem_one()) * vp;
                }
            }
        }
    }

    /// out = A^H v.
    fn apply_adjoint(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        let mut idx = vec![0i64; self.map.n];
        let mut target = vec![0i64; self.map.n];
        for p in 0..v.len() {
            self.map.decode(p, &mut idx);
            let mut acc_out = Complex64::new(0.0, 0.0);
            for (k, coeff, mrow) in &self.bands {
                for i in 0..self.map.n {
                    target[i] = idx[i] + k[i];
                }
                if let Some(q) = self.map.pos(&target) {
                    if v[q] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut acc = PhaseAccumulator::new();
                    for i in 0..self.map.n {
                        acc.add_product(mrow[i], idx[i] as f64);
                    }
                    acc_out += (coeff * unit_phase(acc.rem_one())).conj() * v[q];
                }
            }
            out[p] = acc_out;
        }
    }

    fn hermitian_defect(&self) -> f64 {
        self_adjoint_defect_scaled(self.elem)
    }
}

fn self_adjoint_defect_scaled(a: &AlgElem) -> f64 {
    tstar(a)
        .sub(a)
        .map(|d| d.seq_norm(SeqNorm::L1))
        .unwrap_or(f64::INFINITY)
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn random_unit(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = norm2(&v);
    for z in &mut v {
        *z /= n;
    }
    v
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Extreme Ritz values of a Hermitian operator given by `apply`, via Lanczos
/// with full reorthogonalization. Ritz values are Rayleigh quotients over the
/// Krylov subspace, so the top one is a certified lower bound on lambda_max
/// and the bottom one a certified upper bound on lambda_min. Plain power
/// iteration stalls on the clustered spectra typical of these operators
/// (Harper-type bands), which is why the Krylov version is used.
fn lanczos_extreme(
    dim: usize,
    apply: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    start: Vec<Complex64>,
    rel_tol: f64,
    max_k: usize,
) -> (f64, f64, Vec<Complex64>) {
    let mut q = start;
    let n0 = norm2(&q);
    if n0 == 0.0 {
        return (0.0, 0.0, q);
    }
    for z in &mut q {
        *z /= n0;
    }
    let mut basis: Vec<Vec<Complex64>> = vec![q.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut prev_hi = f64::NEG_INFINITY;
    let mut prev_lo = f64::INFINITY;
    let mut hi = 0.0;
    let mut lo = 0.0;
    let max_k = max_k.min(dim);
    for k in 0..max_k {
        apply(&basis[k], &mut w);
        let alpha = dot(&basis[k], &w).re;
        alphas.push(alpha);
        // two passes of full reorthogonalization
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wz, bz) in w.iter_mut().zip(b.iter()) {
                    *wz -= c * bz;
                }
            }
        }
        let beta = norm2(&w);
        let (cur_lo, cur_hi) = tridiag_extremes(&alphas, &betas);
        hi = cur_hi;
        lo = cur_lo;
        let scale = hi.abs().max(lo.abs()).max(1.0);
        if k >= 8
            && (hi - prev_hi).abs() <= rel_tol * scale
            && (lo - prev_lo).abs() <= rel_tol * scale
        {
            break;
        }
        prev_hi = hi;
        prev_lo = lo;
        if beta < 1e-13 * scale {
            break; // invariant subspace found
        }
        betas.push(beta);
        let next: Vec<Complex64> = w.iter().map(|z| z / beta).collect();
        basis.push(next);
    }
    // top Ritz vector for warm starting the next box
    let ritz = top_ritz_vector(&alphas, &betas, &basis, dim);
    (lo, hi, ritz)
}

/// Smallest and largest eigenvalue of the symmetric tridiagonal (alphas, betas).
fn tridiag_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    let mut t = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let evs = t.symmetric_eigen().eigenvalues;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &e in evs.iter() {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    (lo, hi)
}

fn top_ritz_vector(
    alphas: &[f64],
    betas: &[f64],
    basis: &[Vec<Complex64>],
    dim: usize,
) -> Vec<Complex64> {
    let k = alphas.len();
    if k == 0 {
        return vec![Complex64::new(0.0, 0.0); dim];
    }
    let mut t = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut top = 0;
    for j in 1..k {
        if eig.eigenvalues[j] > eig.eigenvalues[top] {
            top = j;
        }
    }
    let y = eig.eigenvectors.column(top);
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (j, b) in basis.iter().take(k).enumerate() {
        let c = y[j];
        for (oz, bz) in out.iter_mut().zip(b.iter()) {
            *oz += Complex64::new(c, 0.0) * bz;
        }
    }
    out
}

/// Largest singular value of the box-N compression: Lanczos on A^H A with
/// seeded restarts; returns the estimate and the top Ritz vector.
fn sigma_max_box(
    elem: &AlgElem,
    n_box: i64,
    inner_tol: f64,
    warm: Option<&[Complex64]>,
) -> (f64, Vec<Complex64>) {
    let op = RepOperator::new(elem, n_box);
    let dim = op.dim();
    let mut tmp = vec![Complex64::new(0.0, 0.0); dim];
    let mut apply = |v: &[Complex64], out: &mut [Complex64]| {
        op.apply(v, &mut tmp);
        op.apply_adjoint(&tmp, out);
    };
    let starts: Vec<Vec<Complex64>> = match warm {
        Some(w) => vec![w.to_vec(), random_unit(dim, 0x4845)],
        None => (0..3).map(|r| random_unit(dim, 0x4845 + r as u64)).collect(),
    };
    let mut best = 0.0f64;
    let mut best_vec = vec![Complex64::new(0.0, 0.0); dim];
    for v in starts {
        let mut v = v;
        v.resize(dim, Complex64::new(0.0, 0.0));
        let (_, hi, ritz) = lanczos_extreme(dim, &mut apply, v, inner_tol, 140);
        if hi > best {
            best = hi;
            best_vec = ritz;
        }
    }
    (best.max(0.0).sqrt(), best_vec)
}

/// Embeds a vector on box N1 into box N2 >= N1 (zero padding).
fn embed(v: &[Complex64], n: usize, n1: i64, n2: i64) -> Vec<Complex64> {
    let m1 = BoxMap::new(n, n1);
    let m2 = BoxMap::new(n, n2);
    let mut out = vec![Complex64::new(0.0, 0.0); m2.dim];
    let mut idx = vec![0i64; n];
    for (p, &z) in v.iter().enumerate() {
        m1.decode(p, &mut idx);
        if let Some(q) = m2.pos(&idx) {
            out[q] = z;
        }
    }
    out
}

/// Operator-norm estimate of an algebra element, by increasing-box
/// compressions of the twisted regular representation: start at
/// 4 * support radius, double until the change drops below tol.
pub fn opnorm(a: &AlgElem, tol: f64) -> Result<NormEstimate> {
    opnorm_max_box(a, tol, DEFAULT_MAX_BOX)
}

pub fn opnorm_max_box(a: &AlgElem, tol: f64, max_box: i64) -> Result<NormEstimate> {
    assert!(tol > 0.0);
    let upper = a.seq_norm(SeqNorm::L1);
    if a.coeffs.is_empty() {
        return Ok(NormEstimate {
            value: 0.0,
            lower_certified: true,
            upper_bound: 0.0,
            box_radius: 0,
            tol,
            history: vec![],
        });
    }
    // start from the radius holding all but a sliver of the l1 mass: the
    // formal support of tail-certified Gram elements is much wider than the
    // region that matters
    let r = effective_radius(&a.coeffs, 1e-3).max(1);
    let inner_tol = (tol * 0.02).max(1e-14);
    let mut n_box = (4 * r).clamp(4, (max_box / 2).max(4));
    let (mut value, mut vec_prev) = sigma_max_box(a, n_box, inner_tol, None);
    let mut history = vec![(n_box, value)];
    let mut prev_delta: Option<f64> = None;
    loop {
        if n_box >= max_box {
            return Err(Error::NoConvergence {
                max_radius: max_box as usize,
                last_delta: prev_delta.unwrap_or(f64::INFINITY),
                tol,
            });
        }
        let next = (2 * n_box).min(max_box);
        let warm = embed(&vec_prev, a.n(), n_box, next);
        let (cur, vecn) = sigma_max_box(a, next, inner_tol, Some(&warm));
        let cur = cur.max(value); // compressions grow with the box
        let delta = cur - value;
        history.push((next, cur));
        value = cur;
        vec_prev = vecn;
        n_box = next;
        // stop when the raw delta is below tol, or when the delta ratio
        // extrapolates the remaining box error below tol
        let mut stop = delta < tol;
        if let Some(pd) = prev_delta {
            if pd > 0.0 {
                let ratio = delta / pd;
                if ratio < 0.9 && delta * ratio / (1.0 - ratio) < tol {
                    stop = true;
                }
            }
        }
        prev_delta = Some(delta);
        if stop {
            return Ok(NormEstimate {
                value,
                lower_certified: true,
                upper_bound: upper,
                box_radius: n_box,
                tol,
                history,
            });
        }
    }
}

/// Smallest l-infinity radius containing all but the given relative sliver
/// of the l1 mass.
fn effective_radius(c: &Coeffs, rel_sliver: f64) -> i64 {
    let total: f64 = c.iter().map(|(_, v)| v.norm()).sum();
    if total == 0.0 {
        return 0;
    }
    let mut by_radius: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
    for (k, v) in c.iter() {
        let r = k.iter().map(|x| x.abs()).max().unwrap_or(0);
        *by_radius.entry(r).or_insert(0.0) += v.norm();
    }
    let target = total * (1.0 - rel_sliver);
    let mut acc = 0.0;
    for (r, m) in by_radius {
        acc += m;
        if acc >= target {
            return r;
        }
    }
    c.support_radius()
}

/// Smallest-eigenvalue estimate of a self-adjoint element's compression, by
/// shifted power iteration at two box radii with Richardson extrapolation.
/// Advisory only: finite-section lower-spectrum convergence carries no rate.
pub fn min_eig_estimate(a: &AlgElem, tol: f64, n1: i64, n2: i64) -> Result<f64> {
    let defect = self_adjoint_defect_scaled(a);
    if defect > 1e-9 * (1.0 + a.seq_norm(SeqNorm::L1)) {
        return Err(Error::NotSelfAdjoint(defect));
    }
    let l1 = min_eig_box(a, n1, tol)?;
    let l2 = min_eig_box(a, n2, tol)?;
    // assume O(1/N^2) bias of the compression eigenvalue
    let q = (n2 as f64 / n1 as f64).powi(2);
    Ok(l2 + (l2 - l1) / (q - 1.0))
}

fn min_eig_box(a: &AlgElem, n_box: i64, tol: f64) -> Result<f64> {
    let op = RepOperator::new(a, n_box);
    debug_assert!(op.hermitian_defect() < 1e-6);
    let dim = op.dim();
    let inner_tol = (tol * 0.02).max(1e-14);
    let mut apply = |v: &[Complex64], out: &mut [Complex64]| op.apply(v, out);
    let mut best = f64::INFINITY;
    for restart in 0..3u64 {
        let v = random_unit(dim, 0x5349 + restart);
        let (lo, _, _) = lanczos_extreme(dim, &mut apply, v, inner_tol, 140);
        best = best.min(lo);
    }
    Ok(best)
}

/// Certified spectral enclosure [A, B] of a self-adjoint positive element,
/// from operator-norm estimates of a and of |a| e - a.
pub fn spectral_bounds(a: &AlgElem, tol: f64, max_box: i64) -> Result<(f64, f64)> {
    let defect = self_adjoint_defect_scaled(a);
    if defect > 1e-9 * (1.0 + a.seq_norm(SeqNorm::L1)) {
        return Err(Error::NotSelfAdjoint(defect));
    }
    let b_est = opnorm_max_box(a, tol, max_box)?.value + tol;
    let e = a.alg.identity();
    let shifted = e.scale(Complex64::new(b_est, 0.0)).sub(a)?;
    let spread = opnorm_max_box(&shifted, tol, max_box)?.value;
    let a_est = b_est - spread - tol;
    Ok((a_est, b_est))
}

/// Inverse via the Neumann series for (lambda a)^{-1} with lambda = 2/(A+B),
/// for self-adjoint a with positive spectral enclosure [A, B]. The accepted
/// result verifies |a * result - e|_l1 <= tol by direct twisted convolution.
/// Tolerance used for the internal spectral enclosure; the enclosure only
/// steers the Neumann/Newton scaling, and the final residual check is what
/// accepts or rejects the result.
const BOUND_TOL: f64 = 1e-3;

pub fn invert(a: &AlgElem, tol: f64) -> Result<AlgElem> {
    let (lo, hi) = spectral_bounds(a, BOUND_TOL, DEFAULT_MAX_BOX)?;
    invert_with_bounds(a, tol, lo, hi)
}

pub fn invert_with_bounds(a: &AlgElem, tol: f64, lo: f64, hi: f64) -> Result<AlgElem> {
    if lo <= 0.0 {
        return Err(Error::NotPositive { lower: lo });
    }
    let lambda = 2.0 / (lo + hi);
    let e = a.alg.identity();
    let r = e.sub(&a.scale(Complex64::new(lambda, 0.0)))?;
    let mut sum = e.clone();
    let mut term = e.clone();
    let mut converged = false;
    for _ in 0..4000 {
        term = tconv(&term, &r)?;
        sum = sum.add(&term)?;
        let tn = term.seq_norm(SeqNorm::L1);
        if tn < tol * 0.05 {
            converged = true;
            break;
        }
        if term.coeffs.len() > 200_000 {
            break;
        }
    }
    let result = sum.scale(Complex64::new(lambda, 0.0));
    let residual = tconv(a, &result)?.sub(&e)?.seq_norm(SeqNorm::L1);
    if !converged || residual > tol {
        return Err(Error::NoConvergence {
            max_radius: DEFAULT_MAX_BOX as usize,
            last_delta: residual,
            tol,
        });
    }
    Ok(result)
}

/// Inverse square root by the scaled Newton iteration
/// x <- x (3e - a' x^2) / 2 on a' = a / B, then rescaled by 1/sqrt(B).
/// The accepted result verifies |r * a * r - e|_l1 <= tol.
pub fn inv_sqrt(a: &AlgElem, tol: f64) -> Result<AlgElem> {
    let (lo, hi) = spectral_bounds(a, BOUND_TOL, DEFAULT_MAX_BOX)?;
    inv_sqrt_with_bounds(a, tol, lo, hi)
}

pub fn inv_sqrt_with_bounds(a: &AlgElem, tol: f64, lo: f64, hi: f64) -> Result<AlgElem> {
    if lo <= 0.0 {
        return Err(Error::NotPositive { lower: lo });
    }
    let e = a.alg.identity();
    let aprime = a.scale(Complex64::new(1.0 / hi, 0.0));
    let mut x = e.clone();
    let mut converged = false;
    for _ in 0..120 {
        let xx = tconv(&x, &x)?;
        let axx = tconv(&aprime, &xx)?;
        let inner = e.scale(Complex64::new(3.0, 0.0)).sub(&axx)?;
        let next = tconv(&x, &inner)?.scale(Complex64::new(0.5, 0.0));
        let step = next.sub(&x)?.seq_norm(SeqNorm::L1);
        x = next;
        if step < tol * 0.05 {
            converged = true;
            break;
        }
        if x.coeffs.len() > 200_000 {
            break;
        }
    }
    let result = x.scale(Complex64::new(1.0 / hi.sqrt(), 0.0));
    let residual = tconv(&tconv(&result, a)?, &result)?
        .sub(&e)?
        .seq_norm(SeqNorm::L1);
    if !converged || residual > tol {
        return Err(Error::NoConvergence {
            max_radius: DEFAULT_MAX_BOX as usize,
            last_delta: residual,
            tol,
        });
    }
    Ok(result)
}

/// Brute-force cross-check: reads the coefficients of f(a) (a spectral
/// function of a self-adjoint element) off the delta_0 column of f applied
/// to the truncated representation matrix. Boundary pollution is controlled
/// by the caller padding the box beyond the expected support.
pub fn matfunc_coeffs_oracle(a: &AlgElem, n_box: i64, f: impl Fn(f64) -> f64) -> Result<Coeffs> {
    let h = rep_matrix(a, n_box);
    let map = BoxMap::new(a.n(), n_box);
    let mut delta0 = DVector::zeros(map.dim);
    let center = map.pos(&vec![0; a.n()]).unwrap();
    delta0[center] = Complex64::new(1.0, 0.0);
    let col = hermitian_matfunc_apply(&h, &delta0, f);
    let idx = box_indices(a.n(), n_box);
    let mut out = Coeffs::zero(a.n());
    for (p, k) in idx.iter().enumerate() {
        out.set(k.clone(), col[p] / a.alg.haar_scale);
    }
    Ok(out)
}

/// Eigenvalues of the box-N compression of a self-adjoint element.
pub fn compression_eigenvalues(a: &AlgElem, n_box: i64) -> Result<Vec<f64>> {
    let defect = self_adjoint_defect_scaled(a);
    if defect > 1e-9 * (1.0 + a.seq_norm(SeqNorm::L1)) {
        return Err(Error::NotSelfAdjoint(defect));
    }
    let h = rep_matrix(a, n_box);
    Ok(crate::numeric::hermitian_eigenvalues(&h))
}
