//! Window models and L2(R^d) inner products: STFT evaluation with exact
//! closed forms for polynomial-times-Gaussian windows, the quadrature
//! brute-force oracle, pairwise inner products of time-frequency shifts,
//! and Feichtinger-norm estimation.
//!
//! The closed forms reduce every STFT of Gaussian/Hermite windows to exact
//! Gaussian moments: for a complex center c, the moments
//! M_j = int t^j exp(-2 pi (t - c)^2) dt obey
//! M_0 = 1/sqrt(2), M_j = c M_{j-1} + (j-1)/(4 pi) M_{j-2},
//! which follows from integration by parts. They are admitted only because
//! the quadrature oracle confirms them in the test suite.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::PhasePoint;

/// Truncation radius and step of the brute-force quadrature rule.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub t_max: f64,
    pub step: f64,
}

impl QuadratureSpec {
    pub fn new(t_max: f64, step: f64) -> Result<Self> {
        if !(t_max > 0.0) || !(step > 0.0) || t_max / step > 1e6 {
            return Err(Error::Usage(format!(
                "invalid quadrature spec: T = {t_max}, h = {step}"
            )));
        }
        Ok(QuadratureSpec { t_max, step })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            t_max: 6.0,
            step: 1.0 / 256.0,
        }
    }
}

/// Window function model. Analytic variants are real polynomials times the
/// standard Gaussian; sampled windows live on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowKind {
    Gaussian { d: usize },
    Hermite { order: usize },
    Sampled {
        start: f64,
        step: f64,
        values: Vec<Complex64>,
        decay_radius: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub kind: WindowKind,
    /// Per-dimension polynomial factors (coefficients in t, low to high) for
    /// the analytic variants: f(t) = prod_i p_i(t_i) exp(-pi |t|^2).
    polys: Option<Vec<Vec<f64>>>,
    l2_norm: f64,
}

impl Window {
    /// L2-normalized Gaussian 2^{d/4} exp(-pi |t|^2).
    pub fn gaussian(d: usize) -> Self {
        assert!(d >= 1);
        let p = vec![vec![2.0f64.powf(0.25)]; d];
        Window {
            kind: WindowKind::Gaussian { d },
            polys: Some(p),
            l2_norm: 1.0,
        }
    }

    /// L2-normalized Hermite function of the given order (d = 1):
    /// h_n(t) = 2^{1/4} / sqrt(2^n n!) H_n(sqrt(2 pi) t) exp(-pi t^2).
    pub fn hermite(order: usize) -> Self {
        let p = hermite_poly(order);
        Window {
            kind: WindowKind::Hermite { order },
            polys: Some(vec![p]),
            l2_norm: 1.0,
        }
    }

    pub fn sampled(
        start: f64,
        step: f64,
        values: Vec<Complex64>,
        decay_radius: Option<f64>,
    ) -> Result<Self> {
        if !(step > 0.0) || values.len() < 2 {
            return Err(Error::Usage("sampled window needs step > 0 and >= 2 samples".into()));
        }
        let mut w = Window {
            kind: WindowKind::Sampled {
                start,
                step,
                values,
                decay_radius,
            },
            polys: None,
            l2_norm: 0.0,
        };
        w.l2_norm = w.sampled_l2();
        Ok(w)
    }

    pub fn d(&self) -> usize {
        match &self.kind {
            WindowKind::Gaussian { d } => *d,
            WindowKind::Hermite { .. } | WindowKind::Sampled { .. } => 1,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    pub fn is_analytic(&self) -> bool {
        self.polys.is_some()
    }

    pub fn poly_factors(&self) -> Option<&[Vec<f64>]> {
        self.polys.as_deref()
    }

    /// Polynomial degree sum (0 for pure Gaussians); drives tail envelopes.
    pub fn poly_degree(&self) -> usize {
        self.polys
            .as_ref()
            .map(|ps| ps.iter().map(|p| p.len().saturating_sub(1)).sum())
            .unwrap_or(0)
    }

    /// Pointwise evaluation; sampled windows are linearly interpolated and
    /// vanish outside their grid (and beyond the decay radius, if set).
    pub fn eval(&self, t: &[f64]) -> Complex64 {
        match &self.kind {
            WindowKind::Gaussian { .. } | WindowKind::Hermite { .. } => {
                let ps = self.polys.as_ref().unwrap();
                debug_assert_eq!(t.len(), ps.len());
                let mut out = Complex64::new(1.0, 0.0);
                let mut sq = 0.0;
                for (ti, p) in t.iter().zip(ps.iter()) {
                    out *= Complex64::new(poly_eval(p, *ti), 0.0);
                    sq += ti * ti;
                }
                out * Complex64::new((-PI * sq).exp(), 0.0)
            }
            WindowKind::Sampled {
                start,
                step,
                values,
                decay_radius,
            } => {
                debug_assert_eq!(t.len(), 1);
                let x = t[0];
                if let Some(r) = decay_radius {
                    if x.abs() > *r {
                        return Complex64::new(0.0, 0.0);
                    }
                }
                let pos = (x - start) / step;
                if pos < 0.0 || pos > (values.len() - 1) as f64 {
                    return Complex64::new(0.0, 0.0);
                }
                let i = (pos.floor() as usize).min(values.len() - 2);
                let frac = pos - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    fn sampled_l2(&self) -> f64 {
        if let WindowKind::Sampled { step, values, .. } = &self.kind {
            let mut s = 0.0;
            for (i, v) in values.iter().enumerate() {
                let w = if i == 0 || i == values.len() - 1 { 0.5 } else { 1.0 };
                s += w * v.norm_sqr();
            }
            (s * step).sqrt()
        } else {
            unreachable!()
        }
    }

    /// Sampled-window file format: header "d start step count", then one
    /// "re im" line per sample.
    pub fn to_sampled_text(&self) -> Result<String> {
        if let WindowKind::Sampled {
            start,
            step,
            values,
            ..
        } = &self.kind
        {
            let mut s = format!("1 {} {} {}\n", start, step, values.len());
            for v in values {
                s.push_str(&format!("{} {}\n", v.re, v.im));
            }
            Ok(s)
        } else {
            Err(Error::Usage("only sampled windows use the sample file format".into()))
        }
    }

    pub fn from_sampled_text(text: &str) -> Result<Window> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty window file".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse("window header must be 'd start step count'".into()));
        }
        let d: usize = toks[0].parse().map_err(|e| Error::Parse(format!("{e}")))?;
        if d != 1 {
            return Err(Error::Parse(format!("sampled windows support d = 1, got {d}")));
        }
        let start: f64 = toks[1].parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let step: f64 = toks[2].parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let count: usize = toks[3].parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let mut values = Vec::with_capacity(count);
        for line in lines.take(count) {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 2 {
                return Err(Error::Parse("sample line must be 're im'".into()));
            }
            values.push(Complex64::new(
                t[0].parse().map_err(|e| Error::Parse(format!("{e}")))?,
                t[1].parse().map_err(|e| Error::Parse(format!("{e}")))?,
            ));
        }
        if values.len() != count {
            return Err(Error::Parse(format!(
                "expected {count} samples, found {}",
                values.len()
            )));
        }
        Window::sampled(start, step, values, None)
    }

    /// One-line descriptor used by module-vector serialization and reports.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            WindowKind::Gaussian { d } => format!("gaussian {d}"),
            WindowKind::Hermite { order } => format!("hermite {order}"),
            WindowKind::Sampled { values, .. } => format!("sampled {}", values.len()),
        }
    }
}

// polynomial helpers (coefficients low-to-high)

fn poly_eval(p: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for &c in p.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of q(t) = p(t + s).
fn poly_shift(p: &[f64], s: f64) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n];
    // binomial expansion of each monomial (t + s)^k
    let mut binom = vec![0.0f64; n];
    for (k, &c) in p.iter().enumerate() {
        binom[0] = 1.0;
        let mut pow = 1.0;
        // (t+s)^k = sum_j C(k,j) s^{k-j} t^j, accumulate from high j down
        let mut coeff = 1.0f64; // C(k, k) = 1
        out[k] += c; // j = k term, s^0
        for j in (0..k).rev() {
            coeff = coeff * (j + 1) as f64 / (k - j) as f64;
            pow *= s;
            out[j] += c * coeff * pow;
        }
    }
    out
}

/// L2-normalized Hermite polynomial factor: 2^{1/4}/sqrt(2^n n!) H_n(sqrt(2 pi) t).
fn hermite_poly(order: usize) -> Vec<f64> {
    // physicists' recurrence in the scaled variable u = sqrt(2 pi) t:
    // q_{n+1}(t) = 2 sqrt(2 pi) t q_n(t) - 2 n q_{n-1}(t)
    let s = (2.0 * PI).sqrt();
    let mut q_prev: Vec<f64> = vec![1.0];
    let mut q: Vec<f64> = vec![0.0, 2.0 * s];
    if order == 0 {
        q = q_prev.clone();
    } else {
        for n in 1..order {
            let mut next = vec![0.0; q.len() + 1];
            for (i, &c) in q.iter().enumerate() {
                next[i + 1] += 2.0 * s * c;
            }
            for (i, &c) in q_prev.iter().enumerate() {
                next[i] -= 2.0 * n as f64 * c;
            }
            q_prev = std::mem::replace(&mut q, next);
        }
    }
    let mut fact = 1.0f64;
    for i in 1..=order {
        fact *= i as f64;
    }
    let norm = 2.0f64.powf(0.25) / (2.0f64.powi(order as i32) * fact).sqrt();
    q.iter().map(|c| c * norm).collect()
}

/// Exact Gaussian moments: M_j = int t^j exp(-2 pi (t - c)^2) dt.
fn gaussian_moments(c: Complex64, deg: usize) -> Vec<Complex64> {
    let mut m = Vec::with_capacity(deg + 1);
    let m0 = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0); // sqrt(pi / (2 pi))
    m.push(m0);
    if deg >= 1 {
        m.push(c * m0);
    }
    for j in 2..=deg {
        let val = c * m[j - 1] + m[j - 2] * ((j - 1) as f64 / (4.0 * PI));
        m.push(val);
    }
    m
}

/// Closed-form one-dimensional STFT factor for polynomial-Gaussian windows:
/// int p_f(t) p_g(t - x) exp(-pi t^2 - pi (t-x)^2 - 2 pi i t w) dt.
fn stft_poly1d(pf: &[f64], pg: &[f64], x: f64, w: f64) -> Complex64 {
    let beta = Complex64::new(x, -w);
    let shifted = poly_shift(pg, -x); // p_g(t - x) as a polynomial in t
    let r = poly_mul(pf, &shifted);
    let c = beta * 0.5;
    let m = gaussian_moments(c, r.len() - 1);
    let mut s = Complex64::new(0.0, 0.0);
    for (j, &coef) in r.iter().enumerate() {
        s += m[j] * coef;
    }
    let exponent = Complex64::new(-PI * x * x, 0.0) + beta * beta * (PI / 2.0);
    s * exponent.exp()
}

/// STFT V_g f(z) = <f, pi(z) g>. Exact closed form when both windows are
/// analytic; quadrature with a step-halving error estimate otherwise
/// (d = 1 only for the quadrature path).
pub fn stft(f: &Window, g: &Window, z: &PhasePoint, q: &QuadratureSpec, tol: f64) -> Result<Complex64> {
    let d = f.d();
    if g.d() != d || z.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: g.d().max(z.d()),
        });
    }
    if let (Some(pfs), Some(pgs)) = (f.poly_factors(), g.poly_factors()) {
        let mut out = Complex64::new(1.0, 0.0);
        for i in 0..d {
            out *= stft_poly1d(&pfs[i], &pgs[i], z.x()[i], z.omega()[i]);
        }
        return Ok(out);
    }
    if d != 1 {
        return Err(Error::Usage("quadrature STFT supports d = 1 windows".into()));
    }
    let (x, w) = (z.x()[0], z.omega()[0]);
    let integrand = |t: f64| {
        f.eval(&[t])
            * g.eval(&[t - x]).conj()
            * Complex64::from_polar(1.0, -2.0 * PI * t * w)
    };
    let (val, err) = trapezoid_with_halving(&integrand, q);
    if err > tol {
        return Err(Error::QuadratureUnderResolved {
            estimate: err,
            tol,
        });
    }
    Ok(val)
}

/// <pi(z) g, pi(z') g>: reduces to a Heisenberg-cocycle phase times a single
/// conjugated STFT value, since pi(z')* pi(z) = c(z',z') c(-z',z) pi(z - z').
pub fn pair_inner(z: &PhasePoint, zp: &PhasePoint, g: &Window, q: &QuadratureSpec, tol: f64) -> Result<Complex64> {
    if z.dim2d() != zp.dim2d() || z.d() != g.d() {
        return Err(Error::DimensionMismatch {
            expected: z.dim2d(),
            got: zp.dim2d(),
        });
    }
    let diff = PhasePoint::new(
        z.0.iter().zip(zp.0.iter()).map(|(a, b)| a - b).collect(),
    )?;
    let neg_zp = PhasePoint::new(zp.0.iter().map(|v| -v).collect())?;
    let phase = crate::lattice::heisenberg_c(zp, zp)? * crate::lattice::heisenberg_c(&neg_zp, z)?;
    let v = stft(g, g, &diff, q, tol)?;
    Ok(phase * v.conj())
}

/// A function sampled on a uniform grid, for the quadrature oracle.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub start: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn from_fn(f: impl Fn(f64) -> Complex64, q: &QuadratureSpec) -> Self {
        let n = (2.0 * q.t_max / q.step).round() as usize;
        let step = 2.0 * q.t_max / n as f64;
        let values = (0..=n)
            .map(|j| f(-q.t_max + j as f64 * step))
            .collect();
        SampledFunction {
            start: -q.t_max,
            step,
            values,
        }
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|j| self.start + j as f64 * self.step)
    }

    pub fn l2_norm(&self) -> f64 {
        let mut s = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let w = if i == 0 || i == self.values.len() - 1 { 0.5 } else { 1.0 };
            s += w * v.norm_sqr();
        }
        (s * self.step).sqrt()
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.check_grid(other)?;
        Ok(SampledFunction {
            start: self.start,
            step: self.step,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    fn check_grid(&self, other: &SampledFunction) -> Result<()> {
        if (self.start - other.start).abs() > 1e-12
            || (self.step - other.step).abs() > 1e-15
            || self.values.len() != other.values.len()
        {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Composite-trapezoid inner product <f, g> = int f conj(g) on a common grid,
/// with an error estimate from comparing against the half-resolution rule.
pub fn quadrature_inner(f: &SampledFunction, g: &SampledFunction) -> Result<(Complex64, f64)> {
    f.check_grid(g)?;
    let full = trapezoid_weighted(&f.values, &g.values, f.step, 1);
    let coarse = trapezoid_weighted(&f.values, &g.values, f.step, 2);
    let err = (full - coarse).norm() / 3.0;
    Ok((full, err))
}

fn trapezoid_weighted(f: &[Complex64], g: &[Complex64], step: f64, stride: usize) -> Complex64 {
    let idx: Vec<usize> = (0..f.len()).step_by(stride).collect();
    let mut s = Complex64::new(0.0, 0.0);
    for (pos, &i) in idx.iter().enumerate() {
        let w = if pos == 0 || pos == idx.len() - 1 { 0.5 } else { 1.0 };
        s += f[i] * g[i].conj() * w;
    }
    s * (step * stride as f64)
}

fn trapezoid_with_halving(f: &dyn Fn(f64) -> Complex64, q: &QuadratureSpec) -> (Complex64, f64) {
    let s = SampledFunction::from_fn(f, q);
    let ones = vec![Complex64::new(1.0, 0.0); s.values.len()];
    let full = trapezoid_weighted(&s.values, &ones, s.step, 1);
    let coarse = trapezoid_weighted(&s.values, &ones, s.step, 2);
    (full, (full - coarse).norm() / 3.0)
}

/// Feichtinger-norm estimate: 2d-dimensional quadrature of
/// |V_phi f| nu_s over the truncation box, with an empirical tail bound from
/// the outermost ring's decay.
#[derive(Debug, Clone, Copy)]
pub struct M1Estimate {
    pub value: f64,
    pub tail_bound: f64,
}

pub fn m1_norm_estimate(f: &Window, s: u32, q: &QuadratureSpec) -> Result<M1Estimate> {
    let d = f.d();
    if d != 1 {
        return Err(Error::Usage("M1 estimation implemented for d = 1".into()));
    }
    let phi = Window::gaussian(d);
    // coarse grid suffices: the integrand is smooth and Gaussian-decaying,
    // so the trapezoid rule converges exponentially in 1/h
    let h = q.step.max(1.0 / 32.0);
    let n = (2.0 * q.t_max / h).round() as usize;
    let h = 2.0 * q.t_max / n as f64;
    let mut total = 0.0;
    let mut ring = 0.0;
    let mut inner_ring = 0.0;
    for i in 0..=n {
        let x = -q.t_max + i as f64 * h;
        let wx = if i == 0 || i == n { 0.5 } else { 1.0 };
        for j in 0..=n {
            let w = -q.t_max + j as f64 * h;
            let wy = if j == 0 || j == n { 0.5 } else { 1.0 };
            let z = PhasePoint::new(vec![x, w])?;
            let v = stft(f, &phi, &z, q, 1e-9)?;
            let nu = (1.0 + x.abs() + w.abs()).powi(s as i32);
            let cell = v.norm() * nu * wx * wy * h * h;
            total += cell;
            let edge = x.abs().max(w.abs());
            if edge > q.t_max - 2.0 * h {
                ring += cell;
            } else if edge > q.t_max - 4.0 * h {
                inner_ring += cell;
            }
        }
    }
    let ratio = if inner_ring > 0.0 { (ring / inner_ring).min(0.9) } else { 0.0 };
    let tail_bound = if ratio > 0.0 {
        ring * ratio / (1.0 - ratio)
    } else {
        ring
    };
    Ok(M1Estimate {
        value: total,
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn pp(v: &[f64]) -> PhasePoint {
        PhasePoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hermite_orthonormal_by_quadrature() {
        let q = QuadratureSpec::default();
        for m in 0..=4usize {
            for n in 0..=4usize {
                let hm = Window::hermite(m);
                let hn = Window::hermite(n);
                let fm = SampledFunction::from_fn(|t| hm.eval(&[t]), &q);
                let fn_ = SampledFunction::from_fn(|t| hn.eval(&[t]), &q);
                let (ip, err) = quadrature_inner(&fm, &fn_).unwrap();
                assert!(err < 1e-10);
                let want = if m == n { 1.0 } else { 0.0 };
                assert!(
                    (ip - Complex64::new(want, 0.0)).norm() < 1e-10,
                    "orthonormality failed at ({m},{n}): {ip}"
                );
            }
        }
    }

    #[test]
    fn gaussian_stft_closed_form_matches_quadrature() {
        let q = QuadratureSpec::default();
        let phi = Window::gaussian(1);
        for &x in &[-1.5, -0.3, 0.0, 0.7, 2.0] {
            for &w in &[-1.0, 0.0, 0.4, 1.3, -2.2] {
                let z = pp(&[x, w]);
                let closed = stft(&phi, &phi, &z, &q, 1e-9).unwrap();
                // quadrature oracle through sampled values
                let integrand = |t: f64| {
                    phi.eval(&[t])
                        * phi.eval(&[t - x]).conj()
                        * Complex64::from_polar(1.0, -2.0 * PI * t * w)
                };
                let sf = SampledFunction::from_fn(integrand, &q);
                let ones = SampledFunction {
                    start: sf.start,
                    step: sf.step,
                    values: vec![Complex64::new(1.0, 0.0); sf.values.len()],
                };
                let (oracle, err) = quadrature_inner(&sf, &ones).unwrap();
                assert!(err < 1e-9);
                assert!(
                    (closed - oracle).norm() < 1e-9,
                    "closed {closed} vs oracle {oracle} at ({x},{w})"
                );
                // |V_phi phi| = exp(-pi (x^2 + w^2)/2)
                let want = (-PI * (x * x + w * w) / 2.0).exp();
                assert!((closed.norm() - want).abs() < 1e-10);
            }
        }
        // V_phi phi(0,0) = 1
        let v0 = stft(&phi, &phi, &pp(&[0.0, 0.0]), &q, 1e-9).unwrap();
        assert!((v0 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hermite_stft_closed_form_matches_quadrature() {
        let q = QuadratureSpec::default();
        let mut rng = StdRng::seed_from_u64(71);
        for m in 0..=3usize {
            for n in 0..=3usize {
                let f = Window::hermite(m);
                let g = Window::hermite(n);
                for _ in 0..4 {
                    let x = rng.gen_range(-2.0..2.0);
                    let w = rng.gen_range(-2.0..2.0);
                    let closed = stft(&f, &g, &pp(&[x, w]), &q, 1e-9).unwrap();
                    let integrand = |t: f64| {
                        f.eval(&[t])
                            * g.eval(&[t - x]).conj()
                            * Complex64::from_polar(1.0, -2.0 * PI * t * w)
                    };
                    let sf = SampledFunction::from_fn(integrand, &q);
                    let ones = SampledFunction {
                        start: sf.start,
                        step: sf.step,
                        values: vec![Complex64::new(1.0, 0.0); sf.values.len()],
                    };
                    let (oracle, err) = quadrature_inner(&sf, &ones).unwrap();
                    assert!(err < 1e-9);
                    assert!(
                        (closed - oracle).norm() < 1e-9,
                        "Hermite STFT mismatch at ({m},{n}), z = ({x},{w}): {closed} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn gaussian_d2_stft_matches_product() {
        let q = QuadratureSpec::default();
        let phi2 = Window::gaussian(2);
        let phi1 = Window::gaussian(1);
        let z = pp(&[0.4, -0.8, 1.1, 0.3]); // (x1,x2,w1,w2)
        let v2 = stft(&phi2, &phi2, &z, &q, 1e-9).unwrap();
        let va = stft(&phi1, &phi1, &pp(&[0.4, 1.1]), &q, 1e-9).unwrap();
        let vb = stft(&phi1, &phi1, &pp(&[-0.8, 0.3]), &q, 1e-9).unwrap();
        assert!((v2 - va * vb).norm() < 1e-12);
    }

    #[test]
    fn pair_inner_matches_quadrature() {
        let q = QuadratureSpec::default();
        let mut rng = StdRng::seed_from_u64(73);
        for trial in 0..50 {
            let g = if trial % 3 == 0 {
                Window::hermite(2)
            } else {
                Window::gaussian(1)
            };
            let z = pp(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            let zp = pp(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            let closed = pair_inner(&z, &zp, &g, &q, 1e-9).unwrap();
            // oracle: sample pi(z) g and pi(z') g and integrate
            let shift = |zz: &PhasePoint, t: f64| {
                g.eval(&[t - zz.x()[0]]) * Complex64::from_polar(1.0, 2.0 * PI * t * zz.omega()[0])
            };
            let fa = SampledFunction::from_fn(|t| shift(&z, t), &q);
            let fb = SampledFunction::from_fn(|t| shift(&zp, t), &q);
            let (oracle, err) = quadrature_inner(&fa, &fb).unwrap();
            assert!(err < 1e-9);
            assert!(
                (closed - oracle).norm() < 1e-9,
                "pair_inner mismatch: {closed} vs {oracle}"
            );
        }
        // z = z' gives |g|_2^2
        let g = Window::gaussian(1);
        let z = pp(&[0.3, -0.4]);
        let same = pair_inner(&z, &z, &g, &q, 1e-9).unwrap();
        assert!((same - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // z' = 0 gives conj(V_g g(z))
        let v = stft(&g, &g, &z, &q, 1e-9).unwrap();
        let zero = pp(&[0.0, 0.0]);
        let p = pair_inner(&z, &zero, &g, &q, 1e-9).unwrap();
        assert!((p - v.conj()).norm() < 1e-12);
    }

    #[test]
    fn quadrature_linearity_and_parity() {
        let q = QuadratureSpec::default();
        let phi = Window::gaussian(1);
        let h1 = Window::hermite(1);
        let fa = SampledFunction::from_fn(|t| phi.eval(&[t]), &q);
        let fb = SampledFunction::from_fn(|t| h1.eval(&[t]), &q);
        let (ip, err) = quadrature_inner(&fa, &fb).unwrap();
        assert!(err < 1e-10);
        assert!(ip.norm() < 1e-10, "parity orthogonality violated: {ip}");
        // linearity of the STFT in f via sampled combinations
        let alpha = Complex64::new(0.7, -0.3);
        let z = pp(&[0.5, -0.7]);
        let combo = |t: f64| {
            (phi.eval(&[t]) * alpha + h1.eval(&[t]))
                * phi.eval(&[t - z.x()[0]]).conj()
                * Complex64::from_polar(1.0, -2.0 * PI * t * z.omega()[0])
        };
        let sf = SampledFunction::from_fn(combo, &q);
        let ones = SampledFunction {
            start: sf.start,
            step: sf.step,
            values: vec![Complex64::new(1.0, 0.0); sf.values.len()],
        };
        let (lhs, _) = quadrature_inner(&sf, &ones).unwrap();
        let rhs = alpha * stft(&phi, &phi, &z, &q, 1e-9).unwrap()
            + stft(&h1, &phi, &z, &q, 1e-9).unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn step_halving_error_decreases_fourfold() {
        // on a coarse grid the trapezoid error estimate must shrink by >= 4x
        // per halving for smooth inputs
        let phi = Window::gaussian(1);
        let integrand = |t: f64| phi.eval(&[t]) * Complex64::new((1.5 * t).cos(), 0.0);
        let coarse = QuadratureSpec::new(6.0, 0.5).unwrap();
        let fine = QuadratureSpec::new(6.0, 0.25).unwrap();
        let (_, e1) = trapezoid_with_halving(&integrand, &coarse);
        let (_, e2) = trapezoid_with_halving(&integrand, &fine);
        assert!(e1 > 0.0 && e2 > 0.0);
        assert!(e1 / e2 >= 4.0, "error ratio {}", e1 / e2);
    }

    #[test]
    fn sampled_window_roundtrip_and_quadrature_stft() {
        let q = QuadratureSpec::new(6.0, 1.0 / 128.0).unwrap();
        let phi = Window::gaussian(1);
        let sf = SampledFunction::from_fn(|t| phi.eval(&[t]), &q);
        let w = Window::sampled(sf.start, sf.step, sf.values.clone(), Some(6.0)).unwrap();
        let text = w.to_sampled_text().unwrap();
        let back = Window::from_sampled_text(&text).unwrap();
        assert_eq!(back.d(), 1);
        if let (WindowKind::Sampled { values: v1, .. }, WindowKind::Sampled { values: v2, .. }) =
            (&w.kind, &back.kind)
        {
            assert_eq!(v1, v2);
        } else {
            panic!("expected sampled windows");
        }
        assert!((w.l2_norm() - 1.0).abs() < 1e-4);
        // sampled STFT approximates the analytic one
        let z = pp(&[0.5, 0.25]);
        let ana = stft(&phi, &phi, &z, &q, 1e-9).unwrap();
        let num = stft(&w, &phi, &z, &q, 1e-6).unwrap();
        assert!((ana - num).norm() < 1e-3, "{ana} vs {num}");
    }

    #[test]
    fn m1_norm_gaussian_and_monotonicity() {
        let q = QuadratureSpec::default();
        let phi = Window::gaussian(1);
        // |phi|_{M1,phi} = int exp(-pi |z|^2 / 2) dz = 2 for d = 1
        let est = m1_norm_estimate(&phi, 0, &q).unwrap();
        assert!((est.value - 2.0).abs() < 1e-6, "got {}", est.value);
        assert!(est.tail_bound < 1e-8);
        // |f|_{M1} <= |f|_{M1_nu} <= |f|_{M1_nu2}
        for f in [Window::gaussian(1), Window::hermite(2)] {
            let e0 = m1_norm_estimate(&f, 0, &q).unwrap().value;
            let e1 = m1_norm_estimate(&f, 1, &q).unwrap().value;
            let e2 = m1_norm_estimate(&f, 2, &q).unwrap().value;
            assert!(e0 <= e1 && e1 <= e2);
        }
    }

    #[test]
    fn poly_shift_correct() {
        // p(t) = 1 + 2t + 3t^2, q(t) = p(t + s)
        let p = vec![1.0, 2.0, 3.0];
        let s = 0.7;
        let q = poly_shift(&p, s);
        for &t in &[-1.0, 0.0, 0.5, 2.0] {
            assert!((poly_eval(&q, t) - poly_eval(&p, t + s)).abs() < 1e-12);
        }
    }
}
