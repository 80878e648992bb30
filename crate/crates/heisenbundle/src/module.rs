//! Heisenberg-module arithmetic over a fixed lattice: finite combinations of
//! time-frequency shifts of a base window, the A_L- and B_L-valued inner
//! products, left/right module actions, the module norm, and the
//! associativity (FIGA) residual.
//!
//! Module vectors stay symbolic: every inner product reduces to
//! Heisenberg-cocycle phases times closed-form STFT values of the base
//! window, so identities are checkable to near machine precision. Gram-level
//! distance is the canonical equality test; the quadrature oracle remains the
//! independent cross-check.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::algebra::{AlgElem, Coeffs, TwistedAlgebra};
use crate::error::{Error, Result};
use crate::lattice::{heisenberg_c_raw, LatticeGen, PhasePoint};
use crate::spectral::{opnorm_max_box, NormEstimate, DEFAULT_MAX_BOX};
use crate::windows::{pair_inner, QuadratureSpec, Window, WindowKind};

/// A finite combination sum_j c_j pi(z_j) (base window), kept canonical:
/// terms merged on equal z and pruned below 1e-15.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleVector {
    pub base: Window,
    pub terms: Vec<(Vec<f64>, Complex64)>,
}

const TERM_PRUNE: f64 = 1e-15;

impl ModuleVector {
    pub fn from_window(base: Window) -> Self {
        let d = base.d();
        ModuleVector {
            base,
            terms: vec![(vec![0.0; 2 * d], Complex64::new(1.0, 0.0))],
        }
    }

    pub fn shifted(base: Window, z: Vec<f64>, coeff: Complex64) -> Result<Self> {
        if z.len() != 2 * base.d() {
            return Err(Error::DimensionMismatch {
                expected: 2 * base.d(),
                got: z.len(),
            });
        }
        let mut v = ModuleVector {
            base,
            terms: vec![(z, coeff)],
        };
        v.canonicalize();
        Ok(v)
    }

    pub fn zero(base: Window) -> Self {
        ModuleVector {
            base,
            terms: Vec::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.base.d()
    }

    fn check_base(&self, other: &ModuleVector) -> Result<()> {
        if self.base != other.base {
            return Err(Error::BaseMismatch);
        }
        Ok(())
    }

    fn canonicalize(&mut self) {
        self.terms
            .sort_by(|a, b| a.0.iter().map(|x| x.to_bits()).cmp(b.0.iter().map(|x| x.to_bits())));
        let mut merged: Vec<(Vec<f64>, Complex64)> = Vec::with_capacity(self.terms.len());
        for (z, c) in self.terms.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.0 == z {
                    last.1 += c;
                    continue;
                }
            }
            merged.push((z, c));
        }
        merged.retain(|(_, c)| c.norm() >= TERM_PRUNE);
        self.terms = merged;
    }

    pub fn add(&self, other: &ModuleVector) -> Result<ModuleVector> {
        self.check_base(other)?;
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.canonicalize();
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> ModuleVector {
        let mut out = self.clone();
        for (_, c) in &mut out.terms {
            *c *= s;
        }
        out.canonicalize();
        out
    }

    pub fn sub(&self, other: &ModuleVector) -> Result<ModuleVector> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// pi(u) applied to this vector: pi(u) pi(z_j) = c(u, z_j) pi(u + z_j).
    pub fn tf_shift(&self, u: &[f64]) -> Result<ModuleVector> {
        if u.len() != 2 * self.d() {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d(),
                got: u.len(),
            });
        }
        let mut out = ModuleVector {
            base: self.base.clone(),
            terms: Vec::with_capacity(self.terms.len()),
        };
        for (z, c) in &self.terms {
            let phase = heisenberg_c_raw(u, z);
            let zu: Vec<f64> = z.iter().zip(u.iter()).map(|(a, b)| a + b).collect();
            out.terms.push((zu, c * phase));
        }
        out.canonicalize();
        Ok(out)
    }

    /// Pointwise evaluation as an L2 function.
    pub fn eval(&self, t: &[f64]) -> Complex64 {
        let d = self.d();
        let mut acc = Complex64::new(0.0, 0.0);
        for (z, c) in &self.terms {
            let (x, w) = (&z[..d], &z[d..]);
            let shifted: Vec<f64> = t.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let mut phase = 0.0;
            for i in 0..d {
                phase += t[i] * w[i];
            }
            acc += c
                * self.base.eval(&shifted)
                * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase);
        }
        acc
    }

    /// Exact L2 inner product via the Gram expansion over pair_inner.
    pub fn inner2(&self, other: &ModuleVector) -> Result<Complex64> {
        self.check_base(other)?;
        let q = QuadratureSpec::default();
        let mut acc = Complex64::new(0.0, 0.0);
        for (zi, ci) in &self.terms {
            for (zj, cj) in &other.terms {
                let a = PhasePoint::new(zi.clone())?;
                let b = PhasePoint::new(zj.clone())?;
                acc += ci * cj.conj() * pair_inner(&a, &b, &self.base, &q, 1e-9)?;
            }
        }
        Ok(acc)
    }

    pub fn l2_norm(&self) -> Result<f64> {
        Ok(self.inner2(self)?.re.max(0.0).sqrt())
    }

    /// Gram-level L2 distance, the canonical equality test.
    pub fn l2_dist(&self, other: &ModuleVector) -> Result<f64> {
        let d = self.sub(other)?;
        d.l2_norm()
    }

    /// Serialization: base-window descriptor line, then one term per line
    /// "z1 ... z2d re im".
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}", self.base.descriptor()).unwrap();
        for (z, c) in &self.terms {
            for zi in z {
                write!(s, "{zi} ").unwrap();
            }
            writeln!(s, "{} {}", c.re, c.im).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<ModuleVector> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty module vector".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let base = match toks.as_slice() {
            ["gaussian", d] => Window::gaussian(d.parse().map_err(|e| Error::Parse(format!("{e}")))?),
            ["hermite", n] => Window::hermite(n.parse().map_err(|e| Error::Parse(format!("{e}")))?),
            _ => {
                return Err(Error::Parse(format!(
                    "unsupported base descriptor: {header}"
                )))
            }
        };
        let dim = 2 * base.d();
        let mut v = ModuleVector::zero(base);
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != dim + 2 {
                return Err(Error::Parse(format!("bad term line: {line}")));
            }
            let mut z = Vec::with_capacity(dim);
            for t in &toks[..dim] {
                z.push(t.parse::<f64>().map_err(|e| Error::Parse(format!("{e}")))?);
            }
            let re: f64 = toks[dim].parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let im: f64 = toks[dim + 1]
                .parse()
                .map_err(|e| Error::Parse(format!("{e}")))?;
            v.terms.push((z, Complex64::new(re, im)));
        }
        v.canonicalize();
        Ok(v)
    }
}

/// The continuous Gram value <f, pi(z) g> for module vectors over a shared
/// base, assembled from pair_inner phases.
pub fn gram_value(f: &ModuleVector, g: &ModuleVector, z: &[f64]) -> Result<Complex64> {
    f.check_base(g)?;
    let shifted = g.tf_shift(z)?;
    f.inner2(&shifted)
}

/// Whether tails of lattice Gram coefficients can be certified for this base.
fn decay_certifiable(w: &Window) -> bool {
    match &w.kind {
        WindowKind::Gaussian { .. } | WindowKind::Hermite { .. } => true,
        WindowKind::Sampled { decay_radius, .. } => decay_radius.is_some(),
    }
}

/// Lattice Gram coefficients k -> <f, pi(Lk) g>, with the support expanded
/// shell by shell until the certified tail mass drops below decay_tol.
pub fn gram_coeffs(
    f: &ModuleVector,
    g: &ModuleVector,
    lat: &LatticeGen,
    decay_tol: f64,
) -> Result<Coeffs> {
    lattice_gram(f, g, &lat.l, lat.dim2d(), decay_tol, |_| Complex64::new(1.0, 0.0))
}

/// Shared shell sweep for both module inner products. `phase(u)` multiplies
/// the value at lattice point u; `mat` generates the lattice points.
fn lattice_gram(
    f: &ModuleVector,
    g: &ModuleVector,
    mat: &nalgebra::DMatrix<f64>,
    dim2d: usize,
    decay_tol: f64,
    phase: impl Fn(&[f64]) -> Complex64,
) -> Result<Coeffs> {
    f.check_base(g)?;
    if !decay_certifiable(&f.base) {
        return Err(Error::DecayNotCertified(decay_tol));
    }
    if 2 * f.d() != dim2d {
        return Err(Error::DimensionMismatch {
            expected: dim2d,
            got: 2 * f.d(),
        });
    }
    // shells must first cover the region where |u - (z_i - w_j)| is small;
    // beyond it the Gram values decay like the base window's STFT
    let linv = mat
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix {
            det: 0.0,
            threshold: 0.0,
        })?;
    let mut peak_radius: f64 = 1.0;
    for (zi, _) in &f.terms {
        for (zj, _) in &g.terms {
            let diff = nalgebra::DVector::from_iterator(
                dim2d,
                zi.iter().zip(zj.iter()).map(|(a, b)| a - b),
            );
            let pre = &linv * diff;
            peak_radius = peak_radius.max(pre.amax());
        }
    }
    let r_min = peak_radius.ceil() as i64 + 2;
    let mut out = Coeffs::zero(dim2d);
    let mut shell_masses: Vec<f64> = Vec::new();
    let mut radius = 0i64;
    let max_radius = 400i64;
    loop {
        let mut mass = 0.0;
        for k in shell(dim2d, radius) {
            let u: Vec<f64> = {
                let kv = nalgebra::DVector::from_iterator(dim2d, k.iter().map(|&x| x as f64));
                (mat * kv).iter().copied().collect()
            };
            let val = phase(&u) * gram_value(f, g, &u)?;
            mass += val.norm();
            out.set(k, val);
        }
        shell_masses.push(mass);
        if radius >= r_min && shell_masses.len() >= 3 {
            let m = &shell_masses[shell_masses.len() - 3..];
            if m[2] < m[1] && m[1] < m[0] {
                let ratio = (m[2] / m[1]).max(m[1] / m[0]).min(0.9);
                let tail = m[2] * ratio / (1.0 - ratio);
                if tail < decay_tol && m[2] < decay_tol {
                    return Ok(out);
                }
            }
            // fully vanished shells also terminate
            if m.iter().all(|&x| x == 0.0) {
                return Ok(out);
            }
        }
        radius += 1;
        if radius > max_radius {
            return Err(Error::DecayNotCertified(decay_tol));
        }
    }
}

/// Indices with l-infinity norm exactly `radius`.
fn shell(n: usize, radius: i64) -> Vec<Vec<i64>> {
    crate::algebra::box_indices(n, radius)
        .into_iter()
        .filter(|k| k.iter().map(|x| x.abs()).max().unwrap_or(0) == radius)
        .collect()
}

/// Left inner product <f, g>_L(k) = <f, pi(Lk) g>, an element of A_L.
pub fn inner_left(
    f: &ModuleVector,
    g: &ModuleVector,
    lat: &LatticeGen,
    decay_tol: f64,
) -> Result<AlgElem> {
    let coeffs = gram_coeffs(f, g, lat, decay_tol)?;
    TwistedAlgebra::a_l(lat).elem(coeffs)
}

/// Right inner product <f, g>_{L°}(k) = <g, pi*(L°k) f>, an element of B_L.
/// Uses pi*(u) = c(u,u) pi(-u).
pub fn inner_right(
    f: &ModuleVector,
    g: &ModuleVector,
    lat: &LatticeGen,
    decay_tol: f64,
) -> Result<AlgElem> {
    let neg_ladj = -lat.ladj.clone();
    let coeffs = lattice_gram(g, f, &neg_ladj, lat.dim2d(), decay_tol, |u| {
        // u = -L°k here; c(L°k, L°k) = c(-u, -u) = conj phase of c(u,u)... the
        // cocycle is quadratic, so c(-u, -u) = c(u, u)
        heisenberg_c_raw(u, u).conj()
    })?;
    TwistedAlgebra::b_l(lat).elem(coeffs)
}

/// Left action a f = sum_k a(k) pi(Lk) f of an A_L element.
pub fn act_left(a: &AlgElem, f: &ModuleVector, lat: &LatticeGen) -> Result<ModuleVector> {
    if a.alg != TwistedAlgebra::a_l(lat) {
        return Err(Error::AlgebraMismatch);
    }
    let mut out = ModuleVector::zero(f.base.clone());
    for (k, av) in a.coeffs.iter() {
        let u = lat.apply(k);
        let shifted = f.tf_shift(&u)?;
        out = out.add(&shifted.scale(*av))?;
    }
    Ok(out)
}

/// Right action f b = (1/|det L|) sum_k b(k) pi*(L°k) f of a B_L element.
pub fn act_right(f: &ModuleVector, b: &AlgElem, lat: &LatticeGen) -> Result<ModuleVector> {
    if b.alg != TwistedAlgebra::b_l(lat) {
        return Err(Error::AlgebraMismatch);
    }
    let scale = 1.0 / lat.det.abs();
    let mut out = ModuleVector::zero(f.base.clone());
    for (k, bv) in b.coeffs.iter() {
        let u = lat.apply_adjoint(k);
        let neg_u: Vec<f64> = u.iter().map(|x| -x).collect();
        let phase = heisenberg_c_raw(&u, &u);
        let shifted = f.tf_shift(&neg_u)?;
        out = out.add(&shifted.scale(bv * phase * scale))?;
    }
    Ok(out)
}

/// Module norm |f|_{E_L} = |<f,f>_L|^{1/2} with the B-side cross value.
#[derive(Debug, Clone)]
pub struct ModuleNorm {
    pub value: f64,
    pub cross_value: f64,
    pub a_side: NormEstimate,
    pub b_side: NormEstimate,
}

pub fn module_norm(f: &ModuleVector, lat: &LatticeGen, tol: f64) -> Result<ModuleNorm> {
    if f.terms.is_empty() {
        let zero = NormEstimate {
            value: 0.0,
            lower_certified: true,
            upper_bound: 0.0,
            box_radius: 0,
            tol,
            history: vec![],
        };
        return Ok(ModuleNorm {
            value: 0.0,
            cross_value: 0.0,
            a_side: zero.clone(),
            b_side: zero,
        });
    }
    let decay_tol = (tol * 1e-3).min(1e-9);
    let aa = inner_left(f, f, lat, decay_tol)?;
    let bb = inner_right(f, f, lat, decay_tol)?;
    let a_est = opnorm_max_box(&aa, tol, DEFAULT_MAX_BOX)?;
    let b_est = opnorm_max_box(&bb, tol, DEFAULT_MAX_BOX)?;
    Ok(ModuleNorm {
        value: a_est.value.max(0.0).sqrt(),
        cross_value: b_est.value.max(0.0).sqrt(),
        a_side: a_est,
        b_side: b_est,
    })
}

/// L2 residual of the fundamental identity <f,g>_L h = f <g,h>_{L°},
/// computed exactly at Gram level.
pub fn figa_residual(
    f: &ModuleVector,
    g: &ModuleVector,
    h: &ModuleVector,
    lat: &LatticeGen,
    decay_tol: f64,
) -> Result<f64> {
    let lhs = act_left(&inner_left(f, g, lat, decay_tol)?, h, lat)?;
    let rhs = act_right(f, &inner_right(g, h, lat, decay_tol)?, lat)?;
    lhs.l2_dist(&rhs)
}
