//! Twisted sequence algebras on Z^n: finitely supported coefficients, the
//! zeta-twisted convolution and involution, weighted norms, the truncated
//! regular representation, and n x n matrix lifts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{BilinearCocycle, LatticeGen};

/// Magnitudes below this are pruned on insertion.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// A finitely supported map Z^n -> C with zero entries pruned.
#[derive(Debug, Clone, PartialEq)]
pub struct Coeffs {
    n: usize,
    entries: BTreeMap<Vec<i64>, Complex64>,
}

impl Coeffs {
    pub fn zero(n: usize) -> Self {
        Coeffs {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn delta(n: usize, k: Vec<i64>) -> Self {
        let mut c = Self::zero(n);
        c.set(k, Complex64::new(1.0, 0.0));
        c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.entries
            .get(k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Inserts, pruning magnitudes below [`PRUNE_THRESHOLD`].
    pub fn set(&mut self, k: Vec<i64>, v: Complex64) {
        debug_assert_eq!(k.len(), self.n);
        if v.norm() < PRUNE_THRESHOLD {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, v);
        }
    }

    pub fn add_to(&mut self, k: Vec<i64>, v: Complex64) {
        let cur = self.get(&k);
        self.set(k, cur + v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.entries.iter()
    }

    /// Max l1-norm of the support indices.
    pub fn support_radius(&self) -> i64 {
        self.entries
            .keys()
            .map(|k| k.iter().map(|v| v.abs()).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, s: Complex64) -> Coeffs {
        let mut out = Coeffs::zero(self.n);
        for (k, v) in self.iter() {
            out.set(k.clone(), v * s);
        }
        out
    }

    pub fn add(&self, other: &Coeffs) -> Coeffs {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.add_to(k.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Coeffs) -> Coeffs {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Unscaled weighted l1 norm: sum |a(k)| (1 + |k|_1)^s.
    pub fn weighted_l1(&self, s: f64) -> f64 {
        self.entries
            .iter()
            .map(|(k, v)| {
                let l1: i64 = k.iter().map(|x| x.abs()).sum();
                v.norm() * ((1 + l1) as f64).powf(s)
            })
            .sum()
    }

    pub fn l2(&self) -> f64 {
        self.entries
            .values()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Text export: one line per entry "k1 ... kn re im" with round-trip-exact floats.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.iter() {
            for ki in k {
                write!(s, "{ki} ").unwrap();
            }
            writeln!(s, "{} {}", v.re, v.im).unwrap();
        }
        s
    }

    /// Parses the text format; dimension inferred from the first line.
    pub fn from_text(text: &str) -> Result<Coeffs> {
        let mut out: Option<Coeffs> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected 'k1 ... kn re im'",
                    lineno + 1
                )));
            }
            let n = toks.len() - 2;
            let c = out.get_or_insert_with(|| Coeffs::zero(n));
            if n != c.n {
                return Err(Error::Parse(format!(
                    "line {}: inconsistent dimension {} (expected {})",
                    lineno + 1,
                    n,
                    c.n
                )));
            }
            let mut k = Vec::with_capacity(n);
            for t in &toks[..n] {
                k.push(
                    t.parse::<i64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
                );
            }
            let re: f64 = toks[n]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let im: f64 = toks[n + 1]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            c.set(k, Complex64::new(re, im));
        }
        out.ok_or_else(|| Error::Parse("empty coefficient file".into()))
    }
}

/// Which sequence norm to take.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeqNorm {
    L1,
    /// Weighted l1 with weight (1 + |k|)^s.
    L1Nu(f64),
    L2,
}

/// A twisted algebra handle: a bilinear-form cocycle plus the Haar scale of
/// the underlying counting measure (1 for A_L-type, 1/|det L| for B_L-type).
/// A conjugate cocycle is expressed by the sign of the form matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedAlgebra {
    pub cocycle: BilinearCocycle,
    pub haar_scale: f64,
}

impl TwistedAlgebra {
    pub fn new(cocycle: BilinearCocycle, haar_scale: f64) -> Self {
        assert!(haar_scale > 0.0);
        TwistedAlgebra {
            cocycle,
            haar_scale,
        }
    }

    /// A_L = C*(Z^{2d}, c_L): counting measure, cocycle c_L.
    pub fn a_l(g: &LatticeGen) -> Self {
        Self::new(BilinearCocycle::lattice_heisenberg(g), 1.0)
    }

    /// B_L = C*((1/|det L|) Z^{2d}, conj(c_{L°})).
    pub fn b_l(g: &LatticeGen) -> Self {
        Self::new(BilinearCocycle::adjoint_conjugate(g), 1.0 / g.det.abs())
    }

    /// Canonical algebra C*(Z^n, zeta_{Theta^low}) of a skew matrix.
    pub fn canonical(theta: &DMatrix<f64>) -> Self {
        Self::new(BilinearCocycle::canonical(theta), 1.0)
    }

    pub fn n(&self) -> usize {
        self.cocycle.n
    }

    pub fn zero(&self) -> AlgElem {
        AlgElem {
            alg: self.clone(),
            coeffs: Coeffs::zero(self.n()),
        }
    }

    /// The identity element (1/haar_scale) delta_0.
    pub fn identity(&self) -> AlgElem {
        let mut c = Coeffs::zero(self.n());
        c.set(vec![0; self.n()], Complex64::new(1.0 / self.haar_scale, 0.0));
        AlgElem {
            alg: self.clone(),
            coeffs: c,
        }
    }

    pub fn elem(&self, coeffs: Coeffs) -> Result<AlgElem> {
        if coeffs.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: coeffs.n(),
            });
        }
        Ok(AlgElem {
            alg: self.clone(),
            coeffs,
        })
    }

    pub fn delta(&self, k: Vec<i64>) -> AlgElem {
        AlgElem {
            alg: self.clone(),
            coeffs: Coeffs::delta(self.n(), k),
        }
    }
}

/// Coefficients bound to a twisted algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgElem {
    pub alg: TwistedAlgebra,
    pub coeffs: Coeffs,
}

impl AlgElem {
    pub fn n(&self) -> usize {
        self.alg.n()
    }

    fn check_same(&self, other: &AlgElem) -> Result<()> {
        if self.alg != other.alg {
            return Err(Error::AlgebraMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &AlgElem) -> Result<AlgElem> {
        self.check_same(other)?;
        Ok(AlgElem {
            alg: self.alg.clone(),
            coeffs: self.coeffs.add(&other.coeffs),
        })
    }

    pub fn sub(&self, other: &AlgElem) -> Result<AlgElem> {
        self.check_same(other)?;
        Ok(AlgElem {
            alg: self.alg.clone(),
            coeffs: self.coeffs.sub(&other.coeffs),
        })
    }

    pub fn scale(&self, s: Complex64) -> AlgElem {
        AlgElem {
            alg: self.alg.clone(),
            coeffs: self.coeffs.scale(s),
        }
    }

    /// Sequence norm; l1-type norms carry the algebra's Haar scale so that
    /// the regular representation is norm-decreasing with respect to them.
    pub fn seq_norm(&self, kind: SeqNorm) -> f64 {
        match kind {
            SeqNorm::L1 => self.alg.haar_scale * self.coeffs.weighted_l1(0.0),
            SeqNorm::L1Nu(s) => self.alg.haar_scale * self.coeffs.weighted_l1(s),
            SeqNorm::L2 => self.coeffs.l2(),
        }
    }
}

/// Twisted convolution (a * b)(n) = haar_scale sum_k a(k) b(n-k) zeta(k, n-k).
pub fn tconv(a: &AlgElem, b: &AlgElem) -> Result<AlgElem> {
    a.check_same(b)?;
    let alg = &a.alg;
    let mut out = Coeffs::zero(alg.n());
    for (k, av) in a.coeffs.iter() {
        for (m, bv) in b.coeffs.iter() {
            let sum: Vec<i64> = k.iter().zip(m.iter()).map(|(x, y)| x + y).collect();
            let phase = alg.cocycle.value_unchecked(k, m);
            out.add_to(sum, alg.haar_scale * av * bv * phase);
        }
    }
    Ok(AlgElem {
        alg: alg.clone(),
        coeffs: out,
    })
}

/// Twisted involution a*(n) = conj(a(-n)) zeta(n, n).
pub fn tstar(a: &AlgElem) -> AlgElem {
    let alg = &a.alg;
    let mut out = Coeffs::zero(alg.n());
    for (k, v) in a.coeffs.iter() {
        let neg: Vec<i64> = k.iter().map(|x| -x).collect();
        let phase = alg.cocycle.value_unchecked(&neg, &neg);
        out.set(neg, v.conj() * phase);
    }
    AlgElem {
        alg: alg.clone(),
        coeffs: out,
    }
}

/// Deviation from self-adjointness in the scaled l1 norm.
pub fn self_adjoint_defect(a: &AlgElem) -> f64 {
    tstar(a)
        .sub(a)
        .map(|d| d.seq_norm(SeqNorm::L1))
        .unwrap_or(f64::INFINITY)
}

/// Enumerates the box [-n_box, n_box]^n in lexicographic order.
pub fn box_indices(n: usize, n_box: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![-n_box; n];
    loop {
        out.push(cur.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n_box {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -n_box;
                }
                break;
            }
        }
    }
}

/// Matrix of the twisted regular representation lambda(a) xi = a * xi
/// compressed to the box [-n_box, n_box]^n: entry (row n, col m) equals
/// haar_scale a(n-m) zeta(n-m, m). Banded with bandwidth = support radius.
pub fn rep_matrix(a: &AlgElem, n_box: i64) -> DMatrix<Complex64> {
    let idx = box_indices(a.n(), n_box);
    let dim = idx.len();
    let mut mat = DMatrix::zeros(dim, dim);
    let lookup: BTreeMap<&Vec<i64>, usize> =
        idx.iter().enumerate().map(|(i, k)| (k, i)).collect();
    for (col, m) in idx.iter().enumerate() {
        for (k, v) in a.coeffs.iter() {
            let row_idx: Vec<i64> = k.iter().zip(m.iter()).map(|(x, y)| x + y).collect();
            if let Some(&row) = lookup.get(&row_idx) {
                let phase = a.alg.cocycle.value_unchecked(k, m);
                mat[(row, col)] = a.alg.haar_scale * v * phase;
            }
        }
    }
    mat
}

/// Matrix lift: n x n arrays of elements over one algebra.
pub type AlgMatrix = Vec<Vec<AlgElem>>;

fn mat_check(a: &AlgMatrix) -> Result<(usize, usize)> {
    let rows = a.len();
    if rows == 0 {
        return Err(Error::ShapeMismatch("empty matrix".into()));
    }
    let cols = a[0].len();
    for r in a {
        if r.len() != cols {
            return Err(Error::ShapeMismatch("ragged matrix".into()));
        }
        for e in r {
            if e.alg != a[0][0].alg {
                return Err(Error::AlgebraMismatch);
            }
        }
    }
    Ok((rows, cols))
}

pub fn mat_identity(alg: &TwistedAlgebra, n: usize) -> AlgMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { alg.identity() } else { alg.zero() })
                .collect()
        })
        .collect()
}

/// Entrywise twisted products summed per matrix multiplication.
pub fn mat_mul(a: &AlgMatrix, b: &AlgMatrix) -> Result<AlgMatrix> {
    let (ar, ac) = mat_check(a)?;
    let (br, bc) = mat_check(b)?;
    if ac != br {
        return Err(Error::ShapeMismatch(format!("{ar}x{ac} times {br}x{bc}")));
    }
    if a[0][0].alg != b[0][0].alg {
        return Err(Error::AlgebraMismatch);
    }
    let mut out = Vec::with_capacity(ar);
    for i in 0..ar {
        let mut row = Vec::with_capacity(bc);
        for j in 0..bc {
            let mut acc = a[0][0].alg.zero();
            for k in 0..ac {
                acc = acc.add(&tconv(&a[i][k], &b[k][j])?)?;
            }
            row.push(acc);
        }
        out.push(row);
    }
    Ok(out)
}

/// Conjugate transpose with entrywise involution.
pub fn mat_star(a: &AlgMatrix) -> Result<AlgMatrix> {
    let (rows, cols) = mat_check(a)?;
    Ok((0..cols)
        .map(|j| (0..rows).map(|i| tstar(&a[i][j])).collect())
        .collect())
}

pub fn mat_sub(a: &AlgMatrix, b: &AlgMatrix) -> Result<AlgMatrix> {
    let (ar, ac) = mat_check(a)?;
    let (br, bc) = mat_check(b)?;
    if (ar, ac) != (br, bc) {
        return Err(Error::ShapeMismatch(format!("{ar}x{ac} minus {br}x{bc}")));
    }
    let mut out = Vec::with_capacity(ar);
    for i in 0..ar {
        let mut row = Vec::with_capacity(ac);
        for j in 0..ac {
            row.push(a[i][j].sub(&b[i][j])?);
        }
        out.push(row);
    }
    Ok(out)
}
