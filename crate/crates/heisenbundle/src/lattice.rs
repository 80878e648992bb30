//! Phase-space geometry: lattices and their adjoints, the Heisenberg and
//! symplectic 2-cocycles, bilinear-form cocycles, the 1-cochain linking the
//! lattice cocycle to the canonical one, collected cocycles, and the
//! coefficient twist.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::Coeffs;
use crate::error::{Error, Result};
use crate::numeric::{
    bilinear_turns, skew_defect, spectral_norm, strict_lower, unit_phase, PhaseAccumulator,
};

pub const DEFAULT_SINGULARITY_THRESHOLD: f64 = 1e-12;

/// A point z = (x, omega) of the time-frequency plane R^{2d}.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint(pub Vec<f64>);

impl PhasePoint {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() || z.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: z.len(),
            });
        }
        Ok(PhasePoint(z))
    }

    pub fn dim2d(&self) -> usize {
        self.0.len()
    }

    pub fn d(&self) -> usize {
        self.0.len() / 2
    }

    /// Time part x.
    pub fn x(&self) -> &[f64] {
        &self.0[..self.d()]
    }

    /// Frequency part omega.
    pub fn omega(&self) -> &[f64] {
        &self.0[self.d()..]
    }
}

/// The standard symplectic matrices J = [[0, I], [-I, 0]] and K = [[0, I], [0, 0]].
#[derive(Debug, Clone)]
pub struct SymplecticData {
    pub d: usize,
    pub j: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

impl SymplecticData {
    pub fn new(d: usize) -> Self {
        let n = 2 * d;
        let mut j = DMatrix::zeros(n, n);
        let mut k = DMatrix::zeros(n, n);
        for i in 0..d {
            j[(i, d + i)] = 1.0;
            j[(d + i, i)] = -1.0;
            k[(i, d + i)] = 1.0;
        }
        SymplecticData { d, j, k }
    }
}

/// Heisenberg cocycle c(z1, z2) = exp(-2 pi i x1 . omega2) = exp(-2 pi i z1^T K z2).
pub fn heisenberg_c(z1: &PhasePoint, z2: &PhasePoint) -> Result<Complex64> {
    if z1.dim2d() != z2.dim2d() {
        return Err(Error::DimensionMismatch {
            expected: z1.dim2d(),
            got: z2.dim2d(),
        });
    }
    Ok(heisenberg_c_raw(&z1.0, &z2.0))
}

/// Same as [`heisenberg_c`] on raw slices of even, equal length.
pub fn heisenberg_c_raw(z1: &[f64], z2: &[f64]) -> Complex64 {
    let d = z1.len() / 2;
    let mut acc = PhaseAccumulator::new();
    for i in 0..d {
        acc.add_product(-z1[i], z2[d + i]);
    }
    unit_phase(acc.rem_one())
}

/// Symplectic cocycle c_s(z1, z2) = c(z1, z2) conj(c(z2, z1)) = exp(-2 pi i z1^T J z2).
pub fn symplectic_c(z1: &PhasePoint, z2: &PhasePoint) -> Result<Complex64> {
    if z1.dim2d() != z2.dim2d() {
        return Err(Error::DimensionMismatch {
            expected: z1.dim2d(),
            got: z2.dim2d(),
        });
    }
    let d = z1.d();
    let mut acc = PhaseAccumulator::new();
    for i in 0..d {
        acc.add_product(-z1.0[i], z2.0[d + i]);
        acc.add_product(z1.0[d + i], z2.0[i]);
    }
    Ok(unit_phase(acc.rem_one()))
}

/// An invertible lattice generator L with its cached adjoint generator
/// L° = J (L^{-1})^T J^T, the skew matrix Theta_L = -L^T J L, and the
/// quadratic form L^T K L entering the cochain and collected cocycle.
#[derive(Debug, Clone)]
pub struct LatticeGen {
    pub l: DMatrix<f64>,
    pub det: f64,
    pub linv: DMatrix<f64>,
    pub ladj: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    /// Strictly lower-triangular part of Theta_L.
    pub theta_low: DMatrix<f64>,
    /// G = L^T K L.
    pub gram_k: DMatrix<f64>,
    pub d: usize,
}

/// Builds a [`LatticeGen`] from a 2d x 2d matrix, given row-major entries.
pub fn make_lattice_rows(dim: usize, rows: &[f64]) -> Result<LatticeGen> {
    if dim == 0 || dim % 2 != 0 || rows.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: rows.len(),
        });
    }
    make_lattice(DMatrix::from_row_slice(dim, dim, rows))
}

/// Builds a [`LatticeGen`], caching determinant, inverse, adjoint generator and Theta_L.
pub fn make_lattice(l: DMatrix<f64>) -> Result<LatticeGen> {
    make_lattice_with_threshold(l, DEFAULT_SINGULARITY_THRESHOLD)
}

pub fn make_lattice_with_threshold(l: DMatrix<f64>, threshold: f64) -> Result<LatticeGen> {
    let n = l.nrows();
    if n == 0 || n % 2 != 0 || l.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: l.ncols(),
        });
    }
    let d = n / 2;
    let det = l.determinant();
    if det.abs() < threshold {
        return Err(Error::SingularMatrix { det, threshold });
    }
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { det, threshold })?;
    let sym = SymplecticData::new(d);
    let ladj = &sym.j * linv.transpose() * sym.j.transpose();
    let theta = -(l.transpose() * &sym.j * &l);
    let theta_low = strict_lower(&theta);
    let gram_k = l.transpose() * &sym.k * &l;
    Ok(LatticeGen {
        l,
        det,
        linv,
        ladj,
        theta,
        theta_low,
        gram_k,
        d,
    })
}

impl LatticeGen {
    pub fn dim2d(&self) -> usize {
        2 * self.d
    }

    /// Operator 2-norm of L.
    pub fn opnorm(&self) -> f64 {
        spectral_norm(&self.l)
    }

    /// L k for an integer vector k.
    pub fn apply(&self, k: &[i64]) -> Vec<f64> {
        apply_matrix(&self.l, k)
    }

    /// L° k for an integer vector k.
    pub fn apply_adjoint(&self, k: &[i64]) -> Vec<f64> {
        apply_matrix(&self.ladj, k)
    }

    /// The lattice generated by L°, as its own [`LatticeGen`].
    pub fn adjoint_lattice(&self) -> Result<LatticeGen> {
        make_lattice(self.ladj.clone())
    }

    /// Sanity check: Theta_L is skew-symmetric up to round-off.
    pub fn theta_skew_defect(&self) -> f64 {
        skew_defect(&self.theta)
    }
}

fn apply_matrix(m: &DMatrix<f64>, k: &[i64]) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(k.len(), n);
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = PhaseAccumulator::new();
        for (j, &kj) in k.iter().enumerate() {
            acc.add_product(m[(i, j)], kj as f64);
        }
        *o = acc.value();
    }
    out
}

/// A 2-cocycle of exponential-bilinear form zeta_M(k, m) = exp(2 pi i k^T M m)
/// on Z^n. Every cocycle appearing here is of this form: c_L has M = -L^T K L,
/// the canonical cocycle has M = Theta_L^low, and conj(c_{L°}) has
/// M = +(L°)^T K L°.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearCocycle {
    pub n: usize,
    pub m: DMatrix<f64>,
}

impl BilinearCocycle {
    pub fn new(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        BilinearCocycle { n: m.nrows(), m }
    }

    /// c_L(k, m) = c(Lk, Lm), i.e. M = -L^T K L.
    pub fn lattice_heisenberg(g: &LatticeGen) -> Self {
        Self::new(-g.gram_k.clone())
    }

    /// conj(c_{L°})(k, m), i.e. M = +(L°)^T K L°.
    pub fn adjoint_conjugate(g: &LatticeGen) -> Self {
        let sym = SymplecticData::new(g.d);
        Self::new(g.ladj.transpose() * &sym.k * &g.ladj)
    }

    /// Canonical cocycle zeta_{Theta^low} of a skew matrix.
    pub fn canonical(theta: &DMatrix<f64>) -> Self {
        Self::new(strict_lower(theta))
    }

    /// Cocycle value as a unit complex number.
    pub fn value(&self, k: &[i64], m: &[i64]) -> Result<Complex64> {
        if k.len() != self.n || m.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: k.len().max(m.len()),
            });
        }
        Ok(self.value_unchecked(k, m))
    }

    pub fn value_unchecked(&self, k: &[i64], m: &[i64]) -> Complex64 {
        unit_phase(self.turns(k, m))
    }

    /// k^T M m mod 1, in turns.
    pub fn turns(&self, k: &[i64], m: &[i64]) -> f64 {
        let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
        let mf: Vec<f64> = m.iter().map(|&v| v as f64).collect();
        bilinear_turns(&kf, &self.m, &mf)
    }
}

/// Evaluates a bilinear cocycle; thin wrapper kept for symmetry with the
/// other free functions.
pub fn cocycle_eval(c: &BilinearCocycle, k: &[i64], m: &[i64]) -> Result<Complex64> {
    c.value(k, m)
}

/// The 1-cochain rho_L(k) = exp(-pi i k^T (L^T K L + Theta_L^low) k) making
/// c_L cohomologous to the canonical cocycle zeta_{Theta_L^low}.
pub fn cochain_rho(g: &LatticeGen, k: &[i64]) -> Result<Complex64> {
    if k.len() != g.dim2d() {
        return Err(Error::DimensionMismatch {
            expected: g.dim2d(),
            got: k.len(),
        });
    }
    let q = &g.gram_k + &g.theta_low;
    // -1/2 k^T Q k in turns; scaling k by -1/2 is exact in binary floats
    let half: Vec<f64> = k.iter().map(|&v| -0.5 * v as f64).collect();
    let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    Ok(unit_phase(bilinear_turns(&half, &q, &kf)))
}

/// Collected cocycle P_{c_L}(k), closed exponential form:
/// exp(2 pi i (sum_{i<j} k_i k_j G_ij + sum_i k_i(k_i-1)/2 G_ii)) with G = L^T K L.
pub fn collected_p(g: &LatticeGen, k: &[i64]) -> Result<Complex64> {
    if k.len() != g.dim2d() {
        return Err(Error::DimensionMismatch {
            expected: g.dim2d(),
            got: k.len(),
        });
    }
    let n = k.len();
    let mut acc = PhaseAccumulator::new();
    for i in 0..n {
        let ki = k[i] as f64;
        for j in (i + 1)..n {
            acc.add_product(ki * g.gram_k[(i, j)], k[j] as f64);
        }
        // k_i (k_i - 1) / 2 is an exact integer
        let tri = (k[i] * (k[i] - 1) / 2) as f64;
        acc.add_product(tri, g.gram_k[(i, i)]);
    }
    Ok(unit_phase(acc.rem_one()))
}

/// Collected cocycle by the literal ordered-product form: a product of
/// conjugated Heisenberg cocycle values. Serves as the independent route
/// against [`collected_p`].
pub fn collected_p_product(g: &LatticeGen, k: &[i64]) -> Result<Complex64> {
    if k.len() != g.dim2d() {
        return Err(Error::DimensionMismatch {
            expected: g.dim2d(),
            got: k.len(),
        });
    }
    let n = k.len();
    let mut out = Complex64::new(1.0, 0.0);
    for i in 0..(n - 1) {
        let mut lead = vec![0i64; n];
        lead[i] = k[i];
        let mut rest = vec![0i64; n];
        rest[(i + 1)..].copy_from_slice(&k[(i + 1)..]);
        let z1 = g.apply(&lead);
        let z2 = g.apply(&rest);
        out *= heisenberg_c_raw(&z1, &z2).conj();
    }
    for i in 0..n {
        let mut e = vec![0i64; n];
        e[i] = 1;
        let z = g.apply(&e);
        let base = heisenberg_c_raw(&z, &z).conj();
        out *= int_pow(base, k[i] * (k[i] - 1) / 2);
    }
    Ok(out)
}

fn int_pow(base: Complex64, exp: i64) -> Complex64 {
    let mut b = if exp < 0 { base.conj() } else { base };
    let mut e = exp.unsigned_abs();
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

/// Coefficient twist a^L = a . P_{c_L}, transporting elements of the
/// c_L-twisted algebra to the canonical zeta_{Theta^low}-twisted algebra.
/// An isometry for every weighted l1 norm since |P| = 1.
pub fn twist_coeffs(a: &Coeffs, g: &LatticeGen) -> Result<Coeffs> {
    if a.n() != g.dim2d() {
        return Err(Error::DimensionMismatch {
            expected: g.dim2d(),
            got: a.n(),
        });
    }
    let mut out = Coeffs::zero(a.n());
    for (k, v) in a.iter() {
        out.set(k.clone(), v * collected_p(g, k)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn pp(v: &[f64]) -> PhasePoint {
        PhasePoint::new(v.to_vec()).unwrap()
    }

    fn random_lattice(rng: &mut StdRng, dim: usize, scale: f64) -> LatticeGen {
        loop {
            let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-scale..scale));
            if let Ok(g) = make_lattice(m) {
                if g.det.abs() > 0.05 {
                    return g;
                }
            }
        }
    }

    #[test]
    fn symplectic_data_invariants() {
        let s = SymplecticData::new(2);
        assert!(skew_defect(&s.j) == 0.0);
        let j2 = &s.j * &s.j;
        for i in 0..4 {
            for jj in 0..4 {
                let want = if i == jj { -1.0 } else { 0.0 };
                assert_eq!(j2[(i, jj)], want);
            }
        }
        // K + K^T - J should vanish... actually J = K - K^T
        let diff = &s.k - s.k.transpose() - &s.j;
        assert!(diff.amax() == 0.0);
    }

    #[test]
    fn make_lattice_identity() {
        let g = make_lattice(DMatrix::identity(2, 2)).unwrap();
        assert!((g.det - 1.0).abs() < 1e-15);
        assert!((&g.ladj - DMatrix::identity(2, 2)).amax() < 1e-15);
        // Theta = -J for L = I
        let s = SymplecticData::new(1);
        assert!((&g.theta + &s.j).amax() < 1e-15);
    }

    #[test]
    fn make_lattice_diag_adjoint() {
        let (a, b) = (0.5, 3.0);
        let g = make_lattice(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![a, b]))).unwrap();
        assert!((g.ladj[(0, 0)] - 1.0 / b).abs() < 1e-14);
        assert!((g.ladj[(1, 1)] - 1.0 / a).abs() < 1e-14);
        assert!(g.ladj[(0, 1)].abs() < 1e-15 && g.ladj[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn make_lattice_singular_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 1.0]);
        assert!(matches!(
            make_lattice(m),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn shear_lattice_theta_skew_and_commutation() {
        let g = make_lattice(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).unwrap();
        assert!(g.theta_skew_defect() < 1e-15);
        // defining property of the adjoint lattice: c_s(Lk, L°m) = 1
        for k1 in -3..=3i64 {
            for k2 in -3..=3i64 {
                for m1 in -3..=3i64 {
                    for m2 in -3..=3i64 {
                        let zk = pp(&g.apply(&[k1, k2]));
                        let zm = pp(&g.apply_adjoint(&[m1, m2]));
                        let c = symplectic_c(&zk, &zm).unwrap();
                        assert!(
                            (c - Complex64::new(1.0, 0.0)).norm() < 1e-12,
                            "commutation failed at k=({k1},{k2}), m=({m1},{m2}): {c}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn heisenberg_values() {
        // c(z, 0) = 1
        let z = pp(&[0.3, -1.2]);
        let zero = pp(&[0.0, 0.0]);
        assert!((heisenberg_c(&z, &zero).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // d=1: c((1,0), (0,1/2)) = e^{-pi i} = -1
        let c = heisenberg_c(&pp(&[1.0, 0.0]), &pp(&[0.0, 0.5])).unwrap();
        assert!((c - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn heisenberg_cocycle_identity_random() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let z1 = pp(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
            let z2 = pp(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
            let z3 = pp(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
            let z12 = pp(&[z1.0[0] + z2.0[0], z1.0[1] + z2.0[1]]);
            let z23 = pp(&[z2.0[0] + z3.0[0], z2.0[1] + z3.0[1]]);
            let lhs = heisenberg_c(&z1, &z2).unwrap() * heisenberg_c(&z12, &z3).unwrap();
            let rhs = heisenberg_c(&z1, &z23).unwrap() * heisenberg_c(&z2, &z3).unwrap();
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn symplectic_values() {
        let z = pp(&[0.7, 0.2]);
        assert!((symplectic_c(&z, &z).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let c = symplectic_c(&pp(&[1.0, 0.0]), &pp(&[0.0, 1.0])).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        // c_s = c(z1,z2) conj(c(z2,z1)) agreement
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let z1 = pp(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            let z2 = pp(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            let via_c =
                heisenberg_c(&z1, &z2).unwrap() * heisenberg_c(&z2, &z1).unwrap().conj();
            let direct = symplectic_c(&z1, &z2).unwrap();
            assert!((via_c - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn cocycle_eval_matches_heisenberg_on_lattice() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let g = random_lattice(&mut rng, 2, 2.0);
            let c = BilinearCocycle::lattice_heisenberg(&g);
            let k = [rng.gen_range(-5i64..=5), rng.gen_range(-5i64..=5)];
            let m = [rng.gen_range(-5i64..=5), rng.gen_range(-5i64..=5)];
            let via_bilinear = cocycle_eval(&c, &k, &m).unwrap();
            let via_heis = heisenberg_c_raw(&g.apply(&k), &g.apply(&m));
            assert!((via_bilinear - via_heis).norm() < 1e-13);
            // normalization
            assert!(
                (cocycle_eval(&c, &k, &[0, 0]).unwrap() - Complex64::new(1.0, 0.0)).norm()
                    < 1e-15
            );
        }
    }

    #[test]
    fn cochain_rho_cohomology_identity() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..300 {
            let g = random_lattice(&mut rng, 2, 2.5);
            let k = [rng.gen_range(-5i64..=5), rng.gen_range(-5i64..=5)];
            let m = [rng.gen_range(-5i64..=5), rng.gen_range(-5i64..=5)];
            let km = [k[0] + m[0], k[1] + m[1]];
            let cl = BilinearCocycle::lattice_heisenberg(&g);
            let zl = BilinearCocycle::canonical(&g.theta);
            let lhs = cl.value(&k, &m).unwrap();
            let rhs = zl.value(&k, &m).unwrap() * cochain_rho(&g, &km).unwrap()
                / (cochain_rho(&g, &k).unwrap() * cochain_rho(&g, &m).unwrap());
            assert!(
                (lhs - rhs).norm() < 1e-12,
                "cohomology identity failed: {lhs} vs {rhs}"
            );
        }
        // rho(0) = 1
        let g = random_lattice(&mut rng, 2, 2.5);
        assert!((cochain_rho(&g, &[0, 0]).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn collected_p_forms_agree() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..50 {
            let g = random_lattice(&mut rng, 2, 2.0);
            for k1 in -4..=4i64 {
                for k2 in -4..=4i64 {
                    let p1 = collected_p(&g, &[k1, k2]).unwrap();
                    let p2 = collected_p_product(&g, &[k1, k2]).unwrap();
                    assert!(
                        (p1 - p2).norm() < 1e-12,
                        "P forms disagree at k=({k1},{k2}): {p1} vs {p2}"
                    );
                }
            }
            // P(e_i) = 1, P(0) = 1
            assert!((collected_p(&g, &[1, 0]).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            assert!((collected_p(&g, &[0, 1]).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            assert!((collected_p(&g, &[0, 0]).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn collected_p_lipschitz_bound() {
        // |P_{c_L}(n) - P_{c_L0}(n)| <= (2d+1) pi |K| nu_2(n) (|L| + |L0|) |L - L0|
        let mut rng = StdRng::seed_from_u64(53);
        for _ in 0..100 {
            let g0 = random_lattice(&mut rng, 2, 1.5);
            let mut lm = g0.l.clone();
            for i in 0..2 {
                for j in 0..2 {
                    lm[(i, j)] += rng.gen_range(-0.1..0.1);
                }
            }
            let Ok(g1) = make_lattice(lm) else { continue };
            let n = [rng.gen_range(-4i64..=4), rng.gen_range(-4i64..=4)];
            let p0 = collected_p(&g0, &n).unwrap();
            let p1 = collected_p(&g1, &n).unwrap();
            let nu2 = {
                let l1: i64 = n.iter().map(|v| v.abs()).sum();
                ((1 + l1) as f64).powi(2)
            };
            let knorm = 1.0; // |K| = 1 in the operator norm
            let bound = (2.0 * 1.0 + 1.0)
                * std::f64::consts::PI
                * knorm
                * nu2
                * (g0.opnorm() + g1.opnorm())
                * spectral_norm(&(&g1.l - &g0.l));
            assert!(
                (p1 - p0).norm() <= bound + 1e-12,
                "Lipschitz bound violated: {} > {}",
                (p1 - p0).norm(),
                bound
            );
        }
    }

    #[test]
    fn twist_preserves_weighted_norms() {
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..20 {
            let g = random_lattice(&mut rng, 2, 2.0);
            let mut a = Coeffs::zero(2);
            for _ in 0..10 {
                a.set(
                    vec![rng.gen_range(-4i64..=4), rng.gen_range(-4i64..=4)],
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
            }
            let tw = twist_coeffs(&a, &g).unwrap();
            for s in 0..=2u32 {
                let na = a.weighted_l1(s as f64);
                let nt = tw.weighted_l1(s as f64);
                assert!((na - nt).abs() < 1e-14 * (1.0 + na));
            }
        }
        // delta_{e1} is fixed
        let g = random_lattice(&mut rng, 2, 2.0);
        let mut a = Coeffs::zero(2);
        a.set(vec![1, 0], Complex64::new(1.0, 0.0));
        let tw = twist_coeffs(&a, &g).unwrap();
        assert!((tw.get(&[1, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
