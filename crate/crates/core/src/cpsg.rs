//! Completely positive maps on matrix algebras: Choi matrices, minimal Kraus
//! decompositions, the fibers E(n) of the associated subproduct system of
//! Kraus spaces, the coisometric multiplication check, and the CP semigroup
//! induced by a representation of a subproduct system.
//!
//! Conventions, fixed repo-wide: Choi matrix C = sum_ij Theta(E_ij) (x) E_ij
//! with E_ij matrix units, so C[(a,i),(b,j)] = Theta(E_ij)[a,b] under the
//! kron index (a,i) -> a*k + i. The matching vectorization is row-major:
//! vec(K)[a*k + i] = K[a,i]. Minimal Kraus operators carry the Choi
//! eigenvalue weights (K_l = sqrt(lambda_l) unvec(v_l)) and are declared an
//! orthonormal basis of the Kraus space E_Theta.

use ndarray::{Array1, Array2};
use ndarray_linalg::{c64, Eigh, UPLO};

use crate::error::{Error, Result};
use crate::kernel::{adjoint, ensure_finite, op_norm, CMatrix, CHECK_TOL, RANK_TOL};
use crate::reps::{is_representation, RepTuple};
use crate::sps::SubproductSystem;

/// A completely positive map on the k x k matrices, held as its Choi matrix
/// together with a minimal Kraus family.
#[derive(Debug, Clone)]
pub struct CpMap {
    k: usize,
    choi: CMatrix,
    kraus: Vec<CMatrix>,
}

fn vec_rm(m: &CMatrix) -> Array1<c64> {
    Array1::from_iter(m.iter().cloned())
}

fn unvec_rm(v: &Array1<c64>, k: usize) -> CMatrix {
    Array2::from_shape_vec((k, k), v.to_vec()).expect("length k^2")
}

impl CpMap {
    /// Validates Hermitian PSD-ness of the Choi matrix and extracts the
    /// minimal Kraus family from its eigendecomposition.
    pub fn from_choi(choi: CMatrix) -> Result<Self> {
        ensure_finite(&choi)?;
        let kk = choi.nrows();
        if choi.ncols() != kk {
            return Err(Error::Invalid("Choi matrix must be square".into()));
        }
        let k = (kk as f64).sqrt().round() as usize;
        if k * k != kk {
            return Err(Error::Invalid(
                "Choi matrix size must be a perfect square".into(),
            ));
        }
        let dev = op_norm(&(&choi - &adjoint(&choi)));
        let scale = op_norm(&choi).max(1.0);
        if dev > CHECK_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        let h = (&choi + &adjoint(&choi)).mapv(|v| v * 0.5);
        let (vals, vecs) = crate::kernel::hermitian_eig(&h)?;
        let lmax = vals.iter().cloned().fold(0.0, f64::max);
        let mut kraus = Vec::new();
        for (l, &lam) in vals.iter().enumerate() {
            if lam < -CHECK_TOL * scale {
                return Err(Error::NegativeEigenvalue(lam));
            }
            if lam > RANK_TOL * lmax.max(1e-300) {
                let col = vecs.column(l).to_owned();
                let m = unvec_rm(&col, k).mapv(|v| v * lam.sqrt());
                kraus.push(m);
            }
        }
        Ok(CpMap { k, choi: h, kraus })
    }

    /// Builds the Choi matrix of a (not necessarily minimal) Kraus family and
    /// re-extracts a minimal one.
    pub fn from_kraus(k: usize, family: &[CMatrix]) -> Result<Self> {
        let mut choi = Array2::<c64>::zeros((k * k, k * k));
        for m in family {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::Invalid("Kraus operators must be k x k".into()));
            }
            let v = vec_rm(m);
            for (p, vp) in v.iter().enumerate() {
                if *vp == c64::new(0.0, 0.0) {
                    continue;
                }
                for (q, vq) in v.iter().enumerate() {
                    choi[[p, q]] += *vp * vq.conj();
                }
            }
        }
        CpMap::from_choi(choi)
    }

    /// The identity map on M_k.
    pub fn identity(k: usize) -> Self {
        CpMap::from_kraus(k, &[Array2::eye(k)]).expect("identity map is CP")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// Minimal Kraus family with eigenvalue weights absorbed; its span is the
    /// Kraus space E_Theta and it is orthonormal in E_Theta's inner product.
    pub fn kraus_minimal(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn rank(&self) -> usize {
        self.kraus.len()
    }

    /// Theta(a) = sum_l K_l a K_l*.
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let mut out = Array2::<c64>::zeros((self.k, self.k));
        for m in &self.kraus {
            out = out + m.dot(a).dot(&adjoint(m));
        }
        out
    }

    /// self after other: (self . other)(a) = self(other(a)).
    pub fn compose(&self, other: &CpMap) -> Result<CpMap> {
        if self.k != other.k {
            return Err(Error::AmbientMismatch(self.k, other.k));
        }
        let mut family = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                family.push(a.dot(b));
            }
        }
        CpMap::from_kraus(self.k, &family)
    }

    /// n-fold composition; power(0) is the identity map.
    pub fn power(&self, n: usize) -> Result<CpMap> {
        let mut out = CpMap::identity(self.k);
        for _ in 0..n {
            out = self.compose(&out)?;
        }
        Ok(out)
    }

    /// || Theta(I) - I ||.
    pub fn unitality_defect(&self) -> f64 {
        let eye = Array2::eye(self.k);
        op_norm(&(self.apply(&eye) - eye))
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unitality_defect() <= tol
    }

    /// sum_l K_l* K_l <= I + tol (largest eigenvalue test).
    pub fn is_contractive(&self, tol: f64) -> bool {
        let mut s = Array2::<c64>::zeros((self.k, self.k));
        for m in &self.kraus {
            s = s + adjoint(m).dot(m);
        }
        match s.eigh(UPLO::Lower) {
            Ok((vals, _)) => vals.iter().cloned().fold(0.0, f64::max) <= 1.0 + tol,
            Err(_) => false,
        }
    }
}

/// The degree-n fiber E(n) of the subproduct system of Kraus spaces: the
/// minimal Kraus family of the n-th power.
pub struct ArvesonFiber {
    pub dim: usize,
    pub kraus: Vec<CMatrix>,
}

pub fn arveson_fiber(theta: &CpMap, n: usize) -> Result<ArvesonFiber> {
    if n == 0 {
        return Err(Error::Invalid("fibers are defined for n >= 1".into()));
    }
    let p = theta.power(n)?;
    Ok(ArvesonFiber {
        dim: p.rank(),
        kraus: p.kraus.clone(),
    })
}

/// Residual of the coisometric multiplication E(m) (x) E(n) -> E(m+n): each
/// product A_i B_j is expanded in the minimal basis of E(m+n) by least
/// squares; returns max(expansion residual, || mu mu* - I ||).
pub fn coisometry_check(theta: &CpMap, m: usize, n: usize) -> Result<f64> {
    let em = arveson_fiber(theta, m)?;
    let en = arveson_fiber(theta, n)?;
    let emn = arveson_fiber(theta, m + n)?;
    let k = theta.k();
    // HS-orthonormal directions and weights of E(m+n).
    let norms: Vec<f64> = emn
        .kraus
        .iter()
        .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let pairs = em.dim * en.dim;
    let mut mu = Array2::<c64>::zeros((emn.dim, pairs));
    let mut worst_residual = 0.0f64;
    for (i, a) in em.kraus.iter().enumerate() {
        for (j, b) in en.kraus.iter().enumerate() {
            let prod = a.dot(b);
            let v = vec_rm(&prod);
            let mut recon = Array1::<c64>::zeros(k * k);
            for (l, c) in emn.kraus.iter().enumerate() {
                let cu = vec_rm(c);
                // <c_l, prod>_HS / ||c_l||, against the unit direction.
                let inner: c64 = cu.iter().zip(v.iter()).map(|(x, y)| x.conj() * *y).sum();
                let coeff_unit = inner / norms[l];
                recon = recon + cu.mapv(|x| x * (coeff_unit / norms[l]));
                // Coefficient w.r.t. the E(m+n)-orthonormal basis element C_l.
                mu[[l, i * en.dim + j]] = coeff_unit / norms[l];
            }
            let res = (&v - &recon).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            worst_residual = worst_residual.max(res);
        }
    }
    let gram = mu.dot(&adjoint(&mu));
    let co = op_norm(&(gram - Array2::<c64>::eye(emn.dim)));
    Ok(worst_residual.max(co))
}

/// The CP semigroup Theta_n(a) = R-tilde_n (I_{X(n)} (x) a) R-tilde_n*
/// induced by a representation R of X, for n = 0..N. In Kraus form the
/// degree-n map has family { sum_alpha F_n[alpha, s] R^alpha } over the
/// fiber frame columns s.
pub fn sigma_semigroup(
    x: &SubproductSystem,
    r: &RepTuple,
    tol: f64,
) -> Result<Vec<CpMap>> {
    let report = is_representation(x, r, tol)?;
    if report.max_residual > tol {
        return Err(Error::Invalid(format!(
            "tuple is not a representation of the system (residual {:.3e})",
            report.max_residual
        )));
    }
    let k = r.k();
    let d = x.d();
    let mut maps = vec![CpMap::identity(k)];
    // Row of all word evaluations R^alpha at the current degree, extended
    // letter by letter.
    let mut words: Vec<CMatrix> = vec![Array2::eye(k)];
    for n in 1..=x.n_max() {
        let mut next = Vec::with_capacity(words.len() * d);
        for i in 0..d {
            for w in &words {
                next.push(r.matrix(i).dot(w));
            }
        }
        words = next;
        let f = x.fiber(n).frame();
        let mut family = Vec::with_capacity(f.ncols());
        for s in 0..f.ncols() {
            let mut op = Array2::<c64>::zeros((k, k));
            for (alpha, w) in words.iter().enumerate() {
                let c = f[[alpha, s]];
                if c != c64::new(0.0, 0.0) {
                    op = op + w.mapv(|v| v * c);
                }
            }
            family.push(op);
        }
        maps.push(CpMap::from_kraus(k, &family)?);
    }
    Ok(maps)
}

/// Max violation of Theta_m . Theta_n = Theta_{m+n} over matrix units.
pub fn semigroup_law_residual(maps: &[CpMap]) -> f64 {
    let top = maps.len() - 1;
    if top == 0 {
        return 0.0;
    }
    let k = maps[0].k();
    let mut worst = 0.0f64;
    for m in 1..=top {
        for n in 1..=top - m {
            for a in 0..k {
                for b in 0..k {
                    let mut unit = Array2::<c64>::zeros((k, k));
                    unit[[a, b]] = c64::new(1.0, 0.0);
                    let lhs = maps[m].apply(&maps[n].apply(&unit));
                    let rhs = maps[m + n].apply(&unit);
                    worst = worst.max(op_norm(&(lhs - rhs)));
                }
            }
        }
    }
    worst
}

/// Powers of Theta rebuilt from the fibers E(n) through the identity
/// representation (each minimal Kraus operator acts on C^k directly); the
/// roundtrip reproduces Theta^n exactly up to numerical error.
pub fn reconstruct_from_arveson(theta: &CpMap, n: usize) -> Result<CpMap> {
    let fiber = arveson_fiber(theta, n)?;
    CpMap::from_kraus(theta.k(), &fiber.kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{hermitian_eig, RANK_TOL};
    use crate::sps::SubproductSystem;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, k: usize) -> CMatrix {
        Array2::from_shape_fn((k, k), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    /// Random unital CP map: Kraus family normalized so sum K_l K_l* = I.
    fn random_unital(rng: &mut ChaCha8Rng, k: usize, kraus_count: usize) -> CpMap {
        let raw: Vec<CMatrix> = (0..kraus_count).map(|_| random_matrix(rng, k)).collect();
        let mut s = Array2::<c64>::zeros((k, k));
        for a in &raw {
            s = s + a.dot(&adjoint(a));
        }
        let (vals, vecs) = hermitian_eig(&s).unwrap();
        let mut inv_half = Array2::<c64>::zeros((k, k));
        for (i, &l) in vals.iter().enumerate() {
            inv_half[[i, i]] = c(1.0 / l.sqrt(), 0.0);
        }
        let w = vecs.dot(&inv_half).dot(&adjoint(&vecs));
        let family: Vec<CMatrix> = raw.iter().map(|a| w.dot(a)).collect();
        CpMap::from_kraus(k, &family).unwrap()
    }

    fn unit(k: usize, a: usize, b: usize) -> CMatrix {
        let mut m = Array2::<c64>::zeros((k, k));
        m[[a, b]] = c(1.0, 0.0);
        m
    }

    fn map_distance(a: &CpMap, b: &CpMap) -> f64 {
        let k = a.k();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let e = unit(k, i, j);
                worst = worst.max(op_norm(&(a.apply(&e) - b.apply(&e))));
            }
        }
        worst
    }

    #[test]
    fn unitary_conjugation_has_rank_one() {
        // U = diagonal phase unitary.
        let mut u = Array2::<c64>::zeros((2, 2));
        u[[0, 0]] = c64::from_polar(1.0, 0.4);
        u[[1, 1]] = c64::from_polar(1.0, -1.1);
        let theta = CpMap::from_kraus(2, &[u]).unwrap();
        assert_eq!(theta.rank(), 1);
        assert!(theta.is_unital(1e-12));
        assert_eq!(arveson_fiber(&theta, 3).unwrap().dim, 1);
    }

    #[test]
    fn identity_map_has_rank_one() {
        let theta = CpMap::identity(2);
        assert_eq!(theta.rank(), 1);
        assert!(map_distance(&theta, &theta.power(3).unwrap()) < 1e-12);
    }

    #[test]
    fn mixture_with_independent_unitary_has_rank_two() {
        let s = 0.5f64.sqrt();
        let mut v = Array2::<c64>::zeros((2, 2));
        v[[0, 1]] = c(s, 0.0);
        v[[1, 0]] = c(s, 0.0);
        let eye = Array2::<c64>::eye(2).mapv(|x| x * s);
        let theta = CpMap::from_kraus(2, &[eye, v]).unwrap();
        assert_eq!(theta.rank(), 2);
    }

    #[test]
    fn choi_kraus_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let theta = random_unital(&mut rng, 2, 2);
        let rebuilt = CpMap::from_choi(theta.choi().clone()).unwrap();
        assert!(map_distance(&theta, &rebuilt) < 1e-10);
    }

    #[test]
    fn from_choi_rejects_bad_input() {
        let mut m = Array2::<c64>::zeros((4, 4));
        m[[0, 1]] = c(1.0, 0.0);
        assert!(matches!(CpMap::from_choi(m), Err(Error::NotHermitian(_))));
        let mut m = Array2::<c64>::eye(4);
        m[[0, 0]] = c(-1.0, 0.0);
        assert!(matches!(
            CpMap::from_choi(m),
            Err(Error::NegativeEigenvalue(_))
        ));
    }

    #[test]
    fn depolarizing_map_fibers() {
        // Choi = I/2 on M_2: Theta(a) = tr(a)/2 I, idempotent and unital.
        let choi = Array2::<c64>::eye(4).mapv(|v| v * 0.5);
        let theta = CpMap::from_choi(choi).unwrap();
        assert!(theta.is_unital(1e-12));
        assert_eq!(arveson_fiber(&theta, 1).unwrap().dim, 4);
        assert_eq!(arveson_fiber(&theta, 2).unwrap().dim, 4);
        let sq = theta.power(2).unwrap();
        assert!(map_distance(&theta, &sq) < 1e-12);
    }

    #[test]
    fn fiber_dims_are_submultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let theta = random_unital(&mut rng, 2, 2);
            let d1 = arveson_fiber(&theta, 1).unwrap().dim;
            let d2 = arveson_fiber(&theta, 2).unwrap().dim;
            let d3 = arveson_fiber(&theta, 3).unwrap().dim;
            assert!(d2 <= d1 * d1);
            assert!(d3 <= d1 * d2);
        }
    }

    #[test]
    fn composition_preserves_unitality_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let theta = random_unital(&mut rng, 2, 3);
        for n in 1..=4 {
            let p = theta.power(n).unwrap();
            assert!(p.is_unital(1e-9), "power {} not unital", n);
            // from_choi validates PSD-ness on construction.
            assert!(CpMap::from_choi(p.choi().clone()).is_ok());
        }
    }

    #[test]
    fn coisometry_single_kraus() {
        let mut t = Array2::<c64>::zeros((2, 2));
        t[[0, 1]] = c(0.7, 0.2);
        t[[1, 0]] = c(-0.1, 0.4);
        let theta = CpMap::from_kraus(2, &[t]).unwrap();
        assert!(coisometry_check(&theta, 1, 1).unwrap() < 1e-10);
        assert!(coisometry_check(&theta, 2, 1).unwrap() < 1e-10);
    }

    #[test]
    fn coisometry_random_and_depolarizing() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let theta = random_unital(&mut rng, 2, 2);
        assert!(coisometry_check(&theta, 1, 1).unwrap() < 1e-7);
        let dep = CpMap::from_choi(Array2::<c64>::eye(4).mapv(|v| v * 0.5)).unwrap();
        assert!(coisometry_check(&dep, 1, 1).unwrap() < 1e-7);
    }

    #[test]
    fn sigma_semigroup_on_full_system_is_kraus_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let x = SubproductSystem::full(2, 3, RANK_TOL);
        let t1 = random_matrix(&mut rng, 3);
        let t2 = random_matrix(&mut rng, 3);
        let t = crate::reps::RepTuple::new(vec![t1, t2]).unwrap();
        let t = t.scaled(0.9 / t.row_norm());
        let maps = sigma_semigroup(&x, &t, 1e-7).unwrap();
        // Theta_1(a) = sum_i T_i a T_i*.
        let direct = CpMap::from_kraus(3, t.matrices()).unwrap();
        assert!(map_distance(&maps[1], &direct) < 1e-10);
        assert!(semigroup_law_residual(&maps) < 1e-9);
    }

    #[test]
    fn sigma_semigroup_of_zero_tuple_vanishes() {
        let x = SubproductSystem::full(2, 3, RANK_TOL);
        let zero = crate::reps::RepTuple::new(vec![
            Array2::<c64>::zeros((2, 2)),
            Array2::<c64>::zeros((2, 2)),
        ])
        .unwrap();
        let maps = sigma_semigroup(&x, &zero, 1e-7).unwrap();
        for n in 1..maps.len() {
            assert_eq!(maps[n].rank(), 0);
            assert!(op_norm(&maps[n].apply(&Array2::eye(2))) < 1e-14);
        }
    }

    #[test]
    fn sigma_semigroup_rejects_non_representation() {
        let x = SubproductSystem::symmetric(2, 3, RANK_TOL);
        let mut a = Array2::<c64>::zeros((2, 2));
        a[[0, 1]] = c(0.5, 0.0);
        let mut b = Array2::<c64>::zeros((2, 2));
        b[[1, 0]] = c(0.5, 0.0);
        let t = crate::reps::RepTuple::new(vec![a, b]).unwrap();
        assert!(sigma_semigroup(&x, &t, 1e-7).is_err());
    }

    #[test]
    fn arveson_roundtrip_reproduces_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..3 {
            let theta = random_unital(&mut rng, 2, 3);
            for n in 1..=4 {
                let rebuilt = reconstruct_from_arveson(&theta, n).unwrap();
                let power = theta.power(n).unwrap();
                assert!(
                    map_distance(&rebuilt, &power) < 1e-8,
                    "n = {} mismatch",
                    n
                );
            }
        }
    }
}
