//! Truncated Fock space of a subproduct system, explicit shift matrices,
//! Cuntz-type and subshift relation checks, and exact graded decomposition.
//!
//! Truncation semantics: S_i maps the degree-n block into the degree-(n+1)
//! block and annihilates the top degree. Every relation check declares the
//! degree window on which it measures its residual.

use std::collections::BTreeSet;

use ndarray::{s, Array1, Array2};
use ndarray_linalg::c64;

use crate::error::{Error, Result};
use crate::kernel::{adjoint, op_norm, CMatrix, CHECK_TOL};
use crate::ncpoly::{NcPolynomial, Word};
use crate::sps::SubproductSystem;

pub struct FockOperators {
    system: SubproductSystem,
    offsets: Vec<usize>,
    total_dim: usize,
    /// blocks[i][n]: the matrix of S_i from the X(n) frame to the X(n+1)
    /// frame, i.e. F_{n+1}^* (e_i (x) F_n).
    blocks: Vec<Vec<CMatrix>>,
}

/// One residual line of a relation check.
#[derive(Debug, Clone)]
pub struct RelationCheck {
    pub name: String,
    /// Inclusive degree window on which the residual is measured.
    pub window: (usize, usize),
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SubshiftReport {
    pub checks: Vec<RelationCheck>,
    pub pass: bool,
}

impl FockOperators {
    pub fn build(system: &SubproductSystem) -> Self {
        let d = system.d();
        let n_max = system.n_max();
        let mut offsets = Vec::with_capacity(n_max + 2);
        let mut total = 0usize;
        for n in 0..=n_max {
            offsets.push(total);
            total += system.fiber(n).dim();
        }
        offsets.push(total);
        let mut blocks = Vec::with_capacity(d);
        for i in 0..d {
            let mut per_degree = Vec::with_capacity(n_max);
            for n in 0..n_max {
                let fn_ = system.fiber(n).frame();
                let fn1 = system.fiber(n + 1).frame();
                let dn = d.pow(n as u32);
                // Rows i*d^n .. (i+1)*d^n of F_{n+1} are the e_i (x) . slice.
                let slice = fn1.slice(s![i * dn..(i + 1) * dn, ..]).to_owned();
                per_degree.push(adjoint(&slice).dot(fn_));
            }
            blocks.push(per_degree);
        }
        FockOperators {
            system: system.clone(),
            offsets,
            total_dim: total,
            blocks,
        }
    }

    pub fn system(&self) -> &SubproductSystem {
        &self.system
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets[..=self.system.n_max()]
    }

    pub fn fiber_dim(&self, n: usize) -> usize {
        self.system.fiber(n).dim()
    }

    /// Degree-n block of S_i (maps X(n) coefficients to X(n+1) coefficients).
    pub fn block(&self, i: usize, n: usize) -> &CMatrix {
        &self.blocks[i][n]
    }

    /// Dense total_dim x total_dim matrix of S_i.
    pub fn shift_matrix(&self, i: usize) -> CMatrix {
        let mut m = Array2::zeros((self.total_dim, self.total_dim));
        for n in 0..self.system.n_max() {
            let b = &self.blocks[i][n];
            let (r0, c0) = (self.offsets[n + 1], self.offsets[n]);
            m.slice_mut(s![r0..r0 + b.nrows(), c0..c0 + b.ncols()])
                .assign(b);
        }
        m
    }

    /// Product S_{w_1} ... S_{w_k} as a dense matrix.
    pub fn word_matrix(&self, word: &Word) -> CMatrix {
        let mut m = Array2::eye(self.total_dim);
        for &l in word.letters().iter().rev() {
            m = self.shift_matrix(l as usize - 1).dot(&m);
        }
        m
    }

    /// p(S) for a polynomial p.
    pub fn poly_matrix(&self, p: &NcPolynomial) -> CMatrix {
        let mut m = Array2::zeros((self.total_dim, self.total_dim));
        for (w, c) in p.terms() {
            m = m + self.word_matrix(w).mapv(|v| v * *c);
        }
        m
    }

    /// Operator norm of the row [S_1 ... S_d].
    pub fn row_norm(&self) -> f64 {
        let d = self.system.d();
        let mut row = Array2::zeros((self.total_dim, self.total_dim * d));
        for i in 0..d {
            row.slice_mut(s![.., i * self.total_dim..(i + 1) * self.total_dim])
                .assign(&self.shift_matrix(i));
        }
        op_norm(&row)
    }

    /// Coefficients (in the degree-|w| fiber frame) of S^w applied to the
    /// vacuum.
    fn word_applied_to_vacuum(&self, word: &Word) -> Option<Array1<c64>> {
        if word.len() > self.system.n_max() {
            return None;
        }
        let mut v = Array1::from_elem(1, c64::new(1.0, 0.0));
        for (step, &l) in word.letters().iter().rev().enumerate() {
            let b = &self.blocks[l as usize - 1][step];
            v = b.dot(&v);
        }
        Some(v)
    }

    /// || p(S) Omega ||.
    pub fn vacuum_residual(&self, p: &NcPolynomial) -> Result<f64> {
        let n = p.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
        if n > self.system.n_max() {
            return Err(Error::DegreeOutOfRange(n, self.system.n_max()));
        }
        let mut acc = Array1::<c64>::zeros(self.system.fiber(n).dim());
        for (w, c) in p.terms() {
            let v = self
                .word_applied_to_vacuum(w)
                .ok_or(Error::DegreeOutOfRange(w.len(), self.system.n_max()))?;
            acc = acc + v.mapv(|x| x * *c);
        }
        Ok(acc.mapv(|x| x.norm_sqr()).sum().sqrt())
    }

    /// Ideal membership through the shift: p(S) annihilates the vacuum iff
    /// p lies in the ideal of the system.
    pub fn membership_via_shift(&self, p: &NcPolynomial, tol: f64) -> Result<bool> {
        if p.is_zero() {
            return Ok(true);
        }
        Ok(self.vacuum_residual(p)? <= tol * p.coeff_norm())
    }

    /// Residual of I - sum_{|alpha|=k} S^alpha S^alpha* = P_W with
    /// W = (+)_{j<k} X(j), measured on the degrees <= N-k sub-block.
    pub fn check_cuntz_defect(&self, k: usize) -> Result<RelationCheck> {
        let n_max = self.system.n_max();
        if k < 1 || k > n_max {
            return Err(Error::DegreeOutOfRange(k, n_max));
        }
        let d = self.system.d();
        let shifts: Vec<CMatrix> = (0..d).map(|i| self.shift_matrix(i)).collect();
        let mut sum = Array2::<c64>::zeros((self.total_dim, self.total_dim));
        let mut stack: Vec<CMatrix> = vec![Array2::eye(self.total_dim)];
        for _ in 0..k {
            let mut next = Vec::with_capacity(stack.len() * d);
            for m in &stack {
                for sh in &shifts {
                    next.push(sh.dot(m));
                }
            }
            stack = next;
        }
        for m in &stack {
            sum = sum + m.dot(&adjoint(m));
        }
        let mut defect = Array2::eye(self.total_dim) - sum;
        // subtract P_W
        for idx in 0..self.offsets[k] {
            defect[[idx, idx]] -= c64::new(1.0, 0.0);
        }
        let hi = n_max - k;
        let end = self.offsets[hi + 1];
        let sub = defect.slice(s![..end, ..end]).to_owned();
        let residual = op_norm(&sub);
        Ok(RelationCheck {
            name: format!("cuntz_defect_k{}", k),
            window: (0, hi),
            residual,
            pass: residual <= CHECK_TOL,
        })
    }

    /// Gauge-graded part of T: keep exactly the blocks mapping degree m to
    /// degree m + n, zero the rest. The finite grading makes the torus
    /// average a block extraction.
    pub fn graded_component_extract(&self, t: &CMatrix, n: i64) -> CMatrix {
        let n_max = self.system.n_max();
        let mut out = Array2::zeros((self.total_dim, self.total_dim));
        for src in 0..=n_max as i64 {
            let dst = src + n;
            if dst < 0 || dst > n_max as i64 {
                continue;
            }
            let (src, dst) = (src as usize, dst as usize);
            let (r0, r1) = (self.offsets[dst], self.offsets[dst + 1]);
            let (c0, c1) = (self.offsets[src], self.offsets[src + 1]);
            out.slice_mut(s![r0..r1, c0..c1])
                .assign(&t.slice(s![r0..r1, c0..c1]));
        }
        out
    }

    /// Words of the degree-n fiber, available when the fiber is a coordinate
    /// subspace (subshift and full systems).
    pub fn fiber_words(&self, n: usize) -> Option<Vec<Word>> {
        let d = self.system.d();
        self.system.fiber(n).coordinate_indices().map(|ix| {
            ix.into_iter()
                .map(|i| Word::from_index(i, n, d))
                .collect()
        })
    }

    fn principal_block(&self, m: &CMatrix, lo: usize, hi: usize) -> CMatrix {
        let (a, b) = (self.offsets[lo], self.offsets[hi + 1]);
        m.slice(s![a..b, a..b]).to_owned()
    }

    /// Cuntz--Krieger style relations for a k-step subshift system:
    /// (a) S_i* S_j = 0 for i != j, (b) sum S_i S_i* = I away from the
    /// vacuum, (c) S_i* S_i = sum_{alpha in E_i^k} S^alpha S^alpha*.
    pub fn subshift_relations_check(
        &self,
        forbidden: &[Word],
        k: usize,
    ) -> Result<SubshiftReport> {
        let n_max = self.system.n_max();
        let d = self.system.d();
        if let Some(max_len) = forbidden.iter().map(|w| w.len()).max() {
            if max_len > k + 1 {
                return Err(Error::Invalid(format!(
                    "not a {}-step SFT: forbidden word of length {}",
                    k, max_len
                )));
            }
        }
        if k + 1 > n_max {
            return Err(Error::DegreeOutOfRange(k + 1, n_max));
        }
        let lang_k: Vec<Word> = self
            .fiber_words(k)
            .ok_or_else(|| Error::Invalid("fibers are not coordinate subspaces".into()))?;
        let lang_k1: BTreeSet<Vec<u8>> = self
            .fiber_words(k + 1)
            .ok_or_else(|| Error::Invalid("fibers are not coordinate subspaces".into()))?
            .into_iter()
            .map(|w| w.letters().to_vec())
            .collect();

        let shifts: Vec<CMatrix> = (0..d).map(|i| self.shift_matrix(i)).collect();
        let mut checks = Vec::new();

        // (a) orthogonal ranges, full space.
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    let m = adjoint(&shifts[i]).dot(&shifts[j]);
                    worst = worst.max(op_norm(&m));
                }
            }
        }
        checks.push(RelationCheck {
            name: "orthogonal_ranges".into(),
            window: (0, n_max),
            residual: worst,
            pass: worst <= 1e-12,
        });

        // (b) sum S_i S_i* = I on degrees [1, N-1].
        let mut sum = Array2::<c64>::zeros((self.total_dim, self.total_dim));
        for sh in &shifts {
            sum = sum + sh.dot(&adjoint(sh));
        }
        let diff = sum - Array2::<c64>::eye(self.total_dim);
        let residual = op_norm(&self.principal_block(&diff, 1, n_max - 1));
        checks.push(RelationCheck {
            name: "row_coisometry".into(),
            window: (1, n_max - 1),
            residual,
            pass: residual <= CHECK_TOL,
        });

        // (c) per letter, on degrees [k, N-1].
        for i in 0..d {
            let mut prefix = vec![i as u8 + 1];
            let e_i_k: Vec<Word> = lang_k
                .iter()
                .filter(|alpha| {
                    prefix.truncate(1);
                    prefix.extend_from_slice(alpha.letters());
                    lang_k1.contains(&prefix)
                })
                .cloned()
                .collect();
            let mut rhs = Array2::<c64>::zeros((self.total_dim, self.total_dim));
            for alpha in &e_i_k {
                let m = self.word_matrix(alpha);
                rhs = rhs + m.dot(&adjoint(&m));
            }
            let lhs = adjoint(&shifts[i]).dot(&shifts[i]);
            let diff = lhs - rhs;
            let residual = op_norm(&self.principal_block(&diff, k, n_max - 1));
            checks.push(RelationCheck {
                name: format!("cuntz_krieger_letter_{}", i + 1),
                window: (k, n_max - 1),
                residual,
                pass: residual <= CHECK_TOL,
            });
        }
        let pass = checks.iter().all(|c| c.pass);
        Ok(SubshiftReport { checks, pass })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::RANK_TOL;
    use crate::ncpoly::parse_poly;

    fn golden_mean(n_max: usize) -> SubproductSystem {
        let w = Word::new(vec![2, 2], 2).unwrap();
        SubproductSystem::from_forbidden_words(2, &[w], n_max, true, RANK_TOL).unwrap()
    }

    #[test]
    fn shift_blocks_have_fiber_shapes() {
        let x = SubproductSystem::symmetric(2, 4, RANK_TOL);
        let f = FockOperators::build(&x);
        for n in 0..4 {
            assert_eq!(f.block(0, n).dim(), (x.fiber(n + 1).dim(), x.fiber(n).dim()));
        }
        assert_eq!(f.total_dim(), x.dims().iter().sum::<usize>());
    }

    #[test]
    fn full_shift_row_is_coisometric_off_vacuum() {
        let x = SubproductSystem::full(2, 5, RANK_TOL);
        let f = FockOperators::build(&x);
        let mut sum = Array2::<c64>::zeros((f.total_dim(), f.total_dim()));
        for i in 0..2 {
            let s = f.shift_matrix(i);
            sum = sum + s.dot(&adjoint(&s));
        }
        // Identity except at the vacuum and nothing above the top.
        for n in 1..=5 {
            let idx = f.offsets()[n];
            assert!((sum[[idx, idx]] - c64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(sum[[0, 0]].norm() < 1e-12);
    }

    #[test]
    fn row_norm_is_one_for_full_system() {
        let f = FockOperators::build(&SubproductSystem::full(2, 4, RANK_TOL));
        assert!((f.row_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cuntz_defect_small_on_window() {
        for x in [
            SubproductSystem::symmetric(2, 6, RANK_TOL),
            SubproductSystem::full(2, 6, RANK_TOL),
            golden_mean(6),
        ] {
            let f = FockOperators::build(&x);
            for k in 1..=2 {
                let check = f.check_cuntz_defect(k).unwrap();
                assert!(check.pass, "k={} residual={}", k, check.residual);
                assert_eq!(check.window, (0, 6 - k));
            }
        }
    }

    #[test]
    fn cuntz_defect_rejects_bad_degree() {
        let f = FockOperators::build(&SubproductSystem::full(2, 3, RANK_TOL));
        assert!(f.check_cuntz_defect(0).is_err());
        assert!(f.check_cuntz_defect(4).is_err());
    }

    #[test]
    fn vacuum_residual_matches_ideal_distance() {
        let ideal = crate::ncpoly::HomogeneousIdeal::parse(2, &["x1 x2 - x2 x1"]).unwrap();
        let x = SubproductSystem::from_ideal(&ideal, 5, RANK_TOL).unwrap();
        let f = FockOperators::build(&x);
        for text in ["x1 x2", "x1 x2 - x2 x1", "x1 x1 x2 - x1 x2 x1", "x2 x2 x1"] {
            let p = parse_poly(text, 2).unwrap();
            let via_shift = f.vacuum_residual(&p).unwrap();
            let via_linear = ideal.membership_residual(&p).unwrap();
            assert!(
                (via_shift - via_linear).abs() < 1e-10,
                "{}: {} vs {}",
                text,
                via_shift,
                via_linear
            );
        }
        let member = parse_poly("x1 x1 x2 - x1 x2 x1", 2).unwrap();
        assert!(f.membership_via_shift(&member, 1e-9).unwrap());
        let non_member = parse_poly("x1 x2", 2).unwrap();
        assert!(!f.membership_via_shift(&non_member, 1e-9).unwrap());
    }

    #[test]
    fn graded_extraction_recovers_pure_degrees() {
        let x = golden_mean(4);
        let f = FockOperators::build(&x);
        let s1 = f.shift_matrix(0);
        let extracted = f.graded_component_extract(&s1, 1);
        assert!(op_norm(&(&extracted - &s1)) < 1e-14);
        assert!(op_norm(&f.graded_component_extract(&s1, 0)) < 1e-14);
        // A mixed-degree operator splits cleanly.
        let s2 = f.shift_matrix(1);
        let mixed = &s1 + &s2.dot(&s2.t().mapv(|v| v.conj()));
        let deg1 = f.graded_component_extract(&mixed, 1);
        assert!(op_norm(&(&deg1 - &s1)) < 1e-14);
    }

    #[test]
    fn subshift_relations_golden_mean() {
        let x = golden_mean(7);
        let f = FockOperators::build(&x);
        let forbidden = vec![Word::new(vec![2, 2], 2).unwrap()];
        let report = f.subshift_relations_check(&forbidden, 1).unwrap();
        assert!(report.pass);
        assert_eq!(report.checks.len(), 4); // ranges, coisometry, two letters
        for c in &report.checks {
            assert!(c.pass, "{} residual {}", c.name, c.residual);
        }
    }

    #[test]
    fn subshift_relations_full_shift_zero_step() {
        let x = SubproductSystem::full(2, 5, RANK_TOL);
        let f = FockOperators::build(&x);
        let report = f.subshift_relations_check(&[], 0).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn subshift_relations_reject_wrong_memory() {
        let forbidden = vec![Word::new(vec![2, 1, 2], 2).unwrap()];
        let x = SubproductSystem::from_forbidden_words(2, &forbidden, 6, true, RANK_TOL)
            .unwrap();
        let f = FockOperators::build(&x);
        // Length-3 forbidden word needs k >= 2.
        assert!(f.subshift_relations_check(&forbidden, 1).is_err());
        assert!(f.subshift_relations_check(&forbidden, 2).unwrap().pass);
    }

    #[test]
    fn fiber_words_enumerate_language() {
        let x = golden_mean(5);
        let f = FockOperators::build(&x);
        let words = f.fiber_words(3).unwrap();
        assert_eq!(words.len(), 5);
        for w in &words {
            assert!(!w.letters().windows(2).any(|p| p == [2, 2]));
        }
        // Symmetric fibers are not coordinate subspaces.
        let sym = FockOperators::build(&SubproductSystem::symmetric(2, 3, RANK_TOL));
        assert!(sym.fiber_words(2).is_none());
    }
}
