//! Operator tuples as representations of a subproduct system: the defining
//! zero-set condition, the Poisson kernel and transform, the von Neumann
//! inequality, and maximal pieces of representations.

use std::collections::HashMap;

use ndarray::{s, Array2};
use ndarray_linalg::{c64, JobSvd, SVDDC};

use crate::error::{Error, Result};
use crate::fock::FockOperators;
use crate::kernel::{
    adjoint, complement, intersect, op_norm, psd_sqrt, CMatrix, Subspace,
    CHECK_TOL, RANK_TOL,
};
use crate::ncpoly::{NcPolynomial, Word};
use crate::sps::SubproductSystem;

/// A d-tuple of k x k matrices T_1..T_d with its cached row norm
/// || [T_1 ... T_d] ||.
#[derive(Debug, Clone)]
pub struct RepTuple {
    d: usize,
    k: usize,
    matrices: Vec<CMatrix>,
    row_norm: f64,
}

impl RepTuple {
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Invalid("tuple must have at least one matrix".into()));
        }
        let k = matrices[0].nrows();
        for m in &matrices {
            crate::kernel::ensure_finite(m)?;
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::Invalid(
                    "tuple matrices must be square of equal size".into(),
                ));
            }
        }
        let d = matrices.len();
        let mut row = Array2::zeros((k, k * d));
        for (i, m) in matrices.iter().enumerate() {
            row.slice_mut(s![.., i * k..(i + 1) * k]).assign(m);
        }
        let row_norm = op_norm(&row);
        Ok(RepTuple {
            d,
            k,
            matrices,
            row_norm,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self, i: usize) -> &CMatrix {
        &self.matrices[i]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn row_norm(&self) -> f64 {
        self.row_norm
    }

    pub fn scaled(&self, by: f64) -> RepTuple {
        let mats = self
            .matrices
            .iter()
            .map(|m| m.mapv(|v| v * by))
            .collect();
        RepTuple::new(mats).expect("scaling preserves shape")
    }

    /// T^alpha = T_{alpha_1} ... T_{alpha_n}.
    pub fn word_eval(&self, w: &Word) -> CMatrix {
        let mut m = Array2::eye(self.k);
        for &l in w.letters() {
            m = m.dot(&self.matrices[l as usize - 1]);
        }
        m
    }

    pub fn poly_eval(&self, p: &NcPolynomial) -> CMatrix {
        let mut m = Array2::<c64>::zeros((self.k, self.k));
        for (w, c) in p.terms() {
            m = m + self.word_eval(w).mapv(|v| v * *c);
        }
        m
    }

    /// The k x d^n k row matrix with block alpha equal to T^alpha, built by
    /// the recursion T-tilde_n = [T_1 T-tilde_{n-1} | ... | T_d T-tilde_{n-1}].
    fn row_power(&self, n: usize) -> CMatrix {
        let mut w: CMatrix = Array2::eye(self.k);
        for _ in 0..n {
            let cols = w.ncols();
            let mut next = Array2::zeros((self.k, cols * self.d));
            for i in 0..self.d {
                next.slice_mut(s![.., i * cols..(i + 1) * cols])
                    .assign(&self.matrices[i].dot(&w));
            }
            w = next;
        }
        w
    }

    /// Given B with d^m blocks of k rows (block beta = M_beta), return the
    /// matrix with block (beta i) = T_i* M_beta.
    fn append_adjoint_letters(&self, b: &CMatrix) -> CMatrix {
        let k = self.k;
        let blocks = b.nrows() / k;
        let mut out = Array2::zeros((b.nrows() * self.d, b.ncols()));
        for beta in 0..blocks {
            let src = b.slice(s![beta * k..(beta + 1) * k, ..]);
            for i in 0..self.d {
                let dst = (beta * self.d + i) * k;
                out.slice_mut(s![dst..dst + k, ..])
                    .assign(&adjoint(&self.matrices[i]).dot(&src));
            }
        }
        out
    }
}

/// Per-degree residuals of the representation condition
/// T-tilde^n (P_{X(n)}-perp (x) I) = 0.
#[derive(Debug, Clone)]
pub struct RepReport {
    pub residuals: Vec<(usize, f64)>,
    pub max_residual: f64,
    pub row_norm: f64,
    pub row_contractive: bool,
    pub pass: bool,
}

/// Checks whether T annihilates the ideal of X degree by degree: the residual
/// at degree n is || T-tilde^n (C_n (x) I_k) || with C_n a frame of X(n)-perp.
pub fn is_representation(x: &SubproductSystem, t: &RepTuple, tol: f64) -> Result<RepReport> {
    if t.d() != x.d() {
        return Err(Error::Invalid(format!(
            "tuple has {} matrices, system alphabet is {}",
            t.d(),
            x.d()
        )));
    }
    let k = t.k();
    let mut residuals = Vec::new();
    let mut max_residual: f64 = 0.0;
    for n in 1..=x.n_max() {
        let comp = complement(x.fiber(n));
        if comp.dim() == 0 {
            residuals.push((n, 0.0));
            continue;
        }
        let row = t.row_power(n);
        // row . (C (x) I_k): block l = sum_alpha C[alpha, l] T^alpha.
        let c = comp.frame();
        let mut m = Array2::<c64>::zeros((k, comp.dim() * k));
        for l in 0..comp.dim() {
            let mut block = Array2::<c64>::zeros((k, k));
            for alpha in 0..c.nrows() {
                let w = c[[alpha, l]];
                if w != c64::new(0.0, 0.0) {
                    block = block + row.slice(s![.., alpha * k..(alpha + 1) * k]).mapv(|v| v * w);
                }
            }
            m.slice_mut(s![.., l * k..(l + 1) * k]).assign(&block);
        }
        let r = op_norm(&m);
        max_residual = max_residual.max(r);
        residuals.push((n, r));
    }
    let row_contractive = t.row_norm() <= 1.0 + tol;
    Ok(RepReport {
        residuals,
        max_residual,
        row_norm: t.row_norm(),
        row_contractive,
        pass: max_residual <= tol && row_contractive,
    })
}

/// Per-degree coefficient blocks of a vector in the truncated Fock space
/// tensored with C^k: blocks[n] is (dim X(n) * k) x k.
#[derive(Clone)]
struct GradedColumns {
    blocks: Vec<CMatrix>,
    k: usize,
}

/// The capped Poisson kernel K_r(T) up to degree `cap`: degree-n block
/// (F_n* (x) I_k) . [r^n Delta(rT)^{1/2} T^{w*}]_w for n < cap. The top
/// block omits the defect factor Delta^{1/2}; by the telescoping identity
/// sum_{j >= 0} r^{2j} Phi^j(Delta(rT)) = I (Phi(a) = sum T_i a T_i*) this
/// makes the truncated kernel an exact isometry, absorbing the infinite
/// tail instead of discarding it.
fn poisson_kernel(
    t: &RepTuple,
    x: &SubproductSystem,
    cap: usize,
    r: f64,
) -> Result<GradedColumns> {
    let k = t.k();
    let d = t.d();
    // Delta(rT) = I - r^2 sum T_i T_i*.
    let mut delta: CMatrix = Array2::eye(k);
    for m in t.matrices() {
        delta = delta - m.dot(&adjoint(m)).mapv(|v| v * (r * r));
    }
    let delta_half = psd_sqrt(&delta, 1e-10)?;
    // Ambient word column W_n: block w = r^n T^{w*}, first letter most
    // significant, via W_n = r . vstack_i(W_{n-1} T_i*).
    let mut word_col: CMatrix = Array2::eye(k);
    let mut blocks = Vec::with_capacity(cap + 1);
    for n in 0..=cap {
        if n > 0 {
            let rows = word_col.nrows();
            let mut next = Array2::zeros((rows * d, word_col.ncols()));
            for i in 0..d {
                next.slice_mut(s![i * rows..(i + 1) * rows, ..])
                    .assign(&word_col.dot(&adjoint(t.matrix(i))).mapv(|v| v * r));
            }
            word_col = next;
        }
        // Contract the word index with the fiber frame:
        // (F_n* (x) I_k) W_n, via the d^n x k^2 reshape.
        let f = x.fiber(n).frame();
        let dn = d.pow(n as u32);
        let mn = f.ncols();
        let flat = word_col
            .view()
            .into_shape((dn, k * k))
            .expect("contiguous reshape");
        let contracted = adjoint(f).dot(&flat.to_owned());
        let mut block = contracted
            .into_shape((mn * k, k))
            .expect("contiguous reshape");
        if n < cap {
            // Apply Delta^{1/2} inside each k x k cell; the top degree
            // carries the exact tail instead.
            for l in 0..mn {
                let cell = block.slice(s![l * k..(l + 1) * k, ..]).to_owned();
                block
                    .slice_mut(s![l * k..(l + 1) * k, ..])
                    .assign(&delta_half.dot(&cell));
            }
        }
        blocks.push(block);
    }
    Ok(GradedColumns { blocks, k })
}

/// Apply S_i* (x) I_k to graded columns: degree-n output block is
/// (B_i[n]* (x) I_k) times the degree-(n+1) block. The top degree is lost.
fn apply_shift_adjoint(fock: &FockOperators, y: &GradedColumns, letter: usize) -> GradedColumns {
    let k = y.k;
    let top = y.blocks.len() - 1;
    let mut blocks = Vec::with_capacity(top);
    for n in 0..top {
        let b = fock.block(letter, n); // X(n) -> X(n+1)
        let m_src = fock.fiber_dim(n + 1);
        let m_dst = fock.fiber_dim(n);
        let flat = y.blocks[n + 1]
            .view()
            .into_shape((m_src, k * k))
            .expect("contiguous reshape");
        let contracted = adjoint(b).dot(&flat.to_owned());
        blocks.push(
            contracted
                .into_shape((m_dst * k, k))
                .expect("contiguous reshape"),
        );
    }
    GradedColumns { blocks, k }
}

fn graded_inner(a: &GradedColumns, b: &GradedColumns) -> CMatrix {
    let k = a.k;
    let degrees = a.blocks.len().min(b.blocks.len());
    let mut out = Array2::<c64>::zeros((k, k));
    for n in 0..degrees {
        out = out + adjoint(&a.blocks[n]).dot(&b.blocks[n]);
    }
    out
}

/// Poisson transform Psi(S^alpha S^beta*) = K_r(T)* (S^alpha S^beta* (x) I_k)
/// K_r(T) on the degree-N_trunc truncation, rescaled by r^{-(|alpha|+|beta|)}
/// to undo the gauge scaling of the graded element, so the result
/// approximates the r -> 1 limit T^alpha T^beta* directly.
///
/// The two kernel copies are capped so that after peeling alpha and beta
/// both sides cover degrees 0..N_trunc - max(|alpha|, |beta|) with matching
/// tail caps; together with the exact-isometry cap of `poisson_kernel` the
/// remaining error is pure floating-point noise whenever T represents X.
pub fn poisson_transform(
    t: &RepTuple,
    x: &SubproductSystem,
    alpha: &Word,
    beta: &Word,
    n_trunc: usize,
    r: f64,
) -> Result<CMatrix> {
    let fock = FockOperators::build(x);
    let mut eval = PoissonEvaluator::new(&fock, t, n_trunc, r)?;
    eval.transform(alpha, beta)
}

/// Re-usable Poisson transform for a fixed representation and system: the
/// Fock operators are shared and kernel columns are cached across calls, so
/// evaluating the transform on many word pairs costs one kernel per distinct
/// truncation cap plus one shift-adjoint chain per distinct peeled word.
pub struct PoissonEvaluator<'a> {
    fock: &'a FockOperators,
    t: &'a RepTuple,
    n_trunc: usize,
    r: f64,
    kernels: HashMap<usize, GradedColumns>,
    peeled: HashMap<(usize, Vec<u8>), GradedColumns>,
}

impl<'a> PoissonEvaluator<'a> {
    pub fn new(
        fock: &'a FockOperators,
        t: &'a RepTuple,
        n_trunc: usize,
        r: f64,
    ) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Invalid(format!("r = {} outside (0,1)", r)));
        }
        if fock.system().n_max() < n_trunc {
            return Err(Error::DegreeOutOfRange(n_trunc, fock.system().n_max()));
        }
        if t.row_norm() > 1.0 + CHECK_TOL {
            return Err(Error::Invalid(format!(
                "row norm {} exceeds 1; the Poisson kernel requires a row contraction",
                t.row_norm()
            )));
        }
        Ok(PoissonEvaluator {
            fock,
            t,
            n_trunc,
            r,
            kernels: HashMap::new(),
            peeled: HashMap::new(),
        })
    }

    /// Kernel columns at the given cap with the letters of `word` peeled off
    /// by S_i* (x) I, memoized by (cap, word).
    fn peeled_columns(&mut self, cap: usize, word: &Word) -> Result<&GradedColumns> {
        let key = (cap, word.letters().to_vec());
        if !self.peeled.contains_key(&key) {
            if !self.kernels.contains_key(&cap) {
                let k = poisson_kernel(self.t, self.fock.system(), cap, self.r)?;
                self.kernels.insert(cap, k);
            }
            let mut cols: Option<GradedColumns> = None;
            for &l in word.letters() {
                let src = cols.as_ref().unwrap_or(&self.kernels[&cap]);
                cols = Some(apply_shift_adjoint(self.fock, src, l as usize - 1));
            }
            let cols = cols.unwrap_or_else(|| self.kernels[&cap].clone());
            self.peeled.insert(key.clone(), cols);
        }
        Ok(&self.peeled[&key])
    }

    pub fn transform(&mut self, alpha: &Word, beta: &Word) -> Result<CMatrix> {
        if self.n_trunc < alpha.len() + beta.len() {
            return Err(Error::DegreeOutOfRange(
                alpha.len() + beta.len(),
                self.n_trunc,
            ));
        }
        // Both peeled columns cover degrees 0..common with matching caps.
        let common = self.n_trunc - alpha.len().max(beta.len());
        self.peeled_columns(common + alpha.len(), alpha)?;
        let yb = self
            .peeled_columns(common + beta.len(), beta)?
            .clone();
        let ya = &self.peeled[&(common + alpha.len(), alpha.letters().to_vec())];
        let scale = self.r.powi(-((alpha.len() + beta.len()) as i32));
        Ok(graded_inner(ya, &yb).mapv(|v| v * scale))
    }
}

#[derive(Debug, Clone)]
pub struct VnReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Slack absorbing the truncated-shift norm underestimate.
pub const VN_SLACK: f64 = 1e-6;

/// von Neumann inequality || p(T) q(T)* || <= || p(S^X) q(S^X)* ||, the right
/// side evaluated on the truncated Fock space.
pub fn vn_inequality_check(
    x: &SubproductSystem,
    t: &RepTuple,
    p: &NcPolynomial,
    q: &NcPolynomial,
) -> Result<VnReport> {
    let deg = |poly: &NcPolynomial| poly.terms().map(|(w, _)| w.len()).max().unwrap_or(0);
    if deg(p) + deg(q) + 4 > x.n_max() {
        return Err(Error::Invalid(format!(
            "degree margin violated: deg p + deg q + 4 = {} > N = {}",
            deg(p) + deg(q) + 4,
            x.n_max()
        )));
    }
    let lhs = op_norm(&t.poly_eval(p).dot(&adjoint(&t.poly_eval(q))));
    let fock = FockOperators::build(x);
    let ps = fock.poly_matrix(p);
    let qs = fock.poly_matrix(q);
    let rhs = op_norm(&ps.dot(&adjoint(&qs)));
    Ok(VnReport {
        lhs,
        rhs,
        pass: lhs <= rhs + VN_SLACK,
    })
}

/// N-truncated maximal X-piece of a representation T of Y: the largest
/// subspace K with (P_{X(n)}-perp (x) P_K) T-tilde_n* P_K = 0 for n <= N,
/// found as the fixed point of a null-space iteration.
pub fn maximal_piece(
    x: &SubproductSystem,
    y: &SubproductSystem,
    t: &RepTuple,
    tol: f64,
) -> Result<Subspace> {
    if x.d() != y.d() || x.n_max() != y.n_max() {
        return Err(Error::Invalid(
            "systems must share alphabet size and truncation level".into(),
        ));
    }
    for n in 0..=x.n_max() {
        if !y.fiber(n).contains_space(x.fiber(n), CHECK_TOL) {
            return Err(Error::Invalid(format!(
                "X({}) is not contained in Y({})",
                n, n
            )));
        }
    }
    if t.d() != y.d() {
        return Err(Error::Invalid("tuple size does not match the systems".into()));
    }
    let k = t.k();
    let comps: Vec<Subspace> = (1..=x.n_max()).map(|n| complement(x.fiber(n))).collect();
    let mut current = Subspace::full(k, RANK_TOL);
    loop {
        let fk = current.frame();
        let dim_k = current.dim();
        if dim_k == 0 {
            return Ok(current);
        }
        // Stack, over degrees n, the matrices (C_n* (x) F_K*) T-tilde_n*.
        let mut rows: Vec<CMatrix> = Vec::new();
        let mut ambient: CMatrix = Array2::eye(k);
        for n in 1..=x.n_max() {
            ambient = t.append_adjoint_letters(&ambient);
            let comp = &comps[n - 1];
            if comp.dim() == 0 {
                continue;
            }
            let dn = x.d().pow(n as u32);
            // Project each k x k block onto K: (I (x) F_K*) then contract
            // the word index against the complement frame.
            let flat = ambient
                .view()
                .into_shape((dn, k * k))
                .expect("contiguous reshape");
            let weighted = adjoint(comp.frame()).dot(&flat.to_owned());
            // weighted: comp.dim() x k^2, rows are k x k blocks.
            let stacked = weighted
                .into_shape((comp.dim() * k, k))
                .expect("contiguous reshape");
            // Apply F_K* on the left of each k x k block.
            let mut projected = Array2::<c64>::zeros((comp.dim() * dim_k, k));
            for l in 0..comp.dim() {
                let block = stacked.slice(s![l * k..(l + 1) * k, ..]);
                projected
                    .slice_mut(s![l * dim_k..(l + 1) * dim_k, ..])
                    .assign(&adjoint(fk).dot(&block));
            }
            rows.push(projected);
        }
        let total: usize = rows.iter().map(|m| m.nrows()).sum();
        if total == 0 {
            return Ok(current);
        }
        let mut m = Array2::<c64>::zeros((total, k));
        let mut at = 0;
        for r in &rows {
            m.slice_mut(s![at..at + r.nrows(), ..]).assign(r);
            at += r.nrows();
        }
        // Null space of M, intersected with the current K. The rank cutoff
        // is absolute (relative to the tuple scale, which is at most 1 for
        // contractions): a numerically-zero M must yield the full space.
        let (_, sv, vt) = m.svddc(JobSvd::All)?;
        let vt = vt.expect("svd did not return vt");
        let cutoff = tol * sv.iter().cloned().fold(0.0, f64::max).max(1.0);
        let rank = sv.iter().filter(|&&x| x > cutoff).count();
        let null = Subspace::from_frame(adjoint(&vt).slice(s![.., rank..]).to_owned(), tol);
        let next = intersect(&null, &current)?;
        if next.dim() == current.dim() {
            return Ok(next);
        }
        current = next;
    }
}

/// Compression P_K T_i |_K of a tuple to a subspace, in the frame coordinates
/// of K.
pub fn compress(t: &RepTuple, k_space: &Subspace) -> Result<RepTuple> {
    let f = k_space.frame();
    let mats = t
        .matrices()
        .iter()
        .map(|m| adjoint(f).dot(&m.dot(f)))
        .collect();
    RepTuple::new(mats)
}
