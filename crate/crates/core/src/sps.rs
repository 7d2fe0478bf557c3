//! Construction, validation and classification of standard subproduct
//! systems over the natural numbers, truncated at a fixed degree.
//!
//! A system holds fibers X(0..N) with X(n) a subspace of C^{d^n} in the
//! lexicographic word basis; the defining inequality is
//! P_{X(m+n)} <= P_{X(m)} (x) P_{X(n)}.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{s, Array1, Array2};
use ndarray_linalg::c64;

use crate::error::{Error, Result};
use crate::kernel::{
    adjoint, complement, kron, op_norm, orthonormalize, CMatrix, Subspace, CHECK_TOL, RANK_TOL,
};
use crate::ncpoly::{HomogeneousIdeal, Word};

#[derive(Debug, Clone)]
pub struct SubproductSystem {
    d: usize,
    n_max: usize,
    fibers: Vec<Subspace>,
    tol: f64,
}

/// Per-pair residuals of the projection inequality, from `validate_standard`.
#[derive(Debug, Clone)]
pub struct StandardReport {
    pub residuals: Vec<(usize, usize, f64)>,
    pub max_residual: f64,
    pub worst: Option<(usize, usize)>,
    pub pass: bool,
}

impl SubproductSystem {
    pub fn from_fibers(d: usize, fibers: Vec<Subspace>, tol: f64) -> Result<Self> {
        if fibers.is_empty() || fibers[0].ambient_dim() != 1 {
            return Err(Error::Invalid(
                "fiber list must start with X(0) = C".into(),
            ));
        }
        for (n, f) in fibers.iter().enumerate() {
            if f.ambient_dim() != d.pow(n as u32) {
                return Err(Error::AmbientMismatch(f.ambient_dim(), d.pow(n as u32)));
            }
        }
        Ok(SubproductSystem {
            d,
            n_max: fibers.len() - 1,
            fibers,
            tol,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn fiber(&self, n: usize) -> &Subspace {
        &self.fibers[n]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.fibers.iter().map(|f| f.dim()).collect()
    }

    /// The full product system: X(n) = (C^d)^{(x) n}, no relations.
    pub fn full(d: usize, n_max: usize, tol: f64) -> Self {
        let fibers = (0..=n_max)
            .map(|n| Subspace::full(d.pow(n as u32), tol))
            .collect();
        SubproductSystem {
            d,
            n_max,
            fibers,
            tol,
        }
    }

    /// X_J(n) = E^{(x)n} minus the coefficient span of the degree-n part
    /// of the ideal J.
    pub fn from_ideal(ideal: &HomogeneousIdeal, n_max: usize, tol: f64) -> Result<Self> {
        let d = ideal.d();
        let mut fibers = vec![Subspace::full(1, tol)];
        for n in 1..=n_max {
            let component = ideal.graded_component(n, tol)?;
            fibers.push(complement(&component));
        }
        SubproductSystem::from_fibers(d, fibers, tol)
    }

    /// The maximal standard system with prescribed fibers X(1..k): for n > k,
    /// X(n) is the intersection over splits i+j=n of X(i) (x) E^{(x)j} and
    /// E^{(x)i} (x) X(j).
    pub fn maximal_from_fibers(
        d: usize,
        prescribed: &[Subspace],
        n_max: usize,
        tol: f64,
    ) -> Result<Self> {
        let k = prescribed.len();
        if k == 0 || k > n_max {
            return Err(Error::Invalid(
                "need prescribed fibers for degrees 1..k with 1 <= k <= N".into(),
            ));
        }
        for (idx, f) in prescribed.iter().enumerate() {
            let n = idx + 1;
            if f.ambient_dim() != d.pow(n as u32) {
                return Err(Error::AmbientMismatch(f.ambient_dim(), d.pow(n as u32)));
            }
        }
        let mut fibers = vec![Subspace::full(1, tol)];
        fibers.extend_from_slice(prescribed);
        // Consistency of the prescribed fibers: the projection inequalities
        // must already hold for i + j <= k.
        for n in 2..=k {
            for i in 1..n {
                let j = n - i;
                let left = project_out_residual(&fibers[n], &fibers[i], d.pow(j as u32), true);
                let right = project_out_residual(&fibers[n], &fibers[j], d.pow(i as u32), false);
                let residual = left.max(right);
                if residual > CHECK_TOL {
                    return Err(Error::InconsistentFibers { i, j, residual });
                }
            }
        }
        // Complements of all known fibers, extended degree by degree.
        let mut comps: Vec<Subspace> = fibers.iter().map(complement).collect();
        for n in k + 1..=n_max {
            let ambient = d.pow(n as u32);
            // X(n)^perp = sum over splits of X(i)^perp (x) E^j + E^i (x) X(j)^perp.
            let mut cols: Vec<CMatrix> = Vec::new();
            for i in 1..n {
                let j = n - i;
                if comps[i].dim() > 0 {
                    cols.push(kron(comps[i].frame(), &Array2::eye(d.pow(j as u32))));
                }
                if comps[j].dim() > 0 {
                    cols.push(kron(&Array2::eye(d.pow(i as u32)), comps[j].frame()));
                }
            }
            let total: usize = cols.iter().map(|c| c.ncols()).sum();
            let mut stacked = Array2::zeros((ambient, total));
            let mut at = 0;
            for c in &cols {
                stacked.slice_mut(s![.., at..at + c.ncols()]).assign(c);
                at += c.ncols();
            }
            let perp = orthonormalize(&stacked, tol)?;
            let fiber = complement(&perp);
            comps.push(perp);
            fibers.push(fiber);
        }
        SubproductSystem::from_fibers(d, fibers, tol)
    }

    /// Fibers spanned by basis words avoiding every word in `forbidden` as a
    /// factor. With `prune`, words are additionally required to occur in some
    /// bi-infinite sequence (dead ends of the higher-block graph removed).
    pub fn from_forbidden_words(
        d: usize,
        forbidden: &[Word],
        n_max: usize,
        prune: bool,
        tol: f64,
    ) -> Result<Self> {
        let language = SubshiftLanguage::new(d, forbidden, n_max, prune)?;
        let mut fibers = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let words = language.words(n);
            if words.is_empty() {
                return Err(Error::EmptyLanguage(n));
            }
            let indices: Vec<usize> = words.iter().map(|w| w.index(d)).collect();
            fibers.push(Subspace::from_basis_indices(
                d.pow(n as u32),
                &indices,
                tol,
            ));
        }
        SubproductSystem::from_fibers(d, fibers, tol)
    }

    /// Symmetric system: X(n) = range of the symmetrization projection,
    /// spanned by the normalized permutation-orbit sums of basis words.
    pub fn symmetric(d: usize, n_max: usize, tol: f64) -> Self {
        let mut fibers = vec![Subspace::full(1, tol)];
        for n in 1..=n_max {
            let ambient = d.pow(n as u32);
            let mut orbits: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
            for idx in 0..ambient {
                let w = Word::from_index(idx, n, d);
                let mut key = w.letters().to_vec();
                key.sort_unstable();
                orbits.entry(key).or_default().push(idx);
            }
            let mut frame = Array2::zeros((ambient, orbits.len()));
            for (c, (_, members)) in orbits.iter().enumerate() {
                let w = 1.0 / (members.len() as f64).sqrt();
                for &idx in members {
                    frame[[idx, c]] = c64::new(w, 0.0);
                }
            }
            fibers.push(Subspace::from_frame(frame, tol));
        }
        SubproductSystem {
            d,
            n_max,
            fibers,
            tol,
        }
    }

    /// q-commuting system: X_q(2) removes e_i (x) e_j - q_ij e_j (x) e_i.
    pub fn q_commuting(q: &CMatrix, n_max: usize, tol: f64) -> Result<Self> {
        check_admissible(q)?;
        let d = q.nrows();
        let mut cols = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                let mut v = Array1::<c64>::zeros(d * d);
                v[i * d + j] = c64::new(1.0, 0.0);
                v[j * d + i] = -q[[i, j]];
                cols.push(v);
            }
        }
        let mut mat = Array2::zeros((d * d, cols.len()));
        for (c, v) in cols.iter().enumerate() {
            mat.column_mut(c).assign(v);
        }
        let relations = orthonormalize(&mat, tol)?;
        let x2 = complement(&relations);
        SubproductSystem::maximal_from_fibers(
            d,
            &[Subspace::full(d, tol), x2],
            n_max,
            tol,
        )
    }

    /// X_A for a 2x2 matrix A: X_A(2) removes the single vector
    /// sum_ij a_ij e_i (x) e_j. A = 0 yields the full system.
    pub fn from_matrix_a(a: &CMatrix, n_max: usize, tol: f64) -> Result<Self> {
        if a.dim() != (2, 2) {
            return Err(Error::Invalid("A must be 2x2".into()));
        }
        let mut v = Array1::<c64>::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                v[i * 2 + j] = a[[i, j]];
            }
        }
        let mut mat = Array2::zeros((4, 1));
        mat.column_mut(0).assign(&v);
        let removed = orthonormalize(&mat, tol)?;
        let x2 = complement(&removed);
        SubproductSystem::maximal_from_fibers(
            2,
            &[Subspace::full(2, tol), x2],
            n_max,
            tol,
        )
    }

    /// Residuals of (P_m (x) P_n) P_{m+n} = P_{m+n} for all m, n >= 1 with
    /// m + n <= N.
    pub fn validate_standard(&self) -> StandardReport {
        let mut residuals = Vec::new();
        let mut max_residual: f64 = 0.0;
        let mut worst = None;
        for total in 2..=self.n_max {
            for m in 1..total {
                let n = total - m;
                let fm = &self.fibers[m];
                let fn_ = &self.fibers[n];
                let target = &self.fibers[total];
                if target.dim() == 0 {
                    residuals.push((m, n, 0.0));
                    continue;
                }
                let pair = kron(fm.frame(), fn_.frame());
                let coeff = adjoint(&pair).dot(target.frame());
                let resid = target.frame() - &pair.dot(&coeff);
                let r = op_norm(&resid);
                if r > max_residual {
                    max_residual = r;
                    worst = Some((m, n));
                }
                residuals.push((m, n, r));
            }
        }
        StandardReport {
            residuals,
            max_residual,
            worst,
            pass: max_residual <= CHECK_TOL,
        }
    }

    /// Graded components of the associated ideal I^X: degree-n component is
    /// the orthogonal complement of X(n).
    pub fn ideal_of(&self) -> Vec<Subspace> {
        (1..=self.n_max)
            .map(|n| complement(&self.fibers[n]))
            .collect()
    }

    /// Fiberwise equality within tol.
    pub fn fiberwise_equal(&self, other: &SubproductSystem, tol: f64) -> bool {
        self.d == other.d
            && self.n_max == other.n_max
            && (0..=self.n_max).all(|n| self.fibers[n].equals(&other.fibers[n], tol))
    }
}

/// Residual of P_fiber <= P_part (x) I (left = true) or I (x) P_part.
fn project_out_residual(fiber: &Subspace, part: &Subspace, other_dim: usize, left: bool) -> f64 {
    let eye = Array2::eye(other_dim);
    let frame = if left {
        kron(part.frame(), &eye)
    } else {
        kron(&eye, part.frame())
    };
    let coeff = adjoint(&frame).dot(fiber.frame());
    let resid = fiber.frame() - &frame.dot(&coeff);
    op_norm(&resid)
}

/// Allowed-word lists per length for a subshift of finite type.
pub struct SubshiftLanguage {
    d: usize,
    words: Vec<Vec<Word>>,
}

impl SubshiftLanguage {
    pub fn new(d: usize, forbidden: &[Word], n_max: usize, prune: bool) -> Result<Self> {
        for w in forbidden {
            if w.len() < 2 {
                return Err(Error::BadForbiddenWord);
            }
        }
        let forbidden_set: BTreeSet<Vec<u8>> =
            forbidden.iter().map(|w| w.letters().to_vec()).collect();
        let max_len = forbidden.iter().map(|w| w.len()).max().unwrap_or(0);

        let ends_forbidden = |w: &[u8]| -> bool {
            for l in 2..=max_len.min(w.len()) {
                if forbidden_set.contains(&w[w.len() - l..]) {
                    return true;
                }
            }
            false
        };

        // Factor-closed language: extend letter by letter, rejecting any
        // forbidden suffix.
        let mut allowed: Vec<Vec<Vec<u8>>> = vec![vec![vec![]]];
        for n in 1..=n_max.max(max_len) {
            let mut next = Vec::new();
            for w in &allowed[n - 1] {
                for a in 1..=d as u8 {
                    let mut ext = w.clone();
                    ext.push(a);
                    if !ends_forbidden(&ext) {
                        next.push(ext);
                    }
                }
            }
            allowed.push(next);
        }

        let keep: Vec<Vec<Vec<u8>>> = if prune && max_len >= 2 {
            let k = max_len - 1;
            // Higher-block graph on allowed k-words; iteratively delete
            // vertices with in-degree 0 or out-degree 0.
            let mut vertices: BTreeSet<Vec<u8>> = allowed[k].iter().cloned().collect();
            loop {
                let mut has_out: BTreeSet<Vec<u8>> = BTreeSet::new();
                let mut has_in: BTreeSet<Vec<u8>> = BTreeSet::new();
                for v in &vertices {
                    for a in 1..=d as u8 {
                        let mut e = v.clone();
                        e.push(a);
                        if ends_forbidden(&e) {
                            continue;
                        }
                        let dst = e[1..].to_vec();
                        if vertices.contains(&dst) {
                            has_out.insert(v.clone());
                            has_in.insert(dst);
                        }
                    }
                }
                let next: BTreeSet<Vec<u8>> = vertices
                    .iter()
                    .filter(|v| has_out.contains(*v) && has_in.contains(*v))
                    .cloned()
                    .collect();
                if next.len() == vertices.len() {
                    break;
                }
                vertices = next;
                if vertices.is_empty() {
                    break;
                }
            }
            let mut out: Vec<Vec<Vec<u8>>> = Vec::with_capacity(n_max + 1);
            for n in 0..=n_max {
                if n < k {
                    // Factors of surviving vertices.
                    let mut set = BTreeSet::new();
                    for v in &vertices {
                        for start in 0..=v.len() - n {
                            set.insert(v[start..start + n].to_vec());
                        }
                    }
                    out.push(set.into_iter().collect());
                } else if n == k {
                    out.push(vertices.iter().cloned().collect());
                } else {
                    // Path labels: every k-window must be a surviving vertex.
                    let mut cur: Vec<Vec<u8>> = vertices.iter().cloned().collect();
                    for _ in k..n {
                        let mut next = Vec::new();
                        for w in &cur {
                            for a in 1..=d as u8 {
                                let mut ext = w.clone();
                                ext.push(a);
                                if ends_forbidden(&ext) {
                                    continue;
                                }
                                if vertices.contains(&ext[ext.len() - k..]) {
                                    next.push(ext);
                                }
                            }
                        }
                        cur = next;
                    }
                    out.push(cur);
                }
            }
            out
        } else {
            allowed.truncate(n_max + 1);
            allowed
        };

        let words = keep
            .into_iter()
            .map(|ws| {
                ws.into_iter()
                    .map(|letters| Word::new(letters, d).expect("letters validated"))
                    .collect()
            })
            .collect();
        Ok(SubshiftLanguage { d, words })
    }

    pub fn words(&self, n: usize) -> &[Word] {
        &self.words[n]
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

fn check_admissible(q: &CMatrix) -> Result<()> {
    let d = q.nrows();
    if q.ncols() != d || d == 0 {
        return Err(Error::InadmissibleQ);
    }
    let eps = 1e-12;
    for i in 0..d {
        if q[[i, i]].norm() > eps {
            return Err(Error::InadmissibleQ);
        }
        for j in 0..d {
            if i != j {
                if q[[i, j]].norm() == 0.0 {
                    return Err(Error::InadmissibleQ);
                }
                if (q[[i, j]] * q[[j, i]] - c64::new(1.0, 0.0)).norm() > eps {
                    return Err(Error::InadmissibleQ);
                }
            }
        }
    }
    Ok(())
}

/// A constructed isomorphism X_q -> X_r of the form e_i -> e_{sigma(i)}.
#[derive(Debug, Clone)]
pub struct QIsomorphism {
    pub sigma: Vec<usize>,
    pub max_fiber_residual: f64,
}

/// Permute word indices of C^{d^n} by applying sigma letterwise; this is the
/// unitary V_n induced by e_i -> e_{sigma(i)}.
pub fn permute_frame_rows(frame: &CMatrix, sigma: &[usize], n: usize) -> CMatrix {
    let d = sigma.len();
    let rows = frame.nrows();
    debug_assert_eq!(rows, d.pow(n as u32));
    let mut out = Array2::zeros(frame.dim());
    for idx in 0..rows {
        let w = Word::from_index(idx, n, d);
        let mapped: Vec<u8> = w.letters().iter().map(|&l| sigma[l as usize - 1] as u8 + 1).collect();
        let target = Word::new(mapped, d).unwrap().index(d);
        out.row_mut(target).assign(&frame.row(idx));
    }
    out
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..d).collect();
    heap_permute(&mut items, d, &mut out);
    out.sort();
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Search for an isomorphism X_q -> X_r over basis permutations. Accepts
/// sigma iff r_{sigma(i) sigma(j)} = q_{ij} for all i != j, then verifies the
/// induced unitaries map fibers onto fibers up to degree n_max.
pub fn iso_q(
    q: &CMatrix,
    r: &CMatrix,
    n_max: usize,
    tol: f64,
) -> Result<Option<QIsomorphism>> {
    check_admissible(q)?;
    check_admissible(r)?;
    let d = q.nrows();
    if r.nrows() != d {
        return Err(Error::AmbientMismatch(d, r.nrows()));
    }
    let one = c64::new(1.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            if i != j && ((q[[i, j]] - one).norm() < 1e-9 || (r[[i, j]] - one).norm() < 1e-9) {
                return Err(Error::QHypothesis);
            }
        }
    }
    let matched = permutations(d).into_iter().find(|sigma| {
        (0..d).all(|i| {
            (0..d).all(|j| i == j || (r[[sigma[i], sigma[j]]] - q[[i, j]]).norm() <= 1e-9)
        })
    });
    let sigma = match matched {
        None => return Ok(None),
        Some(s) => s,
    };
    let xq = SubproductSystem::q_commuting(q, n_max, tol)?;
    let xr = SubproductSystem::q_commuting(r, n_max, tol)?;
    let mut max_res: f64 = 0.0;
    for n in 1..=n_max {
        let mapped = permute_frame_rows(xq.fiber(n).frame(), &sigma, n);
        let image = Subspace::from_frame(mapped, tol);
        if image.dim() != xr.fiber(n).dim() {
            return Ok(None);
        }
        let res = xr
            .fiber(n)
            .containment_residual(&image)
            .max(image.containment_residual(xr.fiber(n)));
        max_res = max_res.max(res);
    }
    Ok(Some(QIsomorphism {
        sigma,
        max_fiber_residual: max_res,
    }))
}

/// Scale-invariant record for the lambda U^t A U equivalence of 2x2 matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AClassification {
    pub rank_sym: usize,
    pub rank_antisym: usize,
    /// (s1 : s2 : |c|) normalized so the largest entry is 1, where s1 >= s2
    /// are the singular values of the symmetric part and c is the
    /// antisymmetric coefficient.
    pub triple: [f64; 3],
}

pub fn classify_a(a: &CMatrix) -> Result<AClassification> {
    if a.dim() != (2, 2) {
        return Err(Error::Invalid("A must be 2x2".into()));
    }
    let norm_a: f64 = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm_a == 0.0 {
        return Err(Error::Invalid("A must be nonzero".into()));
    }
    let at = a.t().to_owned();
    let sym = (a + &at).mapv(|v| v * 0.5);
    let anti = (a - &at).mapv(|v| v * 0.5);
    let c_abs = anti[[0, 1]].norm();
    let (_, sv, _) = {
        use ndarray_linalg::{JobSvd, SVDDC};
        sym.svddc(JobSvd::None)?
    };
    let mut s = sv.to_vec();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let s1 = s.first().cloned().unwrap_or(0.0);
    let s2 = s.get(1).cloned().unwrap_or(0.0);
    let scale = s1.max(c_abs);
    let rank_sym = s.iter().filter(|&&x| x > RANK_TOL * scale).count();
    let rank_antisym = if c_abs > RANK_TOL * scale { 1 } else { 0 };
    Ok(AClassification {
        rank_sym,
        rank_antisym,
        triple: [s1 / scale, s2 / scale, c_abs / scale],
    })
}

/// Norm of I (x) F - F (x) I for the flip F on C^2 (x) C^2; strictly positive,
/// which is the obstruction to dilating the three-dimensional example.
pub fn n3_obstruction_check() -> f64 {
    let mut flip = Array2::<c64>::zeros((4, 4));
    for i in 0..2 {
        for j in 0..2 {
            flip[[j * 2 + i, i * 2 + j]] = c64::new(1.0, 0.0);
        }
    }
    let eye = Array2::<c64>::eye(2);
    let diff = kron(&eye, &flip) - kron(&flip, &eye);
    op_norm(&diff)
}
