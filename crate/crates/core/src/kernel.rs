//! Dense complex linear algebra substrate: subspaces held as orthonormal
//! frames, rank decisions, Kronecker products, operator norms and positive
//! square roots. Everything is deterministic; no randomized algorithms.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{c64, Eigh, JobSvd, SVDDC, UPLO};

use crate::error::{Error, Result};

/// Dense complex matrix, row-major.
pub type CMatrix = Array2<c64>;

/// Default relative tolerance for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-9;
/// Default absolute tolerance for relation checks.
pub const CHECK_TOL: f64 = 1e-7;

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    for ((r, c), v) in m.indexed_iter() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite { row: r, col: c });
        }
    }
    Ok(())
}

/// Conjugate transpose.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|v| v.conj())
}

/// Kronecker product with index convention (i,j) -> i * cols_b + j, so that
/// e_alpha (x) e_beta is the basis vector of the concatenated word alpha beta.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &av) in a.indexed_iter() {
        if av == c64::new(0.0, 0.0) {
            continue;
        }
        for ((p, q), &bv) in b.indexed_iter() {
            out[[i * br + p, j * bc + q]] = av * bv;
        }
    }
    out
}

/// Largest singular value; 0 for empty matrices.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let (_, s, _) = a.svddc(JobSvd::None).expect("svd failed");
    s.iter().cloned().fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix with eigenvectors as columns,
/// so that a = vecs . diag(vals) . vecs*. Wraps the LAPACK call, which hands
/// back the conjugated eigenvector matrix for row-major complex input.
pub fn hermitian_eig(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (vals, vecs) = h.eigh(UPLO::Lower)?;
    Ok((vals.to_vec(), vecs.mapv(|v| v.conj())))
}

/// Hermitian PSD square root. Eigenvalues in [-tol, 0) are clamped to 0.
pub fn psd_sqrt(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    ensure_finite(a)?;
    let dev = op_norm(&(a - &adjoint(a)));
    let scale = op_norm(a).max(1.0);
    if dev > tol * scale {
        return Err(Error::NotHermitian(dev));
    }
    let h = (a + &adjoint(a)).mapv(|v| v * 0.5);
    let (vals, vecs) = hermitian_eig(&h)?;
    let mut d = Array2::<c64>::zeros((vals.len(), vals.len()));
    for (i, &l) in vals.iter().enumerate() {
        if l < -tol * scale {
            return Err(Error::NegativeEigenvalue(l));
        }
        d[[i, i]] = c64::new(l.max(0.0).sqrt(), 0.0);
    }
    Ok(vecs.dot(&d).dot(&adjoint(&vecs)))
}

/// A subspace of C^m stored as an orthonormal column frame.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    frame: CMatrix,
    tol: f64,
}

impl Subspace {
    pub fn from_frame(frame: CMatrix, tol: f64) -> Self {
        Subspace {
            ambient_dim: frame.nrows(),
            frame,
            tol,
        }
    }

    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Subspace {
            ambient_dim,
            frame: Array2::zeros((ambient_dim, 0)),
            tol,
        }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Subspace {
            ambient_dim,
            frame: Array2::eye(ambient_dim),
            tol,
        }
    }

    /// Span of the given standard basis vectors (indices must be distinct).
    pub fn from_basis_indices(ambient_dim: usize, indices: &[usize], tol: f64) -> Self {
        let mut frame = Array2::zeros((ambient_dim, indices.len()));
        for (c, &i) in indices.iter().enumerate() {
            frame[[i, c]] = c64::new(1.0, 0.0);
        }
        Subspace {
            ambient_dim,
            frame,
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// frame . frame* as a dense projection matrix.
    pub fn projection(&self) -> CMatrix {
        self.frame.dot(&adjoint(&self.frame))
    }

    /// If every frame column is exactly a standard basis vector, the sorted
    /// list of the corresponding indices.
    pub fn coordinate_indices(&self) -> Option<Vec<usize>> {
        coordinate_columns(&self.frame).map(|mut v| {
            v.sort_unstable();
            v
        })
    }

    /// Distance from v to this subspace: || v - P v ||_2.
    pub fn distance(&self, v: &Array1<c64>) -> f64 {
        let coeff = adjoint(&self.frame).dot(v);
        let proj = self.frame.dot(&coeff);
        (v - &proj).mapv(|x| x.norm_sqr()).sum().sqrt()
    }

    /// Operator-norm residual of `other`'s frame against this span.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        if other.dim() == 0 {
            return 0.0;
        }
        let coeff = adjoint(&self.frame).dot(&other.frame);
        let proj = self.frame.dot(&coeff);
        op_norm(&(&other.frame - &proj))
    }

    pub fn contains_space(&self, other: &Subspace, tol: f64) -> bool {
        self.containment_residual(other) <= tol
    }

    /// Mutual containment within tol; frames themselves may differ.
    pub fn equals(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.contains_space(other, tol)
            && other.contains_space(self, tol)
    }
}

/// Exact detection of columns that are scalar multiples of standard basis
/// vectors. Zero columns are dropped; duplicate indices collapse.
fn coordinate_columns(m: &CMatrix) -> Option<Vec<usize>> {
    let mut seen = std::collections::BTreeSet::new();
    for col in m.columns() {
        let mut idx = None;
        for (r, v) in col.iter().enumerate() {
            if *v != c64::new(0.0, 0.0) {
                if idx.is_some() {
                    return None;
                }
                idx = Some(r);
            }
        }
        if let Some(r) = idx {
            seen.insert(r);
        }
    }
    Some(seen.into_iter().collect())
}

/// Orthonormal frame for the column space of `vectors`. Rank is decided by
/// singular values > tol * (largest singular value).
pub fn orthonormalize(vectors: &CMatrix, tol: f64) -> Result<Subspace> {
    ensure_finite(vectors)?;
    let m = vectors.nrows();
    if vectors.ncols() == 0 {
        return Ok(Subspace::zero(m, tol));
    }
    // Columns that are exact multiples of basis vectors span a coordinate
    // subspace; skip the SVD.
    if let Some(indices) = coordinate_columns(vectors) {
        return Ok(Subspace::from_basis_indices(m, &indices, tol));
    }
    let (u, sv, _) = vectors.svddc(JobSvd::Some)?;
    let u = u.expect("svd did not return u");
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&x| x > tol * smax).count()
    };
    Ok(Subspace::from_frame(u.slice(s![.., ..rank]).to_owned(), tol))
}

/// Orthogonal complement.
pub fn complement(space: &Subspace) -> Subspace {
    let m = space.ambient_dim();
    let k = space.dim();
    if k == 0 {
        return Subspace::full(m, space.tol());
    }
    if k == m {
        return Subspace::zero(m, space.tol());
    }
    if let Some(indices) = space.coordinate_indices() {
        let set: std::collections::BTreeSet<usize> = indices.into_iter().collect();
        let rest: Vec<usize> = (0..m).filter(|i| !set.contains(i)).collect();
        return Subspace::from_basis_indices(m, &rest, space.tol());
    }
    let (u, sv, _) = space.frame().svddc(JobSvd::All).expect("svd failed");
    let u = u.expect("svd did not return u");
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&x| x > space.tol() * smax).count()
    };
    Subspace::from_frame(u.slice(s![.., rank..]).to_owned(), space.tol())
}

/// Intersection computed as complement(complement(a) + complement(b)).
pub fn intersect(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::AmbientMismatch(a.ambient_dim(), b.ambient_dim()));
    }
    intersect_many(&[a.clone(), b.clone()])
}

/// Intersection of several subspaces of the same ambient space, via the sum
/// of complements.
pub fn intersect_many(spaces: &[Subspace]) -> Result<Subspace> {
    assert!(!spaces.is_empty());
    let m = spaces[0].ambient_dim();
    let tol = spaces[0].tol();
    for sp in spaces {
        if sp.ambient_dim() != m {
            return Err(Error::AmbientMismatch(m, sp.ambient_dim()));
        }
    }
    let complements: Vec<Subspace> = spaces.iter().map(complement).collect();
    let total: usize = complements.iter().map(|c| c.dim()).sum();
    let mut stacked = Array2::zeros((m, total));
    let mut col = 0;
    for c in &complements {
        stacked
            .slice_mut(s![.., col..col + c.dim()])
            .assign(c.frame());
        col += c.dim();
    }
    let sum = orthonormalize(&stacked, tol)?;
    Ok(complement(&sum))
}

/// Tensor product of subspaces under the fixed kron index convention.
pub fn kron_space(a: &Subspace, b: &Subspace) -> Subspace {
    Subspace::from_frame(kron(a.frame(), b.frame()), a.tol().max(b.tol()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn orthonormalize_detects_rank() {
        // Two copies of the same direction span a line.
        let m = array![
            [c(1.0, 0.0), c(2.0, 0.0)],
            [c(1.0, 0.0), c(2.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0)]
        ];
        let s = orthonormalize(&m, RANK_TOL).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.ambient_dim(), 3);
        let f = s.frame();
        let g = adjoint(f).dot(f);
        assert!((g[[0, 0]] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn orthonormalize_coordinate_fast_path() {
        let m = array![
            [c(0.0, 0.0), c(3.0, 0.0)],
            [c(0.0, -2.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0)]
        ];
        let s = orthonormalize(&m, RANK_TOL).unwrap();
        assert_eq!(s.coordinate_indices(), Some(vec![0, 1]));
    }

    #[test]
    fn complement_dimensions_add_up() {
        let m = array![
            [c(1.0, 0.0)],
            [c(0.0, 1.0)],
            [c(0.5, 0.5)],
            [c(0.0, 0.0)]
        ];
        let s = orthonormalize(&m, RANK_TOL).unwrap();
        let p = complement(&s);
        assert_eq!(s.dim() + p.dim(), 4);
        // Frames are mutually orthogonal.
        let cross = adjoint(s.frame()).dot(p.frame());
        assert!(op_norm(&cross) < 1e-12);
    }

    #[test]
    fn double_complement_is_identity() {
        let m = array![
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(1.0, 0.0), c(0.0, 2.0)],
            [c(0.0, 0.0), c(1.0, 0.0)]
        ];
        let s = orthonormalize(&m, RANK_TOL).unwrap();
        let back = complement(&complement(&s));
        assert!(s.equals(&back, 1e-10));
    }

    #[test]
    fn intersect_coordinate_planes() {
        let a = Subspace::from_basis_indices(4, &[0, 1, 2], RANK_TOL);
        let b = Subspace::from_basis_indices(4, &[1, 2, 3], RANK_TOL);
        let i = intersect(&a, &b).unwrap();
        assert_eq!(i.coordinate_indices(), Some(vec![1, 2]));
    }

    #[test]
    fn intersect_transverse_lines_is_zero() {
        let a = orthonormalize(&array![[c(1.0, 0.0)], [c(0.0, 0.0)]], RANK_TOL).unwrap();
        let b = orthonormalize(&array![[c(1.0, 0.0)], [c(1.0, 0.0)]], RANK_TOL).unwrap();
        assert_eq!(intersect(&a, &b).unwrap().dim(), 0);
    }

    #[test]
    fn kron_concatenates_word_indices() {
        // e_0 in C^2 (x) e_1 in C^2 = e_1 in C^4 under (i,j) -> i*2+j.
        let e0 = array![[c(1.0, 0.0)], [c(0.0, 0.0)]];
        let e1 = array![[c(0.0, 0.0)], [c(1.0, 0.0)]];
        let k = kron(&e0, &e1);
        assert_eq!(k.dim(), (4, 1));
        assert_eq!(k[[1, 0]], c(1.0, 0.0));
        assert_eq!(k[[0, 0]], c(0.0, 0.0));
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = array![[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -4.0)]];
        assert!((op_norm(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_of_diagonal() {
        let m = array![[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        let r = psd_sqrt(&m, 1e-12).unwrap();
        assert!((r[[0, 0]].re - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(op_norm(&(r.dot(&r) - &m)) < 1e-12);
    }


    #[test]
    fn psd_sqrt_of_complex_hermitian() {
        // A genuinely complex PSD matrix; guards the eigenvector
        // orientation of the LAPACK wrapper.
        let m = Array2::from_shape_fn((3, 3), |(i, j)| {
            c((i * 3 + j) as f64 * 0.1 - 0.3, i as f64 - j as f64 * 0.2)
        });
        let a = m.dot(&adjoint(&m));
        let r = psd_sqrt(&a, 1e-10).unwrap();
        assert!(op_norm(&(r.dot(&r) - &a)) < 1e-10);
        assert!(op_norm(&(&r - &adjoint(&r))) < 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_non_hermitian() {
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        assert!(matches!(psd_sqrt(&m, 1e-12), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let m = array![[c(-1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(
            psd_sqrt(&m, 1e-12),
            Err(Error::NegativeEigenvalue(_))
        ));
    }

    #[test]
    fn distance_to_coordinate_plane() {
        let s = Subspace::from_basis_indices(3, &[0], RANK_TOL);
        let v = Array1::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        assert!((s.distance(&v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ensure_finite_flags_nan() {
        let m = array![[c(f64::NAN, 0.0)]];
        assert!(matches!(
            ensure_finite(&m),
            Err(Error::NonFinite { row: 0, col: 0 })
        ));
    }
}
