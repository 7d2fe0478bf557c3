//! Property-based checks for the linear-algebra kernel and the polynomial
//! layer: structural identities that must hold for arbitrary inputs.

use ndarray::{Array1, Array2};
use ndarray_linalg::c64;
use proptest::prelude::*;
use subprod_core::kernel::{
    adjoint, complement, intersect, kron, op_norm, orthonormalize, Subspace, RANK_TOL,
};
use subprod_core::ncpoly::{parse_poly, NcPolynomial, Word};

fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<c64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols).prop_map(move |v| {
        Array2::from_shape_vec((rows, cols), v.into_iter().map(|(a, b)| c(a, b)).collect())
            .unwrap()
    })
}

fn arb_word(d: usize, max_len: usize) -> impl Strategy<Value = Word> {
    proptest::collection::vec(1u8..=(d as u8), 0..=max_len)
        .prop_map(move |ls| Word::new(ls, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn orthonormalize_gives_isometric_frame(m in arb_matrix(6, 4)) {
        let space = orthonormalize(&m, RANK_TOL).unwrap();
        let f = space.frame();
        if space.dim() > 0 {
            let gram = adjoint(f).dot(f);
            let eye = Array2::<c64>::eye(space.dim());
            prop_assert!(op_norm(&(gram - eye)) < 1e-10);
        }
        // Every original column lies in the span.
        for col in m.columns() {
            prop_assert!(space.distance(&col.to_owned()) < 1e-9);
        }
    }

    #[test]
    fn complement_dims_add_up(m in arb_matrix(6, 3)) {
        let space = orthonormalize(&m, RANK_TOL).unwrap();
        let comp = complement(&space);
        prop_assert_eq!(space.dim() + comp.dim(), 6);
        // Double complement recovers the space.
        let back = complement(&comp);
        prop_assert!(back.equals(&space, 1e-9));
    }

    #[test]
    fn intersection_with_full_is_identity(m in arb_matrix(5, 2)) {
        let space = orthonormalize(&m, RANK_TOL).unwrap();
        let full = Subspace::full(5, RANK_TOL);
        let meet = intersect(&space, &full).unwrap();
        prop_assert!(meet.equals(&space, 1e-9));
    }

    #[test]
    fn kron_respects_word_concatenation(
        a in arb_word(2, 3),
        b in arb_word(2, 3),
    ) {
        // e_alpha (x) e_beta = e_{alpha beta} under the fixed index map.
        let d = 2usize;
        let ea = basis_column(d.pow(a.len() as u32), a.index(d));
        let eb = basis_column(d.pow(b.len() as u32), b.index(d));
        let prod = kron(&ea, &eb);
        let cat = a.concat(&b);
        let expect = basis_column(d.pow(cat.len() as u32), cat.index(d));
        prop_assert!(op_norm(&(prod - expect)) < 1e-15);
    }

    #[test]
    fn word_index_roundtrip(w in arb_word(3, 5)) {
        let idx = w.index(3);
        let back = Word::from_index(idx, w.len(), 3);
        prop_assert_eq!(back.letters(), w.letters());
    }

    #[test]
    fn parse_render_roundtrip(terms in proptest::collection::vec(
        (arb_word(2, 3), -5i32..=5, -5i32..=5), 1..4)) {
        let poly = NcPolynomial::from_terms(
            2,
            terms
                .into_iter()
                .map(|(w, re, im)| (w, c(re as f64, im as f64))),
        )
        .unwrap();
        let text = poly.render();
        let back = parse_poly(&text, 2).unwrap();
        let diff = poly.add(&back.scaled(c(-1.0, 0.0)));
        prop_assert!(diff.coeff_norm() < 1e-12, "render {:?}", text);
    }
}

fn basis_column(dim: usize, idx: usize) -> Array2<c64> {
    let mut v = Array1::<c64>::zeros(dim);
    v[idx] = c(1.0, 0.0);
    v.insert_axis(ndarray::Axis(1))
}
