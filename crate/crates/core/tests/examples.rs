mod common;

use common::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use subrank_core::bounds::asymptotic_bounds;
use subrank_core::catalog::{balanced_pivot, gen_null_algebra, matmul, null_algebra, w_tensor};
use subrank_core::degeneration::{
    apply_degeneration, border_le_qi_extract, mamu_border_lb, rho_degeneration, verify_degeneration, Degeneration, LaurentMatrix,
};
use subrank_core::field::enumerate_field;
use subrank_core::minrank::*;
use subrank_core::pivot::*;
use subrank_core::slice_space::*;
use subrank_core::subrank::*;
use subrank_core::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn m(f: &Fp, rows: &[&[i64]]) -> Matrix<Fp> {
    Matrix::from_i64(f, rows).unwrap()
}

fn e(f: &Fp, n: usize, i: usize, j: usize) -> Matrix<Fp> {
    Matrix::from_fn(f, n, n, |a, b| u32::from(a == i && b == j))
}

fn span(f: &Fp, mats: Vec<Matrix<Fp>>) -> SliceSpan<Fp> {
    let shape = mats[0].shape();
    SliceSpan::from_matrices(f, shape, mats).unwrap()
}

fn remark_tensor(f: &Fp) -> Tensor3<Fp> {
    Tensor3::from_units(f, [2, 3, 2], &[(0, 2, 0), (1, 0, 0), (0, 1, 1)]).unwrap()
}

#[test]
fn field_examples() {
    let f5 = gf(5);
    assert_eq!(f5.mul(&3, &4), 2);
    let f7 = gf(7);
    assert_eq!(f7.div(&1, &2).unwrap(), 4);
    let r = Rationals;
    assert_eq!(r.add(&q(1, 3), &q(1, 6)), q(1, 2));
    assert_eq!(enumerate_field(&gf(2)).unwrap(), vec![0, 1]);
    assert_eq!(enumerate_field(&gf(3)).unwrap(), vec![0, 1, 2]);
    assert_eq!(enumerate_field(&Rationals), Err(Error::InfiniteField));
}

#[test]
fn matrix_examples() {
    let f = gf(2);
    let id = Matrix::identity(&f, 3);
    let rr = id.rref();
    assert_eq!(rr.rank(), 3);
    assert_eq!(rr.reduced, id);
    assert_eq!(Matrix::zeros(&f, 2, 4).rank(), 0);
    assert_eq!(Matrix::from_i64(&Rationals, &[&[1, 2], &[2, 4]]).unwrap().rank(), 1);

    let f7 = gf(7);
    assert_eq!(Matrix::identity(&f7, 2).kron(&Matrix::identity(&f7, 3)).unwrap(), Matrix::identity(&f7, 6));
    let rot = Matrix::from_i64(&Rationals, &[&[0, 1], &[-1, 0]]).unwrap();
    let rr = rot.kron(&rot).unwrap();
    assert_eq!(rr.add(&Matrix::identity(&Rationals, 4)).unwrap().rank(), 2);

    let a = Matrix::zeros(&f7, 2, 2);
    let b = Matrix::zeros(&f7, 2, 3);
    assert_eq!(Matrix::concat_cols(&f7, &[a, b], 2).unwrap().shape(), (2, 5));
    assert_eq!(Matrix::identity(&f7, 3).submatrix(&[0, 1], &[0, 1]), Matrix::identity(&f7, 2));
    let p = Matrix::identity(&f7, 2).col_prefix(0).unwrap();
    assert_eq!((p.shape(), p.rank()), ((2, 0), 0));
}

#[test]
fn tensor_examples() {
    let f = gf(3);
    let u2 = unit(&f, 2).unwrap();
    assert_eq!(u2.slice(1, 0).unwrap(), e(&f, 2, 0, 0));

    let w = w_tensor(&f).unwrap();
    let mut s3 = w.slices(3).unwrap();
    s3.sort_by_key(|x| x.data().to_vec());
    let mut want = vec![m(&f, &[&[0, 1], &[1, 0]]), m(&f, &[&[0, 0], &[0, 1]])];
    want.sort_by_key(|x| x.data().to_vec());
    // W = e_{122} + e_{212} + e_{221}: the 3-slices are E_{12} + E_{21} and E_{22}.
    assert_eq!(s3, want);

    assert_eq!(unit(&f, 4).unwrap().flattening_ranks(), [4; 3]);
    assert_eq!(matmul(&f, 2, 2, 2).unwrap().flattening_ranks(), [4; 3]);
    assert_eq!(w.flattening_ranks(), [2; 3]);

    let corner = Tensor3::from_units(&f, [2, 2, 2], &[(0, 0, 0)]).unwrap();
    assert_eq!(concise_reduce(&corner).unwrap().tensor.dims(), [1, 1, 1]);
    let red = concise_reduce(&w).unwrap();
    assert_eq!(red.tensor, w);
    assert_eq!(red.down, Restriction::identity(&f, [2, 2, 2]));

    let qa = Matrix::from_i64(&Rationals, &[&[1, 2], &[0, 1]]).unwrap();
    let qt = Tensor3::from_slices3(&Rationals, &[qa.clone(), qa.scale(&q(2, 1))]).unwrap().permute_legs([2, 0, 1]).unwrap();
    assert_eq!(qt.flattening_ranks()[0], 1);
    let red = concise_reduce(&qt).unwrap();
    assert_eq!(red.tensor.dims(), [1, 2, 2]);

    let u3 = unit(&f, 3).unwrap();
    assert_eq!(u3.restrict(&Restriction::identity(&f, [3; 3])).unwrap(), u3);
    let proj = Matrix::selection(&f, &[0, 1], 3);
    let r = Restriction::new(proj.clone(), proj.clone(), proj);
    assert!(verify_restriction(&r, &u3, &u2).unwrap());

    assert_eq!(u2.kron(&u3).unwrap(), unit(&f, 6).unwrap());
    assert_eq!(w.kron_power(2).unwrap().dims(), [4; 3]);
    assert!(u3.is_symmetric());
    assert!(w.is_symmetric());
    assert!(!matmul(&f, 2, 1, 1).unwrap().is_symmetric());

    let n4 = null_algebra(&f, 4).unwrap();
    assert_eq!((n4.dims(), n4.nonzeros().len()), ([4; 3], 7));
    let g = gen_null_algebra(&gf(7), 6, 2).unwrap();
    assert!(g.is_concise());
    assert_eq!(matmul(&f, 2, 2, 2).unwrap().nonzeros().len(), 8);
    assert!(check_concise_format(2, 2, 4));
    assert!(!check_concise_format(2, 2, 5));
    assert!(check_concise_format(1, 1, 1));
}

#[test]
fn max_and_min_rank_examples() {
    let f5 = gf(5);
    let n4 = null_algebra(&f5, 4).unwrap();
    assert_eq!(max_rank_exhaustive(&direction_span(&n4, 2).unwrap(), 1 << 20).unwrap().value, 2);
    let id = span(&f5, vec![Matrix::identity(&f5, 3)]);
    assert_eq!(max_rank_exhaustive(&id, 100).unwrap().value, 3);
    let g = gen_null_algebra(&gf(7), 6, 2).unwrap();
    assert!(max_rank_exhaustive(&direction_span(&g, 3).unwrap(), 1 << 22).unwrap().value <= 4);
    assert!(max_rank_exhaustive(&direction_span(&g, 2).unwrap(), 1 << 22).unwrap().value <= 3);

    for seed in 0..5 {
        assert_eq!(max_rank_randomized(&id, 16, 1 << 10, &mut rng(seed)).value, 3);
    }
    let f11 = gf(11);
    let n8 = null_algebra(&f11, 8).unwrap();
    assert_eq!(max_rank_randomized(&direction_span(&n8, 3).unwrap(), 8, 1 << 10, &mut rng(1)).value, 8);

    let mut r = rng(300);
    for _ in 0..200 {
        let n1 = rand::Rng::gen_range(&mut r, 1..=4);
        let n2 = rand::Rng::gen_range(&mut r, 1..=4);
        let d = rand::Rng::gen_range(&mut r, 1..=3);
        let t = random_tensor(&f5, [n1, n2, d], &mut r);
        let s = t.slice_span(1, 2).unwrap();
        let ex = max_rank_exhaustive(&s, 1 << 20).unwrap().value;
        assert_eq!(ex, max_rank(5, &span_mats(&s)));
        assert_eq!(max_rank_randomized(&s, 64, 1 << 10, &mut r).value, ex);
    }

    assert_eq!(min_rank_exhaustive(&span(&f5, vec![Matrix::identity(&f5, 4)]), 100).unwrap().value, 4);
    let w = w_tensor(&gf(2)).unwrap();
    assert_eq!(min_rank_exhaustive(&direction_span(&w, 3).unwrap(), 100).unwrap().value, 1);
}

#[test]
fn mincov_and_flanders_examples() {
    let f2 = gf(2);
    let l = Limits::default();
    let id = span(&f2, vec![Matrix::identity(&f2, 2)]);
    assert_eq!(mincov_exhaustive(&id, 1 << 20).unwrap().value, 2);
    assert_eq!(mincov(2, &span_mats(&id), 2, 2), 2);
    let e11 = span(&f2, vec![e(&f2, 2, 0, 0)]);
    assert_eq!(mincov_exhaustive(&e11, 1 << 20).unwrap().value, 1);
    let zero = span(&f2, vec![Matrix::zeros(&f2, 2, 2)]);
    assert_eq!(mincov_exhaustive(&zero, 1 << 20).unwrap().value, 0);
    let rec = flanders_check(&e11, &l).unwrap();
    assert_eq!((rec.maxrank, rec.mincov), (1, 1));
}

#[test]
fn staircase_and_high_rank_examples() {
    let f11 = gf(11);
    let mut r = rng(9);
    let n5 = null_algebra(&f11, 5).unwrap();
    let s = staircase(&n5, &mut r).unwrap();
    assert_eq!(s.increments.iter().sum::<usize>(), 5);
    assert!(s.slice_witness.rank * s.flat_witness.rank >= 5);

    let u = unit(&f11, 4).unwrap();
    let s = staircase(&u, &mut r).unwrap();
    assert_eq!(s.increments, vec![1; 4]);
    assert!(s.slice_witness.rank >= 1 && s.flat_witness.rank == 4);

    let mm = matmul(&f11, 2, 2, 2).unwrap();
    let s = staircase(&mm, &mut r).unwrap();
    assert!(s.slice_witness.rank * s.flat_witness.rank >= 4);

    let f3 = gf(3);
    let t = random_concise(&f3, [4, 4, 2], &mut r);
    let h = high_rank_slice(&t).unwrap();
    assert!(h.rank >= 2 && h.check(&t).unwrap() >= 2);
    assert!(high_rank_slice(&unit(&f3, 3).unwrap()).unwrap().rank >= 1);
    let h = high_rank_slice(&null_algebra(&f3, 6).unwrap()).unwrap();
    assert!(h.rank >= 2);
}

fn is_diag_on(m: &Matrix<Fp>, idx: &[usize]) -> bool {
    idx.iter().all(|&a| idx.iter().all(|&b| a == b || *m.get(a, b) == 0))
}

#[test]
fn diagonalization_examples() {
    let f7 = gf(7);
    let d = diagonalize_principal(&[Matrix::identity(&f7, 9)]).unwrap();
    assert_eq!(d.indices, (0..9).collect::<Vec<_>>());

    let diag = Matrix::diagonal(&f7, &[1, 2, 3, 4, 5, 6]);
    let d = diagonalize_principal(&[Matrix::identity(&f7, 6), diag.clone()]).unwrap();
    assert!(d.indices.len() >= 2);
    let img = d.u.mul(&diag).unwrap().mul(&d.v).unwrap();
    for &i in &d.indices {
        assert_eq!(img.get(i, i), diag.get(i, i));
    }

    let mut r = rng(4);
    for _ in 0..10 {
        let a = from_mat(&f7, &(0..9).map(|_| (0..9).map(|_| rand::Rng::gen_range(&mut r, 0..7)).collect()).collect());
        let d = diagonalize_principal(&[Matrix::identity(&f7, 9), a.clone()]).unwrap();
        assert!(d.indices.len() >= 3);
        let uv = d.u.mul(&d.v).unwrap();
        let ua = d.u.mul(&a).unwrap().mul(&d.v).unwrap();
        assert!(is_diag_on(&uv, &d.indices) && is_diag_on(&ua, &d.indices));
        assert!(d.indices.iter().all(|&i| *uv.get(i, i) == 1));
    }
}

/// Smallest support of a nonzero vector in the row space restricted to `keep`.
fn minsupp_on(p: u64, rows: &Mat, keep: &[usize]) -> usize {
    all_vectors(p, rows.len())
        .map(|c| keep.iter().filter(|&&j| rows.iter().zip(&c).map(|(r, a)| a * r[j]).sum::<u64>() % p != 0).count())
        .filter(|&s| s > 0)
        .min()
        .unwrap_or(0)
}

#[test]
fn minsupp_examples() {
    let f2 = gf(2);
    let ones = m(&f2, &[&[1, 1, 1, 1]]);
    assert_eq!(minsupp_restrict(&ones, 1 << 20).unwrap(), vec![0, 1, 2, 3]);
    assert_eq!(min_support(&ones, 1 << 20).unwrap(), 4);

    let v = m(&f2, &[&[1, 0, 0, 0], &[1, 1, 1, 1]]);
    let keep = minsupp_restrict(&v, 1 << 20).unwrap();
    assert!(minsupp_on(2, &to_mat(&v), &keep) >= 2);

    let f3 = gf(3);
    let s = span(&f3, vec![Matrix::diagonal(&f3, &[1, 1, 0]), Matrix::diagonal(&f3, &[0, 1, 1])]);
    let keep = diag_minrank_restrict(&s, 1 << 20).unwrap();
    let restricted: Vec<Mat> = s.basis.iter().map(|b| vec![keep.iter().map(|&i| *b.get(i, i) as u64).collect()]).collect();
    // Rank of a diagonal matrix is its support size.
    let least = all_vectors(3, 2)
        .filter(|c| c.iter().any(|&x| x != 0))
        .map(|c| (0..keep.len()).filter(|&j| (c[0] * restricted[0][0][j] + c[1] * restricted[1][0][j]) % 3 != 0).count())
        .min()
        .unwrap();
    assert!(least >= 1);
}

#[test]
fn basis_extension_examples() {
    let f5 = gf(5);
    let s = span(&f5, vec![e(&f5, 2, 0, 0), e(&f5, 2, 1, 1)]);
    assert_eq!(basis_extension(&s, &[0]).unwrap().b, 1);
    let off = span(&f5, vec![e(&f5, 3, 0, 1), e(&f5, 3, 2, 2)]);
    let ext = basis_extension(&off, &[0, 1]).unwrap();
    assert_eq!(ext.b, 1);
    let only_zero = span(&f5, vec![e(&f5, 3, 2, 2)]);
    let ext = basis_extension(&only_zero, &[0, 1]).unwrap();
    assert_eq!(ext.b, 0);
    assert!(ext.basis.iter().all(|b| b.submatrix(&[0, 1], &[0, 1]).is_zero()));

    let mut r = rng(8);
    for _ in 0..20 {
        let t = random_tensor(&f5, [4, 4, 3], &mut r);
        let s = direction_span(&t, 3).unwrap();
        let j = [1, 3];
        let ext = basis_extension(&s, &j).unwrap();
        let on_j: Vec<Matrix<Fp>> = ext.basis.iter().map(|b| b.submatrix(&j, &j)).collect();
        let lead = vectorize(&f5, &on_j[..ext.b]);
        assert_eq!(lead.rank(), ext.b);
        assert!(on_j[ext.b..].iter().all(|x| x.is_zero()));
        assert_eq!(vectorize(&f5, &ext.basis).rank(), s.dim());
    }
}

fn vectorize(f: &Fp, mats: &[Matrix<Fp>]) -> Matrix<Fp> {
    let len = mats.first().map_or(0, |m| m.rows() * m.cols());
    subrank_core::matrix::vectorize_all(f, mats, len).unwrap()
}

#[test]
fn diag_pipeline_examples() {
    let f7 = gf(7);
    let l = Limits::default();
    let id = span(&f7, vec![Matrix::identity(&f7, 9)]);
    let d = minrk_diag_pipeline(&id, &l, 1).unwrap();
    assert_eq!(d.j.len(), 9);
    assert_eq!(d.minrank_jj, 9);

    let w = w_tensor(&gf(3)).unwrap();
    let d = minrk_diag_pipeline(&direction_span(&w, 1).unwrap(), &l, 1).unwrap();
    assert_eq!(d.maxrank, 2);
    assert!(d.minrank_jj >= 1 && d.meets_bound());

    let mut r = rng(5);
    for seed in 0..5 {
        let t = random_concise(&f7, [9, 9, 2], &mut r);
        let d = minrk_diag_pipeline(&direction_span(&t, 3).unwrap(), &l, seed).unwrap();
        assert!(d.meets_bound());
        check_diag_minrank(&t, &d);
    }
}

/// Recompute `minrank_jj` from scratch: the rank of a combination of the
/// diagonal members restricted to `J x J` is its number of nonzero
/// diagonal entries.
fn check_diag_minrank(t: &Tensor3<Fp>, d: &DiagMinrank<Fp>) {
    let p = t.field().modulus() as u64;
    let s = direction_span(t, 3).unwrap();
    for (member, coeffs) in d.basis.iter().zip(&d.coeffs) {
        let direct = d.u.mul(&s.combination(coeffs)).unwrap().mul(&d.v).unwrap();
        assert_eq!(&direct, member);
    }
    let diag: Vec<Vec<u64>> = d.basis[..d.b].iter().map(|b| d.j.iter().map(|&i| *b.get(i, i) as u64).collect()).collect();
    for b in &d.basis[..d.b] {
        assert!(is_diag_on(b, &d.j));
    }
    let least = all_vectors(p, d.b)
        .filter(|c| c.iter().any(|&x| x != 0))
        .map(|c| (0..d.j.len()).filter(|&x| diag.iter().zip(&c).map(|(row, a)| a * row[x]).sum::<u64>() % p != 0).count())
        .min()
        .unwrap_or(0);
    assert_eq!(least, d.minrank_jj);
}

#[test]
fn mixed_kron_examples() {
    let f5 = gf(5);
    let id = Matrix::identity(&f5, 2);
    let y = mixed_kron_set(&[id.clone()], &[], 2, 1, 1 << 20).unwrap();
    assert_eq!(y.len(), 1);
    assert_eq!(y[0].matrix, Matrix::identity(&f5, 4));
    let c = e(&f5, 2, 0, 1);
    let y = mixed_kron_set(&[id.clone()], &[c.clone()], 2, 1, 1 << 20).unwrap();
    assert_eq!(y.len(), 3);
    let mats: Vec<Matrix<Fp>> = y.iter().map(|w| w.matrix.clone()).collect();
    for want in [id.kron(&id).unwrap(), id.kron(&c).unwrap(), c.kron(&id).unwrap()] {
        assert!(mats.contains(&want));
    }
    assert_eq!(mixed_kron_count(1, 2, 2, 1), Some(3));
}

#[test]
fn pivot_examples() {
    let f = gf(3);
    assert_eq!(pivot_of(&e(&f, 3, 1, 2)).unwrap(), (1, 2));
    assert_eq!(pivot_of(&m(&f, &[&[0, 1], &[1, 0]])).unwrap(), (0, 1));
    assert_eq!(pivot_of(&Matrix::identity(&f, 4)).unwrap(), (0, 0));

    let a = m(&f, &[&[0, 1, 0], &[1, 0, 0], &[0, 0, 0]]);
    let b = a.add(&e(&f, 3, 2, 2)).unwrap();
    assert_eq!(pivot_basis(&span(&f, vec![a, b])).unwrap().pivots, vec![(0, 1), (2, 2)]);
    let f2 = gf(2);
    let t = remark_tensor(&f2);
    assert_eq!(pivot_basis(&t.slice_span(1, 2).unwrap()).unwrap().pivots, vec![(0, 1), (0, 2)]);
    assert_eq!(pivot_basis(&span(&f, vec![Matrix::identity(&f, 3)])).unwrap().pivots, vec![(0, 0)]);

    assert_eq!((rho_ij(&t, 1, 2).unwrap(), rho_ij(&t, 2, 1).unwrap()), (1, 2));
    let rs = rho_sigma(&[(0, 0), (1, 1), (2, 2)], (3, 3)).unwrap();
    assert_eq!((rs.rho, rs.sigma), (3, 3));
    assert_eq!(rho_sigma(&[(1, 2)], (3, 3)).unwrap().rho, 1);
    assert_eq!(all_rho(&unit(&f, 3).unwrap()).unwrap(), [3; 6]);

    let w = w_tensor(&f2).unwrap();
    for (k, &(i, j)) in ORIENTATIONS.iter().enumerate() {
        let pts = pivot_basis(&w.slice_span(i, j).unwrap()).unwrap().pivots;
        let rho = all_rho(&w).unwrap()[k];
        assert_eq!(rho, min_line_cover(&pts, 2));
        assert!((1..=2).contains(&rho));
    }

    let f5 = gf(5);
    let n4 = null_algebra(&f5, 4).unwrap();
    let rho = rho_ij(&n4, 2, 3).unwrap();
    let d = rho_degeneration(&n4, 2, 3).unwrap();
    assert_eq!(d.claimed_r, rho);
    assert!(verify_degeneration(&d, &n4).unwrap().ok);
}

#[test]
fn pivot_uncertainty_examples() {
    let f5 = gf(5);
    let l = Limits::default();
    let mut r = rng(11);
    let u = unit(&f5, 3).unwrap();
    for e in pivot_uncertainty_check(&u, &l, &mut r).unwrap() {
        assert!(e.exact && e.holds && e.rho == 3 && e.qi == 3);
    }
    for _ in 0..20 {
        let t = random_concise(&f5, [3, 3, 3], &mut r);
        assert!(pivot_uncertainty_check(&t, &l, &mut r).unwrap().iter().all(|e| e.exact && e.holds));
    }
    let mm = matmul(&f5, 2, 2, 2).unwrap();
    assert!(pivot_uncertainty_check(&mm, &l, &mut r).unwrap().iter().all(|e| e.holds && e.n_k == 4));
}

#[test]
fn pivot_matched_examples() {
    let f7 = gf(7);
    assert!(is_pivot_matched(&balanced_pivot(&f7, 4).unwrap()).unwrap().matched);
    assert!(is_pivot_matched(&unit(&f7, 3).unwrap()).unwrap().matched);

    let f2 = gf(2);
    let mut r = rng(40);
    let unmatched = (0..1000).map(|_| random_concise(&f2, [3, 3, 3], &mut r)).find(|t| !is_pivot_matched(t).unwrap().matched);
    assert!(unmatched.is_some());

    let u = unit(&f7, 3).unwrap();
    let d = sqrt_certificate(&u).unwrap();
    assert_eq!((d.claimed_r, d.power), (3, 2));
    assert!(verify_degeneration(&d, &u).unwrap().ok);
    let b = balanced_pivot(&f7, 4).unwrap();
    let d = sqrt_certificate(&b).unwrap();
    assert_eq!(d.claimed_r, 4);
    assert!(verify_degeneration(&d, &b).unwrap().ok);
    let mut r = rng(12);
    let s = random_symmetric_concise(&f7, 4, &mut r);
    let d = sqrt_certificate(&s).unwrap();
    assert_eq!(d.claimed_r, 4);
    assert!(verify_degeneration(&d, &s).unwrap().ok);
}


#[test]
fn degeneration_examples() {
    let f = gf(7);
    let u = unit(&f, 3).unwrap();
    let id = Degeneration::from_restriction(&Restriction::identity(&f, [3; 3]), 3, 1);
    let terms = apply_degeneration(&id, &u).unwrap();
    assert_eq!(terms.len(), 1);
    assert_eq!(terms[&0], u);
    assert!(verify_degeneration(&id, &u).unwrap().ok);
    let over = Degeneration { claimed_r: 4, ..id.clone() };
    assert!(!verify_degeneration(&over, &u).unwrap().ok);

    let mut scaled = id.clone();
    let mut l = LaurentMatrix::zeros(&f, 3, 3);
    l.add_term(1, &Matrix::identity(&f, 3));
    scaled.maps[0] = l;
    let terms = apply_degeneration(&scaled, &u).unwrap();
    assert_eq!(terms.keys().copied().collect::<Vec<_>>(), vec![1]);

    let d = rho_degeneration(&u, 1, 2).unwrap();
    assert!(d.claimed_r == 3 && verify_degeneration(&d, &u).unwrap().ok);
    let f2 = gf(2);
    let t = remark_tensor(&f2);
    let d = rho_degeneration(&t, 2, 1).unwrap();
    assert!(d.claimed_r == 2 && verify_degeneration(&d, &t).unwrap().ok);

    let mut r = rng(13);
    for _ in 0..10 {
        let t = random_concise(&f, [4, 4, 4], &mut r);
        for &(i, j) in ORIENTATIONS.iter() {
            let d = rho_degeneration(&t, i, j).unwrap();
            assert_eq!(d.claimed_r, rho_ij(&t, i, j).unwrap());
            let v = verify_degeneration(&d, &t).unwrap();
            assert!(v.ok, "{:?}", v.diagnostic);
        }
    }

    let x = border_le_qi_extract(&id, &u, 1).unwrap();
    assert_eq!(x.witness.matrix(&u).unwrap(), Matrix::identity(&f, 3));
    let f11 = gf(11);
    for _ in 0..10 {
        let t = random_tensor(&f11, [3, 3, 3], &mut r);
        if t.is_zero() {
            continue;
        }
        let d = rho_degeneration(&t, 1, 2).unwrap();
        for dir in 1..=3 {
            let ex = border_le_qi_extract(&d, &t, dir).unwrap();
            assert!(ex.witness.check(&t).unwrap() >= d.claimed_r);
        }
    }

    assert_eq!(mamu_border_lb(2, 2, 2).unwrap(), 3);
    assert_eq!(mamu_border_lb(1, 1, 5).unwrap(), 1);
    assert_eq!(mamu_border_lb(2, 3, 6).unwrap(), 6);
}

#[test]
fn subrank_examples() {
    let f2 = gf(2);
    assert_eq!(subrank_exact(&w_tensor(&f2).unwrap(), 1 << 20).unwrap().0, 1);
    for r in 1..=3 {
        let u = unit(&gf(3), r).unwrap();
        let (q, c) = subrank_exact(&u, 1 << 24).unwrap();
        assert!(q == r && c.verify(&u).unwrap());
        assert_eq!(slicerank_exact(&u, 1 << 24).unwrap().value, r);
    }
    let w = w_tensor(&f2).unwrap();
    let sr = slicerank_exact(&w, 1 << 20).unwrap();
    assert_eq!(sr.value, 2);
    assert!(verify_slice_decomposition(&w, &sr.spaces).unwrap());

    let f5 = gf(5);
    let t = random_tensor(&f5, [3, 3, 1], &mut rng(1));
    let c = subrank_from_minrank(&t, &[0], 1 << 20).unwrap();
    assert!(c.r == 1 && c.verify(&t).unwrap());

    let diag = Tensor3::from_slices3(&f5, &[Matrix::identity(&f5, 6), Matrix::diagonal(&f5, &[1, 2, 3, 4, 0, 0])]).unwrap();
    let c = subrank_from_minrank(&diag, &[0, 1], 1 << 30).unwrap();
    assert!(c.r == 2 && c.verify(&diag).unwrap());
}

#[test]
fn c2_examples() {
    let f3 = gf(3);
    let mut r = rng(21);
    for _ in 0..200 {
        let t = random_concise(&f3, [3, 4, 2], &mut r);
        let c = subrank_c2(&t).unwrap();
        assert!(c.r == 2 && c.verify(&t).unwrap());
    }
    let a = m(&f3, &[&[1, 1], &[1, 1]]);
    let b = m(&f3, &[&[1, 1], &[2, 2]]);
    let t = Tensor3::from_slices3(&f3, &[a, b]).unwrap();
    assert_eq!(subrank_c2(&t).unwrap_err(), Error::NotConcise);
}

#[test]
fn square_and_cube_examples() {
    let f = gf(11);
    let u = unit(&f, 3).unwrap();
    let ones = SliceWitness { dir: 1, coeffs: vec![1; 3], rank: 3 };
    let ones3 = SliceWitness { dir: 3, coeffs: vec![1; 3], rank: 3 };
    let c = two_direction_square(&u, &ones, &ones3, 3).unwrap();
    assert!(c.r == 3 && c.power == 2 && c.verify(&u).unwrap());

    let n5 = null_algebra(&f, 5).unwrap();
    let w1 = high_witness(&n5, 1);
    let w3 = high_witness(&n5, 3);
    assert_eq!((w1.rank, w3.rank), (5, 5));
    let c = two_direction_square(&n5, &w1, &w3, 5).unwrap();
    assert!(c.r == 5 && c.verify(&n5).unwrap());

    let mut r = rng(31);
    for _ in 0..3 {
        let t = random_concise(&f, [4, 4, 4], &mut r);
        let (wa, wb) = product_witnesses(&t, 3, &mut r).unwrap();
        let rr = wa.rank.min(wb.rank);
        let c = two_direction_square(&t, &wa, &wb, rr).unwrap();
        assert!(c.verify(&t).unwrap());
    }

    let ws = [SliceWitness { dir: 1, coeffs: vec![1; 3], rank: 3 }, SliceWitness { dir: 2, coeffs: vec![1; 3], rank: 3 }, ones3];
    let cube = mamu_cube(&u, &ws).unwrap();
    assert_eq!(cube.sizes, [3, 3, 3]);
    assert_eq!(cube.bound.value_cmp(&subrank_core::bounds::RootBound::integer(9, 3)), std::cmp::Ordering::Equal);
}

fn high_witness(t: &Tensor3<Fp>, dir: usize) -> SliceWitness<Fp> {
    let m = max_rank_exhaustive(&direction_span(t, dir).unwrap(), 1 << 22).unwrap();
    SliceWitness { dir, coeffs: m.coeffs, rank: m.value }
}

#[test]
fn narrow_examples() {
    let f = gf(5);
    let l = Limits::default();
    let t = Tensor3::from_slices3(&f, &[Matrix::identity(&f, 3)]).unwrap();
    let c = narrow_certificate(&t, 16, &l, 1).unwrap();
    assert!(c.r == 1 && c.verify(&t).unwrap());

    let t = random_concise(&gf(7), [3, 3, 2], &mut rng(2));
    match narrow_certificate(&t, 16, &l, 1) {
        Err(Error::ResourceGuard { .. }) | Err(Error::BelowThreshold { .. }) => {}
        other => panic!("expected a guard or threshold error, got {other:?}"),
    }
    assert_eq!(compute_n(2).unwrap(), 3072u32.into());
}

#[test]
fn bounds_examples() {
    let f = gf(11);
    let l = Limits::default();
    let u = unit(&f, 3).unwrap();
    let b = asymptotic_bounds(&u, &l, 1);
    assert_eq!(b.lower().value_cmp(&subrank_core::bounds::RootBound::integer(3, 1)), std::cmp::Ordering::Equal);
    assert_eq!(b.upper, 3);

    let n5 = null_algebra(&f, 5).unwrap();
    let b = asymptotic_bounds(&n5, &l, 1);
    assert!(b.lower().value_cmp(&subrank_core::bounds::RootBound::integer(5, 3)) != std::cmp::Ordering::Less);
    assert_eq!(b.upper, 5);
    assert!(b.annotations.iter().any(|a| a.contains('4')));

    let s = random_symmetric_concise(&gf(7), 4, &mut rng(3));
    let b = asymptotic_bounds(&s, &l, 1);
    assert!(b.lower().value_cmp(&subrank_core::bounds::RootBound::integer(2, 1)) != std::cmp::Ordering::Less);
    assert!(b.is_consistent());
}

#[test]
fn rotation_span_is_not_supermultiplicative() {
    let r = Rationals;
    let id = Matrix::identity(&r, 2);
    let rot = Matrix::from_i64(&r, &[&[0, 1], &[-1, 0]]).unwrap();
    let a = SliceSpan::from_matrices(&r, (2, 2), vec![id.clone(), rot.clone()]).unwrap();
    let aa = a.kron(&a).unwrap();
    // Every nonzero element of the span `a` is invertible: det(x I + y R) = x^2 + y^2.
    // In `aa`, I⊗I + R⊗R has rank 2.
    let witness = aa.combination(&[q(1, 1), q(0, 1), q(0, 1), q(1, 1)]);
    assert_eq!(witness.rank(), 2);
    // No element of `aa` has rank 1: all commute with J = R ⊗ I, so image and
    // kernel are J-invariant, and J^2 = -I leaves no invariant line over Q.
    let j = rot.kron(&id).unwrap();
    for b in &aa.basis {
        assert_eq!(b.mul(&j).unwrap(), j.mul(b).unwrap());
    }
    assert_eq!(j.mul(&j).unwrap(), Matrix::identity(&r, 4).scale(&q(-1, 1)));
    assert_eq!(aa.dim(), 4);
}
