//! Pivots of matrix spaces: the canonical pivot set, its minimum line cover
//! `ρ` and maximum coordinate-disjoint matching `σ`, and the pivot-matched
//! square-root certificate.

use rand::Rng;

use crate::bipartite::matching_and_cover;
use crate::degeneration::{verify_degeneration, Degeneration, LaurentMatrix};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::matrix::Matrix;
use crate::slice_space::{direction_span, max_rank_bounds, Limits};
use crate::tensor::{SliceSpan, Tensor3};

/// Lexicographically first nonzero coordinate, rows first.
pub fn pivot_of<F: Field>(m: &Matrix<F>) -> Result<(usize, usize)> {
    let f = m.field();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !f.is_zero(m.get(i, j)) {
                return Ok((i, j));
            }
        }
    }
    Err(Error::ZeroMatrix)
}

/// Basis of a span in fully reduced echelon form of the row-major
/// vectorization, so `(basis[s])_{pivots[t]} = δ_{st}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PivotBasis<F: Field> {
    pub basis: Vec<Matrix<F>>,
    /// Sorted lexicographically.
    pub pivots: Vec<(usize, usize)>,
    /// `basis[s] = sum_t coeffs[s][t] * spanning[t]`.
    pub coeffs: Matrix<F>,
}

pub fn pivot_basis<F: Field>(span: &SliceSpan<F>) -> Result<PivotBasis<F>> {
    let (n1, n2) = span.shape;
    if span.basis.is_empty() {
        return Err(Error::ZeroSpan);
    }
    let v = span.vectorized();
    let r = v.rref();
    if r.rank() == 0 {
        return Err(Error::ZeroSpan);
    }
    let f = &span.field;
    let basis = (0..r.rank())
        .map(|s| Matrix::from_vec(f, n1, n2, r.reduced.row(s).to_vec()).expect("row has n1*n2 entries"))
        .collect();
    let pivots = r.pivots.iter().map(|&p| (p / n2, p % n2)).collect();
    let rows: Vec<usize> = (0..r.rank()).collect();
    let cols: Vec<usize> = (0..span.basis.len()).collect();
    let coeffs = r.transform.submatrix(&rows, &cols);
    Ok(PivotBasis { basis, pivots, coeffs })
}

/// `ρ` (minimum number of rows plus columns covering the pivots) and `σ`
/// (maximum number of pivots in distinct rows and columns), with witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoSigma {
    pub rho: usize,
    pub sigma: usize,
    pub cover_rows: Vec<usize>,
    pub cover_cols: Vec<usize>,
    /// Indices into the pivot list.
    pub matching: Vec<usize>,
}

pub fn rho_sigma(pivots: &[(usize, usize)], shape: (usize, usize)) -> Result<RhoSigma> {
    if pivots.is_empty() {
        return Err(Error::ZeroSpan);
    }
    let mc = matching_and_cover(shape.0, shape.1, pivots);
    let rs = RhoSigma {
        rho: mc.cover_size(),
        sigma: mc.size(),
        cover_rows: mc.cover_left,
        cover_cols: mc.cover_right,
        matching: mc.matching,
    };
    assert_eq!(rs.rho, rs.sigma, "König equality");
    Ok(rs)
}

/// `ρ_{i,j}(T)`: `ρ` of the slice span with rows along `i` and columns along `j`.
pub fn rho_ij<F: Field>(t: &Tensor3<F>, i: usize, j: usize) -> Result<usize> {
    if t.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let span = t.slice_span(i, j)?;
    let pb = pivot_basis(&span)?;
    Ok(rho_sigma(&pb.pivots, span.shape)?.rho)
}

pub const ORIENTATIONS: [(usize, usize); 6] = [(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)];

/// `ρ_{i,j}` for all six ordered pairs, in the order of [`ORIENTATIONS`].
pub fn all_rho<F: Field>(t: &Tensor3<F>) -> Result<[usize; 6]> {
    let mut out = [0; 6];
    for (slot, &(i, j)) in out.iter_mut().zip(ORIENTATIONS.iter()) {
        *slot = rho_ij(t, i, j)?;
    }
    Ok(out)
}

/// One instance of `ρ_{i,j} * max(Q_i, Q_j) >= n_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UncertaintyEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub rho: usize,
    pub qi: usize,
    pub qj: usize,
    pub n_k: usize,
    /// Whether both `Q` values are exact.
    pub exact: bool,
    pub holds: bool,
}

/// Evaluate the inequality for all six ordered pairs. `Q` values come from
/// exhaustive search when possible; otherwise their upper bounds are used
/// and `exact` is false.
pub fn pivot_uncertainty_check<F: Field, R: Rng + ?Sized>(
    t: &Tensor3<F>,
    limits: &Limits,
    rng: &mut R,
) -> Result<Vec<UncertaintyEntry>> {
    if !t.is_concise() {
        return Err(Error::NotConcise);
    }
    let mut q = Vec::new();
    for dir in 1..=3 {
        q.push(max_rank_bounds(&direction_span(t, dir)?, limits, rng)?);
    }
    let mut out = Vec::new();
    for &(i, j) in ORIENTATIONS.iter() {
        let k = 6 - i - j;
        let rho = rho_ij(t, i, j)?;
        let (qi, qj) = (q[i - 1].upper, q[j - 1].upper);
        let n_k = t.dims()[k - 1];
        out.push(UncertaintyEntry {
            i,
            j,
            k,
            rho,
            qi,
            qj,
            n_k,
            exact: q[i - 1].is_exact() && q[j - 1].is_exact(),
            holds: rho * qi.max(qj) >= n_k,
        });
    }
    Ok(out)
}

/// Pivot bases of the 1-slices (rows along direction 2) and the 3-slices
/// (rows along direction 1), both sorted by pivot.
#[derive(Clone, Debug)]
pub struct PivotMatch<F: Field> {
    pub matched: bool,
    pub a: PivotBasis<F>,
    pub b: PivotBasis<F>,
}

/// Whether every row holds as many 1-slice pivots as 3-slice pivots.
/// Only the given basis of `T` is examined, so `false` means "not matched
/// in this basis".
pub fn is_pivot_matched<F: Field>(t: &Tensor3<F>) -> Result<PivotMatch<F>> {
    if !t.is_cubical() {
        return Err(Error::NotCubical);
    }
    let n = t.dims()[0];
    let a = pivot_basis(&direction_span(t, 1)?)?;
    let b = pivot_basis(&direction_span(t, 3)?)?;
    for pb in [&a, &b] {
        if pb.basis.len() != n {
            return Err(Error::DegenerateSpan { need: n, have: pb.basis.len() });
        }
    }
    // Both pivot lists are sorted, so equal row multisets mean equal rows position by position.
    let matched = a.pivots.iter().zip(&b.pivots).all(|(pa, pb)| pa.0 == pb.0);
    Ok(PivotMatch { matched, a, b })
}

/// Border-subrank certificate of size `n` on `T^{⊠2}` for a concise,
/// pivot-matched `T`, hence `Q̃(T) >= √n`.
///
/// With `A_ℓ`, `B_ℓ` the normalized 1- and 3-slice bases (pivot rows agreeing
/// at each `ℓ`), `T ⊠ T` restricts to `T_A ⊠ T_B`; keeping the coordinates
/// `(ℓ, f_A(ℓ))`, `(f_B(ℓ), g_B(ℓ))`, `(g_A(ℓ), ℓ)` on the three legs leaves the
/// unit tensor plus terms whose second leg-1 index is smaller than the first
/// leg-2 index. Weighting leg 1 by `ε^{-f}` and leg 2 by `ε^{f}` pushes those
/// terms to positive exponents.
pub fn sqrt_certificate<F: Field>(t: &Tensor3<F>) -> Result<Degeneration<F>> {
    if !t.is_concise() {
        return Err(Error::NotConcise);
    }
    let pm = is_pivot_matched(t)?;
    if !pm.matched {
        return Err(Error::NotPivotMatched);
    }
    let f = t.field();
    let n = t.dims()[0];
    let n2 = n * n;
    let mut leg1 = LaurentMatrix::zeros(f, n, n2);
    let mut leg2 = LaurentMatrix::zeros(f, n, n2);
    let mut leg3 = LaurentMatrix::zeros(f, n, n2);
    for l in 0..n {
        let (fa, ga) = pm.a.pivots[l];
        let (fb, gb) = pm.b.pivots[l];
        let mut m1 = Matrix::zeros(f, n, n2);
        let mut m3 = Matrix::zeros(f, n, n2);
        for s in 0..n {
            m1.set(l, s * n + fa, pm.a.coeffs.get(l, s).clone());
            m3.set(l, ga * n + s, pm.b.coeffs.get(l, s).clone());
        }
        leg1.add_term(-(fa as i64), &m1);
        leg2.add_entry(l, fb * n + gb, fb as i64, &f.one());
        leg3.add_term(0, &m3);
    }
    let d = Degeneration { maps: [leg1, leg2, leg3], claimed_r: n, power: 2 };
    let v = verify_degeneration(&d, t)?;
    if !v.ok {
        return Err(Error::VerificationFailed(v.diagnostic.unwrap_or_default()));
    }
    Ok(d)
}
