//! Exact subrank and slice rank on small inputs, and constructive subrank
//! lower bounds that come with checkable restrictions.

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::bounds::RootBound;
use crate::degeneration::{verify_degeneration, Degeneration};
use crate::error::{Error, Result};
use crate::field::{Field, FieldSize};
use crate::matrix::Matrix;
use crate::minrank::{minrk_diag_pipeline, mixed_kron_count, DiagMinrank};
use crate::slice_space::{enumerate_rref, for_each_projective, gaussian_binomial, min_rank_exhaustive, projective_count, Limits, SliceWitness};
use crate::tensor::{unit, verify_restriction, Restriction, Tensor3, MAX_ENTRIES};

#[derive(Clone, Debug)]
pub enum CertificateKind<F: Field> {
    Restriction(Restriction<F>),
    Degeneration(Degeneration<F>),
}

/// `<r> <= T^{⊠power}` (or the border version), so `Q̃(T) >= r^{1/power}`.
#[derive(Clone, Debug)]
pub struct SubrankCertificate<F: Field> {
    pub kind: CertificateKind<F>,
    pub r: usize,
    pub power: u32,
}

impl<F: Field> SubrankCertificate<F> {
    pub fn restriction(r: Restriction<F>, size: usize, power: u32) -> Self {
        SubrankCertificate { kind: CertificateKind::Restriction(r), r: size, power }
    }

    pub fn from_degeneration(d: Degeneration<F>) -> Self {
        let (r, power) = (d.claimed_r, d.power);
        SubrankCertificate { kind: CertificateKind::Degeneration(d), r, power }
    }

    /// Replay against the base tensor.
    pub fn verify(&self, base: &Tensor3<F>) -> Result<bool> {
        match &self.kind {
            CertificateKind::Restriction(r) => {
                let t = base.kron_power(self.power)?;
                verify_restriction(r, &t, &unit(base.field(), self.r)?)
            }
            CertificateKind::Degeneration(d) => Ok(d.claimed_r == self.r && d.power == self.power && verify_degeneration(d, base)?.ok),
        }
    }

    fn checked(self, base: &Tensor3<F>, what: &str) -> Result<Self> {
        if self.verify(base)? {
            Ok(self)
        } else {
            Err(Error::VerificationFailed(format!("{what} produced a restriction that does not replay")))
        }
    }
}

/// Three-slice view of a tensor under tracked row, column and slice
/// operations. Invariant: `slices[c] = sum_k l3[c,k] * l1 * T_k * l2^T`.
#[derive(Clone, Debug)]
pub struct SliceWorkspace<F: Field> {
    field: F,
    pub slices: Vec<Matrix<F>>,
    l1: Matrix<F>,
    l2: Matrix<F>,
    l3: Matrix<F>,
}

impl<F: Field> SliceWorkspace<F> {
    pub fn new(t: &Tensor3<F>) -> Result<Self> {
        let n3 = t.dims()[2];
        Self::with_slices(t, &(0..n3).collect::<Vec<_>>())
    }

    /// Keep only the given 3-slices.
    pub fn with_slices(t: &Tensor3<F>, idx: &[usize]) -> Result<Self> {
        let f = t.field().clone();
        let [n1, n2, n3] = t.dims();
        if let Some(&bad) = idx.iter().find(|&&k| k >= n3) {
            return Err(Error::IndexOutOfRange(format!("slice {bad} of {n3}")));
        }
        let slices = idx.iter().map(|&k| t.slice(3, k)).collect::<Result<Vec<_>>>()?;
        Ok(SliceWorkspace {
            l1: Matrix::identity(&f, n1),
            l2: Matrix::identity(&f, n2),
            l3: Matrix::selection(&f, idx, n3),
            field: f,
            slices,
        })
    }

    pub fn rows(&self) -> usize {
        self.l1.rows()
    }

    pub fn cols(&self) -> usize {
        self.l2.rows()
    }

    pub fn row_axpy(&mut self, dst: usize, src: usize, c: &F::Elem) {
        for s in &mut self.slices {
            s.row_axpy(dst, src, c);
        }
        self.l1.row_axpy(dst, src, c);
    }

    pub fn col_axpy(&mut self, dst: usize, src: usize, c: &F::Elem) {
        for s in &mut self.slices {
            s.col_axpy(dst, src, c);
        }
        self.l2.row_axpy(dst, src, c);
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        for s in &mut self.slices {
            s.swap_rows(a, b);
        }
        self.l1.swap_rows(a, b);
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        for s in &mut self.slices {
            s.swap_cols(a, b);
        }
        self.l2.swap_rows(a, b);
    }

    pub fn scale_row(&mut self, i: usize, c: &F::Elem) {
        for s in &mut self.slices {
            s.scale_row(i, c);
        }
        self.l1.scale_row(i, c);
    }

    pub fn keep_rows(&mut self, keep: &[usize]) {
        let cols: Vec<usize> = (0..self.cols()).collect();
        for s in &mut self.slices {
            *s = s.submatrix(keep, &cols);
        }
        let all: Vec<usize> = (0..self.l1.cols()).collect();
        self.l1 = self.l1.submatrix(keep, &all);
    }

    pub fn keep_cols(&mut self, keep: &[usize]) {
        let rows: Vec<usize> = (0..self.rows()).collect();
        for s in &mut self.slices {
            *s = s.submatrix(&rows, keep);
        }
        let all: Vec<usize> = (0..self.l2.cols()).collect();
        self.l2 = self.l2.submatrix(keep, &all);
    }

    pub fn remove_row(&mut self, i: usize) {
        let keep: Vec<usize> = (0..self.rows()).filter(|&r| r != i).collect();
        self.keep_rows(&keep);
    }

    pub fn remove_col(&mut self, j: usize) {
        let keep: Vec<usize> = (0..self.cols()).filter(|&c| c != j).collect();
        self.keep_cols(&keep);
    }

    /// `slices[dst] += c * slices[src]`.
    pub fn slice_axpy(&mut self, dst: usize, src: usize, c: &F::Elem) {
        let add = self.slices[src].scale(c);
        self.slices[dst] = self.slices[dst].add(&add).expect("slices share a shape");
        self.l3.row_axpy(dst, src, c);
    }

    pub fn scale_slice(&mut self, s: usize, c: &F::Elem) {
        self.slices[s] = self.slices[s].scale(c);
        self.l3.scale_row(s, c);
    }

    pub fn swap_slices(&mut self, a: usize, b: usize) {
        self.slices.swap(a, b);
        self.l3.swap_rows(a, b);
    }

    /// Every slice becomes `p * slice`.
    pub fn left_transform(&mut self, p: &Matrix<F>) -> Result<()> {
        for s in &mut self.slices {
            *s = p.mul(s)?;
        }
        self.l1 = p.mul(&self.l1)?;
        Ok(())
    }

    /// Every slice becomes `slice * q`.
    pub fn right_transform(&mut self, q: &Matrix<F>) -> Result<()> {
        for s in &mut self.slices {
            *s = s.mul(q)?;
        }
        self.l2 = q.transpose().mul(&self.l2)?;
        Ok(())
    }

    pub fn restriction(&self) -> Restriction<F> {
        Restriction::new(self.l1.clone(), self.l2.clone(), self.l3.clone())
    }

    pub fn tensor(&self) -> Result<Tensor3<F>> {
        if self.slices.is_empty() {
            return Tensor3::zeros(&self.field, [self.rows(), self.cols(), 0]);
        }
        Tensor3::from_slices3(&self.field, &self.slices)
    }

    fn is_unit(&self, r: usize) -> Result<bool> {
        Ok(self.slices.len() == r && self.rows() == r && self.cols() == r && self.tensor()? == unit(&self.field, r)?)
    }
}

fn finite_size<F: Field>(f: &F) -> Result<u64> {
    match f.size() {
        FieldSize::Finite(q) => Ok(q),
        FieldSize::Infinite => Err(Error::InfiniteField),
    }
}

fn projective_points<F: Field>(f: &F, n: usize) -> Result<Vec<Vec<F::Elem>>> {
    let mut out = Vec::new();
    for_each_projective(f, n, |v| {
        out.push(v.to_vec());
        true
    })?;
    Ok(out)
}

/// Legs ordered by dimension, largest last.
fn leg_order(dims: [usize; 3]) -> [usize; 3] {
    let mut perm = [0, 1, 2];
    perm.sort_by_key(|&l| (dims[l], l));
    perm
}

/// Undo [`Tensor3::permute_legs`] on a triple of leg maps.
fn unpermute<F: Field>(perm: [usize; 3], maps: [Matrix<F>; 3]) -> Restriction<F> {
    let mut out: [Option<Matrix<F>>; 3] = [None, None, None];
    for (l, m) in maps.into_iter().enumerate() {
        out[perm[l]] = Some(m);
    }
    Restriction { maps: out.map(|m| m.expect("perm is a permutation")) }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Exact `Q(T)` over a finite field.
///
/// `<r>` is invariant under permuting and rescaling its coordinates, so the
/// first two maps can be taken to have projectively normalized rows, the
/// first with rows in increasing order. The third map then exists iff the
/// diagonal fibers are independent modulo the off-diagonal ones, which is a
/// rank test; partial assignments are pruned with the same test.
pub fn subrank_exact<F: Field>(t: &Tensor3<F>, guard: u64) -> Result<(usize, SubrankCertificate<F>)> {
    let f = t.field().clone();
    let q = finite_size(&f)?;
    if t.is_zero() {
        let maps = t.dims().map(|n| Matrix::zeros(&f, 0, n));
        return Ok((0, SubrankCertificate::restriction(Restriction { maps }, 0, 1)));
    }
    let upper = t.flattening_ranks().into_iter().min().unwrap_or(0);
    let perm = leg_order(t.dims());
    let tp = t.permute_legs(perm)?;
    let [n1, n2, n3] = tp.dims();
    let p1 = projective_count(q, n1).unwrap_or(u64::MAX) as u128;
    let p2 = projective_count(q, n2).unwrap_or(u64::MAX) as u128;
    let work: u128 = (1..=upper as u128).map(|r| binomial(p1, r).saturating_mul(p2.saturating_pow(r as u32))).fold(0, u128::saturating_add);
    if work > guard as u128 {
        return Err(Error::guard("subrank map pairs", work, guard));
    }
    let pts1 = projective_points(&f, n1)?;
    let pts2 = projective_points(&f, n2)?;
    // fiber[a][b] = sum_{i,j} pts1[a]_i pts2[b]_j T[i,j,:]
    let slabs: Vec<Matrix<F>> = pts1
        .iter()
        .map(|u| {
            let row = Matrix::from_vec(&f, 1, n1, u.clone()).expect("length n1");
            row.mul(&tp.flattening(1).expect("flattening")).expect("shapes")
        })
        .collect();
    let fiber = |a: usize, b: usize| -> Vec<F::Elem> {
        let s = &slabs[a];
        (0..n3)
            .map(|k| {
                let mut acc = f.zero();
                for (j, vj) in pts2[b].iter().enumerate() {
                    if !f.is_zero(vj) {
                        f.mul_add_assign(&mut acc, vj, s.get(0, j * n3 + k));
                    }
                }
                acc
            })
            .collect()
    };
    let fibers: Vec<Vec<Vec<F::Elem>>> = (0..pts1.len()).map(|a| (0..pts2.len()).map(|b| fiber(a, b)).collect()).collect();

    for r in (1..=upper).rev() {
        let combos = combinations(pts1.len(), r);
        let found = combos.par_iter().find_map_first(|rows| {
            let l1 = Matrix::from_rows(&f, &rows.iter().map(|&a| pts1[a].clone()).collect::<Vec<_>>()).ok()?;
            if l1.rank() < r {
                return None;
            }
            let mut cols = Vec::with_capacity(r);
            search_second(&f, &fibers, rows, pts2.len(), n3, &mut cols).map(|(cols, l3)| (l1, cols, l3))
        });
        if let Some((l1, cols, l3)) = found {
            let l2 = Matrix::from_rows(&f, &cols.iter().map(|&b| pts2[b].clone()).collect::<Vec<_>>())?;
            let res = unpermute(perm, [l1, l2, l3]);
            let cert = SubrankCertificate::restriction(res, r, 1).checked(t, "subrank search")?;
            return Ok((r, cert));
        }
    }
    Err(Error::VerificationFailed("a nonzero tensor has subrank at least one".into()))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                break;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Third map for fixed first two, if the rank condition holds for the `cols` chosen so far.
fn third_map<F: Field>(f: &F, fibers: &[Vec<Vec<F::Elem>>], rows: &[usize], cols: &[usize], n3: usize) -> Option<Option<Matrix<F>>> {
    let t = cols.len();
    let mut off = Vec::new();
    let mut diag = Vec::new();
    for a in 0..t {
        for b in 0..t {
            let v = fibers[rows[a]][cols[b]].clone();
            if a == b {
                diag.push(v);
            } else {
                off.push(v);
            }
        }
    }
    let off_m = if off.is_empty() { Matrix::zeros(f, 0, n3) } else { Matrix::from_rows(f, &off).ok()? };
    let mut all = diag.clone();
    all.extend(off.iter().cloned());
    let all_m = Matrix::from_rows(f, &all).ok()?;
    if all_m.rank() - off_m.rank() < t {
        return None;
    }
    if t < rows.len() {
        return Some(None);
    }
    // l3 * [diag; off]^T = [I | 0]
    let mut rhs = Matrix::zeros(f, all.len(), t);
    for a in 0..t {
        rhs.set(a, a, f.one());
    }
    let x = all_m.solve(&rhs).ok()??;
    Some(Some(x.transpose()))
}

fn search_second<F: Field>(
    f: &F,
    fibers: &[Vec<Vec<F::Elem>>],
    rows: &[usize],
    p2: usize,
    n3: usize,
    cols: &mut Vec<usize>,
) -> Option<(Vec<usize>, Matrix<F>)> {
    for b in 0..p2 {
        if cols.contains(&b) {
            continue;
        }
        cols.push(b);
        match third_map(f, fibers, rows, cols, n3) {
            Some(Some(l3)) => return Some((cols.clone(), l3)),
            Some(None) => {
                if let Some(hit) = search_second(f, fibers, rows, p2, n3, cols) {
                    return Some(hit);
                }
            }
            None => {}
        }
        cols.pop();
    }
    None
}

/// `SR(T)` with a witness: `T` lies in `V1⊗F⊗F + F⊗V2⊗F + F⊗F⊗V3`; each
/// `spaces[i]` holds a basis of `V_i` as rows.
#[derive(Clone, Debug)]
pub struct SliceRank<F: Field> {
    pub value: usize,
    pub spaces: [Matrix<F>; 3],
}

/// Check that `T` vanishes modulo the three subspaces.
pub fn verify_slice_decomposition<F: Field>(t: &Tensor3<F>, spaces: &[Matrix<F>; 3]) -> Result<bool> {
    for l in 0..3 {
        if spaces[l].cols() != t.dims()[l] {
            return Ok(false);
        }
    }
    let quot: [Matrix<F>; 3] = [spaces[0].kernel(), spaces[1].kernel(), spaces[2].kernel()];
    Ok(t.restrict(&Restriction { maps: quot })?.is_zero())
}

/// Exact `SR(T)` over a finite field. Given the first two subspaces through
/// their annihilators `W1`, `W2`, the cheapest third subspace is the span of
/// the 3-fibers of `(W1 ⊗ W2 ⊗ I) T`, so only two legs are enumerated.
pub fn slicerank_exact<F: Field>(t: &Tensor3<F>, guard: u64) -> Result<SliceRank<F>> {
    let f = t.field().clone();
    let q = finite_size(&f)?;
    let perm = leg_order(t.dims());
    let tp = t.permute_legs(perm)?;
    let [n1, n2, n3] = tp.dims();
    let count = |n: usize| -> u128 { (0..=n).map(|k| gaussian_binomial(n, k, q).unwrap_or(u64::MAX) as u128).fold(0, u128::saturating_add) };
    let work = count(n1).saturating_mul(count(n2));
    if work > guard as u128 {
        return Err(Error::guard("slice rank subspace pairs", work, guard));
    }
    // Start from the best single flattening.
    let ranks = tp.flattening_ranks();
    let best_leg = (0..3).min_by_key(|&l| (ranks[l], l)).expect("three legs");
    let mut best = ranks[best_leg];
    let mut spaces: [Matrix<F>; 3] = tp.dims().map(|n| Matrix::zeros(&f, 0, n));
    spaces[best_leg] = column_space(&tp.flattening(best_leg + 1)?);
    let w1s: Vec<Vec<Matrix<F>>> = (0..=n1).map(|k| enumerate_rref(&f, k, n1, guard)).collect::<Result<_>>()?;
    let w2s: Vec<Vec<Matrix<F>>> = (0..=n2).map(|k| enumerate_rref(&f, k, n2, guard)).collect::<Result<_>>()?;
    let id3 = Matrix::identity(&f, n3);
    for a1 in 0..=n1 {
        for a2 in 0..=n2 {
            if a1 + a2 >= best {
                continue;
            }
            for w1 in &w1s[n1 - a1] {
                for w2 in &w2s[n2 - a2] {
                    let s = tp.restrict(&Restriction::new(w1.clone(), w2.clone(), id3.clone()))?;
                    let flat = s.flattening(3)?;
                    let a3 = flat.rank();
                    if a1 + a2 + a3 < best {
                        best = a1 + a2 + a3;
                        spaces = [w1.kernel(), w2.kernel(), column_space(&flat)];
                    }
                }
            }
        }
    }
    let mut out: [Option<Matrix<F>>; 3] = [None, None, None];
    for (l, m) in spaces.into_iter().enumerate() {
        out[perm[l]] = Some(m);
    }
    let spaces = out.map(|m| m.expect("perm is a permutation"));
    if !verify_slice_decomposition(t, &spaces)? {
        return Err(Error::VerificationFailed("slice rank witness does not contain the tensor".into()));
    }
    Ok(SliceRank { value: best, spaces })
}

/// Basis of the column space, as rows.
fn column_space<F: Field>(m: &Matrix<F>) -> Matrix<F> {
    let mt = m.transpose();
    let rows = mt.independent_rows();
    let cols: Vec<usize> = (0..mt.cols()).collect();
    mt.submatrix(&rows, &cols)
}

/// Flops budget below which the min-rank precondition is checked exhaustively.
const MINRANK_CHECK_BUDGET: u128 = 1 << 32;

/// `Q(T) >= c` from `c` independent 3-slices whose span has min-rank at
/// least `2c(c-1)`, by peeling off one diagonal position per slice and
/// deleting at most `2(c-1)` rows and columns each time.
pub fn subrank_from_minrank<F: Field>(t: &Tensor3<F>, idx: &[usize], guard: u64) -> Result<SubrankCertificate<F>> {
    let f = t.field().clone();
    let c = idx.len();
    if c == 0 {
        return Err(Error::BadParams("need at least one slice".into()));
    }
    let mut ws = SliceWorkspace::with_slices(t, idx)?;
    let [n1, n2, _] = t.dims();
    let need = 2 * c * (c - 1);
    let flat = crate::matrix::vectorize_all(&f, &ws.slices, n1 * n2)?;
    if flat.rank() < c {
        return Err(Error::PreconditionFailed(format!("the {c} slices are linearly dependent")));
    }
    if let FieldSize::Finite(q) = f.size() {
        let count = projective_count(q, c).unwrap_or(u64::MAX);
        let cost = count as u128 * (n1 * n2 * n1.min(n2)) as u128;
        if count <= guard && cost <= MINRANK_CHECK_BUDGET && need > 0 {
            let span = crate::tensor::SliceSpan::from_matrices(&f, (n1, n2), ws.slices.clone())?;
            let mr = min_rank_exhaustive(&span, guard)?;
            if mr.value < need {
                return Err(Error::PreconditionFailed(format!("min-rank {} is below 2c(c-1) = {need}", mr.value)));
            }
        }
    }
    for i in 0..c {
        // A pivot for slice i outside the first i rows and columns.
        let (rows, cols) = (ws.rows(), ws.cols());
        let pos = (i..rows).flat_map(|j| (i..cols).map(move |k| (j, k))).find(|&(j, k)| !f.is_zero(ws.slices[i].get(j, k)));
        let (j, k) = pos.ok_or_else(|| Error::PreconditionFailed(format!("slice {i} vanished after {i} steps")))?;
        ws.swap_rows(i, j);
        ws.swap_cols(i, k);
        let inv = f.inv(ws.slices[i].get(i, i))?;
        ws.scale_row(i, &inv);
        for j in i + 1..ws.rows() {
            let x = ws.slices[i].get(j, i).clone();
            if !f.is_zero(&x) {
                ws.row_axpy(j, i, &f.neg(&x));
            }
        }
        for k in i + 1..ws.cols() {
            let x = ws.slices[i].get(i, k).clone();
            if !f.is_zero(&x) {
                ws.col_axpy(k, i, &f.neg(&x));
            }
        }
        for s in 0..c {
            if s == i {
                continue;
            }
            let x = ws.slices[s].get(i, i).clone();
            if !f.is_zero(&x) {
                ws.slice_axpy(s, i, &f.neg(&x));
            }
            // Row i of slice s: fold into one column, then delete it.
            if let Some(k) = (i + 1..ws.cols()).find(|&k| !f.is_zero(ws.slices[s].get(i, k))) {
                let pivot = ws.slices[s].get(i, k).clone();
                for k2 in i + 1..ws.cols() {
                    if k2 != k && !f.is_zero(ws.slices[s].get(i, k2)) {
                        let x = f.neg(&f.div(ws.slices[s].get(i, k2), &pivot)?);
                        ws.col_axpy(k2, k, &x);
                    }
                }
                ws.remove_col(k);
            }
            if let Some(j) = (i + 1..ws.rows()).find(|&j| !f.is_zero(ws.slices[s].get(j, i))) {
                let pivot = ws.slices[s].get(j, i).clone();
                for j2 in i + 1..ws.rows() {
                    if j2 != j && !f.is_zero(ws.slices[s].get(j2, i)) {
                        let x = f.neg(&f.div(ws.slices[s].get(j2, i), &pivot)?);
                        ws.row_axpy(j2, j, &x);
                    }
                }
                ws.remove_row(j);
            }
        }
    }
    let keep: Vec<usize> = (0..c).collect();
    ws.keep_rows(&keep);
    ws.keep_cols(&keep);
    if !ws.is_unit(c)? {
        return Err(Error::VerificationFailed("elimination did not reach the unit tensor".into()));
    }
    SubrankCertificate::restriction(ws.restriction(), c, 1).checked(t, "min-rank elimination")
}

/// Finish from 2x2 slices `A = E11`, `B` with `B[1][1] != 0`.
fn finish_two_by_two<F: Field>(ws: &mut SliceWorkspace<F>) -> Result<()> {
    let f = ws.field.clone();
    let b11 = ws.slices[1].get(1, 1).clone();
    ws.scale_slice(1, &f.inv(&b11)?);
    let s = ws.slices[1].get(1, 0).clone();
    ws.col_axpy(0, 1, &f.neg(&s));
    let u = ws.slices[1].get(0, 1).clone();
    ws.row_axpy(0, 1, &f.neg(&u));
    let t = ws.slices[1].get(0, 0).clone();
    ws.slice_axpy(1, 0, &f.neg(&t));
    Ok(())
}

/// `Q(T) = 2` for concise `T` of format `(n1, n2, 2)` with `n1, n2 > 2`,
/// following the case split on the rank of the first slice.
pub fn subrank_c2<F: Field>(t: &Tensor3<F>) -> Result<SubrankCertificate<F>> {
    if !t.is_concise() {
        return Err(Error::NotConcise);
    }
    let [n1, n2, n3] = t.dims();
    if n3 != 2 || n1 <= 2 || n2 <= 2 {
        return Err(Error::BadDims(format!("need (n1, n2, 2) with n1, n2 > 2, got {:?}", t.dims())));
    }
    let f = t.field().clone();
    let mut ws = SliceWorkspace::new(t)?;
    if ws.slices[0].rank() == 1 {
        ws.swap_slices(0, 1);
    }
    let (p, q, r) = ws.slices[0].equivalence_form();
    ws.left_transform(&p)?;
    ws.right_transform(&q)?;
    if r < 2 {
        return Err(Error::VerificationFailed("both slices have rank one".into()));
    }
    if r < n1.min(n2) {
        // Reduce the rows below the identity block of A using B.
        let bottom: Vec<usize> = (r..n1).collect();
        let all: Vec<usize> = (0..n2).collect();
        let red = ws.slices[1].submatrix(&bottom, &all).rref();
        let lift = Matrix::identity(&f, r).direct_sum(&red.transform);
        ws.left_transform(&lift)?;
        let (row_off, col) = red
            .pivots
            .first()
            .map(|&c| (0usize, c))
            .ok_or_else(|| Error::VerificationFailed("rows below the block vanish".into()))?;
        let brow = r + row_off;
        for a in 0..r {
            let x = ws.slices[1].get(a, col).clone();
            if !f.is_zero(&x) {
                ws.row_axpy(a, brow, &f.neg(&x));
            }
        }
        let c = (0..r).find(|&c| c != col).expect("r >= 2");
        ws.keep_rows(&[c, brow]);
        ws.keep_cols(&[c, col]);
        finish_two_by_two(&mut ws)?;
    } else if let Some((a, b)) = (0..n1).flat_map(|a| (0..n2).map(move |b| (a, b))).find(|&(a, b)| a != b && !f.is_zero(ws.slices[1].get(a, b))) {
        let c = (0..r).find(|&c| c != a && c != b).expect("r >= 3");
        ws.keep_rows(&[c, a]);
        ws.keep_cols(&[c, b]);
        finish_two_by_two(&mut ws)?;
    } else {
        let (a, b) = (0..r)
            .flat_map(|a| (a + 1..r).map(move |b| (a, b)))
            .find(|&(a, b)| ws.slices[1].get(a, a) != ws.slices[1].get(b, b))
            .ok_or_else(|| Error::VerificationFailed("second slice is a multiple of the first".into()))?;
        ws.keep_rows(&[a, b]);
        ws.keep_cols(&[a, b]);
        let x = ws.slices[1].get(0, 0).clone();
        let y = ws.slices[1].get(1, 1).clone();
        ws.slice_axpy(1, 0, &f.neg(&y));
        ws.scale_slice(1, &f.inv(&f.sub(&x, &y))?);
        ws.slice_axpy(0, 1, &f.neg(&f.one()));
        ws.swap_slices(0, 1);
    }
    if !ws.is_unit(2)? {
        return Err(Error::VerificationFailed("case analysis did not reach <2>".into()));
    }
    SubrankCertificate::restriction(ws.restriction(), 2, 1).checked(t, "c = 2 construction")
}

/// Restriction from `T` to the matrix multiplication form of a slice
/// witness: leg `dir` collapses to one coordinate, the other two carry `I_r`.
pub fn matmul_form<F: Field>(t: &Tensor3<F>, w: &SliceWitness<F>, r: usize) -> Result<Restriction<F>> {
    let f = t.field();
    if !(1..=3).contains(&w.dir) {
        return Err(Error::WitnessInvalid(format!("direction {}", w.dir)));
    }
    let m = w.matrix(t)?;
    let (p, q, k) = m.equivalence_form();
    if k < r {
        return Err(Error::WitnessInvalid(format!("slice has rank {k}, need {r}")));
    }
    let first: Vec<usize> = (0..r).collect();
    let pr = p.submatrix(&first, &(0..p.cols()).collect::<Vec<_>>());
    let qt = q.transpose();
    let qr = qt.submatrix(&first, &(0..qt.cols()).collect::<Vec<_>>());
    let collapse = Matrix::from_vec(f, 1, w.coeffs.len(), w.coeffs.clone())?;
    let maps = match w.dir {
        1 => [collapse, pr, qr],
        2 => [pr, collapse, qr],
        _ => [pr, qr, collapse],
    };
    Ok(Restriction { maps })
}

fn other_dir(i: usize, j: usize) -> usize {
    6 - i - j
}

/// `Q(T^{⊠2}) >= r` from rank-`r` slices in two different directions.
pub fn two_direction_square<F: Field>(t: &Tensor3<F>, wi: &SliceWitness<F>, wj: &SliceWitness<F>, r: usize) -> Result<SubrankCertificate<F>> {
    if wi.dir == wj.dir {
        return Err(Error::WitnessInvalid("witnesses must use different directions".into()));
    }
    let f = t.field();
    let a = matmul_form(t, wi, r)?;
    let b = matmul_form(t, wj, r)?;
    let mut prod = a.kron(&b)?;
    let k = other_dir(wi.dir, wj.dir) - 1;
    let mut proj = Matrix::zeros(f, r, r * r);
    for x in 0..r {
        proj.set(x, x * r + x, f.one());
    }
    prod.maps[k] = proj.mul(&prod.maps[k])?;
    SubrankCertificate::restriction(prod, r, 2).checked(t, "two-direction square")
}

#[derive(Clone, Debug)]
pub struct MamuCube<F: Field> {
    /// `T^{⊠3} -> <Q2, Q3, Q1>`.
    pub restriction: Restriction<F>,
    pub sizes: [usize; 3],
    /// Whether the restriction was replayed on `T^{⊠3}` itself; otherwise
    /// each of the three factors was replayed on `T`.
    pub whole_verified: bool,
    /// `min(Q1Q2, Q2Q3, Q1Q3)^{1/3}`, resting on the known asymptotic subrank
    /// of matrix multiplication tensors rather than on this restriction alone.
    pub bound: RootBound,
}

/// `T^{⊠3} >= <Q2, Q3, Q1>` from one witness per direction, given in
/// direction order.
pub fn mamu_cube<F: Field>(t: &Tensor3<F>, ws: &[SliceWitness<F>; 3]) -> Result<MamuCube<F>> {
    let f = t.field();
    for (d, w) in ws.iter().enumerate() {
        if w.dir != d + 1 {
            return Err(Error::WitnessInvalid(format!("witness {} is for direction {}", d + 1, w.dir)));
        }
        if w.rank == 0 {
            return Err(Error::WitnessInvalid(format!("direction {} witness has rank 0", d + 1)));
        }
    }
    let [q1, q2, q3] = [ws[0].rank, ws[1].rank, ws[2].rank];
    let x = matmul_form(t, &ws[1], q2)?;
    let y = matmul_form(t, &ws[2], q3)?;
    let z = matmul_form(t, &ws[0], q1)?;
    let factors = [(&x, [q2, 1, q2]), (&y, [q3, q3, 1]), (&z, [1, q1, q1])];
    let mut prod = x.kron(&y)?.kron(&z)?;
    // The product indexes leg 3 by (i, k) -> i*c + k; the target uses k*a + i.
    let (a, c) = (q2, q1);
    let mut perm = Matrix::zeros(f, a * c, a * c);
    for i in 0..a {
        for k in 0..c {
            perm.set(k * a + i, i * c + k, f.one());
        }
    }
    prod.maps[2] = perm.mul(&prod.maps[2])?;
    let whole_verified = match t.kron_power(3) {
        Ok(cube) => {
            let target = crate::catalog::matmul(f, q2, q3, q1)?;
            if !verify_restriction(&prod, &cube, &target)? {
                return Err(Error::VerificationFailed("cube restriction does not reach the matrix multiplication tensor".into()));
            }
            true
        }
        Err(Error::ResourceGuard { .. }) => {
            for (r, dims) in factors {
                let got = t.restrict(r)?;
                if got.dims() != dims || !is_diagonal_form(&got) {
                    return Err(Error::VerificationFailed("a cube factor does not restrict to its matrix multiplication form".into()));
                }
            }
            false
        }
        Err(e) => return Err(e),
    };
    let m = (q1 * q2).min(q2 * q3).min(q1 * q3);
    Ok(MamuCube { restriction: prod, sizes: [q1, q2, q3], whole_verified, bound: RootBound::integer(m as u64, 3) })
}

/// One leg of size 1 and `e_a ⊗ e_a` on the other two.
fn is_diagonal_form<F: Field>(t: &Tensor3<F>) -> bool {
    let f = t.field();
    let [a, b, c] = t.dims();
    (0..a).all(|i| {
        (0..b).all(|j| {
            (0..c).all(|k| {
                let idx = [i, j, k];
                let big: Vec<usize> = (0..3).filter(|&l| t.dims()[l] != 1).map(|l| idx[l]).collect();
                let want = big.windows(2).all(|w| w[0] == w[1]);
                if want { f.is_one(t.get(i, j, k)) } else { f.is_zero(t.get(i, j, k)) }
            })
        })
    })
}

/// Smallest `n` with `(ε(c) n / c)^{1/(2c)} >= c^2`, namely `c^{4c+2} 3^{c-1}`.
pub fn compute_n(c: usize) -> Result<BigUint> {
    if c < 2 {
        return Err(Error::BadParams("N(c) is defined for c >= 2".into()));
    }
    Ok(BigUint::from(c).pow(4 * c as u32 + 2) * BigUint::from(3u32).pow(c as u32 - 1))
}

/// Certified lower bound on the min-rank of `span(Y)` for the mixed
/// Kronecker set of `factors` (first `b` are the "B" factors). For each
/// combination the bound is the rank of one block of the big matrix: rows
/// and columns from `J` at the B-positions of a word with the most B's and
/// fixed indices elsewhere. Such a block is diagonal, so its rank is its
/// number of nonzero diagonal entries.
pub fn mixed_minrank_lower_bound<F: Field>(factors: &[Matrix<F>], b: usize, j: &[usize], m: usize, l: usize, guard: u64) -> Result<usize> {
    let f = factors.first().ok_or(Error::ZeroSpan)?.field().clone();
    let c = factors.len();
    let (n1, n2) = factors[0].shape();
    for (s, fac) in factors.iter().enumerate() {
        for &x in j {
            for &y in j {
                let v = fac.get(x, y);
                let bad = if s < b { x != y && !f.is_zero(v) } else { !f.is_zero(v) };
                if bad {
                    return Err(Error::PreconditionFailed(format!("factor {s} has the wrong shape on J x J")));
                }
            }
        }
    }
    let mut words: Vec<Vec<usize>> = Vec::new();
    let mut w = vec![0usize; m];
    loop {
        if w.iter().filter(|&&x| x < b).count() >= l {
            words.push(w.clone());
        }
        let mut pos = m;
        let mut done = true;
        while pos > 0 {
            pos -= 1;
            w[pos] += 1;
            if w[pos] < c {
                done = false;
                break;
            }
            w[pos] = 0;
        }
        if done {
            break;
        }
    }
    if words.is_empty() {
        return Err(Error::ZeroSpan);
    }
    let q = finite_size(&f)?;
    let count = projective_count(q, words.len()).unwrap_or(u64::MAX);
    if count > guard {
        return Err(Error::guard("mixed products combinations", count, guard));
    }
    let jl = j.len();
    let mut worst = usize::MAX;
    for_each_projective(&f, words.len(), |u| {
        let nz: Vec<usize> = (0..words.len()).filter(|&i| !f.is_zero(&u[i])).collect();
        let bcount = |i: usize| words[i].iter().filter(|&&x| x < b).count();
        let k = nz.iter().map(|&i| bcount(i)).max().unwrap_or(0);
        let w0 = &words[*nz.iter().find(|&&i| bcount(i) == k).expect("nonzero combination")];
        let bpos: Vec<usize> = (0..m).filter(|&s| w0[s] < b).collect();
        let opos: Vec<usize> = (0..m).filter(|&s| w0[s] >= b).collect();
        let outer = (n1 * n2).pow(opos.len() as u32);
        let mut lb = 0;
        for o in 0..outer {
            // Decode (p_s, q_s) for the non-B positions.
            let mut rest = o;
            let mut pq = vec![(0usize, 0usize); m];
            for &s in opos.iter().rev() {
                let cell = rest % (n1 * n2);
                rest /= n1 * n2;
                pq[s] = (cell / n2, cell % n2);
            }
            let mut nonzero = 0;
            for d in 0..jl.pow(bpos.len() as u32) {
                let mut rest = d;
                let mut idx = pq.clone();
                for &s in bpos.iter().rev() {
                    let x = j[rest % jl];
                    rest /= jl;
                    idx[s] = (x, x);
                }
                let mut acc = f.zero();
                for &i in &nz {
                    let mut term = u[i].clone();
                    for s in 0..m {
                        term = f.mul(&term, factors[words[i][s]].get(idx[s].0, idx[s].1));
                        if f.is_zero(&term) {
                            break;
                        }
                    }
                    acc = f.add(&acc, &term);
                }
                if !f.is_zero(&acc) {
                    nonzero += 1;
                }
            }
            if nonzero > 0 {
                lb = nonzero;
                break;
            }
        }
        worst = worst.min(lb);
        worst > 0
    })?;
    Ok(worst)
}

/// Output of the narrow-tensor pipeline at a given power.
#[derive(Clone, Debug)]
pub struct NarrowRun<F: Field> {
    pub diag: DiagMinrank<F>,
    pub words: Vec<Vec<usize>>,
    pub certificate: SubrankCertificate<F>,
}

/// The narrow-tensor construction at power `m` with threshold `l`, without
/// the size conditions that make it provably succeed: min-rank
/// diagonalization of the 3-slice span, mixed Kronecker products, then
/// elimination on `⌈c^m / 2⌉` of them.
pub fn narrow_pipeline<F: Field>(t: &Tensor3<F>, m: u32, l: usize, limits: &Limits, seed: u64) -> Result<NarrowRun<F>> {
    let f = t.field().clone();
    let c = t.dims()[2];
    if m == 0 || l == 0 || l > m as usize {
        return Err(Error::BadParams(format!("need 1 <= l <= m, got l = {l}, m = {m}")));
    }
    let entries = t.dims().iter().try_fold(1u128, |acc, &n| acc.checked_mul((n as u128).checked_pow(m)?));
    match entries {
        Some(e) if e <= MAX_ENTRIES as u128 => {}
        other => return Err(Error::guard("tensor power entries", other.map_or("overflow".to_string(), |e| e.to_string()), MAX_ENTRIES)),
    }
    let span = t.slice_span(1, 2)?;
    let diag = minrk_diag_pipeline(&span, limits, seed)?;
    let b = diag.b;
    let target = (c.pow(m) + 1) / 2;
    let total = mixed_kron_count(b, c, m as usize, l).unwrap_or(0);
    if total < target as u128 {
        return Err(Error::PreconditionFailed(format!("only {total} mixed products, need {target}")));
    }
    let need = 2 * target * (target.saturating_sub(1));
    let guaranteed = (diag.minrank_jj as u128).pow(l as u32);
    if guaranteed < need as u128 {
        return Err(Error::PreconditionFailed(format!("min-rank bound {guaranteed} is below 2c'(c'-1) = {need}")));
    }
    let mut words = Vec::new();
    let mut w = vec![0usize; m as usize];
    'outer: loop {
        if w.iter().filter(|&&x| x < b).count() >= l {
            words.push(w.clone());
            if words.len() == target {
                break;
            }
        }
        let mut pos = w.len();
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            w[pos] += 1;
            if w[pos] < c {
                break;
            }
            w[pos] = 0;
        }
    }
    // T^{⊠m} -> tensor whose 3-slices are the chosen products.
    let mut l1 = diag.u.clone();
    let mut l2 = diag.v.transpose();
    for _ in 1..m {
        l1 = l1.kron(&diag.u)?;
        l2 = l2.kron(&diag.v.transpose())?;
    }
    let mut l3 = Matrix::zeros(&f, 0, 0);
    for (y, word) in words.iter().enumerate() {
        let mut row = Matrix::from_vec(&f, 1, c, diag.coeffs[word[0]].clone())?;
        for &s in &word[1..] {
            row = row.kron(&Matrix::from_vec(&f, 1, c, diag.coeffs[s].clone())?)?;
        }
        if y == 0 {
            l3 = row;
        } else {
            l3 = Matrix::concat_rows(&f, &[l3, row], c.pow(m))?;
        }
    }
    let to_y = Restriction::new(l1, l2, l3);
    // Same tensor as restricting T^{⊠m} by `to_y`, built slice by slice.
    let ys = words
        .iter()
        .map(|word| word[1..].iter().try_fold(diag.basis[word[0]].clone(), |acc, &s| acc.kron(&diag.basis[s])))
        .collect::<Result<Vec<_>>>()?;
    let ty = Tensor3::from_slices3(&f, &ys)?;
    let all: Vec<usize> = (0..words.len()).collect();
    let inner = subrank_from_minrank(&ty, &all, 0)?;
    let CertificateKind::Restriction(r2) = inner.kind else { unreachable!("elimination yields restrictions") };
    let cert = SubrankCertificate::restriction(to_y.then(&r2)?, target, m).checked(t, "narrow pipeline")?;
    Ok(NarrowRun { diag, words, certificate: cert })
}

/// The narrow-tensor certificate under the hypotheses that guarantee it:
/// concise `(n1, n2, c)`, `max(n1, n2) >= N(c)`, `m >= 8c`.
pub fn narrow_certificate<F: Field>(t: &Tensor3<F>, m: u32, limits: &Limits, seed: u64) -> Result<SubrankCertificate<F>> {
    if !t.is_concise() {
        return Err(Error::NotConcise);
    }
    let [n1, n2, c] = t.dims();
    if c == 1 {
        let (i, j, _, v) = t.nonzeros().into_iter().next().ok_or(Error::ZeroTensor)?;
        let f = t.field();
        let l1 = Matrix::from_fn(f, 1, n1, |_, x| if x == i { f.one() } else { f.zero() });
        let l2 = Matrix::from_fn(f, 1, n2, |_, y| if y == j { f.one() } else { f.zero() });
        let l3 = Matrix::from_vec(f, 1, 1, vec![f.inv(&v)?])?;
        return SubrankCertificate::restriction(Restriction::new(l1, l2, l3), 1, 1).checked(t, "narrow certificate");
    }
    let threshold = compute_n(c)?;
    if BigUint::from(n1.max(n2)) < threshold {
        return Err(Error::BelowThreshold { n: n1.max(n2), threshold: threshold.to_string() });
    }
    if (m as usize) < 8 * c {
        return Err(Error::BadParams(format!("need m >= 8c = {}", 8 * c)));
    }
    let entries = [n1, n2, c].iter().try_fold(1u128, |acc, &n| acc.checked_mul((n as u128).checked_pow(m)?));
    match entries {
        Some(e) if e <= MAX_ENTRIES as u128 => {}
        other => return Err(Error::guard("tensor power entries", other.map_or("overflow".to_string(), |e| e.to_string()), MAX_ENTRIES)),
    }
    let l = (m as usize).div_ceil(2 * c);
    Ok(narrow_pipeline(t, m, l, limits, seed)?.certificate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::field::Fp;

    fn gf(p: u64) -> Fp {
        Fp::new(p).unwrap()
    }

    #[test]
    fn unit_tensor_values() {
        let f = gf(2);
        for r in 1..=3 {
            let u = unit(&f, r).unwrap();
            assert_eq!(subrank_exact(&u, 1 << 24).unwrap().0, r);
            assert_eq!(slicerank_exact(&u, 1 << 24).unwrap().value, r);
        }
    }

    #[test]
    fn w_tensor_values() {
        let f = gf(2);
        let w = catalog::w_tensor(&f).unwrap();
        assert_eq!(subrank_exact(&w, 1 << 20).unwrap().0, 1);
        assert_eq!(slicerank_exact(&w, 1 << 20).unwrap().value, 2);
    }

    #[test]
    fn c2_on_a_few_tensors() {
        let f = gf(3);
        let t = catalog::gen_null_algebra(&f, 3, 1).unwrap();
        let _ = t;
        let mut a = Matrix::zeros(&f, 3, 3);
        let mut b = Matrix::zeros(&f, 3, 3);
        for i in 0..3 {
            a.set(i, i, 1);
            b.set(i, i, i as u32);
        }
        let t = Tensor3::from_slices3(&f, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(subrank_c2(&t).unwrap().r, 2);
        b.set(0, 1, 1);
        let t = Tensor3::from_slices3(&f, &[a, b]).unwrap();
        assert_eq!(subrank_c2(&t).unwrap().r, 2);
    }

    #[test]
    fn c2_rejects_non_concise() {
        let f = gf(3);
        let a = Matrix::from_i64(&f, &[&[1, 1], &[1, 1]]).unwrap();
        let b = Matrix::from_i64(&f, &[&[1, 1], &[2, 2]]).unwrap();
        let t = Tensor3::from_slices3(&f, &[a, b]).unwrap();
        assert!(matches!(subrank_c2(&t), Err(Error::NotConcise)));
    }

    #[test]
    fn minrank_elimination_on_diagonals() {
        let f = gf(5);
        let n = 5;
        let id = Matrix::identity(&f, n);
        let d = Matrix::diagonal(&f, &[0, 1, 2, 3, 4]);
        let t = Tensor3::from_slices3(&f, &[id, d]).unwrap();
        let cert = subrank_from_minrank(&t, &[0, 1], 1 << 20).unwrap();
        assert_eq!(cert.r, 2);
        assert!(cert.verify(&t).unwrap());
    }

    #[test]
    fn square_and_cube_on_null_algebra() {
        let f = gf(11);
        let t = catalog::null_algebra(&f, 5).unwrap();
        let w1 = SliceWitness { dir: 1, coeffs: vec![1, 0, 0, 0, 0], rank: 5 };
        let w3 = SliceWitness { dir: 3, coeffs: vec![1, 0, 0, 0, 0], rank: 5 };
        let cert = two_direction_square(&t, &w1, &w3, 5).unwrap();
        assert_eq!((cert.r, cert.power), (5, 2));
        let u = unit(&f, 2).unwrap();
        let ws = [1, 2, 3].map(|d| SliceWitness { dir: d, coeffs: vec![1, 1], rank: 2 });
        let cube = mamu_cube(&u, &ws).unwrap();
        assert_eq!(cube.bound, RootBound::integer(4, 3));
    }

    #[test]
    fn compute_n_values() {
        assert_eq!(compute_n(2).unwrap(), BigUint::from(3072u32));
        for c in 2..5 {
            assert!(compute_n(c + 1).unwrap() > compute_n(c).unwrap());
        }
    }
}
