//! Restricting a matrix space to a principal block where it is diagonal
//! with large minimum rank, and Kronecker products of such spaces.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::field::{Field, FieldSize};
use crate::matrix::Matrix;
use crate::slice_space::{for_each_projective, max_rank_exhaustive, max_rank_randomized, projective_count, Limits};
use crate::tensor::SliceSpan;

/// `ε(c) = 1 / (c * 3^{c-1})`.
pub fn epsilon(c: usize) -> BigRational {
    assert!(c >= 1);
    BigRational::new(BigInt::from(1), BigInt::from(c) * BigInt::from(3).pow(c as u32 - 1))
}

/// `U`, `V` and an index set `I` such that every `U * mats[s] * V` is
/// diagonal on `I x I`, and `U * V` is the identity there.
#[derive(Clone, Debug)]
pub struct Diagonalized<F: Field> {
    pub u: Matrix<F>,
    pub v: Matrix<F>,
    pub indices: Vec<usize>,
}

/// Greedy elimination: for each non-identity matrix and each surviving
/// position `t` in order, clear row `t` with column operations and
/// column `t` with row operations, using one pivot column `j` and one pivot
/// row `i`, then drop `i` and `j`. Each position costs at most two others,
/// so a third of the indices survive each matrix.
pub fn diagonalize_principal<F: Field>(mats: &[Matrix<F>]) -> Result<Diagonalized<F>> {
    let first = mats.first().ok_or(Error::ZeroSpan)?;
    let f = first.field().clone();
    let n = first.rows();
    if mats.iter().any(|m| m.shape() != (n, n)) {
        return Err(Error::ShapeMismatch("diagonalization needs equal square matrices".into()));
    }
    if *first != Matrix::identity(&f, n) {
        return Err(Error::PreconditionFailed("first matrix must be the identity".into()));
    }
    let mut cur: Vec<Matrix<F>> = mats.to_vec();
    let mut u = Matrix::identity(&f, n);
    let mut v = Matrix::identity(&f, n);
    let mut active: Vec<usize> = (0..n).collect();
    for s in 1..mats.len() {
        let mut pos = 0;
        while pos < active.len() {
            let t = active[pos];
            let later: Vec<usize> = active[pos + 1..].to_vec();
            let xs: Vec<usize> = later.iter().copied().filter(|&l| !f.is_zero(cur[s].get(t, l))).collect();
            let mut drop = Vec::new();
            if let Some(&j) = xs.first() {
                let pivot = cur[s].get(t, j).clone();
                for &l in &xs[1..] {
                    let c = f.neg(&f.div(cur[s].get(t, l), &pivot)?);
                    for m in cur.iter_mut() {
                        m.col_axpy(l, j, &c);
                    }
                    v.col_axpy(l, j, &c);
                }
                drop.push(j);
            }
            let ys: Vec<usize> = later
                .iter()
                .copied()
                .filter(|&l| !drop.contains(&l) && !f.is_zero(cur[s].get(l, t)))
                .collect();
            if let Some(&i) = ys.first() {
                let pivot = cur[s].get(i, t).clone();
                for &l in &ys[1..] {
                    let c = f.neg(&f.div(cur[s].get(l, t), &pivot)?);
                    for m in cur.iter_mut() {
                        m.row_axpy(l, i, &c);
                    }
                    u.row_axpy(l, i, &c);
                }
                drop.push(i);
            }
            active.retain(|x| !drop.contains(x));
            pos += 1;
        }
    }
    for (s, m) in cur.iter().enumerate() {
        for &a in &active {
            for &b in &active {
                let want_zero = a != b;
                let ok = if want_zero {
                    f.is_zero(m.get(a, b))
                } else if s == 0 {
                    f.is_one(m.get(a, b))
                } else {
                    true
                };
                if !ok {
                    return Err(Error::VerificationFailed(format!("matrix {s} is not diagonal on the kept block")));
                }
            }
        }
    }
    Ok(Diagonalized { u, v, indices: active })
}

/// Enumerate nonzero vectors of the row space of `basis` up to scaling.
fn for_each_vector<F: Field>(basis: &Matrix<F>, guard: u64, mut visit: impl FnMut(Vec<F::Elem>) -> bool) -> Result<()> {
    let f = basis.field();
    let d = basis.rows();
    if let FieldSize::Finite(q) = f.size() {
        let count = projective_count(q, d).unwrap_or(u64::MAX);
        if count > guard {
            return Err(Error::guard("subspace enumeration", count, guard));
        }
    }
    for_each_projective(f, d, |c| {
        let row = Matrix::from_vec(f, 1, d, c.to_vec()).expect("d coefficients");
        let v = row.mul(basis).expect("shapes agree");
        visit(v.data().to_vec())
    })
}

/// Nonzero vector of the row space supported inside `allowed`, if any.
fn vector_supported_in<F: Field>(basis: &Matrix<F>, allowed: &[usize]) -> Option<Vec<F::Elem>> {
    let n = basis.cols();
    let outside: Vec<usize> = (0..n).filter(|i| !allowed.contains(i)).collect();
    // Coefficients x with (x * basis)_i = 0 for i outside `allowed`.
    let rows: Vec<usize> = (0..basis.rows()).collect();
    let sub = basis.submatrix(&rows, &outside);
    let ker = sub.transpose().kernel();
    (0..ker.rows()).find_map(|r| {
        let x = Matrix::from_vec(basis.field(), 1, basis.rows(), ker.row(r).to_vec()).ok()?;
        let v = x.mul(basis).ok()?;
        (!v.is_zero()).then(|| v.data().to_vec())
    })
}

fn subsets_of_size(items: &[usize], s: usize, out: &mut Vec<Vec<usize>>, guard: u64) -> Result<()> {
    fn rec(items: &[usize], s: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, guard: u64) -> Result<()> {
        if cur.len() == s {
            if out.len() as u64 >= guard {
                return Err(Error::guard("support subsets", format!("more than {guard}"), guard));
            }
            out.push(cur.clone());
            return Ok(());
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, s, i + 1, cur, out, guard)?;
            cur.pop();
        }
        Ok(())
    }
    rec(items, s, 0, &mut Vec::new(), out, guard)
}

/// First nonzero vector (in the fixed enumeration) whose support outside
/// `removed` is nonempty and has `c * |supp| < k`.
fn small_vector<F: Field>(basis: &Matrix<F>, removed: &[usize], c: usize, k: usize, guard: u64) -> Result<Option<Vec<F::Elem>>> {
    let f = basis.field();
    let n = basis.cols();
    match f.size() {
        FieldSize::Finite(_) => {
            let mut found = None;
            for_each_vector(basis, guard, |v| {
                let w = (0..n).filter(|i| !removed.contains(i) && !f.is_zero(&v[*i])).count();
                if w > 0 && c * w < k {
                    found = Some(v);
                    false
                } else {
                    true
                }
            })?;
            Ok(found)
        }
        FieldSize::Infinite => {
            // A small support outside `removed` means a nonzero vector vanishing
            // outside `removed ∪ S` for a small set S; try S by size.
            let rest: Vec<usize> = (0..n).filter(|i| !removed.contains(i)).collect();
            let max_w = (k.saturating_sub(1)) / c;
            for s in 1..=max_w.min(rest.len()) {
                let mut subsets = Vec::new();
                subsets_of_size(&rest, s, &mut subsets, guard)?;
                for sset in subsets {
                    let allowed: Vec<usize> = removed.iter().chain(&sset).copied().collect();
                    if let Some(v) = vector_supported_in(basis, &allowed) {
                        let w = (0..n).filter(|i| !removed.contains(i) && !f.is_zero(&v[*i])).count();
                        if w > 0 {
                            return Ok(Some(v));
                        }
                    }
                }
            }
            Ok(None)
        }
    }
}

/// Largest support in the row space: by enumeration over finite fields,
/// the union of supports over infinite ones.
pub fn max_support<F: Field>(basis: &Matrix<F>, guard: u64) -> Result<usize> {
    let f = basis.field();
    match f.size() {
        FieldSize::Finite(_) => {
            let mut best = 0;
            for_each_vector(basis, guard, |v| {
                best = best.max(v.iter().filter(|x| !f.is_zero(x)).count());
                true
            })?;
            Ok(best)
        }
        FieldSize::Infinite => Ok((0..basis.cols())
            .filter(|&j| (0..basis.rows()).any(|i| !f.is_zero(basis.get(i, j))))
            .count()),
    }
}

/// Smallest support of a nonzero vector in the row space.
pub fn min_support<F: Field>(basis: &Matrix<F>, guard: u64) -> Result<usize> {
    let f = basis.field();
    let n = basis.cols();
    if basis.rank() == 0 {
        return Err(Error::ZeroSpan);
    }
    match f.size() {
        FieldSize::Finite(_) => {
            let mut best = usize::MAX;
            for_each_vector(basis, guard, |v| {
                let w = v.iter().filter(|x| !f.is_zero(x)).count();
                if w > 0 {
                    best = best.min(w);
                }
                best > 1
            })?;
            Ok(best)
        }
        FieldSize::Infinite => {
            let all: Vec<usize> = (0..n).collect();
            for s in 1..=n {
                let mut subsets = Vec::new();
                subsets_of_size(&all, s, &mut subsets, guard)?;
                if subsets.iter().any(|sset| vector_supported_in(basis, sset).is_some()) {
                    return Ok(s);
                }
            }
            unreachable!("a nonzero space has a nonzero vector")
        }
    }
}

/// Index set `I` on which every nonzero vector of the restricted space has
/// support at least `maxsupp(V) / dim V`. Built greedily: while some vector
/// has small nonzero support outside the removed set, remove that support.
pub fn minsupp_restrict<F: Field>(basis: &Matrix<F>, guard: u64) -> Result<Vec<usize>> {
    let n = basis.cols();
    let rows: Vec<usize> = basis.independent_rows();
    if rows.is_empty() {
        return Err(Error::ZeroSpan);
    }
    let cols: Vec<usize> = (0..n).collect();
    let basis = basis.submatrix(&rows, &cols);
    let c = basis.rows();
    let k = max_support(&basis, guard)?;
    let mut removed: Vec<usize> = Vec::new();
    let f = basis.field().clone();
    while let Some(v) = small_vector(&basis, &removed, c, k, guard)? {
        for i in 0..n {
            if !f.is_zero(&v[i]) && !removed.contains(&i) {
                removed.push(i);
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|i| !removed.contains(i)).collect();
    Ok(keep)
}

fn diagonal_vectors<F: Field>(mats: &[Matrix<F>], idx: &[usize]) -> Result<Matrix<F>> {
    let f = mats.first().ok_or(Error::ZeroSpan)?.field();
    let mut out = Matrix::zeros(f, mats.len(), idx.len());
    for (s, m) in mats.iter().enumerate() {
        for (a, &i) in idx.iter().enumerate() {
            for &j in idx {
                if i != j && !f.is_zero(m.get(i, j)) {
                    return Err(Error::PreconditionFailed("matrix is not diagonal on the index set".into()));
                }
            }
            out.set(s, a, m.get(i, i).clone());
        }
    }
    Ok(out)
}

/// [`minsupp_restrict`] applied to the diagonals of diagonal matrices; the
/// result keeps minimum rank at least `maxrank / dim`.
pub fn diag_minrank_restrict<F: Field>(span: &SliceSpan<F>, guard: u64) -> Result<Vec<usize>> {
    let n = span.shape.0;
    let idx: Vec<usize> = (0..n).collect();
    minsupp_restrict(&diagonal_vectors(&span.basis, &idx)?, guard)
}

/// A basis whose first `b` members are independent on `J x J` and whose
/// remaining members vanish there.
#[derive(Clone, Debug)]
pub struct BasisExtension<F: Field> {
    pub basis: Vec<Matrix<F>>,
    pub b: usize,
}

pub fn basis_extension<F: Field>(span: &SliceSpan<F>, j: &[usize]) -> Result<BasisExtension<F>> {
    let (n1, n2) = span.shape;
    if j.iter().any(|&x| x >= n1.min(n2)) {
        return Err(Error::IndexOutOfRange(format!("index set {j:?} in a {n1}x{n2} space")));
    }
    let (red, _) = span.reduced();
    let f = &span.field;
    if red.basis.is_empty() {
        return Ok(BasisExtension { basis: Vec::new(), b: 0 });
    }
    let restricted: Vec<Matrix<F>> = red.basis.iter().map(|m| m.submatrix(j, j)).collect();
    let flat = crate::matrix::vectorize_all(f, &restricted, j.len() * j.len())?;
    let chosen = if j.is_empty() { Vec::new() } else { flat.independent_rows() };
    let b = chosen.len();
    let mut basis: Vec<Matrix<F>> = chosen.iter().map(|&s| red.basis[s].clone()).collect();
    let cols: Vec<usize> = (0..flat.cols()).collect();
    let chosen_flat = flat.submatrix(&chosen, &cols);
    for s in 0..red.basis.len() {
        if chosen.contains(&s) {
            continue;
        }
        let mut m = red.basis[s].clone();
        if b > 0 {
            let target = flat.submatrix(&[s], &cols);
            let x = chosen_flat
                .transpose()
                .solve(&target.transpose())?
                .ok_or_else(|| Error::VerificationFailed("restriction escapes the chosen span".into()))?;
            for (t, &cs) in chosen.iter().enumerate() {
                m.axpy(&f.neg(x.get(t, 0)), &red.basis[cs]);
            }
        }
        basis.push(m);
    }
    Ok(BasisExtension { basis, b })
}

#[derive(Clone, Debug)]
pub struct DiagMinrank<F: Field> {
    /// `basis[s] = u * A'_s * v` for a basis `A'` of the input span.
    pub u: Matrix<F>,
    pub v: Matrix<F>,
    pub j: Vec<usize>,
    /// First `b` members diagonal and independent on `J x J`, the rest zero there.
    pub basis: Vec<Matrix<F>>,
    /// For each member of `basis`, its coefficients over the input spanning list.
    pub coeffs: Vec<Vec<F::Elem>>,
    pub b: usize,
    pub c: usize,
    pub maxrank: usize,
    pub minrank_jj: usize,
}

impl<F: Field> DiagMinrank<F> {
    /// `minrank_jj >= ε(c) * maxrank`.
    pub fn meets_bound(&self) -> bool {
        let c = self.c as u64;
        (self.minrank_jj as u64) * c * 3u64.pow(self.c as u32 - 1) >= self.maxrank as u64
    }
}

/// Compose: normalize a maximum-rank element to `I_k ⊕ 0`, diagonalize the
/// leading `k x k` blocks, restrict to large minimum support of the
/// diagonals, and split the basis on the resulting principal block.
pub fn minrk_diag_pipeline<F: Field>(span: &SliceSpan<F>, limits: &Limits, seed: u64) -> Result<DiagMinrank<F>> {
    use rand::SeedableRng;
    let f = span.field.clone();
    let (n1, n2) = span.shape;
    let (red, _) = span.reduced();
    let c = red.basis.len();
    if c == 0 {
        return Err(Error::ZeroSpan);
    }
    let mr = match max_rank_exhaustive(&red, limits.enum_guard) {
        Ok(m) => m,
        Err(Error::InfiniteField) | Err(Error::ResourceGuard { .. }) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            max_rank_randomized(&red, limits.trials, limits.height, &mut rng)
        }
        Err(e) => return Err(e),
    };
    let k = mr.value;
    let (p, q, _) = mr.witness.equivalence_form();
    // New basis: the witness replaces one member it depends on.
    let s0 = mr.coeffs.iter().position(|x| !f.is_zero(x)).expect("witness is nonzero");
    let mut local: Vec<Vec<F::Elem>> = Vec::with_capacity(c);
    local.push(mr.coeffs.clone());
    for s in 0..c {
        if s != s0 {
            let mut e = vec![f.zero(); c];
            e[s] = f.one();
            local.push(e);
        }
    }
    let moved: Vec<Matrix<F>> = local
        .iter()
        .map(|cf| p.mul(&red.combination(cf)).and_then(|m| m.mul(&q)))
        .collect::<Result<_>>()?;
    let lead: Vec<usize> = (0..k).collect();
    let blocks: Vec<Matrix<F>> = moved.iter().map(|m| m.submatrix(&lead, &lead)).collect();
    let dg = diagonalize_principal(&blocks)?;
    let u_full = dg.u.direct_sum(&Matrix::identity(&f, n1 - k));
    let v_full = dg.v.direct_sum(&Matrix::identity(&f, n2 - k));
    let transformed: Vec<Matrix<F>> =
        moved.iter().map(|m| u_full.mul(m).and_then(|x| x.mul(&v_full))).collect::<Result<_>>()?;
    let diag = diagonal_vectors(&transformed, &dg.indices)?;
    let keep = minsupp_restrict(&diag, limits.enum_guard)?;
    let j: Vec<usize> = keep.iter().map(|&a| dg.indices[a]).collect();
    let tspan = SliceSpan::from_matrices(&f, span.shape, transformed.clone())?;
    let ext = basis_extension(&tspan, &j)?;
    let u = u_full.mul(&p)?;
    let v = q.mul(&v_full)?;
    // Coefficients over the original spanning list, recovered by solving.
    let flat_in = crate::matrix::vectorize_all(&f, &span.basis, n1 * n2)?;
    let mut coeffs = Vec::with_capacity(ext.basis.len());
    let uinv = u.inverse()?;
    let vinv = v.inverse()?;
    for m in &ext.basis {
        let back = uinv.mul(m)?.mul(&vinv)?;
        let x = flat_in
            .transpose()
            .solve(&back.vectorize().transpose())?
            .ok_or_else(|| Error::VerificationFailed("basis left the span".into()))?;
        coeffs.push((0..span.basis.len()).map(|t| x.get(t, 0).clone()).collect());
    }
    let restricted: Vec<Matrix<F>> = ext.basis[..ext.b].iter().map(|m| m.submatrix(&j, &j)).collect();
    let minrank_jj = if ext.b == 0 { 0 } else { min_support(&diagonal_vectors(&restricted, &(0..j.len()).collect::<Vec<_>>())?, limits.enum_guard)? };
    let out = DiagMinrank { u, v, j, basis: ext.basis, coeffs, b: ext.b, c, maxrank: k, minrank_jj };
    if !out.meets_bound() {
        return Err(Error::VerificationFailed(format!(
            "minimum rank {} on the block is below ε({c}) * {k}",
            out.minrank_jj
        )));
    }
    Ok(out)
}

/// One order-`m` Kronecker product; `word[t] < b` picks a `B`, otherwise a `C`.
#[derive(Clone, Debug)]
pub struct MixedWord<F: Field> {
    pub word: Vec<usize>,
    pub matrix: Matrix<F>,
}

/// `|Y| = sum_{t >= l} C(m,t) b^t (c-b)^{m-t}`.
pub fn mixed_kron_count(b: usize, c: usize, m: usize, l: usize) -> Option<u128> {
    let mut total: u128 = 0;
    for t in l..=m {
        let binom = (0..t).try_fold(1u128, |acc, i| Some(acc.checked_mul((m - i) as u128)? / (i as u128 + 1)))?;
        let term = binom
            .checked_mul((b as u128).checked_pow(t as u32)?)?
            .checked_mul(((c - b) as u128).checked_pow((m - t) as u32)?)?;
        total = total.checked_add(term)?;
    }
    Some(total)
}

/// All order-`m` Kronecker products of `bs ∪ cs` using at least `l`
/// factors from `bs`, words in lexicographic order.
pub fn mixed_kron_set<F: Field>(bs: &[Matrix<F>], cs: &[Matrix<F>], m: usize, l: usize, guard: u64) -> Result<Vec<MixedWord<F>>> {
    if !(1 <= l && l <= m) {
        return Err(Error::BadParams(format!("need 1 <= l <= m, got l = {l}, m = {m}")));
    }
    let all: Vec<&Matrix<F>> = bs.iter().chain(cs).collect();
    let first = all.first().ok_or(Error::ZeroSpan)?;
    let (r, c0) = first.shape();
    let (b, c) = (bs.len(), all.len());
    let count = mixed_kron_count(b, c, m, l).unwrap_or(u128::MAX);
    let size = (r as u128).saturating_pow(m as u32).saturating_mul((c0 as u128).saturating_pow(m as u32));
    if count.saturating_mul(size) > guard as u128 {
        return Err(Error::guard("mixed Kronecker entries", count.saturating_mul(size), guard));
    }
    let mut out = Vec::new();
    let mut word = vec![0usize; m];
    loop {
        if word.iter().filter(|&&w| w < b).count() >= l {
            let mut acc = all[word[0]].clone();
            for &w in &word[1..] {
                acc = acc.kron(all[w])?;
            }
            out.push(MixedWord { word: word.clone(), matrix: acc });
        }
        let mut pos = m;
        loop {
            if pos == 0 {
                debug_assert_eq!(out.len() as u128, count);
                return Ok(out);
            }
            pos -= 1;
            word[pos] += 1;
            if word[pos] < c {
                break;
            }
            word[pos] = 0;
        }
    }
}
