//! Spaces of matrices spanned by tensor slices: maximum and minimum rank,
//! minimum covers by row and column subspaces, and the staircase
//! construction behind the product bound `Q_i * Q_j >= n_k`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;

use crate::bipartite::matching_and_cover;
use crate::error::{Error, Result};
use crate::field::{Field, FieldSize};
use crate::matrix::Matrix;
use crate::tensor::{SliceSpan, Tensor3};

/// Search budgets shared by the exhaustive and randomized routines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest number of projective points to enumerate.
    pub enum_guard: u64,
    /// Largest number of (row subspace, column subspace) pairs to try.
    pub cover_guard: u64,
    /// Random trials for randomized maximum rank.
    pub trials: usize,
    /// Sample range `[0, height)` for random rationals.
    pub height: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { enum_guard: 10_000_000, cover_guard: 1_000_000, trials: 64, height: 1 << 20 }
    }
}

/// `(q^d - 1) / (q - 1)`, the number of points of `P^{d-1}(F_q)`.
pub fn projective_count(q: u64, d: usize) -> Option<u64> {
    let mut total: u64 = 0;
    let mut pow: u64 = 1;
    for _ in 0..d {
        total = total.checked_add(pow)?;
        pow = pow.checked_mul(q)?;
    }
    Some(total)
}

/// Call `visit` on every coefficient vector of length `d` whose first
/// nonzero entry is one, ordered by the position of that leading one and
/// then lexicographically. Stops early when `visit` returns `false`.
pub fn for_each_projective<F: Field>(field: &F, d: usize, mut visit: impl FnMut(&[F::Elem]) -> bool) -> Result<()> {
    let q = match field.size() {
        FieldSize::Finite(q) => q,
        FieldSize::Infinite => return Err(Error::InfiniteField),
    };
    let elems = field.elements()?;
    let mut v = vec![field.zero(); d];
    for lead in 0..d {
        for x in v.iter_mut() {
            *x = field.zero();
        }
        v[lead] = field.one();
        let tail = d - lead - 1;
        let mut digits = vec![0u64; tail];
        loop {
            if !visit(&v) {
                return Ok(());
            }
            // Mixed-radix increment, last coordinate fastest.
            let mut carried_out = true;
            for pos in (0..tail).rev() {
                digits[pos] += 1;
                if digits[pos] < q {
                    v[lead + 1 + pos] = elems[digits[pos] as usize].clone();
                    carried_out = false;
                    break;
                }
                digits[pos] = 0;
                v[lead + 1 + pos] = field.zero();
            }
            if carried_out {
                break;
            }
        }
    }
    Ok(())
}

/// A rank lower bound for `Q_dir`: the combination `sum_t coeffs[t] T^{(dir)}_t`
/// has rank at least `rank`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceWitness<F: Field> {
    pub dir: usize,
    pub coeffs: Vec<F::Elem>,
    pub rank: usize,
}

impl<F: Field> SliceWitness<F> {
    pub fn matrix(&self, t: &Tensor3<F>) -> Result<Matrix<F>> {
        let span = direction_span(t, self.dir)?;
        if self.coeffs.len() != span.basis.len() {
            return Err(Error::WitnessInvalid(format!(
                "{} coefficients for {} slices",
                self.coeffs.len(),
                span.basis.len()
            )));
        }
        Ok(span.combination(&self.coeffs))
    }

    /// Recompute the rank; errors if the claim does not hold.
    pub fn check(&self, t: &Tensor3<F>) -> Result<usize> {
        let r = self.matrix(t)?.rank();
        if r < self.rank {
            return Err(Error::WitnessInvalid(format!("claimed rank {} but found {r}", self.rank)));
        }
        Ok(r)
    }
}

/// The span of the slices along `dir`, each slice in its natural orientation.
pub fn direction_span<F: Field>(t: &Tensor3<F>, dir: usize) -> Result<SliceSpan<F>> {
    match dir {
        1 => t.slice_span(2, 3),
        2 => t.slice_span(1, 3),
        3 => t.slice_span(1, 2),
        _ => Err(Error::BadParams(format!("direction {dir}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankMethod {
    Exhaustive,
    Randomized { trials: usize, sample_size: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxRank<F: Field> {
    pub value: usize,
    /// Coefficients over the spanning list of the input span.
    pub coeffs: Vec<F::Elem>,
    pub witness: Matrix<F>,
    pub method: RankMethod,
    /// Upper bound on the probability that `value` is below the true
    /// maximum rank, when randomized.
    pub failure_bound: Option<BigRational>,
}

fn spread_coeffs<F: Field>(field: &F, len: usize, idx: &[usize], local: &[F::Elem]) -> Vec<F::Elem> {
    let mut out = vec![field.zero(); len];
    for (&i, c) in idx.iter().zip(local) {
        out[i] = c.clone();
    }
    out
}

fn check_enumerable<F: Field>(span: &SliceSpan<F>, d: usize, guard: u64) -> Result<()> {
    let q = match span.field.size() {
        FieldSize::Finite(q) => q,
        FieldSize::Infinite => return Err(Error::InfiniteField),
    };
    match projective_count(q, d) {
        Some(n) if n <= guard => Ok(()),
        Some(n) => Err(Error::guard("projective enumeration", n, guard)),
        None => Err(Error::guard("projective enumeration", format!("{q}^{d}"), guard)),
    }
}

/// Exact maximum rank by enumerating one representative per line of the span.
pub fn max_rank_exhaustive<F: Field>(span: &SliceSpan<F>, guard: u64) -> Result<MaxRank<F>> {
    let f = &span.field;
    let (red, idx) = span.reduced();
    let d = red.basis.len();
    check_enumerable(span, d, guard)?;
    let ceiling = span.shape.0.min(span.shape.1);
    let mut best: Option<(usize, Vec<F::Elem>)> = None;
    for_each_projective(f, d, |c| {
        let r = red.combination(c).rank();
        if best.as_ref().map_or(true, |(b, _)| r > *b) {
            best = Some((r, c.to_vec()));
        }
        r < ceiling
    })?;
    let (value, local) = best.unwrap_or((0, Vec::new()));
    let coeffs = spread_coeffs(f, span.basis.len(), &idx, &local);
    let witness = span.combination(&coeffs);
    Ok(MaxRank { value, coeffs, witness, method: RankMethod::Exhaustive, failure_bound: None })
}

/// Randomized maximum rank: best of `trials` random combinations. A
/// combination misses the maximum with probability at most `min(n1,n2)/S`
/// for a sample set of size `S`.
pub fn max_rank_randomized<F: Field, R: Rng + ?Sized>(
    span: &SliceSpan<F>,
    trials: usize,
    height: u64,
    rng: &mut R,
) -> MaxRank<F> {
    let f = &span.field;
    let ceiling = span.shape.0.min(span.shape.1);
    let s = f.sample_size(height);
    let mut best_rank = 0;
    let mut best = vec![f.zero(); span.basis.len()];
    for _ in 0..trials.max(1) {
        let c: Vec<F::Elem> = (0..span.basis.len()).map(|_| f.random(rng, height)).collect();
        let r = span.combination(&c).rank();
        if r > best_rank {
            best_rank = r;
            best = c;
            if r == ceiling {
                break;
            }
        }
    }
    let failure_bound = if best_rank == ceiling {
        Some(BigRational::from_integer(BigInt::from(0)))
    } else if (ceiling as u64) < s {
        let p = BigRational::new(BigInt::from(ceiling), BigInt::from(s));
        Some(num_traits::pow(p, trials.max(1)))
    } else {
        Some(BigRational::one())
    };
    let witness = span.combination(&best);
    MaxRank {
        value: best_rank,
        coeffs: best,
        witness,
        method: RankMethod::Randomized { trials, sample_size: s },
        failure_bound,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinRank<F: Field> {
    pub value: usize,
    pub coeffs: Vec<F::Elem>,
    pub witness: Matrix<F>,
}

/// Exact minimum rank over the nonzero elements of the span.
pub fn min_rank_exhaustive<F: Field>(span: &SliceSpan<F>, guard: u64) -> Result<MinRank<F>> {
    let f = &span.field;
    let (red, idx) = span.reduced();
    let d = red.basis.len();
    if d == 0 {
        return Err(Error::ZeroSpan);
    }
    check_enumerable(span, d, guard)?;
    let mut best: Option<(usize, Vec<F::Elem>)> = None;
    for_each_projective(f, d, |c| {
        let r = red.combination(c).rank();
        if best.as_ref().map_or(true, |(b, _)| r < *b) {
            best = Some((r, c.to_vec()));
        }
        r > 1
    })?;
    let (value, local) = best.expect("nonzero span has a nonzero element");
    let coeffs = spread_coeffs(f, span.basis.len(), &idx, &local);
    let witness = span.combination(&coeffs);
    Ok(MinRank { value, coeffs, witness })
}

/// Rows and columns covering the union of supports of the spanning list.
/// Every element of the span is supported there, so its rank is at most
/// the size of the cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportCover {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl SupportCover {
    pub fn size(&self) -> usize {
        self.rows.len() + self.cols.len()
    }
}

pub fn support_cover<F: Field>(span: &SliceSpan<F>) -> SupportCover {
    let (n1, n2) = span.shape;
    let mut edges = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            if span.basis.iter().any(|m| !span.field.is_zero(m.get(i, j))) {
                edges.push((i, j));
            }
        }
    }
    let mc = matching_and_cover(n1, n2, &edges);
    SupportCover { rows: mc.cover_left, cols: mc.cover_right }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UpperSource {
    Exhaustive,
    SupportCover,
    Dimension,
}

/// Two-sided bounds on the maximum rank of a span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxRankBounds<F: Field> {
    pub lower: MaxRank<F>,
    pub upper: usize,
    pub upper_source: UpperSource,
}

impl<F: Field> MaxRankBounds<F> {
    pub fn is_exact(&self) -> bool {
        self.lower.value == self.upper
    }
}

/// Exhaustive when the field is finite and the span is small enough,
/// otherwise randomized from below and structural from above.
pub fn max_rank_bounds<F: Field, R: Rng + ?Sized>(
    span: &SliceSpan<F>,
    limits: &Limits,
    rng: &mut R,
) -> Result<MaxRankBounds<F>> {
    match max_rank_exhaustive(span, limits.enum_guard) {
        Ok(m) => {
            let upper = m.value;
            return Ok(MaxRankBounds { lower: m, upper, upper_source: UpperSource::Exhaustive });
        }
        Err(Error::InfiniteField) | Err(Error::ResourceGuard { .. }) => {}
        Err(e) => return Err(e),
    }
    let lower = max_rank_randomized(span, limits.trials, limits.height, rng);
    let dim = span.shape.0.min(span.shape.1);
    let cover = support_cover(span).size();
    let (upper, upper_source) =
        if cover < dim { (cover, UpperSource::SupportCover) } else { (dim, UpperSource::Dimension) };
    Ok(MaxRankBounds { lower, upper, upper_source })
}

/// Gaussian binomial coefficient `[n choose k]_q`, or `None` on overflow.
pub fn gaussian_binomial(n: usize, k: usize, q: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num = num.checked_mul((q as u128).checked_pow((n - i) as u32)?.checked_sub(1)?)?;
        den = den.checked_mul((q as u128).checked_pow((i + 1) as u32)?.checked_sub(1)?)?;
    }
    u64::try_from(num / den).ok()
}

/// Every `k x n` matrix in reduced row echelon form with rank `k`, i.e.
/// one representative per `k`-dimensional subspace of `F^n` (as row spaces).
pub fn enumerate_rref<F: Field>(field: &F, k: usize, n: usize, guard: u64) -> Result<Vec<Matrix<F>>> {
    let q = match field.size() {
        FieldSize::Finite(q) => q,
        FieldSize::Infinite => return Err(Error::InfiniteField),
    };
    let count = gaussian_binomial(n, k, q).ok_or_else(|| Error::guard("subspace enumeration", "overflow", guard))?;
    if count > guard {
        return Err(Error::guard("subspace enumeration", count, guard));
    }
    let elems = field.elements()?;
    let mut out = Vec::with_capacity(count as usize);
    let mut pivots: Vec<usize> = (0..k).collect();
    loop {
        let free: Vec<(usize, usize)> = (0..k)
            .flat_map(|r| ((pivots[r] + 1)..n).filter(|c| !pivots.contains(c)).map(move |c| (r, c)))
            .collect();
        let mut digits = vec![0usize; free.len()];
        loop {
            let mut m = Matrix::zeros(field, k, n);
            for (r, &p) in pivots.iter().enumerate() {
                m.set(r, p, field.one());
            }
            for (&(r, c), &d) in free.iter().zip(&digits) {
                m.set(r, c, elems[d].clone());
            }
            out.push(m);
            let mut pos = 0;
            while pos < digits.len() {
                digits[pos] += 1;
                if (digits[pos] as u64) < q {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == digits.len() {
                break;
            }
        }
        // Next pivot combination in lexicographic order.
        let mut i = k;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if pivots[i] < n - k + i {
                pivots[i] += 1;
                for j in i + 1..k {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break true;
            }
        };
        if !advanced {
            return Ok(out);
        }
    }
}

/// Full-rank RREF matrices with `n` columns, grouped by rank `k = 0..=n`.
pub(crate) fn all_quotients<F: Field>(field: &F, n: usize, guard: u64) -> Result<Vec<Vec<Matrix<F>>>> {
    (0..=n).map(|k| enumerate_rref(field, k, n, guard)).collect()
}

fn total_subspaces(n: usize, q: u64) -> Option<u64> {
    (0..=n).try_fold(0u64, |acc, k| acc.checked_add(gaussian_binomial(n, k, q)?))
}

/// Smallest `dim V1 + dim V2` with the span inside `V1 ⊗ F^{n2} + F^{n1} ⊗ V2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinCover<F: Field> {
    pub value: usize,
    /// Rows form a basis of `V1`.
    pub v1: Matrix<F>,
    /// Rows form a basis of `V2`.
    pub v2: Matrix<F>,
}

pub fn mincov_exhaustive<F: Field>(span: &SliceSpan<F>, guard: u64) -> Result<MinCover<F>> {
    let f = &span.field;
    let (n1, n2) = span.shape;
    let q = match f.size() {
        FieldSize::Finite(q) => q,
        FieldSize::Infinite => return Err(Error::InfiniteField),
    };
    let pairs = total_subspaces(n1, q)
        .zip(total_subspaces(n2, q))
        .and_then(|(a, b)| a.checked_mul(b))
        .ok_or_else(|| Error::guard("subspace pairs", "overflow", guard))?;
    if pairs > guard {
        return Err(Error::guard("subspace pairs", pairs, guard));
    }
    let (red, _) = span.reduced();
    let q1s = all_quotients(f, n1, guard)?;
    let q2s = all_quotients(f, n2, guard)?;
    for t in 0..=n1.min(n2) {
        for d1 in t.saturating_sub(n2)..=t.min(n1) {
            let k1 = n1 - d1;
            let k2 = n2 - (t - d1);
            for a in &q1s[k1] {
                let left: Vec<Matrix<F>> = red.basis.iter().map(|m| a.mul(m).expect("shapes agree")).collect();
                for b in &q2s[k2] {
                    let bt = b.transpose();
                    if left.iter().all(|l| l.mul(&bt).expect("shapes agree").is_zero()) {
                        return Ok(MinCover { value: t, v1: a.kernel(), v2: b.kernel() });
                    }
                }
            }
        }
    }
    unreachable!("V1 = F^n1 always covers")
}

/// Check that every spanning matrix lies in `V1 ⊗ F^{n2} + F^{n1} ⊗ V2`.
pub fn verify_cover<F: Field>(span: &SliceSpan<F>, cover: &MinCover<F>) -> Result<bool> {
    let (n1, n2) = span.shape;
    let q1 = if cover.v1.rows() == 0 { Matrix::identity(&span.field, n1) } else { cover.v1.kernel() };
    let q2 = if cover.v2.rows() == 0 { Matrix::identity(&span.field, n2) } else { cover.v2.kernel() };
    for m in &span.basis {
        if !q1.mul(m)?.mul(&q2.transpose())?.is_zero() {
            return Ok(false);
        }
    }
    Ok(cover.v1.rank() + cover.v2.rank() == cover.value)
}

/// Maximum rank against minimum cover for one span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlandersRecord {
    pub maxrank: usize,
    pub mincov: usize,
    /// `maxrank <= mincov <= 4 maxrank`.
    pub general_ok: bool,
    /// `mincov <= 2 maxrank`, checked only when the field has more than `maxrank` elements.
    pub large_field_ok: Option<bool>,
}

pub fn flanders_check<F: Field>(span: &SliceSpan<F>, limits: &Limits) -> Result<FlandersRecord> {
    let maxrank = max_rank_exhaustive(span, limits.enum_guard)?.value;
    let mincov = mincov_exhaustive(span, limits.cover_guard)?.value;
    let general_ok = maxrank <= mincov && mincov <= 4 * maxrank;
    let large_field_ok = span.field.size().exceeds(maxrank as u64).then_some(mincov <= 2 * maxrank);
    Ok(FlandersRecord { maxrank, mincov, general_ok, large_field_ok })
}

/// Staircase data for a concise `T` with 3-slices `A_1..A_{n3}`.
#[derive(Clone, Debug)]
pub struct Staircase<F: Field> {
    pub u: Matrix<F>,
    /// `s_i = rank[A_1..A_i] - rank[A_1..A_{i-1}]`.
    pub increments: Vec<usize>,
    /// A 3-slice of rank at least `max s_i`.
    pub slice_witness: SliceWitness<F>,
    /// A 2-slice combination of rank at least `#{i : s_i > 0}`.
    pub flat_witness: SliceWitness<F>,
    pub attempts: usize,
}

pub const STAIRCASE_RETRIES: usize = 32;

fn prefix_condition_holds<F: Field>(slices: &[Matrix<F>], u: &Matrix<F>, inc: &[usize], n1: usize) -> Result<bool> {
    let f = u.field();
    let mut parts = Vec::new();
    for (a, &s) in slices.iter().zip(inc) {
        if s > 0 {
            parts.push(a.mul(u)?.col_prefix(s)?);
        }
    }
    Ok(Matrix::concat_cols(f, &parts, n1)?.rank() == n1)
}

/// Find `U` with `col[(A_1U)|_{s_1} ... (A_nU)|_{s_n}] = F^{n1}` by random
/// sampling and read off rank witnesses for `Q_3 >= max s_i` and
/// `Q_2 >= #{s_i > 0}`; their product is at least `n1`.
pub fn staircase<F: Field, R: Rng + ?Sized>(t: &Tensor3<F>, rng: &mut R) -> Result<Staircase<F>> {
    let f = t.field();
    if !t.is_concise() {
        return Err(Error::NotConcise);
    }
    let [n1, n2, n3] = t.dims();
    if !f.size().exceeds(n1 as u64) {
        let have = match f.size() {
            FieldSize::Finite(q) => q,
            FieldSize::Infinite => u64::MAX,
        };
        return Err(Error::FieldTooSmall { need: n1 as u64, have });
    }
    let slices = t.slices(3)?;
    let mut increments = Vec::with_capacity(n3);
    let mut prev = 0;
    for i in 0..n3 {
        let r = Matrix::concat_cols(f, &slices[..=i], n1)?.rank();
        increments.push(r - prev);
        prev = r;
    }
    let height = 2 * n1 as u64 + 1;
    for attempt in 1..=STAIRCASE_RETRIES {
        let u = Matrix::from_fn(f, n2, n2, |_, _| f.random(rng, height));
        if !u.is_invertible() || !prefix_condition_holds(&slices, &u, &increments, n1)? {
            continue;
        }
        let (best, &smax) = increments.iter().enumerate().max_by_key(|&(i, s)| (*s, usize::MAX - i)).expect("n3 > 0");
        let mut unit = vec![f.zero(); n3];
        unit[best] = f.one();
        let slice_rank = slices[best].rank();
        debug_assert!(slice_rank >= smax);
        let slice_witness = SliceWitness { dir: 3, coeffs: unit, rank: slice_rank };
        let coeffs: Vec<F::Elem> = (0..n2).map(|j| u.get(j, 0).clone()).collect();
        let mut flat_witness = SliceWitness { dir: 2, coeffs, rank: 0 };
        flat_witness.rank = flat_witness.matrix(t)?.rank();
        let nonzero = increments.iter().filter(|&&s| s > 0).count();
        if flat_witness.rank < nonzero || slice_rank * flat_witness.rank < n1 {
            return Err(Error::VerificationFailed("staircase witnesses are too weak".into()));
        }
        return Ok(Staircase { u, increments, slice_witness, flat_witness, attempts: attempt });
    }
    Err(Error::SearchExhausted(format!("no valid U in {STAIRCASE_RETRIES} random draws")))
}

/// Witnesses `Q_i >= a`, `Q_j >= b` with `a * b >= n_k` for `{i, j, k} = {1, 2, 3}`.
pub fn product_witnesses<F: Field, R: Rng + ?Sized>(
    t: &Tensor3<F>,
    k: usize,
    rng: &mut R,
) -> Result<(SliceWitness<F>, SliceWitness<F>)> {
    if !(1..=3).contains(&k) {
        return Err(Error::BadParams(format!("direction {k}")));
    }
    let others: Vec<usize> = (1..=3).filter(|&d| d != k).collect();
    let (a, b) = (others[0], others[1]);
    // Leg 1 of the permuted tensor is leg k, leg 2 is a, leg 3 is b.
    let p = t.permute_legs([k - 1, a - 1, b - 1])?;
    let s = staircase(&p, rng)?;
    let wa = SliceWitness { dir: a, coeffs: s.flat_witness.coeffs, rank: s.flat_witness.rank };
    let wb = SliceWitness { dir: b, coeffs: s.slice_witness.coeffs, rank: s.slice_witness.rank };
    Ok((wa, wb))
}

/// For concise `T` of shape `(n1, n2, c)`: a 3-slice of rank at least
/// `max(n1, n2) / c`, found by counting pivot columns of `[A_1 ... A_c]`.
pub fn high_rank_slice<F: Field>(t: &Tensor3<F>) -> Result<SliceWitness<F>> {
    if !t.is_concise() {
        return Err(Error::NotConcise);
    }
    let f = t.field();
    let [n1, n2, c] = t.dims();
    let mut slices = t.slices(3)?;
    let (rows, width) = if n1 >= n2 { (n1, n2) } else { (n2, n1) };
    if n2 > n1 {
        slices = slices.iter().map(|m| m.transpose()).collect();
    }
    let pivots = Matrix::concat_cols(f, &slices, rows)?.rref().pivots;
    let mut counts = vec![0usize; c];
    for p in pivots {
        counts[p / width] += 1;
    }
    let best = (0..c).max_by_key(|&i| (counts[i], usize::MAX - i)).expect("c > 0");
    let mut coeffs = vec![f.zero(); c];
    coeffs[best] = f.one();
    let rank = slices[best].rank();
    debug_assert!(rank >= counts[best] && rank * c >= rows);
    Ok(SliceWitness { dir: 3, coeffs, rank })
}
