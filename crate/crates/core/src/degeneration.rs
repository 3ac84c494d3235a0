//! Laurent-polynomial matrices and degenerations `(A(ε) ⊗ B(ε) ⊗ C(ε)) T`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::{Field, FieldSize};
use crate::matrix::Matrix;
use crate::pivot::{pivot_basis, rho_sigma};
use crate::slice_space::SliceWitness;
use crate::tensor::{unit, Restriction, Tensor3};

/// A Laurent polynomial in ε, as exponent -> nonzero coefficient.
pub type LaurentPoly<E> = BTreeMap<i64, E>;

/// `sum_e ε^e M_e`, stored as one coefficient matrix per exponent; no
/// stored coefficient matrix is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentMatrix<F: Field> {
    field: F,
    rows: usize,
    cols: usize,
    terms: BTreeMap<i64, Matrix<F>>,
}

impl<F: Field> LaurentMatrix<F> {
    pub fn zeros(field: &F, rows: usize, cols: usize) -> Self {
        LaurentMatrix { field: field.clone(), rows, cols, terms: BTreeMap::new() }
    }

    /// A plain matrix as the constant term.
    pub fn constant(m: &Matrix<F>) -> Self {
        let mut l = Self::zeros(m.field(), m.rows(), m.cols());
        l.add_term(0, m);
        l
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn terms(&self) -> &BTreeMap<i64, Matrix<F>> {
        &self.terms
    }

    /// `self += ε^e m`.
    pub fn add_term(&mut self, e: i64, m: &Matrix<F>) {
        assert_eq!(m.shape(), (self.rows, self.cols), "Laurent term has the wrong shape");
        let slot = self.terms.entry(e).or_insert_with(|| Matrix::zeros(&self.field, self.rows, self.cols));
        *slot = slot.add(m).expect("shapes agree");
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    /// `self[i][j] += ε^e v`.
    pub fn add_entry(&mut self, i: usize, j: usize, e: i64, v: &F::Elem) {
        let mut m = Matrix::zeros(&self.field, self.rows, self.cols);
        m.set(i, j, v.clone());
        self.add_term(e, &m);
    }

    pub fn entry(&self, i: usize, j: usize) -> LaurentPoly<F::Elem> {
        self.terms
            .iter()
            .filter(|(_, m)| !self.field.is_zero(m.get(i, j)))
            .map(|(&e, m)| (e, m.get(i, j).clone()))
            .collect()
    }

    /// Nonzero `(row, col, exponent, value)` entries, ordered by position then exponent.
    pub fn quadruples(&self) -> Vec<(usize, usize, i64, F::Elem)> {
        let mut out = Vec::new();
        for (&e, m) in &self.terms {
            for i in 0..self.rows {
                for j in 0..self.cols {
                    if !self.field.is_zero(m.get(i, j)) {
                        out.push((i, j, e, m.get(i, j).clone()));
                    }
                }
            }
        }
        out.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
        out
    }

    pub fn from_quadruples(field: &F, rows: usize, cols: usize, quads: &[(usize, usize, i64, F::Elem)]) -> Result<Self> {
        let mut l = Self::zeros(field, rows, cols);
        for (i, j, e, v) in quads {
            if *i >= rows || *j >= cols {
                return Err(Error::IndexOutOfRange(format!("entry ({i},{j}) of a {rows}x{cols} map")));
            }
            l.add_entry(*i, *j, *e, v);
        }
        Ok(l)
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    /// `self * m` for a constant matrix `m`.
    pub fn mul_constant(&self, m: &Matrix<F>) -> Result<Self> {
        let mut out = Self::zeros(&self.field, self.rows, m.cols());
        for (&e, t) in &self.terms {
            out.add_term(e, &t.mul(m)?);
        }
        Ok(out)
    }

    /// Product of two Laurent matrices.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zeros(&self.field, self.rows, other.cols);
        for (&e1, a) in &self.terms {
            for (&e2, b) in &other.terms {
                out.add_term(e1 + e2, &a.mul(b)?);
            }
        }
        Ok(out)
    }

    /// Kronecker product of Laurent matrices.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zeros(&self.field, self.rows * other.rows, self.cols * other.cols);
        for (&e1, a) in &self.terms {
            for (&e2, b) in &other.terms {
                out.add_term(e1 + e2, &a.kron(b)?);
            }
        }
        Ok(out)
    }

    /// Substitute `ε = x`; `x = 0` is only allowed without negative exponents.
    pub fn evaluate(&self, x: &F::Elem) -> Result<Matrix<F>> {
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, self.cols);
        for (&e, m) in &self.terms {
            let c = if e >= 0 {
                f.pow(x, e as u64)
            } else {
                f.pow(&f.inv(x)?, e.unsigned_abs())
            };
            out.axpy(&c, m);
        }
        Ok(out)
    }
}

/// A border-subrank certificate on `T^{⊠ power}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Degeneration<F: Field> {
    pub maps: [LaurentMatrix<F>; 3],
    pub claimed_r: usize,
    pub power: u32,
}

impl<F: Field> Degeneration<F> {
    pub fn from_restriction(r: &Restriction<F>, claimed_r: usize, power: u32) -> Self {
        Degeneration { maps: r.maps.clone().map(|m| LaurentMatrix::constant(&m)), claimed_r, power }
    }

    /// True when every map is a plain matrix (exponent 0 only).
    pub fn is_restriction(&self) -> bool {
        self.maps.iter().all(|m| m.terms.keys().all(|&e| e == 0))
    }

    pub fn has_negative_exponents(&self) -> bool {
        self.maps.iter().any(|m| m.min_exponent().is_some_and(|e| e < 0))
    }
}

/// Coefficient tensors of `(A(ε) ⊗ B(ε) ⊗ C(ε)) T`, keyed by exponent;
/// only nonzero coefficients are kept.
pub fn apply_degeneration<F: Field>(d: &Degeneration<F>, t: &Tensor3<F>) -> Result<BTreeMap<i64, Tensor3<F>>> {
    for (l, m) in d.maps.iter().enumerate() {
        if m.cols != t.dims()[l] {
            return Err(Error::ShapeMismatch(format!(
                "map {} has {} columns but leg {} has dimension {}",
                l + 1,
                m.cols,
                l + 1,
                t.dims()[l]
            )));
        }
        m.field.check_same(t.field())?;
    }
    let f = t.field();
    let mut out: BTreeMap<i64, Tensor3<F>> = BTreeMap::new();
    for (&e1, a) in &d.maps[0].terms {
        let t1 = t.mode_product(1, a)?;
        for (&e2, b) in &d.maps[1].terms {
            let t2 = t1.mode_product(2, b)?;
            for (&e3, c) in &d.maps[2].terms {
                let t3 = t2.mode_product(3, c)?;
                let e = e1 + e2 + e3;
                match out.get_mut(&e) {
                    Some(acc) => {
                        let data = acc.data().iter().zip(t3.data()).map(|(x, y)| f.add(x, y)).collect();
                        *acc = Tensor3::from_vec(f, acc.dims(), data)?;
                    }
                    None => {
                        out.insert(e, t3);
                    }
                }
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Outcome of checking a degeneration; `diagnostic` explains a failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub ok: bool,
    pub diagnostic: Option<String>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict { ok: true, diagnostic: None }
    }

    fn fail(msg: String) -> Self {
        Verdict { ok: false, diagnostic: Some(msg) }
    }
}

/// Check the degeneration against `base^{⊠ power}`: no negative exponents
/// and the constant term equal to `<claimed_r>`. Restriction certificates
/// must produce `<claimed_r>` exactly.
pub fn verify_degeneration<F: Field>(d: &Degeneration<F>, base: &Tensor3<F>) -> Result<Verdict> {
    let t = base.kron_power(d.power)?;
    verify_on_power(d, &t)
}

/// As [`verify_degeneration`], with the power already formed.
pub fn verify_on_power<F: Field>(d: &Degeneration<F>, t: &Tensor3<F>) -> Result<Verdict> {
    let r = d.claimed_r;
    for (l, m) in d.maps.iter().enumerate() {
        if m.rows != r {
            return Ok(Verdict::fail(format!("map {} has {} rows, expected {r}", l + 1, m.rows)));
        }
        if m.cols != t.dims()[l] {
            return Ok(Verdict::fail(format!(
                "map {} has {} columns, leg has dimension {}",
                l + 1,
                m.cols,
                t.dims()[l]
            )));
        }
    }
    let terms = match apply_degeneration(d, t) {
        Ok(x) => x,
        Err(Error::ResourceGuard { .. }) | Err(Error::ShapeMismatch(_)) | Err(Error::MixedFields(..)) => {
            return Ok(Verdict::fail("maps cannot be applied to this tensor".into()))
        }
        Err(e) => return Err(e),
    };
    if let Some((&e, _)) = terms.iter().next().filter(|(&e, _)| e < 0) {
        return Ok(Verdict::fail(format!("nonzero coefficient at exponent {e}")));
    }
    let target = unit(t.field(), r)?;
    let constant = terms.get(&0).cloned().unwrap_or(Tensor3::zeros(t.field(), [r, r, r])?);
    if constant != target {
        return Ok(Verdict::fail(format!("exponent 0 coefficient is not the unit tensor of size {r}")));
    }
    if d.is_restriction() && terms.len() > 1 {
        return Ok(Verdict::fail("restriction produced terms beyond exponent 0".into()));
    }
    Ok(Verdict::pass())
}

/// Border-subrank certificate of size `ρ_{i,j}(T)` (power 1).
///
/// Take the rref basis `M_t` of the `(i,j)`-oriented slice span and a
/// maximum coordinate-disjoint set of pivots `(f_t, g_t)`, sorted by row.
/// Restricting rows to the `f`'s and columns to the `g`'s leaves entries
/// `(M_t)_{f_a, g_b}` that vanish unless `a > t`, or `a = t` and `g_b > g_t`.
/// Weights `r*a` on rows, the rank `π(b)` of `g_b` on columns and
/// `-(r*t + π(t))` on slices make every such entry a positive power of ε
/// while the diagonal stays at exponent 0.
pub fn rho_degeneration<F: Field>(t: &Tensor3<F>, i: usize, j: usize) -> Result<Degeneration<F>> {
    if t.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let f = t.field();
    let span = t.slice_span(i, j)?;
    let k = 6 - i - j;
    let pb = pivot_basis(&span)?;
    let rs = rho_sigma(&pb.pivots, span.shape)?;
    let mut chosen: Vec<usize> = rs.matching.clone();
    chosen.sort_by_key(|&s| pb.pivots[s]);
    let r = chosen.len();
    let mut by_col: Vec<usize> = (0..r).collect();
    by_col.sort_by_key(|&a| pb.pivots[chosen[a]].1);
    let mut pi = vec![0i64; r];
    for (rank, &a) in by_col.iter().enumerate() {
        pi[a] = rank as i64;
    }
    let ri = r as i64;
    let mut row_map = LaurentMatrix::zeros(f, r, span.shape.0);
    let mut col_map = LaurentMatrix::zeros(f, r, span.shape.1);
    let mut slice_map = LaurentMatrix::zeros(f, r, t.dims()[k - 1]);
    for (a, &s) in chosen.iter().enumerate() {
        let (fa, ga) = pb.pivots[s];
        row_map.add_entry(a, fa, ri * a as i64, &f.one());
        col_map.add_entry(a, ga, pi[a], &f.one());
        let mut single = Matrix::zeros(f, r, pb.coeffs.cols());
        for c in 0..pb.coeffs.cols() {
            single.set(a, c, pb.coeffs.get(s, c).clone());
        }
        slice_map.add_term(-(ri * a as i64 + pi[a]), &single);
    }
    let mut maps: [Option<LaurentMatrix<F>>; 3] = [None, None, None];
    maps[i - 1] = Some(row_map);
    maps[j - 1] = Some(col_map);
    maps[k - 1] = Some(slice_map);
    let d = Degeneration { maps: maps.map(|m| m.expect("all legs assigned")), claimed_r: r, power: 1 };
    let v = verify_on_power(&d, t)?;
    if !v.ok {
        return Err(Error::VerificationFailed(v.diagnostic.unwrap_or_default()));
    }
    Ok(d)
}

/// Witness for `Q_dir(T^{⊠m}) >= claimed_r` extracted from a verified degeneration.
#[derive(Clone, Debug)]
pub struct BorderExtraction<F: Field> {
    pub point: F::Elem,
    /// Slice combination on `T^{⊠ power}`.
    pub witness: SliceWitness<F>,
}

/// Contract leg `dir` of the degeneration with the all-ones vector, set
/// `ε = x` for the first admissible field element `x`, and return the slice
/// combination the contracted map picks out. Its image under the two other
/// maps is `Id + x N(x)`, invertible for all but finitely many `x`, so the
/// combination has rank at least `claimed_r`.
pub fn border_le_qi_extract<F: Field>(
    d: &Degeneration<F>,
    base: &Tensor3<F>,
    dir: usize,
) -> Result<BorderExtraction<F>> {
    if !(1..=3).contains(&dir) {
        return Err(Error::BadParams(format!("direction {dir}")));
    }
    let t = base.kron_power(d.power)?;
    let v = verify_on_power(d, &t)?;
    if !v.ok {
        return Err(Error::VerificationFailed(v.diagnostic.unwrap_or_default()));
    }
    let f = t.field();
    let q = d.claimed_r;
    let ones = Matrix::from_fn(f, 1, q, |_, _| f.one());
    let contracted = LaurentMatrix::constant(&ones).mul(&d.maps[dir - 1])?;
    let others: Vec<usize> = (1..=3).filter(|&l| l != dir).collect();
    let skip_zero = d.has_negative_exponents();
    // After verification the contracted slice is a polynomial in ε of degree
    // at most the sum of the maps' top exponents, so its determinant has at
    // most `q` times that many roots.
    let top: i64 = d.maps.iter().map(|m| m.max_exponent().unwrap_or(0).max(0)).sum();
    let needed = (q as u64) * (top as u64) + 1 + skip_zero as u64;
    let available = match f.size() {
        FieldSize::Finite(p) => p,
        FieldSize::Infinite => u64::MAX,
    };
    let mut idx = 0u64;
    let mut tried = 0u64;
    while idx < available && tried < needed {
        let x = match f.size() {
            FieldSize::Finite(_) => f.element(idx)?,
            FieldSize::Infinite => f.from_i64(idx as i64),
        };
        idx += 1;
        if skip_zero && f.is_zero(&x) {
            continue;
        }
        tried += 1;
        let w = contracted.evaluate(&x)?;
        let coeffs: Vec<F::Elem> = (0..w.cols()).map(|c| w.get(0, c).clone()).collect();
        let witness_matrix = crate::slice_space::direction_span(&t, dir)?.combination(&coeffs);
        let a = d.maps[others[0] - 1].evaluate(&x)?;
        let b = d.maps[others[1] - 1].evaluate(&x)?;
        let image = a.mul(&witness_matrix)?.mul(&b.transpose())?;
        if image.rank() == q {
            let rank = witness_matrix.rank();
            let witness = SliceWitness { dir, coeffs, rank };
            return Ok(BorderExtraction { point: x, witness });
        }
    }
    Err(Error::FieldTooSmall { need: needed, have: available })
}

/// Border subrank of `<e,h,ℓ>` for `e <= h <= ℓ`:
/// `eh - ⌊(e+h-ℓ)^2/4⌋` when `e + h >= ℓ`, else `eh`.
pub fn mamu_border_lb(e: u64, h: u64, l: u64) -> Result<u64> {
    if !(1 <= e && e <= h && h <= l) {
        return Err(Error::BadParams(format!("need 1 <= e <= h <= l, got ({e}, {h}, {l})")));
    }
    let v = if e + h >= l {
        let s = e + h - l;
        e * h - s * s / 4
    } else {
        e * h
    };
    debug_assert!(4 * v >= 3 * e * h);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;

    #[test]
    fn identity_degeneration_on_unit() {
        let f = Fp::new(5).unwrap();
        let u = unit(&f, 3).unwrap();
        let d = Degeneration::from_restriction(&Restriction::identity(&f, [3, 3, 3]), 3, 1);
        assert!(verify_degeneration(&d, &u).unwrap().ok);
        let terms = apply_degeneration(&d, &u).unwrap();
        assert_eq!(terms.keys().copied().collect::<Vec<_>>(), vec![0]);
        let mut bad = d.clone();
        bad.claimed_r = 4;
        assert!(!verify_degeneration(&bad, &u).unwrap().ok);
    }

    #[test]
    fn epsilon_scaling_shifts_support() {
        let f = Fp::new(5).unwrap();
        let u = unit(&f, 2).unwrap();
        let mut d = Degeneration::from_restriction(&Restriction::identity(&f, [2, 2, 2]), 2, 1);
        let mut scaled = LaurentMatrix::zeros(&f, 2, 2);
        scaled.add_term(1, &Matrix::identity(&f, 2));
        d.maps[0] = scaled;
        let terms = apply_degeneration(&d, &u).unwrap();
        assert_eq!(terms.keys().copied().collect::<Vec<_>>(), vec![1]);
        let v = verify_degeneration(&d, &u).unwrap();
        assert!(!v.ok);
    }

    #[test]
    fn negative_exponent_is_named() {
        let f = Fp::new(5).unwrap();
        let u = unit(&f, 2).unwrap();
        let mut d = Degeneration::from_restriction(&Restriction::identity(&f, [2, 2, 2]), 2, 1);
        d.maps[1].add_entry(0, 1, -2, &1);
        let v = verify_degeneration(&d, &u).unwrap();
        assert!(!v.ok);
        assert!(v.diagnostic.unwrap().contains("-2"));
    }

    #[test]
    fn laurent_evaluation() {
        let f = Fp::new(7).unwrap();
        let mut l = LaurentMatrix::zeros(&f, 1, 1);
        l.add_entry(0, 0, -1, &1);
        l.add_entry(0, 0, 2, &3);
        assert_eq!(l.evaluate(&2).unwrap().get(0, 0), &((4 + 3 * 4) % 7));
        assert!(l.evaluate(&0).is_err());
        assert_eq!(l.entry(0, 0).len(), 2);
    }

    #[test]
    fn strassen_values() {
        assert_eq!(mamu_border_lb(2, 2, 2).unwrap(), 3);
        assert_eq!(mamu_border_lb(1, 1, 5).unwrap(), 1);
        assert_eq!(mamu_border_lb(2, 3, 6).unwrap(), 6);
        assert!(mamu_border_lb(3, 2, 4).is_err());
    }
}
