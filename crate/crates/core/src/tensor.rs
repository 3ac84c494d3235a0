//! Order-3 tensors, their slices and flattenings, and restriction maps.
//!
//! Entries are stored densely in lexicographic `(i, j, k)` order. All
//! indices here are 0-based; the file format is 1-based.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::matrix::Matrix;

/// Resource guard on the number of stored entries.
pub const MAX_ENTRIES: usize = 1 << 24;

#[derive(Clone, PartialEq, Eq)]
pub struct Tensor3<F: Field> {
    field: F,
    dims: [usize; 3],
    data: Vec<F::Elem>,
}

/// A triple of linear maps `(L1, L2, L3)` with `L_i : F^{n_i} -> F^{m_i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Restriction<F: Field> {
    pub maps: [Matrix<F>; 3],
}

fn check_entries(dims: [usize; 3]) -> Result<usize> {
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::guard("tensor entries", "overflow", MAX_ENTRIES))?;
    if n > MAX_ENTRIES {
        return Err(Error::guard("tensor entries", n, MAX_ENTRIES));
    }
    Ok(n)
}

impl<F: Field> Tensor3<F> {
    pub fn zeros(field: &F, dims: [usize; 3]) -> Result<Self> {
        let n = check_entries(dims)?;
        Ok(Tensor3 { field: field.clone(), dims, data: vec![field.zero(); n] })
    }

    pub fn from_vec(field: &F, dims: [usize; 3], data: Vec<F::Elem>) -> Result<Self> {
        let n = check_entries(dims)?;
        if data.len() != n {
            return Err(Error::ShapeMismatch(format!("{} entries for dims {dims:?}", data.len())));
        }
        Ok(Tensor3 { field: field.clone(), dims, data })
    }

    /// Build from `(i, j, k, value)` terms; repeated positions add up.
    pub fn from_terms(field: &F, dims: [usize; 3], terms: &[(usize, usize, usize, F::Elem)]) -> Result<Self> {
        let mut t = Self::zeros(field, dims)?;
        for (i, j, k, v) in terms {
            if *i >= dims[0] || *j >= dims[1] || *k >= dims[2] {
                return Err(Error::IndexOutOfRange(format!("({i},{j},{k}) in {dims:?}")));
            }
            let idx = t.index(*i, *j, *k);
            t.data[idx] = field.add(&t.data[idx], v);
        }
        Ok(t)
    }

    /// Sum of unit terms `e_i ⊗ e_j ⊗ e_k` with coefficient one.
    pub fn from_units(field: &F, dims: [usize; 3], terms: &[(usize, usize, usize)]) -> Result<Self> {
        let terms: Vec<_> = terms.iter().map(|&(i, j, k)| (i, j, k, field.one())).collect();
        Self::from_terms(field, dims, &terms)
    }

    /// Tensor whose 3-slices are the given `n1 x n2` matrices.
    pub fn from_slices3(field: &F, slices: &[Matrix<F>]) -> Result<Self> {
        let (n1, n2) = slices.first().map(|m| m.shape()).ok_or(Error::ZeroSpan)?;
        if slices.iter().any(|m| m.shape() != (n1, n2)) {
            return Err(Error::ShapeMismatch("slices have different shapes".into()));
        }
        let n3 = slices.len();
        let mut t = Self::zeros(field, [n1, n2, n3])?;
        for (k, m) in slices.iter().enumerate() {
            m.field().check_same(field)?;
            for i in 0..n1 {
                for j in 0..n2 {
                    let idx = t.index(i, j, k);
                    t.data[idx] = m.get(i, j).clone();
                }
            }
        }
        Ok(t)
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[F::Elem] {
        &self.data
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> &F::Elem {
        &self.data[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: F::Elem) {
        let idx = self.index(i, j, k);
        self.data[idx] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| self.field.is_zero(x))
    }

    /// Nonzero entries in lexicographic order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, usize, F::Elem)> {
        let [_, n2, n3] = self.dims;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| !self.field.is_zero(v))
            .map(|(idx, v)| (idx / (n2 * n3), (idx / n3) % n2, idx % n3, v.clone()))
            .collect()
    }

    pub fn is_cubical(&self) -> bool {
        self.dims[0] == self.dims[1] && self.dims[1] == self.dims[2]
    }

    /// Slice `index` along `dir` (1, 2 or 3). Direction 1 gives rows over
    /// direction 2 and columns over direction 3; direction 2 gives rows over
    /// direction 1 and columns over direction 3; direction 3 gives rows over
    /// direction 1 and columns over direction 2.
    pub fn slice(&self, dir: usize, index: usize) -> Result<Matrix<F>> {
        let [n1, n2, n3] = self.dims;
        let bound = *self.dims.get(dir.wrapping_sub(1)).ok_or_else(|| bad_dir(dir))?;
        if index >= bound {
            return Err(Error::IndexOutOfRange(format!("slice {index} along direction {dir}")));
        }
        let f = &self.field;
        Ok(match dir {
            1 => Matrix::from_fn(f, n2, n3, |j, k| self.get(index, j, k).clone()),
            2 => Matrix::from_fn(f, n1, n3, |i, k| self.get(i, index, k).clone()),
            _ => Matrix::from_fn(f, n1, n2, |i, j| self.get(i, j, index).clone()),
        })
    }

    pub fn slices(&self, dir: usize) -> Result<Vec<Matrix<F>>> {
        let n = *self.dims.get(dir.wrapping_sub(1)).ok_or_else(|| bad_dir(dir))?;
        (0..n).map(|t| self.slice(dir, t)).collect()
    }

    /// The `n_i x (n_j n_k)` flattening with `j < k` and column `(a, b)` at `a * n_k + b`.
    pub fn flattening(&self, dir: usize) -> Result<Matrix<F>> {
        let [n1, n2, n3] = self.dims;
        let f = &self.field;
        match dir {
            1 => Matrix::from_vec(f, n1, n2 * n3, self.data.clone()),
            2 => Ok(Matrix::from_fn(f, n2, n1 * n3, |j, c| self.get(c / n3, j, c % n3).clone())),
            3 => Ok(Matrix::from_fn(f, n3, n1 * n2, |k, c| self.get(c / n2, c % n2, k).clone())),
            _ => Err(bad_dir(dir)),
        }
    }

    pub fn flattening_rank(&self, dir: usize) -> Result<usize> {
        Ok(self.flattening(dir)?.rank())
    }

    pub fn flattening_ranks(&self) -> [usize; 3] {
        [1, 2, 3].map(|d| self.flattening_rank(d).expect("valid direction"))
    }

    pub fn is_concise(&self) -> bool {
        self.flattening_ranks() == self.dims
    }

    /// Multiply leg `leg` (1-based) by `m`: the new leg has dimension `m.rows()`.
    pub fn mode_product(&self, leg: usize, m: &Matrix<F>) -> Result<Self> {
        self.field.check_same(m.field())?;
        let l = leg.checked_sub(1).filter(|&l| l < 3).ok_or_else(|| bad_dir(leg))?;
        if m.cols() != self.dims[l] {
            return Err(Error::ShapeMismatch(format!(
                "leg {leg} has dimension {} but the map has {} columns",
                self.dims[l],
                m.cols()
            )));
        }
        let mut dims = self.dims;
        dims[l] = m.rows();
        let mut out = Self::zeros(&self.field, dims)?;
        let f = &self.field;
        let [n1, n2, n3] = self.dims;
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let v = self.get(i, j, k);
                    if f.is_zero(v) {
                        continue;
                    }
                    let src = [i, j, k][l];
                    for a in 0..m.rows() {
                        let c = m.get(a, src);
                        if f.is_zero(c) {
                            continue;
                        }
                        let mut pos = [i, j, k];
                        pos[l] = a;
                        let idx = out.index(pos[0], pos[1], pos[2]);
                        f.mul_add_assign(&mut out.data[idx], c, v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `(L1 ⊗ L2 ⊗ L3) T`.
    pub fn restrict(&self, r: &Restriction<F>) -> Result<Self> {
        // Apply the most shrinking map first to keep intermediates small.
        let mut order = [0usize, 1, 2];
        order.sort_by_key(|&l| (r.maps[l].rows() as i64 - self.dims[l] as i64, l));
        let mut t = self.clone();
        for l in order {
            t = t.mode_product(l + 1, &r.maps[l])?;
        }
        Ok(t)
    }

    /// Kronecker product: leg index `(outer, inner)` maps to `outer * inner_dim + inner`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        self.field.check_same(&other.field)?;
        let [a1, a2, a3] = self.dims;
        let [b1, b2, b3] = other.dims;
        let dims = [a1 * b1, a2 * b2, a3 * b3];
        let mut out = Self::zeros(&self.field, dims)?;
        let f = &self.field;
        let rhs = other.nonzeros();
        for (i, j, k, v) in self.nonzeros() {
            for (a, b, c, w) in &rhs {
                let idx = out.index(i * b1 + a, j * b2 + b, k * b3 + c);
                out.data[idx] = f.mul(&v, w);
            }
        }
        Ok(out)
    }

    /// `T^{⊠m}`; `m = 0` gives the 1x1x1 unit tensor.
    pub fn kron_power(&self, m: u32) -> Result<Self> {
        let mut dims = [1usize; 3];
        for _ in 0..m {
            for l in 0..3 {
                dims[l] = dims[l]
                    .checked_mul(self.dims[l])
                    .ok_or_else(|| Error::guard("tensor entries", "overflow", MAX_ENTRIES))?;
            }
        }
        check_entries(dims)?;
        let mut acc = unit(&self.field, 1)?;
        for _ in 0..m {
            acc = acc.kron(self)?;
        }
        Ok(acc)
    }

    /// Relabel the legs: leg `l` of the result is leg `perm[l]` (0-based) of `self`.
    pub fn permute_legs(&self, perm: [usize; 3]) -> Result<Self> {
        let mut seen = [false; 3];
        for &p in &perm {
            if p > 2 || seen[p] {
                return Err(Error::BadParams(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        let dims = perm.map(|p| self.dims[p]);
        let mut out = Self::zeros(&self.field, dims)?;
        for (i, j, k, v) in self.nonzeros() {
            let src = [i, j, k];
            out.set(src[perm[0]], src[perm[1]], src[perm[2]], v);
        }
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        if !self.is_cubical() {
            return false;
        }
        let n = self.dims[0];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = self.get(i, j, k);
                    let perms = [(i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)];
                    if perms.iter().any(|&(a, b, c)| self.get(a, b, c) != v) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Subtensor on index subsets along each leg.
    pub fn subtensor(&self, sel: [&[usize]; 3]) -> Result<Self> {
        let dims = [sel[0].len(), sel[1].len(), sel[2].len()];
        let mut out = Self::zeros(&self.field, dims)?;
        for (a, &i) in sel[0].iter().enumerate() {
            for (b, &j) in sel[1].iter().enumerate() {
                for (c, &k) in sel[2].iter().enumerate() {
                    out.set(a, b, c, self.get(i, j, k).clone());
                }
            }
        }
        Ok(out)
    }

    /// Span of the slices along the direction other than `row_dir`,
    /// `col_dir`, oriented so rows follow `row_dir` and columns `col_dir`.
    pub fn slice_span(&self, row_dir: usize, col_dir: usize) -> Result<SliceSpan<F>> {
        if !(1..=3).contains(&row_dir) || !(1..=3).contains(&col_dir) || row_dir == col_dir {
            return Err(Error::BadParams(format!("orientation ({row_dir}, {col_dir})")));
        }
        let dir = 6 - row_dir - col_dir;
        let mut basis = self.slices(dir)?;
        // Natural slice orientation has rows along the smaller remaining direction.
        if row_dir > col_dir {
            basis = basis.iter().map(|m| m.transpose()).collect();
        }
        Ok(SliceSpan {
            field: self.field.clone(),
            basis,
            row_dir,
            col_dir,
            shape: (self.dims[row_dir - 1], self.dims[col_dir - 1]),
        })
    }
}

fn bad_dir(dir: usize) -> Error {
    Error::BadParams(format!("direction {dir} (expected 1, 2 or 3)"))
}

impl<F: Field> fmt::Debug for Tensor3<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor3{:?} over {}", self.dims, self.field.spec())?;
        for (i, j, k, v) in self.nonzeros() {
            write!(f, "\n  ({i},{j},{k}) {}", self.field.format_elem(&v))?;
        }
        Ok(())
    }
}

/// A spanning list of equally shaped matrices, tagged with the tensor
/// directions its rows and columns came from (0 when not from a tensor).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceSpan<F: Field> {
    pub field: F,
    pub basis: Vec<Matrix<F>>,
    pub row_dir: usize,
    pub col_dir: usize,
    pub shape: (usize, usize),
}

impl<F: Field> SliceSpan<F> {
    pub fn from_matrices(field: &F, shape: (usize, usize), basis: Vec<Matrix<F>>) -> Result<Self> {
        for m in &basis {
            m.field().check_same(field)?;
            if m.shape() != shape {
                return Err(Error::ShapeMismatch(format!("{:?} in a span of {shape:?}", m.shape())));
            }
        }
        Ok(SliceSpan { field: field.clone(), basis, row_dir: 0, col_dir: 0, shape })
    }

    pub fn vectorized(&self) -> Matrix<F> {
        crate::matrix::vectorize_all(&self.field, &self.basis, self.shape.0 * self.shape.1)
            .expect("shapes checked at construction")
    }

    pub fn dim(&self) -> usize {
        self.vectorized().rank()
    }

    /// Positions of a maximal independent sublist of the spanning list.
    pub fn independent_indices(&self) -> Vec<usize> {
        if self.basis.is_empty() {
            return Vec::new();
        }
        self.vectorized().independent_rows()
    }

    /// The same space with a linearly independent spanning list.
    pub fn reduced(&self) -> (Self, Vec<usize>) {
        let idx = self.independent_indices();
        let basis = idx.iter().map(|&i| self.basis[i].clone()).collect();
        (SliceSpan { basis, ..self.clone() }, idx)
    }

    pub fn combination(&self, coeffs: &[F::Elem]) -> Matrix<F> {
        Matrix::combination(&self.field, self.shape.0, self.shape.1, &self.basis, coeffs)
    }

    pub fn transpose(&self) -> Self {
        SliceSpan {
            field: self.field.clone(),
            basis: self.basis.iter().map(|m| m.transpose()).collect(),
            row_dir: self.col_dir,
            col_dir: self.row_dir,
            shape: (self.shape.1, self.shape.0),
        }
    }

    /// The span of all `A ⊗ B`, spanned by Kronecker products of the two spanning lists.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        self.field.check_same(&other.field)?;
        let mut basis = Vec::with_capacity(self.basis.len() * other.basis.len());
        for a in &self.basis {
            for b in &other.basis {
                basis.push(a.kron(b)?);
            }
        }
        let shape = (self.shape.0 * other.shape.0, self.shape.1 * other.shape.1);
        Ok(SliceSpan { field: self.field.clone(), basis, row_dir: 0, col_dir: 0, shape })
    }
}

/// Whether some concise tensor has these dimensions.
pub fn check_concise_format(n1: usize, n2: usize, n3: usize) -> bool {
    n1 <= n2 * n3 && n2 <= n1 * n3 && n3 <= n1 * n2
}

/// `<r> = sum_i e_i ⊗ e_i ⊗ e_i`.
pub fn unit<F: Field>(field: &F, r: usize) -> Result<Tensor3<F>> {
    let terms: Vec<_> = (0..r).map(|i| (i, i, i)).collect();
    Tensor3::from_units(field, [r, r, r], &terms)
}

impl<F: Field> Restriction<F> {
    pub fn new(l1: Matrix<F>, l2: Matrix<F>, l3: Matrix<F>) -> Self {
        Restriction { maps: [l1, l2, l3] }
    }

    pub fn identity(field: &F, dims: [usize; 3]) -> Self {
        Restriction { maps: dims.map(|n| Matrix::identity(field, n)) }
    }

    pub fn target_dims(&self) -> [usize; 3] {
        [self.maps[0].rows(), self.maps[1].rows(), self.maps[2].rows()]
    }

    /// First apply `self`, then `after`.
    pub fn then(&self, after: &Self) -> Result<Self> {
        Ok(Restriction {
            maps: [
                after.maps[0].mul(&self.maps[0])?,
                after.maps[1].mul(&self.maps[1])?,
                after.maps[2].mul(&self.maps[2])?,
            ],
        })
    }

    /// Restriction on `T ⊠ S` built from restrictions on `T` and on `S`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        Ok(Restriction {
            maps: [
                self.maps[0].kron(&other.maps[0])?,
                self.maps[1].kron(&other.maps[1])?,
                self.maps[2].kron(&other.maps[2])?,
            ],
        })
    }
}

/// Check `(L1 ⊗ L2 ⊗ L3) source == target` exactly.
pub fn verify_restriction<F: Field>(r: &Restriction<F>, source: &Tensor3<F>, target: &Tensor3<F>) -> Result<bool> {
    for (l, m) in r.maps.iter().enumerate() {
        if m.cols() != source.dims()[l] || m.rows() != target.dims()[l] {
            return Ok(false);
        }
    }
    Ok(source.restrict(r)? == *target)
}

/// Maps witnessing `T ≡ S` for a concise `S`, in both directions.
#[derive(Clone, Debug)]
pub struct ConciseReduction<F: Field> {
    pub tensor: Tensor3<F>,
    /// `T -> S`
    pub down: Restriction<F>,
    /// `S -> T`
    pub up: Restriction<F>,
}

/// Replace `T` by an equivalent concise tensor, one direction at a time,
/// keeping a maximal independent set of slices.
pub fn concise_reduce<F: Field>(t: &Tensor3<F>) -> Result<ConciseReduction<F>> {
    let f = t.field();
    if t.is_zero() {
        let z = Tensor3::zeros(f, [0, 0, 0])?;
        let down = Restriction { maps: t.dims().map(|n| Matrix::zeros(f, 0, n)) };
        let up = Restriction { maps: t.dims().map(|n| Matrix::zeros(f, n, 0)) };
        return Ok(ConciseReduction { tensor: z, down, up });
    }
    let mut cur = t.clone();
    let mut down = Vec::new();
    let mut up = Vec::new();
    for dir in 1..=3 {
        let flat = cur.flattening(dir)?;
        let keep = flat.independent_rows();
        let n = cur.dims()[dir - 1];
        let sel = Matrix::selection(f, &keep, n);
        // Express every row of the flattening through the kept rows.
        let kept = flat.submatrix(&keep, &(0..flat.cols()).collect::<Vec<_>>());
        let coeffs = kept
            .transpose()
            .solve(&flat.transpose())?
            .ok_or_else(|| Error::VerificationFailed("kept slices do not span".into()))?
            .transpose();
        cur = cur.mode_product(dir, &sel)?;
        down.push(sel);
        up.push(coeffs);
    }
    let [d1, d2, d3]: [Matrix<F>; 3] = down.try_into().expect("three legs");
    let [u1, u2, u3]: [Matrix<F>; 3] = up.try_into().expect("three legs");
    let down = Restriction::new(d1, d2, d3);
    let up = Restriction::new(u1, u2, u3);
    debug_assert!(verify_restriction(&down, t, &cur).unwrap_or(false));
    debug_assert!(verify_restriction(&up, &cur, t).unwrap_or(false));
    Ok(ConciseReduction { tensor: cur, down, up })
}
