//! Named example tensors.

use num_integer::Roots;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::tensor::{unit, Tensor3};

pub use crate::tensor::unit as unit_tensor;

/// Matrix multiplication tensor `<a,b,c> = sum e_{ij} ⊗ e_{jk} ⊗ e_{ki}`,
/// pairs flattened row-major: `(i,j) -> i*b + j`, `(j,k) -> j*c + k`,
/// `(k,i) -> k*a + i`.
pub fn matmul<F: Field>(field: &F, a: usize, b: usize, c: usize) -> Result<Tensor3<F>> {
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::BadParams("matrix multiplication sizes must be positive".into()));
    }
    let mut terms = Vec::with_capacity(a * b * c);
    for i in 0..a {
        for j in 0..b {
            for k in 0..c {
                terms.push((i * b + j, j * c + k, k * a + i));
            }
        }
    }
    Tensor3::from_units(field, [a * b, b * c, c * a], &terms)
}

/// `e1⊗e1⊗e1 + sum_{i≥2} (e1⊗e_i⊗e_i + e_i⊗e_i⊗e1)`.
pub fn null_algebra<F: Field>(field: &F, n: usize) -> Result<Tensor3<F>> {
    if n == 0 {
        return Err(Error::BadParams("n must be positive".into()));
    }
    let mut terms = vec![(0, 0, 0)];
    for i in 1..n {
        terms.push((0, i, i));
        terms.push((i, i, 0));
    }
    Tensor3::from_units(field, [n, n, n], &terms)
}

/// `sum_i e1⊗e_i⊗e_i + sum_{i<n} e_{i+1} ⊗ e_{(i mod n/c)+1} ⊗ e_{⌊i/(n/c)⌋+1}`;
/// coinciding terms add.
pub fn gen_null_algebra<F: Field>(field: &F, n: usize, c: usize) -> Result<Tensor3<F>> {
    if n == 0 || c == 0 || n % c != 0 {
        return Err(Error::BadParams(format!("c = {c} must divide n = {n}")));
    }
    let w = n / c;
    let mut terms: Vec<_> = (0..n).map(|i| (0, i, i)).collect();
    terms.extend((0..n).map(|i| (i, i % w, i / w)));
    Tensor3::from_units(field, [n, n, n], &terms)
}

/// Pairs `(f(i), g(i))` for the balanced pivot tensor: the diagonal
/// `(i,i)` for `i < √n`, then the off-diagonal pairs of `[√n]^2` in
/// row-major order.
pub fn balanced_pivot_pairs(n: usize) -> Result<Vec<(usize, usize)>> {
    let s = n.sqrt();
    if s * s != n || n == 0 {
        return Err(Error::BadParams(format!("{n} is not a positive perfect square")));
    }
    let mut pairs: Vec<_> = (0..s).map(|i| (i, i)).collect();
    for a in 0..s {
        for b in 0..s {
            if a != b {
                pairs.push((a, b));
            }
        }
    }
    Ok(pairs)
}

pub fn balanced_pivot<F: Field>(field: &F, n: usize) -> Result<Tensor3<F>> {
    let pairs = balanced_pivot_pairs(n)?;
    let s = n.sqrt();
    let mut terms: Vec<_> = (0..s).map(|i| (i, i, i)).collect();
    for (i, &(f, g)) in pairs.iter().enumerate().skip(s) {
        terms.push((i, f, g));
        terms.push((f, i, g));
        terms.push((f, g, i));
    }
    Tensor3::from_units(field, [n, n, n], &terms)
}

/// `e1⊗e2⊗e2 + e2⊗e1⊗e2 + e2⊗e2⊗e1`.
pub fn w_tensor<F: Field>(field: &F) -> Result<Tensor3<F>> {
    Tensor3::from_units(field, [2, 2, 2], &[(0, 1, 1), (1, 0, 1), (1, 1, 0)])
}

/// Names accepted by [`by_name`], with their parameter counts.
pub const NAMES: &[(&str, usize)] = &[
    ("unit", 1),
    ("matmul", 3),
    ("null_algebra", 1),
    ("gen_null_algebra", 2),
    ("balanced_pivot", 1),
    ("w_tensor", 0),
];

/// Look a catalog entry up by name.
pub fn by_name<F: Field>(field: &F, name: &str, params: &[usize]) -> Result<Tensor3<F>> {
    let expected = NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, k)| *k)
        .ok_or_else(|| Error::BadParams(format!("unknown catalog entry {name:?}")))?;
    if params.len() != expected {
        return Err(Error::BadParams(format!("{name} takes {expected} parameter(s), got {}", params.len())));
    }
    match name {
        "unit" => unit(field, params[0]),
        "matmul" => matmul(field, params[0], params[1], params[2]),
        "null_algebra" => null_algebra(field, params[0]),
        "gen_null_algebra" => gen_null_algebra(field, params[0], params[1]),
        "balanced_pivot" => balanced_pivot(field, params[0]),
        _ => w_tensor(field),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Fp, Rationals};

    #[test]
    fn null_algebra_four_has_seven_terms() {
        let t = null_algebra(&Rationals, 4).unwrap();
        assert_eq!(t.nonzeros().len(), 7);
        assert!(t.is_concise());
    }

    #[test]
    fn matmul_222_shape() {
        let t = matmul(&Fp::new(2).unwrap(), 2, 2, 2).unwrap();
        assert_eq!(t.dims(), [4, 4, 4]);
        assert_eq!(t.nonzeros().len(), 8);
        assert_eq!(t.flattening_ranks(), [4, 4, 4]);
    }

    #[test]
    fn balanced_pivot_needs_square() {
        assert!(balanced_pivot(&Rationals, 5).is_err());
        assert_eq!(balanced_pivot_pairs(4).unwrap(), vec![(0, 0), (1, 1), (0, 1), (1, 0)]);
    }

    #[test]
    fn gen_null_algebra_divisibility() {
        let f = Fp::new(11).unwrap();
        assert!(gen_null_algebra(&f, 6, 4).is_err());
        let t = gen_null_algebra(&f, 6, 2).unwrap();
        assert_eq!(t.get(0, 0, 0), &2);
        assert!(t.is_concise());
    }

    #[test]
    fn w_tensor_slices() {
        let f = Fp::new(2).unwrap();
        let w = w_tensor(&f).unwrap();
        assert!(w.is_concise() && w.is_symmetric());
        let s0 = w.slice(3, 0).unwrap();
        assert_eq!(s0.data(), &[0, 0, 0, 1]);
        let s1 = w.slice(3, 1).unwrap();
        assert_eq!(s1.data(), &[0, 1, 1, 0]);
    }
}
