//! Brute-force oracles over GF(p) on plain `u64` arrays. Nothing here goes
//! through the library's linear algebra.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subrank_core::{Field, Fp, Matrix, Tensor3};

pub type Mat = Vec<Vec<u64>>;

pub fn gf(p: u64) -> Fp {
    Fp::new(p).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn inv(a: u64, p: u64) -> u64 {
    let mut r = 1;
    let (mut b, mut e) = (a % p, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Rank by plain Gaussian elimination.
pub fn rank(p: u64, m: &Mat) -> usize {
    let mut m: Mat = m.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, piv);
        let iv = inv(m[r][c], p);
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c] * iv % p;
                for j in 0..cols {
                    m[i][j] = (m[i][j] + p * p - f * m[r][j] % p) % p;
                }
            }
        }
        r += 1;
    }
    r
}

pub fn to_mat(m: &Matrix<Fp>) -> Mat {
    (0..m.rows()).map(|i| m.row(i).iter().map(|&x| x as u64).collect()).collect()
}

pub fn from_mat(f: &Fp, m: &Mat) -> Matrix<Fp> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    Matrix::from_fn(f, rows, cols, |i, j| (m[i][j] % f.modulus() as u64) as u32)
}

fn combine(p: u64, mats: &[Mat], c: &[u64]) -> Mat {
    let (r, k) = (mats[0].len(), mats[0].first().map_or(0, |x| x.len()));
    let mut out = vec![vec![0; k]; r];
    for (m, &a) in mats.iter().zip(c) {
        for i in 0..r {
            for j in 0..k {
                out[i][j] = (out[i][j] + a * m[i][j]) % p;
            }
        }
    }
    out
}

/// Every coefficient vector of length `d`, zero included, in counting order.
pub fn all_vectors(p: u64, d: usize) -> impl Iterator<Item = Vec<u64>> {
    let total = p.pow(d as u32);
    (0..total).map(move |mut u| {
        let mut v = vec![0; d];
        for x in v.iter_mut() {
            *x = u % p;
            u /= p;
        }
        v
    })
}

pub fn max_rank(p: u64, mats: &[Mat]) -> usize {
    all_vectors(p, mats.len()).map(|c| rank(p, &combine(p, mats, &c))).max().unwrap_or(0)
}

/// Smallest rank of a nonzero element of the span, `None` for the zero span.
pub fn min_rank(p: u64, mats: &[Mat]) -> Option<usize> {
    all_vectors(p, mats.len()).map(|c| rank(p, &combine(p, mats, &c))).filter(|&r| r > 0).min()
}

/// All subspaces of GF(p)^n, each given by its sorted full set of vectors.
/// Grown one vector at a time from the zero space.
pub fn subspaces(p: u64, n: usize) -> Vec<Vec<Vec<u64>>> {
    let vectors: Vec<Vec<u64>> = all_vectors(p, n).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut frontier = vec![vec![vec![0; n]]];
    seen.insert(frontier[0].clone());
    while let Some(space) = frontier.pop() {
        for v in &vectors {
            if space.contains(v) {
                continue;
            }
            let mut next: Vec<Vec<u64>> = Vec::new();
            for s in &space {
                for a in 0..p {
                    next.push(s.iter().zip(v).map(|(x, y)| (x + a * y) % p).collect());
                }
            }
            next.sort();
            next.dedup();
            if seen.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    seen.into_iter().collect()
}

fn perp(p: u64, n: usize, v: &[Vec<u64>]) -> Vec<Vec<u64>> {
    all_vectors(p, n).filter(|u| v.iter().all(|x| x.iter().zip(u).map(|(a, b)| a * b).sum::<u64>() % p == 0)).collect()
}

fn dim(p: u64, space: &[Vec<u64>]) -> usize {
    let mut d = 0;
    while p.pow(d as u32) < space.len() as u64 {
        d += 1;
    }
    d
}

/// Subspaces of GF(p)^n with their dimensions and annihilators.
pub struct Lattice {
    pub n: usize,
    dims: Vec<usize>,
    perps: Vec<Vec<Vec<u64>>>,
}

pub fn lattice(p: u64, n: usize) -> Lattice {
    let spaces = subspaces(p, n);
    Lattice { n, dims: spaces.iter().map(|v| dim(p, v)).collect(), perps: spaces.iter().map(|v| perp(p, n, v)).collect() }
}

/// `min dim V1 + dim V2` over all `V1 ⊗ F + F ⊗ V2` containing the span.
pub fn mincov(p: u64, mats: &[Mat], n1: usize, n2: usize) -> usize {
    mincov_in(p, mats, &lattice(p, n1), &lattice(p, n2))
}

/// The span lies in `V1 ⊗ F + F ⊗ V2` iff `u^T M w = 0` for all `u ⊥ V1`, `w ⊥ V2`.
pub fn mincov_in(p: u64, mats: &[Mat], l1: &Lattice, l2: &Lattice) -> usize {
    let (n1, n2) = (l1.n, l2.n);
    let mut best = usize::MAX;
    for a in 0..l1.dims.len() {
        for b in 0..l2.dims.len() {
            let cost = l1.dims[a] + l2.dims[b];
            if cost >= best {
                continue;
            }
            let covered = mats.iter().all(|m| {
                l1.perps[a].iter().all(|u| {
                    l2.perps[b].iter().all(|w| {
                        let mut s = 0;
                        for i in 0..n1 {
                            for j in 0..n2 {
                                s += u[i] * m[i][j] * w[j];
                            }
                        }
                        s % p == 0
                    })
                })
            });
            if covered {
                best = cost;
            }
        }
    }
    best
}

/// Minimum number of rows plus columns hitting every point.
pub fn min_line_cover(points: &[(usize, usize)], rows: usize) -> usize {
    let mut best = usize::MAX;
    for mask in 0u32..(1 << rows) {
        let mut need = std::collections::BTreeSet::new();
        for &(i, j) in points {
            if mask & (1 << i) == 0 {
                need.insert(j);
            }
        }
        best = best.min(mask.count_ones() as usize + need.len());
    }
    best
}

pub fn tensor_data(t: &Tensor3<Fp>) -> Vec<u64> {
    t.data().iter().map(|&x| x as u64).collect()
}

/// `(L1 ⊗ L2 ⊗ L3) T` on raw arrays.
pub fn restrict(p: u64, t: &[u64], dims: [usize; 3], l: [&Mat; 3]) -> Vec<u64> {
    let [n1, n2, n3] = dims;
    let r = [l[0].len(), l[1].len(), l[2].len()];
    let mut out = vec![0; r[0] * r[1] * r[2]];
    for a in 0..r[0] {
        for b in 0..r[1] {
            for c in 0..r[2] {
                let mut s = 0;
                for i in 0..n1 {
                    if l[0][a][i] == 0 {
                        continue;
                    }
                    for j in 0..n2 {
                        if l[1][b][j] == 0 {
                            continue;
                        }
                        for k in 0..n3 {
                            s += l[0][a][i] * l[1][b][j] % p * l[2][c][k] % p * t[(i * n2 + j) * n3 + k];
                        }
                    }
                }
                out[(a * r[1] + b) * r[2] + c] = s % p;
            }
        }
    }
    out
}

fn is_unit(t: &[u64], r: usize) -> bool {
    (0..r).all(|a| (0..r).all(|b| (0..r).all(|c| t[(a * r + b) * r + c] == u64::from(a == b && b == c))))
}

/// Largest `r` with `<r> <= T`, trying every triple of `r x n_i` maps.
/// Only for very small formats.
pub fn subrank(p: u64, t: &[u64], dims: [usize; 3]) -> usize {
    let mut best = 0;
    for r in 1..=*dims.iter().min().unwrap() {
        let maps = |n: usize| -> Vec<Mat> { all_vectors(p, r * n).map(|v| v.chunks(n).map(|c| c.to_vec()).collect()).collect() };
        let (m1, m2, m3) = (maps(dims[0]), maps(dims[1]), maps(dims[2]));
        let found = m1.iter().any(|a| m2.iter().any(|b| m3.iter().any(|c| is_unit(&restrict(p, t, dims, [a, b, c]), r))));
        if !found {
            break;
        }
        best = r;
    }
    best
}

/// Slice rank for formats with every `n_i <= 2`. There `SR <= min R_i <= 2`,
/// and `SR = 1` exactly when one flattening has rank 1.
pub fn slicerank_small(p: u64, t: &[u64], dims: [usize; 3]) -> usize {
    assert!(dims.iter().all(|&n| n <= 2));
    if t.iter().all(|&x| x == 0) {
        return 0;
    }
    let flat = |dir: usize| -> Mat {
        let [n1, n2, n3] = dims;
        match dir {
            0 => (0..n1).map(|i| (0..n2 * n3).map(|c| t[i * n2 * n3 + c]).collect()).collect(),
            1 => (0..n2).map(|j| (0..n1 * n3).map(|c| t[((c / n3) * n2 + j) * n3 + c % n3]).collect()).collect(),
            _ => (0..n3).map(|k| (0..n1 * n2).map(|c| t[c * n3 + k]).collect()).collect(),
        }
    };
    (0..3).map(|d| rank(p, &flat(d))).min().unwrap()
}

pub fn random_tensor<R: Rng>(f: &Fp, dims: [usize; 3], rng: &mut R) -> Tensor3<Fp> {
    let n = dims.iter().product();
    let data = (0..n).map(|_| rng.gen_range(0..f.modulus())).collect();
    Tensor3::from_vec(f, dims, data).unwrap()
}

pub fn random_concise<R: Rng>(f: &Fp, dims: [usize; 3], rng: &mut R) -> Tensor3<Fp> {
    loop {
        let t = random_tensor(f, dims, rng);
        if t.is_concise() {
            return t;
        }
    }
}

/// `T[i,j,k]` averaged over the six leg permutations.
pub fn random_symmetric_concise<R: Rng>(f: &Fp, n: usize, rng: &mut R) -> Tensor3<Fp> {
    loop {
        let mut t = Tensor3::zeros(f, [n, n, n]).unwrap();
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = rng.gen_range(0..f.modulus());
                    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        t.set(a, b, c, v);
                    }
                }
            }
        }
        if t.is_concise() {
            return t;
        }
    }
}

pub fn every_tensor(f: &Fp, dims: [usize; 3]) -> impl Iterator<Item = Tensor3<Fp>> + '_ {
    let n = dims.iter().product::<usize>();
    all_vectors(f.modulus() as u64, n).map(move |v| Tensor3::from_vec(f, dims, v.into_iter().map(|x| x as u32).collect()).unwrap())
}

pub fn span_mats(span: &subrank_core::SliceSpan<Fp>) -> Vec<Mat> {
    span.basis.iter().map(to_mat).collect()
}

pub fn elem(f: &Fp, v: i64) -> u32 {
    f.from_i64(v)
}
