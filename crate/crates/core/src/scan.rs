//! Exhaustive enumeration of all tensors of a small format over a prime field.
//!
//! Tensor number `u` has its dense entries given by the base-`q` digits of
//! `u`, most significant first, so numbering follows lexicographic entry
//! order. Work is split into disjoint index chunks and merged with
//! commutative counters, so the report does not depend on thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Fp;
use crate::subrank::{slicerank_exact, subrank_exact};
use crate::tensor::Tensor3;

const CHUNK: u64 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScanKey {
    pub subrank: usize,
    pub slicerank: usize,
    pub flattening_ranks: [usize; 3],
    pub concise: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScanReport {
    pub modulus: u32,
    pub dims: [usize; 3],
    pub start: u64,
    pub count: u64,
    /// `q^(n1 n2 n3)`.
    pub total: u64,
    pub buckets: BTreeMap<ScanKey, u64>,
    pub subrank_values: BTreeMap<usize, u64>,
    pub slicerank_values: BTreeMap<usize, u64>,
    /// Tensor numbers where `Q <= SR <= min R_i` fails.
    pub violations: Vec<u64>,
}

impl ScanReport {
    fn empty(modulus: u32, dims: [usize; 3], start: u64, count: u64, total: u64) -> Self {
        ScanReport { modulus, dims, start, count, total, ..Default::default() }
    }

    fn merge(mut self, other: ScanReport) -> ScanReport {
        for (k, v) in other.buckets {
            *self.buckets.entry(k).or_default() += v;
        }
        for (k, v) in other.subrank_values {
            *self.subrank_values.entry(k).or_default() += v;
        }
        for (k, v) in other.slicerank_values {
            *self.slicerank_values.entry(k).or_default() += v;
        }
        self.violations.extend(other.violations);
        self.violations.sort_unstable();
        self
    }

    pub fn scanned(&self) -> u64 {
        self.buckets.values().sum()
    }

    pub fn to_table(&self) -> String {
        let [a, b, c] = self.dims;
        let mut out = format!(
            "scan gf:{} dims {a},{b},{c} start {} count {} of {}\n",
            self.modulus, self.start, self.count, self.total
        );
        out.push_str("subrank slicerank R1 R2 R3 concise count\n");
        for (k, v) in &self.buckets {
            let [r1, r2, r3] = k.flattening_ranks;
            let _ = writeln!(out, "{} {} {r1} {r2} {r3} {} {v}", k.subrank, k.slicerank, k.concise as u8);
        }
        let multiset = |m: &BTreeMap<usize, u64>| m.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "subrank values {}", multiset(&self.subrank_values));
        let _ = writeln!(out, "slicerank values {}", multiset(&self.slicerank_values));
        let _ = writeln!(out, "tensors {}", self.scanned());
        let _ = writeln!(out, "chain violations {}", self.violations.len());
        out
    }
}

/// Tensor number `u` of the given format.
pub fn tensor_at(f: &Fp, dims: [usize; 3], mut u: u64) -> Result<Tensor3<Fp>> {
    let n = dims.iter().product::<usize>();
    let q = f.modulus() as u64;
    let mut data = vec![0u32; n];
    for slot in data.iter_mut().rev() {
        *slot = (u % q) as u32;
        u /= q;
    }
    Tensor3::from_vec(f, dims, data)
}

/// Scan tensor numbers `start .. start + count`, clipped to the format.
/// `cap` bounds `q^(n1 n2 n3)`; `guard` is passed to the exact searches.
pub fn scan(f: &Fp, dims: [usize; 3], start: u64, count: Option<u64>, cap: u64, guard: u64) -> Result<ScanReport> {
    let n = dims.iter().product::<usize>() as u32;
    let q = f.modulus() as u64;
    let total = q.checked_pow(n).filter(|&t| t <= cap).ok_or_else(|| Error::guard("scan size", format!("{q}^{n}"), cap))?;
    let start = start.min(total);
    let end = count.map_or(total, |c| start.saturating_add(c).min(total));
    let chunks: Vec<u64> = (start..end).step_by(CHUNK as usize).collect();
    let parts: Vec<ScanReport> = chunks
        .par_iter()
        .map(|&lo| {
            let mut part = ScanReport::empty(f.modulus(), dims, start, end - start, total);
            for u in lo..(lo + CHUNK).min(end) {
                let t = tensor_at(f, dims, u)?;
                let (sub, _) = subrank_exact(&t, guard)?;
                let sr = if t.is_zero() { 0 } else { slicerank_exact(&t, guard)?.value };
                let ranks = t.flattening_ranks();
                let key = ScanKey { subrank: sub, slicerank: sr, flattening_ranks: ranks, concise: t.is_concise() };
                *part.buckets.entry(key).or_default() += 1;
                *part.subrank_values.entry(sub).or_default() += 1;
                *part.slicerank_values.entry(sr).or_default() += 1;
                if !(sub <= sr && sr <= *ranks.iter().min().expect("three ranks")) {
                    part.violations.push(u);
                }
            }
            Ok(part)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(ScanReport::empty(f.modulus(), dims, start, end - start, total), ScanReport::merge))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbering_is_lexicographic() {
        let f = Fp::new(3).unwrap();
        let t = tensor_at(&f, [1, 1, 2], 5).unwrap();
        assert_eq!(t.data(), &[1, 2]);
    }

    #[test]
    fn chunks_add_up() {
        let f = Fp::new(2).unwrap();
        let whole = scan(&f, [1, 2, 2], 0, None, 1 << 20, 1 << 20).unwrap();
        assert_eq!(whole.scanned(), 16);
        let a = scan(&f, [1, 2, 2], 0, Some(7), 1 << 20, 1 << 20).unwrap();
        let b = scan(&f, [1, 2, 2], 7, None, 1 << 20, 1 << 20).unwrap();
        assert_eq!(a.merge(b).buckets, whole.buckets);
        assert!(whole.violations.is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let f = Fp::new(2).unwrap();
        assert!(matches!(scan(&f, [3, 3, 3], 0, None, 1 << 20, 1 << 20), Err(Error::ResourceGuard { .. })));
    }
}
