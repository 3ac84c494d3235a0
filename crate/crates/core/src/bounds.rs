//! Certified asymptotic subrank intervals collected from every construction
//! that applies to a tensor.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::catalog;
use crate::degeneration::{mamu_border_lb, rho_degeneration};
use crate::error::{Error, Result};
use crate::field::{Field, FieldSize, FieldSpec};
use crate::pivot::{all_rho, is_pivot_matched, sqrt_certificate, ORIENTATIONS};
use crate::slice_space::{direction_span, max_rank_bounds, product_witnesses, Limits, RankMethod, SliceWitness};
use crate::subrank::{mamu_cube, slicerank_exact, subrank_exact, two_direction_square, SubrankCertificate};
use crate::tensor::{Tensor3, MAX_ENTRIES};

/// The exact real number `base^{1/root}`, `base >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootBound {
    pub base: BigRational,
    pub root: u32,
}

impl RootBound {
    pub fn new(base: BigRational, root: u32) -> Self {
        assert!(root >= 1 && !base.is_negative());
        RootBound { base, root }
    }

    pub fn integer(n: u64, root: u32) -> Self {
        Self::new(BigRational::from_integer(BigInt::from(n)), root)
    }

    pub fn ratio(num: u64, den: u64, root: u32) -> Self {
        Self::new(BigRational::new(BigInt::from(num), BigInt::from(den)), root)
    }

    /// Compare the real values: `a^{1/p}` vs `b^{1/q}` is `a^q` vs `b^p`.
    pub fn value_cmp(&self, other: &Self) -> Ordering {
        let lhs = num_traits::pow(self.base.clone(), other.root as usize);
        let rhs = num_traits::pow(other.base.clone(), self.root as usize);
        lhs.cmp(&rhs)
    }

    /// `floor(value * 10^digits)` where `value = base^{1/root}`.
    pub fn scaled_floor(&self, digits: u32) -> BigUint {
        let scale = BigInt::from(10u32).pow(digits * self.root);
        let x = (self.base.numer() * scale) / self.base.denom();
        x.to_biguint().expect("nonnegative").nth_root(self.root)
    }

    /// Truncated decimal expansion.
    pub fn decimal(&self, digits: u32) -> String {
        let s = self.scaled_floor(digits).to_string();
        if digits == 0 {
            return s;
        }
        let d = digits as usize;
        let padded = format!("{s:0>width$}", width = d + 1);
        let (int, frac) = padded.split_at(padded.len() - d);
        format!("{int}.{frac}")
    }

    pub fn to_f64(&self) -> f64 {
        self.base.to_f64().unwrap_or(f64::NAN).powf(1.0 / self.root as f64)
    }
}

impl fmt::Display for RootBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = if self.base.is_integer() { self.base.numer().to_string() } else { format!("({})", self.base) };
        if self.root == 1 {
            write!(f, "{base}")
        } else {
            write!(f, "{base}^(1/{})", self.root)
        }
    }
}

/// What a lower bound rests on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backing {
    /// A restriction or degeneration that replays on the input.
    Certificate,
    /// An exhaustive search.
    ExactOracle,
    /// A known result about matrix multiplication tensors, applied to a
    /// verified restriction.
    Literature,
}

impl fmt::Display for Backing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backing::Certificate => "certificate",
            Backing::ExactOracle => "exact-oracle",
            Backing::Literature => "literature",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LowerBound<F: Field> {
    pub bound: RootBound,
    pub method: &'static str,
    pub backing: Backing,
    pub certificate: Option<SubrankCertificate<F>>,
    pub note: String,
}

/// `Q_i` estimate with a witness for the lower end.
#[derive(Clone, Debug)]
pub struct QiEstimate<F: Field> {
    pub witness: SliceWitness<F>,
    pub upper: usize,
    pub method: String,
}

impl<F: Field> QiEstimate<F> {
    pub fn lower(&self) -> usize {
        self.witness.rank
    }

    pub fn is_exact(&self) -> bool {
        self.witness.rank == self.upper
    }
}

#[derive(Clone, Debug)]
pub struct BoundsReport<F: Field> {
    pub field: FieldSpec,
    pub dims: [usize; 3],
    pub concise: bool,
    pub flattening_ranks: [usize; 3],
    pub q: Vec<QiEstimate<F>>,
    /// In the order of [`ORIENTATIONS`].
    pub rho: [usize; 6],
    pub subrank: Option<usize>,
    pub slicerank: Option<usize>,
    pub lower_bounds: Vec<LowerBound<F>>,
    /// Index into `lower_bounds` of the largest one.
    pub best: Option<usize>,
    pub upper: usize,
    pub skipped: Vec<(&'static str, String)>,
    pub annotations: Vec<String>,
}

impl<F: Field> BoundsReport<F> {
    pub fn lower(&self) -> RootBound {
        self.best.map_or_else(|| RootBound::integer(0, 1), |i| self.lower_bounds[i].bound.clone())
    }

    pub fn upper_bound(&self) -> RootBound {
        RootBound::integer(self.upper as u64, 1)
    }

    pub fn is_consistent(&self) -> bool {
        self.lower().value_cmp(&self.upper_bound()) != Ordering::Greater
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("field", self.field.to_string());
        kv("dims", join(&self.dims));
        kv("concise", self.concise.to_string());
        kv("flattening_ranks", join(&self.flattening_ranks));
        for (i, q) in self.q.iter().enumerate() {
            kv(&format!("q{}", i + 1), format!("{}..{} {}", q.lower(), q.upper, q.method));
        }
        for (k, (i, j)) in ORIENTATIONS.iter().enumerate() {
            kv(&format!("rho{i}{j}"), self.rho[k].to_string());
        }
        kv("subrank", self.subrank.map_or("unknown".into(), |v| v.to_string()));
        kv("slicerank", self.slicerank.map_or("unknown".into(), |v| v.to_string()));
        for lb in &self.lower_bounds {
            kv("bound", format!("{} ≈ {} [{}; {}] {}", lb.bound, lb.bound.decimal(4), lb.method, lb.backing, lb.note).trim_end().to_string());
        }
        for (what, why) in &self.skipped {
            kv("skipped", format!("{what}: {why}"));
        }
        match self.best {
            Some(i) => {
                let lb = &self.lower_bounds[i];
                kv("asymptotic_lower", format!("{} ≈ {}", lb.bound, lb.bound.decimal(4)));
                kv("asymptotic_lower_method", format!("{} [{}]", lb.method, lb.backing));
            }
            None => kv("asymptotic_lower", "0".into()),
        }
        kv("asymptotic_upper", self.upper.to_string());
        for a in &self.annotations {
            kv("note", a.clone());
        }
        out
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn power_fits(dims: [usize; 3], m: u32) -> bool {
    dims.iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul((n as u128).checked_pow(m)?))
        .is_some_and(|e| e <= MAX_ENTRIES as u128)
}

fn estimate_qi<F: Field>(t: &Tensor3<F>, limits: &Limits, rng: &mut ChaCha8Rng) -> Result<Vec<QiEstimate<F>>> {
    let mut out = Vec::with_capacity(3);
    for dir in 1..=3 {
        let span = direction_span(t, dir)?;
        let b = max_rank_bounds(&span, limits, rng)?;
        let method = match &b.lower.method {
            RankMethod::Exhaustive => "exhaustive".to_string(),
            RankMethod::Randomized { trials, .. } => format!("randomized({trials}), upper from {:?}", b.upper_source),
        };
        out.push(QiEstimate { witness: SliceWitness { dir, coeffs: b.lower.coeffs, rank: b.lower.value }, upper: b.upper, method });
    }
    Ok(out)
}

/// Nonzero entry as a restriction to `<1>`.
fn single_entry<F: Field>(t: &Tensor3<F>) -> Result<Option<SubrankCertificate<F>>> {
    let f = t.field();
    let Some((i, j, k, v)) = t.nonzeros().into_iter().next() else { return Ok(None) };
    let pick = |n: usize, at: usize, val: F::Elem| {
        crate::matrix::Matrix::from_fn(f, 1, n, |_, x| if x == at { val.clone() } else { f.zero() })
    };
    let [n1, n2, n3] = t.dims();
    let r = crate::tensor::Restriction::new(pick(n1, i, f.one()), pick(n2, j, f.one()), pick(n3, k, f.inv(&v)?));
    Ok(Some(SubrankCertificate::restriction(r, 1, 1)))
}

fn push<F: Field>(out: &mut Vec<LowerBound<F>>, bound: RootBound, method: &'static str, backing: Backing, cert: Option<SubrankCertificate<F>>, note: String) {
    out.push(LowerBound { bound, method, backing, certificate: cert, note });
}

/// Run every applicable construction and collect what verifies.
pub fn asymptotic_bounds<F: Field>(t: &Tensor3<F>, limits: &Limits, seed: u64) -> BoundsReport<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = t.field();
    let dims = t.dims();
    let flattening_ranks = t.flattening_ranks();
    let upper = flattening_ranks.into_iter().min().unwrap_or(0);
    let concise = t.is_concise();
    let mut skipped: Vec<(&'static str, String)> = Vec::new();
    let mut lbs: Vec<LowerBound<F>> = Vec::new();
    let mut annotations = Vec::new();

    let mut q = match estimate_qi(t, limits, &mut rng) {
        Ok(q) => q,
        Err(e) => {
            skipped.push(("slice max-ranks", e.to_string()));
            Vec::new()
        }
    };
    // Staircase witnesses guarantee Q_a Q_b >= n_k over large fields.
    if concise && q.len() == 3 {
        for k in 1..=3 {
            match product_witnesses(t, k, &mut rng) {
                Ok((wa, wb)) => {
                    for w in [wa, wb] {
                        let slot = &mut q[w.dir - 1];
                        if w.rank > slot.witness.rank {
                            slot.method = format!("{} (raised by staircase)", slot.method);
                            slot.witness = w;
                        }
                    }
                }
                Err(e) => skipped.push(("staircase witnesses", format!("direction {k}: {e}"))),
            }
        }
    }
    let rho = all_rho(t).unwrap_or_else(|e| {
        skipped.push(("pivot covers", e.to_string()));
        [0; 6]
    });

    if t.is_zero() {
        annotations.push("zero tensor: every bound is 0".into());
        return BoundsReport {
            field: f.spec(),
            dims,
            concise,
            flattening_ranks,
            q,
            rho,
            subrank: Some(0),
            slicerank: Some(0),
            lower_bounds: lbs,
            best: None,
            upper,
            skipped,
            annotations,
        };
    }

    if let Ok(Some(c)) = single_entry(t) {
        push(&mut lbs, RootBound::integer(1, 1), "single entry", Backing::Certificate, Some(c), String::new());
    }

    let exact_field = matches!(f.size(), FieldSize::Finite(_));
    let mut subrank = None;
    let mut slicerank = None;
    if exact_field {
        match subrank_exact(t, limits.enum_guard) {
            Ok((v, cert)) => {
                subrank = Some(v);
                push(&mut lbs, RootBound::integer(v as u64, 1), "exact subrank", Backing::ExactOracle, Some(cert), String::new());
            }
            Err(e) => skipped.push(("exact subrank", e.to_string())),
        }
        match slicerank_exact(t, limits.enum_guard) {
            Ok(sr) => slicerank = Some(sr.value),
            Err(e) => skipped.push(("exact slice rank", e.to_string())),
        }
    } else {
        skipped.push(("exact subrank", "needs a finite field".into()));
        skipped.push(("exact slice rank", "needs a finite field".into()));
    }

    // Border subrank from the best pivot cover.
    if let Some(best) = (0..6).max_by_key(|&k| (rho[k], usize::MAX - k)) {
        let (i, j) = ORIENTATIONS[best];
        if rho[best] > 0 {
            match rho_degeneration(t, i, j) {
                Ok(d) => {
                    let r = d.claimed_r as u64;
                    push(&mut lbs, RootBound::integer(r, 1), "pivot-cover degeneration", Backing::Certificate, Some(SubrankCertificate::from_degeneration(d)), format!("orientation ({i},{j})"));
                }
                Err(e) => skipped.push(("pivot-cover degeneration", e.to_string())),
            }
        }
    }

    if q.len() == 3 {
        // Two directions of large max-rank.
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by_key(|&d| std::cmp::Reverse(q[d].lower()));
        let (a, b) = (order[0], order[1]);
        let r = q[b].lower();
        if r >= 2 && power_fits(dims, 2) {
            match two_direction_square(t, &q[a].witness, &q[b].witness, r) {
                Ok(c) => push(&mut lbs, RootBound::integer(r as u64, 2), "two-direction square", Backing::Certificate, Some(c), format!("directions {} and {}", a + 1, b + 1)),
                Err(e) => skipped.push(("two-direction square", e.to_string())),
            }
        } else if r >= 2 {
            skipped.push(("two-direction square", "second power exceeds the entry guard".into()));
        }

        if q.iter().all(|e| e.lower() > 0) {
            let ws = [q[0].witness.clone(), q[1].witness.clone(), q[2].witness.clone()];
            match mamu_cube(t, &ws) {
                Ok(cube) => {
                    let note = format!(
                        "T^3 >= <{},{},{}>{}",
                        cube.sizes[1],
                        cube.sizes[2],
                        cube.sizes[0],
                        if cube.whole_verified { "" } else { " (factors verified separately)" }
                    );
                    push(&mut lbs, cube.bound.clone(), "cube of matrix multiplication", Backing::Literature, None, note);
                    let mut s = [q[0].lower() as u64, q[1].lower() as u64, q[2].lower() as u64];
                    s.sort();
                    if let Ok(v) = mamu_border_lb(s[0], s[1], s[2]) {
                        push(&mut lbs, RootBound::integer(v, 3), "border cube of matrix multiplication", Backing::Literature, None, format!("sorted sizes {s:?}"));
                    }
                }
                Err(e) => skipped.push(("cube of matrix multiplication", e.to_string())),
            }
        }
    }

    if t.is_cubical() {
        match is_pivot_matched(t) {
            Ok(pm) if pm.matched => {
                if power_fits(dims, 2) {
                    match sqrt_certificate(t) {
                        Ok(d) => {
                            let n = d.claimed_r as u64;
                            push(&mut lbs, RootBound::integer(n, 2), "pivot-matched square root", Backing::Certificate, Some(SubrankCertificate::from_degeneration(d)), String::new());
                        }
                        Err(e) => skipped.push(("pivot-matched square root", e.to_string())),
                    }
                } else {
                    skipped.push(("pivot-matched square root", "second power exceeds the entry guard".into()));
                }
            }
            Ok(_) => skipped.push(("pivot-matched square root", "pivot maps differ".into())),
            Err(e) => skipped.push(("pivot-matched square root", e.to_string())),
        }
    }

    match slicerank {
        Some(sr) if sr > 0 => {
            let s2 = (sr * sr) as u64;
            push(&mut lbs, RootBound::ratio(3 * s2, 64, 3), "slice rank, border cube", Backing::Literature, None, format!("SR = {sr}"));
            push(&mut lbs, RootBound::ratio(s2, 16, 3), "slice rank, asymptotic", Backing::Literature, None, format!("SR = {sr}"));
        }
        Some(_) => {}
        None => skipped.push(("slice rank bounds", "slice rank oracle did not run".into())),
    }

    if let Some(n) = null_algebra_size(t) {
        if n >= 5 {
            annotations.push(format!("null algebra of size {n}: known asymptotic subrank 2*sqrt({}) ≈ {}", n - 1, RootBound::integer(4 * (n as u64 - 1), 2).decimal(4)));
        }
    }
    annotations.push("asymptotic slice rank is not computed; only SR of the tensor itself".into());

    let best = (0..lbs.len()).reduce(|a, b| if lbs[b].bound.value_cmp(&lbs[a].bound) == Ordering::Greater { b } else { a });
    BoundsReport { field: f.spec(), dims, concise, flattening_ranks, q, rho, subrank, slicerank, lower_bounds: lbs, best, upper, skipped, annotations }
}

fn null_algebra_size<F: Field>(t: &Tensor3<F>) -> Option<usize> {
    let [n, a, b] = t.dims();
    if n != a || n != b || n == 0 {
        return None;
    }
    (catalog::null_algebra(t.field(), n).ok()? == *t).then_some(n)
}

/// `(min_i n_i)^{1/3}`.
pub fn cube_root_floor<F: Field>(t: &Tensor3<F>) -> RootBound {
    RootBound::integer(t.dims().into_iter().min().unwrap_or(0) as u64, 3)
}

/// Convenience for callers that only need the verdict.
pub fn check_report<F: Field>(r: &BoundsReport<F>, t: &Tensor3<F>) -> Result<()> {
    if !r.is_consistent() {
        return Err(Error::VerificationFailed(format!("lower {} exceeds upper {}", r.lower(), r.upper)));
    }
    for lb in &r.lower_bounds {
        if let Some(c) = &lb.certificate {
            if !c.verify(t)? {
                return Err(Error::VerificationFailed(format!("{} certificate does not replay", lb.method)));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;
    use crate::tensor::unit;

    #[test]
    fn root_bound_arithmetic() {
        let a = RootBound::integer(4, 2);
        let b = RootBound::integer(2, 1);
        assert_eq!(a.value_cmp(&b), Ordering::Equal);
        assert_eq!(RootBound::integer(5, 3).decimal(4), "1.7099");
        assert_eq!(RootBound::ratio(3, 64, 1).decimal(3), "0.046");
        assert_eq!(RootBound::integer(8, 3).to_string(), "8^(1/3)");
    }

    #[test]
    fn unit_tensor_report() {
        let f = Fp::new(5).unwrap();
        let u = unit(&f, 3).unwrap();
        let r = asymptotic_bounds(&u, &Limits::default(), 1);
        assert_eq!(r.lower().value_cmp(&RootBound::integer(3, 1)), Ordering::Equal);
        assert_eq!(r.upper, 3);
        check_report(&r, &u).unwrap();
    }
}
