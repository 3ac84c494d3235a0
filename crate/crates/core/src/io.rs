//! Text formats for tensors and certificates.
//!
//! Tensor files:
//!
//! ```text
//! tensor v1
//! field gf:7
//! dims 2 2 2
//! 1 2 2 1
//! 2 1 2 1
//! ```
//!
//! Body lines are `i j k value` with 1-based indices, nonzero entries only.
//! Certificates list each leg map as `row col exponent value` lines between
//! `map <leg> <rows> <cols>` and `end`. `#` starts a comment anywhere.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::degeneration::{Degeneration, LaurentMatrix};
use crate::error::{Error, Result};
use crate::field::{Field, FieldSpec, Fp, Rationals};
use crate::matrix::Matrix;
use crate::subrank::{CertificateKind, SubrankCertificate};
use crate::tensor::{Restriction, Tensor3};

/// A tensor over a field chosen at runtime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyTensor {
    Prime(Tensor3<Fp>),
    Rational(Tensor3<Rationals>),
}

/// Run `$body` with `$t` bound to the typed tensor inside an [`AnyTensor`].
#[macro_export]
macro_rules! with_tensor {
    ($any:expr, $t:ident => $body:expr) => {
        match $any {
            $crate::io::AnyTensor::Prime($t) => $body,
            $crate::io::AnyTensor::Rational($t) => $body,
        }
    };
}

impl AnyTensor {
    pub fn spec(&self) -> FieldSpec {
        with_tensor!(self, t => t.field().spec())
    }

    pub fn dims(&self) -> [usize; 3] {
        with_tensor!(self, t => t.dims())
    }

    pub fn to_text(&self) -> String {
        with_tensor!(self, t => write_tensor(t))
    }
}

impl From<Tensor3<Fp>> for AnyTensor {
    fn from(t: Tensor3<Fp>) -> Self {
        AnyTensor::Prime(t)
    }
}

impl From<Tensor3<Rationals>> for AnyTensor {
    fn from(t: Tensor3<Rationals>) -> Self {
        AnyTensor::Rational(t)
    }
}

/// Meaningful lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn expect_keyword<'a>(it: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, Vec<&'a str>)> {
    let (n, l) = it.next().ok_or_else(|| Error::parse(0, format!("missing `{key}` line")))?;
    let mut words = l.split_whitespace();
    if words.next() != Some(key) {
        return Err(Error::parse(n, format!("expected `{key}`")));
    }
    Ok((n, words.collect()))
}

fn parse_usize(n: usize, s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::parse(n, format!("`{s}` is not a nonnegative integer")))
}

fn parse_field(n: usize, words: &[&str]) -> Result<FieldSpec> {
    match words {
        [w] => w.parse().map_err(|e: Error| Error::parse(n, e.to_string())),
        _ => Err(Error::parse(n, "expected `field <gf:p | q>`")),
    }
}

fn parse_dims(n: usize, words: &[&str]) -> Result<[usize; 3]> {
    match words {
        [a, b, c] => Ok([parse_usize(n, a)?, parse_usize(n, b)?, parse_usize(n, c)?]),
        _ => Err(Error::parse(n, "expected three dimensions")),
    }
}

pub fn write_tensor<F: Field>(t: &Tensor3<F>) -> String {
    let f = t.field();
    let [a, b, c] = t.dims();
    let mut out = format!("tensor v1\nfield {}\ndims {a} {b} {c}\n", f.spec());
    for (i, j, k, v) in t.nonzeros() {
        let _ = writeln!(out, "{} {} {} {}", i + 1, j + 1, k + 1, f.format_elem(&v));
    }
    out
}

/// Parse into whichever field the header names.
pub fn parse_tensor(text: &str) -> Result<AnyTensor> {
    let mut it = lines(text);
    let (n, v) = expect_keyword(&mut it, "tensor")?;
    if v != ["v1"] {
        return Err(Error::parse(n, "unsupported tensor format version"));
    }
    let (n, w) = expect_keyword(&mut it, "field")?;
    match parse_field(n, &w)? {
        FieldSpec::Prime(p) => Ok(AnyTensor::Prime(parse_tensor_body(&Fp::new(p as u64)?, &mut it)?)),
        FieldSpec::Rationals => Ok(AnyTensor::Rational(parse_tensor_body(&Rationals, &mut it)?)),
    }
}

/// Parse a tensor that must live over `field`.
pub fn parse_tensor_in<F: Field>(field: &F, text: &str) -> Result<Tensor3<F>> {
    let mut it = lines(text);
    let (n, v) = expect_keyword(&mut it, "tensor")?;
    if v != ["v1"] {
        return Err(Error::parse(n, "unsupported tensor format version"));
    }
    let (n, w) = expect_keyword(&mut it, "field")?;
    let spec = parse_field(n, &w)?;
    if spec != field.spec() {
        return Err(Error::MixedFields(spec.to_string(), field.spec().to_string()));
    }
    parse_tensor_body(field, &mut it)
}

fn parse_tensor_body<'a, F: Field>(f: &F, it: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Tensor3<F>> {
    let (n, w) = expect_keyword(it, "dims")?;
    let dims = parse_dims(n, &w)?;
    let mut t = Tensor3::zeros(f, dims)?;
    let mut seen = HashSet::new();
    for (n, l) in it {
        let w: Vec<&str> = l.split_whitespace().collect();
        let [i, j, k, v] = w[..] else {
            return Err(Error::parse(n, "expected `i j k value`"));
        };
        let idx = [parse_usize(n, i)?, parse_usize(n, j)?, parse_usize(n, k)?];
        for l in 0..3 {
            if idx[l] == 0 || idx[l] > dims[l] {
                return Err(Error::parse(n, format!("index {} out of range 1..={}", idx[l], dims[l])));
            }
        }
        if !seen.insert(idx) {
            return Err(Error::parse(n, "duplicate coordinate"));
        }
        let val = f.parse_elem(v).map_err(|e| Error::parse(n, e.to_string()))?;
        if f.is_zero(&val) {
            return Err(Error::parse(n, "zero entries are not listed"));
        }
        t.set(idx[0] - 1, idx[1] - 1, idx[2] - 1, val);
    }
    Ok(t)
}

/// Serialize a certificate for a base tensor of dimensions `base_dims`.
pub fn write_certificate<F: Field>(c: &SubrankCertificate<F>, field: &F, base_dims: [usize; 3]) -> String {
    let (kind, maps) = match &c.kind {
        CertificateKind::Restriction(r) => ("restriction", r.maps.clone().map(|m| LaurentMatrix::constant(&m))),
        CertificateKind::Degeneration(d) => ("degeneration", d.maps.clone()),
    };
    let [a, b, d] = base_dims;
    let mut out = format!("certificate v1\nfield {}\nkind {kind}\nbase {a} {b} {d}\npower {}\nr {}\n", field.spec(), c.power, c.r);
    for (leg, m) in maps.iter().enumerate() {
        let _ = writeln!(out, "map {} {} {}", leg + 1, m.rows(), m.cols());
        for (i, j, e, v) in m.quadruples() {
            let _ = writeln!(out, "{} {} {} {}", i + 1, j + 1, e, field.format_elem(&v));
        }
        out.push_str("end\n");
    }
    out
}

/// A parsed certificate together with the base dimensions it names.
#[derive(Clone, Debug)]
pub struct CertificateFile<F: Field> {
    pub certificate: SubrankCertificate<F>,
    pub base_dims: [usize; 3],
}

pub fn parse_certificate<F: Field>(field: &F, text: &str) -> Result<CertificateFile<F>> {
    let mut it = lines(text).peekable();
    let (n, v) = expect_keyword(&mut it, "certificate")?;
    if v != ["v1"] {
        return Err(Error::parse(n, "unsupported certificate format version"));
    }
    let (n, w) = expect_keyword(&mut it, "field")?;
    let spec = parse_field(n, &w)?;
    if spec != field.spec() {
        return Err(Error::MixedFields(spec.to_string(), field.spec().to_string()));
    }
    let (n, w) = expect_keyword(&mut it, "kind")?;
    let degeneration = match w[..] {
        ["restriction"] => false,
        ["degeneration"] => true,
        _ => return Err(Error::parse(n, "kind is `restriction` or `degeneration`")),
    };
    let (n, w) = expect_keyword(&mut it, "base")?;
    let base_dims = parse_dims(n, &w)?;
    let (n, w) = expect_keyword(&mut it, "power")?;
    let power = match w[..] {
        [p] => p.parse::<u32>().map_err(|_| Error::parse(n, "bad power"))?,
        _ => return Err(Error::parse(n, "expected `power <m>`")),
    };
    let (n, w) = expect_keyword(&mut it, "r")?;
    let r = match w[..] {
        [x] => parse_usize(n, x)?,
        _ => return Err(Error::parse(n, "expected `r <size>`")),
    };
    let mut maps = Vec::with_capacity(3);
    for leg in 1..=3 {
        let (n, w) = expect_keyword(&mut it, "map")?;
        let [l, rows, cols] = w[..] else {
            return Err(Error::parse(n, "expected `map <leg> <rows> <cols>`"));
        };
        if parse_usize(n, l)? != leg {
            return Err(Error::parse(n, format!("expected map {leg}")));
        }
        let (rows, cols) = (parse_usize(n, rows)?, parse_usize(n, cols)?);
        let mut quads = Vec::new();
        loop {
            let (n, l) = it.next().ok_or_else(|| Error::parse(0, "unterminated map"))?;
            if l == "end" {
                break;
            }
            let w: Vec<&str> = l.split_whitespace().collect();
            let [i, j, e, v] = w[..] else {
                return Err(Error::parse(n, "expected `row col exponent value`"));
            };
            let (i, j) = (parse_usize(n, i)?, parse_usize(n, j)?);
            if i == 0 || i > rows || j == 0 || j > cols {
                return Err(Error::parse(n, "map entry out of range"));
            }
            let e: i64 = e.parse().map_err(|_| Error::parse(n, "bad exponent"))?;
            if !degeneration && e != 0 {
                return Err(Error::parse(n, "restriction certificates have exponent 0 only"));
            }
            let v = field.parse_elem(v).map_err(|err| Error::parse(n, err.to_string()))?;
            quads.push((i - 1, j - 1, e, v));
        }
        maps.push(LaurentMatrix::from_quadruples(field, rows, cols, &quads)?);
    }
    if let Some((n, _)) = it.next() {
        return Err(Error::parse(n, "trailing content"));
    }
    let maps: [LaurentMatrix<F>; 3] = maps.try_into().expect("three maps");
    let certificate = if degeneration {
        SubrankCertificate::from_degeneration(Degeneration { maps, claimed_r: r, power })
    } else {
        let plain = maps.map(|m| m.terms().get(&0).cloned().unwrap_or_else(|| Matrix::zeros(field, m.rows(), m.cols())));
        SubrankCertificate::restriction(Restriction { maps: plain }, r, power)
    };
    Ok(CertificateFile { certificate, base_dims })
}
