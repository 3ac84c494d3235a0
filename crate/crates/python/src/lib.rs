//! Python bindings. Tensors carry their field at runtime; indices are 0-based.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subrank_core::bounds::asymptotic_bounds;
use subrank_core::degeneration::rho_degeneration;
use subrank_core::io::{parse_certificate, parse_tensor, write_certificate, AnyTensor};
use subrank_core::pivot::{all_rho, rho_ij, sqrt_certificate};
use subrank_core::slice_space::{direction_span, max_rank_bounds, min_rank_exhaustive, Limits};
use subrank_core::subrank::{compute_n, narrow_certificate, slicerank_exact, subrank_c2, subrank_exact, SubrankCertificate};
use subrank_core::{catalog, with_tensor, Error, Field, FieldSpec, Fp, Rationals, Tensor3};

create_exception!(subrank, SubrankError, PyException);
create_exception!(subrank, ParseError, SubrankError);
create_exception!(subrank, GuardError, SubrankError);
create_exception!(subrank, FieldTooSmallError, SubrankError);
create_exception!(subrank, VerificationError, SubrankError);

const DEFAULT_GUARD: u64 = 10_000_000;
const DEFAULT_SEED: u64 = 20240917;

fn err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Parse { .. } => ParseError::new_err(msg),
        Error::ResourceGuard { .. } => GuardError::new_err(msg),
        Error::FieldTooSmall { .. } => FieldTooSmallError::new_err(msg),
        Error::VerificationFailed(_) => VerificationError::new_err(msg),
        _ => SubrankError::new_err(msg),
    }
}

fn field_spec(s: &str) -> PyResult<FieldSpec> {
    s.parse().map_err(err)
}

fn prime(p: u32) -> PyResult<Fp> {
    Fp::new(p as u64).map_err(err)
}

fn limits(guard: u64, trials: usize) -> Limits {
    Limits { enum_guard: guard, cover_guard: guard, trials, ..Limits::default() }
}

#[derive(Clone)]
enum AnyCertificate {
    Prime(Fp, SubrankCertificate<Fp>),
    Rational(SubrankCertificate<Rationals>),
}

/// A verified subrank certificate: `<r>` is reached from the `power`-th
/// Kronecker power of the tensor it was made for.
#[pyclass(module = "subrank", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Certificate {
    inner: AnyCertificate,
    dims: [usize; 3],
}

#[pymethods]
impl Certificate {
    #[getter]
    fn r(&self) -> usize {
        match &self.inner {
            AnyCertificate::Prime(_, c) => c.r,
            AnyCertificate::Rational(c) => c.r,
        }
    }

    #[getter]
    fn power(&self) -> u32 {
        match &self.inner {
            AnyCertificate::Prime(_, c) => c.power,
            AnyCertificate::Rational(c) => c.power,
        }
    }

    fn to_text(&self) -> String {
        match &self.inner {
            AnyCertificate::Prime(f, c) => write_certificate(c, f, self.dims),
            AnyCertificate::Rational(c) => write_certificate(c, &Rationals, self.dims),
        }
    }

    /// Parse a certificate for `tensor` and replay it; raises on failure.
    #[staticmethod]
    fn parse(text: &str, tensor: &Tensor) -> PyResult<Certificate> {
        let (inner, dims) = match &tensor.inner {
            AnyTensor::Prime(t) => {
                let file = parse_certificate(t.field(), text).map_err(err)?;
                (AnyCertificate::Prime(t.field().clone(), file.certificate), file.base_dims)
            }
            AnyTensor::Rational(_) => {
                let file = parse_certificate(&Rationals, text).map_err(err)?;
                (AnyCertificate::Rational(file.certificate), file.base_dims)
            }
        };
        let c = Certificate { inner, dims };
        c.verify(tensor)?;
        Ok(c)
    }

    /// Replay against `tensor`; raises `VerificationError` if it does not hold.
    fn verify(&self, tensor: &Tensor) -> PyResult<bool> {
        if self.dims != tensor.inner.dims() {
            return Err(VerificationError::new_err("certificate is for a different format"));
        }
        let ok = match (&self.inner, &tensor.inner) {
            (AnyCertificate::Prime(_, c), AnyTensor::Prime(t)) => c.verify(t),
            (AnyCertificate::Rational(c), AnyTensor::Rational(t)) => c.verify(t),
            _ => return Err(SubrankError::new_err("certificate and tensor live over different fields")),
        }
        .map_err(err)?;
        if !ok {
            return Err(VerificationError::new_err(format!("<{}> does not replay", self.r())));
        }
        Ok(true)
    }

    fn __repr__(&self) -> String {
        format!("Certificate(r={}, power={})", self.r(), self.power())
    }
}

/// Order-3 tensor over GF(p) or the rationals.
#[pyclass(module = "subrank", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Tensor {
    inner: AnyTensor,
}

trait Wrap: Field {
    fn wrap(&self, c: SubrankCertificate<Self>) -> AnyCertificate;
}

impl Wrap for Fp {
    fn wrap(&self, c: SubrankCertificate<Fp>) -> AnyCertificate {
        AnyCertificate::Prime(self.clone(), c)
    }
}

impl Wrap for Rationals {
    fn wrap(&self, c: SubrankCertificate<Rationals>) -> AnyCertificate {
        AnyCertificate::Rational(c)
    }
}

#[pymethods]
impl Tensor {
    /// Parse the `tensor v1` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Tensor> {
        Ok(Tensor { inner: parse_tensor(text).map_err(err)? })
    }

    /// Build from `(i, j, k, value)` entries; values are ints or strings like `"-3/4"`.
    #[staticmethod]
    fn from_entries(field: &str, dims: [usize; 3], entries: Vec<(usize, usize, usize, Bound<'_, PyAny>)>) -> PyResult<Tensor> {
        fn build<F: Field>(f: &F, dims: [usize; 3], entries: &[(usize, usize, usize, String)]) -> Result<Tensor3<F>, Error> {
            let terms = entries
                .iter()
                .map(|(i, j, k, v)| Ok((*i, *j, *k, f.parse_elem(v)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            Tensor3::from_terms(f, dims, &terms)
        }
        let entries = entries
            .into_iter()
            .map(|(i, j, k, v)| Ok((i, j, k, v.str()?.to_string())))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = match field_spec(field)? {
            FieldSpec::Prime(p) => AnyTensor::Prime(build(&prime(p)?, dims, &entries).map_err(err)?),
            FieldSpec::Rationals => AnyTensor::Rational(build(&Rationals, dims, &entries).map_err(err)?),
        };
        Ok(Tensor { inner })
    }

    /// A named catalog tensor, e.g. `Tensor.catalog("null_algebra", [4], "gf:5")`.
    #[staticmethod]
    #[pyo3(signature = (name, params = Vec::new(), field = "gf:2"))]
    fn catalog(name: &str, params: Vec<usize>, field: &str) -> PyResult<Tensor> {
        let inner = match field_spec(field)? {
            FieldSpec::Prime(p) => AnyTensor::Prime(catalog::by_name(&prime(p)?, name, &params).map_err(err)?),
            FieldSpec::Rationals => AnyTensor::Rational(catalog::by_name(&Rationals, name, &params).map_err(err)?),
        };
        Ok(Tensor { inner })
    }

    #[getter]
    fn field(&self) -> String {
        self.inner.spec().to_string()
    }

    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        let [a, b, c] = self.inner.dims();
        (a, b, c)
    }

    /// Nonzero entries as `(i, j, k, value)` with values as strings.
    fn nonzeros(&self) -> Vec<(usize, usize, usize, String)> {
        with_tensor!(&self.inner, t => t.nonzeros().into_iter().map(|(i, j, k, v)| (i, j, k, t.field().format_elem(&v))).collect())
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn flattening_ranks(&self) -> (usize, usize, usize) {
        let [a, b, c] = with_tensor!(&self.inner, t => t.flattening_ranks());
        (a, b, c)
    }

    fn is_concise(&self) -> bool {
        with_tensor!(&self.inner, t => t.is_concise())
    }

    fn kron(&self, other: &Tensor) -> PyResult<Tensor> {
        let inner = match (&self.inner, &other.inner) {
            (AnyTensor::Prime(a), AnyTensor::Prime(b)) => AnyTensor::Prime(a.kron(b).map_err(err)?),
            (AnyTensor::Rational(a), AnyTensor::Rational(b)) => AnyTensor::Rational(a.kron(b).map_err(err)?),
            (a, b) => return Err(err(Error::MixedFields(a.spec().to_string(), b.spec().to_string()))),
        };
        Ok(Tensor { inner })
    }

    fn power(&self, m: u32) -> PyResult<Tensor> {
        let inner = match &self.inner {
            AnyTensor::Prime(t) => AnyTensor::Prime(t.kron_power(m).map_err(err)?),
            AnyTensor::Rational(t) => AnyTensor::Rational(t.kron_power(m).map_err(err)?),
        };
        Ok(Tensor { inner })
    }

    /// Exact subrank with its certificate (finite fields only).
    #[pyo3(signature = (guard = DEFAULT_GUARD))]
    fn subrank(&self, py: Python<'_>, guard: u64) -> PyResult<(usize, Certificate)> {
        let inner = &self.inner;
        let (q, c) = py
            .detach(|| with_tensor!(inner, t => subrank_exact(t, guard).map(|(q, c)| (q, t.field().wrap(c)))))
            .map_err(err)?;
        Ok((q, Certificate { inner: c, dims: inner.dims() }))
    }

    #[pyo3(signature = (guard = DEFAULT_GUARD))]
    fn slicerank(&self, py: Python<'_>, guard: u64) -> PyResult<usize> {
        let inner = &self.inner;
        py.detach(|| with_tensor!(inner, t => slicerank_exact(t, guard).map(|s| s.value))).map_err(err)
    }

    /// `(lower, upper)` on the max-rank of the direction-`dir` slice span.
    #[pyo3(signature = (dir, guard = DEFAULT_GUARD, trials = 64, seed = DEFAULT_SEED))]
    fn maxrank(&self, dir: usize, guard: u64, trials: usize, seed: u64) -> PyResult<(usize, usize)> {
        with_tensor!(&self.inner, t => {
            let span = direction_span(t, dir).map_err(err)?;
            let b = max_rank_bounds(&span, &limits(guard, trials), &mut ChaCha8Rng::seed_from_u64(seed)).map_err(err)?;
            Ok((b.lower.value, b.upper))
        })
    }

    #[pyo3(signature = (dir, guard = DEFAULT_GUARD))]
    fn minrank(&self, dir: usize, guard: u64) -> PyResult<usize> {
        with_tensor!(&self.inner, t => {
            let span = direction_span(t, dir).map_err(err)?;
            Ok(min_rank_exhaustive(&span, guard).map_err(err)?.value)
        })
    }

    /// Pivot-cover number with rows from direction `i`, columns from `j`.
    fn rho(&self, i: usize, j: usize) -> PyResult<usize> {
        with_tensor!(&self.inner, t => rho_ij(t, i, j).map_err(err))
    }

    fn all_rho(&self) -> PyResult<[usize; 6]> {
        with_tensor!(&self.inner, t => all_rho(t).map_err(err))
    }

    /// Lower and upper bounds on the asymptotic subrank, as a dict.
    #[pyo3(signature = (guard = DEFAULT_GUARD, trials = 64, seed = DEFAULT_SEED))]
    fn bounds<'py>(&self, py: Python<'py>, guard: u64, trials: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let inner = &self.inner;
        let (kv, lower, upper) = py.detach(|| {
            with_tensor!(inner, t => {
                let b = asymptotic_bounds(t, &limits(guard, trials), seed);
                (b.to_key_values(), b.lower().to_f64(), b.upper)
            })
        });
        let d = PyDict::new(py);
        let mut bounds: Vec<String> = Vec::new();
        for line in kv.lines() {
            if let Some((k, v)) = line.split_once('=') {
                if k == "bound" {
                    bounds.push(v.to_string());
                } else {
                    d.set_item(k, v)?;
                }
            }
        }
        d.set_item("bounds", bounds)?;
        d.set_item("lower", lower)?;
        d.set_item("upper", upper)?;
        Ok(d)
    }

    /// One of `rho` (needs `orient`), `exact`, `c2`, `sqrt`, `narrow`.
    #[pyo3(signature = (method, orient = None, power = 16, guard = DEFAULT_GUARD, seed = DEFAULT_SEED))]
    fn certify(&self, py: Python<'_>, method: &str, orient: Option<(usize, usize)>, power: u32, guard: u64, seed: u64) -> PyResult<Certificate> {
        let inner = &self.inner;
        let lim = limits(guard, 64);
        let c = py
            .detach(|| {
                with_tensor!(inner, t => {
                    let c = match method {
                        "rho" => {
                            let (i, j) = orient.ok_or_else(|| Error::BadParams("rho needs orient=(i, j)".into()))?;
                            SubrankCertificate::from_degeneration(rho_degeneration(t, i, j)?)
                        }
                        "exact" => subrank_exact(t, guard)?.1,
                        "c2" => subrank_c2(t)?,
                        "sqrt" => SubrankCertificate::from_degeneration(sqrt_certificate(t)?),
                        "narrow" => narrow_certificate(t, power, &lim, seed)?,
                        other => return Err(Error::BadParams(format!("unknown method {other:?}"))),
                    };
                    if !c.verify(t)? {
                        return Err(Error::VerificationFailed(format!("{method} certificate does not replay")));
                    }
                    Ok(t.field().wrap(c))
                })
            })
            .map_err(err)?;
        Ok(Certificate { inner: c, dims: inner.dims() })
    }

    fn __eq__(&self, other: &Tensor) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let [a, b, c] = self.inner.dims();
        format!("Tensor(field={}, dims=({a}, {b}, {c}))", self.inner.spec())
    }
}

/// Exhaustive table over all tensors of `dims` over GF(p).
#[pyfunction]
#[pyo3(signature = (dims, field = "gf:2", start = 0, count = None, cap = 1 << 20, guard = DEFAULT_GUARD))]
fn scan<'py>(py: Python<'py>, dims: [usize; 3], field: &str, start: u64, count: Option<u64>, cap: u64, guard: u64) -> PyResult<Bound<'py, PyDict>> {
    let f = match field_spec(field)? {
        FieldSpec::Prime(p) => prime(p)?,
        FieldSpec::Rationals => return Err(SubrankError::new_err("scan needs a prime field")),
    };
    let report = py.detach(|| subrank_core::scan::scan(&f, dims, start, count, cap, guard)).map_err(err)?;
    let d = PyDict::new(py);
    let rows: Vec<(usize, usize, [usize; 3], bool, u64)> =
        report.buckets.iter().map(|(k, v)| (k.subrank, k.slicerank, k.flattening_ranks, k.concise, *v)).collect();
    d.set_item("rows", rows)?;
    d.set_item("tensors", report.scanned())?;
    d.set_item("total", report.total)?;
    d.set_item("violations", report.violations.clone())?;
    d.set_item("table", report.to_table())?;
    Ok(d)
}

/// The dimension threshold `c^(4c+2) * 3^(c-1)` of the narrow-tensor bound.
#[pyfunction]
fn threshold(py: Python<'_>, c: usize) -> PyResult<Bound<'_, PyAny>> {
    let n = compute_n(c).map_err(err)?;
    py.import("builtins")?.getattr("int")?.call1((n.to_string(),))
}

#[pymodule]
fn subrank(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Tensor>()?;
    m.add_class::<Certificate>()?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add("SubrankError", py.get_type::<SubrankError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("GuardError", py.get_type::<GuardError>())?;
    m.add("FieldTooSmallError", py.get_type::<FieldTooSmallError>())?;
    m.add("VerificationError", py.get_type::<VerificationError>())?;
    Ok(())
}
