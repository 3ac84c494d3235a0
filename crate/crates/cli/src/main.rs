use std::cell::Cell;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subrank_core::bounds::asymptotic_bounds;
use subrank_core::degeneration::{border_le_qi_extract, rho_degeneration, Degeneration};
use subrank_core::io::{parse_certificate, parse_tensor, write_certificate, write_tensor, AnyTensor};
use subrank_core::pivot::{all_rho, pivot_basis, rho_sigma, sqrt_certificate, ORIENTATIONS};
use subrank_core::scan::scan;
use subrank_core::slice_space::{direction_span, max_rank_bounds, min_rank_exhaustive, Limits};
use subrank_core::subrank::{narrow_certificate, slicerank_exact, subrank_c2, subrank_exact, CertificateKind, SubrankCertificate};
use subrank_core::{catalog, check_concise_format, with_tensor, Error, Field, FieldSpec, Fp, Rationals, Tensor3};

/// Used whenever `--seed` is not given.
const DEFAULT_SEED: u64 = 20240917;

#[derive(Parser)]
#[command(name = "subrank", version, about = "Exact subrank, slice rank and border-subrank certificates for 3-tensors")]
struct Cli {
    /// Field tag, `gf:<p>` or `q`. Required by `catalog` and `scan`; elsewhere it must match the input.
    #[arg(long, global = true)]
    field: Option<String>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Work limit for exhaustive searches.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    guard: u64,
    /// Random trials for randomized max-rank.
    #[arg(long, global = true, default_value_t = 64)]
    trials: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the main artifact (tensor or certificate) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Kv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dimensions, flattening ranks and conciseness.
    Info { input: Option<PathBuf> },
    /// Every lower bound on the asymptotic subrank that applies.
    Bounds { input: Option<PathBuf> },
    /// Exact subrank over a finite field.
    Subrank { input: Option<PathBuf> },
    /// Exact slice rank over a finite field.
    Slicerank { input: Option<PathBuf> },
    /// Max-rank of the slice spans.
    Maxrank {
        input: Option<PathBuf>,
        /// Direction 1, 2 or 3; all three by default.
        #[arg(long)]
        dir: Option<usize>,
    },
    /// Exact min-rank of the slice spans.
    Minrank {
        input: Option<PathBuf>,
        #[arg(long)]
        dir: Option<usize>,
    },
    /// Pivot sets and their covers.
    Pivots {
        input: Option<PathBuf>,
        /// `i,j`: rows from direction i, columns from direction j.
        #[arg(long, value_parser = parse_pair)]
        orient: Option<(usize, usize)>,
    },
    /// Emit a verified certificate.
    Certify {
        method: Method,
        input: Option<PathBuf>,
        #[arg(long, value_parser = parse_pair)]
        orient: Option<(usize, usize)>,
        /// Kronecker power for `narrow`.
        #[arg(long, default_value_t = 16)]
        power: u32,
    },
    /// Replay a certificate against a tensor.
    Verify {
        certificate: PathBuf,
        #[arg(long)]
        tensor: Option<PathBuf>,
        /// Also extract a slice of direction d whose max-rank is at least r.
        #[arg(long)]
        extract: Option<usize>,
    },
    /// Kronecker power of a tensor.
    Power {
        input: Option<PathBuf>,
        #[arg(long)]
        m: u32,
    },
    /// Print a catalog tensor, e.g. `catalog matmul 2 2 2`.
    Catalog { name: String, params: Vec<usize> },
    /// Exhaustive table of subrank and slice rank over a small format.
    Scan {
        #[arg(long, value_parser = parse_dims)]
        dims: [usize; 3],
        /// First tensor number, for resuming.
        #[arg(long, default_value_t = 0)]
        start: u64,
        #[arg(long)]
        count: Option<u64>,
        /// Largest format size `q^(n1 n2 n3)` accepted.
        #[arg(long, default_value_t = 1 << 20)]
        cap: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Pivot-cover degeneration for `--orient i,j`.
    Rho,
    /// Restriction from the exact subrank search.
    Exact,
    /// Subrank 2 for concise n x n x 2 tensors.
    C2,
    /// Size-n degeneration on the square of a pivot-matched tensor.
    Sqrt,
    /// Narrow-tensor pipeline on power `--power`.
    Narrow,
    /// Strongest certified bound found by `bounds`.
    Best,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    match s.split(',').map(str::trim).map(str::parse).collect::<Result<Vec<usize>, _>>() {
        Ok(v) if v.len() == 2 => Ok((v[0], v[1])),
        _ => Err(format!("expected `i,j`, got {s:?}")),
    }
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    match s.split(',').map(str::trim).map(str::parse).collect::<Result<Vec<usize>, _>>() {
        Ok(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
        _ => Err(format!("expected `n1,n2,n3`, got {s:?}")),
    }
}

enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::Parse { .. }) => 2,
            Failure::Core(Error::ResourceGuard { .. }) => 3,
            Failure::Core(Error::FieldTooSmall { .. }) => 4,
            Failure::Core(Error::VerificationFailed(_)) => 5,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Ordered key-value output, rendered as aligned text or `key=value`.
#[derive(Default)]
struct Report(Vec<(String, String)>);

impl Report {
    fn put(&mut self, k: impl Into<String>, v: impl ToString) {
        self.0.push((k.into(), v.to_string()));
    }

    fn render(&self, format: Format) -> String {
        let width = self.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in &self.0 {
            match format {
                Format::Kv => out.push_str(&format!("{k}={v}\n")),
                Format::Text => out.push_str(&format!("{k:width$}  {v}\n")),
            }
        }
        out
    }
}

struct Ctx {
    limits: Limits,
    seed: u64,
    guard: u64,
    format: Format,
    out: Option<PathBuf>,
    /// Set once an artifact went to stdout; the report then goes to stderr.
    stdout_taken: Cell<bool>,
}

impl Ctx {
    /// Write an artifact to `--out` (reporting the path) or to stdout.
    fn emit(&self, report: &mut Report, key: &str, text: &str) -> CliResult<()> {
        match &self.out {
            Some(p) => {
                fs::write(p, text)?;
                report.put(key, p.display());
            }
            None => {
                print!("{text}");
                self.stdout_taken.set(true);
            }
        }
        Ok(())
    }
}

fn read_input(path: Option<&Path>) -> CliResult<String> {
    match path {
        Some(p) if p != Path::new("-") => fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn load(path: Option<&Path>, field: Option<FieldSpec>) -> CliResult<AnyTensor> {
    let t = parse_tensor(&read_input(path)?)?;
    if let Some(want) = field {
        if want != t.spec() {
            return Err(Error::MixedFields(t.spec().to_string(), want.to_string()).into());
        }
    }
    Ok(t)
}

fn dirs(dir: Option<usize>) -> CliResult<Vec<usize>> {
    match dir {
        None => Ok(vec![1, 2, 3]),
        Some(d @ 1..=3) => Ok(vec![d]),
        Some(d) => Err(Error::BadParams(format!("direction {d} is not 1, 2 or 3")).into()),
    }
}

fn ones(xs: &[usize]) -> String {
    xs.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn info<F: Field>(t: &Tensor3<F>, r: &mut Report) {
    let [a, b, c] = t.dims();
    r.put("field", t.field().spec());
    r.put("dims", join(&t.dims()));
    r.put("nonzeros", t.nonzeros().len());
    r.put("flattening_ranks", join(&t.flattening_ranks()));
    r.put("concise", t.is_concise());
    r.put("concise_format", check_concise_format(a, b, c));
    r.put("cubical", t.is_cubical());
    r.put("symmetric", t.is_symmetric());
}

fn certificate_out<F: Field>(ctx: &Ctx, r: &mut Report, t: &Tensor3<F>, c: &SubrankCertificate<F>) -> CliResult<()> {
    if !c.verify(t)? {
        return Err(Error::VerificationFailed("certificate does not replay".into()).into());
    }
    r.put("r", c.r);
    r.put("power", c.power);
    r.put("verified", true);
    ctx.emit(r, "certificate", &write_certificate(c, t.field(), t.dims()))
}

fn run_on<F: Field>(ctx: &Ctx, cmd: &Cmd, t: &Tensor3<F>) -> CliResult<Report> {
    let mut r = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    match cmd {
        Cmd::Info { .. } => info(t, &mut r),
        Cmd::Bounds { .. } => {
            let b = asymptotic_bounds(t, &ctx.limits, ctx.seed);
            for line in b.to_key_values().lines() {
                if let Some((k, v)) = line.split_once('=') {
                    r.put(k, v);
                }
            }
        }
        Cmd::Subrank { .. } => {
            let (q, c) = subrank_exact(t, ctx.guard)?;
            r.put("subrank", q);
            if let Some(p) = &ctx.out {
                fs::write(p, write_certificate(&c, t.field(), t.dims()))?;
                r.put("certificate", p.display());
            }
        }
        Cmd::Slicerank { .. } => {
            let sr = slicerank_exact(t, ctx.guard)?;
            r.put("slicerank", sr.value);
            let dims: Vec<usize> = sr.spaces.iter().map(|s| s.rows()).collect();
            r.put("subspace_dims", join(&dims));
        }
        Cmd::Maxrank { dir, .. } => {
            for d in dirs(*dir)? {
                let b = max_rank_bounds(&direction_span(t, d)?, &ctx.limits, &mut rng)?;
                let v = if b.is_exact() { b.upper.to_string() } else { format!("{}..{}", b.lower.value, b.upper) };
                r.put(format!("q{d}"), v);
            }
        }
        Cmd::Minrank { dir, .. } => {
            for d in dirs(*dir)? {
                let m = min_rank_exhaustive(&direction_span(t, d)?, ctx.guard)?;
                r.put(format!("minrank{d}"), m.value);
            }
        }
        Cmd::Pivots { orient, .. } => match orient {
            Some((i, j)) => {
                let pb = pivot_basis(&t.slice_span(*i, *j)?)?;
                let shape = (t.dims()[i - 1], t.dims()[j - 1]);
                let rs = rho_sigma(&pb.pivots, shape)?;
                let pivots: Vec<String> = pb.pivots.iter().map(|(a, b)| format!("({},{})", a + 1, b + 1)).collect();
                r.put("pivots", pivots.join(" "));
                r.put("rho", rs.rho);
                r.put("sigma", rs.sigma);
                r.put("cover_rows", ones(&rs.cover_rows));
                r.put("cover_cols", ones(&rs.cover_cols));
            }
            None => {
                let rho = all_rho(t)?;
                for ((i, j), v) in ORIENTATIONS.iter().zip(rho) {
                    r.put(format!("rho{i}{j}"), v);
                }
            }
        },
        Cmd::Certify { method, orient, power, .. } => {
            let c = match method {
                Method::Rho => {
                    let (i, j) = orient.ok_or_else(|| Error::BadParams("certify rho needs --orient i,j".into()))?;
                    SubrankCertificate::from_degeneration(rho_degeneration(t, i, j)?)
                }
                Method::Exact => subrank_exact(t, ctx.guard)?.1,
                Method::C2 => subrank_c2(t)?,
                Method::Sqrt => SubrankCertificate::from_degeneration(sqrt_certificate(t)?),
                Method::Narrow => narrow_certificate(t, *power, &ctx.limits, ctx.seed)?,
                Method::Best => {
                    let b = asymptotic_bounds(t, &ctx.limits, ctx.seed);
                    let best = b
                        .lower_bounds
                        .iter()
                        .filter(|lb| lb.certificate.is_some())
                        .max_by(|x, y| x.bound.value_cmp(&y.bound))
                        .ok_or_else(|| Error::SearchExhausted("no certified bound applies".into()))?;
                    r.put("method", best.method);
                    r.put("bound", &best.bound);
                    best.certificate.clone().expect("filtered")
                }
            };
            certificate_out(ctx, &mut r, t, &c)?;
        }
        Cmd::Verify { certificate, extract, .. } => {
            let file = parse_certificate(t.field(), &read_input(Some(certificate))?)?;
            if file.base_dims != t.dims() {
                return Err(Error::VerificationFailed(format!("certificate is for dims {}, tensor has {}", join(&file.base_dims), join(&t.dims()))).into());
            }
            let c = &file.certificate;
            if !c.verify(t)? {
                return Err(Error::VerificationFailed(format!("<{}> on power {} does not replay", c.r, c.power)).into());
            }
            r.put("r", c.r);
            r.put("power", c.power);
            r.put("verified", true);
            if let Some(d) = extract {
                let deg = match &c.kind {
                    CertificateKind::Degeneration(d) => d.clone(),
                    CertificateKind::Restriction(res) => Degeneration::from_restriction(res, c.r, c.power),
                };
                let e = border_le_qi_extract(&deg, t, *d)?;
                r.put("epsilon", t.field().format_elem(&e.point));
                r.put(format!("q{d}_lower"), e.witness.rank);
            }
        }
        Cmd::Power { m, .. } => {
            let p = t.kron_power(*m)?;
            ctx.emit(&mut r, "tensor", &write_tensor(&p))?;
        }
        Cmd::Catalog { .. } | Cmd::Scan { .. } => unreachable!("handled without an input tensor"),
    }
    Ok(r)
}

fn run(cli: Cli, ctx: &mut Option<Ctx>) -> CliResult<String> {
    let field: Option<FieldSpec> = cli.field.as_deref().map(str::parse).transpose()?;
    let limits = Limits { enum_guard: cli.guard, cover_guard: cli.guard, trials: cli.trials, ..Limits::default() };
    let ctx = ctx.insert(Ctx { limits, seed: cli.seed, guard: cli.guard, format: cli.format, out: cli.out.clone(), stdout_taken: Cell::new(false) });
    let input = match &cli.cmd {
        Cmd::Catalog { name, params } => {
            let spec = field.ok_or_else(|| Error::BadParams("catalog needs --field".into()))?;
            let text = match spec {
                FieldSpec::Prime(p) => write_tensor(&catalog::by_name(&Fp::new(p as u64)?, name, params)?),
                FieldSpec::Rationals => write_tensor(&catalog::by_name(&Rationals, name, params)?),
            };
            let mut r = Report::default();
            ctx.emit(&mut r, "tensor", &text)?;
            return Ok(r.render(ctx.format));
        }
        Cmd::Scan { dims, start, count, cap, threads } => {
            let p = match field {
                Some(FieldSpec::Prime(p)) => p,
                _ => return Err(Error::BadParams("scan needs a prime --field".into()).into()),
            };
            let f = Fp::new(p as u64)?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                pool = pool.num_threads(*n);
            }
            let pool = pool.build().map_err(|e| Failure::Io(e.to_string()))?;
            let report = pool.install(|| scan(&f, *dims, *start, *count, *cap, ctx.guard))?;
            let mut r = Report::default();
            ctx.emit(&mut r, "report", &report.to_table())?;
            return Ok(r.render(ctx.format));
        }
        Cmd::Info { input }
        | Cmd::Bounds { input }
        | Cmd::Subrank { input }
        | Cmd::Slicerank { input }
        | Cmd::Maxrank { input, .. }
        | Cmd::Minrank { input, .. }
        | Cmd::Pivots { input, .. }
        | Cmd::Certify { input, .. }
        | Cmd::Power { input, .. } => input.clone(),
        Cmd::Verify { tensor, .. } => tensor.clone(),
    };
    let t = load(input.as_deref(), field)?;
    let report = with_tensor!(&t, t => run_on(ctx, &cli.cmd, t))?;
    Ok(report.render(ctx.format))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut ctx = None;
    match run(cli, &mut ctx) {
        Ok(text) => {
            if ctx.is_some_and(|c| c.stdout_taken.get()) {
                let _ = io::stderr().write_all(text.as_bytes());
            } else {
                let _ = io::stdout().write_all(text.as_bytes());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Io(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(f.code())
        }
    }
}
