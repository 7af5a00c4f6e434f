//! The `ghdyn` command-line driver.
//!
//! Exit codes: 0 success, 2 no recurrence or coverage gap, 3 certification
//! failure, 64 usage error, 65 malformed or inconsistent data.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ghdyn::approx::{certify, construct, ApproximationConfig};
use ghdyn::certificate::{self, Certificate};
use ghdyn::dynamics::{shuffled_order, FiniteDynSystem, SystemDescriptor, SystemOracle};
use ghdyn::entropy::{finite_system_entropy_with_budget, sampled_system_entropy, SeparationReport, DEFAULT_ENTROPY_NODES};
use ghdyn::gh::{gh0_bounds, gh0_exact_small_with_budget, gh_bounds, gh_exact_small_with_budget, GHResult, DEFAULT_GH_BUDGET};
use ghdyn::isometry::PointMap;
use ghdyn::measures::{
    invariance_defect, mixture_measure, periodic_image_violations, periodic_orbit_measure, semiconjugacy_defect,
    support_covers,
};
use ghdyn::metric::Metric;
use ghdyn::{json, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RECURRENCE: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::BudgetExceeded { .. } => EXIT_USAGE,
        Error::Data(_) => EXIT_DATA,
        Error::NoRecurrence { .. } | Error::CoverageGap { .. } => EXIT_RECURRENCE,
        Error::CertificationFailure { .. } => EXIT_CERTIFICATION,
    }
}

#[derive(Parser, Debug)]
#[command(name = "ghdyn", version, about = "Finite periodic approximation of homeomorphisms in the C0 Gromov-Hausdorff sense")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a finite periodic approximation and its certificate.
    Approximate(ApproximateArgs),
    /// Separated-set counts and entropy slopes.
    Entropy(EntropyArgs),
    /// C0 Gromov-Hausdorff distance between two finite systems.
    Gh0(Gh0Args),
    /// Periodic-orbit measures, their mixture, and a relabeling semi-conjugacy.
    Measure(MeasureArgs),
    /// Re-measure every inequality of a certificate.
    Verify(VerifyArgs),
    /// List the built-in systems.
    DemoList,
}

#[derive(Args, Debug)]
struct ApproximateArgs {
    /// rotation, rotation:<theta>, golden, cat, cat-fixed-seed or grid-cat:<N>
    #[arg(long)]
    system: String,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 2000)]
    sample_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_orbit_search: u64,
    #[arg(long, default_value_t = 0.9)]
    beta_safety: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha_fraction: f64,
    /// Certificate path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    /// Built-in source system.
    #[arg(long)]
    system: Option<String>,
    /// Finite system document used as the source.
    #[arg(long, conflicts_with = "system")]
    file: Option<PathBuf>,
    /// Certificate whose finite system is reported next to the source.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Comma-separated separation scales.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    n_max: usize,
    /// Slope window `a,b` for the source; finite systems default to their saturated tail.
    #[arg(long)]
    window: Option<String>,
    /// Orbit count for sampled sources.
    #[arg(long, default_value_t = 400)]
    sample_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Branch-and-bound nodes per row before falling back to a lower bound.
    #[arg(long, default_value_t = DEFAULT_ENTROPY_NODES)]
    budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Gh0Args {
    first: PathBuf,
    second: PathBuf,
    /// Largest number of map pairs searched exhaustively.
    #[arg(long, default_value_t = DEFAULT_GH_BUDGET)]
    budget: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[arg(long)]
    system: Option<String>,
    #[arg(long, conflicts_with = "system")]
    file: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["system", "file"])]
    certificate: Option<PathBuf>,
    /// Coverage radius.
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// Seed of the relabeling used for the semi-conjugacy check.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    certificate: PathBuf,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit(&mut self, path: Option<&Path>, text: &str) -> Result<(), Error> {
        match path {
            Some(p) => std::fs::write(p, text).map_err(|e| Error::Data(format!("cannot write {}: {e}", p.display()))),
            None => self
                .out
                .write_all(text.as_bytes())
                .map_err(|e| Error::Data(format!("cannot write output: {e}"))),
        }
    }

    fn note(&mut self, text: &str) {
        let _ = self.err.write_all(text.as_bytes());
    }
}

/// Parses `args` (including the program name) and runs one command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let mut io = Io { out, err };
    let result = match cli.command {
        Command::Approximate(a) => cmd_approximate(a, &mut io),
        Command::Entropy(a) => cmd_entropy(a, &mut io),
        Command::Gh0(a) => cmd_gh0(a, &mut io),
        Command::Measure(a) => cmd_measure(a, &mut io),
        Command::Verify(a) => cmd_verify(a, &mut io),
        Command::DemoList => cmd_demo_list(&mut io),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            io.note(&format!("ghdyn: {e}\n"));
            exit_code(&e)
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
}

fn read_certificate(path: &Path) -> Result<Certificate, Error> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Error::Data(format!("{}: malformed certificate: {e}", path.display())))
}

fn read_system(path: &Path) -> Result<FiniteDynSystem, Error> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Error::Data(format!("{}: malformed finite system: {e}", path.display())))
}

fn cmd_approximate(a: ApproximateArgs, io: &mut Io<'_>) -> Result<i32, Error> {
    let descriptor = SystemDescriptor::parse_short(&a.system)?;
    let system = descriptor.build()?;
    let cfg = ApproximationConfig {
        delta: a.delta,
        sample_size: a.sample_size,
        seed: a.seed,
        max_orbit_search: a.max_orbit_search,
        beta_safety: a.beta_safety,
        alpha_fraction: a.alpha_fraction,
        anchor_seed: None,
    };
    cfg.validate()?;
    let sample = system.sample(cfg.sample_size, cfg.seed);
    let result = construct(system.as_ref(), &cfg, sample)?;
    let cert = &result.certificate;
    io.emit(a.out.as_deref(), &json::to_string_pretty(cert)?)?;

    let mut summary = String::new();
    let lengths: Vec<usize> = cert.blocks.iter().map(|b| b.length + 1).collect();
    let _ = writeln!(
        summary,
        "{}: delta {} beta {:.6e} alpha {:.6e}, {} net points, |Y| = {}, cycle lengths {}..{}",
        system.name(),
        cert.delta,
        cert.beta,
        cert.alpha,
        cert.net.len(),
        cert.y_len(),
        lengths.iter().min().unwrap_or(&0),
        lengths.iter().max().unwrap_or(&0)
    );
    for c in &cert.checks {
        let _ = writeln!(summary, "{c}");
    }
    io.note(&summary);
    certify(cert)?;
    Ok(EXIT_OK)
}

fn parse_window(s: &str) -> Result<RangeInclusive<usize>, Error> {
    let bad = || Error::Usage(format!("window must look like `2,8`, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a >= b {
        return Err(bad());
    }
    Ok(a..=b)
}

enum Source {
    Finite(String, FiniteDynSystem),
    Sampled(Box<dyn SystemOracle>),
}

fn entropy_table(reports: &[(String, SeparationReport)]) -> String {
    let mut t = String::from("system\tdelta\tn\tcount\texactness\n");
    for (name, r) in reports {
        for row in &r.rows {
            let exactness = match row.exactness {
                ghdyn::entropy::Exactness::Exact => "exact",
                ghdyn::entropy::Exactness::GreedyLowerBound => "greedy_lower_bound",
            };
            let _ = writeln!(t, "{name}\t{:.16e}\t{}\t{}\t{exactness}", r.delta, row.n, row.count);
        }
    }
    t.push('\n');
    t.push_str("system\tdelta\twindow_start\twindow_end\tslope\tall_exact\tresolution\tsaturates_at\n");
    for (name, r) in reports {
        let sat = r.saturates_at.map_or_else(|| "-".to_string(), |l| l.to_string());
        let _ = writeln!(
            t,
            "{name}\t{:.16e}\t{}\t{}\t{:.16e}\t{}\t{}\t{sat}",
            r.delta,
            r.window[0],
            r.window[1],
            r.slope,
            r.all_exact(),
            r.resolution
        );
    }
    t
}

fn cmd_entropy(a: EntropyArgs, io: &mut Io<'_>) -> Result<i32, Error> {
    if a.deltas.is_empty() {
        return Err(Error::Usage("--deltas needs at least one value".into()));
    }
    if let Some(d) = a.deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::Usage(format!("separation scales must be positive, got {d}")));
    }
    if a.n_max < 2 {
        return Err(Error::Usage("--n-max must be at least 2".into()));
    }
    let window = a.window.as_deref().map(parse_window).transpose()?;
    if let Some(w) = &window {
        if *w.end() > a.n_max {
            return Err(Error::Usage(format!("window {w:?} reaches past --n-max {}", a.n_max)));
        }
    }
    let cert = a.certificate.as_deref().map(read_certificate).transpose()?;
    let source = match (&a.file, &a.system, &cert) {
        (Some(path), _, _) => Some(Source::Finite("file".into(), read_system(path)?)),
        (None, Some(s), _) => Some(resolve_source(&SystemDescriptor::parse_short(s)?)?),
        (None, None, Some(c)) => Some(resolve_source(&c.system)?),
        (None, None, None) => None,
    };
    let approximant = cert.as_ref().map(Certificate::finite_system).transpose()?;
    if source.is_none() && approximant.is_none() {
        return Err(Error::Usage("entropy needs --system, --file or --certificate".into()));
    }

    let mut reports = Vec::new();
    for &delta in &a.deltas {
        match &source {
            Some(Source::Finite(name, fd)) => {
                let r = finite_system_entropy_with_budget(fd, delta, a.n_max, window.clone(), a.budget)?;
                reports.push((name.clone(), r));
            }
            Some(Source::Sampled(system)) => {
                let points = system.sample(a.sample_size, a.seed);
                let w = window.clone().unwrap_or(1..=a.n_max);
                let r = sampled_system_entropy(system.as_ref(), &points, delta, a.n_max, w, a.budget)?;
                reports.push((system.name(), r));
            }
            None => {}
        }
        if let Some(fd) = &approximant {
            let r = finite_system_entropy_with_budget(fd, delta, a.n_max, None, a.budget)?;
            reports.push(("approximant".to_string(), r));
        }
    }
    io.emit(a.out.as_deref(), &entropy_table(&reports))?;
    Ok(EXIT_OK)
}

fn resolve_source(d: &SystemDescriptor) -> Result<Source, Error> {
    let system = d.build()?;
    Ok(match d.finite_system() {
        Some(fd) => Source::Finite(system.name(), fd?),
        None => Source::Sampled(system),
    })
}

#[derive(Serialize)]
struct Gh0Report {
    first_points: usize,
    second_points: usize,
    pair_count: String,
    budget: String,
    gh: GHResult,
    gh0: GHResult,
}

fn cmd_gh0(a: Gh0Args, io: &mut Io<'_>) -> Result<i32, Error> {
    let f = read_system(&a.first)?;
    let g = read_system(&a.second)?;
    let within = |e: &Error| matches!(e, Error::BudgetExceeded { .. });
    let gh = match gh_exact_small_with_budget(f.space(), g.space(), a.budget) {
        Err(e) if within(&e) => gh_bounds(f.space(), g.space())?,
        r => r?,
    };
    let gh0 = match gh0_exact_small_with_budget(&f, &g, a.budget) {
        Err(e) if within(&e) => gh0_bounds(&f, &g)?,
        r => r?,
    };
    let report = Gh0Report {
        first_points: f.n(),
        second_points: g.n(),
        pair_count: ghdyn::gh::pair_count(f.n(), g.n()).to_string(),
        budget: a.budget.to_string(),
        gh,
        gh0,
    };
    io.emit(a.out.as_deref(), &json::to_string_pretty(&report)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct MeasureReport {
    points: usize,
    cycles: usize,
    cycle_lengths: Vec<[usize; 2]>,
    mixture: MixtureReport,
    semiconjugacy: SemiconjugacyReport,
}

#[derive(Serialize)]
struct MixtureReport {
    parts: usize,
    atoms: usize,
    total_mass: f64,
    invariance_defect: f64,
    eps: f64,
    covered: bool,
    worst_gap: f64,
}

#[derive(Serialize)]
struct SemiconjugacyReport {
    relabel_seed: u64,
    c0: f64,
    distortion: f64,
    surjectivity_defect: f64,
    periodic_image_violations: usize,
}

fn cmd_measure(a: MeasureArgs, io: &mut Io<'_>) -> Result<i32, Error> {
    let fd = match (&a.system, &a.file, &a.certificate) {
        (Some(s), _, _) => SystemDescriptor::parse_short(s)?
            .finite_system()
            .ok_or_else(|| Error::Usage(format!("{s} is not a finite system")))??,
        (_, Some(p), _) => read_system(p)?,
        (_, _, Some(p)) => read_certificate(p)?.finite_system()?,
        _ => return Err(Error::Usage("measure needs --system, --file or --certificate".into())),
    };
    let cycles = fd.cycles();
    let parts = cycles
        .iter()
        .map(|c| periodic_orbit_measure(&fd, c[0]))
        .collect::<Result<Vec<_>, _>>()?;
    let mu = mixture_measure(&parts)?;
    let all: Vec<usize> = (0..fd.n()).collect();
    let space = fd.space();
    let coverage = support_covers(&mu, &all, a.eps, |&x, &y| space.dist(x, y))?;

    let order = shuffled_order(fd.n(), a.seed);
    let copy = fd.relabeled(&order)?;
    let mut h = vec![0; fd.n()];
    for (k, &o) in order.iter().enumerate() {
        h[o] = k;
    }
    let map = PointMap::new(fd.space(), copy.space(), h.clone())?;
    let semi = semiconjugacy_defect(&map, fd.perm(), copy.perm())?;

    let mut lengths = std::collections::BTreeMap::new();
    for c in &cycles {
        *lengths.entry(c.len()).or_insert(0usize) += 1;
    }
    let report = MeasureReport {
        points: fd.n(),
        cycles: cycles.len(),
        cycle_lengths: lengths.into_iter().map(|(l, k)| [l, k]).collect(),
        mixture: MixtureReport {
            parts: parts.len(),
            atoms: mu.len(),
            total_mass: mu.total_mass(),
            invariance_defect: invariance_defect(&mu, |&x| fd.apply(x)),
            eps: a.eps,
            covered: coverage.covered,
            worst_gap: coverage.worst_gap,
        },
        semiconjugacy: SemiconjugacyReport {
            relabel_seed: a.seed,
            c0: semi.c0,
            distortion: semi.iso.distortion,
            surjectivity_defect: semi.iso.surjectivity_defect,
            periodic_image_violations: periodic_image_violations(&h, &fd, &copy).len(),
        },
    };
    io.emit(a.out.as_deref(), &json::to_string_pretty(&report)?)?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs, io: &mut Io<'_>) -> Result<i32, Error> {
    let cert = read_certificate(&a.certificate)?;
    let checks = certificate::verify(&cert)?;
    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(text, "{c}");
    }
    io.emit(None, &text)?;
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(c.to_error()),
        None => Ok(EXIT_OK),
    }
}

fn cmd_demo_list(io: &mut Io<'_>) -> Result<i32, Error> {
    let text = "\
golden            circle rotation by (sqrt(5) - 1) / 2
rotation:<theta>  circle rotation by theta
cat               cat map (x, y) -> (2x + y, x + y) on the torus
cat-fixed-seed    cat map with every orbit search started at the fixed point (0, 0)
grid-cat:<N>      cat map restricted to the N x N grid, an exact permutation

examples:
  ghdyn approximate --system golden --delta 0.1 --out cert.json
  ghdyn verify cert.json
  ghdyn entropy --system grid-cat:32 --deltas 0.1 --window 2,8 --certificate cert.json
  ghdyn measure --system grid-cat:8
  ghdyn gh0 a.json b.json --budget 10000000
";
    io.emit(None, text)?;
    Ok(EXIT_OK)
}
