use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use elastic_tep::checks::self_test;
use elastic_tep::coefficient::Coefficient;
use elastic_tep::harness::{
    example, run_example, source_report, spectrum_report, ExampleDef, ExampleProblem, ExperimentReport, Overrides,
    BIG_MAX_LEVEL, DESK_MAX_LEVEL,
};
use elastic_tep::mesh::{generate_domain_capped, Domain};
use elastic_tep::polybasis::Lame;
use elastic_tep::solvers::{ProblemKind, ProblemSpec, ScanParams, TepMethod};
use elastic_tep::spaces::ElementKind;
use elastic_tep::{Error, Result};

const EXIT_SPEC: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_SELF_TEST: u8 = 4;

#[derive(Parser)]
#[command(name = "elastic-tep", version, about = "Bi-elastic and elastic transmission eigenvalue solver")]
struct Cli {
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bi-elastic source problem with error norms when an exact solution is known.
    SolveSource(Options),
    /// Bi-elastic eigenvalue problem.
    SolveBielastic(Options),
    /// Elastic transmission eigenvalue problem.
    SolveTep(Options),
    /// One of the built-in examples 1 to 9.
    RunExample(Options),
    /// Write a mesh as vertices, triangles and edges.
    DumpMesh(Options),
    /// Quick internal consistency checks.
    SelfTest,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct Options {
    /// unit-square, right-triangle, equilateral-triangle or l-shape.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, conflicts_with = "levels")]
    level: Option<usize>,
    /// Comma list or inclusive range, e.g. `1,2,3` or `1..3`.
    #[arg(long)]
    levels: Option<LevelList>,
    #[arg(long)]
    element: Option<String>,
    /// Morley stabilization constant.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    method: Option<String>,
    /// Number of eigenvalues (or scan branches for the secant path).
    #[arg(long)]
    k: Option<usize>,
    /// Scan interval `lo:hi` for the secant path.
    #[arg(long)]
    #[serde(alias = "tau_range")]
    tau_range: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Allow the finest level.
    #[arg(long)]
    big: bool,
    /// Built-in example supplying the default data.
    #[arg(long)]
    example: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    f1: Option<String>,
    #[arg(long)]
    f2: Option<String>,
    /// Exact solution components, for error norms.
    #[arg(long)]
    u1: Option<String>,
    #[arg(long)]
    u2: Option<String>,
    #[arg(long)]
    rho0: Option<String>,
    #[arg(long)]
    rho1: Option<String>,
    /// Directory for `(h, error)` files of source runs.
    #[arg(long)]
    #[serde(alias = "plot_dir")]
    plot_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum LevelList {
    List(Vec<usize>),
    Text(String),
}

impl std::str::FromStr for LevelList {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let l = LevelList::Text(s.to_string());
        l.resolve().map_err(|e| e.to_string())?;
        Ok(l)
    }
}

impl LevelList {
    fn resolve(&self) -> Result<Vec<usize>> {
        let bad = |s: &str| Error::InvalidSpec(format!("bad level list `{s}`"));
        match self {
            LevelList::List(v) => Ok(v.clone()),
            LevelList::Text(s) => {
                if let Some((a, b)) = s.split_once("..") {
                    let a: usize = a.trim().parse().map_err(|_| bad(s))?;
                    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad(s))?;
                    if a > b {
                        return Err(bad(s));
                    }
                    Ok((a..=b).collect())
                } else {
                    s.split(',').map(|t| t.trim().parse().map_err(|_| bad(s))).collect()
                }
            }
        }
    }
}

macro_rules! merge {
    ($cli:ident, $cfg:ident; $($f:ident),*) => {
        $( if $cli.$f.is_none() { $cli.$f = $cfg.$f.take(); } )*
    };
}

impl Options {
    fn merge(mut self, mut cfg: Options) -> Options {
        if self.level.is_some() || self.levels.is_some() {
            cfg.level = None;
            cfg.levels = None;
        }
        merge!(self, cfg; domain, level, levels, element, alpha, method, k, tau_range, out, format,
            example, lambda, mu, beta, f1, f2, u1, u2, rho0, rho1, plot_dir);
        self.big |= cfg.big;
        self
    }

    fn element(&self) -> Result<Option<ElementKind>> {
        self.element.as_deref().map(str::parse).transpose()
    }

    fn method(&self) -> Result<Option<TepMethod>> {
        self.method.as_deref().map(str::parse).transpose()
    }

    fn tau_range(&self) -> Result<Option<(f64, f64)>> {
        let Some(s) = &self.tau_range else { return Ok(None) };
        let bad = || Error::InvalidSpec(format!("bad tau range `{s}`, expected lo:hi"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b) {
            return Err(bad());
        }
        Ok(Some((a, b)))
    }

    fn levels(&self) -> Result<Option<Vec<usize>>> {
        match (&self.level, &self.levels) {
            (Some(_), Some(_)) => Err(Error::InvalidSpec("give either level or levels".into())),
            (Some(l), None) => Ok(Some(vec![*l])),
            (None, Some(ls)) => {
                let v = ls.resolve()?;
                if v.is_empty() {
                    return Err(Error::InvalidSpec("empty level list".into()));
                }
                Ok(Some(v))
            }
            (None, None) => Ok(None),
        }
    }

    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            element: self.element()?,
            alpha: self.alpha,
            method: self.method()?,
            k: self.k,
            tau_range: self.tau_range()?,
            big: self.big,
        })
    }

    fn cap(&self) -> usize {
        if self.big {
            BIG_MAX_LEVEL
        } else {
            DESK_MAX_LEVEL
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Problem {
    Source,
    Eig,
    Tep,
}

/// Builds a spec from example defaults with individual fields replaced by flags.
fn custom_spec(problem: Problem, o: &Options) -> Result<(ProblemSpec, Vec<usize>, Option<ExampleDef>)> {
    let id = o.example.unwrap_or(match problem {
        Problem::Source => 1,
        Problem::Eig => 3,
        Problem::Tep => 6,
    });
    let def = example(id)?;
    let matches = matches!(
        (&def.problem, problem),
        (ExampleProblem::Source { .. }, Problem::Source)
            | (ExampleProblem::Eig { .. }, Problem::Eig)
            | (ExampleProblem::Tep { .. }, Problem::Tep)
    );
    if !matches {
        return Err(Error::InvalidSpec(format!("example {id} is not of the requested problem type")));
    }
    let parse = |flag: &Option<String>, default: &str| Coefficient::parse(flag.as_deref().unwrap_or(default));
    let custom = o.domain.is_some() || o.lambda.is_some() || o.mu.is_some();
    let domain: Domain = match &o.domain {
        Some(d) => d.parse()?,
        None => def.domain,
    };
    let lame = Lame::new(o.lambda.unwrap_or(def.lame.lambda), o.mu.unwrap_or(def.lame.mu));
    let kind = match &def.problem {
        ExampleProblem::Source { beta, f, exact } => {
            for (name, set) in [("k", o.k.is_some()), ("method", o.method.is_some()), ("tau-range", o.tau_range.is_some())] {
                if set {
                    return Err(Error::InvalidSpec(format!("{name} does not apply to source problems")));
                }
            }
            let data_changed = o.f1.is_some() || o.f2.is_some() || o.beta.is_some() || custom;
            let exact = match (&o.u1, &o.u2) {
                (Some(a), Some(b)) => Some([Coefficient::parse(a)?, Coefficient::parse(b)?]),
                (None, None) if !data_changed => Some([Coefficient::parse(exact[0])?, Coefficient::parse(exact[1])?]),
                (None, None) => None,
                _ => return Err(Error::InvalidSpec("give both u1 and u2".into())),
            };
            ProblemKind::Source { beta: parse(&o.beta, beta)?, f: [parse(&o.f1, f[0])?, parse(&o.f2, f[1])?], exact }
        }
        ExampleProblem::Eig { beta } => {
            if o.method.is_some() || o.tau_range.is_some() {
                return Err(Error::InvalidSpec("method and tau-range apply only to transmission problems".into()));
            }
            ProblemKind::BiElasticEig { beta: parse(&o.beta, beta)?, k: o.k.unwrap_or(6) }
        }
        ExampleProblem::Tep { rho0, rho1, method } => ProblemKind::Tep {
            rho0: parse(&o.rho0, rho0)?,
            rho1: parse(&o.rho1, rho1)?,
            k: o.k.unwrap_or(10),
            method: o.method()?.unwrap_or(*method),
        },
    };
    let levels = o.levels()?.unwrap_or_else(|| def.default_levels());
    let top = *levels.iter().max().expect("nonempty");
    let mut spec = ProblemSpec::new(domain, top, lame, kind)
        .with_element(o.element()?.unwrap_or(ElementKind::B3))
        .with_alpha(o.alpha);
    spec.level_cap = o.cap();
    spec.validate()?;
    let untouched = !custom && o.beta.is_none() && o.rho0.is_none() && o.rho1.is_none() && o.f1.is_none() && o.f2.is_none();
    Ok((spec, levels, untouched.then_some(def)))
}

fn emit(report: &ExperimentReport, o: &Options) -> Result<()> {
    let sink: Box<dyn Write> = match &o.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    match o.format.unwrap_or_default() {
        Format::Csv => report.write_csv(sink)?,
        Format::Json => {
            let mut sink = sink;
            report.write_json(&mut sink)?;
            writeln!(sink)?;
        }
    }
    if let Some(dir) = &o.plot_dir {
        let stem = report.metadata.example.map(|e| format!("example{e}")).unwrap_or_else(|| "source".into());
        report.write_plot_data(dir, &stem)?;
    }
    Ok(())
}

fn solve(problem: Problem, o: &Options) -> Result<()> {
    let (spec, levels, def) = custom_spec(problem, o)?;
    let id = def.as_ref().map(|d| d.id);
    let report = match problem {
        Problem::Source => source_report(&spec, &levels, id)?,
        _ => {
            let scan = ScanParams { range: o.tau_range()?, ..ScanParams::default() };
            let reference = def.map(|d| d.reference).unwrap_or_default();
            spectrum_report(&spec, &levels, &scan, id, reference)?
        }
    };
    emit(&report, o)
}

fn run(command: Command, cfg: Options) -> std::result::Result<(), ExitCode> {
    let fail = |e: Error| {
        eprintln!("error: {e}");
        ExitCode::from(if e.is_spec_error() { EXIT_SPEC } else { EXIT_SOLVER })
    };
    match command {
        Command::SolveSource(o) => solve(Problem::Source, &o.merge(cfg)).map_err(fail),
        Command::SolveBielastic(o) => solve(Problem::Eig, &o.merge(cfg)).map_err(fail),
        Command::SolveTep(o) => solve(Problem::Tep, &o.merge(cfg)).map_err(fail),
        Command::RunExample(o) => {
            let o = o.merge(cfg);
            let go = || -> Result<()> {
                let id = o.example.ok_or_else(|| Error::InvalidSpec("run-example needs --example".into()))?;
                let levels = o.levels()?;
                let report = run_example(id, levels.as_deref(), &o.overrides()?)?;
                emit(&report, &o)
            };
            go().map_err(fail)
        }
        Command::DumpMesh(o) => {
            let o = o.merge(cfg);
            let go = || -> Result<()> {
                let domain: Domain = o.domain.as_deref().unwrap_or("unit-square").parse()?;
                let level = match o.levels()? {
                    None => 1,
                    Some(v) if v.len() == 1 => v[0],
                    Some(_) => return Err(Error::InvalidSpec("dump-mesh takes a single level".into())),
                };
                let mesh = generate_domain_capped(domain, level, o.cap())?;
                match &o.out {
                    Some(p) => mesh.write_dump(BufWriter::new(File::create(p)?))?,
                    None => mesh.write_dump(io::stdout().lock())?,
                }
                Ok(())
            };
            go().map_err(fail)
        }
        Command::SelfTest => {
            let checks = self_test().map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_SELF_TEST)
            })?;
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(ExitCode::from(EXIT_SELF_TEST))
            }
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<Options> {
    let Some(p) = path else { return Ok(Options::default()) };
    let text = std::fs::read_to_string(p)
        .map_err(|e| Error::InvalidSpec(format!("cannot read config {}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidSpec(format!("bad config {}: {e}", p.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    match run(cli.command, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
