//! Command-line dispatch shared by the `trni` binary and the tests.
//!
//! Exit codes: 0 when the property is established (or the command simply
//! succeeded), 1 when it is not established, 2 for usage, parse, policy or
//! precondition errors, 3 when the oracle cannot decide within its limits.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::frontend::{
    parse_policy, parse_program, parse_type, LoadError, ParseError, PolicySource, Program,
};
use crate::lang::{evaluate, EvalError, TermExpr, TypeExpr, DEFAULT_FUEL};
use crate::oracle::laws::check_monad_laws;
use crate::oracle::{
    preconditions, semantic_trni, semantic_trni_per_observer, Domain, EnumBudget, OracleError,
    OracleOptions, Verdict,
};
use crate::report::{
    CounterexampleReport, Diagnostic, LawsReport, ObserverReport, Report, ViewsReport,
};
use crate::typecheck::{check_wf_type, infer_type, TermContext, TypeContext};
use crate::views::{encode, ViewPair};
use crate::Policy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_ESTABLISHED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "trni",
    version,
    about = "Check relaxed noninterference of programs against declassification policies"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Typecheck a program in the public view of a policy.
    Check {
        /// Policy file.
        #[arg(long)]
        policy: PathBuf,
        /// Program file.
        #[arg(long)]
        program: PathBuf,
        /// Required result type; defaults to the inferred type.
        #[arg(long)]
        at: Option<String>,
    },
    /// Print the confidential and public views generated from a policy.
    Views {
        /// Policy file.
        #[arg(long)]
        policy: PathBuf,
    },
    /// Check the property by enumerating related inputs over a bounded domain.
    Oracle {
        /// Policy file.
        #[arg(long)]
        policy: PathBuf,
        /// Program file.
        #[arg(long)]
        program: PathBuf,
        /// Public type the program is checked at.
        #[arg(long)]
        at: String,
        /// `N` for [-N..N] or `LO..HI`.
        #[arg(long, value_parser = parse_domain)]
        domain: Domain,
        /// Observer level of a multi-level policy.
        #[arg(long, conflicts_with = "all_observers")]
        observer: Option<String>,
        /// Check every observer level separately (the default for multi-level policies).
        #[arg(long)]
        all_observers: bool,
        /// Recorded in the report; the sweep itself is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Give up (exit 3) after this many substitution pairs [default: 1000000].
        #[arg(long)]
        max_pairs: Option<usize>,
        /// Reduction steps allowed per run [default: 1000000].
        #[arg(long)]
        fuel: Option<u64>,
    },
    /// Check the monad laws of the level interface on random instances.
    Laws {
        /// Policy file.
        #[arg(long)]
        policy: PathBuf,
        /// Random instances per law.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Typecheck and evaluate a closed program.
    Eval {
        /// Program file.
        #[arg(long)]
        program: PathBuf,
        /// Reduction steps allowed [default: 1000000].
        #[arg(long)]
        fuel: Option<u64>,
    },
}

/// Parses `N` as [-N..N] and `LO..HI` as given.
pub fn parse_domain(s: &str) -> Result<Domain, String> {
    let int = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|e| format!("bad domain bound `{t}`: {e}"))
    };
    match s.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (int(lo)?, int(hi)?);
            if lo > hi {
                return Err(format!("empty domain {lo}..{hi}"));
            }
            Ok(Domain::new(lo, hi))
        }
        None => {
            let n = s
                .trim()
                .parse::<u32>()
                .map_err(|e| format!("bad domain size `{s}`: {e}"))?;
            Ok(Domain::symmetric(n))
        }
    }
}

/// Runs one invocation. `args` includes the program name. Returns the exit
/// code and the rendered output.
pub fn run<I, T>(args: I, color: bool) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            return (code, e.render().to_string());
        }
    };
    let report = execute(&cli.command);
    let out = match cli.format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(color),
    };
    (report.exit_code, out)
}

pub fn execute(command: &Command) -> Report {
    let result = match command {
        Command::Check {
            policy,
            program,
            at,
        } => check(policy, program, at.as_deref()),
        Command::Views { policy } => views(policy),
        Command::Oracle {
            policy,
            program,
            at,
            domain,
            observer,
            all_observers,
            seed,
            max_pairs,
            fuel,
        } => {
            let mut budget = EnumBudget::default();
            if let Some(n) = max_pairs {
                budget.max_pairs = *n;
            }
            if let Some(f) = fuel {
                budget.fuel = *f;
            }
            let mut opts = OracleOptions::new(*domain);
            opts.budget = budget;
            opts.observer = observer.clone();
            oracle(policy, program, at, &opts, *all_observers, *seed)
        }
        Command::Laws {
            policy,
            trials,
            seed,
        } => laws(policy, *trials, *seed),
        Command::Eval { program, fuel } => eval(program, fuel.unwrap_or(DEFAULT_FUEL)),
    };
    result.unwrap_or_else(|r| *r)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Views { .. } => "views",
            Command::Oracle { .. } => "oracle",
            Command::Laws { .. } => "laws",
            Command::Eval { .. } => "eval",
        }
    }
}

/// Early exit carrying an error report.
type Step<T> = Result<T, Box<Report>>;

fn failure(command: &str, code: i32, diagnostics: Vec<Diagnostic>) -> Report {
    let verdict = match code {
        EXIT_UNSUPPORTED => "Unsupported",
        EXIT_NOT_ESTABLISHED => "not established",
        _ => "error",
    };
    let mut r = Report::new(command, verdict, code);
    r.diagnostics = diagnostics;
    r
}

fn read(command: &str, path: &Path) -> Step<String> {
    std::fs::read_to_string(path).map_err(|e| {
        failure(
            command,
            EXIT_ERROR,
            vec![Diagnostic::error(
                "Io",
                format!("cannot read {}: {e}", path.display()),
                None,
            )],
        )
        .into()
    })
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn parse_diag(path: &Path, e: &ParseError) -> Diagnostic {
    let mut d = Diagnostic::error("ParseError", e.message.clone(), None).in_file(&file_name(path));
    if let Some(loc) = d.location.as_mut() {
        loc.line = e.line;
        loc.column = e.column;
    }
    d
}

fn load_policy(command: &str, path: &Path) -> Step<(PolicySource, ViewPair)> {
    let text = read(command, path)?;
    let stem = path
        .file_stem()
        .map_or_else(|| "P".to_string(), |s| s.to_string_lossy().into_owned());
    let source = parse_policy(&text, &stem).map_err(|e| {
        let diags = match e {
            LoadError::Parse(pe) => vec![parse_diag(path, &pe)],
            LoadError::Invalid(ds) => ds
                .into_iter()
                .map(|d| d.in_file(&file_name(path)))
                .collect(),
        };
        failure(command, EXIT_ERROR, diags)
    })?;
    let views = encode(&source.policy).map_err(|e| {
        let span = source.locate(&e);
        failure(
            command,
            EXIT_ERROR,
            vec![Diagnostic::error(e.code(), e.to_string(), span).in_file(&file_name(path))],
        )
    })?;
    Ok((source, views))
}

fn load_program(command: &str, path: &Path) -> Step<Program> {
    let text = read(command, path)?;
    parse_program(&text)
        .map_err(|e| failure(command, EXIT_ERROR, vec![parse_diag(path, &e)]).into())
}

fn load_type(command: &str, text: &str, delta: &TypeContext) -> Step<TypeExpr> {
    let ty = parse_type(text).map_err(|e| {
        failure(
            command,
            EXIT_ERROR,
            vec![Diagnostic::error(
                "ParseError",
                format!("in --at: {}", e.message),
                None,
            )],
        )
    })?;
    check_wf_type(delta, &ty).map_err(|e| {
        failure(
            command,
            EXIT_ERROR,
            vec![Diagnostic::error(
                "IllFormedType",
                format!("--at {ty}: {}", e.message),
                None,
            )],
        )
    })?;
    Ok(ty)
}

fn forall_note(ty: &TypeExpr) -> Option<Diagnostic> {
    fn has_forall(t: &TypeExpr) -> bool {
        match t {
            TypeExpr::Forall(..) => true,
            TypeExpr::Arrow(a, b) | TypeExpr::Prod(a, b) => has_forall(a) || has_forall(b),
            _ => false,
        }
    }
    has_forall(ty).then(|| {
        Diagnostic::note(
            "ForallBank",
            "type abstractions are checked only against four relations (identity on int, all of int, none of int, \
             all of unit); a pass at a forall type does not cover arbitrary relations",
        )
    })
}

fn check(policy_path: &Path, program_path: &Path, at: Option<&str>) -> Step<Report> {
    let (source, views) = load_policy("check", policy_path)?;
    let program = load_program("check", program_path)?;
    Ok(check_report(
        &source.policy,
        &views,
        &program,
        at,
        Some(&file_name(program_path)),
    ))
}

fn in_file(d: Diagnostic, file: Option<&str>) -> Diagnostic {
    match file {
        Some(f) => d.in_file(f),
        None => d,
    }
}

/// The `check` verdict for an already loaded policy and program. `file`
/// names the program in diagnostics.
pub fn check_report(
    policy: &Policy,
    views: &ViewPair,
    program: &Program,
    at: Option<&str>,
    file: Option<&str>,
) -> Report {
    check_inner(policy, views, program, at, file).unwrap_or_else(|r| *r)
}

fn check_inner(
    policy: &Policy,
    views: &ViewPair,
    program: &Program,
    at: Option<&str>,
    file: Option<&str>,
) -> Step<Report> {
    const CMD: &str = "check";
    if !policy.is_multilevel() && program.term.mentions_type_vars() {
        return Err(failure(
            CMD,
            EXIT_ERROR,
            vec![in_file(
                Diagnostic::error(
                    "Precondition",
                    "the program must not mention type variables for a policy without levels",
                    Some(program.spans.span),
                ),
                file,
            )],
        )
        .into());
    }
    let inferred =
        infer_type(&views.public_delta, &views.public_gamma, &program.term).map_err(|e| {
            let span = program.spans.locate(&e.path);
            failure(
                CMD,
                EXIT_NOT_ESTABLISHED,
                vec![in_file(
                    Diagnostic::error("TypeError", e.to_string(), Some(span)),
                    file,
                )],
            )
        })?;
    preconditions(policy, views, &program.term, &inferred).map_err(|e| {
        failure(
            CMD,
            EXIT_ERROR,
            vec![in_file(
                Diagnostic::error("Precondition", e.to_string(), Some(program.spans.span)),
                file,
            )],
        )
    })?;
    let mut report = match at {
        None => Report::new(CMD, format!("TRNI({}, {inferred})", policy.name()), EXIT_OK),
        Some(text) => {
            let want = load_type(CMD, text, &views.public_delta)?;
            if inferred.alpha_eq(&want) {
                Report::new(CMD, format!("TRNI({}, {want})", policy.name()), EXIT_OK)
            } else {
                let diag = Diagnostic::error(
                    "TypeMismatch",
                    format!("the program has type {inferred} in the public view, not {want}"),
                    Some(program.spans.span),
                );
                failure(CMD, EXIT_NOT_ESTABLISHED, vec![in_file(diag, file)])
            }
        }
    };
    report.ty = Some(inferred.to_string());
    Ok(report)
}

fn views(policy_path: &Path) -> Step<Report> {
    let (_, views) = load_policy("views", policy_path)?;
    Ok(views_report(&views))
}

pub fn views_report(views: &ViewPair) -> Report {
    let mut r = Report::new("views", "ok", EXIT_OK);
    r.views = Some(ViewsReport::from(views));
    r
}

fn oracle_error(e: OracleError) -> Report {
    let code = if e.is_unsupported() {
        EXIT_UNSUPPORTED
    } else {
        EXIT_ERROR
    };
    let kind = match &e {
        OracleError::Precondition(_) => "Precondition",
        OracleError::UnknownObserver(_) => "UnknownObserver",
        OracleError::PartialDeclassifier { .. } => "PartialDeclassifier",
        OracleError::Policy(p) => p.code(),
        _ => "Unsupported",
    };
    failure(
        "oracle",
        code,
        vec![Diagnostic::error(kind, e.to_string(), None)],
    )
}

fn apply_verdict(report: &mut Report, verdict: &Verdict) {
    match verdict {
        Verdict::Pass(n) => {
            report.verdict = format!("Pass({n})");
            report.exit_code = EXIT_OK;
            report.pairs_tested = Some(*n);
        }
        Verdict::Fail(c) => {
            report.verdict = "Fail".into();
            report.exit_code = EXIT_NOT_ESTABLISHED;
            report.counterexample = Some(CounterexampleReport::from(&**c));
        }
        Verdict::Unsupported(msg) => {
            report.verdict = "Unsupported".into();
            report.exit_code = EXIT_UNSUPPORTED;
            report
                .diagnostics
                .push(Diagnostic::error("Unsupported", msg.clone(), None));
        }
    }
}

fn verdict_line(v: &Verdict) -> String {
    match v {
        Verdict::Pass(n) => format!("Pass({n})"),
        Verdict::Fail(_) => "Fail".into(),
        Verdict::Unsupported(_) => "Unsupported".into(),
    }
}

fn oracle(
    policy_path: &Path,
    program_path: &Path,
    at: &str,
    opts: &OracleOptions,
    all_observers: bool,
    seed: Option<u64>,
) -> Step<Report> {
    let (source, views) = load_policy("oracle", policy_path)?;
    let program = load_program("oracle", program_path)?;
    Ok(oracle_report(
        &source.policy,
        &views,
        &program.term,
        at,
        opts,
        all_observers,
        seed,
    ))
}

/// The `oracle` verdict for an already loaded policy and program.
pub fn oracle_report(
    policy: &Policy,
    views: &ViewPair,
    program: &TermExpr,
    at: &str,
    opts: &OracleOptions,
    all_observers: bool,
    seed: Option<u64>,
) -> Report {
    oracle_inner(policy, views, program, at, opts, all_observers, seed).unwrap_or_else(|r| *r)
}

fn oracle_inner(
    policy: &Policy,
    views: &ViewPair,
    program: &TermExpr,
    at: &str,
    opts: &OracleOptions,
    all_observers: bool,
    seed: Option<u64>,
) -> Step<Report> {
    const CMD: &str = "oracle";
    let at = load_type(CMD, at, &views.public_delta)?;
    let mut report = Report::new(CMD, "", EXIT_OK);
    report.ty = Some(at.to_string());
    report.seed = seed;
    match policy {
        Policy::Simple(_) if opts.observer.is_some() || all_observers => {
            return Err(failure(
                CMD,
                EXIT_ERROR,
                vec![Diagnostic::error(
                    "Usage",
                    "observers apply only to policies with a lattice",
                    None,
                )],
            )
            .into());
        }
        Policy::MultiLevel(_) if opts.observer.is_none() => {
            let per =
                semantic_trni_per_observer(policy, program, &at, opts).map_err(oracle_error)?;
            let mut total = 0;
            let mut first_bad = None;
            let mut observers = Vec::new();
            for (level, verdict) in &per {
                observers.push(ObserverReport {
                    observer: level.clone(),
                    verdict: verdict_line(verdict),
                    pairs_tested: match verdict {
                        Verdict::Pass(n) => Some(*n),
                        _ => None,
                    },
                });
                match verdict {
                    Verdict::Pass(n) => total += n,
                    other if first_bad.is_none() => first_bad = Some(other.clone()),
                    _ => {}
                }
            }
            apply_verdict(&mut report, &first_bad.unwrap_or(Verdict::Pass(total)));
            report.observers = Some(observers);
        }
        _ => {
            let verdict = semantic_trni(policy, program, &at, opts).map_err(oracle_error)?;
            apply_verdict(&mut report, &verdict);
        }
    }
    report.diagnostics.extend(forall_note(&at));
    Ok(report)
}

fn laws(policy_path: &Path, trials: usize, seed: u64) -> Step<Report> {
    const CMD: &str = "laws";
    let (source, _) = load_policy(CMD, policy_path)?;
    if !source.policy.is_multilevel() {
        return Err(failure(
            CMD,
            EXIT_ERROR,
            vec![Diagnostic::error(
                "Usage",
                "the level interface exists only for policies with a lattice",
                None,
            )],
        )
        .into());
    }
    let result = check_monad_laws(seed, trials).map_err(|e| {
        failure(
            CMD,
            EXIT_UNSUPPORTED,
            vec![Diagnostic::error("Unsupported", e.to_string(), None)],
        )
    })?;
    let (verdict, code) = if result.passed() {
        (format!("Pass({})", result.checked), EXIT_OK)
    } else {
        (
            format!("Fail({})", result.failures.len()),
            EXIT_NOT_ESTABLISHED,
        )
    };
    let mut r = Report::new(CMD, verdict, code);
    r.seed = Some(seed);
    r.laws = Some(LawsReport::from(&result));
    Ok(r)
}

fn eval(program_path: &Path, fuel: u64) -> Step<Report> {
    let program = load_program("eval", program_path)?;
    Ok(eval_report(&program, fuel, Some(&file_name(program_path))))
}

/// Typechecks and evaluates a closed program.
pub fn eval_report(program: &Program, fuel: u64, file: Option<&str>) -> Report {
    const CMD: &str = "eval";
    let ty = match infer_type(&TypeContext::new(), &TermContext::new(), &program.term) {
        Ok(t) => t,
        Err(e) => {
            let span = program.spans.locate(&e.path);
            return failure(
                CMD,
                EXIT_ERROR,
                vec![in_file(
                    Diagnostic::error("TypeError", e.to_string(), Some(span)),
                    file,
                )],
            );
        }
    };
    let mut r = match evaluate(&program.term, fuel) {
        Ok(v) => {
            let mut r = Report::new(CMD, v.to_string(), EXIT_OK);
            r.value = Some(v.to_string());
            r
        }
        Err(e) => {
            let (code, kind) = match e {
                EvalError::DivisionByZero => (EXIT_NOT_ESTABLISHED, "DivisionByZero"),
                EvalError::FuelExhausted(_) => (EXIT_UNSUPPORTED, "FuelExhausted"),
                EvalError::StuckTerm(_) => (EXIT_ERROR, "StuckTerm"),
            };
            failure(
                CMD,
                code,
                vec![in_file(
                    Diagnostic::error(kind, e.to_string(), Some(program.spans.span)),
                    file,
                )],
            )
        }
    };
    r.ty = Some(ty.to_string());
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_arguments() {
        assert_eq!(parse_domain("4").unwrap(), Domain::new(-4, 4));
        assert_eq!(parse_domain("0..3").unwrap(), Domain::new(0, 3));
        assert_eq!(parse_domain("-2..2").unwrap(), Domain::new(-2, 2));
        assert!(parse_domain("3..0").is_err());
        assert!(parse_domain("x").is_err());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        let (code, _) = run(["trni", "oracle", "--policy", "p"], false);
        assert_eq!(code, EXIT_ERROR);
        let (code, out) = run(["trni", "--help"], false);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("check"));
    }

    #[test]
    fn missing_files_are_reported() {
        let (code, out) = run(
            [
                "trni",
                "--format",
                "json",
                "eval",
                "--program",
                "/nonexistent/p.trni",
            ],
            false,
        );
        assert_eq!(code, EXIT_ERROR);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["diagnostics"][0]["code"], "Io");
    }
}
