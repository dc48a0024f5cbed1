use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use refform_core::explore::check_circuit;
use refform_core::influence::{restriction_map, ScheduleSpace};
use refform_core::oracle::{semantic_influence, Logic};
use refform_core::order::check_time_preservation;
use refform_core::verify::{
    oracle_spot_check, verify_lemma, verify_theorem, FailureDetail, Report, VerifyOptions,
    DEFAULT_MAX_FFS, DEFAULT_ORACLE_SAMPLES,
};
use refform_core::{dsl, schedule_from_clocks, Circuit, Error, RefSet, ReferringForm, Schedule};
use serde_json::{json, Value};

mod format;
mod render;
mod spec;

const EXIT_INPUT: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_NOT_PRESERVING: u8 = 3;
const EXIT_ORACLE_MISMATCH: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Referring-form analysis of sequential circuits.
#[derive(Parser)]
#[command(name = "refform", version)]
struct Cli {
    /// Enumeration budget; overrides REFFORM_BUDGET. Accepts `N` or `2^N`.
    #[arg(long, global = true, value_name = "N")]
    budget: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the referring form of a circuit under a schedule.
    Analyze {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value_t = TableFormat::Table)]
        format: TableFormat,
    },
    /// Decide time preservation.
    Check {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
    /// Exhaustively check small multiple clock domain circuits.
    Verify {
        /// Number of flip-flops.
        #[arg(long)]
        ffs: usize,
        #[arg(long)]
        horizon: usize,
        /// Check time preservation (the default).
        #[arg(long)]
        theorem: bool,
        /// Check latest-reference monotonicity.
        #[arg(long)]
        lemma: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_FFS)]
        max_ffs: usize,
        /// Random (circuit, schedule) pairs cross-checked against the oracle.
        #[arg(long, default_value_t = DEFAULT_ORACLE_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
    /// Compare the referring form with perturbation-based influence.
    OracleDiff {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
        #[arg(long, value_enum, default_value_t = LogicArg::Tupling)]
        logic: LogicArg,
    },
    /// Draw the time-unrolled circuit under one schedule.
    Render {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        horizon: usize,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long, value_enum, default_value_t = RenderFormat::Ascii)]
        format: RenderFormat,
    },
}

#[derive(Args)]
struct Target {
    file: PathBuf,
    #[arg(long, default_value_t = 8)]
    horizon: usize,
    /// Explicit control, e.g. "F=10001000;sel=00110011".
    #[arg(long, conflicts_with = "all_schedules")]
    schedule: Option<String>,
    /// Range over every admissible schedule.
    #[arg(long)]
    all_schedules: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderFormat {
    Ascii,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogicArg {
    Tupling,
    Xor,
}

struct Budgets {
    schedules: u128,
    oracle: u128,
}

fn parse_budget(text: &str) -> Result<u128, Failure> {
    let bad = || Failure::input(format!("invalid budget `{text}`"));
    match text.trim().split_once('^') {
        Some(("2", exp)) => {
            let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
            1u128.checked_shl(exp).ok_or_else(bad)
        }
        Some(_) => Err(bad()),
        None => text.trim().parse().map_err(|_| bad()),
    }
}

fn budgets(flag: Option<&str>) -> Result<Budgets, Failure> {
    let env = std::env::var("REFFORM_BUDGET").ok();
    match flag.or(env.as_deref()) {
        Some(text) => {
            let b = parse_budget(text)?;
            Ok(Budgets {
                schedules: b,
                oracle: b,
            })
        }
        None => Ok(Budgets {
            schedules: refform_core::DEFAULT_SCHEDULE_BUDGET,
            oracle: refform_core::DEFAULT_ORACLE_BUDGET,
        }),
    }
}

fn load(path: &Path) -> Result<Circuit, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    dsl::parse(&text).map_err(|e| Failure::input(format!("{}:{}", path.display(), e.render(&text))))
}

fn single_schedule(
    circuit: &Circuit,
    horizon: usize,
    spec: Option<&str>,
) -> Result<Schedule, Failure> {
    match spec {
        Some(spec) => spec::parse_schedule(circuit, horizon, spec),
        None => schedule_from_clocks(circuit, horizon, &Default::default()).map_err(|e| match e {
            Error::UnresolvedFreeClock(name) => Failure::input(format!(
                "clock `{name}` is free; pass --schedule or --all-schedules"
            )),
            e => e.into(),
        }),
    }
}

/// Distinct forms over the whole schedule space, each with the first
/// schedule that produces it.
fn enumerate_forms(
    circuit: &Circuit,
    horizon: usize,
    budget: u128,
) -> Result<Vec<(Schedule, ReferringForm)>, Failure> {
    let space = ScheduleSpace::new(circuit, horizon)?;
    if space.cardinality() > budget {
        return Err(Error::BudgetExceeded {
            required: space.cardinality(),
            budget,
        }
        .into());
    }
    let mut seen: BTreeMap<ReferringForm, Schedule> = BTreeMap::new();
    for schedule in space.iter() {
        let form = restriction_map(circuit, &schedule)?;
        seen.entry(form).or_insert(schedule);
    }
    let mut forms: Vec<_> = seen.into_iter().map(|(f, s)| (s, f)).collect();
    forms.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(forms)
}

fn target_forms(
    circuit: &Circuit,
    target: &Target,
    budget: u128,
) -> Result<Vec<(Schedule, ReferringForm)>, Failure> {
    if target.all_schedules {
        return enumerate_forms(circuit, target.horizon, budget);
    }
    let schedule = single_schedule(circuit, target.horizon, target.schedule.as_deref())?;
    let form = restriction_map(circuit, &schedule)?;
    Ok(vec![(schedule, form)])
}

fn print_json(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json values serialize")
    );
}

fn analyze(target: &Target, format: TableFormat, budgets: &Budgets) -> Result<u8, Failure> {
    let circuit = load(&target.file)?;
    let forms = target_forms(&circuit, target, budgets.schedules)?;
    match format {
        TableFormat::Json if target.all_schedules => {
            let forms: Vec<Value> = forms
                .iter()
                .map(|(s, f)| format::scheduled_form_json(&circuit, s, f))
                .collect();
            print_json(&json!({ "forms": forms }));
        }
        TableFormat::Json => print_json(&format::form_json(&circuit, &forms[0].1)),
        TableFormat::Table if target.all_schedules => {
            for (k, (s, f)) in forms.iter().enumerate() {
                if k > 0 {
                    println!();
                }
                println!("form {k}: {}", spec::format_schedule(&circuit, s));
                print!("{}", format::form_table(&circuit, f));
            }
        }
        TableFormat::Table => print!("{}", format::form_table(&circuit, &forms[0].1)),
    }
    Ok(0)
}

fn check(target: &Target, format: TextFormat, budgets: &Budgets) -> Result<u8, Failure> {
    let circuit = load(&target.file)?;
    let (verdict, forms, image) = if target.all_schedules {
        let v = check_circuit(&circuit, target.horizon, budgets.schedules)?;
        (v.verdict, v.forms, v.image_size)
    } else {
        let forms = target_forms(&circuit, target, budgets.schedules)?;
        let only: Vec<ReferringForm> = forms.iter().map(|(_, f)| f.clone()).collect();
        let image = refform_core::order::unified_image(&only)?.len();
        (check_time_preservation(&only)?, forms, image)
    };
    match format {
        TextFormat::Json => print_json(&format::verdict_json(&circuit, &verdict, &forms)),
        TextFormat::Text => print!(
            "{}",
            format::verdict_text(&circuit, &verdict, &forms, image)
        ),
    }
    Ok(if verdict.preserving {
        0
    } else {
        EXIT_NOT_PRESERVING
    })
}

fn saturating_u64(n: u128) -> u64 {
    u64::try_from(n).unwrap_or(u64::MAX)
}

fn report_json(report: &Report) -> Value {
    let failures: Vec<Value> = report
        .failures
        .iter()
        .map(|f| {
            let c = &f.circuit;
            let mut entry = json!({
                "circuit": f.circuit_index,
                "source": dsl::emit(c),
            });
            match &f.detail {
                FailureDetail::NotPreserving { witness, forms } => {
                    let edges: Vec<Value> = witness
                        .iter()
                        .map(|e| {
                            json!({
                                "from": format::refset_json(c, &e.from),
                                "to": format::refset_json(c, &e.to),
                                "form": e.form,
                                "t1": e.t1,
                                "t2": e.t2,
                            })
                        })
                        .collect();
                    let forms: Vec<Value> = forms
                        .iter()
                        .map(|form| format::form_json(c, form))
                        .collect();
                    entry["witness"] = Value::from(edges);
                    entry["forms"] = Value::from(forms);
                }
                FailureDetail::Lemma {
                    schedule_index,
                    form,
                    violation,
                } => {
                    entry["schedule"] = json!(saturating_u64(*schedule_index));
                    entry["form"] = format::form_json(c, form);
                    entry["t1"] = json!(violation.t1);
                    entry["t2"] = json!(violation.t2);
                }
            }
            entry
        })
        .collect();
    json!({
        "property": match report.property {
            refform_core::verify::Property::Theorem => "theorem",
            refform_core::verify::Property::Lemma => "lemma",
        },
        "ffs": report.ff_count,
        "horizon": report.horizon,
        "circuits": report.circuits,
        "schedules_per_circuit": saturating_u64(report.schedules_per_circuit),
        "checked": saturating_u64(report.checked),
        "self_loop_circuits": report.self_loop_circuits,
        "failures": failures,
    })
}

#[allow(clippy::too_many_arguments)]
fn verify(
    ffs: usize,
    horizon: usize,
    theorem: bool,
    lemma: bool,
    max_ffs: usize,
    samples: usize,
    seed: u64,
    format: TextFormat,
    budgets: &Budgets,
) -> Result<u8, Failure> {
    let options = VerifyOptions {
        max_ffs,
        budget: budgets.schedules,
    };
    let mut reports = Vec::new();
    if theorem || !lemma {
        reports.push(verify_theorem(ffs, horizon, &options)?);
    }
    if lemma {
        reports.push(verify_lemma(ffs, horizon, &options)?);
    }
    let spot = if samples > 0 {
        let oracle = VerifyOptions {
            max_ffs,
            budget: budgets.oracle,
        };
        Some(oracle_spot_check(ffs, horizon, samples, seed, &oracle)?)
    } else {
        None
    };
    let failed = reports.iter().any(|r| !r.failures.is_empty());
    let mismatched = spot.as_ref().is_some_and(|s| !s.mismatches.is_empty());
    match format {
        TextFormat::Text => {
            for r in &reports {
                print!("{r}");
            }
            if let Some(s) = &spot {
                println!(
                    "oracle spot-check: {} pairs (seed {seed}), {} mismatches",
                    s.pairs.len(),
                    s.mismatches.len()
                );
                for m in &s.mismatches {
                    println!(
                        "  circuit #{} schedule #{}",
                        m.circuit_index, m.schedule_index
                    );
                }
            }
        }
        TextFormat::Json => {
            let mut value = if reports.len() == 1 {
                report_json(&reports[0])
            } else {
                json!({ "reports": reports.iter().map(report_json).collect::<Vec<_>>() })
            };
            if let Some(s) = &spot {
                let mismatches: Vec<Value> = s
                    .mismatches
                    .iter()
                    .map(|m| json!({ "circuit": m.circuit_index, "schedule": saturating_u64(m.schedule_index) }))
                    .collect();
                value["spot_check"] =
                    json!({ "samples": s.pairs.len(), "seed": seed, "mismatches": mismatches });
            }
            print_json(&value);
        }
    }
    Ok(if failed {
        EXIT_NOT_PRESERVING
    } else if mismatched {
        EXIT_ORACLE_MISMATCH
    } else {
        0
    })
}

fn set_difference(circuit: &Circuit, a: &RefSet, b: &RefSet) -> String {
    let only: RefSet = a.iter().filter(|o| !b.contains(o)).copied().collect();
    format::refset(circuit, &only)
}

fn oracle_diff(
    target: &Target,
    alphabet: usize,
    logic: LogicArg,
    budgets: &Budgets,
) -> Result<u8, Failure> {
    let circuit = load(&target.file)?;
    let logic = match logic {
        LogicArg::Tupling => Logic::Tupling,
        LogicArg::Xor => Logic::Xor,
    };
    let forms = target_forms(&circuit, target, budgets.schedules)?;
    let mut differences = 0usize;
    for (schedule, syntactic) in &forms {
        let semantic = semantic_influence(&circuit, schedule, alphabet, logic, budgets.oracle)?;
        let mut lines = Vec::new();
        for t in 0..syntactic.horizon() {
            let (sem, syn) = (semantic.past(t), syntactic.past(t));
            if sem != syn {
                lines.push(format!(
                    "  t={t} past: semantic only {}, analysis only {}",
                    set_difference(&circuit, sem, syn),
                    set_difference(&circuit, syn, sem)
                ));
            }
            let (sem, syn) = (semantic.current(t), syntactic.current(t));
            if sem != syn {
                let names = |s: &std::collections::BTreeSet<usize>,
                             o: &std::collections::BTreeSet<usize>| {
                    let v: Vec<&str> = s
                        .difference(o)
                        .map(|&p| circuit.data_ports[p].as_str())
                        .collect();
                    format!("{{{}}}", v.join(", "))
                };
                lines.push(format!(
                    "  t={t} current: semantic only {}, analysis only {}",
                    names(sem, syn),
                    names(syn, sem)
                ));
            }
        }
        if !lines.is_empty() {
            differences += lines.len();
            println!("schedule {}", spec::format_schedule(&circuit, schedule));
            for line in lines {
                println!("{line}");
            }
        }
    }
    if differences == 0 {
        println!("no differences");
        Ok(0)
    } else {
        Ok(EXIT_ORACLE_MISMATCH)
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let budgets = budgets(cli.budget.as_deref())?;
    match cli.command {
        Command::Analyze { target, format } => analyze(&target, format, &budgets),
        Command::Check { target, format } => check(&target, format, &budgets),
        Command::Verify {
            ffs,
            horizon,
            theorem,
            lemma,
            max_ffs,
            samples,
            seed,
            format,
        } => verify(
            ffs, horizon, theorem, lemma, max_ffs, samples, seed, format, &budgets,
        ),
        Command::OracleDiff {
            target,
            alphabet,
            logic,
        } => oracle_diff(&target, alphabet, logic, &budgets),
        Command::Render {
            file,
            horizon,
            schedule,
            format,
        } => {
            let circuit = load(&file)?;
            let schedule = single_schedule(&circuit, horizon, schedule.as_deref())?;
            match format {
                RenderFormat::Ascii => print!("{}", render::ascii(&circuit, &schedule)),
                RenderFormat::Dot => print!("{}", render::dot(&circuit, &schedule)),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("refform: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
