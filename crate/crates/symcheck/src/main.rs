use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, ValueEnum};

use symcheck::bdd::Manager;
use symcheck::bench::BenchSpec;
use symcheck::model::{
    encode_layout, parse_model, print_model, Model, ModelError, DEFAULT_BIT_CAP,
};
use symcheck::oracle;
use symcheck::reach::{
    self, ReachError, ReachOptions, ReachResult, Verdict,
};
use symcheck::symmetry::SymContext;

const EXIT_HOLDS: u8 = 0;
const EXIT_VIOLATION: u8 = 1;
const EXIT_EXHAUSTED: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    /// Single monolithic transition relation.
    Mono,
    /// Component-wise exploration with on-the-fly relations.
    Comp,
    /// Run both and compare peak node usage.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

/// Symbolic safety checker for symmetric concurrent systems.
#[derive(Debug, Parser)]
#[command(name = "symcheck", disable_help_flag = false)]
struct Cli {
    /// Model file to verify (mutually exclusive with --bench).
    model: Option<PathBuf>,
    /// Built-in benchmark: `mutex:N`, `rw:K`, or `rw:R,W`.
    #[arg(long)]
    bench: Option<String>,
    #[arg(long, value_enum, default_value_t = Algo::Comp)]
    algo: Algo,
    /// Skip frontier states whose neighboring instances are interchangeable.
    #[arg(long)]
    state_sym: bool,
    /// Cross-check the result against explicit-state enumeration.
    #[arg(long)]
    oracle_check: bool,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_limit: Option<u64>,
    /// Abort when live BDD nodes exceed this count.
    #[arg(long)]
    node_cap: Option<usize>,
    /// Maximum state bits the encoder may allocate.
    #[arg(long, default_value_t = DEFAULT_BIT_CAP)]
    bit_cap: usize,
    /// Write the (generated or parsed) model to a file and continue.
    #[arg(long)]
    emit_model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}

struct Failure {
    exit: u8,
    message: String,
}

fn fail(exit: u8, message: impl Into<String>) -> Failure {
    Failure { exit, message: message.into() }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Failure {
        let exit = match e {
            ModelError::Capacity { .. } => EXIT_EXHAUSTED,
            ModelError::Bdd(_) => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        fail(exit, e.to_string())
    }
}

impl From<ReachError> for Failure {
    fn from(e: ReachError) -> Failure {
        let exit = match e {
            ReachError::Exhausted(_) => EXIT_EXHAUSTED,
            ReachError::Model(ref m) if matches!(m, ModelError::Capacity { .. }) => EXIT_EXHAUSTED,
            _ => EXIT_INTERNAL,
        };
        fail(exit, e.to_string())
    }
}

fn load_model(cli: &Cli) -> Result<Model, Failure> {
    match (&cli.model, &cli.bench) {
        (Some(_), Some(_)) => Err(fail(EXIT_USAGE, "give either a model file or --bench, not both")),
        (None, None) => Err(fail(EXIT_USAGE, "no input: give a model file or --bench")),
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
            Ok(parse_model(&text)?)
        }
        (None, Some(spec)) => {
            let spec = BenchSpec::parse(spec).ok_or_else(|| {
                fail(EXIT_USAGE, format!("bad benchmark spec `{spec}` (try mutex:3 or rw:2,2)"))
            })?;
            Ok(spec.generate())
        }
    }
}

/// One algorithm's run plus everything the report needs. The manager is
/// kept so both-mode can compare reached sets across runs.
struct RunOutcome {
    label: &'static str,
    mgr: Manager,
    result: ReachResult,
    verdicts: Vec<(String, Verdict)>,
}

fn run_algo(
    label: &'static str,
    model: &Model,
    cli: &Cli,
    comp: bool,
) -> Result<RunOutcome, Failure> {
    let layout = encode_layout(model, cli.bit_cap)?;
    let mgr = Manager::new(layout.num_vars);
    let ctx = SymContext::new(model, &layout, &mgr);
    let opts = ReachOptions {
        state_symmetries: cli.state_sym,
        time_limit: cli.time_limit.map(Duration::from_secs),
        node_cap: cli.node_cap,
    };
    let result = if comp {
        reach::reach_componentwise(&ctx, &opts)?
    } else {
        reach::reach_monolithic(&ctx, &opts)?
    };
    let mut verdicts = Vec::new();
    for prop in &model.properties {
        let bad = ctx.sym.build_predicate(&prop.bad)?;
        let verdict = reach::check_invariant(&ctx.sym, &result.reached, &bad)?;
        verdicts.push((prop.name.clone(), verdict));
    }
    drop(ctx);
    Ok(RunOutcome { label, mgr, result, verdicts })
}

/// Four-way comparison: both symbolic algorithms, the state-symmetry
/// variant, and the canonicalized oracle enumeration must agree exactly.
fn oracle_check(model: &Model, cli: &Cli) -> Result<bool, Failure> {
    let explicit = oracle::enumerate_reachable(model, 2_000_000)
        .map_err(|e| fail(EXIT_USAGE, format!("oracle check not feasible here: {e}")))?;
    let canon = oracle::canonicalize_set(model, &explicit)
        .map_err(|e| fail(EXIT_USAGE, format!("oracle check not feasible here: {e}")))?;

    let layout = encode_layout(model, cli.bit_cap)?;
    let mgr = Manager::new(layout.num_vars);
    let ctx = SymContext::new(model, &layout, &mgr);
    let mut expected = mgr.constant(false);
    for s in &canon {
        let cube = ctx.sym.state_cube(s).map_err(|e| fail(EXIT_INTERNAL, e.to_string()))?;
        expected = mgr.or(&expected, &cube).map_err(|e| fail(EXIT_INTERNAL, e.to_string()))?;
    }
    let opts = ReachOptions {
        time_limit: cli.time_limit.map(Duration::from_secs),
        node_cap: cli.node_cap,
        state_symmetries: false,
    };
    let mono = reach::reach_monolithic(&ctx, &opts)?;
    let comp_off = reach::reach_componentwise(&ctx, &opts)?;
    let comp_on = reach::reach_componentwise(
        &ctx,
        &ReachOptions { state_symmetries: true, ..opts },
    )?;
    Ok(mono.reached == expected && comp_off.reached == expected && comp_on.reached == expected)
}

struct Report {
    lines: Vec<(String, String)>,
    format: Format,
}

impl Report {
    fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn print(&self) {
        match self.format {
            Format::Structured => {
                for (k, v) in &self.lines {
                    println!("{k}={v}");
                }
            }
            Format::Text => {
                let width = self.lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &self.lines {
                    println!("{k:width$}  {v}");
                }
            }
        }
    }
}

fn describe_sizes(model: &Model) -> String {
    model
        .types
        .iter()
        .map(|t| format!("{}={}", t.name, t.count))
        .collect::<Vec<_>>()
        .join(",")
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let model = load_model(cli)?;
    if let Some(path) = &cli.emit_model {
        fs::write(path, print_model(&model))
            .map_err(|e| fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))?;
    }

    let mut outcomes = Vec::new();
    match cli.algo {
        Algo::Mono => outcomes.push(run_algo("mono", &model, cli, false)?),
        Algo::Comp => outcomes.push(run_algo("comp", &model, cli, true)?),
        Algo::Both => {
            outcomes.push(run_algo("mono", &model, cli, false)?);
            outcomes.push(run_algo("comp", &model, cli, true)?);
        }
    }

    let mut report = Report { lines: Vec::new(), format: cli.format };
    report.push("model", &model.name);
    report.push("sizes", describe_sizes(&model));
    report.push("state_symmetries", cli.state_sym);
    report.push("bit_cap", cli.bit_cap);

    let mut violated = Vec::new();
    for outcome in &outcomes {
        let p = outcome.label;
        let stats = &outcome.result.stats;
        report.push(&format!("{p}.representatives"), outcome.result.representatives);
        report.push(&format!("{p}.peak_live_nodes"), stats.peak_live_nodes);
        report.push(&format!("{p}.passes"), stats.passes);
        report.push(&format!("{p}.images"), stats.images);
        report.push(&format!("{p}.time_ms"), stats.elapsed.as_millis());
        report.push(&format!("{p}.image_ms"), stats.image_time.as_millis());
        report.push(&format!("{p}.alpha_ms"), stats.alpha_time.as_millis());
        report.push(&format!("{p}.filter_ms"), stats.filter_time.as_millis());
        for (name, verdict) in &outcome.verdicts {
            match verdict {
                Verdict::Holds => {
                    report.push(&format!("{p}.property.{name}"), "holds");
                }
                Verdict::Violated(w) => {
                    report.push(&format!("{p}.property.{name}"), "violated");
                    report.push(&format!("{p}.witness.{name}"), model.format_state(w));
                    violated.push(name.clone());
                }
            }
        }
    }

    if cli.algo == Algo::Both {
        let mono = outcomes[0].result.stats.peak_live_nodes;
        let comp = outcomes[1].result.stats.peak_live_nodes;
        report.push("node_trend", format!("mono={mono} comp={comp}"));
        if comp > mono {
            report.push("node_trend_reversed", "true");
        }
        // the runs live in separate managers; compare after copying over
        let imported = outcomes[0]
            .mgr
            .transfer(&outcomes[1].result.reached)
            .map_err(|e| fail(EXIT_INTERNAL, e.to_string()))?;
        if outcomes[0].result.reached != imported {
            report.print();
            return Err(fail(EXIT_INTERNAL, "algorithms disagree on the reachable set"));
        }
    }

    if cli.oracle_check {
        let ok = oracle_check(&model, cli)?;
        report.push("oracle_check", if ok { "PASS" } else { "FAIL" });
        if !ok {
            report.print();
            return Err(fail(EXIT_INTERNAL, "oracle check failed: symbolic and explicit results differ"));
        }
    }

    let verdict = if violated.is_empty() { "holds" } else { "violated" };
    report.push("verdict", verdict);
    report.print();
    Ok(if violated.is_empty() { EXIT_HOLDS } else { EXIT_VIOLATION })
}
