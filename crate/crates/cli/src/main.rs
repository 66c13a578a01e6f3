use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use foliation_lab::leaf::{second_variation_direct, stability_report, VariationField};
use foliation_lab::sampling::SamplingPlan;
use foliation_lab::scenario::{builtin, builtin_names, resolve, Scenario};
use foliation_lab::verification::{selftest, CheckRequest, Verifier};
use foliation_lab::Error;

/// Numerical checks of Riemannian foliation identities on built-in or
/// user-supplied scenarios.
#[derive(Parser)]
#[command(name = "foliation-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Print a scenario's chart, foliation, fields and leaves.
    Describe { scenario: String },
    /// Run checks on a scenario.
    Check(CheckArgs),
    /// Integrate the stability functional over a leaf.
    Stability(LeafArgs),
    /// Second variation of leaf volume by deforming the leaf along geodesics.
    Variation {
        #[command(flatten)]
        leaf: LeafArgs,
        #[arg(long, default_value_t = 1e-3)]
        t_step: f64,
    },
    /// Verify every built-in scenario against its claims.
    Selftest {
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        json: Option<Option<PathBuf>>,
    },
}

#[derive(Args, Clone)]
struct Sampling {
    /// Number of Halton sample points.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl Sampling {
    fn plan(&self) -> SamplingPlan {
        SamplingPlan::new(self.samples, self.seed)
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Built-in scenario name or path to a scenario file.
    scenario: String,
    #[arg(long)]
    lemma2: bool,
    #[arg(long)]
    lemma3: bool,
    #[arg(long, value_name = "FIELD")]
    killing: Vec<String>,
    #[arg(long, value_name = "FIELD")]
    preserving: Vec<String>,
    #[arg(long, value_name = "FIELD")]
    jacobi: Vec<String>,
    #[arg(long)]
    prop3: bool,
    #[arg(long, value_name = "FIELD")]
    prop4: Vec<String>,
    /// Leaf used by --prop4 (the first leaf by default).
    #[arg(long)]
    leaf: Option<String>,
    #[arg(long)]
    minimality: bool,
    #[arg(long)]
    integrable_perp: bool,
    /// Every check the scenario's claims and tags call for.
    #[arg(long)]
    all: bool,
    #[command(flatten)]
    sampling: Sampling,
    /// Override every check's tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Let checks with violated hypotheses fail the run.
    #[arg(long)]
    strict: bool,
    /// Omit wall times so output is reproducible.
    #[arg(long)]
    no_timestamp: bool,
    /// Write the reports as a JSON array to PATH, or to stdout without PATH.
    #[arg(long, value_name = "PATH")]
    json: Option<Option<PathBuf>>,
}

#[derive(Args)]
struct LeafArgs {
    scenario: String,
    #[arg(long)]
    leaf: String,
    #[arg(long)]
    field: String,
    /// Quadrature nodes per leaf axis.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long)]
    strict: bool,
    #[arg(long, value_name = "PATH")]
    json: Option<Option<PathBuf>>,
}

/// Failure of the run itself, as opposed to a failed check.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Scenario { .. }
            | Error::UnknownScenario(_)
            | Error::UnknownItem { .. }
            | Error::Misuse(_)
            | Error::Invalid(_)
            | Error::Expr(_)
            | Error::Io(_) => Failure::Usage(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FOLIATION_LAB_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("FOLIATION_LAB_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn emit_json(target: &Option<Option<PathBuf>>, value: &impl serde::Serialize) -> Result<(), Failure> {
    let Some(target) = target else { return Ok(()) };
    let text = serde_json::to_string_pretty(value).context("serializing report")? + "\n";
    match target {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// True when the run passed.
fn run(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::List => {
            for name in builtin_names() {
                let s = builtin(name)?;
                let first = s.doc.split(". ").next().unwrap_or("").trim_end_matches('.');
                println!("{:<4} {:<20} {first}", s.name, s.title);
            }
            Ok(true)
        }
        Command::Describe { scenario } => {
            print!("{}", resolve(&scenario)?.describe());
            Ok(true)
        }
        Command::Check(args) => check(args),
        Command::Stability(args) => {
            let s = resolve(&args.scenario)?;
            let (leaf, v) = leaf_and_field(&s, &args)?;
            let r = stability_report(&s.chart, &s.foliation, &leaf, &v)?;
            let tol = if v.is_bumped() { 1e-5 } else { 1e-6 };
            let informational = !r.warnings.is_empty();
            let pass = r.stable && r.relative_residual < tol;
            if args.json.as_ref().is_some_and(|t| t.is_none()) {
                emit_json(&args.json, &r)?;
            } else {
                println!("leaf {} field {} on a {}-node grid{}", r.leaf, r.field, r.grid, if v.is_bumped() { " (bumped)" } else { "" });
                println!("  integral of f_V        {:.12e}", r.i_f);
                println!("  integral of |alpha_V|^2 {:.12e}", r.i_alpha);
                println!("  relative difference    {:.3e} (tol {tol:.0e})", r.relative_residual);
                println!("  stable                 {}", r.stable);
                for w in &r.warnings {
                    println!("  warning: {w}");
                }
                emit_json(&args.json, &r)?;
            }
            Ok(pass || (informational && !args.strict))
        }
        Command::Variation { leaf: args, t_step } => {
            let s = resolve(&args.scenario)?;
            let (leaf, v) = leaf_and_field(&s, &args)?;
            let r = second_variation_direct(&s.chart, &s.foliation, &leaf, &v, t_step)?;
            let informational = !r.warnings.is_empty();
            let pass = r.relative_error < 0.01;
            if args.json.as_ref().is_some_and(|t| t.is_none()) {
                emit_json(&args.json, &r)?;
            } else {
                println!("leaf {} field {} on a {}-node grid, t_step {}", r.leaf, r.field, r.grid, r.t_step);
                println!("  volume                 {:.12e}", r.volume);
                println!("  second variation       {:.12e}", r.d2vol);
                println!("  integral of f_V        {:.12e}", r.i_f);
                println!("  relative difference    {:.3e} (tol 1e-2)", r.relative_error);
                for w in &r.warnings {
                    println!("  warning: {w}");
                }
                emit_json(&args.json, &r)?;
            }
            Ok(pass || (informational && !args.strict))
        }
        Command::Selftest { sampling, json } => {
            let plan = sampling.plan();
            let mut items = Vec::new();
            for name in builtin_names() {
                items.extend(selftest(&builtin(name)?, &plan)?);
            }
            let to_stdout = json.as_ref().is_some_and(|t| t.is_none());
            if !to_stdout {
                for i in &items {
                    println!(
                        "{:<4} {:<32} expect {:<4}  residual {:.3e} (tol {:.0e})  {}",
                        i.scenario,
                        i.check,
                        if i.expect_pass { "pass" } else { "fail" },
                        i.max_residual,
                        i.tolerance,
                        if i.ok { "ok" } else { "MISMATCH" }
                    );
                }
            }
            emit_json(&json, &items)?;
            let bad = items.iter().filter(|i| !i.ok).count();
            if !to_stdout {
                println!("{} checks, {bad} mismatches", items.len());
            }
            Ok(bad == 0)
        }
    }
}

fn leaf_and_field(s: &Scenario, args: &LeafArgs) -> Result<(foliation_lab::leaf::LeafPatch, VariationField), Failure> {
    if args.grid == 0 {
        return Err(Failure::Usage(anyhow::anyhow!("--grid must be positive")));
    }
    let leaf = s.leaf(&args.leaf)?.with_resolution(args.grid);
    let field = &s.field(&args.field)?.field;
    let v = if leaf.is_compact() {
        VariationField::new(&args.field, field.clone())
    } else {
        VariationField::bumped(&args.field, &s.chart, field)?
    };
    Ok((leaf, v))
}

fn check(args: CheckArgs) -> Result<bool, Failure> {
    let s = resolve(&args.scenario)?;
    let v = Verifier::new(&s, args.sampling.plan())?;
    let v = if args.no_timestamp { v.without_timestamps() } else { v };
    let mut reqs = Vec::new();
    if args.all {
        reqs = v.standard_requests();
    }
    let mut add = |r: CheckRequest| {
        if !reqs.contains(&r) {
            reqs.push(r);
        }
    };
    if args.lemma2 {
        add(CheckRequest::Lemma2);
    }
    if args.lemma3 {
        add(CheckRequest::Lemma3);
    }
    if args.minimality {
        add(CheckRequest::Minimality);
    }
    if args.integrable_perp {
        add(CheckRequest::IntegrablePerp);
    }
    args.killing.iter().for_each(|f| add(CheckRequest::Killing(f.clone())));
    args.preserving.iter().for_each(|f| add(CheckRequest::Preserving(f.clone())));
    args.jacobi.iter().for_each(|f| add(CheckRequest::Jacobi(f.clone())));
    if args.prop3 {
        add(CheckRequest::Prop3);
    }
    for f in &args.prop4 {
        add(CheckRequest::Prop4 {
            field: f.clone(),
            leaf: args.leaf.clone(),
        });
    }
    if reqs.is_empty() {
        return Err(Failure::Usage(anyhow::anyhow!(
            "no checks selected; pass --all or at least one check flag"
        )));
    }
    let mut reports = Vec::with_capacity(reqs.len());
    for r in &reqs {
        reports.push(v.run(r, args.tol)?);
    }
    let to_stdout = args.json.as_ref().is_some_and(|t| t.is_none());
    if !to_stdout {
        for r in &reports {
            println!("{}", r.summary());
        }
    }
    emit_json(&args.json, &reports)?;
    Ok(!reports.iter().any(|r| r.fails(args.strict)))
}
