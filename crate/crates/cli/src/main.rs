//! Command-line driver: run scenarios, check traces, generate workloads.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use churnline_core::checker::{format_report, run_checks, Property, Verdict};
use churnline_core::engine::{parse_trace, write_trace};
use churnline_core::workload::demo::{partition_demo, starvation_demo};
use churnline_core::workload::{
    generate_workload, run_scenario, RunOptions, RunOutput, Scenario, Stats, WorkloadParams,
};
use churnline_core::{Mode, SchedulerKind, Snapshot};

const STARVATION_ROUNDS: usize = 55;

#[derive(Parser)]
#[command(
    name = "churnline",
    version,
    about = "Simulate and check churn in a linearized overlay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario or a bundled demo.
    Run(RunArgs),
    /// Check a recorded trace and snapshot.
    Check(CheckArgs),
    /// Generate a random workload scenario.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    /// Adversarial exit partitions the overlay, a cooperative leave does not.
    #[value(name = "theorem1")]
    Partition,
    /// A scripted schedule starves one leave while joins complete.
    #[value(name = "theorem2")]
    Starvation,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, required_unless_present = "demo", conflicts_with = "demo")]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "line")]
    mode: Mode,
    #[arg(long)]
    max_level: Option<u8>,
    #[arg(long)]
    max_events: Option<u64>,
    /// Overrides the scenario's `sched` directive.
    #[arg(long)]
    sched: Option<SchedulerKind>,
    /// Trace output path; `-` for stdout.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Comma-separated properties, or `all`.
    #[arg(long, value_parser = parse_props)]
    check: Option<PropList>,
    #[arg(long, value_enum)]
    demo: Option<Demo>,
    /// Run seeds `seed..seed+N` in parallel; output paths get a `.SEED` suffix.
    #[arg(long, conflicts_with = "demo")]
    batch: Option<u64>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Needed for linearization, sublist and partition.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long, value_parser = parse_props, default_value = "all")]
    check: PropList,
}

/// A parsed `--check` argument.
#[derive(Clone)]
struct PropList(Vec<Property>);

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    size: usize,
    #[arg(long, default_value_t = 200)]
    requests: usize,
    #[arg(long, default_value_t = 1.0)]
    join_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    leave_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    search_rate: f64,
    /// Concurrency cap; unthrottled when absent.
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, default_value_t = 1)]
    spacing: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_props(s: &str) -> Result<PropList, String> {
    Property::parse_list(s)
        .map(PropList)
        .map_err(|e| e.to_string())
}

fn emit(path: &Path, content: &str) -> Result<()> {
    if path == Path::new("-") {
        std::io::stdout().write_all(content.as_bytes())?;
        Ok(())
    } else {
        fs::write(path, content).with_context(|| format!("writing {}", path.display()))
    }
}

fn suffixed(path: &Path, seed: u64) -> PathBuf {
    if path == Path::new("-") {
        return path.to_path_buf();
    }
    let mut s = path.as_os_str().to_owned();
    s.push(format!(".{seed}"));
    PathBuf::from(s)
}

fn all_passed(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(Verdict::passed)
}

impl RunArgs {
    fn options(&self, seed: u64) -> RunOptions {
        let base = RunOptions::default();
        RunOptions {
            seed,
            mode: self.mode,
            max_level: self.max_level.unwrap_or(base.max_level),
            max_events: self.max_events.unwrap_or(base.max_events),
            scheduler: self.sched,
        }
    }

    /// Writes the requested artifacts and returns the verdicts.
    fn write_outputs(&self, out: &RunOutput, seed: Option<u64>) -> Result<Vec<Verdict>> {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| seed.map_or_else(|| p.clone(), |s| suffixed(p, s)))
        };
        if let Some(p) = path(&self.trace) {
            emit(&p, &write_trace(&out.trace))?;
        }
        if let Some(p) = path(&self.snapshot) {
            emit(&p, &out.snapshot.dump())?;
        }
        if let Some(p) = path(&self.stats) {
            emit(&p, &Stats::from_trace(&out.trace).to_tsv())?;
        }
        Ok(self
            .check
            .as_ref()
            .map(|props| run_checks(&props.0, &out.trace, &out.snapshot))
            .unwrap_or_default())
    }
}

fn run(args: &RunArgs) -> Result<bool> {
    if let Some(demo) = args.demo {
        return run_demo(args, demo);
    }
    let path = args.scenario.as_ref().expect("clap requires a scenario");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario = Scenario::parse(&text).with_context(|| format!("parsing {}", path.display()))?;

    let Some(n) = args.batch else {
        let out = run_scenario(&scenario, &args.options(args.seed))?;
        let verdicts = args.write_outputs(&out, None)?;
        print!("{}", format_report(&verdicts));
        return Ok(all_passed(&verdicts));
    };
    let results: Vec<Result<(String, bool)>> = (args.seed..args.seed + n)
        .into_par_iter()
        .map(|seed| {
            let out = run_scenario(&scenario, &args.options(seed))?;
            let verdicts = args.write_outputs(&out, Some(seed))?;
            let failed: Vec<&str> = verdicts
                .iter()
                .filter(|v| !v.passed())
                .map(|v| v.property.as_str())
                .collect();
            let line = format!(
                "seed {seed}\tsteps {}\tfailed {}",
                out.summary.steps,
                if failed.is_empty() {
                    "-".to_string()
                } else {
                    failed.join(",")
                }
            );
            Ok((line, failed.is_empty()))
        })
        .collect();
    let mut ok = true;
    for r in results {
        let (line, passed) = r?;
        println!("{line}");
        ok &= passed;
    }
    Ok(ok)
}

fn run_demo(args: &RunArgs, demo: Demo) -> Result<bool> {
    let opts = args.options(args.seed);
    match demo {
        Demo::Partition => {
            let d = partition_demo(&opts)?;
            println!("adversarial-exit {}", d.adversarial);
            println!("cooperative-leave {}", d.cooperative);
            println!(
                "expected-pattern {}",
                if d.as_expected() { "yes" } else { "no" }
            );
            Ok(d.as_expected())
        }
        Demo::Starvation => {
            let d = starvation_demo(STARVATION_ROUNDS)?;
            let out = run_scenario(&d.scenario, &opts)?;
            let verdicts = run_checks(
                &[Property::RequestProgress, Property::FairRequest],
                &out.trace,
                &out.snapshot,
            );
            args.write_outputs(&out, None)?;
            print!("{}", format_report(&verdicts));
            let distances: Vec<String> = d.distances.iter().map(usize::to_string).collect();
            println!("satisfied-joins {}", d.satisfied_joins);
            println!("distances {}", distances.join(","));
            let victim = format!("leave:{}", d.victim);
            let expected = verdicts[0].passed()
                && verdicts[1].failed()
                && verdicts[1].note.contains(&victim)
                && d.distances.windows(2).all(|w| w[0] <= w[1]);
            println!("expected-pattern {}", if expected { "yes" } else { "no" });
            Ok(expected)
        }
    }
}

fn check(args: &CheckArgs) -> Result<bool> {
    let text = fs::read_to_string(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))?;
    let trace = parse_trace(&text).with_context(|| format!("parsing {}", args.trace.display()))?;
    let snapshot = match &args.snapshot {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(Snapshot::parse(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let structural = [
        Property::Linearization,
        Property::Sublist,
        Property::Partition,
    ];
    let verdicts: Vec<Verdict> = match &snapshot {
        Some(s) => run_checks(&args.check.0, &trace, s),
        None => args
            .check
            .0
            .iter()
            .map(|&p| {
                if structural.contains(&p) {
                    Verdict::nyv(p, "no snapshot given")
                } else {
                    run_checks(&[p], &trace, &Snapshot::default()).remove(0)
                }
            })
            .collect(),
    };
    print!("{}", format_report(&verdicts));
    Ok(all_passed(&verdicts))
}

fn gen(args: &GenArgs) -> Result<bool> {
    if [args.join_rate, args.leave_rate, args.search_rate]
        .iter()
        .any(|r| !r.is_finite() || *r < 0.0)
    {
        bail!("rates must be finite and non-negative");
    }
    let sc = generate_workload(&WorkloadParams {
        seed: args.seed,
        initial_size: args.size,
        requests: args.requests,
        join_rate: args.join_rate,
        leave_rate: args.leave_rate,
        search_rate: args.search_rate,
        concurrency_cap: args.cap,
        spacing: args.spacing,
        ..WorkloadParams::default()
    });
    match &args.out {
        Some(p) => emit(p, &sc.to_text())?,
        None => print!("{}", sc.to_text()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Check(a) => check(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
