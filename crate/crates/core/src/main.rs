use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ta_repair::admissibility::{admissible, AdmissibilityOptions, Equivalence};
use ta_repair::io::{parse_trace, read_model, serialize_model, serialize_trace, write_file, TraceDocument};
use ta_repair::lra::FmBudget;
use ta_repair::repair::{run, write_report, Blocking, RepairOptions, Termination};
use ta_repair::seed::{campaign, CampaignOptions};
use ta_repair::variation::VariationKind;
use ta_repair::zone::ZoneError;
use ta_repair::{check, CheckOptions, Network, Property, SymbolicTrace, Verdict};

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ta-repair",
    version,
    about = "Clock bound, operator, clock, reset and urgency repair for networks of timed automata"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Bound,
    Operator,
    Clockref,
    Reset,
    Urgent,
    All,
}

impl KindArg {
    fn kinds(self) -> Vec<VariationKind> {
        match self {
            KindArg::Bound => vec![VariationKind::Bound],
            KindArg::Operator => vec![VariationKind::Operator],
            KindArg::Clockref => vec![VariationKind::ClockRef],
            KindArg::Reset => vec![VariationKind::Reset],
            KindArg::Urgent => vec![VariationKind::Urgency],
            KindArg::All => VariationKind::ALL.to_vec(),
        }
    }
}

fn expand(kinds: &[KindArg]) -> Vec<VariationKind> {
    VariationKind::ALL
        .into_iter()
        .filter(|k| kinds.iter().any(|a| a.kinds().contains(k)))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BlockingArg {
    /// Exclude each found assignment and its extensions.
    Assignment,
    /// Fix the modified variables of each found repair to "no change".
    Variables,
}

#[derive(Subcommand)]
enum Command {
    /// Model check the property; exit 1 with a shortest trace if violated.
    Check {
        model: PathBuf,
        /// Write the diagnostic trace to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long, default_value_t = CheckOptions::default().max_states)]
        max_states: usize,
    },
    /// Compute repairs for a violating trace.
    Repair {
        model: PathBuf,
        /// Diagnostic trace to repair; computed by the model checker if absent.
        #[arg(long)]
        tdt: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value = "repair-out")]
        out: PathBuf,
        #[arg(long, default_value_t = RepairOptions::default().max_repairs)]
        max_repairs: usize,
        /// Atom budget of one quantifier elimination.
        #[arg(long, default_value_t = FmBudget::default().max_atoms)]
        qe_budget: usize,
        /// Model check every repaired network again.
        #[arg(long)]
        recheck: bool,
        #[arg(long, value_enum, default_value = "assignment")]
        blocking: BlockingArg,
    },
    /// Seed single-edit faults and repair every faulty mutant.
    Seed {
        model: PathBuf,
        /// Seeding operators.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
        kinds: Vec<KindArg>,
        /// Repair analyses run on each faulty mutant.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
        repair_kinds: Vec<KindArg>,
        #[arg(long, default_value = "seed-out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare the untimed languages of two models; exit 1 if they differ.
    Admissible {
        model_a: PathBuf,
        model_b: PathBuf,
        /// Treat named internal actions as observable.
        #[arg(long)]
        visible_internal: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl From<ZoneError> for Failure {
    fn from(e: ZoneError) -> Self {
        let code = match e {
            ZoneError::Exhausted(_) => EXIT_BUDGET,
            ZoneError::ConstantOverflow => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load(path: &Path) -> Result<(Network, Property), Failure> {
    read_model(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn save(path: &Path, contents: &str) -> Result<(), Failure> {
    write_file(path, contents)
        .map(|_| ())
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_check(model: &Path, trace_out: Option<&Path>, max_states: usize) -> Result<u8, Failure> {
    let (network, prop) = load(model)?;
    match check(&network, &prop, CheckOptions { max_states })? {
        Verdict::Safe => {
            println!("safe");
            Ok(0)
        }
        Verdict::Violated(trace) => {
            let doc = serialize_trace(&TraceDocument::from_trace(&network, &trace));
            println!("violated, trace of {} steps", trace.len());
            match trace_out {
                Some(p) => save(p, &doc)?,
                None => print!("{doc}"),
            }
            Ok(EXIT_VIOLATION)
        }
    }
}

fn cmd_repair(model: &Path, tdt: Option<&Path>, kind: KindArg, out: &Path, opts: RepairOptions) -> Result<u8, Failure> {
    let (network, prop) = load(model)?;
    let trace: Option<SymbolicTrace> = match tdt {
        None => None,
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            let doc = parse_trace(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            Some(
                doc.to_trace(&network)
                    .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
            )
        }
    };
    let mut report = String::new();
    let mut budget = false;
    let mut trace_written = false;
    for k in kind.kinds() {
        let r = run(&network, &prop, k, trace.clone(), opts).map_err(|e| match e {
            ta_repair::repair::RepairError::Zone(z) => Failure::from(z),
            other => Failure::usage(other),
        })?;
        if r.termination == Termination::NoRepairNeeded {
            println!("no violation found");
            return Ok(0);
        }
        budget |= r.termination == Termination::Budget;
        if let (Some(t), false) = (&r.trace, trace_written) {
            save(&out.join("trace.json"), &serialize_trace(&TraceDocument::from_trace(&network, t)))?;
            trace_written = true;
        }
        for (i, o) in r.outcomes.iter().enumerate() {
            save(
                &out.join(format!("repair_{k}_{:03}.json", i + 1)),
                &serialize_model(&o.repaired, &prop),
            )?;
            if let Some(w) = &o.witness {
                save(
                    &out.join(format!("witness_{k}_{:03}.json", i + 1)),
                    &serialize_trace(&TraceDocument::from_labels(w)),
                )?;
            }
        }
        report.push_str(&write_report(&network, &r));
        report.push('\n');
    }
    save(&out.join("report.txt"), &report)?;
    print!("{report}");
    Ok(if budget { EXIT_BUDGET } else { 0 })
}

fn cmd_seed(model: &Path, kinds: &[KindArg], repair_kinds: &[KindArg], out: &Path, threads: Option<usize>) -> Result<u8, Failure> {
    let (network, prop) = load(model)?;
    let mut opts = CampaignOptions {
        repair_kinds: expand(repair_kinds),
        ..Default::default()
    };
    if let Some(t) = threads {
        opts.threads = t;
    }
    let c = campaign(&network, &prop, &expand(kinds), &opts);
    save(&out.join("campaign.csv"), &c.to_csv())?;
    save(&out.join("report.txt"), &c.report())?;
    print!("{}", c.to_csv());
    Ok(0)
}

fn cmd_admissible(a: &Path, b: &Path, visible_internal: bool) -> Result<u8, Failure> {
    let (na, pa) = load(a)?;
    let (nb, pb) = load(b)?;
    let opts = AdmissibilityOptions {
        visible_internal,
        ..Default::default()
    };
    match admissible(&na, &nb, &[&pa, &pb], opts)? {
        Equivalence::Equal => {
            println!("admissible");
            Ok(0)
        }
        Equivalence::Witness(w) => {
            println!("inadmissible, witness: [{}]", w.join(" "));
            Ok(EXIT_VIOLATION)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check {
            model,
            trace_out,
            max_states,
        } => cmd_check(model, trace_out.as_deref(), *max_states),
        Command::Repair {
            model,
            tdt,
            kind,
            out,
            max_repairs,
            qe_budget,
            recheck,
            blocking,
        } => {
            let opts = RepairOptions {
                max_repairs: *max_repairs,
                qe_budget: FmBudget { max_atoms: *qe_budget },
                recheck: *recheck,
                blocking: match blocking {
                    BlockingArg::Assignment => Blocking::Assignment,
                    BlockingArg::Variables => Blocking::Variables,
                },
                ..Default::default()
            };
            cmd_repair(model, tdt.as_deref(), *kind, out, opts)
        }
        Command::Seed {
            model,
            kinds,
            repair_kinds,
            out,
            threads,
        } => cmd_seed(model, kinds, repair_kinds, out, *threads),
        Command::Admissible {
            model_a,
            model_b,
            visible_internal,
        } => cmd_admissible(model_a, model_b, *visible_internal),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
