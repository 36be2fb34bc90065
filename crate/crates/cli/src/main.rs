use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use modunif::decision::{
    self, DecisionError, DecisionOptions, Engine, Logic, Satisfiability, Validity,
};
use modunif::encoding::{ax_program, canonical_frame, psi, Mode};
use modunif::formula::{parse, Formula};
use modunif::kripke::{
    model_check, parse_frame, parse_valuation, write_frame, write_valuation, Model,
};
use modunif::minsky::{reaches, Config, Program, Reachability};
use modunif::witness::witness_for_trace;
use modunif::workbench::{
    check_unifiable_via_reduction, ground_unifiable, PipelineOptions, SuiteConfig, WorkbenchError,
};

#[derive(Parser)]
#[command(
    name = "modunif",
    version,
    about = "Counter machines, modal unification and the reduction between them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Universal,
    Hybrid,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Universal => Mode::Universal,
            ModeArg::Hybrid => Mode::Hybrid(1),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LogicArg {
    Ku,
    Kh2,
}

impl From<LogicArg> for Logic {
    fn from(l: LogicArg) -> Logic {
        match l {
            LogicArg::Ku => Logic::Ku,
            LogicArg::Kh2 => Logic::KH2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Global,
    Graph,
}

#[derive(clap::Args)]
struct DecideArgs {
    #[arg(long, value_enum)]
    logic: LogicArg,
    #[arg(long)]
    formula: String,
    #[arg(long, default_value_t = 50_000)]
    budget: usize,
    #[arg(long, value_enum, default_value = "auto")]
    engine: EngineArg,
}

impl DecideArgs {
    fn options(&self) -> DecisionOptions {
        DecisionOptions {
            label_budget: self.budget,
            engine: match self.engine {
                EngineArg::Auto => Engine::Auto,
                EngineArg::Global => Engine::Global,
                EngineArg::Graph => Engine::Graph,
            },
        }
    }

    fn formula(&self) -> Result<Formula> {
        let logic: Logic = self.logic.into();
        Ok(parse(&self.formula, logic.language())?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write ψ, the program axiom and (when the target is reachable) σ.
    Reduce {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        start: Config,
        #[arg(long)]
        target: Config,
        #[arg(long, value_enum, default_value = "universal")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1_000)]
        bound: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the canonical frame of a program run.
    Frame {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        start: Config,
        #[arg(long, default_value_t = 1_000)]
        bound: usize,
        #[arg(long, value_enum, default_value = "universal")]
        mode: ModeArg,
    },
    /// Evaluate a formula at a point of a model.
    Modelcheck {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        valuation: Option<PathBuf>,
        #[arg(long)]
        point: String,
        #[arg(long)]
        formula: String,
    },
    /// Decide validity; prints a countermodel when there is one.
    Valid(DecideArgs),
    /// Decide satisfiability; prints a model when there is one.
    Sat(DecideArgs),
    /// Run the reduction end to end and print a JSON report.
    Verify {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        start: Config,
        #[arg(long)]
        target: Config,
        #[arg(long, default_value_t = 1_000)]
        bound: usize,
        #[arg(long, value_enum, default_value = "universal")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        max_points: usize,
        #[arg(long, default_value_t = 50_000)]
        budget: usize,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Look for a ground substitution making the formula valid.
    GroundUnify(DecideArgs),
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_program(path: &Path) -> Result<Program> {
    Program::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn model_text(model: &Model, point: usize) -> String {
    format!(
        "{}{}point: {}",
        write_frame(&model.frame, &[]),
        write_valuation(&model.frame, &model.valuation),
        model.frame.name(point)
    )
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Reduce {
            program,
            start,
            target,
            mode,
            bound,
            out,
        } => {
            let p = read_program(&program)?;
            let mode: Mode = mode.into();
            std::fs::create_dir_all(&out)?;
            std::fs::write(
                out.join("psi.txt"),
                format!("{}\n", psi(&p, start, target, mode)),
            )?;
            std::fs::write(out.join("axp.txt"), format!("{}\n", ax_program(&p, mode)))?;
            match reaches(&p, start, target, bound) {
                Reachability::Yes(trace) => {
                    std::fs::write(
                        out.join("sigma.txt"),
                        witness_for_trace(&trace, mode).to_string(),
                    )?;
                    println!(
                        "reachable in {} steps; wrote psi.txt, axp.txt, sigma.txt",
                        trace.len()
                    );
                }
                Reachability::No => println!("not reachable; wrote psi.txt, axp.txt"),
                Reachability::Unknown => {
                    println!("undetermined within {bound} steps; wrote psi.txt, axp.txt")
                }
            }
        }
        Command::Frame {
            program,
            start,
            bound,
            mode,
        } => {
            let p = read_program(&program)?;
            print!(
                "{}",
                canonical_frame(&p, start, bound, mode.into())?.to_text()
            );
        }
        Command::Modelcheck {
            frame,
            valuation,
            point,
            formula,
        } => {
            let frame = parse_frame(&read(&frame)?)?.frame;
            let valuation = match valuation {
                Some(v) => parse_valuation(&frame, &read(&v)?)?,
                None => Default::default(),
            };
            let phi = parse(&formula, frame.kind())?;
            let x = frame.point(&point)?;
            let model = Model::new(frame, valuation)?;
            println!("{}", model_check(&model, x, &phi)?);
        }
        Command::Valid(args) => {
            let (result, stats) =
                decision::valid_with(&args.formula()?, args.logic.into(), &args.options())?;
            match result {
                Validity::Valid => println!("valid ({} sets)", stats.labels),
                Validity::CounterModel { model, point } => {
                    println!("not valid; countermodel:\n{}", model_text(&model, point))
                }
            }
        }
        Command::Sat(args) => {
            let (result, stats) =
                decision::satisfiable_with(&args.formula()?, args.logic.into(), &args.options())?;
            match result {
                Satisfiability::Unsat => println!("unsatisfiable ({} sets)", stats.labels),
                Satisfiability::Sat { model, point } => {
                    println!("satisfiable; model:\n{}", model_text(&model, point))
                }
            }
        }
        Command::Verify {
            program,
            start,
            target,
            bound,
            mode,
            seed,
            trials,
            max_points,
            budget,
            out,
        } => {
            let p = read_program(&program)?;
            let options = PipelineOptions {
                bound,
                label_budget: budget,
                suite: SuiteConfig {
                    trials,
                    max_points,
                    seed,
                },
                ..Default::default()
            };
            let report = check_unifiable_via_reduction(&p, start, target, mode.into(), &options)?;
            let json = serde_json::to_string_pretty(&report)?;
            if let Some(path) = out {
                std::fs::write(&path, &json)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{json}");
        }
        Command::GroundUnify(args) => {
            match ground_unifiable(&args.formula()?, args.logic.into(), &args.options())? {
                Some(sigma) => print!("{sigma}"),
                None => println!("no ground unifier"),
            }
        }
    }
    Ok(())
}

/// 2 for an exhausted budget, 3 for a broken invariant, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    let decision_code = |d: &DecisionError| match d {
        DecisionError::ResourceLimit(_) => Some(2),
        DecisionError::Internal(_) => Some(3),
        _ => None,
    };
    if let Some(d) = e.downcast_ref::<DecisionError>() {
        return decision_code(d).unwrap_or(1);
    }
    if let Some(w) = e.downcast_ref::<WorkbenchError>() {
        return match w {
            WorkbenchError::Decision(d) => decision_code(d).unwrap_or(1),
            WorkbenchError::WitnessRefuted { .. } | WorkbenchError::CertificateFailed(_) => 3,
            _ => 1,
        };
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
