//! Deterministic two-counter Minsky machines.
//!
//! Program text has one instruction per line:
//!
//! ```text
//! # state -> target,delta1,delta2 [| zero_target,0,0]
//! 1 -> 2,+1,0
//! 2 -> 3,0,-1 | 4,0,0
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MinskyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("state {0} has more than one instruction")]
    Determinism(u32),
    #[error("bad configuration {0:?}: expected s,m,n")]
    BadConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instruction {
    Inc1 { from: u32, to: u32 },
    Inc2 { from: u32, to: u32 },
    Dec1 { from: u32, to: u32, zero_to: u32 },
    Dec2 { from: u32, to: u32, zero_to: u32 },
}

impl Instruction {
    pub fn from(&self) -> u32 {
        match *self {
            Instruction::Inc1 { from, .. }
            | Instruction::Inc2 { from, .. }
            | Instruction::Dec1 { from, .. }
            | Instruction::Dec2 { from, .. } => from,
        }
    }

    /// Every state the instruction mentions.
    pub fn states(&self) -> Vec<u32> {
        match *self {
            Instruction::Inc1 { from, to } | Instruction::Inc2 { from, to } => vec![from, to],
            Instruction::Dec1 { from, to, zero_to } | Instruction::Dec2 { from, to, zero_to } => {
                vec![from, to, zero_to]
            }
        }
    }

    /// Successor of `c`, assuming `c.state == self.from()`.
    pub fn apply(&self, c: Config) -> Config {
        match *self {
            Instruction::Inc1 { to, .. } => Config::new(to, c.c1 + 1, c.c2),
            Instruction::Inc2 { to, .. } => Config::new(to, c.c1, c.c2 + 1),
            Instruction::Dec1 { to, zero_to, .. } => {
                if c.c1 > 0 {
                    Config::new(to, c.c1 - 1, c.c2)
                } else {
                    Config::new(zero_to, c.c1, c.c2)
                }
            }
            Instruction::Dec2 { to, zero_to, .. } => {
                if c.c2 > 0 {
                    Config::new(to, c.c1, c.c2 - 1)
                } else {
                    Config::new(zero_to, c.c1, c.c2)
                }
            }
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instruction::Inc1 { from, to } => write!(f, "{from} -> {to},+1,0"),
            Instruction::Inc2 { from, to } => write!(f, "{from} -> {to},0,+1"),
            Instruction::Dec1 { from, to, zero_to } => {
                write!(f, "{from} -> {to},-1,0 | {zero_to},0,0")
            }
            Instruction::Dec2 { from, to, zero_to } => {
                write!(f, "{from} -> {to},0,-1 | {zero_to},0,0")
            }
        }
    }
}

/// `⟨state, counter1, counter2⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Config {
    pub state: u32,
    pub c1: u64,
    pub c2: u64,
}

impl Config {
    pub fn new(state: u32, c1: u64, c2: u64) -> Config {
        Config { state, c1, c2 }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.state, self.c1, self.c2)
    }
}

impl FromStr for Config {
    type Err = MinskyError;

    fn from_str(s: &str) -> Result<Config, MinskyError> {
        let bad = || MinskyError::BadConfig(s.to_string());
        let parts: Vec<&str> = s.trim().split(',').map(str::trim).collect();
        let [st, m, n] = parts[..] else {
            return Err(bad());
        };
        Ok(Config::new(
            st.parse().map_err(|_| bad())?,
            m.parse().map_err(|_| bad())?,
            n.parse().map_err(|_| bad())?,
        ))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Instruction>", into = "Vec<Instruction>")]
pub struct Program {
    instructions: Vec<Instruction>,
    by_state: BTreeMap<u32, usize>,
}

impl TryFrom<Vec<Instruction>> for Program {
    type Error = MinskyError;
    fn try_from(v: Vec<Instruction>) -> Result<Self, MinskyError> {
        Program::new(v)
    }
}

impl From<Program> for Vec<Instruction> {
    fn from(p: Program) -> Self {
        p.instructions
    }
}

impl Program {
    pub fn new(instructions: Vec<Instruction>) -> Result<Program, MinskyError> {
        let mut by_state = BTreeMap::new();
        for (i, ins) in instructions.iter().enumerate() {
            if by_state.insert(ins.from(), i).is_some() {
                return Err(MinskyError::Determinism(ins.from()));
            }
        }
        Ok(Program {
            instructions,
            by_state,
        })
    }

    pub fn empty() -> Program {
        Program::default()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn instruction_for(&self, state: u32) -> Option<&Instruction> {
        self.by_state.get(&state).map(|&i| &self.instructions[i])
    }

    pub fn max_state(&self) -> Option<u32> {
        self.instructions.iter().flat_map(|i| i.states()).max()
    }

    pub fn parse(text: &str) -> Result<Program, MinskyError> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            out.push(parse_line(line).map_err(|message| MinskyError::Syntax {
                line: i + 1,
                message,
            })?);
        }
        Program::new(out)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.instructions {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

fn parse_line(line: &str) -> Result<Instruction, String> {
    let (lhs, rhs) = line.split_once("->").ok_or("expected '->'")?;
    let from: u32 = lhs
        .trim()
        .parse()
        .map_err(|_| format!("bad state {:?}", lhs.trim()))?;
    let (main, zero) = match rhs.split_once('|') {
        Some((m, z)) => (m, Some(z)),
        None => (rhs, None),
    };
    let triple = |s: &str| -> Result<(u32, i8, i8), String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [t, d1, d2] = parts[..] else {
            return Err(format!("expected state,delta,delta in {:?}", s.trim()));
        };
        let delta = |d: &str| match d {
            "+1" => Ok(1),
            "-1" => Ok(-1),
            "0" => Ok(0),
            other => Err(format!("bad delta {other:?}")),
        };
        Ok((
            t.parse().map_err(|_| format!("bad state {t:?}"))?,
            delta(d1)?,
            delta(d2)?,
        ))
    };
    let (to, d1, d2) = triple(main)?;
    let zero_to = match zero {
        Some(z) => {
            let (zt, z1, z2) = triple(z)?;
            if (z1, z2) != (0, 0) {
                return Err("zero branch must read state,0,0".into());
            }
            Some(zt)
        }
        None => None,
    };
    match (d1, d2, zero_to) {
        (1, 0, None) => Ok(Instruction::Inc1 { from, to }),
        (0, 1, None) => Ok(Instruction::Inc2 { from, to }),
        (-1, 0, Some(zero_to)) => Ok(Instruction::Dec1 { from, to, zero_to }),
        (0, -1, Some(zero_to)) => Ok(Instruction::Dec2 { from, to, zero_to }),
        (1, 0, Some(_)) | (0, 1, Some(_)) => Err("increments take no zero branch".into()),
        (-1, 0, None) | (0, -1, None) => Err("decrements need a zero branch".into()),
        _ => Err("exactly one delta must be nonzero".into()),
    }
}

/// One step of `program` from `c`; `None` means the machine halts.
pub fn step(program: &Program, c: Config) -> Option<(Config, Instruction)> {
    program
        .instruction_for(c.state)
        .map(|ins| (ins.apply(c), *ins))
}

/// A computation `configs[0] -I1-> configs[1] -I2-> ...`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub configs: Vec<Config>,
    /// `instrs[j]` turns `configs[j]` into `configs[j + 1]`.
    pub instrs: Vec<Instruction>,
}

impl Trace {
    pub fn start(c: Config) -> Trace {
        Trace {
            configs: vec![c],
            instrs: vec![],
        }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn last(&self) -> Config {
        *self.configs.last().expect("trace has a start")
    }

    pub fn prefix(&self, steps: usize) -> Trace {
        Trace {
            configs: self.configs[..=steps].to_vec(),
            instrs: self.instrs[..steps].to_vec(),
        }
    }

    /// Whether every step is what `step` computes.
    pub fn replays_under(&self, program: &Program) -> bool {
        self.configs.len() == self.instrs.len() + 1
            && self
                .configs
                .windows(2)
                .zip(&self.instrs)
                .all(|(w, ins)| step(program, w[0]) == Some((w[1], *ins)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunOutcome {
    /// No instruction for the last configuration.
    Halted,
    /// The next configuration equals `configs[index]`.
    Looped { index: usize },
    /// The step bound ran out.
    BoundReached,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub trace: Trace,
    pub outcome: RunOutcome,
}

impl Run {
    /// True when the trace holds every configuration the machine will ever visit.
    pub fn is_complete(&self) -> bool {
        !matches!(self.outcome, RunOutcome::BoundReached)
    }
}

/// Runs at most `bound` steps, stopping early at a halt or at the first
/// configuration that would repeat.
pub fn run_trace(program: &Program, start: Config, bound: usize) -> Run {
    let mut trace = Trace::start(start);
    let mut seen: HashMap<Config, usize> = HashMap::from([(start, 0)]);
    let mut current = start;
    for _ in 0..bound {
        let Some((next, ins)) = step(program, current) else {
            return Run {
                trace,
                outcome: RunOutcome::Halted,
            };
        };
        if let Some(&index) = seen.get(&next) {
            return Run {
                trace,
                outcome: RunOutcome::Looped { index },
            };
        }
        seen.insert(next, trace.configs.len());
        trace.configs.push(next);
        trace.instrs.push(ins);
        current = next;
    }
    // The bound may coincide with a halt or a loop; look one step ahead.
    let outcome = match step(program, current) {
        None => RunOutcome::Halted,
        Some((next, _)) => match seen.get(&next) {
            Some(&index) => RunOutcome::Looped { index },
            None => RunOutcome::BoundReached,
        },
    };
    Run { trace, outcome }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reachability {
    /// The computation from the start up to the first visit of the target.
    Yes(Trace),
    /// The run halts or loops without visiting the target.
    No,
    /// The bound ran out first.
    Unknown,
}

pub fn reaches(program: &Program, a: Config, b: Config, bound: usize) -> Reachability {
    let run = run_trace(program, a, bound);
    if let Some(pos) = run.trace.configs.iter().position(|&c| c == b) {
        return Reachability::Yes(run.trace.prefix(pos));
    }
    if run.is_complete() {
        Reachability::No
    } else {
        Reachability::Unknown
    }
}
