//! Compiling a Minsky program and a pair of configurations into formulas,
//! plus the finite frame on which the compiled axioms hold.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, Modality};
use crate::kripke::{transitive_closure, Frame, KripkeError};
use crate::minsky::{run_trace, Config, Instruction, Program, Run, RunOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("the run from {start} neither halts nor loops within {bound} steps")]
    TruncationUnsound { start: Config, bound: usize },
    #[error(transparent)]
    Kripke(#[from] KripkeError),
}

/// How the existential "somewhere" is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// `<u>φ`.
    Universal,
    /// `<h>(n & <h>φ)` for the designated nominal `n`.
    Hybrid(u32),
}

impl Mode {
    pub fn is_hybrid(&self) -> bool {
        matches!(self, Mode::Hybrid(_))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Universal => f.write_str("universal"),
            Mode::Hybrid(n) => write!(f, "hybrid(n{n})"),
        }
    }
}

/// The variable-free formulas that pin down individual points of the
/// canonical frame. `A(i, j)` is the `j`-th point of tower `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CharName {
    Alpha,
    Beta,
    Gamma,
    Delta,
    Delta1,
    Delta2,
    Gamma1,
    Gamma2,
    A(u8, u64),
}

impl CharName {
    pub const BASE: [CharName; 8] = [
        CharName::Alpha,
        CharName::Beta,
        CharName::Gamma,
        CharName::Delta,
        CharName::Delta1,
        CharName::Delta2,
        CharName::Gamma1,
        CharName::Gamma2,
    ];

    /// Name of the point this formula characterises.
    pub fn point_name(&self) -> String {
        match self {
            CharName::Alpha => "a".into(),
            CharName::Beta => "b".into(),
            CharName::Gamma => "g".into(),
            CharName::Delta => "d".into(),
            CharName::Delta1 => "d1".into(),
            CharName::Delta2 => "d2".into(),
            CharName::Gamma1 => "g1".into(),
            CharName::Gamma2 => "g2".into(),
            CharName::A(i, j) => format!("a{i}_{j}"),
        }
    }
}

impl fmt::Display for CharName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharName::A(i, j) => write!(f, "A({i},{j})"),
            other => fmt::Debug::fmt(other, f),
        }
    }
}

/// Parses `(x,y,z)`-style argument lists.
fn parse_args(s: &str, prefix: &str) -> Option<Vec<u64>> {
    let body = s
        .strip_prefix(prefix)?
        .strip_prefix('(')?
        .strip_suffix(')')?;
    body.split(',').map(|p| p.trim().parse().ok()).collect()
}

impl FromStr for CharName {
    type Err = String;

    fn from_str(s: &str) -> Result<CharName, String> {
        if let Some(base) = CharName::BASE.iter().find(|c| format!("{c:?}") == s) {
            return Ok(*base);
        }
        match parse_args(s, "A").as_deref() {
            Some(&[i, j]) if i <= 2 => Ok(CharName::A(i as u8, j)),
            _ => Err(format!("unknown point label {s:?}")),
        }
    }
}

fn char_cache() -> &'static Mutex<HashMap<CharName, Formula>> {
    static CACHE: OnceLock<Mutex<HashMap<CharName, Formula>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// The characteristic formula of `name`. Results are cached process-wide so
/// that every occurrence of a tower formula is the same shared node.
pub fn char_formula(name: CharName) -> Formula {
    if let Some(f) = char_cache().lock().unwrap().get(&name) {
        return f.clone();
    }
    // Dependencies are fetched through the cache before we take the lock again.
    let built = build_char(name);
    char_cache()
        .lock()
        .unwrap()
        .entry(name)
        .or_insert(built)
        .clone()
}

fn not_dia(f: Formula) -> Formula {
    Formula::not(Formula::dia(f))
}

fn not_dia2(f: Formula) -> Formula {
    Formula::not(Formula::dia2(f))
}

fn build_char(name: CharName) -> Formula {
    use CharName::*;
    let c = char_formula;
    let dia = Formula::dia;
    match name {
        Alpha => Formula::and(
            dia(Formula::top()),
            Formula::boxed(Modality::Rel, dia(Formula::top())),
        ),
        Beta => Formula::boxed(Modality::Rel, Formula::bot()),
        Gamma => Formula::and_all([dia(c(Alpha)), dia(c(Beta)), not_dia2(c(Beta))]),
        Delta => Formula::and_all([Formula::not(c(Gamma)), dia(c(Beta)), not_dia2(c(Beta))]),
        Delta1 => Formula::and(dia(c(Delta)), not_dia2(c(Delta))),
        Delta2 => Formula::and(dia(c(Delta1)), not_dia2(c(Delta1))),
        Gamma1 => Formula::and_all([dia(c(Gamma)), not_dia2(c(Gamma)), not_dia(c(Delta))]),
        Gamma2 => Formula::and_all([dia(c(Gamma1)), not_dia2(c(Gamma1)), not_dia(c(Delta))]),
        A(i, 0) => {
            let (g, d) = match i {
                0 => (Gamma, Delta),
                1 => (Gamma1, Delta1),
                2 => (Gamma2, Delta2),
                _ => panic!("tower index {i} out of range"),
            };
            Formula::and_all([dia(c(g)), dia(c(d)), not_dia2(c(g)), not_dia2(c(d))])
        }
        A(i, j) => {
            assert!(i <= 2, "tower index {i} out of range");
            let below = c(A(i, j - 1));
            // For j = 1 the first two conjuncts coincide; both are kept.
            let mut parts = vec![dia(c(A(i, 0))), dia(below.clone()), not_dia2(below)];
            parts.extend((0..3).filter(|&k| k != i).map(|k| not_dia(c(A(k, 0)))));
            Formula::and_all(parts)
        }
    }
}

/// `∃φ` in the given mode.
pub fn exists(phi: Formula, mode: Mode) -> Formula {
    match mode {
        Mode::Universal => Formula::diamond(Modality::Univ, phi),
        Mode::Hybrid(n) => Formula::diamond(
            Modality::Hyb,
            Formula::and(Formula::nominal(n), Formula::diamond(Modality::Hyb, phi)),
        ),
    }
}

/// Describes a point seeing tower 0 exactly up to height `t`, and seeing
/// exactly one `phi` point and one `psi` point on top of whatever lies below.
pub fn epsilon(t: u32, phi: Formula, psi: Formula) -> Formula {
    let t = t as u64;
    Formula::and_all([
        Formula::dia(char_formula(CharName::A(0, t))),
        not_dia(char_formula(CharName::A(0, t + 1))),
        Formula::dia(phi.clone()),
        not_dia2(phi),
        Formula::dia(psi.clone()),
        not_dia2(psi),
    ])
}

/// `ε(t, α¹_k, α²_l)`, the formula of the point encoding configuration `c`.
pub fn config_formula(c: Config) -> Formula {
    epsilon(
        c.state,
        char_formula(CharName::A(1, c.c1)),
        char_formula(CharName::A(2, c.c2)),
    )
}

/// `∃ε(c)`.
pub fn config_exists(c: Config, mode: Mode) -> Formula {
    exists(config_formula(c), mode)
}

/// The formulas that locate a counter value through a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CounterFormula {
    /// Counter 1 equals the height of the `p1` point.
    Pi1,
    /// Counter 1 equals one plus the height of the `p1` point.
    Pi2,
    /// Counter 2 equals the height of the `p2` point.
    Tau1,
    /// Counter 2 equals one plus the height of the `p2` point.
    Tau2,
}

pub fn pi_tau(which: CounterFormula) -> Formula {
    let (tower, var) = match which {
        CounterFormula::Pi1 | CounterFormula::Pi2 => (1u8, 1u32),
        CounterFormula::Tau1 | CounterFormula::Tau2 => (2, 2),
    };
    let base = char_formula(CharName::A(tower, 0));
    let p = Formula::var(var);
    let others = (0..3u8)
        .filter(|&k| k != tower)
        .map(|k| not_dia(char_formula(CharName::A(k, 0))));
    let mut parts = Vec::new();
    match which {
        CounterFormula::Pi1 | CounterFormula::Tau1 => {
            parts.push(Formula::or(Formula::dia(base.clone()), base));
            parts.extend(others);
            parts.push(p.clone());
            parts.push(not_dia(p));
        }
        CounterFormula::Pi2 | CounterFormula::Tau2 => {
            parts.push(Formula::dia(base));
            parts.extend(others);
            parts.push(Formula::dia(p.clone()));
            parts.push(not_dia2(p));
        }
    }
    Formula::and_all(parts)
}

/// The axiom forcing one instruction to be simulated.
pub fn ax_instruction(instr: &Instruction, mode: Mode) -> Formula {
    use CounterFormula::*;
    let e = |t: u32, phi: Formula, psi: Formula| exists(epsilon(t, phi, psi), mode);
    let (p1, p2, t1, t2) = (pi_tau(Pi1), pi_tau(Pi2), pi_tau(Tau1), pi_tau(Tau2));
    match *instr {
        Instruction::Inc1 { from, to } => Formula::implies(e(from, p1, t1.clone()), e(to, p2, t1)),
        Instruction::Inc2 { from, to } => Formula::implies(e(from, p1.clone(), t1), e(to, p1, t2)),
        Instruction::Dec1 { from, to, zero_to } => {
            let zero = char_formula(CharName::A(1, 0));
            Formula::and(
                Formula::implies(e(from, p2, t1.clone()), e(to, p1, t1.clone())),
                Formula::implies(e(from, zero.clone(), t1.clone()), e(zero_to, zero, t1)),
            )
        }
        Instruction::Dec2 { from, to, zero_to } => {
            let zero = char_formula(CharName::A(2, 0));
            Formula::and(
                Formula::implies(e(from, p1.clone(), t2), e(to, p1.clone(), t1)),
                Formula::implies(e(from, p1.clone(), zero.clone()), e(zero_to, p1, zero)),
            )
        }
    }
}

/// Box/diamond words up to this length are used by [`nom_formula`] in
/// hybrid mode.
pub const NOM_MAX_LEN: usize = 6;

/// Conjunction of `<h>n -> M<h>n` for all words `M` over `[]`, `[h]` and
/// `M'<h>n -> <h>n` for all words `M'` over `<>`, `<h>`, of length
/// `1..=max_len`. Ordered by length; within a length the box words come
/// first and words are lexicographic with the relational operator first.
pub fn nom_formula(max_len: usize, nominal: u32) -> Formula {
    Formula::and_all(nom_conjuncts(max_len, nominal))
}

pub fn nom_conjuncts(max_len: usize, nominal: u32) -> Vec<Formula> {
    assert!(max_len >= 1, "word length must be at least 1");
    let core = Formula::diamond(Modality::Hyb, Formula::nominal(nominal));
    let mut out = Vec::new();
    // words[k] holds the formulas M<h>n (resp. M'<h>n) for words of length k.
    let mut boxes = vec![core.clone()];
    let mut dias = vec![core.clone()];
    for _ in 0..max_len {
        // Prepending keeps lexicographic order when the outer loop is the
        // first letter.
        boxes = [Modality::Rel, Modality::Hyb]
            .into_iter()
            .flat_map(|m| boxes.iter().map(move |f| Formula::boxed(m, f.clone())))
            .collect();
        dias = [Modality::Rel, Modality::Hyb]
            .into_iter()
            .flat_map(|m| dias.iter().map(move |f| Formula::diamond(m, f.clone())))
            .collect();
        out.extend(
            boxes
                .iter()
                .map(|b| Formula::implies(core.clone(), b.clone())),
        );
        out.extend(
            dias.iter()
                .map(|d| Formula::implies(d.clone(), core.clone())),
        );
    }
    out
}

/// One formula per instruction, followed by the Nom conjunction in hybrid mode.
pub fn ax_program_parts(program: &Program, mode: Mode) -> Vec<Formula> {
    let mut parts: Vec<Formula> = program
        .instructions()
        .iter()
        .map(|i| ax_instruction(i, mode))
        .collect();
    if let Mode::Hybrid(n) = mode {
        parts.push(nom_formula(NOM_MAX_LEN, n));
    }
    parts
}

pub fn ax_program(program: &Program, mode: Mode) -> Formula {
    Formula::and_all(ax_program_parts(program, mode))
}

/// `(AxP ∧ ∃ε(a)) → ∃ε(b)`.
pub fn psi(program: &Program, a: Config, b: Config, mode: Mode) -> Formula {
    Formula::implies(
        Formula::and(ax_program(program, mode), config_exists(a, mode)),
        config_exists(b, mode),
    )
}

/// What a point of the canonical frame stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointLabel {
    Char(CharName),
    Config(Config),
}

impl PointLabel {
    pub fn point_name(&self) -> String {
        match self {
            PointLabel::Char(c) => c.point_name(),
            PointLabel::Config(c) => format!("e({c})"),
        }
    }

    /// The formula true at exactly this point of the canonical frame.
    pub fn formula(&self) -> Formula {
        match self {
            PointLabel::Char(c) => char_formula(*c),
            PointLabel::Config(c) => config_formula(*c),
        }
    }
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLabel::Char(c) => c.fmt(f),
            PointLabel::Config(c) => write!(f, "e({c})"),
        }
    }
}

impl FromStr for PointLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<PointLabel, String> {
        if let Some(v) = parse_args(s, "e") {
            return match v[..] {
                [t, k, l] if t <= u32::MAX as u64 => {
                    Ok(PointLabel::Config(Config::new(t as u32, k, l)))
                }
                _ => Err(format!("bad configuration label {s:?}")),
            };
        }
        s.parse().map(PointLabel::Char)
    }
}

/// The finite frame encoding a program run, with each point labelled.
#[derive(Clone, Debug)]
pub struct CanonicalFrame {
    pub frame: Frame,
    /// `labels[x]` is the label of point `x`.
    pub labels: Vec<PointLabel>,
    /// Height of the towers.
    pub height: u64,
    pub run: Run,
}

impl CanonicalFrame {
    /// The configurations that have a point in the frame.
    pub fn configs(&self) -> BTreeSet<Config> {
        self.labels
            .iter()
            .filter_map(|l| match l {
                PointLabel::Config(c) => Some(*c),
                PointLabel::Char(_) => None,
            })
            .collect()
    }

    pub fn point_of(&self, label: PointLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// `(point name, label)` pairs for the text format.
    pub fn label_pairs(&self) -> Vec<(String, String)> {
        self.labels
            .iter()
            .enumerate()
            .map(|(x, l)| (self.frame.name(x).to_string(), l.to_string()))
            .collect()
    }

    pub fn to_text(&self) -> String {
        crate::kripke::write_frame(&self.frame, &self.label_pairs())
    }
}

/// Builds the frame for the run of `program` from `start`.
///
/// The run must halt or revisit a configuration within `bound` steps; an
/// unfinished run would leave successor configurations unrepresented and the
/// frame would no longer validate the program axiom.
pub fn canonical_frame(
    program: &Program,
    start: Config,
    bound: usize,
    mode: Mode,
) -> Result<CanonicalFrame, EncodingError> {
    let run = run_trace(program, start, bound);
    if run.outcome == RunOutcome::BoundReached {
        return Err(EncodingError::TruncationUnsound { start, bound });
    }
    let configs: BTreeSet<Config> = run.trace.configs.iter().copied().collect();
    let max_state = configs
        .iter()
        .map(|c| c.state)
        .chain(program.max_state())
        .max()
        .unwrap_or(0) as u64;
    let max_counter = configs.iter().flat_map(|c| [c.c1, c.c2]).max().unwrap_or(0);
    let height = 1 + max_state.max(max_counter);

    let mut labels: Vec<PointLabel> = CharName::BASE
        .iter()
        .map(|&c| PointLabel::Char(c))
        .collect();
    for i in 0..3 {
        labels.extend((0..=height).map(|j| PointLabel::Char(CharName::A(i, j))));
    }
    labels.extend(configs.iter().map(|&c| PointLabel::Config(c)));

    use CharName::*;
    let ch = PointLabel::Char;
    let mut base: BTreeSet<(PointLabel, PointLabel)> = [
        (Alpha, Alpha),
        (Gamma, Alpha),
        (Gamma, Beta),
        (Delta, Beta),
        (Gamma1, Gamma),
        (Gamma2, Gamma1),
        (Delta1, Delta),
        (Delta2, Delta1),
        (A(0, 0), Gamma),
        (A(0, 0), Delta),
        (A(1, 0), Gamma1),
        (A(1, 0), Delta1),
        (A(2, 0), Gamma2),
        (A(2, 0), Delta2),
    ]
    .into_iter()
    .map(|(x, y)| (ch(x), ch(y)))
    .collect();
    for i in 0..3 {
        for j in 0..height {
            base.insert((ch(A(i, j + 1)), ch(A(i, j))));
        }
    }
    for &c in &configs {
        let e = PointLabel::Config(c);
        base.insert((e, ch(A(0, c.state as u64))));
        base.insert((e, ch(A(1, c.c1))));
        base.insert((e, ch(A(2, c.c2))));
    }

    let index: BTreeMap<PointLabel, usize> =
        labels.iter().enumerate().map(|(x, &l)| (l, x)).collect();
    let r: Vec<(usize, usize)> = transitive_closure(&base)
        .into_iter()
        .map(|(x, y)| (index[&x], index[&y]))
        .collect();
    let n = labels.len();
    let s = mode.is_hybrid().then(|| {
        (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .collect::<Vec<_>>()
    });
    let frame = Frame::new(labels.iter().map(PointLabel::point_name).collect(), r, s)?;
    Ok(CanonicalFrame {
        frame,
        labels,
        height,
        run,
    })
}
