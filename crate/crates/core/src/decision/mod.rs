//! Satisfiability and validity for K with the universal modality and for K
//! with nominals and a second relation.
//!
//! Two engines are available:
//!
//! * [`Engine::Global`] (Ku only) first fixes a truth value for every
//!   `[u]`/`<u>` subformula, innermost first, which turns the problem into
//!   plain K with a global assumption set and a list of formulas that must be
//!   realised somewhere. Each of those is decided by a SAT-driven K procedure
//!   that caches results per set of formulas. The model is the disjoint union
//!   of the pieces.
//! * [`Engine::Graph`] is a labelled tableau over a graph of labels with
//!   anywhere blocking on equal content, a global box set and destructive
//!   merging of labels that share a nominal. It handles both logics.
//!
//! Every `Sat` answer carries a model that has been re-checked with
//! [`model_check`](crate::kripke::model_check).

mod global;
mod graph;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::formula::{Formula, INode, Interner, Language, Modality, Node, NodeId};
use crate::kripke::{model_check, Frame, KripkeError, Model, Valuation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Logic {
    Ku,
    KH2,
}

impl Logic {
    pub fn language(&self) -> Language {
        match self {
            Logic::Ku => Language::L,
            Logic::KH2 => Language::H2,
        }
    }
}

impl std::fmt::Display for Logic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Logic::Ku => "Ku",
            Logic::KH2 => "KH2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("formula is not in the language of {0}")]
    LanguageMismatch(Logic),
    #[error("tableau exceeded its budget of {0} labels")]
    ResourceLimit(usize),
    #[error("the global engine only decides Ku")]
    EngineMismatch,
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Kripke(#[from] KripkeError),
}

impl From<crate::propsat::SatError> for DecisionError {
    fn from(e: crate::propsat::SatError) -> Self {
        match e {
            crate::propsat::SatError::ResourceLimit(n) => DecisionError::ResourceLimit(n as usize),
            other => DecisionError::Internal(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Engine {
    /// Global engine for Ku, graph tableau for KH2.
    #[default]
    Auto,
    Global,
    Graph,
}

#[derive(Clone, Copy, Debug)]
pub struct DecisionOptions {
    /// Upper bound on labels (graph engine) or explored formula sets
    /// (global engine).
    pub label_budget: usize,
    pub engine: Engine,
}

impl Default for DecisionOptions {
    fn default() -> Self {
        DecisionOptions {
            label_budget: 50_000,
            engine: Engine::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Satisfiability {
    /// `point` of `model` satisfies the formula.
    Sat {
        model: Model,
        point: usize,
    },
    Unsat,
}

impl Satisfiability {
    pub fn is_sat(&self) -> bool {
        matches!(self, Satisfiability::Sat { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    /// The formula is false at `point` of `model`.
    CounterModel {
        model: Model,
        point: usize,
    },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Work done by one decision run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Stats {
    /// Labels created (graph) or formula sets explored (global).
    pub labels: usize,
    /// Truth assignments tried for the `[u]`/`<u>` subformulas (global only).
    pub guesses: usize,
}

pub fn satisfiable(phi: &Formula, logic: Logic) -> Result<Satisfiability, DecisionError> {
    satisfiable_with(phi, logic, &DecisionOptions::default()).map(|(r, _)| r)
}

pub fn satisfiable_with(
    phi: &Formula,
    logic: Logic,
    options: &DecisionOptions,
) -> Result<(Satisfiability, Stats), DecisionError> {
    phi.check_language(logic.language())
        .map_err(|_| DecisionError::LanguageMismatch(logic))?;
    let engine = match (options.engine, logic) {
        (Engine::Auto, Logic::Ku) => Engine::Global,
        (Engine::Auto, Logic::KH2) => Engine::Graph,
        (Engine::Global, Logic::KH2) => return Err(DecisionError::EngineMismatch),
        (e, _) => e,
    };
    let (raw, stats) = match engine {
        Engine::Global => global::satisfiable(phi, options.label_budget)?,
        _ => graph::satisfiable(phi, options.label_budget)?,
    };
    let result = match raw {
        None => Satisfiability::Unsat,
        Some(built) => {
            let (model, point) = built.finish(phi, logic)?;
            if !model_check(&model, point, phi)? {
                return Err(DecisionError::Internal(format!(
                    "{engine:?} engine returned a model that does not satisfy the formula"
                )));
            }
            Satisfiability::Sat { model, point }
        }
    };
    Ok((result, stats))
}

pub fn valid(phi: &Formula, logic: Logic) -> Result<Validity, DecisionError> {
    valid_with(phi, logic, &DecisionOptions::default()).map(|(r, _)| r)
}

pub fn valid_with(
    phi: &Formula,
    logic: Logic,
    options: &DecisionOptions,
) -> Result<(Validity, Stats), DecisionError> {
    let (sat, stats) = satisfiable_with(&Formula::not(phi.clone()), logic, options)?;
    Ok((
        match sat {
            Satisfiability::Unsat => Validity::Valid,
            Satisfiability::Sat { model, point } => Validity::CounterModel { model, point },
        },
        stats,
    ))
}

/// Model under construction: points are numbered from 0.
#[derive(Default)]
pub(crate) struct ModelBuilder {
    points: usize,
    r: BTreeSet<(usize, usize)>,
    s: BTreeSet<(usize, usize)>,
    vars: BTreeMap<u32, BTreeSet<usize>>,
    noms: BTreeMap<u32, usize>,
    root: usize,
}

impl ModelBuilder {
    fn add_point(&mut self) -> usize {
        self.points += 1;
        self.points - 1
    }

    fn add_edge(&mut self, m: Modality, x: usize, y: usize) {
        match m {
            Modality::Rel => self.r.insert((x, y)),
            Modality::Hyb => self.s.insert((x, y)),
            Modality::Univ => panic!("no explicit edges for the universal modality"),
        };
    }

    fn set_var(&mut self, v: u32, x: usize) {
        self.vars.entry(v).or_default().insert(x);
    }

    /// Fills in symbols the engine never mentioned and builds the model.
    fn finish(mut self, phi: &Formula, logic: Logic) -> Result<(Model, usize), DecisionError> {
        if self.points == 0 {
            return Err(DecisionError::Internal("empty model".into()));
        }
        for v in phi.variables() {
            self.vars.entry(v).or_default();
        }
        for i in phi.nominals() {
            self.noms.entry(i).or_insert(0);
        }
        let s = (logic == Logic::KH2).then(|| self.s.into_iter().collect());
        let frame = Frame::anonymous(self.points, self.r, s);
        let valuation = Valuation {
            vars: self.vars,
            noms: self.noms,
        };
        Ok((Model::new(frame, valuation)?, self.root))
    }
}

/// Negation normal form over interned ids: negations sit on atoms only and
/// implications and biconditionals are expanded.
#[derive(Default)]
pub(crate) struct Nnf {
    memo: HashMap<(NodeId, bool), NodeId>,
}

impl Nnf {
    /// NNF of `id` (of its negation when `positive` is false).
    pub(crate) fn of(&mut self, int: &mut Interner, id: NodeId, positive: bool) -> NodeId {
        if let Some(&out) = self.memo.get(&(id, positive)) {
            return out;
        }
        let out = match int.node(id) {
            INode::Var(_) | INode::Nominal(_) => {
                if positive {
                    id
                } else {
                    int.mk(INode::Not(id))
                }
            }
            INode::Top | INode::Bot => {
                let top = matches!(int.node(id), INode::Top) == positive;
                int.mk(if top { INode::Top } else { INode::Bot })
            }
            INode::Not(a) => self.of(int, a, !positive),
            INode::And(a, b) | INode::Or(a, b) => {
                let (x, y) = (self.of(int, a, positive), self.of(int, b, positive));
                if matches!(int.node(id), INode::And(..)) == positive {
                    int.mk(INode::And(x, y))
                } else {
                    int.mk(INode::Or(x, y))
                }
            }
            INode::Implies(a, b) => {
                let (x, y) = (self.of(int, a, !positive), self.of(int, b, positive));
                int.mk(if positive {
                    INode::Or(x, y)
                } else {
                    INode::And(x, y)
                })
            }
            INode::Iff(a, b) => {
                let (ap, an) = (self.of(int, a, true), self.of(int, a, false));
                let (bp, bn) = (self.of(int, b, true), self.of(int, b, false));
                let (l, r) = if positive {
                    (int.mk(INode::And(ap, bp)), int.mk(INode::And(an, bn)))
                } else {
                    (int.mk(INode::And(ap, bn)), int.mk(INode::And(an, bp)))
                };
                int.mk(INode::Or(l, r))
            }
            INode::Box(m, a) | INode::Diamond(m, a) => {
                let x = self.of(int, a, positive);
                if matches!(int.node(id), INode::Box(..)) == positive {
                    int.mk(INode::Box(m, x))
                } else {
                    int.mk(INode::Diamond(m, x))
                }
            }
        };
        self.memo.insert((id, positive), out);
        out
    }
}

/// Replaces the formulas in `fixed` by constants and folds constants upward.
pub(crate) fn fold(phi: &Formula, fixed: &HashMap<Formula, bool>) -> Formula {
    let mut memo: HashMap<*const (), Formula> = HashMap::new();
    for f in phi.postorder() {
        let out = if let Some(&b) = fixed.get(&f) {
            constant(b)
        } else {
            let get = |x: &Formula| memo[&x.ptr()].clone();
            match f.node() {
                Node::Var(_) | Node::Nominal(_) | Node::Top | Node::Bot => f.clone(),
                Node::Not(a) => negate(get(a)),
                Node::And(a, b) => match (get(a), get(b)) {
                    (x, y) if is_bot(&x) || is_bot(&y) => Formula::bot(),
                    (x, y) if is_top(&x) => y,
                    (x, y) if is_top(&y) => x,
                    (x, y) => Formula::and(x, y),
                },
                Node::Or(a, b) => match (get(a), get(b)) {
                    (x, y) if is_top(&x) || is_top(&y) => Formula::top(),
                    (x, y) if is_bot(&x) => y,
                    (x, y) if is_bot(&y) => x,
                    (x, y) => Formula::or(x, y),
                },
                Node::Implies(a, b) => match (get(a), get(b)) {
                    (x, y) if is_bot(&x) || is_top(&y) => Formula::top(),
                    (x, y) if is_top(&x) => y,
                    (x, y) if is_bot(&y) => negate(x),
                    (x, y) => Formula::implies(x, y),
                },
                Node::Iff(a, b) => match (get(a), get(b)) {
                    (x, y) if is_top(&x) => y,
                    (x, y) if is_top(&y) => x,
                    (x, y) if is_bot(&x) => negate(y),
                    (x, y) if is_bot(&y) => negate(x),
                    (x, y) => Formula::iff(x, y),
                },
                Node::Box(m, a) => match get(a) {
                    x if is_top(&x) => Formula::top(),
                    x => Formula::boxed(*m, x),
                },
                Node::Diamond(m, a) => match get(a) {
                    x if is_bot(&x) => Formula::bot(),
                    x => Formula::diamond(*m, x),
                },
            }
        };
        memo.insert(f.ptr(), out);
    }
    memo.remove(&phi.ptr()).expect("root visited")
}

fn constant(b: bool) -> Formula {
    if b {
        Formula::top()
    } else {
        Formula::bot()
    }
}

fn is_top(f: &Formula) -> bool {
    matches!(f.node(), Node::Top)
}

fn is_bot(f: &Formula) -> bool {
    matches!(f.node(), Node::Bot)
}

fn negate(f: Formula) -> Formula {
    match f.node() {
        Node::Top => Formula::bot(),
        Node::Bot => Formula::top(),
        Node::Not(a) => a.clone(),
        _ => Formula::not(f),
    }
}
