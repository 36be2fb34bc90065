//! Seeded random formulas, terms and models for property tests and the
//! random-model suite.

use std::collections::BTreeSet;

use rand::Rng;

use crate::eqtheory::{Op, Term};
use crate::formula::{Formula, Language, Modality};
use crate::kripke::{random_frame_rng, random_valuation, Model, RandomFrameConfig};

#[derive(Clone, Copy, Debug)]
pub struct FormulaConfig {
    pub language: Language,
    /// Variables are drawn from `p1..=p<vars>`.
    pub vars: u32,
    /// Nominals are drawn from `n1..=n<nominals>` (H2 only).
    pub nominals: u32,
    pub depth: u32,
    /// Allow `|`, `->` and `<->` besides `~` and `&`.
    pub full_syntax: bool,
}

impl FormulaConfig {
    pub fn new(language: Language, vars: u32, depth: u32) -> FormulaConfig {
        FormulaConfig {
            language,
            vars,
            nominals: if language == Language::H2 { 1 } else { 0 },
            depth,
            full_syntax: true,
        }
    }
}

pub fn random_formula<R: Rng>(rng: &mut R, config: &FormulaConfig) -> Formula {
    formula_at(rng, config, config.depth)
}

fn atom<R: Rng>(rng: &mut R, config: &FormulaConfig) -> Formula {
    let roll: f64 = rng.gen();
    if roll < 0.15 {
        Formula::top()
    } else if roll < 0.3 {
        Formula::bot()
    } else if config.nominals > 0 && (roll < 0.5 || config.vars == 0) {
        Formula::nominal(rng.gen_range(1..=config.nominals))
    } else if config.vars > 0 {
        Formula::var(rng.gen_range(1..=config.vars))
    } else {
        Formula::top()
    }
}

fn formula_at<R: Rng>(rng: &mut R, config: &FormulaConfig, depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return atom(rng, config);
    }
    let second = match config.language {
        Language::L => Modality::Univ,
        Language::H2 => Modality::Hyb,
    };
    let sub = |rng: &mut R| formula_at(rng, config, depth - 1);
    let choices = if config.full_syntax { 8 } else { 5 };
    match rng.gen_range(0..choices) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => {
            let m = if rng.gen_bool(0.5) {
                Modality::Rel
            } else {
                second
            };
            Formula::boxed(m, sub(rng))
        }
        3 => {
            let m = if rng.gen_bool(0.5) {
                Modality::Rel
            } else {
                second
            };
            Formula::diamond(m, sub(rng))
        }
        4 => Formula::and(Formula::not(sub(rng)), sub(rng)),
        5 => Formula::or(sub(rng), sub(rng)),
        6 => Formula::implies(sub(rng), sub(rng)),
        _ => Formula::iff(sub(rng), sub(rng)),
    }
}

pub fn random_term<R: Rng>(rng: &mut R, vars: u32, depth: u32) -> Term {
    if depth == 0 || rng.gen_bool(0.2) {
        return if vars == 0 || rng.gen_bool(0.2) {
            Term::One
        } else {
            Term::var(rng.gen_range(1..=vars))
        };
    }
    match rng.gen_range(0..4) {
        0 => Term::meet(
            random_term(rng, vars, depth - 1),
            random_term(rng, vars, depth - 1),
        ),
        1 => Term::complement(random_term(rng, vars, depth - 1)),
        2 => Term::boxed(Op::First, random_term(rng, vars, depth - 1)),
        _ => Term::boxed(Op::Second, random_term(rng, vars, depth - 1)),
    }
}

/// Random frame of the given kind plus a random valuation of every symbol of
/// `phi`.
pub fn random_model_for<R: Rng>(rng: &mut R, phi: &Formula, frame: RandomFrameConfig) -> Model {
    let frame = random_frame_rng(rng, frame);
    let vars: BTreeSet<u32> = phi.variables();
    let noms: BTreeSet<u32> = phi.nominals();
    let valuation = random_valuation(rng, &frame, &vars, &noms);
    Model::new(frame, valuation).expect("valuation built for this frame")
}
