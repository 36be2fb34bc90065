//! The explicit unifier for a reachable target configuration.

use thiserror::Error;

use crate::encoding::{char_formula, config_exists, CharName, Mode};
use crate::formula::{Formula, Substitution};
use crate::minsky::{reaches, Config, Instruction, Program, Reachability, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("{target} is not reachable from {start}")]
    NotReachable { start: Config, target: Config },
    #[error("reachability of {target} from {start} is undetermined within {bound} steps")]
    Undetermined {
        start: Config,
        target: Config,
        bound: usize,
    },
    #[error("defect index {index} out of range for a trace of {len} steps")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Defect formulas for every step of a trace, built with shared prefixes.
#[derive(Clone, Debug)]
pub struct Defects {
    formulas: Vec<Formula>,
}

impl Defects {
    pub fn new(trace: &Trace, mode: Mode) -> Defects {
        let exists: Vec<Formula> = trace
            .configs
            .iter()
            .map(|&c| config_exists(c, mode))
            .collect();
        let mut formulas = Vec::with_capacity(trace.len());
        let mut prefix = exists[0].clone();
        for i in 0..trace.len() {
            if i > 0 {
                prefix = Formula::and(prefix, exists[i].clone());
            }
            formulas.push(Formula::and(
                prefix.clone(),
                Formula::not(exists[i + 1].clone()),
            ));
        }
        Defects { formulas }
    }

    pub fn get(&self, i: usize) -> Result<&Formula, WitnessError> {
        self.formulas.get(i).ok_or(WitnessError::IndexOutOfRange {
            index: i,
            len: self.formulas.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }
}

/// The run simulated correctly up to step `i` and broken at step `i + 1`.
pub fn defect(i: usize, trace: &Trace, mode: Mode) -> Result<Formula, WitnessError> {
    if i >= trace.len() {
        return Err(WitnessError::IndexOutOfRange {
            index: i,
            len: trace.len(),
        });
    }
    Defects::new(&trace.prefix(i + 1), mode).get(i).cloned()
}

/// Tower height that `p1` (counter 1) or `p2` (counter 2) picks out at step `i`.
/// It is one below the counter exactly when the next instruction is a
/// decrement of that counter that actually fires.
pub fn shifted_height(trace: &Trace, i: usize, counter: u8) -> u64 {
    let c = trace.configs[i];
    let (value, decrements) = match (counter, trace.instrs[i]) {
        (1, Instruction::Dec1 { .. }) => (c.c1, true),
        (1, _) => (c.c1, false),
        (2, Instruction::Dec2 { .. }) => (c.c2, true),
        (2, _) => (c.c2, false),
        _ => panic!("counter must be 1 or 2"),
    };
    if decrements && value != 0 {
        value - 1
    } else {
        value
    }
}

/// `ᾱ` for the given step and counter.
pub fn shifted_alpha(trace: &Trace, i: usize, counter: u8) -> Formula {
    char_formula(CharName::A(counter, shifted_height(trace, i, counter)))
}

/// σ(p1) = ⋁ᵢ defectᵢ ∧ ᾱ¹ᵢ and σ(p2) = ⋁ᵢ defectᵢ ∧ ᾱ²ᵢ; both are ⊥ for a
/// zero-step trace.
pub fn witness_for_trace(trace: &Trace, mode: Mode) -> Substitution {
    let defects = Defects::new(trace, mode);
    let disjunction = |counter: u8| {
        Formula::or_all((0..trace.len()).map(|i| {
            Formula::and(
                defects.formulas[i].clone(),
                shifted_alpha(trace, i, counter),
            )
        }))
    };
    [(1, disjunction(1)), (2, disjunction(2))]
        .into_iter()
        .collect()
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub trace: Trace,
    pub substitution: Substitution,
}

/// Runs the machine and builds the unifier when `target` is reached within `bound`.
pub fn witness_substitution(
    program: &Program,
    start: Config,
    target: Config,
    bound: usize,
    mode: Mode,
) -> Result<Witness, WitnessError> {
    match reaches(program, start, target, bound) {
        Reachability::Yes(trace) => Ok(Witness {
            substitution: witness_for_trace(&trace, mode),
            trace,
        }),
        Reachability::No => Err(WitnessError::NotReachable { start, target }),
        Reachability::Unknown => Err(WitnessError::Undetermined {
            start,
            target,
            bound,
        }),
    }
}

/// What σ(π1), σ(τ1), σ(π2) and σ(τ2) should be equivalent to wherever
/// defect `i` holds.
#[derive(Clone, Debug)]
pub struct LookupTargets {
    pub pi1: Formula,
    pub tau1: Formula,
    pub pi2: Formula,
    pub tau2: Formula,
}

pub fn lookup_targets(trace: &Trace, i: usize) -> LookupTargets {
    let h1 = shifted_height(trace, i, 1);
    let h2 = shifted_height(trace, i, 2);
    LookupTargets {
        pi1: char_formula(CharName::A(1, h1)),
        tau1: char_formula(CharName::A(2, h2)),
        pi2: char_formula(CharName::A(1, h1 + 1)),
        tau2: char_formula(CharName::A(2, h2 + 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Node;

    fn run(prog: &str, a: Config, b: Config) -> Witness {
        witness_substitution(&Program::parse(prog).unwrap(), a, b, 100, Mode::Universal).unwrap()
    }

    #[test]
    fn zero_steps_give_bottom() {
        let a = Config::new(1, 0, 0);
        let w = run("", a, a);
        assert_eq!(w.substitution.get(1), Some(&Formula::bot()));
        assert_eq!(w.substitution.get(2), Some(&Formula::bot()));
    }

    #[test]
    fn increment_keeps_height() {
        let w = run("1 -> 2,+1,0", Config::new(1, 0, 0), Config::new(2, 1, 0));
        let d0 = defect(0, &w.trace, Mode::Universal).unwrap();
        assert_eq!(
            w.substitution.get(1),
            Some(&Formula::and(d0, char_formula(CharName::A(1, 0))))
        );
    }

    #[test]
    fn firing_decrement_shifts_down() {
        let w = run(
            "1 -> 2,-1,0 | 9,0,0",
            Config::new(1, 1, 0),
            Config::new(2, 0, 0),
        );
        let d0 = defect(0, &w.trace, Mode::Universal).unwrap();
        assert_eq!(
            w.substitution.get(1),
            Some(&Formula::and(d0.clone(), char_formula(CharName::A(1, 0))))
        );
        assert_eq!(
            w.substitution.get(2),
            Some(&Formula::and(d0, char_formula(CharName::A(2, 0))))
        );
        // Zero branch: no shift.
        let w = run(
            "1 -> 2,-1,0 | 9,0,0",
            Config::new(1, 0, 3),
            Config::new(9, 0, 3),
        );
        assert_eq!(shifted_height(&w.trace, 0, 1), 0);
        assert_eq!(shifted_height(&w.trace, 0, 2), 3);
    }

    #[test]
    fn defect_shape() {
        let w = run(
            "1 -> 2,+1,0\n2 -> 3,0,+1",
            Config::new(1, 0, 0),
            Config::new(3, 1, 1),
        );
        let c = &w.trace.configs;
        let d0 = defect(0, &w.trace, Mode::Universal).unwrap();
        assert_eq!(
            d0,
            Formula::and(
                config_exists(c[0], Mode::Universal),
                Formula::not(config_exists(c[1], Mode::Universal))
            )
        );
        let d1 = defect(1, &w.trace, Mode::Universal).unwrap();
        assert!(d1.is_variable_free());
        assert!(matches!(d1.node(), Node::And(_, _)));
        assert_eq!(
            defect(2, &w.trace, Mode::Universal),
            Err(WitnessError::IndexOutOfRange { index: 2, len: 2 })
        );
    }

    #[test]
    fn unreachable_targets() {
        let p = Program::empty();
        assert!(matches!(
            witness_substitution(
                &p,
                Config::new(1, 0, 0),
                Config::new(2, 0, 0),
                10,
                Mode::Universal
            ),
            Err(WitnessError::NotReachable { .. })
        ));
        let p = Program::parse("1 -> 1,+1,0").unwrap();
        assert!(matches!(
            witness_substitution(
                &p,
                Config::new(1, 0, 0),
                Config::new(2, 0, 0),
                10,
                Mode::Universal
            ),
            Err(WitnessError::Undetermined { .. })
        ));
    }

    #[test]
    fn hybrid_witness_uses_nominal() {
        let w = witness_substitution(
            &Program::parse("1 -> 2,+1,0").unwrap(),
            Config::new(1, 0, 0),
            Config::new(2, 1, 0),
            10,
            Mode::Hybrid(1),
        )
        .unwrap();
        let s1 = w.substitution.get(1).unwrap();
        assert_eq!(s1.nominals(), [1].into());
        assert!(!s1.has_modality(crate::formula::Modality::Univ));
    }
}
