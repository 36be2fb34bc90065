use crate::formula::{Formula, INode, Interner, Modality};
use crate::propsat::{SatError, SatResult, Solver, TLit, Tseitin};

use super::{model_check, Frame, KripkeError, Model, Valuation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameValidity {
    Valid,
    /// A valuation and a point at which the formula is false.
    CounterModel {
        valuation: Valuation,
        point: usize,
    },
}

impl FrameValidity {
    pub fn is_valid(&self) -> bool {
        matches!(self, FrameValidity::Valid)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ValidityOptions {
    pub clause_budget: usize,
    pub conflict_budget: u64,
}

impl Default for ValidityOptions {
    fn default() -> Self {
        ValidityOptions {
            clause_budget: 20_000_000,
            conflict_budget: 5_000_000,
        }
    }
}

/// Decides `frame ⊨ phi` with the default budgets.
pub fn frame_valid(frame: &Frame, phi: &Formula) -> Result<FrameValidity, KripkeError> {
    frame_valid_with(frame, phi, ValidityOptions::default())
}

/// Decides frame validity by a propositional encoding: one atom per
/// (variable, point) and (nominal, point), one gate per (subformula, point),
/// and a final clause asking for a point where `phi` fails.
pub fn frame_valid_with(
    frame: &Frame,
    phi: &Formula,
    options: ValidityOptions,
) -> Result<FrameValidity, KripkeError> {
    frame.check_formula(phi)?;
    let n = frame.len();
    let mut interner = Interner::new();
    let root = interner.intern(phi);
    let mut ts = Tseitin::new();

    let vars = phi.variables();
    let noms = phi.nominals();
    let var_atoms: Vec<(u32, Vec<i32>)> = vars
        .iter()
        .map(|&v| (v, (0..n).map(|_| ts.fresh()).collect()))
        .collect();
    let nom_atoms: Vec<(u32, Vec<i32>)> = noms
        .iter()
        .map(|&i| (i, (0..n).map(|_| ts.fresh()).collect()))
        .collect();
    for (_, atoms) in &nom_atoms {
        ts.cnf.add_clause(atoms.iter().copied());
        for x in 0..n {
            for y in x + 1..n {
                ts.cnf.add_clause([-atoms[x], -atoms[y]]);
            }
        }
    }
    let lookup = |table: &[(u32, Vec<i32>)], key: u32| -> Vec<TLit> {
        table
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, a)| a.iter().map(|&l| TLit::Atom(l)).collect())
            .expect("symbol collected above")
    };

    let mut lits: Vec<Vec<TLit>> = Vec::with_capacity(interner.len());
    for id in 0..interner.len() {
        let node = interner.node(id as u32);
        let get = |lits: &Vec<Vec<TLit>>, c: u32| lits[c as usize].clone();
        let row: Vec<TLit> = match node {
            INode::Var(v) => lookup(&var_atoms, v),
            INode::Nominal(i) => lookup(&nom_atoms, i),
            INode::Top => vec![TLit::Const(true); n],
            INode::Bot => vec![TLit::Const(false); n],
            INode::Not(a) => get(&lits, a).into_iter().map(TLit::negate).collect(),
            INode::And(a, b) | INode::Or(a, b) | INode::Implies(a, b) | INode::Iff(a, b) => {
                let (ra, rb) = (get(&lits, a), get(&lits, b));
                (0..n)
                    .map(|x| match node {
                        INode::And(..) => ts.and(&[ra[x], rb[x]]),
                        INode::Or(..) => ts.or(&[ra[x], rb[x]]),
                        INode::Implies(..) => ts.or(&[ra[x].negate(), rb[x]]),
                        _ => ts.iff(ra[x], rb[x]),
                    })
                    .collect()
            }
            INode::Box(Modality::Univ, a) => {
                let g = ts.and(&lits[a as usize]);
                vec![g; n]
            }
            INode::Diamond(Modality::Univ, a) => {
                let g = ts.or(&lits[a as usize]);
                vec![g; n]
            }
            INode::Box(m, a) | INode::Diamond(m, a) => {
                let ra = &lits[a as usize];
                let is_box = matches!(node, INode::Box(..));
                (0..n)
                    .map(|x| {
                        let succ: Vec<TLit> =
                            frame.successors(m, x).iter().map(|&y| ra[y]).collect();
                        if is_box {
                            ts.and(&succ)
                        } else {
                            ts.or(&succ)
                        }
                    })
                    .collect()
            }
        };
        lits.push(row);
        if ts.cnf.clauses.len() > options.clause_budget {
            return Err(KripkeError::ResourceLimit(options.clause_budget));
        }
    }

    let falsified: Vec<TLit> = lits[root as usize].iter().map(|l| l.negate()).collect();
    ts.assert_clause(&falsified);
    let result = Solver::with_conflict_budget(options.conflict_budget)
        .solve(&ts.cnf)
        .map_err(|e| match e {
            SatError::ResourceLimit(b) => KripkeError::SolverBudget(b),
            other => panic!("encoding produced malformed CNF: {other}"),
        })?;
    let assignment = match result {
        SatResult::Unsat => return Ok(FrameValidity::Valid),
        SatResult::Sat(a) => a,
    };
    let value = |l: TLit| match l {
        TLit::Const(b) => b,
        TLit::Atom(a) => assignment[a.unsigned_abs() as usize] == (a > 0),
    };
    let mut valuation = Valuation::new();
    for (v, atoms) in &var_atoms {
        valuation.vars.insert(
            *v,
            (0..n).filter(|&x| value(TLit::Atom(atoms[x]))).collect(),
        );
    }
    for (i, atoms) in &nom_atoms {
        let at = (0..n)
            .find(|&x| value(TLit::Atom(atoms[x])))
            .expect("exactly-one constraint");
        valuation.noms.insert(*i, at);
    }
    let point = (0..n)
        .find(|&x| !value(lits[root as usize][x]))
        .expect("final clause forces a falsified point");
    let model = Model::new(frame.clone(), valuation)?;
    assert!(
        !model_check(&model, point, phi)?,
        "frame_valid produced a counter-model that does not falsify the formula"
    );
    Ok(FrameValidity::CounterModel {
        valuation: model.valuation,
        point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, Language};

    fn l(s: &str) -> Formula {
        parse(s, Language::L).unwrap()
    }

    #[test]
    fn tautology_is_valid() {
        let f = Frame::anonymous(3, [(0, 1), (1, 2)], None);
        assert!(frame_valid(&f, &l("p1 | ~p1")).unwrap().is_valid());
    }

    #[test]
    fn chain_counter_model() {
        // x -> y, irreflexive. Brute force over the four valuations of p1.
        let f = Frame::anonymous(2, [(0, 1)], None);
        let phi = l("p1 -> <>p1");
        let mut falsifiers = Vec::new();
        for bits in 0..4usize {
            let set: std::collections::BTreeSet<usize> =
                (0..2).filter(|x| bits >> x & 1 == 1).collect();
            let m = Model::new(f.clone(), Valuation::new().with_var(1, set.clone())).unwrap();
            for x in 0..2 {
                if !model_check(&m, x, &phi).unwrap() {
                    falsifiers.push((set.clone(), x));
                }
            }
        }
        assert!(falsifiers.contains(&([0].into(), 0)));
        match frame_valid(&f, &phi).unwrap() {
            FrameValidity::CounterModel { valuation, point } => {
                assert!(falsifiers.contains(&(valuation.vars[&1].clone(), point)));
            }
            FrameValidity::Valid => panic!("expected a counter-model"),
        }
    }

    #[test]
    fn nominals_get_single_points() {
        let f = Frame::anonymous(3, [], Some(vec![(0, 1), (1, 2)]));
        let phi = parse("~(n1 & n2)", Language::H2).unwrap();
        // Two nominals may name the same point.
        assert!(!frame_valid(&f, &phi).unwrap().is_valid());
        let phi = parse("<h>n1 -> ~[h]~n1", Language::H2).unwrap();
        assert!(frame_valid(&f, &phi).unwrap().is_valid());
    }

    #[test]
    fn clause_budget_is_enforced() {
        let f = Frame::anonymous(4, [(0, 1), (1, 2), (2, 3)], None);
        let err = frame_valid_with(
            &f,
            &l("[](p1 -> <>p2) | <>p1"),
            ValidityOptions {
                clause_budget: 2,
                conflict_budget: 10,
            },
        );
        assert!(matches!(err, Err(KripkeError::ResourceLimit(2))));
    }
}
