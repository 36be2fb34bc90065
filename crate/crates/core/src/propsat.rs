//! Propositional CNF, a conflict-driven SAT solver, and a Tseitin builder.
//!
//! Literals follow the DIMACS convention: atom `v` is `v`, its negation `-v`,
//! and atom indices start at 1.

use std::collections::BinaryHeap;
use std::fmt::Write as _;

use thiserror::Error;

pub type Lit = i32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("literal {lit} out of range for {num_atoms} atoms")]
    BadLiteral { lit: Lit, num_atoms: u32 },
    #[error("conflict budget of {0} exhausted")]
    ResourceLimit(u64),
    #[error("dimacs: {0}")]
    Dimacs(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_atoms: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_atom(&mut self) -> Lit {
        self.num_atoms += 1;
        self.num_atoms as Lit
    }

    pub fn add_clause<I: IntoIterator<Item = Lit>>(&mut self, clause: I) {
        self.clauses.push(clause.into_iter().collect());
    }

    pub fn validate(&self) -> Result<(), SatError> {
        for &lit in self.clauses.iter().flatten() {
            if lit == 0 || lit.unsigned_abs() > self.num_atoms {
                return Err(SatError::BadLiteral {
                    lit,
                    num_atoms: self.num_atoms,
                });
            }
        }
        Ok(())
    }

    /// True iff `assignment` (indexed by atom, slot 0 unused) satisfies every clause.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|&l| assignment[l.unsigned_abs() as usize] == (l > 0))
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_atoms, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                write!(out, "{l} ").unwrap();
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn from_dimacs(text: &str) -> Result<Cnf, SatError> {
        let mut cnf = Cnf::new();
        let mut header = None;
        let mut current = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(SatError::Dimacs(format!("bad header: {line}")));
                }
                let atoms = parts[1]
                    .parse()
                    .map_err(|_| SatError::Dimacs(format!("bad atom count: {}", parts[1])))?;
                let clauses: usize = parts[2]
                    .parse()
                    .map_err(|_| SatError::Dimacs(format!("bad clause count: {}", parts[2])))?;
                header = Some(clauses);
                cnf.num_atoms = atoms;
                continue;
            }
            if header.is_none() {
                return Err(SatError::Dimacs("clause before header".into()));
            }
            for tok in line.split_whitespace() {
                let lit: Lit = tok
                    .parse()
                    .map_err(|_| SatError::Dimacs(format!("bad literal: {tok}")))?;
                if lit == 0 {
                    cnf.clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(lit);
                }
            }
        }
        if !current.is_empty() {
            cnf.clauses.push(current);
        }
        match header {
            Some(n) if n == cnf.clauses.len() => {}
            Some(n) => {
                return Err(SatError::Dimacs(format!(
                    "header announces {n} clauses, found {}",
                    cnf.clauses.len()
                )))
            }
            None => return Err(SatError::Dimacs("missing header".into())),
        }
        cnf.validate()?;
        Ok(cnf)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// `assignment[v]` is the value of atom `v`; slot 0 is unused.
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// Solves with the default conflict budget.
pub fn solve(cnf: &Cnf) -> Result<SatResult, SatError> {
    Solver::new().solve(cnf)
}

#[derive(Clone, Debug)]
pub struct Solver {
    pub conflict_budget: u64,
}

impl Default for Solver {
    fn default() -> Self {
        Solver {
            conflict_budget: 5_000_000,
        }
    }
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_conflict_budget(conflict_budget: u64) -> Self {
        Solver { conflict_budget }
    }

    pub fn solve(&self, cnf: &Cnf) -> Result<SatResult, SatError> {
        cnf.validate()?;
        let mut state = Cdcl::new(cnf.num_atoms as usize);
        for clause in &cnf.clauses {
            if !state.add_input_clause(clause) {
                return Ok(SatResult::Unsat);
            }
        }
        let result = state.search(self.conflict_budget)?;
        if let SatResult::Sat(assignment) = &result {
            assert!(
                cnf.is_satisfied_by(assignment),
                "solver produced an assignment that violates the input"
            );
        }
        Ok(result)
    }
}

// Internal literal encoding: 2*var + (negated as usize), vars from 0.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct ILit(u32);

impl ILit {
    fn from_dimacs(l: Lit) -> ILit {
        let v = l.unsigned_abs() - 1;
        ILit(2 * v + (l < 0) as u32)
    }
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    fn neg(self) -> ILit {
        ILit(self.0 ^ 1)
    }
    fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }
    fn idx(self) -> usize {
        self.0 as usize
    }
}

const UNASSIGNED: i8 = -1;

fn lit_val(value: &[i8], l: ILit) -> i8 {
    let v = value[l.var()];
    if v == UNASSIGNED {
        UNASSIGNED
    } else {
        v ^ (l.is_neg() as i8)
    }
}

struct Cdcl {
    clauses: Vec<Vec<ILit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<i8>, // per var: -1 unassigned, 0 false, 1 true
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<ILit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    bump: f64,
    heap: BinaryHeap<(OrderedActivity, usize)>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    // Units from the input, asserted at level 0 before search.
    units: Vec<ILit>,
}

#[derive(Clone, Copy)]
struct OrderedActivity(f64);
impl PartialEq for OrderedActivity {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for OrderedActivity {}
impl PartialOrd for OrderedActivity {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrderedActivity {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Cdcl {
    fn new(n: usize) -> Self {
        let mut heap = BinaryHeap::with_capacity(n);
        for v in (0..n).rev() {
            heap.push((OrderedActivity(0.0), v));
        }
        Cdcl {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            value: vec![UNASSIGNED; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            bump: 1.0,
            heap,
            phase: vec![false; n],
            seen: vec![false; n],
            units: Vec::new(),
        }
    }

    fn lit_value(&self, l: ILit) -> i8 {
        lit_val(&self.value, l)
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Returns false if the clause set is trivially unsatisfiable.
    fn add_input_clause(&mut self, clause: &[Lit]) -> bool {
        let mut lits: Vec<ILit> = clause.iter().map(|&l| ILit::from_dimacs(l)).collect();
        lits.sort_by_key(|l| l.0);
        lits.dedup();
        if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
            return true; // tautology
        }
        match lits.len() {
            0 => false,
            1 => {
                self.units.push(lits[0]);
                true
            }
            _ => {
                self.attach(lits);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<ILit>) -> usize {
        let ci = self.clauses.len();
        self.watches[lits[0].neg().idx()].push(ci);
        self.watches[lits[1].neg().idx()].push(ci);
        self.clauses.push(lits);
        ci
    }

    fn assign(&mut self, l: ILit, reason: Option<usize>) {
        let v = l.var();
        self.value[v] = (!l.is_neg()) as i8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns a conflicting clause index.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            // Watches are indexed by the literal whose assignment falsifies the watch.
            let false_lit = p.neg();
            let mut ws = std::mem::take(&mut self.watches[p.idx()]);
            let mut i = 0;
            let mut conflict = None;
            let mut implied = Vec::new();
            while i < ws.len() {
                let ci = ws[i];
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if lit_val(&self.value, first) == 1 {
                    i += 1;
                    continue;
                }
                let replacement = (2..clause.len()).find(|&k| lit_val(&self.value, clause[k]) != 0);
                if let Some(k) = replacement {
                    clause.swap(1, k);
                    self.watches[clause[1].neg().idx()].push(ci);
                    ws.swap_remove(i);
                    continue;
                }
                if lit_val(&self.value, first) == 0 {
                    conflict = Some(ci);
                    break;
                }
                // Assign immediately so later clauses in this list see it.
                let v = first.var();
                self.value[v] = (!first.is_neg()) as i8;
                implied.push((first, ci));
                i += 1;
            }
            self.watches[p.idx()] = ws;
            for (l, ci) in implied {
                let v = l.var();
                self.level[v] = self.decision_level();
                self.reason[v] = Some(ci);
                self.trail.push(l);
            }
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.bump;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.bump *= 1e-100;
            self.heap = self
                .activity
                .iter()
                .enumerate()
                .map(|(v, &a)| (OrderedActivity(a), v))
                .collect();
        } else {
            self.heap.push((OrderedActivity(self.activity[v]), v));
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut conflict: usize) -> (Vec<ILit>, u32) {
        let mut learnt = vec![ILit(0)];
        let mut pending = 0;
        let mut index = self.trail.len();
        let mut p: Option<ILit> = None;
        loop {
            let lits = self.clauses[conflict].clone();
            for &q in lits.iter() {
                if Some(q) == p {
                    continue;
                }
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] == self.decision_level() {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let lit = self.trail[index];
            self.seen[lit.var()] = false;
            pending -= 1;
            if pending == 0 {
                learnt[0] = lit.neg();
                break;
            }
            p = Some(lit);
            conflict = self.reason[lit.var()].expect("implied literal has a reason");
        }
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let (mut max_i, mut max_level) = (1, self.level[learnt[1].var()]);
            for (i, l) in learnt.iter().enumerate().skip(2) {
                if self.level[l.var()] > max_level {
                    max_i = i;
                    max_level = self.level[l.var()];
                }
            }
            learnt.swap(1, max_i);
            back = max_level;
        }
        self.bump *= 1.05;
        (learnt, back)
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for l in self.trail.drain(lim..) {
            let v = l.var();
            self.phase[v] = !l.is_neg();
            self.value[v] = UNASSIGNED;
            self.reason[v] = None;
            self.heap.push((OrderedActivity(self.activity[v]), v));
        }
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    fn pick_branch(&mut self) -> Option<ILit> {
        while let Some((_, v)) = self.heap.pop() {
            if self.value[v] == UNASSIGNED {
                return Some(ILit(2 * v as u32 + (!self.phase[v]) as u32));
            }
        }
        None
    }

    fn search(&mut self, budget: u64) -> Result<SatResult, SatError> {
        for l in std::mem::take(&mut self.units) {
            match self.lit_value(l) {
                0 => return Ok(SatResult::Unsat),
                1 => {}
                _ => self.assign(l, None),
            }
        }
        let mut conflicts = 0u64;
        let mut restart_index = 1u64;
        let mut until_restart = 100 * luby(restart_index);
        loop {
            if let Some(conflict) = self.propagate() {
                conflicts += 1;
                if self.decision_level() == 0 {
                    return Ok(SatResult::Unsat);
                }
                if conflicts > budget {
                    return Err(SatError::ResourceLimit(budget));
                }
                let (learnt, back) = self.analyze(conflict);
                self.backtrack(back);
                if learnt.len() == 1 {
                    self.assign(learnt[0], None);
                } else {
                    let asserting = learnt[0];
                    let ci = self.attach(learnt);
                    self.assign(asserting, Some(ci));
                }
                until_restart = until_restart.saturating_sub(1);
                continue;
            }
            if until_restart == 0 {
                restart_index += 1;
                until_restart = 100 * luby(restart_index);
                self.backtrack(0);
                continue;
            }
            match self.pick_branch() {
                None => {
                    let mut assignment = vec![false; self.value.len() + 1];
                    for (v, &val) in self.value.iter().enumerate() {
                        assignment[v + 1] = val == 1;
                    }
                    return Ok(SatResult::Sat(assignment));
                }
                Some(l) => {
                    self.trail_lim.push(self.trail.len());
                    self.assign(l, None);
                }
            }
        }
    }
}

fn luby(mut i: u64) -> u64 {
    // 1 1 2 1 1 2 4 ...
    loop {
        let mut k = 1;
        while (1u64 << k) - 1 < i {
            k += 1;
        }
        if (1u64 << k) - 1 == i {
            return 1u64 << (k - 1);
        }
        i -= (1u64 << (k - 1)) - 1;
    }
}

/// A literal that may have been simplified to a constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TLit {
    Const(bool),
    Atom(Lit),
}

impl TLit {
    pub fn negate(self) -> TLit {
        match self {
            TLit::Const(b) => TLit::Const(!b),
            TLit::Atom(l) => TLit::Atom(-l),
        }
    }
}

/// Tseitin transformation: each gate gets a fresh atom constrained to be
/// equivalent to the gate's value. Constants are folded away.
#[derive(Default)]
pub struct Tseitin {
    pub cnf: Cnf,
}

impl Tseitin {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> Lit {
        self.cnf.new_atom()
    }

    pub fn and(&mut self, inputs: &[TLit]) -> TLit {
        let mut lits = Vec::with_capacity(inputs.len());
        for &i in inputs {
            match i {
                TLit::Const(false) => return TLit::Const(false),
                TLit::Const(true) => {}
                TLit::Atom(l) => lits.push(l),
            }
        }
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == -w[1])
            || lits.iter().any(|l| lits.binary_search(&-l).is_ok())
        {
            return TLit::Const(false);
        }
        match lits.len() {
            0 => TLit::Const(true),
            1 => TLit::Atom(lits[0]),
            _ => {
                let g = self.fresh();
                for &l in &lits {
                    self.cnf.add_clause([-g, l]);
                }
                self.cnf
                    .add_clause(std::iter::once(g).chain(lits.iter().map(|l| -l)));
                TLit::Atom(g)
            }
        }
    }

    pub fn or(&mut self, inputs: &[TLit]) -> TLit {
        let negated: Vec<TLit> = inputs.iter().map(|l| l.negate()).collect();
        self.and(&negated).negate()
    }

    pub fn iff(&mut self, a: TLit, b: TLit) -> TLit {
        let both = self.and(&[a, b]);
        let neither = self.and(&[a.negate(), b.negate()]);
        self.or(&[both, neither])
    }

    /// Asserts a clause over possibly-constant literals.
    pub fn assert_clause(&mut self, lits: &[TLit]) {
        let mut out = Vec::new();
        for &l in lits {
            match l {
                TLit::Const(true) => return,
                TLit::Const(false) => {}
                TLit::Atom(a) => out.push(a),
            }
        }
        self.cnf.add_clause(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_instances() {
        let mut f = Cnf::new();
        let a = f.new_atom();
        f.add_clause([a]);
        f.add_clause([-a]);
        assert_eq!(solve(&f).unwrap(), SatResult::Unsat);
        assert!(solve(&Cnf::new()).unwrap().is_sat());
        let mut g = Cnf::new();
        g.num_atoms = 1;
        g.add_clause([]);
        assert_eq!(solve(&g).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn rejects_bad_literals() {
        let f = Cnf {
            num_atoms: 1,
            clauses: vec![vec![2]],
        };
        assert!(matches!(solve(&f), Err(SatError::BadLiteral { .. })));
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // 5 pigeons, 4 holes.
        let (p, h) = (5, 4);
        let var = |i: i32, j: i32| i * h + j + 1;
        let mut f = Cnf {
            num_atoms: (p * h) as u32,
            clauses: vec![],
        };
        for i in 0..p {
            f.add_clause((0..h).map(|j| var(i, j)));
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    f.add_clause([-var(a, j), -var(b, j)]);
                }
            }
        }
        assert_eq!(solve(&f).unwrap(), SatResult::Unsat);
        assert!(matches!(
            Solver::with_conflict_budget(3).solve(&f),
            Err(SatError::ResourceLimit(3))
        ));
    }

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np cnf 3 2\n1 -2 0\n2 3 0\n";
        let f = Cnf::from_dimacs(text).unwrap();
        assert_eq!(f.clauses, vec![vec![1, -2], vec![2, 3]]);
        assert_eq!(Cnf::from_dimacs(&f.to_dimacs()).unwrap(), f);
        assert!(Cnf::from_dimacs("1 2 0\n").is_err());
        assert!(Cnf::from_dimacs("p cnf 2 2\n1 2 0\n").is_err());
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (1..=15).map(luby).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn tseitin_gates_fold_constants() {
        let mut t = Tseitin::new();
        let a = TLit::Atom(t.fresh());
        assert_eq!(t.and(&[a, TLit::Const(false)]), TLit::Const(false));
        assert_eq!(t.and(&[a, TLit::Const(true)]), a);
        assert_eq!(t.or(&[a, a.negate()]), TLit::Const(true));
        let b = TLit::Atom(t.fresh());
        let g = t.iff(a, b);
        // g must be equivalent to a <-> b in every model.
        for (va, vb) in [(false, false), (false, true), (true, false), (true, true)] {
            let mut f = t.cnf.clone();
            f.add_clause([if va { 1 } else { -1 }]);
            f.add_clause([if vb { 2 } else { -2 }]);
            let TLit::Atom(gl) = g else { panic!() };
            match solve(&f).unwrap() {
                SatResult::Sat(m) => {
                    assert_eq!(m[gl.unsigned_abs() as usize] == (gl > 0), va == vb)
                }
                SatResult::Unsat => panic!("gate definitions must be satisfiable"),
            }
        }
    }
}
