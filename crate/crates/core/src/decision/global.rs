//! Ku engine: guess the universal subformulas, then decide K with a global
//! assumption set by SAT-driven expansion of formula sets.

use std::collections::HashMap;

use super::{fold, negate, DecisionError, ModelBuilder, Nnf, Stats};
use crate::formula::{Formula, INode, Interner, Modality, Node, NodeId};
use crate::propsat::{Cnf, Lit, SatResult, Solver, TLit};

pub(super) fn satisfiable(
    phi: &Formula,
    budget: usize,
) -> Result<(Option<ModelBuilder>, Stats), DecisionError> {
    let mut univ: Vec<Formula> = Vec::new();
    for f in phi.postorder() {
        let is_univ = matches!(
            f.node(),
            Node::Box(Modality::Univ, _) | Node::Diamond(Modality::Univ, _)
        );
        if is_univ && !univ.contains(&f) {
            univ.push(f);
        }
    }
    let mut search = Search {
        phi,
        univ,
        fixed: HashMap::new(),
        engines: HashMap::new(),
        budget: Budget {
            used: 0,
            limit: budget,
        },
        guesses: 0,
    };
    let found = search.run(0, Vec::new(), Vec::new())?;
    let stats = Stats {
        labels: search.budget.used,
        guesses: search.guesses,
    };
    Ok((found, stats))
}

struct Budget {
    used: usize,
    limit: usize,
}

impl Budget {
    fn charge(&mut self) -> Result<(), DecisionError> {
        self.used += 1;
        if self.used > self.limit {
            Err(DecisionError::ResourceLimit(self.limit))
        } else {
            Ok(())
        }
    }
}

struct Search<'a> {
    phi: &'a Formula,
    /// `[u]`/`<u>` subformulas, children before parents.
    univ: Vec<Formula>,
    fixed: HashMap<Formula, bool>,
    /// One engine per global assumption set.
    engines: HashMap<Vec<Formula>, KEngine>,
    budget: Budget,
    guesses: usize,
}

impl Search<'_> {
    /// `global` must hold everywhere, each of `witnesses` somewhere.
    fn run(
        &mut self,
        k: usize,
        global: Vec<Formula>,
        witnesses: Vec<Formula>,
    ) -> Result<Option<ModelBuilder>, DecisionError> {
        if k == self.univ.len() {
            self.guesses += 1;
            let root = fold(self.phi, &self.fixed);
            let engine = engine_for(&mut self.engines, &global);
            let mut all = witnesses;
            all.push(root);
            let sets: Vec<Vec<NodeId>> = all.iter().map(|w| engine.set_with(w)).collect();
            for set in &sets {
                if !engine.sat_top(set, &mut self.budget)? {
                    return Ok(None);
                }
            }
            let mut builder = ModelBuilder::default();
            let mut memo = HashMap::new();
            for (i, set) in sets.iter().enumerate() {
                let p = engine.extract(set, &mut builder, &mut memo, &mut self.budget)?;
                if i + 1 == sets.len() {
                    builder.root = p;
                }
            }
            return Ok(Some(builder));
        }
        let u = self.univ[k].clone();
        let (is_box, body) = match u.node() {
            Node::Box(_, b) => (true, b.clone()),
            Node::Diamond(_, b) => (false, b.clone()),
            _ => unreachable!(),
        };
        let body = fold(&body, &self.fixed);
        for value in [true, false] {
            let (mut g, mut w) = (global.clone(), witnesses.clone());
            // [u]χ true and <u>χ false put a formula in the global set; the
            // other two cases demand a witness somewhere.
            match (is_box, value) {
                (true, true) => g.push(body.clone()),
                (true, false) => w.push(negate(body.clone())),
                (false, true) => w.push(body.clone()),
                (false, false) => g.push(negate(body.clone())),
            }
            dedup(&mut g);
            dedup(&mut w);
            if self.consistent(&g, &w)? {
                self.fixed.insert(u.clone(), value);
                let found = self.run(k + 1, g, w)?;
                self.fixed.remove(&u);
                if found.is_some() {
                    return Ok(found);
                }
            }
        }
        Ok(None)
    }

    fn consistent(
        &mut self,
        global: &[Formula],
        witnesses: &[Formula],
    ) -> Result<bool, DecisionError> {
        if global.iter().any(|g| matches!(g.node(), Node::Bot)) {
            return Ok(false);
        }
        let engine = engine_for(&mut self.engines, global);
        for w in witnesses {
            let set = engine.set_with(w);
            if !engine.sat_top(&set, &mut self.budget)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn engine_for<'e>(
    engines: &'e mut HashMap<Vec<Formula>, KEngine>,
    global: &[Formula],
) -> &'e mut KEngine {
    engines
        .entry(global.to_vec())
        .or_insert_with(|| KEngine::new(global))
}

/// Both slices sorted.
fn is_subset(small: &[NodeId], big: &[NodeId]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

fn dedup(v: &mut Vec<Formula>) {
    let mut seen = std::collections::HashSet::new();
    v.retain(|f| seen.insert(f.clone()));
}

/// Stack depths a provisional answer relies on.
type Deps = Vec<usize>;

/// What a satisfiable set expands to: true variables and one successor set
/// per demand.
struct Found {
    vars: Vec<u32>,
    succs: Vec<(Modality, Vec<NodeId>)>,
}

/// K (with any number of relational modalities) under a global assumption
/// set. Sets are sorted vectors of NNF ids that always include the global
/// set.
struct KEngine {
    int: Interner,
    nnf: Nnf,
    global: Vec<NodeId>,
    cache: HashMap<Vec<NodeId>, bool>,
    /// Unsatisfiable sets found by minimisation; supersets are unsatisfiable.
    cores: Vec<Vec<NodeId>>,
    on_stack: HashMap<Vec<NodeId>, usize>,
    /// Sat answers that rely on sets still in progress, with the depths
    /// they rely on. Entries are never removed, only emptied.
    provisional: Vec<(Vec<NodeId>, Deps)>,
    provisional_index: HashMap<Vec<NodeId>, usize>,
    /// Per stack depth, provisional entries whose deepest dependency it is.
    waiting: Vec<Vec<usize>>,
    solver: Solver,
}

impl KEngine {
    fn new(global: &[Formula]) -> KEngine {
        let mut engine = KEngine {
            int: Interner::new(),
            nnf: Nnf::default(),
            global: Vec::new(),
            cache: HashMap::new(),
            cores: Vec::new(),
            on_stack: HashMap::new(),
            provisional: Vec::new(),
            provisional_index: HashMap::new(),
            waiting: Vec::new(),
            solver: Solver::new(),
        };
        let mut g: Vec<NodeId> = global.iter().map(|f| engine.nnf_id(f)).collect();
        g.sort_unstable();
        g.dedup();
        engine.global = g;
        engine
    }

    fn nnf_id(&mut self, f: &Formula) -> NodeId {
        let id = self.int.intern(f);
        self.nnf.of(&mut self.int, id, true)
    }

    fn set_with(&mut self, f: &Formula) -> Vec<NodeId> {
        let id = self.nnf_id(f);
        self.make_set([id])
    }

    fn make_set(&self, extra: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
        let mut s: Vec<NodeId> = self.global.iter().copied().chain(extra).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Definitive answer for a set, called with nothing in progress.
    fn sat_top(&mut self, set: &[NodeId], budget: &mut Budget) -> Result<bool, DecisionError> {
        debug_assert!(self.on_stack.is_empty());
        Ok(self.sat(set, budget)?.0)
    }

    /// Returns the answer and, for a sat answer, the stack depths of the
    /// sets in progress it relied on (sorted). Sets in progress are assumed
    /// satisfiable; a set that loops back to an ancestor with the same
    /// content is realised by that ancestor.
    fn sat(&mut self, set: &[NodeId], budget: &mut Budget) -> Result<(bool, Deps), DecisionError> {
        if let Some(&r) = self.cache.get(set) {
            return Ok((r, Deps::new()));
        }
        if let Some(&d) = self.on_stack.get(set) {
            return Ok((true, vec![d]));
        }
        if let Some(&i) = self.provisional_index.get(set) {
            return Ok((true, self.provisional[i].1.clone()));
        }
        if self.cores.iter().any(|c| is_subset(c, set)) {
            self.cache.insert(set.to_vec(), false);
            return Ok((false, Deps::new()));
        }
        budget.charge()?;
        let depth = self.on_stack.len();
        self.on_stack.insert(set.to_vec(), depth);
        self.waiting.push(Vec::new());
        let result = self.expand(set, budget);
        self.on_stack.remove(set);
        let waiting = self.waiting.pop().expect("pushed above");
        let (found, deps) = result?;
        // Unsat answers are final: assuming ancestors satisfiable only
        // makes more sets satisfiable. Sat answers that relied on this set
        // fall with it or inherit its dependencies.
        let sat = found.is_some();
        let mut deps = deps;
        deps.retain(|&d| d != depth);
        for i in waiting {
            let Some(entry) = self.provisional.get_mut(i) else {
                continue;
            };
            if entry.1.last() != Some(&depth) {
                continue;
            }
            if sat {
                entry.1.pop();
                entry.1.extend(deps.iter().copied());
                entry.1.sort_unstable();
                entry.1.dedup();
                match entry.1.last() {
                    Some(&d) => self.waiting[d].push(i),
                    None => {
                        let set = std::mem::take(&mut entry.0);
                        self.provisional_index.remove(&set);
                        self.cache.insert(set, true);
                    }
                }
            } else {
                entry.1.clear();
                let set = std::mem::take(&mut entry.0);
                self.provisional_index.remove(&set);
            }
        }
        if !sat || deps.is_empty() {
            self.cache.insert(set.to_vec(), sat);
            return Ok((sat, Deps::new()));
        }
        let i = self.provisional.len();
        self.provisional_index.insert(set.to_vec(), i);
        self.provisional.push((set.to_vec(), deps.clone()));
        self.waiting[*deps.last().expect("nonempty")].push(i);
        Ok((true, deps))
    }

    /// One-directional encoding of an NNF node: the returned literal implies
    /// the node. Modal nodes and variables are atoms.
    fn encode(
        &mut self,
        id: NodeId,
        cnf: &mut Cnf,
        memo: &mut HashMap<NodeId, TLit>,
        atoms: &mut Vec<(NodeId, Lit)>,
    ) -> Result<TLit, DecisionError> {
        if let Some(&l) = memo.get(&id) {
            return Ok(l);
        }
        let out = match self.int.node(id) {
            INode::Top => TLit::Const(true),
            INode::Bot => TLit::Const(false),
            INode::Box(Modality::Univ, _) | INode::Diamond(Modality::Univ, _) => {
                return Err(DecisionError::Internal(
                    "unresolved universal modality".into(),
                ))
            }
            INode::Nominal(_) => {
                return Err(DecisionError::Internal("nominal in the Ku engine".into()))
            }
            INode::Var(_) | INode::Box(_, _) | INode::Diamond(_, _) => {
                let a = cnf.new_atom();
                atoms.push((id, a));
                TLit::Atom(a)
            }
            INode::Not(a) => self.encode(a, cnf, memo, atoms)?.negate(),
            INode::And(a, b) => {
                let (x, y) = (
                    self.encode(a, cnf, memo, atoms)?,
                    self.encode(b, cnf, memo, atoms)?,
                );
                match (x, y) {
                    (TLit::Const(false), _) | (_, TLit::Const(false)) => TLit::Const(false),
                    (TLit::Const(true), z) | (z, TLit::Const(true)) => z,
                    (TLit::Atom(x), TLit::Atom(y)) => {
                        let g = cnf.new_atom();
                        cnf.add_clause([-g, x]);
                        cnf.add_clause([-g, y]);
                        TLit::Atom(g)
                    }
                }
            }
            INode::Or(a, b) => {
                let (x, y) = (
                    self.encode(a, cnf, memo, atoms)?,
                    self.encode(b, cnf, memo, atoms)?,
                );
                match (x, y) {
                    (TLit::Const(true), _) | (_, TLit::Const(true)) => TLit::Const(true),
                    (TLit::Const(false), z) | (z, TLit::Const(false)) => z,
                    (TLit::Atom(x), TLit::Atom(y)) => {
                        let g = cnf.new_atom();
                        cnf.add_clause([-g, x, y]);
                        TLit::Atom(g)
                    }
                }
            }
            INode::Implies(..) | INode::Iff(..) => {
                return Err(DecisionError::Internal(
                    "formula is not in negation normal form".into(),
                ))
            }
        };
        memo.insert(id, out);
        Ok(out)
    }

    /// Searches propositional assignments of `set` until one has only
    /// satisfiable successor sets. Only atoms set to true count, so every
    /// true box and diamond is one the assignment needs. Each failing demand
    /// adds a clause that rules out the demand together with the boxes that
    /// produced its set.
    fn expand(
        &mut self,
        set: &[NodeId],
        budget: &mut Budget,
    ) -> Result<(Option<Found>, Deps), DecisionError> {
        let mut cnf = Cnf::new();
        let mut memo = HashMap::new();
        let mut atoms = Vec::new();
        for &id in set {
            match self.encode(id, &mut cnf, &mut memo, &mut atoms)? {
                TLit::Const(true) => {}
                TLit::Const(false) => return Ok((None, Deps::new())),
                TLit::Atom(l) => cnf.add_clause([l]),
            }
        }
        'assignments: loop {
            let assignment = match self.solver.solve(&cnf)? {
                SatResult::Unsat => return Ok((None, Deps::new())),
                SatResult::Sat(a) => a,
            };
            let value = |l: Lit| assignment[l as usize];
            let mut vars = Vec::new();
            let mut boxes: HashMap<Modality, Vec<(NodeId, Lit)>> = HashMap::new();
            let mut demands: HashMap<Modality, Vec<(NodeId, Lit)>> = HashMap::new();
            for &(id, lit) in &atoms {
                if !value(lit) {
                    continue;
                }
                match self.int.node(id) {
                    INode::Var(i) => vars.push(i),
                    INode::Box(m, a) => boxes.entry(m).or_default().push((a, lit)),
                    INode::Diamond(m, a) => demands.entry(m).or_default().push((a, lit)),
                    _ => {}
                }
            }
            let mut succs = Vec::new();
            let mut deps = Deps::new();
            let mut modalities: Vec<Modality> = demands.keys().copied().collect();
            modalities.sort();
            for m in modalities {
                let mut ds = demands[&m].clone();
                ds.sort_unstable();
                ds.dedup_by_key(|d| d.0);
                let bs = boxes.get(&m).cloned().unwrap_or_default();
                for (d, dl) in ds {
                    let succ = self.make_set(bs.iter().map(|b| b.0).chain([d]));
                    let (ok, used) = self.sat(&succ, budget)?;
                    if !ok {
                        let core = self.minimize(&bs, d, budget)?;
                        cnf.add_clause(std::iter::once(-dl).chain(core.iter().map(|b| -b.1)));
                        continue 'assignments;
                    }
                    deps.extend(used);
                    succs.push((m, succ));
                }
            }
            deps.sort_unstable();
            deps.dedup();
            return Ok((Some(Found { vars, succs }), deps));
        }
    }
    /// Drops boxes one at a time while the demand stays unsatisfiable with
    /// the rest, and records the result as a core.
    fn minimize(
        &mut self,
        boxes: &[(NodeId, Lit)],
        demand: NodeId,
        budget: &mut Budget,
    ) -> Result<Vec<(NodeId, Lit)>, DecisionError> {
        let mut keep = boxes.to_vec();
        let mut i = 0;
        while i < keep.len() {
            let mut candidate = keep.clone();
            candidate.remove(i);
            let set = self.make_set(candidate.iter().map(|b| b.0).chain([demand]));
            // An unsat answer holds even when ancestors were assumed sat.
            if self.sat(&set, budget)?.0 {
                i += 1;
            } else {
                keep = candidate;
            }
        }
        let core = self.make_set(keep.iter().map(|b| b.0).chain([demand]));
        if !self.cores.contains(&core) {
            self.cores.push(core);
        }
        Ok(keep)
    }

    /// Builds a model for a satisfiable set, reusing the point of any set
    /// already built.
    fn extract(
        &mut self,
        set: &[NodeId],
        builder: &mut ModelBuilder,
        memo: &mut HashMap<Vec<NodeId>, usize>,
        budget: &mut Budget,
    ) -> Result<usize, DecisionError> {
        if let Some(&p) = memo.get(set) {
            return Ok(p);
        }
        let p = builder.add_point();
        memo.insert(set.to_vec(), p);
        let found = self.expand(set, budget)?.0.ok_or_else(|| {
            DecisionError::Internal("model extraction hit an unsatisfiable set".into())
        })?;
        for v in found.vars {
            builder.set_var(v, p);
        }
        for (m, succ) in found.succs {
            let c = self.extract(&succ, builder, memo, budget)?;
            builder.add_edge(m, p, c);
        }
        Ok(p)
    }
}
