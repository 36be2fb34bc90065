//! Labelled graph tableau for Ku and KH2.
//!
//! Formulas are kept in negation normal form. Each branch is a full copy of
//! the graph; branching happens only on disjunctions (semantically: the
//! second branch also gets the negated first disjunct).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{DecisionError, ModelBuilder, Nnf, Stats};
use crate::formula::{Formula, INode, Interner, Modality, NodeId};

pub(super) fn satisfiable(
    phi: &Formula,
    budget: usize,
) -> Result<(Option<ModelBuilder>, Stats), DecisionError> {
    let mut ctx = Ctx {
        int: Interner::new(),
        nnf: Nnf::default(),
        complement: HashMap::new(),
        created: 0,
        budget,
    };
    let root = {
        let id = ctx.int.intern(phi);
        ctx.nnf.of(&mut ctx.int, id, true)
    };
    let nominals: Vec<u32> = phi.nominals().into_iter().collect();
    let mut start = State::default();
    start.new_label(&mut ctx, [root])?;
    let mut stack = vec![start];
    while let Some(mut state) = stack.pop() {
        match state.saturate(&mut ctx, &nominals)? {
            Step::Clash => {}
            Step::Branch(first, second) => {
                stack.push(second);
                stack.push(first);
            }
            Step::Complete => {
                let stats = Stats {
                    labels: ctx.created,
                    guesses: 0,
                };
                return Ok((Some(state.model(&ctx)), stats));
            }
        }
    }
    Ok((
        None,
        Stats {
            labels: ctx.created,
            guesses: 0,
        },
    ))
}

struct Ctx {
    int: Interner,
    nnf: Nnf,
    complement: HashMap<NodeId, NodeId>,
    created: usize,
    budget: usize,
}

impl Ctx {
    /// Id of the NNF of the negation of an NNF node.
    fn complement(&mut self, id: NodeId) -> NodeId {
        if let Some(&c) = self.complement.get(&id) {
            return c;
        }
        let c = self.nnf.of(&mut self.int, id, false);
        self.complement.insert(id, c);
        c
    }
}

#[derive(Clone, Default)]
struct Label {
    content: BTreeSet<NodeId>,
    alive: bool,
    /// Successors along R and along S.
    succ: [BTreeSet<usize>; 2],
}

fn slot(m: Modality) -> usize {
    match m {
        Modality::Rel => 0,
        Modality::Hyb => 1,
        Modality::Univ => panic!("no edges for the universal modality"),
    }
}

#[derive(Clone, Default)]
struct State {
    labels: Vec<Label>,
    global: BTreeSet<NodeId>,
    owner: BTreeMap<u32, usize>,
}

enum Step {
    Clash,
    Branch(State, State),
    Complete,
}

impl State {
    fn new_label(
        &mut self,
        ctx: &mut Ctx,
        content: impl IntoIterator<Item = NodeId>,
    ) -> Result<usize, DecisionError> {
        ctx.created += 1;
        if ctx.created > ctx.budget {
            return Err(DecisionError::ResourceLimit(ctx.budget));
        }
        self.labels.push(Label {
            content: content
                .into_iter()
                .chain(self.global.iter().copied())
                .collect(),
            alive: true,
            succ: Default::default(),
        });
        Ok(self.labels.len() - 1)
    }

    fn alive(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.labels.len()).filter(|&x| self.labels[x].alive)
    }

    /// Folds `from` into `into`: contents and edges are united and every
    /// edge to `from` is redirected.
    fn merge(&mut self, from: usize, into: usize) {
        let gone = std::mem::take(&mut self.labels[from]);
        self.labels[into].content.extend(gone.content);
        for k in 0..2 {
            for y in gone.succ[k].iter() {
                let y = if *y == from { into } else { *y };
                self.labels[into].succ[k].insert(y);
            }
        }
        for l in self.labels.iter_mut() {
            for s in l.succ.iter_mut() {
                if s.remove(&from) {
                    s.insert(into);
                }
            }
        }
        for o in self.owner.values_mut() {
            if *o == from {
                *o = into;
            }
        }
    }

    /// Earliest alive label with the same content, if it is not `x` itself.
    fn blocker(&self, x: usize) -> Option<usize> {
        let c = &self.labels[x].content;
        (0..x).find(|&y| self.labels[y].alive && self.labels[y].content == *c)
    }

    /// Applies rules until the branch closes, needs a case split, or is
    /// complete.
    fn saturate(&mut self, ctx: &mut Ctx, nominals: &[u32]) -> Result<Step, DecisionError> {
        loop {
            match self.propagate(ctx)? {
                Some(Step::Clash) => return Ok(Step::Clash),
                Some(other) => return Ok(other),
                None => {}
            }
            if !self.generate(ctx, nominals)? {
                return Ok(Step::Complete);
            }
        }
    }

    /// Deterministic rules to a fixpoint, then the first pending disjunction.
    fn propagate(&mut self, ctx: &mut Ctx) -> Result<Option<Step>, DecisionError> {
        loop {
            let mut changed = false;
            let mut pending_or = None;
            let labels: Vec<usize> = self.alive().collect();
            for x in labels {
                if !self.labels[x].alive {
                    continue;
                }
                let missing: Vec<NodeId> = self
                    .global
                    .iter()
                    .filter(|g| !self.labels[x].content.contains(g))
                    .copied()
                    .collect();
                if !missing.is_empty() {
                    self.labels[x].content.extend(missing);
                    changed = true;
                }
                let content: Vec<NodeId> = self.labels[x].content.iter().copied().collect();
                for f in content {
                    // Any formula next to its complement closes the label,
                    // not just a literal pair.
                    if self.labels[x].content.contains(&ctx.complement(f)) {
                        return Ok(Some(Step::Clash));
                    }
                    match ctx.int.node(f) {
                        INode::Bot => return Ok(Some(Step::Clash)),
                        INode::And(a, b) => {
                            let l = &mut self.labels[x].content;
                            changed |= l.insert(a) | l.insert(b);
                        }
                        INode::Or(a, b) => {
                            let l = &self.labels[x].content;
                            if !l.contains(&a) && !l.contains(&b) {
                                // Unit propagation before any case split.
                                let (na, nb) = (ctx.complement(a), ctx.complement(b));
                                let l = &mut self.labels[x].content;
                                if l.contains(&na) {
                                    changed |= l.insert(b);
                                } else if l.contains(&nb) {
                                    changed |= l.insert(a);
                                } else if pending_or.is_none() {
                                    pending_or = Some((x, a, b));
                                }
                            }
                        }
                        INode::Nominal(n) => match self.owner.get(&n) {
                            None => {
                                self.owner.insert(n, x);
                                changed = true;
                            }
                            Some(&y) if y != x => {
                                let (lo, hi) = (x.min(y), x.max(y));
                                self.merge(hi, lo);
                                changed = true;
                                break;
                            }
                            Some(_) => {}
                        },
                        INode::Box(Modality::Univ, a) => {
                            changed |= self.global.insert(a);
                        }
                        INode::Box(m, a) => {
                            let k = slot(m);
                            let succ: Vec<usize> = self.labels[x].succ[k].iter().copied().collect();
                            for y in succ {
                                changed |= self.labels[y].content.insert(a);
                            }
                        }
                        _ => {}
                    }
                }
            }
            if changed {
                continue;
            }
            if let Some((x, a, b)) = pending_or {
                let mut first = self.clone();
                first.labels[x].content.insert(a);
                let not_a = ctx.complement(a);
                let mut second = std::mem::take(self);
                second.labels[x].content.insert(not_a);
                second.labels[x].content.insert(b);
                return Ok(Some(Step::Branch(first, second)));
            }
            return Ok(None);
        }
    }

    /// Creates one new label if some demand is unmet. Returns false when
    /// every demand is met.
    fn generate(&mut self, ctx: &mut Ctx, nominals: &[u32]) -> Result<bool, DecisionError> {
        for &n in nominals {
            if !self.owner.contains_key(&n) {
                let id = ctx.int.mk(INode::Nominal(n));
                self.new_label(ctx, [id])?;
                return Ok(true);
            }
        }
        let labels: Vec<usize> = self.alive().collect();
        for &x in &labels {
            for &f in self.labels[x].content.iter() {
                if let INode::Diamond(Modality::Univ, a) = ctx.int.node(f) {
                    if !labels.iter().any(|&y| self.labels[y].content.contains(&a)) {
                        self.new_label(ctx, [a])?;
                        return Ok(true);
                    }
                }
            }
        }
        for &x in &labels {
            if self.blocker(x).is_some() {
                continue;
            }
            let content: Vec<NodeId> = self.labels[x].content.iter().copied().collect();
            for f in content {
                if let INode::Diamond(m, a) = ctx.int.node(f) {
                    if m == Modality::Univ {
                        continue;
                    }
                    let k = slot(m);
                    let met = self.labels[x].succ[k]
                        .iter()
                        .any(|&y| self.labels[y].content.contains(&a));
                    if !met {
                        let boxed: Vec<NodeId> = self.labels[x]
                            .content
                            .iter()
                            .filter_map(|&g| match ctx.int.node(g) {
                                INode::Box(bm, b) if bm == m => Some(b),
                                _ => None,
                            })
                            .collect();
                        let y = self.new_label(ctx, std::iter::once(a).chain(boxed))?;
                        self.labels[x].succ[k].insert(y);
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    /// Alive, unblocked labels become points; edges into blocked labels go
    /// to their blockers.
    fn model(&self, ctx: &Ctx) -> ModelBuilder {
        let mut builder = ModelBuilder::default();
        let mut point = HashMap::new();
        for x in self.alive() {
            if self.blocker(x).is_none() {
                point.insert(x, builder.add_point());
            }
        }
        let rep = |y: usize| point[&self.blocker(y).unwrap_or(y)];
        for (&x, &p) in &point {
            for (k, m) in [(0, Modality::Rel), (1, Modality::Hyb)] {
                for &y in &self.labels[x].succ[k] {
                    builder.add_edge(m, p, rep(y));
                }
            }
            for &f in &self.labels[x].content {
                match ctx.int.node(f) {
                    INode::Var(v) => builder.set_var(v, p),
                    INode::Nominal(n) => {
                        builder.noms.insert(n, p);
                    }
                    _ => {}
                }
            }
        }
        builder.root = rep(0);
        builder
    }
}
