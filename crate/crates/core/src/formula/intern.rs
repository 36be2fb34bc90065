use std::collections::HashMap;

use super::{Formula, Modality, Node};

pub type NodeId = u32;

/// A formula node whose children are interned ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum INode {
    Var(u32),
    Nominal(u32),
    Top,
    Bot,
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Implies(NodeId, NodeId),
    Iff(NodeId, NodeId),
    Box(Modality, NodeId),
    Diamond(Modality, NodeId),
}

/// Hash-consing table. Structurally equal subformulas get the same id, and
/// ids are assigned children-first, so iterating `0..len()` is a valid
/// bottom-up evaluation order.
#[derive(Default)]
pub struct Interner {
    nodes: Vec<INode>,
    table: HashMap<INode, NodeId>,
    by_ptr: HashMap<*const (), NodeId>,
    // Keeps memoised pointers alive so addresses cannot be reused.
    pinned: Vec<Formula>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> INode {
        self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[INode] {
        &self.nodes
    }

    pub fn mk(&mut self, node: INode) -> NodeId {
        if let Some(&id) = self.table.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.table.insert(node, id);
        id
    }

    pub fn intern(&mut self, f: &Formula) -> NodeId {
        if let Some(&id) = self.by_ptr.get(&f.ptr()) {
            return id;
        }
        for g in f.postorder() {
            if self.by_ptr.contains_key(&g.ptr()) {
                continue;
            }
            let id_of = |x: &Formula, me: &Self| me.by_ptr[&x.ptr()];
            let node = match g.node() {
                Node::Var(i) => INode::Var(*i),
                Node::Nominal(i) => INode::Nominal(*i),
                Node::Top => INode::Top,
                Node::Bot => INode::Bot,
                Node::Not(a) => INode::Not(id_of(a, self)),
                Node::And(a, b) => INode::And(id_of(a, self), id_of(b, self)),
                Node::Or(a, b) => INode::Or(id_of(a, self), id_of(b, self)),
                Node::Implies(a, b) => INode::Implies(id_of(a, self), id_of(b, self)),
                Node::Iff(a, b) => INode::Iff(id_of(a, self), id_of(b, self)),
                Node::Box(m, a) => INode::Box(*m, id_of(a, self)),
                Node::Diamond(m, a) => INode::Diamond(*m, id_of(a, self)),
            };
            let id = self.mk(node);
            self.by_ptr.insert(g.ptr(), id);
            self.pinned.push(g);
        }
        self.by_ptr[&f.ptr()]
    }

    /// Rebuilds a shared [`Formula`] for an interned id.
    pub fn to_formula(&self, id: NodeId) -> Formula {
        let mut memo: HashMap<NodeId, Formula> = HashMap::new();
        self.to_formula_memo(id, &mut memo)
    }

    fn to_formula_memo(&self, id: NodeId, memo: &mut HashMap<NodeId, Formula>) -> Formula {
        if let Some(f) = memo.get(&id) {
            return f.clone();
        }
        let f = match self.node(id) {
            INode::Var(i) => Formula::var(i),
            INode::Nominal(i) => Formula::nominal(i),
            INode::Top => Formula::top(),
            INode::Bot => Formula::bot(),
            INode::Not(a) => Formula::not(self.to_formula_memo(a, memo)),
            INode::And(a, b) => {
                Formula::and(self.to_formula_memo(a, memo), self.to_formula_memo(b, memo))
            }
            INode::Or(a, b) => {
                Formula::or(self.to_formula_memo(a, memo), self.to_formula_memo(b, memo))
            }
            INode::Implies(a, b) => {
                Formula::implies(self.to_formula_memo(a, memo), self.to_formula_memo(b, memo))
            }
            INode::Iff(a, b) => {
                Formula::iff(self.to_formula_memo(a, memo), self.to_formula_memo(b, memo))
            }
            INode::Box(m, a) => Formula::boxed(m, self.to_formula_memo(a, memo)),
            INode::Diamond(m, a) => Formula::diamond(m, self.to_formula_memo(a, memo)),
        };
        memo.insert(id, f.clone());
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structurally_equal_formulas_share_ids() {
        let mut it = Interner::new();
        let a = Formula::and(Formula::var(1), Formula::dia(Formula::var(2)));
        let b = Formula::and(Formula::var(1), Formula::dia(Formula::var(2)));
        assert_eq!(it.intern(&a), it.intern(&b));
        assert_eq!(it.len(), 4);
    }

    #[test]
    fn children_precede_parents() {
        let mut it = Interner::new();
        let f = Formula::implies(
            Formula::var(1),
            Formula::boxed(Modality::Univ, Formula::var(1)),
        );
        let root = it.intern(&f);
        assert_eq!(root as usize, it.len() - 1);
        for (i, n) in it.nodes().iter().enumerate() {
            let kids: Vec<NodeId> = match *n {
                INode::Not(a) | INode::Box(_, a) | INode::Diamond(_, a) => vec![a],
                INode::And(a, b) | INode::Or(a, b) | INode::Implies(a, b) | INode::Iff(a, b) => {
                    vec![a, b]
                }
                _ => vec![],
            };
            assert!(kids.iter().all(|&k| (k as usize) < i));
        }
        assert_eq!(it.to_formula(root), f);
    }
}
