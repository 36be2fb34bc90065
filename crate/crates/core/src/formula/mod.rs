//! Modal formulas over relational, universal and hybrid boxes.
//!
//! A [`Formula`] is an immutable, reference-counted DAG. Subformulas built once
//! and reused are shared by pointer, which matters for the characteristic
//! formulas of the encoding: their tree size grows exponentially with the
//! tower level while the DAG stays linear. All traversals in this crate are
//! memoised on node identity for that reason.

mod intern;
mod parse;
mod print;
mod subst;

use std::collections::BTreeSet;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use intern::{INode, Interner, NodeId};
pub use parse::parse;
pub use subst::{ground_substitutions, GroundSubstitutions, Substitution};

/// The three box operators. There are no others.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    /// `[]`, interpreted by R.
    Rel,
    /// `[u]`, the universal box.
    Univ,
    /// `[h]`, interpreted by S.
    Hyb,
}

/// Which of the two object languages a formula belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Language {
    /// Variables, `[]` and `[u]`.
    L,
    /// Variables, nominals, `[]` and `[h]`.
    H2,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Language::L => f.write_str("L"),
            Language::H2 => f.write_str("H2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("{construct} is not allowed in language {language}")]
    Language {
        construct: &'static str,
        language: Language,
    },
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Var(u32),
    Nominal(u32),
    Top,
    Bot,
    Not(Formula),
    And(Formula, Formula),
    Or(Formula, Formula),
    Implies(Formula, Formula),
    Iff(Formula, Formula),
    Box(Modality, Formula),
    Diamond(Modality, Formula),
}

const HAS_VAR: u8 = 1;
const HAS_NOMINAL: u8 = 2;
const HAS_UNIV: u8 = 4;
const HAS_HYB: u8 = 8;

#[derive(Debug)]
struct Inner {
    node: Node,
    hash: u64,
    flags: u8,
}

/// A shared, immutable formula.
#[derive(Clone)]
pub struct Formula(Arc<Inner>);

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash && self.0.node == other.0.node)
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Formula({self})")
    }
}

fn modality_flag(m: Modality) -> u8 {
    match m {
        Modality::Rel => 0,
        Modality::Univ => HAS_UNIV,
        Modality::Hyb => HAS_HYB,
    }
}

impl Formula {
    fn build(node: Node) -> Formula {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        std::mem::discriminant(&node).hash(&mut hasher);
        let flags = match &node {
            Node::Var(i) => {
                i.hash(&mut hasher);
                HAS_VAR
            }
            Node::Nominal(i) => {
                i.hash(&mut hasher);
                HAS_NOMINAL
            }
            Node::Top | Node::Bot => 0,
            Node::Not(a) => {
                hasher.write_u64(a.0.hash);
                a.0.flags
            }
            Node::And(a, b) | Node::Or(a, b) | Node::Implies(a, b) | Node::Iff(a, b) => {
                hasher.write_u64(a.0.hash);
                hasher.write_u64(b.0.hash);
                a.0.flags | b.0.flags
            }
            Node::Box(m, a) | Node::Diamond(m, a) => {
                m.hash(&mut hasher);
                hasher.write_u64(a.0.hash);
                a.0.flags | modality_flag(*m)
            }
        };
        Formula(Arc::new(Inner {
            node,
            hash: hasher.finish(),
            flags,
        }))
    }

    /// Propositional variable `p<index>`.
    ///
    /// Panics if `index == 0`.
    pub fn var(index: u32) -> Formula {
        assert!(index >= 1, "variable indices start at 1");
        Formula::build(Node::Var(index))
    }

    /// Nominal `n<index>`.
    ///
    /// Panics if `index == 0`.
    pub fn nominal(index: u32) -> Formula {
        assert!(index >= 1, "nominal indices start at 1");
        Formula::build(Node::Nominal(index))
    }

    pub fn top() -> Formula {
        Formula::build(Node::Top)
    }

    pub fn bot() -> Formula {
        Formula::build(Node::Bot)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::build(Node::Not(a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::build(Node::And(a, b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::build(Node::Or(a, b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::build(Node::Implies(a, b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::build(Node::Iff(a, b))
    }

    pub fn boxed(m: Modality, a: Formula) -> Formula {
        Formula::build(Node::Box(m, a))
    }

    pub fn diamond(m: Modality, a: Formula) -> Formula {
        Formula::build(Node::Diamond(m, a))
    }

    /// `<>a`
    pub fn dia(a: Formula) -> Formula {
        Formula::diamond(Modality::Rel, a)
    }

    /// `<><>a`
    pub fn dia2(a: Formula) -> Formula {
        Formula::dia(Formula::dia(a))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn and_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or_else(Formula::top)
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn or_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(Formula::bot)
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Identity of the shared node; stable while `self` is alive.
    pub fn ptr(&self) -> *const () {
        Arc::as_ptr(&self.0) as *const ()
    }

    pub fn has_variables(&self) -> bool {
        self.0.flags & HAS_VAR != 0
    }

    pub fn has_nominals(&self) -> bool {
        self.0.flags & HAS_NOMINAL != 0
    }

    pub fn has_modality(&self, m: Modality) -> bool {
        let flag = modality_flag(m);
        if flag == 0 {
            // [] has no flag; search.
            return self.any_node(|n| {
                matches!(
                    n,
                    Node::Box(Modality::Rel, _) | Node::Diamond(Modality::Rel, _)
                )
            });
        }
        self.0.flags & flag != 0
    }

    /// No propositional variables (nominals may still occur).
    pub fn is_variable_free(&self) -> bool {
        !self.has_variables()
    }

    /// Whether the formula lies in `language`.
    pub fn check_language(&self, language: Language) -> Result<(), FormulaError> {
        match language {
            Language::L => {
                if self.has_nominals() {
                    return Err(FormulaError::Language {
                        construct: "nominal",
                        language,
                    });
                }
                if self.0.flags & HAS_HYB != 0 {
                    return Err(FormulaError::Language {
                        construct: "hybrid modality",
                        language,
                    });
                }
            }
            Language::H2 => {
                if self.0.flags & HAS_UNIV != 0 {
                    return Err(FormulaError::Language {
                        construct: "universal modality",
                        language,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_in(&self, language: Language) -> bool {
        self.check_language(language).is_ok()
    }

    /// Visits every distinct node once, children before parents.
    pub fn postorder(&self) -> Vec<Formula> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![(self.clone(), false)];
        while let Some((f, expanded)) = stack.pop() {
            if expanded {
                out.push(f);
                continue;
            }
            if !seen.insert(f.ptr()) {
                continue;
            }
            stack.push((f.clone(), true));
            for child in f.children().into_iter().rev() {
                if !seen.contains(&child.ptr()) {
                    stack.push((child.clone(), false));
                }
            }
        }
        out
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self.node() {
            Node::Var(_) | Node::Nominal(_) | Node::Top | Node::Bot => vec![],
            Node::Not(a) | Node::Box(_, a) | Node::Diamond(_, a) => vec![a],
            Node::And(a, b) | Node::Or(a, b) | Node::Implies(a, b) | Node::Iff(a, b) => vec![a, b],
        }
    }

    fn any_node(&self, pred: impl Fn(&Node) -> bool) -> bool {
        self.postorder().iter().any(|f| pred(f.node()))
    }

    pub fn variables(&self) -> BTreeSet<u32> {
        if !self.has_variables() {
            return BTreeSet::new();
        }
        self.postorder()
            .iter()
            .filter_map(|f| match f.node() {
                Node::Var(i) => Some(*i),
                _ => None,
            })
            .collect()
    }

    pub fn nominals(&self) -> BTreeSet<u32> {
        if !self.has_nominals() {
            return BTreeSet::new();
        }
        self.postorder()
            .iter()
            .filter_map(|f| match f.node() {
                Node::Nominal(i) => Some(*i),
                _ => None,
            })
            .collect()
    }

    /// Maximal nesting of modal operators (diamonds count like boxes).
    pub fn modal_depth(&self) -> usize {
        let mut depth: std::collections::HashMap<*const (), usize> = Default::default();
        for f in self.postorder() {
            let d = match f.node() {
                Node::Var(_) | Node::Nominal(_) | Node::Top | Node::Bot => 0,
                Node::Not(a) => depth[&a.ptr()],
                Node::And(a, b) | Node::Or(a, b) | Node::Implies(a, b) | Node::Iff(a, b) => {
                    depth[&a.ptr()].max(depth[&b.ptr()])
                }
                Node::Box(_, a) | Node::Diamond(_, a) => depth[&a.ptr()] + 1,
            };
            depth.insert(f.ptr(), d);
        }
        depth[&self.ptr()]
    }

    /// Number of distinct shared nodes.
    pub fn dag_size(&self) -> usize {
        self.postorder().len()
    }

    /// Number of nodes of the fully unfolded tree, saturating at `u64::MAX`.
    pub fn tree_size(&self) -> u64 {
        let mut size: std::collections::HashMap<*const (), u64> = Default::default();
        for f in self.postorder() {
            let s = 1u64.saturating_add(
                f.children()
                    .iter()
                    .fold(0u64, |acc, c| acc.saturating_add(size[&c.ptr()])),
            );
            size.insert(f.ptr(), s);
        }
        size[&self.ptr()]
    }

    /// Top-level conjuncts, flattening nested `&`.
    pub fn conjuncts(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::And(a, b) => {
                    stack.push(b.clone());
                    stack.push(a.clone());
                }
                _ => out.push(f),
            }
        }
        out
    }

    /// Rewrites `|`, `->`, `<->` and diamonds into `~`, `&` and boxes.
    pub fn desugar(&self) -> Formula {
        let mut memo: std::collections::HashMap<*const (), Formula> = Default::default();
        for f in self.postorder() {
            let get = |x: &Formula| memo[&x.ptr()].clone();
            let out = match f.node() {
                Node::Var(_) | Node::Nominal(_) | Node::Top | Node::Bot => f.clone(),
                Node::Not(a) => Formula::not(get(a)),
                Node::And(a, b) => Formula::and(get(a), get(b)),
                Node::Or(a, b) => {
                    Formula::not(Formula::and(Formula::not(get(a)), Formula::not(get(b))))
                }
                Node::Implies(a, b) => Formula::not(Formula::and(get(a), Formula::not(get(b)))),
                Node::Iff(a, b) => {
                    let (a, b) = (get(a), get(b));
                    Formula::and(
                        Formula::not(Formula::and(a.clone(), Formula::not(b.clone()))),
                        Formula::not(Formula::and(b, Formula::not(a))),
                    )
                }
                Node::Box(m, a) => Formula::boxed(*m, get(a)),
                Node::Diamond(m, a) => Formula::not(Formula::boxed(*m, Formula::not(get(a)))),
            };
            memo.insert(f.ptr(), out);
        }
        memo.remove(&self.ptr()).expect("root visited")
    }
}

/// `<h>(n & <h>φ)`: a stand-in for the universal diamond in H2.
pub fn surrogate_exists(phi: &Formula, nominal_index: u32) -> Result<Formula, FormulaError> {
    phi.check_language(Language::H2)?;
    Ok(Formula::diamond(
        Modality::Hyb,
        Formula::and(
            Formula::nominal(nominal_index),
            Formula::diamond(Modality::Hyb, phi.clone()),
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_track_symbols() {
        let f = Formula::and(
            Formula::var(1),
            Formula::boxed(Modality::Univ, Formula::top()),
        );
        assert!(f.has_variables());
        assert!(!f.has_nominals());
        assert!(f.is_in(Language::L));
        assert!(!f.is_in(Language::H2));
        let h = Formula::and(
            Formula::nominal(1),
            Formula::diamond(Modality::Hyb, Formula::var(2)),
        );
        assert!(h.is_in(Language::H2));
        assert!(!h.is_in(Language::L));
    }

    #[test]
    fn surrogate_exists_shape() {
        let e = surrogate_exists(&Formula::top(), 1).unwrap();
        assert_eq!(e.to_string(), "<h>(n1 & <h>true)");
        let beta = Formula::boxed(Modality::Rel, Formula::bot());
        assert_eq!(
            surrogate_exists(&beta, 1).unwrap().to_string(),
            "<h>(n1 & <h>[]false)"
        );
    }

    #[test]
    fn surrogate_exists_rejects_universal() {
        let f = Formula::boxed(Modality::Univ, Formula::var(1));
        assert!(matches!(
            surrogate_exists(&f, 1),
            Err(FormulaError::Language { .. })
        ));
    }

    #[test]
    fn shared_dag_sizes() {
        let mut f = Formula::var(1);
        for _ in 0..40 {
            f = Formula::and(f.clone(), f);
        }
        assert_eq!(f.dag_size(), 41);
        assert_eq!(f.tree_size(), (1u64 << 41) - 1);
        assert_eq!(f.modal_depth(), 0);
    }

    #[test]
    fn depth_counts_all_modalities() {
        let f = Formula::dia(Formula::boxed(
            Modality::Univ,
            Formula::dia(Formula::var(1)),
        ));
        assert_eq!(f.modal_depth(), 3);
    }

    #[test]
    fn conjuncts_flatten() {
        let f = Formula::and_all((1..=4).map(Formula::var));
        assert_eq!(f.conjuncts().len(), 4);
        assert_eq!(Formula::and_all(vec![]), Formula::top());
        assert_eq!(Formula::or_all(vec![]), Formula::bot());
    }

    #[test]
    fn desugar_removes_sugar() {
        let f = parse("p1 -> <>p2 | (p1 <-> [u]p2)", Language::L).unwrap();
        let d = f.desugar();
        for n in d.postorder() {
            assert!(!matches!(
                n.node(),
                Node::Or(..) | Node::Implies(..) | Node::Iff(..) | Node::Diamond(..)
            ));
        }
    }
}
