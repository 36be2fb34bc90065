use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::{parse, Formula, FormulaError, Language, Node};

/// Finite map from variable indices to formulas. Unmapped variables and all
/// nominals are left fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<u32, Formula>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, var: u32, f: Formula) -> Option<Formula> {
        self.map.insert(var, f)
    }

    pub fn get(&self, var: u32) -> Option<&Formula> {
        self.map.get(&var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Formula)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Homomorphic replacement of variables. Shared subterms stay shared.
    pub fn apply(&self, phi: &Formula) -> Formula {
        if self.map.is_empty() || !phi.has_variables() {
            return phi.clone();
        }
        let mut memo: HashMap<*const (), Formula> = HashMap::new();
        for f in phi.postorder() {
            let out = if !f.has_variables() {
                f.clone()
            } else {
                let get = |x: &Formula| memo[&x.ptr()].clone();
                match f.node() {
                    Node::Var(i) => self.map.get(i).cloned().unwrap_or_else(|| f.clone()),
                    Node::Nominal(_) | Node::Top | Node::Bot => f.clone(),
                    Node::Not(a) => Formula::not(get(a)),
                    Node::And(a, b) => Formula::and(get(a), get(b)),
                    Node::Or(a, b) => Formula::or(get(a), get(b)),
                    Node::Implies(a, b) => Formula::implies(get(a), get(b)),
                    Node::Iff(a, b) => Formula::iff(get(a), get(b)),
                    Node::Box(m, a) => Formula::boxed(*m, get(a)),
                    Node::Diamond(m, a) => Formula::diamond(*m, get(a)),
                }
            };
            memo.insert(f.ptr(), out);
        }
        memo.remove(&phi.ptr()).expect("root visited")
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Substitution) -> Substitution {
        let mut map: BTreeMap<u32, Formula> =
            inner.map.iter().map(|(k, v)| (*k, self.apply(v))).collect();
        for (k, v) in &self.map {
            map.entry(*k).or_insert_with(|| v.clone());
        }
        Substitution { map }
    }

    /// Parses lines of the form `p<k> := <formula>`; blank and `#` lines are skipped.
    pub fn parse(text: &str, language: Language) -> Result<Substitution, FormulaError> {
        let mut out = Substitution::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                let (lhs, rhs) = trimmed.split_once(":=").ok_or(FormulaError::Syntax {
                    position: offset,
                    expected: "':='".into(),
                })?;
                let var = match parse(lhs.trim(), language)?.node() {
                    Node::Var(i) => *i,
                    _ => {
                        return Err(FormulaError::Syntax {
                            position: offset,
                            expected: "variable".into(),
                        })
                    }
                };
                out.insert(var, parse(rhs.trim(), language)?);
            }
            offset += line.len();
        }
        Ok(out)
    }
}

impl FromIterator<(u32, Formula)> for Substitution {
    fn from_iter<T: IntoIterator<Item = (u32, Formula)>>(iter: T) -> Self {
        Substitution {
            map: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.map {
            writeln!(f, "p{k} := {v}")?;
        }
        Ok(())
    }
}

/// All substitutions of `true`/`false` for `vars`, lexicographic in the
/// ascending variable order with `false` before `true`.
pub fn ground_substitutions(vars: &BTreeSet<u32>) -> GroundSubstitutions {
    GroundSubstitutions {
        vars: vars.iter().copied().collect(),
        next: Some(0),
    }
}

pub struct GroundSubstitutions {
    vars: Vec<u32>,
    next: Option<u128>,
}

impl Iterator for GroundSubstitutions {
    type Item = Substitution;

    fn next(&mut self) -> Option<Substitution> {
        let code = self.next?;
        let k = self.vars.len();
        assert!(k < 128, "too many variables for ground enumeration");
        self.next = (code + 1 < (1u128 << k)).then_some(code + 1);
        Some(
            self.vars
                .iter()
                .enumerate()
                .map(|(pos, &v)| {
                    let bit = (code >> (k - 1 - pos)) & 1;
                    (
                        v,
                        if bit == 1 {
                            Formula::top()
                        } else {
                            Formula::bot()
                        },
                    )
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Modality;

    #[test]
    fn apply_examples() {
        let s: Substitution = [(1, Formula::top())].into_iter().collect();
        let phi = Formula::boxed(Modality::Univ, Formula::var(1));
        assert_eq!(
            s.apply(&phi),
            Formula::boxed(Modality::Univ, Formula::top())
        );

        let phi = parse("<>p1 -> [u](p2 | ~p1)", Language::L).unwrap();
        assert_eq!(Substitution::new().apply(&phi), phi);

        let s: Substitution = [(1, Formula::dia(Formula::var(2)))].into_iter().collect();
        let phi = parse("[]p1 & n1", Language::H2).unwrap();
        assert_eq!(s.apply(&phi), parse("[]<>p2 & n1", Language::H2).unwrap());
    }

    #[test]
    fn ground_enumeration_order() {
        let none: Vec<_> = ground_substitutions(&BTreeSet::new()).collect();
        assert_eq!(none, vec![Substitution::new()]);
        let one: Vec<_> = ground_substitutions(&[1].into()).collect();
        assert_eq!(one.len(), 2);
        assert_eq!(one[0].get(1), Some(&Formula::bot()));
        assert_eq!(one[1].get(1), Some(&Formula::top()));
        let two: Vec<String> = ground_substitutions(&[1, 2].into())
            .map(|s| s.to_string().replace('\n', ";"))
            .collect();
        assert_eq!(
            two,
            vec![
                "p1 := false;p2 := false;",
                "p1 := false;p2 := true;",
                "p1 := true;p2 := false;",
                "p1 := true;p2 := true;",
            ]
        );
    }

    #[test]
    fn text_round_trip() {
        let s: Substitution = [
            (1, parse("<>true & ~[u]p2", Language::L).unwrap()),
            (2, Formula::bot()),
        ]
        .into_iter()
        .collect();
        assert_eq!(Substitution::parse(&s.to_string(), Language::L).unwrap(), s);
    }
}
