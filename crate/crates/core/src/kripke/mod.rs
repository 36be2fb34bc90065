//! Finite Kripke frames and models, the truth relation, and frame validity.

mod text;
mod valid;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Formula, INode, Interner, Language, Modality, NodeId};

pub use text::{parse_frame, parse_valuation, write_frame, write_valuation, FrameText, TextError};
pub use valid::{frame_valid, frame_valid_with, FrameValidity, ValidityOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KripkeError {
    #[error("unknown point {0}")]
    UnknownPoint(String),
    #[error("symbol {0} has no value in the valuation")]
    UnboundSymbol(String),
    #[error("formula is not in the language of this {0} frame")]
    LanguageMismatch(Language),
    #[error("duplicate point name {0}")]
    DuplicatePoint(String),
    #[error("nominal n{0} must denote exactly one point")]
    BadNominal(u32),
    #[error("propositional encoding exceeds {0} clauses")]
    ResourceLimit(usize),
    #[error("SAT solver gave up after {0} conflicts")]
    SolverBudget(u64),
}

/// A finite frame `(W, R)` or, for H2, `(W, R, S)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    points: Vec<String>,
    index: HashMap<String, usize>,
    r: Vec<Vec<usize>>,
    s: Option<Vec<Vec<usize>>>,
}

fn adjacency(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for (x, y) in pairs {
        assert!(x < n && y < n, "edge ({x}, {y}) outside a {n}-point frame");
        adj[x].push(y);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

impl Frame {
    /// Builds a frame over named points. Edges are given by point index;
    /// `s` is present exactly for H2 frames.
    pub fn new(
        points: Vec<String>,
        r: impl IntoIterator<Item = (usize, usize)>,
        s: Option<Vec<(usize, usize)>>,
    ) -> Result<Frame, KripkeError> {
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(KripkeError::DuplicatePoint(p.clone()));
            }
        }
        let n = points.len();
        Ok(Frame {
            r: adjacency(n, r),
            s: s.map(|s| adjacency(n, s)),
            points,
            index,
        })
    }

    /// Points named `w0, w1, ...`.
    pub fn anonymous(
        n: usize,
        r: impl IntoIterator<Item = (usize, usize)>,
        s: Option<Vec<(usize, usize)>>,
    ) -> Frame {
        Frame::new((0..n).map(|i| format!("w{i}")).collect(), r, s).expect("names are unique")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> Language {
        if self.s.is_some() {
            Language::H2
        } else {
            Language::L
        }
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn name(&self, x: usize) -> &str {
        &self.points[x]
    }

    pub fn point(&self, name: &str) -> Result<usize, KripkeError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| KripkeError::UnknownPoint(name.to_string()))
    }

    /// Successors of `x` under `[]` (R) or `[h]` (S). Panics for `[u]`,
    /// which has no stored relation, and for `[h]` on an L frame.
    pub fn successors(&self, m: Modality, x: usize) -> &[usize] {
        match m {
            Modality::Rel => &self.r[x],
            Modality::Hyb => &self.s.as_ref().expect("frame has no S relation")[x],
            Modality::Univ => panic!("universal modality has no stored successor list"),
        }
    }

    pub fn relation(&self, m: Modality) -> Option<&[Vec<usize>]> {
        match m {
            Modality::Rel => Some(&self.r),
            Modality::Hyb => self.s.as_deref(),
            Modality::Univ => None,
        }
    }

    pub fn edges(&self, m: Modality) -> BTreeSet<(usize, usize)> {
        self.relation(m)
            .map(|adj| {
                adj.iter()
                    .enumerate()
                    .flat_map(|(x, ys)| ys.iter().map(move |&y| (x, y)))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn has_edge(&self, m: Modality, x: usize, y: usize) -> bool {
        self.relation(m)
            .map(|adj| adj[x].binary_search(&y).is_ok())
            .unwrap_or(false)
    }

    pub fn is_transitive(&self) -> bool {
        let edges = self.edges(Modality::Rel);
        edges
            .iter()
            .all(|&(x, y)| self.r[y].iter().all(|z| edges.contains(&(x, *z))))
    }

    pub fn check_formula(&self, phi: &Formula) -> Result<(), KripkeError> {
        let kind = self.kind();
        phi.check_language(kind)
            .map_err(|_| KripkeError::LanguageMismatch(kind))
    }
}

/// Assigns point sets to variables and single points to nominals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation {
    pub vars: BTreeMap<u32, BTreeSet<usize>>,
    pub noms: BTreeMap<u32, usize>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_var(mut self, var: u32, points: impl IntoIterator<Item = usize>) -> Self {
        self.vars.insert(var, points.into_iter().collect());
        self
    }

    pub fn with_nominal(mut self, nom: u32, point: usize) -> Self {
        self.noms.insert(nom, point);
        self
    }

    fn check_against(&self, frame: &Frame) -> Result<(), KripkeError> {
        let n = frame.len();
        for (v, set) in &self.vars {
            if let Some(&bad) = set.iter().find(|&&x| x >= n) {
                return Err(KripkeError::UnknownPoint(format!("#{bad} in p{v}")));
            }
        }
        for (i, &x) in &self.noms {
            if x >= n {
                return Err(KripkeError::BadNominal(*i));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub frame: Frame,
    pub valuation: Valuation,
}

impl Model {
    pub fn new(frame: Frame, valuation: Valuation) -> Result<Model, KripkeError> {
        valuation.check_against(&frame)?;
        Ok(Model { frame, valuation })
    }

    /// Truth value of `phi` at every point.
    pub fn extension(&self, phi: &Formula) -> Result<Vec<bool>, KripkeError> {
        self.frame.check_formula(phi)?;
        let mut interner = Interner::new();
        let root = interner.intern(phi);
        let table = evaluate_all(&self.frame, &self.valuation, &interner)?;
        Ok(table[root as usize].clone())
    }

    pub fn holds_everywhere(&self, phi: &Formula) -> Result<bool, KripkeError> {
        Ok(self.extension(phi)?.into_iter().all(|b| b))
    }
}

/// Bottom-up evaluation of every interned node at every point.
pub(crate) fn evaluate_all(
    frame: &Frame,
    valuation: &Valuation,
    interner: &Interner,
) -> Result<Vec<Vec<bool>>, KripkeError> {
    let n = frame.len();
    let mut table: Vec<Vec<bool>> = Vec::with_capacity(interner.len());
    for id in 0..interner.len() as NodeId {
        let row = evaluate_node(frame, valuation, interner.node(id), &table)?;
        table.push(row);
    }
    debug_assert!(table.iter().all(|r| r.len() == n));
    Ok(table)
}

fn evaluate_node(
    frame: &Frame,
    valuation: &Valuation,
    node: INode,
    table: &[Vec<bool>],
) -> Result<Vec<bool>, KripkeError> {
    let n = frame.len();
    let t = |id: NodeId| &table[id as usize];
    Ok(match node {
        INode::Var(v) => {
            let set = valuation
                .vars
                .get(&v)
                .ok_or_else(|| KripkeError::UnboundSymbol(format!("p{v}")))?;
            (0..n).map(|x| set.contains(&x)).collect()
        }
        INode::Nominal(i) => {
            let at = *valuation
                .noms
                .get(&i)
                .ok_or_else(|| KripkeError::UnboundSymbol(format!("n{i}")))?;
            (0..n).map(|x| x == at).collect()
        }
        INode::Top => vec![true; n],
        INode::Bot => vec![false; n],
        INode::Not(a) => t(a).iter().map(|b| !b).collect(),
        INode::And(a, b) => t(a).iter().zip(t(b)).map(|(x, y)| *x && *y).collect(),
        INode::Or(a, b) => t(a).iter().zip(t(b)).map(|(x, y)| *x || *y).collect(),
        INode::Implies(a, b) => t(a).iter().zip(t(b)).map(|(x, y)| !*x || *y).collect(),
        INode::Iff(a, b) => t(a).iter().zip(t(b)).map(|(x, y)| x == y).collect(),
        INode::Box(Modality::Univ, a) => vec![t(a).iter().all(|b| *b); n],
        INode::Diamond(Modality::Univ, a) => vec![t(a).iter().any(|b| *b); n],
        INode::Box(m, a) => {
            let ta = t(a);
            (0..n)
                .map(|x| frame.successors(m, x).iter().all(|&y| ta[y]))
                .collect()
        }
        INode::Diamond(m, a) => {
            let ta = t(a);
            (0..n)
                .map(|x| frame.successors(m, x).iter().any(|&y| ta[y]))
                .collect()
        }
    })
}

/// Whether `phi` is true at point `x` of `model`.
pub fn model_check(model: &Model, x: usize, phi: &Formula) -> Result<bool, KripkeError> {
    if x >= model.frame.len() {
        return Err(KripkeError::UnknownPoint(format!("#{x}")));
    }
    Ok(model.extension(phi)?[x])
}

/// Smallest transitive relation containing `rel`.
pub fn transitive_closure<T: Ord + Clone>(rel: &BTreeSet<(T, T)>) -> BTreeSet<(T, T)> {
    let mut succ: BTreeMap<T, BTreeSet<T>> = BTreeMap::new();
    for (a, b) in rel {
        succ.entry(a.clone()).or_default().insert(b.clone());
    }
    let mut out = BTreeSet::new();
    for start in succ.keys() {
        let mut seen: BTreeSet<T> = BTreeSet::new();
        let mut stack: Vec<T> = succ[start].iter().cloned().collect();
        while let Some(y) = stack.pop() {
            if !seen.insert(y.clone()) {
                continue;
            }
            if let Some(next) = succ.get(&y) {
                stack.extend(next.iter().filter(|z| !seen.contains(*z)).cloned());
            }
        }
        out.extend(seen.into_iter().map(|y| (start.clone(), y)));
    }
    out
}

/// Parameters of the random frame generator.
#[derive(Clone, Copy, Debug)]
pub struct RandomFrameConfig {
    pub max_points: usize,
    pub kind: Language,
    pub transitive: bool,
    /// Use `S = W×W` instead of a random S (H2 only).
    pub full_hybrid: bool,
}

/// Deterministic random frame with between 1 and `max_points` points.
pub fn random_frame(seed: u64, max_points: usize, kind: Language, transitive: bool) -> Frame {
    random_frame_with(
        seed,
        RandomFrameConfig {
            max_points,
            kind,
            transitive,
            full_hybrid: false,
        },
    )
}

pub fn random_frame_with(seed: u64, config: RandomFrameConfig) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_frame_rng(&mut rng, config)
}

pub fn random_frame_rng<R: Rng>(rng: &mut R, config: RandomFrameConfig) -> Frame {
    assert!(config.max_points >= 1, "max_points must be at least 1");
    let n = rng.gen_range(1..=config.max_points);
    let density: f64 = rng.gen_range(0.1..0.6);
    let mut r: BTreeSet<(usize, usize)> = BTreeSet::new();
    for x in 0..n {
        for y in 0..n {
            if rng.gen_bool(density) {
                r.insert((x, y));
            }
        }
    }
    if config.transitive {
        r = transitive_closure(&r);
    }
    let s = match config.kind {
        Language::L => None,
        Language::H2 if config.full_hybrid => {
            Some((0..n).flat_map(|x| (0..n).map(move |y| (x, y))).collect())
        }
        Language::H2 => {
            let sd: f64 = rng.gen_range(0.1..0.6);
            let mut s = Vec::new();
            for x in 0..n {
                for y in 0..n {
                    if rng.gen_bool(sd) {
                        s.push((x, y));
                    }
                }
            }
            Some(s)
        }
    };
    Frame::anonymous(n, r, s)
}

/// Random valuation for the given symbols: each variable holds at each point
/// with probability 1/2, each nominal lands on a uniformly chosen point.
pub fn random_valuation<R: Rng>(
    rng: &mut R,
    frame: &Frame,
    vars: &BTreeSet<u32>,
    noms: &BTreeSet<u32>,
) -> Valuation {
    let n = frame.len();
    let mut val = Valuation::new();
    for &v in vars {
        val.vars
            .insert(v, (0..n).filter(|_| rng.gen_bool(0.5)).collect());
    }
    for &i in noms {
        val.noms.insert(i, rng.gen_range(0..n));
    }
    val
}
