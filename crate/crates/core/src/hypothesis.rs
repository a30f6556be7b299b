//! Total and selective classifiers, and the concept classes they come from.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{Point, Universe};
use crate::error::{Error, Result};
use crate::parity::{BitVector, SpanClassifier};

/// A bit per universe point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable {
    len: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn zeros(len: usize) -> Self {
        TruthTable { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut t = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                t.words[i / 64] |= 1 << (i % 64);
            }
        }
        t
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        Self::from_fn(bits.len(), |i| bits[i])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        i < self.len && (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn complement(&self) -> Self {
        Self::from_fn(self.len, |i| !self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_constant(&self, value: bool) -> bool {
        if value {
            self.count_ones() == self.len
        } else {
            self.count_ones() == 0
        }
    }

    /// Content hash used as the identity key of a hypothesis.
    pub fn content_key(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update((self.len as u64).to_le_bytes());
        for w in &self.words {
            hasher.update(w.to_le_bytes());
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// `normal·x + offset > 0` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl Halfspace {
    pub fn at_angle(theta: f64, offset: f64) -> Self {
        Halfspace { normal: [theta.cos(), theta.sin()], offset }
    }

    pub fn eval(&self, coords: &[f64]) -> bool {
        self.normal[0] * coords[0] + self.normal[1] * coords[1] + self.offset > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Constant(bool),
    Table(Arc<TruthTable>),
    Halfspace(Halfspace),
    Parity(BitVector),
    Complement(Box<Rule>),
    /// A selective classifier with abstentions mapped to a fixed label.
    Collapse { inner: Arc<SelectiveHypothesis>, abstain_as: bool },
}

/// A deterministic total classifier `X -> {0,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hypothesis {
    rule: Rule,
}

impl Hypothesis {
    pub fn new(rule: Rule) -> Self {
        Hypothesis { rule }
    }

    pub fn constant(value: bool) -> Self {
        Self::new(Rule::Constant(value))
    }

    pub fn table(table: TruthTable) -> Self {
        Self::new(Rule::Table(Arc::new(table)))
    }

    pub fn halfspace(h: Halfspace) -> Self {
        Self::new(Rule::Halfspace(h))
    }

    pub fn parity(w: BitVector) -> Self {
        Self::new(Rule::Parity(w))
    }

    pub fn collapse(h: SelectiveHypothesis, abstain_as: bool) -> Self {
        Self::new(Rule::Collapse { inner: Arc::new(h), abstain_as })
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn complement(&self) -> Self {
        match &self.rule {
            Rule::Constant(v) => Self::constant(!v),
            Rule::Complement(inner) => Self::new((**inner).clone()),
            other => Self::new(Rule::Complement(Box::new(other.clone()))),
        }
    }

    pub fn eval(&self, x: &Point) -> bool {
        eval_rule(&self.rule, x)
    }

    pub fn truth_table(&self, universe: &Universe) -> TruthTable {
        TruthTable::from_fn(universe.len(), |i| self.eval(universe.point(i)))
    }

    /// Identity key: content hash of the truth table over `universe`.
    pub fn key(&self, universe: &Universe) -> u64 {
        self.truth_table(universe).content_key()
    }

    /// Whether the hypothesis can be evaluated away from universe points.
    pub fn is_geometric(&self) -> bool {
        rule_is_geometric(&self.rule)
    }
}

fn eval_rule(rule: &Rule, x: &Point) -> bool {
    match rule {
        Rule::Constant(v) => *v,
        Rule::Table(t) => t.get(x.id),
        Rule::Halfspace(h) => x.coords().is_some_and(|c| h.eval(c)),
        Rule::Parity(w) => x.bits().is_some_and(|b| w.dot(b)),
        Rule::Complement(inner) => !eval_rule(inner, x),
        Rule::Collapse { inner, abstain_as } => inner.predict(x).unwrap_or(*abstain_as),
    }
}

fn rule_is_geometric(rule: &Rule) -> bool {
    match rule {
        Rule::Constant(_) | Rule::Halfspace(_) | Rule::Parity(_) => true,
        Rule::Table(_) => false,
        Rule::Complement(inner) => rule_is_geometric(inner),
        Rule::Collapse { inner, .. } => inner.is_geometric(),
    }
}

/// Anything that maps a point to `{0, 1, ⊥}`; `None` is ⊥.
pub trait Classifier {
    fn predict(&self, x: &Point) -> Option<bool>;
}

impl Classifier for Hypothesis {
    fn predict(&self, x: &Point) -> Option<bool> {
        Some(self.eval(x))
    }
}

/// Output of one dicing pass: the base classifier on one slice
/// (`base(x) == slice`) with the regions claimed by retained dicers
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diced {
    pub base: Hypothesis,
    pub slice: bool,
    pub dicers: Vec<Hypothesis>,
    /// Set when the slice was rejected wholesale.
    pub reject_slice: bool,
}

impl Diced {
    /// Membership in the surviving event: on the slice and not claimed by
    /// any retained dicer.
    pub fn in_final_event(&self, x: &Point) -> bool {
        !self.reject_slice
            && self.base.eval(x) == self.slice
            && self.dicers.iter().all(|d| d.eval(x) == self.slice)
    }
}

impl Classifier for Diced {
    fn predict(&self, x: &Point) -> Option<bool> {
        let c = self.base.eval(x);
        if c != self.slice {
            return Some(c);
        }
        if self.reject_slice || self.dicers.iter().any(|d| d.eval(x) != self.slice) {
            None
        } else {
            Some(c)
        }
    }
}

/// A classifier `X -> {0, 1, ⊥}` whose parts stay inspectable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectiveHypothesis {
    Total(Hypothesis),
    Abstain,
    /// Outputs the common label when both parts agree, ⊥ otherwise.
    Agreement(Box<SelectiveHypothesis>, Box<SelectiveHypothesis>),
    Diced(Diced),
    Span(SpanClassifier),
}

impl SelectiveHypothesis {
    pub fn agreement(a: SelectiveHypothesis, b: SelectiveHypothesis) -> Self {
        SelectiveHypothesis::Agreement(Box::new(a), Box::new(b))
    }

    pub fn is_geometric(&self) -> bool {
        match self {
            SelectiveHypothesis::Total(h) => h.is_geometric(),
            SelectiveHypothesis::Abstain => true,
            SelectiveHypothesis::Agreement(a, b) => a.is_geometric() && b.is_geometric(),
            SelectiveHypothesis::Diced(d) => {
                d.base.is_geometric() && d.dicers.iter().all(Hypothesis::is_geometric)
            }
            SelectiveHypothesis::Span(_) => true,
        }
    }
}

impl Classifier for SelectiveHypothesis {
    fn predict(&self, x: &Point) -> Option<bool> {
        match self {
            SelectiveHypothesis::Total(h) => Some(h.eval(x)),
            SelectiveHypothesis::Abstain => None,
            SelectiveHypothesis::Agreement(a, b) => match (a.predict(x), b.predict(x)) {
                (Some(u), Some(v)) if u == v => Some(u),
                _ => None,
            },
            SelectiveHypothesis::Diced(d) => d.predict(x),
            SelectiveHypothesis::Span(s) => s.predict(x),
        }
    }
}

/// A collection of hypotheses, either listed or generated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ConceptClass {
    Explicit(Vec<Hypothesis>),
    /// Constants plus `angles × offsets` planar halfspaces; offsets span
    /// `[-R, R]` with `R` the universe radius.
    Halfspaces { angles: usize, offsets: usize },
    /// Constants plus halfspaces through the origin.
    HomogeneousHalfspaces { angles: usize },
    /// Every parity over `{0,1}^dim` plus the constant 1 function.
    Parities { dim: usize },
}

impl ConceptClass {
    pub const ENUMERATION_CAP: u128 = 1 << 22;
    /// Bound on `members × universe` bits held by a materialized class.
    pub const TABLE_BITS_CAP: u128 = 1 << 32;

    pub fn enumeration_size(&self) -> u128 {
        match self {
            ConceptClass::Explicit(v) => v.len() as u128,
            ConceptClass::Halfspaces { angles, offsets } => 2 + (*angles as u128) * (*offsets as u128),
            ConceptClass::HomogeneousHalfspaces { angles } => 2 + *angles as u128,
            ConceptClass::Parities { dim } => 1 + (1u128 << (*dim).min(100)),
        }
    }

    /// Members in deterministic order; parametric families list the
    /// constants 0 and 1 first.
    pub fn enumerate(&self, universe: &Universe) -> Result<Vec<Hypothesis>> {
        let size = self.enumeration_size();
        if size > Self::ENUMERATION_CAP {
            return Err(Error::ResolutionCap { size, cap: Self::ENUMERATION_CAP });
        }
        let constants = [Hypothesis::constant(false), Hypothesis::constant(true)];
        Ok(match self {
            ConceptClass::Explicit(v) => v.clone(),
            ConceptClass::Halfspaces { angles, offsets } => {
                let radius = match universe.radius() {
                    r if r > 0.0 => r,
                    _ => 1.0,
                };
                let offs: Vec<f64> = if *offsets <= 1 {
                    vec![0.0]
                } else {
                    (0..*offsets)
                        .map(|k| -radius + 2.0 * radius * k as f64 / (*offsets - 1) as f64)
                        .collect()
                };
                let mut out = constants.to_vec();
                for a in 0..*angles {
                    let theta = 2.0 * PI * a as f64 / *angles as f64;
                    out.extend(offs.iter().map(|&b| Hypothesis::halfspace(Halfspace::at_angle(theta, b))));
                }
                out
            }
            ConceptClass::HomogeneousHalfspaces { angles } => {
                let mut out = constants.to_vec();
                out.extend((0..*angles).map(|a| {
                    Hypothesis::halfspace(Halfspace::at_angle(2.0 * PI * a as f64 / *angles as f64, 0.0))
                }));
                out
            }
            ConceptClass::Parities { dim } => {
                let mut out: Vec<_> = (0..1u64 << dim)
                    .map(|w| Hypothesis::parity(BitVector::from_index(*dim, w)))
                    .collect();
                out.push(Hypothesis::constant(true));
                out
            }
        })
    }

    pub fn materialize(&self, universe: &Arc<Universe>) -> Result<MaterializedClass> {
        let bits = self.enumeration_size() * universe.len() as u128;
        if bits > Self::TABLE_BITS_CAP {
            return Err(Error::ResolutionCap { size: bits, cap: Self::TABLE_BITS_CAP });
        }
        Ok(MaterializedClass::from_members(universe.clone(), self.enumerate(universe)?))
    }
}

/// A concept class evaluated on a universe: members deduplicated by truth
/// table, first occurrence wins.
#[derive(Debug, Clone)]
pub struct MaterializedClass {
    universe: Arc<Universe>,
    members: Vec<Hypothesis>,
    tables: Vec<TruthTable>,
    keys: Vec<u64>,
}

impl MaterializedClass {
    pub fn from_members(universe: Arc<Universe>, members: Vec<Hypothesis>) -> Self {
        let mut seen = HashSet::new();
        let mut out = MaterializedClass {
            universe,
            members: Vec::new(),
            tables: Vec::new(),
            keys: Vec::new(),
        };
        for h in members {
            let table = h.truth_table(&out.universe);
            let key = table.content_key();
            if seen.insert(key) {
                out.members.push(h);
                out.tables.push(table);
                out.keys.push(key);
            }
        }
        out
    }

    pub fn from_tables(universe: Arc<Universe>, tables: Vec<TruthTable>) -> Self {
        Self::from_members(universe, tables.into_iter().map(Hypothesis::table).collect())
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, i: usize) -> &Hypothesis {
        &self.members[i]
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }

    pub fn table(&self, i: usize) -> &TruthTable {
        &self.tables[i]
    }

    pub fn tables(&self) -> &[TruthTable] {
        &self.tables
    }

    pub fn key(&self, i: usize) -> u64 {
        self.keys[i]
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn contains_constant(&self, value: bool) -> bool {
        self.tables.iter().any(|t| t.is_constant(value))
    }

    pub fn position(&self, h: &Hypothesis) -> Option<usize> {
        let key = h.key(&self.universe);
        self.keys.iter().position(|&k| k == key)
    }

    /// The complemented class, preserving member order.
    pub fn complement(&self) -> Self {
        MaterializedClass {
            universe: self.universe.clone(),
            members: self.members.iter().map(Hypothesis::complement).collect(),
            tables: self.tables.iter().map(TruthTable::complement).collect(),
            keys: self.tables.iter().map(|t| t.complement().content_key()).collect(),
        }
    }
}
