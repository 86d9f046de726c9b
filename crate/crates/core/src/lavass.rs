//! Labelled affine VASS: finite control, natural-number counters with affine
//! updates, transitions labelled by sets of columns.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::encoding::{column_mask, column_to_string, Column, Word, MAX_ARITY};
use crate::error::{AutomatonError, ParseError};
use crate::regular::Dfa;

/// `x ↦ a·x + b`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineFn {
    pub a: i64,
    pub b: i64,
}

impl AffineFn {
    pub const ID: AffineFn = AffineFn { a: 1, b: 0 };
    pub const INC: AffineFn = AffineFn { a: 1, b: 1 };
    pub const DBL: AffineFn = AffineFn { a: 2, b: 0 };
    pub const DBL1: AffineFn = AffineFn { a: 2, b: 1 };

    pub fn new(a: i64, b: i64) -> Self {
        AffineFn { a, b }
    }

    /// `None` when the result would be negative.
    pub fn apply(&self, x: &BigUint) -> Option<BigUint> {
        if self.a >= 0 && self.b >= 0 {
            return Some(x * self.a as u64 + self.b as u64);
        }
        let v = num_bigint::BigInt::from(x.clone()) * self.a + self.b;
        v.to_biguint()
    }

    pub fn is_restricted_op(&self) -> bool {
        matches!(*self, AffineFn::ID | AffineFn::INC | AffineFn::DBL | AffineFn::DBL1)
    }
}

impl fmt::Display for AffineFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AffineFn::ID => f.write_str("id"),
            AffineFn::INC => f.write_str("++"),
            AffineFn::DBL => f.write_str("x2"),
            AffineFn::DBL1 => f.write_str("x2+1"),
            AffineFn { a, b } => write!(f, "{a}x{b:+}"),
        }
    }
}

impl std::str::FromStr for AffineFn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "id" => return Ok(AffineFn::ID),
            "++" => return Ok(AffineFn::INC),
            "x2" => return Ok(AffineFn::DBL),
            "x2+1" => return Ok(AffineFn::DBL1),
            _ => {}
        }
        // general form `<a>x<+b|-b>`
        let (a, b) = s.split_once('x').ok_or_else(|| format!("bad update `{s}`"))?;
        let a: i64 = a.parse().map_err(|_| format!("bad update `{s}`"))?;
        let b: i64 = if b.is_empty() { 0 } else { b.trim_start_matches('+').parse().map_err(|_| format!("bad update `{s}`"))? };
        Ok(AffineFn { a, b })
    }
}

/// A set of packed columns over a fixed arity, stored as a bitmask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ColumnSet {
    arity: usize,
    bits: Vec<u64>,
}

impl fmt::Debug for ColumnSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl ColumnSet {
    fn words(arity: usize) -> usize {
        (1usize << arity).div_ceil(64)
    }

    pub fn empty(arity: usize) -> Self {
        assert!(arity <= MAX_ARITY);
        ColumnSet { arity, bits: vec![0; Self::words(arity)] }
    }

    pub fn full(arity: usize) -> Self {
        let mut s = Self::empty(arity);
        for c in 0..(1u32 << arity) {
            s.insert(c);
        }
        s
    }

    pub fn from_columns(arity: usize, cols: impl IntoIterator<Item = Column>) -> Self {
        let mut s = Self::empty(arity);
        for c in cols {
            s.insert(c);
        }
        s
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn insert(&mut self, c: Column) {
        self.bits[(c / 64) as usize] |= 1 << (c % 64);
    }

    pub fn contains(&self, c: Column) -> bool {
        (c as usize) < (1 << self.arity) && self.bits[(c / 64) as usize] >> (c % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersect(&self, other: &ColumnSet) -> ColumnSet {
        assert_eq!(self.arity, other.arity);
        ColumnSet { arity: self.arity, bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect() }
    }

    pub fn union_with(&mut self, other: &ColumnSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Column> + '_ {
        (0..(1u32 << self.arity)).filter(move |&c| self.contains(c))
    }

    pub fn first(&self) -> Option<Column> {
        self.iter().next()
    }

    /// Image under dropping row `pos`.
    pub fn project(&self, pos: usize) -> ColumnSet {
        let low = (1u32 << pos) - 1;
        ColumnSet::from_columns(self.arity - 1, self.iter().map(|c| (c & low) | ((c >> (pos + 1)) << pos)))
    }

    /// Preimage under dropping a row inserted at `pos`.
    pub fn inverse_project(&self, pos: usize) -> ColumnSet {
        let low = (1u32 << pos) - 1;
        let mut out = ColumnSet::empty(self.arity + 1);
        for c in self.iter() {
            let base = (c & low) | ((c & !low) << 1);
            out.insert(base);
            out.insert(base | (1 << pos));
        }
        out
    }

    /// Maps columns over `from` rows into columns over `to` rows, where
    /// `map[j]` is the row in `to` holding row `j` of `from`; rows of `to`
    /// not in the image are free.
    pub fn embed(&self, map: &[usize], to_arity: usize) -> ColumnSet {
        let mut out = ColumnSet::empty(to_arity);
        for c in 0..(1u32 << to_arity) {
            let mut src: Column = 0;
            for (j, &r) in map.iter().enumerate() {
                if c >> r & 1 == 1 {
                    src |= 1 << j;
                }
            }
            if self.contains(src) {
                out.insert(c);
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        if self.len() == 1 << self.arity {
            return ".".into();
        }
        self.iter().map(|c| column_to_string(c, self.arity)).collect()
    }

    pub fn parse(text: &str, arity: usize) -> Result<ColumnSet, String> {
        let text = text.trim();
        if text == "." {
            return Ok(ColumnSet::full(arity));
        }
        let w = Word::parse(text, arity).map_err(|e| e.message)?;
        Ok(ColumnSet::from_columns(arity, w.columns().iter().copied()))
    }
}

/// Quantifier-free constraint on final counter values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CounterFormula {
    True,
    False,
    Eq(usize, usize),
    EqConst(usize, u64),
    And(Vec<CounterFormula>),
    Or(Vec<CounterFormula>),
}

impl CounterFormula {
    /// `x_i = y_i` for every pair of a restricted machine.
    pub fn pairs_equal(pairs: usize) -> CounterFormula {
        match pairs {
            0 => CounterFormula::True,
            1 => CounterFormula::Eq(0, 1),
            _ => CounterFormula::And((0..pairs).map(|i| CounterFormula::Eq(2 * i, 2 * i + 1)).collect()),
        }
    }

    pub fn eval(&self, c: &[BigUint]) -> bool {
        match self {
            CounterFormula::True => true,
            CounterFormula::False => false,
            CounterFormula::Eq(i, j) => c[*i] == c[*j],
            CounterFormula::EqConst(i, k) => c[*i] == BigUint::from(*k),
            CounterFormula::And(fs) => fs.iter().all(|f| f.eval(c)),
            CounterFormula::Or(fs) => fs.iter().any(|f| f.eval(c)),
        }
    }

    pub fn shift(&self, by: usize) -> CounterFormula {
        match self {
            CounterFormula::Eq(i, j) => CounterFormula::Eq(i + by, j + by),
            CounterFormula::EqConst(i, k) => CounterFormula::EqConst(i + by, *k),
            CounterFormula::And(fs) => CounterFormula::And(fs.iter().map(|f| f.shift(by)).collect()),
            CounterFormula::Or(fs) => CounterFormula::Or(fs.iter().map(|f| f.shift(by)).collect()),
            other => other.clone(),
        }
    }

    /// The conjuncts, flattening nested `And`s.
    fn conjuncts(&self) -> Vec<&CounterFormula> {
        match self {
            CounterFormula::And(fs) => fs.iter().flat_map(|f| f.conjuncts()).collect(),
            CounterFormula::True => Vec::new(),
            other => vec![other],
        }
    }

    fn max_counter(&self) -> Option<usize> {
        match self {
            CounterFormula::Eq(i, j) => Some(*i.max(j)),
            CounterFormula::EqConst(i, _) => Some(*i),
            CounterFormula::And(fs) | CounterFormula::Or(fs) => fs.iter().filter_map(|f| f.max_counter()).max(),
            _ => None,
        }
    }

    pub fn parse(text: &str) -> Result<CounterFormula, String> {
        let tokens = tokenize_phi(text)?;
        let mut pos = 0;
        let f = parse_phi_or(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(format!("trailing input in counter formula: `{}`", tokens[pos..].join(" ")));
        }
        Ok(f)
    }
}

impl fmt::Display for CounterFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterFormula::True => f.write_str("true"),
            CounterFormula::False => f.write_str("false"),
            CounterFormula::Eq(i, j) => write!(f, "c{i}=c{j}"),
            CounterFormula::EqConst(i, k) => write!(f, "c{i}={k}"),
            CounterFormula::And(fs) if fs.is_empty() => f.write_str("true"),
            CounterFormula::Or(fs) if fs.is_empty() => f.write_str("false"),
            CounterFormula::And(fs) | CounterFormula::Or(fs) => {
                let sep = if matches!(self, CounterFormula::And(_)) { " & " } else { " | " };
                f.write_str("(")?;
                for (k, g) in fs.iter().enumerate() {
                    if k > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{g}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn tokenize_phi(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if "()&|=".contains(c) {
            out.push(c.to_string());
            chars.next();
        } else if c.is_ascii_alphanumeric() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() {
                    s.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(s);
        } else {
            return Err(format!("unexpected `{c}` in counter formula"));
        }
    }
    Ok(out)
}

fn parse_phi_or(t: &[String], pos: &mut usize) -> Result<CounterFormula, String> {
    let mut parts = vec![parse_phi_and(t, pos)?];
    while t.get(*pos).map(String::as_str) == Some("|") {
        *pos += 1;
        parts.push(parse_phi_and(t, pos)?);
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { CounterFormula::Or(parts) })
}

fn parse_phi_and(t: &[String], pos: &mut usize) -> Result<CounterFormula, String> {
    let mut parts = vec![parse_phi_atom(t, pos)?];
    while t.get(*pos).map(String::as_str) == Some("&") {
        *pos += 1;
        parts.push(parse_phi_atom(t, pos)?);
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { CounterFormula::And(parts) })
}

fn parse_phi_atom(t: &[String], pos: &mut usize) -> Result<CounterFormula, String> {
    let tok = t.get(*pos).ok_or("unexpected end of counter formula")?.clone();
    *pos += 1;
    match tok.as_str() {
        "true" => Ok(CounterFormula::True),
        "false" => Ok(CounterFormula::False),
        "(" => {
            let f = parse_phi_or(t, pos)?;
            if t.get(*pos).map(String::as_str) != Some(")") {
                return Err("missing `)` in counter formula".into());
            }
            *pos += 1;
            Ok(f)
        }
        _ => {
            let lhs = counter_index(&tok)?;
            if t.get(*pos).map(String::as_str) != Some("=") {
                return Err(format!("expected `=` after `{tok}`"));
            }
            *pos += 1;
            let rhs = t.get(*pos).ok_or("unexpected end of counter formula")?;
            *pos += 1;
            if let Ok(k) = rhs.parse::<u64>() {
                Ok(CounterFormula::EqConst(lhs, k))
            } else {
                Ok(CounterFormula::Eq(lhs, counter_index(rhs)?))
            }
        }
    }
}

fn counter_index(tok: &str) -> Result<usize, String> {
    tok.strip_prefix('c').and_then(|n| n.parse().ok()).ok_or_else(|| format!("bad counter name `{tok}`"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub symbols: ColumnSet,
    pub updates: Vec<AffineFn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub state: usize,
    pub counters: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lavass {
    pub vars: Vec<String>,
    pub num_states: usize,
    pub dim: usize,
    pub init: usize,
    pub finals: Vec<bool>,
    pub transitions: Vec<Transition>,
    pub phi: CounterFormula,
}

/// Witness that a machine is restricted: the possible sets of started
/// pairs (bitmasks) with which each control state is reachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedShape {
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<BTreeSet<u64>>,
}

impl RestrictedShape {
    /// Pairs that are started on some run reaching `q`.
    pub fn started(&self, q: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &mask in &self.labels[q] {
            for i in 0..self.pairs.len() {
                if mask >> i & 1 == 1 {
                    out.insert(i);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not restricted: {0}")]
pub struct Violation(pub String);

impl Lavass {
    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn pairs(&self) -> usize {
        self.dim / 2
    }

    pub fn initial_config(&self) -> Config {
        Config { state: self.init, counters: vec![BigUint::zero(); self.dim] }
    }

    /// A 0-dimensional machine with the DFA's language.
    pub fn from_dfa(d: &Dfa) -> Lavass {
        let arity = d.arity();
        let n = d.num_states();
        let mut transitions = Vec::new();
        for q in 0..n {
            let mut by_target: Vec<(usize, ColumnSet)> = Vec::new();
            for col in 0..(1u32 << arity) {
                let t = d.step(q as u32, col) as usize;
                match by_target.iter_mut().find(|(to, _)| *to == t) {
                    Some((_, s)) => s.insert(col),
                    None => by_target.push((t, ColumnSet::from_columns(arity, [col]))),
                }
            }
            for (to, symbols) in by_target {
                transitions.push(Transition { from: q, to, symbols, updates: Vec::new() });
            }
        }
        Lavass {
            vars: d.vars().to_vec(),
            num_states: n,
            dim: 0,
            init: d.init() as usize,
            finals: (0..n).map(|q| d.is_accepting(q as u32)).collect(),
            transitions,
            phi: CounterFormula::True,
        }
    }

    /// Machine accepting nothing.
    pub fn empty(vars: Vec<String>, dim: usize) -> Lavass {
        Lavass {
            vars,
            num_states: 2,
            dim,
            init: 0,
            finals: vec![false, false],
            transitions: Vec::new(),
            phi: CounterFormula::pairs_equal(dim / 2),
        }
    }

    pub fn outgoing(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_states];
        for (i, t) in self.transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        out
    }

    fn apply(&self, t: &Transition, c: &Config) -> Option<Config> {
        let counters = c.counters.iter().zip(&t.updates).map(|(v, f)| f.apply(v)).collect::<Option<Vec<_>>>()?;
        Some(Config { state: t.to, counters })
    }

    /// All successors of `c` reading `col`; negative results are dropped.
    pub fn step(&self, c: &Config, col: Column) -> Vec<Config> {
        let mut out: Vec<Config> = self
            .transitions
            .iter()
            .filter(|t| t.from == c.state && t.symbols.contains(col))
            .filter_map(|t| self.apply(t, c))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn is_accepting(&self, c: &Config) -> bool {
        self.finals[c.state] && self.phi.eval(&c.counters)
    }

    pub fn accepts(&self, w: &Word) -> bool {
        assert_eq!(w.arity(), self.arity(), "word arity differs from machine arity");
        let out = self.outgoing();
        let mut current: HashSet<Config> = HashSet::from([self.initial_config()]);
        for &col in w.columns() {
            let mut next = HashSet::new();
            for c in &current {
                for &ti in &out[c.state] {
                    let t = &self.transitions[ti];
                    if t.symbols.contains(col) {
                        if let Some(n) = self.apply(t, c) {
                            next.insert(n);
                        }
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            current = next;
        }
        current.iter().any(|c| self.is_accepting(c))
    }

    /// Product machine with `Φ1 ∧ Φ2` and counters of `other` appended.
    pub fn intersect(&self, other: &Lavass) -> Result<Lavass, AutomatonError> {
        if self.vars != other.vars {
            if self.arity() != other.arity() {
                return Err(AutomatonError::ArityMismatch(self.arity(), other.arity()));
            }
            return Err(AutomatonError::OrderMismatch(self.vars.clone(), other.vars.clone()));
        }
        let out1 = self.outgoing();
        let out2 = other.outgoing();
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut states = vec![(self.init, other.init)];
        ids.insert((self.init, other.init), 0);
        let mut transitions = Vec::new();
        let mut i = 0;
        while i < states.len() {
            let (p, q) = states[i];
            for &a in &out1[p] {
                for &b in &out2[q] {
                    let (ta, tb) = (&self.transitions[a], &other.transitions[b]);
                    let symbols = ta.symbols.intersect(&tb.symbols);
                    if symbols.is_empty() {
                        continue;
                    }
                    let key = (ta.to, tb.to);
                    let to = *ids.entry(key).or_insert_with(|| {
                        states.push(key);
                        states.len() - 1
                    });
                    let mut updates = ta.updates.clone();
                    updates.extend_from_slice(&tb.updates);
                    transitions.push(Transition { from: i, to, symbols, updates });
                }
            }
            i += 1;
        }
        let finals = states.iter().map(|&(p, q)| self.finals[p] && other.finals[q]).collect();
        let phi = match (&self.phi, &other.phi) {
            (CounterFormula::True, g) => g.shift(self.dim),
            (f, CounterFormula::True) => f.clone(),
            (f, g) => {
                let mut parts: Vec<CounterFormula> = f.conjuncts().into_iter().cloned().collect();
                parts.extend(g.shift(self.dim).conjuncts().into_iter().cloned());
                CounterFormula::And(parts)
            }
        };
        Ok(Lavass {
            vars: self.vars.clone(),
            num_states: states.len(),
            dim: self.dim + other.dim,
            init: 0,
            finals,
            transitions,
            phi,
        })
    }

    /// Disjoint union behind a fresh initial state. Two marker counters
    /// record which side a run entered, so each side keeps its own `Φ`.
    pub fn union(&self, other: &Lavass) -> Result<Lavass, AutomatonError> {
        if self.vars != other.vars {
            if self.arity() != other.arity() {
                return Err(AutomatonError::ArityMismatch(self.arity(), other.arity()));
            }
            return Err(AutomatonError::OrderMismatch(self.vars.clone(), other.vars.clone()));
        }
        let (d1, d2) = (self.dim, other.dim);
        let dim = d1 + d2 + 2;
        let (ml, mr) = (d1 + d2, d1 + d2 + 1);
        let off1 = 1;
        let off2 = 1 + self.num_states;
        let lift = |t: &Transition, off: usize, left: bool, from: usize| {
            let mut updates = vec![AffineFn::ID; dim];
            let base = if left { 0 } else { d1 };
            updates[base..base + t.updates.len()].copy_from_slice(&t.updates);
            if from == 0 {
                updates[if left { ml } else { mr }] = AffineFn::INC;
            }
            Transition { from, to: t.to + off, symbols: t.symbols.clone(), updates }
        };
        let mut transitions = Vec::new();
        for t in &self.transitions {
            transitions.push(lift(t, off1, true, t.from + off1));
            if t.from == self.init {
                transitions.push(lift(t, off1, true, 0));
            }
        }
        for t in &other.transitions {
            transitions.push(lift(t, off2, false, t.from + off2));
            if t.from == other.init {
                transitions.push(lift(t, off2, false, 0));
            }
        }
        let eps = (self.finals[self.init] && self.phi.eval(&vec![BigUint::zero(); d1]))
            || (other.finals[other.init] && other.phi.eval(&vec![BigUint::zero(); d2]));
        let mut finals = vec![eps];
        finals.extend_from_slice(&self.finals);
        finals.extend_from_slice(&other.finals);
        let phi = CounterFormula::Or(vec![
            CounterFormula::And(vec![CounterFormula::EqConst(ml, 1), self.phi.clone()]),
            CounterFormula::And(vec![CounterFormula::EqConst(mr, 1), other.phi.shift(d1)]),
            CounterFormula::And(vec![CounterFormula::EqConst(ml, 0), CounterFormula::EqConst(mr, 0)]),
        ]);
        Ok(Lavass {
            vars: self.vars.clone(),
            num_states: 1 + self.num_states + other.num_states,
            dim,
            init: 0,
            finals,
            transitions,
            phi,
        })
    }

    pub fn project(&self, var: &str) -> Result<Lavass, AutomatonError> {
        let pos = self.vars.iter().position(|v| v == var).ok_or_else(|| AutomatonError::UnknownVariable(var.into()))?;
        let mut vars = self.vars.clone();
        vars.remove(pos);
        let transitions =
            self.transitions.iter().map(|t| Transition { symbols: t.symbols.project(pos), ..t.clone() }).collect();
        Ok(Lavass { vars, transitions, ..self.clone() })
    }

    pub fn inverse_project(&self, var: &str, pos: usize) -> Result<Lavass, AutomatonError> {
        if self.vars.iter().any(|v| v == var) {
            return Err(AutomatonError::DuplicateVariable(var.into()));
        }
        if self.arity() + 1 > MAX_ARITY {
            return Err(AutomatonError::TooWide(self.arity() + 1));
        }
        let mut vars = self.vars.clone();
        vars.insert(pos.min(vars.len()), var.to_string());
        let pos = pos.min(self.vars.len());
        let transitions = self
            .transitions
            .iter()
            .map(|t| Transition { symbols: t.symbols.inverse_project(pos), ..t.clone() })
            .collect();
        Ok(Lavass { vars, transitions, ..self.clone() })
    }

    /// Re-labels the alphabet onto `target`, a superset of the machine's
    /// variables (any order); extra rows are unconstrained.
    pub fn cylindrify(&self, target: &[String]) -> Result<Lavass, AutomatonError> {
        if target.len() > MAX_ARITY {
            return Err(AutomatonError::TooWide(target.len()));
        }
        let map = self
            .vars
            .iter()
            .map(|v| target.iter().position(|t| t == v).ok_or_else(|| AutomatonError::UnknownVariable(v.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let transitions = self
            .transitions
            .iter()
            .map(|t| Transition { symbols: t.symbols.embed(&map, target.len()), ..t.clone() })
            .collect();
        Ok(Lavass { vars: target.to_vec(), transitions, ..self.clone() })
    }

    /// Drops control states that are unreachable from the initial state or
    /// cannot reach a final state, merges transitions that differ only in
    /// their symbols, and pads to at least two states.
    pub fn trim(&self) -> Lavass {
        let n = self.num_states;
        let mut fwd = vec![false; n];
        let mut back = vec![false; n];
        let out = self.outgoing();
        let mut inc = vec![Vec::new(); n];
        for t in &self.transitions {
            inc[t.to].push(t.from);
        }
        let mut queue = VecDeque::from([self.init]);
        fwd[self.init] = true;
        while let Some(q) = queue.pop_front() {
            for &ti in &out[q] {
                let to = self.transitions[ti].to;
                if !fwd[to] {
                    fwd[to] = true;
                    queue.push_back(to);
                }
            }
        }
        for (q, b) in back.iter_mut().enumerate() {
            if self.finals[q] {
                *b = true;
                queue.push_back(q);
            }
        }
        while let Some(q) = queue.pop_front() {
            for &p in &inc[q] {
                if !back[p] {
                    back[p] = true;
                    queue.push_back(p);
                }
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut next = 0;
        map[self.init] = 0;
        next += 1;
        for q in 0..n {
            if q != self.init && fwd[q] && back[q] {
                map[q] = next;
                next += 1;
            }
        }
        let keep = |q: usize| q == self.init || (fwd[q] && back[q]);
        let mut transitions: Vec<Transition> = Vec::new();
        let mut index: HashMap<(usize, usize, Vec<AffineFn>), usize> = HashMap::new();
        for t in &self.transitions {
            if !(keep(t.from) && keep(t.to) && back[t.to]) {
                continue;
            }
            let key = (map[t.from], map[t.to], t.updates.clone());
            match index.get(&key) {
                Some(&i) => transitions[i].symbols.union_with(&t.symbols),
                None => {
                    index.insert(key, transitions.len());
                    transitions.push(Transition { from: map[t.from], to: map[t.to], ..t.clone() });
                }
            }
        }
        let mut finals = vec![false; next];
        for q in 0..n {
            if map[q] != usize::MAX {
                finals[map[q]] = self.finals[q];
            }
        }
        while finals.len() < 2 {
            finals.push(false);
        }
        Lavass {
            vars: self.vars.clone(),
            num_states: finals.len(),
            dim: self.dim,
            init: 0,
            finals,
            transitions,
            phi: self.phi.clone(),
        }
    }

    /// True when no final state is reachable in the control graph.
    pub fn control_empty(&self) -> bool {
        let t = self.trim();
        !t.finals.iter().any(|&f| f)
    }

    pub fn validate_restricted(&self) -> Result<RestrictedShape, Violation> {
        if !self.dim.is_multiple_of(2) {
            return Err(Violation(format!("odd number of counters ({})", self.dim)));
        }
        let d = self.pairs();
        if d > 64 {
            return Err(Violation("more than 64 counter pairs".into()));
        }
        let expected: BTreeSet<(usize, usize)> = (0..d).map(|i| (2 * i, 2 * i + 1)).collect();
        let mut got = BTreeSet::new();
        for c in self.phi.conjuncts() {
            match c {
                CounterFormula::Eq(i, j) => {
                    got.insert((*i.min(j), *i.max(j)));
                }
                other => return Err(Violation(format!("final constraint has non-pair conjunct `{other}`"))),
            }
        }
        if got != expected {
            return Err(Violation(format!("final constraint `{}` is not x_i = y_i for every pair", self.phi)));
        }
        for (k, t) in self.transitions.iter().enumerate() {
            if t.updates.len() != self.dim {
                return Err(Violation(format!("transition {k} has {} updates, expected {}", t.updates.len(), self.dim)));
            }
            for i in 0..d {
                let (fx, fy) = (t.updates[2 * i], t.updates[2 * i + 1]);
                if fx != AffineFn::ID && fx != AffineFn::INC {
                    return Err(Violation(format!("pair {} x-counter uses `{fx}` on transition {k}", i + 1)));
                }
                if fy != AffineFn::DBL && fy != AffineFn::DBL1 {
                    return Err(Violation(format!("pair {} y-counter uses `{fy}` on transition {k}", i + 1)));
                }
            }
        }
        let out = self.outgoing();
        let mut labels = vec![BTreeSet::new(); self.num_states];
        labels[self.init].insert(0u64);
        let mut queue = VecDeque::from([(self.init, 0u64)]);
        while let Some((q, mask)) = queue.pop_front() {
            for &k in &out[q] {
                let t = &self.transitions[k];
                let mut next = mask;
                for i in 0..d {
                    let inc = t.updates[2 * i] == AffineFn::INC;
                    if mask >> i & 1 == 1 && !inc {
                        return Err(Violation(format!(
                            "pair {} is started at state {q} but transition {k} ({q}->{}) does not increment its x-counter",
                            i + 1,
                            t.to
                        )));
                    }
                    if inc {
                        next |= 1 << i;
                    }
                }
                if labels[t.to].insert(next) {
                    queue.push_back((t.to, next));
                }
            }
        }
        Ok(RestrictedShape { pairs: (0..d).map(|i| (2 * i, 2 * i + 1)).collect(), labels })
    }

    pub fn is_restricted(&self) -> bool {
        self.validate_restricted().is_ok()
    }

    /// Breadth-first search over concrete configurations for an accepted
    /// word of length at most `max_len`. `None` does not imply emptiness.
    pub fn bounded_nonempty(&self, max_len: usize) -> Option<Word> {
        self.bounded_nonempty_capped(max_len, 200_000)
    }

    pub fn bounded_nonempty_capped(&self, max_len: usize, layer_cap: usize) -> Option<Word> {
        let restricted = self.is_restricted();
        let out = self.outgoing();
        let init = self.initial_config();
        if self.is_accepting(&init) {
            return Some(Word::empty(self.arity()));
        }
        // per layer: configs and (parent index, column)
        let mut layers: Vec<Vec<(Config, usize, Column)>> = vec![vec![(init, usize::MAX, 0)]];
        for len in 1..=max_len {
            let rem = (max_len - len) as u32;
            let mut seen: HashSet<Config> = HashSet::new();
            let mut next = Vec::new();
            let prev = layers.last().unwrap();
            'outer: for (pi, (c, _, _)) in prev.iter().enumerate() {
                for &k in &out[c.state] {
                    let t = &self.transitions[k];
                    let Some(n) = self.apply(t, c) else { continue };
                    if restricted && hopeless(&n, rem) {
                        continue;
                    }
                    if seen.insert(n.clone()) {
                        let col = t.symbols.first().expect("transitions have non-empty symbol sets");
                        if self.is_accepting(&n) {
                            next.push((n, pi, col));
                            layers.push(next);
                            return Some(self.rebuild(&layers));
                        }
                        next.push((n, pi, col));
                        if next.len() >= layer_cap {
                            break 'outer;
                        }
                    }
                }
            }
            if next.is_empty() {
                return None;
            }
            layers.push(next);
        }
        None
    }

    fn rebuild(&self, layers: &[Vec<(Config, usize, Column)>]) -> Word {
        let mut cols = Vec::new();
        let mut idx = layers.last().unwrap().len() - 1;
        for layer in layers.iter().skip(1).rev() {
            let (_, parent, col) = &layer[idx];
            cols.push(*col);
            idx = *parent;
        }
        cols.reverse();
        Word::new(self.arity(), cols)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "lavass").unwrap();
        writeln!(s, "vars {}", self.vars.join(" ")).unwrap();
        writeln!(s, "states {}", self.num_states).unwrap();
        writeln!(s, "counters {}", self.dim).unwrap();
        writeln!(s, "init {}", self.init).unwrap();
        let finals: Vec<String> = (0..self.num_states).filter(|&q| self.finals[q]).map(|q| q.to_string()).collect();
        writeln!(s, "final {}", finals.join(" ")).unwrap();
        writeln!(s, "phi {}", self.phi).unwrap();
        for t in &self.transitions {
            let ops: Vec<String> = t.updates.iter().map(|u| u.to_string()).collect();
            writeln!(s, "{} -[{}: {}]-> {}", t.from, t.symbols.to_text(), ops.join(" "), t.to).unwrap();
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Lavass, ParseError> {
        let mut vars: Option<Vec<String>> = None;
        let mut num_states = None;
        let mut dim = 0;
        let mut init = 0;
        let mut finals_list = Vec::new();
        let mut phi = CounterFormula::True;
        let mut transitions = Vec::new();
        let mut saw_header = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            let lno = ln + 1;
            let err = |m: String| ParseError::at(lno, 1, m);
            if line.is_empty() {
                continue;
            }
            if !saw_header {
                if line != "lavass" {
                    return Err(err("expected `lavass` header".into()));
                }
                saw_header = true;
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match key {
                "vars" => vars = Some(rest.split_whitespace().map(String::from).collect()),
                "states" => num_states = Some(rest.parse::<usize>().map_err(|_| err("bad state count".into()))?),
                "counters" => dim = rest.parse().map_err(|_| err("bad counter count".into()))?,
                "init" => init = rest.parse().map_err(|_| err("bad initial state".into()))?,
                "final" => {
                    finals_list = rest
                        .split_whitespace()
                        .map(|x| x.parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err("bad final state".into()))?
                }
                "phi" => phi = CounterFormula::parse(rest).map_err(err)?,
                _ => {
                    let arity = vars.as_ref().ok_or_else(|| err("`vars` must precede transitions".into()))?.len();
                    let (from, rest) = line.split_once("-[").ok_or_else(|| err(format!("unknown line `{line}`")))?;
                    let (label, to) = rest.rsplit_once("]->").ok_or_else(|| err("expected `]->`".into()))?;
                    let (cols, ops) = label.rsplit_once(':').ok_or_else(|| err("expected `colset: ops`".into()))?;
                    let symbols = ColumnSet::parse(cols, arity).map_err(err)?;
                    let updates = ops
                        .split_whitespace()
                        .map(|o| o.parse::<AffineFn>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(err)?;
                    if updates.len() != dim {
                        return Err(err(format!("transition has {} updates, expected {dim}", updates.len())));
                    }
                    let from = from.trim().parse().map_err(|_| err("bad source state".into()))?;
                    let to = to.trim().parse().map_err(|_| err("bad target state".into()))?;
                    transitions.push(Transition { from, to, symbols, updates });
                }
            }
        }
        let vars = vars.ok_or_else(|| ParseError::msg("missing `vars` line"))?;
        let num_states = num_states.ok_or_else(|| ParseError::msg("missing `states` line"))?;
        if init >= num_states
            || finals_list.iter().any(|&q| q >= num_states)
            || transitions.iter().any(|t: &Transition| t.from >= num_states || t.to >= num_states)
        {
            return Err(ParseError::msg("state index out of range"));
        }
        if phi.max_counter().is_some_and(|m| m >= dim) {
            return Err(ParseError::msg("counter index out of range in phi"));
        }
        let mut finals = vec![false; num_states];
        for q in finals_list {
            finals[q] = true;
        }
        Ok(Lavass { vars, num_states, dim, init, finals, transitions, phi })
    }
}

/// Pruning for restricted machines: some pair's `y` already outruns every
/// value its `x` can still reach.
fn hopeless(c: &Config, rem: u32) -> bool {
    for pair in c.counters.chunks(2) {
        let (x, y) = (&pair[0], &pair[1]);
        if y.is_zero() {
            continue;
        }
        let lhs = y << rem;
        if lhs > x + rem {
            return true;
        }
    }
    false
}

/// Convenience: mask of all columns of `arity`.
pub fn all_columns(arity: usize) -> Column {
    column_mask(arity)
}

/// The fixed two-state gadget for `x = 2^y` over rows `(x, y)`.
pub fn exp2_gadget_named(x: &str, y: &str) -> Lavass {
    let c = |s: &str| ColumnSet::parse(s, 2).unwrap();
    Lavass {
        vars: vec![x.to_string(), y.to_string()],
        num_states: 2,
        dim: 2,
        init: 0,
        finals: vec![false, true],
        transitions: vec![
            Transition { from: 0, to: 0, symbols: c("[00]"), updates: vec![AffineFn::ID, AffineFn::DBL] },
            Transition { from: 0, to: 1, symbols: c("[10]"), updates: vec![AffineFn::ID, AffineFn::DBL] },
            Transition { from: 1, to: 1, symbols: c("[00]"), updates: vec![AffineFn::INC, AffineFn::DBL] },
            Transition { from: 1, to: 1, symbols: c("[01]"), updates: vec![AffineFn::INC, AffineFn::DBL1] },
        ],
        phi: CounterFormula::pairs_equal(1),
    }
}

/// Counter value as `u64`, saturating.
pub fn small(v: &BigUint) -> u64 {
    v.to_u64().unwrap_or(u64::MAX)
}
