//! Deterministic automata over the alphabet of `k`-bit columns.
//!
//! Every automaton carries its variable order explicitly; row `j` of a column
//! belongs to `vars[j]`. Operations that combine automata insist on equal
//! orders and never realign rows implicitly, use [`Dfa::reorder`] or
//! [`Dfa::inverse_project`] for that.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::encoding::{column_bit, column_to_string, Column, Word, MAX_ARITY};
use crate::error::{AutomatonError, ParseError};

pub type StateId = u32;

#[derive(Clone, PartialEq, Eq)]
pub struct Dfa {
    vars: Vec<String>,
    init: StateId,
    accepting: Vec<bool>,
    /// `delta[(q << arity) | col]`
    delta: Vec<StateId>,
}

impl std::fmt::Debug for Dfa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dfa")
            .field("vars", &self.vars)
            .field("states", &self.num_states())
            .field("init", &self.init)
            .finish()
    }
}

impl Dfa {
    fn from_parts(vars: Vec<String>, init: StateId, accepting: Vec<bool>, delta: Vec<StateId>) -> Self {
        let d = Dfa { vars, init, accepting, delta };
        debug_assert_eq!(d.delta.len(), d.accepting.len() << d.arity());
        d
    }

    /// Builds a DFA by exploring the states reachable from `init` under
    /// `step`. `S` is any hashable state representation.
    pub fn explore<S, F, A>(vars: Vec<String>, init: S, mut step: F, mut accept: A) -> Dfa
    where
        S: Clone + Eq + std::hash::Hash,
        F: FnMut(&S, Column) -> S,
        A: FnMut(&S) -> bool,
    {
        let arity = vars.len();
        assert!(arity <= MAX_ARITY);
        let ncols = 1usize << arity;
        let mut ids: HashMap<S, StateId> = HashMap::new();
        let mut states: Vec<S> = Vec::new();
        let mut delta: Vec<StateId> = Vec::new();
        ids.insert(init.clone(), 0);
        states.push(init);
        let mut i = 0;
        while i < states.len() {
            let s = states[i].clone();
            for col in 0..ncols as Column {
                let t = step(&s, col);
                let id = match ids.get(&t) {
                    Some(&id) => id,
                    None => {
                        let id = states.len() as StateId;
                        ids.insert(t.clone(), id);
                        states.push(t);
                        id
                    }
                };
                delta.push(id);
            }
            i += 1;
        }
        let accepting = states.iter().map(&mut accept).collect();
        Dfa::from_parts(vars, 0, accepting, delta)
    }

    /// The automaton accepting every word.
    pub fn universal(vars: Vec<String>) -> Dfa {
        Dfa::explore(vars, (), |_, _| (), |_| true)
    }

    /// The automaton accepting nothing.
    pub fn empty(vars: Vec<String>) -> Dfa {
        Dfa::explore(vars, (), |_, _| (), |_| false)
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn init(&self) -> StateId {
        self.init
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q as usize]
    }

    #[inline]
    pub fn step(&self, q: StateId, col: Column) -> StateId {
        self.delta[((q as usize) << self.arity()) | col as usize]
    }

    pub fn run(&self, cols: &[Column]) -> StateId {
        cols.iter().fold(self.init, |q, &c| self.step(q, c))
    }

    pub fn accepts(&self, w: &Word) -> bool {
        debug_assert_eq!(w.arity(), self.arity());
        self.is_accepting(self.run(w.columns()))
    }

    fn position(&self, var: &str) -> Result<usize, AutomatonError> {
        self.vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| AutomatonError::UnknownVariable(var.to_string()))
    }

    /// Language intersection.
    pub fn product(&self, other: &Dfa) -> Result<Dfa, AutomatonError> {
        self.combine(other, |a, b| a && b)
    }

    /// Language union.
    pub fn union(&self, other: &Dfa) -> Result<Dfa, AutomatonError> {
        self.combine(other, |a, b| a || b)
    }

    fn combine(&self, other: &Dfa, op: impl Fn(bool, bool) -> bool) -> Result<Dfa, AutomatonError> {
        if self.vars != other.vars {
            return Err(AutomatonError::OrderMismatch(self.vars.clone(), other.vars.clone()));
        }
        Ok(Dfa::explore(
            self.vars.clone(),
            (self.init, other.init),
            |&(p, q), c| (self.step(p, c), other.step(q, c)),
            |&(p, q)| op(self.is_accepting(p), other.is_accepting(q)),
        ))
    }

    pub fn complement(&self) -> Dfa {
        let mut d = self.clone();
        for a in d.accepting.iter_mut() {
            *a = !*a;
        }
        d
    }

    /// `L' = 0*·L`.
    pub fn zero_close(&self) -> Dfa {
        // A fresh start state loops on the zero column and otherwise behaves
        // like the old initial state; subsets are determinized on the fly.
        const FRESH: StateId = StateId::MAX;
        let init: Vec<StateId> = vec![FRESH];
        determinize(
            self.vars.clone(),
            init,
            |q, c, out| {
                if q == FRESH {
                    if c == 0 {
                        out.push(FRESH);
                    }
                    out.push(self.step(self.init, c));
                } else {
                    out.push(self.step(q, c));
                }
            },
            |q| if q == FRESH { self.is_accepting(self.init) } else { self.is_accepting(q) },
        )
    }

    /// Existentially projects away the row of `var`.
    pub fn project(&self, var: &str) -> Result<Dfa, AutomatonError> {
        let pos = self.position(var)?;
        let mut vars = self.vars.clone();
        vars.remove(pos);
        Ok(determinize(
            vars,
            vec![self.init],
            |q, c, out| {
                let low = c & ((1 << pos) - 1);
                let high = (c >> pos) << (pos + 1);
                out.push(self.step(q, low | high));
                out.push(self.step(q, low | high | (1 << pos)));
            },
            |q| self.is_accepting(q),
        ))
    }

    /// Inserts an unconstrained row for `var` at `position`.
    pub fn inverse_project(&self, var: &str, position: usize) -> Result<Dfa, AutomatonError> {
        if self.vars.iter().any(|v| v == var) {
            return Err(AutomatonError::DuplicateVariable(var.to_string()));
        }
        if position > self.arity() {
            return Err(AutomatonError::ArityMismatch(position, self.arity()));
        }
        if self.arity() + 1 > MAX_ARITY {
            return Err(AutomatonError::TooWide(self.arity() + 1));
        }
        let mut vars = self.vars.clone();
        vars.insert(position, var.to_string());
        let mut delta = Vec::with_capacity(self.delta.len() * 2);
        let ncols = 1u32 << vars.len();
        for q in 0..self.num_states() as StateId {
            for c in 0..ncols {
                let low = c & ((1 << position) - 1);
                let high = (c >> (position + 1)) << position;
                delta.push(self.step(q, low | high));
            }
        }
        Ok(Dfa::from_parts(vars, self.init, self.accepting.clone(), delta))
    }

    /// Permutes rows so that the result has variable order `order`, which must
    /// be a permutation of the current order.
    pub fn reorder(&self, order: &[String]) -> Result<Dfa, AutomatonError> {
        if order.len() != self.arity() {
            return Err(AutomatonError::ArityMismatch(order.len(), self.arity()));
        }
        let map: Vec<usize> = order.iter().map(|v| self.position(v)).collect::<Result<_, _>>()?;
        let ncols = 1u32 << self.arity();
        let mut delta = Vec::with_capacity(self.delta.len());
        for q in 0..self.num_states() as StateId {
            for c in 0..ncols {
                let mut old = 0;
                for (new_row, &old_row) in map.iter().enumerate() {
                    if column_bit(c, new_row) {
                        old |= 1 << old_row;
                    }
                }
                delta.push(self.step(q, old));
            }
        }
        Ok(Dfa::from_parts(order.to_vec(), self.init, self.accepting.clone(), delta))
    }

    /// Lifts this automaton onto the variable order `target`, which must
    /// contain all of its variables. Missing rows are unconstrained.
    pub fn cylindrify(&self, target: &[String]) -> Result<Dfa, AutomatonError> {
        for v in &self.vars {
            if !target.contains(v) {
                return Err(AutomatonError::UnknownVariable(v.clone()));
            }
        }
        let mut d = self.clone();
        for v in target {
            if !d.vars.contains(v) {
                let at = d.arity();
                d = d.inverse_project(v, at)?;
            }
        }
        d.reorder(target)
    }

    /// States from which an accepting state is reachable.
    pub fn coreachable(&self) -> Vec<bool> {
        let n = self.num_states();
        let ncols = 1usize << self.arity();
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for q in 0..n {
            for c in 0..ncols {
                rev[self.delta[(q << self.arity()) | c] as usize].push(q as StateId);
            }
        }
        let mut live = self.accepting.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&q| live[q]).collect();
        while let Some(q) = queue.pop_front() {
            for &p in &rev[q] {
                if !live[p as usize] {
                    live[p as usize] = true;
                    queue.push_back(p as usize);
                }
            }
        }
        live
    }

    pub fn is_empty(&self) -> bool {
        !self.coreachable()[self.init as usize]
    }

    /// A shortest accepted word, if any.
    pub fn shortest_word(&self) -> Option<Word> {
        let n = self.num_states();
        let mut parent: Vec<Option<(StateId, Column)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[self.init as usize] = true;
        let mut queue = VecDeque::from([self.init]);
        while let Some(q) = queue.pop_front() {
            if self.is_accepting(q) {
                let mut cols = Vec::new();
                let mut cur = q;
                while let Some((p, c)) = parent[cur as usize] {
                    cols.push(c);
                    cur = p;
                }
                cols.reverse();
                return Some(Word::new(self.arity(), cols));
            }
            for c in 0..(1u32 << self.arity()) {
                let t = self.step(q, c);
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    parent[t as usize] = Some((q, c));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Moore partition refinement; also drops unreachable states.
    pub fn minimize(&self) -> Dfa {
        let ncols = 1usize << self.arity();
        let n = self.num_states();
        let mut class: Vec<u32> = self.accepting.iter().map(|&a| a as u32).collect();
        let mut nclasses = class.iter().collect::<BTreeSet<_>>().len();
        loop {
            let mut sigs: HashMap<Vec<u32>, u32> = HashMap::new();
            let mut next = vec![0u32; n];
            for q in 0..n {
                let mut sig = Vec::with_capacity(ncols + 1);
                sig.push(class[q]);
                for c in 0..ncols {
                    sig.push(class[self.delta[(q << self.arity()) | c] as usize]);
                }
                let len = sigs.len() as u32;
                next[q] = *sigs.entry(sig).or_insert(len);
            }
            let k = sigs.len();
            class = next;
            if k == nclasses {
                break;
            }
            nclasses = k;
        }
        let mut rep: HashMap<u32, usize> = HashMap::new();
        for (q, &k) in class.iter().enumerate() {
            rep.entry(k).or_insert(q);
        }
        Dfa::explore(
            self.vars.clone(),
            class[self.init as usize],
            |&k, c| class[self.delta[(rep[&k] << self.arity()) | c as usize] as usize],
            |&k| self.accepting[rep[&k]],
        )
    }

    /// Exactly the accepted words of length at most `max_len`.
    pub fn enumerate_words(&self, max_len: usize) -> BTreeSet<Word> {
        let live = self.coreachable();
        let mut out = BTreeSet::new();
        let mut stack: Vec<(StateId, Vec<Column>)> = vec![(self.init, Vec::new())];
        while let Some((q, cols)) = stack.pop() {
            if !live[q as usize] {
                continue;
            }
            if self.is_accepting(q) {
                out.insert(Word::new(self.arity(), cols.clone()));
            }
            if cols.len() < max_len {
                for c in 0..(1u32 << self.arity()) {
                    let mut next = cols.clone();
                    next.push(c);
                    stack.push((self.step(q, c), next));
                }
            }
        }
        out
    }

    /// Renders the textual table format accepted by [`Dfa::parse_table`].
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(s, "dfa").unwrap();
        writeln!(s, "vars {}", self.vars.join(" ")).unwrap();
        writeln!(s, "states {}", self.num_states()).unwrap();
        writeln!(s, "init {}", self.init).unwrap();
        let acc: Vec<String> =
            (0..self.num_states()).filter(|&q| self.accepting[q]).map(|q| q.to_string()).collect();
        writeln!(s, "accepting {}", acc.join(" ")).unwrap();
        for q in 0..self.num_states() as StateId {
            for c in 0..(1u32 << self.arity()) {
                writeln!(s, "{q} {} {}", column_to_string(c, self.arity()), self.step(q, c)).unwrap();
            }
        }
        s
    }

    /// Parses a transition table:
    ///
    /// ```text
    /// dfa
    /// vars x y
    /// states 2
    /// init 0
    /// accepting 1
    /// 0 [10] 1
    /// 1 . 1
    /// ```
    ///
    /// `.` stands for every column. Missing transitions lead to a rejecting sink.
    pub fn parse_table(text: &str) -> Result<Dfa, ParseError> {
        let mut vars: Option<Vec<String>> = None;
        let mut nstates: Option<usize> = None;
        let mut init = 0;
        let mut accepting_list = Vec::new();
        let mut edges: Vec<(usize, Option<Column>, usize, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(';').next().unwrap().trim();
            if line.is_empty() || line == "dfa" {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |m: &str| ParseError::at(lineno + 1, 1, m);
            let num = |t: &str| t.parse::<usize>().map_err(|_| err(&format!("bad number `{t}`")));
            match toks[0] {
                "vars" => vars = Some(toks[1..].iter().map(|s| s.to_string()).collect()),
                "states" => nstates = Some(num(toks.get(1).ok_or_else(|| err("missing count"))?)?),
                "init" => init = num(toks.get(1).ok_or_else(|| err("missing state"))?)?,
                "accepting" => {
                    for t in &toks[1..] {
                        accepting_list.push(num(t)?);
                    }
                }
                _ => {
                    if toks.len() != 3 {
                        return Err(err("expected `<from> <column> <to>`"));
                    }
                    let arity = vars.as_ref().ok_or_else(|| err("`vars` must come first"))?.len();
                    let col = if toks[1] == "." {
                        None
                    } else {
                        let w = Word::parse(toks[1], arity).map_err(|e| err(&e.message))?;
                        if w.len() != 1 {
                            return Err(err("expected a single column"));
                        }
                        Some(w.columns()[0])
                    };
                    edges.push((num(toks[0])?, col, num(toks[2])?, lineno + 1));
                }
            }
        }
        let vars = vars.ok_or_else(|| ParseError::msg("missing `vars` line"))?;
        if vars.len() > MAX_ARITY {
            return Err(ParseError::msg("too many variables"));
        }
        let n = nstates.ok_or_else(|| ParseError::msg("missing `states` line"))?;
        let sink = n;
        let ncols = 1usize << vars.len();
        let mut delta = vec![sink as StateId; (n + 1) * ncols];
        for (from, col, to, line) in edges {
            if from >= n || to >= n {
                return Err(ParseError::at(line, 1, "state out of range"));
            }
            match col {
                Some(c) => delta[(from << vars.len()) | c as usize] = to as StateId,
                None => {
                    for c in 0..ncols {
                        delta[(from << vars.len()) | c] = to as StateId;
                    }
                }
            }
        }
        if init >= n {
            return Err(ParseError::msg("init out of range"));
        }
        let mut accepting = vec![false; n + 1];
        for a in accepting_list {
            if a >= n {
                return Err(ParseError::msg("accepting state out of range"));
            }
            accepting[a] = true;
        }
        let d = Dfa::from_parts(vars, init as StateId, accepting, delta);
        // drop the sink when unused
        Ok(d.trim_unreachable())
    }

    fn trim_unreachable(&self) -> Dfa {
        Dfa::explore(self.vars.clone(), self.init, |&q, c| self.step(q, c), |&q| self.is_accepting(q))
    }
}

/// Subset construction for an NFA given by a successor callback.
fn determinize<F, A>(vars: Vec<String>, init: Vec<StateId>, succ: F, accept: A) -> Dfa
where
    F: Fn(StateId, Column, &mut Vec<StateId>),
    A: Fn(StateId) -> bool,
{
    let mut init = init;
    init.sort_unstable();
    init.dedup();
    let mut buf = Vec::new();
    Dfa::explore(
        vars,
        init,
        |set: &Vec<StateId>, c| {
            buf.clear();
            for &q in set {
                succ(q, c, &mut buf);
            }
            let mut next = buf.clone();
            next.sort_unstable();
            next.dedup();
            next
        },
        |set| set.iter().any(|&q| accept(q)),
    )
}

// ---------------------------------------------------------------------------
// Regular expressions over columns

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Regex {
    Empty,
    Epsilon,
    /// `None` is the wildcard `.`.
    Column(Option<Column>),
    Concat(Vec<Regex>),
    Alt(Vec<Regex>),
    Star(Box<Regex>),
}

impl Regex {
    /// Parses the column regex syntax: `[b…b]` literals, `.`, `|`, `*`, `+`,
    /// `?`, parentheses. `arity` fixes the column width.
    pub fn parse(text: &str, arity: usize) -> Result<Regex, ParseError> {
        let chars: Vec<char> = text.chars().collect();
        let mut p = RegexParser { chars: &chars, pos: 0, arity, bit_literals: false };
        let r = p.alt()?;
        if p.pos != chars.len() {
            return Err(ParseError::at(1, p.pos + 1, format!("unexpected `{}` in regex", chars[p.pos])));
        }
        Ok(r)
    }

    /// Parses a regex over the string alphabet `{0,1}`, where bare `0` and `1`
    /// are single-row columns.
    pub fn parse_bits(text: &str) -> Result<Regex, ParseError> {
        let chars: Vec<char> = text.chars().collect();
        let mut p = RegexParser { chars: &chars, pos: 0, arity: 1, bit_literals: true };
        let r = p.alt()?;
        if p.pos != chars.len() {
            return Err(ParseError::at(1, p.pos + 1, format!("unexpected `{}` in regex", chars[p.pos])));
        }
        Ok(r)
    }
}

struct RegexParser<'a> {
    chars: &'a [char],
    pos: usize,
    arity: usize,
    bit_literals: bool,
}

impl RegexParser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars[self.pos..].iter().copied().find(|c| !c.is_whitespace())
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn alt(&mut self) -> Result<Regex, ParseError> {
        let mut alts = vec![self.concat()?];
        while self.peek() == Some('|') {
            self.skip_ws();
            self.pos += 1;
            alts.push(self.concat()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { Regex::Alt(alts) })
    }

    fn concat(&mut self) -> Result<Regex, ParseError> {
        let mut parts = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            parts.push(self.postfix()?);
        }
        Ok(match parts.len() {
            0 => Regex::Epsilon,
            1 => parts.pop().unwrap(),
            _ => Regex::Concat(parts),
        })
    }

    fn postfix(&mut self) -> Result<Regex, ParseError> {
        let mut r = self.atom()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => r = Regex::Star(Box::new(r)),
                '+' => r = Regex::Concat(vec![r.clone(), Regex::Star(Box::new(r))]),
                '?' => r = Regex::Alt(vec![r, Regex::Epsilon]),
                _ => break,
            }
            self.skip_ws();
            self.pos += 1;
        }
        Ok(r)
    }

    fn atom(&mut self) -> Result<Regex, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let c = self.chars[self.pos];
        self.pos += 1;
        match c {
            '(' => {
                let r = self.alt()?;
                if self.peek() != Some(')') {
                    return Err(ParseError::at(1, start + 1, "unbalanced `(` in regex"));
                }
                self.skip_ws();
                self.pos += 1;
                Ok(r)
            }
            '.' => Ok(Regex::Column(None)),
            '0' | '1' if self.bit_literals => Ok(Regex::Column(Some((c == '1') as Column))),
            '[' if !self.bit_literals => {
                let mut col = 0;
                let mut width = 0;
                loop {
                    match self.chars.get(self.pos) {
                        Some(']') => break,
                        Some('0') => width += 1,
                        Some('1') => {
                            if width < 32 {
                                col |= 1 << width;
                            }
                            width += 1;
                        }
                        _ => return Err(ParseError::at(1, self.pos + 1, "malformed column literal")),
                    }
                    self.pos += 1;
                }
                self.pos += 1;
                if width != self.arity {
                    return Err(ParseError::at(
                        1,
                        start + 1,
                        format!("column width {width} does not match {} variables", self.arity),
                    ));
                }
                Ok(Regex::Column(Some(col)))
            }
            other => Err(ParseError::at(1, start + 1, format!("unexpected `{other}` in regex"))),
        }
    }
}

/// Thompson automaton with epsilon moves.
struct Thompson {
    eps: Vec<Vec<u32>>,
    edges: Vec<Vec<(Option<Column>, u32)>>,
}

impl Thompson {
    fn new_state(&mut self) -> u32 {
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        (self.eps.len() - 1) as u32
    }

    /// Returns (start, end) fragment states.
    fn build(&mut self, r: &Regex) -> (u32, u32) {
        let s = self.new_state();
        let e = self.new_state();
        match r {
            Regex::Empty => {}
            Regex::Epsilon => self.eps[s as usize].push(e),
            Regex::Column(c) => self.edges[s as usize].push((*c, e)),
            Regex::Concat(parts) => {
                let mut cur = s;
                for p in parts {
                    let (ps, pe) = self.build(p);
                    self.eps[cur as usize].push(ps);
                    cur = pe;
                }
                self.eps[cur as usize].push(e);
            }
            Regex::Alt(alts) => {
                for a in alts {
                    let (as_, ae) = self.build(a);
                    self.eps[s as usize].push(as_);
                    self.eps[ae as usize].push(e);
                }
            }
            Regex::Star(inner) => {
                let (is, ie) = self.build(inner);
                self.eps[s as usize].push(is);
                self.eps[s as usize].push(e);
                self.eps[ie as usize].push(is);
                self.eps[ie as usize].push(e);
            }
        }
        (s, e)
    }

    fn closure(&self, set: &mut Vec<u32>) {
        let mut stack = set.clone();
        while let Some(q) = stack.pop() {
            for &t in &self.eps[q as usize] {
                if !set.contains(&t) {
                    set.push(t);
                    stack.push(t);
                }
            }
        }
        set.sort_unstable();
        set.dedup();
    }
}

/// Compiles a column regex into a DFA over `vars` (not zero-closed).
pub fn compile_regex(r: &Regex, vars: Vec<String>) -> Result<Dfa, AutomatonError> {
    if vars.len() > MAX_ARITY {
        return Err(AutomatonError::TooWide(vars.len()));
    }
    let mut t = Thompson { eps: Vec::new(), edges: Vec::new() };
    let (start, end) = t.build(r);
    let mut init = vec![start];
    t.closure(&mut init);
    let dfa = Dfa::explore(
        vars,
        init,
        |set: &Vec<u32>, col| {
            let mut next = Vec::new();
            for &q in set {
                for &(c, to) in &t.edges[q as usize] {
                    if c.is_none_or(|c| c == col) {
                        next.push(to);
                    }
                }
            }
            t.closure(&mut next);
            next
        },
        |set| set.contains(&end),
    );
    Ok(dfa.minimize())
}

/// Parses and compiles a column regex in one step.
pub fn compile_regex_str(text: &str, vars: Vec<String>) -> Result<Dfa, AutomatonError> {
    let r = Regex::parse(text, vars.len())?;
    compile_regex(&r, vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn words(d: &Dfa, n: usize) -> Vec<String> {
        d.enumerate_words(n).iter().map(|w| w.to_string()).collect()
    }

    /// Every word over `arity` columns of length ≤ `n`.
    fn all_words(arity: usize, n: usize) -> Vec<Word> {
        let mut out = vec![Word::empty(arity)];
        let mut frontier = vec![Word::empty(arity)];
        for _ in 0..n {
            let mut next = Vec::new();
            for w in &frontier {
                for c in 0..(1u32 << arity) {
                    let mut w2 = w.clone();
                    w2.push(c);
                    next.push(w2);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    #[test]
    fn powers_of_two_shape() {
        let d = compile_regex_str("[1][0]*", v(&["x"])).unwrap();
        assert_eq!(words(&d, 3), vec!["[1]", "[1][0]", "[1][0][0]"]);
    }

    #[test]
    fn wildcard_and_literal() {
        let d = compile_regex_str(".", v(&["x", "y"])).unwrap();
        assert_eq!(d.enumerate_words(2).len(), 4);
        let d = compile_regex_str("[10][01]", v(&["x", "y"])).unwrap();
        assert_eq!(words(&d, 4), vec!["[10][01]"]);
    }

    #[test]
    fn malformed_regex() {
        assert!(compile_regex_str("([1]", v(&["x"])).is_err());
        assert!(compile_regex_str("[10]", v(&["x"])).is_err());
        assert!(compile_regex_str("[1]x", v(&["x"])).is_err());
    }

    #[test]
    fn zero_close_examples() {
        let one = compile_regex_str("[1]", v(&["x"])).unwrap();
        let zc = one.zero_close();
        assert_eq!(words(&zc, 3), vec!["[0][0][1]", "[0][1]", "[1]"]);
        assert_eq!(words(&zc.zero_close(), 5), words(&zc, 5));
        let e = Dfa::empty(v(&["x"]));
        assert!(e.zero_close().is_empty());
    }

    #[test]
    fn product_examples() {
        let d = compile_regex_str("[0]*[1]", v(&["x"])).unwrap();
        let u = Dfa::universal(v(&["x"]));
        assert_eq!(words(&d.product(&u).unwrap(), 5), words(&d, 5));
        assert!(d.product(&Dfa::empty(v(&["x"]))).unwrap().is_empty());
        let any = compile_regex_str("[0]*.", v(&["x"])).unwrap();
        let p = d.product(&any).unwrap();
        let expected: BTreeSet<Word> =
            d.enumerate_words(6).intersection(&any.enumerate_words(6)).cloned().collect();
        assert_eq!(p.enumerate_words(6), expected);
        assert_eq!(words(&p, 3), vec!["[0][0][1]", "[0][1]", "[1]"]);
        assert!(p.num_states() <= d.num_states() * any.num_states());
        assert!(d.product(&Dfa::universal(v(&["y"]))).is_err());
    }

    #[test]
    fn projection_examples() {
        let d = compile_regex_str("[0]*[1]", v(&["x"])).unwrap();
        let lifted = d.inverse_project("y", 1).unwrap();
        for w in all_words(2, 4) {
            let row0: Vec<Column> = w.columns().iter().map(|c| c & 1).collect();
            assert_eq!(lifted.accepts(&w), d.accepts(&Word::new(1, row0)));
        }
        let back = lifted.project("y").unwrap();
        assert_eq!(back.enumerate_words(6), d.enumerate_words(6));

        let single = compile_regex_str("[10][01]", v(&["x", "y"])).unwrap();
        assert_eq!(words(&single.project("y").unwrap(), 4), vec!["[1][0]"]);
        assert!(single.project("z").is_err());
        assert!(single.inverse_project("x", 0).is_err());
    }

    #[test]
    fn emptiness_and_enumeration() {
        assert!(Dfa::empty(v(&["x"])).is_empty());
        let d = compile_regex_str("[0]*[1]", v(&["x"])).unwrap();
        assert_eq!(words(&d, 3), vec!["[0][0][1]", "[0][1]", "[1]"]);
        assert_eq!(d.shortest_word().unwrap().to_string(), "[1]");
    }

    #[test]
    fn table_round_trip() {
        let d = compile_regex_str("[10]([00]|[01])*", v(&["x", "y"])).unwrap();
        let parsed = Dfa::parse_table(&d.to_table()).unwrap();
        assert_eq!(parsed.enumerate_words(4), d.enumerate_words(4));
        let sparse = Dfa::parse_table("dfa\nvars x\nstates 2\ninit 0\naccepting 1\n0 [1] 1\n").unwrap();
        assert_eq!(words(&sparse, 3), vec!["[1]"]);
    }

    #[test]
    fn reorder_swaps_rows() {
        let d = compile_regex_str("[10]", v(&["x", "y"])).unwrap();
        let r = d.reorder(&v(&["y", "x"])).unwrap();
        assert_eq!(words(&r, 2), vec!["[01]"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_regex() -> impl Strategy<Value = Regex> {
            let leaf = prop_oneof![
                Just(Regex::Epsilon),
                (0u32..4).prop_map(|c| Regex::Column(Some(c))),
                Just(Regex::Column(None)),
            ];
            leaf.prop_recursive(3, 12, 3, |inner| {
                prop_oneof![
                    proptest::collection::vec(inner.clone(), 2..3).prop_map(Regex::Concat),
                    proptest::collection::vec(inner.clone(), 2..3).prop_map(Regex::Alt),
                    inner.prop_map(|r| Regex::Star(Box::new(r))),
                ]
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn product_is_conjunction(r1 in arb_regex(), r2 in arb_regex()) {
                let vars = v(&["x", "y"]);
                let d1 = compile_regex(&r1, vars.clone()).unwrap();
                let d2 = compile_regex(&r2, vars).unwrap();
                let p = d1.product(&d2).unwrap();
                for w in all_words(2, 4) {
                    prop_assert_eq!(p.accepts(&w), d1.accepts(&w) && d2.accepts(&w));
                }
            }

            #[test]
            fn zero_close_preserves_eval_images(r in arb_regex()) {
                use crate::encoding::eval_msd;
                let d = compile_regex(&r, v(&["x", "y"])).unwrap();
                let zc = d.zero_close();
                let img = |set: &BTreeSet<Word>| set.iter().map(eval_msd).collect::<BTreeSet<_>>();
                // words of d up to 4 and zero-padded variants up to 6
                let base = img(&d.enumerate_words(4));
                let closed: BTreeSet<_> = zc.enumerate_words(6).iter()
                    .filter(|w| w.columns().iter().skip_while(|&&c| c == 0).count() <= 4)
                    .map(eval_msd).collect();
                prop_assert_eq!(closed, base);
                prop_assert_eq!(zc.zero_close().enumerate_words(5), zc.enumerate_words(5));
            }

            #[test]
            fn minimize_preserves_language(r in arb_regex()) {
                let d = compile_regex(&r, v(&["x", "y"])).unwrap();
                let zc = d.zero_close();
                prop_assert_eq!(zc.minimize().enumerate_words(4), zc.enumerate_words(4));
            }

            #[test]
            fn projection_preserves_eval_images(r in arb_regex()) {
                use crate::encoding::eval_msd;
                let d = compile_regex(&r, v(&["x", "y"])).unwrap().zero_close();
                let p = d.project("y").unwrap();
                let direct: BTreeSet<_> = d.enumerate_words(5).iter().map(|w| eval_msd(w)[0].clone()).collect();
                let projected: BTreeSet<_> = p.enumerate_words(5).iter().map(|w| eval_msd(w)[0].clone()).collect();
                prop_assert_eq!(projected, direct);
            }
        }
    }
}
