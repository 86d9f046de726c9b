//! Witnessing certificates: data model, checker and search.

use std::cell::{Cell, RefCell};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;

use num_bigint::BigUint;

use crate::abstraction::{is_final_abstract, respects, top_monotone, AbsConfig, Bounds, ConstraintKind, Ell, YConstraint};
use crate::lavass::{AffineFn, Config, Lavass};

/// Abstract path `α_1 -t_1-> … α_n` with 1-based position maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub ell: Vec<Ell>,
    pub configs: Vec<AbsConfig>,
    /// Indices into the machine's transition list; `transitions[k]` leads
    /// from `configs[k]` to `configs[k + 1]`.
    pub transitions: Vec<usize>,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub l: Vec<usize>,
}

impl Certificate {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn pairs(&self) -> usize {
        self.ell.len()
    }

    /// Largest 0-based pair index with a finite loop modulus.
    pub fn last_finite(&self) -> Option<usize> {
        last_finite(&self.ell)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::from("certificate\n");
        s += &format!("ell {}\n", self.ell.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "));
        s += &format!("X {}\nY {}\nL {}\nR\n", join(&self.x), join(&self.y), join(&self.l));
        for (k, c) in self.configs.iter().enumerate() {
            s += &format!("{c}\n");
            if let Some(t) = self.transitions.get(k) {
                s += &format!("t {t}\n");
            }
        }
        s += "end\n";
        s
    }

    pub fn parse_text(text: &str) -> Result<Certificate, String> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with(';'));
        if lines.next() != Some("certificate") {
            return Err("missing `certificate` header".into());
        }
        let mut field = |name: &str| -> Result<Vec<String>, String> {
            let line = lines.next().ok_or_else(|| format!("missing `{name}` line"))?;
            let mut toks = line.split_whitespace();
            if toks.next() != Some(name) {
                return Err(format!("expected `{name}` line, got `{line}`"));
            }
            Ok(toks.map(String::from).collect())
        };
        let ell = field("ell")?.iter().map(|t| t.parse()).collect::<Result<Vec<Ell>, _>>()?;
        let positions = |v: Vec<String>| -> Result<Vec<usize>, String> {
            v.iter().map(|t| t.parse().map_err(|_| format!("bad position `{t}`"))).collect()
        };
        let x = positions(field("X")?)?;
        let y = positions(field("Y")?)?;
        let l = positions(field("L")?)?;
        if !field("R")?.is_empty() {
            return Err("unexpected tokens after `R`".into());
        }
        let mut configs = Vec::new();
        let mut transitions = Vec::new();
        let mut ended = false;
        for line in lines {
            if line == "end" {
                ended = true;
                break;
            }
            if let Some(t) = line.strip_prefix("t ") {
                if transitions.len() + 1 != configs.len() {
                    return Err("transition lines must alternate with configurations".into());
                }
                transitions.push(t.trim().parse().map_err(|_| format!("bad transition `{t}`"))?);
            } else {
                if configs.len() != transitions.len() {
                    return Err("transition lines must alternate with configurations".into());
                }
                configs.push(line.parse::<AbsConfig>()?);
            }
        }
        if !ended {
            return Err("missing `end`".into());
        }
        if configs.is_empty() || transitions.len() + 1 != configs.len() {
            return Err("path must start and end with a configuration".into());
        }
        Ok(Certificate { ell, configs, transitions, x, y, l })
    }
}

fn last_finite(ell: &[Ell]) -> Option<usize> {
    ell.iter().rposition(|l| *l != Ell::Top)
}

/// `y_i − y_{i+1} ≥ δ_i` when some finite-modulus `L(j)` falls in
/// `[X(i), X(i+1))`, otherwise `= δ_i`, with `δ_i = X(i+1) − X(i)`.
pub fn induced_y_constraints(cert: &Certificate) -> Vec<YConstraint> {
    let d = cert.pairs();
    let mut out = Vec::new();
    for i in 0..d.saturating_sub(1) {
        if cert.ell[i] == Ell::Top {
            continue;
        }
        let (lo, hi) = (cert.x[i], cert.x[i + 1]);
        let looped = (0..d).any(|j| cert.ell[j] != Ell::Top && lo <= cert.l[j] && cert.l[j] < hi);
        out.push(YConstraint {
            i: i + 1,
            kind: if looped { ConstraintKind::Geq } else { ConstraintKind::Eq },
            delta: hi.saturating_sub(lo) as u64,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFailure {
    pub clause: &'static str,
    pub detail: String,
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "clause {}: {}", self.clause, self.detail)
    }
}

fn fail<T>(clause: &'static str, detail: impl Into<String>) -> Result<T, CheckFailure> {
    Err(CheckFailure { clause, detail: detail.into() })
}

/// Budget for re-deriving a loop in the checker and extractor.
pub const LOOP_BUDGET: u64 = 50_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopSearch {
    Found(Vec<usize>),
    NotFound,
    GaveUp,
}

/// A simple abstract cycle of exactly `len` transitions from `alpha` back to
/// itself, first in declaration order.
pub fn find_loop(v: &Lavass, bounds: &Bounds, alpha: &AbsConfig, len: u64, budget: u64) -> LoopSearch {
    let out = v.outgoing();
    let mut expanded = 0u64;
    let mut on_path: HashSet<AbsConfig> = HashSet::new();
    let mut word = Vec::new();
    // frames: configuration and next outgoing index to try
    let mut stack: Vec<(AbsConfig, usize)> = vec![(alpha.clone(), 0)];
    while let Some((cur, next)) = stack.last_mut() {
        let q = cur.q;
        if *next >= out[q].len() {
            let (done, _) = stack.pop().unwrap();
            if !stack.is_empty() {
                on_path.remove(&done);
                word.pop();
            }
            continue;
        }
        let ti = out[q][*next];
        *next += 1;
        expanded += 1;
        if expanded > budget {
            return LoopSearch::GaveUp;
        }
        let cur = cur.clone();
        let Some(nx) = bounds.abstract_step(&cur, &v.transitions[ti]) else { continue };
        let depth = word.len() as u64 + 1;
        if depth == len {
            if nx == *alpha {
                word.push(ti);
                return LoopSearch::Found(word);
            }
            continue;
        }
        if nx == *alpha || on_path.contains(&nx) {
            continue;
        }
        on_path.insert(nx.clone());
        word.push(ti);
        stack.push((nx, 0));
    }
    LoopSearch::NotFound
}

fn is_simple(configs: &[AbsConfig]) -> bool {
    let mut seen = HashSet::new();
    configs.iter().all(|c| seen.insert(c))
}

/// Concrete run of the certificate's transitions from the all-zero
/// configuration.
pub fn replay(v: &Lavass, transitions: &[usize]) -> Vec<Config> {
    let mut c = v.initial_config();
    let mut out = vec![c.clone()];
    for &ti in transitions {
        let t = &v.transitions[ti];
        c = Config {
            state: t.to,
            counters: c.counters.iter().zip(&t.updates).map(|(x, f)| f.apply(x).expect("restricted updates stay in ℕ")).collect(),
        };
        out.push(c.clone());
    }
    out
}

/// Checks conditions (a)–(f) and the witnessing conditions. Clause names:
/// `structure`, `(a)`…`(f)`, `step`, `final`, `respects Y`, `simple`,
/// `suffix`, `value`.
pub fn check_certificate(cert: &Certificate, v: &Lavass) -> Result<(), CheckFailure> {
    let d = cert.pairs();
    if let Err(e) = v.validate_restricted() {
        return fail("structure", format!("machine is not restricted: {}", e.0));
    }
    if v.pairs() != d {
        return fail("structure", format!("machine has {} pairs, certificate {d}", v.pairs()));
    }
    let n = cert.len();
    if n == 0 || cert.transitions.len() + 1 != n {
        return fail("structure", "path shape");
    }
    if cert.x.len() != d || cert.y.len() != d || cert.l.len() != d {
        return fail("structure", "position maps must have one entry per pair");
    }
    for &p in cert.x.iter().chain(&cert.y).chain(&cert.l) {
        if p < 1 || p > n {
            return fail("structure", format!("position {p} outside 1..={n}"));
        }
    }
    for (k, c) in cert.configs.iter().enumerate() {
        if c.ell != cert.ell || c.m.len() != d || c.n.len() != d || c.u.len() != d.saturating_sub(1) || c.q >= v.num_states {
            return fail("structure", format!("configuration {} has the wrong shape", k + 1));
        }
    }
    for &ti in &cert.transitions {
        if ti >= v.transitions.len() {
            return fail("structure", format!("no transition {ti}"));
        }
    }
    // (a)
    if cert.configs[0] != AbsConfig::initial(v.init, &cert.ell) {
        return fail("(a)", "first configuration is not initial");
    }
    if !top_monotone(&cert.ell) {
        return fail("(a)", "loop moduli are not ⊤-monotone");
    }
    let bounds = Bounds::new(v.num_states, d);
    for k in 0..n - 1 {
        let t = &v.transitions[cert.transitions[k]];
        if t.from != cert.configs[k].q || bounds.abstract_step(&cert.configs[k], t).as_ref() != Some(&cert.configs[k + 1]) {
            return fail("step", format!("no abstract step from position {} to {}", k + 1, k + 2));
        }
    }
    let upd = |k: usize, c: usize| v.transitions[cert.transitions[k]].updates[c];
    for i in 0..d {
        let (xi, yi) = (cert.x[i], cert.y[i]);
        // (b)
        if xi < 2 || upd(xi - 2, 2 * i) != AffineFn::INC {
            return fail("(b)", format!("x{} is not first incremented into position {xi}", i + 1));
        }
        if yi < 2 || upd(yi - 2, 2 * i + 1) != AffineFn::DBL1 {
            return fail("(b)", format!("y{} is not first set by ×2+1 into position {yi}", i + 1));
        }
        // (c), (d)
        if let Some(j) = (0..xi - 2).find(|&j| upd(j, 2 * i) != AffineFn::ID) {
            return fail("(c)", format!("x{} updated by transition {} before X", i + 1, j + 1));
        }
        if let Some(j) = (0..yi - 2).find(|&j| upd(j, 2 * i + 1) != AffineFn::DBL) {
            return fail("(d)", format!("y{} updated by transition {} before Y", i + 1, j + 1));
        }
    }
    // (e)
    let monotone = |m: &[usize]| m.windows(2).all(|w| w[0] <= w[1]);
    let l_finite: Vec<usize> = (0..d).filter(|&i| cert.ell[i] != Ell::Top).map(|i| cert.l[i]).collect();
    if !monotone(&cert.x) || !monotone(&cert.y) || !monotone(&l_finite) {
        return fail("(e)", "X, Y and L must be monotone");
    }
    if let Some(i) = (0..d).find(|&i| cert.x[i] > cert.y[i]) {
        return fail("(e)", format!("X({0}) > Y({0})", i + 1));
    }
    // (f)
    for i in 0..d {
        let Ell::Mod(len) = cert.ell[i] else { continue };
        let li = cert.l[i];
        if !(cert.x[i] <= li && li < cert.y[i]) {
            return fail("(f)", format!("L({}) = {li} not in [X, Y)", i + 1));
        }
        match find_loop(v, &bounds, &cert.configs[li - 1], len, LOOP_BUDGET) {
            LoopSearch::Found(_) => {}
            LoopSearch::NotFound => return fail("(f)", format!("no simple loop of length {len} at position {li}")),
            LoopSearch::GaveUp => return fail("(f)", format!("loop search at position {li} inconclusive")),
        }
    }
    let last = &cert.configs[n - 1];
    if !v.finals[last.q] || !last.m.iter().zip(&last.n).all(|(m, n)| m.is_some() && m == n) {
        return fail("final", "last configuration is not final");
    }
    let ys = induced_y_constraints(cert);
    if !respects(last, &ys) {
        return fail("respects Y", "last configuration violates an induced y-constraint");
    }
    match cert.last_finite() {
        None => {
            if !is_simple(&cert.configs) {
                return fail("simple", "path repeats a configuration");
            }
        }
        Some(a) => {
            if !is_simple(&cert.configs[..cert.y[a]]) {
                return fail("simple", format!("R[1, Y({})] repeats a configuration", a + 1));
            }
            let limit = bounds.m(d + 1).saturating_mul(2 * d as u64);
            if (n - cert.y[a]) as u64 > limit {
                return fail("suffix", format!("{} steps after Y({}) exceed 2d·M_(d+1)", n - cert.y[a], a + 1));
            }
            let run = replay(v, &cert.transitions);
            let c = &run[n - 1].counters;
            if c[2 * a] > c[2 * a + 1] {
                return fail("value", format!("x{0} > y{0} at the end of the run", a + 1));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Expanded abstract states, shared by every search using one stats record.
    pub budget: u64,
    pub lcap: u64,
    pub exhaustive_threshold: u64,
    /// Largest tracked `X(i+1) − X(i)`.
    pub count_cap: u32,
    pub loop_budget: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { budget: 1_000_000, lcap: 64, exhaustive_threshold: 10_000, count_cap: 256, loop_budget: LOOP_BUDGET }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expanded: u64,
    pub ell_vectors: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Nonempty(Certificate),
    Empty,
    Unknown(String),
}

/// Search bookkeeping carried next to the abstract configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Book {
    l_done: usize,
    /// Steps since the start of the open `[X(i), X(i+1))` interval and
    /// whether an `L` falls inside it.
    open: Option<(u32, bool)>,
    closed: Vec<(ConstraintKind, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    alpha: AbsConfig,
    book: Book,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    Root,
    Step(usize),
    Loop,
}

struct Rec {
    parent: usize,
    ev: Ev,
}

const NONE: usize = usize::MAX;

fn path_to(arena: &[Rec], mut idx: usize) -> Vec<Ev> {
    let mut evs = Vec::new();
    while idx != NONE {
        if arena[idx].ev != Ev::Root {
            evs.push(arena[idx].ev);
        }
        idx = arena[idx].parent;
    }
    evs.reverse();
    evs
}

struct Stop;

struct Ctx<'a> {
    v: &'a Lavass,
    bounds: Bounds,
    ell: Vec<Ell>,
    d: usize,
    a: Option<usize>,
    out: Vec<Vec<usize>>,
    params: SearchParams,
    suffix_limit: u64,
    loops: RefCell<HashMap<(AbsConfig, u64), bool>>,
    incomplete: Cell<bool>,
}

enum EllOutcome {
    Found(Certificate),
    Exhausted,
    Incomplete,
}

impl<'a> Ctx<'a> {
    fn new(v: &'a Lavass, ell: Vec<Ell>, params: SearchParams) -> Self {
        let d = ell.len();
        let bounds = Bounds::new(v.num_states, d);
        let suffix_limit = bounds.m(d + 1).saturating_mul(2 * d as u64);
        Ctx {
            v,
            a: last_finite(&ell),
            bounds,
            ell,
            d,
            out: v.outgoing(),
            params,
            suffix_limit,
            loops: RefCell::new(HashMap::new()),
            incomplete: Cell::new(false),
        }
    }

    fn tick(&self, stats: &mut SearchStats) -> Result<(), Stop> {
        stats.expanded += 1;
        if stats.expanded > self.params.budget {
            return Err(Stop);
        }
        Ok(())
    }

    fn root(&self) -> Node {
        Node {
            alpha: AbsConfig::initial(self.v.init, &self.ell),
            book: Book { l_done: 0, open: None, closed: Vec::new() },
        }
    }

    fn has_loop(&self, alpha: &AbsConfig, len: u64) -> bool {
        let key = (alpha.clone(), len);
        if let Some(&r) = self.loops.borrow().get(&key) {
            return r;
        }
        let r = match find_loop(self.v, &self.bounds, alpha, len, self.params.loop_budget) {
            LoopSearch::Found(_) => true,
            LoopSearch::NotFound => false,
            LoopSearch::GaveUp => {
                self.incomplete.set(true);
                false
            }
        };
        self.loops.borrow_mut().insert(key, r);
        r
    }

    fn tracked(&self, i: usize) -> bool {
        i + 1 < self.d && self.ell[i] != Ell::Top
    }

    fn moves(&self, n: &Node) -> Vec<(Ev, Node)> {
        let mut res = Vec::new();
        let al = &n.alpha;
        let i = n.book.l_done;
        if i < self.d {
            if let Ell::Mod(len) = self.ell[i] {
                if al.m[i].is_some() && al.n[i].is_none() && self.has_loop(al, len) {
                    let mut book = n.book.clone();
                    book.l_done += 1;
                    if let Some((_, has_l)) = &mut book.open {
                        *has_l = true;
                    }
                    res.push((Ev::Loop, Node { alpha: al.clone(), book }));
                }
            }
        }
        'trans: for &ti in &self.out[al.q] {
            let next = match self.bounds.try_step(al, &self.v.transitions[ti]) {
                Ok(Some(c)) => c,
                Ok(None) => continue,
                Err(_) => {
                    self.incomplete.set(true);
                    continue;
                }
            };
            let mut book = n.book.clone();
            if let Some((count, _)) = &mut book.open {
                *count += 1;
            }
            for j in 0..self.d {
                if next.n[j].is_some() && al.n[j].is_none() {
                    if next.m[j].is_none() || (j > 0 && next.n[j - 1].is_none()) {
                        continue 'trans;
                    }
                    if self.ell[j] != Ell::Top && n.book.l_done <= j {
                        continue 'trans;
                    }
                }
                if next.m[j].is_some() && al.m[j].is_none() {
                    if j > 0 && next.m[j - 1].is_none() {
                        continue 'trans;
                    }
                    if j > 0 && self.tracked(j - 1) {
                        let (count, has_l) = book.open.take().expect("interval open since X(j−1)");
                        let kind = if has_l { ConstraintKind::Geq } else { ConstraintKind::Eq };
                        book.closed.push((kind, count as u64));
                    }
                    if self.tracked(j) {
                        book.open = Some((0, false));
                    }
                }
            }
            if let Some((count, _)) = book.open {
                if count > self.params.count_cap {
                    self.incomplete.set(true);
                    continue;
                }
            }
            res.push((Ev::Step(ti), Node { alpha: next, book }));
        }
        res
    }

    fn constraints(book: &Book) -> Vec<YConstraint> {
        book.closed.iter().enumerate().map(|(k, &(kind, delta))| YConstraint { i: k + 1, kind, delta }).collect()
    }

    fn is_goal(&self, n: &Node) -> bool {
        is_final_abstract(&n.alpha, &Self::constraints(&n.book), &self.v.finals)
    }

    /// Runs from entries just after `Y(a)` (concrete `x_a` value given, `y_a = 1`)
    /// through the deficit phase (`y_a < x_a`) and then by increasing suffix
    /// length to a final configuration.
    fn suffix(&self, arena: &mut Vec<Rec>, entries: Vec<(Node, u64, usize)>, stats: &mut SearchStats) -> Result<Option<usize>, Stop> {
        let a = self.a.expect("suffix needs a finite modulus");
        let mut deficit_seen: HashSet<(Node, u64, u128, u64)> = HashSet::new();
        let mut ok: Vec<(u64, Node, usize)> = Vec::new();
        for (node, x, idx) in entries {
            let mut queue = VecDeque::from([(node, x, 1u128, 0u64, idx)]);
            while let Some((n, x, y, t, idx)) = queue.pop_front() {
                if y >= x as u128 {
                    ok.push((t, n, idx));
                    continue;
                }
                if !deficit_seen.insert((n.clone(), x, y, t)) {
                    continue;
                }
                self.tick(stats)?;
                if t >= self.suffix_limit {
                    continue;
                }
                for (ev, nx) in self.moves(&n) {
                    let Ev::Step(ti) = ev else { continue };
                    let f = self.v.transitions[ti].updates[2 * a + 1];
                    let ny = y * f.a as u128 + f.b as u128;
                    arena.push(Rec { parent: idx, ev });
                    queue.push_back((nx, x + 1, ny, t + 1, arena.len() - 1));
                }
            }
        }
        let mut best: HashMap<Node, u64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        let mut nodes = Vec::new();
        for (t, n, idx) in ok {
            if best.get(&n).is_none_or(|&b| t < b) {
                best.insert(n.clone(), t);
                heap.push(Reverse((t, nodes.len())));
                nodes.push((n, idx));
            }
        }
        while let Some(Reverse((t, k))) = heap.pop() {
            let (n, idx) = nodes[k].clone();
            if best[&n] < t {
                continue;
            }
            if self.is_goal(&n) {
                return Ok(Some(idx));
            }
            self.tick(stats)?;
            if t >= self.suffix_limit {
                continue;
            }
            for (ev, nx) in self.moves(&n) {
                if best.get(&nx).is_none_or(|&b| t + 1 < b) {
                    best.insert(nx.clone(), t + 1);
                    arena.push(Rec { parent: idx, ev });
                    heap.push(Reverse((t + 1, nodes.len())));
                    nodes.push((nx, arena.len() - 1));
                }
            }
        }
        Ok(None)
    }

    fn pair_started(n: &Node, i: usize) -> (bool, bool) {
        (n.alpha.m[i].is_some(), n.alpha.n[i].is_some())
    }

    /// Reachability in a relaxation of the certificate space: configurations
    /// are deduplicated globally, keeping the smallest `x_a` at `Y(a)` and
    /// the shortest suffix. No certificate is lost, so exhaustion means
    /// there is none for this modulus vector.
    fn relaxed(&self, stats: &mut SearchStats) -> Result<Option<Vec<Ev>>, Stop> {
        let mut arena = vec![Rec { parent: NONE, ev: Ev::Root }];
        let root = self.root();
        let Some(a) = self.a else {
            let mut seen = HashSet::from([root.clone()]);
            let mut queue = VecDeque::from([(root, 0usize)]);
            while let Some((n, idx)) = queue.pop_front() {
                if self.is_goal(&n) {
                    return Ok(Some(path_to(&arena, idx)));
                }
                self.tick(stats)?;
                for (ev, nx) in self.moves(&n) {
                    if seen.insert(nx.clone()) {
                        arena.push(Rec { parent: idx, ev });
                        queue.push_back((nx, arena.len() - 1));
                    }
                }
            }
            return Ok(None);
        };
        let mut dist: HashMap<Node, u64> = HashMap::from([(root.clone(), 0)]);
        let mut deque = VecDeque::from([(root, 0u64, 0usize)]);
        let mut entries = Vec::new();
        while let Some((n, dn, idx)) = deque.pop_front() {
            if dist[&n] < dn {
                continue;
            }
            self.tick(stats)?;
            let (xs, ys) = Self::pair_started(&n, a);
            let paid = u64::from(xs && !ys);
            for (ev, nx) in self.moves(&n) {
                let cost = if matches!(ev, Ev::Step(_)) { paid } else { 0 };
                let dx = dn + cost;
                if Self::pair_started(&nx, a).1 && !ys {
                    arena.push(Rec { parent: idx, ev });
                    entries.push((nx, dx + 1, arena.len() - 1));
                    continue;
                }
                if dist.get(&nx).is_none_or(|&b| dx < b) {
                    dist.insert(nx.clone(), dx);
                    arena.push(Rec { parent: idx, ev });
                    if cost == 0 {
                        deque.push_front((nx, dx, arena.len() - 1));
                    } else {
                        deque.push_back((nx, dx, arena.len() - 1));
                    }
                }
            }
        }
        Ok(self.suffix(&mut arena, entries, stats)?.map(|g| path_to(&arena, g)))
    }

    /// Depth-first search over paths that stay simple up to `Y(a)`.
    fn simple_dfs(&self, stats: &mut SearchStats) -> Result<Option<Vec<Ev>>, Stop> {
        let a = self.a.expect("fallback only runs with a finite modulus");
        let root = self.root();
        let mut on_path: HashSet<AbsConfig> = HashSet::from([root.alpha.clone()]);
        let mut failed: HashSet<(Node, u64)> = HashSet::new();
        let mut events: Vec<Ev> = Vec::new();
        // frame: node, cost so far, pending moves, next move, whether its α is on the path
        let mut stack = vec![(root.clone(), 0u64, self.moves(&root), 0usize, false)];
        while let Some(top) = stack.last_mut() {
            if top.3 >= top.2.len() {
                let (n, _, _, _, owns) = stack.pop().unwrap();
                if owns {
                    on_path.remove(&n.alpha);
                }
                events.pop();
                continue;
            }
            let (ev, nx) = top.2[top.3].clone();
            top.3 += 1;
            let (xs, ys) = Self::pair_started(&top.0, a);
            let dx = top.1 + u64::from(xs && !ys && matches!(ev, Ev::Step(_)));
            self.tick(stats)?;
            if let Ev::Step(_) = ev {
                if on_path.contains(&nx.alpha) {
                    continue;
                }
            }
            if Self::pair_started(&nx, a).1 && !ys {
                let x = dx + 1;
                if failed.contains(&(nx.clone(), x)) {
                    continue;
                }
                let mut arena = vec![Rec { parent: NONE, ev: Ev::Root }];
                match self.suffix(&mut arena, vec![(nx.clone(), x, 0)], stats)? {
                    Some(g) => {
                        let mut all = events.clone();
                        all.push(ev);
                        all.extend(path_to(&arena, g));
                        return Ok(Some(all));
                    }
                    None => {
                        failed.insert((nx, x));
                    }
                }
                continue;
            }
            let owns = matches!(ev, Ev::Step(_));
            if owns {
                on_path.insert(nx.alpha.clone());
            }
            events.push(ev);
            let mv = self.moves(&nx);
            stack.push((nx, dx, mv, 0, owns));
        }
        Ok(None)
    }

    fn certificate(&self, events: &[Ev]) -> Certificate {
        let mut node = self.root();
        let mut configs = vec![node.alpha.clone()];
        let mut transitions = Vec::new();
        let mut l = vec![0usize; self.d];
        for ev in events {
            match *ev {
                Ev::Loop => {
                    l[node.book.l_done] = configs.len();
                    node.book.l_done += 1;
                }
                Ev::Step(ti) => {
                    node.alpha = self.bounds.abstract_step(&node.alpha, &self.v.transitions[ti]).expect("recorded step is valid");
                    configs.push(node.alpha.clone());
                    transitions.push(ti);
                }
                Ev::Root => {}
            }
        }
        let n = configs.len();
        let first = |f: &dyn Fn(&AbsConfig) -> bool| configs.iter().position(f).map_or(n, |p| p + 1);
        let x = (0..self.d).map(|i| first(&|c| c.m[i].is_some())).collect();
        let y = (0..self.d).map(|i| first(&|c| c.n[i].is_some())).collect();
        for (li, e) in l.iter_mut().zip(&self.ell) {
            if *e == Ell::Top {
                *li = n;
            }
        }
        Certificate { ell: self.ell.clone(), configs, transitions, x, y, l }
    }

    /// Cuts configuration cycles out of the prefix that must be simple.
    fn simplify(&self, mut c: Certificate) -> Option<Certificate> {
        loop {
            let end = self.a.map_or(c.len(), |a| c.y[a]);
            if is_simple(&c.configs[..end]) {
                return Some(c);
            }
            let cons = induced_y_constraints(&c);
            let mut cut = None;
            'search: for j in 1..=end {
                for k in (j + 1..=end).rev() {
                    if c.configs[j - 1] != c.configs[k - 1] {
                        continue;
                    }
                    let finite = |i: usize| self.ell[i] != Ell::Top;
                    if (0..self.d).any(|i| finite(i) && j < c.l[i] && c.l[i] < k) {
                        continue;
                    }
                    let breaks_eq = cons.iter().any(|y| {
                        y.kind == ConstraintKind::Eq && c.x[y.i - 1] <= j && k < c.x[y.i]
                    });
                    if breaks_eq {
                        continue;
                    }
                    cut = Some((j, k));
                    break 'search;
                }
            }
            let (j, k) = cut?;
            let shift = |p: usize| if p >= k { p - (k - j) } else { p };
            c.configs.drain(j..k);
            c.transitions.drain(j - 1..k - 1);
            for p in c.x.iter_mut().chain(c.y.iter_mut()).chain(c.l.iter_mut()) {
                *p = shift(*p);
            }
        }
    }

    fn run(&self, stats: &mut SearchStats) -> Result<EllOutcome, Stop> {
        if let Some(events) = self.relaxed(stats)? {
            let raw = self.certificate(&events);
            if let Some(c) = self.simplify(raw) {
                if check_certificate(&c, self.v).is_ok() {
                    return Ok(EllOutcome::Found(c));
                }
            }
            if self.a.is_some() {
                if let Some(events) = self.simple_dfs(stats)? {
                    let c = self.certificate(&events);
                    if check_certificate(&c, self.v).is_ok() {
                        return Ok(EllOutcome::Found(c));
                    }
                }
            }
            return Ok(EllOutcome::Incomplete);
        }
        Ok(if self.incomplete.get() { EllOutcome::Incomplete } else { EllOutcome::Exhausted })
    }
}

/// Per-pair candidate moduli; the flag reports whether they cover
/// `[1, M_i − 1]` entirely.
fn modulus_ranges(bounds: &Bounds, d: usize, params: &SearchParams) -> (Vec<u64>, bool) {
    let mut complete = true;
    let caps = (1..=d)
        .map(|i| {
            let full = bounds.m(i).saturating_sub(1);
            if full <= params.exhaustive_threshold {
                full
            } else {
                complete = false;
                full.min(params.lcap)
            }
        })
        .collect();
    (caps, complete)
}

/// ⊤-monotone vectors in lexicographic order, ⊤ last.
fn ell_vectors(caps: &[u64]) -> Vec<Vec<Ell>> {
    let mut out = vec![Vec::new()];
    for &cap in caps {
        let mut next = Vec::new();
        for prefix in &out {
            if prefix.last() != Some(&Ell::Top) {
                for l in 1..=cap {
                    let mut p = prefix.clone();
                    p.push(Ell::Mod(l));
                    next.push(p);
                }
            }
            let mut p = prefix.clone();
            p.push(Ell::Top);
            next.push(p);
        }
        out = next;
    }
    out.sort();
    out
}

/// Decides emptiness of a restricted machine whose pairs are in canonical
/// order. `Empty` is only returned when every modulus vector was searched to
/// exhaustion without hitting any cap.
pub fn search(v: &Lavass, params: &SearchParams, stats: &mut SearchStats) -> Verdict {
    if let Err(e) = v.validate_restricted() {
        return Verdict::Unknown(format!("machine is not restricted: {}", e.0));
    }
    if v.control_empty() {
        return Verdict::Empty;
    }
    let d = v.pairs();
    let bounds = Bounds::new(v.num_states, d);
    let (caps, mut exhaustive) = modulus_ranges(&bounds, d, params);
    for ell in ell_vectors(&caps) {
        stats.ell_vectors += 1;
        let ctx = Ctx::new(v, ell, *params);
        match ctx.run(stats) {
            Ok(EllOutcome::Found(c)) => return Verdict::Nonempty(c),
            Ok(EllOutcome::Exhausted) => {}
            Ok(EllOutcome::Incomplete) => exhaustive = false,
            Err(Stop) => return Verdict::Unknown(format!("budget of {} expanded states exhausted", params.budget)),
        }
    }
    if exhaustive {
        Verdict::Empty
    } else {
        Verdict::Unknown("search space not exhausted".into())
    }
}

/// Concrete counter values at the end of the certificate's run.
pub fn final_values(cert: &Certificate, v: &Lavass) -> Vec<BigUint> {
    replay(v, &cert.transitions).pop().unwrap().counters
}
