//! Formulas of existential generalised Semёnov arithmetic.
//!
//! Parsing produces a [`Problem`]: a variable table plus a positive formula
//! whose atoms may still be sugared (comparisons between terms containing
//! `exp2`). [`Problem::normalize`] flattens those into the three core atom
//! shapes: linear equations, `x = 2^y`, and regular predicates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::encoding::encode_msd;
use crate::error::ParseError;
use crate::regular::{compile_regex, Dfa, Regex};
use crate::sexpr::{read_all, SExpr};

pub type Var = usize;

/// Values indexed by variable id; missing entries read as zero.
pub type Assignment = Vec<BigUint>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    Int,
    Str,
}

#[derive(Debug, Clone, Default)]
pub struct VarTable {
    names: Vec<String>,
    sorts: Vec<Sort>,
    index: HashMap<String, Var>,
    next_slack: usize,
    next_exp: usize,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, sort: Sort) -> Option<Var> {
        if self.index.contains_key(name) {
            return None;
        }
        let v = self.names.len();
        self.names.push(name.to_string());
        self.sorts.push(sort);
        self.index.insert(name.to_string(), v);
        Some(v)
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.index.get(name).copied()
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v]
    }

    pub fn sort(&self, v: Var) -> Sort {
        self.sorts[v]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Whether the variable was introduced by normalization.
    pub fn is_fresh(&self, v: Var) -> bool {
        self.names[v].starts_with('_')
    }

    fn fresh(&mut self, kind: &str) -> Var {
        loop {
            let counter = if kind == "slack" { &mut self.next_slack } else { &mut self.next_exp };
            let name = format!("_{kind}{}", *counter);
            *counter += 1;
            if let Some(v) = self.declare(&name, Sort::Int) {
                return v;
            }
        }
    }
}

/// `Σ coeffs[x]·x = constant`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearEq {
    pub coeffs: BTreeMap<Var, i64>,
    pub constant: i64,
}

impl LinearEq {
    pub fn new(coeffs: impl IntoIterator<Item = (Var, i64)>, constant: i64) -> Self {
        let mut map = BTreeMap::new();
        for (v, a) in coeffs {
            *map.entry(v).or_insert(0) += a;
        }
        map.retain(|_, a| *a != 0);
        LinearEq { coeffs: map, constant }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
    Ne,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(i64),
    Var(Var),
    Add(Vec<Term>),
    Scale(i64, Box<Term>),
    Exp2(Box<Term>),
}

#[derive(Clone)]
pub enum Atom {
    Linear(LinearEq),
    /// `x = 2^y`
    Exp2 { x: Var, y: Var },
    /// Zero-closed regular predicate over `vars` (the DFA's rows, in order).
    Regular { vars: Vec<Var>, dfa: Arc<Dfa> },
    NegEq { x: Var, y: Var },
    /// Sugared comparison, removed by normalization.
    Compare { op: CmpOp, lhs: Term, rhs: Term },
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Atom::Linear(a), Atom::Linear(b)) => a == b,
            (Atom::Exp2 { x, y }, Atom::Exp2 { x: x2, y: y2 }) => x == x2 && y == y2,
            (Atom::Regular { vars, dfa }, Atom::Regular { vars: v2, dfa: d2 }) => {
                vars == v2 && (Arc::ptr_eq(dfa, d2) || **dfa == **d2)
            }
            (Atom::NegEq { x, y }, Atom::NegEq { x: x2, y: y2 }) => x == x2 && y == y2,
            (Atom::Compare { op, lhs, rhs }, Atom::Compare { op: o2, lhs: l2, rhs: r2 }) => {
                op == o2 && lhs == l2 && rhs == r2
            }
            _ => false,
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Linear(l) => write!(f, "Linear({:?} = {})", l.coeffs, l.constant),
            Atom::Exp2 { x, y } => write!(f, "Exp2(v{x} = 2^v{y})"),
            Atom::Regular { vars, dfa } => write!(f, "Regular({vars:?}, {} states)", dfa.num_states()),
            Atom::NegEq { x, y } => write!(f, "NegEq(v{x}, v{y})"),
            Atom::Compare { op, lhs, rhs } => write!(f, "Compare({op:?}, {lhs:?}, {rhs:?})"),
        }
    }
}

impl Atom {
    pub fn is_core(&self) -> bool {
        matches!(self, Atom::Linear(_) | Atom::Exp2 { .. } | Atom::Regular { .. })
    }

    pub fn vars(&self, out: &mut Vec<Var>) {
        match self {
            Atom::Linear(l) => out.extend(l.coeffs.keys().copied()),
            Atom::Exp2 { x, y } | Atom::NegEq { x, y } => out.extend([*x, *y]),
            Atom::Regular { vars, .. } => out.extend(vars.iter().copied()),
            Atom::Compare { lhs, rhs, .. } => {
                term_vars(lhs, out);
                term_vars(rhs, out);
            }
        }
    }
}

fn term_vars(t: &Term, out: &mut Vec<Var>) {
    match t {
        Term::Const(_) => {}
        Term::Var(v) => out.push(*v),
        Term::Add(ts) => ts.iter().for_each(|t| term_vars(t, out)),
        Term::Scale(_, t) | Term::Exp2(t) => term_vars(t, out),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom(Atom),
    /// Empty conjunction is `true`.
    And(Vec<Formula>),
    /// Empty disjunction is `false`.
    Or(Vec<Formula>),
}

impl Formula {
    pub fn truth() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn falsity() -> Formula {
        Formula::Or(Vec::new())
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Formula::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Formula::And(flat)
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Formula::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Formula::Or(flat)
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                Formula::Atom(a) => out.push(a),
                Formula::And(fs) | Formula::Or(fs) => stack.extend(fs.iter().rev()),
            }
        }
        out
    }

    pub fn is_normalized(&self) -> bool {
        self.atoms().iter().all(|a| a.is_core())
    }

    /// Free variables in first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        let mut all = Vec::new();
        for a in self.atoms() {
            a.vars(&mut all);
        }
        let mut seen = std::collections::HashSet::new();
        all.retain(|v| seen.insert(*v));
        all
    }
}

/// A formula together with its variable table.
#[derive(Debug, Clone)]
pub struct Problem {
    pub vars: VarTable,
    pub formula: Formula,
}

// ---------------------------------------------------------------------------
// Parsing

/// Parses the s-expression input grammar (integer variables only).
pub fn parse(text: &str) -> Result<Problem, ParseError> {
    let exprs = read_all(text)?;
    let mut vars = VarTable::new();
    let mut assertions = Vec::new();
    for e in &exprs {
        match e.head() {
            Some("declare-int") => {
                let name = declared_name(e)?;
                if vars.declare(name, Sort::Int).is_none() {
                    return Err(e.error(format!("variable `{name}` declared twice")));
                }
            }
            Some("assert") => {
                let items = e.as_list().unwrap();
                if items.len() != 2 {
                    return Err(e.error("`assert` takes one argument"));
                }
                assertions.push(parse_bool(&items[1], &vars)?);
            }
            Some("check-sat") | Some("get-model") | Some("set-logic") | Some("set-info") | Some("exit") => {}
            Some("declare-str") => return Err(e.error("string variables need the string front-end")),
            _ => return Err(e.error("expected `declare-int` or `assert`")),
        }
    }
    Ok(Problem { vars, formula: Formula::and(assertions) })
}

pub(crate) fn declared_name(e: &SExpr) -> Result<&str, ParseError> {
    let items = e.as_list().unwrap();
    match items {
        [_, name] => name.as_atom().ok_or_else(|| name.error("expected a variable name")),
        // `(declare-const x Int)` style
        [_, name, _] => name.as_atom().ok_or_else(|| name.error("expected a variable name")),
        _ => Err(e.error("malformed declaration")),
    }
}

/// Boolean layer: `and`, `or`, `not (= …)`, comparisons, `in-re`.
pub(crate) fn parse_bool(e: &SExpr, vars: &VarTable) -> Result<Formula, ParseError> {
    let items = e.as_list().ok_or_else(|| match e.as_atom() {
        Some("true") => e.error("unsupported"),
        _ => e.error("expected a boolean expression"),
    });
    let items = match (e.as_atom(), items) {
        (Some("true"), _) => return Ok(Formula::truth()),
        (Some("false"), _) => return Ok(Formula::falsity()),
        (_, r) => r?,
    };
    let head = e.head().ok_or_else(|| e.error("expected an operator"))?;
    let args = &items[1..];
    match head {
        "and" => Ok(Formula::and(args.iter().map(|a| parse_bool(a, vars)).collect::<Result<_, _>>()?)),
        "or" => Ok(Formula::or(args.iter().map(|a| parse_bool(a, vars)).collect::<Result<_, _>>()?)),
        "not" => {
            if args.len() != 1 || args[0].head() != Some("=") {
                return Err(e.error("`not` is only supported around `=`"));
            }
            let inner = args[0].as_list().unwrap();
            if inner.len() != 3 {
                return Err(args[0].error("`(not (= a b))` takes two operands"));
            }
            let l = parse_term(&inner[1], vars)?;
            let r = parse_term(&inner[2], vars)?;
            Ok(compare(CmpOp::Ne, l, r))
        }
        "=" | "<=" | "<" | ">=" | ">" => {
            if args.len() < 2 {
                return Err(e.error(format!("`{head}` needs at least two operands")));
            }
            let op = match head {
                "=" => CmpOp::Eq,
                "<=" => CmpOp::Le,
                "<" => CmpOp::Lt,
                ">=" => CmpOp::Ge,
                _ => CmpOp::Gt,
            };
            let terms: Vec<Term> = args.iter().map(|a| parse_term(a, vars)).collect::<Result<_, _>>()?;
            Ok(Formula::and(terms.windows(2).map(|w| compare(op, w[0].clone(), w[1].clone())).collect()))
        }
        "distinct" => {
            let terms: Vec<Term> = args.iter().map(|a| parse_term(a, vars)).collect::<Result<_, _>>()?;
            let mut parts = Vec::new();
            for i in 0..terms.len() {
                for j in i + 1..terms.len() {
                    parts.push(compare(CmpOp::Ne, terms[i].clone(), terms[j].clone()));
                }
            }
            Ok(Formula::and(parts))
        }
        "in-re" => {
            if args.len() != 2 {
                return Err(e.error("`in-re` takes a variable list and a regex"));
            }
            let list = args[0].as_list().ok_or_else(|| args[0].error("expected a variable list"))?;
            let mut vs = Vec::new();
            for item in list {
                let name = item.as_atom().ok_or_else(|| item.error("expected a variable"))?;
                let v = vars.lookup(name).ok_or_else(|| item.error(format!("undeclared variable `{name}`")))?;
                if vs.contains(&v) {
                    return Err(item.error(format!("variable `{name}` repeated in `in-re`")));
                }
                vs.push(v);
            }
            let SExpr::Str(text, _) = &args[1] else {
                return Err(args[1].error("expected a regex string"));
            };
            let regex = Regex::parse(text, vs.len()).map_err(|err| {
                args[1].error(format!("regex arity mismatch or syntax error: {}", err.message))
            })?;
            Ok(Formula::Atom(regular_atom(&regex, &vs, vars).map_err(|m| args[1].error(m))?))
        }
        other => Err(e.error(format!("unknown predicate `{other}`"))),
    }
}

pub(crate) fn regular_atom(regex: &Regex, vs: &[Var], vars: &VarTable) -> Result<Atom, String> {
    let names = vs.iter().map(|&v| vars.name(v).to_string()).collect();
    let dfa = compile_regex(regex, names).map_err(|e| e.to_string())?;
    Ok(Atom::Regular { vars: vs.to_vec(), dfa: Arc::new(dfa.zero_close().minimize()) })
}

/// Builds the atom for `lhs op rhs`, recognising the two core shapes
/// directly.
pub(crate) fn compare(op: CmpOp, lhs: Term, rhs: Term) -> Formula {
    if op == CmpOp::Eq {
        match (&lhs, &rhs) {
            (Term::Var(x), Term::Exp2(inner)) | (Term::Exp2(inner), Term::Var(x)) => {
                if let Term::Var(y) = **inner {
                    return Formula::Atom(Atom::Exp2 { x: *x, y });
                }
            }
            _ => {}
        }
        if let (Some((lc, lk)), Some((rc, rk))) = (linear_part(&lhs), linear_part(&rhs)) {
            let coeffs = lc.into_iter().chain(rc.into_iter().map(|(v, a)| (v, -a)));
            let eq = LinearEq::new(coeffs, rk - lk);
            if !eq.coeffs.is_empty() {
                return Formula::Atom(Atom::Linear(eq));
            }
        }
    }
    if op == CmpOp::Ne {
        if let (Term::Var(x), Term::Var(y)) = (&lhs, &rhs) {
            return Formula::Atom(Atom::NegEq { x: *x, y: *y });
        }
    }
    Formula::Atom(Atom::Compare { op, lhs, rhs })
}

/// Linear form of an exp2-free term.
fn linear_part(t: &Term) -> Option<(Vec<(Var, i64)>, i64)> {
    match t {
        Term::Const(c) => Some((Vec::new(), *c)),
        Term::Var(v) => Some((vec![(*v, 1)], 0)),
        Term::Add(ts) => {
            let mut coeffs = Vec::new();
            let mut k = 0i64;
            for t in ts {
                let (c, kk) = linear_part(t)?;
                coeffs.extend(c);
                k = k.checked_add(kk)?;
            }
            Some((coeffs, k))
        }
        Term::Scale(a, t) => {
            let (c, k) = linear_part(t)?;
            let c = c.into_iter().map(|(v, b)| Some((v, a.checked_mul(b)?))).collect::<Option<_>>()?;
            Some((c, a.checked_mul(k)?))
        }
        Term::Exp2(_) => None,
    }
}

pub(crate) fn parse_term(e: &SExpr, vars: &VarTable) -> Result<Term, ParseError> {
    if let Some(a) = e.as_atom() {
        if let Ok(n) = a.parse::<i64>() {
            return Ok(Term::Const(n));
        }
        let v = vars.lookup(a).ok_or_else(|| e.error(format!("undeclared variable `{a}`")))?;
        if vars.sort(v) != Sort::Int {
            return Err(e.error(format!("`{a}` is not an integer variable")));
        }
        return Ok(Term::Var(v));
    }
    let items = e.as_list().ok_or_else(|| e.error("expected a term"))?;
    let head = e.head().ok_or_else(|| e.error("expected an operator"))?;
    let args = &items[1..];
    match head {
        "+" => Ok(Term::Add(args.iter().map(|a| parse_term(a, vars)).collect::<Result<_, _>>()?)),
        "-" => {
            let ts: Vec<Term> = args.iter().map(|a| parse_term(a, vars)).collect::<Result<_, _>>()?;
            match ts.len() {
                1 => Ok(Term::Scale(-1, Box::new(ts.into_iter().next().unwrap()))),
                0 => Err(e.error("`-` needs an operand")),
                _ => {
                    let mut it = ts.into_iter();
                    let mut parts = vec![it.next().unwrap()];
                    parts.extend(it.map(|t| Term::Scale(-1, Box::new(t))));
                    Ok(Term::Add(parts))
                }
            }
        }
        "*" => {
            if args.len() != 2 {
                return Err(e.error("`*` takes an integer literal and a term"));
            }
            let lit = |x: &SExpr| x.as_atom().and_then(|a| a.parse::<i64>().ok());
            match (lit(&args[0]), lit(&args[1])) {
                (Some(k), _) => Ok(Term::Scale(k, Box::new(parse_term(&args[1], vars)?))),
                (None, Some(k)) => Ok(Term::Scale(k, Box::new(parse_term(&args[0], vars)?))),
                _ => Err(e.error("non-linear multiplication")),
            }
        }
        "exp2" => {
            if args.len() != 1 {
                return Err(e.error("`exp2` takes one operand"));
            }
            Ok(Term::Exp2(Box::new(parse_term(&args[0], vars)?)))
        }
        other => Err(e.error(format!("unknown function `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// Normalization

impl Problem {
    /// Rewrites every sugared atom into core atoms, introducing fresh
    /// existential variables (`_slack<n>`, `_exp<n>`).
    pub fn normalize(&self) -> Problem {
        let mut n = Normalizer { vars: self.vars.clone(), exp_cache: HashMap::new() };
        let formula = n.formula(&self.formula);
        Problem { vars: n.vars, formula }
    }
}

type ExpKey = (Vec<(Var, i64)>, i64);

struct Normalizer {
    vars: VarTable,
    /// exponent linear form → (exponent var, power var, defining atoms)
    exp_cache: HashMap<ExpKey, (Var, Vec<Atom>)>,
}

/// Linear form `Σ a·x + c` used during flattening.
#[derive(Debug, Clone, Default)]
struct Lin {
    coeffs: BTreeMap<Var, i64>,
    constant: i64,
}

impl Lin {
    fn add_scaled(&mut self, other: &Lin, k: i64) {
        for (&v, &a) in &other.coeffs {
            *self.coeffs.entry(v).or_insert(0) += a * k;
        }
        self.coeffs.retain(|_, a| *a != 0);
        self.constant += other.constant * k;
    }
}

impl Normalizer {
    fn formula(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::And(fs) => Formula::and(fs.iter().map(|f| self.formula(f)).collect()),
            Formula::Or(fs) => Formula::or(fs.iter().map(|f| self.formula(f)).collect()),
            Formula::Atom(a) => self.atom(a),
        }
    }

    fn atom(&mut self, a: &Atom) -> Formula {
        match a {
            Atom::Linear(_) | Atom::Exp2 { .. } | Atom::Regular { .. } => Formula::Atom(a.clone()),
            Atom::NegEq { x, y } => self.compare(CmpOp::Ne, &Term::Var(*x), &Term::Var(*y)),
            Atom::Compare { op, lhs, rhs } => self.compare(*op, lhs, rhs),
        }
    }

    fn compare(&mut self, op: CmpOp, lhs: &Term, rhs: &Term) -> Formula {
        let mut side = Vec::new();
        if op == CmpOp::Eq {
            // x = 2^t keeps x itself as the power variable
            if let (Term::Var(x), Term::Exp2(t)) | (Term::Exp2(t), Term::Var(x)) = (lhs, rhs) {
                let y = self.exponent_var(t, &mut side);
                side.push(Formula::Atom(Atom::Exp2 { x: *x, y }));
                return Formula::and(side);
            }
        }
        let l = self.linearize(lhs, &mut side);
        let r = self.linearize(rhs, &mut side);
        // diff = lhs - rhs
        let mut diff = l;
        diff.add_scaled(&r, -1);
        let core = match op {
            CmpOp::Eq => self.eq_zero(&diff, None),
            CmpOp::Le => self.le_zero(&diff, 0),
            CmpOp::Lt => self.le_zero(&diff, 1),
            CmpOp::Ge => self.le_zero(&neg(&diff), 0),
            CmpOp::Gt => self.le_zero(&neg(&diff), 1),
            CmpOp::Ne => {
                let a = self.le_zero(&diff, 1);
                let b = self.le_zero(&neg(&diff), 1);
                Formula::or(vec![a, b])
            }
        };
        side.push(core);
        Formula::and(side)
    }

    /// `diff (+ slack) = 0`
    fn eq_zero(&mut self, diff: &Lin, slack: Option<Var>) -> Formula {
        let mut coeffs = diff.coeffs.clone();
        if let Some(u) = slack {
            coeffs.insert(u, 1);
        }
        if coeffs.is_empty() {
            return if diff.constant == 0 { Formula::truth() } else { Formula::falsity() };
        }
        Formula::Atom(Atom::Linear(LinearEq { coeffs, constant: -diff.constant }))
    }

    /// `diff + strict ≤ 0` as `diff + strict + u = 0`.
    fn le_zero(&mut self, diff: &Lin, strict: i64) -> Formula {
        let mut d = diff.clone();
        d.constant += strict;
        if d.coeffs.is_empty() {
            return if d.constant <= 0 { Formula::truth() } else { Formula::falsity() };
        }
        let u = self.vars.fresh("slack");
        self.eq_zero(&d, Some(u))
    }

    fn linearize(&mut self, t: &Term, side: &mut Vec<Formula>) -> Lin {
        match t {
            Term::Const(c) => Lin { coeffs: BTreeMap::new(), constant: *c },
            Term::Var(v) => Lin { coeffs: BTreeMap::from([(*v, 1)]), constant: 0 },
            Term::Add(ts) => {
                let mut acc = Lin::default();
                for t in ts {
                    let l = self.linearize(t, side);
                    acc.add_scaled(&l, 1);
                }
                acc
            }
            Term::Scale(k, t) => {
                let l = self.linearize(t, side);
                let mut acc = Lin::default();
                acc.add_scaled(&l, *k);
                acc
            }
            Term::Exp2(inner) => {
                let exponent = self.linearize(inner, side);
                if exponent.coeffs.is_empty() {
                    if (0..=40).contains(&exponent.constant) {
                        return Lin { coeffs: BTreeMap::new(), constant: 1i64 << exponent.constant };
                    }
                    if exponent.constant < 0 {
                        side.push(Formula::falsity());
                        return Lin::default();
                    }
                }
                // 2^(y + c) = 2^c · 2^y for small c ≥ 0
                let single = exponent.coeffs.len() == 1 && exponent.coeffs.values().all(|&a| a == 1);
                if single && (0..=20).contains(&exponent.constant) {
                    let y = *exponent.coeffs.keys().next().unwrap();
                    let e = self.power_of(&Lin { coeffs: exponent.coeffs.clone(), constant: 0 }, y, side);
                    return Lin { coeffs: BTreeMap::from([(e, 1i64 << exponent.constant)]), constant: 0 };
                }
                let y = self.exponent_var_lin(&exponent, side);
                let e = self.power_of(&Lin { coeffs: BTreeMap::from([(y, 1)]), constant: 0 }, y, side);
                Lin { coeffs: BTreeMap::from([(e, 1)]), constant: 0 }
            }
        }
    }

    /// A variable equal to the exponent term `t`.
    fn exponent_var(&mut self, t: &Term, side: &mut Vec<Formula>) -> Var {
        if let Term::Var(y) = t {
            return *y;
        }
        let l = self.linearize(t, side);
        self.exponent_var_lin(&l, side)
    }

    fn exponent_var_lin(&mut self, l: &Lin, side: &mut Vec<Formula>) -> Var {
        if l.constant == 0 && l.coeffs.len() == 1 && l.coeffs.values().all(|&a| a == 1) {
            return *l.coeffs.keys().next().unwrap();
        }
        let key = (l.coeffs.iter().map(|(&v, &a)| (v, a)).collect::<Vec<_>>(), l.constant);
        if let Some((v, defs)) = self.exp_cache.get(&key) {
            side.extend(defs.iter().cloned().map(Formula::Atom));
            return *v;
        }
        let t = self.vars.fresh("exp");
        // t - Σ a·x = c
        let mut coeffs = BTreeMap::from([(t, 1i64)]);
        for (&v, &a) in &l.coeffs {
            *coeffs.entry(v).or_insert(0) -= a;
        }
        coeffs.retain(|_, a| *a != 0);
        let def = Atom::Linear(LinearEq { coeffs, constant: l.constant });
        side.push(Formula::Atom(def.clone()));
        self.exp_cache.insert(key, (t, vec![def]));
        t
    }

    /// The fresh variable `e` with `e = 2^y`, shared across the formula.
    fn power_of(&mut self, key_lin: &Lin, y: Var, side: &mut Vec<Formula>) -> Var {
        let key = (key_lin.coeffs.iter().map(|(&v, &a)| (v, a)).collect::<Vec<_>>(), i64::MIN);
        if let Some((e, defs)) = self.exp_cache.get(&key) {
            side.extend(defs.iter().cloned().map(Formula::Atom));
            return *e;
        }
        let e = self.vars.fresh("exp");
        let def = Atom::Exp2 { x: e, y };
        side.push(Formula::Atom(def.clone()));
        self.exp_cache.insert(key, (e, vec![def]));
        e
    }
}

fn neg(l: &Lin) -> Lin {
    let mut out = Lin::default();
    out.add_scaled(l, -1);
    out
}

// ---------------------------------------------------------------------------
// Disjunctive normal form, streamed

/// Lazily yields the conjuncts of the DNF of a formula, left to right.
pub struct DnfConjuncts<'a> {
    stack: Vec<(Vec<&'a Formula>, Vec<Atom>)>,
}

pub fn dnf_conjuncts(f: &Formula) -> DnfConjuncts<'_> {
    DnfConjuncts { stack: vec![(vec![f], Vec::new())] }
}

impl Iterator for DnfConjuncts<'_> {
    type Item = Vec<Atom>;

    fn next(&mut self) -> Option<Vec<Atom>> {
        while let Some((mut pending, mut acc)) = self.stack.pop() {
            loop {
                let Some(f) = pending.pop() else {
                    return Some(acc);
                };
                match f {
                    Formula::Atom(a) => {
                        if !acc.contains(a) {
                            acc.push(a.clone());
                        }
                    }
                    Formula::And(fs) => pending.extend(fs.iter().rev()),
                    Formula::Or(fs) => {
                        for alt in fs.iter().rev() {
                            let mut p = pending.clone();
                            p.push(alt);
                            self.stack.push((p, acc.clone()));
                        }
                        break;
                    }
                }
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Evaluation

fn value(sigma: &[BigUint], v: Var) -> BigUint {
    sigma.get(v).cloned().unwrap_or_default()
}

/// Largest exponent evaluated when `exp2` occurs inside a sugared term.
const MAX_EVAL_EXPONENT: u64 = 1 << 20;

fn eval_term(t: &Term, sigma: &[BigUint]) -> Option<BigInt> {
    Some(match t {
        Term::Const(c) => BigInt::from(*c),
        Term::Var(v) => BigInt::from(value(sigma, *v)),
        Term::Add(ts) => {
            let mut acc = BigInt::zero();
            for t in ts {
                acc += eval_term(t, sigma)?;
            }
            acc
        }
        Term::Scale(k, t) => eval_term(t, sigma)? * BigInt::from(*k),
        Term::Exp2(t) => {
            let e = eval_term(t, sigma)?;
            if e.is_negative() {
                return None;
            }
            let e = e.to_u64().filter(|&e| e <= MAX_EVAL_EXPONENT)?;
            BigInt::one() << e
        }
    })
}

/// Decides `x = 2^y` on concrete values.
pub fn is_power(x: &BigUint, y: &BigUint) -> bool {
    match y.to_u64() {
        Some(y) => x.bits() == y + 1 && x.trailing_zeros() == Some(y),
        None => false,
    }
}

pub fn eval_atom(a: &Atom, sigma: &[BigUint]) -> bool {
    match a {
        Atom::Linear(l) => {
            let mut small: i128 = 0;
            let mut fits = true;
            for (&v, &k) in &l.coeffs {
                match sigma.get(v).map_or(Some(0), |x| x.to_u64()) {
                    Some(x) => match (x as i128).checked_mul(k as i128).and_then(|p| small.checked_add(p)) {
                        Some(s) => small = s,
                        None => {
                            fits = false;
                            break;
                        }
                    },
                    None => {
                        fits = false;
                        break;
                    }
                }
            }
            if fits {
                return small == l.constant as i128;
            }
            let mut acc = BigInt::zero();
            for (&v, &k) in &l.coeffs {
                acc += BigInt::from(value(sigma, v)) * k;
            }
            acc == BigInt::from(l.constant)
        }
        Atom::Exp2 { x, y } => is_power(&value(sigma, *x), &value(sigma, *y)),
        Atom::Regular { vars, dfa } => {
            let vals: Vec<BigUint> = vars.iter().map(|&v| value(sigma, v)).collect();
            dfa.accepts(&encode_msd(&vals, 0))
        }
        Atom::NegEq { x, y } => value(sigma, *x) != value(sigma, *y),
        Atom::Compare { op, lhs, rhs } => {
            let (Some(l), Some(r)) = (eval_term(lhs, sigma), eval_term(rhs, sigma)) else {
                return false;
            };
            match op {
                CmpOp::Eq => l == r,
                CmpOp::Le => l <= r,
                CmpOp::Lt => l < r,
                CmpOp::Ge => l >= r,
                CmpOp::Gt => l > r,
                CmpOp::Ne => l != r,
            }
        }
    }
}

/// Truth of `f` under `sigma` (variables beyond `sigma.len()` read as 0).
pub fn eval_formula(f: &Formula, sigma: &[BigUint]) -> bool {
    match f {
        Formula::Atom(a) => eval_atom(a, sigma),
        Formula::And(fs) => fs.iter().all(|f| eval_formula(f, sigma)),
        Formula::Or(fs) => fs.iter().any(|f| eval_formula(f, sigma)),
    }
}

/// Builds an assignment vector from `(var, value)` pairs.
pub fn assignment(n: usize, pairs: &[(Var, u64)]) -> Assignment {
    let mut a = vec![BigUint::zero(); n];
    for &(v, x) in pairs {
        a[v] = BigUint::from(x);
    }
    a
}
