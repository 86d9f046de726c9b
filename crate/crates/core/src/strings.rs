//! String constraints over {0,1}: parsing, translation into integer
//! arithmetic and decoding of numeric models.
//!
//! A string `s` is represented by the number `⟦1s⟧`, so every string
//! variable becomes a positive integer whose binary expansion minus the
//! leading one is the string.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{InternalError, ParseError};
use crate::formula::{compare, declared_name, eval_formula, parse_bool, regular_atom, CmpOp, Formula, Problem, Sort, Term, Var, VarTable};
use crate::regular::Regex;
use crate::sexpr::{read_all, SExpr};

#[derive(Clone)]
pub struct StrRegex {
    pub source: String,
    pub parsed: Regex,
    matcher: regex::Regex,
}

impl StrRegex {
    pub fn new(source: &str) -> Result<Self, String> {
        let parsed = Regex::parse_bits(source).map_err(|e| e.message)?;
        let matcher = regex::Regex::new(&format!("^(?:{source})$")).map_err(|e| e.to_string())?;
        Ok(StrRegex { source: source.to_string(), parsed, matcher })
    }

    pub fn is_match(&self, s: &str) -> bool {
        self.matcher.is_match(s)
    }
}

impl fmt::Debug for StrRegex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.source)
    }
}

#[derive(Debug, Clone)]
pub enum StrAtom {
    InRe { s: Var, regex: StrRegex },
    StrEq { s: Var, t: Var, negated: bool },
    /// `|s| = x`
    Len { s: Var, x: Var },
    /// `x` is the value of `s` read as a binary numeral (empty string reads 0).
    StrNum { s: Var, x: Var },
    Int(Formula),
}

#[derive(Debug, Clone)]
pub enum StrFormula {
    Atom(StrAtom),
    And(Vec<StrFormula>),
    Or(Vec<StrFormula>),
}

#[derive(Debug, Clone)]
pub struct StrProblem {
    pub vars: VarTable,
    pub formula: StrFormula,
}

impl StrProblem {
    pub fn string_vars(&self) -> Vec<Var> {
        (0..self.vars.len()).filter(|&v| self.vars.sort(v) == Sort::Str).collect()
    }

    pub fn int_vars(&self) -> Vec<Var> {
        (0..self.vars.len()).filter(|&v| self.vars.sort(v) == Sort::Int).collect()
    }
}

/// Parses a script that may declare string variables.
pub fn parse_strings(text: &str) -> Result<StrProblem, ParseError> {
    let mut vars = VarTable::new();
    let mut parts = Vec::new();
    for e in &read_all(text)? {
        match e.head() {
            Some(h @ ("declare-int" | "declare-str")) => {
                let name = declared_name(e)?;
                let sort = if h == "declare-str" { Sort::Str } else { Sort::Int };
                if vars.declare(name, sort).is_none() {
                    return Err(e.error(format!("variable `{name}` declared twice")));
                }
            }
            Some("assert") => {
                let items = e.as_list().unwrap();
                if items.len() != 2 {
                    return Err(e.error("`assert` takes one argument"));
                }
                parts.push(parse_str_bool(&items[1], &vars)?);
            }
            Some("check-sat" | "get-model" | "set-logic" | "set-info" | "exit") => {}
            _ => return Err(e.error("expected a declaration or `assert`")),
        }
    }
    Ok(StrProblem { vars, formula: StrFormula::And(parts) })
}

fn var_of_sort(e: &SExpr, vars: &VarTable, sort: Sort) -> Result<Var, ParseError> {
    let name = e.as_atom().ok_or_else(|| e.error("expected a variable"))?;
    let v = vars.lookup(name).ok_or_else(|| e.error(format!("undeclared variable `{name}`")))?;
    if vars.sort(v) != sort {
        let want = if sort == Sort::Str { "string" } else { "integer" };
        return Err(e.error(format!("`{name}` is not a {want} variable")));
    }
    Ok(v)
}

fn is_string_var(e: &SExpr, vars: &VarTable) -> bool {
    e.as_atom().and_then(|n| vars.lookup(n)).is_some_and(|v| vars.sort(v) == Sort::Str)
}

fn string_fn(e: &SExpr) -> Option<(&str, &SExpr)> {
    match e.as_list()? {
        [f, arg] => match f.as_atom()? {
            h @ ("str.len" | "str.to-int" | "str.to_int") => Some((h, arg)),
            _ => None,
        },
        _ => None,
    }
}

fn parse_str_bool(e: &SExpr, vars: &VarTable) -> Result<StrFormula, ParseError> {
    let args = e.as_list().map(|l| &l[1.min(l.len())..]).unwrap_or(&[]);
    match e.head() {
        Some("and") => Ok(StrFormula::And(args.iter().map(|a| parse_str_bool(a, vars)).collect::<Result<_, _>>()?)),
        Some("or") => Ok(StrFormula::Or(args.iter().map(|a| parse_str_bool(a, vars)).collect::<Result<_, _>>()?)),
        Some("str.in-re" | "str.in_re") => {
            let [s, re] = args else { return Err(e.error("`str.in-re` takes a string variable and a regex")) };
            let s = var_of_sort(s, vars, Sort::Str)?;
            let SExpr::Str(text, _) = re else { return Err(re.error("expected a regex string")) };
            let regex = StrRegex::new(text).map_err(|m| re.error(format!("bad regex: {m}")))?;
            Ok(StrFormula::Atom(StrAtom::InRe { s, regex }))
        }
        Some("not") if args.len() == 1 && args[0].head() == Some("=") => {
            let inner = &args[0].as_list().unwrap()[1..];
            if inner.iter().any(|a| is_string_var(a, vars)) {
                let [s, t] = inner else { return Err(args[0].error("string equality takes two operands")) };
                let s = var_of_sort(s, vars, Sort::Str)?;
                let t = var_of_sort(t, vars, Sort::Str)?;
                return Ok(StrFormula::Atom(StrAtom::StrEq { s, t, negated: true }));
            }
            Ok(StrFormula::Atom(StrAtom::Int(parse_bool(e, vars)?)))
        }
        Some("=") if args.len() == 2 && (args.iter().any(|a| is_string_var(a, vars) || string_fn(a).is_some())) => {
            if let Some((f, s, x)) = string_fn(&args[0]).map(|(f, s)| (f, s, &args[1])).or_else(|| string_fn(&args[1]).map(|(f, s)| (f, s, &args[0]))) {
                let s = var_of_sort(s, vars, Sort::Str)?;
                let x = var_of_sort(x, vars, Sort::Int)?;
                return Ok(StrFormula::Atom(if f == "str.len" { StrAtom::Len { s, x } } else { StrAtom::StrNum { s, x } }));
            }
            let s = var_of_sort(&args[0], vars, Sort::Str)?;
            let t = var_of_sort(&args[1], vars, Sort::Str)?;
            Ok(StrFormula::Atom(StrAtom::StrEq { s, t, negated: false }))
        }
        _ => Ok(StrFormula::Atom(StrAtom::Int(parse_bool(e, vars)?))),
    }
}

/// Integer formula equisatisfiable with the string formula. String
/// variables keep their ids; each string whose length is mentioned gets
/// one fresh exponent variable `_len_<s>` shared by its length and
/// numeral atoms.
pub fn sigma_translate(p: &StrProblem) -> Problem {
    let mut vars = p.vars.clone();
    let mut lens = BTreeMap::new();
    let body = translate(&p.formula, &mut vars, &mut lens);
    let mut parts = vec![body];
    for s in p.string_vars() {
        parts.push(compare(CmpOp::Ge, Term::Var(s), Term::Const(1)));
    }
    for (&s, &l) in &lens {
        let pow = || Term::Exp2(Box::new(Term::Var(l)));
        parts.push(compare(CmpOp::Le, pow(), Term::Var(s)));
        parts.push(compare(CmpOp::Lt, Term::Var(s), Term::Scale(2, Box::new(pow()))));
    }
    Problem { vars, formula: Formula::and(parts) }
}

fn length_var(s: Var, vars: &mut VarTable, lens: &mut BTreeMap<Var, Var>) -> Var {
    if let Some(&l) = lens.get(&s) {
        return l;
    }
    let base = format!("_len_{}", vars.name(s));
    let mut name = base.clone();
    let mut k = 0;
    let l = loop {
        if let Some(l) = vars.declare(&name, Sort::Int) {
            break l;
        }
        k += 1;
        name = format!("{base}{k}");
    };
    lens.insert(s, l);
    l
}

fn translate(f: &StrFormula, vars: &mut VarTable, lens: &mut BTreeMap<Var, Var>) -> Formula {
    match f {
        StrFormula::And(fs) => Formula::and(fs.iter().map(|g| translate(g, vars, lens)).collect()),
        StrFormula::Or(fs) => Formula::or(fs.iter().map(|g| translate(g, vars, lens)).collect()),
        StrFormula::Atom(a) => match a {
            StrAtom::Int(g) => g.clone(),
            StrAtom::InRe { s, regex } => {
                let framed = Regex::Concat(vec![
                    Regex::Star(Box::new(Regex::Column(Some(0)))),
                    Regex::Column(Some(1)),
                    regex.parsed.clone(),
                ]);
                Formula::Atom(regular_atom(&framed, &[*s], vars).expect("single-variable regex compiles"))
            }
            StrAtom::StrEq { s, t, negated } => {
                let op = if *negated { CmpOp::Ne } else { CmpOp::Eq };
                compare(op, Term::Var(*s), Term::Var(*t))
            }
            StrAtom::Len { s, x } => {
                let l = length_var(*s, vars, lens);
                compare(CmpOp::Eq, Term::Var(*x), Term::Var(l))
            }
            StrAtom::StrNum { s, x } => {
                let l = length_var(*s, vars, lens);
                let lhs = Term::Add(vec![Term::Var(*x), Term::Exp2(Box::new(Term::Var(l)))]);
                compare(CmpOp::Eq, lhs, Term::Var(*s))
            }
        },
    }
}

pub fn encode_string(s: &str) -> BigUint {
    s.bytes().fold(BigUint::one(), |acc, b| (acc << 1u32) + u32::from(b == b'1'))
}

pub fn decode_string(v: &BigUint) -> Result<String, InternalError> {
    if v.is_zero() {
        return Err(InternalError::new("string variable has value 0"));
    }
    Ok(v.to_str_radix(2)[1..].to_string())
}

/// A value for every declared variable of a string problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(BigUint),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// Reads the problem's variables out of a model of the translated formula.
pub fn decode_string_model(model: &[BigUint], p: &StrProblem) -> Result<Vec<Value>, InternalError> {
    (0..p.vars.len())
        .map(|v| {
            let n = model.get(v).cloned().unwrap_or_default();
            match p.vars.sort(v) {
                Sort::Int => Ok(Value::Int(n)),
                Sort::Str => decode_string(&n).map(Value::Str),
            }
        })
        .collect()
}

/// Numeral value of a binary string; the empty string reads 0.
pub fn string_numeral(s: &str) -> BigUint {
    s.bytes().fold(BigUint::zero(), |acc, b| (acc << 1u32) + u32::from(b == b'1'))
}

/// Direct string semantics.
pub fn eval_str_formula(f: &StrFormula, values: &[Value]) -> bool {
    match f {
        StrFormula::And(fs) => fs.iter().all(|g| eval_str_formula(g, values)),
        StrFormula::Or(fs) => fs.iter().any(|g| eval_str_formula(g, values)),
        StrFormula::Atom(a) => eval_str_atom(a, values),
    }
}

fn as_str(values: &[Value], v: Var) -> &str {
    match &values[v] {
        Value::Str(s) => s,
        Value::Int(_) => panic!("variable {v} is not a string"),
    }
}

fn as_int(values: &[Value], v: Var) -> &BigUint {
    match &values[v] {
        Value::Int(n) => n,
        Value::Str(_) => panic!("variable {v} is not an integer"),
    }
}

pub fn eval_str_atom(a: &StrAtom, values: &[Value]) -> bool {
    match a {
        StrAtom::InRe { s, regex } => regex.is_match(as_str(values, *s)),
        StrAtom::StrEq { s, t, negated } => (as_str(values, *s) == as_str(values, *t)) != *negated,
        StrAtom::Len { s, x } => BigUint::from(as_str(values, *s).len()) == *as_int(values, *x),
        StrAtom::StrNum { s, x } => string_numeral(as_str(values, *s)) == *as_int(values, *x),
        StrAtom::Int(g) => {
            let ints: Vec<BigUint> = values
                .iter()
                .map(|v| match v {
                    Value::Int(n) => n.clone(),
                    Value::Str(_) => BigUint::zero(),
                })
                .collect();
            eval_formula(g, &ints)
        }
    }
}
