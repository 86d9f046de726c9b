//! Naive exhaustive oracles used for differential testing.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::encoding::Word;
use crate::formula::{eval_atom, eval_formula, Atom, Formula, Sort};
use crate::lavass::Lavass;
use crate::strings::{eval_str_formula, string_numeral, StrAtom, StrFormula, StrProblem, Value};

pub const MAX_LANGUAGE_LEN: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("word length {0} exceeds the oracle limit {MAX_LANGUAGE_LEN}")]
    TooLong(usize),
}

fn box_point(mut idx: u128, nvars: usize, base: u128) -> Vec<BigUint> {
    (0..nvars)
        .map(|_| {
            let d = idx % base;
            idx /= base;
            BigUint::from(d)
        })
        .collect()
}

/// First assignment in the box `[0, bound]^nvars` (ordered by the
/// mixed-radix index, first variable least significant) satisfying `f`.
pub fn brute_force_sat(f: &Formula, nvars: usize, bound: u64) -> Option<Vec<BigUint>> {
    let base = u128::from(bound) + 1;
    let total = base.checked_pow(nvars as u32).expect("search box too large");
    let total = u64::try_from(total).expect("search box too large");
    (0..total)
        .into_par_iter()
        .find_first(|&i| eval_formula(f, &box_point(i.into(), nvars, base)))
        .map(|i| box_point(i.into(), nvars, base))
}

/// Formula tree annotated with the highest variable each atom reads.
enum Partial<'a> {
    Atom(&'a Atom, Option<usize>),
    And(Vec<Partial<'a>>),
    Or(Vec<Partial<'a>>),
}

impl<'a> Partial<'a> {
    fn new(f: &'a Formula) -> Self {
        match f {
            Formula::Atom(a) => {
                let mut vs = Vec::new();
                a.vars(&mut vs);
                Partial::Atom(a, vs.into_iter().max())
            }
            Formula::And(fs) => Partial::And(fs.iter().map(Partial::new).collect()),
            Formula::Or(fs) => Partial::Or(fs.iter().map(Partial::new).collect()),
        }
    }

    /// Truth value once variables `0..assigned` are fixed, if already
    /// determined.
    fn eval(&self, sigma: &[BigUint], assigned: usize) -> Option<bool> {
        match self {
            Partial::Atom(a, top) => top.is_none_or(|t| t < assigned).then(|| eval_atom(a, sigma)),
            Partial::And(fs) => {
                let mut all = true;
                for f in fs {
                    match f.eval(sigma, assigned) {
                        Some(false) => return Some(false),
                        None => all = false,
                        Some(true) => {}
                    }
                }
                all.then_some(true)
            }
            Partial::Or(fs) => {
                let mut none = true;
                for f in fs {
                    match f.eval(sigma, assigned) {
                        Some(true) => return Some(true),
                        None => none = false,
                        Some(false) => {}
                    }
                }
                none.then_some(false)
            }
        }
    }
}

/// Exhaustive over the same box as [`brute_force_sat`], enumerating variables in id order
/// and abandoning a prefix as soon as the atoms it fully determines falsify
/// the formula.
pub fn brute_force_sat_pruned(f: &Formula, nvars: usize, bound: u64) -> Option<Vec<BigUint>> {
    fn go(p: &Partial, sigma: &mut Vec<BigUint>, k: usize, bound: u64) -> bool {
        if k == sigma.len() {
            return p.eval(sigma, k).expect("all variables assigned");
        }
        for val in 0..=bound {
            sigma[k] = BigUint::from(val);
            match p.eval(sigma, k + 1) {
                Some(false) => continue,
                Some(true) => {
                    sigma[k + 1..].iter_mut().for_each(|x| *x = BigUint::default());
                    return true;
                }
                None => {
                    if go(p, sigma, k + 1, bound) {
                        return true;
                    }
                }
            }
        }
        sigma[k] = BigUint::default();
        false
    }
    let p = Partial::new(f);
    let mut sigma = vec![BigUint::default(); nvars];
    if p.eval(&sigma, 0) == Some(true) {
        return Some(sigma);
    }
    go(&p, &mut sigma, 0, bound).then_some(sigma)
}

/// `L(v) ∩ Σ^{≤max_len}` by enumerating every word.
pub fn brute_force_language(v: &Lavass, max_len: usize) -> Result<BTreeSet<Word>, OracleError> {
    if max_len > MAX_LANGUAGE_LEN {
        return Err(OracleError::TooLong(max_len));
    }
    let k = v.arity();
    let radix = 1u64 << k;
    let mut out = BTreeSet::new();
    for len in 0..=max_len {
        let total = radix.checked_pow(len as u32).expect("word space too large");
        let words: Vec<Word> = (0..total)
            .into_par_iter()
            .filter_map(|mut i| {
                let mut cols = vec![0; len];
                for c in cols.iter_mut().rev() {
                    *c = (i % radix) as _;
                    i /= radix;
                }
                let w = Word::new(k, cols);
                v.accepts(&w).then_some(w)
            })
            .collect();
        out.extend(words);
    }
    Ok(out)
}

/// All strings over {0,1} of length at most `max_len`, shortest first.
pub fn all_strings(max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        layer = layer.iter().flat_map(|s| [format!("{s}0"), format!("{s}1")]).collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Searches string values of length at most `max_len` and integer values up
/// to `int_bound`. Integer variables fixed by a top-level length or numeral
/// atom are computed from their string instead of enumerated.
pub fn brute_force_strings(p: &StrProblem, max_len: usize, int_bound: u64) -> Option<Vec<Value>> {
    let mut defined: HashMap<usize, (bool, usize)> = HashMap::new();
    let mut stack = vec![&p.formula];
    while let Some(f) = stack.pop() {
        match f {
            StrFormula::And(fs) => stack.extend(fs),
            StrFormula::Atom(StrAtom::Len { s, x }) => {
                defined.entry(*x).or_insert((true, *s));
            }
            StrFormula::Atom(StrAtom::StrNum { s, x }) => {
                defined.entry(*x).or_insert((false, *s));
            }
            _ => {}
        }
    }
    let n = p.vars.len();
    let strs: Vec<usize> = (0..n).filter(|&v| p.vars.sort(v) == Sort::Str).collect();
    let free: Vec<usize> = (0..n).filter(|&v| p.vars.sort(v) == Sort::Int && !defined.contains_key(&v)).collect();
    let pool = all_strings(max_len);
    let sbase = pool.len() as u128;
    let ibase = u128::from(int_bound) + 1;
    let total = sbase.checked_pow(strs.len() as u32).and_then(|a| a.checked_mul(ibase.checked_pow(free.len() as u32)?));
    let total = u64::try_from(total.expect("search space too large")).expect("search space too large");
    let build = |mut i: u128| {
        let mut vals = vec![Value::Int(BigUint::default()); n];
        for &s in &strs {
            vals[s] = Value::Str(pool[(i % sbase) as usize].clone());
            i /= sbase;
        }
        for &x in &free {
            vals[x] = Value::Int(BigUint::from(i % ibase));
            i /= ibase;
        }
        for (&x, &(is_len, s)) in &defined {
            let Value::Str(text) = &vals[s] else { unreachable!() };
            vals[x] = Value::Int(if is_len { BigUint::from(text.len()) } else { string_numeral(text) });
        }
        vals
    };
    (0..total)
        .into_par_iter()
        .find_first(|&i| eval_str_formula(&p.formula, &build(i.into())))
        .map(|i| build(i.into()))
}
