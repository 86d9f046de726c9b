//! End-to-end satisfiability: normalization, DNF, machine family per
//! conjunct, fast path, certificate search and model extraction.

use num_bigint::BigUint;

use crate::certificate::{check_certificate, search, Certificate, SearchParams, SearchStats, Verdict};
use crate::encoding::Word;
use crate::error::InternalError;
use crate::formula::{dnf_conjuncts, eval_formula, Problem};
use crate::lavass::Lavass;
use crate::strings::{decode_string_model, eval_str_formula, sigma_translate, StrProblem, Value};
use crate::translate::Conjunct;
use crate::witness::{certificate_to_run, WitnessError};

#[derive(Debug, Clone, Copy)]
pub struct SolveParams {
    pub search: SearchParams,
    pub fastpath_maxlen: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams { search: SearchParams::default(), fastpath_maxlen: 24 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub states_expanded: u64,
    pub ell_vectors: u64,
    pub disjuncts_tried: u64,
}

/// A nonempty machine together with the evidence found for it.
#[derive(Debug, Clone)]
pub struct Evidence {
    pub word: Word,
    pub machine: Lavass,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Emptiness {
    Nonempty(Evidence),
    /// Every member was shown empty.
    Empty,
    Unknown(String),
}

/// Runs the fast path on every member, then certificate search on each.
pub fn decide_emptiness(family: &[Lavass], params: &SolveParams, stats: &mut SolveStats) -> Result<Emptiness, InternalError> {
    for v in family {
        if let Some(word) = v.bounded_nonempty(params.fastpath_maxlen) {
            return Ok(Emptiness::Nonempty(Evidence { word, machine: v.clone(), certificate: None }));
        }
    }
    let mut unknown = None;
    for v in family {
        let mut s = SearchStats { expanded: stats.states_expanded, ell_vectors: stats.ell_vectors };
        let verdict = search(v, &params.search, &mut s);
        stats.states_expanded = s.expanded;
        stats.ell_vectors = s.ell_vectors;
        match verdict {
            Verdict::Nonempty(cert) => {
                check_certificate(&cert, v).map_err(|f| InternalError::new(format!("search produced a failing certificate: {f}")))?;
                let run = match certificate_to_run(&cert, v) {
                    Ok(run) => run,
                    Err(WitnessError::TooLong) => {
                        unknown.get_or_insert_with(|| "witness run too long to extract".to_string());
                        continue;
                    }
                    Err(WitnessError::Inconsistent(m)) => return Err(InternalError::new(m)),
                };
                return Ok(Emptiness::Nonempty(Evidence { word: run.word, machine: v.clone(), certificate: Some(cert) }));
            }
            Verdict::Empty => {}
            Verdict::Unknown(reason) => {
                unknown.get_or_insert(reason);
            }
        }
    }
    Ok(match unknown {
        Some(r) => Emptiness::Unknown(r),
        None => Emptiness::Empty,
    })
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Outcome {
    /// Values for every variable of the problem, by id.
    Sat { model: Vec<BigUint>, certificate: Option<(Lavass, Certificate)> },
    Unsat,
    Unknown(String),
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub outcome: Outcome,
    pub stats: SolveStats,
}

pub fn solve(problem: &Problem, params: &SolveParams) -> Result<Solution, InternalError> {
    let norm = problem.normalize();
    let nvars = norm.vars.len();
    let mut stats = SolveStats::default();
    let mut unknown = None;
    for atoms in dnf_conjuncts(&norm.formula) {
        stats.disjuncts_tried += 1;
        let conj = Conjunct::new(&atoms, &norm.vars);
        let found = if conj.exps.is_empty() {
            conj.base_dfa(&[]).shortest_word().map(|word| Evidence { word, machine: Lavass::empty(conj.names.clone(), 0), certificate: None })
        } else {
            let family: Vec<Lavass> = conj.family().iter().map(|m| conj.member_machine(m)).collect();
            match decide_emptiness(&family, params, &mut stats)? {
                Emptiness::Nonempty(e) => Some(e),
                Emptiness::Empty => None,
                Emptiness::Unknown(r) => {
                    unknown.get_or_insert(r);
                    None
                }
            }
        };
        let Some(ev) = found else { continue };
        let full = conj.assignment(&ev.word, nvars);
        if !eval_formula(&norm.formula, &full) {
            return Err(InternalError::new("extracted model violates the normalized formula"));
        }
        let model = full[..problem.vars.len()].to_vec();
        if !eval_formula(&problem.formula, &model) {
            return Err(InternalError::new("extracted model violates the input formula"));
        }
        let certificate = ev.certificate.map(|c| (ev.machine, c));
        return Ok(Solution { outcome: Outcome::Sat { model, certificate }, stats });
    }
    let outcome = match unknown {
        Some(r) => Outcome::Unknown(r),
        None => Outcome::Unsat,
    };
    Ok(Solution { outcome, stats })
}

#[derive(Debug, Clone)]
pub enum StrOutcome {
    Sat(Vec<Value>),
    Unsat,
    Unknown(String),
}

/// Solves the translated problem and decodes the model back to strings.
pub fn solve_strings(p: &StrProblem, params: &SolveParams) -> Result<(StrOutcome, Solution), InternalError> {
    let q = sigma_translate(p);
    let sol = solve(&q, params)?;
    let out = match &sol.outcome {
        Outcome::Sat { model, .. } => {
            let vals = decode_string_model(model, p)?;
            if !eval_str_formula(&p.formula, &vals) {
                return Err(InternalError::new("decoded strings violate the string formula"));
            }
            StrOutcome::Sat(vals)
        }
        Outcome::Unsat => StrOutcome::Unsat,
        Outcome::Unknown(r) => StrOutcome::Unknown(r.clone()),
    };
    Ok((out, sol))
}
