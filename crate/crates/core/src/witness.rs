//! Concrete accepting runs and models from certificates.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::abstraction::{Bounds, Ell};
use crate::certificate::{find_loop, replay, Certificate, LoopSearch, LOOP_BUDGET};
use crate::encoding::Word;
use crate::lavass::{Config, Lavass};
use crate::translate::Conjunct;

/// Longest run extraction will build.
pub const RUN_CAP: usize = 1 << 17;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("pumped run would exceed {RUN_CAP} steps")]
    TooLong,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub transitions: Vec<usize>,
    pub configs: Vec<Config>,
    pub word: Word,
}

fn inconsistent<T>(msg: impl Into<String>) -> Result<T, WitnessError> {
    Err(WitnessError::Inconsistent(msg.into()))
}

/// Replays the certificate and pumps the loop at `L(i)` for `i = a … 1`
/// until every pair ends with `x_i = y_i`.
pub fn certificate_to_run(cert: &Certificate, v: &Lavass) -> Result<Run, WitnessError> {
    let d = cert.pairs();
    let bounds = Bounds::new(v.num_states, d);
    let mut word = cert.transitions.clone();
    let mut configs = replay(v, &word);
    for i in (0..d).rev() {
        let Ell::Mod(len) = cert.ell[i] else { continue };
        let fin = &configs.last().unwrap().counters;
        let (m, n) = (&fin[2 * i], &fin[2 * i + 1]);
        if m == n {
            continue;
        }
        if m > n {
            return inconsistent(format!("x{0} exceeds y{0} before pumping", i + 1));
        }
        let (k, r) = (n - m).div_rem(&BigUint::from(len));
        if !r.is_zero() {
            return inconsistent(format!("y{0} − x{0} is not a multiple of ℓ = {len}", i + 1));
        }
        let li = cert.l[i];
        let beta = match find_loop(v, &bounds, &cert.configs[li - 1], len, LOOP_BUDGET) {
            LoopSearch::Found(b) => b,
            _ => return inconsistent(format!("loop at L({}) not re-derivable", i + 1)),
        };
        let k = k.to_usize().filter(|&k| word.len() + k * beta.len() <= RUN_CAP).ok_or(WitnessError::TooLong)?;
        let later: Vec<BigUint> = fin[2 * (i + 1)..].to_vec();
        let pumped: Vec<usize> = beta.iter().cycle().take(k * beta.len()).copied().collect();
        word.splice(li - 1..li - 1, pumped);
        configs = replay(v, &word);
        let fin = &configs.last().unwrap().counters;
        if fin[2 * i] != fin[2 * i + 1] {
            return inconsistent(format!("pumping did not equalise pair {}", i + 1));
        }
        let unchanged = (i + 1..d).filter(|&j| cert.x[j] > li).all(|j| fin[2 * j..2 * j + 2] == later[2 * (j - i - 1)..2 * (j - i - 1) + 2]);
        if !unchanged {
            return inconsistent(format!("pumping pair {} changed a later pair", i + 1));
        }
    }
    let last = configs.last().unwrap();
    if !v.is_accepting(last) {
        return inconsistent("pumped run does not end in an accepting configuration");
    }
    let cols = word.iter().map(|&t| v.transitions[t].symbols.first().expect("transitions carry symbols")).collect();
    let w = Word::new(v.arity(), cols);
    Ok(Run { transitions: word, configs, word: w })
}

/// Values of the conjunct's variables read off the run's word, as a full
/// assignment over `nvars` variables.
pub fn run_to_model(run: &Run, conj: &Conjunct, nvars: usize) -> Vec<BigUint> {
    conj.assignment(&run.word, nvars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::eval_msd;
    use crate::certificate::{check_certificate, search, SearchParams, SearchStats, Verdict};
    use crate::formula::{dnf_conjuncts, eval_formula, parse};
    use crate::lavass::{AffineFn, ColumnSet, CounterFormula, Transition};
    use crate::translate::exp2_gadget;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn gadget_certificate_replays_without_pumping() {
        let g = exp2_gadget();
        let mut stats = SearchStats::default();
        let params = SearchParams::default();
        let Verdict::Nonempty(c) = search(&g, &params, &mut stats) else { panic!() };
        let run = certificate_to_run(&c, &g).unwrap();
        assert!(g.accepts(&run.word));
        let vals = eval_msd(&run.word);
        assert_eq!(vals[0], BigUint::from(1u32) << vals[1].to_usize().unwrap());
    }

    /// One pair over one variable: `q0` loops with `(++, ×2)`, then `q0 → q1`
    /// and the `q1` loop both use `(++, ×2+1)`.
    fn pump_machine() -> Lavass {
        let t = |from, to, fx, fy| Transition { from, to, symbols: ColumnSet::full(1), updates: vec![fx, fy] };
        Lavass {
            vars: vec!["z".into()],
            num_states: 2,
            dim: 2,
            init: 0,
            finals: vec![false, true],
            transitions: vec![
                t(0, 0, AffineFn::INC, AffineFn::DBL),
                t(0, 1, AffineFn::INC, AffineFn::DBL1),
                t(1, 1, AffineFn::INC, AffineFn::DBL1),
            ],
            phi: CounterFormula::pairs_equal(1),
        }
    }

    #[test]
    fn pumping_raises_x_to_y() {
        let v = pump_machine();
        let b = Bounds::new(2, 1);
        // t0 t1 t2 t2: x = 4, y = 7 at the end; ℓ = 1 loop at position 2
        let transitions = vec![0, 1, 2, 2];
        let ell = vec![Ell::Mod(1)];
        let mut configs = vec![crate::abstraction::AbsConfig::initial(0, &ell)];
        for &t in &transitions {
            let next = b.abstract_step(configs.last().unwrap(), &v.transitions[t]).unwrap();
            configs.push(next);
        }
        let c = Certificate { ell, configs, transitions, x: vec![2], y: vec![3], l: vec![2] };
        let pre = replay(&v, &c.transitions).pop().unwrap().counters;
        assert_eq!(pre, vec![big(4), big(7)]);
        let run = certificate_to_run(&c, &v).unwrap();
        let fin = &run.configs.last().unwrap().counters;
        assert_eq!(fin, &vec![big(7), big(7)]);
        assert_eq!(run.transitions.len(), 7);
        assert!(v.accepts(&run.word));
    }

    #[test]
    fn pumping_with_modulus_two() {
        let v = pump_machine();
        let b = Bounds::new(2, 1);
        let ell = vec![Ell::Mod(2)];
        // t0 t0 t1 t2 t2 ends with x = 5, y = 7; the q0 loop has length 2 in the
        // abstraction, so one insertion closes the gap
        let transitions = vec![0, 0, 1, 2, 2];
        let mut configs = vec![crate::abstraction::AbsConfig::initial(0, &ell)];
        for &t in &transitions {
            configs.push(b.abstract_step(configs.last().unwrap(), &v.transitions[t]).unwrap());
        }
        let c = Certificate { ell, configs, transitions, x: vec![2], y: vec![4], l: vec![2] };
        assert_eq!(check_certificate(&c, &v), Ok(()));
        assert_eq!(replay(&v, &c.transitions).pop().unwrap().counters, vec![big(5), big(7)]);
        let run = certificate_to_run(&c, &v).unwrap();
        assert_eq!(run.configs.last().unwrap().counters, vec![big(7), big(7)]);
        assert_eq!(run.transitions.len(), 7);
    }

    #[test]
    fn equal_pair_needs_no_pumping() {
        let v = pump_machine();
        let b = Bounds::new(2, 1);
        let ell = vec![Ell::Mod(1)];
        let transitions = vec![0, 1, 2];
        let mut configs = vec![crate::abstraction::AbsConfig::initial(0, &ell)];
        for &t in &transitions {
            configs.push(b.abstract_step(configs.last().unwrap(), &v.transitions[t]).unwrap());
        }
        let c = Certificate { ell, configs, transitions, x: vec![2], y: vec![3], l: vec![2] };
        let run = certificate_to_run(&c, &v).unwrap();
        assert_eq!(run.configs.last().unwrap().counters, vec![big(3), big(3)]);
        assert_eq!(run.transitions, c.transitions);
    }

    #[test]
    fn search_then_extract_model() {
        let p = parse("(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= (+ x (* -1 y)) 2))").unwrap();
        let norm = p.normalize();
        let atoms = dnf_conjuncts(&norm.formula).next().unwrap();
        let conj = Conjunct::new(&atoms, &norm.vars);
        let fam = conj.family();
        let v = conj.member_machine(fam.last().unwrap());
        let mut stats = SearchStats::default();
        let Verdict::Nonempty(c) = search(&v, &SearchParams::default(), &mut stats) else { panic!() };
        assert_eq!(check_certificate(&c, &v), Ok(()));
        let run = certificate_to_run(&c, &v).unwrap();
        let model = run_to_model(&run, &conj, norm.vars.len());
        assert!(eval_formula(&norm.formula, &model));
        assert!(eval_formula(&p.formula, &model[..p.vars.len()]));
        assert_eq!((model[0].clone(), model[1].clone()), (big(4), big(2)));
    }
}
