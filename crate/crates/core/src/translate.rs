//! Compiling conjuncts of core atoms into restricted laVASS.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};

use crate::encoding::{column_bit, eval_msd, Column, Word};
use crate::formula::{Atom, LinearEq, Var, VarTable};
use crate::lavass::{exp2_gadget_named, Lavass};
use crate::regular::Dfa;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Eq,
    Le,
    Ge,
}

/// `A·x = b` over `vars`, msd first.
pub fn equation_to_dfa(a: &[Vec<i64>], b: &[i64], vars: Vec<String>) -> Dfa {
    assert_eq!(a.len(), b.len());
    let rows: Vec<(Vec<i64>, Rel, i64)> = a.iter().zip(b).map(|(r, &c)| (r.clone(), Rel::Eq, c)).collect();
    system_to_dfa(&rows, vars)
}

/// Conjunction of rows `a·x rel b`, built one row at a time and minimized
/// after every product.
pub fn system_to_dfa(rows: &[(Vec<i64>, Rel, i64)], vars: Vec<String>) -> Dfa {
    let mut d = Dfa::universal(vars.clone());
    let mut order: Vec<&(Vec<i64>, Rel, i64)> = rows.iter().collect();
    order.sort_by_key(|(r, _, _)| r.iter().filter(|&&a| a != 0).count());
    for (row, rel, b) in order {
        d = d.product(&row_dfa(row, *rel, *b, vars.clone())).expect("same row order").minimize();
        if d.is_empty() {
            break;
        }
    }
    d
}

/// One row. A state is the partial sum `a·⟦prefix⟧`; once it leaves
/// `[-B, B]` it moves monotonically away, so it is clamped to `±(B+1)`.
fn row_dfa(row: &[i64], rel: Rel, b: i64, vars: Vec<String>) -> Dfa {
    let bound = divergence_bound(&[row.to_vec()], &[b]);
    let row = row.to_vec();
    Dfa::explore(
        vars,
        0i64,
        move |&s: &i64, col: Column| {
            if s.abs() > bound {
                return s;
            }
            let v = 2 * s + row.iter().enumerate().filter(|&(k, _)| column_bit(col, k)).map(|(_, &a)| a).sum::<i64>();
            v.clamp(-bound - 1, bound + 1)
        },
        move |&s| match rel {
            Rel::Eq => s == b,
            Rel::Le => s <= b,
            Rel::Ge => s >= b,
        },
    )
    .minimize()
}

/// `max(‖A‖_{1,∞}, ‖b‖_∞)`
pub fn divergence_bound(a: &[Vec<i64>], b: &[i64]) -> i64 {
    let row_norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<i64>()).max().unwrap_or(0);
    let b_norm = b.iter().map(|x| x.abs()).max().unwrap_or(0);
    row_norm.max(b_norm)
}

/// `2^m · max(‖A‖_{1,∞}, ‖b‖_∞)^m`, saturating.
pub fn equation_state_bound(a: &[Vec<i64>], b: &[i64]) -> u128 {
    let m = a.len() as u32;
    let base = 2u128.saturating_mul(divergence_bound(a, b) as u128);
    base.checked_pow(m).unwrap_or(u128::MAX)
}

pub fn exp2_gadget() -> Lavass {
    exp2_gadget_named("x", "y")
}

/// A conjunct of core atoms after presolving. `vars` lists the variables
/// that remain rows of the automata built for it, in declaration order.
#[derive(Debug, Clone)]
pub struct Conjunct {
    pub vars: Vec<Var>,
    pub names: Vec<String>,
    pub linear: Vec<(LinearEq, Rel)>,
    /// `(x, y)` with `x = 2^y`, in atom order
    pub exps: Vec<(Var, Var)>,
    pub regular: Vec<(Vec<Var>, Arc<Dfa>)>,
    /// Variables removed by presolving, in elimination order.
    pub eliminated: Vec<(Var, Derived)>,
    /// Contains an atom with no solutions (e.g. `v = 2^v`).
    pub trivially_false: bool,
}

/// How an eliminated variable's value is recovered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Derived {
    Const(u64),
    Copy(Var),
    /// `coef·v = row.constant − Σ row.coeffs·x`
    Slack { row: LinearEq, coef: i64 },
}

struct Presolve {
    eqs: Vec<LinearEq>,
    exps: Vec<(Var, Var)>,
    pinned: BTreeSet<Var>,
    fixed: BTreeMap<Var, u64>,
    eliminated: Vec<(Var, Derived)>,
}

struct Infeasible;

impl Presolve {
    fn fix(&mut self, v: Var, val: u64) -> Result<(), Infeasible> {
        match self.fixed.insert(v, val) {
            Some(old) if old != val => Err(Infeasible),
            _ => Ok(()),
        }
    }

    fn substitute_fixed(&mut self) -> Result<(), Infeasible> {
        for eq in &mut self.eqs {
            let hits: Vec<(Var, i64)> = eq.coeffs.iter().filter(|(v, _)| self.fixed.contains_key(v)).map(|(&v, &a)| (v, a)).collect();
            for (v, a) in hits {
                let shift = i64::try_from(self.fixed[&v]).ok().and_then(|val| a.checked_mul(val));
                if let Some(c) = shift.and_then(|sh| eq.constant.checked_sub(sh)) {
                    eq.constant = c;
                    eq.coeffs.remove(&v);
                }
            }
        }
        let mut keep = Vec::new();
        for eq in std::mem::take(&mut self.eqs) {
            match eq.coeffs.len() {
                0 if eq.constant != 0 => return Err(Infeasible),
                0 => {}
                1 => {
                    let (&v, &a) = eq.coeffs.iter().next().unwrap();
                    if eq.constant % a != 0 || eq.constant / a < 0 {
                        return Err(Infeasible);
                    }
                    self.fix(v, (eq.constant / a) as u64)?;
                }
                _ => keep.push(eq),
            }
        }
        self.eqs = keep;
        Ok(())
    }

    fn settle_exps(&mut self) -> Result<bool, Infeasible> {
        let mut changed = false;
        let mut keep = Vec::new();
        for (x, y) in std::mem::take(&mut self.exps) {
            if x == y {
                return Err(Infeasible);
            }
            match (self.fixed.get(&x).copied(), self.fixed.get(&y).copied()) {
                (_, Some(e)) if e < 63 => {
                    self.fix(x, 1 << e)?;
                    changed = true;
                }
                (Some(p), _) => {
                    if !p.is_power_of_two() {
                        return Err(Infeasible);
                    }
                    self.fix(y, u64::from(p.trailing_zeros()))?;
                    changed = true;
                }
                _ => keep.push((x, y)),
            }
        }
        self.exps = keep;
        Ok(changed)
    }

    /// Merges one `v = w` equation, keeping a pinned variable as the
    /// representative.
    fn merge_copy(&mut self) -> bool {
        let found = self.eqs.iter().position(|eq| {
            eq.constant == 0 && eq.coeffs.len() == 2 && {
                let a: Vec<i64> = eq.coeffs.values().copied().collect();
                a[0] == -a[1] && eq.coeffs.keys().any(|v| !self.pinned.contains(v))
            }
        });
        let Some(i) = found else { return false };
        let eq = self.eqs.remove(i);
        let vs: Vec<Var> = eq.coeffs.keys().copied().collect();
        let (gone, keep) = if self.pinned.contains(&vs[1]) { (vs[0], vs[1]) } else { (vs[1], vs[0]) };
        for eq in &mut self.eqs {
            if let Some(a) = eq.coeffs.remove(&gone) {
                *eq = LinearEq::new(eq.coeffs.iter().map(|(&v, &b)| (v, b)).chain([(keep, a)]), eq.constant);
            }
        }
        for (x, y) in &mut self.exps {
            for v in [x, y] {
                if *v == gone {
                    *v = keep;
                }
            }
        }
        if let Some(val) = self.fixed.remove(&gone) {
            self.fixed.insert(keep, val);
        }
        self.eliminated.push((gone, Derived::Copy(keep)));
        true
    }

    fn run(&mut self) -> Result<(), Infeasible> {
        loop {
            self.substitute_fixed()?;
            if self.settle_exps()? || self.merge_copy() {
                continue;
            }
            if self.eqs.iter().any(|eq| eq.coeffs.keys().any(|v| self.fixed.contains_key(v))) {
                continue;
            }
            return Ok(());
        }
    }
}

impl Conjunct {
    pub fn new(atoms: &[Atom], table: &VarTable) -> Conjunct {
        let mut ps = Presolve { eqs: Vec::new(), exps: Vec::new(), pinned: BTreeSet::new(), fixed: BTreeMap::new(), eliminated: Vec::new() };
        let mut regular = Vec::new();
        let mut all = Vec::new();
        for a in atoms {
            a.vars(&mut all);
            match a {
                Atom::Linear(l) => ps.eqs.push(l.clone()),
                Atom::Exp2 { x, y } => {
                    if !ps.exps.contains(&(*x, *y)) {
                        ps.exps.push((*x, *y));
                    }
                }
                Atom::Regular { vars, dfa } => {
                    ps.pinned.extend(vars.iter().copied());
                    regular.push((vars.clone(), dfa.clone()));
                }
                other => panic!("conjunct atom must be normalized, got {other:?}"),
            }
        }
        all.sort_unstable();
        all.dedup();
        let feasible = ps.run().is_ok();
        let mut linear: Vec<(LinearEq, Rel)> = Vec::new();
        let mut eliminated = ps.eliminated;
        if feasible {
            for (&v, &val) in &ps.fixed {
                if ps.pinned.contains(&v) {
                    linear.push((LinearEq::new([(v, 1)], val as i64), Rel::Eq));
                } else {
                    eliminated.push((v, Derived::Const(val)));
                }
            }
            let mut uses: BTreeMap<Var, usize> = BTreeMap::new();
            for eq in &ps.eqs {
                for &v in eq.coeffs.keys() {
                    *uses.entry(v).or_default() += 1;
                }
            }
            for &(x, y) in &ps.exps {
                *uses.entry(x).or_default() += 1;
                *uses.entry(y).or_default() += 1;
            }
            for eq in ps.eqs {
                let slack = eq.coeffs.iter().rev().find(|&(v, a)| a.abs() == 1 && uses[v] == 1 && !ps.pinned.contains(v)).map(|(&v, &a)| (v, a));
                let Some((v, a)) = slack else {
                    linear.push((eq, Rel::Eq));
                    continue;
                };
                let rest = LinearEq::new(eq.coeffs.iter().filter(|(&w, _)| w != v).map(|(&w, &b)| (w, b)), eq.constant);
                eliminated.push((v, Derived::Slack { row: rest.clone(), coef: a }));
                linear.push((rest, if a == 1 { Rel::Le } else { Rel::Ge }));
            }
        }
        let mut vars: Vec<Var> = Vec::new();
        for (eq, _) in &linear {
            vars.extend(eq.coeffs.keys());
        }
        for &(x, y) in &ps.exps {
            vars.extend([x, y]);
        }
        for (vs, _) in &regular {
            vars.extend(vs);
        }
        vars.sort_unstable();
        vars.dedup();
        if !feasible {
            vars = all;
            eliminated.clear();
        }
        let names = vars.iter().map(|&v| table.name(v).to_string()).collect();
        let exps = if feasible { ps.exps } else { Vec::new() };
        Conjunct { vars, names, linear, exps, regular, eliminated, trivially_false: !feasible }
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    fn row(&self, v: Var) -> usize {
        self.vars.iter().position(|&w| w == v).expect("variable belongs to the conjunct")
    }

    /// The rows `a·x rel b` over the conjunct's variables.
    pub fn system(&self) -> Vec<(Vec<i64>, Rel, i64)> {
        self.linear
            .iter()
            .map(|(l, rel)| {
                let mut row = vec![0i64; self.arity()];
                for (&v, &k) in &l.coeffs {
                    row[self.row(v)] += k;
                }
                (row, *rel, l.constant)
            })
            .collect()
    }

    /// Product of the linear rows and the regular atoms, plus `extra`
    /// automata already over the conjunct's rows.
    pub fn base_dfa(&self, extra: &[Dfa]) -> Dfa {
        if self.trivially_false {
            return Dfa::empty(self.names.clone());
        }
        let mut d = system_to_dfa(&self.system(), self.names.clone());
        for (vs, r) in &self.regular {
            let lifted = relabel(r, vs, self).cylindrify(&self.names).expect("regular atom variables are in the conjunct");
            d = d.product(&lifted).expect("same row order").minimize();
        }
        for e in extra {
            d = d.product(e).expect("same row order").minimize();
        }
        d
    }

    /// Full assignment over `nvars` variables: rows read off the word, then
    /// eliminated variables recovered in reverse elimination order.
    pub fn assignment(&self, w: &Word, nvars: usize) -> Vec<BigUint> {
        let vals = eval_msd(w);
        let mut out = vec![BigUint::default(); nvars];
        for (row, &v) in self.vars.iter().enumerate() {
            out[v] = vals[row].clone();
        }
        for (v, how) in self.eliminated.iter().rev() {
            out[*v] = match how {
                Derived::Const(c) => BigUint::from(*c),
                Derived::Copy(w) => out[*w].clone(),
                Derived::Slack { row, coef } => {
                    let sum: BigInt = row.coeffs.iter().map(|(&x, &a)| BigInt::from(a) * BigInt::from(out[x].clone())).sum();
                    let val = (BigInt::from(row.constant) - sum) * coef;
                    val.to_biguint().expect("slack of a satisfied row is nonnegative")
                }
            };
        }
        out
    }

    /// `x = 1 ∧ y = 0` for the forced-zero atoms.
    fn forced_zero_dfa(&self, forced: &[usize]) -> Dfa {
        let rows: Vec<(usize, usize)> = forced.iter().map(|&i| (self.row(self.exps[i].0), self.row(self.exps[i].1))).collect();
        Dfa::explore(
            self.names.clone(),
            Some(false),
            move |s: &Option<bool>, col: Column| {
                let seen_one = (*s)?;
                let mut one_now = None;
                for &(xr, yr) in &rows {
                    if column_bit(col, yr) {
                        return None;
                    }
                    let bit = column_bit(col, xr);
                    match one_now {
                        None => one_now = Some(bit),
                        Some(b) if b != bit => return None,
                        _ => {}
                    }
                }
                if seen_one {
                    return None;
                }
                Some(one_now.unwrap_or(false))
            },
            |s| *s == Some(true),
        )
        .minimize()
    }

    /// `y_{o1} ≥ y_{o2} ≥ … ≥ y_{ok} ≥ 1` on the exponents of the active atoms.
    fn ordering_dfa(&self, order: &[usize]) -> Dfa {
        let ys: Vec<usize> = order.iter().map(|&i| self.row(self.exps[i].1)).collect();
        let k = ys.len();
        // per adjacent pair: 0 = equal so far, 1 = strictly greater; plus
        // whether the last exponent has seen a 1
        Dfa::explore(
            self.names.clone(),
            Some((vec![0u8; k.saturating_sub(1)], false)),
            move |s: &Option<(Vec<u8>, bool)>, col: Column| {
                let (cmp, nonzero) = s.as_ref()?;
                let mut next = cmp.clone();
                for j in 0..k.saturating_sub(1) {
                    if next[j] == 0 {
                        match (column_bit(col, ys[j]), column_bit(col, ys[j + 1])) {
                            (true, false) => next[j] = 1,
                            (false, true) => return None,
                            _ => {}
                        }
                    }
                }
                let nz = *nonzero || (k > 0 && column_bit(col, ys[k - 1]));
                Some((next, nz))
            },
            move |s| s.as_ref().is_some_and(|(_, nz)| k == 0 || *nz),
        )
        .minimize()
    }

    /// Machine whose pairs are the `order`ed exp atoms; atoms in `forced`
    /// are pinned to `x = 1, y = 0` and contribute no counters.
    pub fn member_machine(&self, member: &FamilyMember) -> Lavass {
        let mut extra = Vec::new();
        if !member.forced_zero.is_empty() {
            extra.push(self.forced_zero_dfa(&member.forced_zero));
        }
        if !member.order.is_empty() {
            extra.push(self.ordering_dfa(&member.order));
        }
        let dfa = self.base_dfa(&extra);
        self.attach_gadgets(&dfa, &member.order)
    }

    /// All exp atoms as pairs, in atom order, with no ordering constraints.
    pub fn machine(&self) -> Lavass {
        let dfa = self.base_dfa(&[]);
        let all: Vec<usize> = (0..self.exps.len()).collect();
        self.attach_gadgets(&dfa, &all)
    }

    fn attach_gadgets(&self, dfa: &Dfa, order: &[usize]) -> Lavass {
        let dim = 2 * order.len();
        if self.trivially_false || dfa.is_empty() {
            return Lavass::empty(self.names.clone(), dim);
        }
        let mut m = Lavass::from_dfa(dfa);
        for &i in order {
            let (x, y) = self.exps[i];
            let g = exp2_gadget_named(&self.names[self.row(x)], &self.names[self.row(y)])
                .cylindrify(&self.names)
                .expect("gadget variables are in the conjunct");
            m = m.intersect(&g).expect("same row order").trim();
        }
        let mut m = m.trim();
        m.phi = crate::lavass::CounterFormula::pairs_equal(order.len());
        m
    }

    /// The activation and ordering family, fewest active pairs first.
    pub fn family(&self) -> Vec<FamilyMember> {
        let d = self.exps.len();
        let mut out = Vec::new();
        for active in 0..=d {
            let mut subsets: Vec<Vec<usize>> = Vec::new();
            for mask in 0u32..(1 << d) {
                if mask.count_ones() as usize == d - active {
                    subsets.push((0..d).filter(|i| mask >> i & 1 == 1).collect());
                }
            }
            subsets.sort();
            for forced in subsets {
                let act: Vec<usize> = (0..d).filter(|i| !forced.contains(i)).collect();
                for order in permutations(&act) {
                    out.push(FamilyMember { forced_zero: forced.clone(), order });
                }
            }
        }
        out
    }
}

/// Renames a regular atom's DFA rows to the conjunct's names.
fn relabel(d: &Dfa, vs: &[Var], c: &Conjunct) -> Dfa {
    let names: Vec<String> = vs.iter().map(|&v| c.names[c.row(v)].clone()).collect();
    if d.vars() == names.as_slice() {
        return d.clone();
    }
    Dfa::explore(names, d.init(), |&q, col| d.step(q, col), |&q| d.is_accepting(q))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyMember {
    pub forced_zero: Vec<usize>,
    pub order: Vec<usize>,
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::encode_u64;
    use crate::formula::{dnf_conjuncts, parse};
    use std::collections::BTreeSet;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn solutions(d: &Dfa, max_len: usize) -> BTreeSet<Vec<u64>> {
        d.enumerate_words(max_len)
            .iter()
            .map(|w| eval_msd(w).iter().map(|v| v.try_into().unwrap()).collect())
            .collect()
    }

    #[test]
    fn diagonal() {
        let d = equation_to_dfa(&[vec![1, -1]], &[0], names(&["x", "y"]));
        for w in d.enumerate_words(4) {
            let v = eval_msd(&w);
            assert_eq!(v[0], v[1]);
        }
        assert!(d.accepts(&encode_u64(&[13, 13], 0)));
        assert!(!d.accepts(&encode_u64(&[13, 12], 0)));
    }

    #[test]
    fn halving() {
        let d = equation_to_dfa(&[vec![1, -2]], &[0], names(&["x", "y"]));
        let expect: BTreeSet<Vec<u64>> = (0..16).map(|y| vec![2 * y, y]).collect();
        assert_eq!(solutions(&d, 5), expect);
    }

    #[test]
    fn finite_solution_set() {
        let d = equation_to_dfa(&[vec![1, 1]], &[3], names(&["x", "y"]));
        let expect: BTreeSet<Vec<u64>> = [[0, 3], [1, 2], [2, 1], [3, 0]].iter().map(|p| p.to_vec()).collect();
        assert_eq!(solutions(&d, 6), expect);
    }

    #[test]
    fn state_bound_holds_on_examples() {
        for (a, b) in [(vec![vec![1, -1]], vec![0]), (vec![vec![1, -2]], vec![0]), (vec![vec![1, 1]], vec![3])] {
            let d = equation_to_dfa(&a, &b, names(&["x", "y"]));
            let live = d.coreachable().iter().filter(|&&c| c).count();
            assert!(live as u128 <= equation_state_bound(&a, &b));
        }
    }

    #[test]
    fn gadget_language() {
        let g = exp2_gadget();
        assert!(g.accepts(&encode_u64(&[32, 5], 0)));
        assert!(g.accepts(&Word::parse("[10]", 2).unwrap()));
        assert!(g.is_restricted());
    }

    fn conjunct(text: &str) -> (crate::formula::Problem, Conjunct) {
        let p = parse(text).unwrap().normalize();
        let atoms = dnf_conjuncts(&p.formula).next().unwrap();
        let c = Conjunct::new(&atoms, &p.vars);
        (p, c)
    }

    #[test]
    fn single_exp_is_the_gadget() {
        let (_, c) = conjunct("(declare-int x)(declare-int y)(assert (= x (exp2 y)))");
        let m = c.machine();
        assert_eq!(m.dim, 2);
        for w in crate::regular::Dfa::universal(names(&["x", "y"])).enumerate_words(5) {
            assert_eq!(m.accepts(&w), exp2_gadget().accepts(&w), "{w}");
        }
    }

    #[test]
    fn exp_with_linear() {
        let (_, c) = conjunct("(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= (+ x (* -1 y)) 2))");
        let m = c.machine();
        assert!(m.is_restricted());
        assert!(m.accepts(&encode_u64(&[4, 2], 0)));
        let found = m.bounded_nonempty(5).unwrap();
        assert_eq!(eval_msd(&found), vec![BigUint::from(4u32), BigUint::from(2u32)]);
        let (_, c) = conjunct("(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x 3))");
        assert!(c.machine().bounded_nonempty(8).is_none());
    }

    #[test]
    fn self_exponent_is_false() {
        let (_, c) = conjunct("(declare-int v)(assert (= v (exp2 v)))");
        assert!(c.trivially_false);
        assert!(c.machine().control_empty());
    }

    #[test]
    fn family_sizes() {
        let (_, c) = conjunct("(declare-int x)(declare-int y)(assert (= x 1))");
        assert_eq!(c.family().len(), 1);
        let (_, c) = conjunct("(declare-int x)(declare-int y)(assert (= x (exp2 y)))");
        let f = c.family();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0], FamilyMember { forced_zero: vec![0], order: vec![] });
        let (_, c) = conjunct(
            "(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= y (exp2 z)))",
        );
        let f = c.family();
        assert_eq!(f.len(), 5);
        assert_eq!(f.iter().filter(|m| m.order.len() == 2).count(), 2);
    }

    #[test]
    fn members_partition_solutions() {
        let (_, c) = conjunct("(declare-int x)(declare-int y)(assert (= x (exp2 y)))");
        let zero = c.member_machine(&c.family()[0]);
        let active = c.member_machine(&c.family()[1]);
        assert_eq!(zero.dim, 0);
        assert!(zero.accepts(&encode_u64(&[1, 0], 0)));
        assert!(!zero.accepts(&encode_u64(&[2, 1], 0)));
        assert!(!zero.accepts(&encode_u64(&[2, 0], 0)));
        assert!(!active.accepts(&encode_u64(&[1, 0], 0)));
        assert!(active.accepts(&encode_u64(&[2, 1], 0)));
        assert!(active.accepts(&encode_u64(&[64, 6], 3)));
    }

    #[test]
    fn ordering_member() {
        let (_, c) = conjunct(
            "(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= y (exp2 z)))",
        );
        // x = 16, y = 4, z = 2: exponents y=4 ≥ z=2
        let w = encode_u64(&[16, 4, 2], 0);
        let fam = c.family();
        let accepting: Vec<&FamilyMember> = fam.iter().filter(|m| c.member_machine(m).accepts(&w)).collect();
        assert_eq!(accepting, vec![&FamilyMember { forced_zero: vec![], order: vec![0, 1] }]);
        for m in &fam {
            assert!(c.member_machine(m).is_restricted());
        }
    }

    #[test]
    fn presolve_folds_constants_into_exponentials() {
        let (p, c) = conjunct("(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= y 3))(assert (= z (+ x 1)))");
        assert!(c.exps.is_empty());
        assert!(c.vars.is_empty());
        let w = c.base_dfa(&[]).shortest_word().unwrap();
        let m = c.assignment(&w, p.vars.len());
        assert_eq!(&m[..3], &[BigUint::from(8u32), BigUint::from(3u32), BigUint::from(9u32)]);
        let (_, c) = conjunct("(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x 12))");
        assert!(c.trivially_false);
    }

    #[test]
    fn presolve_projects_slacks_and_copies() {
        let (p, c) = conjunct("(declare-int x)(declare-int y)(declare-int z)(assert (<= x 5))(assert (= y z))(assert (>= (+ x y) 7))");
        assert_eq!(c.names, names(&["x", "y"]));
        assert!(c.linear.iter().all(|(_, rel)| *rel != Rel::Eq));
        let d = c.base_dfa(&[]);
        for w in d.enumerate_words(4) {
            let m = c.assignment(&w, p.vars.len());
            assert!(crate::formula::eval_formula(&p.formula, &m), "{w}");
            assert_eq!(m[1], m[2]);
        }
        assert!(d.accepts(&encode_u64(&[5, 2], 0)));
        assert!(!d.accepts(&encode_u64(&[6, 2], 0)));
        assert!(!d.accepts(&encode_u64(&[4, 2], 0)));
    }

    #[test]
    fn inequality_rows() {
        let le = system_to_dfa(&[(vec![1, -2], Rel::Le, 3)], names(&["x", "y"]));
        let ge = system_to_dfa(&[(vec![1, -2], Rel::Ge, 3)], names(&["x", "y"]));
        for x in 0..20u64 {
            for y in 0..10u64 {
                let w = encode_u64(&[x, y], 0);
                let lhs = x as i64 - 2 * y as i64;
                assert_eq!(le.accepts(&w), lhs <= 3, "{x} {y}");
                assert_eq!(ge.accepts(&w), lhs >= 3, "{x} {y}");
            }
        }
    }
}
