mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use semenov::abstraction::{top_monotone, Bounds, Ell};
use semenov::certificate::{check_certificate, Certificate};
use semenov::encoding::{encode_u64, eval_msd, Word};
use semenov::formula::{dnf_conjuncts, eval_formula, parse, Atom, Formula};
use semenov::lavass::{exp2_gadget_named, AffineFn, ColumnSet, Config, CounterFormula, Lavass, Transition};
use semenov::oracle::{brute_force_language, brute_force_sat_pruned, brute_force_strings};
use semenov::regular::Dfa;
use semenov::solver::{solve, solve_strings, Outcome, SolveParams, StrOutcome};
use semenov::strings::{eval_str_formula, parse_strings};
use semenov::translate::{equation_state_bound, equation_to_dfa, system_to_dfa, Conjunct, Rel};
use semenov::witness::certificate_to_run;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exponential gadget language", gadget_language),
        ("equation automata", equation_automata),
        ("intersection law", intersection_law),
        ("abstraction commutes with steps", abstraction_commutes),
        ("sat models evaluate true", sat_soundness),
        ("agreement with brute force", oracle_agreement),
        ("exp2-free differential", presburger_differential),
        ("certificate round trip", certificate_round_trip),
        ("string front end", string_front_end),
        ("known verdicts", known_verdicts),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}; {secs:.2}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:?}, limit {limit:?}", start.elapsed()))
}

fn to_u64s(w: &Word) -> Vec<u64> {
    eval_msd(w).iter().map(|v| v.to_u64().expect("small value")).collect()
}

fn gadget_language() -> Check {
    let start = Instant::now();
    let g = exp2_gadget_named("x", "y");
    let got = brute_force_language(&g, 10).map_err(|e| e.to_string())?;
    let mut want = BTreeSet::new();
    for y in 0..10u64 {
        let w = encode_u64(&[1 << y, y], 0);
        for pad in 0..=10 - w.len() {
            want.insert(w.pad_front(pad));
        }
    }
    ensure(got == want, || format!("{} words accepted, {} expected", got.len(), want.len()))?;
    within(start, Duration::from_secs(10))?;
    Ok(format!("{} words", got.len()))
}

fn equation_automata() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    for case in 0..200 {
        let m = rng.gen_range(1..=2);
        let n = rng.gen_range(1..=3);
        let mut a = Vec::new();
        while a.len() < m {
            let row: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
            if row.iter().any(|&x| x != 0) {
                a.push(row);
            }
        }
        let b: Vec<i64> = (0..m).map(|_| rng.gen_range(-5..=5)).collect();
        let vars = (0..n).map(|i| format!("x{i}")).collect();
        let d = equation_to_dfa(&a, &b, vars);
        let got: BTreeSet<Vec<u64>> = d.enumerate_words(5).iter().map(to_u64s).collect();
        let mut want = BTreeSet::new();
        for idx in 0..32u64.pow(n as u32) {
            let x: Vec<u64> = (0..n).map(|k| idx / 32u64.pow(k as u32) % 32).collect();
            let sat = a.iter().zip(&b).all(|(row, &c)| row.iter().zip(&x).map(|(&r, &v)| r * v as i64).sum::<i64>() == c);
            if sat {
                want.insert(x);
            }
        }
        ensure(got == want, || format!("case {case}: A = {a:?}, b = {b:?}: {got:?} vs {want:?}"))?;
        let bound = equation_state_bound(&a, &b);
        let live = d.coreachable().iter().filter(|&&c| c).count();
        ensure(live as u128 <= bound, || format!("case {case}: {live} live states exceed bound {bound}"))?;
    }
    within(start, Duration::from_secs(60))?;
    Ok("200 systems".into())
}

const PAIR_UPDATES: [[AffineFn; 2]; 4] =
    [[AffineFn::ID, AffineFn::ID], [AffineFn::INC, AffineFn::DBL], [AffineFn::INC, AffineFn::DBL1], [AffineFn::ID, AffineFn::DBL]];

fn random_machine(rng: &mut StdRng) -> Lavass {
    let num_states = rng.gen_range(1..=4);
    let pairs = rng.gen_range(0..=1);
    let transitions = (0..rng.gen_range(1..=7))
        .map(|_| {
            let mut symbols = ColumnSet::empty(1);
            for c in 0..2 {
                if rng.gen_bool(0.6) {
                    symbols.insert(c);
                }
            }
            let updates = if pairs == 1 { PAIR_UPDATES.choose(rng).unwrap().to_vec() } else { Vec::new() };
            Transition { from: rng.gen_range(0..num_states), to: rng.gen_range(0..num_states), symbols, updates }
        })
        .collect();
    Lavass {
        vars: vec!["z".into()],
        num_states,
        dim: 2 * pairs,
        init: 0,
        finals: (0..num_states).map(|_| rng.gen_bool(0.5)).collect(),
        transitions,
        phi: CounterFormula::pairs_equal(pairs),
    }
}

fn intersection_law() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let words: Vec<Word> = (0..=6usize)
        .flat_map(|len| (0..1u32 << len).map(move |bits| Word::new(1, (0..len).rev().map(|k| (bits >> k & 1) as _).collect())))
        .collect();
    let mut accepted = 0;
    for case in 0..100 {
        let (v1, v2) = (random_machine(&mut rng), random_machine(&mut rng));
        let both = v1.intersect(&v2).map_err(|e| e.to_string())?;
        for w in &words {
            let want = v1.accepts(w) && v2.accepts(w);
            ensure(both.accepts(w) == want, || format!("case {case}: word {w:?}"))?;
            accepted += usize::from(want);
        }
    }
    Ok(format!("{} words, {accepted} in both", 100 * words.len()))
}

fn exp_machines() -> Vec<Lavass> {
    let mut out = Vec::new();
    for (_, text, _) in common::CORPUS {
        let norm = parse(text).unwrap().normalize();
        for atoms in dnf_conjuncts(&norm.formula) {
            let conj = Conjunct::new(&atoms, &norm.vars);
            if !conj.exps.is_empty() {
                out.extend(conj.family().iter().map(|m| conj.member_machine(m)));
            }
        }
    }
    out
}

fn abstraction_commutes() -> Check {
    let machines = exp_machines();
    let mut rng = StdRng::seed_from_u64(4);
    let (mut runs, mut steps) = (0, 0);
    while runs < 500 {
        let v = machines.choose(&mut rng).unwrap();
        let d = v.pairs();
        let ell: Vec<Ell> = (0..d).map(|_| if rng.gen_bool(0.25) { Ell::Top } else { Ell::Mod(rng.gen_range(1..=3)) }).collect();
        if !top_monotone(&ell) {
            continue;
        }
        runs += 1;
        let b = Bounds::new(v.num_states, d);
        let out = v.outgoing();
        let mut c = v.initial_config();
        for _ in 0..rng.gen_range(1..=12) {
            let Some(&ti) = out[c.state].choose(&mut rng) else { break };
            let t = &v.transitions[ti];
            let counters = c.counters.iter().zip(&t.updates).map(|(x, f)| f.apply(x)).collect::<Option<Vec<BigUint>>>();
            let Some(counters) = counters else { break };
            let next = Config { state: t.to, counters };
            let (Ok(a), Ok(a2)) = (b.abstract_config(&c, &ell), b.abstract_config(&next, &ell)) else { break };
            if (0..d).any(|i| a.m[i].is_some() && t.updates[2 * i] != AffineFn::INC) {
                break;
            }
            steps += 1;
            let got = b.abstract_step(&a, t);
            ensure(got.as_ref() == Some(&a2), || format!("{a:?} --{ti}--> {got:?}, expected {a2:?}"))?;
            c = next;
        }
    }
    ensure(steps >= 500, || format!("only {steps} steps met the preconditions"))?;
    Ok(format!("{runs} runs over {} machines, {steps} steps checked", machines.len()))
}

fn corpus_outcomes() -> Result<Vec<(&'static str, semenov::formula::Problem, Outcome)>, String> {
    common::CORPUS
        .iter()
        .map(|(name, text, _)| {
            let p = parse(text).map_err(|e| format!("{name}: {e}"))?;
            let sol = solve(&p, &SolveParams::default()).map_err(|e| format!("{name}: {e}"))?;
            Ok((*name, p, sol.outcome))
        })
        .collect()
}

fn sat_soundness() -> Check {
    let outcomes = corpus_outcomes()?;
    let mut sat = 0;
    for (name, p, out) in &outcomes {
        if let Outcome::Sat { model, .. } = out {
            sat += 1;
            ensure(eval_formula(&p.formula, model), || format!("{name}: model {model:?} fails"))?;
        }
    }
    Ok(format!("{sat} sat of {} formulas", outcomes.len()))
}

fn oracle_agreement() -> Check {
    let outcomes = corpus_outcomes()?;
    let mut unknown = 0;
    for (name, p, out) in &outcomes {
        let n = p.vars.len();
        match out {
            Outcome::Sat { .. } => {}
            Outcome::Unsat => {
                let found = brute_force_sat_pruned(&p.formula, n, 1 << 12);
                ensure(found.is_none(), || format!("{name}: unsat but {found:?} satisfies it"))?;
            }
            Outcome::Unknown(_) => {
                unknown += 1;
                let found = brute_force_sat_pruned(&p.formula, n, 1 << 10);
                ensure(found.is_none(), || format!("{name}: unknown but {found:?} satisfies it"))?;
            }
        }
    }
    Ok(format!("{} formulas, {unknown} unknown", outcomes.len()))
}

fn random_linear(rng: &mut StdRng, names: &[&str]) -> String {
    let mut terms = Vec::new();
    for v in names {
        if rng.gen_bool(0.7) {
            terms.push(format!("(* {} {v})", rng.gen_range(-3..=3)));
        }
    }
    let lhs = match terms.len() {
        0 => names[0].to_string(),
        1 => terms[0].clone(),
        _ => format!("(+ {})", terms.join(" ")),
    };
    let c = rng.gen_range(0..=10);
    match rng.gen_range(0..6) {
        0 => format!("(= {lhs} {c})"),
        1 => format!("(<= {lhs} {c})"),
        2 => format!("(< {lhs} {c})"),
        3 => format!("(>= {lhs} {c})"),
        4 => format!("(> {lhs} {c})"),
        _ => format!("(not (= {lhs} {c}))"),
    }
}

const REGULAR_POOL: &[(&str, usize)] = &[
    ("[0]*[1]([0][1])*", 1),
    ("[0]*([1][1])*", 1),
    ("([0]|[1])*[1]", 1),
    ("[0]*[1][0][0]*", 1),
    ("[00]*[11]([00]|[11])*", 2),
    ("[00]*([10]|[01])[00]*", 2),
    ("([00]|[11]|[10])*", 2),
];

fn random_atom(rng: &mut StdRng, names: &[&str]) -> String {
    if rng.gen_bool(0.35) {
        let (re, k) = REGULAR_POOL.choose(rng).unwrap();
        let vs: Vec<&str> = names.choose_multiple(rng, *k).copied().collect();
        if vs.len() == *k {
            return format!("(in-re ({}) \"{re}\")", vs.join(" "));
        }
    }
    random_linear(rng, names)
}

fn random_bool(rng: &mut StdRng, names: &[&str], depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.4) {
        return random_atom(rng, names);
    }
    let parts: Vec<String> = (0..rng.gen_range(2..=3)).map(|_| random_bool(rng, names, depth - 1)).collect();
    format!("({} {})", if rng.gen_bool(0.5) { "and" } else { "or" }, parts.join(" "))
}

/// Automaton for an exp2-free normalized formula over rows `names`.
fn compile(f: &Formula, names: &[String]) -> Dfa {
    let row = |pairs: &[(usize, i64)]| {
        let mut r = vec![0i64; names.len()];
        for &(v, k) in pairs {
            r[v] += k;
        }
        r
    };
    match f {
        Formula::Atom(Atom::Linear(l)) => {
            let pairs: Vec<(usize, i64)> = l.coeffs.iter().map(|(&v, &k)| (v, k)).collect();
            system_to_dfa(&[(row(&pairs), Rel::Eq, l.constant)], names.to_vec())
        }
        Formula::Atom(Atom::NegEq { x, y }) => system_to_dfa(&[(row(&[(*x, 1), (*y, -1)]), Rel::Eq, 0)], names.to_vec()).complement(),
        Formula::Atom(Atom::Regular { vars, dfa }) => {
            let local: Vec<String> = vars.iter().map(|&v| names[v].clone()).collect();
            let d = Dfa::explore(local, dfa.init(), |&q, col| dfa.step(q, col), |&q| dfa.is_accepting(q));
            d.cylindrify(names).expect("atom variables are rows")
        }
        Formula::Atom(a) => panic!("unexpected atom {a:?}"),
        Formula::And(fs) => fs.iter().fold(Dfa::universal(names.to_vec()), |d, g| d.product(&compile(g, names)).unwrap().minimize()),
        Formula::Or(fs) => fs.iter().fold(Dfa::empty(names.to_vec()), |d, g| d.union(&compile(g, names)).unwrap().minimize()),
    }
}

fn presburger_differential() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    let names = ["x", "y", "z"];
    let mut sat = 0;
    for case in 0..100 {
        let n = rng.gen_range(1..=3);
        let decls: String = names[..n].iter().map(|v| format!("(declare-int {v})")).collect();
        let text = format!("{decls}(assert {})", random_bool(&mut rng, &names[..n], 2));
        let p = parse(&text).map_err(|e| format!("case {case}: {e}"))?;
        let norm = p.normalize();
        let rows: Vec<String> = (0..norm.vars.len()).map(|v| format!("v{v}")).collect();
        let empty = compile(&norm.formula, &rows).is_empty();
        let out = solve(&p, &SolveParams::default()).map_err(|e| format!("case {case}: {e}"))?.outcome;
        let ok = match out {
            Outcome::Sat { .. } => !empty,
            Outcome::Unsat => empty,
            Outcome::Unknown(_) => false,
        };
        ensure(ok, || format!("case {case}: {text} solver {out:?}, automaton empty = {empty}"))?;
        sat += usize::from(!empty);
    }
    Ok(format!("100 formulas, {sat} sat"))
}

fn certificate_round_trip() -> Check {
    let params = SolveParams { fastpath_maxlen: 0, ..SolveParams::default() };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut certified = 0;
    for (name, text, _) in common::CORPUS {
        let sol = solve(&parse(text).unwrap(), &params).map_err(|e| format!("{name}: {e}"))?;
        let Outcome::Sat { certificate: Some((v, c)), .. } = sol.outcome else { continue };
        certified += 1;
        check_certificate(&c, &v).map_err(|f| format!("{name}: {f}"))?;
        let run = certificate_to_run(&c, &v).map_err(|e| format!("{name}: {e}"))?;
        ensure(v.is_accepting(run.configs.last().unwrap()) && v.accepts(&run.word), || format!("{name}: run not accepting"))?;
        let v2 = Lavass::parse_text(&v.to_text()).map_err(|e| format!("{name}: {e}"))?;
        let c2 = Certificate::parse_text(&c.to_text()).map_err(|e| format!("{name}: {e}"))?;
        ensure(v2 == v && c2 == c, || format!("{name}: serialization does not round trip"))?;
        let (mpath, cpath) = (dir.path().join(format!("{name}.lavass")), dir.path().join(format!("{name}.cert")));
        std::fs::write(&mpath, v.to_text()).map_err(|e| e.to_string())?;
        std::fs::write(&cpath, c.to_text()).map_err(|e| e.to_string())?;
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_semenov"))
            .arg("check")
            .args([&mpath, &cpath])
            .output()
            .map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.success() && stdout.trim() == "pass", || format!("{name}: check printed {stdout:?}"))?;
    }
    ensure(certified >= 10, || format!("only {certified} certificates produced"))?;
    Ok(format!("{certified} certificates"))
}

const STRING_POOL: &[&str] = &["1(0|1)*", "(0|1)*1", "(01)*", "0*1", "(0|1)*0", "1*0*", "(0|1)*", "0(0|1)*1", "(10)*1", "1(0|1)(0|1)*"];
const BOUNDED_POOL: &[&str] = &["1|10|11|100|101", "(0|1)(0|1)", "0|1|00|01", "1(0|1)", "(01|10)(01|10)", "0*1"];

fn random_string_problem(rng: &mut StdRng, case: usize) -> String {
    if case % 5 == 4 {
        let (r1, r2) = (BOUNDED_POOL.choose(rng).unwrap(), BOUNDED_POOL[..5].choose(rng).unwrap());
        let eq = if rng.gen_bool(0.5) { "(= s t)" } else { "(not (= s t))" };
        let mut text = format!("(declare-str s)(declare-str t)(assert (str.in-re s \"{r1}\"))(assert (str.in-re t \"{r2}\"))(assert {eq})");
        if rng.gen_bool(0.5) {
            text += &format!("(declare-int x)(assert (= (str.len t) x))(assert (>= x {}))", rng.gen_range(0..=4));
        }
        return text;
    }
    let mut text = format!(
        "(declare-str s)(declare-int x)(declare-int n)(assert (str.in-re s \"{}\"))(assert (= (str.len s) x))(assert (<= x 8))",
        STRING_POOL.choose(rng).unwrap()
    );
    if rng.gen_bool(0.4) {
        text += &format!("(assert (str.in-re s \"{}\"))", STRING_POOL.choose(rng).unwrap());
    }
    if rng.gen_bool(0.8) {
        text += "(assert (= (str.to-int s) n))";
        let c = rng.gen_range(0..=300);
        text += &match rng.gen_range(0..4) {
            0 => format!("(assert (= n {c}))"),
            1 => format!("(assert (<= n {c}))"),
            2 => format!("(assert (>= n {c}))"),
            _ => format!("(assert (= n (+ x {})))", rng.gen_range(0..=20)),
        };
    }
    if rng.gen_bool(0.4) {
        text += &format!("(assert (>= x {}))", rng.gen_range(0..=9));
    }
    text
}

fn string_front_end() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(9);
    let mut sat = 0;
    for case in 0..50 {
        let text = random_string_problem(&mut rng, case);
        let p = parse_strings(&text).map_err(|e| format!("case {case}: {e}"))?;
        let oracle = brute_force_strings(&p, 8, 0);
        let (out, _) = solve_strings(&p, &SolveParams::default()).map_err(|e| format!("case {case}: {e}"))?;
        match out {
            StrOutcome::Sat(vals) => {
                ensure(eval_str_formula(&p.formula, &vals), || format!("case {case}: {text}: model {vals:?} fails"))?;
                ensure(oracle.is_some(), || format!("case {case}: {text}: sat {vals:?}, brute force finds none"))?;
                sat += 1;
            }
            StrOutcome::Unsat => ensure(oracle.is_none(), || format!("case {case}: {text}: unsat, brute force finds {oracle:?}"))?,
            StrOutcome::Unknown(r) => return Err(format!("case {case}: {text}: unknown ({r})")),
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("50 formulas, {sat} sat"))
}

const KNOWN: &[(&str, Option<&[u64]>)] = &[
    ("(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x 3))", None),
    ("(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x (+ y 2)))", Some(&[4, 2])),
    ("(declare-int x)(declare-int y)(declare-int z)(declare-int w)(assert (= x (exp2 y)))(assert (= x (* 2 z)))(assert (= x (+ (* 2 w) 1)))", None),
    ("(declare-int x)(assert (in-re (x) \"[0]*[1]([0][1])*\"))(assert (= x 5))", Some(&[5])),
    ("(declare-int x)(assert (in-re (x) \"[0]*[1]([0][1])*\"))(assert (= x 21))", Some(&[21])),
    ("(declare-int x)(assert (in-re (x) \"[0]*[1]([0][1])*\"))(assert (= x 6))", None),
    ("(declare-int x)(declare-int y)(assert (in-re (x) \"[0]*[1]([0][1])*\"))(assert (= x (exp2 y)))", Some(&[1, 0])),
    ("(declare-int x)(declare-int y)(assert (in-re (x) \"[0]*[1]([0][1])*\"))(assert (= x (exp2 y)))(assert (>= x 2))", None),
];

fn known_verdicts() -> Check {
    for (text, want) in KNOWN {
        let out = solve(&parse(text).unwrap(), &SolveParams::default()).map_err(|e| e.to_string())?.outcome;
        let ok = match (&out, want) {
            (Outcome::Sat { model, .. }, Some(vals)) => model.iter().map(|v| v.to_u64().unwrap()).eq(vals.iter().copied()),
            (Outcome::Unsat, None) => true,
            _ => false,
        };
        ensure(ok, || format!("{text}: got {out:?}"))?;
    }
    Ok(format!("{} formulas", KNOWN.len()))
}
