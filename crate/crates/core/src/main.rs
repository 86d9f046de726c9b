use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use semenov::certificate::{check_certificate, Certificate, SearchParams};
use semenov::formula::{parse, Problem, Sort};
use semenov::lavass::Lavass;
use semenov::oracle::brute_force_sat;
use semenov::solver::{solve, solve_strings, Outcome, SolveParams, SolveStats, StrOutcome};
use semenov::strings::{parse_strings, Value};

const SAT: u8 = 10;
const UNSAT: u8 = 20;
const UNKNOWN: u8 = 30;
const USAGE: u8 = 1;
const INTERNAL: u8 = 2;

#[derive(Parser)]
#[command(version, about = "Satisfiability for existential arithmetic with x = 2^y and regular predicates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a formula file (integer or string constraints).
    Solve(SolveArgs),
    /// Check a certificate against a machine.
    Check { machine: PathBuf, certificate: PathBuf },
    /// Compare the solver with brute force on built-in formulas.
    Selftest,
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long)]
    model: bool,
    #[arg(long)]
    certificate: bool,
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(long, default_value_t = 64)]
    lcap: u64,
    #[arg(long, default_value_t = 10_000)]
    exhaustive_threshold: u64,
    #[arg(long, default_value_t = 24)]
    fastpath_maxlen: usize,
    #[arg(long)]
    json: bool,
    /// Also write `<PREFIX>.lavass` and `<PREFIX>.cert` for `check`.
    #[arg(long, value_name = "PREFIX")]
    write_certificate: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct JsonVerdict {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Vec<JsonBinding>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<JsonCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub stats: JsonStats,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct JsonBinding {
    pub name: String,
    pub sort: String,
    pub value: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct JsonCertificate {
    pub machine: String,
    pub certificate: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
pub struct JsonStats {
    pub states_expanded: u64,
    pub ell_vectors: u64,
    pub disjuncts_tried: u64,
}

impl From<SolveStats> for JsonStats {
    fn from(s: SolveStats) -> Self {
        JsonStats { states_expanded: s.states_expanded, ell_vectors: s.ell_vectors, disjuncts_tried: s.disjuncts_tried }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(match cli.command {
        Command::Solve(args) => run_solve(&args),
        Command::Check { machine, certificate } => run_check(&machine, &certificate),
        Command::Selftest => run_selftest(),
    })
}

fn read(path: &PathBuf) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        USAGE
    })
}

fn run_solve(args: &SolveArgs) -> u8 {
    let text = match read(&args.file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let params = SolveParams {
        search: SearchParams { budget: args.budget, lcap: args.lcap, exhaustive_threshold: args.exhaustive_threshold, ..SearchParams::default() },
        fastpath_maxlen: args.fastpath_maxlen,
    };
    let verdict = if text.contains("declare-str") { solve_string_file(&text, &params) } else { solve_int_file(&text, &params) };
    let mut v = match verdict {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let (Some(prefix), Some(c)) = (&args.write_certificate, &v.certificate) {
        let write = |ext: &str, body: &str| std::fs::write(prefix.with_extension(ext), body);
        if let Err(e) = write("lavass", &c.machine).and_then(|_| write("cert", &c.certificate)) {
            eprintln!("error: cannot write certificate files: {e}");
            return USAGE;
        }
    }
    if !args.model {
        v.model = None;
    }
    if !args.certificate {
        v.certificate = None;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&v).expect("verdict serializes"));
    } else {
        println!("{}", v.status);
        if let Some(r) = &v.reason {
            eprintln!("reason: {r}");
        }
        for b in v.model.iter().flatten() {
            println!("({} {})", b.name, b.value);
        }
        if let Some(c) = &v.certificate {
            print!("{}{}", c.machine, c.certificate);
        }
    }
    match v.status.as_str() {
        "sat" => SAT,
        "unsat" => UNSAT,
        _ => UNKNOWN,
    }
}

fn solve_int_file(text: &str, params: &SolveParams) -> Result<JsonVerdict, u8> {
    let problem = parse(text).map_err(|e| {
        eprintln!("parse error: {e}");
        USAGE
    })?;
    let sol = solve(&problem, params).map_err(|e| {
        eprintln!("{e}");
        INTERNAL
    })?;
    let stats = sol.stats.into();
    Ok(match sol.outcome {
        Outcome::Sat { model, certificate } => JsonVerdict {
            status: "sat".into(),
            model: Some(int_bindings(&problem, &model)),
            certificate: certificate.map(|(v, c)| JsonCertificate { machine: v.to_text(), certificate: c.to_text() }),
            reason: None,
            stats,
        },
        Outcome::Unsat => JsonVerdict { status: "unsat".into(), model: None, certificate: None, reason: None, stats },
        Outcome::Unknown(r) => JsonVerdict { status: "unknown".into(), model: None, certificate: None, reason: Some(r), stats },
    })
}

fn int_bindings(problem: &Problem, model: &[num_bigint::BigUint]) -> Vec<JsonBinding> {
    (0..problem.vars.len())
        .map(|v| JsonBinding { name: problem.vars.name(v).into(), sort: "Int".into(), value: model[v].to_string() })
        .collect()
}

fn solve_string_file(text: &str, params: &SolveParams) -> Result<JsonVerdict, u8> {
    let problem = parse_strings(text).map_err(|e| {
        eprintln!("parse error: {e}");
        USAGE
    })?;
    let (out, sol) = solve_strings(&problem, params).map_err(|e| {
        eprintln!("{e}");
        INTERNAL
    })?;
    let certificate = match &sol.outcome {
        Outcome::Sat { certificate: Some((v, c)), .. } => Some(JsonCertificate { machine: v.to_text(), certificate: c.to_text() }),
        _ => None,
    };
    let stats = sol.stats.into();
    Ok(match out {
        StrOutcome::Sat(values) => {
            let model = values
                .iter()
                .enumerate()
                .map(|(v, val)| JsonBinding {
                    name: problem.vars.name(v).into(),
                    sort: if problem.vars.sort(v) == Sort::Str { "String" } else { "Int" }.into(),
                    value: match val {
                        Value::Str(s) => format!("{s:?}"),
                        Value::Int(n) => n.to_string(),
                    },
                })
                .collect();
            JsonVerdict { status: "sat".into(), model: Some(model), certificate, reason: None, stats }
        }
        StrOutcome::Unsat => JsonVerdict { status: "unsat".into(), model: None, certificate: None, reason: None, stats },
        StrOutcome::Unknown(r) => JsonVerdict { status: "unknown".into(), model: None, certificate: None, reason: Some(r), stats },
    })
}

fn run_check(machine: &PathBuf, certificate: &PathBuf) -> u8 {
    let (mt, ct) = match (read(machine), read(certificate)) {
        (Ok(m), Ok(c)) => (m, c),
        (Err(code), _) | (_, Err(code)) => return code,
    };
    let v = match Lavass::parse_text(&mt) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("machine parse error: {e}");
            return USAGE;
        }
    };
    let c = match Certificate::parse_text(&ct) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("certificate parse error: {e}");
            return USAGE;
        }
    };
    match check_certificate(&c, &v) {
        Ok(()) => {
            println!("pass");
            0
        }
        Err(f) => {
            println!("fail: {} ({})", f.clause, f.detail);
            USAGE
        }
    }
}

const SELFTEST: &[&str] = &[
    "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= (+ x (* -1 y)) 2))",
    "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x 3))",
    "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= (+ y 5) x))",
    "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (<= 5 x))(assert (<= x 7))",
    "(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= z (exp2 x)))(assert (<= z 16))(assert (>= y 1))",
    "(declare-int x)(declare-int y)(assert (in-re (x y) \"[10][01]*\"))(assert (= x (exp2 y)))",
    "(declare-int x)(assert (or (= (* 2 x) 7) (= (* 3 x) 9)))",
    "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (not (= x 1)))(assert (<= x 2))",
];

fn run_selftest() -> u8 {
    let mut failures = 0;
    for (i, text) in SELFTEST.iter().enumerate() {
        let problem = parse(text).expect("built-in formula parses");
        let n = problem.vars.len();
        let oracle = brute_force_sat(&problem.formula, n, 24);
        let verdict = match solve(&problem, &SolveParams::default()) {
            Ok(sol) => sol.outcome,
            Err(e) => {
                println!("case {i}: FAIL ({e})");
                failures += 1;
                continue;
            }
        };
        let ok = match (&verdict, &oracle) {
            (Outcome::Sat { .. }, _) => true,
            (Outcome::Unsat, found) => found.is_none(),
            (Outcome::Unknown(_), _) => true,
        };
        let label = match verdict {
            Outcome::Sat { .. } => "sat",
            Outcome::Unsat => "unsat",
            Outcome::Unknown(_) => "unknown",
        };
        println!("case {i}: {label}, oracle {} -> {}", if oracle.is_some() { "model" } else { "none" }, if ok { "ok" } else { "FAIL" });
        failures += usize::from(!ok);
    }
    if failures == 0 {
        0
    } else {
        INTERNAL
    }
}
