//! Finite abstraction of restricted laVASS configurations.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::lavass::{AffineFn, Config, Transition};

/// Saturation point for stored differences when `U_i` is larger still.
/// Once positive, a difference never shrinks (`2u−1 ≥ u`), so any cap above
/// every constraint offset is indistinguishable from `U_i`.
pub const DIFF_CAP: u64 = 1 << 62;

/// Exact `M_i = ⌊|Q|^((1/8)·32^(i−1) + 1)⌋`, `i ≥ 1`.
pub fn exact_m(q: u64, i: usize) -> BigUint {
    assert!(i >= 1);
    let q = BigUint::from(q);
    if i == 1 {
        // ⌊q^(9/8)⌋ = ⌊(q^9)^(1/8)⌋
        return q.pow(9).nth_root(8);
    }
    q.pow(4 * 32u32.pow(i as u32 - 2) + 1)
}

/// Exact `U_i = |Q|^(32^(i−1) + 4)`.
pub fn exact_u(q: u64, i: usize) -> BigUint {
    assert!(i >= 1);
    BigUint::from(q).pow(32u32.pow(i as u32 - 1) + 4)
}

/// Bounds up to index `d + 1`, saturated at `u64::MAX`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub states: u64,
    pub d: usize,
    m: Vec<u64>,
    u: Vec<u64>,
}

fn saturating_power(q: u64, i: usize, exact: fn(u64, usize) -> BigUint, exponent: fn(usize) -> f64) -> u64 {
    if q <= 1 {
        return exact(q, i).to_u64().unwrap_or(u64::MAX);
    }
    // avoid materialising astronomically large powers
    if exponent(i) * (q as f64).log2() > 80.0 {
        return u64::MAX;
    }
    exact(q, i).to_u64().unwrap_or(u64::MAX)
}

impl Bounds {
    pub fn new(states: usize, d: usize) -> Bounds {
        let q = states as u64;
        let m_exp = |i: usize| 32f64.powi(i as i32 - 1) / 8.0 + 1.0;
        let u_exp = |i: usize| 32f64.powi(i as i32 - 1) + 4.0;
        let m = (1..=d + 1).map(|i| saturating_power(q, i, exact_m, m_exp)).collect();
        let u = (1..=d + 1).map(|i| saturating_power(q, i, exact_u, u_exp)).collect();
        Bounds { states: q, d, m, u }
    }

    /// `M_i`, 1-based, up to `d + 1`.
    pub fn m(&self, i: usize) -> u64 {
        self.m[i - 1]
    }

    pub fn u(&self, i: usize) -> u64 {
        self.u[i - 1]
    }

    /// Largest value stored in identity mode for pair `i`: `2d·M_i`.
    pub fn value_cap(&self, i: usize) -> u64 {
        self.m(i).saturating_mul(2 * self.d as u64)
    }

    fn diff_cap(&self, i: usize) -> u64 {
        self.u(i).min(DIFF_CAP)
    }
}

/// Loop modulus of a pair; `Top` tracks exact values. `Mod` sorts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ell {
    Mod(u64),
    Top,
}

impl fmt::Display for Ell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ell::Mod(l) => write!(f, "{l}"),
            Ell::Top => f.write_str("T"),
        }
    }
}

impl std::str::FromStr for Ell {
    type Err = String;
    fn from_str(s: &str) -> Result<Ell, String> {
        match s {
            "T" | "⊤" => Ok(Ell::Top),
            _ => match s.parse::<u64>() {
                Ok(l) if l >= 1 => Ok(Ell::Mod(l)),
                _ => Err(format!("bad loop modulus `{s}`")),
            },
        }
    }
}

/// Stored difference `y_i − y_{i+1}`; `Sat` stands for "at least `U_i`".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Diff {
    Val(u64),
    Sat,
}

impl Diff {
    fn at_least(self, delta: u64) -> bool {
        match self {
            Diff::Sat => true,
            Diff::Val(v) => v >= delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbsConfig {
    pub q: usize,
    pub m: Vec<Option<u64>>,
    pub n: Vec<Option<u64>>,
    pub u: Vec<Diff>,
    pub ell: Vec<Ell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    Eq,
    Geq,
}

/// `y_i − y_{i+1} = δ` or `≥ δ`, `i` 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YConstraint {
    pub i: usize,
    pub kind: ConstraintKind,
    pub delta: u64,
}

impl fmt::Display for YConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.kind {
            ConstraintKind::Eq => "=",
            ConstraintKind::Geq => ">=",
        };
        write!(f, "y{}-y{}{op}{}", self.i, self.i + 1, self.delta)
    }
}

/// Raised when an identity-mode value outgrows `u64` while still inside its
/// range, so the step cannot be represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overflow;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbstractError {
    Unordered(usize),
    OutOfRange(usize),
}

impl fmt::Display for AbstractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractError::Unordered(i) => write!(f, "y{} < y{}", i + 1, i + 2),
            AbstractError::OutOfRange(i) => write!(f, "pair {} exceeds its identity-mode range", i + 1),
        }
    }
}

fn apply_bot(f: AffineFn, v: Option<u64>) -> Result<Option<u64>, Overflow> {
    match v {
        None => Ok((f == AffineFn::INC || f == AffineFn::DBL1).then_some(1)),
        Some(v) => {
            let r = (f.a as i128) * (v as i128) + f.b as i128;
            if r < 0 {
                return Ok(None);
            }
            u64::try_from(r).map(Some).map_err(|_| Overflow)
        }
    }
}

impl AbsConfig {
    pub fn initial(q: usize, ell: &[Ell]) -> AbsConfig {
        let d = ell.len();
        AbsConfig {
            q,
            m: vec![None; d],
            n: vec![None; d],
            u: vec![Diff::Val(0); d.saturating_sub(1)],
            ell: ell.to_vec(),
        }
    }

    pub fn pairs(&self) -> usize {
        self.ell.len()
    }
}

/// `⊤`-monotone: once `⊤`, always `⊤`.
pub fn top_monotone(ell: &[Ell]) -> bool {
    ell.windows(2).all(|w| w[0] != Ell::Top || w[1] == Ell::Top)
}

impl Bounds {
    /// The abstraction `f_V` of a concrete configuration.
    pub fn abstract_config(&self, c: &Config, ell: &[Ell]) -> Result<AbsConfig, AbstractError> {
        let d = ell.len();
        let reduce = |i: usize, v: &BigUint| -> Result<Option<u64>, AbstractError> {
            if v.is_zero() {
                return Ok(None);
            }
            match ell[i] {
                Ell::Mod(l) => Ok(Some((v % l).to_u64().unwrap())),
                Ell::Top => match v.to_u64() {
                    Some(x) if x <= self.value_cap(i + 1) => Ok(Some(x)),
                    _ => Err(AbstractError::OutOfRange(i)),
                },
            }
        };
        let mut a = AbsConfig::initial(c.state, ell);
        for i in 0..d {
            a.m[i] = reduce(i, &c.counters[2 * i])?;
            a.n[i] = reduce(i, &c.counters[2 * i + 1])?;
        }
        for i in 0..d.saturating_sub(1) {
            let (hi, lo) = (&c.counters[2 * i + 1], &c.counters[2 * i + 3]);
            if hi < lo {
                return Err(AbstractError::Unordered(i));
            }
            let diff = hi - lo;
            let cap = self.diff_cap(i + 1);
            a.u[i] = match diff.to_u64() {
                Some(v) if v < cap => Diff::Val(v),
                _ => Diff::Sat,
            };
        }
        Ok(a)
    }

    /// One abstract transition; `Ok(None)` when the step is undefined.
    pub fn try_step(&self, a: &AbsConfig, t: &Transition) -> Result<Option<AbsConfig>, Overflow> {
        debug_assert_eq!(t.from, a.q);
        let d = a.pairs();
        let mut next = AbsConfig { q: t.to, m: Vec::with_capacity(d), n: Vec::with_capacity(d), u: Vec::with_capacity(d.saturating_sub(1)), ell: a.ell.clone() };
        for i in 0..d {
            let (fx, fy) = (t.updates[2 * i], t.updates[2 * i + 1]);
            if a.m[i].is_some() && fx != AffineFn::INC {
                return Ok(None);
            }
            let mut pair = [apply_bot(fx, a.m[i])?, apply_bot(fy, a.n[i])?];
            for v in pair.iter_mut() {
                if let Some(x) = *v {
                    match a.ell[i] {
                        Ell::Mod(l) => *v = Some(x % l),
                        Ell::Top if x > self.value_cap(i + 1) => return Ok(None),
                        Ell::Top => {}
                    }
                }
            }
            next.m.push(pair[0]);
            next.n.push(pair[1]);
        }
        for i in 0..d.saturating_sub(1) {
            let (f, g) = (t.updates[2 * i + 1], t.updates[2 * i + 3]);
            let u = match a.u[i] {
                Diff::Sat => Diff::Sat,
                Diff::Val(u) => {
                    let w = if f == g {
                        2 * u as u128
                    } else if f == AffineFn::DBL1 && g == AffineFn::DBL {
                        2 * u as u128 + 1
                    } else if f == AffineFn::DBL && g == AffineFn::DBL1 {
                        match (2 * u as u128).checked_sub(1) {
                            Some(w) => w,
                            None => return Ok(None),
                        }
                    } else {
                        return Ok(None);
                    };
                    if w >= self.diff_cap(i + 1) as u128 {
                        Diff::Sat
                    } else {
                        Diff::Val(w as u64)
                    }
                }
            };
            next.u.push(u);
        }
        Ok(Some(next))
    }

    pub fn abstract_step(&self, a: &AbsConfig, t: &Transition) -> Option<AbsConfig> {
        self.try_step(a, t).ok().flatten()
    }
}

pub fn respects(a: &AbsConfig, ys: &[YConstraint]) -> bool {
    ys.iter().all(|c| {
        let u = a.u[c.i - 1];
        match c.kind {
            ConstraintKind::Geq => u.at_least(c.delta),
            ConstraintKind::Eq => u == Diff::Val(c.delta),
        }
    })
}

/// Final control state, every pair started with `m_i = n_i`, and `Y`
/// respected.
pub fn is_final_abstract(a: &AbsConfig, ys: &[YConstraint], finals: &[bool]) -> bool {
    finals[a.q] && a.m.iter().zip(&a.n).all(|(m, n)| m.is_some() && m == n) && respects(a, ys)
}

impl fmt::Display for AbsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |x: &Option<u64>| x.map_or("_".to_string(), |x| x.to_string());
        write!(f, "(q{}", self.q)?;
        for i in 0..self.pairs() {
            write!(f, " {},{}", v(&self.m[i]), v(&self.n[i]))?;
        }
        f.write_str(" |")?;
        for u in &self.u {
            match u {
                Diff::Val(x) => write!(f, " {x}")?,
                Diff::Sat => f.write_str(" U")?,
            }
        }
        f.write_str(" |")?;
        for l in &self.ell {
            write!(f, " {l}")?;
        }
        f.write_str(")")
    }
}

impl std::str::FromStr for AbsConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<AbsConfig, String> {
        let inner = s.trim().strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or("abstract configuration must be parenthesised")?;
        let parts: Vec<&str> = inner.split('|').collect();
        let [head, us, ls] = parts[..] else {
            return Err("expected `(q m,n … | u … | ℓ …)`".into());
        };
        let mut toks = head.split_whitespace();
        let q = toks
            .next()
            .and_then(|t| t.strip_prefix('q'))
            .and_then(|t| t.parse().ok())
            .ok_or("bad control state")?;
        let val = |t: &str| -> Result<Option<u64>, String> {
            if t == "_" || t == "⊥" {
                Ok(None)
            } else {
                t.parse().map(Some).map_err(|_| format!("bad counter value `{t}`"))
            }
        };
        let (mut m, mut n) = (Vec::new(), Vec::new());
        for t in toks {
            let (a, b) = t.split_once(',').ok_or_else(|| format!("bad pair `{t}`"))?;
            m.push(val(a)?);
            n.push(val(b)?);
        }
        let u = us
            .split_whitespace()
            .map(|t| match t {
                "U" => Ok(Diff::Sat),
                _ => t.parse().map(Diff::Val).map_err(|_| format!("bad difference `{t}`")),
            })
            .collect::<Result<Vec<_>, String>>()?;
        let ell = ls.split_whitespace().map(str::parse).collect::<Result<Vec<Ell>, String>>()?;
        if ell.len() != m.len() || u.len() != m.len().saturating_sub(1) {
            return Err("inconsistent number of pairs".into());
        }
        Ok(AbsConfig { q, m, n, u, ell })
    }
}
