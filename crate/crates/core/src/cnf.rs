// SPDX-License-Identifier: Apache-2.0

//! CNF clause database, Tseitin translation of AIG cones, and the unary
//! counter encodings used for partition targets.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::ops::Not;

use thiserror::Error;

use crate::aig::{self, Edge, FunctionCone, Node};

/// A CNF literal: variable id (1-based) with a sign in the low bit.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, negated: bool) -> Lit {
        debug_assert!(var > 0, "variable ids start at 1");
        Lit(var << 1 | negated as u32)
    }

    pub fn positive(var: u32) -> Lit {
        Lit::new(var, false)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(x: i64) -> Option<Lit> {
        if x == 0 || x.unsigned_abs() > u32::MAX as u64 >> 1 {
            return None;
        }
        Some(Lit::new(x.unsigned_abs() as u32, x < 0))
    }

    /// Truth value of the literal under a variable assignment.
    pub fn eval(self, var_value: bool) -> bool {
        var_value != self.is_negated()
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

pub type Clause = Vec<Lit>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("support variable '{0}' has no binding")]
    Unbound(String),
    #[error("at_least_one needs a nonempty literal list")]
    EmptyList,
    #[error("alpha and beta have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Append-only clause database. Variable 1 is reserved for constant true.
#[derive(Clone, Debug)]
pub struct Cnf {
    clauses: Vec<Clause>,
    num_vars: u32,
    names: BTreeMap<String, u32>,
}

impl Default for Cnf {
    fn default() -> Self {
        Self::new()
    }
}

impl Cnf {
    pub fn new() -> Self {
        Cnf {
            clauses: vec![vec![Lit::positive(1)]],
            num_vars: 1,
            names: BTreeMap::new(),
        }
    }

    pub fn true_lit(&self) -> Lit {
        Lit::positive(1)
    }

    pub fn false_lit(&self) -> Lit {
        !self.true_lit()
    }

    pub fn fresh(&mut self) -> Lit {
        self.num_vars += 1;
        Lit::positive(self.num_vars)
    }

    pub fn fresh_many(&mut self, n: usize) -> Vec<Lit> {
        (0..n).map(|_| self.fresh()).collect()
    }

    /// Fresh variable registered under `name`.
    pub fn named(&mut self, name: impl Into<String>) -> Lit {
        let l = self.fresh();
        self.names.insert(name.into(), l.var());
        l
    }

    pub fn name_map(&self) -> &BTreeMap<String, u32> {
        &self.names
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Adds a clause after removing duplicate literals. Tautologies are
    /// dropped. Returns whether a clause was stored.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        let mut c: Clause = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0].var() == w[1].var()) {
            return false;
        }
        for l in &c {
            assert!(l.var() >= 1 && l.var() <= self.num_vars, "literal {l:?} not allocated");
        }
        self.clauses.push(c);
        true
    }

    /// `o <-> a & b`
    pub fn define_and(&mut self, a: Lit, b: Lit) -> Lit {
        let o = self.fresh();
        self.add_clause(&[!o, a]);
        self.add_clause(&[!o, b]);
        self.add_clause(&[o, !a, !b]);
        o
    }

    /// `o <-> a ^ b`
    pub fn define_xor(&mut self, a: Lit, b: Lit) -> Lit {
        let o = self.fresh();
        self.add_clause(&[!o, a, b]);
        self.add_clause(&[!o, !a, !b]);
        self.add_clause(&[o, !a, b]);
        self.add_clause(&[o, a, !b]);
        o
    }

    pub fn add_equal(&mut self, a: Lit, b: Lit) {
        self.add_clause(&[!a, b]);
        self.add_clause(&[a, !b]);
    }

    /// Checks every clause against a total assignment indexed by variable.
    pub fn is_satisfied_by(&self, value: &dyn Fn(u32) -> bool) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.eval(value(l.var()))))
    }

    pub fn write_dimacs(&self, sink: &mut dyn Write) -> io::Result<()> {
        self.write_dimacs_with(&[], sink)
    }

    /// DIMACS with `extra` appended as unit clauses.
    pub fn write_dimacs_with(&self, extra: &[Lit], sink: &mut dyn Write) -> io::Result<()> {
        writeln!(sink, "p cnf {} {}", self.num_vars, self.clauses.len() + extra.len())?;
        for c in &self.clauses {
            for l in c {
                write!(sink, "{} ", l.to_dimacs())?;
            }
            writeln!(sink, "0")?;
        }
        for l in extra {
            writeln!(sink, "{} 0", l.to_dimacs())?;
        }
        Ok(())
    }
}

/// Tseitin-encodes `f` with its inputs bound through `bind`; returns the
/// literal equivalent to the function output.
pub fn tseitin(
    f: &FunctionCone,
    env: &mut Cnf,
    bind: &HashMap<aig::Var, Lit>,
) -> Result<Lit, CnfError> {
    for v in f.support() {
        if !bind.contains_key(v) {
            return Err(CnfError::Unbound(f.var_name(*v).to_string()));
        }
    }
    let aig = f.aig();
    let root = f.root();
    if root.is_const() {
        return Ok(if root == Edge::TRUE {
            env.true_lit()
        } else {
            env.false_lit()
        });
    }
    let live = aig.reachable(&[root]);
    let mut lits = vec![env.false_lit(); aig.len()];
    let of = |lits: &[Lit], e: Edge| {
        let l = lits[e.node()];
        if e.is_complemented() {
            !l
        } else {
            l
        }
    };
    for (i, node) in aig.nodes().iter().enumerate() {
        if !live[i] {
            continue;
        }
        lits[i] = match *node {
            Node::Const => env.false_lit(),
            Node::Input(v) => bind[&v],
            Node::And(a, b) => {
                let (la, lb) = (of(&lits, a), of(&lits, b));
                env.define_and(la, lb)
            }
        };
    }
    Ok(of(&lits, root))
}

pub fn at_least_one(lits: &[Lit], env: &mut Cnf) -> Result<(), CnfError> {
    if lits.is_empty() {
        return Err(CnfError::EmptyList);
    }
    env.add_clause(lits);
    Ok(())
}

/// Output lines of a unary counter: `ge(j)` holds iff at least `j` of the
/// counted literals are true.
#[derive(Clone, Debug)]
pub struct SumLines {
    lines: Vec<Lit>,
    top: Lit,
}

impl SumLines {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn lines(&self) -> &[Lit] {
        &self.lines
    }

    /// Literal for "sum >= j"; constant true for `j = 0`, constant false
    /// beyond the number of inputs.
    pub fn ge(&self, j: usize) -> Lit {
        match j {
            0 => self.top,
            j if j > self.lines.len() => !self.top,
            j => self.lines[j - 1],
        }
    }
}

/// Sequential counter with both implication directions, so every line is a
/// function of the counted literals.
pub fn unary_counter(lits: &[Lit], env: &mut Cnf) -> SumLines {
    let top = env.true_lit();
    let mut prev: Vec<Lit> = Vec::new();
    for (i, &x) in lits.iter().enumerate() {
        if i == 0 {
            prev = vec![x];
            continue;
        }
        let width = i + 1;
        let mut next = Vec::with_capacity(width);
        for j in 1..=width {
            // next_j <-> prev_j | (prev_{j-1} & x)
            let s = env.fresh();
            let keep = (j <= i).then(|| prev[j - 1]);
            let carry = if j == 1 { None } else { Some(prev[j - 2]) };
            if let Some(p) = keep {
                env.add_clause(&[!p, s]);
            }
            match carry {
                Some(c) => env.add_clause(&[!c, !x, s]),
                None => env.add_clause(&[!x, s]),
            };
            // s -> prev_j | x
            match keep {
                Some(p) => env.add_clause(&[!s, p, x]),
                None => env.add_clause(&[!s, x]),
            };
            // s -> prev_j | prev_{j-1}
            match (keep, carry) {
                (Some(p), Some(c)) => env.add_clause(&[!s, p, c]),
                (None, Some(c)) => env.add_clause(&[!s, c]),
                _ => false,
            };
            next.push(s);
        }
        prev = next;
    }
    SumLines { lines: prev, top }
}

/// Per-position indicator literals over a control pair.
#[derive(Clone, Debug)]
pub struct PairIndicators {
    /// `!alpha & !beta` (shared)
    pub common: Vec<Lit>,
    /// `alpha & !beta` (only in the first block)
    pub first: Vec<Lit>,
    /// `!alpha & beta` (only in the second block)
    pub second: Vec<Lit>,
}

impl PairIndicators {
    pub fn new(alpha: &[Lit], beta: &[Lit], env: &mut Cnf) -> Result<Self, CnfError> {
        if alpha.len() != beta.len() {
            return Err(CnfError::LengthMismatch(alpha.len(), beta.len()));
        }
        let mut p = PairIndicators {
            common: Vec::new(),
            first: Vec::new(),
            second: Vec::new(),
        };
        for (&a, &b) in alpha.iter().zip(beta) {
            p.common.push(env.define_and(!a, !b));
            p.first.push(env.define_and(a, !b));
            p.second.push(env.define_and(!a, b));
        }
        Ok(p)
    }
}

/// Two-sided comparison `0 <= P - N <= k` between two unary counters, with
/// the upper bound selectable per `k` through activation literals.
#[derive(Clone, Debug)]
pub struct DifferenceBound {
    pub pos: SumLines,
    pub neg: SumLines,
    activations: BTreeMap<usize, Lit>,
}

impl DifferenceBound {
    pub fn new(pos: SumLines, neg: SumLines) -> Self {
        DifferenceBound {
            pos,
            neg,
            activations: BTreeMap::new(),
        }
    }

    pub fn max_difference(&self) -> usize {
        self.pos.len()
    }

    /// Permanently asserts `P >= N`.
    pub fn assert_lower(&self, env: &mut Cnf) {
        for j in 1..=self.neg.len() {
            env.add_clause(&[!self.neg.ge(j), self.pos.ge(j)]);
        }
    }

    /// Adds `P - N <= k`, each clause weakened by the negation of every
    /// literal in `guards`.
    pub fn upper_clauses(&self, k: usize, guards: &[Lit], env: &mut Cnf) {
        // P >= j + k implies N >= j, for j >= 1 (and P <= k when j = 0)
        if k >= self.pos.len() {
            return;
        }
        for j in 0..=self.pos.len() - k - 1 {
            let p = self.pos.ge(j + k + 1);
            let n = self.neg.ge(j + 1);
            let mut c = vec![!p];
            if j < self.neg.len() {
                c.push(n);
            }
            c.extend(guards.iter().map(|&g| !g));
            env.add_clause(&c);
        }
    }

    /// Permanently asserts `P - N <= k`.
    pub fn assert_upper(&self, k: usize, env: &mut Cnf) {
        self.upper_clauses(k, &[], env);
    }

    /// Activation literal enabling `P - N <= k` when assumed true.
    pub fn upper_activation(&mut self, k: usize, env: &mut Cnf) -> Lit {
        if let Some(&a) = self.activations.get(&k) {
            return a;
        }
        let a = env.fresh();
        self.upper_clauses(k, &[a], env);
        self.activations.insert(k, a);
        a
    }
}

/// `sum(!a_i & !b_i) <= k`
pub fn encode_disjointness_bound(
    alpha: &[Lit],
    beta: &[Lit],
    k: usize,
    env: &mut Cnf,
) -> Result<(), CnfError> {
    let ind = PairIndicators::new(alpha, beta, env)?;
    let pos = unary_counter(&ind.common, env);
    let neg = unary_counter(&[], env);
    DifferenceBound::new(pos, neg).assert_upper(k, env);
    Ok(())
}

/// `0 <= sum(a_i & !b_i) - sum(!a_i & b_i) <= k`
pub fn encode_balancedness_bound(
    alpha: &[Lit],
    beta: &[Lit],
    k: usize,
    env: &mut Cnf,
) -> Result<(), CnfError> {
    let ind = PairIndicators::new(alpha, beta, env)?;
    let pos = unary_counter(&ind.first, env);
    let neg = unary_counter(&ind.second, env);
    let d = DifferenceBound::new(pos, neg);
    d.assert_lower(env);
    d.assert_upper(k, env);
    Ok(())
}

/// `0 <= sum(!a_i & !b_i) + sum(a_i & !b_i) - sum(!a_i & b_i) <= k`
pub fn encode_sum_bound(
    alpha: &[Lit],
    beta: &[Lit],
    k: usize,
    env: &mut Cnf,
) -> Result<(), CnfError> {
    let ind = PairIndicators::new(alpha, beta, env)?;
    let merged: Vec<Lit> = ind.common.iter().chain(&ind.first).copied().collect();
    let pos = unary_counter(&merged, env);
    let neg = unary_counter(&ind.second, env);
    let d = DifferenceBound::new(pos, neg);
    d.assert_lower(env);
    d.assert_upper(k, env);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{FunctionCone, Gate, Var};
    use std::sync::Arc;

    /// Is there an extension of `fixed` satisfying every clause? Decided by
    /// the SAT solver, cross-checked by enumeration when few variables are free.
    pub(crate) fn extendable(env: &Cnf, fixed: &[(Lit, bool)]) -> bool {
        let assumptions: Vec<Lit> = fixed.iter().map(|&(l, v)| if v { l } else { !l }).collect();
        let by_sat = crate::sat::solve(env, &assumptions, &crate::sat::Budget::unlimited()).status
            == crate::sat::SatStatus::Sat;
        let n = env.num_vars() as usize;
        let mut forced: Vec<Option<bool>> = vec![None; n + 1];
        for l in &assumptions {
            forced[l.var() as usize] = Some(!l.is_negated());
        }
        let free: Vec<usize> = (1..=n).filter(|&v| forced[v].is_none()).collect();
        if free.len() <= 12 {
            let by_enum = (0u64..1 << free.len()).any(|m| {
                let mut val = forced.clone();
                for (i, &v) in free.iter().enumerate() {
                    val[v] = Some(m >> i & 1 == 1);
                }
                env.is_satisfied_by(&|v| val[v as usize].unwrap())
            });
            assert_eq!(by_sat, by_enum);
        }
        by_sat
    }

    fn names(n: usize) -> Arc<[String]> {
        (0..n).map(|i| format!("x{i}")).collect::<Vec<_>>().into()
    }

    #[test]
    fn and_encoding_has_three_clauses() {
        let n = names(2);
        let a = FunctionCone::variable(Var(0), n.clone());
        let b = FunctionCone::variable(Var(1), n);
        let f = FunctionCone::compose(Gate::And, &[&a, &b]).unwrap();
        let mut env = Cnf::new();
        let la = env.fresh();
        let lb = env.fresh();
        let bind = HashMap::from([(Var(0), la), (Var(1), lb)]);
        let before = env.num_clauses();
        let o = tseitin(&f, &mut env, &bind).unwrap();
        let added: Vec<Clause> = env.clauses()[before..].to_vec();
        let mut expect = vec![vec![!o, la], vec![!o, lb], vec![o, !la, !lb]];
        for c in &mut expect {
            c.sort();
        }
        assert_eq!(added, expect);
    }

    #[test]
    fn constant_and_unbound() {
        let n = names(1);
        let t = FunctionCone::constant(true, n.clone());
        let mut env = Cnf::new();
        let before = env.num_clauses();
        assert_eq!(tseitin(&t, &mut env, &HashMap::new()).unwrap(), env.true_lit());
        assert_eq!(env.num_clauses(), before);
        let x = FunctionCone::variable(Var(0), n);
        assert_eq!(
            tseitin(&x, &mut env, &HashMap::new()).unwrap_err(),
            CnfError::Unbound("x0".into())
        );
    }

    #[test]
    fn xor_encoding_model_count() {
        let n = names(2);
        let a = FunctionCone::variable(Var(0), n.clone());
        let b = FunctionCone::variable(Var(1), n);
        let f = FunctionCone::compose(Gate::Xor, &[&a, &b]).unwrap();
        let mut env = Cnf::new();
        let la = env.fresh();
        let lb = env.fresh();
        let bind = HashMap::from([(Var(0), la), (Var(1), lb)]);
        let o = tseitin(&f, &mut env, &bind).unwrap();
        // count (a, b) with o forced true that extend to a model
        let count = [(false, false), (false, true), (true, false), (true, true)]
            .iter()
            .filter(|(x, y)| extendable(&env, &[(la, *x), (lb, *y), (o, true)]))
            .count();
        assert_eq!(count, 2);
    }

    #[test]
    fn tautologies_are_dropped() {
        let mut env = Cnf::new();
        let a = env.fresh();
        let n = env.num_clauses();
        assert!(!env.add_clause(&[a, !a]));
        assert_eq!(env.num_clauses(), n);
        assert!(env.add_clause(&[a, a]));
        assert_eq!(env.clauses().last().unwrap(), &vec![a]);
    }

    #[test]
    fn at_least_one_clause() {
        let mut env = Cnf::new();
        let v = env.fresh_many(2);
        at_least_one(&v, &mut env).unwrap();
        assert_eq!(env.clauses().last().unwrap(), &v);
        at_least_one(&v[1..], &mut env).unwrap();
        assert_eq!(env.clauses().last().unwrap(), &vec![v[1]]);
        assert_eq!(at_least_one(&[], &mut env), Err(CnfError::EmptyList));
        assert!(!extendable(&env, &[(v[0], true), (v[1], false)]));
        assert!(extendable(&env, &[(v[0], false), (v[1], true)]));
    }

    #[test]
    fn counter_lines_three_inputs() {
        let mut env = Cnf::new();
        let x = env.fresh_many(3);
        let s = unary_counter(&x, &mut env);
        assert_eq!(s.len(), 3);
        let fix = [(x[0], true), (x[1], false), (x[2], true)];
        let expect = [true, true, false];
        for (j, &e) in expect.iter().enumerate() {
            let mut f = fix.to_vec();
            f.push((s.ge(j + 1), !e));
            assert!(!extendable(&env, &f), "line {} must be {e}", j + 1);
        }
        let zero = [(x[0], false), (x[1], false), (x[2], false)];
        for j in 1..=3 {
            let mut f = zero.to_vec();
            f.push((s.ge(j), true));
            assert!(!extendable(&env, &f));
        }
    }

    #[test]
    fn disjointness_examples() {
        let case = |k: usize, a: [bool; 3], b: [bool; 3]| {
            let mut env = Cnf::new();
            let al = env.fresh_many(3);
            let bl = env.fresh_many(3);
            encode_disjointness_bound(&al, &bl, k, &mut env).unwrap();
            let fix: Vec<(Lit, bool)> = al
                .iter()
                .zip(a)
                .chain(bl.iter().zip(b))
                .map(|(l, v)| (*l, v))
                .collect();
            extendable(&env, &fix)
        };
        assert!(case(0, [true, true, false], [false, false, true]));
        assert!(!case(0, [false, true, true], [false, true, true]));
    }

    #[test]
    fn balancedness_examples() {
        let case = |k: usize, a: [bool; 3], b: [bool; 3]| {
            let mut env = Cnf::new();
            let al = env.fresh_many(3);
            let bl = env.fresh_many(3);
            encode_balancedness_bound(&al, &bl, k, &mut env).unwrap();
            let fix: Vec<(Lit, bool)> = al
                .iter()
                .zip(a)
                .chain(bl.iter().zip(b))
                .map(|(l, v)| (*l, v))
                .collect();
            extendable(&env, &fix)
        };
        assert!(case(1, [true, true, false], [false, false, true]));
        assert!(!case(0, [true, true, false], [false, false, true]));
        for k in 0..=3 {
            assert!(!case(k, [false, false, true], [true, true, false]));
        }
    }

    #[test]
    fn sum_examples() {
        let case = |k: usize, a: &[bool], b: &[bool]| {
            let mut env = Cnf::new();
            let al = env.fresh_many(a.len());
            let bl = env.fresh_many(b.len());
            encode_sum_bound(&al, &bl, k, &mut env).unwrap();
            let fix: Vec<(Lit, bool)> = al
                .iter()
                .zip(a)
                .chain(bl.iter().zip(b))
                .map(|(l, v)| (*l, *v))
                .collect();
            extendable(&env, &fix)
        };
        assert!(case(0, &[true, false], &[false, true]));
        assert!(!case(0, &[false, true, false], &[false, false, true]));
        assert!(case(1, &[false, true, false], &[false, false, true]));
    }

    #[test]
    fn dimacs_output() {
        let mut env = Cnf::new();
        let a = env.fresh();
        let b = env.fresh();
        env.add_clause(&[a, !b]);
        let mut out = Vec::new();
        env.write_dimacs_with(&[b], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "p cnf 3 3\n1 0\n2 -3 0\n3 0\n");
    }
}
