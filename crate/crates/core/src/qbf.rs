//! CEGAR solving of the partition-search formula
//! ∃α,β ∀X,X′,X″ ¬matrix, with side constraints over the control literals.
//!
//! Two persistent solvers are used. The candidate solver holds the side
//! constraints plus every learned blocking clause; the verifier holds the
//! matrix and receives a candidate as assumptions. Learned clauses only
//! depend on the matrix, so they stay valid when the target bound changes.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::aig::{FunctionCone, Var};
use crate::cnf::{at_least_one, tseitin, Clause, Cnf, CnfError, Lit, PairIndicators};
use crate::sat::{Backend, Budget, IncrementalSolver, SatError, SatStatus};

pub const DEFAULT_ITERATION_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Or,
    And,
    Xor,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Or => "or",
            Op::And => "and",
            Op::Xor => "xor",
        })
    }
}

impl FromStr for Op {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "or" => Ok(Op::Or),
            "and" => Ok(Op::And),
            "xor" => Ok(Op::Xor),
            _ => Err(format!("unknown operator {s:?} (expected or, and, xor)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QbfError {
    #[error("support has {0} variable(s); at least 2 are needed for a non-trivial partition")]
    SupportTooSmall(usize),
    #[error("counterexample differs from the base copy nowhere; the matrix is inconsistent")]
    EmptyCounterexample,
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

/// (α_i, β_i) per support variable: (1,0) → X_A, (0,1) → X_B, (0,0) → X_C,
/// (1,1) → dropped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ControlAssignment {
    pub alpha: Vec<bool>,
    pub beta: Vec<bool>,
}

impl ControlAssignment {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// The `i`-th assignment in the enumeration of all 4^n.
    pub fn from_index(n: usize, index: u64) -> Self {
        ControlAssignment {
            alpha: (0..n).map(|i| index >> (2 * i) & 1 == 1).collect(),
            beta: (0..n).map(|i| index >> (2 * i + 1) & 1 == 1).collect(),
        }
    }

    pub fn swapped(&self) -> Self {
        ControlAssignment {
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
        }
    }
}

impl fmt::Display for ControlAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        write!(f, "a={} b={}", bits(&self.alpha), bits(&self.beta))
    }
}

#[derive(Clone, Debug)]
pub struct ControlLits {
    pub alpha: Vec<Lit>,
    pub beta: Vec<Lit>,
}

impl ControlLits {
    pub fn fresh(n: usize, env: &mut Cnf) -> Self {
        ControlLits {
            alpha: env.fresh_many(n),
            beta: env.fresh_many(n),
        }
    }

    pub fn assumptions(&self, cand: &ControlAssignment) -> Vec<Lit> {
        let pick = |l: Lit, v: bool| if v { l } else { !l };
        self.alpha
            .iter()
            .zip(&cand.alpha)
            .chain(self.beta.iter().zip(&cand.beta))
            .map(|(&l, &v)| pick(l, v))
            .collect()
    }
}

/// Inner formula over the function copies. `copy_a` is relaxed where α
/// holds, `copy_b` where β holds; for XOR `copy_ab` takes `copy_a` on
/// β-free positions and `copy_b` on α-free positions.
#[derive(Clone, Debug)]
pub struct Matrix {
    pub op: Op,
    pub support: Vec<Var>,
    pub controls: ControlLits,
    pub base: Vec<Lit>,
    pub copy_a: Vec<Lit>,
    pub copy_b: Vec<Lit>,
    pub copy_ab: Option<Vec<Lit>>,
}

fn relax_equal(env: &mut Cnf, x: Lit, y: Lit, relax: Lit) {
    env.add_clause(&[!x, y, relax]);
    env.add_clause(&[x, !y, relax]);
}

fn instantiate(f: &FunctionCone, support: &[Var], copy: &[Lit], env: &mut Cnf) -> Result<Lit, CnfError> {
    let bind: HashMap<Var, Lit> = support.iter().copied().zip(copy.iter().copied()).collect();
    tseitin(f, env, &bind)
}

/// Builds the matrix into `env`: OR asserts f(X) ∧ ¬f(X′) ∧ ¬f(X″), AND the
/// same over ¬f, XOR the four-point parity f(X)⊕f(X′)⊕f(X″)⊕f(X‴).
pub fn build_matrix(f: &FunctionCone, op: Op, env: &mut Cnf) -> Result<Matrix, QbfError> {
    let support = f.support().to_vec();
    let n = support.len();
    if n < 2 {
        return Err(QbfError::SupportTooSmall(n));
    }
    let controls = ControlLits::fresh(n, env);
    let base = env.fresh_many(n);
    let copy_a = env.fresh_many(n);
    let copy_b = env.fresh_many(n);
    for i in 0..n {
        relax_equal(env, base[i], copy_a[i], controls.alpha[i]);
        relax_equal(env, base[i], copy_b[i], controls.beta[i]);
    }
    let o = instantiate(f, &support, &base, env)?;
    let oa = instantiate(f, &support, &copy_a, env)?;
    let ob = instantiate(f, &support, &copy_b, env)?;
    let copy_ab = match op {
        Op::Or | Op::And => {
            let pol = |l: Lit| if op == Op::And { !l } else { l };
            env.add_clause(&[pol(o)]);
            env.add_clause(&[!pol(oa)]);
            env.add_clause(&[!pol(ob)]);
            None
        }
        Op::Xor => {
            let copy_ab = env.fresh_many(n);
            for i in 0..n {
                relax_equal(env, copy_ab[i], copy_a[i], controls.beta[i]);
                relax_equal(env, copy_ab[i], copy_b[i], controls.alpha[i]);
            }
            let oab = instantiate(f, &support, &copy_ab, env)?;
            let l = env.define_xor(o, oa);
            let r = env.define_xor(ob, oab);
            let parity = env.define_xor(l, r);
            env.add_clause(&[parity]);
            Some(copy_ab)
        }
    };
    Ok(Matrix {
        op,
        support,
        controls,
        base,
        copy_a,
        copy_b,
        copy_ab,
    })
}

/// Positions where a matrix model needs α (resp. β) relaxed.
pub fn needed_relaxations(m: &Matrix, value: &dyn Fn(Lit) -> bool) -> (Vec<bool>, Vec<bool>) {
    let n = m.support.len();
    let differs = |x: &[Lit], y: &[Lit], i: usize| value(x[i]) != value(y[i]);
    let mut need_a: Vec<bool> = (0..n).map(|i| differs(&m.base, &m.copy_a, i)).collect();
    let mut need_b: Vec<bool> = (0..n).map(|i| differs(&m.base, &m.copy_b, i)).collect();
    if let Some(ab) = &m.copy_ab {
        for i in 0..n {
            need_a[i] |= differs(ab, &m.copy_b, i);
            need_b[i] |= differs(ab, &m.copy_a, i);
        }
    }
    (need_a, need_b)
}

/// Blocking clause ⋁¬α_i ∨ ⋁¬β_j over the relaxations the model relies on,
/// expressed over `controls`. Every candidate relaxing at least those
/// positions admits the same model, so all of them are excluded.
pub fn counterexample_to_clause(
    m: &Matrix,
    value: &dyn Fn(Lit) -> bool,
    controls: &ControlLits,
) -> Result<Clause, QbfError> {
    let (need_a, need_b) = needed_relaxations(m, value);
    let mut clause: Clause = Vec::new();
    for (i, &need) in need_a.iter().enumerate() {
        if need {
            clause.push(!controls.alpha[i]);
        }
    }
    for (i, &need) in need_b.iter().enumerate() {
        if need {
            clause.push(!controls.beta[i]);
        }
    }
    if clause.is_empty() {
        return Err(QbfError::EmptyCounterexample);
    }
    Ok(clause)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CegarStatus {
    PartitionFound,
    NoPartition,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownCause {
    CandidateBudget,
    VerifyBudget,
    IterationCap,
}

/// One refinement step: the rejected candidate and the clause learned from it.
#[derive(Clone, Debug)]
pub struct Iteration {
    pub candidate: ControlAssignment,
    pub clause: Clause,
    pub violated_by_candidate: bool,
}

#[derive(Clone, Debug)]
pub struct CegarOutcome {
    pub status: CegarStatus,
    pub witness: Option<ControlAssignment>,
    pub iterations: usize,
    pub counterexamples: usize,
    pub cause: Option<UnknownCause>,
    pub trace: Vec<Iteration>,
}

/// Persistent partition-search state for one function and operator.
pub struct PartitionProblem {
    matrix_env: Cnf,
    matrix: Matrix,
    side: Cnf,
    controls: ControlLits,
    indicators: PairIndicators,
    candidate: IncrementalSolver,
    verifier: IncrementalSolver,
    learned: Vec<Clause>,
    pub per_call_budget: Budget,
    pub iteration_cap: usize,
    pub record_trace: bool,
}

impl PartitionProblem {
    /// Matrix plus the strict non-triviality constraint: some variable has
    /// (1,0) and some variable has (0,1).
    pub fn new(f: &FunctionCone, op: Op, backend: &Backend) -> Result<Self, QbfError> {
        let mut matrix_env = Cnf::new();
        let matrix = build_matrix(f, op, &mut matrix_env)?;
        let n = matrix.support.len();
        let mut side = Cnf::new();
        let controls = ControlLits::fresh(n, &mut side);
        let indicators = PairIndicators::new(&controls.alpha, &controls.beta, &mut side)?;
        at_least_one(&indicators.first, &mut side)?;
        at_least_one(&indicators.second, &mut side)?;
        Ok(PartitionProblem {
            matrix_env,
            matrix,
            side,
            controls,
            indicators,
            candidate: IncrementalSolver::new(backend),
            verifier: IncrementalSolver::new(backend),
            learned: Vec::new(),
            per_call_budget: Budget::unlimited(),
            iteration_cap: DEFAULT_ITERATION_CAP,
            record_trace: false,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn num_vars(&self) -> usize {
        self.matrix.support.len()
    }

    /// Control literals of the side formula.
    pub fn controls(&self) -> &ControlLits {
        &self.controls
    }

    /// (0,0), (1,0) and (0,1) indicators over the side controls.
    pub fn indicators(&self) -> &PairIndicators {
        &self.indicators
    }

    /// The side formula, for adding target constraints. Clauses may only be
    /// appended.
    pub fn side_mut(&mut self) -> &mut Cnf {
        &mut self.side
    }

    pub fn side(&self) -> &Cnf {
        &self.side
    }

    pub fn learned(&self) -> &[Clause] {
        &self.learned
    }

    /// Inner check of one candidate. `Some(clause)` is a refutation.
    pub fn refute(&mut self, cand: &ControlAssignment) -> Result<Option<Option<Clause>>, QbfError> {
        let assumptions = self.matrix.controls.assumptions(cand);
        match self
            .verifier
            .solve(&self.matrix_env, &assumptions, &self.per_call_budget)?
        {
            SatStatus::Unsat => Ok(Some(None)),
            SatStatus::Unknown => Ok(None),
            SatStatus::Sat => {
                let verifier = &self.verifier;
                let clause = counterexample_to_clause(&self.matrix, &|l| verifier.value(l), &self.controls)?;
                Ok(Some(Some(clause)))
            }
        }
    }

    /// Runs the refinement loop with side constraints plus `assumptions`
    /// (typically the activation literal of a target bound).
    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<CegarOutcome, QbfError> {
        let mut out = CegarOutcome {
            status: CegarStatus::Unknown,
            witness: None,
            iterations: 0,
            counterexamples: 0,
            cause: None,
            trace: Vec::new(),
        };
        loop {
            if out.iterations >= self.iteration_cap {
                out.cause = Some(UnknownCause::IterationCap);
                return Ok(out);
            }
            out.iterations += 1;
            match self.candidate.solve(&self.side, assumptions, &self.per_call_budget)? {
                SatStatus::Unsat => {
                    out.status = CegarStatus::NoPartition;
                    return Ok(out);
                }
                SatStatus::Unknown => {
                    out.cause = Some(UnknownCause::CandidateBudget);
                    return Ok(out);
                }
                SatStatus::Sat => {}
            }
            let cand = ControlAssignment {
                alpha: self.controls.alpha.iter().map(|&l| self.candidate.value(l)).collect(),
                beta: self.controls.beta.iter().map(|&l| self.candidate.value(l)).collect(),
            };
            match self.refute(&cand)? {
                None => {
                    out.cause = Some(UnknownCause::VerifyBudget);
                    return Ok(out);
                }
                Some(None) => {
                    log::trace!("cegar iter {}: {} accepted", out.iterations, cand);
                    out.status = CegarStatus::PartitionFound;
                    out.witness = Some(cand);
                    return Ok(out);
                }
                Some(Some(clause)) => {
                    let violated = clause.iter().all(|&l| !self.candidate.value(l));
                    log::trace!(
                        "cegar iter {}: {} refuted, learned clause of size {}",
                        out.iterations,
                        cand,
                        clause.len()
                    );
                    out.counterexamples += 1;
                    self.candidate.add_clause(&clause);
                    if self.record_trace {
                        out.trace.push(Iteration {
                            candidate: cand,
                            clause: clause.clone(),
                            violated_by_candidate: violated,
                        });
                    }
                    self.learned.push(clause);
                }
            }
        }
    }
}

/// One-shot convenience: runs the loop on a freshly built problem.
pub fn solve_partition(problem: &mut PartitionProblem, assumptions: &[Lit]) -> Result<CegarOutcome, QbfError> {
    problem.solve(assumptions)
}
