//! Optimum search over the target bound k. Feasibility is monotone in k,
//! so every answer narrows the interval [lo, best]: an infeasible k proves
//! everything at or below it infeasible, a found partition bounds the
//! optimum by its actual cost.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::aig::FunctionCone;
use crate::cnf::{unary_counter, DifferenceBound, Lit, SumLines};
use crate::qbf::{CegarStatus, ControlAssignment, Iteration, PartitionProblem, DEFAULT_ITERATION_CAP};
use crate::sat::{Backend, Budget};

use super::{decode_partition, metrics, EngineError, Metrics, Objective, ObjectiveKind, Op, Partition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Increase k from the proved lower bound.
    Mi,
    /// Decrease k from the upper bound.
    Md,
    /// Bisection between the bounds.
    Bin,
    /// A few decreasing steps, then bisection, then increasing steps.
    Hybrid,
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mi" => Ok(Strategy::Mi),
            "md" => Ok(Strategy::Md),
            "bin" => Ok(Strategy::Bin),
            "hybrid" => Ok(Strategy::Hybrid),
            _ => Err(format!("unknown strategy {s:?} (expected mi, md, bin, hybrid)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Mi => "mi",
            Strategy::Md => "md",
            Strategy::Bin => "bin",
            Strategy::Hybrid => "hybrid",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub strategy: Strategy,
    pub call_budget: Budget,
    pub deadline: Option<Instant>,
    pub iteration_cap: usize,
    pub backend: Backend,
    /// Adds |X_A| ≥ |X_B|. When off, balancedness is bounded on both sides.
    pub symmetry_breaking: bool,
    /// Probe k = ub/2 once before the search.
    pub bootstrap_probe: bool,
    pub hybrid_md_steps: usize,
    pub record_trace: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            strategy: Strategy::Hybrid,
            call_budget: Budget::unlimited(),
            deadline: None,
            iteration_cap: DEFAULT_ITERATION_CAP,
            backend: Backend::default(),
            symmetry_breaking: true,
            bootstrap_probe: true,
            hybrid_md_steps: 3,
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KStatus {
    Found,
    Infeasible,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct KRecord {
    pub k: usize,
    pub status: KStatus,
    pub iterations: usize,
    pub counterexamples: usize,
    pub trace: Vec<Iteration>,
}

/// Target constraint installed in the side formula, selectable per k.
enum Target {
    /// `0 <= P - N <= k` over one difference of counters.
    Single(DifferenceBound),
    /// `wd·C + wb·D <= k`, with D bounded on one side (or both sides when
    /// symmetry breaking is off).
    General {
        common: SumLines,
        diffs: Vec<DifferenceBound>,
        wd: usize,
        wb: usize,
        acts: BTreeMap<usize, Lit>,
    },
}

/// Feasibility queries for one function, operator and objective, sharing
/// learned clauses across bounds.
pub struct FeasibilityOracle {
    problem: PartitionProblem,
    target: Target,
    objective: Objective,
    support: Vec<crate::aig::Var>,
}

impl FeasibilityOracle {
    pub fn new(f: &FunctionCone, op: Op, objective: Objective, opts: &SearchOptions) -> Result<Self, EngineError> {
        let mut problem = PartitionProblem::new(f, op, &opts.backend)?;
        problem.iteration_cap = opts.iteration_cap;
        problem.record_trace = opts.record_trace;
        let ind = problem.indicators().clone();
        let env = problem.side_mut();
        let p = unary_counter(&ind.first, env);
        let q = unary_counter(&ind.second, env);
        let pq = DifferenceBound::new(p.clone(), q.clone());
        if opts.symmetry_breaking {
            pq.assert_lower(env);
        }
        let (wd, wb) = objective.integer_weights();
        let target = match (objective.kind, opts.symmetry_breaking) {
            (ObjectiveKind::Disjointness, _) => {
                let c = unary_counter(&ind.common, env);
                let none = unary_counter(&[], env);
                Target::Single(DifferenceBound::new(c, none))
            }
            (ObjectiveKind::Balancedness, true) => Target::Single(pq),
            (ObjectiveKind::WeightedSum, true) if (wd, wb) == (1, 1) => {
                let merged: Vec<Lit> = ind.common.iter().chain(&ind.first).copied().collect();
                let m = unary_counter(&merged, env);
                let d = DifferenceBound::new(m, q);
                d.assert_lower(env);
                Target::Single(d)
            }
            (kind, sym) => {
                let (wd, wb) = if kind == ObjectiveKind::Balancedness { (0, 1) } else { (wd, wb) };
                let common = unary_counter(&ind.common, env);
                let mut diffs = vec![pq];
                if !sym {
                    diffs.push(DifferenceBound::new(q, p));
                }
                Target::General {
                    common,
                    diffs,
                    wd,
                    wb,
                    acts: BTreeMap::new(),
                }
            }
        };
        let support = f.support().to_vec();
        Ok(FeasibilityOracle {
            problem,
            target,
            objective,
            support,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.support.len()
    }

    pub fn problem(&self) -> &PartitionProblem {
        &self.problem
    }

    fn activation(&mut self, k: usize) -> Lit {
        let env = self.problem.side_mut();
        match &mut self.target {
            Target::Single(d) => d.upper_activation(k, env),
            Target::General {
                common,
                diffs,
                wd,
                wb,
                acts,
            } => {
                if let Some(&a) = acts.get(&k) {
                    return a;
                }
                let act = env.fresh();
                for j in 0..=common.len() {
                    let rem = k as i64 - (*wd * j) as i64;
                    let guards: Vec<Lit> = if j == 0 { vec![act] } else { vec![common.ge(j), act] };
                    if rem < 0 {
                        let c: Vec<Lit> = guards.iter().map(|&g| !g).collect();
                        env.add_clause(&c);
                        break;
                    }
                    if let Some(m) = (rem as usize).checked_div(*wb) {
                        for d in diffs.iter() {
                            d.upper_clauses(m, &guards, env);
                        }
                    }
                    if *wd == 0 {
                        break;
                    }
                }
                acts.insert(k, act);
                act
            }
        }
    }

    /// Runs the partition search with the bound set to k.
    pub fn query(&mut self, k: usize, budget: &Budget) -> Result<(KRecord, Option<ControlAssignment>), EngineError> {
        let act = self.activation(k);
        self.problem.per_call_budget = *budget;
        let out = self.problem.solve(&[act])?;
        let status = match out.status {
            CegarStatus::PartitionFound => KStatus::Found,
            CegarStatus::NoPartition => KStatus::Infeasible,
            CegarStatus::Unknown => KStatus::Unknown,
        };
        Ok((
            KRecord {
                k,
                status,
                iterations: out.iterations,
                counterexamples: out.counterexamples,
                trace: out.trace,
            },
            out.witness,
        ))
    }

    pub fn decode(&self, cand: &ControlAssignment) -> Partition {
        decode_partition(&self.support, cand)
    }

    pub fn cost(&self, p: &Partition) -> usize {
        self.objective.cost_units(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptStatus {
    Found,
    Infeasible,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct OptResult {
    pub status: OptStatus,
    pub best_k: Option<usize>,
    pub partition: Option<Partition>,
    pub witness: Option<ControlAssignment>,
    pub optimal: bool,
    pub metrics: Option<Metrics>,
    pub upper_bound: usize,
    pub per_k: Vec<KRecord>,
}

impl OptResult {
    pub fn iterations(&self) -> usize {
        self.per_k.iter().map(|r| r.iterations).sum()
    }
}

struct Search<'a> {
    oracle: FeasibilityOracle,
    opts: &'a SearchOptions,
    ub: usize,
    lo: usize,
    best: Option<(usize, ControlAssignment)>,
    done: BTreeMap<usize, KStatus>,
    records: Vec<KRecord>,
}

impl Search<'_> {
    fn budget(&self) -> Budget {
        self.opts.call_budget.with_deadline(self.opts.deadline)
    }

    fn best_cost(&self) -> Option<usize> {
        self.best.as_ref().map(|b| b.0)
    }

    fn closed(&self) -> bool {
        match self.best_cost() {
            Some(c) => self.lo >= c,
            None => self.lo > self.ub,
        }
    }

    fn query(&mut self, k: usize) -> Result<KStatus, EngineError> {
        if let Some(&s) = self.done.get(&k) {
            return Ok(s);
        }
        if matches!(self.opts.deadline, Some(d) if Instant::now() >= d) {
            self.done.insert(k, KStatus::Unknown);
            self.records.push(KRecord {
                k,
                status: KStatus::Unknown,
                iterations: 0,
                counterexamples: 0,
                trace: Vec::new(),
            });
            return Ok(KStatus::Unknown);
        }
        let budget = self.budget();
        let (rec, witness) = self.oracle.query(k, &budget)?;
        let status = rec.status;
        log::debug!("k={k}: {status:?} after {} iterations", rec.iterations);
        self.records.push(rec);
        self.done.insert(k, status);
        match status {
            KStatus::Found => {
                let w = witness.expect("found partitions carry a witness");
                let cost = self.oracle.cost(&self.oracle.decode(&w));
                debug_assert!(cost <= k);
                if self.best_cost().is_none_or(|c| cost < c) {
                    self.best = Some((cost, w));
                }
            }
            KStatus::Infeasible => self.lo = self.lo.max(k + 1),
            KStatus::Unknown => {}
        }
        Ok(status)
    }

    fn run_mi(&mut self) -> Result<(), EngineError> {
        let mut k = self.lo;
        while !self.closed() {
            let stop = self.best_cost().unwrap_or(self.ub + 1);
            if k >= stop {
                break;
            }
            if self.query(k)? == KStatus::Found {
                break;
            }
            k += 1;
        }
        Ok(())
    }

    fn run_md(&mut self, steps: Option<usize>) -> Result<(), EngineError> {
        let mut left = steps.unwrap_or(usize::MAX);
        while left > 0 && !self.closed() {
            let k = match self.best_cost() {
                Some(0) => break,
                Some(c) => c - 1,
                None => self.ub,
            };
            if k < self.lo || self.query(k)? != KStatus::Found {
                break;
            }
            left -= 1;
        }
        Ok(())
    }

    fn run_bin(&mut self) -> Result<(), EngineError> {
        if self.best.is_none() && self.query(self.ub)? != KStatus::Found {
            return Ok(());
        }
        while !self.closed() {
            let hi = self.best_cost().expect("upper feasible point");
            let mid = self.lo + (hi - self.lo) / 2;
            if self.query(mid)? == KStatus::Unknown {
                break;
            }
        }
        Ok(())
    }
}

/// Trivial bound on the cost, optionally tightened by one probe at half of
/// it. Returns the bound and the probe's witness when it succeeded.
fn bootstrap(search: &mut Search<'_>, probe: bool) -> Result<usize, EngineError> {
    let trivial = search.ub;
    if !probe || trivial < 2 {
        return Ok(trivial);
    }
    let k = trivial / 2;
    Ok(match search.query(k)? {
        KStatus::Found => k,
        _ => trivial,
    })
}

/// Upper bound k_0 for the search: the largest possible cost, or half of it
/// when a probe there succeeds.
pub fn bootstrap_upper_bound(
    f: &FunctionCone,
    op: Op,
    objective: Objective,
    opts: &SearchOptions,
) -> Result<usize, EngineError> {
    let oracle = FeasibilityOracle::new(f, op, objective, opts)?;
    let n = oracle.num_vars();
    let mut search = Search {
        oracle,
        opts,
        ub: objective.max_cost(n),
        lo: 0,
        best: None,
        done: BTreeMap::new(),
        records: Vec::new(),
    };
    bootstrap(&mut search, true)
}

pub fn find_optimum(
    f: &FunctionCone,
    op: Op,
    objective: Objective,
    opts: &SearchOptions,
) -> Result<OptResult, EngineError> {
    let oracle = FeasibilityOracle::new(f, op, objective, opts)?;
    let n = oracle.num_vars();
    let mut s = Search {
        oracle,
        opts,
        ub: objective.max_cost(n),
        lo: 0,
        best: None,
        done: BTreeMap::new(),
        records: Vec::new(),
    };
    let ub = bootstrap(&mut s, opts.bootstrap_probe)?;
    match opts.strategy {
        Strategy::Mi => s.run_mi()?,
        Strategy::Md => s.run_md(None)?,
        Strategy::Bin => s.run_bin()?,
        Strategy::Hybrid => {
            s.run_md(Some(opts.hybrid_md_steps))?;
            s.run_bin()?;
            s.run_mi()?;
        }
    }
    let status = match (&s.best, s.lo > s.ub) {
        (Some(_), _) => OptStatus::Found,
        (None, true) => OptStatus::Infeasible,
        (None, false) => OptStatus::Unknown,
    };
    let optimal = s.best_cost().is_some_and(|c| s.lo >= c);
    let partition = s.best.as_ref().map(|(_, w)| s.oracle.decode(w));
    let metrics = partition.as_ref().map(|p| metrics(p, n)).transpose()?;
    Ok(OptResult {
        status,
        best_k: s.best_cost(),
        witness: s.best.map(|b| b.1),
        partition,
        optimal,
        metrics,
        upper_bound: ub,
        per_k: s.records,
    })
}
