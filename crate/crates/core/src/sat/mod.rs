//! SAT oracle: the embedded CDCL solver and a DIMACS subprocess backend
//! behind one trait.

mod cdcl;
mod external;

use std::path::PathBuf;
use std::time::{Duration, Instant};

pub use cdcl::{Solver, SolverConfig, SolverStats};
pub use external::ExternalSolver;

use crate::cnf::{Cnf, Lit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SatStatus {
    Sat,
    Unsat,
    Unknown,
}

/// `model[v]` is the value of CNF variable `v`; index 0 is unused.
#[derive(Clone, Debug)]
pub struct SatResult {
    pub status: SatStatus,
    pub model: Option<Vec<bool>>,
}

impl SatResult {
    pub fn value(&self, l: Lit) -> Option<bool> {
        let m = self.model.as_ref()?;
        Some(m.get(l.var() as usize).copied().unwrap_or(false) != l.is_negated())
    }
}

/// Per-call resource limits. `conflicts` is deterministic; `time` and
/// `deadline` are wall-clock and combine to the earlier of the two.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub conflicts: Option<u64>,
    pub time: Option<Duration>,
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn conflicts(n: u64) -> Self {
        Budget {
            conflicts: Some(n),
            ..Budget::default()
        }
    }

    pub fn time(d: Duration) -> Self {
        Budget {
            time: Some(d),
            ..Budget::default()
        }
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = match (self.deadline, deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }

    pub fn deadline(&self) -> Option<Instant> {
        let from_time = self.time.map(|t| Instant::now() + t);
        match (from_time, self.deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn is_unlimited(&self) -> bool {
        self.conflicts.is_none() && self.time.is_none() && self.deadline.is_none()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SatError {
    #[error("cannot run SAT backend {program}: {message}")]
    Spawn { program: String, message: String },
    #[error("SAT backend protocol error: {0}")]
    Protocol(String),
    #[error("SAT backend returned a model that violates clause {clause}")]
    BogusModel { clause: usize },
    #[error("SAT backend exited abnormally: {0}")]
    Crashed(String),
}

/// Incremental oracle interface shared by both backends.
pub trait SatOracle: Send {
    fn add_clause(&mut self, lits: &[Lit]);
    fn solve_under(&mut self, assumptions: &[Lit], budget: &Budget) -> Result<SatStatus, SatError>;
    /// Value of `l` in the model of the last SAT answer.
    fn value(&self, l: Lit) -> bool;
    fn model(&self) -> Vec<bool>;
    fn conflicts(&self) -> u64 {
        0
    }
}

impl SatOracle for Solver {
    fn add_clause(&mut self, lits: &[Lit]) {
        Solver::add_clause(self, lits);
    }

    fn solve_under(&mut self, assumptions: &[Lit], budget: &Budget) -> Result<SatStatus, SatError> {
        Ok(self.solve(assumptions, budget))
    }

    fn value(&self, l: Lit) -> bool {
        self.model_value(l)
    }

    fn model(&self) -> Vec<bool> {
        Solver::model(self).to_vec()
    }

    fn conflicts(&self) -> u64 {
        self.stats.conflicts
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    Builtin { seed: u64 },
    External { program: PathBuf, args: Vec<String> },
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Builtin { seed: 0 }
    }
}

impl Backend {
    pub fn make(&self) -> Box<dyn SatOracle> {
        match self {
            Backend::Builtin { seed } => Box::new(Solver::new(SolverConfig {
                seed: *seed,
                ..SolverConfig::default()
            })),
            Backend::External { program, args } => {
                Box::new(ExternalSolver::new(program.clone(), args.clone()))
            }
        }
    }
}

/// An oracle kept in step with an append-only [`Cnf`].
pub struct IncrementalSolver {
    oracle: Box<dyn SatOracle>,
    synced: usize,
}

impl IncrementalSolver {
    pub fn new(backend: &Backend) -> Self {
        IncrementalSolver {
            oracle: backend.make(),
            synced: 0,
        }
    }

    pub fn sync(&mut self, env: &Cnf) {
        for c in &env.clauses()[self.synced..] {
            self.oracle.add_clause(c);
        }
        self.synced = env.num_clauses();
    }

    /// Syncs, then solves.
    pub fn solve(&mut self, env: &Cnf, assumptions: &[Lit], budget: &Budget) -> Result<SatStatus, SatError> {
        self.sync(env);
        self.oracle.solve_under(assumptions, budget)
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.oracle.add_clause(lits);
    }

    pub fn value(&self, l: Lit) -> bool {
        self.oracle.value(l)
    }

    pub fn conflicts(&self) -> u64 {
        self.oracle.conflicts()
    }
}

fn verified(env: &Cnf, assumptions: &[Lit], model: Vec<bool>) -> SatResult {
    let value = |v: u32| model.get(v as usize).copied().unwrap_or(false);
    debug_assert!(env.is_satisfied_by(&value));
    debug_assert!(assumptions.iter().all(|l| l.eval(value(l.var()))));
    SatResult {
        status: SatStatus::Sat,
        model: Some(model),
    }
}

/// One-shot solve with the embedded solver.
pub fn solve(env: &Cnf, assumptions: &[Lit], budget: &Budget) -> SatResult {
    let mut s = Solver::default();
    s.ensure_vars(env.num_vars());
    for c in env.clauses() {
        s.add_clause(c);
    }
    match s.solve(assumptions, budget) {
        SatStatus::Sat => verified(env, assumptions, s.model().to_vec()),
        status => SatResult {
            status,
            model: None,
        },
    }
}

/// One-shot solve through an external DIMACS solver.
pub fn solve_external(
    env: &Cnf,
    program: &std::path::Path,
    args: &[String],
    assumptions: &[Lit],
    budget: &Budget,
) -> Result<SatResult, SatError> {
    let mut s = ExternalSolver::new(program.to_path_buf(), args.to_vec());
    for c in env.clauses() {
        SatOracle::add_clause(&mut s, c);
    }
    Ok(match s.solve_under(assumptions, budget)? {
        SatStatus::Sat => verified(env, assumptions, s.model()),
        status => SatResult {
            status,
            model: None,
        },
    })
}
