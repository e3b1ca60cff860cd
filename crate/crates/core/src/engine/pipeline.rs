//! Per-output pipeline: optimum search, extraction, verification.

use std::time::Instant;

use crate::aig::FunctionCone;
use crate::sat::Budget;

use super::{extract_subfunctions, find_optimum, verify, Objective, Op, OptResult, OptStatus, SearchOptions, Verdict};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub op: Op,
    pub objective: Objective,
    pub search: SearchOptions,
    pub verify_budget: Budget,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            op: Op::Or,
            objective: Objective::weighted(1.0, 1.0),
            search: SearchOptions::default(),
            verify_budget: Budget::unlimited(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoStatus {
    /// Fewer than two support variables.
    Skipped,
    Decomposed,
    NotDecomposable,
    Unknown,
    /// Internal failure, including a decomposition that did not verify.
    Failed,
}

impl PoStatus {
    pub fn label(self) -> &'static str {
        match self {
            PoStatus::Skipped => "SKIPPED",
            PoStatus::Decomposed => "FOUND",
            PoStatus::NotDecomposable => "INFEASIBLE",
            PoStatus::Unknown => "UNKNOWN",
            PoStatus::Failed => "FAILED",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PoOutcome {
    pub name: String,
    pub support: usize,
    pub status: PoStatus,
    pub result: Option<OptResult>,
    pub sub_functions: Option<(FunctionCone, FunctionCone)>,
    pub verify: Option<Verdict>,
    pub seconds: f64,
    pub error: Option<String>,
}

pub fn decompose_cone(name: &str, f: &FunctionCone, opts: &RunOptions) -> PoOutcome {
    let start = Instant::now();
    let mut out = PoOutcome {
        name: name.to_string(),
        support: f.support().len(),
        status: PoStatus::Skipped,
        result: None,
        sub_functions: None,
        verify: None,
        seconds: 0.0,
        error: None,
    };
    if out.support >= 2 {
        if let Err(e) = run(f, opts, &mut out) {
            out.status = PoStatus::Failed;
            out.error = Some(e.to_string());
        }
    }
    out.seconds = start.elapsed().as_secs_f64();
    out
}

fn run(f: &FunctionCone, opts: &RunOptions, out: &mut PoOutcome) -> Result<(), super::EngineError> {
    let r = find_optimum(f, opts.op, opts.objective, &opts.search)?;
    out.status = match r.status {
        OptStatus::Found => PoStatus::Decomposed,
        OptStatus::Infeasible => PoStatus::NotDecomposable,
        OptStatus::Unknown => PoStatus::Unknown,
    };
    if let Some(p) = &r.partition {
        let (fa, fb) = extract_subfunctions(f, p, opts.op)?;
        let budget = opts.verify_budget.with_deadline(opts.search.deadline);
        let v = verify(f, &fa, &fb, opts.op, &budget, &opts.search.backend)?;
        out.verify = Some(v.verdict);
        match v.verdict {
            Verdict::Yes => {}
            Verdict::No => {
                out.status = PoStatus::Failed;
                out.error = Some("extracted sub-functions do not reproduce the function".into());
            }
            Verdict::Unknown => out.status = PoStatus::Unknown,
        }
        out.sub_functions = Some((fa, fb));
    }
    out.result = Some(r);
    Ok(())
}
