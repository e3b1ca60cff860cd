//! Bi-decomposition on top of the partition search: fixed-partition checks,
//! optimum search over the target bound, sub-function extraction and
//! SAT-based verification.

mod pipeline;
mod search;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::aig::{AigError, FunctionCone, Quantifier, Var, DEFAULT_NODE_LIMIT};
use crate::cnf::{tseitin, Cnf, Lit};
use crate::qbf::{build_matrix, ControlAssignment, QbfError};
use crate::sat::{Backend, Budget, IncrementalSolver, SatError, SatStatus};

pub use crate::qbf::Op;
pub use pipeline::{decompose_cone, PoOutcome, PoStatus, RunOptions};
pub use search::{
    bootstrap_upper_bound, find_optimum, FeasibilityOracle, KRecord, KStatus, OptResult, OptStatus,
    SearchOptions, Strategy,
};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("partition is trivial: X_A and X_B must both be non-empty")]
    TrivialPartition,
    #[error("not a partition of the support: {0}")]
    NotAPartition(String),
    #[error("support size must be positive")]
    EmptySupport,
    #[error(transparent)]
    Qbf(#[from] QbfError),
    #[error(transparent)]
    Aig(#[from] AigError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Cnf(#[from] crate::cnf::CnfError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "YES",
            Verdict::No => "NO",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Partition {
    pub xa: Vec<Var>,
    pub xb: Vec<Var>,
    pub xc: Vec<Var>,
    pub dropped: Vec<Var>,
}

impl Partition {
    pub fn is_trivial(&self) -> bool {
        self.xa.is_empty() || self.xb.is_empty()
    }

    /// Checks that the blocks are disjoint and cover exactly `support`.
    pub fn validate(&self, support: &[Var]) -> Result<(), EngineError> {
        let mut seen: HashMap<Var, &str> = HashMap::new();
        for (block, vars) in [("A", &self.xa), ("B", &self.xb), ("C", &self.xc), ("dropped", &self.dropped)] {
            for v in vars {
                if let Some(other) = seen.insert(*v, block) {
                    return Err(EngineError::NotAPartition(format!(
                        "variable {} appears in both {other} and {block}",
                        v.0
                    )));
                }
                if !support.contains(v) {
                    return Err(EngineError::NotAPartition(format!("variable {} is not in the support", v.0)));
                }
            }
        }
        if let Some(v) = support.iter().find(|v| !seen.contains_key(v)) {
            return Err(EngineError::NotAPartition(format!("variable {} is not assigned to a block", v.0)));
        }
        if self.is_trivial() {
            return Err(EngineError::TrivialPartition);
        }
        Ok(())
    }

    /// Control assignment over `support` order.
    pub fn controls(&self, support: &[Var]) -> ControlAssignment {
        let in_a = |v: &Var| self.xa.contains(v) || self.dropped.contains(v);
        let in_b = |v: &Var| self.xb.contains(v) || self.dropped.contains(v);
        ControlAssignment {
            alpha: support.iter().map(in_a).collect(),
            beta: support.iter().map(in_b).collect(),
        }
    }

    pub fn display<'a>(&'a self, f: &'a FunctionCone) -> impl fmt::Display + 'a {
        PartitionDisplay { p: self, f }
    }
}

struct PartitionDisplay<'a> {
    p: &'a Partition,
    f: &'a FunctionCone,
}

impl fmt::Display for PartitionDisplay<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |vs: &[Var]| vs.iter().map(|&v| self.f.var_name(v)).collect::<Vec<_>>().join(",");
        write!(out, "{}|{}|{}", names(&self.p.xa), names(&self.p.xb), names(&self.p.xc))?;
        if !self.p.dropped.is_empty() {
            write!(out, " (dropped {})", names(&self.p.dropped))?;
        }
        Ok(())
    }
}

pub fn decode_partition(support: &[Var], cand: &ControlAssignment) -> Partition {
    let mut p = Partition::default();
    for (i, &v) in support.iter().enumerate() {
        match (cand.alpha[i], cand.beta[i]) {
            (true, false) => p.xa.push(v),
            (false, true) => p.xb.push(v),
            (false, false) => p.xc.push(v),
            (true, true) => p.dropped.push(v),
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Disjointness,
    Balancedness,
    WeightedSum,
}

impl FromStr for ObjectiveKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "d" | "disjointness" => Ok(ObjectiveKind::Disjointness),
            "b" | "balancedness" => Ok(ObjectiveKind::Balancedness),
            "db" | "bd" | "sum" | "weighted" => Ok(ObjectiveKind::WeightedSum),
            _ => Err(format!("unknown objective {s:?} (expected d, b, db)")),
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Disjointness => "d",
            ObjectiveKind::Balancedness => "b",
            ObjectiveKind::WeightedSum => "db",
        })
    }
}

/// Optimization target. Weights only matter for `WeightedSum`; the search
/// works on the integer-scaled cost `wd·|X_C| + wb·(|X_A| − |X_B|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub weight_d: f64,
    pub weight_b: f64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Objective {
    pub fn new(kind: ObjectiveKind) -> Self {
        Objective {
            kind,
            weight_d: 1.0,
            weight_b: 1.0,
        }
    }

    pub fn disjointness() -> Self {
        Self::new(ObjectiveKind::Disjointness)
    }

    pub fn balancedness() -> Self {
        Self::new(ObjectiveKind::Balancedness)
    }

    pub fn weighted(weight_d: f64, weight_b: f64) -> Self {
        Objective {
            kind: ObjectiveKind::WeightedSum,
            weight_d,
            weight_b,
        }
    }

    /// Smallest integer pair proportional to the weights (denominators up
    /// to 1000; finer weights are rounded).
    pub fn integer_weights(&self) -> (usize, usize) {
        match self.kind {
            ObjectiveKind::Disjointness => (1, 0),
            ObjectiveKind::Balancedness => (0, 1),
            ObjectiveKind::WeightedSum => {
                let (wd, wb) = (self.weight_d.clamp(0.0, 1.0), self.weight_b.clamp(0.0, 1.0));
                let den = (1..=1000u64)
                    .find(|&d| {
                        let close = |w: f64| ((w * d as f64) - (w * d as f64).round()).abs() < 1e-9;
                        close(wd) && close(wb)
                    })
                    .unwrap_or(1000);
                let (a, b) = (
                    (wd * den as f64).round() as u64,
                    (wb * den as f64).round() as u64,
                );
                match gcd(a, b) {
                    0 => (0, 0),
                    g => ((a / g) as usize, (b / g) as usize),
                }
            }
        }
    }

    /// Cost of a partition in the search's integer units.
    pub fn cost_units(&self, p: &Partition) -> usize {
        let (wd, wb) = self.integer_weights();
        wd * p.xc.len() + wb * p.xa.len().abs_diff(p.xb.len())
    }

    /// Largest cost any partition of `n` variables can have.
    pub fn max_cost(&self, n: usize) -> usize {
        let (wd, wb) = self.integer_weights();
        wd.max(wb) * n
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub disjointness: f64,
    pub balancedness: f64,
}

impl Metrics {
    pub fn cost(&self, weight_d: f64, weight_b: f64) -> f64 {
        weight_d * self.disjointness + weight_b * self.balancedness
    }
}

/// ε_D = |X_C|/n and ε_B = ||X_A| − |X_B||/n.
pub fn metrics(p: &Partition, n: usize) -> Result<Metrics, EngineError> {
    if n == 0 {
        return Err(EngineError::EmptySupport);
    }
    Ok(Metrics {
        disjointness: p.xc.len() as f64 / n as f64,
        balancedness: p.xa.len().abs_diff(p.xb.len()) as f64 / n as f64,
    })
}

/// Result of an inner check. `witness` lists the function copies (base,
/// A-relaxed, B-relaxed, and for XOR the doubly relaxed one) over the support.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub verdict: Verdict,
    pub witness: Option<Vec<Vec<bool>>>,
}

pub fn check_fixed_partition(
    f: &FunctionCone,
    part: &Partition,
    op: Op,
    budget: &Budget,
    backend: &Backend,
) -> Result<CheckResult, EngineError> {
    part.validate(f.support())?;
    let mut env = Cnf::new();
    let m = build_matrix(f, op, &mut env)?;
    let cand = part.controls(&m.support);
    let mut solver = IncrementalSolver::new(backend);
    let status = solver.solve(&env, &m.controls.assumptions(&cand), budget)?;
    Ok(match status {
        SatStatus::Unsat => CheckResult {
            verdict: Verdict::Yes,
            witness: None,
        },
        SatStatus::Unknown => CheckResult {
            verdict: Verdict::Unknown,
            witness: None,
        },
        SatStatus::Sat => {
            let mut copies = vec![&m.base, &m.copy_a, &m.copy_b];
            if let Some(ab) = &m.copy_ab {
                copies.push(ab);
            }
            let witness = copies
                .into_iter()
                .map(|c| c.iter().map(|&l| solver.value(l)).collect())
                .collect();
            CheckResult {
                verdict: Verdict::No,
                witness: Some(witness),
            }
        }
    })
}

fn union(a: &[Var], b: &[Var]) -> Vec<Var> {
    let mut v: Vec<Var> = a.iter().chain(b).copied().collect();
    v.sort();
    v.dedup();
    v
}

/// Constructs f_A and f_B for a partition known to be valid.
/// OR: universal quantification of the other block; AND: the dual;
/// XOR: f_A = f|B=0, f_B = f|A=0 ⊕ f|A=B=0 (dropped variables fixed to 0).
pub fn extract_subfunctions(
    f: &FunctionCone,
    part: &Partition,
    op: Op,
) -> Result<(FunctionCone, FunctionCone), EngineError> {
    let not_a = union(&part.xb, &part.dropped);
    let not_b = union(&part.xa, &part.dropped);
    Ok(match op {
        Op::Or => (
            f.quantify(&not_a, Quantifier::Forall, DEFAULT_NODE_LIMIT)?,
            f.quantify(&not_b, Quantifier::Forall, DEFAULT_NODE_LIMIT)?,
        ),
        Op::And => (
            f.quantify(&not_a, Quantifier::Exists, DEFAULT_NODE_LIMIT)?,
            f.quantify(&not_b, Quantifier::Exists, DEFAULT_NODE_LIMIT)?,
        ),
        Op::Xor => {
            let zero = |vs: &[Var]| vs.iter().map(|&v| (v, false)).collect::<Vec<_>>();
            let fa = f.substitute_constants(&zero(&not_a));
            let b_part = f.substitute_constants(&zero(&not_b));
            let corner = f.substitute_constants(&zero(&union(&not_b, &part.xb)));
            let fb = FunctionCone::compose(crate::aig::Gate::Xor, &[&b_part, &corner])?;
            (fa, fb)
        }
    })
}

#[derive(Clone, Debug)]
pub struct VerifyResult {
    pub verdict: Verdict,
    /// Distinguishing assignment when the verdict is `No`.
    pub counterexample: Option<Vec<(Var, bool)>>,
}

/// Miter check of f ≡ f_A op f_B.
pub fn verify(
    f: &FunctionCone,
    fa: &FunctionCone,
    fb: &FunctionCone,
    op: Op,
    budget: &Budget,
    backend: &Backend,
) -> Result<VerifyResult, EngineError> {
    let vars = union(&union(f.support(), fa.support()), fb.support());
    let mut env = Cnf::new();
    let bind: HashMap<Var, Lit> = vars.iter().map(|&v| (v, env.fresh())).collect();
    let o = tseitin(f, &mut env, &bind)?;
    let a = tseitin(fa, &mut env, &bind)?;
    let b = tseitin(fb, &mut env, &bind)?;
    let g = match op {
        Op::Or => !env.define_and(!a, !b),
        Op::And => env.define_and(a, b),
        Op::Xor => env.define_xor(a, b),
    };
    let diff = env.define_xor(o, g);
    env.add_clause(&[diff]);
    let mut solver = IncrementalSolver::new(backend);
    Ok(match solver.solve(&env, &[], budget)? {
        SatStatus::Unsat => VerifyResult {
            verdict: Verdict::Yes,
            counterexample: None,
        },
        SatStatus::Unknown => VerifyResult {
            verdict: Verdict::Unknown,
            counterexample: None,
        },
        SatStatus::Sat => VerifyResult {
            verdict: Verdict::No,
            counterexample: Some(vars.iter().map(|v| (*v, solver.value(bind[v]))).collect()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{Gate, TruthTable};
    use std::sync::Arc;

    fn names(n: usize) -> Arc<[String]> {
        ["a", "b", "c", "d"][..n].iter().map(|s| s.to_string()).collect::<Vec<_>>().into()
    }

    fn vars(n: usize) -> Vec<FunctionCone> {
        let ns = names(n);
        (0..n).map(|i| FunctionCone::variable(Var(i as u32), ns.clone())).collect()
    }

    fn gate(g: Gate, args: &[&FunctionCone]) -> FunctionCone {
        FunctionCone::compose(g, args).unwrap()
    }

    fn part(xa: &[u32], xb: &[u32], xc: &[u32]) -> Partition {
        let v = |xs: &[u32]| xs.iter().map(|&i| Var(i)).collect();
        Partition {
            xa: v(xa),
            xb: v(xb),
            xc: v(xc),
            dropped: vec![],
        }
    }

    fn check(f: &FunctionCone, p: &Partition, op: Op) -> Verdict {
        check_fixed_partition(f, p, op, &Budget::unlimited(), &Backend::default())
            .unwrap()
            .verdict
    }

    fn maj() -> FunctionCone {
        let tt = TruthTable::from_fn(3, |i| (i as u32).count_ones() >= 2);
        FunctionCone::from_truth_table(&[Var(0), Var(1), Var(2)], &tt, names(3))
    }

    fn tt(f: &FunctionCone, n: usize) -> String {
        let vs: Vec<Var> = (0..n as u32).map(Var).collect();
        f.truth_table_over(&vs, 10).unwrap().to_string()
    }

    #[test]
    fn fixed_partition_examples() {
        let x = vars(3);
        let or = gate(Gate::Or, &[&x[0], &x[1]]);
        assert_eq!(check(&or, &part(&[0], &[1], &[]), Op::Or), Verdict::Yes);
        assert_eq!(check(&maj(), &part(&[0], &[1], &[2]), Op::Or), Verdict::No);
        let xor3 = gate(Gate::Xor, &[&x[0], &x[1], &x[2]]);
        assert_eq!(check(&xor3, &part(&[0], &[1, 2], &[]), Op::Xor), Verdict::Yes);
    }

    #[test]
    fn majority_witness_is_genuine() {
        let r = check_fixed_partition(&maj(), &part(&[0], &[1], &[2]), Op::Or, &Budget::unlimited(), &Backend::default())
            .unwrap();
        let w = r.witness.unwrap();
        let f = maj();
        let eval = |bits: &[bool]| f.eval(&|v| bits[v.index()]);
        assert!(eval(&w[0]) && !eval(&w[1]) && !eval(&w[2]));
        assert_eq!(w[0][2], w[1][2]);
        assert_eq!(w[0][2], w[2][2]);
    }

    #[test]
    fn trivial_and_malformed_partitions_rejected() {
        let x = vars(2);
        let or = gate(Gate::Or, &[&x[0], &x[1]]);
        let err = check_fixed_partition(&or, &part(&[0, 1], &[], &[]), Op::Or, &Budget::unlimited(), &Backend::default());
        assert!(matches!(err, Err(EngineError::TrivialPartition)));
        let err = check_fixed_partition(&or, &part(&[0], &[0, 1], &[]), Op::Or, &Budget::unlimited(), &Backend::default());
        assert!(matches!(err, Err(EngineError::NotAPartition(_))));
        let err = check_fixed_partition(&or, &part(&[0], &[], &[]), Op::Or, &Budget::unlimited(), &Backend::default());
        assert!(matches!(err, Err(EngineError::NotAPartition(_))));
    }

    #[test]
    fn decode_examples() {
        let s = [Var(0), Var(1), Var(2)];
        let c = ControlAssignment {
            alpha: vec![true, false, false],
            beta: vec![false, true, false],
        };
        assert_eq!(decode_partition(&s, &c), part(&[0], &[1], &[2]));
        let c = ControlAssignment {
            alpha: vec![true, true],
            beta: vec![true, false],
        };
        let p = decode_partition(&s[..2], &c);
        assert_eq!(p.dropped, vec![Var(0)]);
        assert_eq!(p.xa, vec![Var(1)]);
        let c = ControlAssignment {
            alpha: vec![false; 3],
            beta: vec![false; 3],
        };
        assert_eq!(decode_partition(&s, &c).xc, s.to_vec());
        let p = part(&[0], &[1], &[2]);
        assert_eq!(decode_partition(&s, &p.controls(&s)), p);
    }

    #[test]
    fn extraction_examples() {
        let x = vars(4);
        let ab = gate(Gate::And, &[&x[0], &x[1]]);
        let cd = gate(Gate::And, &[&x[2], &x[3]]);
        let f = gate(Gate::Or, &[&ab, &cd]);
        let (fa, fb) = extract_subfunctions(&f, &part(&[0, 1], &[2, 3], &[]), Op::Or).unwrap();
        assert_eq!(tt(&fa, 4), tt(&ab, 4));
        assert_eq!(tt(&fb, 4), tt(&cd, 4));

        let xor3 = gate(Gate::Xor, &[&x[0], &x[1], &x[2]]);
        let (fa, fb) = extract_subfunctions(&xor3, &part(&[0], &[1], &[2]), Op::Xor).unwrap();
        assert_eq!(tt(&fa, 3), tt(&gate(Gate::Xor, &[&x[0], &x[2]]), 3));
        assert_eq!(tt(&fb, 3), tt(&x[1], 3));

        let nor = gate(Gate::Or, &[&x[0], &x[1]]).not();
        let (fa, fb) = extract_subfunctions(&nor, &part(&[0], &[1], &[]), Op::And).unwrap();
        assert_eq!(tt(&fa, 2), tt(&x[0].not(), 2));
        assert_eq!(tt(&fb, 2), tt(&x[1].not(), 2));

        for (g, fa, fb, op) in [(&f, &ab, &cd, Op::Or), (&nor, &x[0].not(), &x[1].not(), Op::And)] {
            let r = verify(g, fa, fb, op, &Budget::unlimited(), &Backend::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Yes);
        }
    }

    #[test]
    fn forged_decomposition_rejected() {
        let x = vars(2);
        let or = gate(Gate::Or, &[&x[0], &x[1]]);
        let r = verify(&or, &x[0], &x[0], Op::Or, &Budget::unlimited(), &Backend::default()).unwrap();
        assert_eq!(r.verdict, Verdict::No);
        assert_eq!(r.counterexample.unwrap(), vec![(Var(0), false), (Var(1), true)]);
    }

    #[test]
    fn metrics_examples() {
        let p = Partition {
            xc: (0..2).map(Var).collect(),
            ..Partition::default()
        };
        assert!((metrics(&p, 10).unwrap().disjointness - 0.2).abs() < 1e-12);
        let p = part(&[0, 1], &[2, 3], &[]);
        assert_eq!(metrics(&p, 4).unwrap().balancedness, 0.0);
        let p = part(&[1, 2], &[3], &[4]);
        let m = metrics(&p, 4).unwrap();
        assert_eq!((m.disjointness, m.balancedness), (0.25, 0.25));
        assert!((m.cost(1.0, 1.0) - 0.5).abs() < 1e-12);
        assert!(matches!(metrics(&p, 0), Err(EngineError::EmptySupport)));
    }

    #[test]
    fn weight_scaling() {
        assert_eq!(Objective::weighted(1.0, 1.0).integer_weights(), (1, 1));
        assert_eq!(Objective::weighted(0.5, 1.0).integer_weights(), (1, 2));
        assert_eq!(Objective::weighted(0.3, 0.2).integer_weights(), (3, 2));
        assert_eq!(Objective::weighted(0.0, 0.7).integer_weights(), (0, 1));
        assert_eq!(Objective::disjointness().integer_weights(), (1, 0));
    }
}
