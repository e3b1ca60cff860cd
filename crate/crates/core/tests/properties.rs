mod common;

use std::collections::HashMap;

use bidec::aig::{FunctionCone, Quantifier, Var, DEFAULT_NODE_LIMIT};
use bidec::cnf::{tseitin, Cnf};
use bidec::engine::{
    extract_subfunctions, find_optimum, FeasibilityOracle, KStatus, Objective, Op, OptStatus, SearchOptions,
    Strategy as SearchStrategy,
};
use bidec::sat::{solve, Budget, SatStatus};
use proptest::prelude::*;

use common::{cone_from_bits, reproduces, table_over, vars};

fn function(n: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), 1 << n)
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![Just(Op::Or), Just(Op::And), Just(Op::Xor)]
}

fn objective() -> impl Strategy<Value = Objective> {
    prop_oneof![
        Just(Objective::disjointness()),
        Just(Objective::balancedness()),
        Just(Objective::weighted(1.0, 1.0)),
        Just(Objective::weighted(0.25, 1.0)),
    ]
}

fn nontrivial(bits: &[bool]) -> bool {
    cone_from_bits(bits.len().trailing_zeros() as usize, bits).support().len() >= 2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quantifiers_bracket_the_function(bits in function(4), v in 0u32..4) {
        let f = cone_from_bits(4, &bits);
        prop_assume!(f.support().contains(&Var(v)));
        let all = vars(4);
        let lo = table_over(&f.quantify(&[Var(v)], Quantifier::Forall, DEFAULT_NODE_LIMIT).unwrap(), &all);
        let hi = table_over(&f.quantify(&[Var(v)], Quantifier::Exists, DEFAULT_NODE_LIMIT).unwrap(), &all);
        for x in 0..16 {
            prop_assert!(!lo[x] || bits[x]);
            prop_assert!(!bits[x] || hi[x]);
        }
    }

    #[test]
    fn quantifier_order_is_irrelevant(bits in function(5)) {
        let f = cone_from_bits(5, &bits);
        let s = f.support().to_vec();
        prop_assume!(s.len() >= 2);
        let (a, b) = (s[0], s[s.len() - 1]);
        let all = vars(5);
        for q in [Quantifier::Forall, Quantifier::Exists] {
            let ab = f.quantify(&[a, b], q, DEFAULT_NODE_LIMIT).unwrap();
            let ba = f.quantify(&[b, a], q, DEFAULT_NODE_LIMIT).unwrap();
            prop_assert_eq!(table_over(&ab, &all), table_over(&ba, &all));
        }
    }

    #[test]
    fn cofactors_commute(bits in function(4), va in any::<bool>(), vb in any::<bool>()) {
        let f = cone_from_bits(4, &bits);
        let all = vars(4);
        let g = f.substitute_constants(&[(Var(0), va)]).substitute_constants(&[(Var(2), vb)]);
        let h = f.substitute_constants(&[(Var(2), vb)]).substitute_constants(&[(Var(0), va)]);
        prop_assert_eq!(table_over(&g, &all), table_over(&h, &all));
        let t = table_over(&g, &all);
        for x in 0..16usize {
            let y = (x & !0b1010) | (usize::from(va) << 3) | (usize::from(vb) << 1);
            prop_assert_eq!(t[x], bits[y]);
        }
    }

    #[test]
    fn tseitin_output_follows_inputs(bits in function(4), x in 0usize..16) {
        let f = cone_from_bits(4, &bits);
        let mut env = Cnf::new();
        let bind: HashMap<Var, _> = vars(4).into_iter().map(|v| (v, env.fresh())).collect();
        let out = tseitin(&f, &mut env, &bind).unwrap();
        let mut assumptions: Vec<_> = (0..4)
            .map(|j| {
                let l = bind[&Var(j as u32)];
                if x >> (3 - j) & 1 == 1 { l } else { !l }
            })
            .collect();
        assumptions.push(if bits[x] { !out } else { out });
        prop_assert_eq!(solve(&env, &assumptions, &Budget::unlimited()).status, SatStatus::Unsat);
    }

    #[test]
    fn feasibility_is_monotone_in_k(bits in function(4), op in op(), objective in objective()) {
        prop_assume!(nontrivial(&bits));
        let f = cone_from_bits(4, &bits);
        let mut oracle = FeasibilityOracle::new(&f, op, objective, &SearchOptions::default()).unwrap();
        let ub = objective.max_cost(f.support().len());
        let mut seen = false;
        for k in 0..=ub {
            let (rec, _) = oracle.query(k, &Budget::unlimited()).unwrap();
            prop_assert_ne!(rec.status, KStatus::Unknown);
            let found = rec.status == KStatus::Found;
            prop_assert!(found || !seen, "k={} infeasible after a feasible bound", k);
            seen |= found;
        }
    }

    #[test]
    fn and_is_dual_to_or(bits in function(4), objective in objective()) {
        prop_assume!(nontrivial(&bits));
        let f = cone_from_bits(4, &bits);
        let opts = SearchOptions::default();
        let and = find_optimum(&f, Op::And, objective, &opts).unwrap();
        let or = find_optimum(&f.not(), Op::Or, objective, &opts).unwrap();
        prop_assert_eq!((and.status, and.best_k), (or.status, or.best_k));
    }

    #[test]
    fn symmetry_breaking_keeps_the_optimum(bits in function(4), op in op(), objective in objective()) {
        prop_assume!(nontrivial(&bits));
        let f = cone_from_bits(4, &bits);
        let on = find_optimum(&f, op, objective, &SearchOptions::default()).unwrap();
        let off = SearchOptions { symmetry_breaking: false, ..SearchOptions::default() };
        let off = find_optimum(&f, op, objective, &off).unwrap();
        prop_assert_eq!((on.status, on.best_k), (off.status, off.best_k));
    }

    #[test]
    fn strategies_agree_and_results_verify(bits in function(5), op in op(), objective in objective()) {
        prop_assume!(nontrivial(&bits));
        let f = cone_from_bits(5, &bits);
        let mut answers = Vec::new();
        for strategy in [SearchStrategy::Mi, SearchStrategy::Md, SearchStrategy::Bin, SearchStrategy::Hybrid] {
            for probe in [false, true] {
                let opts = SearchOptions { strategy, bootstrap_probe: probe, ..SearchOptions::default() };
                let r = find_optimum(&f, op, objective, &opts).unwrap();
                prop_assert_ne!(r.status, OptStatus::Unknown);
                if let Some(p) = &r.partition {
                    prop_assert!(r.optimal);
                    let (fa, fb) = extract_subfunctions(&f, p, op).unwrap();
                    prop_assert!(reproduces(&f, &fa, &fb, op));
                    prop_assert!(r.best_k.unwrap() <= r.upper_bound);
                }
                answers.push((r.status, r.best_k));
            }
        }
        prop_assert!(answers.windows(2).all(|w| w[0] == w[1]), "{:?}", answers);
    }
}

#[test]
fn quantifying_everything_gives_constants() {
    let f: FunctionCone = cone_from_bits(3, &[false, true, true, true, false, false, true, false]);
    let s = f.support().to_vec();
    let all = f.quantify(&s, Quantifier::Forall, DEFAULT_NODE_LIMIT).unwrap();
    assert_eq!(all.is_const(), Some(false));
    let any = f.quantify(&s, Quantifier::Exists, DEFAULT_NODE_LIMIT).unwrap();
    assert_eq!(any.is_const(), Some(true));
}
