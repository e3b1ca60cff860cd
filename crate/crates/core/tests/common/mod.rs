#![allow(dead_code)]

use std::sync::Arc;

use bidec::aig::{FunctionCone, TruthTable, Var};
use bidec::engine::Op;
use rand::Rng;

pub fn names(n: usize) -> Arc<[String]> {
    (0..n).map(|i| format!("x{i}")).collect::<Vec<_>>().into()
}

pub fn vars(n: usize) -> Vec<Var> {
    (0..n as u32).map(Var).collect()
}

/// Cone over `x0..x{n-1}`; bit `n-1-j` of the index is the value of `x_j`.
pub fn cone_from_fn(n: usize, f: impl Fn(usize) -> bool) -> FunctionCone {
    FunctionCone::from_truth_table(&vars(n), &TruthTable::from_fn(n, f), names(n))
}

pub fn cone_from_bits(n: usize, bits: &[bool]) -> FunctionCone {
    cone_from_fn(n, |i| bits[i])
}

/// Truth table of `f` over its own support; index bit `m-1-j` is support[j].
pub fn table(f: &FunctionCone) -> Vec<bool> {
    let t = f.truth_table().unwrap();
    (0..t.len()).map(|i| t.get(i)).collect()
}

/// Truth table of `g` over the variable order `vars`.
pub fn table_over(g: &FunctionCone, vars: &[Var]) -> Vec<bool> {
    let t = g.truth_table_over(vars, 16).unwrap();
    (0..t.len()).map(|i| t.get(i)).collect()
}

pub fn apply(op: Op, a: bool, b: bool) -> bool {
    match op {
        Op::Or => a || b,
        Op::And => a && b,
        Op::Xor => a ^ b,
    }
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub label: String,
    pub n: usize,
    pub bits: Vec<bool>,
}

impl Sample {
    pub fn cone(&self) -> FunctionCone {
        cone_from_bits(self.n, &self.bits)
    }
}

fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<bool> {
    (0..1usize << n).map(|_| rng.random::<bool>()).collect()
}

/// `g(X_A ∪ X_C) op h(X_B ∪ X_C)` with random `g`, `h` over a random
/// partition; `|X_A|, |X_B| ≥ 1`.
fn planted(rng: &mut impl Rng, n: usize, op: Op) -> Vec<bool> {
    let mut block = vec![0u8; n];
    loop {
        for b in block.iter_mut() {
            *b = rng.random_range(0..3);
        }
        if block.contains(&0) && block.contains(&1) {
            break;
        }
    }
    let project = |keep: &dyn Fn(u8) -> bool| -> Vec<usize> { (0..n).filter(|&j| keep(block[j])).collect() };
    let ga = project(&|b| b != 1);
    let hb = project(&|b| b != 0);
    let g = random_bits(rng, ga.len());
    let h = random_bits(rng, hb.len());
    let sub = |x: usize, vs: &[usize]| {
        vs.iter().fold(0usize, |acc, &j| acc << 1 | (x >> (n - 1 - j) & 1))
    };
    (0..1usize << n)
        .map(|x| apply(op, g[sub(x, &ga)], h[sub(x, &hb)]))
        .collect()
}

/// Deterministic corpus: every third function is a random truth table, the
/// rest are planted decompositions under a rotating operator. Functions whose
/// support falls below `min_n` are redrawn.
pub fn corpus(seed: u64, count: usize, min_n: usize, max_n: usize) -> Vec<Sample> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ops = [Op::Or, Op::And, Op::Xor];
    let mut out = Vec::with_capacity(count);
    let mut i = 0usize;
    while out.len() < count {
        let n = min_n + i % (max_n - min_n + 1);
        let (label, bits) = if i.is_multiple_of(3) {
            (format!("rand{i}"), random_bits(&mut rng, n))
        } else {
            let op = ops[(i / 3) % 3];
            (format!("planted-{op}{i}"), planted(&mut rng, n, op))
        };
        i += 1;
        let s = Sample { label, n, bits };
        if s.cone().support().len() >= min_n.max(2) {
            out.push(s);
        }
    }
    out
}

/// Brute-force optimum over every non-trivial assignment of blocks to the
/// support, checked on the truth table.
pub struct Oracle {
    m: usize,
    f: Vec<bool>,
    dependent: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    A,
    B,
    C,
    Dropped,
}

impl Oracle {
    pub fn new(f: &FunctionCone) -> Self {
        let f = table(f);
        let m = f.len().trailing_zeros() as usize;
        let dependent = (0..m)
            .map(|j| {
                let bit = 1 << (m - 1 - j);
                (0..f.len()).any(|x| f[x] != f[x ^ bit])
            })
            .collect();
        Oracle { m, f, dependent }
    }

    fn bit(&self, j: usize) -> usize {
        1 << (self.m - 1 - j)
    }

    /// `t[S][x]`: `∀S. f` evaluated at `x`, for every variable set `S`.
    fn forall_tables(f: &[bool], m: usize) -> Vec<Vec<bool>> {
        let mut t: Vec<Vec<bool>> = Vec::with_capacity(1 << m);
        t.push(f.to_vec());
        for s in 1usize..1 << m {
            let low = s & s.wrapping_neg();
            let prev = &t[s ^ low];
            let row = (0..f.len()).map(|x| prev[x & !low] && prev[x | low]).collect();
            t.push(row);
        }
        t
    }

    /// Minimum cost per weight pair `(wd, wb)` over all feasible non-trivial
    /// partitions. A variable the function depends on can never take
    /// α = β = 1 (both copies could flip it), so only independent variables
    /// are tried as dropped.
    pub fn optimum(&self, op: Op, weights: &[(usize, usize)]) -> Vec<Option<usize>> {
        let m = self.m;
        let neg: Vec<bool> = self.f.iter().map(|b| !b).collect();
        let tables = match op {
            Op::Or => Some(Self::forall_tables(&self.f, m)),
            Op::And => Some(Self::forall_tables(&neg, m)),
            Op::Xor => None,
        };
        let on = if op == Op::And { &neg } else { &self.f };
        let feasible = |ra: usize, rb: usize| match &tables {
            Some(t) => (0..on.len()).all(|x| !on[x] || t[ra][x] || t[rb][x]),
            None => (0..self.f.len())
                .all(|x| !(self.f[x] ^ self.f[x & !ra] ^ self.f[x & !rb] ^ self.f[x & !(ra | rb)])),
        };
        let mut best = vec![None; weights.len()];
        let mut blocks = vec![Block::C; m];
        self.walk(0, &mut blocks, &mut |blocks| {
            let (mut ra, mut rb, mut na, mut nb, mut nc) = (0, 0, 0usize, 0usize, 0usize);
            for (j, b) in blocks.iter().enumerate() {
                match b {
                    Block::A => {
                        ra |= self.bit(j);
                        na += 1;
                    }
                    Block::B => {
                        rb |= self.bit(j);
                        nb += 1;
                    }
                    Block::C => nc += 1,
                    Block::Dropped => {
                        ra |= self.bit(j);
                        rb |= self.bit(j);
                    }
                }
            }
            if na == 0 || nb == 0 || !feasible(ra, rb) {
                return;
            }
            for (slot, &(wd, wb)) in best.iter_mut().zip(weights) {
                let c = wd * nc + wb * na.abs_diff(nb);
                if slot.is_none_or(|b: usize| c < b) {
                    *slot = Some(c);
                }
            }
        });
        best
    }

    fn walk(&self, j: usize, blocks: &mut Vec<Block>, visit: &mut dyn FnMut(&[Block])) {
        if j == self.m {
            visit(blocks);
            return;
        }
        let choices: &[Block] = if self.dependent[j] {
            &[Block::A, Block::B, Block::C]
        } else {
            &[Block::A, Block::B, Block::C, Block::Dropped]
        };
        for &b in choices {
            blocks[j] = b;
            self.walk(j + 1, blocks, visit);
        }
    }

    /// Same optimum from the raw copy semantics over all 4^m control
    /// assignments, without pruning. Exponential; for m ≤ 5.
    pub fn optimum_raw(&self, op: Op, weights: &[(usize, usize)]) -> Vec<Option<usize>> {
        let m = self.m;
        let full = (1usize << m) - 1;
        let f = &self.f;
        let subsets = |mask: usize| {
            let mut v = vec![0usize];
            let mut s = mask;
            while s != 0 {
                v.push(s);
                s = (s - 1) & mask;
            }
            v
        };
        let mut best = vec![None; weights.len()];
        for code in 0usize..1 << (2 * m) {
            let (mut alpha, mut beta) = (0usize, 0usize);
            for j in 0..m {
                if code >> (2 * j) & 1 == 1 {
                    alpha |= self.bit(j);
                }
                if code >> (2 * j + 1) & 1 == 1 {
                    beta |= self.bit(j);
                }
            }
            let a_only = alpha & !beta;
            let b_only = beta & !alpha;
            let both = alpha & beta;
            let common = full & !alpha & !beta;
            if a_only == 0 || b_only == 0 {
                continue;
            }
            let satisfiable = (0..=full).any(|x| match op {
                Op::Or | Op::And => {
                    let on = |y: usize| if op == Op::Or { f[y] } else { !f[y] };
                    on(x) && subsets(alpha).iter().any(|&s| !on(x & !alpha | s))
                        && subsets(beta).iter().any(|&s| !on(x & !beta | s))
                }
                Op::Xor => subsets(alpha).iter().any(|&sa| {
                    let xa = x & !alpha | sa;
                    subsets(beta).iter().any(|&sb| {
                        let xb = x & !beta | sb;
                        subsets(both).iter().any(|&sd| {
                            let xab = (xa & a_only) | (xb & b_only) | (x & common) | sd;
                            f[x] ^ f[xa] ^ f[xb] ^ f[xab]
                        })
                    })
                }),
            });
            if satisfiable {
                continue;
            }
            let (na, nb, nc) = (
                a_only.count_ones() as usize,
                b_only.count_ones() as usize,
                common.count_ones() as usize,
            );
            for (slot, &(wd, wb)) in best.iter_mut().zip(weights) {
                let c = wd * nc + wb * na.abs_diff(nb);
                if slot.is_none_or(|b: usize| c < b) {
                    *slot = Some(c);
                }
            }
        }
        best
    }
}

/// `f ≡ fa op fb`, by enumeration over the support of `f`.
pub fn reproduces(f: &FunctionCone, fa: &FunctionCone, fb: &FunctionCone, op: Op) -> bool {
    let vs = f.support().to_vec();
    if fa.support().iter().chain(fb.support()).any(|v| !vs.contains(v)) {
        return false;
    }
    let (tf, ta, tb) = (table_over(f, &vs), table_over(fa, &vs), table_over(fb, &vs));
    (0..tf.len()).all(|x| tf[x] == apply(op, ta[x], tb[x]))
}
