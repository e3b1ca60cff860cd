// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use super::{Aig, Edge, Node, Var};

/// Largest support for which truth tables are built by default.
pub const DEFAULT_TRUTH_TABLE_CAP: usize = 20;

/// Truth table over an ordered variable list. Index bit `n-1-j` holds the
/// value of variable `j`, so the first variable is the most significant.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    num_vars: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn zeros(num_vars: usize) -> Self {
        let words = (1usize << num_vars).div_ceil(64);
        TruthTable {
            num_vars,
            words: vec![0; words],
        }
    }

    pub fn from_fn(num_vars: usize, f: impl Fn(usize) -> bool) -> Self {
        let mut t = Self::zeros(num_vars);
        for i in 0..t.len() {
            t.set(i, f(i));
        }
        t
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn len(&self) -> usize {
        1 << self.num_vars
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        let m = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable({})", self)
    }
}

const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Bit-parallel simulation of `root` over every assignment to `vars`.
pub(super) fn simulate(aig: &Aig, root: Edge, vars: &[Var]) -> TruthTable {
    let n = vars.len();
    let mut table = TruthTable::zeros(n);
    let live = aig.reachable(&[root]);
    let mut values = vec![0u64; aig.nodes.len()];
    let used_mask = if n >= 6 { !0 } else { (1u64 << (1 << n)) - 1 };
    for w in 0..table.words.len() {
        for (i, node) in aig.nodes.iter().enumerate() {
            if !live[i] {
                continue;
            }
            values[i] = match *node {
                Node::Const => 0,
                Node::Input(v) => {
                    let j = vars.iter().position(|&u| u == v).expect("var covered");
                    let bit = n - 1 - j;
                    if bit < 6 {
                        LOW_PATTERNS[bit]
                    } else if w >> (bit - 6) & 1 == 1 {
                        !0
                    } else {
                        0
                    }
                }
                Node::And(a, b) => {
                    let va = values[a.node()] ^ if a.is_complemented() { !0 } else { 0 };
                    let vb = values[b.node()] ^ if b.is_complemented() { !0 } else { 0 };
                    va & vb
                }
            };
        }
        let r = values[root.node()] ^ if root.is_complemented() { !0 } else { 0 };
        table.words[w] = r & used_mask;
    }
    table
}
