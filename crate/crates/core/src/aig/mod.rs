// SPDX-License-Identifier: Apache-2.0

//! And-inverter graphs with structural hashing.
//!
//! A [`Circuit`] is the parsed design: named inputs, named outputs and one
//! shared node arena. A [`FunctionCone`] is a single-output function copied
//! out of a circuit into its own compact arena, so cones can be moved across
//! threads and transformed without touching the circuit they came from.

mod aiger;
mod blif;
mod truth;

use std::collections::HashMap;
use std::fmt;
use std::ops::Not;
use std::sync::Arc;

use thiserror::Error;

pub use aiger::{parse_aiger, write_aiger};
pub use blif::{parse_blif, write_blif};
pub use truth::{TruthTable, DEFAULT_TRUTH_TABLE_CAP};

/// Default cap on arena size for quantification and composition.
pub const DEFAULT_NODE_LIMIT: usize = 1 << 22;

/// A primary input of a circuit, identified by its declaration index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Reference to an AIG node with a complement flag in the low bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(u32);

impl Edge {
    pub const FALSE: Edge = Edge(0);
    pub const TRUE: Edge = Edge(1);

    fn new(node: u32, complement: bool) -> Edge {
        Edge(node << 1 | complement as u32)
    }

    pub fn node(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_const(self) -> bool {
        self.node() == 0
    }

    fn complement_if(self, c: bool) -> Edge {
        Edge(self.0 ^ c as u32)
    }
}

impl Not for Edge {
    type Output = Edge;
    fn not(self) -> Edge {
        Edge(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Const,
    Input(Var),
    And(Edge, Edge),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("output index {index} out of range ({count} outputs)")]
    OutputIndex { index: usize, count: usize },
    #[error("variable {0} is not in the support")]
    NotInSupport(String),
    #[error("node limit of {0} exceeded")]
    NodeLimit(usize),
    #[error("support of {support} variables exceeds the truth table cap of {cap}")]
    SupportTooLarge { support: usize, cap: usize },
    #[error("{op} expects {expected} operands, got {got}")]
    Arity {
        op: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("operands come from different variable namespaces")]
    Namespace,
    #[error(transparent)]
    Io(#[from] IoErrorWrapper),
}

/// `std::io::Error` is not `PartialEq`; this keeps the message around.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("i/o error: {0}")]
pub struct IoErrorWrapper(pub String);

impl From<std::io::Error> for AigError {
    fn from(e: std::io::Error) -> Self {
        AigError::Io(IoErrorWrapper(e.to_string()))
    }
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> AigError {
    AigError::Parse {
        line,
        message: message.into(),
    }
}

/// Structurally hashed node arena. Node 0 is constant false; operands of an
/// AND always precede it.
#[derive(Clone, Debug)]
pub struct Aig {
    nodes: Vec<Node>,
    strash: HashMap<(Edge, Edge), u32>,
    inputs: HashMap<Var, u32>,
}

impl Default for Aig {
    fn default() -> Self {
        Self::new()
    }
}

impl Aig {
    pub fn new() -> Self {
        Aig {
            nodes: vec![Node::Const],
            strash: HashMap::new(),
            inputs: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    pub fn node(&self, edge: Edge) -> Node {
        self.nodes[edge.node()]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn input(&mut self, var: Var) -> Edge {
        if let Some(&id) = self.inputs.get(&var) {
            return Edge::new(id, false);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::Input(var));
        self.inputs.insert(var, id);
        Edge::new(id, false)
    }

    fn and_operands(&self, e: Edge) -> Option<(Edge, Edge)> {
        match self.nodes[e.node()] {
            Node::And(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Two-level simplification of `a & b`. `None` means no rule applied.
    fn simplify_two_level(&mut self, a: Edge, b: Edge) -> Option<Edge> {
        for (x, y) in [(a, b), (b, a)] {
            let Some((p, q)) = self.and_operands(x) else {
                continue;
            };
            if !x.is_complemented() {
                // (p & q) & y
                if y == p || y == q {
                    return Some(x);
                }
                if y == !p || y == !q {
                    return Some(Edge::FALSE);
                }
                if let Some((r, s)) = self.and_operands(y) {
                    if !y.is_complemented() && (r == !p || r == !q || s == !p || s == !q) {
                        return Some(Edge::FALSE);
                    }
                }
            } else {
                // !(p & q) & y
                if y == !p || y == !q {
                    return Some(y);
                }
                if y == p {
                    return Some(self.and(y, !q));
                }
                if y == q {
                    return Some(self.and(y, !p));
                }
            }
        }
        None
    }

    pub fn and(&mut self, a: Edge, b: Edge) -> Edge {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == Edge::FALSE || a == !b {
            return Edge::FALSE;
        }
        if a == Edge::TRUE || a == b {
            return b;
        }
        if let Some(&id) = self.strash.get(&(a, b)) {
            return Edge::new(id, false);
        }
        if let Some(e) = self.simplify_two_level(a, b) {
            return e;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::And(a, b));
        self.strash.insert((a, b), id);
        Edge::new(id, false)
    }

    pub fn or(&mut self, a: Edge, b: Edge) -> Edge {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Edge, b: Edge) -> Edge {
        let l = self.and(a, !b);
        let r = self.and(!a, b);
        self.or(l, r)
    }

    /// `if s then t else e`
    pub fn mux(&mut self, s: Edge, t: Edge, e: Edge) -> Edge {
        if t == e {
            return t;
        }
        let l = self.and(s, t);
        let r = self.and(!s, e);
        self.or(l, r)
    }

    /// Marks every node reachable from `roots`.
    pub(crate) fn reachable(&self, roots: &[Edge]) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        for r in roots {
            mark[r.node()] = true;
        }
        for i in (1..self.nodes.len()).rev() {
            if mark[i] {
                if let Node::And(a, b) = self.nodes[i] {
                    mark[a.node()] = true;
                    mark[b.node()] = true;
                }
            }
        }
        mark
    }

    /// Inputs structurally reachable from `root`, sorted by variable.
    pub fn support(&self, root: Edge) -> Vec<Var> {
        let mark = self.reachable(&[root]);
        let mut vars: Vec<Var> = self
            .nodes
            .iter()
            .zip(&mark)
            .filter_map(|(n, &m)| match n {
                Node::Input(v) if m => Some(*v),
                _ => None,
            })
            .collect();
        vars.sort();
        vars
    }

    /// Copies the cones of `roots` into `target`, substituting each input
    /// through `map`. Only reachable nodes are visited.
    pub fn copy_into(
        &self,
        roots: &[Edge],
        target: &mut Aig,
        map: &mut dyn FnMut(Var, &mut Aig) -> Edge,
    ) -> Vec<Edge> {
        let mark = self.reachable(roots);
        let mut image = vec![Edge::FALSE; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if !mark[i] {
                continue;
            }
            image[i] = match *node {
                Node::Const => Edge::FALSE,
                Node::Input(v) => map(v, target),
                Node::And(a, b) => {
                    let a = image[a.node()].complement_if(a.is_complemented());
                    let b = image[b.node()].complement_if(b.is_complemented());
                    target.and(a, b)
                }
            };
        }
        roots
            .iter()
            .map(|r| image[r.node()].complement_if(r.is_complemented()))
            .collect()
    }

    /// Evaluates `root` under `value(var)`.
    pub fn eval(&self, root: Edge, value: &dyn Fn(Var) -> bool) -> bool {
        let mark = self.reachable(&[root]);
        let mut vals = vec![false; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if !mark[i] {
                continue;
            }
            vals[i] = match *node {
                Node::Const => false,
                Node::Input(v) => value(v),
                Node::And(a, b) => {
                    (vals[a.node()] ^ a.is_complemented()) && (vals[b.node()] ^ b.is_complemented())
                }
            };
        }
        vals[root.node()] ^ root.is_complemented()
    }

    /// Number of AND nodes reachable from `roots`.
    pub fn and_count(&self, roots: &[Edge]) -> usize {
        self.reachable(roots)
            .iter()
            .zip(&self.nodes)
            .filter(|(&m, n)| m && matches!(n, Node::And(..)))
            .count()
    }
}

/// A parsed combinational design.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub name: String,
    aig: Aig,
    inputs: Arc<[String]>,
    outputs: Vec<(String, Edge)>,
}

impl Circuit {
    /// Builds a circuit whose input `i` is `Var(i)` named `input_names[i]`.
    pub fn new(name: impl Into<String>, input_names: Vec<String>) -> Self {
        let mut aig = Aig::new();
        for i in 0..input_names.len() {
            aig.input(Var(i as u32));
        }
        Circuit {
            name: name.into(),
            aig,
            inputs: input_names.into(),
            outputs: Vec::new(),
        }
    }

    /// Assembles a circuit from cones sharing one input namespace.
    pub fn from_cones(
        name: impl Into<String>,
        input_names: Arc<[String]>,
        outputs: &[(String, &FunctionCone)],
    ) -> Result<Self, AigError> {
        let mut c = Circuit::new(name, input_names.to_vec());
        c.inputs = input_names;
        for (out, cone) in outputs {
            if cone.names != c.inputs && *cone.names != *c.inputs {
                return Err(AigError::Namespace);
            }
            let root = cone.aig.copy_into(&[cone.root], &mut c.aig, &mut |v, t| t.input(v))[0];
            c.outputs.push((out.clone(), root));
        }
        Ok(c)
    }

    pub fn aig(&self) -> &Aig {
        &self.aig
    }

    pub fn aig_mut(&mut self) -> &mut Aig {
        &mut self.aig
    }

    pub fn input_names(&self) -> &Arc<[String]> {
        &self.inputs
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn input_edge(&mut self, var: Var) -> Edge {
        self.aig.input(var)
    }

    pub fn outputs(&self) -> &[(String, Edge)] {
        &self.outputs
    }

    pub fn add_output(&mut self, name: impl Into<String>, edge: Edge) {
        self.outputs.push((name.into(), edge));
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|(n, _)| n == name)
    }

    pub fn extract_cone(&self, output_index: usize) -> Result<FunctionCone, AigError> {
        let (_, root) = self
            .outputs
            .get(output_index)
            .ok_or(AigError::OutputIndex {
                index: output_index,
                count: self.outputs.len(),
            })?;
        Ok(FunctionCone::from_arena(&self.aig, *root, self.inputs.clone()))
    }

    pub fn cones(&self) -> Vec<FunctionCone> {
        (0..self.outputs.len())
            .map(|i| self.extract_cone(i).expect("index in range"))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    And,
    Or,
    Xor,
    Not,
}

/// A single-output function living in its own compact arena.
#[derive(Clone, Debug)]
pub struct FunctionCone {
    aig: Aig,
    root: Edge,
    support: Vec<Var>,
    names: Arc<[String]>,
}

impl FunctionCone {
    /// Copies the cone of `root` out of `source`.
    pub fn from_arena(source: &Aig, root: Edge, names: Arc<[String]>) -> Self {
        let mut aig = Aig::new();
        let root = source.copy_into(&[root], &mut aig, &mut |v, t| t.input(v))[0];
        let support = aig.support(root);
        FunctionCone {
            aig,
            root,
            support,
            names,
        }
    }

    /// Constant function over the given namespace.
    pub fn constant(value: bool, names: Arc<[String]>) -> Self {
        FunctionCone {
            aig: Aig::new(),
            root: if value { Edge::TRUE } else { Edge::FALSE },
            support: Vec::new(),
            names,
        }
    }

    /// The projection function of `var`.
    pub fn variable(var: Var, names: Arc<[String]>) -> Self {
        let mut aig = Aig::new();
        let root = aig.input(var);
        FunctionCone {
            aig,
            root,
            support: vec![var],
            names,
        }
    }

    /// Shannon expansion of `table` over `vars` (first variable is the most
    /// significant index bit). Shared sub-tables share nodes, so the
    /// structural support equals the semantic support.
    pub fn from_truth_table(vars: &[Var], table: &TruthTable, names: Arc<[String]>) -> Self {
        assert_eq!(table.num_vars(), vars.len(), "table arity mismatch");
        let mut aig = Aig::new();
        let inputs: Vec<Edge> = vars.iter().map(|&v| aig.input(v)).collect();
        fn build(aig: &mut Aig, inputs: &[Edge], table: &TruthTable, lo: usize, len: usize) -> Edge {
            if len == 1 {
                return if table.get(lo) { Edge::TRUE } else { Edge::FALSE };
            }
            let half = len / 2;
            let depth = inputs.len() - half.trailing_zeros() as usize - 1;
            let e0 = build(aig, inputs, table, lo, half);
            let e1 = build(aig, inputs, table, lo + half, half);
            aig.mux(inputs[depth], e1, e0)
        }
        let root = build(&mut aig, &inputs, table, 0, 1 << vars.len());
        Self::from_arena(&aig, root, names)
    }

    pub fn aig(&self) -> &Aig {
        &self.aig
    }

    pub fn root(&self) -> Edge {
        self.root
    }

    pub fn support(&self) -> &[Var] {
        &self.support
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn var_name(&self, v: Var) -> &str {
        self.names.get(v.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn var_by_name(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name).map(|i| Var(i as u32))
    }

    pub fn is_const(&self) -> Option<bool> {
        self.root.is_const().then(|| self.root == Edge::TRUE)
    }

    pub fn and_count(&self) -> usize {
        self.aig.and_count(&[self.root])
    }

    pub fn not(&self) -> FunctionCone {
        FunctionCone {
            root: !self.root,
            ..self.clone()
        }
    }

    /// Evaluates the function; `value` is queried for support variables only.
    pub fn eval(&self, value: &dyn Fn(Var) -> bool) -> bool {
        self.aig.eval(self.root, value)
    }

    fn rebuild(&self, map: &mut dyn FnMut(Var, &mut Aig) -> Edge) -> FunctionCone {
        let mut aig = Aig::new();
        let root = self.aig.copy_into(&[self.root], &mut aig, map)[0];
        FunctionCone::from_arena(&aig, root, self.names.clone())
    }

    pub fn cofactor(&self, var: Var, value: bool) -> Result<FunctionCone, AigError> {
        if self.support.binary_search(&var).is_err() {
            return Err(AigError::NotInSupport(self.var_name(var).to_string()));
        }
        Ok(self.substitute_constants(&[(var, value)]))
    }

    /// Replaces variables by constants; variables outside the support are
    /// ignored.
    pub fn substitute_constants(&self, fixed: &[(Var, bool)]) -> FunctionCone {
        let table: HashMap<Var, bool> = fixed.iter().copied().collect();
        self.rebuild(&mut |v, t| match table.get(&v) {
            Some(true) => Edge::TRUE,
            Some(false) => Edge::FALSE,
            None => t.input(v),
        })
    }

    /// Iterated cofactor combination. Variables are processed in the given
    /// order; the arena may not grow past `node_limit`.
    pub fn quantify(
        &self,
        vars: &[Var],
        mode: Quantifier,
        node_limit: usize,
    ) -> Result<FunctionCone, AigError> {
        for v in vars {
            if self.support.binary_search(v).is_err() {
                return Err(AigError::NotInSupport(self.var_name(*v).to_string()));
            }
        }
        let mut current = self.clone();
        for &v in vars {
            if current.support.binary_search(&v).is_err() {
                continue;
            }
            let mut aig = Aig::new();
            let with = |value: bool, aig: &mut Aig| {
                let c = if value { Edge::TRUE } else { Edge::FALSE };
                current.aig.copy_into(&[current.root], aig, &mut |u, t| {
                    if u == v {
                        c
                    } else {
                        t.input(u)
                    }
                })[0]
            };
            let lo = with(false, &mut aig);
            let hi = with(true, &mut aig);
            let root = match mode {
                Quantifier::Forall => aig.and(lo, hi),
                Quantifier::Exists => aig.or(lo, hi),
            };
            if aig.len() > node_limit {
                return Err(AigError::NodeLimit(node_limit));
            }
            current = FunctionCone::from_arena(&aig, root, self.names.clone());
        }
        Ok(current)
    }

    /// Builds `op` over `args`. NOT takes one operand; AND/OR/XOR take two
    /// or more and fold left.
    pub fn compose(op: Gate, args: &[&FunctionCone]) -> Result<FunctionCone, AigError> {
        let (name, ok, expected) = match op {
            Gate::Not => ("NOT", args.len() == 1, "exactly 1"),
            Gate::And => ("AND", args.len() >= 2, "at least 2"),
            Gate::Or => ("OR", args.len() >= 2, "at least 2"),
            Gate::Xor => ("XOR", args.len() >= 2, "at least 2"),
        };
        if !ok {
            return Err(AigError::Arity {
                op: name,
                expected,
                got: args.len(),
            });
        }
        let names = args[0].names.clone();
        if args.iter().any(|a| *a.names != *names) {
            return Err(AigError::Namespace);
        }
        if op == Gate::Not {
            return Ok(args[0].not());
        }
        let mut aig = Aig::new();
        let roots: Vec<Edge> = args
            .iter()
            .map(|a| a.aig.copy_into(&[a.root], &mut aig, &mut |v, t| t.input(v))[0])
            .collect();
        let mut acc = roots[0];
        for &r in &roots[1..] {
            acc = match op {
                Gate::And => aig.and(acc, r),
                Gate::Or => aig.or(acc, r),
                Gate::Xor => aig.xor(acc, r),
                Gate::Not => unreachable!(),
            };
        }
        Ok(FunctionCone::from_arena(&aig, acc, names))
    }

    pub fn truth_table(&self) -> Result<TruthTable, AigError> {
        self.truth_table_capped(DEFAULT_TRUTH_TABLE_CAP)
    }

    pub fn truth_table_capped(&self, cap: usize) -> Result<TruthTable, AigError> {
        self.truth_table_over(&self.support.clone(), cap)
    }

    /// Truth table over an explicit variable order, which must cover the
    /// support.
    pub fn truth_table_over(&self, vars: &[Var], cap: usize) -> Result<TruthTable, AigError> {
        if vars.len() > cap {
            return Err(AigError::SupportTooLarge {
                support: vars.len(),
                cap,
            });
        }
        for v in &self.support {
            if !vars.contains(v) {
                return Err(AigError::NotInSupport(self.var_name(*v).to_string()));
            }
        }
        Ok(truth::simulate(&self.aig, self.root, vars))
    }
}

impl fmt::Display for FunctionCone {
    /// Prints the cone as a nested expression. Meant for small functions.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(c: &FunctionCone, e: Edge, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let neg = if e.is_complemented() { "!" } else { "" };
            match c.aig.node(e) {
                Node::Const => write!(f, "{}", if e.is_complemented() { "1" } else { "0" }),
                Node::Input(v) => write!(f, "{neg}{}", c.var_name(v)),
                Node::And(a, b) => {
                    write!(f, "{neg}(")?;
                    go(c, a, f)?;
                    write!(f, " & ")?;
                    go(c, b, f)?;
                    write!(f, ")")
                }
            }
        }
        go(self, self.root, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Arc<[String]> {
        (0..n)
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect::<Vec<_>>()
            .into()
    }

    fn var(n: &Arc<[String]>, i: u32) -> FunctionCone {
        FunctionCone::variable(Var(i), n.clone())
    }

    fn tt(c: &FunctionCone, n: usize) -> String {
        let vars: Vec<Var> = (0..n as u32).map(Var).collect();
        c.truth_table_over(&vars, 20).unwrap().to_string()
    }

    #[test]
    fn strash_rules() {
        let mut aig = Aig::new();
        let a = aig.input(Var(0));
        let b = aig.input(Var(1));
        let ab = aig.and(a, b);
        assert_eq!(aig.and(b, a), ab);
        assert_eq!(aig.and(a, !a), Edge::FALSE);
        assert_eq!(aig.and(a, a), a);
        assert_eq!(aig.and(Edge::TRUE, a), a);
        assert_eq!(aig.and(ab, a), ab);
        assert_eq!(aig.and(ab, !b), Edge::FALSE);
        assert_eq!(aig.and(!ab, !a), !a);
        assert_eq!(aig.xor(a, a), Edge::FALSE);
        assert_eq!(!!a, a);
    }

    #[test]
    fn cofactor_examples() {
        let n = names(2);
        let (a, b) = (var(&n, 0), var(&n, 1));
        let ab = FunctionCone::compose(Gate::And, &[&a, &b]).unwrap();
        let c1 = ab.cofactor(Var(1), true).unwrap();
        assert_eq!(c1.support(), &[Var(0)]);
        assert_eq!(tt(&c1, 2), tt(&a, 2));
        assert_eq!(ab.cofactor(Var(1), false).unwrap().is_const(), Some(false));

        let x = FunctionCone::compose(Gate::Xor, &[&a, &b]).unwrap();
        let c = x.cofactor(Var(0), true).unwrap();
        assert_eq!(tt(&c, 2), tt(&b.not(), 2));
        assert!(matches!(
            c.cofactor(Var(0), true),
            Err(AigError::NotInSupport(_))
        ));
    }

    #[test]
    fn quantify_examples() {
        let n = names(4);
        let [a, b, c, d] = [0, 1, 2, 3].map(|i| var(&n, i));
        let ab = FunctionCone::compose(Gate::And, &[&a, &b]).unwrap();
        let cd = FunctionCone::compose(Gate::And, &[&c, &d]).unwrap();
        let f = FunctionCone::compose(Gate::Or, &[&ab, &cd]).unwrap();
        let g = f
            .quantify(&[Var(2), Var(3)], Quantifier::Forall, DEFAULT_NODE_LIMIT)
            .unwrap();
        assert_eq!(tt(&g, 4), tt(&ab, 4));

        let aorb = FunctionCone::compose(Gate::Or, &[&a, &b]).unwrap();
        let e = aorb
            .quantify(&[Var(1)], Quantifier::Exists, DEFAULT_NODE_LIMIT)
            .unwrap();
        assert_eq!(e.is_const(), Some(true));

        // maj(a,b,c) forall b = a & c, checked against enumeration
        let ac = FunctionCone::compose(Gate::And, &[&a, &c]).unwrap();
        let bc = FunctionCone::compose(Gate::And, &[&b, &c]).unwrap();
        let maj = FunctionCone::compose(Gate::Or, &[&ab, &ac, &bc]).unwrap();
        let q = maj
            .quantify(&[Var(1)], Quantifier::Forall, DEFAULT_NODE_LIMIT)
            .unwrap();
        let expect: String = (0..16)
            .map(|i| {
                let (x, z) = (i >> 3 & 1 == 1, i >> 1 & 1 == 1);
                if x && z {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        assert_eq!(tt(&q, 4), expect);
        assert_eq!(q.support(), &[Var(0), Var(2)]);
    }

    #[test]
    fn quantify_respects_node_limit() {
        let n = names(4);
        let vs: Vec<FunctionCone> = (0..4).map(|i| var(&n, i)).collect();
        let refs: Vec<&FunctionCone> = vs.iter().collect();
        let f = FunctionCone::compose(Gate::Xor, &refs).unwrap();
        let r = f.quantify(&[Var(0)], Quantifier::Forall, 2);
        assert_eq!(r.unwrap_err(), AigError::NodeLimit(2));
    }

    #[test]
    fn compose_examples() {
        let n = names(2);
        let (a, b) = (var(&n, 0), var(&n, 1));
        let or = FunctionCone::compose(Gate::Or, &[&a, &b]).unwrap();
        assert_eq!(or.truth_table().unwrap().to_string(), "0111");
        let nn = FunctionCone::compose(Gate::Not, &[&a.not()]).unwrap();
        assert_eq!(nn.root(), a.root());
        let x = FunctionCone::compose(Gate::Xor, &[&a, &a]).unwrap();
        assert_eq!(x.is_const(), Some(false));
        assert!(matches!(
            FunctionCone::compose(Gate::Not, &[&a, &b]),
            Err(AigError::Arity { .. })
        ));
        let other = FunctionCone::variable(Var(0), names(3));
        assert_eq!(
            FunctionCone::compose(Gate::Or, &[&a, &other]).unwrap_err(),
            AigError::Namespace
        );
    }

    #[test]
    fn truth_table_examples() {
        let n = names(3);
        let [a, b, c] = [0, 1, 2].map(|i| var(&n, i));
        let ab = FunctionCone::compose(Gate::And, &[&a, &b]).unwrap();
        assert_eq!(ab.truth_table().unwrap().to_string(), "0001");
        let x = FunctionCone::compose(Gate::Xor, &[&a, &b]).unwrap();
        assert_eq!(x.truth_table().unwrap().to_string(), "0110");
        let ac = FunctionCone::compose(Gate::And, &[&a, &c]).unwrap();
        let bc = FunctionCone::compose(Gate::And, &[&b, &c]).unwrap();
        let maj = FunctionCone::compose(Gate::Or, &[&ab, &ac, &bc]).unwrap();
        let expect: String = (0..8u32)
            .map(|i| if i.count_ones() >= 2 { '1' } else { '0' })
            .collect();
        assert_eq!(expect, "00010111");
        assert_eq!(maj.truth_table().unwrap().to_string(), expect);
        assert!(matches!(
            maj.truth_table_capped(2),
            Err(AigError::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn truth_table_round_trip_through_shannon() {
        let n = names(5);
        let vars: Vec<Var> = (0..5).map(Var).collect();
        let table = TruthTable::from_fn(5, |i| (i * 2654435761usize) >> 7 & 1 == 1);
        let f = FunctionCone::from_truth_table(&vars, &table, n);
        assert_eq!(f.truth_table_over(&vars, 20).unwrap(), table);
    }

    #[test]
    fn cone_support_is_structural() {
        let mut c = Circuit::new("t", vec!["a".into(), "b".into(), "c".into()]);
        let a = c.input_edge(Var(0));
        let b = c.input_edge(Var(1));
        let g = c.aig_mut().and(a, b);
        c.add_output("y", g);
        c.add_output("z", Edge::FALSE);
        let cone = c.extract_cone(0).unwrap();
        assert_eq!(cone.support(), &[Var(0), Var(1)]);
        assert!(c.extract_cone(1).unwrap().support().is_empty());
        assert_eq!(
            c.extract_cone(2).unwrap_err(),
            AigError::OutputIndex { index: 2, count: 2 }
        );
    }
}
