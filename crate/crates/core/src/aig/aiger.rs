// SPDX-License-Identifier: Apache-2.0

//! AIGER reader (ASCII `aag` and binary `aig`) and ASCII writer.
//!
//! Latches are cut: each latch output becomes a primary input appended after
//! the declared inputs, and each latch next-state function becomes a primary
//! output appended after the declared outputs.

use std::collections::HashMap;
use std::io::Write;

use super::{parse_err, AigError, Circuit, Edge, Node, Var};

#[derive(Clone, Copy)]
enum Def {
    Input,
    And(u32, u32, usize),
}

struct Header {
    max_var: u32,
    inputs: usize,
    latches: usize,
    outputs: usize,
    ands: usize,
    binary: bool,
}

fn parse_header(line: &str) -> Result<Header, AigError> {
    let mut it = line.split_ascii_whitespace();
    let binary = match it.next() {
        Some("aag") => false,
        Some("aig") => true,
        _ => return Err(parse_err(1, "expected 'aag' or 'aig' header")),
    };
    let nums: Vec<u32> = it
        .map(|t| t.parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| parse_err(1, "malformed header field"))?;
    if nums.len() < 5 {
        return Err(parse_err(1, "header needs M I L O A"));
    }
    if nums.len() > 5 && nums[5..].iter().any(|&x| x != 0) {
        return Err(parse_err(1, "bad-state, constraint and fairness sections are unsupported"));
    }
    let h = Header {
        max_var: nums[0],
        inputs: nums[1] as usize,
        latches: nums[2] as usize,
        outputs: nums[3] as usize,
        ands: nums[4] as usize,
        binary,
    };
    if (h.inputs + h.latches + h.ands) as u64 > h.max_var as u64 {
        return Err(parse_err(1, "M is smaller than I + L + A"));
    }
    Ok(h)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn next_line(&mut self) -> Option<&'a str> {
        if self.pos >= self.data.len() {
            return None;
        }
        let rest = &self.data[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
        self.pos += end + 1;
        self.line += 1;
        let s = std::str::from_utf8(&rest[..end]).unwrap_or("\u{fffd}");
        Some(s.trim_end_matches('\r'))
    }

    fn varint(&mut self) -> Result<u32, AigError> {
        let mut x: u64 = 0;
        let mut shift = 0;
        loop {
            let Some(&b) = self.data.get(self.pos) else {
                return Err(parse_err(self.line, "truncated binary AND section"));
            };
            self.pos += 1;
            x |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                break;
            }
            shift += 7;
            if shift > 35 {
                return Err(parse_err(self.line, "varint overflow"));
            }
        }
        u32::try_from(x).map_err(|_| parse_err(self.line, "varint overflow"))
    }
}

fn parse_lits(line: Option<&str>, count: usize, lineno: usize, what: &str) -> Result<Vec<u32>, AigError> {
    let line = line.ok_or_else(|| parse_err(lineno, format!("unexpected end of file in {what}")))?;
    let lits: Vec<u32> = line
        .split_ascii_whitespace()
        .map(|t| t.parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| parse_err(lineno, format!("malformed {what} line")))?;
    if lits.len() < count {
        return Err(parse_err(lineno, format!("{what} line needs {count} literals")));
    }
    Ok(lits)
}

/// Parses an AIGER circuit. The circuit name is left empty.
pub fn parse_aiger(data: &[u8]) -> Result<Circuit, AigError> {
    let mut cur = Cursor {
        data,
        pos: 0,
        line: 0,
    };
    let header = cur.next_line().ok_or_else(|| parse_err(1, "empty input"))?;
    let h = parse_header(header)?;
    let max_lit = 2 * h.max_var + 1;

    let mut defs: HashMap<u32, Def> = HashMap::new();
    let mut define = |var: u32, def: Def, line: usize| -> Result<(), AigError> {
        if var == 0 || var > h.max_var {
            return Err(parse_err(line, format!("variable {var} out of range")));
        }
        if defs.insert(var, def).is_some() {
            return Err(parse_err(line, format!("variable {var} defined twice")));
        }
        Ok(())
    };

    let mut input_vars = Vec::with_capacity(h.inputs + h.latches);
    for i in 0..h.inputs {
        let lit = if h.binary {
            2 * (i as u32 + 1)
        } else {
            let l = parse_lits(cur.next_line(), 1, cur.line, "input")?[0];
            if l & 1 == 1 || l < 2 {
                return Err(parse_err(cur.line, "input literal must be even and positive"));
            }
            l
        };
        define(lit / 2, Def::Input, cur.line)?;
        input_vars.push(lit / 2);
    }

    let mut latch_next = Vec::with_capacity(h.latches);
    for i in 0..h.latches {
        let (lit, next) = if h.binary {
            let l = parse_lits(cur.next_line(), 1, cur.line, "latch")?;
            (2 * (h.inputs + i + 1) as u32, (l[0], cur.line))
        } else {
            let l = parse_lits(cur.next_line(), 2, cur.line, "latch")?;
            if l[0] & 1 == 1 || l[0] < 2 {
                return Err(parse_err(cur.line, "latch literal must be even and positive"));
            }
            (l[0], (l[1], cur.line))
        };
        define(lit / 2, Def::Input, cur.line)?;
        input_vars.push(lit / 2);
        latch_next.push(next);
    }

    let mut outputs = Vec::with_capacity(h.outputs);
    for _ in 0..h.outputs {
        let l = parse_lits(cur.next_line(), 1, cur.line, "output")?[0];
        outputs.push((l, cur.line));
    }

    for i in 0..h.ands {
        if h.binary {
            let lhs = 2 * (h.inputs + h.latches + i + 1) as u32;
            let d0 = cur.varint()?;
            let d1 = cur.varint()?;
            let r0 = lhs
                .checked_sub(d0)
                .ok_or_else(|| parse_err(cur.line, "bad delta"))?;
            let r1 = r0
                .checked_sub(d1)
                .ok_or_else(|| parse_err(cur.line, "bad delta"))?;
            define(lhs / 2, Def::And(r0, r1, cur.line), cur.line)?;
        } else {
            let l = parse_lits(cur.next_line(), 3, cur.line, "and")?;
            if l[0] & 1 == 1 || l[0] < 2 {
                return Err(parse_err(cur.line, "AND lhs must be even and positive"));
            }
            define(l[0] / 2, Def::And(l[1], l[2], cur.line), cur.line)?;
        }
    }

    // symbol table and comments
    let mut in_names: HashMap<usize, String> = HashMap::new();
    let mut latch_names: HashMap<usize, String> = HashMap::new();
    let mut out_names: HashMap<usize, String> = HashMap::new();
    while let Some(line) = cur.next_line() {
        if line.starts_with('c') {
            break;
        }
        if line.is_empty() {
            continue;
        }
        if !line.is_char_boundary(1) {
            return Err(parse_err(cur.line, "malformed symbol table entry"));
        }
        let (tag, rest) = line.split_at(1);
        let Some((idx, name)) = rest.split_once(' ') else {
            return Err(parse_err(cur.line, "malformed symbol table entry"));
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| parse_err(cur.line, "malformed symbol index"))?;
        let (table, bound) = match tag {
            "i" => (&mut in_names, h.inputs),
            "l" => (&mut latch_names, h.latches),
            "o" => (&mut out_names, h.outputs),
            "b" | "c" | "j" | "f" => continue,
            _ => return Err(parse_err(cur.line, format!("unknown symbol kind '{tag}'"))),
        };
        if idx >= bound {
            return Err(parse_err(cur.line, "symbol index out of range"));
        }
        table.insert(idx, name.to_string());
    }

    let mut names = Vec::with_capacity(h.inputs + h.latches);
    for i in 0..h.inputs {
        names.push(in_names.remove(&i).unwrap_or_else(|| format!("i{i}")));
    }
    let mut latch_labels = Vec::with_capacity(h.latches);
    for i in 0..h.latches {
        let n = latch_names.remove(&i).unwrap_or_else(|| format!("l{i}"));
        names.push(n.clone());
        latch_labels.push(n);
    }
    let mut circuit = Circuit::new("", names);

    // resolve definitions in dependency order, rejecting cycles
    let mut edges: HashMap<u32, Edge> = HashMap::new();
    for (k, &v) in input_vars.iter().enumerate() {
        edges.insert(v, circuit.input_edge(Var(k as u32)));
    }
    let resolve = |lit: u32,
                   line: usize,
                   circuit: &mut Circuit,
                   edges: &mut HashMap<u32, Edge>|
     -> Result<Edge, AigError> {
        if lit > max_lit {
            return Err(parse_err(line, format!("literal {lit} exceeds maximum {max_lit}")));
        }
        let mut stack: Vec<(u32, bool)> = vec![(lit / 2, false)];
        let mut on_stack: std::collections::HashSet<u32> = std::collections::HashSet::new();
        while let Some((v, expanded)) = stack.pop() {
            if v == 0 || edges.contains_key(&v) {
                continue;
            }
            let Some(&def) = defs.get(&v) else {
                return Err(parse_err(line, format!("literal {} is never defined", 2 * v)));
            };
            let Def::And(a, b, dline) = def else {
                unreachable!("inputs are pre-resolved");
            };
            for x in [a, b] {
                if x > max_lit {
                    return Err(parse_err(dline, format!("literal {x} exceeds maximum {max_lit}")));
                }
            }
            if expanded {
                on_stack.remove(&v);
                let ea = lit_edge(edges, a);
                let eb = lit_edge(edges, b);
                let e = circuit.aig_mut().and(ea, eb);
                edges.insert(v, e);
                continue;
            }
            if !on_stack.insert(v) {
                return Err(parse_err(dline, format!("combinational cycle through literal {}", 2 * v)));
            }
            stack.push((v, true));
            for x in [a, b] {
                let u = x / 2;
                if u != 0 && !edges.contains_key(&u) {
                    if on_stack.contains(&u) {
                        return Err(parse_err(dline, format!("combinational cycle through literal {}", 2 * u)));
                    }
                    if !defs.contains_key(&u) {
                        return Err(parse_err(dline, format!("literal {} is never defined", 2 * u)));
                    }
                    stack.push((u, false));
                }
            }
        }
        Ok(lit_edge(edges, lit))
    };

    for (i, (lit, line)) in outputs.into_iter().enumerate() {
        let e = resolve(lit, line, &mut circuit, &mut edges)?;
        let name = out_names.remove(&i).unwrap_or_else(|| format!("o{i}"));
        circuit.add_output(name, e);
    }
    for (i, (lit, line)) in latch_next.into_iter().enumerate() {
        let e = resolve(lit, line, &mut circuit, &mut edges)?;
        circuit.add_output(format!("{}_next", latch_labels[i]), e);
    }
    // AND definitions not feeding any output are still checked
    let mut pending: Vec<(u32, usize)> = defs
        .iter()
        .filter_map(|(&v, d)| match d {
            Def::And(_, _, line) if !edges.contains_key(&v) => Some((v, *line)),
            _ => None,
        })
        .collect();
    pending.sort_by_key(|&(v, line)| (line, v));
    for (v, line) in pending {
        resolve(2 * v, line, &mut circuit, &mut edges)?;
    }
    Ok(circuit)
}

fn lit_edge(edges: &HashMap<u32, Edge>, lit: u32) -> Edge {
    let base = if lit / 2 == 0 { Edge::FALSE } else { edges[&(lit / 2)] };
    if lit & 1 == 1 {
        !base
    } else {
        base
    }
}

/// Writes the circuit as ASCII AIGER with a symbol table. All inputs are
/// emitted, live AND nodes are renumbered in topological order.
pub fn write_aiger(c: &Circuit, sink: &mut dyn Write) -> Result<(), AigError> {
    let aig = c.aig();
    let roots: Vec<Edge> = c.outputs().iter().map(|(_, e)| *e).collect();
    let live = aig.reachable(&roots);
    let mut var_of = vec![0u32; aig.len()];
    let mut input_var = vec![0u32; c.num_inputs()];
    for (i, slot) in input_var.iter_mut().enumerate() {
        *slot = i as u32 + 1;
    }
    let mut ands = Vec::new();
    let mut next = c.num_inputs() as u32 + 1;
    for (i, node) in aig.nodes().iter().enumerate() {
        match *node {
            Node::Const => {}
            Node::Input(v) => var_of[i] = input_var[v.index()],
            Node::And(a, b) if live[i] => {
                var_of[i] = next;
                next += 1;
                ands.push((i, a, b));
            }
            Node::And(..) => {}
        }
    }
    let lit = |e: Edge| 2 * var_of[e.node()] + e.is_complemented() as u32;
    writeln!(
        sink,
        "aag {} {} 0 {} {}",
        next - 1,
        c.num_inputs(),
        roots.len(),
        ands.len()
    )?;
    for v in &input_var {
        writeln!(sink, "{}", 2 * v)?;
    }
    for r in &roots {
        writeln!(sink, "{}", lit(*r))?;
    }
    for (i, a, b) in &ands {
        let (x, y) = (lit(*a), lit(*b));
        let (x, y) = if x >= y { (x, y) } else { (y, x) };
        writeln!(sink, "{} {} {}", 2 * var_of[*i], x, y)?;
    }
    for (i, name) in c.input_names().iter().enumerate() {
        writeln!(sink, "i{i} {name}")?;
    }
    for (i, (name, _)) in c.outputs().iter().enumerate() {
        writeln!(sink, "o{i} {name}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tt(c: &Circuit, o: usize) -> String {
        let cone = c.extract_cone(o).unwrap();
        let vars: Vec<Var> = (0..c.num_inputs() as u32).map(Var).collect();
        cone.truth_table_over(&vars, 20).unwrap().to_string()
    }

    #[test]
    fn buffer_inverter_and() {
        let c = parse_aiger(b"aag 1 1 0 1 0\n2\n2\n").unwrap();
        assert_eq!(tt(&c, 0), "01");
        let c = parse_aiger(b"aag 1 1 0 1 0\n2\n3\n").unwrap();
        assert_eq!(tt(&c, 0), "10");
        let c = parse_aiger(b"aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n").unwrap();
        assert_eq!(tt(&c, 0), "0001");
        assert_eq!(c.input_names().to_vec(), vec!["i0", "i1"]);
    }

    #[test]
    fn constant_output() {
        let c = parse_aiger(b"aag 0 0 0 2 0\n0\n1\n").unwrap();
        assert_eq!(c.outputs()[0].1, Edge::FALSE);
        assert_eq!(c.outputs()[1].1, Edge::TRUE);
    }

    #[test]
    fn symbols_and_out_of_order_ands() {
        let src = b"aag 4 2 0 1 2\n2\n4\n8\n8 6 2\n6 2 5\ni0 x\ni1 y\no0 out\nc\nhello\n";
        let c = parse_aiger(src).unwrap();
        assert_eq!(c.input_names().to_vec(), vec!["x", "y"]);
        assert_eq!(c.outputs()[0].0, "out");
        // x & !y & x
        assert_eq!(tt(&c, 0), "0010");
    }

    #[test]
    fn latches_are_cut() {
        // latch l0 with next = !l0 & i0, output = l0
        let c = parse_aiger(b"aag 3 1 1 1 1\n2\n4 6\n4\n6 5 2\n").unwrap();
        assert_eq!(c.num_inputs(), 2);
        assert_eq!(c.outputs().len(), 2);
        assert_eq!(c.outputs()[1].0, "l0_next");
        assert_eq!(tt(&c, 0), "0101");
        assert_eq!(tt(&c, 1), "0010");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_aiger(b"aig x\n").unwrap_err();
        assert!(matches!(e, AigError::Parse { line: 1, .. }));
        let e = parse_aiger(b"aag 3 2 0 1 1\n2\n4\n6\n6 2 8\n").unwrap_err();
        assert!(matches!(e, AigError::Parse { line: 5, .. }), "{e}");
        let e = parse_aiger(b"aag 3 1 0 1 1\n2\n6\n6 2 4\n").unwrap_err();
        assert!(matches!(e, AigError::Parse { line: 4, .. }), "{e}");
        let cyc = b"aag 3 1 0 1 2\n2\n4\n4 6 2\n6 4 2\n";
        let e = parse_aiger(cyc).unwrap_err();
        assert!(e.to_string().contains("cycle"), "{e}");
        let e = parse_aiger(b"aag 1 1 0 1 0\n2\n").unwrap_err();
        assert!(matches!(e, AigError::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn binary_format() {
        // and-gate: M=3 I=2 L=0 O=1 A=1, lhs 6 = 4 & 2 -> deltas 2, 2
        let mut data = b"aig 3 2 0 1 1\n6\n".to_vec();
        data.extend_from_slice(&[2, 2]);
        data.extend_from_slice(b"i0 a\ni1 b\no0 y\n");
        let c = parse_aiger(&data).unwrap();
        assert_eq!(tt(&c, 0), "0001");
        assert_eq!(c.input_names().to_vec(), vec!["a", "b"]);
    }

    #[test]
    fn writer_round_trip() {
        let c = parse_aiger(b"aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n").unwrap();
        let mut out = Vec::new();
        write_aiger(&c, &mut out).unwrap();
        let back = parse_aiger(&out).unwrap();
        assert_eq!(tt(&back, 0), tt(&c, 0));

        let empty = Circuit::new("e", vec!["a".into()]);
        let mut out = Vec::new();
        write_aiger(&empty, &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("aag 1 1 0 0 0\n"));
    }
}
