// SPDX-License-Identifier: Apache-2.0

//! BLIF subset: `.model`, `.inputs`, `.outputs`, `.names` covers,
//! `.latch` and `.end`. Latches are cut into a pseudo input (the latch
//! output signal) and a pseudo output (the latch input signal).

use std::collections::{HashMap, HashSet};
use std::io::Write;

use super::{parse_err, AigError, Circuit, Edge, Node, Var};

struct Cover {
    fanins: Vec<String>,
    rows: Vec<(Vec<u8>, bool)>,
    line: usize,
}

enum Signal {
    Input(Var),
    Cover(Cover),
}

/// Joins `\`-continued lines and strips comments, keeping the line number
/// where each logical line starts.
fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim_end();
        let (body, cont) = match line.strip_suffix('\\') {
            Some(b) => (b, true),
            None => (line, false),
        };
        let entry = pending.get_or_insert_with(|| (i + 1, String::new()));
        entry.1.push(' ');
        entry.1.push_str(body);
        if !cont {
            let (n, s) = pending.take().unwrap();
            if !s.trim().is_empty() {
                out.push((n, s.trim().to_string()));
            }
        }
    }
    if let Some((n, s)) = pending {
        if !s.trim().is_empty() {
            out.push((n, s.trim().to_string()));
        }
    }
    out
}

pub fn parse_blif(data: &[u8]) -> Result<Circuit, AigError> {
    let text = std::str::from_utf8(data).map_err(|_| parse_err(1, "input is not UTF-8"))?;
    let mut model = String::new();
    let mut input_names: Vec<String> = Vec::new();
    let mut output_names: Vec<(String, usize)> = Vec::new();
    let mut latch_outputs: Vec<(String, usize)> = Vec::new();
    let mut signals: HashMap<String, Signal> = HashMap::new();
    let mut current: Option<(String, Cover)> = None;
    let mut ended = false;

    fn define(
        signals: &mut HashMap<String, Signal>,
        name: String,
        s: Signal,
        line: usize,
    ) -> Result<(), AigError> {
        if signals.insert(name.clone(), s).is_some() {
            return Err(parse_err(line, format!("signal '{name}' defined twice")));
        }
        Ok(())
    }

    let lines = logical_lines(text);
    for (lineno, line) in lines {
        if ended {
            break;
        }
        let mut toks = line.split_ascii_whitespace();
        let head = toks.next().unwrap();
        if !head.starts_with('.') {
            let Some((_, cover)) = current.as_mut() else {
                return Err(parse_err(lineno, "cover row outside of .names"));
            };
            let parts: Vec<&str> = line.split_ascii_whitespace().collect();
            let k = cover.fanins.len();
            let (pattern, out) = match (k, parts.as_slice()) {
                (0, [o]) => ("", *o),
                (_, [p, o]) if k > 0 => (*p, *o),
                _ => return Err(parse_err(lineno, "malformed cover row")),
            };
            if pattern.len() != k || !pattern.bytes().all(|b| matches!(b, b'0' | b'1' | b'-')) {
                return Err(parse_err(lineno, "cover row does not match fan-in count"));
            }
            let out = match out {
                "1" => true,
                "0" => false,
                _ => return Err(parse_err(lineno, "cover output must be 0 or 1")),
            };
            if let Some((_, first)) = cover.rows.first() {
                if *first != out {
                    return Err(parse_err(lineno, "cover mixes on-set and off-set rows"));
                }
            }
            cover.rows.push((pattern.as_bytes().to_vec(), out));
            continue;
        }
        if let Some((name, cover)) = current.take() {
            let l = cover.line;
            define(&mut signals, name, Signal::Cover(cover), l)?;
        }
        let args: Vec<String> = toks.map(str::to_string).collect();
        match head {
            ".model" => model = args.first().cloned().unwrap_or_default(),
            ".inputs" => {
                for a in args {
                    let v = Var(input_names.len() as u32);
                    input_names.push(a.clone());
                    define(&mut signals, a, Signal::Input(v), lineno)?;
                }
            }
            ".outputs" => output_names.extend(args.into_iter().map(|a| (a, lineno))),
            ".names" => {
                let Some((out, fanins)) = args.split_last() else {
                    return Err(parse_err(lineno, ".names needs an output"));
                };
                current = Some((
                    out.clone(),
                    Cover {
                        fanins: fanins.to_vec(),
                        rows: Vec::new(),
                        line: lineno,
                    },
                ));
            }
            ".latch" => {
                if args.len() < 2 {
                    return Err(parse_err(lineno, ".latch needs input and output"));
                }
                let v = Var(input_names.len() as u32);
                input_names.push(args[1].clone());
                define(&mut signals, args[1].clone(), Signal::Input(v), lineno)?;
                latch_outputs.push((args[0].clone(), lineno));
            }
            ".end" => ended = true,
            other => {
                return Err(parse_err(lineno, format!("unsupported directive '{other}'")));
            }
        }
    }
    if let Some((name, cover)) = current.take() {
        let l = cover.line;
        define(&mut signals, name, Signal::Cover(cover), l)?;
    }

    let mut circuit = Circuit::new(model, input_names);
    let mut built: HashMap<String, Edge> = HashMap::new();
    for (name, line) in output_names.iter().chain(latch_outputs.iter()) {
        let e = build_signal(name, *line, &signals, &mut built, &mut circuit)?;
        circuit.add_output(name.clone(), e);
    }
    Ok(circuit)
}

fn build_signal(
    root: &str,
    line: usize,
    signals: &HashMap<String, Signal>,
    built: &mut HashMap<String, Edge>,
    circuit: &mut Circuit,
) -> Result<Edge, AigError> {
    let mut stack: Vec<(&str, bool, usize)> = vec![(root, false, line)];
    let mut active: HashSet<&str> = HashSet::new();
    while let Some((name, expanded, used_at)) = stack.pop() {
        if built.contains_key(name) {
            continue;
        }
        let Some(sig) = signals.get(name) else {
            return Err(parse_err(used_at, format!("undeclared signal '{name}'")));
        };
        let cover = match sig {
            Signal::Input(v) => {
                let e = circuit.input_edge(*v);
                built.insert(name.to_string(), e);
                continue;
            }
            Signal::Cover(c) => c,
        };
        if expanded {
            active.remove(name);
            let fanins: Vec<Edge> = cover.fanins.iter().map(|f| built[f.as_str()]).collect();
            let e = cover_to_aig(cover, &fanins, circuit);
            built.insert(name.to_string(), e);
            continue;
        }
        if !active.insert(name) {
            return Err(parse_err(cover.line, format!("combinational cycle through '{name}'")));
        }
        stack.push((name, true, used_at));
        for f in &cover.fanins {
            if built.contains_key(f.as_str()) {
                continue;
            }
            if active.contains(f.as_str()) {
                return Err(parse_err(cover.line, format!("combinational cycle through '{f}'")));
            }
            stack.push((f.as_str(), false, cover.line));
        }
    }
    Ok(built[root])
}

fn cover_to_aig(cover: &Cover, fanins: &[Edge], circuit: &mut Circuit) -> Edge {
    let aig = circuit.aig_mut();
    let mut sum = Edge::FALSE;
    for (pattern, _) in &cover.rows {
        let mut cube = Edge::TRUE;
        for (i, b) in pattern.iter().enumerate() {
            match b {
                b'1' => cube = aig.and(cube, fanins[i]),
                b'0' => cube = aig.and(cube, !fanins[i]),
                _ => {}
            }
        }
        sum = aig.or(sum, cube);
    }
    match cover.rows.first() {
        Some((_, false)) => !sum,
        _ => sum,
    }
}

/// Writes the circuit as BLIF, one two-input `.names` per live AND node.
pub fn write_blif(c: &Circuit, sink: &mut dyn Write) -> Result<(), AigError> {
    let aig = c.aig();
    let roots: Vec<Edge> = c.outputs().iter().map(|(_, e)| *e).collect();
    let live = aig.reachable(&roots);
    let taken: HashSet<&str> = c
        .input_names()
        .iter()
        .map(String::as_str)
        .chain(c.outputs().iter().map(|(n, _)| n.as_str()))
        .collect();
    let mut prefix = String::from("_n");
    while taken.iter().any(|t| t.starts_with(prefix.as_str())) {
        prefix.insert(0, '_');
    }
    let signal = |e: Edge| -> String {
        match aig.node(e) {
            Node::Input(v) => c.input_names()[v.index()].clone(),
            _ => format!("{prefix}{}", e.node()),
        }
    };
    let name = if c.name.is_empty() { "top" } else { c.name.as_str() };
    writeln!(sink, ".model {name}")?;
    writeln!(sink, ".inputs {}", c.input_names().join(" "))?;
    let outs: Vec<&str> = c.outputs().iter().map(|(n, _)| n.as_str()).collect();
    writeln!(sink, ".outputs {}", outs.join(" "))?;
    for (i, node) in aig.nodes().iter().enumerate() {
        if let Node::And(a, b) = *node {
            if !live[i] {
                continue;
            }
            let bit = |e: Edge| if e.is_complemented() { '0' } else { '1' };
            writeln!(
                sink,
                ".names {} {} {prefix}{i}\n{}{} 1",
                signal(a),
                signal(b),
                bit(a),
                bit(b)
            )?;
        }
    }
    for (out, e) in c.outputs() {
        if e.is_const() {
            writeln!(sink, ".names {out}")?;
            if *e == Edge::TRUE {
                writeln!(sink, "1")?;
            }
            continue;
        }
        let src = signal(*e);
        if src == *out && !e.is_complemented() {
            continue;
        }
        let bit = if e.is_complemented() { '0' } else { '1' };
        writeln!(sink, ".names {src} {out}\n{bit} 1")?;
    }
    writeln!(sink, ".end")?;
    Ok(())
}
