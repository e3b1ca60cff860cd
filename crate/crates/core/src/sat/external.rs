//! DIMACS subprocess backend. The whole formula is sent on every call,
//! assumptions as unit clauses; answers are parsed from `s`/`v` lines and
//! the model is checked before it is accepted.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::cnf::Lit;

use super::{Budget, SatError, SatOracle, SatStatus};

pub struct ExternalSolver {
    program: PathBuf,
    args: Vec<String>,
    clauses: Vec<Vec<Lit>>,
    num_vars: u32,
    model: Vec<bool>,
}

impl ExternalSolver {
    pub fn new(program: PathBuf, args: Vec<String>) -> Self {
        ExternalSolver {
            program,
            args,
            clauses: Vec::new(),
            num_vars: 0,
            model: Vec::new(),
        }
    }

    fn dimacs(&self, assumptions: &[Lit]) -> String {
        let num_vars = assumptions
            .iter()
            .map(|l| l.var())
            .max()
            .unwrap_or(0)
            .max(self.num_vars);
        let mut out = format!("p cnf {} {}\n", num_vars, self.clauses.len() + assumptions.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&l.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        for l in assumptions {
            out.push_str(&format!("{} 0\n", l.to_dimacs()));
        }
        out
    }

    fn run(&self, input: String, deadline: Option<Instant>) -> Result<Option<String>, SatError> {
        let program = self.program.display().to_string();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SatError::Spawn {
                program: program.clone(),
                message: e.to_string(),
            })?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = thread::spawn(move || {
            // a solver that exits early closes the pipe; that is not our error
            let _ = stdin.write_all(input.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let status = loop {
            if let Some(st) = child.try_wait().map_err(|e| SatError::Crashed(e.to_string()))? {
                break st;
            }
            if matches!(deadline, Some(d) if Instant::now() >= d) {
                let _ = child.kill();
                let _ = child.wait();
                let _ = writer.join();
                let _ = reader.join();
                return Ok(None);
            }
            thread::sleep(Duration::from_millis(2));
        };
        let _ = writer.join();
        let text = reader
            .join()
            .map_err(|_| SatError::Crashed("reader thread panicked".into()))?
            .map_err(|e| SatError::Protocol(e.to_string()))?;
        if status.code().is_none() && !text.lines().any(|l| l.starts_with('s')) {
            return Err(SatError::Crashed(format!("{program}: {status}")));
        }
        Ok(Some(text))
    }
}

/// Parses solver output into a status and the listed literal values.
pub(crate) fn parse_answer(text: &str) -> Result<(SatStatus, Vec<i64>), SatError> {
    let mut status = None;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        let (head, rest) = match line.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (line, ""),
        };
        let word = match head {
            "s" => rest,
            "v" => {
                for tok in rest.split_whitespace() {
                    let x: i64 = tok
                        .parse()
                        .map_err(|_| SatError::Protocol(format!("bad value token {tok:?}")))?;
                    if x != 0 {
                        values.push(x);
                    }
                }
                continue;
            }
            "c" | "" => continue,
            _ => line,
        };
        let s = match word {
            "SATISFIABLE" | "SAT" => SatStatus::Sat,
            "UNSATISFIABLE" | "UNSAT" => SatStatus::Unsat,
            "UNKNOWN" | "INDETERMINATE" => SatStatus::Unknown,
            _ => return Err(SatError::Protocol(format!("unexpected line {line:?}"))),
        };
        if status.replace(s).is_some_and(|old| old != s) {
            return Err(SatError::Protocol("conflicting status lines".into()));
        }
    }
    status
        .map(|s| (s, values))
        .ok_or_else(|| SatError::Protocol("no status line".into()))
}

impl SatOracle for ExternalSolver {
    fn add_clause(&mut self, lits: &[Lit]) {
        if let Some(m) = lits.iter().map(|l| l.var()).max() {
            self.num_vars = self.num_vars.max(m);
        }
        self.clauses.push(lits.to_vec());
    }

    fn solve_under(&mut self, assumptions: &[Lit], budget: &Budget) -> Result<SatStatus, SatError> {
        self.model.clear();
        let Some(text) = self.run(self.dimacs(assumptions), budget.deadline())? else {
            return Ok(SatStatus::Unknown);
        };
        let (status, values) = parse_answer(&text)?;
        if status != SatStatus::Sat {
            return Ok(status);
        }
        let n = assumptions
            .iter()
            .map(|l| l.var())
            .max()
            .unwrap_or(0)
            .max(self.num_vars) as usize;
        let mut model = vec![false; n + 1];
        for x in values {
            let v = x.unsigned_abs() as usize;
            if v <= n {
                model[v] = x > 0;
            }
        }
        let holds = |l: &Lit| model[l.var() as usize] != l.is_negated();
        for (i, c) in self.clauses.iter().enumerate() {
            if !c.iter().any(holds) {
                return Err(SatError::BogusModel { clause: i });
            }
        }
        if let Some(i) = assumptions.iter().position(|l| !holds(l)) {
            return Err(SatError::BogusModel {
                clause: self.clauses.len() + i,
            });
        }
        self.model = model;
        Ok(SatStatus::Sat)
    }

    fn value(&self, l: Lit) -> bool {
        self.model.get(l.var() as usize).copied().unwrap_or(false) != l.is_negated()
    }

    fn model(&self) -> Vec<bool> {
        self.model.clone()
    }
}
