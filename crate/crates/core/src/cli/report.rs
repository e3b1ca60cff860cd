//! Report tables. Every table is a list of string cells, so the CSV and the
//! JSON rendering carry exactly the same content.

use std::io::{self, Write};

use crate::engine::{PoOutcome, PoStatus, Verdict};

pub const SCHEMA: &str = "bidec-report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub name: &'static str,
    /// Free-form key=value pairs echoed in the header comment.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, columns: &[&'static str], meta: &[(String, String)]) -> Self {
        Table {
            name,
            meta: meta.to_vec(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    fn header_comment(&self) -> String {
        let mut s = format!("# {SCHEMA} v{SCHEMA_VERSION} table={}", self.name);
        for (k, v) in &self.meta {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }

    pub fn write_csv(&self, sink: &mut dyn Write) -> io::Result<()> {
        writeln!(sink, "{}", self.header_comment())?;
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.to_string(), serde_json::Value::String(v.clone())))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let meta: serde_json::Map<String, serde_json::Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        serde_json::json!({
            "schema": SCHEMA,
            "version": SCHEMA_VERSION,
            "table": self.name,
            "meta": meta,
            "columns": self.columns,
            "rows": rows,
        })
    }

    pub fn write_json(&self, sink: &mut dyn Write) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *sink, &self.to_json())?;
        writeln!(sink)
    }
}

/// Everything measured for one circuit.
#[derive(Clone, Debug)]
pub struct CircuitResult {
    pub name: String,
    pub inputs: usize,
    pub outputs: Vec<PoOutcome>,
    pub seconds: f64,
}

impl CircuitResult {
    pub fn max_support(&self) -> usize {
        self.outputs.iter().map(|o| o.support).max().unwrap_or(0)
    }

    /// Outputs counted as decomposed: found and verified.
    pub fn decomposed(&self) -> usize {
        self.outputs.iter().filter(|o| is_counted(o)).count()
    }
}

fn is_counted(o: &PoOutcome) -> bool {
    o.status == PoStatus::Decomposed && o.verify == Some(Verdict::Yes)
}

fn ratio(x: f64) -> String {
    format!("{x:.4}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

fn seconds(x: f64, timed: bool) -> String {
    if timed {
        format!("{x:.2}")
    } else {
        "-".into()
    }
}

pub const PO_COLUMNS: &[&str] = &[
    "circuit", "output", "support", "status", "k", "ub", "within_ub", "eps_d", "eps_b", "cost", "optimal",
    "iterations", "verify", "partition",
];

pub fn po_table(results: &[CircuitResult], weights: (f64, f64), meta: &[(String, String)]) -> Table {
    let mut t = Table::new("pos", PO_COLUMNS, meta);
    for c in results {
        for o in &c.outputs {
            let r = o.result.as_ref();
            let m = r.and_then(|r| r.metrics);
            let k = r.and_then(|r| r.best_k);
            let ub = r.map(|r| r.upper_bound);
            let within = match (k, ub) {
                (Some(k), Some(ub)) => Some(k <= ub),
                _ => None,
            };
            let partition = match (r.and_then(|r| r.partition.as_ref()), &o.sub_functions) {
                (Some(p), Some((fa, _))) => p.display(fa).to_string(),
                _ => "-".into(),
            };
            t.rows.push(vec![
                c.name.clone(),
                o.name.clone(),
                o.support.to_string(),
                o.status.label().to_string(),
                opt(k),
                opt(ub),
                opt(within),
                opt(m.map(|m| ratio(m.disjointness))),
                opt(m.map(|m| ratio(m.balancedness))),
                opt(m.map(|m| ratio(m.cost(weights.0, weights.1)))),
                r.is_some_and(|r| r.optimal).to_string(),
                r.map_or(0, |r| r.iterations()).to_string(),
                opt(o.verify),
                partition,
            ]);
        }
    }
    t
}

pub const PERFORMANCE_COLUMNS: &[&str] = &["circuit", "#In", "#InM", "#Out", "#Dec", "CPU (s)"];

pub fn performance_table(results: &[CircuitResult], timed: bool, meta: &[(String, String)]) -> Table {
    let mut t = Table::new("performance", PERFORMANCE_COLUMNS, meta);
    for c in results {
        t.rows.push(vec![
            c.name.clone(),
            c.inputs.to_string(),
            c.max_support().to_string(),
            c.outputs.len().to_string(),
            c.decomposed().to_string(),
            seconds(c.seconds, timed),
        ]);
    }
    t
}

pub const QUALITY_COLUMNS: &[&str] = &[
    "circuit", "#In", "#InM", "#Out", "#Dec", "avg_eps_d", "avg_eps_b", "avg_cost", "#Opt",
];

pub fn quality_table(results: &[CircuitResult], weights: (f64, f64), meta: &[(String, String)]) -> Table {
    let mut t = Table::new("quality", QUALITY_COLUMNS, meta);
    for c in results {
        let dec: Vec<_> = c
            .outputs
            .iter()
            .filter(|o| is_counted(o))
            .filter_map(|o| o.result.as_ref())
            .collect();
        let avg = |g: &dyn Fn(&crate::engine::Metrics) -> f64| {
            if dec.is_empty() {
                "-".to_string()
            } else {
                let s: f64 = dec.iter().filter_map(|r| r.metrics.as_ref()).map(g).sum();
                ratio(s / dec.len() as f64)
            }
        };
        t.rows.push(vec![
            c.name.clone(),
            c.inputs.to_string(),
            c.max_support().to_string(),
            c.outputs.len().to_string(),
            dec.len().to_string(),
            avg(&|m| m.disjointness),
            avg(&|m| m.balancedness),
            avg(&|m| m.cost(weights.0, weights.1)),
            dec.iter().filter(|r| r.optimal).count().to_string(),
        ]);
    }
    t
}

pub const SUMMARY_COLUMNS: &[&str] = &["#PO", "%solved", "%decomposed", "%optimal"];

/// Over all attempted outputs (support ≥ 2): solved means the search ended
/// with a proof (found or infeasible), not UNKNOWN.
pub fn summary_table(results: &[CircuitResult], meta: &[(String, String)]) -> Table {
    let mut t = Table::new("summary", SUMMARY_COLUMNS, meta);
    let attempted: Vec<&PoOutcome> = results
        .iter()
        .flat_map(|c| &c.outputs)
        .filter(|o| o.status != PoStatus::Skipped)
        .collect();
    let n = attempted.len();
    let pct = |count: usize| {
        if n == 0 {
            format!("{:.2}", 0.0)
        } else {
            format!("{:.2}", 100.0 * count as f64 / n as f64)
        }
    };
    let solved = attempted
        .iter()
        .filter(|o| is_counted(o) || o.status == PoStatus::NotDecomposable)
        .count();
    let decomposed = attempted.iter().filter(|o| is_counted(o)).count();
    let optimal = attempted
        .iter()
        .filter(|o| is_counted(o) && o.result.as_ref().is_some_and(|r| r.optimal))
        .count();
    t.rows.push(vec![n.to_string(), pct(solved), pct(decomposed), pct(optimal)]);
    t
}

/// The summary as one line, `#PO / %solved / %decomposed / %optimal`.
pub fn summary_line(t: &Table) -> String {
    t.rows.first().map(|r| r.join(" / ")).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_versioned_header() {
        let mut t = Table::new("x", &["a", "b"], &[("op".into(), "or".into())]);
        t.rows.push(vec!["1".into(), "p,q".into()]);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "# bidec-report v1 table=x op=or\na,b\n1,\"p,q\"\n"
        );
        let j = t.to_json();
        assert_eq!(j["rows"][0]["b"], "p,q");
        assert_eq!(j["version"], 1);
    }

    #[test]
    fn empty_summary() {
        let t = summary_table(&[], &[]);
        assert_eq!(summary_line(&t), "0 / 0.00 / 0.00 / 0.00");
    }
}
