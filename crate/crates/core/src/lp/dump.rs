//! Plain-text LP dump for cross-checking against external solvers.
//!
//! ```text
//! # newsvendor lp v1
//! vars 2
//! minimize 1 -2
//! row le 4 : 1 1
//! row ge 0 : 1 -1
//! bound 0 0 inf
//! bound 1 -inf inf
//! end
//! ```
//!
//! Every variable has exactly one `bound` line. Numbers use Rust's shortest
//! round-trip formatting, so dumping and re-reading is lossless.

use std::fmt::Write as _;

use super::{LinearProgram, Sense};
use crate::error::{Error, Result};

const HEADER: &str = "# newsvendor lp v1";

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    match tok {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| Error::Parse { row: line, message: format!("bad number `{tok}`") }),
    }
}

impl LinearProgram {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" ");
        writeln!(out, "{HEADER}").unwrap();
        writeln!(out, "vars {}", self.num_vars()).unwrap();
        writeln!(out, "minimize {}", join(&self.objective)).unwrap();
        for row in &self.constraints {
            let sense = match row.sense {
                Sense::Le => "le",
                Sense::Ge => "ge",
                Sense::Eq => "eq",
            };
            writeln!(out, "row {sense} {} : {}", fmt_num(row.rhs), join(&row.coefficients)).unwrap();
        }
        for j in 0..self.num_vars() {
            writeln!(out, "bound {j} {} {}", fmt_num(self.lower[j]), fmt_num(self.upper[j])).unwrap();
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lp: Option<LinearProgram> = None;
        let bad = |line: usize, message: &str| Error::Parse { row: line, message: message.to_string() };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut toks = raw.split_whitespace();
            let key = toks.next().unwrap_or_default();
            if key == "vars" {
                let n: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(line, "expected variable count"))?;
                lp = Some(LinearProgram::new(n));
                continue;
            }
            if key == "end" {
                break;
            }
            let lp = lp.as_mut().ok_or_else(|| bad(line, "`vars` must come first"))?;
            let n = lp.num_vars();
            match key {
                "minimize" => {
                    let c = toks.map(|t| parse_num(t, line)).collect::<Result<Vec<_>>>()?;
                    if c.len() != n {
                        return Err(bad(line, "objective length differs from `vars`"));
                    }
                    lp.objective = c;
                }
                "row" => {
                    let sense = match toks.next() {
                        Some("le") => Sense::Le,
                        Some("ge") => Sense::Ge,
                        Some("eq") => Sense::Eq,
                        _ => return Err(bad(line, "expected row sense le|ge|eq")),
                    };
                    let rhs = parse_num(toks.next().ok_or_else(|| bad(line, "missing rhs"))?, line)?;
                    if toks.next() != Some(":") {
                        return Err(bad(line, "expected `:` after rhs"));
                    }
                    let coefficients = toks.map(|t| parse_num(t, line)).collect::<Result<Vec<_>>>()?;
                    if coefficients.len() != n {
                        return Err(bad(line, "row length differs from `vars`"));
                    }
                    lp.add_constraint(coefficients, sense, rhs);
                }
                "bound" => {
                    let j: usize = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .filter(|&j| j < n)
                        .ok_or_else(|| bad(line, "bad variable index"))?;
                    let l = parse_num(toks.next().ok_or_else(|| bad(line, "missing lower bound"))?, line)?;
                    let u = parse_num(toks.next().ok_or_else(|| bad(line, "missing upper bound"))?, line)?;
                    lp.set_bounds(j, l, u);
                }
                other => return Err(bad(line, &format!("unknown directive `{other}`"))),
            }
        }
        lp.ok_or_else(|| bad(0, "empty LP dump"))
    }
}
