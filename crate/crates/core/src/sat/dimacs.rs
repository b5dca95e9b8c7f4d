// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use super::Lit;

/// Renders clauses in DIMACS CNF.
pub fn write_dimacs(num_vars: usize, clauses: &[Vec<Lit>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", num_vars, clauses.len());
    for c in clauses {
        for l in c {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

/// Parses DIMACS CNF into `(num_vars, clauses)`. Comment lines are skipped.
pub fn parse_dimacs(text: &str) -> Result<(usize, Vec<Vec<Lit>>), String> {
    let mut num_vars = None;
    let mut clauses = Vec::new();
    let mut cur = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf") {
            let mut it = rest.split_whitespace();
            let n = it
                .next()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| format!("line {}: bad header", no + 1))?;
            num_vars = Some(n);
            continue;
        }
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| format!("line {}: bad literal `{tok}`", no + 1))?;
            if v == 0 {
                clauses.push(std::mem::take(&mut cur));
            } else {
                cur.push(Lit::new((v.unsigned_abs() - 1) as u32, v < 0));
            }
        }
    }
    if !cur.is_empty() {
        clauses.push(cur);
    }
    Ok((num_vars.ok_or("missing `p cnf` header")?, clauses))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cls = vec![vec![Lit::new(0, false), Lit::new(2, true)], vec![Lit::new(1, true)]];
        let text = write_dimacs(3, &cls);
        assert_eq!(text, "p cnf 3 2\n1 -3 0\n-2 0\n");
        assert_eq!(parse_dimacs(&text).unwrap(), (3, cls));
    }
}
