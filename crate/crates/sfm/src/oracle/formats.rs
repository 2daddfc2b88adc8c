//! Text formats for instance files.
//!
//! Three formats, distinguished by the first token of the header line.
//! Elements and vertex ids are 1-based in files; the library converts to
//! 0-based coordinates internally.
//!
//! Directed cut:
//! ```text
//! cut <n_vertices> <s_id> <t_id>
//! <u> <v> <w>        (one line per edge; integer w >= 0)
//! ```
//! The ground set is the vertices other than `s` and `t`, in increasing
//! id order.
//!
//! Explicit table (`n <= 20`):
//! ```text
//! table <n>
//! <bitmask> <value>  (exactly 2^n lines, each mask once; bit i is element i+1)
//! ```
//!
//! Query-complexity gadget:
//! ```text
//! lb <n>
//! <r1> <r2> ...      (elements of the hidden set R; may be empty or absent)
//! ```

use crate::error::{Error, Result};
use crate::oracle::{AnyInstance, CutInstance, LowerBoundInstance, TableInstance};

/// Ground sets larger than this are rejected at parse time, keeping
/// untrusted input from forcing absurd allocations.
const PARSE_MAX_GROUND: usize = 1 << 20;

fn tokens(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse::<T>()
        .map_err(|_| Error::parse(line, format!("invalid {what}: {tok:?}")))
}

/// Parses an instance from file text. Error messages carry the 1-based
/// line number of the offending line.
pub fn parse_instance(text: &str) -> Result<AnyInstance> {
    // Numbered lines, with trailing blank lines ignored.
    let mut lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .collect();
    while lines.last().is_some_and(|(_, l)| l.trim().is_empty()) {
        lines.pop();
    }
    let Some(&(header_no, header)) = lines.first() else {
        return Err(Error::parse(1, "empty instance file".to_string()));
    };
    let head = tokens(header);
    match head.first().copied() {
        Some("cut") => parse_cut(&head, header_no, &lines[1..]),
        Some("table") => parse_table(&head, header_no, &lines[1..]),
        Some("lb") => parse_lb(&head, header_no, &lines[1..]),
        Some(other) => Err(Error::parse(
            header_no,
            format!("unknown format {other:?}; expected cut, table, or lb"),
        )),
        None => Err(Error::parse(header_no, "missing header".to_string())),
    }
}

fn parse_cut(head: &[&str], header_no: usize, body: &[(usize, &str)]) -> Result<AnyInstance> {
    if head.len() != 4 {
        return Err(Error::parse(header_no, "expected header: cut <n_vertices> <s_id> <t_id>"));
    }
    let n_vertices: usize = parse_num(head[1], header_no, "vertex count")?;
    let s_id: usize = parse_num(head[2], header_no, "source id")?;
    let t_id: usize = parse_num(head[3], header_no, "sink id")?;
    if n_vertices < 3 {
        return Err(Error::parse(
            header_no,
            "need at least 3 vertices so the ground set is non-empty",
        ));
    }
    if n_vertices > PARSE_MAX_GROUND {
        return Err(Error::parse(
            header_no,
            format!("vertex count exceeds the supported maximum {PARSE_MAX_GROUND}"),
        ));
    }
    let in_range = |id: usize| (1..=n_vertices).contains(&id);
    if !in_range(s_id) || !in_range(t_id) || s_id == t_id {
        return Err(Error::parse(header_no, "source and sink must be distinct vertices in range"));
    }
    // Map vertex ids to coordinates: non-terminal vertices in id order.
    let mut coord = vec![usize::MAX; n_vertices + 1];
    let mut next = 0usize;
    for id in 1..=n_vertices {
        if id != s_id && id != t_id {
            coord[id] = next;
            next += 1;
        }
    }
    let map = |id: usize| {
        if id == s_id {
            CutInstance::SOURCE
        } else if id == t_id {
            CutInstance::SINK
        } else {
            coord[id]
        }
    };
    let mut edges = Vec::with_capacity(body.len());
    for &(no, line) in body {
        let t = tokens(line);
        if t.len() != 3 {
            return Err(Error::parse(no, "expected edge line: <u> <v> <w>"));
        }
        let u: usize = parse_num(t[0], no, "vertex id")?;
        let v: usize = parse_num(t[1], no, "vertex id")?;
        let w: u64 = parse_num(t[2], no, "edge weight")?;
        if !in_range(u) || !in_range(v) {
            return Err(Error::parse(no, format!("vertex id out of range 1..={n_vertices}")));
        }
        if u == v {
            return Err(Error::parse(no, "self-loops are not allowed"));
        }
        edges.push((map(u), map(v), w as f64));
    }
    // Edges into s or out of t can never be cut; they are accepted and
    // silently contribute nothing (but do inflate the certified bound).
    let edges = edges
        .into_iter()
        .filter(|&(u, v, _)| v != CutInstance::SOURCE && u != CutInstance::SINK)
        .collect();
    CutInstance::new(next, edges).map(AnyInstance::Cut)
}

fn parse_table(head: &[&str], header_no: usize, body: &[(usize, &str)]) -> Result<AnyInstance> {
    if head.len() != 2 {
        return Err(Error::parse(header_no, "expected header: table <n>"));
    }
    let n: usize = parse_num(head[1], header_no, "ground-set size")?;
    if n == 0 || n > super::TABLE_MAX_N {
        return Err(Error::parse(
            header_no,
            format!("table size must satisfy 1 <= n <= {}", super::TABLE_MAX_N),
        ));
    }
    let size = 1usize << n;
    if body.len() != size {
        let no = body.last().map_or(header_no, |&(no, _)| no);
        return Err(Error::parse(
            no,
            format!("table for n = {n} needs exactly {size} entries, got {}", body.len()),
        ));
    }
    let mut values = vec![None; size];
    for &(no, line) in body {
        let t = tokens(line);
        if t.len() != 2 {
            return Err(Error::parse(no, "expected table line: <bitmask> <value>"));
        }
        let mask: usize = parse_num(t[0], no, "bitmask")?;
        let value: f64 = parse_num(t[1], no, "value")?;
        if mask >= size {
            return Err(Error::parse(no, format!("bitmask {mask} out of range for n = {n}")));
        }
        if !value.is_finite() {
            return Err(Error::parse(no, "value must be finite"));
        }
        if values[mask].replace(value).is_some() {
            return Err(Error::parse(no, format!("duplicate bitmask {mask}")));
        }
    }
    let values = values.into_iter().map(Option::unwrap).collect();
    TableInstance::new(n, values).map(AnyInstance::Table)
}

fn parse_lb(head: &[&str], header_no: usize, body: &[(usize, &str)]) -> Result<AnyInstance> {
    if head.len() != 2 {
        return Err(Error::parse(header_no, "expected header: lb <n>"));
    }
    let n: usize = parse_num(head[1], header_no, "ground-set size")?;
    if n == 0 {
        return Err(Error::parse(header_no, "ground set must be non-empty"));
    }
    if n > PARSE_MAX_GROUND {
        return Err(Error::parse(
            header_no,
            format!("ground-set size exceeds the supported maximum {PARSE_MAX_GROUND}"),
        ));
    }
    if body.len() > 1 {
        return Err(Error::parse(body[1].0, "lb format has a single element line"));
    }
    let mut r = Vec::new();
    if let Some(&(no, line)) = body.first() {
        for tok in tokens(line) {
            let e: usize = parse_num(tok, no, "element")?;
            if e == 0 || e > n {
                return Err(Error::parse(no, format!("element {e} out of range 1..={n}")));
            }
            r.push(e - 1);
        }
        r.sort_unstable();
        if r.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::parse(no, "duplicate element in target set"));
        }
    }
    LowerBoundInstance::new(n, &r).map(AnyInstance::LowerBound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{MaskSet, Submodular};

    #[test]
    fn parses_cut_file() {
        let text = "cut 3 1 3\n1 2 2\n2 3 3\n1 3 1\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.eval(&MaskSet { n: 1, mask: 1 }), 1.0);
        assert_eq!(inst.m_bound(), 6.0);
    }

    #[test]
    fn parses_table_file() {
        let text = "table 2\n0 0\n1 -1\n2 1\n3 0\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.eval(&MaskSet { n: 2, mask: 1 }), -1.0);
        assert_eq!(inst.eval(&MaskSet { n: 2, mask: 3 }), 0.0);
    }

    #[test]
    fn parses_lb_file_including_empty_target() {
        let inst = parse_instance("lb 3\n1 3\n").unwrap();
        assert_eq!(inst.eval(&MaskSet { n: 3, mask: 0b101 }), -1.0);
        let empty = parse_instance("lb 3\n").unwrap();
        assert!(!empty.normalized());
        assert_eq!(empty.eval(&MaskSet { n: 3, mask: 0 }), -1.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_instance("cut 3 1 3\n1 2 2\n2 9 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_instance("table 2\n0 0\n1 -1\n2 1\n3 oops\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        let err = parse_instance("table 2\n0 0\n1 -1\n2 1\n2 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        let err = parse_instance("lb 3\n1 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_instance("").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_instance("mystery 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_fractional_and_negative_weights() {
        assert!(parse_instance("cut 3 1 3\n1 2 1.5\n").is_err());
        assert!(parse_instance("cut 3 1 3\n1 2 -4\n").is_err());
    }

    #[test]
    fn oversized_ground_sets_fail_fast_without_allocating() {
        let err = parse_instance("cut 99999999999 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_instance("lb 99999999999\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }
}
