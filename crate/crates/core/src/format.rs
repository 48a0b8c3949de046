//! Text serializations of [`Graph`]: bracketed 0/1 adjacency rows and graph6.

use crate::error::{Error, Result};
use crate::graph::{edge_slots, slot_index, Graph};

/// Largest order supported by the short graph6 header.
pub const GRAPH6_MAX_N: usize = 62;

/// Renders the adjacency matrix as bracketed rows of space separated digits:
///
/// ```text
/// [[0 1]
///  [1 0]]
/// ```
pub fn to_adjacency_text(g: &Graph) -> String {
    let a = g.adjacency();
    let n = a.len();
    let mut out = String::with_capacity(n * (2 * n + 3));
    for (r, row) in a.iter().enumerate() {
        out.push_str(if r == 0 { "[[" } else { " [" });
        for (c, x) in row.iter().enumerate() {
            if c > 0 {
                out.push(' ');
            }
            out.push(if *x == 1 { '1' } else { '0' });
        }
        out.push(']');
        if r + 1 == n {
            out.push(']');
        } else {
            out.push('\n');
        }
    }
    out
}

/// Parses the bracketed row format. Leading indentation and blank lines are ignored.
pub fn from_adjacency_text(text: &str) -> Result<Graph> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::parse("row 0", "no matrix rows found"));
    }
    if !lines[0].starts_with("[[") {
        return Err(Error::parse("row 0", "matrix must start with `[[`"));
    }
    if !lines[lines.len() - 1].ends_with("]]") {
        return Err(Error::parse(
            format!("row {}", lines.len() - 1),
            "matrix must end with `]]`",
        ));
    }

    let mut rows = Vec::with_capacity(lines.len());
    for (r, line) in lines.iter().enumerate() {
        let body = line.trim_start_matches('[').trim_end_matches(']');
        let open = line.len() - line.trim_start_matches('[').len();
        let close = line.len() - line.trim_end_matches(']').len();
        let (want_open, want_close) = (
            if r == 0 { 2 } else { 1 },
            if r + 1 == lines.len() { 2 } else { 1 },
        );
        if open != want_open || close != want_close {
            return Err(Error::parse(format!("row {r}"), "unbalanced brackets"));
        }
        let row = body
            .split_whitespace()
            .map(|tok| match tok {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::parse(format!("row {r}"), format!("unexpected token `{other}`"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(row);
    }
    Graph::from_adjacency(&rows)
}

pub fn to_graph6(g: &Graph) -> Result<String> {
    let n = g.n();
    if n > GRAPH6_MAX_N {
        return Err(Error::Domain(format!(
            "graph6 short form supports n <= {GRAPH6_MAX_N}, got {n}"
        )));
    }
    let mut out = Vec::with_capacity(1 + edge_slots(n).div_ceil(6));
    out.push(n as u8 + 63);

    let bits = g.bits();
    let mut acc = 0u8;
    let mut filled = 0;
    // graph6 walks the upper triangle column by column.
    for j in 1..n {
        for i in 0..j {
            acc = (acc << 1) | bits[slot_index(n, i, j)] as u8;
            filled += 1;
            if filled == 6 {
                out.push(acc + 63);
                acc = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        out.push((acc << (6 - filled)) + 63);
    }
    Ok(String::from_utf8(out).expect("graph6 bytes are printable ASCII"))
}

pub fn from_graph6(text: &str) -> Result<Graph> {
    let bytes = text.trim().as_bytes();
    let bytes = bytes.strip_prefix(b">>graph6<<").unwrap_or(bytes);
    let Some(&head) = bytes.first() else {
        return Err(Error::parse("byte 0", "empty graph6 string"));
    };
    if !(63..=126).contains(&head) {
        return Err(Error::parse("byte 0", format!("byte {head} outside the printable range")));
    }
    if head == 126 {
        return Err(Error::parse(
            "byte 0",
            format!("long-form header (n > {GRAPH6_MAX_N}) is not supported"),
        ));
    }
    let n = (head - 63) as usize;
    if n == 0 {
        return Err(Error::parse("byte 0", "graph6 string encodes an empty vertex set"));
    }
    let slots = edge_slots(n);
    let want = slots.div_ceil(6);
    let body = &bytes[1..];
    if body.len() != want {
        return Err(Error::parse(
            format!("byte {}", 1 + body.len().min(want)),
            format!("expected {want} data bytes for n = {n}, found {}", body.len()),
        ));
    }

    let mut bits = vec![false; slots];
    let mut pos = 0;
    for (k, &b) in body.iter().enumerate() {
        if !(63..=126).contains(&b) {
            return Err(Error::parse(format!("byte {}", k + 1), format!("byte {b} outside the printable range")));
        }
        let chunk = b - 63;
        for shift in (0..6).rev() {
            let bit = (chunk >> shift) & 1 == 1;
            if pos < slots {
                let (i, j) = column_pair(pos);
                bits[slot_index(n, i, j)] = bit;
            } else if bit {
                return Err(Error::parse(format!("byte {}", k + 1), "nonzero padding bit"));
            }
            pos += 1;
        }
    }
    Graph::from_bits(n, bits)
}

/// Pair `(i, j)` at position `p` of the column-wise upper-triangle walk.
fn column_pair(p: usize) -> (usize, usize) {
    let mut j = 1;
    let mut start = 0;
    while start + j <= p {
        start += j;
        j += 1;
    }
    (p - start, j)
}
