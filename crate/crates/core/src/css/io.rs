//! Text formats for binary matrices: alist (MacKay), MatrixMarket coordinate pattern, JSON.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CssError;
use crate::ff2e::BinaryMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Alist,
    Mtx,
    Json,
}

impl FromStr for MatrixFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "alist" => Ok(MatrixFormat::Alist),
            "mtx" => Ok(MatrixFormat::Mtx),
            "json" => Ok(MatrixFormat::Json),
            other => Err(format!("unknown matrix format {other:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<[usize; 2]>,
}

fn join(v: impl IntoIterator<Item = usize>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn padded(idx: &[usize], width: usize) -> String {
    join(idx.iter().map(|&i| i + 1).chain(std::iter::repeat(0)).take(width))
}

fn alist(m: &BinaryMatrix) -> String {
    let t = m.transpose();
    let col_lists: Vec<Vec<usize>> = (0..m.cols()).map(|c| t.row(c).collect()).collect();
    let row_lists: Vec<Vec<usize>> = (0..m.rows()).map(|r| m.row(r).collect()).collect();
    let cw: Vec<usize> = col_lists.iter().map(Vec::len).collect();
    let rw: Vec<usize> = row_lists.iter().map(Vec::len).collect();
    let (mc, mr) = (cw.iter().copied().max().unwrap_or(0), rw.iter().copied().max().unwrap_or(0));
    let mut lines = vec![format!("{} {}", m.cols(), m.rows()), format!("{mc} {mr}"), join(cw), join(rw)];
    lines.extend(col_lists.iter().map(|l| padded(l, mc)));
    lines.extend(row_lists.iter().map(|l| padded(l, mr)));
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

fn mtx(m: &BinaryMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate pattern general\n");
    s.push_str(&format!("{} {} {}\n", m.rows(), m.cols(), m.nnz()));
    for (r, c) in m.entries() {
        s.push_str(&format!("{} {}\n", r + 1, c + 1));
    }
    s
}

pub fn render(m: &BinaryMatrix, format: MatrixFormat) -> String {
    match format {
        MatrixFormat::Alist => alist(m),
        MatrixFormat::Mtx => mtx(m),
        MatrixFormat::Json => {
            let j = JsonMatrix { rows: m.rows(), cols: m.cols(), entries: m.entries().map(|(r, c)| [r, c]).collect() };
            let mut s = serde_json::to_string(&j).expect("plain data");
            s.push('\n');
            s
        }
    }
}

fn perr(line: usize, msg: impl Into<String>) -> CssError {
    CssError::Parse { line, msg: msg.into() }
}

fn numbers(line: usize, s: &str) -> Result<Vec<usize>, CssError> {
    s.split_whitespace().map(|w| w.parse().map_err(|_| perr(line, format!("bad integer {w:?}")))).collect()
}

fn parse_alist(text: &str) -> Result<BinaryMatrix, CssError> {
    let lines: Vec<&str> = text.lines().collect();
    let get = |i: usize| -> Result<Vec<usize>, CssError> { numbers(i + 1, lines.get(i).copied().unwrap_or("")) };
    let head = get(0)?;
    let [cols, rows] = head[..] else { return Err(perr(1, "expected \"cols rows\"")) };
    let cw = get(2)?;
    let rw = get(3)?;
    if cw.len() != cols || rw.len() != rows {
        return Err(perr(3, "degree list length"));
    }
    let mut entries = Vec::new();
    for c in 0..cols {
        let idx: Vec<usize> = get(4 + c)?.into_iter().filter(|&i| i != 0).collect();
        if idx.len() != cw[c] {
            return Err(perr(5 + c, "column degree mismatch"));
        }
        for r in idx {
            if r > rows {
                return Err(perr(5 + c, "row index out of range"));
            }
            entries.push((r - 1, c));
        }
    }
    let m = BinaryMatrix::from_entries(rows, cols, entries);
    // the row lists must describe the same matrix
    for r in 0..rows {
        let mut idx: Vec<usize> = get(4 + cols + r)?.into_iter().filter(|&i| i != 0).map(|i| i - 1).collect();
        idx.sort_unstable();
        if idx.len() != rw[r] || !idx.iter().copied().eq(m.row(r)) {
            return Err(perr(5 + cols + r, "row list disagrees with column lists"));
        }
    }
    Ok(m)
}

fn parse_mtx(text: &str) -> Result<BinaryMatrix, CssError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('%') && !l.trim().is_empty());
    let (i, head) = lines.next().ok_or_else(|| perr(1, "missing size line"))?;
    let head = numbers(i + 1, head)?;
    let [rows, cols, nnz] = head[..] else { return Err(perr(i + 1, "expected \"rows cols nnz\"")) };
    let mut entries = Vec::with_capacity(nnz);
    for (i, l) in lines {
        let v = numbers(i + 1, l)?;
        let [r, c] = v[..] else { return Err(perr(i + 1, "expected \"row col\"")) };
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(perr(i + 1, "index out of range"));
        }
        entries.push((r - 1, c - 1));
    }
    if entries.len() != nnz {
        return Err(perr(2, format!("expected {nnz} entries, found {}", entries.len())));
    }
    Ok(BinaryMatrix::from_entries(rows, cols, entries))
}

pub fn parse(text: &str, format: MatrixFormat) -> Result<BinaryMatrix, CssError> {
    match format {
        MatrixFormat::Alist => parse_alist(text),
        MatrixFormat::Mtx => parse_mtx(text),
        MatrixFormat::Json => {
            let j: JsonMatrix = serde_json::from_str(text).map_err(|e| perr(e.line(), e.to_string()))?;
            if j.entries.iter().any(|&[r, c]| r >= j.rows || c >= j.cols) {
                return Err(perr(1, "entry out of range"));
            }
            Ok(BinaryMatrix::from_entries(j.rows, j.cols, j.entries.into_iter().map(|[r, c]| (r, c))))
        }
    }
}

pub fn export(m: &BinaryMatrix, format: MatrixFormat, path: &Path) -> Result<(), CssError> {
    std::fs::write(path, render(m, format)).map_err(|e| CssError::Io(format!("{}: {e}", path.display())))
}

pub fn import(path: &Path, format: MatrixFormat) -> Result<BinaryMatrix, CssError> {
    let text = std::fs::read_to_string(path).map_err(|e| CssError::Io(format!("{}: {e}", path.display())))?;
    parse(&text, format)
}
