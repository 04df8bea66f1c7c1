//! The MXT text format for matrix stacks.
//!
//! Layout:
//!
//! ```text
//! #mxt v1 n=<n> p=<p> q=<q>
//! <q numbers>      } p lines, block 1
//! ...
//!                  } one blank line between blocks
//! <q numbers>      } block 2
//! ```
//!
//! Numbers are printed with 17 significant digits, so
//! parse -> serialize -> parse is the identity on values.

use nalgebra::DMatrix;

use super::{fmt_full, CliError};
use crate::stack::MatrixStack;

/// Parse an MXT document, reporting 1-based line numbers on failure.
pub fn parse_mxt(text: &str) -> Result<MatrixStack, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::input("empty MXT document"))?;
    let (n, p, q) = parse_header(header)?;

    let mut data: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut current: Vec<Vec<f64>> = Vec::with_capacity(p);
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            if !current.is_empty() {
                return Err(CliError::input_at(
                    line_no,
                    format!(
                        "blank line inside a block: expected {p} rows, got {}",
                        current.len()
                    ),
                ));
            }
            continue;
        }
        let mut row = Vec::with_capacity(q);
        for token in line.split(' ').filter(|t| !t.is_empty()) {
            let value: f64 = token.parse().map_err(|_| {
                CliError::input_at(line_no, format!("cannot parse '{token}' as a number"))
            })?;
            if !value.is_finite() {
                return Err(CliError::input_at(
                    line_no,
                    format!("non-finite value '{token}'"),
                ));
            }
            row.push(value);
        }
        if row.len() != q {
            return Err(CliError::input_at(
                line_no,
                format!("expected {q} values per row, got {}", row.len()),
            ));
        }
        current.push(row);
        if current.len() == p {
            let block = std::mem::take(&mut current);
            data.push(DMatrix::from_fn(p, q, |i, j| block[i][j]));
        }
    }
    if !current.is_empty() {
        return Err(CliError::input(format!(
            "truncated final block: expected {p} rows, got {}",
            current.len()
        )));
    }
    if data.len() != n {
        return Err(CliError::input(format!(
            "header declares n={n} observations, body contains {}",
            data.len()
        )));
    }
    MatrixStack::new(data).map_err(CliError::from)
}

fn parse_header(header: &str) -> Result<(usize, usize, usize), CliError> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some("#mxt") || parts.next() != Some("v1") {
        return Err(CliError::input_at(
            1,
            "header must start with '#mxt v1'".to_string(),
        ));
    }
    let mut n = None;
    let mut p = None;
    let mut q = None;
    for part in parts {
        let (key, value) = part.split_once('=').ok_or_else(|| {
            CliError::input_at(1, format!("malformed header field '{part}'"))
        })?;
        let parsed: usize = value
            .parse()
            .map_err(|_| CliError::input_at(1, format!("invalid header value '{part}'")))?;
        match key {
            "n" => n = Some(parsed),
            "p" => p = Some(parsed),
            "q" => q = Some(parsed),
            other => {
                return Err(CliError::input_at(1, format!("unknown header key '{other}'")))
            }
        }
    }
    match (n, p, q) {
        (Some(n), Some(p), Some(q)) if n > 0 && p > 0 && q > 0 => Ok((n, p, q)),
        (Some(_), Some(_), Some(_)) => {
            Err(CliError::input_at(1, "n, p, q must be positive".to_string()))
        }
        _ => Err(CliError::input_at(
            1,
            "header must declare n=, p= and q=".to_string(),
        )),
    }
}

/// Serialize a stack in MXT form.
pub fn write_mxt(stack: &MatrixStack) -> String {
    let (n, p, q) = (stack.n(), stack.p(), stack.q());
    let mut out = format!("#mxt v1 n={n} p={p} q={q}\n");
    for (b, m) in stack.iter().enumerate() {
        if b > 0 {
            out.push('\n');
        }
        for i in 0..p {
            let row: Vec<String> = (0..q).map(|j| fmt_full(m[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Parse a headerless numeric CSV in which each row is one observation,
/// column-stacked: position `i + j p` holds entry `(i, j)`.
pub fn parse_csv_stack(text: &str, p: usize, q: usize) -> Result<MatrixStack, CliError> {
    if p == 0 || q == 0 {
        return Err(CliError::Precondition(
            "--rows and --cols must be positive".into(),
        ));
    }
    let mut data = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut values = Vec::with_capacity(p * q);
        for token in line.split(',') {
            let token = token.trim();
            let value: f64 = token.parse().map_err(|_| {
                CliError::input_at(line_no, format!("cannot parse '{token}' as a number"))
            })?;
            if !value.is_finite() {
                return Err(CliError::input_at(
                    line_no,
                    format!("non-finite value '{token}'"),
                ));
            }
            values.push(value);
        }
        if values.len() != p * q {
            return Err(CliError::input_at(
                line_no,
                format!("expected {} values per row, got {}", p * q, values.len()),
            ));
        }
        data.push(DMatrix::from_fn(p, q, |i, j| values[i + j * p]));
    }
    if data.is_empty() {
        return Err(CliError::input("no observations in CSV input"));
    }
    MatrixStack::new(data).map_err(CliError::from)
}
