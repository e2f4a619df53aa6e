//! Line-oriented reader shared by the `.fgi` and `.frt` text formats.

use std::str::FromStr;

use crate::{Error, Result};

/// Formats a float with 17 significant digits, which round-trips exactly.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    what: &'static str,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(text: &'a str, what: &'static str) -> Self {
        Reader {
            lines: text.lines().enumerate(),
            what,
        }
    }

    /// Next non-blank, non-comment line as (1-based line number, trimmed text).
    pub(crate) fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (idx, raw) in self.lines.by_ref() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((idx + 1, line));
        }
        Err(Error::Truncated(self.what.to_string()))
    }

    /// Reads a line starting with `key` and returns the remaining tokens.
    pub(crate) fn expect_key(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line_no, line) = self.next_line()?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some(k) if k == key => Ok((line_no, tokens.collect())),
            Some(k) => Err(parse_err(line_no, format!("expected `{key}`, found `{k}`"))),
            None => Err(parse_err(line_no, format!("expected `{key}`"))),
        }
    }

    pub(crate) fn value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (line_no, tokens) = self.expect_key(key)?;
        match tokens.as_slice() {
            [v] => parse_token(line_no, v),
            _ => Err(parse_err(line_no, format!("`{key}` takes exactly one value"))),
        }
    }

    pub(crate) fn row<T: FromStr>(&mut self, len: usize) -> Result<Vec<T>> {
        let (line_no, line) = self.next_line()?;
        let row = line
            .split_whitespace()
            .map(|t| parse_token(line_no, t))
            .collect::<Result<Vec<T>>>()?;
        if row.len() != len {
            return Err(parse_err(
                line_no,
                format!("expected {len} values, found {}", row.len()),
            ));
        }
        Ok(row)
    }

    pub(crate) fn rows<T: FromStr>(&mut self, count: usize, len: usize) -> Result<Vec<Vec<T>>> {
        (0..count).map(|_| self.row(len)).collect()
    }
}

pub(crate) fn parse_token<T: FromStr>(line: usize, token: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{token}`")))
}

pub(crate) fn parse_err(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

/// Parses a `MAGIC <version>` header line.
pub(crate) fn read_header(reader: &mut Reader<'_>, magic: &str, supported: u32) -> Result<()> {
    let (line_no, tokens) = reader.expect_key(magic)?;
    let found: u32 = match tokens.as_slice() {
        [v] => parse_token(line_no, v.trim_start_matches('v'))?,
        _ => return Err(parse_err(line_no, "missing format version".into())),
    };
    if found != supported {
        return Err(Error::VersionMismatch { found, supported });
    }
    Ok(())
}
