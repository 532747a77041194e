//! Flat key-value configuration files with one nesting level for lists.
//!
//! Grammar (one assignment per entry, `#` starts a comment):
//!
//! ```text
//! key = value                            # number or bare word
//! key = [ {f=v, f=v, f=[a, b]}, {...} ]  # list of records
//! key = [ [1, 2, 3], [4, 5, 6] ]         # matrix of numbers
//! ```
//!
//! Lists may span multiple lines; brackets are balanced across lines.
//! Unknown keys are rejected so typos fail loudly.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, message: message.into() })
}

/// A record field: a scalar token or a bracket list of scalar tokens.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(String),
    List(Vec<String>),
}

/// A top-level value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(String),
    Records(Vec<BTreeMap<String, Field>>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, (usize, Value)>,
}

pub fn parse(text: &str) -> Result<Config, ParseError> {
    let mut entries = BTreeMap::new();
    let mut pending: Option<(usize, String, String)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(cut) => &raw[..cut],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some((start, key, mut acc)) = pending.take() {
            acc.push(' ');
            acc.push_str(line);
            if balanced(&acc) {
                let value = parse_value(start, acc.trim())?;
                entries.insert(key, (start, value));
            } else {
                pending = Some((start, key, acc));
            }
            continue;
        }
        let Some((key, rest)) = line.split_once('=') else {
            return err(line_no, format!("expected `key = value`, got `{line}`"));
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            return err(line_no, "empty key");
        }
        if entries.contains_key(&key) {
            return err(line_no, format!("duplicate key `{key}`"));
        }
        let rest = rest.trim().to_string();
        if balanced(&rest) {
            let value = parse_value(line_no, &rest)?;
            entries.insert(key, (line_no, value));
        } else {
            pending = Some((line_no, key, rest));
        }
    }
    if let Some((line, key, _)) = pending {
        return err(line, format!("unclosed bracket in `{key}`"));
    }
    Ok(Config { entries })
}

fn balanced(s: &str) -> bool {
    let opens = s.chars().filter(|&c| c == '[' || c == '{').count();
    let closes = s.chars().filter(|&c| c == ']' || c == '}').count();
    opens <= closes
}

fn parse_value(line: usize, text: &str) -> Result<Value, ParseError> {
    if !text.starts_with('[') {
        if text.is_empty() {
            return err(line, "missing value");
        }
        if text.contains(['[', ']', '{', '}']) {
            return err(line, format!("malformed value `{text}`"));
        }
        return Ok(Value::Scalar(text.to_string()));
    }
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| ParseError { line, message: format!("malformed list `{text}`") })?
        .trim();
    if inner.is_empty() {
        return Ok(Value::Records(Vec::new()));
    }
    if inner.starts_with('{') {
        let mut records = Vec::new();
        for chunk in split_groups(line, inner, '{', '}')? {
            records.push(parse_record(line, &chunk)?);
        }
        Ok(Value::Records(records))
    } else if inner.starts_with('[') {
        let mut rows = Vec::new();
        for chunk in split_groups(line, inner, '[', ']')? {
            let mut row = Vec::new();
            for tok in chunk.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                row.push(tok.parse::<f64>().map_err(|_| ParseError {
                    line,
                    message: format!("`{tok}` is not a number"),
                })?);
            }
            rows.push(row);
        }
        Ok(Value::Matrix(rows))
    } else {
        err(line, format!("a list must contain records or rows, got `{inner}`"))
    }
}

/// Splits `a, b, c` where each element is wrapped in the given delimiters.
fn split_groups(
    line: usize,
    text: &str,
    open: char,
    close: char,
) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        if c == open {
            depth += 1;
            if depth == 1 {
                current.clear();
                continue;
            }
        } else if c == close {
            if depth == 0 {
                return err(line, format!("unbalanced `{close}`"));
            }
            depth -= 1;
            if depth == 0 {
                out.push(current.trim().to_string());
                continue;
            }
        } else if depth == 0 {
            if c != ',' && !c.is_whitespace() {
                return err(line, format!("unexpected `{c}` between list items"));
            }
            continue;
        }
        current.push(c);
    }
    if depth != 0 {
        return err(line, format!("unclosed `{open}`"));
    }
    Ok(out)
}

fn parse_record(line: usize, text: &str) -> Result<BTreeMap<String, Field>, ParseError> {
    let mut record = BTreeMap::new();
    // split on commas outside brackets
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '[' => {
                depth += 1;
                current.push(c);
            }
            ']' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if depth == 0 => {
                parts.push(current.clone());
                current.clear();
            }
            _ => current.push(c),
        }
    }
    parts.push(current);
    for part in parts {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((k, v)) = part.split_once('=') else {
            return err(line, format!("expected `field = value`, got `{part}`"));
        };
        let key = k.trim().to_string();
        let v = v.trim();
        let field = if let Some(list) = v.strip_prefix('[') {
            let list = list
                .strip_suffix(']')
                .ok_or_else(|| ParseError { line, message: format!("malformed list `{v}`") })?;
            Field::List(
                list.split(',')
                    .map(|t| t.trim().to_string())
                    .filter(|t| !t.is_empty())
                    .collect(),
            )
        } else {
            Field::Scalar(v.to_string())
        };
        if record.insert(key.clone(), field).is_some() {
            return err(line, format!("duplicate field `{key}`"));
        }
    }
    Ok(record)
}

impl Config {
    /// Rejects any key outside the given set, naming the offenders.
    pub fn expect_keys(&self, known: &[&str]) -> Result<(), ParseError> {
        for (key, (line, _)) in &self.entries {
            if !known.contains(&key.as_str()) {
                return err(
                    *line,
                    format!("unknown key `{key}` (expected one of: {})", known.join(", ")),
                );
            }
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&(usize, Value), ParseError> {
        self.entries
            .get(key)
            .ok_or_else(|| ParseError { line: 0, message: format!("missing key `{key}`") })
    }

    pub fn scalar(&self, key: &str) -> Result<&str, ParseError> {
        let (line, value) = self.get(key)?;
        match value {
            Value::Scalar(s) => Ok(s),
            _ => err(*line, format!("`{key}` must be a scalar")),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, ParseError> {
        let (line, _) = self.get(key)?;
        let line = *line;
        self.scalar(key)?
            .parse()
            .map_err(|_| ParseError { line, message: format!("`{key}` is not a number") })
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ParseError> {
        if self.has(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, ParseError> {
        let (line, _) = self.get(key)?;
        let line = *line;
        self.scalar(key)?
            .parse()
            .map_err(|_| ParseError { line, message: format!("`{key}` is not an integer") })
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ParseError> {
        if self.has(key) {
            self.u64(key)
        } else {
            Ok(default)
        }
    }

    pub fn records(&self, key: &str) -> Result<&[BTreeMap<String, Field>], ParseError> {
        let (line, value) = self.get(key)?;
        match value {
            Value::Records(r) => Ok(r),
            _ => err(*line, format!("`{key}` must be a list of records")),
        }
    }

    pub fn matrix(&self, key: &str) -> Result<&[Vec<f64>], ParseError> {
        let (line, value) = self.get(key)?;
        match value {
            Value::Matrix(m) => Ok(m),
            _ => err(*line, format!("`{key}` must be a list of number rows")),
        }
    }
}

/// Field accessors for records, erroring with the record index.
pub fn rec_f64(rec: &BTreeMap<String, Field>, idx: usize, key: &str) -> Result<f64, ParseError> {
    match rec.get(key) {
        Some(Field::Scalar(s)) => s.parse().map_err(|_| ParseError {
            line: 0,
            message: format!("record {idx}: `{key}` is not a number"),
        }),
        Some(Field::List(_)) => {
            err(0, format!("record {idx}: `{key}` must be a scalar"))
        }
        None => err(0, format!("record {idx}: missing field `{key}`")),
    }
}

pub fn rec_u64(rec: &BTreeMap<String, Field>, idx: usize, key: &str) -> Result<u64, ParseError> {
    match rec.get(key) {
        Some(Field::Scalar(s)) => s.parse().map_err(|_| ParseError {
            line: 0,
            message: format!("record {idx}: `{key}` is not an integer"),
        }),
        _ => err(0, format!("record {idx}: missing integer field `{key}`")),
    }
}

pub fn rec_str<'a>(
    rec: &'a BTreeMap<String, Field>,
    idx: usize,
    key: &str,
) -> Result<&'a str, ParseError> {
    match rec.get(key) {
        Some(Field::Scalar(s)) => Ok(s),
        _ => err(0, format!("record {idx}: missing field `{key}`")),
    }
}

pub fn rec_list<'a>(
    rec: &'a BTreeMap<String, Field>,
    idx: usize,
    key: &str,
) -> Result<&'a [String], ParseError> {
    match rec.get(key) {
        Some(Field::List(items)) => Ok(items),
        _ => err(0, format!("record {idx}: missing list field `{key}`")),
    }
}

pub fn rec_expect_keys(
    rec: &BTreeMap<String, Field>,
    idx: usize,
    known: &[&str],
) -> Result<(), ParseError> {
    for key in rec.keys() {
        if !known.contains(&key.as_str()) {
            return err(
                0,
                format!("record {idx}: unknown field `{key}` (expected one of: {})", known.join(", ")),
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_records_and_matrices() {
        let cfg = parse(
            "# demo\n\
             capacity = 2\n\
             classes = [ {slots=1, arrival_rate=0.3, mean_holding_time=3},\n\
                         {slots=2, arrival_rate=0.2, mean_holding_time=5} ]\n\
             routing = [ [0, 1], [0.5, 0] ]\n",
        )
        .unwrap();
        assert_eq!(cfg.u64("capacity").unwrap(), 2);
        let classes = cfg.records("classes").unwrap();
        assert_eq!(classes.len(), 2);
        assert_eq!(rec_f64(&classes[1], 1, "arrival_rate").unwrap(), 0.2);
        assert_eq!(cfg.matrix("routing").unwrap()[1][0], 0.5);
    }

    #[test]
    fn record_lists_and_unknown_keys() {
        let cfg = parse(
            "links = [ {id=a, capacity=10}, {id=b, capacity=5} ]\n\
             routes = [ {links=[a, b], offered=8.0} ]\n",
        )
        .unwrap();
        let routes = cfg.records("routes").unwrap();
        assert_eq!(rec_list(&routes[0], 0, "links").unwrap(), &["a", "b"]);
        assert!(cfg.expect_keys(&["links", "routes"]).is_ok());
        assert!(cfg.expect_keys(&["links"]).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("x = 1\nbroken line\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("x = [ {a=1}\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse("x = 1\nx = 2\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
