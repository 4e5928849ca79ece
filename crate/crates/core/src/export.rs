//! CSV output with `# key = value` comment lines carrying the configuration.
//! Output is a pure function of its inputs: no timestamps, no hostnames.

use std::io::Write;

use crate::error::Result;

/// Writes the comment block and returns a CSV writer positioned after it.
pub fn commented_csv<W: Write>(mut out: W, comments: &[(String, String)]) -> Result<csv::Writer<W>> {
    for (k, v) in comments {
        // keep every comment on one line
        let v = v.replace(['\n', '\r'], " ");
        writeln!(out, "# {k} = {v}")?;
    }
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(out))
}

/// Formats a float in its shortest round-trip form; non-finite values are
/// spelled `inf`, `-inf`, `nan`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        // Display never switches to exponent form
        format!("{x:e}")
    }
}

/// One comment entry; `value` is rendered as compact JSON.
pub fn comment<T: serde::Serialize>(key: &str, value: &T) -> (String, String) {
    let v = serde_json::to_string(value).unwrap_or_else(|_| "null".into());
    (key.to_string(), v)
}

/// Reads back a file written by [`commented_csv`]: comment pairs and rows.
pub fn read_commented_csv(text: &str) -> Result<(Vec<(String, String)>, Vec<Vec<String>>)> {
    let mut comments = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once(" = ") {
                comments.push((k.to_string(), v.to_string()));
                continue;
            }
        }
        body.push_str(line);
        body.push('\n');
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok((comments, rows))
}
