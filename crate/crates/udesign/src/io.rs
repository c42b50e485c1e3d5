//! Design text format.
//!
//! First non-comment line: `levels: q1 q2 ... qm`. Every following
//! non-comment line is one run of whitespace-separated integers. Lines
//! starting with `#` and blank lines are ignored.

use crate::design::Design;
use crate::error::{Error, Result};
use std::path::Path;

/// Parses the text format, reporting offending line numbers.
pub fn parse_design(text: &str) -> Result<Design> {
    let mut levels: Option<(Vec<u32>, usize)> = None;
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if levels.is_none() {
            let rest = content.strip_prefix("levels:").ok_or(Error::Parse {
                line,
                message: "expected a `levels: q1 q2 ...` header".into(),
            })?;
            let parsed: std::result::Result<Vec<u32>, _> =
                rest.split_whitespace().map(str::parse).collect();
            let qs = parsed.map_err(|e| Error::Parse {
                line,
                message: format!("bad level count: {e}"),
            })?;
            if qs.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "levels header lists no columns".into(),
                });
            }
            if let Some(&bad) = qs.iter().find(|&&q| q < 2) {
                return Err(Error::Parse {
                    line,
                    message: format!("level count {bad} < 2"),
                });
            }
            levels = Some((qs, line));
            continue;
        }
        let (qs, _) = levels.as_ref().unwrap();
        let parsed: std::result::Result<Vec<u32>, _> =
            content.split_whitespace().map(str::parse).collect();
        let row = parsed.map_err(|e| Error::Parse {
            line,
            message: format!("bad entry: {e}"),
        })?;
        if row.len() != qs.len() {
            return Err(Error::Parse {
                line,
                message: format!("row has {} entries, expected {}", row.len(), qs.len()),
            });
        }
        if let Some((k, &x)) = row.iter().enumerate().find(|&(k, &x)| x >= qs[k]) {
            return Err(Error::Parse {
                line,
                message: format!("entry {x} in column {} exceeds levels 0..{}", k + 1, qs[k]),
            });
        }
        rows.push(row);
    }
    let (qs, header_line) = levels.ok_or(Error::Parse {
        line: 0,
        message: "missing `levels:` header".into(),
    })?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: header_line,
            message: "no design rows after the levels header".into(),
        });
    }
    Design::new(rows, qs)
}

pub fn read_design(path: impl AsRef<Path>) -> Result<Design> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_design(&text)
}

/// Serializes a design so that `parse_design` is its inverse.
pub fn design_to_string(design: &Design) -> String {
    let mut out = String::from("levels:");
    for q in design.levels() {
        out.push(' ');
        out.push_str(&q.to_string());
    }
    out.push('\n');
    for row in design.rows() {
        let mut first = true;
        for x in row {
            if !first {
                out.push(' ');
            }
            out.push_str(&x.to_string());
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn write_design(design: &Design, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), design_to_string(design))?;
    Ok(())
}

/// FNV-1a digest of input bytes, for echoing inputs in reports.
pub fn digest(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_minimal_design() {
        let d = parse_design("levels: 2\n0\n1\n").unwrap();
        assert_eq!(d.runs(), 2);
        assert_eq!(d.levels(), &[2]);
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let d = parse_design("# header\n\nlevels: 2 3\n# data\n0 2\n1 0\n").unwrap();
        assert_eq!(d.runs(), 2);
        assert_eq!(d.columns(), 2);
    }

    #[test]
    fn out_of_range_entry_names_the_line() {
        let err = parse_design("levels: 3\n0\n3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = parse_design("levels: 2 2\n0 1\n0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn missing_header_rejected() {
        assert!(parse_design("0 1\n").is_err());
        assert!(parse_design("").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            n in 1usize..8,
            levels in proptest::collection::vec(2u32..5, 1..6),
            seed in 0u64..1000,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<u32>> = (0..n)
                .map(|_| levels.iter().map(|&q| rng.gen_range(0..q)).collect())
                .collect();
            let d = Design::new(rows, levels).unwrap();
            let text = design_to_string(&d);
            let back = parse_design(&text).unwrap();
            prop_assert_eq!(d, back);
        }
    }
}
