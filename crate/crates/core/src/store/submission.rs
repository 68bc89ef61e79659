//! Submission file ingestion.
//!
//! Accepted forms, one record per line:
//! - `label` per line, position given by line order;
//! - `id,label` pairs with ids `0..n` in any order.
//!
//! Either form may start with a single `id,label` header. Log-loss
//! competitions use the same layout with a probability in place of the label.

use crate::losses::{Label, LabelAlphabet, LabelVector, LossKind, Predictions};
use crate::{Error, Result};

/// What a competition expects in each record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmissionFormat {
    Labels(LabelAlphabet),
    Probabilities,
}

impl SubmissionFormat {
    pub fn for_loss(loss: LossKind, alphabet: LabelAlphabet) -> Self {
        match loss {
            LossKind::ZeroOne => SubmissionFormat::Labels(alphabet),
            LossKind::ClippedLog => SubmissionFormat::Probabilities,
        }
    }
}

/// Parses a binary-or-wider label submission of exactly `n` records.
pub fn parse_submission_file(bytes: &[u8], n: usize, alphabet: LabelAlphabet) -> Result<LabelVector> {
    match parse_predictions(bytes, n, SubmissionFormat::Labels(alphabet))? {
        Predictions::Labels(v) => Ok(v),
        Predictions::Probabilities(_) => unreachable!(),
    }
}

pub fn parse_predictions(bytes: &[u8], n: usize, format: SubmissionFormat) -> Result<Predictions> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    // (line, position, value)
    let mut rows: Vec<(u64, usize, String)> = Vec::with_capacity(n);
    let mut seen_ids: Vec<bool> = Vec::new();
    let mut keyed: Option<bool> = None;
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(|e| csv_error(&e))? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| Error::Parse { line, message };
        if line == 1 && record.len() == 2 && &record[0] == "id" && &record[1] == "label" {
            continue;
        }
        let pairs = match record.len() {
            1 if record[0].is_empty() => return Err(parse_err("empty record".into())),
            1 => false,
            2 => true,
            k => return Err(parse_err(format!("expected 1 or 2 fields, found {k}"))),
        };
        if *keyed.get_or_insert(pairs) != pairs {
            return Err(parse_err("mixes positional and id,label records".into()));
        }
        let position = if pairs {
            let id: usize = record[0]
                .parse()
                .map_err(|_| parse_err(format!("id {:?} is not a non-negative integer", &record[0])))?;
            if id >= n {
                return Err(parse_err(format!("id {id} out of range for {n} records")));
            }
            seen_ids.resize(n, false);
            if std::mem::replace(&mut seen_ids[id], true) {
                return Err(parse_err(format!("duplicate id {id}")));
            }
            id
        } else {
            rows.len()
        };
        rows.push((line, position, record[record.len() - 1].to_string()));
    }
    if rows.len() != n {
        return Err(Error::RecordCount {
            expected: n,
            found: rows.len(),
        });
    }

    match format {
        SubmissionFormat::Labels(alphabet) => {
            let mut out: Vec<Label> = vec![0; n];
            for (line, pos, v) in rows {
                let label: Label = v.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("label {v:?} is not a non-negative integer"),
                })?;
                if !alphabet.contains(label) {
                    return Err(Error::Parse {
                        line,
                        message: format!("label {label} outside alphabet of size {}", alphabet.size()),
                    });
                }
                out[pos] = label;
            }
            Ok(Predictions::Labels(LabelVector::new(out, alphabet)?))
        }
        SubmissionFormat::Probabilities => {
            let mut out = vec![0.0; n];
            for (line, pos, v) in rows {
                let p: f64 = v.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("probability {v:?} is not a number"),
                })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Parse {
                        line,
                        message: format!("probability {p} outside [0, 1]"),
                    });
                }
                out[pos] = p;
            }
            Ok(Predictions::Probabilities(out))
        }
    }
}

/// Parses the canonical form (one value per line, no header, trailing
/// newline) that stored submissions are kept in. Much faster than the
/// general parser, and stricter.
pub fn parse_canonical(bytes: &[u8], n: usize, format: SubmissionFormat) -> Result<Predictions> {
    let body = bytes
        .strip_suffix(b"\n")
        .ok_or_else(|| Error::input("canonical submission must end with a newline"))?;
    let lines = body.split(|&b| b == b'\n');
    let bad = |line: usize, what: &str| Error::Parse {
        line: line as u64 + 1,
        message: format!("not a canonical {what}"),
    };
    match format {
        SubmissionFormat::Labels(alphabet) => {
            let mut out: Vec<Label> = Vec::with_capacity(n);
            for (i, line) in lines.enumerate() {
                if line.is_empty() || line.len() > 9 || !line.iter().all(u8::is_ascii_digit) {
                    return Err(bad(i, "label"));
                }
                let label = line.iter().fold(0u32, |acc, d| acc * 10 + u32::from(d - b'0'));
                if !alphabet.contains(label) {
                    return Err(bad(i, "label"));
                }
                out.push(label);
            }
            if out.len() != n {
                return Err(Error::RecordCount {
                    expected: n,
                    found: out.len(),
                });
            }
            Ok(Predictions::Labels(LabelVector::new(out, alphabet)?))
        }
        SubmissionFormat::Probabilities => {
            let mut out = Vec::with_capacity(n);
            for (i, line) in lines.enumerate() {
                let p: f64 = std::str::from_utf8(line)
                    .ok()
                    .and_then(|t| t.parse().ok())
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| bad(i, "probability"))?;
                out.push(p);
            }
            if out.len() != n {
                return Err(Error::RecordCount {
                    expected: n,
                    found: out.len(),
                });
            }
            Ok(Predictions::Probabilities(out))
        }
    }
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: LabelAlphabet = LabelAlphabet::BINARY;

    fn labels(v: &LabelVector) -> Vec<u32> {
        v.as_slice().to_vec()
    }

    #[test]
    fn header_and_pairs() {
        let v = parse_submission_file(b"id,label\n0,1\n1,0\n", 2, B).unwrap();
        assert_eq!(labels(&v), [1, 0]);
    }

    #[test]
    fn positional() {
        let v = parse_submission_file(b"1\n0\n1\n", 3, B).unwrap();
        assert_eq!(labels(&v), [1, 0, 1]);
    }

    #[test]
    fn ids_define_position() {
        let v = parse_submission_file(b"2,1\n0,0\n1,1\n", 3, B).unwrap();
        assert_eq!(labels(&v), [0, 1, 1]);
    }

    #[test]
    fn tolerates_whitespace_and_crlf() {
        let v = parse_submission_file(b"id,label\r\n 0 , 1 \r\n1,0\r\n", 2, B).unwrap();
        assert_eq!(labels(&v), [1, 0]);
        let v = parse_submission_file(b"0\n1", 2, B).unwrap();
        assert_eq!(labels(&v), [0, 1]);
    }

    #[test]
    fn wrong_count() {
        let body = "0\n".repeat(11999);
        let err = parse_submission_file(body.as_bytes(), 12000, B).unwrap_err();
        assert_eq!(err.to_string(), "expected 12000 records, found 11999");
    }

    #[test]
    fn errors_name_the_line() {
        let cases: [(&[u8], u64); 5] = [
            (b"0,1\n0,0\n", 2),
            (b"1\n2\n", 2),
            (b"1\nx\n", 2),
            (b"0,1\n1\n", 2),
            (b"id,label\n0,1\n5,0\n", 3),
        ];
        for (body, line) in cases {
            match parse_submission_file(body, 2, B) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{:?}", std::str::from_utf8(body)),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn rejects_non_utf8() {
        assert!(parse_submission_file(b"\xff\n0\n", 2, B).is_err());
    }

    #[test]
    fn probabilities() {
        let p = parse_predictions(b"id,label\n1,0.25\n0,1\n", 2, SubmissionFormat::Probabilities).unwrap();
        assert_eq!(p, Predictions::Probabilities(vec![1.0, 0.25]));
        assert!(parse_predictions(b"1.5\n0\n", 2, SubmissionFormat::Probabilities).is_err());
    }

    #[test]
    fn canonical_parser_agrees_and_is_strict() {
        let body = b"1\n0\n1\n";
        assert_eq!(
            parse_canonical(body, 3, SubmissionFormat::Labels(B)).unwrap(),
            parse_predictions(body, 3, SubmissionFormat::Labels(B)).unwrap()
        );
        for bad in [&b"1\n0\n1"[..], b"1\n 0\n1\n", b"id,label\n1\n0\n", b"1\n2\n1\n", b"1\n\n1\n"] {
            assert!(parse_canonical(bad, 3, SubmissionFormat::Labels(B)).is_err());
        }
        let p = Predictions::Probabilities(vec![0.1, 1.0 / 3.0, 1.0]);
        assert_eq!(parse_canonical(&p.canonical_bytes(), 3, SubmissionFormat::Probabilities).unwrap(), p);
    }

    #[test]
    fn canonical_form_round_trips() {
        let v = parse_submission_file(b"id,label\n1,1\n0,0\n2,1\n", 3, B).unwrap();
        let bytes = Predictions::Labels(v.clone()).canonical_bytes();
        assert_eq!(bytes, b"0\n1\n1\n");
        assert_eq!(parse_submission_file(&bytes, 3, B).unwrap(), v);
    }
}
