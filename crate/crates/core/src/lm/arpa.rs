//! ARPA text format.
//!
//! ```text
//! \data\
//! ngram 1=<count>
//! ...
//!
//! \1-grams:
//! <log10 prob>\t<token>[\t<log10 backoff>]
//! ...
//!
//! \2-grams:
//! <log10 prob>\t<token> <token>[\t<log10 backoff>]
//! ...
//! \end\
//! ```
//!
//! Text before `\data\` is ignored. Numbers are written in Rust's shortest
//! round-trip decimal form, so `parse_arpa(write_arpa(m))` reproduces every
//! stored value bit for bit.

use std::fmt::Write as _;

use super::{NgramEntry, NgramModel};
use crate::error::{Error, Result};

pub fn write_arpa(model: &NgramModel) -> String {
    let mut by_order: Vec<Vec<(Vec<&str>, &NgramEntry)>> = vec![Vec::new(); model.order()];
    for (ids, entry) in model.iter_entries() {
        let toks: Vec<&str> = ids.iter().map(|&id| model.token(id)).collect();
        by_order[ids.len() - 1].push((toks, entry));
    }
    let mut out = String::from("\\data\\\n");
    for (k, entries) in by_order.iter().enumerate() {
        let _ = writeln!(out, "ngram {}={}", k + 1, entries.len());
    }
    for (k, entries) in by_order.iter_mut().enumerate() {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let _ = write!(out, "\n\\{}-grams:\n", k + 1);
        for (toks, e) in entries.iter() {
            let _ = write!(out, "{}\t{}", e.log10_prob, toks.join(" "));
            if let Some(b) = e.log10_backoff {
                let _ = write!(out, "\t{b}");
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

fn number(field: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::ArpaSyntax {
        line,
        message: format!("expected a number, found {field:?}"),
    })
}

pub fn parse_arpa(text: &str) -> Result<NgramModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    // Header.
    loop {
        match lines.next() {
            Some((_, "\\data\\")) => break,
            Some(_) => continue,
            None => {
                return Err(Error::ArpaSyntax {
                    line: text.lines().count(),
                    message: "missing \\data\\ section".into(),
                })
            }
        }
    }
    let mut declared: Vec<usize> = Vec::new();
    let mut pending = None;
    for (no, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("ngram ") {
            let (n, count) = rest.split_once('=').ok_or_else(|| Error::ArpaSyntax {
                line: no,
                message: format!("malformed count line {line:?}"),
            })?;
            let n = number(n.trim(), no)? as usize;
            if n != declared.len() + 1 {
                return Err(Error::ArpaSyntax {
                    line: no,
                    message: format!("ngram orders must be consecutive, got {n}"),
                });
            }
            declared.push(number(count.trim(), no)? as usize);
            continue;
        }
        pending = Some((no, line));
        break;
    }
    if declared.is_empty() {
        return Err(Error::ArpaSyntax {
            line: 1,
            message: "no ngram counts declared".into(),
        });
    }

    let mut model = NgramModel::empty(declared.len());
    let mut current: Option<usize> = None;
    let mut found = vec![0usize; declared.len()];
    let mut ended = false;

    let mut handle = |no: usize, line: &str, model: &mut NgramModel| -> Result<bool> {
        if line.is_empty() {
            return Ok(false);
        }
        if line == "\\end\\" {
            return Ok(true);
        }
        if let Some(n) = line.strip_prefix('\\').and_then(|s| s.strip_suffix("-grams:")) {
            let n = number(n, no)? as usize;
            if n == 0 || n > declared.len() {
                return Err(Error::ArpaSyntax {
                    line: no,
                    message: format!("section for undeclared order {n}"),
                });
            }
            if let Some(prev) = current {
                check_count(prev, &declared, &found)?;
            }
            current = Some(n);
            return Ok(false);
        }
        let n = current.ok_or_else(|| Error::ArpaSyntax {
            line: no,
            message: "entry outside an n-gram section".into(),
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let backoff = match fields.len() {
            l if l == n + 1 => None,
            l if l == n + 2 => Some(number(fields[n + 1], no)?),
            l => {
                return Err(Error::ArpaSyntax {
                    line: no,
                    message: format!("expected {} or {} fields, found {l}", n + 1, n + 2),
                })
            }
        };
        let prob = number(fields[0], no)?;
        let ids: Vec<u32> = fields[1..=n].iter().map(|t| model.intern(t)).collect();
        if !model.insert(
            ids,
            NgramEntry {
                log10_prob: prob,
                log10_backoff: backoff,
            },
        ) {
            return Err(Error::ArpaSyntax {
                line: no,
                message: format!("duplicate n-gram {:?}", &fields[1..=n]),
            });
        }
        found[n - 1] += 1;
        Ok(false)
    };

    if let Some((no, line)) = pending {
        ended = handle(no, line, &mut model)?;
    }
    if !ended {
        for (no, line) in lines {
            if handle(no, line, &mut model)? {
                ended = true;
                break;
            }
        }
    }
    if !ended {
        return Err(Error::ArpaMissingEnd);
    }
    for order in 1..=declared.len() {
        check_count(order, &declared, &found)?;
    }
    Ok(model)
}

fn check_count(order: usize, declared: &[usize], found: &[usize]) -> Result<()> {
    if declared[order - 1] != found[order - 1] {
        return Err(Error::ArpaCountMismatch {
            order,
            declared: declared[order - 1],
            found: found[order - 1],
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5\ta\n-0.7\tb\t-0.1\n-99\t<s>\t-0.2\n\n\\end\\\n";

    #[test]
    fn parses_minimal_unigram_file() {
        let m = parse_arpa(MINIMAL).unwrap();
        assert_eq!(m.order(), 1);
        assert_eq!(m.counts(), &[3]);
        assert_eq!(m.score(&[], "a"), -0.5);
        assert_eq!(m.entry_by_tokens(&["b"]).unwrap().log10_backoff, Some(-0.1));
    }

    #[test]
    fn count_mismatch_is_reported() {
        let text = "\\data\\\nngram 1=1\nngram 2=5\n\\1-grams:\n-1\ta\n\\2-grams:\n-1\ta a\n-1\ta b\n-1\tb a\n-1\tb b\n\\end\\\n";
        assert!(matches!(
            parse_arpa(text),
            Err(Error::ArpaCountMismatch { order: 2, declared: 5, found: 4 })
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "\\data\\\nngram 1=1\n\\1-grams:\nnot-a-number\ta\n\\end\\\n";
        assert!(matches!(parse_arpa(text), Err(Error::ArpaSyntax { line: 4, .. })));
        let text = "\\data\\\nngram 1=1\n\\1-grams:\n-1\ta b c d\n\\end\\\n";
        assert!(matches!(parse_arpa(text), Err(Error::ArpaSyntax { line: 4, .. })));
    }

    #[test]
    fn missing_end_is_an_error() {
        let text = "\\data\\\nngram 1=1\n\\1-grams:\n-1\ta\n";
        assert_eq!(parse_arpa(text), Err(Error::ArpaMissingEnd));
    }

    #[test]
    fn write_then_parse_is_exact() {
        let m = parse_arpa(MINIMAL).unwrap();
        let again = parse_arpa(&write_arpa(&m)).unwrap();
        for t in ["a", "b", "<s>"] {
            assert_eq!(m.entry_by_tokens(&[t]), again.entry_by_tokens(&[t]));
        }
    }
}
