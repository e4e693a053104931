//! Phrase-pair records and their TSV representation.
//!
//! Lines carry `phrase1 TAB phrase2`, optionally followed by a score
//! column and, for tagged/aligned data, `tags1 TAB tags2 TAB alignment`
//! where the alignment is space-separated `i-j` index pairs.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// A candidate paraphrase pair with optional confidence score, per-token
/// POS tags, and token alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PhrasePairRecord {
    pub phrase1: Vec<String>,
    pub phrase2: Vec<String>,
    pub score: Option<f64>,
    pub tags1: Option<Vec<String>>,
    pub tags2: Option<Vec<String>>,
    pub alignment: Option<Vec<(usize, usize)>>,
}

impl PhrasePairRecord {
    pub fn new(phrase1: Vec<String>, phrase2: Vec<String>) -> Self {
        PhrasePairRecord {
            phrase1,
            phrase2,
            score: None,
            tags1: None,
            tags2: None,
            alignment: None,
        }
    }

    pub fn from_texts(p1: &str, p2: &str) -> Self {
        PhrasePairRecord::new(
            p1.split_whitespace().map(String::from).collect(),
            p2.split_whitespace().map(String::from).collect(),
        )
    }

    pub fn surface1(&self) -> String {
        self.phrase1.join(" ")
    }

    pub fn surface2(&self) -> String {
        self.phrase2.join(" ")
    }

    fn validate(&self, lineno: usize) -> Result<()> {
        if self.phrase1.is_empty() || self.phrase2.is_empty() {
            return Err(Error::parse(lineno, "empty phrase"));
        }
        if let Some(tags) = &self.tags1 {
            if tags.len() != self.phrase1.len() {
                return Err(Error::parse(lineno, "tags1 do not cover phrase1 tokens"));
            }
        }
        if let Some(tags) = &self.tags2 {
            if tags.len() != self.phrase2.len() {
                return Err(Error::parse(lineno, "tags2 do not cover phrase2 tokens"));
            }
        }
        if let Some(alignment) = &self.alignment {
            for &(i, j) in alignment {
                if i >= self.phrase1.len() || j >= self.phrase2.len() {
                    return Err(Error::parse(
                        lineno,
                        format!("alignment {i}-{j} out of range"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn parse_alignment(field: &str, lineno: usize) -> Result<Vec<(usize, usize)>> {
    field
        .split_whitespace()
        .map(|pair| {
            let (i, j) = pair
                .split_once('-')
                .ok_or_else(|| Error::parse(lineno, format!("bad alignment entry `{pair}`")))?;
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(lineno, format!("bad alignment entry `{pair}`")))
            };
            Ok((parse(i)?, parse(j)?))
        })
        .collect()
}

/// Parse one record line with 2, 3, or 6 tab-separated columns.
pub fn parse_record_line(line: &str, lineno: usize) -> Result<PhrasePairRecord> {
    let cols: Vec<&str> = line.split('\t').collect();
    let mut record = match cols.len() {
        2 | 3 | 6 => PhrasePairRecord::from_texts(cols[0], cols[1]),
        n => {
            return Err(Error::parse(
                lineno,
                format!("expected 2, 3, or 6 columns, found {n}"),
            ))
        }
    };
    if cols.len() >= 3 && !cols[2].trim().is_empty() {
        record.score = Some(cols[2].trim().parse::<f64>().map_err(|_| {
            Error::parse(lineno, format!("non-numeric score `{}`", cols[2]))
        })?);
    }
    if cols.len() == 6 {
        record.tags1 = Some(cols[3].split_whitespace().map(String::from).collect());
        record.tags2 = Some(cols[4].split_whitespace().map(String::from).collect());
        record.alignment = Some(parse_alignment(cols[5], lineno)?);
    }
    record.validate(lineno)?;
    Ok(record)
}

/// Read all records from a TSV stream, skipping blank lines.
pub fn load_records(reader: impl BufRead) -> Result<Vec<PhrasePairRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_record_line(&line, i + 1)?);
    }
    Ok(records)
}

/// Write records back out with the same optional columns they carry.
pub fn save_records(records: &[PhrasePairRecord], mut sink: impl Write) -> Result<()> {
    for r in records {
        write!(sink, "{}\t{}", r.surface1(), r.surface2())?;
        let has_tags = r.tags1.is_some() || r.tags2.is_some() || r.alignment.is_some();
        if let Some(score) = r.score {
            write!(sink, "\t{score}")?;
        } else if has_tags {
            write!(sink, "\t")?;
        }
        if has_tags {
            let join = |tags: &Option<Vec<String>>| {
                tags.as_ref().map(|t| t.join(" ")).unwrap_or_default()
            };
            let alignment = r
                .alignment
                .as_ref()
                .map(|a| {
                    a.iter()
                        .map(|(i, j)| format!("{i}-{j}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            write!(sink, "\t{}\t{}\t{}", join(&r.tags1), join(&r.tags2), alignment)?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn parse_minimal_record() {
        let r = parse_record_line("easy job\tsimple task", 1).unwrap();
        assert_eq!(r.phrase1, vec!["easy", "job"]);
        assert_eq!(r.score, None);
    }

    #[test]
    fn parse_scored_record() {
        let r = parse_record_line("a b\tc d\t0.75", 1).unwrap();
        assert_eq!(r.score, Some(0.75));
    }

    #[test]
    fn parse_tagged_record() {
        let r = parse_record_line("easy job\tsimple task\t\tJ N\tJ N\t0-0 1-1", 1).unwrap();
        assert_eq!(r.tags1.as_ref().unwrap(), &vec!["J", "N"]);
        assert_eq!(r.alignment.as_ref().unwrap(), &vec![(0, 0), (1, 1)]);
        assert_eq!(r.score, None);
    }

    #[test]
    fn parse_rejects_bad_alignment() {
        assert!(parse_record_line("a b\tc\t\tJ N\tN\t5-0", 1).is_err());
        assert!(parse_record_line("a b\tc\t\tJ N\tN\tx-0", 1).is_err());
    }

    #[test]
    fn parse_rejects_uncovered_tags() {
        assert!(parse_record_line("a b\tc\t\tJ\tN\t0-0", 1).is_err());
    }

    #[test]
    fn round_trip_records() {
        let text = "easy job\tsimple task\t0.5\tJ N\tJ N\t0-0 1-1\na b\tc d\n";
        let records = load_records(Cursor::new(text)).unwrap();
        let mut out = Vec::new();
        save_records(&records, &mut out).unwrap();
        let again = load_records(Cursor::new(out)).unwrap();
        assert_eq!(records, again);
    }
}
