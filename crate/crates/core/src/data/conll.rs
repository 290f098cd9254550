use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnRole {
    Word,
    Pos,
    Label,
    Ignore,
}

/// Role of each whitespace-separated column, by position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnRoles(Vec<ColumnRole>);

impl ColumnRoles {
    pub fn new(roles: Vec<ColumnRole>) -> Result<Self> {
        let count = |r| roles.iter().filter(|&&x| x == r).count();
        if count(ColumnRole::Word) != 1 {
            return Err(Error::config("column roles need exactly one `word` column"));
        }
        if count(ColumnRole::Pos) > 1 || count(ColumnRole::Label) > 1 {
            return Err(Error::config("at most one `pos` and one `label` column"));
        }
        Ok(ColumnRoles(roles))
    }

    pub fn roles(&self) -> &[ColumnRole] {
        &self.0
    }

    fn position(&self, role: ColumnRole) -> Option<usize> {
        self.0.iter().position(|&r| r == role)
    }

    pub fn has(&self, role: ColumnRole) -> bool {
        self.position(role).is_some()
    }
}

impl Default for ColumnRoles {
    fn default() -> Self {
        ColumnRoles(vec![ColumnRole::Word, ColumnRole::Pos, ColumnRole::Label])
    }
}

impl FromStr for ColumnRoles {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let roles = s
            .split(',')
            .map(|r| match r.trim() {
                "word" => Ok(ColumnRole::Word),
                "pos" => Ok(ColumnRole::Pos),
                "label" => Ok(ColumnRole::Label),
                "_" | "ignore" => Ok(ColumnRole::Ignore),
                other => Err(Error::config(format!("unknown column role {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        ColumnRoles::new(roles)
    }
}

impl fmt::Display for ColumnRoles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .0
            .iter()
            .map(|r| match r {
                ColumnRole::Word => "word",
                ColumnRole::Pos => "pos",
                ColumnRole::Label => "label",
                ColumnRole::Ignore => "_",
            })
            .collect();
        write!(f, "{}", names.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RawSentence {
    pub tokens: Vec<String>,
    pub pos_tags: Option<Vec<String>>,
    pub gold_labels: Option<Vec<String>>,
    /// Every column of every row as read, for pass-through output.
    pub columns: Vec<Vec<String>>,
}

impl RawSentence {
    pub fn new(tokens: Vec<String>, pos_tags: Option<Vec<String>>, gold_labels: Option<Vec<String>>) -> Result<Self> {
        let n = tokens.len();
        if n == 0 {
            return Err(Error::usage("sentence must have at least one token"));
        }
        if pos_tags.as_ref().is_some_and(|p| p.len() != n) || gold_labels.as_ref().is_some_and(|l| l.len() != n) {
            return Err(Error::usage("sentence columns differ in length"));
        }
        Ok(RawSentence {
            tokens,
            pos_tags,
            gold_labels,
            columns: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Read CoNLL-style column data: one token per line, blank line between
/// sentences. The first data row fixes the column count for the stream.
/// Role positions past that count are treated as absent (e.g. unlabeled
/// input), except the word column which must exist.
pub fn parse_conll<R: BufRead>(reader: R, roles: &ColumnRoles) -> Result<Vec<RawSentence>> {
    let mut out = Vec::new();
    let mut ncols: Option<usize> = None;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut first_line = 0;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !rows.is_empty() {
                out.push(assemble(std::mem::take(&mut rows), roles, first_line)?);
            }
            continue;
        }
        let cols: Vec<String> = trimmed.split_whitespace().map(str::to_string).collect();
        if cols[0] == "-DOCSTART-" {
            continue;
        }
        match ncols {
            None => ncols = Some(cols.len()),
            Some(n) if n != cols.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {n} columns, found {}", cols.len()),
                })
            }
            _ => {}
        }
        if rows.is_empty() {
            first_line = lineno;
        }
        rows.push(cols);
    }
    if !rows.is_empty() {
        out.push(assemble(rows, roles, first_line)?);
    }
    Ok(out)
}

fn assemble(rows: Vec<Vec<String>>, roles: &ColumnRoles, line: usize) -> Result<RawSentence> {
    let ncols = rows[0].len();
    let column = |role| -> Option<Vec<String>> {
        roles
            .position(role)
            .filter(|&p| p < ncols)
            .map(|p| rows.iter().map(|r| r[p].clone()).collect())
    };
    let tokens = column(ColumnRole::Word).ok_or_else(|| Error::Parse {
        line,
        msg: format!("word column missing (only {ncols} columns)"),
    })?;
    let pos_tags = column(ColumnRole::Pos);
    let gold_labels = column(ColumnRole::Label);
    Ok(RawSentence {
        tokens,
        pos_tags,
        gold_labels,
        columns: rows,
    })
}

/// Write sentences in role order; absent or ignored columns are written as `_`.
pub fn write_conll<W: Write>(mut w: W, sentences: &[RawSentence], roles: &ColumnRoles) -> Result<()> {
    for s in sentences {
        for i in 0..s.len() {
            let cells: Vec<&str> = roles
                .roles()
                .iter()
                .map(|r| match r {
                    ColumnRole::Word => s.tokens[i].as_str(),
                    ColumnRole::Pos => s.pos_tags.as_ref().map_or("_", |p| p[i].as_str()),
                    ColumnRole::Label => s.gold_labels.as_ref().map_or("_", |l| l[i].as_str()),
                    ColumnRole::Ignore => "_",
                })
                .collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roles() -> ColumnRoles {
        "word,pos,label".parse().unwrap()
    }

    #[test]
    fn reads_a_sentence() {
        let s = parse_conll("He PRP B-NP\nruns VBZ O\n\n".as_bytes(), &roles()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tokens, vec!["He", "runs"]);
        assert_eq!(s[0].pos_tags.as_deref().unwrap(), &["PRP", "VBZ"]);
        assert_eq!(s[0].gold_labels.as_deref().unwrap(), &["B-NP", "O"]);
    }

    #[test]
    fn empty_stream() {
        assert!(parse_conll("".as_bytes(), &roles()).unwrap().is_empty());
        assert!(parse_conll("\n\n  \n".as_bytes(), &roles()).unwrap().is_empty());
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = parse_conll("He PRP B-NP\nruns VBZ\n".as_bytes(), &roles()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_label_column_means_unlabeled() {
        let s = parse_conll("He PRP\nruns VBZ\n".as_bytes(), &roles()).unwrap();
        assert!(s[0].gold_labels.is_none());
        assert!(s[0].pos_tags.is_some());
    }

    #[test]
    fn no_trailing_blank_and_docstart() {
        let text = "-DOCSTART- -X- O\n\na DT B-NP\n\nb NN I-NP";
        let s = parse_conll(text.as_bytes(), &roles()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].tokens, vec!["b"]);
    }

    #[test]
    fn role_parsing() {
        assert!("word,label".parse::<ColumnRoles>().is_ok());
        assert!("pos,label".parse::<ColumnRoles>().is_err());
        assert!("word,word".parse::<ColumnRoles>().is_err());
        assert!("word,banana".parse::<ColumnRoles>().is_err());
        assert_eq!(roles().to_string(), "word,pos,label");
    }

    #[test]
    fn write_then_parse() {
        let text = "He PRP B-NP\nruns VBZ O\n\nok UH O\n\n";
        let s = parse_conll(text.as_bytes(), &roles()).unwrap();
        let mut buf = Vec::new();
        write_conll(&mut buf, &s, &roles()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }
}
