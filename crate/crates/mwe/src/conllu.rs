//! Minimal CoNLL-U reader.
//!
//! Keeps only what tuple extraction needs: surface form, head index, and
//! dependency relation. Multiword-token ranges (`1-2`) and empty nodes
//! (`1.1`) are skipped; `#` comment lines and blank sentence separators
//! follow the published 10-column format.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    /// 1-based index of the governor within the sentence; 0 means root.
    pub head: usize,
    pub deprel: String,
}

pub type Sentence = Vec<Token>;

pub fn parse_conllu(text: &str) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current: Sentence = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        // multiword-token range or empty node
        if id.contains('-') || id.contains('.') {
            continue;
        }
        if id.parse::<usize>().is_err() {
            return Err(Error::parse(lineno, format!("bad token id `{id}`")));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad head index `{}`", cols[6])))?;
        current.push(Token {
            form: cols[1].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, form: &str, head: &str, deprel: &str) -> String {
        format!("{id}\t{form}\t_\t_\t_\t_\t{head}\t{deprel}\t_\t_")
    }

    #[test]
    fn parses_two_token_sentence() {
        let doc = format!("{}\n{}\n", line("1", "dogs", "2", "nsubj"), line("2", "bark", "0", "root"));
        let sents = parse_conllu(&doc).unwrap();
        assert_eq!(sents.len(), 1);
        assert_eq!(sents[0].len(), 2);
        assert_eq!(sents[0][0].form, "dogs");
        assert_eq!(sents[0][0].head, 2);
        assert_eq!(sents[0][0].deprel, "nsubj");
        assert_eq!(sents[0][1].head, 0);
    }

    #[test]
    fn comments_and_blanks_only_yield_nothing() {
        let sents = parse_conllu("# newdoc\n# text = nothing here\n\n\n").unwrap();
        assert!(sents.is_empty());
    }

    #[test]
    fn wrong_column_count_names_the_line() {
        let doc = format!("{}\n1\tb\tc\td\te\tf\tg\th\ti\n", line("1", "a", "0", "root"));
        match parse_conllu(&doc) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn skips_ranges_and_empty_nodes() {
        let doc = [
            "1-2\tvamonos\t_\t_\t_\t_\t_\t_\t_\t_".to_string(),
            line("1", "vamos", "0", "root"),
            line("2", "nos", "1", "dobj"),
            "2.1\telided\t_\t_\t_\t_\t_\t_\t_\t_".to_string(),
        ]
        .join("\n");
        let sents = parse_conllu(&doc).unwrap();
        assert_eq!(sents[0].len(), 2);
    }

    #[test]
    fn blank_line_separates_sentences() {
        let doc = format!(
            "{}\n\n{}\n",
            line("1", "go", "0", "root"),
            line("1", "stop", "0", "root")
        );
        assert_eq!(parse_conllu(&doc).unwrap().len(), 2);
    }
}
