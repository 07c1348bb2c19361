use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use super::NluError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: String,
    /// `None` for the root.
    pub head: Option<usize>,
    pub deplabel: String,
}

/// Dependency tree over the tokens of one utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedUtterance {
    pub tokens: Vec<Token>,
}

impl ParsedUtterance {
    /// Checks heads are in range, there is exactly one root and no cycle.
    pub fn new(tokens: Vec<Token>) -> Result<Self, NluError> {
        let p = ParsedUtterance { tokens };
        p.validate()?;
        Ok(p)
    }

    /// A placeholder parse when no parser output is available: each token
    /// depends on its predecessor, lemmas are lowercased surfaces and every
    /// tag is `X`.
    pub fn flat(text: &str) -> Self {
        let tokens = tokenize(text)
            .into_iter()
            .enumerate()
            .map(|(i, s)| Token {
                lemma: s.to_lowercase(),
                surface: s,
                pos: "X".into(),
                head: i.checked_sub(1),
                deplabel: if i == 0 { "root".into() } else { "dep".into() },
            })
            .collect();
        ParsedUtterance { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.surfaces(0..self.tokens.len())
    }

    pub fn surfaces(&self, range: std::ops::Range<usize>) -> String {
        self.tokens[range].iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.head.is_none())
    }

    /// Head plus direct children, ascending.
    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.tokens[i].head.into_iter().collect();
        out.extend(self.tokens.iter().enumerate().filter(|(_, t)| t.head == Some(i)).map(|(j, _)| j));
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<(), NluError> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(NluError::InvalidParse("no tokens".into()));
        }
        let roots = self.tokens.iter().filter(|t| t.head.is_none()).count();
        if roots != 1 {
            return Err(NluError::InvalidParse(format!("{roots} roots, expected exactly one")));
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if let Some(h) = t.head {
                if h >= n || h == i {
                    return Err(NluError::InvalidParse(format!("token {} has invalid head {}", i + 1, h + 1)));
                }
            }
            let mut cur = i;
            for _ in 0..=n {
                match self.tokens[cur].head {
                    Some(h) => cur = h,
                    None => break,
                }
            }
            if self.tokens[cur].head.is_some() {
                return Err(NluError::InvalidParse(format!("token {} is on a cycle", i + 1)));
            }
        }
        Ok(())
    }
}

/// Parses one CoNLL-U sentence. Comment lines, multiword token ranges and
/// empty nodes are skipped.
pub fn parse_ingest(conllu: &str) -> Result<ParsedUtterance, NluError> {
    let mut sentences = parse_conllu_corpus(conllu)?;
    match sentences.len() {
        1 => Ok(sentences.remove(0).1),
        0 => Err(NluError::Conllu { line: 0, message: "no sentence".into() }),
        n => Err(NluError::Conllu { line: 0, message: format!("expected one sentence, found {n}") }),
    }
}

/// Parses every sentence of a CoNLL-U document, returning the `# text =`
/// comment (if present) alongside each parse.
pub fn parse_conllu_corpus(conllu: &str) -> Result<Vec<(Option<String>, ParsedUtterance)>, NluError> {
    let mut out = Vec::new();
    let mut text: Option<String> = None;
    let mut tokens: Vec<Token> = Vec::new();
    let mut start_line = 0;
    let mut flush = |text: &mut Option<String>, tokens: &mut Vec<Token>, line: usize| -> Result<(), NluError> {
        if tokens.is_empty() {
            *text = None;
            return Ok(());
        }
        let parse = ParsedUtterance::new(std::mem::take(tokens))
            .map_err(|e| NluError::Conllu { line, message: e.to_string() })?;
        out.push((text.take(), parse));
        Ok(())
    };
    for (n, raw) in conllu.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut text, &mut tokens, start_line)?;
            continue;
        }
        if tokens.is_empty() {
            start_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(t) = comment.trim_start().strip_prefix("text") {
                if let Some(t) = t.trim_start().strip_prefix('=') {
                    text = Some(t.trim().to_string());
                }
            }
            continue;
        }
        let err = |message: String| NluError::Conllu { line: line_no, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(err(format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| err(format!("bad token id '{}'", cols[0])))?;
        if id != tokens.len() + 1 {
            return Err(err(format!("token id {id} out of sequence")));
        }
        let head: usize = cols[6].parse().map_err(|_| err(format!("bad head '{}'", cols[6])))?;
        let surface = cols[1].to_string();
        let lemma = if cols[2] == "_" { surface.to_lowercase() } else { cols[2].to_string() };
        tokens.push(Token {
            surface,
            lemma,
            pos: cols[3].to_string(),
            head: head.checked_sub(1),
            deplabel: cols[7].to_string(),
        });
    }
    flush(&mut text, &mut tokens, start_line)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const RESTAURANTS: &str = "# text = Get me the closest Italian restaurants
1\tGet\tget\tVERB\t_\t_\t0\troot\t_\t_
2\tme\tI\tPRON\t_\t_\t1\tiobj\t_\t_
3\tthe\tthe\tDET\t_\t_\t6\tdet\t_\t_
4\tclosest\tclose\tADJ\t_\t_\t6\tamod\t_\t_
5\tItalian\tItalian\tADJ\t_\t_\t6\tamod\t_\t_
6\trestaurants\trestaurant\tNOUN\t_\t_\t1\tobj\t_\t_
";

    #[test]
    fn single_token() {
        let p = parse_ingest("1\tHi\t_\tINTJ\t_\t_\t0\troot\t_\t_\n").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.tokens[0].lemma, "hi");
        assert_eq!(p.root(), Some(0));
    }

    #[test]
    fn exposes_amod_edge() {
        let p = parse_ingest(RESTAURANTS).unwrap();
        assert_eq!(p.len(), 6);
        let italian = &p.tokens[4];
        assert_eq!((italian.head, italian.deplabel.as_str()), (Some(5), "amod"));
        assert_eq!(p.neighbours(5), vec![0, 2, 3, 4]);
        let corpus = parse_conllu_corpus(RESTAURANTS).unwrap();
        assert_eq!(corpus[0].0.as_deref(), Some("Get me the closest Italian restaurants"));
    }

    #[test]
    fn rejects_bad_trees() {
        let two_roots = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(parse_ingest(two_roots), Err(NluError::Conllu { .. })));
        let cycle = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t3\tdep\t_\t_\n3\tc\tc\tX\t_\t_\t2\tdep\t_\t_\n";
        assert!(parse_ingest(cycle).unwrap_err().to_string().contains("cycle"));
        let short = "1\ta\ta\tX\t_\n";
        assert_eq!(
            parse_ingest(short).unwrap_err(),
            NluError::Conllu { line: 1, message: "expected 10 tab-separated columns, found 5".into() }
        );
        let bad_head = "# c\n1\ta\ta\tX\t_\t_\tzero\troot\t_\t_\n";
        assert!(matches!(parse_ingest(bad_head), Err(NluError::Conllu { line: 2, .. })));
    }

    #[test]
    fn skips_multiword_and_empty_nodes() {
        let text = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n1\tdo\tdo\tAUX\t_\t_\t0\troot\t_\t_\n1.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n2\tn't\tnot\tPART\t_\t_\t1\tadvmod\t_\t_\n";
        assert_eq!(parse_ingest(text).unwrap().len(), 2);
    }

    #[test]
    fn flat_parse_is_a_chain() {
        let p = ParsedUtterance::flat("Order a Small pizza");
        p.validate().unwrap();
        assert_eq!(p.tokens[2].lemma, "small");
        assert_eq!(p.neighbours(2), vec![1, 3]);
    }
}
