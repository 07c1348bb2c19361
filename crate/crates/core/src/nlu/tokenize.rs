/// A word and its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits on whitespace and punctuation. Apostrophes inside a word are kept
/// ("I'll"). Case is preserved.
pub fn tokenize_spans(text: &str) -> Vec<TokenSpan> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            let c = chars[i].1;
            let inner_apostrophe =
                is_apostrophe(c) && i + 1 < chars.len() && chars[i + 1].1.is_alphanumeric() && i > start;
            if c.is_alphanumeric() || inner_apostrophe {
                i += 1;
            } else {
                break;
            }
        }
        let (s, e) = (chars[start].0, chars.get(i).map_or(text.len(), |c| c.0));
        out.push(TokenSpan { text: text[s..e].to_string(), start: s, end: e });
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_spans(text).into_iter().map(|t| t.text).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation_keeps_contractions() {
        assert_eq!(tokenize("Tell the team: I'll be late!"), ["Tell", "the", "team", "I'll", "be", "late"]);
        assert_eq!(tokenize("  'quoted'  "), ["quoted"]);
        assert!(tokenize("...").is_empty());
        let spans = tokenize_spans("a, bc");
        assert_eq!((spans[1].start, spans[1].end), (3, 5));
    }
}
