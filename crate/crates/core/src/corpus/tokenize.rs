use crate::error::{Error, Result};

/// Literal forms of the reserved tokens; kept whole by [`tokenize`].
pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const MASK: &str = "<mask>";

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Lowercases, splits on Unicode whitespace and detaches every punctuation
/// character as its own token. The reserved `<pad>`, `<unk>` and `<mask>`
/// literals survive intact so decoded documents re-tokenize to themselves.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let lower = chunk.to_lowercase();
        if lower == PAD || lower == UNK || lower == MASK {
            out.push(lower);
            continue;
        }
        let mut word = String::new();
        for c in lower.chars() {
            if is_punct(c) {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(c.to_string());
            } else {
                word.push(c);
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

/// First `min(len, msl)` items.
pub fn truncate<T: Clone>(tokens: &[T], msl: usize) -> Result<Vec<T>> {
    if msl == 0 {
        return Err(Error::config("maximum sequence length must be at least 1"));
    }
    Ok(tokens[..tokens.len().min(msl)].to_vec())
}

/// A token counts as a word when it contains an alphanumeric character.
pub fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

/// Sentences are delimited by `.`, `!` or `?` followed by whitespace; empty
/// segments are not counted.
pub fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut has_content = false;
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_whitespace() {
            has_content = true;
        }
        let terminator = matches!(c, '.' | '!' | '?');
        let next_is_space = chars.get(i + 1).is_some_and(|n| n.is_whitespace());
        if terminator && next_is_space && has_content {
            count += 1;
            has_content = false;
        }
    }
    if has_content {
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t").is_empty());
    }

    #[test]
    fn detaches_punctuation() {
        assert_eq!(tokenize("The cat sat."), ["the", "cat", "sat", "."]);
        assert_eq!(tokenize("Hello,world!"), ["hello", ",", "world", "!"]);
    }

    #[test]
    fn idempotent_on_normalized_text() {
        let once = tokenize("Rates rose 3.5% in Q1 ; <MASK> <unk> (again)");
        let twice = tokenize(&once.join(" "));
        assert_eq!(once, twice);
        assert!(once.contains(&MASK.to_string()));
    }

    #[test]
    fn truncation() {
        let toks: Vec<u32> = (0..10).collect();
        assert_eq!(truncate(&toks, 512).unwrap(), toks);
        let long: Vec<u32> = (0..600).collect();
        let t = truncate(&long, 512).unwrap();
        assert_eq!(t.len(), 512);
        assert_eq!(t, &long[..512]);
        assert_eq!(truncate(&t, 512).unwrap(), t);
        assert!(matches!(truncate(&toks, 0), Err(Error::Config(_))));
    }

    #[test]
    fn sentence_counting() {
        assert_eq!(count_sentences("One two three four five."), 1);
        assert_eq!(count_sentences("A b. C d! E f? G"), 4);
        assert_eq!(count_sentences("Pi is 3.14 roughly. Yes."), 2);
        assert_eq!(count_sentences(""), 0);
        assert_eq!(count_sentences("Wait...  really?"), 2);
    }
}
