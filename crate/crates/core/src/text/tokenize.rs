use super::vocab::SEP_TOKEN;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '-' || c == '_'
}

/// Rule-based tokenizer: lowercases, splits on whitespace and emits every
/// punctuation character as its own token. A semicolon becomes the separator
/// token.
///
/// Apostrophes, hyphens and underscores stay inside a word, so `zzz-unseen`
/// is a single token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if is_word_char(c) {
            word.extend(c.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if c == ';' {
            tokens.push(SEP_TOKEN.to_string());
        } else if !c.is_whitespace() {
            tokens.push(c.to_lowercase().collect());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Tokenizes and re-joins with single spaces; the canonical surface form used
/// for comparing phrases.
pub fn normalize(text: &str) -> String {
    tokenize(text).join(" ")
}
