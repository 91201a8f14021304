/// Lowercase word-level tokenizer.
///
/// Alphanumeric runs form words; every other non-whitespace character is a
/// standalone token.
pub fn tokenize_text(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    let mut word = String::new();
    for c in lower.chars() {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_are_lowercased() {
        assert_eq!(tokenize_text("Fun Family Fest"), ["fun", "family", "fest"]);
    }

    #[test]
    fn empty_and_blank() {
        assert!(tokenize_text("").is_empty());
        assert!(tokenize_text(" \t\n ").is_empty());
    }

    #[test]
    fn punctuation_is_split_out() {
        assert_eq!(
            tokenize_text("$19.90-26.35"),
            ["$", "19", ".", "90", "-", "26", ".", "35"]
        );
        assert_eq!(tokenize_text("Dec 13, 2021"), ["dec", "13", ",", "2021"]);
        assert_eq!(tokenize_text("Café\u{a0}déjà"), ["café", "déjà"]);
    }
}
