/// Lowercases `text`, treats every non-alphanumeric character as a separator and splits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_strips_punctuation() {
        assert_eq!(tokenize("A woman cutting a pizza."), ["a", "woman", "cutting", "a", "pizza"]);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ...!? ").is_empty());
    }

    #[test]
    fn hyphen_and_comma_are_separators() {
        assert_eq!(tokenize("Stop-sign, red!"), ["stop", "sign", "red"]);
    }

    #[test]
    fn digits_are_kept() {
        assert_eq!(tokenize("2 dogs\tand\n3cats"), ["2", "dogs", "and", "3cats"]);
    }
}
