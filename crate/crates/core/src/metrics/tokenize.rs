use std::ops::Deref;

/// What happens to punctuation during tokenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PunctuationRule {
    /// Punctuation separates tokens and is discarded.
    #[default]
    Drop,
    /// Every punctuation character becomes a token of its own.
    Split,
}

/// Lowercased word tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        Self(tokens)
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Tokenizer {
    pub punctuation: PunctuationRule,
}

impl Tokenizer {
    pub fn new(punctuation: PunctuationRule) -> Self {
        Self { punctuation }
    }

    /// Words are maximal runs of alphanumeric characters and apostrophes; apostrophes at either
    /// end of a word are stripped. Everything else is whitespace or punctuation.
    pub fn tokenize(&self, text: &str) -> TokenSequence {
        let lower = text.to_lowercase();
        let mut tokens = Vec::new();
        let mut word = String::new();
        let flush = |word: &mut String, tokens: &mut Vec<String>| {
            let trimmed = word.trim_matches('\'');
            if !trimmed.is_empty() {
                tokens.push(trimmed.to_string());
            }
            word.clear();
        };
        for ch in lower.chars() {
            if ch.is_alphanumeric() || ch == '\'' {
                word.push(ch);
                continue;
            }
            flush(&mut word, &mut tokens);
            if self.punctuation == PunctuationRule::Split && !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
        flush(&mut word, &mut tokens);
        TokenSequence(tokens)
    }
}

/// Tokenizes with the default rule (punctuation dropped).
pub fn tokenize(text: &str) -> TokenSequence {
    Tokenizer::default().tokenize(text)
}
