//! Tokenization. Real word segmentation is injectable through the
//! [`Tokenizer`] trait; the default splits on whitespace/punctuation and
//! falls back to character bigrams for unsegmented CJK runs.

use unicode_normalization::UnicodeNormalization;

pub trait Tokenizer: Send + Sync {
    /// Deterministic; an empty string yields an empty list.
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// Whitespace/punctuation splitting with ASCII lowercasing, plus a
/// character-bigram fallback for CJK ideograph runs (a lone ideograph
/// becomes its own token).
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultTokenizer;

fn is_cjk(c: char) -> bool {
    matches!(c,
        '\u{4E00}'..='\u{9FFF}'
        | '\u{3400}'..='\u{4DBF}'
        | '\u{F900}'..='\u{FAFF}'
        | '\u{3040}'..='\u{30FF}')
}

impl Tokenizer for DefaultTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let normalized: String = text.nfc().collect();
        let mut tokens = Vec::new();
        let mut word = String::new();
        let mut cjk_run: Vec<char> = Vec::new();

        let flush_word = |word: &mut String, tokens: &mut Vec<String>| {
            if !word.is_empty() {
                tokens.push(std::mem::take(word));
            }
        };
        fn flush_cjk(run: &mut Vec<char>, tokens: &mut Vec<String>) {
            match run.len() {
                0 => {}
                1 => tokens.push(run[0].to_string()),
                _ => {
                    for pair in run.windows(2) {
                        tokens.push(pair.iter().collect());
                    }
                }
            }
            run.clear();
        }

        for c in normalized.chars() {
            if is_cjk(c) {
                flush_word(&mut word, &mut tokens);
                cjk_run.push(c);
            } else if c.is_alphanumeric() {
                flush_cjk(&mut cjk_run, &mut tokens);
                word.extend(c.to_lowercase());
            } else {
                flush_word(&mut word, &mut tokens);
                flush_cjk(&mut cjk_run, &mut tokens);
            }
        }
        flush_word(&mut word, &mut tokens);
        flush_cjk(&mut cjk_run, &mut tokens);
        tokens
    }
}
