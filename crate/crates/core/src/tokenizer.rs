//! Character n-gram tokenization.
//!
//! Every Unicode scalar value (post-NFC) is an atomic unit; there is no word
//! segmentation. Whitespace is never a token. Punctuation is dropped by
//! default but can be kept for sensitivity experiments.

/// Tokenization parameters.
#[derive(Clone, Debug)]
pub struct TokenizerConfig {
    /// N-gram length; 1 emits single characters.
    pub ngram: usize,
    /// Keep punctuation characters as tokens. Whitespace and line breaks are
    /// dropped regardless: they delimit text, they are not features.
    pub keep_punct: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            ngram: 1,
            keep_punct: false,
        }
    }
}

/// True when `ch` is dropped before n-gram formation.
fn is_filtered(ch: char, keep_punct: bool) -> bool {
    if ch.is_whitespace() {
        return true;
    }
    if keep_punct {
        return false;
    }
    ch.is_ascii_punctuation()
        || matches!(ch, '\u{3000}'..='\u{303F}') // CJK symbols and punctuation
        || matches!(
            ch,
            // fullwidth forms, punctuation subranges
            '\u{FF01}'..='\u{FF0F}'
                | '\u{FF1A}'..='\u{FF20}'
                | '\u{FF3B}'..='\u{FF40}'
                | '\u{FF5B}'..='\u{FF65}'
        )
}

/// Emit overlapping character n-grams of `text`.
///
/// Filtered characters are removed first, then windows of `cfg.ngram`
/// characters are emitted in order. Windows never span a line break, so
/// n-grams cannot cross the poem boundaries a multi-poem sample contains.
///
/// All-punctuation input yields an empty stream; that is not an error.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    assert!(cfg.ngram >= 1, "ngram must be at least 1");
    let mut tokens = Vec::new();
    for line in text.split('\n') {
        let kept: Vec<char> = line
            .chars()
            .filter(|c| !is_filtered(*c, cfg.keep_punct))
            .collect();
        if kept.len() < cfg.ngram {
            continue;
        }
        for window in kept.windows(cfg.ngram) {
            tokens.push(window.iter().collect());
        }
    }
    tokens
}
