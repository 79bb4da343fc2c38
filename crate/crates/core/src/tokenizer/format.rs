//! Line-oriented text rendering of tokenized sentences.
//!
//! Tokens are separated by single spaces and rendered as
//! `[J]piece[J]|F`, where `J` is the joiner marker and `F` the case letter.
//! A joined boundary is drawn as a prefix on the following token when that
//! token is punctuation, and as a suffix on the current token otherwise
//! (`wi■|C fi|C ■,|N`). Backslashes and literal joiner strings inside a
//! piece are escaped with a backslash.

use super::{AnnotatedToken, CaseFeature, Result, TokenizedSentence, TokenizerError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFormat {
    joiner: String,
}

impl Default for TokenFormat {
    fn default() -> Self {
        Self {
            joiner: "■".to_string(),
        }
    }
}

fn is_punctuation(token: &AnnotatedToken) -> bool {
    token.case == CaseFeature::None
        && !token.piece.starts_with('⟦')
        && token.piece.chars().all(|c| !c.is_alphanumeric())
}

impl TokenFormat {
    /// Panics if `joiner` is empty, contains whitespace, a backslash or `|`.
    pub fn new(joiner: &str) -> Self {
        assert!(
            !joiner.is_empty()
                && !joiner.contains(char::is_whitespace)
                && !joiner.contains(['\\', '|']),
            "invalid joiner marker {joiner:?}"
        );
        Self {
            joiner: joiner.to_string(),
        }
    }

    pub fn joiner(&self) -> &str {
        &self.joiner
    }

    fn escape(&self, piece: &str) -> String {
        let mut out = String::with_capacity(piece.len());
        let mut rest = piece;
        while let Some(c) = rest.chars().next() {
            if rest.starts_with(&self.joiner) {
                out.push('\\');
                out.push_str(&self.joiner);
                rest = &rest[self.joiner.len()..];
            } else {
                if c == '\\' {
                    out.push('\\');
                }
                out.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
        out
    }

    fn unescape(&self, body: &str, token: &str) -> Result<String> {
        let mut out = String::with_capacity(body.len());
        let mut rest = body;
        while let Some(c) = rest.chars().next() {
            if c == '\\' {
                let after = &rest[1..];
                if after.starts_with(&self.joiner) {
                    out.push_str(&self.joiner);
                    rest = &after[self.joiner.len()..];
                } else if after.starts_with('\\') {
                    out.push('\\');
                    rest = &after[1..];
                } else {
                    return Err(TokenizerError::TokenFormat {
                        token: token.to_string(),
                        message: "dangling escape".to_string(),
                    });
                }
            } else if rest.starts_with(&self.joiner) {
                return Err(TokenizerError::TokenFormat {
                    token: token.to_string(),
                    message: "unescaped joiner inside piece".to_string(),
                });
            } else {
                out.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
        Ok(out)
    }

    pub fn render(&self, sentence: &TokenizedSentence) -> String {
        let tokens = &sentence.tokens;
        let mut out = String::new();
        let mut prefix_next = false;
        for (i, token) in tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            if prefix_next {
                out.push_str(&self.joiner);
            }
            out.push_str(&self.escape(&token.piece));
            prefix_next = false;
            if token.joined_right {
                match tokens.get(i + 1) {
                    Some(next) if is_punctuation(next) => prefix_next = true,
                    _ => out.push_str(&self.joiner),
                }
            }
            out.push('|');
            out.push(token.case.as_char());
        }
        out
    }

    pub fn parse(&self, line: &str) -> Result<TokenizedSentence> {
        let mut tokens: Vec<AnnotatedToken> = Vec::new();
        for raw in line.split(' ').filter(|t| !t.is_empty()) {
            let err = |message: &str| TokenizerError::TokenFormat {
                token: raw.to_string(),
                message: message.to_string(),
            };
            let (body, case) = raw
                .rsplit_once('|')
                .and_then(|(body, f)| {
                    let mut chars = f.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) => CaseFeature::from_char(c).map(|case| (body, case)),
                        _ => None,
                    }
                })
                .ok_or_else(|| err("missing `|C`-style case suffix"))?;
            let mut body = body;
            if let Some(stripped) = body.strip_prefix(self.joiner.as_str()) {
                let prev = tokens
                    .last_mut()
                    .ok_or_else(|| err("leading joiner on first token"))?;
                prev.joined_right = true;
                body = stripped;
            }
            let mut joined_right = false;
            if let Some(stripped) = body.strip_suffix(self.joiner.as_str()) {
                let backslashes = stripped.chars().rev().take_while(|&c| c == '\\').count();
                if backslashes % 2 == 0 {
                    joined_right = true;
                    body = stripped;
                }
            }
            let piece = self.unescape(body, raw)?;
            if piece.is_empty() {
                return Err(err("empty piece"));
            }
            tokens.push(AnnotatedToken {
                piece,
                case,
                joined_right,
            });
        }
        Ok(TokenizedSentence { tokens })
    }
}
