//! Tokenizer for the Solidity surface syntax.
//!
//! Comments and whitespace are dropped. The lexer never fails: malformed
//! input produces `Unknown` tokens or an unterminated string token, and the
//! parser decides what to make of them.

use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Number,
    HexNumber,
    Str,
    Punct,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        self.span.slice(src)
    }
}

const PUNCTS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "**", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=",
    "/=", "%=", "|=", "&=", "^=", "=>", "->", "<<", ">>", ":=", "(", ")", "[", "]", "{", "}", ";", ",",
    ".", "?", ":", "=", "+", "-", "*", "/", "%", "!", "~", "&", "|", "^", "<", ">", "@",
];

pub struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer { src, bytes: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn peek_byte(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) {
        let Some(c) = self.src[self.pos..].chars().next() else { return };
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match (self.peek_byte(0), self.peek_byte(1)) {
                (Some(b), _) if b.is_ascii_whitespace() => self.bump(),
                (Some(b'/'), Some(b'/')) => {
                    while let Some(b) = self.peek_byte(0) {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some(b'/'), Some(b'*')) => {
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek_byte(0), self.peek_byte(1)) {
                            (Some(b'*'), Some(b'/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => self.bump(),
                            (None, _) => break,
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn lex_string(&mut self, quote: u8) {
        self.bump();
        while let Some(b) = self.peek_byte(0) {
            if b == b'\\' {
                self.bump();
                self.bump();
                continue;
            }
            if b == b'\n' {
                break;
            }
            self.bump();
            if b == quote {
                break;
            }
        }
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

impl Iterator for Lexer<'_> {
    type Item = Token;

    fn next(&mut self) -> Option<Token> {
        self.skip_trivia();
        let first = self.peek_byte(0)?;
        let (start, line, col) = (self.pos, self.line, self.col);
        let kind = if is_ident_start(first) {
            while self.peek_byte(0).is_some_and(is_ident_continue) {
                self.bump();
            }
            let word = &self.src[start..self.pos];
            // hex"..." and unicode"..." literals
            if matches!(word, "hex" | "unicode") && matches!(self.peek_byte(0), Some(b'"' | b'\'')) {
                let q = self.peek_byte(0).unwrap_or(b'"');
                self.lex_string(q);
                TokenKind::Str
            } else {
                TokenKind::Ident
            }
        } else if first == b'0' && matches!(self.peek_byte(1), Some(b'x' | b'X')) {
            self.bump();
            self.bump();
            while self.peek_byte(0).is_some_and(|b| b.is_ascii_hexdigit() || b == b'_') {
                self.bump();
            }
            TokenKind::HexNumber
        } else if first.is_ascii_digit()
            || (first == b'.' && self.peek_byte(1).is_some_and(|b| b.is_ascii_digit()))
        {
            while self.peek_byte(0).is_some_and(|b| b.is_ascii_digit() || b == b'_') {
                self.bump();
            }
            if self.peek_byte(0) == Some(b'.') && self.peek_byte(1).is_some_and(|b| b.is_ascii_digit()) {
                self.bump();
                while self.peek_byte(0).is_some_and(|b| b.is_ascii_digit() || b == b'_') {
                    self.bump();
                }
            }
            if matches!(self.peek_byte(0), Some(b'e' | b'E'))
                && (self.peek_byte(1).is_some_and(|b| b.is_ascii_digit())
                    || (self.peek_byte(1) == Some(b'-') && self.peek_byte(2).is_some_and(|b| b.is_ascii_digit())))
            {
                self.bump();
                self.bump();
                while self.peek_byte(0).is_some_and(|b| b.is_ascii_digit()) {
                    self.bump();
                }
            }
            TokenKind::Number
        } else if first == b'"' || first == b'\'' {
            self.lex_string(first);
            TokenKind::Str
        } else if let Some(p) = PUNCTS.iter().find(|p| self.src[self.pos..].starts_with(**p)) {
            for _ in 0..p.len() {
                self.bump();
            }
            TokenKind::Punct
        } else {
            self.bump();
            TokenKind::Unknown
        };
        Some(Token { kind, span: Span::new(line, col, start as u32, self.pos as u32) })
    }
}

pub fn tokenize(src: &str) -> Vec<Token> {
    Lexer::new(src).collect()
}

/// Token kinds and texts, used for structural comparisons that must ignore
/// layout and comments.
pub fn token_texts(src: &str) -> Vec<(TokenKind, String)> {
    Lexer::new(src).map(|t| (t.kind, t.text(src).to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        token_texts(src).into_iter().map(|(_, t)| t).collect()
    }

    #[test]
    fn skips_comments_and_whitespace() {
        let src = "a /* block\n comment */ b // line\n c";
        assert_eq!(texts(src), ["a", "b", "c"]);
        let toks = tokenize(src);
        assert_eq!(toks[2].span.line, 3);
        assert_eq!(toks[2].span.column, 2);
    }

    #[test]
    fn longest_punct_match() {
        assert_eq!(texts("a-=b>>=c=>d"), ["a", "-=", "b", ">>=", "c", "=>", "d"]);
    }

    #[test]
    fn numbers_and_addresses() {
        let toks = token_texts("0x6B175474E89094C44Da98b954EedeAC495271d0F 1e18 2.5 1_000");
        assert_eq!(toks[0].0, TokenKind::HexNumber);
        assert_eq!(toks[1], (TokenKind::Number, "1e18".into()));
        assert_eq!(toks[2], (TokenKind::Number, "2.5".into()));
        assert_eq!(toks[3], (TokenKind::Number, "1_000".into()));
    }

    #[test]
    fn strings_with_escapes() {
        assert_eq!(texts(r#"x = "a\"b"; y = hex"00ff";"#), ["x", "=", r#""a\"b""#, ";", "y", "=", r#"hex"00ff""#, ";"]);
    }

    #[test]
    fn unterminated_comment_runs_to_eof() {
        assert_eq!(texts("a /* never closed"), ["a"]);
    }
}
