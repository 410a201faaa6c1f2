//! Tokenizer for `.psys` scenario text. Total: every input produces a token
//! stream plus diagnostics for unusable characters, never a failure.

use super::diagnostics::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Eq,
    Plus,
    At,
    Arrow,
    Newline,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Colon => "':'".into(),
            Tok::Comma => "','".into(),
            Tok::Eq => "'='".into(),
            Tok::Plus => "'+'".into(),
            Tok::At => "'@'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Newline => "end of line".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx as u32 + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i as u32 + 1;
            match c {
                '#' => break, // comment to end of line
                c if c.is_whitespace() => {
                    i += 1;
                }
                '{' => { tokens.push(Token { tok: Tok::LBrace, line: line_no, column: col }); i += 1; }
                '}' => { tokens.push(Token { tok: Tok::RBrace, line: line_no, column: col }); i += 1; }
                '(' => { tokens.push(Token { tok: Tok::LParen, line: line_no, column: col }); i += 1; }
                ')' => { tokens.push(Token { tok: Tok::RParen, line: line_no, column: col }); i += 1; }
                ':' => { tokens.push(Token { tok: Tok::Colon, line: line_no, column: col }); i += 1; }
                ',' => { tokens.push(Token { tok: Tok::Comma, line: line_no, column: col }); i += 1; }
                '=' => { tokens.push(Token { tok: Tok::Eq, line: line_no, column: col }); i += 1; }
                '+' => { tokens.push(Token { tok: Tok::Plus, line: line_no, column: col }); i += 1; }
                '@' => { tokens.push(Token { tok: Tok::At, line: line_no, column: col }); i += 1; }
                '-' if i + 1 < chars.len() && chars[i + 1] == '>' => {
                    tokens.push(Token { tok: Tok::Arrow, line: line_no, column: col });
                    i += 2;
                }
                '-' | '0'..='9' => {
                    let start = i;
                    if chars[i] == '-' {
                        i += 1;
                    }
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                        i += 1;
                    }
                    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                        let mut j = i + 1;
                        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                            j += 1;
                        }
                        if j < chars.len() && chars[j].is_ascii_digit() {
                            i = j;
                            while i < chars.len() && chars[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let lexeme: String = chars[start..i].iter().collect();
                    match lexeme.parse::<f64>() {
                        Ok(n) if n.is_finite() => {
                            tokens.push(Token { tok: Tok::Number(n), line: line_no, column: col });
                        }
                        _ => diags.push(
                            Diagnostic::error(line_no, col, format!("malformed number '{lexeme}'"))
                                .with_excerpt(line),
                        ),
                    }
                }
                c if is_ident_start(c) => {
                    let start = i;
                    while i < chars.len() && is_ident_continue(chars[i]) {
                        i += 1;
                    }
                    let ident: String = chars[start..i].iter().collect();
                    tokens.push(Token { tok: Tok::Ident(ident), line: line_no, column: col });
                }
                other => {
                    diags.push(
                        Diagnostic::error(line_no, col, format!("unexpected character '{other}'"))
                            .with_excerpt(line),
                    );
                    i += 1;
                }
            }
        }
        tokens.push(Token { tok: Tok::Newline, line: line_no, column: chars.len() as u32 + 1 });
    }
    (tokens, diags)
}
