use alloc::string::String;
use alloc::vec::Vec;

use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Def,
    If,
    Else,
    While,
    Return,
    Global,
    Domain,
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Dot,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Bang,
    AndAnd,
    OrOr,
    Newline,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        chars: source.chars().collect(),
        at: 0,
        line: 1,
        col: 1,
        depth: 0,
        out: Vec::new(),
    }
    .run()
}

struct Lexer {
    chars: Vec<char>,
    at: usize,
    line: u32,
    col: u32,
    // Parenthesis depth; newlines inside parentheses are not separators.
    depth: u32,
    out: Vec<Token>,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.at + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.at).copied()?;
        self.at += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.col,
        }
    }

    fn err(&self, pos: Pos, msg: &str) -> ParseError {
        ParseError::Syntax {
            line: pos.line,
            column: pos.column,
            message: msg.into(),
        }
    }

    fn push(&mut self, tok: Tok, pos: Pos) {
        self.out.push(Token { tok, pos });
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        while let Some(c) = self.peek() {
            let pos = self.pos();
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push(Tok::Newline, pos);
                    }
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    self.bump();
                    // `# domain ...` is a header declaration, anything else a comment.
                    let rest: String = self.chars[self.at..]
                        .iter()
                        .take_while(|c| **c != '\n')
                        .collect();
                    let trimmed = rest.trim_start();
                    let is_domain = trimmed.starts_with("domain")
                        && trimmed[6..].starts_with(|c: char| c.is_whitespace());
                    if !is_domain {
                        self.skip_line();
                    }
                }
                '/' if self.peek2() == Some('/') => self.skip_line(),
                '"' => {
                    let s = self.string(pos)?;
                    self.push(Tok::Str(s), pos);
                }
                '\'' => {
                    let v = self.char_lit(pos)?;
                    self.push(Tok::Int(v), pos);
                }
                c if c.is_ascii_digit() => {
                    let t = self.number(pos)?;
                    self.push(t, pos);
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut word = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_alphanumeric() || c == '_' {
                            word.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let tok = match word.as_str() {
                        "def" => Tok::Def,
                        "if" => Tok::If,
                        "else" => Tok::Else,
                        "while" => Tok::While,
                        "return" => Tok::Return,
                        "global" => Tok::Global,
                        "domain" => Tok::Domain,
                        "true" | "True" => Tok::True,
                        "false" | "False" => Tok::False,
                        _ => Tok::Ident(word),
                    };
                    self.push(tok, pos);
                }
                _ => {
                    self.bump();
                    let two = |l: &mut Lexer, next: char| {
                        if l.peek() == Some(next) {
                            l.bump();
                            true
                        } else {
                            false
                        }
                    };
                    let tok = match c {
                        '(' => {
                            self.depth += 1;
                            Tok::LParen
                        }
                        ')' => {
                            self.depth = self.depth.saturating_sub(1);
                            Tok::RParen
                        }
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        ',' => Tok::Comma,
                        ';' => Tok::Semi,
                        ':' => Tok::Colon,
                        '.' => Tok::Dot,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '*' => Tok::Star,
                        '/' => Tok::Slash,
                        '%' => Tok::Percent,
                        '=' => {
                            if two(&mut self, '=') {
                                Tok::EqEq
                            } else {
                                Tok::Assign
                            }
                        }
                        '!' => {
                            if two(&mut self, '=') {
                                Tok::NotEq
                            } else {
                                Tok::Bang
                            }
                        }
                        '<' => {
                            if two(&mut self, '=') {
                                Tok::Le
                            } else {
                                Tok::Lt
                            }
                        }
                        '>' => {
                            if two(&mut self, '=') {
                                Tok::Ge
                            } else {
                                Tok::Gt
                            }
                        }
                        '&' if two(&mut self, '&') => Tok::AndAnd,
                        '|' if two(&mut self, '|') => Tok::OrOr,
                        _ => return Err(self.err(pos, "unexpected character")),
                    };
                    self.push(tok, pos);
                }
            }
        }
        let pos = self.pos();
        self.push(Tok::Eof, pos);
        Ok(self.out)
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    fn escape(&mut self, pos: Pos) -> Result<char, ParseError> {
        match self.bump() {
            Some('n') => Ok('\n'),
            Some('t') => Ok('\t'),
            Some('r') => Ok('\r'),
            Some('0') => Ok('\0'),
            Some('\\') => Ok('\\'),
            Some('\'') => Ok('\''),
            Some('"') => Ok('"'),
            _ => Err(self.err(pos, "invalid escape sequence")),
        }
    }

    fn string(&mut self, pos: Pos) -> Result<String, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.err(pos, "unterminated string literal")),
                Some('"') => return Ok(s),
                Some('\\') => s.push(self.escape(pos)?),
                Some(c) => s.push(c),
            }
        }
    }

    fn char_lit(&mut self, pos: Pos) -> Result<i64, ParseError> {
        self.bump();
        let c = match self.bump() {
            None | Some('\n') | Some('\'') => return Err(self.err(pos, "empty character literal")),
            Some('\\') => self.escape(pos)?,
            Some(c) => c,
        };
        if self.bump() != Some('\'') {
            return Err(self.err(pos, "unterminated character literal"));
        }
        Ok(c as i64)
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let mut text = String::new();
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
            } else if c == '.' && !is_float && self.peek2().is_some_and(|d| d.is_ascii_digit()) {
                is_float = true;
                text.push(c);
                self.bump();
            } else if (c == 'e' || c == 'E') && !text.contains('e') {
                let sign_ok = matches!(self.peek2(), Some(d) if d.is_ascii_digit() || d == '-' || d == '+');
                if !sign_ok {
                    break;
                }
                is_float = true;
                text.push('e');
                self.bump();
                if let Some(s @ ('-' | '+')) = self.peek() {
                    text.push(s);
                    self.bump();
                }
            } else {
                break;
            }
        }
        if is_float {
            text.parse::<f64>()
                .map(Tok::Float)
                .map_err(|_| self.err(pos, "invalid float literal"))
        } else {
            text.parse::<i64>()
                .map(Tok::Int)
                .map_err(|_| self.err(pos, "integer literal out of range"))
        }
    }
}
