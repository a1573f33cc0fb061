//! Hand-written lexers for the two supported languages.
//!
//! Token boundaries follow each language's lexical grammar: identifiers and
//! keywords, numeric literals, whole string/char literals, and operators by
//! longest match. The Java lexer is context-free, so the closing `>>` of a
//! nested generic type is a single token here.

const PYTHON_OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<",
    ">>", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "<>",
];

const JAVA_OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=", "<<", ">>",
];

const PYTHON_STRING_PREFIXES: &[&str] = &[
    "r", "u", "b", "f", "br", "rb", "fr", "rf",
];

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn new(src: &str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn bump_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
    }

    fn slice(&self, start: usize) -> String {
        self.chars[start..self.pos].iter().collect()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn match_operator(cur: &Cursor, table: &[&str]) -> Option<usize> {
    table
        .iter()
        .find(|op| cur.starts_with(op))
        .map(|op| op.chars().count())
}

pub(super) fn lex_python(src: &str) -> Vec<String> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();
    while !cur.at_end() {
        let c = cur.peek().unwrap();
        let start = cur.pos;
        if c.is_whitespace() {
            cur.pos += 1;
        } else if c == '#' {
            cur.bump_while(|c| c != '\n');
        } else if c == '\\' && matches!(cur.peek_at(1), Some('\n') | Some('\r')) {
            cur.pos += 2;
        } else if is_ident_start(c) {
            cur.bump_while(is_ident_continue);
            let word = cur.slice(start);
            let is_prefix = PYTHON_STRING_PREFIXES.contains(&word.to_ascii_lowercase().as_str());
            if is_prefix && matches!(cur.peek(), Some('"') | Some('\'')) {
                python_string(&mut cur);
                out.push(cur.slice(start));
            } else {
                out.push(word);
            }
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            python_number(&mut cur);
            out.push(cur.slice(start));
        } else if c == '"' || c == '\'' {
            python_string(&mut cur);
            out.push(cur.slice(start));
        } else if let Some(len) = match_operator(&cur, PYTHON_OPERATORS) {
            cur.pos += len;
            out.push(cur.slice(start));
        } else {
            cur.pos += 1;
            out.push(cur.slice(start));
        }
    }
    out
}

fn python_number(cur: &mut Cursor) {
    let radix_prefix = cur.peek() == Some('0')
        && matches!(cur.peek_at(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B'));
    if radix_prefix {
        cur.pos += 2;
        cur.bump_while(|c| c.is_ascii_hexdigit() || c == '_');
        return;
    }
    cur.bump_while(|c| c.is_ascii_digit() || c == '_');
    if cur.peek() == Some('.') && !cur.peek_at(1).is_some_and(|c| c == '.' || c == '_' || (c.is_alphabetic() && !matches!(c, 'e' | 'E' | 'j' | 'J'))) {
        cur.pos += 1;
        cur.bump_while(|c| c.is_ascii_digit() || c == '_');
    }
    exponent(cur);
    if matches!(cur.peek(), Some('j' | 'J')) {
        cur.pos += 1;
    }
}

fn exponent(cur: &mut Cursor) {
    if matches!(cur.peek(), Some('e' | 'E')) {
        let signed = matches!(cur.peek_at(1), Some('+' | '-'));
        let digit_at = if signed { 2 } else { 1 };
        if cur.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            cur.pos += digit_at;
            cur.bump_while(|c| c.is_ascii_digit() || c == '_');
        }
    }
}

/// Consumes a string literal starting at the opening quote.
fn python_string(cur: &mut Cursor) {
    let quote = cur.peek().unwrap();
    let triple = cur.peek_at(1) == Some(quote) && cur.peek_at(2) == Some(quote);
    cur.pos += if triple { 3 } else { 1 };
    while let Some(c) = cur.peek() {
        if c == '\\' {
            cur.pos += 2;
        } else if triple {
            if c == quote && cur.peek_at(1) == Some(quote) && cur.peek_at(2) == Some(quote) {
                cur.pos += 3;
                return;
            }
            cur.pos += 1;
        } else if c == quote {
            cur.pos += 1;
            return;
        } else if c == '\n' {
            // unterminated single-line string
            return;
        } else {
            cur.pos += 1;
        }
    }
    cur.pos = cur.pos.min(cur.chars.len());
}

pub(super) fn lex_java(src: &str) -> Vec<String> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();
    while !cur.at_end() {
        let c = cur.peek().unwrap();
        let start = cur.pos;
        if c.is_whitespace() {
            cur.pos += 1;
        } else if cur.starts_with("//") {
            cur.bump_while(|c| c != '\n');
        } else if cur.starts_with("/*") {
            cur.pos += 2;
            while !cur.at_end() && !cur.starts_with("*/") {
                cur.pos += 1;
            }
            cur.pos = (cur.pos + 2).min(cur.chars.len());
        } else if is_ident_start(c) || c == '$' {
            cur.bump_while(|c| is_ident_continue(c) || c == '$');
            out.push(cur.slice(start));
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            java_number(&mut cur);
            out.push(cur.slice(start));
        } else if cur.starts_with("\"\"\"") {
            cur.pos += 3;
            while !cur.at_end() && !cur.starts_with("\"\"\"") {
                cur.pos += if cur.peek() == Some('\\') { 2 } else { 1 };
            }
            cur.pos = (cur.pos + 3).min(cur.chars.len());
            out.push(cur.slice(start));
        } else if c == '"' || c == '\'' {
            cur.pos += 1;
            while let Some(d) = cur.peek() {
                if d == '\\' {
                    cur.pos += 2;
                } else if d == c {
                    cur.pos += 1;
                    break;
                } else if d == '\n' {
                    break;
                } else {
                    cur.pos += 1;
                }
            }
            cur.pos = cur.pos.min(cur.chars.len());
            out.push(cur.slice(start));
        } else if let Some(len) = match_operator(&cur, JAVA_OPERATORS) {
            cur.pos += len;
            out.push(cur.slice(start));
        } else {
            cur.pos += 1;
            out.push(cur.slice(start));
        }
    }
    out
}

fn java_number(cur: &mut Cursor) {
    let radix_prefix =
        cur.peek() == Some('0') && matches!(cur.peek_at(1), Some('x' | 'X' | 'b' | 'B'));
    if radix_prefix {
        cur.pos += 2;
        cur.bump_while(|c| c.is_ascii_hexdigit() || c == '_');
        if matches!(cur.peek(), Some('l' | 'L')) {
            cur.pos += 1;
        }
        return;
    }
    cur.bump_while(|c| c.is_ascii_digit() || c == '_');
    if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
        cur.pos += 1;
        cur.bump_while(|c| c.is_ascii_digit() || c == '_');
    } else if cur.peek() == Some('.') && !cur.peek_at(1).is_some_and(|c| is_ident_start(c) || c == '.') {
        cur.pos += 1;
    }
    exponent(cur);
    if matches!(cur.peek(), Some('f' | 'F' | 'd' | 'D' | 'l' | 'L')) {
        cur.pos += 1;
    }
}
