use crate::document::Category;

use super::Diagnostic;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Arrow,
    Implies,
    Iri(String),
    /// `care:` as used in prefix declarations.
    PrefixName(String),
    QName(String),
    Var(String),
    Number(f64),
    Duration(String),
    Text(String),
    Ident(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Implies => "`<=`".into(),
            Tok::Iri(i) => format!("<{i}>"),
            Tok::PrefixName(p) => format!("`{p}:`"),
            Tok::QName(q) => format!("`{q}`"),
            Tok::Var(v) => format!("`?{v}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Duration(d) => format!("duration {d}"),
            Tok::Text(_) => "string".into(),
            Tok::Ident(i) => format!("`{i}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub(crate) struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer { chars: src.chars().collect(), i: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let pos = lx.pos();
        let Some(c) = lx.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = match c {
            '{' => lx.single(Tok::LBrace),
            '}' => lx.single(Tok::RBrace),
            '(' => lx.single(Tok::LParen),
            ')' => lx.single(Tok::RParen),
            '.' => lx.single(Tok::Dot),
            '-' if lx.peek_at(1) == Some('>') => {
                lx.bump();
                lx.single(Tok::Arrow)
            }
            '-' if lx.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => lx.number(pos)?,
            '0'..='9' => lx.number(pos)?,
            '<' if lx.peek_at(1) == Some('=') => {
                lx.bump();
                lx.single(Tok::Implies)
            }
            '<' => lx.iri(pos)?,
            '"' => lx.text(pos)?,
            '?' => {
                lx.bump();
                let name = lx.word();
                if name.is_empty() || !crate::term::is_name(&name) {
                    return Err(syntax(pos, "expected a variable name after `?`"));
                }
                Tok::Var(name)
            }
            c if c.is_ascii_alphabetic() || c == '_' => lx.name(pos)?,
            other => return Err(syntax(pos, format!("unexpected character {other:?}"))),
        };
        out.push(Token { tok, pos });
    }
}

pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic { line: pos.line, column: pos.column, category: Category::Syntax, path: None, message: message.into() }
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Lexer {
    fn pos(&self) -> Pos {
        Pos { line: self.line, column: self.col }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.i + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| crate::term::is_local_char(*c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn digits(&mut self, s: &mut String) {
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, Diagnostic> {
        let mut s = String::new();
        if self.peek() == Some('-') {
            s.push('-');
            self.bump();
        }
        self.digits(&mut s);
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            s.push('.');
            self.bump();
            self.digits(&mut s);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                s.push('e');
                self.bump();
                if sign {
                    s.push(self.bump().unwrap());
                }
                self.digits(&mut s);
            }
        }
        if self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return Err(syntax(pos, format!("malformed number starting {s:?}")));
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Number(v)),
            _ => Err(syntax(pos, format!("number {s} is out of range"))),
        }
    }

    fn iri(&mut self, pos: Pos) -> Result<Tok, Diagnostic> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(Tok::Iri(s)),
                Some(c) if !c.is_whitespace() => s.push(c),
                _ => return Err(syntax(pos, "unterminated IRI")),
            }
        }
    }

    fn text(&mut self, pos: Pos) -> Result<Tok, Diagnostic> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(Tok::Text(s)),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    _ => return Err(syntax(pos, "bad escape in string")),
                },
                Some('\n') | None => return Err(syntax(pos, "unterminated string")),
                Some(c) => s.push(c),
            }
        }
    }

    fn name(&mut self, pos: Pos) -> Result<Tok, Diagnostic> {
        let head = self.word();
        if self.peek() != Some(':') {
            let looks_like_duration = head.starts_with('P')
                && head[1..].starts_with(|c: char| c.is_ascii_digit() || c == 'T');
            if looks_like_duration {
                // A fractional duration such as PT0.5S lexes as one token so
                // it can be reported as a bad duration.
                let mut full = head;
                while self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                    full.push('.');
                    self.bump();
                    full.push_str(&self.word());
                }
                return Ok(Tok::Duration(full));
            }
            return Ok(Tok::Ident(head));
        }
        self.bump();
        if !crate::term::is_name(&head) {
            return Err(syntax(pos, format!("bad prefix name {head:?}")));
        }
        let local = self.word();
        if local.is_empty() {
            Ok(Tok::PrefixName(head))
        } else {
            Ok(Tok::QName(format!("{head}:{local}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_before_dots() {
        assert_eq!(toks("50."), vec![Tok::Number(50.0), Tok::Dot, Tok::Eof]);
        assert_eq!(toks("0.7 ."), vec![Tok::Number(0.7), Tok::Dot, Tok::Eof]);
        assert_eq!(toks("-3"), vec![Tok::Number(-3.0), Tok::Eof]);
    }

    #[test]
    fn names_and_durations() {
        assert_eq!(
            toks("prefix care: <http://x#> care:tumor_size ?p P50D PT0.5S Pfoo # done"),
            vec![
                Tok::Ident("prefix".into()),
                Tok::PrefixName("care".into()),
                Tok::Iri("http://x#".into()),
                Tok::QName("care:tumor_size".into()),
                Tok::Var("p".into()),
                Tok::Duration("P50D".into()),
                Tok::Duration("PT0.5S".into()),
                Tok::Ident("Pfoo".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("\n  {").unwrap();
        assert_eq!(t[0].pos, Pos { line: 2, column: 3 });
    }

    #[test]
    fn errors_carry_positions() {
        let err = tokenize("{ \"open").unwrap_err();
        assert_eq!((err.line, err.column), (1, 3));
        assert!(tokenize("@").is_err());
        assert!(tokenize("12abc").is_err());
    }
}
