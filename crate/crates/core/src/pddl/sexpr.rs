//! S-expression reader with source positions.

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// Head symbol of a list, lowercased by the reader.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_atom)
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str, PddlError> {
        self.as_atom()
            .ok_or_else(|| PddlError::syntax(self.pos(), format!("expected {what}, found a list")))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexpr], PddlError> {
        self.as_list().ok_or_else(|| {
            PddlError::syntax(self.pos(), format!("expected {what}, found `{}`", self.as_atom().unwrap_or("")))
        })
    }
}

/// Parses exactly one top-level expression; PDDL is case-insensitive so
/// symbols are lowercased.
pub fn parse(text: &str) -> Result<Sexpr, PddlError> {
    let mut reader = Reader { chars: text.chars().peekable(), line: 1, col: 1 };
    reader.skip_ws();
    let expr = match reader.peek() {
        None => return Err(PddlError::syntax(reader.pos(), "empty input")),
        Some(_) => reader.expr()?,
    };
    reader.skip_ws();
    if reader.peek().is_some() {
        return Err(PddlError::syntax(reader.pos(), "trailing input after top-level expression"));
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Reader<'_> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn expr(&mut self) -> Result<Sexpr, PddlError> {
        let start = self.pos();
        match self.peek() {
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(PddlError::syntax(start, "unbalanced `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, start));
                        }
                        Some(_) => items.push(self.expr()?),
                    }
                }
            }
            Some(')') => Err(PddlError::syntax(start, "unexpected `)`")),
            Some(_) => {
                let mut sym = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    sym.push(c.to_ascii_lowercase());
                    self.bump();
                }
                Ok(Sexpr::Atom(sym, start))
            }
            None => Err(PddlError::syntax(start, "unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let e = parse("; c\n(define (Foo ?x))").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(e.pos(), Pos { line: 2, col: 1 });
        assert_eq!(items[0].as_atom(), Some("define"));
        assert_eq!(items[1].head(), Some("foo"));
        assert_eq!(items[1].pos(), Pos { line: 2, col: 9 });
    }

    #[test]
    fn reports_unbalanced_input() {
        let err = parse("(a (b)").unwrap_err();
        assert!(matches!(err, PddlError::Syntax { line: 1, col: 1, .. }), "{err}");
        let err = parse("(a))").unwrap_err();
        assert!(matches!(err, PddlError::Syntax { line: 1, col: 4, .. }), "{err}");
    }
}
