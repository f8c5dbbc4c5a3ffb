use std::collections::BTreeMap;
use std::sync::Arc;

use super::FrontendError;
use crate::ast::{Definition, Expr, LetTerm, Pattern, StochasticMatrix, Type, Variable};

/// A parsed source file.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceProgram {
    pub matrices: BTreeMap<String, Arc<StochasticMatrix>>,
    pub var_types: BTreeMap<String, Type>,
    pub term: LetTerm,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Eq,
    Colon,
    Star,
    To,
    Lolli,
    Backslash,
    Dot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(x) => format!("number {x}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Star => "`*`".into(),
            Tok::To => "`->`".into(),
            Tok::Lolli => "`-o`".into(),
            Tok::Backslash => "`\\`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str) -> Result<Vec<Spanned>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let syntax = |line, col, msg: String| FrontendError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut bump = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            bump(1, &mut i);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            ':' => Some(Tok::Colon),
            '*' => Some(Tok::Star),
            '\\' | 'λ' => Some(Tok::Backslash),
            _ => None,
        };
        if let Some(tok) = single {
            bump(1, &mut i);
            out.push(Spanned { tok, line: l0, col: c0 });
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            bump(2, &mut i);
            out.push(Spanned { tok: Tok::To, line: l0, col: c0 });
            continue;
        }
        if c == '-'
            && chars.get(i + 1) == Some(&'o')
            && !chars.get(i + 2).copied().is_some_and(is_ident_char)
        {
            bump(2, &mut i);
            out.push(Spanned { tok: Tok::Lolli, line: l0, col: c0 });
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || ((c == '-' || c == '+' || c == '.')
                && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.'));
        if starts_number {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() {
                let d = chars[j];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            let s: String = chars[start..j].iter().collect();
            let x: f64 = s
                .parse()
                .map_err(|_| syntax(l0, c0, format!("malformed number `{s}`")))?;
            bump(j - i, &mut i);
            out.push(Spanned { tok: Tok::Num(x), line: l0, col: c0 });
            continue;
        }
        if c == '.' {
            bump(1, &mut i);
            out.push(Spanned { tok: Tok::Dot, line: l0, col: c0 });
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let s: String = chars[start..j].iter().collect();
            bump(j - i, &mut i);
            out.push(Spanned { tok: Tok::Ident(s), line: l0, col: c0 });
            continue;
        }
        return Err(syntax(l0, c0, format!("unexpected character `{c}`")));
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const KEYWORDS: [&str; 4] = ["let", "in", "matrix", "var"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    matrices: BTreeMap<String, Arc<StochasticMatrix>>,
    var_types: BTreeMap<String, Type>,
}

/// Parses a source file: `matrix` and `var` declarations followed by a
/// let-term. Matrices are not checked for stochasticity here.
pub fn parse(text: &str) -> Result<SourceProgram, FrontendError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        matrices: BTreeMap::new(),
        var_types: BTreeMap::new(),
    };
    p.declarations()?;
    let term = p.term()?;
    Ok(SourceProgram {
        matrices: p.matrices,
        var_types: p.var_types,
        term,
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, FrontendError> {
        let (line, col) = self.here();
        Err(FrontendError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), FrontendError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", want.describe(), self.peek().describe()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            t => self.error(format!("expected an identifier, found {}", t.describe())),
        }
    }

    fn declarations(&mut self) -> Result<(), FrontendError> {
        loop {
            if self.is_keyword("matrix") {
                self.matrix_decl()?;
            } else if self.is_keyword("var") {
                self.next();
                let (line, col) = self.here();
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::Semi)?;
                if !ty.is_variable_type() {
                    return Err(FrontendError::Syntax {
                        line,
                        col,
                        msg: format!("variable `{name}` must have a positive or arrow type, not {ty}"),
                    });
                }
                if self.var_types.insert(name.clone(), ty).is_some() {
                    return Err(FrontendError::Syntax {
                        line,
                        col,
                        msg: format!("variable `{name}` declared twice"),
                    });
                }
            } else {
                return Ok(());
            }
        }
    }

    fn matrix_decl(&mut self) -> Result<(), FrontendError> {
        self.next();
        let (line, col) = self.here();
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let mut slots = Vec::new();
        if *self.peek() != Tok::To {
            slots.push(self.slot()?);
            while *self.peek() == Tok::Star {
                self.next();
                slots.push(self.slot()?);
            }
        }
        self.expect(Tok::To)?;
        let out = self.ty()?;
        self.expect(Tok::Eq)?;
        self.expect(Tok::LBracket)?;
        let mut entries = Vec::new();
        let mut row_len: Option<usize> = None;
        let mut current = 0;
        loop {
            match self.next() {
                Tok::Num(x) => {
                    entries.push(x);
                    current += 1;
                    if *self.peek() == Tok::Comma {
                        self.next();
                    }
                }
                t @ (Tok::Semi | Tok::RBracket) => {
                    if current > 0 {
                        if row_len.is_some_and(|n| n != current) {
                            return Err(FrontendError::Syntax {
                                line,
                                col,
                                msg: format!("matrix `{name}` has rows of different lengths"),
                            });
                        }
                        row_len = Some(current);
                    }
                    current = 0;
                    if t == Tok::RBracket {
                        break;
                    }
                }
                t => {
                    self.pos -= 1;
                    return self.error(format!("expected a number, found {}", t.describe()));
                }
            }
        }
        self.expect(Tok::Semi)?;
        let m = StochasticMatrix::new(name.clone(), slots, out, entries)
            .map_err(|source| FrontendError::Matrix { line, col, source })?;
        if self.matrices.insert(name.clone(), Arc::new(m)).is_some() {
            return Err(FrontendError::Syntax {
                line,
                col,
                msg: format!("matrix `{name}` declared twice"),
            });
        }
        Ok(())
    }

    fn slot(&mut self) -> Result<Type, FrontendError> {
        match self.peek() {
            Tok::LParen => {
                self.next();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "Bool" => {
                self.next();
                Ok(Type::Bool)
            }
            t => self.error(format!("expected a type, found {}", t.describe())),
        }
    }

    /// `type := tensor ('-o' type)?`, `tensor := atom ('*' tensor)?`.
    fn ty(&mut self) -> Result<Type, FrontendError> {
        let left = self.tensor_ty()?;
        if *self.peek() == Tok::Lolli {
            self.next();
            let right = self.ty()?;
            if !left.is_positive() {
                return self.error("arrow input must be a positive type");
            }
            return Ok(Type::arrow(left, right));
        }
        Ok(left)
    }

    fn tensor_ty(&mut self) -> Result<Type, FrontendError> {
        let left = self.slot()?;
        if *self.peek() == Tok::Star {
            self.next();
            let right = self.tensor_ty()?;
            if !left.is_positive() {
                return self.error("left operand of `*` must be a positive type");
            }
            return Ok(Type::tensor(left, right));
        }
        Ok(left)
    }

    fn var(&self, name: &str) -> Variable {
        Variable::new(name, self.var_types.get(name).cloned().unwrap_or(Type::Bool))
    }

    fn pattern(&mut self) -> Result<Pattern, FrontendError> {
        if *self.peek() == Tok::LParen {
            self.next();
            let mut items = vec![self.pattern()?];
            while *self.peek() == Tok::Comma {
                self.next();
                items.push(self.pattern()?);
            }
            self.expect(Tok::RParen)?;
            let last = items.pop().expect("non-empty");
            Ok(items.into_iter().rev().fold(last, |acc, p| Pattern::pair(p, acc)))
        } else {
            let name = self.ident()?;
            Ok(Pattern::Var(self.var(&name)))
        }
    }

    fn term(&mut self) -> Result<LetTerm, FrontendError> {
        let mut defs = Vec::new();
        loop {
            if self.is_keyword("in") {
                self.next();
                let output = self.pattern()?;
                if *self.peek() == Tok::Semi {
                    self.next();
                }
                if *self.peek() != Tok::Eof {
                    return self.error(format!("expected end of input, found {}", self.peek().describe()));
                }
                return Ok(LetTerm::new(defs, output));
            }
            let p = self.pattern()?;
            if defs.is_empty() && *self.peek() == Tok::Eof {
                return Ok(LetTerm::new(vec![], p));
            }
            self.expect(Tok::Eq)?;
            let e = self.expr()?;
            defs.push(Definition::new(p, e));
            if *self.peek() == Tok::Semi {
                self.next();
            } else if !self.is_keyword("in") {
                return self.error(format!("expected `;` or `in`, found {}", self.peek().describe()));
            }
        }
    }

    fn expr(&mut self) -> Result<Arc<Expr>, FrontendError> {
        if self.is_keyword("let") {
            self.next();
            let p = self.pattern()?;
            self.expect(Tok::Eq)?;
            let bound = self.expr()?;
            if !self.is_keyword("in") {
                return self.error(format!("expected `in`, found {}", self.peek().describe()));
            }
            self.next();
            let body = self.expr()?;
            return Ok(Expr::let_in(p, bound, body));
        }
        if *self.peek() == Tok::Backslash {
            self.next();
            let p = self.pattern()?;
            self.expect(Tok::Dot)?;
            let body = self.expr()?;
            return Ok(Expr::lam(p, body));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Arc<Expr>, FrontendError> {
        if *self.peek() == Tok::LParen {
            self.next();
            let mut items = vec![self.expr()?];
            while *self.peek() == Tok::Comma {
                self.next();
                items.push(self.expr()?);
            }
            self.expect(Tok::RParen)?;
            let last = items.pop().expect("non-empty");
            return Ok(items.into_iter().rev().fold(last, |acc, e| Expr::pair(e, acc)));
        }
        let (line, col) = self.here();
        let name = self.ident()?;
        let applied = *self.peek() == Tok::LParen;
        if let Some(m) = self.matrices.get(&name).cloned() {
            let mut args = Vec::new();
            if applied {
                self.next();
                if *self.peek() != Tok::RParen {
                    {
                        let name = self.ident()?;
                        args.push(self.var(&name));
                    }
                    while *self.peek() == Tok::Comma {
                        self.next();
                        {
                        let name = self.ident()?;
                        args.push(self.var(&name));
                    }
                    }
                }
                self.expect(Tok::RParen)?;
            }
            return Ok(Expr::mat_app(m, args));
        }
        if !applied {
            return Ok(Expr::var(self.var(&name)));
        }
        match self.var_types.get(&name) {
            Some(ty) if ty.is_arrow() => {
                let f = Variable::new(&name, ty.clone());
                self.next();
                let mut items = vec![self.pattern()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    items.push(self.pattern()?);
                }
                self.expect(Tok::RParen)?;
                let last = items.pop().expect("non-empty");
                let args = items.into_iter().rev().fold(last, |acc, p| Pattern::pair(p, acc));
                Ok(Expr::arrow_app(f, args))
            }
            _ if name.starts_with(|c: char| c.is_ascii_uppercase()) => {
                Err(FrontendError::UndeclaredMatrix { name, line, col })
            }
            _ => Err(FrontendError::UndeclaredArrowVariable { name, line, col }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_ary_matrix() {
        let p = parse("matrix M : -> Bool = [0.5, 0.5];\nx = M() in x").unwrap();
        assert_eq!(p.term.defs.len(), 1);
        assert!(matches!(&*p.term.defs[0].expr, Expr::MatApp(_, a) if a.is_empty()));
    }

    #[test]
    fn bare_output() {
        let p = parse("(x, y)").unwrap();
        assert!(p.term.defs.is_empty());
        assert_eq!(p.term.output.len(), 2);
    }

    #[test]
    fn undeclared_heads() {
        let e = parse("x = M(y) in x").unwrap_err();
        assert!(matches!(e, FrontendError::UndeclaredMatrix { line: 1, col: 5, .. }), "{e}");
        let e = parse("x = f(y) in x").unwrap_err();
        assert!(matches!(e, FrontendError::UndeclaredArrowVariable { .. }), "{e}");
    }

    #[test]
    fn syntax_error_position() {
        let e = parse("x = \n  (y, in x").unwrap_err();
        match e {
            FrontendError::Syntax { line, col, .. } => assert_eq!((line, col), (2, 7)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn types_and_arrows() {
        let src = "var f : Bool * Bool -o Bool;\nvar g : Bool -o Bool * (Bool -o Bool);\n\
                   y = f(a, b);\nz = \\(u, v). (u, v) in y";
        let p = parse(src).unwrap();
        assert_eq!(
            p.var_types["f"],
            Type::arrow(Type::tensor(Type::Bool, Type::Bool), Type::Bool)
        );
        assert_eq!(
            p.var_types["g"],
            Type::arrow(Type::Bool, Type::tensor(Type::Bool, Type::arrow(Type::Bool, Type::Bool)))
        );
        assert!(matches!(&*p.term.defs[0].expr, Expr::ArrowApp(_, a) if a.len() == 2));
        assert!(matches!(&*p.term.defs[1].expr, Expr::Lam(..)));
    }

    #[test]
    fn comments_and_numbers() {
        let src = "# prior\nmatrix C : -> Bool = [3e-1 7E-1]; // trailing\nx = C in x;";
        let p = parse(src).unwrap();
        assert_eq!(p.matrices["C"].entries(), &[0.3, 0.7]);
    }

    #[test]
    fn bad_matrix_shape() {
        let e = parse("matrix M : Bool -> Bool = [0.5, 0.5];\nx in x").unwrap_err();
        assert!(matches!(e, FrontendError::Matrix { .. }), "{e}");
    }
}
