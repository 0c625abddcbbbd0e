use super::lexer::{tokenize, Tok};
use super::{Expr, ExprError, Func, Pos};
use crate::poly::parse_decimal;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { pos: self.pos(), message: message.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let (l_bp, r_bp) = match self.peek() {
                Some(Tok::Plus | Tok::Minus) => (1, 2),
                Some(Tok::Star | Tok::Slash) => (3, 4),
                // right associative, binds tighter than unary minus
                Some(Tok::Caret) => (8, 7),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            let (op, pos) = self.bump().expect("peeked");
            let rhs = self.expr(r_bp)?;
            lhs = match op {
                Tok::Plus => Expr::Add(Box::new(lhs), Box::new(rhs)),
                Tok::Minus => Expr::Sub(Box::new(lhs), Box::new(rhs)),
                Tok::Star => Expr::Mul(Box::new(lhs), Box::new(rhs)),
                Tok::Slash => Expr::Div(Box::new(lhs), Box::new(rhs)),
                Tok::Caret => Expr::Pow(Box::new(lhs), Box::new(rhs), pos),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Some((Tok::Num(text), _)) => match parse_decimal(&text) {
                Some(q) => Ok(Expr::Num(q)),
                None => Err(ExprError::Syntax { pos, message: format!("malformed number '{text}'") }),
            },
            Some((Tok::Ident(name), _)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ExprError::Syntax { pos, message: format!("unknown function '{name}'") });
                    };
                    self.at += 1;
                    let arg = self.expr(0)?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Expr::Call(func, Box::new(arg), pos))
                } else {
                    Ok(Expr::Var(name, pos))
                }
            }
            Some((Tok::Minus, _)) => Ok(Expr::Neg(Box::new(self.expr(5)?))),
            Some((Tok::Plus, _)) => self.expr(5),
            Some((Tok::LParen, _)) => {
                let e = self.expr(0)?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(_) => Err(ExprError::Syntax { pos, message: "expected an expression".into() }),
            None => Err(ExprError::Syntax { pos, message: "unexpected end of expression".into() }),
        }
    }
}

/// Parse a complete expression; `origin` locates `text` in its file.
pub fn parse_expr_at(text: &str, origin: Pos) -> Result<Expr, ExprError> {
    let toks = tokenize(text, origin)?;
    let end = Pos { line: origin.line, column: origin.column + text.chars().count() };
    let mut p = Parser { toks, at: 0, end };
    let e = p.expr(0)?;
    if p.at < p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    parse_expr_at(text, Pos { line: 1, column: 1 })
}
