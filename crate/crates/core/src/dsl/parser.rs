//! Recursive-descent parser producing a span-annotated [`Program`].
//!
//! Grammar (statements are self-delimiting, no separators required):
//!
//! ```text
//! block   := stmt*
//! stmt    := IDENT "=" expr
//!          | IDENT "(" args? ")"
//!          | "for" IDENT "=" expr "," expr ("," expr)? "do" block "end"
//!          | "if" expr "then" block ("else" block)? "end"
//! expr    := sum (CMP sum)*
//! sum     := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := NUMBER | STRING | IDENT ("(" args? ")")? | "(" expr ")"
//! ```

use super::ast::{BinaryOp, Expr, Program, Stmt, UnaryOp};
use super::lexer::{tokenize, unquote, Token, TokenKind};
use super::span::SourceSpan;
use super::{ParseError, SyntaxError};

pub fn parse(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens: &tokens, pos: 0, eof: source.len() };
    let statements = parser.block()?;
    if let Some(tok) = parser.peek() {
        return Err(parser.error_at(tok, "statement").into());
    }
    Ok(Program { statements, source: source.to_string() })
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    eof: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, text))
    }

    fn bump(&mut self) -> &'t Token {
        let tok = &self.tokens[self.pos];
        self.pos += 1;
        tok
    }

    fn error_at(&self, tok: &Token, expected: &str) -> ParseError {
        ParseError {
            span: tok.span,
            expected: expected.to_string(),
            found: format!("{:?}", tok.text),
        }
    }

    fn error_here(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(tok) => self.error_at(tok, expected),
            None => ParseError {
                span: SourceSpan::empty_at(self.eof),
                expected: expected.to_string(),
                found: "end of input".to_string(),
            },
        }
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> Result<&'t Token, ParseError> {
        if self.peek_is(kind, text) {
            Ok(self.bump())
        } else {
            Err(self.error_here(&format!("{text:?}")))
        }
    }

    fn ident(&mut self) -> Result<&'t Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.bump()),
            _ => Err(self.error_here("identifier")),
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut stmts = Vec::new();
        while let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Keyword && matches!(tok.text.as_str(), "end" | "else") {
                break;
            }
            stmts.push(self.statement()?);
        }
        Ok(stmts)
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let Some(tok) = self.peek() else {
            return Err(self.error_here("statement"));
        };
        match (tok.kind, tok.text.as_str()) {
            (TokenKind::Keyword, "for") => self.for_stmt(),
            (TokenKind::Keyword, "if") => self.if_stmt(),
            (TokenKind::Identifier, _) => {
                let name = self.bump();
                if self.peek_is(TokenKind::Operator, "=") {
                    self.bump();
                    let expr = self.expr()?;
                    let span = name.span.cover(expr.span());
                    Ok(Stmt::Assign { name: name.text.clone(), name_span: name.span, expr, span })
                } else if self.peek_is(TokenKind::Punctuation, "(") {
                    let (args, close) = self.args()?;
                    Ok(Stmt::Call { name: name.text.clone(), args, span: name.span.cover(close) })
                } else {
                    Err(self.error_here("\"=\" or \"(\""))
                }
            }
            _ => Err(self.error_at(tok, "statement")),
        }
    }

    fn for_stmt(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump();
        let var = self.ident()?;
        self.expect(TokenKind::Operator, "=")?;
        let from = self.expr()?;
        self.expect(TokenKind::Punctuation, ",")?;
        let to = self.expr()?;
        let step = if self.peek_is(TokenKind::Punctuation, ",") {
            self.bump();
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(TokenKind::Keyword, "do")?;
        let body = self.block()?;
        let end = self.expect(TokenKind::Keyword, "end")?;
        Ok(Stmt::For {
            var: var.text.clone(),
            from,
            to,
            step,
            body,
            span: kw.span.cover(end.span),
        })
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump();
        let cond = self.expr()?;
        self.expect(TokenKind::Keyword, "then")?;
        let then_branch = self.block()?;
        let else_branch = if self.peek_is(TokenKind::Keyword, "else") {
            self.bump();
            Some(self.block()?)
        } else {
            None
        };
        let end = self.expect(TokenKind::Keyword, "end")?;
        Ok(Stmt::If { cond, then_branch, else_branch, span: kw.span.cover(end.span) })
    }

    /// Parses `( expr, ... )` and returns the arguments plus the closing paren span.
    fn args(&mut self) -> Result<(Vec<Expr>, SourceSpan), ParseError> {
        self.expect(TokenKind::Punctuation, "(")?;
        let mut args = Vec::new();
        if !self.peek_is(TokenKind::Punctuation, ")") {
            loop {
                args.push(self.expr()?);
                if self.peek_is(TokenKind::Punctuation, ",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let close = self.expect(TokenKind::Punctuation, ")")?;
        Ok((args, close.span))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.sum()?;
        while let Some(op) = self.binary_op(&["<", "<=", ">", ">=", "==", "~=", "!="]) {
            let rhs = self.sum()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.binary_op(&["+", "-"]) {
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op(&["*", "/"]) {
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_op(&mut self, accepted: &[&str]) -> Option<BinaryOp> {
        let tok = self.peek()?;
        if tok.kind != TokenKind::Operator || !accepted.contains(&tok.text.as_str()) {
            return None;
        }
        self.bump();
        BinaryOp::from_symbol(&tok.text)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if !self.peek_is(TokenKind::Operator, "-") {
            return self.primary();
        }
        let minus = self.bump();
        if let Some(num) = self.peek().filter(|t| t.kind == TokenKind::Number && t.span.start == minus.span.end) {
            self.bump();
            let value = -self.number_value(num)?;
            return Ok(Expr::NumberLit { value, span: minus.span.cover(num.span) });
        }
        let operand = self.unary()?;
        let span = minus.span.cover(operand.span());
        Ok(Expr::Unary { op: UnaryOp::Neg, operand: Box::new(operand), span })
    }

    fn number_value(&self, tok: &Token) -> Result<f64, ParseError> {
        match tok.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ParseError {
                span: tok.span,
                expected: "finite number".to_string(),
                found: format!("{:?}", tok.text),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek() else {
            return Err(self.error_here("expression"));
        };
        match tok.kind {
            TokenKind::Number => {
                self.bump();
                Ok(Expr::NumberLit { value: self.number_value(tok)?, span: tok.span })
            }
            TokenKind::String => {
                self.bump();
                Ok(Expr::StringLit { value: unquote(&tok.text), span: tok.span })
            }
            TokenKind::Identifier => {
                self.bump();
                if self.peek_is(TokenKind::Punctuation, "(") {
                    let (args, close) = self.args()?;
                    Ok(Expr::BuiltinCall { name: tok.text.clone(), args, span: tok.span.cover(close) })
                } else {
                    Ok(Expr::Var { name: tok.text.clone(), span: tok.span })
                }
            }
            TokenKind::Punctuation if tok.text == "(" => {
                self.bump();
                let inner = self.expr()?;
                self.expect(TokenKind::Punctuation, ")")?;
                Ok(inner)
            }
            _ => Err(self.error_at(tok, "expression")),
        }
    }
}

fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = lhs.span().cover(rhs.span());
    Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span }
}
