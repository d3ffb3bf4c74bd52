use crate::error::{Error, Position, Result};
use crate::graph::EdgeOrientation;
use crate::predicate::{ColumnRef, CompareOp, Expr, Term};
use crate::value::{PathStep, Value};

use super::ast::{is_keyword, Analyze, AnalyzeOp, EdgeAst, PatternAst, Query, SelectItem, Source, Statement, VertexAst};
use super::lexer::{tokenize, Tok, Token};

/// Parse one statement: a query, `EXPLAIN <query>` or `ANALYZE ...`.
pub fn parse(text: &str) -> Result<Statement> {
    let mut p = Parser::new(text)?;
    let stmt = if p.eat_keyword("EXPLAIN") {
        Statement::Explain(p.query()?)
    } else if p.peek_keyword("ANALYZE") {
        Statement::Analyze(p.analyze()?)
    } else {
        Statement::Query(p.query()?)
    };
    p.finish()?;
    Ok(stmt)
}

/// Parse a plain query.
pub fn parse_query(text: &str) -> Result<Query> {
    let mut p = Parser::new(text)?;
    let q = p.query()?;
    p.finish()?;
    Ok(q)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            tokens: tokenize(text)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Position {
        self.tokens[self.at].pos
    }

    fn next(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::syntax(self.pos(), message))
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Eof => "end of input".into(),
            Tok::Word(w) => format!("'{w}'"),
            Tok::Quoted(w) => format!("\"{w}\""),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Int(s) | Tok::Float(s) => format!("number {s}"),
            other => format!("{other:?}"),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", self.describe()))
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected {kw}, found {}", self.describe()))
        }
    }

    fn finish(&mut self) -> Result<()> {
        while *self.peek() == Tok::Semicolon {
            self.next();
        }
        if *self.peek() != Tok::Eof {
            return self.error(format!("unexpected {} after end of statement", self.describe()));
        }
        Ok(())
    }

    /// A non-keyword identifier.
    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Word(w) if !is_keyword(&w) => {
                self.next();
                Ok(w)
            }
            Tok::Quoted(w) => {
                self.next();
                Ok(w)
            }
            _ => self.error(format!("expected {what}, found {}", self.describe())),
        }
    }

    fn query(&mut self) -> Result<Query> {
        self.expect_keyword("SELECT")?;
        let mut select = Vec::new();
        loop {
            if *self.peek() == Tok::Star {
                self.next();
                select.push(SelectItem::Star);
            } else {
                let term = self.term()?;
                let alias = if self.eat_keyword("AS") {
                    Some(self.ident("alias")?)
                } else {
                    None
                };
                select.push(SelectItem::Term { term, alias });
            }
            if *self.peek() != Tok::Comma {
                break;
            }
            self.next();
        }
        self.expect_keyword("FROM")?;
        let mut from = Vec::new();
        loop {
            let name = self.ident("collection name")?;
            let alias = if self.eat_keyword("AS") {
                Some(self.ident("alias")?)
            } else {
                match self.peek() {
                    Tok::Word(w) if !is_keyword(w) => Some(self.ident("alias")?),
                    Tok::Quoted(_) => Some(self.ident("alias")?),
                    _ => None,
                }
            };
            from.push(Source { name, alias });
            if *self.peek() != Tok::Comma {
                break;
            }
            self.next();
        }
        let pattern = if self.eat_keyword("MATCH") {
            Some(self.pattern()?)
        } else {
            None
        };
        let filter = if self.eat_keyword("WHERE") {
            Some(self.or_expr()?)
        } else {
            None
        };
        Ok(Query {
            select,
            from,
            pattern,
            filter,
        })
    }

    /// Optional variable and `:label`, up to the closing `close` token.
    fn var_and_label(&mut self, close: Tok) -> Result<(Option<String>, Option<String>)> {
        let var = match self.peek() {
            Tok::Colon => None,
            t if *t == close => None,
            _ => Some(self.ident("pattern variable")?),
        };
        let label = if *self.peek() == Tok::Colon {
            self.next();
            let mut words = Vec::new();
            loop {
                match self.peek().clone() {
                    Tok::Word(w) | Tok::Quoted(w) => {
                        self.next();
                        words.push(w);
                    }
                    _ => break,
                }
            }
            if words.is_empty() {
                return self.error(format!("expected label, found {}", self.describe()));
            }
            Some(words.join(" "))
        } else {
            None
        };
        if *self.peek() != close {
            return self.error(format!("expected {close:?}, found {}", self.describe()));
        }
        self.next();
        Ok((var, label))
    }

    fn vertex(&mut self) -> Result<VertexAst> {
        self.expect(Tok::LParen, "'(' opening a pattern vertex")?;
        let (var, label) = self.var_and_label(Tok::RParen)?;
        Ok(VertexAst { var, label })
    }

    fn pattern(&mut self) -> Result<PatternAst> {
        let mut vertices = vec![self.vertex()?];
        let mut edges = Vec::new();
        loop {
            let orientation = match self.peek() {
                Tok::Minus => EdgeOrientation::Out,
                Tok::LeftArrow => EdgeOrientation::In,
                _ => break,
            };
            self.next();
            self.expect(Tok::LBracket, "'[' opening a pattern edge")?;
            let (var, label) = self.var_and_label(Tok::RBracket)?;
            match orientation {
                EdgeOrientation::Out => self.expect(Tok::Arrow, "'->' closing an outgoing edge")?,
                EdgeOrientation::In => self.expect(Tok::Minus, "'-' closing an incoming edge")?,
            }
            edges.push(EdgeAst { var, label, orientation });
            vertices.push(self.vertex()?);
        }
        Ok(PatternAst { vertices, edges })
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut parts = vec![self.and_expr()?];
        while self.eat_keyword("OR") {
            parts.push(self.and_expr()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut parts = vec![self.not_expr()?];
        while self.eat_keyword("AND") {
            parts.push(self.not_expr()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.eat_keyword("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        if *self.peek() == Tok::LParen {
            self.next();
            let e = self.or_expr()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(e);
        }
        for (kw, b) in [("TRUE", true), ("FALSE", false)] {
            if self.peek_keyword(kw) && compare_op(self.peek_at(1)).is_none() {
                self.next();
                return Ok(Expr::Const(b));
            }
        }
        let lhs = self.term()?;
        let Some(op) = compare_op(self.peek()) else {
            return self.error(format!("expected comparison operator, found {}", self.describe()));
        };
        self.next();
        let rhs = self.term()?;
        Ok(Expr::compare(op, lhs, rhs))
    }

    fn term(&mut self) -> Result<Term> {
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.next();
        }
        let sign = if negative { "-" } else { "" };
        match self.peek().clone() {
            Tok::Int(s) => {
                self.next();
                match format!("{sign}{s}").parse::<i64>() {
                    Ok(i) => Ok(Term::literal(i)),
                    Err(_) => self.error(format!("integer literal {sign}{s} out of range")),
                }
            }
            Tok::Float(s) => {
                self.next();
                let x: f64 = format!("{sign}{s}").parse().expect("lexer produced a valid float");
                Ok(Term::literal(x))
            }
            _ if negative => self.error(format!("expected number after '-', found {}", self.describe())),
            Tok::Str(s) => {
                self.next();
                Ok(Term::literal(s))
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("NULL") => {
                self.next();
                Ok(Term::literal(Value::Null))
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("TRUE") || w.eq_ignore_ascii_case("FALSE") => {
                self.next();
                Ok(Term::literal(w.eq_ignore_ascii_case("TRUE")))
            }
            _ => Ok(Term::Column(self.column_ref()?)),
        }
    }

    fn column_ref(&mut self) -> Result<ColumnRef> {
        let first = self.ident("column reference")?;
        let mut c = if *self.peek() == Tok::Dot {
            self.next();
            let name = self.ident("column name")?;
            ColumnRef::qualified(first, name)
        } else {
            ColumnRef {
                qualifier: None,
                column: Some(first),
                path: Vec::new(),
            }
        };
        while *self.peek() == Tok::PathArrow {
            self.next();
            match self.next() {
                Tok::Str(k) => c.path.push(PathStep::Key(k)),
                Tok::Int(i) => match i.parse() {
                    Ok(i) => c.path.push(PathStep::Index(i)),
                    Err(_) => return self.error(format!("array index {i} out of range")),
                },
                _ => {
                    self.at -= 1;
                    return self.error(format!("expected key or index after '->>', found {}", self.describe()));
                }
            }
        }
        Ok(c)
    }

    fn analyze(&mut self) -> Result<Analyze> {
        self.expect_keyword("ANALYZE")?;
        let op = match self.peek().clone() {
            Tok::Word(w) => match AnalyzeOp::parse(&w) {
                Some(op) => {
                    self.next();
                    op
                }
                None => return self.error(format!("unknown analysis operator {w}")),
            },
            _ => return self.error(format!("expected analysis operator, found {}", self.describe())),
        };
        self.expect_keyword("USING")?;
        let mut inputs = Vec::new();
        loop {
            self.expect(Tok::LParen, "'(' before a query")?;
            inputs.push(self.query()?);
            self.expect(Tok::RParen, "')' after a query")?;
            if !self.eat_keyword("AND") {
                break;
            }
        }
        let mut options = Vec::new();
        if self.eat_keyword("WITH") {
            self.expect(Tok::LParen, "'(' before options")?;
            loop {
                let key = self.ident("option name")?;
                self.expect(Tok::Eq, "'='")?;
                let value = match self.peek().clone() {
                    Tok::Word(w) if !is_keyword(&w) => {
                        self.next();
                        Value::Text(w)
                    }
                    _ => match self.term()? {
                        Term::Literal(l) => l.0,
                        Term::Column(_) => return self.error("option values must be literals"),
                    },
                };
                options.push((key, value));
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.next();
            }
            self.expect(Tok::RParen, "')' after options")?;
        }
        if inputs.len() != op.arity() {
            return Err(Error::syntax(
                self.pos(),
                format!("{op} takes {} input quer{}", op.arity(), if op.arity() == 1 { "y" } else { "ies" }),
            ));
        }
        Ok(Analyze { op, inputs, options })
    }
}

fn compare_op(t: &Tok) -> Option<CompareOp> {
    Some(match t {
        Tok::Eq => CompareOp::Eq,
        Tok::Ne => CompareOp::Ne,
        Tok::Lt => CompareOp::Lt,
        Tok::Le => CompareOp::Le,
        Tok::Gt => CompareOp::Gt,
        Tok::Ge => CompareOp::Ge,
        _ => return None,
    })
}
