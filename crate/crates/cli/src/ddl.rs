//! Catalog and data-movement statements: CREATE, IMPORT, EXPORT, INSERT.
//!
//! ```text
//! CREATE TABLE name (col TYPE, ...)
//! CREATE COLLECTION name
//! CREATE VERTEX TABLE name [LABEL 'label'] (col TYPE, ...)
//! CREATE EDGE TABLE name [LABEL 'label'] (col TYPE, ...)
//! CREATE GRAPH name VERTICES (table, ...) EDGES table
//! IMPORT name FROM 'path'
//! EXPORT name TO 'path'
//! INSERT INTO name VALUES (v, ...), ...
//! ```

use gredo_core::error::{Error, Position, Result};
use gredo_core::query::lexer::{tokenize, Tok, Token};
use gredo_core::schema::{ColumnDef, ColumnType};
use gredo_core::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    CreateTable { name: String, columns: Vec<ColumnDef> },
    CreateCollection { name: String },
    CreateVertexTable { name: String, label: String, columns: Vec<ColumnDef> },
    CreateEdgeTable { name: String, label: String, columns: Vec<ColumnDef> },
    CreateGraph { name: String, vertex_tables: Vec<String>, edge_table: String },
    Import { name: String, path: String },
    Export { name: String, path: String },
    Insert { name: String, rows: Vec<Vec<Value>> },
}

/// First word of a statement, upper-cased.
pub fn leading_keyword(text: &str) -> Option<String> {
    let mut toks = tokenize(text).ok()?.into_iter();
    match toks.next()?.tok {
        Tok::Word(w) => Some(w.to_ascii_uppercase()),
        _ => None,
    }
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at.min(self.toks.len() - 1)]
    }

    fn pos(&self) -> Position {
        self.peek().pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek().tok.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.is_word(kw) {
            self.bump();
            Ok(())
        } else {
            Err(Error::syntax(self.pos(), format!("expected {kw}, found {:?}", self.peek().tok)))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(Error::syntax(self.pos(), format!("expected {tok:?}, found {:?}", self.peek().tok)))
        }
    }

    fn ident(&mut self) -> Result<String> {
        let pos = self.pos();
        match self.bump() {
            Tok::Word(w) | Tok::Quoted(w) => Ok(w),
            other => Err(Error::syntax(pos, format!("expected a name, found {other:?}"))),
        }
    }

    fn string(&mut self) -> Result<String> {
        let pos = self.pos();
        match self.bump() {
            Tok::Str(s) => Ok(s),
            other => Err(Error::syntax(pos, format!("expected a quoted string, found {other:?}"))),
        }
    }

    fn end(&mut self) -> Result<()> {
        self.eat(&Tok::Semicolon);
        match self.peek().tok {
            Tok::Eof => Ok(()),
            ref other => Err(Error::syntax(self.pos(), format!("unexpected {other:?}"))),
        }
    }

    fn columns(&mut self) -> Result<Vec<ColumnDef>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            let name = self.ident()?;
            let pos = self.pos();
            let ty = self.ident()?;
            let ty = ColumnType::parse(&ty).ok_or_else(|| Error::syntax(pos, format!("unknown column type {ty}")))?;
            out.push(ColumnDef::new(name, ty));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn label(&mut self, default: &str) -> Result<String> {
        if self.is_word("LABEL") {
            self.bump();
            self.string()
        } else {
            Ok(default.to_string())
        }
    }

    fn literal(&mut self) -> Result<Value> {
        let pos = self.pos();
        let negative = self.eat(&Tok::Minus);
        let v = match self.bump() {
            Tok::Int(s) => Value::Int(s.parse().map_err(|_| Error::syntax(pos, format!("bad integer {s}")))?),
            Tok::Float(s) => Value::Float(s.parse().map_err(|_| Error::syntax(pos, format!("bad number {s}")))?),
            Tok::Str(s) if !negative => Value::Text(s),
            Tok::Word(w) if !negative && w.eq_ignore_ascii_case("NULL") => Value::Null,
            Tok::Word(w) if !negative && w.eq_ignore_ascii_case("TRUE") => Value::Bool(true),
            Tok::Word(w) if !negative && w.eq_ignore_ascii_case("FALSE") => Value::Bool(false),
            other => return Err(Error::syntax(pos, format!("expected a literal, found {other:?}"))),
        };
        Ok(match (negative, v) {
            (true, Value::Int(i)) => Value::Int(-i),
            (true, Value::Float(x)) => Value::Float(-x),
            (_, v) => v,
        })
    }
}

/// Parse one of the statements above; `Ok(None)` when the text starts
/// with some other keyword.
pub fn parse_command(text: &str) -> Result<Option<Command>> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, at: 0 };
    let cmd = if p.is_word("CREATE") {
        p.bump();
        if p.is_word("TABLE") {
            p.bump();
            let name = p.ident()?;
            Command::CreateTable {
                name,
                columns: p.columns()?,
            }
        } else if p.is_word("COLLECTION") {
            p.bump();
            Command::CreateCollection { name: p.ident()? }
        } else if p.is_word("VERTEX") || p.is_word("EDGE") {
            let vertex = p.is_word("VERTEX");
            p.bump();
            p.keyword("TABLE")?;
            let name = p.ident()?;
            let label = p.label(&name)?;
            let columns = p.columns()?;
            if vertex {
                Command::CreateVertexTable { name, label, columns }
            } else {
                Command::CreateEdgeTable { name, label, columns }
            }
        } else if p.is_word("GRAPH") {
            p.bump();
            let name = p.ident()?;
            p.keyword("VERTICES")?;
            p.expect(Tok::LParen)?;
            let mut vertex_tables = vec![p.ident()?];
            while p.eat(&Tok::Comma) {
                vertex_tables.push(p.ident()?);
            }
            p.expect(Tok::RParen)?;
            p.keyword("EDGES")?;
            Command::CreateGraph {
                name,
                vertex_tables,
                edge_table: p.ident()?,
            }
        } else {
            return Err(Error::syntax(
                p.pos(),
                "expected TABLE, COLLECTION, VERTEX TABLE, EDGE TABLE or GRAPH after CREATE",
            ));
        }
    } else if p.is_word("IMPORT") {
        p.bump();
        let name = p.ident()?;
        p.keyword("FROM")?;
        Command::Import { name, path: p.string()? }
    } else if p.is_word("EXPORT") {
        p.bump();
        let name = p.ident()?;
        p.keyword("TO")?;
        Command::Export { name, path: p.string()? }
    } else if p.is_word("INSERT") {
        p.bump();
        p.keyword("INTO")?;
        let name = p.ident()?;
        p.keyword("VALUES")?;
        let mut rows = Vec::new();
        loop {
            p.expect(Tok::LParen)?;
            let mut row = vec![p.literal()?];
            while p.eat(&Tok::Comma) {
                row.push(p.literal()?);
            }
            p.expect(Tok::RParen)?;
            rows.push(row);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        Command::Insert { name, rows }
    } else {
        return Ok(None);
    };
    p.end()?;
    Ok(Some(cmd))
}
