use crate::error::{Error, Position, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Bare word; keywords are recognised by the parser.
    Word(String),
    /// `"double quoted"` identifier.
    Quoted(String),
    Int(String),
    Float(String),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Colon,
    Semicolon,
    Star,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Minus,
    /// `->`
    Arrow,
    /// `->>`
    PathArrow,
    /// `<-` directly before `[`
    LeftArrow,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Position,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, column: col };
        let at = |k: usize| chars.get(i + k).copied();
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '-' && at(1) == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (tok, len) = if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Word(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let mut float = false;
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                float = true;
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    float = true;
                    j = k;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
            }
            let text: String = chars[i..j].iter().collect();
            (if float { Tok::Float(text) } else { Tok::Int(text) }, j - i)
        } else if c == '\'' || c == '"' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None => return Err(Error::syntax(pos, "unterminated quoted text")),
                    Some(&q) if q == c => {
                        if chars.get(j + 1) == Some(&c) {
                            s.push(c);
                            j += 2;
                        } else {
                            j += 1;
                            break;
                        }
                    }
                    Some(&other) => {
                        s.push(other);
                        j += 1;
                    }
                }
            }
            (if c == '\'' { Tok::Str(s) } else { Tok::Quoted(s) }, j - i)
        } else {
            match (c, at(1), at(2)) {
                ('-', Some('>'), Some('>')) => (Tok::PathArrow, 3),
                ('-', Some('>'), _) => (Tok::Arrow, 2),
                ('<', Some('-'), Some('[')) => (Tok::LeftArrow, 2),
                ('<', Some('>'), _) => (Tok::Ne, 2),
                ('!', Some('='), _) => (Tok::Ne, 2),
                ('<', Some('='), _) => (Tok::Le, 2),
                ('>', Some('='), _) => (Tok::Ge, 2),
                ('<', _, _) => (Tok::Lt, 1),
                ('>', _, _) => (Tok::Gt, 1),
                ('=', _, _) => (Tok::Eq, 1),
                ('-', _, _) => (Tok::Minus, 1),
                ('(', _, _) => (Tok::LParen, 1),
                (')', _, _) => (Tok::RParen, 1),
                ('[', _, _) => (Tok::LBracket, 1),
                (']', _, _) => (Tok::RBracket, 1),
                (',', _, _) => (Tok::Comma, 1),
                ('.', _, _) => (Tok::Dot, 1),
                (':', _, _) => (Tok::Colon, 1),
                (';', _, _) => (Tok::Semicolon, 1),
                ('*', _, _) => (Tok::Star, 1),
                _ => return Err(Error::syntax(pos, format!("unexpected character {c:?}"))),
            }
        };
        out.push(Token { tok, pos });
        advance(&mut i, &mut line, &mut col, len);
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Position { line, column: col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_paths() {
        assert_eq!(
            toks("(a)<-[e]-(b)-[f]->(c)"),
            vec![
                Tok::LParen,
                Tok::Word("a".into()),
                Tok::RParen,
                Tok::LeftArrow,
                Tok::LBracket,
                Tok::Word("e".into()),
                Tok::RBracket,
                Tok::Minus,
                Tok::LParen,
                Tok::Word("b".into()),
                Tok::RParen,
                Tok::Minus,
                Tok::LBracket,
                Tok::Word("f".into()),
                Tok::RBracket,
                Tok::Arrow,
                Tok::LParen,
                Tok::Word("c".into()),
                Tok::RParen,
                Tok::Eof
            ]
        );
        assert_eq!(
            toks("O->>'k' <-1"),
            vec![
                Tok::Word("O".into()),
                Tok::PathArrow,
                Tok::Str("k".into()),
                Tok::Lt,
                Tok::Minus,
                Tok::Int("1".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let t = tokenize("SELECT\n  x").unwrap();
        assert_eq!(t[1].pos, Position { line: 2, column: 3 });
    }

    #[test]
    fn literals() {
        assert_eq!(toks("'it''s' 2.5 1e3 7")[..4], [
            Tok::Str("it's".into()),
            Tok::Float("2.5".into()),
            Tok::Float("1e3".into()),
            Tok::Int("7".into())
        ]);
        assert!(tokenize("'open").is_err());
    }
}
