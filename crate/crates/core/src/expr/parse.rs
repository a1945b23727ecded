use super::{BinaryOp, ExprError, ExprTree, Limits, Node, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn tokens(mut self) -> Result<Vec<(Token, usize)>, ExprError> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            let Some(&c) = self.bytes.get(self.pos) else {
                out.push((Token::End, start));
                return Ok(out);
            };
            let tok = match c {
                b'+' => Token::Plus,
                b'-' => Token::Minus,
                b'*' => Token::Star,
                b'/' => Token::Slash,
                b'^' => Token::Caret,
                b'(' => Token::LParen,
                b')' => Token::RParen,
                b',' => Token::Comma,
                b'0'..=b'9' | b'.' => {
                    out.push((self.number()?, start));
                    continue;
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while self.pos < self.bytes.len()
                        && (self.bytes[self.pos].is_ascii_alphanumeric()
                            || self.bytes[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    out.push((Token::Ident(self.src[start..self.pos].to_string()), start));
                    continue;
                }
                _ => {
                    let ch = self.src[start..].chars().next().unwrap_or('?');
                    return Err(ExprError::Syntax {
                        position: start,
                        message: format!("unexpected character '{ch}'"),
                    });
                }
            };
            self.pos += 1;
            out.push((tok, start));
        }
    }

    fn number(&mut self) -> Result<Token, ExprError> {
        let start = self.pos;
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.pos < lx.bytes.len() && lx.bytes[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ExprError::Syntax {
                position: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(ExprError::Syntax {
                    position: save,
                    message: "malformed exponent".into(),
                });
            }
        }
        let text = &self.src[start..self.pos];
        let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
            position: start,
            message: format!("malformed number '{text}'"),
        })?;
        if !v.is_finite() {
            return Err(ExprError::Syntax {
                position: start,
                message: format!("number '{text}' out of range"),
            });
        }
        Ok(Token::Number(v))
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    dim: usize,
    nesting: usize,
    max_nesting: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].0
    }

    fn position(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        let message = match self.peek() {
            Token::End => format!("{} at end of input", message.into()),
            _ => message.into(),
        };
        ExprError::Syntax {
            position: self.position(),
            message,
        }
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    // Recursion guard so that pathological input cannot overflow the stack
    // before the depth limit is checked.
    fn enter(&mut self) -> Result<(), ExprError> {
        self.nesting += 1;
        if self.nesting > self.max_nesting {
            return Err(ExprError::LimitExceeded {
                what: "nesting",
                value: self.nesting,
                limit: self.max_nesting,
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.nesting -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if *self.peek() == Token::Minus {
            self.bump();
            if let Token::Number(v) = *self.peek() {
                if *self.peek_at(1) != Token::Caret {
                    self.bump();
                    return Ok(Node::Const(-v));
                }
            }
            self.enter()?;
            let inner = self.unary()?;
            self.nesting -= 1;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Token::Caret {
            self.bump();
            self.enter()?;
            let exponent = self.unary()?;
            self.nesting -= 1;
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let position = self.position();
        match self.bump() {
            Token::Number(v) => Ok(Node::Const(v)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Token::Ident(name) => self.identifier(name, position),
            Token::End => Err(ExprError::Syntax {
                position,
                message: "expected operand at end of input".into(),
            }),
            other => Err(ExprError::Syntax {
                position,
                message: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn identifier(&mut self, name: String, position: usize) -> Result<Node, ExprError> {
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = rest.parse().map_err(|_| ExprError::Syntax {
                    position,
                    message: format!("bad variable '{name}'"),
                })?;
                if index == 0 || index > self.dim {
                    return Err(ExprError::VariableIndex {
                        index,
                        dim: self.dim,
                    });
                }
                return Ok(Node::Var(index - 1));
            }
        }
        if let Some(op) = UnaryOp::from_name(&name) {
            self.expect(Token::LParen, "'(' after function name")?;
            let arg = self.expr()?;
            self.expect(Token::RParen, "')'")?;
            return Ok(Node::Unary(op, Box::new(arg)));
        }
        let binary = match name.as_str() {
            "min" => Some(BinaryOp::Min),
            "max" => Some(BinaryOp::Max),
            _ => None,
        };
        if let Some(op) = binary {
            self.expect(Token::LParen, "'(' after function name")?;
            let a = self.expr()?;
            self.expect(Token::Comma, "','")?;
            let b = self.expr()?;
            self.expect(Token::RParen, "')'")?;
            return Ok(Node::Binary(op, Box::new(a), Box::new(b)));
        }
        Err(ExprError::UnknownIdentifier { name, position })
    }
}

/// Parses `text` with the default depth and size limits.
pub fn parse(text: &str, dim: usize) -> Result<ExprTree, ExprError> {
    parse_with_limits(text, dim, Limits::default())
}

pub fn parse_with_limits(text: &str, dim: usize, limits: Limits) -> Result<ExprTree, ExprError> {
    if dim == 0 {
        return Err(ExprError::InvalidDimension(dim));
    }
    let tokens = Lexer::new(text).tokens()?;
    let mut p = Parser {
        tokens,
        pos: 0,
        dim,
        nesting: 0,
        max_nesting: 4 * limits.max_depth + 16,
    };
    let root = p.expr()?;
    if *p.peek() != Token::End {
        return Err(p.error("unexpected trailing input"));
    }
    ExprTree::new(root, dim, limits)
}
