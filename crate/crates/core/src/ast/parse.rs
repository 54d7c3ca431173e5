use super::{LDecl, LExpr, LProgram, Name, PrimOp, Ty, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(i64),
    Ident(String),
    Kw(&'static str),
    Sym(&'static str),
    Underscore,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const KEYWORDS: &[&str] = &[
    "fun", "val", "entry", "let", "in", "withframe", "if", "then", "else", "newbuf", "newstruct", "readbuf",
    "writebuf", "readstruct", "writestruct", "subbuf", "int", "unit", "buf", "struct", "abstract", "secret",
    "primitive",
];

// longest first
const SYMBOLS: &[&str] = &["->", "==", "(", ")", "{", "}", ",", ":", "=", ".", "&", "+", "-", "*", "|", "^", "<"];

pub struct Lexer;

impl Lexer {
    pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
        let chars: Vec<char> = src.chars().collect();
        let (mut i, mut line, mut col) = (0, 1, 1);
        let mut out = Vec::new();
        let err = |line, col, m: String| SyntaxError { line, col, message: m };
        while i < chars.len() {
            let c = chars[i];
            if c == '\n' {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            if c.is_whitespace() {
                i += 1;
                col += 1;
                continue;
            }
            if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            let (sl, sc) = (line, col);
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n: i64 = s.parse().map_err(|_| err(sl, sc, format!("integer literal `{s}` too large")))?;
                if n > 1 << 31 {
                    return Err(err(sl, sc, format!("integer literal `{s}` out of 32-bit range")));
                }
                col += i - start;
                out.push(Token { tok: Tok::Int(n), line: sl, col: sc });
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                let tok = if s == "_" {
                    Tok::Underscore
                } else if let Some(k) = KEYWORDS.iter().find(|k| **k == s) {
                    Tok::Kw(k)
                } else if s.starts_with('_') {
                    return Err(err(sl, sc, format!("identifiers may not start with `_`: `{s}`")));
                } else {
                    Tok::Ident(s)
                };
                out.push(Token { tok, line: sl, col: sc });
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    i += s.len();
                    col += s.len();
                    out.push(Token { tok: Tok::Sym(s), line: sl, col: sc });
                }
                None => return Err(err(sl, sc, format!("unexpected character `{c}`"))),
            }
        }
        out.push(Token { tok: Tok::Eof, line, col });
        Ok(out)
    }
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { toks: Lexer::tokenize(src)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(SyntaxError { line: t.line, col: t.col, message: msg.into() })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Int(n) => format!("`{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Kw(k) | Tok::Sym(k) => format!("`{k}`"),
            Tok::Underscore => "`_`".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    pub(crate) fn eat_kw(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Tok::Kw(x) if *x == k) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.error(format!("expected `{k}`, found {}", Self::describe(self.peek())))
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", Self::describe(self.peek())))
        }
    }

    pub(crate) fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.error(format!("expected identifier, found {}", Self::describe(&t))),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn int_lit(&mut self) -> PResult<i32> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(n) => {
                let v = if neg { -n } else { n };
                if v < i32::MIN as i64 || v > i32::MAX as i64 {
                    return self.error(format!("integer literal {v} out of 32-bit range"));
                }
                self.bump();
                Ok(v as i32)
            }
            t => self.error(format!("expected integer, found {}", Self::describe(&t))),
        }
    }

    // -- types --------------------------------------------------------------

    pub(crate) fn ty(&mut self) -> PResult<Ty> {
        match self.peek().clone() {
            Tok::Kw("int") => {
                self.bump();
                Ok(Ty::Int)
            }
            Tok::Kw("unit") => {
                self.bump();
                Ok(Ty::Unit)
            }
            Tok::Kw("buf") => {
                self.bump();
                Ok(Ty::buf(self.ty()?))
            }
            Tok::Kw("struct") => {
                self.bump();
                Ok(Ty::MutStruct(self.fields()?))
            }
            Tok::Sym("{") => Ok(Ty::Record(self.fields()?)),
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Ty::Abstract(s))
            }
            t => self.error(format!("expected a type, found {}", Self::describe(&t))),
        }
    }

    fn fields(&mut self) -> PResult<Vec<(Name, Ty)>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        if !self.eat_sym("}") {
            loop {
                let f = self.ident()?;
                self.expect_sym(":")?;
                out.push((f, self.ty()?));
                if self.eat_sym("}") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        Ok(out)
    }

    // -- literals -----------------------------------------------------------

    pub(crate) fn value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Sym("(") if self.peek_at(1) == &Tok::Sym(")") => {
                self.bump();
                self.bump();
                Ok(Value::UnitV)
            }
            Tok::Sym("{") => {
                self.bump();
                let mut fs = Vec::new();
                loop {
                    let f = self.ident()?;
                    self.expect_sym("=")?;
                    fs.push((f, self.value()?));
                    if self.eat_sym("}") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
                Ok(Value::RecordV(fs))
            }
            _ => Ok(Value::IntV(self.int_lit()?)),
        }
    }

    // -- programs -----------------------------------------------------------

    fn program(&mut self) -> PResult<LProgram> {
        let mut p = LProgram::default();
        loop {
            if self.eat_kw("fun") {
                p.decls.push(self.fun_rest()?);
            } else if self.eat_kw("val") {
                let name = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym("=")?;
                let value = self.value()?;
                p.decls.push(LDecl::Val { name, ty, value });
            } else if self.eat_kw("entry") {
                p.entry = Some(self.expr()?);
                break;
            } else {
                break;
            }
        }
        if !self.at_eof() {
            return self.error(format!("expected `fun`, `val` or `entry`, found {}", Self::describe(self.peek())));
        }
        Ok(p)
    }

    pub(crate) fn fun_rest(&mut self) -> PResult<LDecl> {
        let name = self.ident()?;
        self.expect_sym("(")?;
        let param = self.ident()?;
        self.expect_sym(":")?;
        let param_ty = self.ty()?;
        self.expect_sym(")")?;
        self.expect_sym(":")?;
        let ret_ty = self.ty()?;
        self.expect_sym("=")?;
        let body = self.expr()?;
        Ok(LDecl::Fun { name, param, param_ty, ret_ty, body })
    }

    // -- expressions --------------------------------------------------------

    pub(crate) fn expr(&mut self) -> PResult<LExpr> {
        if self.eat_kw("let") {
            return self.let_rest();
        }
        if self.eat_kw("withframe") {
            return Ok(LExpr::WithFrame(Box::new(self.expr()?)));
        }
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(LExpr::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        self.binary(1)
    }

    fn body(&mut self) -> PResult<Box<LExpr>> {
        self.expect_kw("in")?;
        Ok(Box::new(self.expr()?))
    }

    fn starts_atom(t: &Tok) -> bool {
        matches!(t, Tok::Int(_) | Tok::Ident(_) | Tok::Sym("(") | Tok::Sym("{"))
    }

    fn let_rest(&mut self) -> PResult<LExpr> {
        if matches!(self.peek(), Tok::Underscore) {
            self.bump();
            if self.eat_sym(":") {
                let t = self.ty()?;
                self.expect_sym("=")?;
                let f = self.ident()?;
                let arg = self.postfix()?;
                let body = self.body()?;
                return Ok(LExpr::App("_".into(), t, f, Box::new(arg), body));
            }
            self.expect_sym("=")?;
            if self.eat_kw("writebuf") {
                let b = self.postfix()?;
                let i = self.postfix()?;
                let v = self.postfix()?;
                let body = self.body()?;
                return Ok(LExpr::WriteBuf(Box::new(b), Box::new(i), Box::new(v), body));
            }
            if self.eat_kw("writestruct") {
                let s = self.postfix()?;
                let v = self.postfix()?;
                let body = self.body()?;
                return Ok(LExpr::WriteStruct(Box::new(s), Box::new(v), body));
            }
            let e = self.expr()?;
            let body = self.body()?;
            return Ok(LExpr::LetAnon(Box::new(e), body));
        }
        let x = self.ident()?;
        if self.eat_sym("=") {
            if self.eat_kw("newbuf") {
                let n = match self.bump() {
                    Tok::Int(n) if n > 0 && n <= u32::MAX as i64 => n as u32,
                    _ => return self.error("expected a positive buffer length after `newbuf`"),
                };
                let (init, t) = self.annotated()?;
                let body = self.body()?;
                return Ok(LExpr::NewBuf(x, n, Box::new(init), t, body));
            }
            if self.eat_kw("newstruct") {
                let (init, t) = self.annotated()?;
                let body = self.body()?;
                return Ok(LExpr::NewStruct(x, Box::new(init), t, body));
            }
            return self.error(format!("`let {x} =` must be followed by `newbuf` or `newstruct`; annotate other bindings with a type"));
        }
        self.expect_sym(":")?;
        let t = self.ty()?;
        self.expect_sym("=")?;
        if self.eat_kw("readbuf") {
            let b = self.postfix()?;
            let i = self.postfix()?;
            let body = self.body()?;
            return Ok(LExpr::ReadBuf(x, t, Box::new(b), Box::new(i), body));
        }
        if self.eat_kw("readstruct") {
            let s = self.postfix()?;
            let body = self.body()?;
            return Ok(LExpr::ReadStruct(x, t, Box::new(s), body));
        }
        if matches!(self.peek(), Tok::Ident(_)) && Self::starts_atom(self.peek_at(1)) {
            let f = self.ident()?;
            let arg = self.postfix()?;
            let body = self.body()?;
            return Ok(LExpr::App(x, t, f, Box::new(arg), body));
        }
        let e = self.expr()?;
        let body = self.body()?;
        Ok(LExpr::Let(x, t, Box::new(e), body))
    }

    fn annotated(&mut self) -> PResult<(LExpr, Ty)> {
        self.expect_sym("(")?;
        let e = self.expr()?;
        self.expect_sym(":")?;
        let t = self.ty()?;
        self.expect_sym(")")?;
        Ok((e, t))
    }

    fn binop_at(&self, level: u8) -> Option<PrimOp> {
        let op = match self.peek() {
            Tok::Sym("<") => PrimOp::Lt,
            Tok::Sym("==") => PrimOp::Eq,
            Tok::Sym("|") => PrimOp::Or,
            Tok::Sym("^") => PrimOp::Xor,
            Tok::Sym("&") => PrimOp::And,
            Tok::Sym("+") => PrimOp::Add,
            Tok::Sym("-") => PrimOp::Sub,
            Tok::Sym("*") => PrimOp::Mul,
            _ => return None,
        };
        (op.level() == level).then_some(op)
    }

    fn binary(&mut self, level: u8) -> PResult<LExpr> {
        if level > 6 {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = self.binop_at(level) {
            self.bump();
            let rhs = self.binary(level + 1)?;
            lhs = LExpr::PrimOp(op, Box::new(lhs), Box::new(rhs));
            if level == 1 {
                if self.binop_at(1).is_some() {
                    return self.error("comparison operators do not associate; add parentheses");
                }
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<LExpr> {
        if self.eat_kw("subbuf") {
            let b = self.postfix()?;
            let i = self.postfix()?;
            return Ok(LExpr::SubBuf(Box::new(b), Box::new(i)));
        }
        if self.eat_sym("&") {
            let mut e = self.postfix()?;
            self.expect_sym("->")?;
            e = LExpr::StructField(Box::new(e), self.ident()?);
            return Ok(e);
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<LExpr> {
        let mut e = self.atom()?;
        while self.eat_sym(".") {
            e = LExpr::Proj(Box::new(e), self.ident()?);
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<LExpr> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Sym("-") => Ok(LExpr::ConstInt(self.int_lit()?)),
            Tok::Ident(x) => {
                self.bump();
                Ok(LExpr::Var(x))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return Ok(LExpr::ConstUnit);
                }
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                let mut fs = Vec::new();
                loop {
                    let f = self.ident()?;
                    self.expect_sym("=")?;
                    fs.push((f, self.expr()?));
                    if self.eat_sym("}") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
                Ok(LExpr::RecordLit(fs))
            }
            t => self.error(format!("expected an expression, found {}", Self::describe(&t))),
        }
    }
}

/// Parse a whole source file: `fun`/`val` declarations followed by an optional `entry`.
pub fn parse_program(src: &str) -> Result<LProgram, SyntaxError> {
    Parser::new(src)?.program()
}

pub fn parse_expr(src: &str) -> Result<LExpr, SyntaxError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return p.error(format!("unexpected {} after expression", Parser::describe(p.peek())));
    }
    Ok(e)
}

pub fn parse_ty(src: &str) -> Result<Ty, SyntaxError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    if !p.at_eof() {
        return p.error("trailing input after type");
    }
    Ok(t)
}

pub fn parse_value(src: &str) -> Result<Value, SyntaxError> {
    let mut p = Parser::new(src)?;
    let v = p.value()?;
    if !p.at_eof() {
        return p.error("trailing input after literal");
    }
    Ok(v)
}
