use super::{CDecl, CExpr, CProgram, CStmt, LDecl, LExpr, LProgram, Ty, Value};
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot render machine-internal construct `{0}` as source")]
pub struct InternalConstructError(pub &'static str);

pub fn pretty_ty(t: &Ty) -> String {
    fn fields(fs: &[(String, Ty)]) -> String {
        fs.iter().map(|(f, t)| format!("{f}:{}", pretty_ty(t))).collect::<Vec<_>>().join(", ")
    }
    match t {
        Ty::Int => "int".into(),
        Ty::Unit => "unit".into(),
        Ty::Abstract(n) => n.clone(),
        Ty::Buf(e) => format!("buf {}", pretty_ty(e)),
        Ty::Record(fs) => format!("{{{}}}", fields(fs)),
        Ty::MutStruct(fs) => format!("struct {{{}}}", fields(fs)),
    }
}

pub fn pretty_value(v: &Value) -> String {
    match v {
        Value::IntV(n) => n.to_string(),
        Value::UnitV => "()".into(),
        Value::Undef => "undef".into(),
        Value::RecordV(fs) => {
            let inner: Vec<_> = fs.iter().map(|(f, v)| format!("{f} = {}", pretty_value(v))).collect();
            format!("{{{}}}", inner.join(", "))
        }
        Value::LocV(l) => format!("loc({}, {}, [{}])", l.block, l.offset, l.path.join(".")),
    }
}

struct LPrinter {
    out: String,
    indent: usize,
    internal: bool,
}

type PResult = Result<(), InternalConstructError>;

fn level(e: &LExpr) -> u8 {
    match e {
        LExpr::PrimOp(op, ..) => op.level(),
        LExpr::SubBuf(..) | LExpr::StructField(..) => 7,
        LExpr::ConstInt(n) if *n < 0 => 7,
        LExpr::ConstInt(_) | LExpr::ConstUnit | LExpr::Var(_) | LExpr::RecordLit(_) | LExpr::Proj(..) => 8,
        LExpr::Pop(_) | LExpr::Loc(..) => 8,
        _ => 0,
    }
}

impl LPrinter {
    fn nl(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push(' ');
        }
    }

    fn at(&mut self, e: &LExpr, min: u8) -> PResult {
        if level(e) < min {
            self.out.push('(');
            self.indent += 1;
            self.expr(e)?;
            self.indent -= 1;
            self.out.push(')');
            Ok(())
        } else {
            self.expr(e)
        }
    }

    fn body(&mut self, body: &LExpr) -> PResult {
        self.out.push_str(" in");
        self.nl();
        self.expr(body)
    }

    fn expr(&mut self, e: &LExpr) -> PResult {
        match e {
            LExpr::ConstInt(n) => write!(self.out, "{n}").unwrap(),
            LExpr::ConstUnit => self.out.push_str("()"),
            LExpr::Var(x) => self.out.push_str(x),
            LExpr::RecordLit(fs) => {
                self.out.push('{');
                for (i, (f, e)) in fs.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    write!(self.out, "{f} = ").unwrap();
                    self.expr(e)?;
                }
                self.out.push('}');
            }
            LExpr::Proj(e, fd) => {
                self.at(e, 8)?;
                write!(self.out, ".{fd}").unwrap();
            }
            LExpr::StructField(e, fd) => {
                self.out.push('&');
                self.at(e, 8)?;
                write!(self.out, "->{fd}").unwrap();
            }
            LExpr::SubBuf(a, b) => {
                self.out.push_str("subbuf ");
                self.at(a, 8)?;
                self.out.push(' ');
                self.at(b, 8)?;
            }
            LExpr::PrimOp(op, a, b) => {
                let l = op.level();
                self.at(a, if l == 1 { 2 } else { l })?;
                write!(self.out, " {} ", op.symbol()).unwrap();
                self.at(b, l + 1)?;
            }
            LExpr::If(c, a, b) => {
                self.out.push_str("if ");
                self.expr(c)?;
                self.out.push_str(" then");
                self.indent += 2;
                self.nl();
                self.expr(a)?;
                self.indent -= 2;
                self.nl();
                self.out.push_str("else");
                self.indent += 2;
                self.nl();
                self.expr(b)?;
                self.indent -= 2;
            }
            LExpr::Let(x, t, e1, body) => {
                write!(self.out, "let {x} : {} = ", pretty_ty(t)).unwrap();
                self.indent += 2;
                self.expr(e1)?;
                self.indent -= 2;
                self.body(body)?;
            }
            LExpr::LetAnon(e1, body) => {
                self.out.push_str("let _ = ");
                self.indent += 2;
                self.expr(e1)?;
                self.indent -= 2;
                self.body(body)?;
            }
            LExpr::App(x, t, f, arg, body) => {
                let x = if x == "_" { "_" } else { x.as_str() };
                write!(self.out, "let {x} : {} = {f} ", pretty_ty(t)).unwrap();
                self.at(arg, 8)?;
                self.body(body)?;
            }
            LExpr::NewBuf(x, n, init, t, body) => {
                write!(self.out, "let {x} = newbuf {n} (").unwrap();
                self.expr(init)?;
                write!(self.out, " : {})", pretty_ty(t)).unwrap();
                self.body(body)?;
            }
            LExpr::ReadBuf(x, t, b, i, body) => {
                write!(self.out, "let {x} : {} = readbuf ", pretty_ty(t)).unwrap();
                self.at(b, 8)?;
                self.out.push(' ');
                self.at(i, 8)?;
                self.body(body)?;
            }
            LExpr::WriteBuf(b, i, v, body) => {
                self.out.push_str("let _ = writebuf ");
                self.at(b, 8)?;
                self.out.push(' ');
                self.at(i, 8)?;
                self.out.push(' ');
                self.at(v, 8)?;
                self.body(body)?;
            }
            LExpr::NewStruct(x, init, t, body) => {
                write!(self.out, "let {x} = newstruct (").unwrap();
                self.expr(init)?;
                write!(self.out, " : {})", pretty_ty(t)).unwrap();
                self.body(body)?;
            }
            LExpr::ReadStruct(x, t, s, body) => {
                write!(self.out, "let {x} : {} = readstruct ", pretty_ty(t)).unwrap();
                self.at(s, 8)?;
                self.body(body)?;
            }
            LExpr::WriteStruct(s, v, body) => {
                self.out.push_str("let _ = writestruct ");
                self.at(s, 8)?;
                self.out.push(' ');
                self.at(v, 8)?;
                self.body(body)?;
            }
            LExpr::WithFrame(e) => {
                self.out.push_str("withframe ");
                if level(e) == 0 {
                    self.out.push('(');
                    self.indent += 2;
                    self.nl();
                    self.expr(e)?;
                    self.indent -= 2;
                    self.out.push(')');
                } else {
                    self.expr(e)?;
                }
            }
            LExpr::Pop(e) => {
                if !self.internal {
                    return Err(InternalConstructError("pop"));
                }
                self.out.push_str("pop(");
                self.expr(e)?;
                self.out.push(')');
            }
            LExpr::Loc(b, n, p) => {
                if !self.internal {
                    return Err(InternalConstructError("loc"));
                }
                write!(self.out, "loc({b}, {n}, [{}])", p.join(".")).unwrap();
            }
        }
        Ok(())
    }
}

/// Render source syntax; refuses machine-internal constructs.
pub fn pretty_lexpr(e: &LExpr) -> Result<String, InternalConstructError> {
    let mut p = LPrinter { out: String::new(), indent: 0, internal: false };
    p.expr(e)?;
    Ok(p.out)
}

/// Like [`pretty_lexpr`] but renders `pop(..)` and `loc(..)` for debugging.
pub fn pretty_lexpr_internal(e: &LExpr) -> String {
    let mut p = LPrinter { out: String::new(), indent: 0, internal: true };
    p.expr(e).expect("internal printing is total");
    p.out
}

pub fn pretty_lowstar(p: &LProgram) -> Result<String, InternalConstructError> {
    let mut out = String::new();
    for d in &p.decls {
        match d {
            LDecl::Fun { name, param, param_ty, ret_ty, body } => {
                let mut pr = LPrinter { out: String::new(), indent: 2, internal: false };
                pr.expr(body)?;
                writeln!(out, "fun {name} ({param} : {}) : {} =\n  {}\n", pretty_ty(param_ty), pretty_ty(ret_ty), pr.out)
                    .unwrap();
            }
            LDecl::Val { name, ty, value } => {
                writeln!(out, "val {name} : {} = {}\n", pretty_ty(ty), pretty_value(value)).unwrap();
            }
        }
    }
    if let Some(e) = &p.entry {
        let mut pr = LPrinter { out: String::new(), indent: 2, internal: false };
        pr.expr(e)?;
        writeln!(out, "entry\n  {}", pr.out).unwrap();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// C*

pub fn pretty_cexpr(e: &CExpr) -> String {
    fn at(e: &CExpr) -> String {
        match e {
            CExpr::PtrAdd(..) | CExpr::PrimOp(..) => format!("({})", pretty_cexpr(e)),
            _ => pretty_cexpr(e),
        }
    }
    match e {
        CExpr::ConstInt(n) => n.to_string(),
        CExpr::ConstUnit => "()".into(),
        CExpr::Var(x) => x.clone(),
        CExpr::PtrAdd(a, b) => format!("{} + {}", at(a), at(b)),
        CExpr::PrimOp(op, a, b) => format!("{} {} {}", at(a), op.symbol(), at(b)),
        CExpr::RecordLit(fs) => {
            let inner: Vec<_> = fs.iter().map(|(f, e)| format!("{f} = {}", pretty_cexpr(e))).collect();
            format!("{{{}}}", inner.join(", "))
        }
        CExpr::Proj(e, fd) => format!("{}.{fd}", at(e)),
        CExpr::PtrField(e, fd) => format!("&{}->{fd}", at(e)),
        CExpr::Loc(b, n, p) => format!("loc({b}, {n}, [{}])", p.join(".")),
    }
}

fn cstmts(out: &mut String, ss: &[CStmt], ind: usize) {
    let pad = " ".repeat(ind);
    for s in ss {
        match s {
            CStmt::VarDecl(t, x, e) => writeln!(out, "{pad}{} {x} = {};", pretty_ty(t), pretty_cexpr(e)).unwrap(),
            CStmt::ArrDecl(t, x, n) => writeln!(out, "{pad}{} {x}[{n}];", pretty_ty(t)).unwrap(),
            CStmt::Memset(a, n, v) => {
                writeln!(out, "{pad}memset({}, {n}, {});", pretty_cexpr(a), pretty_cexpr(v)).unwrap()
            }
            CStmt::Call { ty, dst, f, args } => {
                let args: Vec<_> = args.iter().map(pretty_cexpr).collect();
                match dst {
                    Some(x) => writeln!(out, "{pad}{} {x} = {f}({});", pretty_ty(ty), args.join(", ")).unwrap(),
                    None => writeln!(out, "{pad}({}) {f}({});", pretty_ty(ty), args.join(", ")).unwrap(),
                }
            }
            CStmt::ReadStmt(t, x, e) => writeln!(out, "{pad}{} {x} = *[{}];", pretty_ty(t), pretty_cexpr(e)).unwrap(),
            CStmt::WriteStmt(a, v) => writeln!(out, "{pad}*[{}] = {};", pretty_cexpr(a), pretty_cexpr(v)).unwrap(),
            CStmt::IfStmt(c, a, b) => {
                writeln!(out, "{pad}if ({}) {{", pretty_cexpr(c)).unwrap();
                cstmts(out, a, ind + 2);
                writeln!(out, "{pad}}} else {{").unwrap();
                cstmts(out, b, ind + 2);
                writeln!(out, "{pad}}}").unwrap();
            }
            CStmt::Block(ss) => {
                writeln!(out, "{pad}{{").unwrap();
                cstmts(out, ss, ind + 2);
                writeln!(out, "{pad}}}").unwrap();
            }
            CStmt::ExprStmt(e) => writeln!(out, "{pad}{};", pretty_cexpr(e)).unwrap(),
            CStmt::Return(e) => writeln!(out, "{pad}return {};", pretty_cexpr(e)).unwrap(),
        }
    }
}

pub fn pretty_cstmts(ss: &[CStmt]) -> String {
    let mut out = String::new();
    cstmts(&mut out, ss, 0);
    out
}

pub fn pretty_cstar(p: &CProgram) -> String {
    let mut out = String::new();
    for d in &p.decls {
        match d {
            CDecl::Fun(f) => {
                let ps: Vec<_> = f.params.iter().map(|(x, t)| format!("{x} : {}", pretty_ty(t))).collect();
                writeln!(out, "fun {} ({}) : {} {{", f.name, ps.join(", "), pretty_ty(&f.ret)).unwrap();
                cstmts(&mut out, &f.body, 2);
                writeln!(out, "}}\n").unwrap();
            }
            CDecl::Val { name, ty, value } => {
                writeln!(out, "val {name} : {} = {};\n", pretty_ty(ty), pretty_value(value)).unwrap()
            }
        }
    }
    out
}
