use super::{check_unambiguous, for_each_unit, fresh, has_struct_returns, is_hoisted, PassError, PassReport, PassResult};
use crate::ast::{CExpr, CProgram, CStmt, FnRef, Name, Ty};
use crate::csem::{fun_res_var, names_in};
use std::collections::{BTreeSet, HashSet};

struct Rewriter<'a> {
    func: FnRef,
    struct_funs: &'a HashSet<Name>,
    used: BTreeSet<Name>,
    calls: u64,
}

impl Rewriter<'_> {
    fn calls(&mut self, ss: Vec<CStmt>) -> Vec<CStmt> {
        let mut out = Vec::with_capacity(ss.len());
        for s in ss {
            match s {
                CStmt::Call { ty, dst, f, mut args } if self.struct_funs.contains(&f) => {
                    self.calls += 1;
                    match dst {
                        Some(x) => {
                            let x2 = fun_res_var(&self.func, &x, &self.used);
                            args.insert(0, CExpr::Var(x2.clone()));
                            out.push(CStmt::ArrDecl(ty.clone(), x2.clone(), 1));
                            out.push(CStmt::Call { ty: Ty::Unit, dst: None, f, args });
                            out.push(CStmt::ReadStmt(ty, x, CExpr::Var(x2)));
                        }
                        None => {
                            args.insert(0, CExpr::ConstInt(0));
                            out.push(CStmt::Call { ty: Ty::Unit, dst: None, f, args });
                        }
                    }
                }
                CStmt::IfStmt(c, a, b) => out.push(CStmt::IfStmt(c, self.calls(a), self.calls(b))),
                CStmt::Block(ss) => out.push(CStmt::Block(self.calls(ss))),
                s => out.push(s),
            }
        }
        out
    }
}

fn returns(ss: Vec<CStmt>, r: &Name, n: &mut u64) -> Vec<CStmt> {
    let mut out = Vec::with_capacity(ss.len());
    for s in ss {
        match s {
            CStmt::Return(e) => {
                *n += 1;
                let ptr = CExpr::Var(r.clone());
                out.push(CStmt::IfStmt(ptr.clone(), vec![CStmt::WriteStmt(ptr, e)], vec![]));
                out.push(CStmt::Return(CExpr::ConstUnit));
            }
            CStmt::IfStmt(c, a, b) => out.push(CStmt::IfStmt(c, returns(a, r, n), returns(b, r, n))),
            CStmt::Block(ss) => out.push(CStmt::Block(returns(ss, r, n))),
            s => out.push(s),
        }
    }
    out
}

/// Make every struct-returning function write its result through an extra
/// leading out-pointer, and rewrite call sites to allocate that location.
pub fn struct_return(p: &CProgram, entry: &[CStmt]) -> PassResult {
    check_unambiguous(p, entry)?;
    if !is_hoisted(p, entry) {
        return Err(PassError::PreconditionViolated("struct_return expects a hoisted program".into()));
    }
    let struct_funs: HashSet<Name> = p.funs().filter(|f| f.ret.is_record()).map(|f| f.name.clone()).collect();
    let mut report = PassReport::new("struct_return");
    let mut p = p.clone();
    let mut entry = entry.to_vec();
    let _ = for_each_unit::<()>(&mut p, &mut entry, |u| {
        let used = names_in(u.params, u.body);
        let mut rw = Rewriter { func: u.func.clone(), struct_funs: &struct_funs, used, calls: 0 };
        let body = rw.calls(std::mem::take(u.body));
        report.bump("rewritten_calls", rw.calls);
        let mut used = names_in(u.params, &body);
        *u.body = body;
        if let Some(ret) = u.ret {
            if ret.is_record() {
                let r = fresh("ret", &mut used);
                u.params.insert(0, (r.clone(), Ty::buf(ret.clone())));
                *ret = Ty::Unit;
                let mut n = 0;
                *u.body = returns(std::mem::take(u.body), &r, &mut n);
                report.bump("rewritten_returns", n);
                report.bump("rewritten_functions", 1);
            }
        }
        Ok(())
    });
    report.checks.insert("no_struct_returns".into(), !has_struct_returns(&p));
    Ok((p, entry, report))
}
