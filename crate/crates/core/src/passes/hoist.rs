use super::{check_unambiguous, for_each_unit, is_hoisted, PassReport, PassResult};
use crate::ast::{CExpr, CProgram, CStmt};

fn collect(ss: &mut [CStmt], ads: &mut Vec<CStmt>) {
    for s in ss {
        match s {
            CStmt::ArrDecl(..) => ads.push(std::mem::replace(s, CStmt::ExprStmt(CExpr::ConstUnit))),
            CStmt::Block(inner) => collect(inner, ads),
            CStmt::IfStmt(_, a, b) => {
                collect(a, ads);
                collect(b, ads);
            }
            _ => {}
        }
    }
}

/// Lift every array declaration of a body to the front of its top-level block.
pub fn hoist_body(body: &mut Vec<CStmt>) -> usize {
    if !matches!(body.as_slice(), [CStmt::Block(_)]) {
        *body = vec![CStmt::Block(std::mem::take(body))];
    }
    let [CStmt::Block(inner)] = body.as_mut_slice() else { unreachable!() };
    let mut ads = vec![];
    collect(inner, &mut ads);
    let n = ads.len();
    inner.splice(0..0, ads);
    n
}

pub fn hoist(p: &CProgram, entry: &[CStmt]) -> PassResult {
    check_unambiguous(p, entry)?;
    let mut report = PassReport::new("hoist");
    let mut p = p.clone();
    let mut entry = entry.to_vec();
    let _ = for_each_unit::<()>(&mut p, &mut entry, |u| {
        let n = hoist_body(u.body);
        report.bump("hoisted_arrays", n as u64);
        Ok(())
    });
    report.checks.insert("hoisted".into(), is_hoisted(&p, &entry));
    Ok((p, entry, report))
}
