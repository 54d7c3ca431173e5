use super::{for_each_unit, free_vars, fresh, global_names, vars_mut, PassReport, Renaming};
use crate::ast::{CExpr, CProgram, CStmt, Name};
use crate::csem::names_in;
use std::collections::{BTreeSet, HashMap, HashSet};

struct Renamer {
    func: String,
    used: BTreeSet<Name>,
    array_count: HashMap<Name, usize>,
    array_seen: HashMap<Name, usize>,
    /// Arrays that keep their name; scalars must avoid these.
    kept_arrays: HashSet<Name>,
    scalars_seen: HashSet<Name>,
    pinned: BTreeSet<Name>,
    scopes: Vec<HashMap<Name, Name>>,
    renames: Vec<Renaming>,
}

impl Renamer {
    fn bind(&mut self, old: &Name, new: Name) -> Name {
        if &new != old {
            self.renames.push(Renaming { func: self.func.clone(), old: old.clone(), new: new.clone() });
        }
        self.scopes.last_mut().expect("scope").insert(old.clone(), new.clone());
        new
    }

    fn array(&mut self, x: &Name) -> Name {
        let new = if self.array_count[x] > 1 {
            let i = self.array_seen.entry(x.clone()).or_default();
            let base = format!("{x}_{i}");
            *i += 1;
            fresh(&base, &mut self.used)
        } else if self.pinned.contains(x) {
            fresh(&format!("{x}_0"), &mut self.used)
        } else {
            x.clone()
        };
        self.bind(x, new)
    }

    fn scalar(&mut self, x: &Name) -> Name {
        let new = if self.kept_arrays.contains(x) || self.scalars_seen.contains(x) {
            fresh(x, &mut self.used)
        } else {
            x.clone()
        };
        self.scalars_seen.insert(x.clone());
        self.scalars_seen.insert(new.clone());
        self.bind(x, new)
    }

    fn expr(&self, e: &mut CExpr) {
        vars_mut(e, &mut |x| {
            if let Some(new) = self.scopes.iter().rev().find_map(|s| s.get(x)) {
                *x = new.clone();
            }
        });
    }

    fn scoped(&mut self, ss: &mut [CStmt]) {
        self.scopes.push(HashMap::new());
        self.stmts(ss);
        self.scopes.pop();
    }

    fn stmts(&mut self, ss: &mut [CStmt]) {
        for s in ss {
            match s {
                CStmt::VarDecl(_, x, e) | CStmt::ReadStmt(_, x, e) => {
                    self.expr(e);
                    *x = self.scalar(x);
                }
                CStmt::ArrDecl(_, x, _) => *x = self.array(x),
                CStmt::Memset(a, _, b) | CStmt::WriteStmt(a, b) => {
                    self.expr(a);
                    self.expr(b);
                }
                CStmt::Call { dst, args, .. } => {
                    args.iter_mut().for_each(|a| self.expr(a));
                    if let Some(x) = dst {
                        *x = self.scalar(x);
                    }
                }
                CStmt::IfStmt(c, a, b) => {
                    self.expr(c);
                    self.scoped(a);
                    self.scoped(b);
                }
                CStmt::Block(ss) => self.scoped(ss),
                CStmt::ExprStmt(e) | CStmt::Return(e) => self.expr(e),
            }
        }
    }
}

/// α-rename locals so that array names are unique per function and disjoint
/// from scalar names; later duplicate scalars are renamed too.
pub fn disambiguate(p: &CProgram, entry: &[CStmt]) -> (CProgram, Vec<CStmt>, PassReport) {
    let mut report = PassReport::new("disambiguate");
    let globals = global_names(p);
    let mut p = p.clone();
    let mut entry = entry.to_vec();
    let pinned_entry = free_vars(&entry, &globals);
    let _ = for_each_unit::<()>(&mut p, &mut entry, |u| {
        let pinned = if u.func == crate::ast::FnRef::Entry { pinned_entry.clone() } else { BTreeSet::new() };
        let mut array_count: HashMap<Name, usize> = HashMap::new();
        crate::ast::walk_stmts(u.body, &mut |s| {
            if let CStmt::ArrDecl(_, x, _) = s {
                *array_count.entry(x.clone()).or_default() += 1;
            }
        });
        let kept_arrays =
            array_count.iter().filter(|(x, &n)| n == 1 && !pinned.contains(*x)).map(|(x, _)| x.clone()).collect();
        let mut used = names_in(u.params, u.body);
        used.extend(pinned.iter().cloned());
        used.extend(globals.iter().cloned());
        let mut r = Renamer {
            func: u.func.to_string(),
            used,
            array_count,
            array_seen: HashMap::new(),
            kept_arrays,
            scalars_seen: pinned.iter().cloned().collect(),
            pinned,
            scopes: vec![HashMap::new()],
            renames: vec![],
        };
        for (x, _) in u.params.iter_mut() {
            *x = r.scalar(x);
        }
        r.stmts(u.body);
        report.renamings.extend(r.renames);
        Ok(())
    });
    report.bump("renamed", report.renamings.len() as u64);
    report.checks.insert("unambiguous".into(), super::check_unambiguous(&p, &entry).is_ok());
    (p, entry, report)
}
