//! Query evaluation over a [`TripleStore`].

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::results::ResultTable;
use super::value::{self, Value};
use crate::rdf::{Term, TermId, TripleStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Reorder triple patterns by the number of bound positions. With `false`
    /// patterns are joined in written order.
    pub reorder: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { reorder: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    Id(TermId),
    Val(Value),
}

type Row = Vec<Option<Slot>>;

struct Vars {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vars {
    fn add(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), self.names.len() - 1);
        self.names.len() - 1
    }

    fn get(&self, name: &str) -> usize {
        self.index[name]
    }
}

#[derive(Clone, Copy)]
enum Pos {
    Var(usize),
    Const(TermId),
}

struct Pattern {
    pos: [Pos; 3],
}

struct Evaluator<'a> {
    store: &'a TripleStore,
    vars: Vars,
}

impl Evaluator<'_> {
    fn value_of(&self, slot: &Slot) -> Value {
        match slot {
            Slot::Id(id) => Value::from_term(self.store.resolve(*id)),
            Slot::Val(v) => v.clone(),
        }
    }

    fn term_of(&self, slot: &Slot) -> Option<Term> {
        match slot {
            Slot::Id(id) => Some(self.store.resolve(*id).clone()),
            Slot::Val(v) => v.to_term(),
        }
    }

    fn slot_id(&self, slot: &Slot) -> Option<TermId> {
        match slot {
            Slot::Id(id) => Some(*id),
            Slot::Val(v) => v.to_term().and_then(|t| self.store.lookup(&t)),
        }
    }

    fn eval(&self, e: &Expr, row: &Row, group: Option<&[Row]>) -> Value {
        match e {
            Expr::Var(v) => match &row[self.vars.get(v)] {
                Some(s) => self.value_of(s),
                None => Value::Error,
            },
            Expr::Const(t) => Value::from_term(t),
            Expr::Or(a, b) => {
                let x = self.eval(a, row, group).ebv();
                let y = self.eval(b, row, group).ebv();
                match (x, y) {
                    (Some(true), _) | (_, Some(true)) => Value::Boolean(true),
                    (Some(false), Some(false)) => Value::Boolean(false),
                    _ => Value::Error,
                }
            }
            Expr::And(a, b) => {
                let x = self.eval(a, row, group).ebv();
                let y = self.eval(b, row, group).ebv();
                match (x, y) {
                    (Some(false), _) | (_, Some(false)) => Value::Boolean(false),
                    (Some(true), Some(true)) => Value::Boolean(true),
                    _ => Value::Error,
                }
            }
            Expr::Not(a) => match self.eval(a, row, group).ebv() {
                Some(b) => Value::Boolean(!b),
                None => Value::Error,
            },
            Expr::Neg(a) => value::negate(&self.eval(a, row, group)),
            Expr::Cmp(op, a, b) => {
                value::compare(*op, &self.eval(a, row, group), &self.eval(b, row, group))
            }
            Expr::Arith(op, a, b) => {
                value::arith(*op, &self.eval(a, row, group), &self.eval(b, row, group))
            }
            Expr::Cast(kind, a) => value::cast(*kind, &self.eval(a, row, group)),
            Expr::Call(Builtin::Bound, args) => match &args[..] {
                [Expr::Var(v)] => Value::Boolean(row[self.vars.get(v)].is_some()),
                _ => Value::Error,
            },
            Expr::Call(Builtin::Str, args) => match self.eval(&args[0], row, group) {
                Value::Iri(i) => Value::String(i),
                Value::Blank(_) | Value::Error => Value::Error,
                v => Value::String(v.lexical()),
            },
            Expr::Call(Builtin::Abs, args) => match self.eval(&args[0], row, group) {
                v @ (Value::Integer(_) | Value::Decimal(_) | Value::Double(_)) => {
                    if value::compare(CmpOp::Lt, &v, &Value::Integer(0)) == Value::Boolean(true) {
                        value::negate(&v)
                    } else {
                        v
                    }
                }
                _ => Value::Error,
            },
            Expr::Aggregate {
                kind,
                distinct,
                arg,
            } => match group {
                Some(rows) => self.aggregate(*kind, *distinct, arg.as_deref(), rows),
                None => Value::Error,
            },
        }
    }

    fn aggregate(&self, kind: AggKind, distinct: bool, arg: Option<&Expr>, rows: &[Row]) -> Value {
        let mut values: Vec<Value> = match arg {
            None => {
                // COUNT(*): one entry per solution, or per distinct solution.
                if distinct {
                    let mut seen = HashSet::new();
                    let n = rows
                        .iter()
                        .filter(|r| {
                            seen.insert(
                                r.iter()
                                    .map(|s| s.as_ref().and_then(|s| self.term_of(s)))
                                    .collect::<Vec<_>>(),
                            )
                        })
                        .count();
                    return Value::Integer(n as i64);
                }
                return Value::Integer(rows.len() as i64);
            }
            Some(e) => rows.iter().map(|r| self.eval(e, r, None)).collect(),
        };
        if distinct {
            let mut seen = HashSet::new();
            values.retain(|v| v.is_error() || seen.insert(v.to_term()));
        }
        match kind {
            AggKind::Count => {
                Value::Integer(values.iter().filter(|v| !v.is_error()).count() as i64)
            }
            AggKind::Sum | AggKind::Avg => {
                let mut total = Value::Integer(0);
                for v in &values {
                    total = value::arith(ArithOp::Add, &total, v);
                    if total.is_error() {
                        return Value::Error;
                    }
                }
                if kind == AggKind::Avg && !values.is_empty() {
                    value::arith(ArithOp::Div, &total, &Value::Integer(values.len() as i64))
                } else {
                    total
                }
            }
            AggKind::Min | AggKind::Max => {
                let mut best: Option<&Value> = None;
                for v in values.iter().filter(|v| !v.is_error()) {
                    let better = match best {
                        None => true,
                        Some(b) => {
                            let o = value::order_cmp(Some(v), Some(b));
                            if kind == AggKind::Min {
                                o.is_lt()
                            } else {
                                o.is_gt()
                            }
                        }
                    };
                    if better {
                        best = Some(v);
                    }
                }
                best.cloned().unwrap_or(Value::Error)
            }
        }
    }

    fn filter_passes(&self, e: &Expr, row: &Row) -> bool {
        self.eval(e, row, None).ebv() == Some(true)
    }

    fn compile(&self, t: &TriplePatternAst) -> Option<Pattern> {
        let mut pos = [Pos::Var(0); 3];
        for (k, p) in [&t.subject, &t.predicate, &t.object]
            .into_iter()
            .enumerate()
        {
            pos[k] = match p {
                PatternTerm::Var(v) => Pos::Var(self.vars.get(v)),
                PatternTerm::Const(c) => Pos::Const(self.store.lookup(c)?),
            };
        }
        Some(Pattern { pos })
    }

    fn join(&self, rows: Vec<Row>, p: &Pattern) -> Vec<Row> {
        let mut out = Vec::new();
        for row in rows {
            let mut key = [None; 3];
            let mut feasible = true;
            for (slot, pos) in key.iter_mut().zip(&p.pos) {
                *slot = match *pos {
                    Pos::Const(id) => Some(id),
                    Pos::Var(v) => match &row[v] {
                        Some(s) => match self.slot_id(s) {
                            Some(id) => Some(id),
                            None => {
                                feasible = false;
                                None
                            }
                        },
                        None => None,
                    },
                };
            }
            if !feasible {
                continue;
            }
            'triples: for ids in self.store.match_ids(key[0], key[1], key[2]) {
                let mut next = row.clone();
                for (&id_k, pos) in ids.iter().zip(&p.pos) {
                    if let Pos::Var(v) = *pos {
                        match &next[v] {
                            // Repeated variable within the pattern.
                            Some(Slot::Id(id)) if *id != id_k => continue 'triples,
                            Some(_) => {}
                            None => next[v] = Some(Slot::Id(id_k)),
                        }
                    }
                }
                out.push(next);
            }
        }
        out
    }
}

fn pattern_vars(p: &Pattern) -> impl Iterator<Item = usize> + '_ {
    p.pos.iter().filter_map(|x| match x {
        Pos::Var(v) => Some(*v),
        Pos::Const(_) => None,
    })
}

fn expr_var_ids(e: &Expr, vars: &Vars) -> Vec<usize> {
    let mut names = Vec::new();
    e.all_vars(&mut names);
    names.iter().map(|n| vars.get(n)).collect()
}

pub fn evaluate(ast: &QueryAst, store: &TripleStore) -> ResultTable {
    evaluate_with(ast, store, EvalOptions::default())
}

pub fn evaluate_with(ast: &QueryAst, store: &TripleStore, opts: EvalOptions) -> ResultTable {
    let mut vars = Vars {
        names: Vec::new(),
        index: HashMap::new(),
    };
    for v in ast.where_vars() {
        vars.add(&v);
    }
    for item in ast.select.iter().flatten() {
        vars.add(item.name());
    }
    let ev = Evaluator { store, vars };
    let width = ev.vars.names.len();

    // Filters run as soon as every variable they mention is bound.
    let filters: Vec<(&Expr, Vec<usize>)> = ast
        .filters()
        .map(|f| (f, expr_var_ids(f, &ev.vars)))
        .collect();
    let mut applied = vec![false; filters.len()];
    let mut bound = vec![false; width];
    let mut rows: Vec<Row> = vec![vec![None; width]];

    let apply_ready =
        |ev: &Evaluator, rows: &mut Vec<Row>, bound: &[bool], applied: &mut [bool]| {
            for (k, (f, ids)) in filters.iter().enumerate() {
                if !applied[k] && ids.iter().all(|&i| bound[i]) {
                    applied[k] = true;
                    rows.retain(|r| ev.filter_passes(f, r));
                }
            }
        };
    apply_ready(&ev, &mut rows, &bound, &mut applied);

    let mut segment: Vec<&TriplePatternAst> = Vec::new();
    let mut elements = ast.where_clause.iter().peekable();
    loop {
        let next = elements.next();
        match next {
            Some(Element::Triple(t)) => {
                segment.push(t);
                continue;
            }
            Some(Element::Filter(_)) => continue,
            _ => {}
        }
        // End of a run of triple patterns: join them.
        let mut compiled = Vec::new();
        for t in segment.drain(..) {
            match ev.compile(t) {
                Some(p) => compiled.push(p),
                None => rows.clear(),
            }
        }
        while !compiled.is_empty() {
            let pick = if opts.reorder {
                let score = |p: &Pattern| {
                    p.pos
                        .iter()
                        .filter(|x| match x {
                            Pos::Const(_) => true,
                            Pos::Var(v) => bound[*v],
                        })
                        .count()
                };
                let mut best = 0;
                for k in 1..compiled.len() {
                    if score(&compiled[k]) > score(&compiled[best]) {
                        best = k;
                    }
                }
                best
            } else {
                0
            };
            let p = compiled.remove(pick);
            rows = ev.join(rows, &p);
            for v in pattern_vars(&p) {
                bound[v] = true;
            }
            apply_ready(&ev, &mut rows, &bound, &mut applied);
        }
        match next {
            Some(Element::Bind(e, v)) => {
                let target = ev.vars.get(v);
                for r in rows.iter_mut() {
                    let val = ev.eval(e, r, None);
                    r[target] = (!val.is_error()).then_some(Slot::Val(val));
                }
                bound[target] = true;
                apply_ready(&ev, &mut rows, &bound, &mut applied);
            }
            None => break,
            _ => unreachable!(),
        }
    }
    for (k, (f, _)) in filters.iter().enumerate() {
        if !applied[k] {
            rows.retain(|r| ev.filter_passes(f, r));
        }
    }

    let columns: Vec<String> = match &ast.select {
        Some(items) => items.iter().map(|i| i.name().to_owned()).collect(),
        None => ast
            .where_vars()
            .into_iter()
            .filter(|v| !v.starts_with("_:"))
            .collect(),
    };

    // Solutions paired with their group (aggregate queries only).
    let mut solutions: Vec<(Row, Option<Vec<Row>>)> = if ast.is_aggregate() {
        let mut index: HashMap<Vec<Option<Term>>, usize> = HashMap::new();
        let mut groups: Vec<Vec<Row>> = Vec::new();
        for r in rows {
            let key: Vec<Option<Term>> = ast
                .group_by
                .iter()
                .map(|g| ev.eval(g, &r, None).to_term())
                .collect();
            match index.get(&key) {
                Some(&g) => groups[g].push(r),
                None => {
                    index.insert(key, groups.len());
                    groups.push(vec![r]);
                }
            }
        }
        if groups.is_empty() && ast.group_by.is_empty() {
            groups.push(Vec::new());
        }
        groups
            .into_iter()
            .map(|g| {
                let mut rep: Row = vec![None; width];
                if let Some(first) = g.first() {
                    for grp in &ast.group_by {
                        if let Expr::Var(v) = grp {
                            let i = ev.vars.get(v);
                            rep[i] = first[i].clone();
                        }
                    }
                }
                (rep, Some(g))
            })
            .collect()
    } else {
        rows.into_iter().map(|r| (r, None)).collect()
    };

    for (row, group) in solutions.iter_mut() {
        for item in ast.select.iter().flatten() {
            if let SelectItem::Expr(e, alias) = item {
                let v = ev.eval(e, row, group.as_deref());
                let i = ev.vars.get(alias);
                row[i] = (!v.is_error()).then_some(Slot::Val(v));
            }
        }
    }
    if !ast.having.is_empty() {
        solutions.retain(|(row, group)| {
            ast.having
                .iter()
                .all(|h| ev.eval(h, row, group.as_deref()).ebv() == Some(true))
        });
    }

    let mut rows: Vec<Row> = if ast.order_by.is_empty() {
        solutions.into_iter().map(|(r, _)| r).collect()
    } else {
        let mut keyed: Vec<(Vec<Option<Value>>, Row)> = solutions
            .into_iter()
            .map(|(r, g)| {
                let keys = ast
                    .order_by
                    .iter()
                    .map(|k| Some(ev.eval(&k.expr, &r, g.as_deref())).filter(|v| !v.is_error()))
                    .collect();
                (keys, r)
            })
            .collect();
        keyed.sort_by(|(a, _), (b, _)| {
            for (k, key) in ast.order_by.iter().enumerate() {
                let o = value::order_cmp(a[k].as_ref(), b[k].as_ref());
                let o = if key.descending { o.reverse() } else { o };
                if o.is_ne() {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        });
        keyed.into_iter().map(|(_, r)| r).collect()
    };

    let col_ids: Vec<usize> = columns.iter().map(|c| ev.vars.get(c)).collect();
    let mut out: Vec<Vec<Option<Value>>> = Vec::with_capacity(rows.len());
    let mut seen = HashSet::new();
    for r in rows.drain(..) {
        let projected: Vec<Option<Value>> = col_ids
            .iter()
            .map(|&i| r[i].as_ref().map(|s| ev.value_of(s)))
            .collect();
        if ast.distinct {
            let key: Vec<Option<Term>> = projected
                .iter()
                .map(|v| v.as_ref().and_then(Value::to_term))
                .collect();
            if !seen.insert(key) {
                continue;
            }
        }
        out.push(projected);
    }
    let start = ast.offset.unwrap_or(0).min(out.len());
    let end = ast.limit.map_or(out.len(), |l| (start + l).min(out.len()));
    ResultTable {
        columns,
        rows: out.drain(start..end).collect(),
    }
}
