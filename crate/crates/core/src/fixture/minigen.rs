//! Random MiniLang programs and edited variants for differential testing.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(u32),
    Str(&'static str),
    Bool(bool),
    Var(&'static str),
    Bin(&'static str, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Call(&'static str, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Stmt {
    Assign(&'static str, Expr),
    Expr(Expr),
    Return(Option<Expr>),
    If(Expr, Vec<Stmt>, Option<Vec<Stmt>>),
    While(Expr, Vec<Stmt>),
    Comment(&'static str),
    Break,
}

#[derive(Debug, Clone, PartialEq)]
struct Function {
    name: &'static str,
    params: Vec<&'static str>,
    body: Vec<Stmt>,
}

/// A generated program that can be edited and rendered to source.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    functions: Vec<Function>,
    top: Vec<Stmt>,
}

const VARS: &[&str] = &["a", "b", "c", "n", "x", "total"];
const FUNCS: &[&str] = &["f", "g", "h", "run", "step", "check", "sum"];
const OPS: &[&str] = &["+", "-", "*", "<", "==", "&&"];
const STRS: &[&str] = &["ok", "fail", "x"];
const NOTES: &[&str] = &["// todo", "/* keep */", "// fast path"];

fn expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => Expr::Num(rng.gen_range(0..100)),
            1 => Expr::Str(STRS.choose(rng).unwrap()),
            2 => Expr::Bool(rng.gen()),
            _ => Expr::Var(VARS.choose(rng).unwrap()),
        };
    }
    match rng.gen_range(0..3) {
        0 => Expr::Bin(
            OPS.choose(rng).unwrap(),
            Box::new(expr(rng, depth - 1)),
            Box::new(expr(rng, depth - 1)),
        ),
        1 => Expr::Not(Box::new(expr(rng, depth - 1))),
        _ => {
            let n = rng.gen_range(0..3);
            Expr::Call(FUNCS.choose(rng).unwrap(), (0..n).map(|_| expr(rng, depth - 1)).collect())
        }
    }
}

fn block<R: Rng>(rng: &mut R, depth: u32) -> Vec<Stmt> {
    let n = rng.gen_range(0..4);
    (0..n).map(|_| stmt(rng, depth)).collect()
}

fn stmt<R: Rng>(rng: &mut R, depth: u32) -> Stmt {
    let compound = depth > 0 && rng.gen_bool(0.3);
    if compound {
        return if rng.gen_bool(0.6) {
            let els = rng.gen_bool(0.4).then(|| block(rng, depth - 1));
            Stmt::If(expr(rng, 2), block(rng, depth - 1), els)
        } else {
            Stmt::While(expr(rng, 2), block(rng, depth - 1))
        };
    }
    match rng.gen_range(0..6) {
        0 | 1 => Stmt::Assign(VARS.choose(rng).unwrap(), expr(rng, 2)),
        2 => Stmt::Expr(Expr::Call(FUNCS.choose(rng).unwrap(), vec![expr(rng, 1)])),
        3 => Stmt::Return(rng.gen_bool(0.7).then(|| expr(rng, 2))),
        4 => Stmt::Comment(NOTES.choose(rng).unwrap()),
        _ => Stmt::Break,
    }
}

impl Program {
    pub fn random<R: Rng>(rng: &mut R) -> Program {
        let nf = rng.gen_range(0..4);
        let mut names: Vec<&'static str> = FUNCS.to_vec();
        names.shuffle(rng);
        let functions = names[..nf]
            .iter()
            .map(|name| {
                let np = rng.gen_range(0..3);
                Function {
                    name,
                    params: VARS[..np].to_vec(),
                    body: block(rng, 2),
                }
            })
            .collect();
        Program {
            functions,
            top: block(rng, 1),
        }
    }

    fn block_count(&self) -> usize {
        fn count(b: &[Stmt]) -> usize {
            1 + b
                .iter()
                .map(|s| match s {
                    Stmt::If(_, t, e) => count(t) + e.as_deref().map_or(0, count),
                    Stmt::While(_, body) => count(body),
                    _ => 0,
                })
                .sum::<usize>()
        }
        count(&self.top) + self.functions.iter().map(|f| count(&f.body)).sum::<usize>()
    }

    /// The `k`-th statement list in pre-order.
    fn block_mut(&mut self, mut k: usize) -> &mut Vec<Stmt> {
        fn find<'a>(b: &'a mut Vec<Stmt>, k: &mut usize) -> Option<&'a mut Vec<Stmt>> {
            if *k == 0 {
                return Some(b);
            }
            *k -= 1;
            for s in b.iter_mut() {
                match s {
                    Stmt::If(_, t, e) => {
                        if let Some(x) = find(t, k) {
                            return Some(x);
                        }
                        if let Some(x) = e.as_mut().and_then(|e| find(e, k)) {
                            return Some(x);
                        }
                    }
                    Stmt::While(_, body) => {
                        if let Some(x) = find(body, k) {
                            return Some(x);
                        }
                    }
                    _ => {}
                }
            }
            None
        }
        let Program { functions, top } = self;
        std::iter::once(top)
            .chain(functions.iter_mut().map(|f| &mut f.body))
            .find_map(|b| find(b, &mut k))
            .expect("block index in range")
    }

    /// Applies `edits` random statement-level edits: insertions, deletions,
    /// literal changes, callee renames and wrapping in an `if`.
    pub fn mutate<R: Rng>(&self, rng: &mut R, edits: usize) -> Program {
        let mut p = self.clone();
        for _ in 0..edits {
            match rng.gen_range(0..6) {
                0 if p.functions.len() < FUNCS.len() => {
                    let used: Vec<&str> = p.functions.iter().map(|f| f.name).collect();
                    let name = FUNCS.iter().find(|n| !used.contains(n)).unwrap();
                    let at = rng.gen_range(0..=p.functions.len());
                    p.functions.insert(at, Function { name, params: vec!["a"], body: block(rng, 1) });
                }
                1 if !p.functions.is_empty() && rng.gen_bool(0.3) => {
                    let at = rng.gen_range(0..p.functions.len());
                    p.functions.remove(at);
                }
                _ => {
                    let k = rng.gen_range(0..p.block_count());
                    edit_block(rng, p.block_mut(k));
                }
            }
        }
        p
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in &self.functions {
            out.push_str(&format!("fn {}({}) {{\n", f.name, f.params.join(", ")));
            render_block(&f.body, 1, &mut out);
            out.push_str("}\n");
        }
        render_block(&self.top, 0, &mut out);
        out
    }
}

fn edit_block<R: Rng>(rng: &mut R, b: &mut Vec<Stmt>) {
    match rng.gen_range(0..5) {
        0 => {
            let at = rng.gen_range(0..=b.len());
            b.insert(at, stmt(rng, 1));
        }
        1 if !b.is_empty() => {
            b.remove(rng.gen_range(0..b.len()));
        }
        2 if !b.is_empty() => {
            let i = rng.gen_range(0..b.len());
            let s = b.remove(i);
            b.insert(i, Stmt::If(Expr::Var("x"), vec![s], None));
        }
        _ => {
            if let Some(s) = b.choose_mut(rng) {
                tweak(rng, s);
            } else {
                b.push(stmt(rng, 0));
            }
        }
    }
}

fn tweak<R: Rng>(rng: &mut R, s: &mut Stmt) {
    match s {
        Stmt::Assign(_, e) | Stmt::Expr(e) | Stmt::Return(Some(e)) | Stmt::If(e, ..) | Stmt::While(e, _) => {
            tweak_expr(rng, e)
        }
        other => *other = stmt(rng, 0),
    }
}

fn tweak_expr<R: Rng>(rng: &mut R, e: &mut Expr) {
    match e {
        Expr::Num(n) => *n = (*n + rng.gen_range(1..50)) % 100,
        Expr::Call(name, args) => {
            if args.is_empty() || rng.gen_bool(0.5) {
                *name = FUNCS.choose(rng).unwrap();
            } else {
                let i = rng.gen_range(0..args.len());
                tweak_expr(rng, &mut args[i]);
            }
        }
        Expr::Bin(_, l, r) => {
            let side = if rng.gen() { l } else { r };
            tweak_expr(rng, side)
        }
        Expr::Not(inner) => tweak_expr(rng, inner),
        other => *other = expr(rng, 1),
    }
}

fn render_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Num(n) => out.push_str(&n.to_string()),
        Expr::Str(s) => out.push_str(&format!("\"{s}\"")),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(v) => out.push_str(v),
        Expr::Bin(op, l, r) => {
            out.push('(');
            render_expr(l, out);
            out.push_str(&format!(" {op} "));
            render_expr(r, out);
            out.push(')');
        }
        Expr::Not(inner) => {
            out.push('!');
            render_expr(inner, out);
        }
        Expr::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_expr(a, out);
            }
            out.push(')');
        }
    }
}

fn render_block(b: &[Stmt], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for s in b {
        out.push_str(&pad);
        match s {
            Stmt::Assign(v, e) => {
                out.push_str(&format!("{v} = "));
                render_expr(e, out);
                out.push_str(";\n");
            }
            Stmt::Expr(e) => {
                render_expr(e, out);
                out.push_str(";\n");
            }
            Stmt::Return(e) => {
                out.push_str("return");
                if let Some(e) = e {
                    out.push(' ');
                    render_expr(e, out);
                }
                out.push_str(";\n");
            }
            Stmt::Comment(c) => {
                out.push_str(c);
                out.push('\n');
            }
            Stmt::Break => out.push_str("break;\n"),
            Stmt::If(c, t, e) => {
                out.push_str("if (");
                render_expr(c, out);
                out.push_str(") {\n");
                render_block(t, indent + 1, out);
                out.push_str(&pad);
                out.push('}');
                if let Some(e) = e {
                    out.push_str(" else {\n");
                    render_block(e, indent + 1, out);
                    out.push_str(&pad);
                    out.push('}');
                }
                out.push('\n');
            }
            Stmt::While(c, body) => {
                out.push_str("while (");
                render_expr(c, out);
                out.push_str(") {\n");
                render_block(body, indent + 1, out);
                out.push_str(&pad);
                out.push_str("}\n");
            }
        }
    }
}

/// Source of a random program and of an edited copy.
pub fn random_pair<R: Rng>(rng: &mut R) -> (String, String) {
    let p = Program::random(rng);
    let edits = rng.gen_range(0..4);
    let q = p.mutate(rng, edits);
    (p.render(), q.render())
}
