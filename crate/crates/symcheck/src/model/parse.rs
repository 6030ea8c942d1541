//! Line-oriented parser for the model file format.
//!
//! ```text
//! model mutex
//! type Proc count 3 locals N T C init N
//! global tok idsensitive Proc init any
//! command Proc try   from N to T
//! command Proc enter from T to C guard tok == self
//! command Proc leave from C to N update tok := any
//! property mutex_safe bad count(Proc, C) >= 2
//! ```
//!
//! `#` starts a comment. Plain globals are declared as
//! `global name plain <domain> init <value|any>` with values in
//! `0..domain`; id-sensitive initial values are 1-based instance ids.

use super::*;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(usize),
    LParen,
    RParen,
    Comma,
    Cmp(Cmp),
    AndAnd,
    OrOr,
    Assign,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Tok>, ModelError> {
    let mut toks = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                toks.push(Tok::Comma);
                i += 1;
            }
            '=' | '<' | '>' | '&' | '|' | ':' => {
                let two: &str = &line[i..(i + 2).min(line.len())];
                let (tok, len) = match two {
                    "==" => (Tok::Cmp(Cmp::Eq), 2),
                    "<=" => (Tok::Cmp(Cmp::Le), 2),
                    ">=" => (Tok::Cmp(Cmp::Ge), 2),
                    "&&" => (Tok::AndAnd, 2),
                    "||" => (Tok::OrOr, 2),
                    ":=" => (Tok::Assign, 2),
                    _ if c == '<' => (Tok::Cmp(Cmp::Lt), 1),
                    _ if c == '>' => (Tok::Cmp(Cmp::Gt), 1),
                    _ => {
                        return Err(ModelError::Syntax {
                            line: lineno,
                            msg: format!("unexpected character `{c}` at column {}", i + 1),
                        })
                    }
                };
                toks.push(tok);
                i += len;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let value = line[start..i].parse().map_err(|_| ModelError::Syntax {
                    line: lineno,
                    msg: format!("integer out of range at column {}", start + 1),
                })?;
                toks.push(Tok::Int(value));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_alphanumeric() || c == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Ident(line[start..i].to_string()));
            }
            _ => {
                return Err(ModelError::Syntax {
                    line: lineno,
                    msg: format!("unexpected character `{c}` at column {}", i + 1),
                })
            }
        }
    }
    Ok(toks)
}

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> ModelError {
        ModelError::Syntax { line: self.line, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn ident(&mut self) -> Result<String, ModelError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s.clone()),
            _ => Err(self.err("expected an identifier")),
        }
    }

    fn int(&mut self) -> Result<usize, ModelError> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(*v),
            _ => Err(self.err("expected an integer")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ModelError> {
        match self.next() {
            Some(Tok::Ident(s)) if s == kw => Ok(()),
            _ => Err(self.err(format!("expected keyword `{kw}`"))),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ModelError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn cmp(&mut self) -> Result<Cmp, ModelError> {
        match self.next() {
            Some(Tok::Cmp(c)) => Ok(*c),
            _ => Err(self.err("expected a comparator")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos == self.toks.len()
    }
}

pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut name: Option<String> = None;
    let mut types: Vec<ComponentType> = Vec::new();
    let mut globals: Vec<(GlobalVar, usize)> = Vec::new();
    let mut raw_commands: Vec<(usize, Vec<Tok>)> = Vec::new();
    let mut raw_properties: Vec<(usize, Vec<Tok>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = tokenize(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor { toks: &toks, pos: 0, line: lineno };
        let head = cur.ident()?;
        match head.as_str() {
            "model" => {
                if name.is_some() {
                    return Err(cur.err("duplicate `model` line"));
                }
                name = Some(cur.ident()?);
            }
            "type" => {
                let tname = cur.ident()?;
                if types.iter().any(|t: &ComponentType| t.name == tname) {
                    return Err(ModelError::Duplicate { line: lineno, name: tname });
                }
                cur.keyword("count")?;
                let count = cur.int()?;
                if count < 1 {
                    return Err(cur.err("component count must be >= 1"));
                }
                cur.keyword("locals")?;
                let mut locals = Vec::new();
                while let Some(Tok::Ident(s)) = cur.peek() {
                    if s == "init" {
                        break;
                    }
                    locals.push(s.clone());
                    cur.pos += 1;
                }
                if locals.is_empty() {
                    return Err(cur.err("a type needs at least one local state"));
                }
                for (i, l) in locals.iter().enumerate() {
                    if locals[..i].contains(l) {
                        return Err(ModelError::Duplicate { line: lineno, name: l.clone() });
                    }
                }
                cur.keyword("init")?;
                let init_name = cur.ident()?;
                let init = locals.iter().position(|l| *l == init_name).ok_or_else(|| {
                    ModelError::Undeclared { line: lineno, name: init_name.clone() }
                })?;
                types.push(ComponentType { name: tname, count, locals, init });
            }
            "global" => {
                let gname = cur.ident()?;
                if globals.iter().any(|(g, _)| g.name == gname) {
                    return Err(ModelError::Duplicate { line: lineno, name: gname });
                }
                let kind_kw = cur.ident()?;
                let kind = match kind_kw.as_str() {
                    "idsensitive" => {
                        let tname = cur.ident()?;
                        let target = types.iter().position(|t| t.name == tname).ok_or(
                            ModelError::Undeclared { line: lineno, name: tname },
                        )?;
                        GlobalKind::IdSensitive { target }
                    }
                    "plain" => {
                        let domain = cur.int()?;
                        if domain < 1 {
                            return Err(cur.err("plain global domain must be >= 1"));
                        }
                        GlobalKind::Plain { domain }
                    }
                    other => {
                        return Err(cur.err(format!(
                            "expected `idsensitive` or `plain`, found `{other}`"
                        )))
                    }
                };
                cur.keyword("init")?;
                let init = match cur.next() {
                    Some(Tok::Ident(s)) if s == "any" => InitValue::Any,
                    Some(Tok::Int(v)) => InitValue::Value(*v),
                    _ => return Err(cur.err("expected an initial value or `any`")),
                };
                if let InitValue::Value(v) = init {
                    let ok = match kind {
                        GlobalKind::Plain { domain } => v < domain,
                        GlobalKind::IdSensitive { target } => {
                            v >= 1 && v <= types[target].count
                        }
                    };
                    if !ok {
                        return Err(ModelError::InitOutOfRange { line: lineno, name: gname });
                    }
                }
                globals.push((GlobalVar { name: gname, kind, init }, lineno));
            }
            // Commands and properties may reference globals declared later,
            // so their bodies are resolved in a second pass.
            "command" => raw_commands.push((lineno, toks[1..].to_vec())),
            "property" => raw_properties.push((lineno, toks[1..].to_vec())),
            other => {
                return Err(cur.err(format!("unknown declaration `{other}`")));
            }
        }
    }

    let name = name.ok_or(ModelError::Syntax {
        line: 1,
        msg: "missing `model <name>` line".into(),
    })?;
    let globals: Vec<GlobalVar> = globals.into_iter().map(|(g, _)| g).collect();
    let mut model =
        Model { name, types, globals, commands: Vec::new(), properties: Vec::new() };

    for (lineno, toks) in raw_commands {
        let mut cur = Cursor { toks: &toks, pos: 0, line: lineno };
        let command = parse_command(&mut cur, &model)?;
        model.commands.push(command);
    }
    for (lineno, toks) in raw_properties {
        let mut cur = Cursor { toks: &toks, pos: 0, line: lineno };
        let pname = cur.ident()?;
        if model.properties.iter().any(|p| p.name == pname) {
            return Err(ModelError::Duplicate { line: lineno, name: pname });
        }
        cur.keyword("bad")?;
        let bad = parse_prop_or(&mut cur, &model)?;
        if !cur.at_end() {
            return Err(cur.err("trailing input after property condition"));
        }
        model.properties.push(SafetyProperty { name: pname, bad });
    }
    Ok(model)
}

fn parse_command(cur: &mut Cursor, model: &Model) -> Result<GuardedCommand, ModelError> {
    let tname = cur.ident()?;
    let type_idx = model
        .type_index(&tname)
        .ok_or(ModelError::Undeclared { line: cur.line, name: tname })?;
    let ty = &model.types[type_idx];
    let label = cur.ident()?;
    cur.keyword("from")?;
    let from_name = cur.ident()?;
    let from = ty
        .locals
        .iter()
        .position(|l| *l == from_name)
        .ok_or(ModelError::Undeclared { line: cur.line, name: from_name })?;
    cur.keyword("to")?;
    let to_name = cur.ident()?;
    let to = ty
        .locals
        .iter()
        .position(|l| *l == to_name)
        .ok_or(ModelError::Undeclared { line: cur.line, name: to_name })?;

    let mut guard = Vec::new();
    let mut updates = Vec::new();
    while let Some(tok) = cur.peek() {
        match tok {
            Tok::Ident(s) if s == "guard" => {
                cur.pos += 1;
                loop {
                    guard.push(parse_guard_atom(cur, model, type_idx)?);
                    if !cur.eat(&Tok::AndAnd) {
                        break;
                    }
                }
            }
            Tok::Ident(s) if s == "update" => {
                cur.pos += 1;
                loop {
                    updates.push(parse_update(cur, model, type_idx)?);
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            _ => return Err(cur.err("expected `guard` or `update`")),
        }
    }
    Ok(GuardedCommand { type_idx, label, from, to, guard, updates })
}

fn parse_count_args(
    cur: &mut Cursor,
    model: &Model,
) -> Result<(usize, usize), ModelError> {
    cur.expect(Tok::LParen, "`(`")?;
    let tname = cur.ident()?;
    let type_idx = model
        .type_index(&tname)
        .ok_or(ModelError::Undeclared { line: cur.line, name: tname })?;
    cur.expect(Tok::Comma, "`,`")?;
    let lname = cur.ident()?;
    let local = model.types[type_idx]
        .locals
        .iter()
        .position(|l| *l == lname)
        .ok_or(ModelError::Undeclared { line: cur.line, name: lname })?;
    cur.expect(Tok::RParen, "`)`")?;
    Ok((type_idx, local))
}

fn parse_guard_atom(
    cur: &mut Cursor,
    model: &Model,
    acting_type: usize,
) -> Result<GuardAtom, ModelError> {
    let head = cur.ident()?;
    if head == "count" || head == "count_others" {
        let others = head == "count_others";
        let (type_idx, local) = parse_count_args(cur, model)?;
        if others && type_idx != acting_type {
            return Err(cur.err("count_others must reference the acting component type"));
        }
        let cmp = cur.cmp()?;
        let bound = cur.int()?;
        return Ok(GuardAtom::Count { type_idx, local, cmp, bound, others });
    }
    let var = model
        .global_index(&head)
        .ok_or(ModelError::Undeclared { line: cur.line, name: head })?;
    match cur.cmp()? {
        Cmp::Eq => {}
        _ => return Err(cur.err("global guard atoms only support `==`")),
    }
    match cur.next() {
        Some(Tok::Ident(s)) if s == "self" => {
            match model.globals[var].kind {
                GlobalKind::IdSensitive { target } if target == acting_type => {
                    Ok(GuardAtom::GlobalEqSelf { var })
                }
                _ => Err(cur.err(
                    "`self` requires an id-sensitive global targeting the acting type",
                )),
            }
        }
        Some(Tok::Int(v)) => {
            let v = *v;
            let ok = match model.globals[var].kind {
                GlobalKind::Plain { domain } => v < domain,
                GlobalKind::IdSensitive { target } => v >= 1 && v <= model.types[target].count,
            };
            if !ok {
                return Err(cur.err("comparison value out of the variable's domain"));
            }
            Ok(GuardAtom::GlobalEqConst { var, value: v })
        }
        _ => Err(cur.err("expected `self` or an integer")),
    }
}

fn parse_update(
    cur: &mut Cursor,
    model: &Model,
    acting_type: usize,
) -> Result<GlobalUpdate, ModelError> {
    let vname = cur.ident()?;
    let var = model
        .global_index(&vname)
        .ok_or(ModelError::Undeclared { line: cur.line, name: vname })?;
    cur.expect(Tok::Assign, "`:=`")?;
    let value = match cur.next() {
        Some(Tok::Ident(s)) if s == "any" => UpdateValue::Any,
        Some(Tok::Ident(s)) if s == "self" => match model.globals[var].kind {
            GlobalKind::IdSensitive { target } if target == acting_type => UpdateValue::SelfId,
            _ => {
                return Err(cur.err(
                    "`self` requires an id-sensitive global targeting the acting type",
                ))
            }
        },
        Some(Tok::Int(v)) => {
            let v = *v;
            let ok = match model.globals[var].kind {
                GlobalKind::Plain { domain } => v < domain,
                GlobalKind::IdSensitive { target } => v >= 1 && v <= model.types[target].count,
            };
            if !ok {
                return Err(cur.err("update value out of the variable's domain"));
            }
            UpdateValue::Const(v)
        }
        _ => return Err(cur.err("expected a value, `self` or `any`")),
    };
    Ok(GlobalUpdate { var, value })
}

fn parse_prop_or(cur: &mut Cursor, model: &Model) -> Result<PropExpr, ModelError> {
    let mut terms = vec![parse_prop_and(cur, model)?];
    while cur.eat(&Tok::OrOr) {
        terms.push(parse_prop_and(cur, model)?);
    }
    Ok(if terms.len() == 1 { terms.pop().unwrap() } else { PropExpr::Or(terms) })
}

fn parse_prop_and(cur: &mut Cursor, model: &Model) -> Result<PropExpr, ModelError> {
    let mut terms = vec![parse_prop_factor(cur, model)?];
    while cur.eat(&Tok::AndAnd) {
        terms.push(parse_prop_factor(cur, model)?);
    }
    Ok(if terms.len() == 1 { terms.pop().unwrap() } else { PropExpr::And(terms) })
}

fn parse_prop_factor(cur: &mut Cursor, model: &Model) -> Result<PropExpr, ModelError> {
    if cur.eat(&Tok::LParen) {
        let e = parse_prop_or(cur, model)?;
        cur.expect(Tok::RParen, "`)`")?;
        return Ok(e);
    }
    let head = cur.ident()?;
    match head.as_str() {
        "count" => {
            let (type_idx, local) = parse_count_args(cur, model)?;
            let cmp = cur.cmp()?;
            let bound = cur.int()?;
            Ok(PropExpr::Count { type_idx, local, cmp, bound })
        }
        "true" => Ok(PropExpr::Const(true)),
        "false" => Ok(PropExpr::Const(false)),
        name => {
            let var = model.global_index(name).ok_or(ModelError::Undeclared {
                line: cur.line,
                name: name.to_string(),
            })?;
            if !matches!(model.globals[var].kind, GlobalKind::Plain { .. }) {
                return Err(cur.err("property comparisons are limited to plain globals"));
            }
            let cmp = cur.cmp()?;
            let value = cur.int()?;
            Ok(PropExpr::Global { var, cmp, value })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const MUTEX_SRC: &str = "\
model mutex
type Proc count 3 locals N T C init N
global tok idsensitive Proc init any
command Proc try   from N to T
command Proc enter from T to C guard tok == self
command Proc leave from C to N update tok := any
property mutex_safe bad count(Proc, C) >= 2
";

    #[test]
    fn parses_mutex_skeleton() {
        let m = parse_model(MUTEX_SRC).unwrap();
        assert_eq!(m.name, "mutex");
        assert_eq!(m.types.len(), 1);
        assert_eq!(m.types[0].locals, vec!["N", "T", "C"]);
        assert_eq!(m.globals.len(), 1);
        assert!(matches!(m.globals[0].kind, GlobalKind::IdSensitive { target: 0 }));
        assert_eq!(m.commands.len(), 3);
        assert_eq!(m.properties.len(), 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_model(""), Err(ModelError::Syntax { .. })));
    }

    #[test]
    fn parses_readers_writers_guards() {
        let src = "\
model rw
type Reader count 2 locals idle trying reading init idle
type Writer count 2 locals idle trying writing init idle
command Reader go from idle to trying
command Reader read from trying to reading guard count(Writer, writing) == 0
command Writer write from trying to writing guard count(Reader, reading) == 0 && count_others(Writer, writing) == 0
property exclusion bad count(Writer, writing) >= 1 && (count(Reader, reading) >= 1 || count(Writer, writing) >= 2)
";
        let m = parse_model(src).unwrap();
        assert_eq!(m.types.len(), 2);
        assert!(m.globals.is_empty());
        let w = &m.commands[2];
        assert_eq!(w.guard.len(), 2);
        assert!(matches!(w.guard[1], GuardAtom::Count { others: true, .. }));
        assert!(matches!(m.properties[0].bad, PropExpr::And(_)));
    }

    #[test]
    fn rejects_undeclared_and_duplicates() {
        let dup = "model m\ntype P count 1 locals a init a\ntype P count 2 locals b init b\n";
        assert!(matches!(parse_model(dup), Err(ModelError::Duplicate { line: 3, .. })));
        let undecl = "model m\ntype P count 1 locals a init a\ncommand Q x from a to a\n";
        assert!(matches!(parse_model(undecl), Err(ModelError::Undeclared { .. })));
        let oob = "model m\ntype P count 2 locals a init a\nglobal g idsensitive P init 3\n";
        assert!(matches!(parse_model(oob), Err(ModelError::InitOutOfRange { .. })));
    }
}
