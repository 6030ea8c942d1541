//! Prints a model back into its surface syntax. `parse(print(parse(x)))`
//! is a fixpoint for valid inputs.

use super::*;

pub fn print_model(model: &Model) -> String {
    let mut out = String::new();
    out.push_str(&format!("model {}\n", model.name));
    for t in &model.types {
        out.push_str(&format!(
            "type {} count {} locals {} init {}\n",
            t.name,
            t.count,
            t.locals.join(" "),
            t.locals[t.init]
        ));
    }
    for g in &model.globals {
        let kind = match g.kind {
            GlobalKind::Plain { domain } => format!("plain {domain}"),
            GlobalKind::IdSensitive { target } => {
                format!("idsensitive {}", model.types[target].name)
            }
        };
        let init = match g.init {
            InitValue::Any => "any".to_string(),
            InitValue::Value(v) => v.to_string(),
        };
        out.push_str(&format!("global {} {} init {}\n", g.name, kind, init));
    }
    for c in &model.commands {
        let ty = &model.types[c.type_idx];
        out.push_str(&format!(
            "command {} {} from {} to {}",
            ty.name, c.label, ty.locals[c.from], ty.locals[c.to]
        ));
        if !c.guard.is_empty() {
            let atoms: Vec<String> =
                c.guard.iter().map(|a| print_guard_atom(model, a)).collect();
            out.push_str(&format!(" guard {}", atoms.join(" && ")));
        }
        if !c.updates.is_empty() {
            let ups: Vec<String> = c
                .updates
                .iter()
                .map(|u| {
                    let value = match u.value {
                        UpdateValue::Const(v) => v.to_string(),
                        UpdateValue::SelfId => "self".to_string(),
                        UpdateValue::Any => "any".to_string(),
                    };
                    format!("{} := {}", model.globals[u.var].name, value)
                })
                .collect();
            out.push_str(&format!(" update {}", ups.join(", ")));
        }
        out.push('\n');
    }
    for p in &model.properties {
        out.push_str(&format!("property {} bad {}\n", p.name, print_prop(model, &p.bad)));
    }
    out
}

fn print_guard_atom(model: &Model, atom: &GuardAtom) -> String {
    match atom {
        GuardAtom::GlobalEqSelf { var } => format!("{} == self", model.globals[*var].name),
        GuardAtom::GlobalEqConst { var, value } => {
            format!("{} == {}", model.globals[*var].name, value)
        }
        GuardAtom::Count { type_idx, local, cmp, bound, others } => {
            let kw = if *others { "count_others" } else { "count" };
            format!(
                "{kw}({}, {}) {} {bound}",
                model.types[*type_idx].name,
                model.types[*type_idx].locals[*local],
                cmp.symbol()
            )
        }
    }
}

fn print_prop(model: &Model, e: &PropExpr) -> String {
    match e {
        PropExpr::And(terms) => {
            let parts: Vec<String> = terms.iter().map(|t| print_prop_factor(model, t)).collect();
            parts.join(" && ")
        }
        PropExpr::Or(terms) => {
            let parts: Vec<String> = terms.iter().map(|t| print_prop_factor(model, t)).collect();
            parts.join(" || ")
        }
        other => print_prop_factor(model, other),
    }
}

fn print_prop_factor(model: &Model, e: &PropExpr) -> String {
    match e {
        PropExpr::And(_) | PropExpr::Or(_) => format!("({})", print_prop(model, e)),
        PropExpr::Count { type_idx, local, cmp, bound } => format!(
            "count({}, {}) {} {bound}",
            model.types[*type_idx].name,
            model.types[*type_idx].locals[*local],
            cmp.symbol()
        ),
        PropExpr::Global { var, cmp, value } => {
            format!("{} {} {value}", model.globals[*var].name, cmp.symbol())
        }
        PropExpr::Const(b) => b.to_string(),
    }
}
