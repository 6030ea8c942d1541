//! Guarded-command models of symmetric concurrent systems: the surface
//! syntax, the resolved AST, the deterministic bit layout and the symbolic
//! encoding of transition relations and predicates.
//!
//! A model consists of replicated component types (each instance runs the
//! same local-state machine), global variables that are either plain finite
//! integers or id-sensitive (holding a component index of some type), and
//! guarded commands. Guards may only observe other instances through
//! counting atoms, so every model is fully symmetric by construction.

mod layout;
mod parse;
mod print;
mod symbolic;

pub use layout::{encode_layout, BitLayout, DEFAULT_BIT_CAP};
pub use parse::parse_model;
pub use print::print_model;
pub use symbolic::Symbolic;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undeclared name `{name}`")]
    Undeclared { line: usize, name: String },
    #[error("line {line}: duplicate declaration of `{name}`")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: initial value for `{name}` is out of range")]
    InitOutOfRange { line: usize, name: String },
    #[error("model needs {required} state bits, exceeding the cap of {cap}")]
    Capacity { required: usize, cap: usize },
    #[error("state decodes to an out-of-domain value")]
    InvalidEncoding,
    #[error(transparent)]
    Bdd(#[from] crate::bdd::BddError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    pub types: Vec<ComponentType>,
    pub globals: Vec<GlobalVar>,
    pub commands: Vec<GuardedCommand>,
    pub properties: Vec<SafetyProperty>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentType {
    pub name: String,
    /// Number of replicated instances, >= 1.
    pub count: usize,
    /// Local-state names; the declaration index is the numeric encoding.
    pub locals: Vec<String>,
    pub init: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalVar {
    pub name: String,
    pub kind: GlobalKind,
    pub init: InitValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobalKind {
    /// Finite integer domain `0..domain`.
    Plain { domain: usize },
    /// Holds a component id of the target type, 1-based in `1..=count`.
    IdSensitive { target: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitValue {
    Any,
    Value(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardedCommand {
    pub type_idx: usize,
    pub label: String,
    pub from: usize,
    pub to: usize,
    pub guard: Vec<GuardAtom>,
    pub updates: Vec<GlobalUpdate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuardAtom {
    /// `var == self`: the id-sensitive global holds the acting instance id.
    GlobalEqSelf { var: usize },
    GlobalEqConst { var: usize, value: usize },
    /// Number of instances of `type_idx` in `local` compared to `bound`;
    /// `others` excludes the acting instance.
    Count { type_idx: usize, local: usize, cmp: Cmp, bound: usize, others: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Le,
    Ge,
    Lt,
    Gt,
}

impl Cmp {
    pub fn eval(self, lhs: usize, rhs: usize) -> bool {
        match self {
            Cmp::Eq => lhs == rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Lt => "<",
            Cmp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalUpdate {
    pub var: usize,
    pub value: UpdateValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateValue {
    Const(usize),
    SelfId,
    /// Nondeterministic over the full domain.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyProperty {
    pub name: String,
    pub bad: PropExpr,
}

/// Bad-state conditions: and/or combinations of counting atoms and plain
/// global comparisons. Invariant under component permutations by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropExpr {
    And(Vec<PropExpr>),
    Or(Vec<PropExpr>),
    Count { type_idx: usize, local: usize, cmp: Cmp, bound: usize },
    Global { var: usize, cmp: Cmp, value: usize },
    Const(bool),
}

/// A fully concrete global state: one local-state index per instance,
/// grouped by type, plus one value per global (plain values 0-based,
/// id-sensitive values 1-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExplicitState {
    pub globals: Vec<u32>,
    pub locals: Vec<Vec<u8>>,
}

impl Model {
    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn global_index(&self, name: &str) -> Option<usize> {
        self.globals.iter().position(|g| g.name == name)
    }

    /// Domain size of a global: `d` for plain, `count` for id-sensitive.
    pub fn global_domain(&self, var: usize) -> usize {
        match self.globals[var].kind {
            GlobalKind::Plain { domain } => domain,
            GlobalKind::IdSensitive { target } => self.types[target].count,
        }
    }

    /// Id-sensitive globals targeting `type_idx`, in declaration order.
    pub fn id_vars_for(&self, type_idx: usize) -> Vec<usize> {
        self.globals
            .iter()
            .enumerate()
            .filter(|(_, g)| matches!(g.kind, GlobalKind::IdSensitive { target } if target == type_idx))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn commands_of(&self, type_idx: usize) -> impl Iterator<Item = &GuardedCommand> {
        self.commands.iter().filter(move |c| c.type_idx == type_idx)
    }

    pub fn max_count(&self) -> usize {
        self.types.iter().map(|t| t.count).max().unwrap_or(0)
    }

    pub fn format_state(&self, s: &ExplicitState) -> String {
        let mut parts = Vec::new();
        for (t, ty) in self.types.iter().enumerate() {
            for (j, &l) in s.locals[t].iter().enumerate() {
                parts.push(format!("{}[{}]={}", ty.name, j + 1, ty.locals[l as usize]));
            }
        }
        for (g, gv) in self.globals.iter().enumerate() {
            parts.push(format!("{}={}", gv.name, s.globals[g]));
        }
        parts.join(" ")
    }
}
