//! Explicit-state reference implementation: concrete BFS over the command
//! semantics, literal group actions and brute-force canonicalization.
//! Exists for desk-scale validation of the symbolic engine; it never
//! reduces during search.

use std::collections::{BTreeSet, VecDeque};

use itertools::Itertools;
use thiserror::Error;

use crate::model::{
    ExplicitState, GlobalKind, GuardAtom, GuardedCommand, InitValue, Model, UpdateValue,
};

/// Largest per-type permutation group the oracle will enumerate (10!).
pub const MAX_GROUP_ORDER: u128 = 3_628_800;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("reachable state count exceeds the cap of {0}")]
    CapacityExceeded(usize),
    #[error("component type `{0}` has a permutation group larger than 10!")]
    GroupTooLarge(String),
    #[error("orbit of {0:?} contains {1} sorted elements instead of exactly one")]
    NoUniqueRepresentative(ExplicitState, usize),
}

/// Component-symmetry action: per-type position permutations applied to the
/// local-state vector, with id-sensitive values remapped accordingly.
/// `perms[t][i]` is the old position whose local state moves to position `i`.
pub fn apply_component_perm(model: &Model, s: &ExplicitState, perms: &[Vec<usize>]) -> ExplicitState {
    let mut out = s.clone();
    for (t, perm) in perms.iter().enumerate() {
        debug_assert_eq!(perm.len(), model.types[t].count);
        for (i, &src) in perm.iter().enumerate() {
            out.locals[t][i] = s.locals[t][src];
        }
        for g in model.id_vars_for(t) {
            let old_pos = s.globals[g] as usize - 1;
            let new_pos = perm.iter().position(|&src| src == old_pos).expect("bijection");
            out.globals[g] = new_pos as u32 + 1;
        }
    }
    out
}

/// Data-symmetry action on the shared local-state value domain; kept only
/// to exercise the definitional contrast with component symmetry.
pub fn data_perm_action(model: &Model, s: &ExplicitState, value_perm: &[usize]) -> ExplicitState {
    let mut out = s.clone();
    for (t, _) in model.types.iter().enumerate() {
        for l in &mut out.locals[t] {
            *l = value_perm[*l as usize] as u8;
        }
    }
    out
}

/// The representative ordering: positions p, p+1 of each type are in order
/// when the local states strictly increase, or are equal and the
/// id-sensitive indicator keys compare lexicographically non-decreasing.
pub fn is_sorted(model: &Model, s: &ExplicitState) -> bool {
    for (t, ty) in model.types.iter().enumerate() {
        let id_vars = model.id_vars_for(t);
        for p in 0..ty.count.saturating_sub(1) {
            let (lp, lq) = (s.locals[t][p], s.locals[t][p + 1]);
            if lp < lq {
                continue;
            }
            if lp > lq {
                return false;
            }
            // Equal locals: compare indicator tuples (I[g=p], ...) lexicographically.
            for &g in &id_vars {
                let a = s.globals[g] as usize == p + 1;
                let b = s.globals[g] as usize == p + 2;
                if a != b {
                    if a {
                        return false;
                    }
                    break;
                }
            }
        }
    }
    true
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Product of the per-type symmetric group orders.
pub fn group_order(model: &Model) -> u128 {
    model.types.iter().map(|t| factorial(t.count)).product()
}

fn check_group_size(model: &Model) -> Result<(), OracleError> {
    for t in &model.types {
        if factorial(t.count) > MAX_GROUP_ORDER {
            return Err(OracleError::GroupTooLarge(t.name.clone()));
        }
    }
    Ok(())
}

/// The full orbit of `s` under the product of per-type symmetric groups.
pub fn orbit(model: &Model, s: &ExplicitState) -> Result<BTreeSet<ExplicitState>, OracleError> {
    check_group_size(model)?;
    let per_type: Vec<Vec<Vec<usize>>> = model
        .types
        .iter()
        .map(|t| (0..t.count).permutations(t.count).collect())
        .collect();
    let mut out = BTreeSet::new();
    for perms in per_type.into_iter().multi_cartesian_product() {
        out.insert(apply_component_perm(model, s, &perms));
    }
    Ok(out)
}

/// Brute-force canonicalization: enumerate the orbit and return its unique
/// sorted element.
pub fn canonicalize_explicit(model: &Model, s: &ExplicitState) -> Result<ExplicitState, OracleError> {
    let orbit = orbit(model, s)?;
    let sorted: Vec<&ExplicitState> = orbit.iter().filter(|z| is_sorted(model, z)).collect();
    if sorted.len() != 1 {
        return Err(OracleError::NoUniqueRepresentative(s.clone(), sorted.len()));
    }
    Ok(sorted[0].clone())
}

/// Canonicalizes every state of a set, sequentially.
pub fn canonicalize_set_seq(
    model: &Model,
    states: &BTreeSet<ExplicitState>,
) -> Result<BTreeSet<ExplicitState>, OracleError> {
    states.iter().map(|s| canonicalize_explicit(model, s)).collect()
}

/// Canonicalizes every state of a set; data-parallel when the `parallel`
/// feature is enabled.
#[cfg(feature = "parallel")]
pub fn canonicalize_set(
    model: &Model,
    states: &BTreeSet<ExplicitState>,
) -> Result<BTreeSet<ExplicitState>, OracleError> {
    use rayon::prelude::*;
    let states: Vec<&ExplicitState> = states.iter().collect();
    states
        .into_par_iter()
        .map(|s| canonicalize_explicit(model, s))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn canonicalize_set(
    model: &Model,
    states: &BTreeSet<ExplicitState>,
) -> Result<BTreeSet<ExplicitState>, OracleError> {
    canonicalize_set_seq(model, states)
}

/// All concrete initial states, expanding `any` initializers.
pub fn initial_states(model: &Model) -> Vec<ExplicitState> {
    let locals: Vec<Vec<u8>> =
        model.types.iter().map(|t| vec![t.init as u8; t.count]).collect();
    let mut states = vec![ExplicitState { globals: Vec::new(), locals }];
    for (g, gv) in model.globals.iter().enumerate() {
        let values: Vec<u32> = match gv.init {
            InitValue::Value(v) => vec![v as u32],
            InitValue::Any => match gv.kind {
                GlobalKind::Plain { domain } => (0..domain as u32).collect(),
                GlobalKind::IdSensitive { target } => {
                    (1..=model.types[target].count as u32).collect()
                }
            },
        };
        debug_assert_eq!(states[0].globals.len(), g);
        states = states
            .into_iter()
            .flat_map(|s| {
                values.iter().map(move |&v| {
                    let mut s = s.clone();
                    s.globals.push(v);
                    s
                })
            })
            .collect();
    }
    states
}

fn guard_holds(_model: &Model, s: &ExplicitState, atom: &GuardAtom, t: usize, j: usize) -> bool {
    match *atom {
        GuardAtom::GlobalEqSelf { var } => s.globals[var] as usize == j + 1,
        GuardAtom::GlobalEqConst { var, value } => s.globals[var] as usize == value,
        GuardAtom::Count { type_idx, local, cmp, bound, others } => {
            let mut n = 0usize;
            for (i, &l) in s.locals[type_idx].iter().enumerate() {
                if others && type_idx == t && i == j {
                    continue;
                }
                if l as usize == local {
                    n += 1;
                }
            }
            cmp.eval(n, bound)
        }
    }
}

fn command_successors(
    model: &Model,
    s: &ExplicitState,
    cmd: &GuardedCommand,
    j: usize,
    out: &mut Vec<ExplicitState>,
) {
    let t = cmd.type_idx;
    if s.locals[t][j] as usize != cmd.from {
        return;
    }
    if !cmd.guard.iter().all(|a| guard_holds(model, s, a, t, j)) {
        return;
    }
    let mut base = s.clone();
    base.locals[t][j] = cmd.to as u8;
    let mut pending = vec![base];
    for update in &cmd.updates {
        let values: Vec<u32> = match update.value {
            UpdateValue::Const(v) => vec![v as u32],
            UpdateValue::SelfId => vec![j as u32 + 1],
            UpdateValue::Any => match model.globals[update.var].kind {
                GlobalKind::Plain { domain } => (0..domain as u32).collect(),
                GlobalKind::IdSensitive { target } => {
                    (1..=model.types[target].count as u32).collect()
                }
            },
        };
        pending = pending
            .into_iter()
            .flat_map(|s| {
                values.iter().map(move |&v| {
                    let mut s = s.clone();
                    s.globals[update.var] = v;
                    s
                })
            })
            .collect();
    }
    out.extend(pending);
}

/// Successors of one state under every instance of every command.
pub fn successors(model: &Model, s: &ExplicitState) -> Vec<ExplicitState> {
    let mut out = Vec::new();
    for cmd in &model.commands {
        for j in 0..model.types[cmd.type_idx].count {
            command_successors(model, s, cmd, j, &mut out);
        }
    }
    out
}

/// Full unreduced reachable set by BFS over the concrete semantics.
pub fn enumerate_reachable(
    model: &Model,
    limit: usize,
) -> Result<BTreeSet<ExplicitState>, OracleError> {
    let mut reached: BTreeSet<ExplicitState> = initial_states(model).into_iter().collect();
    if reached.len() > limit {
        return Err(OracleError::CapacityExceeded(limit));
    }
    let mut frontier: VecDeque<ExplicitState> = reached.iter().cloned().collect();
    while let Some(s) = frontier.pop_front() {
        for succ in successors(model, &s) {
            if reached.insert(succ.clone()) {
                if reached.len() > limit {
                    return Err(OracleError::CapacityExceeded(limit));
                }
                frontier.push_back(succ);
            }
        }
    }
    Ok(reached)
}

/// Whether any reachable state satisfies `bad`; the full-space verdict used
/// against the quotient verdict.
pub fn violates(
    model: &Model,
    reachable: &BTreeSet<ExplicitState>,
    bad: &crate::model::PropExpr,
) -> bool {
    reachable.iter().any(|s| prop_holds(model, s, bad))
}

pub fn prop_holds(model: &Model, s: &ExplicitState, e: &crate::model::PropExpr) -> bool {
    use crate::model::PropExpr;
    match e {
        PropExpr::And(terms) => terms.iter().all(|t| prop_holds(model, s, t)),
        PropExpr::Or(terms) => terms.iter().any(|t| prop_holds(model, s, t)),
        PropExpr::Count { type_idx, local, cmp, bound } => {
            let n = s.locals[*type_idx].iter().filter(|&&l| l as usize == *local).count();
            cmp.eval(n, *bound)
        }
        PropExpr::Global { var, cmp, value } => cmp.eval(s.globals[*var] as usize, *value),
        PropExpr::Const(b) => *b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn mutex(n: usize) -> Model {
        parse_model(&format!(
            "\
model mutex
type Proc count {n} locals N T C init N
global tok idsensitive Proc init any
command Proc try from N to T
command Proc enter from T to C guard tok == self
command Proc leave from C to N update tok := any
property mutex_safe bad count(Proc, C) >= 2
"
        ))
        .unwrap()
    }

    fn st(locals: &[u8], globals: &[u32]) -> ExplicitState {
        ExplicitState { globals: globals.to_vec(), locals: vec![locals.to_vec()] }
    }

    #[test]
    fn component_swap_acts_on_positions_and_ids() {
        let m = mutex(2);
        // swap(1,2) on (T,N,tok=1) -> (N,T,tok=2)
        let s = st(&[1, 0], &[1]);
        let swapped = apply_component_perm(&m, &s, &[vec![1, 0]]);
        assert_eq!(swapped, st(&[0, 1], &[2]));
        // identity
        assert_eq!(apply_component_perm(&m, &s, &[vec![0, 1]]), s);
        // swap on equal locals fixes the local vector
        let eq = st(&[1, 1], &[1]);
        let swapped = apply_component_perm(&m, &eq, &[vec![1, 0]]);
        assert_eq!(swapped.locals[0], vec![1, 1]);
        assert_eq!(swapped.globals[0], 2);
    }

    #[test]
    fn data_symmetry_contrasts_with_component_symmetry() {
        let m = parse_model("model m\ntype P count 2 locals a b init a\n").unwrap();
        let aa = st(&[0, 0], &[]);
        // component swap keeps (a,a)
        assert_eq!(apply_component_perm(&m, &aa, &[vec![1, 0]]), aa);
        // data exchange a <-> b yields (b,b)
        let data = data_perm_action(&m, &aa, &[1, 0]);
        assert_eq!(data, st(&[1, 1], &[]));
        // a transposition is an involution
        assert_eq!(data_perm_action(&m, &data, &[1, 0]), aa);
        assert_eq!(data_perm_action(&m, &aa, &[0, 1]), aa);
    }

    #[test]
    fn id_variable_breaks_ties_toward_higher_positions() {
        // 3 components, locals A < B, one id-sensitive variable:
        // (A,B,B,2) canonicalizes to (A,B,B,3).
        let m = parse_model(
            "model m\ntype P count 3 locals A B init A\nglobal g idsensitive P init any\n",
        )
        .unwrap();
        let s = st(&[0, 1, 1], &[2]);
        let canon = canonicalize_explicit(&m, &s).unwrap();
        assert_eq!(canon, st(&[0, 1, 1], &[3]));
        // already canonical states map to themselves
        assert_eq!(canonicalize_explicit(&m, &canon).unwrap(), canon);
    }

    #[test]
    fn canonical_form_sorts_distinct_locals() {
        let m = parse_model("model m\ntype P count 3 locals A B C init A\n").unwrap();
        let s = st(&[2, 0, 1], &[]); // (C,A,B)
        assert_eq!(canonicalize_explicit(&m, &s).unwrap(), st(&[0, 1, 2], &[]));
    }

    #[test]
    fn mutex_reachability_contains_asymmetric_pairs() {
        let m = mutex(2);
        let reached = enumerate_reachable(&m, 10_000).unwrap();
        assert!(reached.contains(&st(&[1, 0], &[1])));
        assert!(reached.contains(&st(&[0, 1], &[1])));
        // initial states only for a command-free model
        let empty = parse_model("model m\ntype P count 2 locals a b init a\n").unwrap();
        let reached = enumerate_reachable(&empty, 100).unwrap();
        assert_eq!(reached.len(), 1);
    }

    #[test]
    fn readers_writers_exclusion_holds_explicitly() {
        let src = "\
model rw
type Reader count 1 locals idle trying reading init idle
type Writer count 1 locals idle trying writing init idle
command Reader go from idle to trying
command Reader read from trying to reading guard count(Writer, writing) == 0
command Reader done from reading to idle
command Writer go from idle to trying
command Writer write from trying to writing guard count(Reader, reading) == 0 && count_others(Writer, writing) == 0
command Writer done from writing to idle
";
        let m = parse_model(src).unwrap();
        let reached = enumerate_reachable(&m, 10_000).unwrap();
        assert!(reached
            .iter()
            .all(|s| !(s.locals[0][0] == 2 && s.locals[1][0] == 2)));
    }

    #[test]
    fn orbit_sizes_divide_group_order() {
        let m = mutex(3);
        let reached = enumerate_reachable(&m, 100_000).unwrap();
        let order = group_order(&m);
        assert_eq!(order, 6);
        for s in reached.iter().take(50) {
            let orb = orbit(&m, s).unwrap();
            assert_eq!(order as usize % orb.len(), 0);
        }
    }

    #[test]
    fn capacity_cap_is_reported() {
        let m = mutex(3);
        assert!(matches!(
            enumerate_reachable(&m, 5),
            Err(OracleError::CapacityExceeded(5))
        ));
    }
}
