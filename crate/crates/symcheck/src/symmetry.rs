//! Dynamic symmetry reduction: the abstraction operator `alpha` maps a set
//! of states to their orbit representatives under full component symmetry,
//! one type at a time, by symbolic bubble sort over adjacent instance
//! pairs. A state is in representative form when every adjacent pair is
//! ordered: local states ascending, ties broken by the id-sensitive
//! indicator keys so that id values end up maximal.

use std::cell::RefCell;
use std::collections::HashMap;

use thiserror::Error;

use crate::bdd::{Dd, Manager};
use crate::model::{BitLayout, Model, ModelError, Symbolic};

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("adjacent pair {pair} out of range for type with {count} instances")]
    PairOutOfRange { pair: usize, count: usize },
    #[error("representative sort did not stabilize within {0} passes")]
    SortDiverged(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bdd(#[from] crate::bdd::BddError),
}

/// Cached ordering predicates and swap permutations per (type, pair).
pub struct SymContext<'a> {
    pub sym: Symbolic<'a>,
    leq_cache: RefCell<HashMap<(usize, usize), Dd>>,
    swap_perm_cache: RefCell<HashMap<(usize, usize), Vec<(u32, u32)>>>,
}

impl<'a> SymContext<'a> {
    pub fn new(model: &'a Model, layout: &'a BitLayout, mgr: &'a Manager) -> Self {
        SymContext {
            sym: Symbolic::new(model, layout, mgr),
            leq_cache: RefCell::new(HashMap::new()),
            swap_perm_cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &'a Model {
        self.sym.model
    }
    pub fn layout(&self) -> &'a BitLayout {
        self.sym.layout
    }
    pub fn manager(&self) -> &'a Manager {
        self.sym.mgr
    }

    fn check_pair(&self, type_idx: usize, pair: usize) -> Result<(), SymmetryError> {
        let count = self.model().types[type_idx].count;
        if pair + 1 >= count {
            return Err(SymmetryError::PairOutOfRange { pair, count });
        }
        Ok(())
    }

    /// States where instances `pair` and `pair + 1` of the type are in
    /// representative order (0-based adjacent pair index).
    pub fn leq_pred(&self, type_idx: usize, pair: usize) -> Result<Dd, SymmetryError> {
        self.check_pair(type_idx, pair)?;
        if let Some(d) = self.leq_cache.borrow().get(&(type_idx, pair)) {
            return Ok(d.clone());
        }
        let m = self.manager();
        let a = &self.layout().local_bits[type_idx][pair];
        let b = &self.layout().local_bits[type_idx][pair + 1];
        let lt = self.sym.bits_lt_bits(a, b)?;
        let eq = self.sym.bits_eq_bits(a, b)?;

        // Lexicographic comparison of the indicator keys
        // (I[g1=p], ..., I[gm=p]) vs (I[g1=p+1], ..., I[gm=p+1]) over the
        // id-sensitive variables targeting this type, declaration order.
        let mut key_leq = m.constant(true);
        for &g in self.model().id_vars_for(type_idx).iter().rev() {
            let at_p = self.sym.global_eq(g, pair + 1, false)?;
            let at_q = self.sym.global_eq(g, pair + 2, false)?;
            // at_p and at_q are mutually exclusive: strictly-less is at_q,
            // equal keys means the variable points at neither position.
            let neither = {
                let either = m.or(&at_p, &at_q)?;
                m.not(&either)?
            };
            let keep = m.and(&neither, &key_leq)?;
            key_leq = m.or(&at_q, &keep)?;
        }
        let tie = m.and(&eq, &key_leq)?;
        let result = m.or(&lt, &tie)?;
        self.leq_cache.borrow_mut().insert((type_idx, pair), result.clone());
        Ok(result)
    }

    fn swap_perm(&self, type_idx: usize, pair: usize) -> Vec<(u32, u32)> {
        if let Some(p) = self.swap_perm_cache.borrow().get(&(type_idx, pair)) {
            return p.clone();
        }
        let a = &self.layout().local_bits[type_idx][pair];
        let b = &self.layout().local_bits[type_idx][pair + 1];
        let mut mapping = Vec::with_capacity(2 * a.len());
        for (&x, &y) in a.iter().zip(b) {
            mapping.push((x, y));
            mapping.push((y, x));
        }
        self.swap_perm_cache.borrow_mut().insert((type_idx, pair), mapping.clone());
        mapping
    }

    /// Image of `set` under the transposition of instances `pair` and
    /// `pair + 1`: exchanges the local-state blocks and remaps every
    /// id-sensitive value pointing at either instance.
    pub fn swap_adjacent(&self, type_idx: usize, pair: usize, set: &Dd) -> Result<Dd, SymmetryError> {
        self.check_pair(type_idx, pair)?;
        let m = self.manager();
        let mapping = self.swap_perm(type_idx, pair);
        let mut out = if mapping.is_empty() { set.clone() } else { m.permute(set, &mapping)? };
        for g in self.model().id_vars_for(type_idx) {
            out = self.swap_id_value(g, pair + 1, pair + 2, &out)?;
        }
        Ok(out)
    }

    /// Substitutes values `v1 <-> v2` of one id-sensitive global:
    /// (Z|g=v1 && g=v2) || (Z|g=v2 && g=v1) || (Z && g not in {v1,v2}).
    fn swap_id_value(&self, var: usize, v1: usize, v2: usize, set: &Dd) -> Result<Dd, SymmetryError> {
        let m = self.manager();
        let bits = &self.layout().global_bits[var];
        let lits = |value: usize| -> Vec<(u32, bool)> {
            let width = bits.len();
            bits.iter()
                .enumerate()
                .map(|(i, &b)| (b, (value - 1) >> (width - 1 - i) & 1 == 1))
                .collect()
        };
        let at_v1 = m.cube(&lits(v1))?;
        let at_v2 = m.cube(&lits(v2))?;
        let co_v1 = m.restrict(set, &lits(v1))?;
        let co_v2 = m.restrict(set, &lits(v2))?;
        let moved_to_v2 = m.and(&co_v1, &at_v2)?;
        let moved_to_v1 = m.and(&co_v2, &at_v1)?;
        let elsewhere = {
            let either = m.or(&at_v1, &at_v2)?;
            m.diff(set, &either)?
        };
        let moved = m.or(&moved_to_v1, &moved_to_v2)?;
        Ok(m.or(&moved, &elsewhere)?)
    }

    /// One bubble-sort sweep for a type: misordered adjacent pairs are
    /// swapped in place, pair by pair, the set updated sequentially.
    pub fn tau_pass(&self, type_idx: usize, set: &Dd) -> Result<Dd, SymmetryError> {
        let m = self.manager();
        let mut z = set.clone();
        for pair in 0..self.model().types[type_idx].count.saturating_sub(1) {
            let leq = self.leq_pred(type_idx, pair)?;
            let bad = m.diff(&z, &leq)?;
            if bad.is_false() {
                continue;
            }
            let good = m.diff(&z, &bad)?;
            let swapped = self.swap_adjacent(type_idx, pair, &bad)?;
            z = m.or(&good, &swapped)?;
        }
        Ok(z)
    }

    /// The abstraction operator: sweeps every type until the set of
    /// representatives stabilizes.
    pub fn alpha(&self, set: &Dd) -> Result<Dd, SymmetryError> {
        let n_max = self.model().max_count();
        let pass_limit = (n_max * n_max * self.model().types.len()).max(1);
        let mut z = set.clone();
        let mut passes = 0usize;
        loop {
            let before = z.clone();
            for t in 0..self.model().types.len() {
                z = self.tau_pass(t, &z)?;
                passes += 1;
            }
            if z == before {
                return Ok(z);
            }
            if passes > pass_limit {
                return Err(SymmetryError::SortDiverged(pass_limit));
            }
        }
    }

    /// Conjunction of every ordering predicate: the representative set the
    /// fixpoint must stay inside.
    pub fn representative_set(&self) -> Result<Dd, SymmetryError> {
        let m = self.manager();
        let mut acc = m.constant(true);
        for (t, ty) in self.model().types.iter().enumerate() {
            for pair in 0..ty.count.saturating_sub(1) {
                let leq = self.leq_pred(t, pair)?;
                acc = m.and(&acc, &leq)?;
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdd::Manager;
    use crate::model::{encode_layout, parse_model, ExplicitState, DEFAULT_BIT_CAP};
    use crate::oracle;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    struct Fixture {
        model: Model,
    }

    impl Fixture {
        fn new(src: &str) -> Self {
            Fixture { model: parse_model(src).unwrap() }
        }

        fn with<R>(&self, f: impl FnOnce(&SymContext) -> R) -> R {
            let layout = encode_layout(&self.model, DEFAULT_BIT_CAP).unwrap();
            let mgr = Manager::new(layout.num_vars);
            let ctx = SymContext::new(&self.model, &layout, &mgr);
            f(&ctx)
        }
    }

    fn st(locals: &[u8], globals: &[u32]) -> ExplicitState {
        ExplicitState { globals: globals.to_vec(), locals: vec![locals.to_vec()] }
    }

    fn contains(ctx: &SymContext, set: &Dd, s: &ExplicitState) -> bool {
        let cube = ctx.sym.state_cube(s).unwrap();
        !ctx.manager().and(set, &cube).unwrap().is_false()
    }

    const SORT3: &str =
        "model m\ntype P count 3 locals A B init A\nglobal g idsensitive P init any\n";

    #[test]
    fn leq_pred_matches_the_ordering_rule() {
        Fixture::new(SORT3).with(|ctx| {
            let leq = ctx.leq_pred(0, 0).unwrap();
            // l_1 = A < l_2 = B: ordered regardless of g.
            assert!(contains(ctx, &leq, &st(&[0, 1, 0], &[1])));
            // equal locals and g = 1 (the left position): not ordered.
            assert!(!contains(ctx, &leq, &st(&[1, 1, 0], &[1])));
            // equal locals and g outside the pair: ordered.
            assert!(contains(ctx, &leq, &st(&[1, 1, 0], &[3])));
            assert!(ctx.leq_pred(0, 2).is_err());
        });
    }

    #[test]
    fn swap_adjacent_applies_the_transposition() {
        Fixture::new(SORT3).with(|ctx| {
            let m = ctx.manager();
            // {(B,A,A,tok=1)} under swap of pair 0 -> {(A,B,A,tok=2)}
            let z = ctx.sym.state_cube(&st(&[1, 0, 0], &[1])).unwrap();
            let swapped = ctx.swap_adjacent(0, 0, &z).unwrap();
            let expected = ctx.sym.state_cube(&st(&[0, 1, 0], &[2])).unwrap();
            assert_eq!(swapped, expected);
            // involution
            let back = ctx.swap_adjacent(0, 0, &swapped).unwrap();
            assert_eq!(back, z);
            // a state the transposition fixes
            let fixed = ctx.sym.state_cube(&st(&[1, 1, 0], &[3])).unwrap();
            let swapped = ctx.swap_adjacent(0, 0, &fixed).unwrap();
            assert_eq!(swapped, fixed);
            assert_eq!(m.count_states(&swapped, &ctx.layout().current_vars).unwrap(), 1);
        });
    }

    #[test]
    fn tau_pass_sorts_one_sweep() {
        // No id vars: {(B,A,A)} sorts to {(A,A,B)} in one pass.
        Fixture::new("model m\ntype P count 3 locals A B init A\n").with(|ctx| {
            let z = ctx.sym.state_cube(&st(&[1, 0, 0], &[])).unwrap();
            let sorted = ctx.tau_pass(0, &z).unwrap();
            let expected = ctx.sym.state_cube(&st(&[0, 0, 1], &[])).unwrap();
            assert_eq!(sorted, expected);
            // already sorted sets are fixed
            assert_eq!(ctx.tau_pass(0, &expected).unwrap(), expected);
        });
        // With an id var: (A,B,B,2) needs the pair-2 swap, yielding tok=3.
        Fixture::new(SORT3).with(|ctx| {
            let z = ctx.sym.state_cube(&st(&[0, 1, 1], &[2])).unwrap();
            let sorted = ctx.tau_pass(0, &z).unwrap();
            let expected = ctx.sym.state_cube(&st(&[0, 1, 1], &[3])).unwrap();
            assert_eq!(sorted, expected);
        });
    }

    #[test]
    fn alpha_collapses_orbits() {
        Fixture::new(SORT3).with(|ctx| {
            let m = ctx.manager();
            assert!(ctx.alpha(&m.constant(false)).unwrap().is_false());
            // {(A,B,B,2), (A,B,B,3)} -> {(A,B,B,3)}
            let a = ctx.sym.state_cube(&st(&[0, 1, 1], &[2])).unwrap();
            let b = ctx.sym.state_cube(&st(&[0, 1, 1], &[3])).unwrap();
            let set = m.or(&a, &b).unwrap();
            assert_eq!(ctx.alpha(&set).unwrap(), b);
        });
        // all 6 permutations of (A,B,C) collapse to the sorted one
        Fixture::new("model m\ntype P count 3 locals A B C init A\n").with(|ctx| {
            let m = ctx.manager();
            let mut set = m.constant(false);
            for perm in [[0u8, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let cube = ctx.sym.state_cube(&st(&perm, &[])).unwrap();
                set = m.or(&set, &cube).unwrap();
            }
            let canon = ctx.sym.state_cube(&st(&[0, 1, 2], &[])).unwrap();
            assert_eq!(ctx.alpha(&set).unwrap(), canon);
        });
    }

    #[test]
    fn alpha_is_idempotent_and_contained_in_representatives() {
        Fixture::new(SORT3).with(|ctx| {
            let m = ctx.manager();
            let mut rng = StdRng::seed_from_u64(42);
            let reps = ctx.representative_set().unwrap();
            for _ in 0..30 {
                let mut set = m.constant(false);
                for _ in 0..rng.gen_range(1..6) {
                    let locals: Vec<u8> = (0..3).map(|_| rng.gen_range(0..2)).collect();
                    let tok = rng.gen_range(1..=3);
                    let cube = ctx.sym.state_cube(&st(&locals, &[tok])).unwrap();
                    set = m.or(&set, &cube).unwrap();
                }
                let once = ctx.alpha(&set).unwrap();
                let twice = ctx.alpha(&once).unwrap();
                assert_eq!(once, twice);
                assert!(m.diff(&once, &reps).unwrap().is_false());
                let n_in = m.count_states(&set, &ctx.layout().current_vars).unwrap();
                let n_out = m.count_states(&once, &ctx.layout().current_vars).unwrap();
                assert!(n_out <= n_in);
            }
        });
    }

    #[test]
    fn alpha_matches_the_explicit_oracle_per_state() {
        let fixture = Fixture::new(SORT3);
        fixture.with(|ctx| {
            for bits in 0..8u8 {
                for tok in 1..=3u32 {
                    let locals: Vec<u8> = (0..3).map(|i| bits >> i & 1).collect();
                    let s = st(&locals, &[tok]);
                    let cube = ctx.sym.state_cube(&s).unwrap();
                    let reduced = ctx.alpha(&cube).unwrap();
                    let canon = oracle::canonicalize_explicit(&fixture.model, &s).unwrap();
                    let expected = ctx.sym.state_cube(&canon).unwrap();
                    assert_eq!(reduced, expected, "state {s:?}");
                }
            }
        });
    }

    #[test]
    fn alpha_is_invariant_across_an_orbit() {
        let fixture = Fixture::new(SORT3);
        fixture.with(|ctx| {
            let s = st(&[1, 0, 1], &[2]);
            let base = {
                let cube = ctx.sym.state_cube(&s).unwrap();
                ctx.alpha(&cube).unwrap()
            };
            for z in oracle::orbit(&fixture.model, &s).unwrap() {
                let cube = ctx.sym.state_cube(&z).unwrap();
                assert_eq!(ctx.alpha(&cube).unwrap(), base);
            }
        });
    }

    #[test]
    fn two_id_vars_still_reach_a_unique_fixpoint() {
        // The oscillating configuration: equal locals, two id vars pointing
        // at both positions of a pair.
        let src = "model m\ntype P count 2 locals A B init A\n\
                   global g1 idsensitive P init any\nglobal g2 idsensitive P init any\n";
        let fixture = Fixture::new(src);
        fixture.with(|ctx| {
            for g1 in 1..=2u32 {
                for g2 in 1..=2u32 {
                    let s = ExplicitState { globals: vec![g1, g2], locals: vec![vec![0, 0]] };
                    let cube = ctx.sym.state_cube(&s).unwrap();
                    let reduced = ctx.alpha(&cube).unwrap();
                    let canon = oracle::canonicalize_explicit(&fixture.model, &s).unwrap();
                    assert_eq!(reduced, ctx.sym.state_cube(&canon).unwrap(), "g1={g1} g2={g2}");
                }
            }
        });
    }
}
