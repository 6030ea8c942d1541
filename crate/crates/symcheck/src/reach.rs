//! Forward reachability fixpoints over canonical representatives: the
//! monolithic baseline (one relation, image + alpha until stable) and the
//! component-wise algorithm that builds per-instance relations on the fly
//! and exhausts one component at a time, optionally skipping frontier
//! states whose neighboring instances are interchangeable.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bdd::{BddError, Dd, Manager};
use crate::model::{BitLayout, ExplicitState, ModelError, Symbolic};
use crate::symmetry::{SymContext, SymmetryError};

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("resource exhausted: {0}")]
    Exhausted(&'static str),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bdd(#[from] BddError),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReachOptions {
    pub state_symmetries: bool,
    pub time_limit: Option<Duration>,
    pub node_cap: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ReachStats {
    /// Outer fixpoint iterations (monolithic) or full sweeps over all
    /// instances (component-wise).
    pub passes: usize,
    pub images: usize,
    pub peak_live_nodes: usize,
    pub elapsed: Duration,
    pub image_time: Duration,
    pub alpha_time: Duration,
    pub filter_time: Duration,
}

#[derive(Debug, Clone)]
pub struct ReachResult {
    pub reached: Dd,
    pub representatives: u128,
    pub stats: ReachStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated(ExplicitState),
}

struct Limits {
    deadline: Option<Instant>,
    node_cap: Option<usize>,
}

impl Limits {
    fn new(opts: &ReachOptions) -> Self {
        Limits {
            deadline: opts.time_limit.map(|d| Instant::now() + d),
            node_cap: opts.node_cap,
        }
    }

    fn check(&self, mgr: &Manager) -> Result<(), ReachError> {
        if let Some(deadline) = self.deadline {
            if Instant::now() > deadline {
                return Err(ReachError::Exhausted("time limit"));
            }
        }
        if let Some(cap) = self.node_cap {
            if mgr.live_nodes() > cap {
                return Err(ReachError::Exhausted("node cap"));
            }
        }
        Ok(())
    }
}

/// Successor states of `set` under `rel`: existentially quantify the
/// current variables out of the conjunction, then rename next to current.
pub fn image(mgr: &Manager, layout: &BitLayout, rel: &Dd, set: &Dd) -> Result<Dd, BddError> {
    let next = mgr.and_exists(rel, set, &layout.current_vars)?;
    mgr.permute(&next, &layout.swap_next_current())
}

fn finish(ctx: &SymContext, reached: Dd, mut stats: ReachStats, start: Instant) -> Result<ReachResult, ReachError> {
    stats.peak_live_nodes = ctx.manager().peak_live_nodes();
    stats.elapsed = start.elapsed();
    let representatives =
        ctx.manager().count_states(&reached, &ctx.layout().current_vars)?;
    Ok(ReachResult { reached, representatives, stats })
}

/// Baseline: one monolithic relation, iterate Z = alpha(Init) | alpha(image(R, Z)).
pub fn reach_monolithic(ctx: &SymContext, opts: &ReachOptions) -> Result<ReachResult, ReachError> {
    let start = Instant::now();
    let limits = Limits::new(opts);
    let m = ctx.manager();
    let mut stats = ReachStats::default();

    let mut rel = m.constant(false);
    for (t, ty) in ctx.model().types.iter().enumerate() {
        for j in 0..ty.count {
            let r = ctx.sym.build_component_relation(t, j)?;
            rel = m.or(&rel, &r)?;
        }
    }

    let init = {
        let raw = ctx.sym.init_set()?;
        let t0 = Instant::now();
        let a = ctx.alpha(&raw)?;
        stats.alpha_time += t0.elapsed();
        a
    };
    let mut z = init.clone();
    loop {
        stats.passes += 1;
        let t0 = Instant::now();
        let img = image(m, ctx.layout(), &rel, &z)?;
        stats.images += 1;
        stats.image_time += t0.elapsed();
        let t0 = Instant::now();
        let reduced = ctx.alpha(&img)?;
        stats.alpha_time += t0.elapsed();
        let step = m.or(&init, &reduced)?;
        let next = m.or(&z, &step)?;
        limits.check(m)?;
        if next == z {
            return finish(ctx, z, stats, start);
        }
        z = next;
    }
}

/// Drops from `frontier[i][j-1]` the states where instances `j` and `j-1`
/// are interchangeable: equal local states and no id-sensitive variable
/// pointing at either instance. Instance `j` has just been fully explored,
/// so exploring those states again for `j-1` can only revisit known
/// representatives.
pub fn state_symmetry_filter(
    ctx: &SymContext,
    frontier: &mut [Vec<Dd>],
    type_idx: usize,
    just_explored: usize,
) -> Result<(), ReachError> {
    let j = just_explored;
    assert!(j >= 1, "filter applies between an instance and its lower neighbor");
    let m = ctx.manager();
    let mut pinned = m.constant(false);
    for g in ctx.model().id_vars_for(type_idx) {
        let at_j = ctx.sym.global_eq(g, j + 1, false)?;
        let at_prev = ctx.sym.global_eq(g, j, false)?;
        pinned = m.or(&pinned, &at_j)?;
        pinned = m.or(&pinned, &at_prev)?;
    }
    let mut symm = m.diff(&frontier[type_idx][j - 1], &pinned)?;
    let eq_locals = ctx.sym.bits_eq_bits(
        &ctx.layout().local_bits[type_idx][j],
        &ctx.layout().local_bits[type_idx][j - 1],
    )?;
    symm = m.and(&symm, &eq_locals)?;
    frontier[type_idx][j - 1] = m.diff(&frontier[type_idx][j - 1], &symm)?;
    Ok(())
}

/// Component-wise exploration: each instance in turn is driven to its
/// local fixpoint with an on-the-fly relation, new representatives are
/// handed to every other instance's frontier, and the run ends when all
/// frontiers empty out.
pub fn reach_componentwise(ctx: &SymContext, opts: &ReachOptions) -> Result<ReachResult, ReachError> {
    let start = Instant::now();
    let limits = Limits::new(opts);
    let m = ctx.manager();
    let mut stats = ReachStats::default();

    let init = {
        let raw = ctx.sym.init_set()?;
        let t0 = Instant::now();
        let a = ctx.alpha(&raw)?;
        stats.alpha_time += t0.elapsed();
        a
    };
    let mut reached = init.clone();
    let mut to_explore: Vec<Vec<Dd>> = ctx
        .model()
        .types
        .iter()
        .map(|ty| vec![init.clone(); ty.count])
        .collect();

    loop {
        stats.passes += 1;
        for i in 0..ctx.model().types.len() {
            for j in (0..ctx.model().types[i].count).rev() {
                let rel = ctx.sym.build_component_relation(i, j)?;
                let mut successors = to_explore[i][j].clone();
                let mut new_explored = m.constant(false);
                while !successors.is_false() {
                    let t0 = Instant::now();
                    let img = image(m, ctx.layout(), &rel, &successors)?;
                    stats.images += 1;
                    stats.image_time += t0.elapsed();
                    let t0 = Instant::now();
                    let reduced = ctx.alpha(&img)?;
                    stats.alpha_time += t0.elapsed();
                    let fresh = m.diff(&reduced, &new_explored)?;
                    successors = m.diff(&fresh, &reached)?;
                    new_explored = m.or(&new_explored, &successors)?;
                    limits.check(m)?;
                }
                reached = m.or(&reached, &new_explored)?;
                for (z, row) in to_explore.iter_mut().enumerate() {
                    for (k, entry) in row.iter_mut().enumerate() {
                        if z == i && k == j {
                            *entry = m.constant(false);
                        } else {
                            *entry = m.or(entry, &new_explored)?;
                        }
                    }
                }
                if opts.state_symmetries && j >= 1 {
                    let t0 = Instant::now();
                    state_symmetry_filter(ctx, &mut to_explore, i, j)?;
                    stats.filter_time += t0.elapsed();
                }
            }
        }
        let done = to_explore.iter().all(|row| row.iter().all(Dd::is_false));
        if done {
            return finish(ctx, reached, stats, start);
        }
    }
}

/// Safety check: the property holds when no reached representative is bad;
/// otherwise the least bad representative is decoded as witness.
pub fn check_invariant(sym: &Symbolic, reached: &Dd, bad: &Dd) -> Result<Verdict, ModelError> {
    let hits = sym.mgr.and(reached, bad)?;
    match sym.min_state(&hits)? {
        None => Ok(Verdict::Holds),
        Some(witness) => Ok(Verdict::Violated(witness)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdd::Manager;
    use crate::model::{encode_layout, parse_model, Model, DEFAULT_BIT_CAP};
    use crate::oracle;

    fn mutex_src(n: usize) -> String {
        format!(
            "model mutex\n\
             type Proc count {n} locals N T C init N\n\
             global tok idsensitive Proc init any\n\
             command Proc try from N to T\n\
             command Proc enter from T to C guard tok == self\n\
             command Proc leave from C to N update tok := any\n\
             property mutex_safe bad count(Proc, C) >= 2\n"
        )
    }

    fn rw_src(r: usize, w: usize) -> String {
        format!(
            "model rw\n\
             type Reader count {r} locals idle trying reading init idle\n\
             type Writer count {w} locals idle trying writing init idle\n\
             command Reader rgo from idle to trying\n\
             command Reader read from trying to reading guard count(Writer, writing) == 0\n\
             command Reader rdone from reading to idle\n\
             command Writer wgo from idle to trying\n\
             command Writer write from trying to writing guard count(Reader, reading) == 0 && count_others(Writer, writing) == 0\n\
             command Writer wdone from writing to idle\n\
             property exclusion bad count(Writer, writing) >= 1 && (count(Reader, reading) >= 1 || count(Writer, writing) >= 2)\n"
        )
    }

    fn with_ctx<R>(model: &Model, f: impl FnOnce(&SymContext) -> R) -> R {
        let layout = encode_layout(model, DEFAULT_BIT_CAP).unwrap();
        let mgr = Manager::new(layout.num_vars);
        let ctx = SymContext::new(model, &layout, &mgr);
        f(&ctx)
    }

    /// The oracle's reachable set, canonicalized and re-encoded symbolically.
    fn oracle_representatives(model: &Model, ctx: &SymContext) -> Dd {
        let explicit = oracle::enumerate_reachable(model, 1_000_000).unwrap();
        let canon = oracle::canonicalize_set_seq(model, &explicit).unwrap();
        let m = ctx.manager();
        let mut set = m.constant(false);
        for s in &canon {
            let cube = ctx.sym.state_cube(s).unwrap();
            set = m.or(&set, &cube).unwrap();
        }
        set
    }

    #[test]
    fn image_basics() {
        let model = parse_model(&mutex_src(2)).unwrap();
        with_ctx(&model, |ctx| {
            let m = ctx.manager();
            let rel = ctx.sym.build_component_relation(0, 0).unwrap();
            let empty = image(m, ctx.layout(), &rel, &m.constant(false)).unwrap();
            assert!(empty.is_false());
            let some = ctx
                .sym
                .state_cube(&ExplicitState { globals: vec![1], locals: vec![vec![1, 0]] })
                .unwrap();
            let none = image(m, ctx.layout(), &m.constant(false), &some).unwrap();
            assert!(none.is_false());
            // instance 1 in T holding the token steps into C
            let succ = image(m, ctx.layout(), &rel, &some).unwrap();
            let enter = ctx
                .sym
                .state_cube(&ExplicitState { globals: vec![1], locals: vec![vec![2, 0]] })
                .unwrap();
            let hit = m.and(&succ, &enter).unwrap();
            assert!(!hit.is_false());
        });
    }

    #[test]
    fn no_commands_reaches_exactly_alpha_init() {
        let model = parse_model(
            "model still\ntype P count 3 locals A B init A\nglobal g idsensitive P init any\n",
        )
        .unwrap();
        with_ctx(&model, |ctx| {
            let init = ctx.alpha(&ctx.sym.init_set().unwrap()).unwrap();
            let opts = ReachOptions::default();
            let mono = reach_monolithic(ctx, &opts).unwrap();
            let comp = reach_componentwise(ctx, &opts).unwrap();
            assert_eq!(mono.reached, init);
            assert_eq!(comp.reached, init);
        });
    }

    #[test]
    fn mutex_small_matches_the_oracle() {
        for n in 1..=3 {
            let model = parse_model(&mutex_src(n)).unwrap();
            with_ctx(&model, |ctx| {
                let expected = oracle_representatives(&model, ctx);
                let opts = ReachOptions::default();
                let mono = reach_monolithic(ctx, &opts).unwrap();
                let comp = reach_componentwise(ctx, &opts).unwrap();
                let comp_ss = reach_componentwise(
                    ctx,
                    &ReachOptions { state_symmetries: true, ..opts },
                )
                .unwrap();
                assert_eq!(mono.reached, expected, "mono n={n}");
                assert_eq!(comp.reached, expected, "comp n={n}");
                assert_eq!(comp_ss.reached, expected, "comp+ss n={n}");
                let count =
                    ctx.manager().count_states(&expected, &ctx.layout().current_vars).unwrap();
                assert_eq!(mono.representatives, count);
            });
        }
    }

    #[test]
    fn readers_writers_matches_the_oracle() {
        let model = parse_model(&rw_src(2, 2)).unwrap();
        with_ctx(&model, |ctx| {
            let expected = oracle_representatives(&model, ctx);
            let opts = ReachOptions::default();
            let mono = reach_monolithic(ctx, &opts).unwrap();
            let comp = reach_componentwise(ctx, &opts).unwrap();
            let comp_ss =
                reach_componentwise(ctx, &ReachOptions { state_symmetries: true, ..opts })
                    .unwrap();
            assert_eq!(mono.reached, expected);
            assert_eq!(comp.reached, expected);
            assert_eq!(comp_ss.reached, expected);
        });
    }

    #[test]
    fn reached_sets_stay_inside_the_representative_set() {
        let model = parse_model(&mutex_src(4)).unwrap();
        with_ctx(&model, |ctx| {
            let reps = ctx.representative_set().unwrap();
            let opts = ReachOptions::default();
            for result in [
                reach_monolithic(ctx, &opts).unwrap(),
                reach_componentwise(ctx, &opts).unwrap(),
            ] {
                let escape = ctx.manager().diff(&result.reached, &reps).unwrap();
                assert!(escape.is_false());
            }
        });
    }

    #[test]
    fn filter_traces_the_neighbor_rule() {
        let model = parse_model(&mutex_src(3)).unwrap();
        with_ctx(&model, |ctx| {
            let m = ctx.manager();
            let cube = |locals: [u8; 3], tok: u32| {
                ctx.sym
                    .state_cube(&ExplicitState {
                        globals: vec![tok],
                        locals: vec![locals.to_vec()],
                    })
                    .unwrap()
            };
            // instances 0 and 1 both in T, token elsewhere: filtered after
            // exploring instance 1
            let removable = cube([1, 1, 0], 3);
            // token pinned to one of the pair: kept
            let pinned = cube([1, 1, 0], 1);
            // different locals: kept
            let uneven = cube([0, 1, 0], 3);
            let mut seed = m.or(&removable, &pinned).unwrap();
            seed = m.or(&seed, &uneven).unwrap();
            let mut frontier = vec![vec![seed.clone(), seed.clone(), seed.clone()]];
            state_symmetry_filter(ctx, &mut frontier, 0, 1).unwrap();
            assert_eq!(frontier[0][1], seed);
            assert_eq!(frontier[0][2], seed);
            let kept = frontier[0][0].clone();
            assert!(m.and(&kept, &removable).unwrap().is_false());
            assert!(!m.and(&kept, &pinned).unwrap().is_false());
            assert!(!m.and(&kept, &uneven).unwrap().is_false());
        });
    }

    #[test]
    fn invariant_verdicts() {
        let model = parse_model(&mutex_src(3)).unwrap();
        with_ctx(&model, |ctx| {
            let m = ctx.manager();
            let result = reach_componentwise(ctx, &ReachOptions::default()).unwrap();
            let bad = ctx.sym.build_predicate(&model.properties[0].bad).unwrap();
            assert_eq!(check_invariant(&ctx.sym, &result.reached, &bad).unwrap(), Verdict::Holds);
            let all_bad = m.constant(true);
            match check_invariant(&ctx.sym, &result.reached, &all_bad).unwrap() {
                Verdict::Violated(w) => {
                    let cube = ctx.sym.state_cube(&w).unwrap();
                    assert!(!m.and(&result.reached, &cube).unwrap().is_false());
                }
                Verdict::Holds => panic!("bad = true must be violated"),
            }
        });
    }

    #[test]
    fn broken_mutant_is_caught() {
        // enter guard removed: two processes can sit in C together
        let src = "model broken\n\
                   type Proc count 3 locals N T C init N\n\
                   global tok idsensitive Proc init any\n\
                   command Proc try from N to T\n\
                   command Proc enter from T to C\n\
                   command Proc leave from C to N update tok := any\n\
                   property mutex_safe bad count(Proc, C) >= 2\n";
        let model = parse_model(src).unwrap();
        with_ctx(&model, |ctx| {
            let result = reach_componentwise(ctx, &ReachOptions::default()).unwrap();
            let bad = ctx.sym.build_predicate(&model.properties[0].bad).unwrap();
            match check_invariant(&ctx.sym, &result.reached, &bad).unwrap() {
                Verdict::Violated(w) => {
                    let in_c = w.locals[0].iter().filter(|&&l| l == 2).count();
                    assert!(in_c >= 2, "witness {w:?}");
                }
                Verdict::Holds => panic!("mutant must violate"),
            }
        });
    }

    #[test]
    fn limits_abort_with_exhaustion() {
        let model = parse_model(&mutex_src(4)).unwrap();
        with_ctx(&model, |ctx| {
            let opts = ReachOptions { node_cap: Some(1), ..Default::default() };
            assert!(matches!(
                reach_componentwise(ctx, &opts),
                Err(ReachError::Exhausted("node cap"))
            ));
            let opts = ReachOptions { time_limit: Some(Duration::ZERO), ..Default::default() };
            assert!(matches!(
                reach_monolithic(ctx, &opts),
                Err(ReachError::Exhausted("time limit"))
            ));
        });
    }
}
