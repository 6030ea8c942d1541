//! Built-in benchmark generators, parameterized by component counts.

use crate::model::{
    Cmp, ComponentType, GlobalKind, GlobalVar, GuardAtom, GuardedCommand, InitValue, Model,
    PropExpr, SafetyProperty, UpdateValue,
};

/// A benchmark family plus its size parameters, as given on the command
/// line (`mutex:5`, `rw:2,3`; a single readers-writers parameter `rw:k`
/// means k readers and k writers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchSpec {
    Mutex { n: usize },
    ReadersWriters { r: usize, w: usize },
}

impl BenchSpec {
    pub fn parse(s: &str) -> Option<BenchSpec> {
        let (family, sizes) = s.split_once(':')?;
        let parts: Vec<usize> = sizes
            .split(',')
            .map(|p| p.trim().parse().ok())
            .collect::<Option<_>>()?;
        if parts.iter().any(|&p| p == 0) {
            return None;
        }
        match (family, parts.as_slice()) {
            ("mutex", [n]) => Some(BenchSpec::Mutex { n: *n }),
            ("rw" | "readers_writers", [k]) => Some(BenchSpec::ReadersWriters { r: *k, w: *k }),
            ("rw" | "readers_writers", [r, w]) => Some(BenchSpec::ReadersWriters { r: *r, w: *w }),
            _ => None,
        }
    }

    pub fn generate(self) -> Model {
        match self {
            BenchSpec::Mutex { n } => gen_mutex(n),
            BenchSpec::ReadersWriters { r, w } => gen_readers_writers(r, w),
        }
    }
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Token-based mutual exclusion: each process cycles N -> T -> C -> N,
/// entry into C is guarded by holding the id-sensitive token.
pub fn gen_mutex(n: usize) -> Model {
    assert!(n >= 1);
    Model {
        name: "mutex".into(),
        types: vec![ComponentType {
            name: "Proc".into(),
            count: n,
            locals: strings(&["N", "T", "C"]),
            init: 0,
        }],
        globals: vec![GlobalVar {
            name: "tok".into(),
            kind: GlobalKind::IdSensitive { target: 0 },
            init: InitValue::Any,
        }],
        commands: vec![
            GuardedCommand {
                type_idx: 0,
                label: "try".into(),
                from: 0,
                to: 1,
                guard: vec![],
                updates: vec![],
            },
            GuardedCommand {
                type_idx: 0,
                label: "enter".into(),
                from: 1,
                to: 2,
                guard: vec![GuardAtom::GlobalEqSelf { var: 0 }],
                updates: vec![],
            },
            GuardedCommand {
                type_idx: 0,
                label: "leave".into(),
                from: 2,
                to: 0,
                guard: vec![],
                updates: vec![crate::model::GlobalUpdate { var: 0, value: UpdateValue::Any }],
            },
        ],
        properties: vec![SafetyProperty {
            name: "mutex_safe".into(),
            bad: PropExpr::Count { type_idx: 0, local: 2, cmp: Cmp::Ge, bound: 2 },
        }],
    }
}

/// Readers-writers: readers may read while no writer writes; a writer may
/// write only while nothing else reads or writes.
pub fn gen_readers_writers(r: usize, w: usize) -> Model {
    assert!(r >= 1 && w >= 1);
    let reading = PropExpr::Count { type_idx: 0, local: 2, cmp: Cmp::Ge, bound: 1 };
    let writing = PropExpr::Count { type_idx: 1, local: 2, cmp: Cmp::Ge, bound: 1 };
    let two_writing = PropExpr::Count { type_idx: 1, local: 2, cmp: Cmp::Ge, bound: 2 };
    let cmd = |type_idx, label: &str, from, to, guard| GuardedCommand {
        type_idx,
        label: label.into(),
        from,
        to,
        guard,
        updates: vec![],
    };
    Model {
        name: "readers_writers".into(),
        types: vec![
            ComponentType {
                name: "Reader".into(),
                count: r,
                locals: strings(&["idle", "trying", "reading"]),
                init: 0,
            },
            ComponentType {
                name: "Writer".into(),
                count: w,
                locals: strings(&["idle", "trying", "writing"]),
                init: 0,
            },
        ],
        globals: vec![],
        commands: vec![
            cmd(0, "r_try", 0, 1, vec![]),
            cmd(
                0,
                "r_read",
                1,
                2,
                vec![GuardAtom::Count {
                    type_idx: 1,
                    local: 2,
                    cmp: Cmp::Eq,
                    bound: 0,
                    others: false,
                }],
            ),
            cmd(0, "r_done", 2, 0, vec![]),
            cmd(1, "w_try", 0, 1, vec![]),
            cmd(
                1,
                "w_write",
                1,
                2,
                vec![
                    GuardAtom::Count {
                        type_idx: 0,
                        local: 2,
                        cmp: Cmp::Eq,
                        bound: 0,
                        others: false,
                    },
                    GuardAtom::Count {
                        type_idx: 1,
                        local: 2,
                        cmp: Cmp::Eq,
                        bound: 0,
                        others: true,
                    },
                ],
            ),
            cmd(1, "w_done", 2, 0, vec![]),
        ],
        properties: vec![SafetyProperty {
            name: "exclusion".into(),
            bad: PropExpr::And(vec![
                writing.clone(),
                PropExpr::Or(vec![reading, two_writing]),
            ]),
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{encode_layout, parse_model, print_model, DEFAULT_BIT_CAP};

    #[test]
    fn generated_models_round_trip_through_the_printer() {
        for model in [gen_mutex(3), gen_mutex(1), gen_readers_writers(2, 2)] {
            let text = print_model(&model);
            let reparsed = parse_model(&text).unwrap();
            assert_eq!(reparsed, model);
        }
    }

    proptest::proptest! {
        #[test]
        fn round_trip_holds_for_all_sizes(n in 1usize..40, r in 1usize..12, w in 1usize..12) {
            for model in [gen_mutex(n), gen_readers_writers(r, w)] {
                let reparsed = parse_model(&print_model(&model)).unwrap();
                proptest::prop_assert_eq!(reparsed, model);
            }
        }
    }

    #[test]
    fn mutex_layout_is_compact() {
        let model = gen_mutex(3);
        let layout = encode_layout(&model, DEFAULT_BIT_CAP).unwrap();
        // 2 token bits + 3 instances x 2 local bits
        assert_eq!(layout.current_vars.len(), 8);
        let single = encode_layout(&gen_mutex(1), DEFAULT_BIT_CAP).unwrap();
        assert_eq!(single.current_vars.len(), 2);
    }

    #[test]
    fn spec_strings_parse() {
        assert_eq!(BenchSpec::parse("mutex:5"), Some(BenchSpec::Mutex { n: 5 }));
        assert_eq!(
            BenchSpec::parse("rw:3"),
            Some(BenchSpec::ReadersWriters { r: 3, w: 3 })
        );
        assert_eq!(
            BenchSpec::parse("readers_writers:2,4"),
            Some(BenchSpec::ReadersWriters { r: 2, w: 4 })
        );
        assert_eq!(BenchSpec::parse("mutex:0"), None);
        assert_eq!(BenchSpec::parse("mutex"), None);
        assert_eq!(BenchSpec::parse("peterson:2"), None);
        assert_eq!(BenchSpec::parse("mutex:1,2"), None);
    }

    #[test]
    fn generators_match_the_handwritten_sources() {
        let mutex = "\
model mutex
type Proc count 4 locals N T C init N
global tok idsensitive Proc init any
command Proc try from N to T
command Proc enter from T to C guard tok == self
command Proc leave from C to N update tok := any
property mutex_safe bad count(Proc, C) >= 2
";
        assert_eq!(gen_mutex(4), parse_model(mutex).unwrap());
        let rw = "\
model readers_writers
type Reader count 2 locals idle trying reading init idle
type Writer count 3 locals idle trying writing init idle
command Reader r_try from idle to trying
command Reader r_read from trying to reading guard count(Writer, writing) == 0
command Reader r_done from reading to idle
command Writer w_try from idle to trying
command Writer w_write from trying to writing guard count(Reader, reading) == 0 && count_others(Writer, writing) == 0
command Writer w_done from writing to idle
property exclusion bad count(Writer, writing) >= 1 && (count(Reader, reading) >= 1 || count(Writer, writing) >= 2)
";
        assert_eq!(gen_readers_writers(2, 3), parse_model(rw).unwrap());
    }
}
