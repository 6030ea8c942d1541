//! Reduced ordered binary decision diagrams with a hash-consed unique table,
//! a bounded operation cache and reference-counted garbage collection.
//!
//! A [`Manager`] owns the node store for a fixed set of variables (the
//! variable order is the index order, index 0 topmost). [`Dd`] handles are
//! cheap clonable references to rooted diagrams; dropping a handle releases
//! its root reference. Canonicity guarantees that two handles of the same
//! manager denote the same boolean function iff they are identical.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BddError {
    #[error("variable index {index} out of range (manager has {num_vars} variables)")]
    VarOutOfRange { index: u32, num_vars: u32 },
    #[error("operands belong to different managers")]
    CrossManager,
    #[error("permutation mapping is not a bijection on its domain")]
    NotBijective,
    #[error("function depends on variable {0} outside the counting set")]
    SupportEscapes(u32),
    #[error("state count exceeds u128 range")]
    CountOverflow,
    #[error("solution enumeration exceeds the limit of {0}")]
    TooManySolutions(usize),
}

type NodeId = u32;

const FALSE_ID: NodeId = 0;
const TRUE_ID: NodeId = 1;
const TERMINAL_LEVEL: u32 = u32::MAX;
const FREE_LEVEL: u32 = u32::MAX - 1;

/// Binary boolean connectives; `Diff` is `a && !b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
    Xor,
    Diff,
}

const OP_AND: u8 = 0;
const OP_OR: u8 = 1;
const OP_XOR: u8 = 2;
const OP_DIFF: u8 = 3;
const OP_NOT: u8 = 4;
const OP_EXISTS: u8 = 5;
const OP_ANDEX: u8 = 6;
const OP_ITE: u8 = 7;
const OP_RESTRICT: u8 = 8;
const OP_PERMUTE: u8 = 9;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    op: u8,
    a: NodeId,
    b: NodeId,
    c: NodeId,
}

struct Node {
    level: u32,
    low: NodeId,
    high: NodeId,
    rc: u32,
}

struct Inner {
    num_vars: u32,
    nodes: Vec<Node>,
    unique: HashMap<(u32, NodeId, NodeId), NodeId>,
    free: Vec<NodeId>,
    cache: HashMap<CacheKey, NodeId>,
    cache_limit: usize,
    perms: Vec<Vec<u32>>,
    perm_ids: HashMap<Vec<u32>, u32>,
    live: usize,
    peak_live: usize,
    dead: usize,
}

impl Inner {
    fn new(num_vars: u32) -> Self {
        let nodes = vec![
            Node { level: TERMINAL_LEVEL, low: FALSE_ID, high: FALSE_ID, rc: 1 },
            Node { level: TERMINAL_LEVEL, low: TRUE_ID, high: TRUE_ID, rc: 1 },
        ];
        Inner {
            num_vars,
            nodes,
            unique: HashMap::new(),
            free: Vec::new(),
            cache: HashMap::new(),
            cache_limit: 1 << 20,
            perms: Vec::new(),
            perm_ids: HashMap::new(),
            live: 2,
            peak_live: 2,
            dead: 0,
        }
    }

    fn level(&self, n: NodeId) -> u32 {
        self.nodes[n as usize].level
    }
    fn low(&self, n: NodeId) -> NodeId {
        self.nodes[n as usize].low
    }
    fn high(&self, n: NodeId) -> NodeId {
        self.nodes[n as usize].high
    }

    /// Takes an additional root reference; resurrects dead nodes.
    fn inc_ref(&mut self, n: NodeId) {
        if n <= TRUE_ID {
            return;
        }
        let node = &mut self.nodes[n as usize];
        node.rc += 1;
        if node.rc == 1 {
            self.live += 1;
            self.dead -= 1;
            if self.live > self.peak_live {
                self.peak_live = self.live;
            }
            let (low, high) = (node.low, node.high);
            self.inc_ref(low);
            self.inc_ref(high);
        }
    }

    fn dec_ref(&mut self, n: NodeId) {
        if n <= TRUE_ID {
            return;
        }
        let node = &mut self.nodes[n as usize];
        debug_assert!(node.rc > 0, "unbalanced dec_ref");
        node.rc -= 1;
        if node.rc == 0 {
            self.live -= 1;
            self.dead += 1;
            let (low, high) = (node.low, node.high);
            self.dec_ref(low);
            self.dec_ref(high);
        }
    }

    /// Hash-consed node constructor. Consumes one reference each on `low`
    /// and `high` and returns an owned reference to the result.
    fn mk(&mut self, level: u32, low: NodeId, high: NodeId) -> NodeId {
        if low == high {
            self.dec_ref(high);
            return low;
        }
        if let Some(&n) = self.unique.get(&(level, low, high)) {
            self.inc_ref(n);
            self.dec_ref(low);
            self.dec_ref(high);
            return n;
        }
        if self.dead > 100_000 && self.dead > self.live {
            self.gc();
        }
        let id = match self.free.pop() {
            Some(slot) => {
                self.nodes[slot as usize] = Node { level, low, high, rc: 1 };
                slot
            }
            None => {
                let id = self.nodes.len() as NodeId;
                self.nodes.push(Node { level, low, high, rc: 1 });
                id
            }
        };
        self.unique.insert((level, low, high), id);
        self.live += 1;
        if self.live > self.peak_live {
            self.peak_live = self.live;
        }
        id
    }

    /// Reclaims dead nodes and drops the operation cache. Safe to run at any
    /// point where every needed node is transitively pinned by a reference.
    fn gc(&mut self) {
        self.cache.clear();
        for id in 2..self.nodes.len() as NodeId {
            let node = &self.nodes[id as usize];
            if node.level != FREE_LEVEL && node.rc == 0 {
                self.unique.remove(&(node.level, node.low, node.high));
                self.nodes[id as usize].level = FREE_LEVEL;
                self.free.push(id);
            }
        }
        self.dead = 0;
    }

    fn cache_get(&mut self, key: CacheKey) -> Option<NodeId> {
        let r = self.cache.get(&key).copied()?;
        self.inc_ref(r);
        Some(r)
    }

    fn cache_put(&mut self, key: CacheKey, result: NodeId) {
        if self.cache.len() >= self.cache_limit {
            self.cache.clear();
        }
        self.cache.insert(key, result);
    }

    fn owned(&mut self, n: NodeId) -> NodeId {
        self.inc_ref(n);
        n
    }

    fn cofactors(&self, n: NodeId, level: u32) -> (NodeId, NodeId) {
        if self.level(n) == level {
            (self.low(n), self.high(n))
        } else {
            (n, n)
        }
    }

    fn not_rec(&mut self, a: NodeId) -> NodeId {
        if a == FALSE_ID {
            return TRUE_ID;
        }
        if a == TRUE_ID {
            return FALSE_ID;
        }
        let key = CacheKey { op: OP_NOT, a, b: 0, c: 0 };
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let (level, low, high) = {
            let n = &self.nodes[a as usize];
            (n.level, n.low, n.high)
        };
        let r0 = self.not_rec(low);
        let r1 = self.not_rec(high);
        let r = self.mk(level, r0, r1);
        self.cache_put(key, r);
        r
    }

    fn apply_terminal(&mut self, op: u8, a: NodeId, b: NodeId) -> Option<NodeId> {
        match op {
            OP_AND => {
                if a == FALSE_ID || b == FALSE_ID {
                    Some(FALSE_ID)
                } else if a == TRUE_ID || a == b {
                    Some(self.owned(b))
                } else if b == TRUE_ID {
                    Some(self.owned(a))
                } else {
                    None
                }
            }
            OP_OR => {
                if a == TRUE_ID || b == TRUE_ID {
                    Some(TRUE_ID)
                } else if a == FALSE_ID || a == b {
                    Some(self.owned(b))
                } else if b == FALSE_ID {
                    Some(self.owned(a))
                } else {
                    None
                }
            }
            OP_XOR => {
                if a == b {
                    Some(FALSE_ID)
                } else if a == FALSE_ID {
                    Some(self.owned(b))
                } else if b == FALSE_ID {
                    Some(self.owned(a))
                } else if a == TRUE_ID {
                    Some(self.not_rec(b))
                } else if b == TRUE_ID {
                    Some(self.not_rec(a))
                } else {
                    None
                }
            }
            OP_DIFF => {
                if a == FALSE_ID || b == TRUE_ID || a == b {
                    Some(FALSE_ID)
                } else if b == FALSE_ID {
                    Some(self.owned(a))
                } else if a == TRUE_ID {
                    Some(self.not_rec(b))
                } else {
                    None
                }
            }
            _ => unreachable!(),
        }
    }

    fn apply_rec(&mut self, op: u8, a: NodeId, b: NodeId) -> NodeId {
        if let Some(r) = self.apply_terminal(op, a, b) {
            return r;
        }
        // and/or/xor are commutative; normalize for cache hits.
        let (a, b) = if op != OP_DIFF && a > b { (b, a) } else { (a, b) };
        let key = CacheKey { op, a, b, c: 0 };
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let level = self.level(a).min(self.level(b));
        let (a0, a1) = self.cofactors(a, level);
        let (b0, b1) = self.cofactors(b, level);
        let r0 = self.apply_rec(op, a0, b0);
        let r1 = self.apply_rec(op, a1, b1);
        let r = self.mk(level, r0, r1);
        self.cache_put(key, r);
        r
    }

    fn ite_rec(&mut self, f: NodeId, g: NodeId, h: NodeId) -> NodeId {
        if f == TRUE_ID {
            return self.owned(g);
        }
        if f == FALSE_ID {
            return self.owned(h);
        }
        if g == h {
            return self.owned(g);
        }
        if g == TRUE_ID && h == FALSE_ID {
            return self.owned(f);
        }
        if g == FALSE_ID && h == TRUE_ID {
            return self.not_rec(f);
        }
        let key = CacheKey { op: OP_ITE, a: f, b: g, c: h };
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let level = self.level(f).min(self.level(g)).min(self.level(h));
        let (f0, f1) = self.cofactors(f, level);
        let (g0, g1) = self.cofactors(g, level);
        let (h0, h1) = self.cofactors(h, level);
        let r0 = self.ite_rec(f0, g0, h0);
        let r1 = self.ite_rec(f1, g1, h1);
        let r = self.mk(level, r0, r1);
        self.cache_put(key, r);
        r
    }

    /// `cube` is a chain of positive literals (low edges to false).
    fn exists_rec(&mut self, a: NodeId, mut cube: NodeId) -> NodeId {
        if a <= TRUE_ID || cube == TRUE_ID {
            return self.owned(a);
        }
        while cube != TRUE_ID && self.level(cube) < self.level(a) {
            cube = self.high(cube);
        }
        if cube == TRUE_ID {
            return self.owned(a);
        }
        let key = CacheKey { op: OP_EXISTS, a, b: cube, c: 0 };
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let level = self.level(a);
        let (low, high) = (self.low(a), self.high(a));
        let r = if level == self.level(cube) {
            let rest = self.high(cube);
            let r0 = self.exists_rec(low, rest);
            if r0 == TRUE_ID {
                TRUE_ID
            } else {
                let r1 = self.exists_rec(high, rest);
                let r = self.apply_rec(OP_OR, r0, r1);
                self.dec_ref(r0);
                self.dec_ref(r1);
                r
            }
        } else {
            let r0 = self.exists_rec(low, cube);
            let r1 = self.exists_rec(high, cube);
            self.mk(level, r0, r1)
        };
        self.cache_put(key, r);
        r
    }

    fn and_exists_rec(&mut self, a: NodeId, b: NodeId, mut cube: NodeId) -> NodeId {
        if a == FALSE_ID || b == FALSE_ID {
            return FALSE_ID;
        }
        if cube == TRUE_ID {
            return self.apply_rec(OP_AND, a, b);
        }
        if a == TRUE_ID && b == TRUE_ID {
            return TRUE_ID;
        }
        if a == TRUE_ID || a == b {
            return self.exists_rec(b, cube);
        }
        if b == TRUE_ID {
            return self.exists_rec(a, cube);
        }
        let (a, b) = if a > b { (b, a) } else { (a, b) };
        let level = self.level(a).min(self.level(b));
        while cube != TRUE_ID && self.level(cube) < level {
            cube = self.high(cube);
        }
        if cube == TRUE_ID {
            return self.apply_rec(OP_AND, a, b);
        }
        let key = CacheKey { op: OP_ANDEX, a, b, c: cube };
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let (a0, a1) = self.cofactors(a, level);
        let (b0, b1) = self.cofactors(b, level);
        let r = if level == self.level(cube) {
            let rest = self.high(cube);
            let r0 = self.and_exists_rec(a0, b0, rest);
            if r0 == TRUE_ID {
                TRUE_ID
            } else {
                let r1 = self.and_exists_rec(a1, b1, rest);
                let r = self.apply_rec(OP_OR, r0, r1);
                self.dec_ref(r0);
                self.dec_ref(r1);
                r
            }
        } else {
            let r0 = self.and_exists_rec(a0, b0, cube);
            let r1 = self.and_exists_rec(a1, b1, cube);
            self.mk(level, r0, r1)
        };
        self.cache_put(key, r);
        r
    }

    /// `cube` is a chain of literals of either polarity (conjunction).
    fn restrict_rec(&mut self, a: NodeId, mut cube: NodeId) -> NodeId {
        if a <= TRUE_ID {
            return self.owned(a);
        }
        while cube != TRUE_ID && self.level(cube) < self.level(a) {
            cube = if self.low(cube) == FALSE_ID { self.high(cube) } else { self.low(cube) };
        }
        if cube == TRUE_ID {
            return self.owned(a);
        }
        let key = CacheKey { op: OP_RESTRICT, a, b: cube, c: 0 };
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let level = self.level(a);
        let r = if level == self.level(cube) {
            let (child, rest) = if self.low(cube) == FALSE_ID {
                (self.high(a), self.high(cube))
            } else {
                (self.low(a), self.low(cube))
            };
            self.restrict_rec(child, rest)
        } else {
            let r0 = self.restrict_rec(self.low(a), cube);
            let r1 = self.restrict_rec(self.high(a), cube);
            self.mk(level, r0, r1)
        };
        self.cache_put(key, r);
        r
    }

    fn permute_rec(&mut self, a: NodeId, perm_id: u32) -> NodeId {
        if a <= TRUE_ID {
            return self.owned(a);
        }
        let key = CacheKey { op: OP_PERMUTE, a, b: 0, c: perm_id };
        if let Some(r) = self.cache_get(key) {
            return r;
        }
        let (level, low, high) = {
            let n = &self.nodes[a as usize];
            (n.level, n.low, n.high)
        };
        let r0 = self.permute_rec(low, perm_id);
        let r1 = self.permute_rec(high, perm_id);
        let target = self.perms[perm_id as usize][level as usize];
        let v = self.mk(target, FALSE_ID, TRUE_ID);
        let r = self.ite_rec(v, r1, r0);
        self.dec_ref(v);
        self.dec_ref(r0);
        self.dec_ref(r1);
        self.cache_put(key, r);
        r
    }

    /// Builds a positive-literal cube from a sorted, deduplicated var list.
    fn var_cube(&mut self, vars: &[u32]) -> NodeId {
        let mut cube = TRUE_ID;
        for &v in vars.iter().rev() {
            cube = self.mk(v, FALSE_ID, cube);
        }
        cube
    }

    fn literal_cube(&mut self, lits: &[(u32, bool)]) -> NodeId {
        let mut sorted = lits.to_vec();
        sorted.sort_by_key(|&(v, _)| v);
        let mut cube = TRUE_ID;
        for &(v, positive) in sorted.iter().rev() {
            cube = if positive { self.mk(v, FALSE_ID, cube) } else { self.mk(v, cube, FALSE_ID) };
        }
        cube
    }

    fn support_into(&self, n: NodeId, seen: &mut HashMap<NodeId, ()>, out: &mut Vec<u32>) {
        if n <= TRUE_ID || seen.insert(n, ()).is_some() {
            return;
        }
        let node = &self.nodes[n as usize];
        out.push(node.level);
        self.support_into(node.low, seen, out);
        self.support_into(node.high, seen, out);
    }

    fn count_rec(
        &self,
        n: NodeId,
        vars: &[u32],
        memo: &mut HashMap<NodeId, u128>,
    ) -> Result<u128, BddError> {
        if n == FALSE_ID {
            return Ok(0);
        }
        if n == TRUE_ID {
            return Ok(1);
        }
        if let Some(&c) = memo.get(&n) {
            return Ok(c);
        }
        let node = &self.nodes[n as usize];
        let rank = |level: u32| -> usize {
            if level == TERMINAL_LEVEL {
                vars.len()
            } else {
                vars.binary_search(&level).expect("support checked against vars")
            }
        };
        let here = rank(node.level);
        let mut total: u128 = 0;
        for child in [node.low, node.high] {
            let sub = self.count_rec(child, vars, memo)?;
            let gap = (rank(self.level(child)) - here - 1) as u32;
            let weighted = shl_checked(sub, gap)?;
            total = total.checked_add(weighted).ok_or(BddError::CountOverflow)?;
        }
        memo.insert(n, total);
        Ok(total)
    }
}

fn shl_checked(value: u128, shift: u32) -> Result<u128, BddError> {
    if value == 0 {
        return Ok(0);
    }
    if shift > value.leading_zeros() {
        return Err(BddError::CountOverflow);
    }
    Ok(value << shift)
}

/// Rebuilds the diagram rooted at `n` inside `dst`, returning an owned
/// reference. Both ends follow the same variable order, so a straight
/// bottom-up copy preserves canonicity.
fn transfer_rec(
    src: &Inner,
    dst: &mut Inner,
    n: NodeId,
    memo: &mut HashMap<NodeId, NodeId>,
) -> NodeId {
    if n <= TRUE_ID {
        return n;
    }
    if let Some(&m) = memo.get(&n) {
        dst.inc_ref(m);
        return m;
    }
    let low = transfer_rec(src, dst, src.low(n), memo);
    let high = transfer_rec(src, dst, src.high(n), memo);
    let m = dst.mk(src.level(n), low, high);
    memo.insert(n, m);
    m
}

/// A BDD node store over a fixed variable set. Single-threaded by design.
pub struct Manager {
    inner: Rc<RefCell<Inner>>,
}

/// Handle to a rooted diagram inside one [`Manager`].
pub struct Dd {
    mgr: Rc<RefCell<Inner>>,
    id: NodeId,
}

impl Clone for Dd {
    fn clone(&self) -> Self {
        self.mgr.borrow_mut().inc_ref(self.id);
        Dd { mgr: self.mgr.clone(), id: self.id }
    }
}

impl Drop for Dd {
    fn drop(&mut self) {
        self.mgr.borrow_mut().dec_ref(self.id);
    }
}

impl PartialEq for Dd {
    fn eq(&self, other: &Self) -> bool {
        Rc::ptr_eq(&self.mgr, &other.mgr) && self.id == other.id
    }
}
impl Eq for Dd {}

impl std::fmt::Debug for Dd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Dd({})", self.id)
    }
}

impl Dd {
    pub fn is_false(&self) -> bool {
        self.id == FALSE_ID
    }
    pub fn is_true(&self) -> bool {
        self.id == TRUE_ID
    }
}

impl Manager {
    pub fn new(num_vars: u32) -> Manager {
        Manager { inner: Rc::new(RefCell::new(Inner::new(num_vars))) }
    }

    pub fn num_vars(&self) -> u32 {
        self.inner.borrow().num_vars
    }

    fn wrap(&self, id: NodeId) -> Dd {
        Dd { mgr: self.inner.clone(), id }
    }

    fn check_owner(&self, d: &Dd) -> Result<(), BddError> {
        if Rc::ptr_eq(&self.inner, &d.mgr) {
            Ok(())
        } else {
            Err(BddError::CrossManager)
        }
    }

    fn check_var(&self, index: u32) -> Result<(), BddError> {
        let num_vars = self.inner.borrow().num_vars;
        if index < num_vars {
            Ok(())
        } else {
            Err(BddError::VarOutOfRange { index, num_vars })
        }
    }

    pub fn constant(&self, value: bool) -> Dd {
        self.wrap(if value { TRUE_ID } else { FALSE_ID })
    }

    pub fn var(&self, index: u32) -> Result<Dd, BddError> {
        self.check_var(index)?;
        let id = self.inner.borrow_mut().mk(index, FALSE_ID, TRUE_ID);
        Ok(self.wrap(id))
    }

    pub fn nvar(&self, index: u32) -> Result<Dd, BddError> {
        self.check_var(index)?;
        let id = self.inner.borrow_mut().mk(index, TRUE_ID, FALSE_ID);
        Ok(self.wrap(id))
    }

    pub fn apply(&self, op: BoolOp, a: &Dd, b: &Dd) -> Result<Dd, BddError> {
        self.check_owner(a)?;
        self.check_owner(b)?;
        let op = match op {
            BoolOp::And => OP_AND,
            BoolOp::Or => OP_OR,
            BoolOp::Xor => OP_XOR,
            BoolOp::Diff => OP_DIFF,
        };
        let id = self.inner.borrow_mut().apply_rec(op, a.id, b.id);
        Ok(self.wrap(id))
    }

    pub fn and(&self, a: &Dd, b: &Dd) -> Result<Dd, BddError> {
        self.apply(BoolOp::And, a, b)
    }
    pub fn or(&self, a: &Dd, b: &Dd) -> Result<Dd, BddError> {
        self.apply(BoolOp::Or, a, b)
    }
    pub fn xor(&self, a: &Dd, b: &Dd) -> Result<Dd, BddError> {
        self.apply(BoolOp::Xor, a, b)
    }
    pub fn diff(&self, a: &Dd, b: &Dd) -> Result<Dd, BddError> {
        self.apply(BoolOp::Diff, a, b)
    }

    pub fn not(&self, a: &Dd) -> Result<Dd, BddError> {
        self.check_owner(a)?;
        let id = self.inner.borrow_mut().not_rec(a.id);
        Ok(self.wrap(id))
    }

    pub fn ite(&self, f: &Dd, g: &Dd, h: &Dd) -> Result<Dd, BddError> {
        self.check_owner(f)?;
        self.check_owner(g)?;
        self.check_owner(h)?;
        let id = self.inner.borrow_mut().ite_rec(f.id, g.id, h.id);
        Ok(self.wrap(id))
    }

    /// Existential quantification over `vars`.
    pub fn exists(&self, a: &Dd, vars: &[u32]) -> Result<Dd, BddError> {
        self.check_owner(a)?;
        let vars = self.sorted_vars(vars)?;
        let mut inner = self.inner.borrow_mut();
        let cube = inner.var_cube(&vars);
        let id = inner.exists_rec(a.id, cube);
        inner.dec_ref(cube);
        drop(inner);
        Ok(self.wrap(id))
    }

    /// One-pass relational product: `exists(a && b, vars)`.
    pub fn and_exists(&self, a: &Dd, b: &Dd, vars: &[u32]) -> Result<Dd, BddError> {
        self.check_owner(a)?;
        self.check_owner(b)?;
        let vars = self.sorted_vars(vars)?;
        let mut inner = self.inner.borrow_mut();
        let cube = inner.var_cube(&vars);
        let id = inner.and_exists_rec(a.id, b.id, cube);
        inner.dec_ref(cube);
        drop(inner);
        Ok(self.wrap(id))
    }

    /// Renames variables through `mapping`, a bijection on a variable
    /// subset given as `(from, to)` pairs.
    pub fn permute(&self, a: &Dd, mapping: &[(u32, u32)]) -> Result<Dd, BddError> {
        self.check_owner(a)?;
        let perm_id = self.intern_permutation(mapping)?;
        let id = self.inner.borrow_mut().permute_rec(a.id, perm_id);
        Ok(self.wrap(id))
    }

    /// Copies a diagram from another manager with the same (or narrower)
    /// variable range into this one.
    pub fn transfer(&self, a: &Dd) -> Result<Dd, BddError> {
        if Rc::ptr_eq(&self.inner, &a.mgr) {
            return Ok(a.clone());
        }
        let src = a.mgr.borrow();
        let mut dst = self.inner.borrow_mut();
        if src.num_vars > dst.num_vars {
            return Err(BddError::VarOutOfRange {
                index: src.num_vars - 1,
                num_vars: dst.num_vars,
            });
        }
        let mut memo: HashMap<NodeId, NodeId> = HashMap::new();
        let id = transfer_rec(&src, &mut dst, a.id, &mut memo);
        drop(dst);
        drop(src);
        Ok(self.wrap(id))
    }

    /// Cofactor by a partial assignment.
    pub fn restrict(&self, a: &Dd, assignment: &[(u32, bool)]) -> Result<Dd, BddError> {
        self.check_owner(a)?;
        for &(v, _) in assignment {
            self.check_var(v)?;
        }
        let mut inner = self.inner.borrow_mut();
        let cube = inner.literal_cube(assignment);
        let id = inner.restrict_rec(a.id, cube);
        inner.dec_ref(cube);
        drop(inner);
        Ok(self.wrap(id))
    }

    /// Conjunction of literals as a diagram.
    pub fn cube(&self, assignment: &[(u32, bool)]) -> Result<Dd, BddError> {
        for &(v, _) in assignment {
            self.check_var(v)?;
        }
        let id = self.inner.borrow_mut().literal_cube(assignment);
        Ok(self.wrap(id))
    }

    /// Number of satisfying assignments over exactly `vars`; the support of
    /// `a` must be contained in `vars`.
    pub fn count_states(&self, a: &Dd, vars: &[u32]) -> Result<u128, BddError> {
        self.check_owner(a)?;
        let vars = self.sorted_vars(vars)?;
        for v in self.support(a) {
            if vars.binary_search(&v).is_err() {
                return Err(BddError::SupportEscapes(v));
            }
        }
        let inner = self.inner.borrow();
        let mut memo = HashMap::new();
        let sub = inner.count_rec(a.id, &vars, &mut memo)?;
        let head = if a.id <= TRUE_ID {
            if a.id == TRUE_ID {
                vars.len()
            } else {
                0
            }
        } else {
            vars.binary_search(&inner.level(a.id)).expect("root in vars")
        } as u32;
        shl_checked(sub, head)
    }

    /// Sorted list of variables `a` depends on.
    pub fn support(&self, a: &Dd) -> Vec<u32> {
        let inner = self.inner.borrow();
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        inner.support_into(a.id, &mut seen, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Evaluates `a` under a total assignment indexed by variable.
    pub fn eval(&self, a: &Dd, assignment: &[bool]) -> bool {
        let inner = self.inner.borrow();
        let mut n = a.id;
        while n > TRUE_ID {
            let node = &inner.nodes[n as usize];
            n = if assignment[node.level as usize] { node.high } else { node.low };
        }
        n == TRUE_ID
    }

    /// Lexicographically least satisfying assignment over `vars` (by
    /// variable index, 0 before 1); `None` if unsatisfiable.
    pub fn min_sat(&self, a: &Dd, vars: &[u32]) -> Option<Vec<bool>> {
        if a.is_false() {
            return None;
        }
        let inner = self.inner.borrow();
        let mut out = vec![false; vars.len()];
        let mut n = a.id;
        for (i, &v) in vars.iter().enumerate() {
            if n <= TRUE_ID || inner.level(n) > v {
                continue; // free at this variable: take 0
            }
            debug_assert_eq!(inner.level(n), v, "support escapes vars in min_sat");
            if inner.low(n) != FALSE_ID {
                n = inner.low(n);
            } else {
                out[i] = true;
                n = inner.high(n);
            }
        }
        Some(out)
    }

    /// All satisfying assignments over `vars`, capped at `limit`.
    pub fn all_sat(&self, a: &Dd, vars: &[u32], limit: usize) -> Result<Vec<Vec<bool>>, BddError> {
        self.check_owner(a)?;
        let inner = self.inner.borrow();
        let mut out = Vec::new();
        let mut current = vec![false; vars.len()];
        fn walk(
            inner: &Inner,
            n: NodeId,
            vars: &[u32],
            pos: usize,
            current: &mut Vec<bool>,
            out: &mut Vec<Vec<bool>>,
            limit: usize,
        ) -> Result<(), BddError> {
            if n == FALSE_ID {
                return Ok(());
            }
            if pos == vars.len() {
                debug_assert_eq!(n, TRUE_ID);
                if out.len() >= limit {
                    return Err(BddError::TooManySolutions(limit));
                }
                out.push(current.clone());
                return Ok(());
            }
            let v = vars[pos];
            let (low, high) = if n > TRUE_ID && inner.level(n) == v {
                (inner.low(n), inner.high(n))
            } else {
                (n, n)
            };
            current[pos] = false;
            walk(inner, low, vars, pos + 1, current, out, limit)?;
            current[pos] = true;
            walk(inner, high, vars, pos + 1, current, out, limit)
        }
        walk(&inner, a.id, vars, 0, &mut current, &mut out, limit)?;
        Ok(out)
    }

    pub fn live_nodes(&self) -> usize {
        self.inner.borrow().live
    }

    pub fn peak_live_nodes(&self) -> usize {
        self.inner.borrow().peak_live
    }

    pub fn collect_garbage(&self) {
        self.inner.borrow_mut().gc();
    }

    fn sorted_vars(&self, vars: &[u32]) -> Result<Vec<u32>, BddError> {
        for &v in vars {
            self.check_var(v)?;
        }
        let mut vars = vars.to_vec();
        vars.sort_unstable();
        vars.dedup();
        Ok(vars)
    }

    fn intern_permutation(&self, mapping: &[(u32, u32)]) -> Result<u32, BddError> {
        let num_vars = self.num_vars();
        let mut froms: Vec<u32> = mapping.iter().map(|&(f, _)| f).collect();
        let mut tos: Vec<u32> = mapping.iter().map(|&(_, t)| t).collect();
        froms.sort_unstable();
        tos.sort_unstable();
        froms.dedup();
        tos.dedup();
        if froms.len() != mapping.len() || froms != tos {
            return Err(BddError::NotBijective);
        }
        if let Some(&v) = froms.last() {
            if v >= num_vars {
                return Err(BddError::VarOutOfRange { index: v, num_vars });
            }
        }
        let mut full: Vec<u32> = (0..num_vars).collect();
        for &(f, t) in mapping {
            full[f as usize] = t;
        }
        let mut inner = self.inner.borrow_mut();
        if let Some(&id) = inner.perm_ids.get(&full) {
            return Ok(id);
        }
        let id = inner.perms.len() as u32;
        inner.perms.push(full.clone());
        inner.perm_ids.insert(full, id);
        Ok(id)
    }
}
