//! Symbolic encoding of a model over a BDD manager: initial-state sets,
//! per-instance transition relations built on demand, counting predicates
//! and conversions between diagrams and explicit states.

use crate::bdd::{Dd, Manager};

use super::layout::BitLayout;
use super::{
    Cmp, ExplicitState, GlobalKind, GuardAtom, InitValue, Model, ModelError, PropExpr,
    UpdateValue,
};

pub struct Symbolic<'a> {
    pub model: &'a Model,
    pub layout: &'a BitLayout,
    pub mgr: &'a Manager,
}

impl<'a> Symbolic<'a> {
    pub fn new(model: &'a Model, layout: &'a BitLayout, mgr: &'a Manager) -> Self {
        Symbolic { model, layout, mgr }
    }

    fn offset(next: bool) -> u32 {
        next as u32
    }

    /// `bits == value`, MSB first; `next` selects the next-state partners.
    pub fn bits_eq_const(&self, bits: &[u32], value: usize, next: bool) -> Result<Dd, ModelError> {
        let width = bits.len();
        let lits: Vec<(u32, bool)> = bits
            .iter()
            .enumerate()
            .map(|(i, &b)| (b + Self::offset(next), value >> (width - 1 - i) & 1 == 1))
            .collect();
        Ok(self.mgr.cube(&lits)?)
    }

    /// Equality against a surface value (id-sensitive values are 1-based).
    pub fn global_eq(&self, var: usize, value: usize, next: bool) -> Result<Dd, ModelError> {
        let encoded = match self.model.globals[var].kind {
            GlobalKind::Plain { .. } => value,
            GlobalKind::IdSensitive { .. } => value - 1,
        };
        self.bits_eq_const(&self.layout.global_bits[var], encoded, next)
    }

    pub fn local_eq(
        &self,
        type_idx: usize,
        instance: usize,
        local: usize,
        next: bool,
    ) -> Result<Dd, ModelError> {
        self.bits_eq_const(&self.layout.local_bits[type_idx][instance], local, next)
    }

    /// `unsigned(bits) < limit` (current or next bits).
    pub fn bits_lt_const(&self, bits: &[u32], limit: usize, next: bool) -> Result<Dd, ModelError> {
        let m = self.mgr;
        let width = bits.len();
        if limit >= 1 << width.min(63) && width < 64 {
            return Ok(m.constant(true));
        }
        let mut res = m.constant(false);
        let mut prefix_eq = m.constant(true);
        for (i, &b) in bits.iter().enumerate() {
            let v = b + Self::offset(next);
            let kbit = limit >> (width - 1 - i) & 1 == 1;
            if kbit {
                let nb = m.nvar(v)?;
                let hit = m.and(&prefix_eq, &nb)?;
                res = m.or(&res, &hit)?;
                let vb = m.var(v)?;
                prefix_eq = m.and(&prefix_eq, &vb)?;
            } else {
                let nb = m.nvar(v)?;
                prefix_eq = m.and(&prefix_eq, &nb)?;
            }
        }
        Ok(res)
    }

    /// Valid-domain constraint for a global's bits.
    pub fn global_domain_valid(&self, var: usize, next: bool) -> Result<Dd, ModelError> {
        let domain = self.model.global_domain(var);
        self.bits_lt_const(&self.layout.global_bits[var], domain, next)
    }

    /// Unsigned `a < b` over current-state bits of two equal-width blocks.
    pub fn bits_lt_bits(&self, a: &[u32], b: &[u32]) -> Result<Dd, ModelError> {
        let m = self.mgr;
        debug_assert_eq!(a.len(), b.len());
        let mut res = m.constant(false);
        // Fold from LSB: lt = (!a & b) | ((a == b) & lt_rest)
        for (&av, &bv) in a.iter().zip(b).rev() {
            let abit = m.var(av)?;
            let bbit = m.var(bv)?;
            let strict = {
                let na = m.not(&abit)?;
                m.and(&na, &bbit)?
            };
            let eq = {
                let x = m.xor(&abit, &bbit)?;
                m.not(&x)?
            };
            let keep = m.and(&eq, &res)?;
            res = m.or(&strict, &keep)?;
        }
        Ok(res)
    }

    pub fn bits_eq_bits(&self, a: &[u32], b: &[u32]) -> Result<Dd, ModelError> {
        let m = self.mgr;
        let mut res = m.constant(true);
        for (&av, &bv) in a.iter().zip(b).rev() {
            let abit = m.var(av)?;
            let bbit = m.var(bv)?;
            let x = m.xor(&abit, &bbit)?;
            let eq = m.not(&x)?;
            res = m.and(&eq, &res)?;
        }
        Ok(res)
    }

    /// Next-state bits equal current-state bits for one variable block.
    fn block_unchanged(&self, bits: &[u32]) -> Result<Dd, ModelError> {
        let m = self.mgr;
        let mut res = m.constant(true);
        for &b in bits.iter().rev() {
            let cur = m.var(b)?;
            let nxt = m.var(b + 1)?;
            let x = m.xor(&cur, &nxt)?;
            let eq = m.not(&x)?;
            res = m.and(&eq, &res)?;
        }
        Ok(res)
    }

    /// Count of instances of `type_idx` currently in `local`, compared to
    /// `bound`; `exclude` drops one instance from the census.
    pub fn count_pred(
        &self,
        type_idx: usize,
        local: usize,
        cmp: Cmp,
        bound: usize,
        exclude: Option<usize>,
    ) -> Result<Dd, ModelError> {
        let m = self.mgr;
        let cap = match cmp {
            Cmp::Eq | Cmp::Le | Cmp::Gt => bound + 1,
            Cmp::Ge | Cmp::Lt => bound,
        };
        if cap == 0 {
            // >= 0 is vacuous, < 0 unsatisfiable.
            return Ok(m.constant(matches!(cmp, Cmp::Ge)));
        }
        // dds[c] = states with exactly c matching instances so far, with
        // dds[cap] saturated to mean "at least cap".
        let mut dds: Vec<Dd> = (0..=cap).map(|_| m.constant(false)).collect();
        dds[0] = m.constant(true);
        for j in 0..self.model.types[type_idx].count {
            if exclude == Some(j) {
                continue;
            }
            let ind = self.local_eq(type_idx, j, local, false)?;
            let not_ind = m.not(&ind)?;
            let mut next: Vec<Dd> = Vec::with_capacity(cap + 1);
            for c in 0..cap {
                let stay = m.and(&dds[c], &not_ind)?;
                let step = if c > 0 {
                    let up = m.and(&dds[c - 1], &ind)?;
                    m.or(&stay, &up)?
                } else {
                    stay
                };
                next.push(step);
            }
            let up = m.and(&dds[cap - 1], &ind)?;
            next.push(m.or(&dds[cap], &up)?);
            dds = next;
        }
        let result = match cmp {
            Cmp::Eq => dds[bound].clone(),
            Cmp::Ge | Cmp::Gt => dds[cap].clone(),
            Cmp::Le | Cmp::Lt => {
                let upper = if cmp == Cmp::Le { bound } else { bound - 1 };
                let mut acc = m.constant(false);
                for d in &dds[..=upper] {
                    acc = m.or(&acc, d)?;
                }
                acc
            }
        };
        Ok(result)
    }

    fn guard_atom(&self, atom: &GuardAtom, instance: usize) -> Result<Dd, ModelError> {
        match *atom {
            GuardAtom::GlobalEqSelf { var } => self.global_eq(var, instance + 1, false),
            GuardAtom::GlobalEqConst { var, value } => self.global_eq(var, value, false),
            GuardAtom::Count { type_idx, local, cmp, bound, others } => {
                self.count_pred(type_idx, local, cmp, bound, others.then_some(instance))
            }
        }
    }

    /// Transition relation of one component instance over current and next
    /// variables: the disjunction over the type's commands, instantiated
    /// for `instance`, with every untouched variable framed.
    pub fn build_component_relation(
        &self,
        type_idx: usize,
        instance: usize,
    ) -> Result<Dd, ModelError> {
        let m = self.mgr;
        let mut relation = m.constant(false);
        for cmd in self.model.commands_of(type_idx) {
            let mut conj = self.local_eq(type_idx, instance, cmd.from, false)?;
            let to = self.local_eq(type_idx, instance, cmd.to, true)?;
            conj = m.and(&conj, &to)?;
            for atom in &cmd.guard {
                let g = self.guard_atom(atom, instance)?;
                conj = m.and(&conj, &g)?;
            }
            let updated: Vec<usize> = cmd.updates.iter().map(|u| u.var).collect();
            for update in &cmd.updates {
                let constraint = match update.value {
                    UpdateValue::Const(v) => self.global_eq(update.var, v, true)?,
                    UpdateValue::SelfId => self.global_eq(update.var, instance + 1, true)?,
                    UpdateValue::Any => self.global_domain_valid(update.var, true)?,
                };
                conj = m.and(&conj, &constraint)?;
            }
            for g in 0..self.model.globals.len() {
                if !updated.contains(&g) {
                    let frame = self.block_unchanged(&self.layout.global_bits[g])?;
                    conj = m.and(&conj, &frame)?;
                }
            }
            for (t, ty) in self.model.types.iter().enumerate() {
                for j in 0..ty.count {
                    if t == type_idx && j == instance {
                        continue;
                    }
                    let frame = self.block_unchanged(&self.layout.local_bits[t][j])?;
                    conj = m.and(&conj, &frame)?;
                }
            }
            relation = m.or(&relation, &conj)?;
        }
        Ok(relation)
    }

    /// States satisfying a safety property's bad-state condition.
    pub fn build_predicate(&self, expr: &PropExpr) -> Result<Dd, ModelError> {
        let m = self.mgr;
        match expr {
            PropExpr::And(terms) => {
                let mut acc = m.constant(true);
                for t in terms {
                    let d = self.build_predicate(t)?;
                    acc = m.and(&acc, &d)?;
                }
                Ok(acc)
            }
            PropExpr::Or(terms) => {
                let mut acc = m.constant(false);
                for t in terms {
                    let d = self.build_predicate(t)?;
                    acc = m.or(&acc, &d)?;
                }
                Ok(acc)
            }
            PropExpr::Count { type_idx, local, cmp, bound } => {
                self.count_pred(*type_idx, *local, *cmp, *bound, None)
            }
            PropExpr::Global { var, cmp, value } => self.global_cmp(*var, *cmp, *value),
            PropExpr::Const(b) => Ok(m.constant(*b)),
        }
    }

    fn global_cmp(&self, var: usize, cmp: Cmp, value: usize) -> Result<Dd, ModelError> {
        let m = self.mgr;
        let bits = &self.layout.global_bits[var];
        match cmp {
            Cmp::Eq => self.global_eq(var, value, false),
            Cmp::Lt => self.bits_lt_const(bits, value, false),
            Cmp::Le => self.bits_lt_const(bits, value + 1, false),
            Cmp::Ge => {
                let lt = self.bits_lt_const(bits, value, false)?;
                let ge = m.not(&lt)?;
                let valid = self.global_domain_valid(var, false)?;
                Ok(m.and(&ge, &valid)?)
            }
            Cmp::Gt => {
                let le = self.bits_lt_const(bits, value + 1, false)?;
                let gt = m.not(&le)?;
                let valid = self.global_domain_valid(var, false)?;
                Ok(m.and(&gt, &valid)?)
            }
        }
    }

    /// The initial-state set over current variables; `any` initializers
    /// expand to the full domain.
    pub fn init_set(&self) -> Result<Dd, ModelError> {
        let m = self.mgr;
        let mut acc = m.constant(true);
        for (t, ty) in self.model.types.iter().enumerate() {
            for j in 0..ty.count {
                let d = self.local_eq(t, j, ty.init, false)?;
                acc = m.and(&acc, &d)?;
            }
        }
        for (g, gv) in self.model.globals.iter().enumerate() {
            let d = match gv.init {
                InitValue::Value(v) => self.global_eq(g, v, false)?,
                InitValue::Any => self.global_domain_valid(g, false)?,
            };
            acc = m.and(&acc, &d)?;
        }
        Ok(acc)
    }

    /// Singleton diagram for one explicit state.
    pub fn state_cube(&self, s: &ExplicitState) -> Result<Dd, ModelError> {
        let mut lits = Vec::with_capacity(self.layout.state_bits);
        for (g, bits) in self.layout.global_bits.iter().enumerate() {
            let encoded = match self.model.globals[g].kind {
                GlobalKind::Plain { .. } => s.globals[g] as usize,
                GlobalKind::IdSensitive { .. } => s.globals[g] as usize - 1,
            };
            push_value_lits(&mut lits, bits, encoded);
        }
        for (t, blocks) in self.layout.local_bits.iter().enumerate() {
            for (j, bits) in blocks.iter().enumerate() {
                push_value_lits(&mut lits, bits, s.locals[t][j] as usize);
            }
        }
        Ok(self.mgr.cube(&lits)?)
    }

    /// Decodes an assignment indexed by state bit (current variable `2k`
    /// maps to slot `k`).
    pub fn decode_state(&self, assignment: &[bool]) -> Result<ExplicitState, ModelError> {
        let read = |bits: &[u32]| -> usize {
            bits.iter().fold(0usize, |acc, &b| acc << 1 | assignment[b as usize / 2] as usize)
        };
        let mut globals = Vec::with_capacity(self.model.globals.len());
        for (g, gv) in self.model.globals.iter().enumerate() {
            let raw = read(&self.layout.global_bits[g]);
            if raw >= self.model.global_domain(g) {
                return Err(ModelError::InvalidEncoding);
            }
            let value = match gv.kind {
                GlobalKind::Plain { .. } => raw,
                GlobalKind::IdSensitive { .. } => raw + 1,
            };
            globals.push(value as u32);
        }
        let mut locals = Vec::with_capacity(self.model.types.len());
        for (t, ty) in self.model.types.iter().enumerate() {
            let mut row = Vec::with_capacity(ty.count);
            for j in 0..ty.count {
                let raw = read(&self.layout.local_bits[t][j]);
                if raw >= ty.locals.len() {
                    return Err(ModelError::InvalidEncoding);
                }
                row.push(raw as u8);
            }
            locals.push(row);
        }
        Ok(ExplicitState { globals, locals })
    }

    /// All explicit states of a diagram over current variables.
    pub fn enumerate_states(
        &self,
        set: &Dd,
        limit: usize,
    ) -> Result<Vec<ExplicitState>, ModelError> {
        let sats = self.mgr.all_sat(set, &self.layout.current_vars, limit)?;
        sats.iter().map(|a| self.decode_state(a)).collect()
    }

    /// Least satisfying state by variable index, if any.
    pub fn min_state(&self, set: &Dd) -> Result<Option<ExplicitState>, ModelError> {
        match self.mgr.min_sat(set, &self.layout.current_vars) {
            Some(a) => Ok(Some(self.decode_state(&a)?)),
            None => Ok(None),
        }
    }
}

fn push_value_lits(lits: &mut Vec<(u32, bool)>, bits: &[u32], value: usize) {
    let width = bits.len();
    for (i, &b) in bits.iter().enumerate() {
        lits.push((b, value >> (width - 1 - i) & 1 == 1));
    }
}
