//! Deterministic mapping from model variables to BDD variable indices.
//!
//! State bits are laid out as: plain globals in declaration order, then
//! id-sensitive globals, then the component blocks of each type in
//! declaration order (all bits of instance 1, then instance 2, ...). Every
//! current-state bit is immediately followed by its next-state partner, so
//! the current/next renaming is a distance-1 permutation and adjacent
//! component blocks stay contiguous for cheap swaps.

use super::{GlobalKind, Model, ModelError};

pub const DEFAULT_BIT_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct BitLayout {
    /// Current-state BDD variable indices per global, most significant first.
    pub global_bits: Vec<Vec<u32>>,
    /// Current-state BDD variable indices per [type][instance], MSB first.
    pub local_bits: Vec<Vec<Vec<u32>>>,
    /// Number of state bits (current only).
    pub state_bits: usize,
    /// Total BDD variables: one next-state partner per state bit.
    pub num_vars: u32,
    pub current_vars: Vec<u32>,
    pub next_vars: Vec<u32>,
}

/// Bits needed to encode `values` distinct values.
pub fn bits_for(values: usize) -> usize {
    if values <= 1 {
        0
    } else {
        (usize::BITS - (values - 1).leading_zeros()) as usize
    }
}

pub fn encode_layout(model: &Model, bit_cap: usize) -> Result<BitLayout, ModelError> {
    let mut state_bits = 0usize;
    for g in &model.globals {
        state_bits += bits_for(domain_of(model, g));
    }
    for t in &model.types {
        state_bits += t.count * bits_for(t.locals.len());
    }
    if state_bits > bit_cap {
        return Err(ModelError::Capacity { required: state_bits, cap: bit_cap });
    }

    let mut next_bit = 0u32;
    let mut alloc = |width: usize| -> Vec<u32> {
        let bits: Vec<u32> = (0..width).map(|i| next_bit + 2 * i as u32).collect();
        next_bit += 2 * width as u32;
        bits
    };

    let mut global_bits = vec![Vec::new(); model.globals.len()];
    for (i, g) in model.globals.iter().enumerate() {
        if matches!(g.kind, GlobalKind::Plain { .. }) {
            global_bits[i] = alloc(bits_for(domain_of(model, g)));
        }
    }
    for (i, g) in model.globals.iter().enumerate() {
        if matches!(g.kind, GlobalKind::IdSensitive { .. }) {
            global_bits[i] = alloc(bits_for(domain_of(model, g)));
        }
    }
    let mut local_bits = Vec::new();
    for t in &model.types {
        let width = bits_for(t.locals.len());
        local_bits.push((0..t.count).map(|_| alloc(width)).collect());
    }

    let num_vars = next_bit;
    debug_assert_eq!(num_vars as usize, 2 * state_bits);
    let current_vars: Vec<u32> = (0..num_vars).step_by(2).collect();
    let next_vars: Vec<u32> = (1..num_vars).step_by(2).collect();
    Ok(BitLayout { global_bits, local_bits, state_bits, num_vars, current_vars, next_vars })
}

fn domain_of(model: &Model, g: &super::GlobalVar) -> usize {
    match g.kind {
        GlobalKind::Plain { domain } => domain,
        GlobalKind::IdSensitive { target } => model.types[target].count,
    }
}

impl BitLayout {
    /// The `(current, next), (next, current)` pair mapping used to rename
    /// image results back onto current-state variables.
    pub fn swap_next_current(&self) -> Vec<(u32, u32)> {
        let mut mapping = Vec::with_capacity(self.num_vars as usize);
        for c in (0..self.num_vars).step_by(2) {
            mapping.push((c, c + 1));
            mapping.push((c + 1, c));
        }
        mapping
    }
}
