//! Always-replace transposition table.
//!
//! Each slot is one `u64`: the upper 48 bits hold the key's quotient and the
//! lower 16 bits the payload. Keys are first scrambled by a bijection on
//! their bit width, the low bits of the scrambled key pick the slot and the
//! rest is stored, so a hit is never a false positive.

use super::Score;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    Exact,
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TtEntry {
    pub bound: Bound,
    pub score: Score,
    /// Best column in the orientation the entry was stored in.
    pub best: Option<u32>,
}

const PAYLOAD_BITS: u32 = 16;
const QUOTIENT_BITS: u32 = 64 - PAYLOAD_BITS;
const NO_MOVE: u64 = 0xF;

pub struct TranspositionTable {
    slots: Vec<u64>,
    log2: u32,
    key_bits: u32,
}

impl TranspositionTable {
    /// Largest accepted size exponent.
    pub const MAX_LOG2: u32 = 28;
    pub const DEFAULT_LOG2: u32 = 22;

    /// A table of `2^log2` slots for keys below `2^key_bits`. The size is
    /// raised if needed so every quotient fits in its 48 bits.
    pub fn new(log2: u32, key_bits: u32) -> Self {
        let key_bits = key_bits.clamp(1, 64);
        let log2 = log2.min(Self::MAX_LOG2).max(key_bits.saturating_sub(QUOTIENT_BITS)).min(key_bits);
        TranspositionTable { slots: vec![0; 1 << log2], log2, key_bits }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn clear(&mut self) {
        self.slots.fill(0);
    }

    fn width_mask(&self) -> u64 {
        if self.key_bits == 64 {
            u64::MAX
        } else {
            (1 << self.key_bits) - 1
        }
    }

    /// Invertible scramble restricted to `key_bits` bits.
    fn scramble(&self, key: u64) -> u64 {
        let mask = self.width_mask();
        let half = self.key_bits.div_ceil(2);
        let mut x = key & mask;
        x = x.wrapping_mul(0x9E37_79B9_7F4A_7C15) & mask;
        x ^= x >> half;
        x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9) & mask;
        x
    }

    fn locate(&self, key: u64) -> (usize, u64) {
        let h = self.scramble(key);
        let index = (h & ((1 << self.log2) - 1)) as usize;
        (index, h >> self.log2)
    }

    pub fn get(&self, key: u64) -> Option<TtEntry> {
        let (i, q) = self.locate(key);
        let slot = self.slots[i];
        if slot == 0 || slot >> PAYLOAD_BITS != q {
            return None;
        }
        unpack(slot as u16)
    }

    pub fn put(&mut self, key: u64, entry: TtEntry) {
        let (i, q) = self.locate(key);
        self.slots[i] = q << PAYLOAD_BITS | pack(entry) as u64;
    }
}

fn pack(e: TtEntry) -> u16 {
    let bound: u64 = match e.bound {
        Bound::Exact => 1,
        Bound::Lower => 2,
        Bound::Upper => 3,
    };
    let mv = e.best.map_or(NO_MOVE, |m| m as u64);
    let score = (e.score as i8) as u8 as u64;
    (score << 8 | mv << 2 | bound) as u16
}

fn unpack(p: u16) -> Option<TtEntry> {
    let bound = match p & 3 {
        1 => Bound::Exact,
        2 => Bound::Lower,
        3 => Bound::Upper,
        _ => return None,
    };
    let mv = (p >> 2 & 0xF) as u64;
    Some(TtEntry { bound, score: (p >> 8) as u8 as i8 as Score, best: (mv != NO_MOVE).then_some(mv as u32) })
}
