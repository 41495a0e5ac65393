//! XOR-WOW pseudorandom streams.
//!
//! Each consumer owns its own stream, identified by `stream_id`, so that
//! changing how work is spread over PEs never changes which numbers a given
//! child genome sees.

use std::collections::VecDeque;

const WEYL_STEP: u32 = 362_437;

/// Fallback word state for a degenerate (all-zero) seed.
const FALLBACK_WORDS: [u32; 5] = [123_456_789, 362_436_069, 521_288_629, 88_675_123, 5_783_321];

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a salt into a seed. Used to derive per-generation and
/// per-episode seeds from the run seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut s = seed ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorWowState {
    x: u32,
    y: u32,
    z: u32,
    w: u32,
    v: u32,
    d: u32,
    stream_id: u64,
}

impl XorWowState {
    /// Builds a state from raw words, remapping an all-zero word vector.
    pub fn from_words(words: [u32; 5], d: u32, stream_id: u64) -> Self {
        let [x, y, z, w, v] = if words == [0; 5] {
            FALLBACK_WORDS
        } else {
            words
        };
        XorWowState {
            x,
            y,
            z,
            w,
            v,
            d,
            stream_id,
        }
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn words(&self) -> [u32; 5] {
        [self.x, self.y, self.z, self.w, self.v]
    }

    pub fn next_word(&mut self) -> u32 {
        let t = self.x ^ (self.x >> 2);
        self.x = self.y;
        self.y = self.z;
        self.z = self.w;
        self.w = self.v;
        self.v = (self.v ^ (self.v << 4)) ^ (t ^ (t << 1));
        self.d = self.d.wrapping_add(WEYL_STEP);
        self.d.wrapping_add(self.v)
    }

    pub fn next_byte(&mut self) -> u8 {
        self.next_word() as u8
    }

    /// Uniform fraction in `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.next_word() as f64 / 4_294_967_296.0
    }

    /// Uniform index in `0..n`; `n` must be nonzero.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_unit() * n as f64) as usize).min(n - 1)
    }
}

/// Anything that hands out uniform fractions in `[0, 1)`.
pub trait UnitSource {
    fn next_unit(&mut self) -> f64;
}

impl UnitSource for XorWowState {
    fn next_unit(&mut self) -> f64 {
        XorWowState::next_unit(self)
    }
}

/// Replays a fixed list of draws; panics when asked for more. Used to drive
/// hand-traced test cases.
#[derive(Debug, Clone, Default)]
pub struct ScriptedUnits {
    draws: VecDeque<f64>,
}

impl ScriptedUnits {
    pub fn new(draws: &[f64]) -> Self {
        ScriptedUnits {
            draws: draws.iter().copied().collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.draws.len()
    }
}

impl UnitSource for ScriptedUnits {
    fn next_unit(&mut self) -> f64 {
        self.draws.pop_front().expect("scripted draws exhausted")
    }
}

pub fn seed_stream(seed: u64, stream_id: u64) -> XorWowState {
    let mut s = seed ^ splitmix64(&mut stream_id.wrapping_add(0x6A09_E667_F3BC_C909));
    let a = splitmix64(&mut s);
    let b = splitmix64(&mut s);
    let c = splitmix64(&mut s);
    XorWowState::from_words(
        [
            a as u32,
            (a >> 32) as u32,
            b as u32,
            (b >> 32) as u32,
            c as u32,
        ],
        (c >> 32) as u32,
        stream_id,
    )
}
