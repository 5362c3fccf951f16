//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a [`RngStream`] identified by a
//! master seed, a purpose tag and an index (replica, edge, ...). Two streams with
//! different labels are independent ChaCha8 keys, so results never depend on the order
//! in which work is scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a hash of a tag, used to turn purpose labels into integers.
pub fn tag_hash(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive a child seed from a master seed, a tag and an index.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ tag_hash(tag)).wrapping_add(splitmix64(index ^ GOLDEN)))
}

fn key_bytes(master: u64, tag: &str, index: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut s = derive_seed(master, tag, index);
    for chunk in key.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    key
}

/// Map a raw 64-bit word to a uniform in the open interval (0, 1).
#[inline]
pub fn open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// A labelled, replayable random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    master: u64,
    tag: String,
    index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master: u64, tag: &str, index: u64) -> Self {
        RngStream {
            master,
            tag: tag.to_string(),
            index,
            rng: ChaCha8Rng::from_seed(key_bytes(master, tag, index)),
        }
    }

    /// An independent stream labelled by this stream's label extended with `tag/index`.
    pub fn substream(&self, tag: &str, index: u64) -> Self {
        let child = derive_seed(self.master, &self.tag, self.index);
        RngStream::new(child, tag, index)
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Uniform in (0, 1), never exactly 0 or 1.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        open_unit(self.rng.next_u64())
    }

    /// Uniform integer in `0..n` (n > 0) by Lemire's multiply-shift with rejection.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        loop {
            let x = self.rng.next_u64();
            let m = (x as u128) * (n as u128);
            let lo = m as u64;
            if lo >= n || lo >= n.wrapping_neg() % n {
                return (m >> 64) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Random access into a keyed stream: the value at position `i` equals the `i`-th
/// uniform of `RngStream::new(master, tag, 0)` read sequentially.
#[derive(Clone, Debug)]
pub struct KeyedUniforms {
    rng: ChaCha8Rng,
}

impl KeyedUniforms {
    pub fn new(master: u64, tag: &str) -> Self {
        KeyedUniforms {
            rng: ChaCha8Rng::from_seed(key_bytes(master, tag, 0)),
        }
    }

    /// Uniform number `i` of the stream.
    #[inline]
    pub fn at(&mut self, i: u64) -> f64 {
        self.rng.set_word_pos(2 * i as u128);
        open_unit(self.rng.next_u64())
    }

    /// Uniforms `start..start+len` in order, generated sequentially.
    pub fn range(&mut self, start: u64, len: usize) -> Vec<f64> {
        self.rng.set_word_pos(2 * start as u128);
        (0..len).map(|_| open_unit(self.rng.next_u64())).collect()
    }

    /// Seek to position `i`; subsequent [`KeyedUniforms::next`] calls read `i, i+1, ...`.
    pub fn seek(&mut self, i: u64) {
        self.rng.set_word_pos(2 * i as u128);
    }

    #[inline]
    pub fn next(&mut self) -> f64 {
        open_unit(self.rng.next_u64())
    }
}
