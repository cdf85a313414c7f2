//! Frozen per-ball pseudo-random streams.
//!
//! The scheme is normative and must stay bit-exact:
//!
//! * stream seed `s = splitmix64(user_seed ^ fnv1a64(encode_ball(B)))`, where
//!   `splitmix64(x)` is one SplitMix64 step taken from state `x`;
//! * words are drawn by repeated SplitMix64 steps from state `s`;
//! * `uniform(k)` rejects words `>= floor(2^64 / k) * k` and returns `w % k`;
//! * permutations are Fisher-Yates, descending index, starting from the identity;
//! * affine actions fill `A` row-major with `uniform(p)`, redraw the whole matrix
//!   while `det A == 0 mod p`, then draw `b` componentwise.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One SplitMix64 step starting from `state`.
pub fn splitmix64(state: u64) -> u64 {
    mix(state.wrapping_add(GOLDEN))
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    /// Stream keyed by a user seed and a canonical byte string (a ball encoding).
    pub fn keyed(seed: u64, key: &[u8]) -> Self {
        Self::new(splitmix64(seed ^ fnv1a64(key)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform integer in `[0, k)` by rejection.
    pub fn uniform(&mut self, k: u64) -> u64 {
        assert!(k > 0, "uniform over an empty range");
        let limit = ((1u128 << 64) / k as u128) * k as u128;
        loop {
            let w = self.next_u64();
            if (w as u128) < limit {
                return w % k;
            }
        }
    }

    /// Fisher-Yates shuffle of `0..n`, descending.
    pub fn permutation(&mut self, n: usize) -> Vec<u32> {
        let mut a: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            let j = self.uniform(i as u64 + 1) as usize;
            a.swap(i, j);
        }
        a
    }

    /// Uniform `f64` in `[0, 1)` from the top 53 bits. Only used for sampling test data.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs of SplitMix64 seeded with 0.
        let mut g = SplitMix64::new(0);
        assert_eq!(g.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(g.next_u64(), 0x6e789e6aa1b965f4);
        assert_eq!(g.next_u64(), 0x06c45d188009454f);
        assert_eq!(splitmix64(0), 0xe220a8397b1dcdaf);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn uniform_stays_in_range_and_permutation_is_bijective() {
        let mut g = SplitMix64::keyed(7, b"p=3;d=1;L=0;c=");
        for k in 1..20 {
            assert!(g.uniform(k) < k);
        }
        let mut perm = g.permutation(11);
        perm.sort_unstable();
        assert_eq!(perm, (0..11).collect::<Vec<_>>());
    }
}
