use crate::seeds::mix64;

const ROUNDS: usize = 6;

/// A keyed pseudorandom permutation of `0..n`: a balanced Feistel network on
/// the smallest even bit width covering `n`, restricted to `0..n` by cycle walking.
#[derive(Debug, Clone)]
pub struct FeistelPermutation {
    n: u64,
    half_bits: u32,
    keys: [u64; ROUNDS],
}

impl FeistelPermutation {
    pub fn new(n: u64, key: u64) -> Self {
        let bits = 64 - n.saturating_sub(1).leading_zeros();
        let half_bits = bits.div_ceil(2).max(1);
        let mut keys = [0; ROUNDS];
        let mut k = key;
        for slot in &mut keys {
            k = mix64(k);
            *slot = k;
        }
        Self { n, half_bits, keys }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn round_trip(&self, x: u64) -> u64 {
        let mask = (1u64 << self.half_bits) - 1;
        let (mut left, mut right) = (x >> self.half_bits, x & mask);
        for &k in &self.keys {
            let f = mix64(right ^ k) & mask;
            (left, right) = (right, left ^ f);
        }
        (left << self.half_bits) | right
    }

    /// Image of `x`; panics when `x` is outside the domain.
    pub fn apply(&self, x: u64) -> u64 {
        assert!(x < self.n, "{x} outside 0..{}", self.n);
        let mut y = self.round_trip(x);
        while y >= self.n {
            y = self.round_trip(y);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn is_a_bijection_for_awkward_sizes() {
        for n in [1u64, 2, 3, 7, 64, 100, 1023, 1025] {
            let p = FeistelPermutation::new(n, 42 + n);
            let mut image: Vec<u64> = (0..n).map(|x| p.apply(x)).collect();
            image.sort_unstable();
            assert_eq!(image, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn keys_give_different_permutations() {
        let a = FeistelPermutation::new(1000, 1);
        let b = FeistelPermutation::new(1000, 2);
        assert!((0..1000).filter(|&x| a.apply(x) != b.apply(x)).count() > 900);
    }

    #[test]
    fn first_position_is_roughly_uniform() {
        // Where element 0 lands, over many keys, should be uniform on 0..10.
        let mut counts = [0u32; 10];
        for key in 0..20_000 {
            counts[FeistelPermutation::new(10, key).apply(0) as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (1700..2300).contains(&c)), "{counts:?}");
    }
}
