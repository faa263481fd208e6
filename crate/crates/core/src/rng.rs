use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Golden-ratio increment used by the SplitMix64 sequence.
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; a bijection on 64-bit words.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// The underlying generator is ChaCha12, keyed by a fixed integer mix of the
/// two identifiers: the 256-bit key is the four SplitMix64 outputs of the
/// state `mix64(seed XOR GOLDEN * (stream_id + 1))`. Both `mix64` and the
/// multiplication by the odd constant `GOLDEN` are bijections, so distinct
/// stream ids under the same seed always produce distinct keys (already in
/// the first 128 bits), without any coordination between replicas.
///
/// Identical `(seed, stream_id)` pairs yield bit-identical draw sequences on
/// every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut state = mix64(seed ^ GOLDEN.wrapping_mul(stream_id.wrapping_add(1)));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        RngStream {
            seed,
            stream_id,
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

/// Stream for replica `replica` of a run seeded with `seed`.
///
/// Deterministic, and injective in `replica` for a fixed seed.
pub fn derive_stream(seed: u64, replica: u64) -> RngStream {
    RngStream::new(seed, replica)
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn uniforms(seed: u64, replica: u64, n: usize) -> Vec<f64> {
        let mut s = derive_stream(seed, replica);
        (0..n).map(|_| s.random::<f64>()).collect()
    }

    #[test]
    fn same_ids_same_stream() {
        assert_eq!(uniforms(42, 7, 1000), uniforms(42, 7, 1000));
    }

    #[test]
    fn distinct_replicas_differ() {
        let a = uniforms(42, 0, 1);
        let b = uniforms(42, 1, 1);
        assert_ne!(a, b);
    }

    #[test]
    fn distinct_seeds_differ_over_first_thousand_draws() {
        // Brute-force collision check between (41, 0) and (42, 0).
        assert_ne!(uniforms(41, 0, 1000), uniforms(42, 0, 1000));
    }

    #[test]
    fn adjacent_streams_pass_correlation_sanity_check() {
        let n = 10_000;
        for (a, b) in [(0u64, 1u64), (1, 2), (0, 1000)] {
            let xs = uniforms(123, a, n);
            let ys = uniforms(123, b, n);
            let mx = xs.iter().sum::<f64>() / n as f64;
            let my = ys.iter().sum::<f64>() / n as f64;
            let mut cov = 0.0;
            let mut vx = 0.0;
            let mut vy = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                cov += (x - mx) * (y - my);
                vx += (x - mx).powi(2);
                vy += (y - my).powi(2);
            }
            let corr = cov / (vx * vy).sqrt();
            assert!(corr.abs() < 0.05, "corr({a},{b}) = {corr}");
        }
    }
}
