use crate::error::{param, Result};
use crate::rng::derive_seed;

use super::types::{BitOrigin, BitStream};

/// Binary de Bruijn sequence B(2, order), built from Lyndon words
/// (Fredricksen-Kessler-Maiorana) and rotated left by `seed mod 2^order`.
pub fn generate_de_bruijn(order: u32, seed: u64) -> Result<BitStream> {
    if !(1..=20).contains(&order) {
        return Err(param(format!("de Bruijn order must be in 1..=20, got {order}")));
    }
    let n = order as usize;
    let mut seq = Vec::with_capacity(1 << n);
    let mut a = vec![0u8; n + 1];
    lyndon(1, 1, n, &mut a, &mut seq);
    debug_assert_eq!(seq.len(), 1 << n);
    let rot = (seed % (1u64 << n)) as usize;
    seq.rotate_left(rot);
    BitStream::new(seq, BitOrigin::DeBruijn { order, seed })
}

fn lyndon(t: usize, p: usize, n: usize, a: &mut [u8], out: &mut Vec<u8>) {
    if t > n {
        if n % p == 0 {
            out.extend_from_slice(&a[1..=p]);
        }
        return;
    }
    a[t] = a[t - p];
    lyndon(t + 1, p, n, a, out);
    if a[t - p] == 0 {
        a[t] = 1;
        lyndon(t + 1, t, n, a, out);
    }
}

/// Frame payload: four de Bruijn sequences of `order` (with rotations derived
/// from `seed`) concatenated, then repeated and truncated to `len` bits.
pub fn payload_bits(order: u32, seed: u64, len: usize) -> Result<BitStream> {
    if len == 0 {
        return Err(param("payload length must be positive"));
    }
    let mut block = Vec::with_capacity(4usize << order);
    for i in 0..4 {
        let s = generate_de_bruijn(order, derive_seed(seed, i))?;
        block.extend_from_slice(s.bits());
    }
    let bits = block.iter().copied().cycle().take(len).collect();
    BitStream::new(bits, BitOrigin::Payload { order, seed })
}
