//! Stable 64-bit FNV-1a hashing.
//!
//! Mock-agent decisions and config fingerprints must hash identically across
//! runs, platforms, and compiler versions, so we avoid `DefaultHasher` and
//! keep the function frozen here.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Hash a sequence of parts, each length-prefixed so that part boundaries
/// cannot alias (`["ab","c"]` vs `["a","bc"]`).
pub fn fnv1a_parts(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in (part.len() as u64).to_le_bytes().iter() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}
