//! Feature hashing.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
fn fnv1a_update(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// FNV-1a 64 over the bytes of `"{field_index}:{token}"`, modulo `bucket_count`.
pub fn hash_feature(field_index: usize, token: &[u8], bucket_count: usize) -> usize {
    assert!(bucket_count >= 1, "bucket_count must be >= 1");
    let mut digits = [0u8; 20];
    let mut pos = digits.len();
    let mut n = field_index;
    loop {
        pos -= 1;
        digits[pos] = b'0' + (n % 10) as u8;
        n /= 10;
        if n == 0 {
            break;
        }
    }
    let mut h = fnv1a_update(FNV_OFFSET, &digits[pos..]);
    h = fnv1a_update(h, b":");
    h = fnv1a_update(h, token);
    (h % bucket_count as u64) as usize
}

/// Continuous value to token: `floor(ln(x + 1)^2)` for `x >= 0`, `"neg"` for
/// negatives and `"missing"` for absent values.
pub fn discretize_continuous(x: Option<f64>) -> String {
    match x {
        None => "missing".to_string(),
        Some(v) if v.is_nan() => "missing".to_string(),
        Some(v) if v < 0.0 => "neg".to_string(),
        Some(v) => {
            let l = (v + 1.0).ln();
            format!("{}", (l * l).floor() as u64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_fnv1a(s: &str) -> u64 {
        let mut h: u64 = 14695981039346656037;
        for b in s.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(1099511628211);
        }
        h
    }

    #[test]
    fn single_bucket_is_zero() {
        assert_eq!(hash_feature(0, b"anything", 1), 0);
        assert_eq!(hash_feature(12, b"", 1), 0);
    }

    #[test]
    fn deterministic() {
        assert_eq!(hash_feature(5, b"68fd1e64", 1000), hash_feature(5, b"68fd1e64", 1000));
    }

    #[test]
    fn matches_reference_fnv() {
        // "3:abc" -> 0x2d9cb40a4a379d78 (computed offline with a byte-loop
        // FNV-1a); 3286699784361450872 % 1000 = 872.
        assert_eq!(reference_fnv1a("3:abc"), 3286699784361450872);
        assert_eq!(hash_feature(3, b"abc", 1000), 872);
        assert_eq!(hash_feature(123, b"xyz", 1 << 20), (reference_fnv1a("123:xyz") % (1 << 20)) as usize);
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize_continuous(Some(0.0)), "0");
        assert_eq!(discretize_continuous(None), "missing");
        assert_eq!(discretize_continuous(Some(-3.0)), "neg");
        // ln(101)^2 = 21.298...
        assert_eq!(discretize_continuous(Some(100.0)), "21");
        assert_eq!(discretize_continuous(Some(1.0)), "0");
        assert_eq!(discretize_continuous(Some(2.0)), "1");
    }

    proptest! {
        #[test]
        fn index_in_bounds(field in 0usize..100, token in proptest::collection::vec(any::<u8>(), 0..32), buckets in 1usize..100_000) {
            prop_assert!(hash_feature(field, &token, buckets) < buckets);
        }

        #[test]
        fn agrees_with_reference(field in 0usize..1000, token in "[a-z0-9]{0,12}", buckets in 1usize..1_000_000) {
            let expected = reference_fnv1a(&format!("{field}:{token}")) % buckets as u64;
            prop_assert_eq!(hash_feature(field, token.as_bytes(), buckets) as u64, expected);
        }
    }
}
