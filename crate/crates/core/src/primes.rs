//! Small prime enumeration shared by the value generators and the
//! decision problems.

/// Returns the j-th prime number, `nth_prime(1) = 2`.
///
/// Panics if `j == 0`.
pub(crate) fn nth_prime(j: u64) -> u64 {
    assert!(j >= 1, "prime indices start at 1");
    let mut count = 0u64;
    let mut p = 1u64;
    while count < j {
        p += 1;
        if is_prime(p) {
            count += 1;
        }
    }
    p
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Index of a prime in the enumeration `p_1 = 2, p_2 = 3, ...`, if prime.
pub(crate) fn prime_index(p: u64) -> Option<u64> {
    if !is_prime(p) {
        return None;
    }
    let mut idx = 0u64;
    for q in 2..=p {
        if is_prime(q) {
            idx += 1;
        }
    }
    Some(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_primes() {
        assert_eq!(nth_prime(1), 2);
        assert_eq!(nth_prime(2), 3);
        assert_eq!(nth_prime(5), 11);
    }

    #[test]
    fn index_inverts_enumeration() {
        for j in 1..=30 {
            assert_eq!(prime_index(nth_prime(j)), Some(j));
        }
        assert_eq!(prime_index(1), None);
        assert_eq!(prime_index(6), None);
    }
}
