//! Prime enumeration: a plain sieve for small bounds and a segmented sieve
//! for windows above a million, so dyadic windows never allocate the full
//! range below them.

/// Bound above which [`primes_in_range`] switches to the segmented sieve.
pub const SEGMENT_THRESHOLD: u64 = 1_000_000;

/// All primes `p <= n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let n = n as usize;
    let mut is_prime = vec![true; n + 1];
    is_prime[0] = false;
    is_prime[1] = false;
    let mut i = 2usize;
    while i * i <= n {
        if is_prime[i] {
            let mut j = i * i;
            while j <= n {
                is_prime[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    is_prime.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i as u64).collect()
}

/// Primes in the inclusive range `[lo, hi]`, segmented: only `hi - lo + 1`
/// flags and the base primes up to `sqrt(hi)` are allocated.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || hi < lo {
        return vec![];
    }
    let lo = lo.max(2);
    if hi <= SEGMENT_THRESHOLD {
        return primes_up_to(hi).into_iter().filter(|&p| p >= lo).collect();
    }
    let root = (hi as f64).sqrt() as u64 + 1;
    let base = primes_up_to(root);
    let len = (hi - lo + 1) as usize;
    let mut is_prime = vec![true; len];
    for &p in &base {
        if p * p > hi {
            break;
        }
        let start = std::cmp::max(p * p, lo.div_ceil(p) * p);
        let mut j = start;
        while j <= hi {
            is_prime[(j - lo) as usize] = false;
            j += p;
        }
    }
    (0..len).filter(|&i| is_prime[i]).map(|i| lo + i as u64).collect()
}
