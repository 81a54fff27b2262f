//! Elementary multiplicative number theory.
//!
//! The divisor function `τ_k(m)` counts ordered `k`-tuples of positive integers
//! whose product is `m`, with the convention `τ_k(0) = 0`. Tables of `τ_k` are
//! built by `k - 1` successive Dirichlet convolutions with the constant function
//! `1`, starting from `τ_1 = 1`; each stage is split into independent segments so
//! that segments can be filled in parallel.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Number of table entries handled by one sieve segment.
pub const SEGMENT_LEN: usize = 1 << 22;

/// `τ_k(m)` for every `0 <= m <= limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorTable {
    k: u32,
    values: Vec<u64>,
}

impl DivisorTable {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Largest argument covered by the table.
    pub fn limit(&self) -> u64 {
        (self.values.len() - 1) as u64
    }

    /// `τ_k(m)`; panics if `m` exceeds [`limit`](Self::limit).
    #[inline]
    pub fn get(&self, m: u64) -> u64 {
        self.values[m as usize]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

/// Builds the table of `τ_k(m)` for `0 <= m <= limit`.
///
/// ```
/// let table = quaddivisor::arith::sieve_tau_k(3, 100).unwrap();
/// assert_eq!(table.get(4), 6);
/// assert_eq!(table.get(0), 0);
/// ```
pub fn sieve_tau_k(k: u32, limit: u64) -> Result<DivisorTable> {
    if k < 1 {
        return Err(Error::InvalidInput(
            "divisor function order must be >= 1".into(),
        ));
    }
    if limit < 1 {
        return Err(Error::InvalidInput("sieve limit must be >= 1".into()));
    }
    let len = usize::try_from(limit)
        .ok()
        .and_then(|l| l.checked_add(1))
        .ok_or_else(|| Error::Resource(format!("sieve limit {limit} exceeds address space")))?;

    let mut prev = vec![1u64; len];
    prev[0] = 0;
    for _stage in 1..k {
        let mut next = vec![0u64; len];
        let overflow = next
            .par_chunks_mut(SEGMENT_LEN)
            .enumerate()
            .map(|(seg, chunk)| convolve_segment(&prev, seg * SEGMENT_LEN, chunk))
            .any(|ok| !ok);
        if overflow {
            return Err(Error::Overflow(format!(
                "tau_{k} exceeds u64 below {limit}"
            )));
        }
        prev = next;
    }
    Ok(DivisorTable { k, values: prev })
}

/// Fills `out[m - lo] = Σ_{d | m} prev[d]` for `m` in `[lo, lo + out.len())`.
/// Returns `false` on overflow.
fn convolve_segment(prev: &[u64], lo: usize, out: &mut [u64]) -> bool {
    let hi = lo + out.len();
    for d in 1..hi {
        let w = prev[d];
        let mut m = if d >= lo { d } else { lo.div_ceil(d) * d };
        while m < hi {
            let slot = &mut out[m - lo];
            match slot.checked_add(w) {
                Some(v) => *slot = v,
                None => return false,
            }
            m += d;
        }
    }
    true
}

/// `τ_k(p^m) = C(m + k - 1, k - 1)`, the same for every prime `p`.
pub fn tau_k_prime_power(k: u32, m: u32) -> u64 {
    if k == 0 {
        return u64::from(m == 0);
    }
    let mut c: u128 = 1;
    for i in 1..u128::from(k) {
        c = c * (u128::from(m) + i) / i;
    }
    u64::try_from(c).expect("tau_k(p^m) exceeds u64")
}

/// Prime factorization as `(prime, exponent)` pairs in increasing prime order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    pairs: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn pairs(&self) -> &[(u64, u32)] {
        &self.pairs
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.pairs.iter().map(|&(p, _)| p)
    }

    /// Prime powers `p^e` dividing `n` exactly.
    pub fn prime_powers(&self) -> impl Iterator<Item = (u64, u32, u64)> + '_ {
        self.pairs.iter().map(|&(p, e)| (p, e, p.pow(e)))
    }

    pub fn is_squarefree(&self) -> bool {
        self.pairs.iter().all(|&(_, e)| e == 1)
    }

    pub fn mobius(&self) -> i8 {
        if !self.is_squarefree() {
            0
        } else if self.pairs.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn totient(&self) -> u64 {
        self.pairs
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    /// All positive divisors in increasing order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.pairs {
            let base = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..base {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

/// Factorization together with `μ(n)`, `φ(n)` and the sorted divisor list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicativeBasics {
    pub factorization: Factorization,
    pub mobius: i8,
    pub totient: u64,
    pub divisors: Vec<u64>,
}

pub fn multiplicative_basics(n: u64) -> Result<MultiplicativeBasics> {
    let factorization = factorize(n)?;
    Ok(MultiplicativeBasics {
        mobius: factorization.mobius(),
        totient: factorization.totient(),
        divisors: factorization.divisors(),
        factorization,
    })
}

/// Factors `n >= 1` by trial division followed by Pollard–Brent.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::InvalidInput("cannot factor 0".into()));
    }
    let mut primes = Vec::new();
    let mut rest = n;
    for p in [2u64, 3, 5] {
        while rest % p == 0 {
            primes.push(p);
            rest /= p;
        }
    }
    // wheel 30 trial division up to 2^10
    let mut d = 7u64;
    let steps = [4u64, 2, 4, 2, 4, 6, 2, 6];
    let mut i = 0;
    while d < 1024 && d * d <= rest {
        while rest % d == 0 {
            primes.push(d);
            rest /= d;
        }
        d += steps[i];
        i = (i + 1) % steps.len();
    }
    if rest > 1 {
        split_large(rest, &mut primes);
    }
    primes.sort_unstable();
    let mut pairs: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match pairs.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => pairs.push((p, 1)),
        }
    }
    Ok(Factorization { n, pairs })
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    if let Some(r) = exact_sqrt(n) {
        split_large(r, out);
        split_large(r, out);
        return;
    }
    let mut c = 1;
    loop {
        if let Some(d) = pollard_brent(n, c) {
            split_large(d, out);
            split_large(n / d, out);
            return;
        }
        c += 1;
    }
}

fn exact_sqrt(n: u64) -> Option<u64> {
    let r = (n as f64).sqrt() as u64;
    (r.saturating_sub(1)..=r + 1).find(|&x| x.checked_mul(x) == Some(n))
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: u64, c: u64) -> Option<u64> {
    use num_integer::Integer;
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let (mut y, mut r, mut q, m) = (2u64, 1u64, 1u64, 128u64);
    let (mut g, mut x, mut ys) = (1u64, 0u64, 0u64);
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..m.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = q.gcd(&n);
            k += m;
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

/// Primes `p <= limit` by the sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Iterator over the ordered `k`-tuples `(d_1, …, d_k)` of positive integers with
/// product `δ`, in lexicographic order. Yields exactly `τ_k(δ)` tuples.
#[derive(Debug, Clone)]
pub struct OrderedFactorizations {
    divisors: Vec<u64>,
    k: usize,
    choice: Vec<usize>,
    rem: Vec<u64>,
    state: IterState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IterState {
    Fresh,
    Running,
    Done,
}

/// Streams the ordered factorizations of `delta` into `k` factors.
///
/// ```
/// use quaddivisor::arith::ordered_factorizations;
/// let all: Vec<Vec<u64>> = ordered_factorizations(4, 2).unwrap().collect();
/// assert_eq!(all, vec![vec![1, 4], vec![2, 2], vec![4, 1]]);
/// ```
pub fn ordered_factorizations(delta: u64, k: usize) -> Result<OrderedFactorizations> {
    if k == 0 {
        return Err(Error::InvalidInput("need at least one factor".into()));
    }
    let divisors = factorize(delta)?.divisors();
    let mut rem = vec![0u64; k];
    rem[0] = delta;
    Ok(OrderedFactorizations {
        divisors,
        k,
        choice: vec![0; k],
        rem,
        state: IterState::Fresh,
    })
}

impl OrderedFactorizations {
    /// Positions `from..k-1` take the divisor 1; the last position takes the rest.
    fn fill_from(&mut self, from: usize) {
        for i in from..self.k - 1 {
            self.choice[i] = 0;
            self.rem[i + 1] = self.rem[i];
        }
    }

    fn current(&self) -> Vec<u64> {
        let mut out: Vec<u64> = (0..self.k - 1)
            .map(|i| self.divisors[self.choice[i]])
            .collect();
        out.push(self.rem[self.k - 1]);
        out
    }
}

impl Iterator for OrderedFactorizations {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        match self.state {
            IterState::Done => return None,
            IterState::Fresh => {
                self.fill_from(0);
                self.state = IterState::Running;
                return Some(self.current());
            }
            IterState::Running => {}
        }
        for i in (0..self.k.saturating_sub(1)).rev() {
            let r = self.rem[i];
            let next = (self.choice[i] + 1..self.divisors.len())
                .take_while(|&j| self.divisors[j] <= r)
                .find(|&j| r % self.divisors[j] == 0);
            if let Some(j) = next {
                self.choice[i] = j;
                self.rem[i + 1] = r / self.divisors[j];
                self.fill_from(i + 1);
                return Some(self.current());
            }
        }
        self.state = IterState::Done;
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau_k_by_enumeration(k: u32, m: u64) -> u64 {
        // count k-tuples directly by recursion over divisors
        if k == 1 {
            return 1;
        }
        (1..=m)
            .filter(|d| m % d == 0)
            .map(|d| tau_k_by_enumeration(k - 1, m / d))
            .sum()
    }

    #[test]
    fn small_values() {
        let t2 = sieve_tau_k(2, 12).unwrap();
        assert_eq!(t2.get(12), 6);
        assert_eq!(t2.get(1), 1);
        assert_eq!(t2.get(0), 0);
        let t3 = sieve_tau_k(3, 4).unwrap();
        assert_eq!(t3.get(4), 6);
        for k in 2..6 {
            assert_eq!(sieve_tau_k(k, 1).unwrap().get(1), 1);
        }
    }

    #[test]
    fn sieve_matches_enumeration() {
        for k in 1..=4 {
            let table = sieve_tau_k(k, 200).unwrap();
            for m in 1..=200 {
                assert_eq!(table.get(m), tau_k_by_enumeration(k, m), "k={k} m={m}");
            }
        }
    }

    #[test]
    fn sieve_crosses_segments() {
        // the segment boundary at 2^22 must not lose or double-count divisors
        let limit = (SEGMENT_LEN + 1000) as u64;
        let table = sieve_tau_k(2, limit).unwrap();
        for m in [
            SEGMENT_LEN as u64 - 1,
            SEGMENT_LEN as u64,
            SEGMENT_LEN as u64 + 1,
            limit,
        ] {
            let f = factorize(m).unwrap();
            let expected: u64 = f.pairs().iter().map(|&(_, e)| u64::from(e) + 1).product();
            assert_eq!(table.get(m), expected, "m={m}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(sieve_tau_k(0, 10).is_err());
        assert!(sieve_tau_k(2, 0).is_err());
        assert!(factorize(0).is_err());
        assert!(multiplicative_basics(0).is_err());
    }

    #[test]
    fn prime_power_binomial() {
        assert_eq!(tau_k_prime_power(2, 1), 2);
        assert_eq!(tau_k_prime_power(3, 2), 6);
        for k in 1..6 {
            assert_eq!(tau_k_prime_power(k, 0), 1);
        }
        let table = sieve_tau_k(4, 4096).unwrap();
        for p in [2u64, 3, 5, 7] {
            let mut pm = 1u64;
            for m in 0..=12 {
                if pm > 4096 {
                    break;
                }
                assert_eq!(table.get(pm), tau_k_prime_power(4, m));
                pm *= p;
            }
        }
    }

    #[test]
    fn basics_examples() {
        let b = multiplicative_basics(12).unwrap();
        assert_eq!((b.mobius, b.totient), (0, 4));
        assert_eq!(b.divisors, vec![1, 2, 3, 4, 6, 12]);
        let b = multiplicative_basics(1).unwrap();
        assert_eq!((b.mobius, b.totient, b.divisors), (1, 1, vec![1]));
        let b = multiplicative_basics(30).unwrap();
        assert_eq!((b.mobius, b.totient), (-1, 8));
    }

    #[test]
    fn large_factorizations() {
        let n = 1_000_000_007u64 * 998_244_353;
        let f = factorize(n).unwrap();
        assert_eq!(f.pairs(), &[(998_244_353, 1), (1_000_000_007, 1)]);
        let f = factorize(2u64.pow(20) * 3u64.pow(5) * 1_000_003).unwrap();
        assert_eq!(f.pairs(), &[(2, 20), (3, 5), (1_000_003, 1)]);
        let f = factorize(4_294_967_291u64 * 4_294_967_291).unwrap();
        assert_eq!(f.pairs(), &[(4_294_967_291, 2)]);
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn factorization_examples() {
        let pf = |d, k| ordered_factorizations(d, k).unwrap().collect::<Vec<_>>();
        assert_eq!(pf(7, 2), vec![vec![1, 7], vec![7, 1]]);
        assert_eq!(pf(4, 2), vec![vec![1, 4], vec![2, 2], vec![4, 1]]);
        assert_eq!(pf(1, 4), vec![vec![1, 1, 1, 1]]);
        assert_eq!(pf(6, 1), vec![vec![6]]);
    }

    #[test]
    fn factorization_counts_match_table() {
        let table = sieve_tau_k(3, 10_000).unwrap();
        for delta in 1..=10_000u64 {
            let tuples: Vec<_> = ordered_factorizations(delta, 3).unwrap().collect();
            assert_eq!(tuples.len() as u64, table.get(delta));
            assert!(tuples.iter().all(|t| t.iter().product::<u64>() == delta));
            assert!(tuples.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn partial_sum_sanity() {
        // Σ_{m<=Y} τ_k(m) ~ Y (log Y)^{k-1} / (k-1)!
        let y = 10_000_000u64;
        for k in [2u32, 3] {
            let table = sieve_tau_k(k, y).unwrap();
            let sum: u64 = table.values().iter().sum();
            let ly = (y as f64).ln();
            let fact: f64 = (1..k).map(f64::from).product();
            let ratio = sum as f64 / (y as f64 * ly.powi(k as i32 - 1) / fact);
            assert!((ratio - 1.0).abs() < 0.15, "k={k} ratio={ratio}");
        }
    }

    mod props {
        use super::*;
        use num_integer::Integer;
        use proptest::prelude::*;

        fn shared_table() -> &'static DivisorTable {
            static TABLE: std::sync::OnceLock<DivisorTable> = std::sync::OnceLock::new();
            TABLE.get_or_init(|| sieve_tau_k(3, 3000 * 3000).unwrap())
        }

        proptest! {
            #[test]
            fn multiplicative_on_coprime(m in 1u64..=3000, n in 1u64..=3000) {
                prop_assume!(m.gcd(&n) == 1);
                let table = shared_table();
                prop_assert_eq!(table.get(m * n), table.get(m) * table.get(n));
            }

            #[test]
            fn factorization_product(n in 1u64..u64::MAX / 2) {
                let f = factorize(n).unwrap();
                let prod: u64 = f.prime_powers().map(|(_, _, pe)| pe).product();
                prop_assert_eq!(prod, n);
                prop_assert!(f.pairs().windows(2).all(|w| w[0].0 < w[1].0));
                prop_assert!(f.primes().all(is_prime));
            }
        }
    }
}
