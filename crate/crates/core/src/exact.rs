//! Ground truth by exhaustion: `Σ_{k,F}(X; 𝓑) = Σ_{x ∈ ℤⁿ ∩ X𝓑} τ_k(F(x))`
//! and `A_k(x; h, q) = Σ_{m ≤ x, m ≡ h (q)} τ_k(m)`.

use crate::arith::{sieve_tau_k, DivisorTable};
use crate::error::{Error, Result};
use crate::quad::{require_admissible, BoxRegion, QuadraticPolynomial};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

/// Largest sieve the oracles will build (two `u64` buffers of this length).
pub const SIEVE_CAP: u64 = 200_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSumResult {
    pub dilation: BigRational,
    pub total: u128,
    pub lattice_count: u128,
    /// Sieve limit: `⌊max F⌋` over the dilated box.
    pub fmax_used: u64,
}

/// `Σ τ_k(F(x))` over the lattice points of `X𝓑`.
pub fn exact_sigma(
    poly: &QuadraticPolynomial,
    k: u32,
    region: &BoxRegion,
) -> Result<ExactSumResult> {
    exact_sigma_capped(poly, k, region, SIEVE_CAP)
}

pub fn exact_sigma_capped(
    poly: &QuadraticPolynomial,
    k: u32,
    region: &BoxRegion,
    cap: u64,
) -> Result<ExactSumResult> {
    let ext = require_admissible(poly, region)?;
    let fmax = ext
        .fmax
        .floor()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::Overflow("max F exceeds u64".into()))?;
    if fmax > cap {
        return Err(Error::Resource(format!(
            "sieve limit {fmax} exceeds cap {cap}"
        )));
    }
    let table = sieve_tau_k(k, fmax.max(1))?;
    let ranges = region.lattice_ranges()?;
    if ranges.iter().any(|&(a, b)| b < a) {
        return Ok(ExactSumResult {
            dilation: region.dilation().clone(),
            total: 0,
            lattice_count: 0,
            fmax_used: fmax,
        });
    }
    let (first, rest) = ranges.split_first().expect("dimension >= 3");
    let slabs: Vec<(u128, u128)> = (first.0..=first.1)
        .into_par_iter()
        .map(|x1| slab_sum(poly, &table, x1, rest))
        .collect::<Result<_>>()?;
    let total = slabs.iter().map(|s| s.0).sum();
    let lattice_count = slabs.iter().map(|s| s.1).sum();
    Ok(ExactSumResult {
        dilation: region.dilation().clone(),
        total,
        lattice_count,
        fmax_used: fmax,
    })
}

/// Sum over the slab with first coordinate `x1`; the last coordinate is
/// stepped with finite differences (`ΔF` changes by `2Q_nn` per step).
fn slab_sum(
    poly: &QuadraticPolynomial,
    table: &DivisorTable,
    x1: i64,
    rest: &[(i64, i64)],
) -> Result<(u128, u128)> {
    let n = rest.len() + 1;
    let last = n - 1;
    let (zlo, zhi) = rest[last - 1];
    let second = 2 * poly.q(last, last) as i128;
    let mut point: Vec<i64> = std::iter::once(x1)
        .chain(rest.iter().map(|r| r.0))
        .collect();
    let mut total = 0u128;
    let mut count = 0u128;
    loop {
        point[last] = zlo;
        let mut f = poly.evaluate(&point)?;
        // F(x + e_n) - F(x) = 2 (Q x)_n + Q_nn + L_n
        let mut step: i128 = (0..n)
            .map(|j| 2 * poly.q(last, j) as i128 * point[j] as i128)
            .sum::<i128>()
            + poly.q(last, last) as i128
            + poly.linear()[last] as i128;
        for z in zlo..=zhi {
            if f < 0 {
                point[last] = z;
                return Err(Error::Inadmissible {
                    witness: format!("{point:?}"),
                    value: f.to_string(),
                });
            }
            total += table.get(f as u64) as u128;
            f += step;
            step += second;
        }
        count += (zhi - zlo + 1) as u128;
        // odometer over coordinates 1..last
        let mut d = last - 1;
        loop {
            if d == 0 {
                return Ok((total, count));
            }
            if point[d] < rest[d - 1].1 {
                point[d] += 1;
                break;
            }
            point[d] = rest[d - 1].0;
            d -= 1;
        }
    }
}

/// `A_k(x; h, q)`, summing over `1 <= m <= x` with `m ≡ h (mod q)`.
pub fn ap_exact_sum(k: u32, x: f64, h: u64, q: u64) -> Result<u128> {
    if q == 0 || h == 0 || h > q {
        return Err(Error::InvalidInput(format!(
            "need 1 <= h <= q, got h = {h}, q = {q}"
        )));
    }
    if !(x.is_finite()) {
        return Err(Error::InvalidInput(format!("x = {x} must be finite")));
    }
    if x < 1.0 {
        return Ok(0);
    }
    let limit = x.floor() as u64;
    if limit > SIEVE_CAP {
        return Err(Error::Resource(format!(
            "sieve limit {limit} exceeds cap {SIEVE_CAP}"
        )));
    }
    let table = sieve_tau_k(k, limit)?;
    Ok(ap_sum_from_table(&table, limit, h, q))
}

/// `A_k(x; h, q)` from a prebuilt table covering `x`.
pub fn ap_sum_from_table(table: &DivisorTable, x: u64, h: u64, q: u64) -> u128 {
    let start = if h % q == 0 { q } else { h % q };
    (start..=x.min(table.limit()))
        .step_by(q as usize)
        .map(|m| table.get(m) as u128)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factorize;

    fn squares() -> QuadraticPolynomial {
        QuadraticPolynomial::sum_of_squares(3).unwrap()
    }

    /// `τ_k(m)` by counting ordered factorizations recursively.
    fn tau_direct(k: u32, m: u64) -> u64 {
        if m == 0 {
            return 0;
        }
        if k == 1 {
            return 1;
        }
        (1..=m)
            .filter(|d| m % d == 0)
            .map(|d| tau_direct(k - 1, m / d))
            .sum()
    }

    #[test]
    fn unit_cube_at_two() {
        let b = BoxRegion::cube(3, 0, 1, 2).unwrap();
        let r = exact_sigma(&squares(), 2, &b).unwrap();
        assert_eq!(r.total, 71);
        assert_eq!(r.lattice_count, 27);
        assert_eq!(r.fmax_used, 12);
        let brute: u64 = b
            .lattice_points()
            .unwrap()
            .map(|x| tau_direct(3, squares().evaluate(&x).unwrap() as u64))
            .sum();
        assert_eq!(exact_sigma(&squares(), 3, &b).unwrap().total, brute as u128);
    }

    #[test]
    fn single_point_box() {
        let b = BoxRegion::parse(&["1/2", "0", "0"], &["3/2", "1/2", "1/2"], "1").unwrap();
        let r = exact_sigma(&squares(), 4, &b).unwrap();
        assert_eq!((r.total, r.lattice_count), (1, 1));
    }

    #[test]
    fn matches_pointwise_factorization() {
        let f = QuadraticPolynomial::new(
            vec![vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 3]],
            vec![1, -1, 2],
            7,
        )
        .unwrap();
        let b = BoxRegion::parse(&["0", "1/3", "1"], &["1", "1", "2"], "9").unwrap();
        let want: u128 = b
            .lattice_points()
            .unwrap()
            .map(|x| {
                let v = f.evaluate(&x).unwrap() as u64;
                factorize(v)
                    .unwrap()
                    .pairs()
                    .iter()
                    .map(|&(_, e)| crate::arith::tau_k_prime_power(3, e) as u128)
                    .product::<u128>()
            })
            .sum();
        assert_eq!(exact_sigma(&f, 3, &b).unwrap().total, want);
    }

    #[test]
    fn permutation_invariance() {
        let f = QuadraticPolynomial::new(
            vec![vec![3, 1, 0], vec![1, 2, 0], vec![0, 0, 1]],
            vec![0, 1, 0],
            2,
        )
        .unwrap();
        let b = BoxRegion::parse(&["0", "1", "1/2"], &["2", "3", "1"], "5").unwrap();
        let perm = [2usize, 0, 1];
        let g = f.permuted(&perm);
        let pick = |v: &[num_rational::BigRational]| {
            perm.iter().map(|&i| v[i].clone()).collect::<Vec<_>>()
        };
        let c = BoxRegion::new(pick(b.lo()), pick(b.hi()), b.dilation().clone()).unwrap();
        assert_eq!(
            exact_sigma(&f, 2, &b).unwrap().total,
            exact_sigma(&g, 2, &c).unwrap().total
        );
    }

    #[test]
    fn inadmissible_and_resource_errors() {
        let f = QuadraticPolynomial::new(
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, -1]],
            vec![0; 3],
            0,
        )
        .unwrap();
        let b = BoxRegion::cube(3, 0, 1, 3).unwrap();
        assert!(matches!(
            exact_sigma(&f, 2, &b),
            Err(Error::Inadmissible { .. })
        ));
        assert!(matches!(
            exact_sigma_capped(&squares(), 2, &b, 10),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn progression_examples() {
        assert_eq!(ap_exact_sum(2, 10.0, 1, 3).unwrap(), 10);
        assert_eq!(ap_exact_sum(2, 10.0, 1, 1).unwrap(), 27);
        assert_eq!(ap_exact_sum(2, 6.5, 7, 9).unwrap(), 0);
        assert_eq!(ap_exact_sum(2, 0.5, 1, 1).unwrap(), 0);
        assert!(ap_exact_sum(2, 10.0, 0, 3).is_err());
        let table = sieve_tau_k(3, 5000).unwrap();
        for q in [1u64, 2, 6, 7, 30] {
            let parts: u128 = (1..=q).map(|h| ap_sum_from_table(&table, 5000, h, q)).sum();
            assert_eq!(parts, ap_sum_from_table(&table, 5000, 1, 1));
        }
    }
}
