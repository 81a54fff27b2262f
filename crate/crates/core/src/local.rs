//! Local solution densities `ρ_F(p^ℓ)` and complete exponential sums.
//!
//! Three independent ways of counting `#{h mod p^ℓ : F(h) ≡ 0}` live here:
//!
//! * [`rho_brute`] enumerates all `p^{ℓn}` residues;
//! * [`rho_lifted`] lifts the solution set one level at a time, scanning the
//!   `pⁿ` offsets above each solution;
//! * [`PrimeDensities`] (the default) splits solutions mod `p` into smooth and
//!   singular ones. A smooth solution has exactly `p^{(ℓ-1)(n-1)}` lifts. A
//!   singular one `h₀` lifts only if `p² | F(h₀)`, and its lifts are counted by
//!   a rescaled quadratic at level `ℓ - 2`. At odd primes not dividing
//!   `det Q` the mod-`p` count has a closed form, so the cost does not grow
//!   with `p`.

use crate::arith::{is_prime, pow_mod};
use crate::error::{Error, Result};
use crate::quad::QuadraticPolynomial;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::HashMap;

/// Largest residue set that any brute-force scan will walk.
pub const ENUMERATION_CAP: u128 = 200_000_000;

/// `#{h mod p^ℓ : F(h) ≡ 0}` and `ρ = count / p^{ℓ(n-1)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalDensity {
    pub p: u64,
    pub level: u32,
    pub count: BigUint,
    pub rho: BigRational,
}

/// `S_F(q, a) = Σ_{h mod q} e(aF(h)/q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSumValue {
    pub q: u64,
    pub a: u64,
    pub value: Complex64,
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{p} is not prime")))
    }
}

fn modulus_too_large(what: &str, size: u128) -> Error {
    Error::Resource(format!(
        "modulus too large: {what} needs {size} residues (cap {ENUMERATION_CAP})"
    ))
}

fn enumeration_size(q: u128, n: usize) -> Option<u128> {
    q.checked_pow(n as u32).filter(|&s| s <= ENUMERATION_CAP)
}

fn density(p: u64, level: u32, n: usize, count: BigUint) -> LocalDensity {
    let denom = BigUint::from(p).pow(level * (n as u32 - 1));
    let rho = BigRational::new(BigInt::from(count.clone()), BigInt::from(denom));
    LocalDensity {
        p,
        level,
        count,
        rho,
    }
}

/// `F(h) mod m` in `[0, m)`, for `h` with entries in `[0, m)` and `m <= 2^40`.
fn eval_mod(poly: &QuadraticPolynomial, h: &[i128], m: i128) -> i128 {
    let n = poly.dim();
    let mut acc = i128::from(poly.constant()).rem_euclid(m);
    for i in 0..n {
        let mut row = i128::from(poly.linear()[i]);
        for j in 0..n {
            row += i128::from(poly.q(i, j)) * h[j];
        }
        acc = (acc + row.rem_euclid(m) * h[i]) % m;
    }
    acc
}

fn odometer(h: &mut [i128], m: i128) -> bool {
    for v in h.iter_mut().rev() {
        *v += 1;
        if *v < m {
            return true;
        }
        *v = 0;
    }
    false
}

/// Counts residues `h mod m` with `F(h) ≡ r`, for every `r`, in parallel over
/// the first coordinate. Along the last coordinate `F` is a quadratic in one
/// variable and is stepped by finite differences.
fn value_distribution(poly: &QuadraticPolynomial, m: u64) -> Result<Vec<u64>> {
    let n = poly.dim();
    enumeration_size(u128::from(m), n).ok_or_else(|| {
        modulus_too_large("value distribution", u128::from(m).saturating_pow(n as u32))
    })?;
    let mi = i128::from(m);
    let last = n - 1;
    let a = i128::from(poly.q(last, last)).rem_euclid(mi);
    let counts = (0..mi)
        .into_par_iter()
        .fold(
            || vec![0u64; m as usize],
            |mut counts, first| {
                let mut h = vec![0i128; n];
                h[0] = first;
                loop {
                    // h[last] = 0 here
                    let mut v = eval_mod(poly, &h, mi);
                    let b: i128 = i128::from(poly.linear()[last])
                        + (0..last)
                            .map(|j| 2 * i128::from(poly.q(last, j)) * h[j])
                            .sum::<i128>();
                    let mut d = (a + b).rem_euclid(mi);
                    let two_a = (2 * a) % mi;
                    for _ in 0..m {
                        counts[v as usize] += 1;
                        v += d;
                        if v >= mi {
                            v -= mi;
                        }
                        d += two_a;
                        if d >= mi {
                            d -= mi;
                        }
                    }
                    if !odometer(&mut h[1..last], mi) {
                        break;
                    }
                }
                counts
            },
        )
        .reduce(
            || vec![0u64; m as usize],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

/// `ρ_F(p^ℓ)` by enumerating every residue mod `p^ℓ`.
pub fn rho_brute(poly: &QuadraticPolynomial, p: u64, level: u32) -> Result<LocalDensity> {
    check_prime(p)?;
    let n = poly.dim();
    let m = u128::from(p).checked_pow(level).filter(|&m| m <= 1 << 40);
    let m = m.ok_or_else(|| modulus_too_large("brute-force density", u128::MAX))?;
    enumeration_size(m, n)
        .ok_or_else(|| modulus_too_large("brute-force density", m.saturating_pow(n as u32)))?;
    let zeros = value_distribution(poly, m as u64)?[0];
    Ok(density(p, level, n, BigUint::from(zeros)))
}

/// `ρ_F(p^ℓ)` by lifting solution fibers level by level. Each fiber is
/// scanned over all `pⁿ` offsets, so nothing is assumed about smoothness.
pub fn rho_lifted(poly: &QuadraticPolynomial, p: u64, level: u32) -> Result<LocalDensity> {
    check_prime(p)?;
    let n = poly.dim();
    if level == 0 {
        return Ok(density(p, 0, n, BigUint::one()));
    }
    let full = u128::from(p).checked_pow(level).filter(|&m| m <= 1 << 40);
    full.ok_or_else(|| modulus_too_large("lifted density", u128::MAX))?;
    let pi = i128::from(p);
    let offsets = enumeration_size(u128::from(p), n).ok_or_else(|| {
        modulus_too_large("lifting fiber", u128::from(p).saturating_pow(n as u32))
    })?;
    let offsets = offsets as usize;

    let mut solutions: Vec<Vec<i128>> = Vec::new();
    let mut h = vec![0i128; n];
    loop {
        if eval_mod(poly, &h, pi) == 0 {
            solutions.push(h.clone());
        }
        if !odometer(&mut h, pi) {
            break;
        }
    }
    let mut step = pi;
    for _ in 1..level {
        let next_mod = step * pi;
        if (solutions.len() as u128) * (offsets as u128) > ENUMERATION_CAP {
            return Err(modulus_too_large(
                "lifted density",
                solutions.len() as u128 * offsets as u128,
            ));
        }
        solutions = solutions
            .par_iter()
            .flat_map_iter(|base| {
                let mut out = Vec::new();
                let mut u = vec![0i128; n];
                let mut x = vec![0i128; n];
                loop {
                    for i in 0..n {
                        x[i] = base[i] + step * u[i];
                    }
                    if eval_mod(poly, &x, next_mod) == 0 {
                        out.push(x.clone());
                    }
                    if !odometer(&mut u, pi) {
                        break;
                    }
                }
                out
            })
            .collect();
        step = next_mod;
    }
    Ok(density(p, level, n, BigUint::from(solutions.len())))
}

/// `ρ_F(p^ℓ)` by the default (stratified) method.
pub fn rho(poly: &QuadraticPolynomial, p: u64, level: u32) -> Result<LocalDensity> {
    PrimeDensities::new(poly, p)?.density(level)
}

/// `ρ_F(q)` for composite `q`, by multiplicativity.
pub fn rho_q(poly: &QuadraticPolynomial, q: u64) -> Result<BigRational> {
    let f = crate::arith::factorize(q)?;
    let mut out = BigRational::one();
    for &(p, e) in f.pairs() {
        out *= rho(poly, p, e)?.rho;
    }
    Ok(out)
}

/// Memoized density counter for one polynomial at one prime.
#[derive(Debug, Clone)]
pub struct PrimeDensities {
    poly: QuadraticPolynomial,
    p: u64,
    /// `p` odd and `p ∤ det Q`: the level-one count has a closed form.
    good: bool,
    det_mod_p: u64,
    memo: HashMap<(Vec<BigInt>, BigInt, u32), BigUint>,
}

impl PrimeDensities {
    pub fn new(poly: &QuadraticPolynomial, p: u64) -> Result<Self> {
        check_prime(p)?;
        let det_mod_p = poly
            .determinant()
            .mod_floor(&BigInt::from(p))
            .to_u64()
            .expect("reduced");
        let good = p != 2 && det_mod_p != 0;
        if !good {
            enumeration_size(u128::from(p), poly.dim()).ok_or_else(|| {
                modulus_too_large(
                    "singular-prime scan",
                    u128::from(p).saturating_pow(poly.dim() as u32),
                )
            })?;
        }
        Ok(Self {
            poly: poly.clone(),
            p,
            good,
            det_mod_p,
            memo: HashMap::new(),
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn count(&mut self, level: u32) -> Result<BigUint> {
        let g: Vec<BigInt> = self
            .poly
            .linear()
            .iter()
            .map(|&v| BigInt::from(v))
            .collect();
        let c = BigInt::from(self.poly.constant());
        self.count_shifted(g, c, level)
    }

    pub fn density(&mut self, level: u32) -> Result<LocalDensity> {
        let count = self.count(level)?;
        Ok(density(self.p, level, self.poly.dim(), count))
    }

    pub fn rho(&mut self, level: u32) -> Result<BigRational> {
        Ok(self.density(level)?.rho)
    }

    /// Solutions mod `p^ℓ` of `G(u) = uᵀQu + g·u + c`.
    fn count_shifted(&mut self, g: Vec<BigInt>, c: BigInt, level: u32) -> Result<BigUint> {
        if level == 0 {
            return Ok(BigUint::one());
        }
        let p = BigInt::from(self.p);
        let modulus = num_traits::pow(p.clone(), level as usize);
        let g: Vec<BigInt> = g.iter().map(|v| v.mod_floor(&modulus)).collect();
        let c = c.mod_floor(&modulus);
        let key = (g, c, level);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let (g, c, _) = &key;
        let n = self.poly.dim();
        let g_mod_p: Vec<i64> = g
            .iter()
            .map(|v| (v % &p).to_i64().expect("reduced"))
            .collect();
        let c_mod_p = (c % &p).to_i64().expect("reduced");
        let (smooth, singular) = self.level_one(&g_mod_p, c_mod_p)?;

        let pu = BigUint::from(self.p);
        let mut total = smooth * pu.pow((level - 1) * (n as u32 - 1));
        let p_squared = &p * &p;
        for h0 in singular {
            if level == 1 {
                total += 1u32;
                continue;
            }
            let h0: Vec<BigInt> = h0.into_iter().map(BigInt::from).collect();
            let value = self.eval_big(g, c, &h0);
            if !value.is_multiple_of(&p_squared) {
                continue;
            }
            let grad: Vec<BigInt> = (0..n)
                .map(|i| {
                    let mut acc = g[i].clone();
                    for (j, hj) in h0.iter().enumerate() {
                        acc += 2 * self.poly.q(i, j) * hj;
                    }
                    debug_assert!(acc.is_multiple_of(&p));
                    acc / &p
                })
                .collect();
            let inner = self.count_shifted(grad, value / &p_squared, level - 2)?;
            total += inner * pu.pow(n as u32);
        }
        self.memo.insert(key, total.clone());
        Ok(total)
    }

    fn eval_big(&self, g: &[BigInt], c: &BigInt, h: &[BigInt]) -> BigInt {
        let n = self.poly.dim();
        let mut acc = c.clone();
        for i in 0..n {
            let mut row = g[i].clone();
            for (j, hj) in h.iter().enumerate() {
                row += self.poly.q(i, j) * hj;
            }
            acc += row * &h[i];
        }
        acc
    }

    /// Number of smooth zeros mod `p` and the list of singular zeros, for
    /// `G(u) = uᵀQu + g·u + c` with `g`, `c` already reduced mod `p`.
    fn level_one(&self, g: &[i64], c: i64) -> Result<(BigUint, Vec<Vec<i64>>)> {
        if self.good {
            Ok(self.level_one_closed(g, c))
        } else {
            Ok(self.level_one_scan(g, c))
        }
    }

    fn level_one_closed(&self, g: &[i64], c: i64) -> (BigUint, Vec<Vec<i64>>) {
        let p = self.p;
        let n = self.poly.dim();
        let pi = i128::from(p);
        // centre h₀ solves 2Qh₀ ≡ -g; then G(h₀ + y) = yᵀQy + G(h₀)
        let matrix: Vec<Vec<i128>> = (0..n)
            .map(|i| (0..n).map(|j| i128::from(2 * self.poly.q(i, j))).collect())
            .collect();
        let rhs: Vec<i128> = g.iter().map(|&v| i128::from(-v)).collect();
        let h0 = solve_mod_prime(matrix, rhs, pi).expect("2Q is invertible at a good prime");
        let shifted = self.poly_with(g, c);
        let centre = eval_mod(&shifted, &h0, pi);
        let b = (pi - centre) % pi;

        let pb = BigInt::from(p);
        let main = num_traits::pow(pb.clone(), n - 1);
        let delta = i128::from(self.det_mod_p);
        let sign = |e: usize| if e % 2 == 0 { 1 } else { pi - 1 };
        let total: BigInt = if n % 2 == 1 {
            let half = (n - 1) / 2;
            let arg = (sign(half) * b % pi) * delta % pi;
            main + num_traits::pow(pb, half) * legendre(arg as u64, p)
        } else {
            let half = n / 2;
            let nu = if b != 0 {
                BigInt::from(-1)
            } else {
                BigInt::from(p - 1)
            };
            let arg = sign(half) * delta % pi;
            main + nu * num_traits::pow(pb, half - 1) * legendre(arg as u64, p)
        };
        let total = total.to_biguint().expect("point counts are nonnegative");
        if centre == 0 {
            let h0 = h0.into_iter().map(|v| v as i64).collect();
            (total - 1u32, vec![h0])
        } else {
            (total, Vec::new())
        }
    }

    fn level_one_scan(&self, g: &[i64], c: i64) -> (BigUint, Vec<Vec<i64>>) {
        let n = self.poly.dim();
        let pi = i128::from(self.p);
        let shifted = self.poly_with(g, c);
        let mut smooth = 0u64;
        let mut singular = Vec::new();
        let mut h = vec![0i128; n];
        loop {
            if eval_mod(&shifted, &h, pi) == 0 {
                let critical = (0..n).all(|i| {
                    let d: i128 = i128::from(g[i])
                        + (0..n)
                            .map(|j| 2 * i128::from(self.poly.q(i, j)) * h[j])
                            .sum::<i128>();
                    d.rem_euclid(pi) == 0
                });
                if critical {
                    singular.push(h.iter().map(|&v| v as i64).collect());
                } else {
                    smooth += 1;
                }
            }
            if !odometer(&mut h, pi) {
                break;
            }
        }
        (BigUint::from(smooth), singular)
    }

    fn poly_with(&self, g: &[i64], c: i64) -> QuadraticPolynomial {
        QuadraticPolynomial::new(self.poly.matrix(), g.to_vec(), c)
            .expect("same quadratic part as a validated polynomial")
    }
}

/// Legendre symbol `(a/p)` for odd prime `p`.
fn legendre(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        0
    } else if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Solves `Ax ≡ b (mod p)`; `None` if `A` is singular mod `p`.
fn solve_mod_prime(mut a: Vec<Vec<i128>>, mut b: Vec<i128>, p: i128) -> Option<Vec<i128>> {
    let n = b.len();
    for row in a.iter_mut() {
        row.iter_mut().for_each(|v| *v = v.rem_euclid(p));
    }
    b.iter_mut().for_each(|v| *v = v.rem_euclid(p));
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = pow_mod(a[col][col] as u64, (p - 2) as u64, p as u64) as i128;
        for j in 0..n {
            a[col][j] = a[col][j] * inv % p;
        }
        b[col] = b[col] * inv % p;
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col];
                for j in 0..n {
                    a[r][j] = (a[r][j] - f * a[col][j]).rem_euclid(p);
                }
                b[r] = (b[r] - f * b[col]).rem_euclid(p);
            }
        }
    }
    Some(b)
}

fn roots_of_unity(q: u64) -> Vec<Complex64> {
    (0..q)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / q as f64))
        .collect()
}

fn inverse_mod(a: u64, m: u64) -> u64 {
    let e = BigInt::from(a).extended_gcd(&BigInt::from(m));
    e.x.mod_floor(&BigInt::from(m)).to_u64().expect("reduced")
}

/// `S_F(q, a)`. Prime-power parts are enumerated through the value
/// distribution of `F mod p^m`; coprime parts combine by the twisted
/// multiplicativity `S_F(q₁q₂, a) = S_F(q₁, a q₂⁻¹) S_F(q₂, a q₁⁻¹)`.
pub fn gauss_sum(poly: &QuadraticPolynomial, q: u64, a: u64) -> Result<GaussSumValue> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus q must be positive".into()));
    }
    if a.gcd(&q) != 1 {
        return Err(Error::InvalidInput(format!("gcd({a}, {q}) != 1")));
    }
    let mut value = Complex64::new(1.0, 0.0);
    for (_, _, pe) in crate::arith::factorize(q)?.prime_powers() {
        let rest = q / pe;
        let a_part = (a % pe) * inverse_mod(rest % pe, pe) % pe;
        let counts = value_distribution(poly, pe)?;
        value *= twisted_sum(&counts, a_part, &roots_of_unity(pe));
    }
    Ok(GaussSumValue { q, a, value })
}

fn twisted_sum(counts: &[u64], a: u64, roots: &[Complex64]) -> Complex64 {
    let q = counts.len() as u64;
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(r, &c)| roots[((a * r as u64) % q) as usize] * c as f64)
        .sum()
}

/// `S_F(q) = Σ_{(a,q)=1} q^{-n} S_F(q,a)`, computed exactly from densities:
/// multiplicative in `q`, with `S_F(p^m) = ρ_F(p^m) − ρ_F(p^{m−1})`.
pub fn s_f(poly: &QuadraticPolynomial, q: u64) -> Result<BigRational> {
    let mut out = BigRational::one();
    for &(p, m) in crate::arith::factorize(q)?.pairs() {
        out *= s_f_prime_power(poly, p, m)?;
    }
    Ok(out)
}

pub fn s_f_prime_power(poly: &QuadraticPolynomial, p: u64, m: u32) -> Result<BigRational> {
    if m == 0 {
        return Ok(BigRational::one());
    }
    let mut dens = PrimeDensities::new(poly, p)?;
    Ok(dens.rho(m)? - dens.rho(m - 1)?)
}

/// `S_F(q)` by direct enumeration, exactly: averaging `e(aF(h)/q)` over `a`
/// coprime to `q` turns each term into a Ramanujan sum `c_q(F(h))`, which is
/// an integer. Independent of any density computation.
pub fn s_f_enumerated(poly: &QuadraticPolynomial, q: u64) -> Result<BigRational> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus q must be positive".into()));
    }
    let counts = value_distribution(poly, q)?;
    let divisors = crate::arith::factorize(q)?.divisors();
    let mobius = |m: u64| {
        crate::arith::factorize(m)
            .map(|f| i64::from(f.mobius()))
            .unwrap_or(0)
    };
    // c_q(r) = Σ_{d | gcd(q, r)} d μ(q/d)
    let ramanujan: Vec<i64> = divisors.iter().map(|&d| d as i64 * mobius(q / d)).collect();
    let mut total = BigInt::zero();
    for (r, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let g = (r as u64).gcd(&q);
        let cq: i64 = divisors
            .iter()
            .zip(&ramanujan)
            .filter(|(&d, _)| g % d == 0)
            .map(|(_, &v)| v)
            .sum();
        total += BigInt::from(c) * cq;
    }
    let denom = num_traits::pow(BigInt::from(q), poly.dim());
    Ok(BigRational::new(total, denom))
}

/// `S_F(q)` as the complex average of [`gauss_sum`] over reduced residues;
/// the imaginary part is returned so callers can check that it vanishes.
pub fn s_f_complex(poly: &QuadraticPolynomial, q: u64) -> Result<Complex64> {
    let n = poly.dim() as i32;
    let mut acc = Complex64::new(0.0, 0.0);
    for a in (1..=q).filter(|a| a.gcd(&q) == 1) {
        acc += gauss_sum(poly, q, a)?.value;
    }
    Ok(acc / (q as f64).powi(n))
}

/// `|x|` as `f64` for a rational, convenient in bound checks.
#[cfg(test)]
fn abs_f64(r: &BigRational) -> f64 {
    crate::quad::rational_to_f64(&num_traits::Signed::abs(r))
}
