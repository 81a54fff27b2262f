//! Stieltjes constants, Laurent expansions of `ζ(s)^k` at `s = 1`, and the
//! weighted residues `res_{s=1} (s-1)^w ζ(s)^k`.
//!
//! The constants come from their defining limit
//! `γ_n = lim_M (Σ_{d≤M} logⁿd/d − log^{n+1}M/(n+1))`, truncated at `M = N`
//! and corrected with Euler–Maclaurin terms. The partial sums cancel to many
//! digits for large `n`, so that step runs in multiprecision; everything
//! downstream is `f64`.

use crate::error::{Error, Result};
use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::sync::OnceLock;

/// Largest index held by the Stieltjes table.
pub const STIELTJES_MAX: usize = 30;

const PRECISION_BITS: usize = 448;
const EM_CUTOFF: u64 = 1000;
const EM_TERMS: usize = 20;

/// `γ_0 … γ_STIELTJES_MAX`.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesTable {
    pub values: Vec<f64>,
}

pub fn stieltjes_table() -> &'static StieltjesTable {
    static TABLE: OnceLock<StieltjesTable> = OnceLock::new();
    TABLE.get_or_init(|| StieltjesTable {
        values: compute_stieltjes(STIELTJES_MAX),
    })
}

/// `γ_n`, accurate to well below `10⁻¹²` for `n <= STIELTJES_MAX`.
pub fn stieltjes_constant(n: usize) -> Result<f64> {
    stieltjes_table()
        .values
        .get(n)
        .copied()
        .ok_or_else(|| Error::InvalidInput(format!("Stieltjes index {n} exceeds {STIELTJES_MAX}")))
}

/// The raw truncated limit `Σ_{d≤M} logⁿd/d − log^{n+1}M/(n+1)` in `f64`.
/// Independent of the table, but only good to about `logⁿM / M`.
pub fn stieltjes_partial_sum(n: usize, m: u64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for d in 2..=m {
        let x = d as f64;
        let term = x.ln().powi(n as i32) / x;
        // Neumaier
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    if n == 0 {
        sum += 1.0;
    }
    let l = (m as f64).ln();
    sum + comp - l.powi(n as i32 + 1) / (n as f64 + 1.0)
}

fn big_from_rational(r: &BigRational, p: usize, rm: RoundingMode, cc: &mut Consts) -> BigFloat {
    let num = BigFloat::parse(&r.numer().to_string(), Radix::Dec, p, rm, cc);
    let den = BigFloat::parse(&r.denom().to_string(), Radix::Dec, p, rm, cc);
    num.div(&den, p, rm)
}

fn compute_stieltjes(nmax: usize) -> Vec<f64> {
    let p = PRECISION_BITS;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().expect("constant cache");
    let big = |v: u64| BigFloat::from_u64(v, p);
    let n_cut = EM_CUTOFF;

    let logs: Vec<BigFloat> = (1..=n_cut).map(|d| big(d).ln(p, rm, &mut cc)).collect();
    // terms[d-1] = logⁿ(d) / d, advanced in place as n grows
    let mut terms: Vec<BigFloat> = (1..=n_cut).map(|d| big(1).div(&big(d), p, rm)).collect();
    let log_n = logs[(n_cut - 1) as usize].clone();

    // B_{2j}/(2j)!
    let weights: Vec<BigFloat> = (1..=EM_TERMS)
        .map(|j| {
            let w = bernoulli(2 * j) / factorial_rational(2 * j);
            big_from_rational(&w, p, rm, &mut cc)
        })
        .collect();

    let mut out = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        if n > 0 {
            for (t, l) in terms.iter_mut().zip(&logs) {
                *t = t.mul(l, p, rm);
            }
        }
        let mut sum = big(0);
        for t in &terms {
            sum = sum.add(t, p, rm);
        }
        let log_pow_n = log_n.powi(n, p, rm);
        let integral = log_pow_n.mul(&log_n, p, rm).div(&big(n as u64 + 1), p, rm);
        let f_at_cut = terms[(n_cut - 1) as usize].clone();
        let mut gamma = sum
            .sub(&integral, p, rm)
            .sub(&f_at_cut.div(&big(2), p, rm), p, rm);

        // f^{(m)}(x) = x^{-1-m} Σ_i c_i logⁱx, starting from c = e_n
        let mut coeffs: Vec<BigFloat> = (0..=n).map(|i| big(u64::from(i == n))).collect();
        let log_powers: Vec<BigFloat> = (0..=n).map(|i| log_n.powi(i, p, rm)).collect();
        for m in 0..2 * EM_TERMS {
            let mf = big(m as u64 + 1);
            let next: Vec<BigFloat> = (0..=n)
                .map(|i| {
                    let mut v = coeffs[i].mul(&mf, p, rm).neg();
                    if i < n {
                        v = v.add(&coeffs[i + 1].mul(&big(i as u64 + 1), p, rm), p, rm);
                    }
                    v
                })
                .collect();
            coeffs = next;
            // derivative order m + 1; odd orders 2j - 1 carry B_{2j}
            if m % 2 == 0 {
                let j = m / 2;
                let mut poly = big(0);
                for (c, lp) in coeffs.iter().zip(&log_powers) {
                    poly = poly.add(&c.mul(lp, p, rm), p, rm);
                }
                let scale = big(n_cut).powi(m + 2, p, rm);
                let deriv = poly.div(&scale, p, rm);
                gamma = gamma.sub(&weights[j].mul(&deriv, p, rm), p, rm);
            }
        }
        out.push(
            format!("{gamma}")
                .parse::<f64>()
                .expect("finite Stieltjes constant"),
        );
    }
    out
}

fn factorial_rational(n: usize) -> BigRational {
    BigRational::from_integer((1..=n).map(BigInt::from).product())
}

/// Bernoulli number `B_m` (with `B_1 = -1/2`).
pub fn bernoulli(m: usize) -> BigRational {
    static CACHE: OnceLock<Vec<BigRational>> = OnceLock::new();
    let table = CACHE.get_or_init(|| {
        let size = 2 * EM_TERMS.max(32) + 2;
        let mut b: Vec<BigRational> = vec![BigRational::one()];
        for m in 1..=size {
            // Σ_{j=0}^{m} C(m+1, j) B_j = 0
            let mut acc = BigRational::zero();
            let mut binom = BigInt::one();
            for (j, bj) in b.iter().enumerate() {
                acc += BigRational::from_integer(binom.clone()) * bj;
                binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
            }
            b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
        }
        b
    });
    table[m].clone()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Laurent coefficients `c_{-pole}, …, c_{d}` of a function at `s = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentBlock {
    pub pole_order: usize,
    /// `coeffs[i]` multiplies `(s-1)^{i - pole_order}`.
    pub coeffs: Vec<f64>,
}

impl LaurentBlock {
    /// Highest power of `(s-1)` carried.
    pub fn top_order(&self) -> i64 {
        self.coeffs.len() as i64 - 1 - self.pole_order as i64
    }

    /// Coefficient of `(s-1)^j`; zero below the pole, `None` past truncation.
    pub fn coeff(&self, j: i64) -> Option<f64> {
        let idx = j + self.pole_order as i64;
        if idx < 0 {
            Some(0.0)
        } else {
            self.coeffs.get(idx as usize).copied()
        }
    }

    pub fn residue(&self) -> f64 {
        self.coeff(-1).expect("blocks always reach order -1")
    }

    /// Product, truncated at the lower of the two valid orders.
    pub fn mul(&self, other: &Self) -> Self {
        let pole = self.pole_order + other.pole_order;
        let top = (self.top_order() - other.pole_order as i64)
            .min(other.top_order() - self.pole_order as i64);
        let len = (top + pole as i64 + 1).max(0) as usize;
        let mut coeffs = vec![0.0; len];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j < len {
                    coeffs[i + j] += a * b;
                }
            }
        }
        Self {
            pole_order: pole,
            coeffs,
        }
    }
}

/// `ζ(s) = 1/(s-1) + Σ_{j≤d} (-1)^j γ_j/j! (s-1)^j`.
pub fn zeta_laurent(d: usize) -> Result<LaurentBlock> {
    let mut coeffs = vec![1.0];
    for j in 0..=d {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(sign * stieltjes_constant(j)? / factorial(j));
    }
    Ok(LaurentBlock {
        pole_order: 1,
        coeffs,
    })
}

/// Laurent expansion of `ζ(s)^k` through `(s-1)^d`.
pub fn zeta_pow_laurent(k: usize, d: usize) -> Result<LaurentBlock> {
    if k == 0 {
        return Err(Error::InvalidInput("power k must be at least 1".into()));
    }
    if d + k > STIELTJES_MAX + 1 {
        return Err(Error::InvalidInput(format!(
            "order {d} with k = {k} needs γ_n beyond n = {STIELTJES_MAX}"
        )));
    }
    // ζ^k = g^k / (s-1)^k with g = (s-1)ζ regular; expand g to k + d terms
    let len = k + d + 1;
    let g = zeta_laurent(len - 2)?.coeffs;
    let mut acc = vec![0.0; len];
    acc[0] = 1.0;
    for _ in 0..k {
        let mut next = vec![0.0; len];
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in g.iter().enumerate().take(len - i) {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    Ok(LaurentBlock {
        pole_order: k,
        coeffs: acc,
    })
}

/// `res_{s=1} (s-1)^w ζ(s)^k`: the coefficient `c_{-1-w}` of `ζ^k`, and `0`
/// once `w >= k`.
pub fn weighted_residue(k: usize, w: usize) -> f64 {
    if w >= k {
        return 0.0;
    }
    if w + 1 == k {
        return 1.0;
    }
    weighted_residues(k)[w]
}

fn weighted_residues(k: usize) -> Vec<f64> {
    let block = zeta_pow_laurent(k, 0).expect("k is small enough for the Stieltjes table");
    (0..k)
        .map(|w| block.coeff(-1 - w as i64).expect("within block"))
        .collect()
}

/// `ζ(s)` for complex `s ≠ 1` by Euler–Maclaurin with cutoff 20 and 30
/// correction terms; accurate near the real segment `|s - 1| <= 1`.
pub fn zeta_complex(s: Complex64) -> Complex64 {
    const N: u32 = 20;
    const TERMS: usize = 30;
    let one = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..N {
        sum += (-s * f64::from(n).ln()).exp();
    }
    let nf = f64::from(N);
    let n_pow = (-s * nf.ln()).exp();
    sum += n_pow * nf / (s - one) + n_pow * 0.5;
    // Σ B_{2j}/(2j)! · s(s+1)…(s+2j-2) · N^{-s-2j+1}
    let mut rising = s;
    let mut power = n_pow / nf;
    for j in 1..=TERMS {
        let b = crate::quad::rational_to_f64(&(bernoulli(2 * j) / factorial_rational(2 * j)));
        sum += rising * power * b;
        rising *= (s + f64::from(2 * j as u32 - 1)) * (s + f64::from(2 * j as u32));
        power /= nf * nf;
    }
    sum
}

/// `(1/2πi) ∮_{|s-1|=radius} (s-1)^w ζ(s)^k ds` by the trapezoid rule.
pub fn contour_residue(k: usize, w: usize, nodes: usize, radius: f64) -> f64 {
    contour_integral(nodes, radius, |s| {
        zeta_complex(s).powu(k as u32) * (s - 1.0).powu(w as u32)
    })
}

/// `(1/2πi) ∮_{|s-1|=radius} g(s) ds` by the trapezoid rule.
pub fn contour_integral(nodes: usize, radius: f64, g: impl Fn(Complex64) -> Complex64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let z = Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / nodes as f64);
        // ds = i z dθ, and the 1/(2πi) cancels against i·dθ·nodes/2π
        acc += g(Complex64::new(1.0, 0.0) + z) * z;
    }
    (acc / nodes as f64).re
}
