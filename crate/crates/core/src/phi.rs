//! The arithmetic kernel of the major arcs.
//!
//! * `f_k(q, δ, s)`: the coefficient function of Smith's main term for
//!   `Σ_{m ≡ h (q)} τ_k(m)`, with `δ = gcd(h, q)`;
//! * `Φ_k(q, s) = Σ_{δ|q} μ(δ) f_k(q, q/δ, s)`, multiplicative in `q`, with an
//!   explicit prime-power form;
//! * `β_{k,r}(q)` and the main term `M_k(x; h, q)`.
//!
//! Everything is a [`SeriesJet`], by default about `s = 1`.

use crate::arith::{factorize, ordered_factorizations, tau_k_prime_power};
use crate::error::{Error, Result};
use crate::jet::SeriesJet;
use crate::zeta::weighted_residue;
use num_complex::Complex64;
use num_integer::Integer;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// `max(k - 1, 4) + 2`: enough for `k - 1` derivatives plus guard terms.
pub fn default_jet_order(k: u32) -> usize {
    (k as usize).saturating_sub(1).max(4) + 2
}

fn at_one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// How `Φ_k(q, s)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMode {
    /// Product of the prime-power closed forms.
    ClosedForm,
    /// `Σ_{δ|q} μ(δ) f_k(q, q/δ, s)` straight from the definition of `f_k`.
    Definition,
}

/// Signature of a prime-power evaluator `(k, p, m, order, centre) ↦ Φ_k(p^m, ·)`.
pub type PrimePowerPhi = dyn Fn(u32, u64, u32, usize, Complex64) -> SeriesJet + Sync;

struct InversePowers {
    order: usize,
    center: Complex64,
    cache: HashMap<u64, SeriesJet>,
}

impl InversePowers {
    fn new(order: usize, center: Complex64) -> Self {
        Self {
            order,
            center,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, n: u64) -> &SeriesJet {
        let (order, center) = (self.order, self.center);
        self.cache
            .entry(n)
            .or_insert_with(|| SeriesJet::inverse_power(n as f64, order, center))
    }
}

/// `f_k(q, δ, s)` about `s = 1`.
pub fn f_k_jet(k: u32, q: u64, delta: u64, order: usize) -> Result<SeriesJet> {
    f_k_jet_at(k, q, delta, order, at_one())
}

/// `f_k(q,δ,s) = (φ(q/δ) δ^s)^{-1} (Σ_{d|q/δ} μ(d) d^{-s})^k
///   · Σ_{d₁⋯d_k=δ} Π_i Σ_{t_i | d_{i+1}⋯d_k, (t_i, q/δ)=1} μ(t_i) t_i^{-s}`.
pub fn f_k_jet_at(
    k: u32,
    q: u64,
    delta: u64,
    order: usize,
    center: Complex64,
) -> Result<SeriesJet> {
    if k == 0 || q == 0 || delta == 0 {
        return Err(Error::InvalidInput("k, q and δ must be positive".into()));
    }
    if q % delta != 0 {
        return Err(Error::InvalidInput(format!(
            "δ = {delta} does not divide q = {q}"
        )));
    }
    let rest = q / delta;
    let rest_f = factorize(rest)?;
    let mut pows = InversePowers::new(order, center);
    let one = SeriesJet::one(order, center);

    let mut mobius_sum = SeriesJet::constant(Complex64::new(0.0, 0.0), order, center);
    for d in rest_f.divisors() {
        let mu = factorize(d)?.mobius();
        if mu != 0 {
            mobius_sum = &mobius_sum + &pows.get(d).scale_real(f64::from(mu));
        }
    }

    // inner Möbius sums, one per divisor D of δ
    let mut inner: HashMap<u64, SeriesJet> = HashMap::new();
    for big_d in factorize(delta)?.divisors() {
        let mut acc = SeriesJet::constant(Complex64::new(0.0, 0.0), order, center);
        for t in factorize(big_d)?.divisors() {
            let mu = factorize(t)?.mobius();
            if mu != 0 && t.gcd(&rest) == 1 {
                acc = &acc + &pows.get(t).scale_real(f64::from(mu));
            }
        }
        inner.insert(big_d, acc);
    }

    let mut factor_sum = SeriesJet::constant(Complex64::new(0.0, 0.0), order, center);
    let mut suffix = vec![1u64; k as usize + 1];
    for tuple in ordered_factorizations(delta, k as usize)? {
        for i in (0..k as usize).rev() {
            suffix[i] = suffix[i + 1] * tuple[i];
        }
        let mut term = one.clone();
        // P_i = d_{i+1}⋯d_k for i = 1..k, i.e. suffix[1..=k]
        for &p_i in &suffix[1..] {
            if p_i != 1 {
                term = &term * &inner[&p_i];
            }
        }
        factor_sum = &factor_sum + &term;
    }

    let totient = rest_f.totient() as f64;
    let delta_pow = pows.get(delta).clone();
    let out = &(&mobius_sum.powi(k) * &factor_sum) * &delta_pow;
    Ok(out.scale_real(1.0 / totient))
}

/// `Φ_k(p^m, s) = p^{-ms} (Σ_{v=1}^{k} (1-p^{-s})^{v-1} τ_v(p^{m-1})
///   − τ_k(p^{m-1}) p^s (1-p^{-s})^k / (p-1))`, and `1` for `m = 0`.
pub fn phi_prime_power_jet(k: u32, p: u64, m: u32, order: usize, center: Complex64) -> SeriesJet {
    let one = SeriesJet::one(order, center);
    if m == 0 {
        return one;
    }
    let e = SeriesJet::inverse_power(p as f64, order, center);
    let x = &one - &e;
    let mut sum = SeriesJet::constant(Complex64::new(0.0, 0.0), order, center);
    let mut x_pow = one.clone();
    for v in 1..=k {
        sum = &sum + &x_pow.scale_real(tau_k_prime_power(v, m - 1) as f64);
        x_pow = &x_pow * &x;
    }
    // x_pow = x^k now
    let p_s = SeriesJet::inverse_power(1.0 / p as f64, order, center);
    let tail = (&p_s * &x_pow).scale_real(tau_k_prime_power(k, m - 1) as f64 / (p - 1) as f64);
    &e.powi(m) * &(&sum - &tail)
}

/// `Φ_k(q, s)` about `s = 1`.
pub fn phi_jet(k: u32, q: u64, order: usize, mode: PhiMode) -> Result<SeriesJet> {
    phi_jet_at(k, q, order, at_one(), mode)
}

pub fn phi_jet_at(
    k: u32,
    q: u64,
    order: usize,
    center: Complex64,
    mode: PhiMode,
) -> Result<SeriesJet> {
    match mode {
        PhiMode::ClosedForm => phi_closed_with(k, q, order, center, &phi_prime_power_jet),
        PhiMode::Definition => phi_definition(k, q, order, center),
    }
}

/// Closed-form `Φ_k(q, s)` built from an arbitrary prime-power evaluator;
/// lets tests substitute a deliberately broken one.
pub fn phi_closed_with(
    k: u32,
    q: u64,
    order: usize,
    center: Complex64,
    prime_power: &PrimePowerPhi,
) -> Result<SeriesJet> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let mut out = SeriesJet::one(order, center);
    for &(p, m) in factorize(q)?.pairs() {
        out = &out * &prime_power(k, p, m, order, center);
    }
    Ok(out)
}

fn phi_definition(k: u32, q: u64, order: usize, center: Complex64) -> Result<SeriesJet> {
    let mut out = SeriesJet::constant(Complex64::new(0.0, 0.0), order, center);
    for delta in factorize(q)?.divisors() {
        let mu = factorize(delta)?.mobius();
        if mu != 0 {
            let f = f_k_jet_at(k, q, q / delta, order, center)?;
            out = &out + &f.scale_real(f64::from(mu));
        }
    }
    Ok(out)
}

/// Largest coefficient gap between the closed-form (through `prime_power`)
/// and definition jets of `Φ_k(q, s)` over `q <= q_max` and the given `k`s;
/// returns the gap and where it occurred.
pub fn mode_equivalence_gap(
    ks: &[u32],
    q_max: u64,
    order: usize,
    prime_power: &PrimePowerPhi,
) -> Result<(f64, u32, u64)> {
    use rayon::prelude::*;
    let center = at_one();
    let cases: Vec<(u32, u64)> = ks
        .iter()
        .flat_map(|&k| (1..=q_max).map(move |q| (k, q)))
        .collect();
    let gaps = cases
        .par_iter()
        .map(|&(k, q)| {
            let closed = phi_closed_with(k, q, order, center, prime_power)?;
            let def = phi_definition(k, q, order, center)?;
            Ok((closed.max_abs_diff(&def), k, q))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(gaps
        .into_iter()
        .fold((0.0, 0, 0), |best, g| if g.0 > best.0 { g } else { best }))
}

/// `Σ_{h mod q} e(-ah/q) f_k(q, gcd(h, q), s)` for each `a` coprime to `q`,
/// summed directly over `h`. The kernel `Φ_k` is defined by this sum being
/// independent of `a`.
pub fn twisted_f_sums(k: u32, q: u64, order: usize) -> Result<Vec<(u64, SeriesJet)>> {
    let center = at_one();
    let mut f_by_delta: HashMap<u64, SeriesJet> = HashMap::new();
    for delta in factorize(q)?.divisors() {
        f_by_delta.insert(delta, f_k_jet_at(k, q, delta, order, center)?);
    }
    let mut out = Vec::new();
    for a in (1..=q).filter(|a| a.gcd(&q) == 1) {
        let mut acc = SeriesJet::constant(Complex64::new(0.0, 0.0), order, center);
        for h in 1..=q {
            let phase = -std::f64::consts::TAU * ((a * h) % q) as f64 / q as f64;
            let w = Complex64::from_polar(1.0, phase);
            acc = &acc + &f_by_delta[&h.gcd(&q)].scale(w);
        }
        out.push((a, acc));
    }
    Ok(out)
}

/// Both sides of `Φ_k(1,s) − Φ_k(p,s) = (1 − 1/p)^{-1} (1 − p^{-s})^k` at `s`.
pub fn m1_identity_sides(
    k: u32,
    p: u64,
    s: Complex64,
    mode: PhiMode,
) -> Result<(Complex64, Complex64)> {
    let lhs = phi_jet_at(k, 1, 0, s, mode)?.value() - phi_jet_at(k, p, 0, s, mode)?.value();
    let x = Complex64::new(1.0, 0.0) - (-s * (p as f64).ln()).exp();
    let rhs = x.powu(k) / (1.0 - 1.0 / p as f64);
    Ok((lhs, rhs))
}

/// `I_k(p^m, s) = Σ_{d₁⋯d_k = p^m} Π_{i<k} (1 − p^{-s})^{[d_{i+1}⋯d_k ≠ 1]}`,
/// enumerated over ordered factorizations.
pub fn i_k_enumerated(k: u32, p: u64, m: u32, s: Complex64) -> Result<Complex64> {
    let x = Complex64::new(1.0, 0.0) - (-s * (p as f64).ln()).exp();
    let pm = p
        .checked_pow(m)
        .ok_or_else(|| Error::Overflow(format!("{p}^{m}")))?;
    let mut total = Complex64::new(0.0, 0.0);
    for tuple in ordered_factorizations(pm, k as usize)? {
        let mut term = Complex64::new(1.0, 0.0);
        for i in 0..k as usize {
            if tuple[i + 1..].iter().any(|&d| d != 1) {
                term *= x;
            }
        }
        total += term;
    }
    Ok(total)
}

/// `Σ_{v=1}^{k} (1 − p^{-s})^{v-1} τ_v(p^{m-1})`.
pub fn i_k_closed(k: u32, p: u64, m: u32, s: Complex64) -> Complex64 {
    let x = Complex64::new(1.0, 0.0) - (-s * (p as f64).ln()).exp();
    (1..=k)
        .map(|v| x.powu(v - 1) * tau_k_prime_power(v, m.saturating_sub(1)) as f64)
        .sum()
}

/// `β_{k,r}(q)` with its indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaCoefficient {
    pub k: u32,
    pub r: u32,
    pub q: u64,
    pub value: f64,
}

/// `β_{k,r}(q) = (1/r!) Σ_{t=0}^{k-r-1} (1/t!) res((s-1)^{r+t} ζ^k) Φ_k^{(t)}(q, 1)`.
pub fn beta_coefficient(k: u32, r: u32, q: u64) -> Result<BetaCoefficient> {
    if r >= k {
        return Err(Error::InvalidInput(format!(
            "r = {r} must be below k = {k}"
        )));
    }
    let jet = phi_jet(k, q, default_jet_order(k), PhiMode::ClosedForm)?;
    let value = residue_pairing(k, r, &jet);
    Ok(BetaCoefficient { k, r, q, value })
}

/// `(1/r!) Σ_t res((s-1)^{r+t} ζ^k) a_t` for a jet `Σ a_t (s-1)^t`; the common
/// shape of `β_{k,r}` and of the main-term `C_{k,r}`.
pub fn residue_pairing(k: u32, r: u32, jet: &SeriesJet) -> f64 {
    let r_fact: f64 = (1..=r).map(f64::from).product();
    let sum: f64 = (0..(k - r) as usize)
        .map(|t| weighted_residue(k as usize, r as usize + t) * jet.coeff(t).re)
        .sum();
    sum / r_fact
}

fn f_k_cached(k: u32, q: u64, delta: u64, order: usize) -> Result<SeriesJet> {
    type Key = (u32, u64, u64, usize);
    static CACHE: OnceLock<Mutex<HashMap<Key, SeriesJet>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (k, q, delta, order);
    if let Some(hit) = cache.lock().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let jet = f_k_jet(k, q, delta, order)?;
    cache.lock().expect("cache lock").insert(key, jet.clone());
    Ok(jet)
}

/// `x^s / s = x · e^{(s-1) log x} / (1 + (s-1))` about `s = 1`.
pub fn x_pow_over_s_jet(x: f64, order: usize) -> SeriesJet {
    let l = x.ln();
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut exp_coeff = 1.0;
    let mut acc = 0.0;
    for j in 0..=order {
        if j > 0 {
            exp_coeff *= l / j as f64;
        }
        // Cauchy product with 1/(1+z) = Σ (-1)^i z^i
        acc = exp_coeff - acc;
        coeffs.push(Complex64::new(x * acc, 0.0));
    }
    SeriesJet::from_coeffs(at_one(), coeffs)
}

/// `M_k(x; h, q) = res_{s=1} ζ(s)^k (x^s/s) f_k(q, gcd(h,q), s)`.
pub fn ap_main_term(k: u32, x: f64, h: u64, q: u64) -> Result<f64> {
    if !(x > 1.0) {
        return Err(Error::InvalidInput(format!("x = {x} must exceed 1")));
    }
    if q == 0 || h == 0 || h > q {
        return Err(Error::InvalidInput(format!(
            "need 1 <= h <= q, got h = {h}, q = {q}"
        )));
    }
    let order = default_jet_order(k);
    let f = f_k_cached(k, q, h.gcd(&q), order)?;
    let regular = &x_pow_over_s_jet(x, order) * &f;
    Ok((0..k as usize)
        .map(|j| weighted_residue(k as usize, j) * regular.coeff(j).re)
        .sum())
}
