//! The singular series `L(s; k, F) = Σ_q Φ_k(q, s) S_F(q)`, its Euler
//! product, and the coefficients `C_{k,r}(F)` of the main term.
//!
//! The local factor is evaluated in telescoped form,
//! `L_p = 1 + Σ_{ℓ≥1} (ρ_F(p^ℓ) − 1) (Φ_k(p^ℓ, s) − Φ_k(p^{ℓ+1}, s))`, with
//! `Φ_k(p^ℓ) − Φ_k(p^{ℓ+1}) = (1−p^{-s})^k/(1−1/p) · p^{-ℓs}
//! (τ_k(p^ℓ) − p^{s−1} τ_k(p^{ℓ−1}))`. Summed to infinity this is the same
//! series as `Σ_ℓ ρ_F(p^ℓ)(…)`, but each truncation error is weighted by
//! `ρ − 1`, which is small at large `p`.

use crate::arith::{primes_up_to, tau_k_prime_power};
use crate::error::{Error, Result};
use crate::jet::SeriesJet;
use crate::local::PrimeDensities;
use crate::phi::{default_jet_order, phi_prime_power_jet, residue_pairing};
use crate::quad::{rational_to_f64, QuadraticPolynomial};
use num_complex::Complex64;
use rayon::prelude::*;

/// Defaults for the truncation of the Euler product.
pub const DEFAULT_PMAX: u64 = 1000;
pub const DEFAULT_LMAX: u32 = 6;
/// Hard ceiling on the ℓ-sum when terms refuse to become negligible.
pub const LEVEL_CAP: u32 = 400;
const NEGLIGIBLE: f64 = 1e-14;

/// One Euler factor and how deep its ℓ-sum went.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFactor {
    pub p: u64,
    pub jet: SeriesJet,
    pub levels_used: u32,
}

/// `Φ_k(p^ℓ, s) − Φ_k(p^{ℓ+1}, s)` in closed form, for `ℓ >= 0`.
pub fn phi_step_jet(k: u32, p: u64, level: u32, order: usize, center: Complex64) -> SeriesJet {
    let log_p = (p as f64).ln();
    let one = SeriesJet::one(order, center);
    let e = SeriesJet::inverse_power_log(log_p, order, center);
    let closing = (&one - &e).powi(k).scale_real(1.0 / (1.0 - 1.0 / p as f64));
    let head = SeriesJet::inverse_power_log(level as f64 * log_p, order, center)
        .scale_real(tau_k_prime_power(k, level) as f64);
    let body = if level == 0 {
        head
    } else {
        // p^{s-1} p^{-ℓs} = p^{-1} p^{-(ℓ-1)s}
        let prev = SeriesJet::inverse_power_log((level - 1) as f64 * log_p, order, center)
            .scale_real(tau_k_prime_power(k, level - 1) as f64 / p as f64);
        &head - &prev
    };
    &closing * &body
}

/// Euler factor from an arbitrary density sequence `ρ(ℓ)`, `ℓ >= 1`.
///
/// The sum runs at least to `lmax`, then continues until the latest term is
/// below `10⁻¹⁴` relative to the running value and the remaining steps,
/// weighted by the largest `|ρ − 1|` seen, are equally negligible. It stops
/// with an error at [`LEVEL_CAP`].
pub fn local_factor_from_densities(
    k: u32,
    p: u64,
    order: usize,
    center: Complex64,
    lmax: u32,
    mut rho: impl FnMut(u32) -> Result<f64>,
) -> Result<LocalFactor> {
    if lmax < 2 {
        return Err(Error::InvalidInput(format!(
            "lmax = {lmax} must be at least 2"
        )));
    }
    let mut acc = SeriesJet::one(order, center);
    let mut worst_dev = 0.0f64;
    for level in 1..=LEVEL_CAP {
        let dev = rho(level)? - 1.0;
        worst_dev = worst_dev.max(dev.abs());
        let step = phi_step_jet(k, p, level, order, center);
        let term = step.scale_real(dev);
        acc = &acc + &term;
        if level >= lmax {
            let scale = acc.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
            let term_size = term.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            let next = phi_step_jet(k, p, level + 1, order, center);
            let next_size = next.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            // the steps decay at least geometrically with ratio ~ τ-growth / p
            let tail = worst_dev * next_size * 4.0;
            if term_size <= NEGLIGIBLE * scale && tail <= NEGLIGIBLE * scale {
                return Ok(LocalFactor {
                    p,
                    jet: acc,
                    levels_used: level,
                });
            }
        }
    }
    Err(Error::NonConvergence(format!(
        "local factor at p = {p} did not settle within {LEVEL_CAP} levels"
    )))
}

/// `L_p(s; k, F)` about `s = 1`.
pub fn local_factor_jet(
    poly: &QuadraticPolynomial,
    k: u32,
    p: u64,
    order: usize,
    lmax: u32,
) -> Result<LocalFactor> {
    local_factor_jet_at(poly, k, p, order, Complex64::new(1.0, 0.0), lmax)
}

pub fn local_factor_jet_at(
    poly: &QuadraticPolynomial,
    k: u32,
    p: u64,
    order: usize,
    center: Complex64,
    lmax: u32,
) -> Result<LocalFactor> {
    let mut dens = PrimeDensities::new(poly, p)?;
    local_factor_from_densities(k, p, order, center, lmax, |l| {
        Ok(rational_to_f64(&dens.rho(l)?))
    })
}

/// `1 + Σ_{m=1}^{mmax} S_F(p^m) Φ_k(p^m, 1)`: the Euler factor straight from
/// the Dirichlet series, used as an oracle for [`local_factor_jet`].
pub fn local_factor_dirichlet(
    poly: &QuadraticPolynomial,
    k: u32,
    p: u64,
    mmax: u32,
) -> Result<f64> {
    let mut dens = PrimeDensities::new(poly, p)?;
    let mut prev = rational_to_f64(&dens.rho(0)?);
    let mut total = 1.0;
    for m in 1..=mmax {
        let cur = rational_to_f64(&dens.rho(m)?);
        let phi = phi_prime_power_jet(k, p, m, 0, Complex64::new(1.0, 0.0))
            .value()
            .re;
        total += (cur - prev) * phi;
        prev = cur;
    }
    Ok(total)
}

/// `(1 − 1/p)^{k−1} Σ_ℓ ρ_F(p^ℓ) τ_{k−1}(p^ℓ) / p^ℓ`: the value at `s = 1` of
/// the Euler factor in its `τ_{k−1}` form (`k >= 2`).
pub fn local_factor_value_tau_form(
    poly: &QuadraticPolynomial,
    k: u32,
    p: u64,
    levels: u32,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput("the τ_{k-1} form needs k >= 2".into()));
    }
    let mut dens = PrimeDensities::new(poly, p)?;
    let pf = p as f64;
    let mut sum = 0.0;
    for l in 0..=levels {
        let rho = rational_to_f64(&dens.rho(l)?);
        sum += rho * tau_k_prime_power(k - 1, l) as f64 * (-(l as f64) * pf.ln()).exp();
    }
    Ok(sum * (1.0 - 1.0 / pf).powi(k as i32 - 1))
}

/// Truncated Euler product with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSeriesValue {
    pub jet: SeriesJet,
    pub pmax: u64,
    pub lmax: u32,
    /// Heuristic bound on `|L(1) − Π_{p≤pmax} L_p(1)|` from the observed
    /// `|L_p − 1| ≈ c p^{-n/2}` envelope.
    pub tail_estimate: f64,
    /// Deepest ℓ reached by any local factor.
    pub max_levels_used: u32,
    pub primes_used: usize,
}

/// `Π_{p ≤ pmax} L_p(s; k, F)` as a jet about `s = 1`.
pub fn singular_series_jet(
    poly: &QuadraticPolynomial,
    k: u32,
    order: usize,
    pmax: u64,
    lmax: u32,
) -> Result<SingularSeriesValue> {
    singular_series_jet_at(poly, k, order, Complex64::new(1.0, 0.0), pmax, lmax)
}

pub fn singular_series_jet_at(
    poly: &QuadraticPolynomial,
    k: u32,
    order: usize,
    center: Complex64,
    pmax: u64,
    lmax: u32,
) -> Result<SingularSeriesValue> {
    if pmax < 2 {
        return Err(Error::InvalidInput(format!(
            "pmax = {pmax} must be at least 2"
        )));
    }
    let primes = primes_up_to(pmax);
    let factors: Vec<LocalFactor> = primes
        .par_iter()
        .map(|&p| local_factor_jet_at(poly, k, p, order, center, lmax))
        .collect::<Result<_>>()?;
    euler_product(poly.dim(), pmax, lmax, factors)
}

/// Multiplies local factors in ascending prime order and estimates the tail.
pub fn euler_product(
    n: usize,
    pmax: u64,
    lmax: u32,
    factors: Vec<LocalFactor>,
) -> Result<SingularSeriesValue> {
    let order = factors.first().map_or(0, |f| f.jet.order());
    let center = factors
        .first()
        .map_or(Complex64::new(1.0, 0.0), |f| f.jet.center());
    let mut jet = SeriesJet::one(order, center);
    let half = n as f64 / 2.0;
    let mut envelope = 0.0f64;
    let mut max_levels_used = 0;
    for f in &factors {
        let dev = (f.jet.value() - 1.0).norm();
        if f.p > 50 && dev > 0.9 {
            return Err(Error::NonConvergence(format!(
                "|L_p - 1| = {dev} at p = {} exceeds 0.9; local densities are suspect",
                f.p
            )));
        }
        if 2 * f.p > pmax {
            envelope = envelope.max(dev * (f.p as f64).powf(half));
        }
        max_levels_used = max_levels_used.max(f.levels_used);
        jet = &jet * &f.jet;
    }
    let tail_estimate = jet.value().norm() * envelope * prime_tail_sum(pmax, half);
    Ok(SingularSeriesValue {
        jet,
        pmax,
        lmax,
        tail_estimate,
        max_levels_used,
        primes_used: factors.len(),
    })
}

/// `Σ_{p > pmax} p^{-a}`: explicit up to `100·pmax`, then the integral
/// bound `∫ t^{-a}/log t dt <= P^{1-a} / ((a-1) log P)`.
fn prime_tail_sum(pmax: u64, a: f64) -> f64 {
    let upper = pmax.saturating_mul(100).max(1000);
    let explicit: f64 = primes_up_to(upper)
        .into_iter()
        .filter(|&p| p > pmax)
        .map(|p| (p as f64).powf(-a))
        .sum();
    let big = upper as f64;
    explicit + big.powf(1.0 - a) / ((a - 1.0) * big.ln())
}

/// `C_{k,0}(F), …, C_{k,k−1}(F)` with the series they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MainTermCoefficients {
    pub k: u32,
    pub c: Vec<f64>,
    pub series: SingularSeriesValue,
}

impl MainTermCoefficients {
    pub fn leading(&self) -> f64 {
        self.c[self.k as usize - 1]
    }
}

/// `C_{k,r}(F) = (1/r!) Σ_t (1/t!) L^{(t)}(1) res((s-1)^{r+t} ζ(s)^k)`.
pub fn main_term_coefficients(
    poly: &QuadraticPolynomial,
    k: u32,
    pmax: u64,
    lmax: u32,
) -> Result<MainTermCoefficients> {
    if k < 1 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let series = singular_series_jet(poly, k, default_jet_order(k), pmax, lmax)?;
    coefficients_from_series(k, series)
}

pub fn coefficients_from_series(
    k: u32,
    series: SingularSeriesValue,
) -> Result<MainTermCoefficients> {
    if series.jet.order() + 1 < k as usize {
        return Err(Error::InvalidInput(format!(
            "jet order {} too low for k = {k}",
            series.jet.order()
        )));
    }
    let c: Vec<f64> = (0..k).map(|r| residue_pairing(k, r, &series.jet)).collect();
    let fact: f64 = (1..k).map(f64::from).product();
    let leading = c[k as usize - 1];
    let direct = series.jet.value().re / fact;
    if (leading - direct).abs() > 1e-12 * direct.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "C_{{k,k-1}} = {leading} but L(1)/(k-1)! = {direct}"
        )));
    }
    if !(leading > 0.0) {
        return Err(Error::Consistency(format!(
            "leading coefficient C_{{k,k-1}} = {leading} is not positive"
        )));
    }
    Ok(MainTermCoefficients { k, c, series })
}

/// Partial sums `Σ_{q≤Q} Φ_k(q, 1) S_F(q)` at each checkpoint `Q`, by
/// multiplicativity over a smallest-prime-factor sieve.
pub fn dirichlet_partial_sums(
    poly: &QuadraticPolynomial,
    k: u32,
    checkpoints: &[u64],
) -> Result<Vec<(u64, f64)>> {
    let qmax = checkpoints.iter().copied().max().unwrap_or(0);
    if qmax == 0 {
        return Ok(Vec::new());
    }
    let size = qmax as usize + 1;
    let mut spf = vec![0u64; size];
    for p in primes_up_to(qmax) {
        let mut m = p;
        while m <= qmax {
            if spf[m as usize] == 0 {
                spf[m as usize] = p;
            }
            m += p;
        }
    }
    // g(p^m) = Φ_k(p^m, 1) S_F(p^m) for every prime power up to qmax
    let mut prime_power_value = vec![0.0f64; size];
    let prime_list = primes_up_to(qmax);
    let per_prime: Vec<Vec<(u64, f64)>> = prime_list
        .par_iter()
        .map(|&p| {
            let mut dens = PrimeDensities::new(poly, p)?;
            let mut out = Vec::new();
            let mut prev = rational_to_f64(&dens.rho(0)?);
            let mut q = p;
            let mut m = 1;
            loop {
                let cur = rational_to_f64(&dens.rho(m)?);
                let phi = phi_prime_power_jet(k, p, m, 0, Complex64::new(1.0, 0.0))
                    .value()
                    .re;
                out.push((q, phi * (cur - prev)));
                prev = cur;
                match q.checked_mul(p) {
                    Some(next) if next <= qmax => q = next,
                    _ => break,
                }
                m += 1;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    for (q, v) in per_prime.into_iter().flatten() {
        prime_power_value[q as usize] = v;
    }
    let mut g = vec![0.0f64; size];
    g[1] = 1.0;
    for q in 2..size {
        let p = spf[q];
        let mut rest = q as u64;
        let mut pe = 1u64;
        while rest % p == 0 {
            rest /= p;
            pe *= p;
        }
        g[q] = g[rest as usize] * prime_power_value[pe as usize];
    }
    let mut sorted: Vec<u64> = checkpoints.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut next = 1usize;
    for &cp in &sorted {
        while next as u64 <= cp {
            acc += g[next];
            next += 1;
        }
        out.push((cp, acc));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::{phi_jet, PhiMode};
    use crate::zeta::contour_integral;

    fn squares(n: usize) -> QuadraticPolynomial {
        QuadraticPolynomial::sum_of_squares(n).unwrap()
    }

    fn at_one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn mock_unit_density() {
        for k in 1..=4 {
            for p in [2u64, 3, 101] {
                let f = local_factor_from_densities(k, p, 5, at_one(), 6, |_| Ok(1.0)).unwrap();
                assert!(f.jet.max_abs_diff(&SeriesJet::one_at_1(5)) < 1e-15);
            }
            let factors: Vec<LocalFactor> = primes_up_to(200)
                .into_iter()
                .map(|p| local_factor_from_densities(k, p, 5, at_one(), 6, |_| Ok(1.0)).unwrap())
                .collect();
            let v = euler_product(3, 200, 6, factors).unwrap();
            assert_eq!(v.jet.value(), Complex64::new(1.0, 0.0));
        }
        assert!(local_factor_from_densities(2, 3, 5, at_one(), 1, |_| Ok(1.0)).is_err());
    }

    #[test]
    fn telescoped_steps_match_phi_differences() {
        for k in 1..=4 {
            for p in [2u64, 5] {
                for l in 0..6 {
                    let a = phi_jet(k, p.pow(l), 4, PhiMode::ClosedForm).unwrap();
                    let b = phi_jet(k, p.pow(l + 1), 4, PhiMode::ClosedForm).unwrap();
                    let step = phi_step_jet(k, p, l, 4, at_one());
                    assert!((&a - &b).max_abs_diff(&step) < 1e-13, "k={k} p={p} l={l}");
                }
            }
        }
    }

    #[test]
    fn local_factor_three_ways() {
        let forms = [
            squares(3),
            squares(4),
            QuadraticPolynomial::new(
                vec![vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 2]],
                vec![1, 0, 0],
                1,
            )
            .unwrap(),
        ];
        for f in &forms {
            for k in 2..=4 {
                for p in [2u64, 3, 5, 7, 11, 97] {
                    let lf = local_factor_jet(f, k, p, 4, 6).unwrap();
                    let v = lf.jet.value().re;
                    let tau = local_factor_value_tau_form(f, k, p, 120).unwrap();
                    assert!((v - tau).abs() < 1e-10, "{f} k={k} p={p}: {v} vs {tau}");
                    let dir = local_factor_dirichlet(f, k, p, 40).unwrap();
                    assert!((v - dir).abs() < 1e-9, "{f} k={k} p={p}: {v} vs {dir}");
                }
            }
        }
    }

    #[test]
    fn lmax_stability() {
        let f = squares(3);
        for k in [2u32, 3] {
            let a = singular_series_jet(&f, k, 4, 200, 6).unwrap().jet;
            let b = singular_series_jet(&f, k, 4, 200, 8).unwrap().jet;
            for j in 0..=4 {
                let rel = (a.coeff(j) - b.coeff(j)).norm() / a.coeff(j).norm().max(1e-300);
                assert!(rel < 1e-6, "k={k} j={j} rel={rel}");
            }
        }
    }

    #[test]
    fn coefficients_and_positivity() {
        let f = squares(3);
        for k in 2..=4 {
            let tc = main_term_coefficients(&f, k, 300, 6).unwrap();
            let fact: f64 = (1..k).map(f64::from).product();
            assert!(tc.leading() > 0.0);
            assert!((tc.leading() - tc.series.jet.value().re / fact).abs() < 1e-14);
            assert_eq!(tc.c.len(), k as usize);
        }
    }

    #[test]
    fn leading_coefficient_from_tau_form_product() {
        let f = squares(3);
        let tc = main_term_coefficients(&f, 2, 300, 6).unwrap();
        let direct: f64 = primes_up_to(300)
            .into_iter()
            .map(|p| local_factor_value_tau_form(&f, 2, p, 120).unwrap())
            .product();
        assert!((tc.leading() - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn contour_oracle_for_subleading_coefficient() {
        // C_{k,r} = (1/r!) res (s-1)^r ζ(s)^k L(s): compare with the
        // truncated product evaluated on a circle
        let f = squares(3);
        let pmax = 60;
        let tc = main_term_coefficients(&f, 2, pmax, 6).unwrap();
        let oracle = contour_integral(48, 0.2, |s| {
            let l = singular_series_jet_at(&f, 2, 0, s, pmax, 6)
                .unwrap()
                .jet
                .value();
            crate::zeta::zeta_complex(s).powu(2) * l
        });
        assert!((oracle - tc.c[0]).abs() < 1e-3, "{oracle} vs {}", tc.c[0]);
    }

    #[test]
    fn dirichlet_sum_approaches_product() {
        let f = squares(4);
        let product = singular_series_jet(&f, 2, 0, 1000, 6).unwrap();
        let partial = dirichlet_partial_sums(&f, 2, &[10, 100, 1000, 3000]).unwrap();
        let gaps: Vec<f64> = partial
            .iter()
            .map(|(_, v)| (v - product.jet.value().re).abs())
            .collect();
        assert!(gaps[3] < gaps[0]);
        assert!(gaps[3] < 1e-3, "{gaps:?}");
        assert!(product.tail_estimate > 0.0 && product.tail_estimate < 1e-2);
    }

    #[test]
    fn guard_rejects_wild_factors() {
        let one = SeriesJet::one_at_1(2);
        let bad = LocalFactor {
            p: 53,
            jet: one.scale_real(2.5),
            levels_used: 2,
        };
        assert!(matches!(
            euler_product(3, 60, 6, vec![bad]),
            Err(Error::NonConvergence(_))
        ));
    }
}
