//! One table builder per CLI subcommand.

use crate::arith::sieve_tau_k;
use crate::error::{Error, Result};
use crate::exact::{ap_exact_sum, exact_sigma};
use crate::harness::report::{big, num, opt_num, Table};
use crate::harness::{coefficients_for, RunConfig};
use crate::integral::log_power_integral;
use crate::local::{s_f_prime_power, PrimeDensities};
use crate::phi::{ap_main_term, beta_coefficient, phi_jet, PhiMode};
use crate::quad::{rational_to_f64, rational_to_string};
use crate::zeta::{stieltjes_constant, weighted_residue, zeta_pow_laurent};
use serde_json::Value;

fn poly_param(t: Table, cfg: &RunConfig) -> Result<Table> {
    Ok(t.param("polynomial", cfg.polynomial()?.to_string()))
}

/// `τ_k(m)` for `from <= m <= limit`.
pub fn sieve(k: u32, from: u64, limit: u64) -> Result<Table> {
    if from > limit {
        return Err(Error::InvalidInput(format!("empty range {from}..={limit}")));
    }
    let table = sieve_tau_k(k, limit)?;
    let mut t = Table::new("sieve", &["m", "tau_k"])
        .param("k", k)
        .param("limit", limit);
    for m in from..=limit {
        t.push(vec![m.into(), table.get(m).into()]);
    }
    Ok(t)
}

/// `ρ_F(p^ℓ)` and `S_F(p^ℓ)` for `ℓ <= levels`.
pub fn local(cfg: &RunConfig, p: u64, levels: u32) -> Result<Table> {
    let poly = cfg.polynomial()?;
    let mut dens = PrimeDensities::new(&poly, p)?;
    let mut t = poly_param(
        Table::new("local", &["level", "count", "rho", "rho_f64", "s_f"]),
        cfg,
    )?
    .param("p", p);
    for level in 0..=levels {
        let d = dens.density(level)?;
        let s = s_f_prime_power(&poly, p, level)?;
        t.push(vec![
            level.into(),
            d.count.to_string().into(),
            rational_to_string(&d.rho).into(),
            num(rational_to_f64(&d.rho)),
            rational_to_string(&s).into(),
        ]);
    }
    Ok(t)
}

/// Stieltjes constants through `d`, the Laurent block of `ζ^k` through
/// `(s-1)^d`, and the weighted residues.
pub fn zeta(k: u32, d: usize) -> Result<Table> {
    let block = zeta_pow_laurent(k as usize, d)?;
    let mut t = Table::new("zeta", &["kind", "index", "value"])
        .param("k", k)
        .param("order", d);
    for n in 0..=d {
        t.push(vec![
            "stieltjes".into(),
            n.into(),
            num(stieltjes_constant(n)?),
        ]);
    }
    for j in -(k as i64)..=block.top_order() {
        t.push(vec!["laurent".into(), j.into(), opt_num(block.coeff(j))]);
    }
    for w in 0..k as usize {
        t.push(vec![
            "weighted_residue".into(),
            w.into(),
            num(weighted_residue(k as usize, w)),
        ]);
    }
    Ok(t)
}

/// Taylor coefficients of `Φ_k(q, s)` about `s = 1`.
pub fn phi(k: u32, q: u64, order: usize, mode: PhiMode) -> Result<Table> {
    let jet = phi_jet(k, q, order, mode)?;
    let mode_name = match mode {
        PhiMode::ClosedForm => "closed",
        PhiMode::Definition => "definition",
    };
    let mut t = Table::new("phi", &["t", "re", "im"])
        .param("k", k)
        .param("q", q)
        .param("mode", mode_name);
    for (i, c) in jet.coeffs().iter().enumerate() {
        t.push(vec![i.into(), num(c.re), num(c.im)]);
    }
    Ok(t)
}

/// `β_{k,r}(q)` for every `r < k` and each `q`.
pub fn beta(k: u32, qs: &[u64]) -> Result<Table> {
    let mut t = Table::new("beta", &["q", "r", "value"]).param("k", k);
    for &q in qs {
        for r in 0..k {
            t.push(vec![
                q.into(),
                r.into(),
                num(beta_coefficient(k, r, q)?.value),
            ]);
        }
    }
    Ok(t)
}

/// `M_k(x; h, q)`.
pub fn ap(k: u32, x: f64, h: u64, q: u64) -> Result<Table> {
    let mut t = Table::new("ap", &["k", "x", "h", "q", "main_term"]);
    t.push(vec![
        k.into(),
        num(x),
        h.into(),
        q.into(),
        num(ap_main_term(k, x, h, q)?),
    ]);
    Ok(t)
}

/// `A_k(x; h, q)` exactly, beside `M_k(x; h, q)` when `x > 1`.
pub fn ap_exact(k: u32, x: f64, h: u64, q: u64) -> Result<Table> {
    let exact = ap_exact_sum(k, x, h, q)?;
    let main = if x > 1.0 {
        Some(ap_main_term(k, x, h, q)?)
    } else {
        None
    };
    let rel = main.filter(|m| *m != 0.0).map(|m| (exact as f64 - m) / m);
    let mut t = Table::new(
        "ap-exact",
        &["k", "x", "h", "q", "exact", "main_term", "relative_error"],
    );
    t.push(vec![
        k.into(),
        num(x),
        h.into(),
        q.into(),
        big(exact),
        opt_num(main),
        opt_num(rel),
    ]);
    Ok(t)
}

/// The truncated singular-series jet and `C_{k,r}`.
pub fn series(cfg: &RunConfig) -> Result<Table> {
    let tc = coefficients_for(cfg)?;
    let s = &tc.series;
    let mut t = poly_param(Table::new("series", &["kind", "index", "re", "im"]), cfg)?
        .param("k", cfg.k)
        .param("pmax", s.pmax)
        .param("lmax", s.lmax)
        .param("primes_used", s.primes_used)
        .param("max_levels_used", s.max_levels_used)
        .param("tail_estimate", num(s.tail_estimate));
    for (i, c) in s.jet.coeffs().iter().enumerate() {
        t.push(vec!["jet".into(), i.into(), num(c.re), num(c.im)]);
    }
    for (r, c) in tc.c.iter().enumerate() {
        t.push(vec!["C".into(), r.into(), num(*c), num(0.0)]);
    }
    Ok(t)
}

/// `∫_{X𝓑} (log F)^r` at each ladder `X`.
pub fn integral(cfg: &RunConfig, r: u32) -> Result<Table> {
    let poly = cfg.polynomial()?;
    let mut t = poly_param(
        Table::new(
            "integral",
            &[
                "X",
                "r",
                "value",
                "abs_error_estimate",
                "cells_used",
                "warning",
            ],
        ),
        cfg,
    )?
    .param("tol", num(cfg.quadrature.tol));
    for x in &cfg.x_ladder {
        let i = log_power_integral(&poly, &cfg.region_at(&x.0)?, r, cfg.quadrature.tol)?;
        t.push(vec![
            rational_to_string(&x.0).into(),
            r.into(),
            num(i.value),
            num(i.abs_error_estimate),
            i.cells_used.into(),
            i.warning.map_or(Value::Null, Value::from),
        ]);
    }
    Ok(t)
}

/// `Σ_{k,F}(X; 𝓑)` at each ladder `X`.
pub fn exact(cfg: &RunConfig) -> Result<Table> {
    let poly = cfg.polynomial()?;
    let mut t = poly_param(
        Table::new("exact", &["X", "total", "lattice_count", "fmax_used"]),
        cfg,
    )?
    .param("k", cfg.k);
    for x in &cfg.x_ladder {
        let e = exact_sigma(&poly, cfg.k, &cfg.region_at(&x.0)?)?;
        t.push(vec![
            rational_to_string(&x.0).into(),
            big(e.total),
            big(e.lattice_count),
            e.fmax_used.into(),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Rational;

    #[test]
    fn tables_have_expected_shapes() {
        let cfg = RunConfig {
            x_ladder: vec![Rational::integer(2)],
            ..RunConfig::default()
        };
        assert_eq!(sieve(3, 1, 10).unwrap().rows.len(), 10);
        assert_eq!(local(&cfg, 2, 3).unwrap().rows[0][2], Value::from("1"));
        assert_eq!(
            zeta(2, 3)
                .unwrap()
                .rows
                .iter()
                .filter(|r| r[0] == "weighted_residue")
                .count(),
            2
        );
        assert_eq!(phi(3, 12, 4, PhiMode::Definition).unwrap().rows.len(), 5);
        assert_eq!(beta(3, &[1, 2]).unwrap().rows.len(), 6);
        assert_eq!(exact(&cfg).unwrap().rows[0][1], Value::from(71));
        assert_eq!(ap_exact(2, 10.0, 1, 3).unwrap().rows[0][4], Value::from(10));
        assert_eq!(integral(&cfg, 0).unwrap().rows[0][2], num(8.0));
        let s = series(&RunConfig {
            truncation: crate::harness::config::Truncation {
                pmax: 50,
                ..Default::default()
            },
            ..cfg
        })
        .unwrap();
        assert_eq!(s.rows.iter().filter(|r| r[0] == "C").count(), 2);
        assert!(sieve(2, 5, 4).is_err());
    }
}
