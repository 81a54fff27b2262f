//! Truncated Taylor series ("jets") with complex coefficients.
//!
//! A [`SeriesJet`] of order `d` about a centre `c` stores `a_0 … a_d` of
//! `Σ a_j (s - c)^j`. Derivatives at the centre are `t!·a_t`, so products and
//! quotients of Dirichlet-series factors give their derivatives at `s = 1`
//! without numerical differentiation.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesJet {
    center: Complex64,
    coeffs: Vec<Complex64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl SeriesJet {
    pub fn from_coeffs(center: Complex64, coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet carries at least one coefficient");
        Self { center, coeffs }
    }

    pub fn constant(value: Complex64, order: usize, center: Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    pub fn one(order: usize, center: Complex64) -> Self {
        Self::constant(Complex64::new(1.0, 0.0), order, center)
    }

    /// Jets about `s = 1`, where everything in this crate is expanded.
    pub fn one_at_1(order: usize) -> Self {
        Self::one(order, Complex64::new(1.0, 0.0))
    }

    /// The identity `s ↦ s`.
    pub fn variable(order: usize, center: Complex64) -> Self {
        let mut jet = Self::constant(center, order, center);
        if order >= 1 {
            jet.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        jet
    }

    /// `n^{-s} = n^{-c} · exp(-(s - c) log n)`.
    pub fn inverse_power(n: f64, order: usize, center: Complex64) -> Self {
        Self::inverse_power_log(n.ln(), order, center)
    }

    /// `n^{-s}` given `log n`; usable when `n` itself overflows `f64`.
    pub fn inverse_power_log(log: f64, order: usize, center: Complex64) -> Self {
        let base = (-center * log).exp();
        let coeffs = (0..=order)
            .map(|j| base * (-log).powi(j as i32) / factorial(j))
            .collect();
        Self { center, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs[j]
    }

    /// Value at the centre.
    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// `t`-th derivative at the centre.
    pub fn derivative(&self, t: usize) -> Complex64 {
        self.coeffs[t] * factorial(t)
    }

    /// `Σ a_j (s - c)^j` at `s` (polynomial evaluation of the truncation).
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let z = s - self.center;
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "jet orders differ");
        assert!(self.center == other.center, "jet centres differ");
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            center: self.center,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `1/self`; needs a nonzero constant term.
    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::InvalidInput(
                "cannot invert a jet with zero constant term".into(),
            ));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        out[0] = a0.inv();
        for j in 1..out.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 1..=j {
                acc += self.coeffs[i] * out[j - i];
            }
            out[j] = -acc / a0;
        }
        Ok(Self {
            center: self.center,
            coeffs: out,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.recip()?)
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut acc = Self::one(self.order(), self.center);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// `exp(self)`, by the recurrence `j·b_j = Σ_{i=1}^{j} i·a_i·b_{j-i}`.
    pub fn exp(&self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        out[0] = self.coeffs[0].exp();
        for j in 1..out.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 1..=j {
                acc += self.coeffs[i] * out[j - i] * i as f64;
            }
            out[j] = acc / j as f64;
        }
        Self {
            center: self.center,
            coeffs: out,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.check(other);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl<'a> Add<&'a SeriesJet> for &'a SeriesJet {
    type Output = SeriesJet;
    fn add(self, rhs: &SeriesJet) -> SeriesJet {
        self.check(rhs);
        SeriesJet {
            center: self.center,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a SeriesJet> for &'a SeriesJet {
    type Output = SeriesJet;
    fn sub(self, rhs: &SeriesJet) -> SeriesJet {
        self.check(rhs);
        SeriesJet {
            center: self.center,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<'a> Mul<&'a SeriesJet> for &'a SeriesJet {
    type Output = SeriesJet;
    fn mul(self, rhs: &SeriesJet) -> SeriesJet {
        self.check(rhs);
        let len = self.coeffs.len();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs[..len - i].iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        SeriesJet {
            center: self.center,
            coeffs,
        }
    }
}

impl Neg for &SeriesJet {
    type Output = SeriesJet;
    fn neg(self) -> SeriesJet {
        self.scale_real(-1.0)
    }
}
