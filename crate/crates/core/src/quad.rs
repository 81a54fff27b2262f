//! Quadratic polynomials `F(x) = xᵀQx + Lᵀx + N` and dilated boxes `X·𝓑`.
//!
//! Everything here is exact: values at integer points are `i128`, values at
//! rational points and range extrema are [`BigRational`]. The floating-point
//! variant of the extrema search exists only for the quadrature cells of
//! [`crate::integral`].

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use std::fmt;

/// `F(x) = xᵀQx + Lᵀx + N` with symmetric nonsingular integer `Q`, `n >= 3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticPolynomial {
    n: usize,
    q: Vec<i64>,
    l: Vec<i64>,
    constant: i64,
}

impl QuadraticPolynomial {
    /// Validates shape, symmetry, `n >= 3` and `det Q != 0`.
    pub fn new(q: Vec<Vec<i64>>, l: Vec<i64>, constant: i64) -> Result<Self> {
        let n = q.len();
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "need at least 3 variables, got {n}"
            )));
        }
        if let Some(row) = q.iter().find(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
        if l.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: l.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if q[i][j] != q[j][i] {
                    return Err(Error::InvalidInput(format!(
                        "Q is not symmetric at ({i},{j}): {} != {}",
                        q[i][j], q[j][i]
                    )));
                }
            }
        }
        let poly = Self {
            n,
            q: q.into_iter().flatten().collect(),
            l,
            constant,
        };
        if poly.determinant().is_zero() {
            return Err(Error::InvalidInput(
                "quadratic part is singular (det Q = 0)".into(),
            ));
        }
        Ok(poly)
    }

    /// `x_1² + … + x_n²`.
    pub fn sum_of_squares(n: usize) -> Result<Self> {
        let q = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect();
        Self::new(q, vec![0; n], 0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn q(&self, i: usize, j: usize) -> i64 {
        self.q[i * self.n + j]
    }

    pub fn matrix(&self) -> Vec<Vec<i64>> {
        self.q.chunks(self.n).map(<[i64]>::to_vec).collect()
    }

    pub fn linear(&self) -> &[i64] {
        &self.l
    }

    pub fn constant(&self) -> i64 {
        self.constant
    }

    /// Relabels coordinates: the new variable `i` is the old variable `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut q = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                q[i * n + j] = self.q(perm[i], perm[j]);
            }
        }
        Self {
            n,
            q,
            l: perm.iter().map(|&p| self.l[p]).collect(),
            constant: self.constant,
        }
    }

    /// Exact `det Q` by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        let n = self.n;
        let mut a: Vec<BigInt> = self.q.iter().map(|&v| BigInt::from(v)).collect();
        let mut sign = 1;
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k * n + k].is_zero() {
                match (k + 1..n).find(|&r| !a[r * n + k].is_zero()) {
                    Some(r) => {
                        for c in 0..n {
                            a.swap(k * n + c, r * n + c);
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j]) / &prev;
                    a[i * n + j] = v;
                }
            }
            prev = a[k * n + k].clone();
        }
        prev * sign
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got,
            });
        }
        Ok(())
    }

    /// Exact value at an integer point.
    pub fn evaluate(&self, x: &[i64]) -> Result<i128> {
        self.check_dim(x.len())?;
        let overflow = || Error::Overflow("F(x) exceeds i128".into());
        let mut acc: i128 = i128::from(self.constant);
        for i in 0..self.n {
            let xi = i128::from(x[i]);
            let mut row: i128 = i128::from(self.l[i]);
            // diagonal once, off-diagonal pairs twice
            let mut quad: i128 = i128::from(self.q(i, i))
                .checked_mul(xi)
                .ok_or_else(overflow)?;
            for j in i + 1..self.n {
                let t = (2 * i128::from(self.q(i, j)))
                    .checked_mul(i128::from(x[j]))
                    .ok_or_else(overflow)?;
                quad = quad.checked_add(t).ok_or_else(overflow)?;
            }
            row = row.checked_add(quad).ok_or_else(overflow)?;
            acc = acc
                .checked_add(row.checked_mul(xi).ok_or_else(overflow)?)
                .ok_or_else(overflow)?;
        }
        Ok(acc)
    }

    /// Exact value at a rational point.
    pub fn evaluate_rational(&self, x: &[BigRational]) -> Result<BigRational> {
        self.check_dim(x.len())?;
        Ok(eval_generic(self, x))
    }

    #[inline]
    pub fn evaluate_f64(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = self.constant as f64;
        for i in 0..self.n {
            let mut row = self.l[i] as f64;
            for j in 0..self.n {
                row += self.q(i, j) as f64 * x[j];
            }
            acc += row * x[i];
        }
        acc
    }
}

impl fmt::Display for QuadraticPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<String> = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                let c = if i == j {
                    self.q(i, i)
                } else {
                    2 * self.q(i, j)
                };
                if c != 0 {
                    let mono = if i == j {
                        format!("x{}^2", i + 1)
                    } else {
                        format!("x{}x{}", i + 1, j + 1)
                    };
                    terms.push(format!("{c}*{mono}"));
                }
            }
        }
        for (i, &c) in self.l.iter().enumerate() {
            if c != 0 {
                terms.push(format!("{c}*x{}", i + 1));
            }
        }
        if self.constant != 0 || terms.is_empty() {
            terms.push(self.constant.to_string());
        }
        write!(f, "{}", terms.join(" + "))
    }
}

/// Closed box `𝓑 = Π [lo_i, hi_i]` with rational corners, plus the dilation `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxRegion {
    lo: Vec<BigRational>,
    hi: Vec<BigRational>,
    dilation: BigRational,
}

impl BoxRegion {
    pub fn new(lo: Vec<BigRational>, hi: Vec<BigRational>, dilation: BigRational) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if let Some(i) = (0..lo.len()).find(|&i| lo[i] >= hi[i]) {
            return Err(Error::InvalidInput(format!(
                "box side {i} has empty interior"
            )));
        }
        if !dilation.is_positive() {
            return Err(Error::InvalidInput("dilation X must be positive".into()));
        }
        Ok(Self { lo, hi, dilation })
    }

    /// `[lo, hi]^n` dilated by `x`, all given as integers.
    pub fn cube(n: usize, lo: i64, hi: i64, x: i64) -> Result<Self> {
        let r = |v: i64| BigRational::from_integer(v.into());
        Self::new(vec![r(lo); n], vec![r(hi); n], r(x))
    }

    /// Parses corners and dilation from strings accepted by [`parse_rational`].
    pub fn parse(lo: &[&str], hi: &[&str], x: &str) -> Result<Self> {
        let lo = lo
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<_>>()?;
        let hi = hi
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<_>>()?;
        Self::new(lo, hi, parse_rational(x)?)
    }

    pub fn with_dilation(&self, dilation: BigRational) -> Result<Self> {
        Self::new(self.lo.clone(), self.hi.clone(), dilation)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[BigRational] {
        &self.lo
    }

    pub fn hi(&self) -> &[BigRational] {
        &self.hi
    }

    pub fn dilation(&self) -> &BigRational {
        &self.dilation
    }

    pub fn dilation_f64(&self) -> f64 {
        rational_to_f64(&self.dilation)
    }

    pub fn dilated_lo(&self) -> Vec<BigRational> {
        self.lo.iter().map(|v| v * &self.dilation).collect()
    }

    pub fn dilated_hi(&self) -> Vec<BigRational> {
        self.hi.iter().map(|v| v * &self.dilation).collect()
    }

    pub fn lo_f64(&self) -> Vec<f64> {
        self.lo.iter().map(rational_to_f64).collect()
    }

    pub fn hi_f64(&self) -> Vec<f64> {
        self.hi.iter().map(rational_to_f64).collect()
    }

    /// `vol(𝓑)`, undilated.
    pub fn volume(&self) -> BigRational {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// `vol(X𝓑) = Xⁿ vol(𝓑)`.
    pub fn dilated_volume(&self) -> BigRational {
        let n = self.dim() as i32;
        self.volume() * num_traits::pow::Pow::pow(&self.dilation, n)
    }

    /// Integer ranges `[⌈X lo_i⌉, ⌊X hi_i⌋]` per coordinate.
    pub fn lattice_ranges(&self) -> Result<Vec<(i64, i64)>> {
        self.dilated_lo()
            .iter()
            .zip(self.dilated_hi().iter())
            .map(|(a, b)| {
                let lo = a.ceil().to_integer().to_i64();
                let hi = b.floor().to_integer().to_i64();
                match (lo, hi) {
                    (Some(lo), Some(hi)) => Ok((lo, hi)),
                    _ => Err(Error::Overflow(
                        "dilated box exceeds i64 coordinates".into(),
                    )),
                }
            })
            .collect()
    }

    /// `Π (⌊X hi_i⌋ - ⌈X lo_i⌉ + 1)`, or zero if some side holds no integer.
    pub fn lattice_count(&self) -> Result<u128> {
        let ranges = self.lattice_ranges()?;
        Ok(ranges
            .iter()
            .map(|&(a, b)| if b < a { 0 } else { (b - a + 1) as u128 })
            .product())
    }

    /// Streams `X𝓑 ∩ ℤⁿ` (closed box) in lexicographic order.
    pub fn lattice_points(&self) -> Result<LatticePoints> {
        let ranges = self.lattice_ranges()?;
        let empty = ranges.iter().any(|&(a, b)| b < a);
        Ok(LatticePoints {
            current: ranges.iter().map(|&(a, _)| a).collect(),
            ranges,
            done: empty,
        })
    }
}

/// Odometer over the integer points of a dilated box.
#[derive(Debug, Clone)]
pub struct LatticePoints {
    ranges: Vec<(i64, i64)>,
    current: Vec<i64>,
    done: bool,
}

impl Iterator for LatticePoints {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut i = self.ranges.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.ranges[i].1 {
                self.current[i] += 1;
                break;
            }
            self.current[i] = self.ranges[i].0;
        }
        Some(out)
    }
}

/// Exact minimum and maximum of `F` over the closed dilated box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeExtrema {
    pub fmin: BigRational,
    pub argmin: Vec<BigRational>,
    pub fmax: BigRational,
    pub argmax: Vec<BigRational>,
    /// `fmin >= 0`.
    pub admissible: bool,
}

impl RangeExtrema {
    /// `C_{F,𝓑}(X) = max |F|` over the dilated box.
    pub fn max_abs(&self) -> BigRational {
        self.fmax.abs().max(self.fmin.abs())
    }
}

/// Minimum and maximum of `F` over `X𝓑` by recursion over the `3ⁿ` faces.
///
/// On each face some coordinates sit at a bound and the rest are free; the
/// critical point of the restricted quadratic solves a linear system, and the
/// extrema are attained at one of these face critical points. Faces whose
/// restricted system is singular contribute nothing directly: any extremum
/// they carry is attained on a lower-dimensional face as well.
pub fn range_extrema(poly: &QuadraticPolynomial, region: &BoxRegion) -> Result<RangeExtrema> {
    poly.check_dim(region.dim())?;
    let ext = extrema_generic(poly, &region.dilated_lo(), &region.dilated_hi());
    Ok(RangeExtrema {
        admissible: !ext.min.is_negative(),
        fmin: ext.min,
        argmin: ext.argmin,
        fmax: ext.max,
        argmax: ext.argmax,
    })
}

/// [`range_extrema`], failing with the minimizer as witness when `F < 0`
/// somewhere on the dilated box.
pub fn require_admissible(poly: &QuadraticPolynomial, region: &BoxRegion) -> Result<RangeExtrema> {
    let ext = range_extrema(poly, region)?;
    if !ext.admissible {
        let witness: Vec<String> = ext.argmin.iter().map(rational_to_string).collect();
        return Err(Error::Inadmissible {
            witness: format!("({})", witness.join(", ")),
            value: rational_to_string(&ext.fmin),
        });
    }
    Ok(ext)
}

/// Floating-point extrema of `F` over `Π [lo_i, hi_i]`.
pub(crate) fn extrema_f64(poly: &QuadraticPolynomial, lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let e = extrema_generic(poly, lo, hi);
    (e.min, e.max)
}

pub(crate) trait FaceScalar: Clone + PartialOrd + Num + Signed {
    fn from_i64(v: i64) -> Self;
    fn negligible_pivot(&self) -> bool;
    /// Projects a candidate onto `[lo, hi]`, or rejects it.
    fn clamp_into(self, lo: &Self, hi: &Self) -> Option<Self>;
}

impl FaceScalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }
    fn negligible_pivot(&self) -> bool {
        self.is_zero()
    }
    fn clamp_into(self, lo: &Self, hi: &Self) -> Option<Self> {
        (&self >= lo && &self <= hi).then_some(self)
    }
}

impl FaceScalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn negligible_pivot(&self) -> bool {
        self.abs() < 1e-12
    }
    fn clamp_into(self, lo: &Self, hi: &Self) -> Option<Self> {
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        (self >= lo - slack && self <= hi + slack).then(|| self.clamp(*lo, *hi))
    }
}

fn eval_generic<T: FaceScalar>(poly: &QuadraticPolynomial, x: &[T]) -> T {
    let n = poly.n;
    let mut acc = T::from_i64(poly.constant);
    for i in 0..n {
        let mut row = T::from_i64(poly.l[i]);
        for j in 0..n {
            let qij = poly.q(i, j);
            if qij != 0 {
                row = row + T::from_i64(qij) * x[j].clone();
            }
        }
        acc = acc + row * x[i].clone();
    }
    acc
}

struct Extrema<T> {
    min: T,
    argmin: Vec<T>,
    max: T,
    argmax: Vec<T>,
}

fn extrema_generic<T: FaceScalar>(poly: &QuadraticPolynomial, lo: &[T], hi: &[T]) -> Extrema<T> {
    let n = poly.n;
    let faces = 3usize.pow(n as u32);
    let mut best: Option<Extrema<T>> = None;
    let mut point: Vec<T> = lo.to_vec();
    let mut free: Vec<usize> = Vec::with_capacity(n);

    for code in 0..faces {
        free.clear();
        let mut c = code;
        for i in 0..n {
            match c % 3 {
                0 => point[i] = lo[i].clone(),
                1 => point[i] = hi[i].clone(),
                _ => free.push(i),
            }
            c /= 3;
        }
        if !free.is_empty() && !solve_face(poly, &free, lo, hi, &mut point) {
            continue;
        }
        let value = eval_generic(poly, &point);
        match &mut best {
            None => {
                best = Some(Extrema {
                    min: value.clone(),
                    argmin: point.clone(),
                    max: value,
                    argmax: point.clone(),
                })
            }
            Some(b) => {
                if value < b.min {
                    b.min = value.clone();
                    b.argmin = point.clone();
                }
                if value > b.max {
                    b.max = value;
                    b.argmax = point.clone();
                }
            }
        }
    }
    best.expect("the all-lower-corner face always yields a candidate")
}

/// Solves `∂F/∂x_i = 0` for the free coordinates with the others fixed in
/// `point`. Writes the solution into `point` and returns whether it exists
/// and lies in the face.
fn solve_face<T: FaceScalar>(
    poly: &QuadraticPolynomial,
    free: &[usize],
    lo: &[T],
    hi: &[T],
    point: &mut [T],
) -> bool {
    let m = free.len();
    let n = poly.n;
    // augmented system [A | b] with A = 2 Q_ff, b = -L_f - 2 Q_f,fixed x_fixed
    let mut a: Vec<T> = Vec::with_capacity(m * (m + 1));
    for &i in free {
        for &j in free {
            a.push(T::from_i64(2 * poly.q(i, j)));
        }
        let mut rhs = -T::from_i64(poly.l[i]);
        for j in 0..n {
            if !free.contains(&j) && poly.q(i, j) != 0 {
                rhs = rhs - T::from_i64(2 * poly.q(i, j)) * point[j].clone();
            }
        }
        a.push(rhs);
    }
    let w = m + 1;
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&r1, &r2| {
                a[r1 * w + col]
                    .abs()
                    .partial_cmp(&a[r2 * w + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty range");
        if a[pivot_row * w + col].negligible_pivot() {
            return false;
        }
        if pivot_row != col {
            for c in 0..w {
                a.swap(pivot_row * w + c, col * w + c);
            }
        }
        let pivot = a[col * w + col].clone();
        for r in 0..m {
            if r == col || a[r * w + col].is_zero() {
                continue;
            }
            let factor = a[r * w + col].clone() / pivot.clone();
            for c in col..w {
                let v = a[col * w + c].clone() * factor.clone();
                a[r * w + c] = a[r * w + c].clone() - v;
            }
        }
    }
    for (row, &i) in free.iter().enumerate() {
        let v = a[row * w + m].clone() / a[row * w + row].clone();
        match v.clamp_into(&lo[i], &hi[i]) {
            Some(v) => point[i] = v,
            None => return false,
        }
    }
    true
}

/// Parses `"p/q"`, integers, and decimals such as `"2.5"` or `"-1.25e-3"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("cannot parse rational number {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str_radix(&all_digits, 10).map_err(|_| bad())?;
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// `"p"` for integers, `"p/q"` otherwise; inverse of [`parse_rational`].
pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // very large numerator and denominator: scale both down first
        let (n, d) = (r.numer(), r.denom());
        let shift = n.bits().max(d.bits()).saturating_sub(900);
        let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}
