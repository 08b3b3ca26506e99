//! Real-coefficient polynomials and rational functions of the Laplace variable.
//!
//! Coefficients are stored in ascending degree order (`coeffs[k]` multiplies
//! `s^k`) and trimmed so the highest stored coefficient is nonzero.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute magnitude below which trailing coefficients are dropped.
pub const TRIM_EPS: f64 = 1e-12;

/// Relative magnitude below which a Routh pivot is considered zero.
pub const ROUTH_PIVOT_TOL: f64 = 1e-12;

/// Relative magnitude of a denominator value treated as a pole.
pub const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, trimming at [`TRIM_EPS`].
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        Self::with_trim(coeffs, TRIM_EPS)
    }

    pub fn with_trim(coeffs: impl Into<Vec<f64>>, eps: f64) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.last().is_some_and(|c| c.abs() <= eps) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monic polynomial with the given real roots.
    pub fn from_real_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self::constant(1.0), |acc, &r| &acc * &Self::new(vec![-r, 1.0]))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect::<Vec<_>>(),
        )
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `Σ |c_k| |s|^k`, the scale against which `|p(s)|` is judged small.
    pub fn eval_abs_bound(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    /// Removes roots at the origin: returns `(k, q)` with `p(s) = s^k q(s)`.
    ///
    /// Low-order coefficients with magnitude at most [`TRIM_EPS`] count as zero.
    pub fn split_origin(&self) -> (usize, Polynomial) {
        let k = self
            .coeffs
            .iter()
            .take_while(|c| c.abs() <= TRIM_EPS)
            .count();
        (k, Self::new(self.coeffs[k..].to_vec()))
    }

    /// All roots with multiplicity, from the eigenvalues of the balanced
    /// companion matrix followed by a Newton polish.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        match self.degree() {
            None => return Err(Error::DegenerateInput("roots of the zero polynomial")),
            Some(0) => return Err(Error::DegenerateInput("roots of a constant polynomial")),
            _ => {}
        }
        let (origin, rest) = self.split_origin();
        let mut roots = vec![Complex64::new(0.0, 0.0); origin];
        let n = rest.degree().unwrap_or(0);
        if n == 0 {
            return Ok(roots);
        }
        let lead = rest.leading();
        if n == 1 {
            roots.push(Complex64::new(-rest.coeffs[0] / lead, 0.0));
            return Ok(roots);
        }
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -rest.coeffs[i] / lead;
        }
        let dp = rest.derivative();
        for z in linalg::eigenvalues(&companion)? {
            roots.push(rest.polish(&dp, z));
        }
        Ok(roots)
    }

    fn polish(&self, dp: &Polynomial, mut z: Complex64) -> Complex64 {
        let mut fz = self.eval(z).norm();
        for _ in 0..3 {
            let d = dp.eval(z);
            if d.norm() == 0.0 || fz == 0.0 {
                break;
            }
            let cand = z - self.eval(z) / d;
            let fc = self.eval(cand).norm();
            if !(fc < fz) {
                break;
            }
            z = cand;
            fz = fc;
        }
        z
    }

    /// Returns `q` with `q(w) = p(w - sigma)`.
    ///
    /// Zeros of `p` with `Re(s) > -sigma` become zeros of `q` with `Re(w) > 0`.
    pub fn shift(&self, sigma: f64) -> Polynomial {
        let lin = Polynomial::new(vec![-sigma, 1.0]);
        let mut q = Polynomial::zero();
        for &c in self.coeffs.iter().rev() {
            q = &(&q * &lin) + &Polynomial::constant(c);
        }
        q
    }

    /// Routh-array classification of the open left half-plane.
    pub fn routh_classify(&self) -> Result<RouthVerdict> {
        let deg = match self.degree() {
            None => return Err(Error::DegenerateInput("Routh test of the zero polynomial")),
            Some(0) => return Err(Error::DegenerateInput("Routh test of a constant polynomial")),
            Some(d) => d,
        };
        let sign = self.leading().signum();
        let desc: Vec<f64> = self.coeffs.iter().rev().map(|c| c * sign).collect();
        // Stodola: every coefficient of a strictly Hurwitz polynomial is positive.
        if desc.iter().any(|&c| c <= 0.0) {
            return Ok(RouthVerdict::NotHurwitz);
        }
        match routh_first_column(&desc, deg, None) {
            Some(col) => {
                if col.iter().all(|&c| c > 0.0) {
                    Ok(RouthVerdict::Hurwitz)
                } else {
                    Ok(RouthVerdict::NotHurwitz)
                }
            }
            None => {
                // Zero pivot: substitute +eps and -eps and require both to agree.
                let plus = routh_first_column(&desc, deg, Some(1.0)).map(|c| sign_changes(&c));
                let minus = routh_first_column(&desc, deg, Some(-1.0)).map(|c| sign_changes(&c));
                match (plus, minus) {
                    (Some(p), Some(m)) if p > 0 && m > 0 => Ok(RouthVerdict::NotHurwitz),
                    _ => Ok(RouthVerdict::Marginal),
                }
            }
        }
    }

    /// `true` iff every zero has a strictly negative real part.
    ///
    /// Marginal Routh classifications are reported as `false`.
    pub fn is_strictly_hurwitz(&self) -> Result<bool> {
        Ok(self.routh_classify()? == RouthVerdict::Hurwitz)
    }
}

/// Outcome of the Routh test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouthVerdict {
    Hurwitz,
    NotHurwitz,
    /// A pivot vanished within tolerance and the epsilon rule was inconclusive.
    Marginal,
}

fn routh_first_column(desc: &[f64], deg: usize, eps_sign: Option<f64>) -> Option<Vec<f64>> {
    let mut prev: Vec<f64> = desc.iter().step_by(2).copied().collect();
    let mut cur: Vec<f64> = desc.iter().skip(1).step_by(2).copied().collect();
    let mut col = vec![prev[0]];
    for _ in 1..=deg {
        let row_scale = prev
            .iter()
            .chain(cur.iter())
            .fold(0.0_f64, |m, c| m.max(c.abs()));
        let mut pivot = cur.first().copied().unwrap_or(0.0);
        if pivot.abs() <= ROUTH_PIVOT_TOL * row_scale {
            let sgn = eps_sign?;
            pivot = sgn * ROUTH_PIVOT_TOL * row_scale.max(f64::MIN_POSITIVE);
            if cur.is_empty() {
                cur.push(pivot);
            } else {
                cur[0] = pivot;
            }
        }
        col.push(pivot);
        let width = prev.len().max(cur.len());
        let next: Vec<f64> = (0..width.saturating_sub(1))
            .map(|k| {
                let a = prev.get(k + 1).copied().unwrap_or(0.0);
                let b = cur.get(k + 1).copied().unwrap_or(0.0);
                (pivot * a - prev[0] * b) / pivot
            })
            .collect();
        prev = cur;
        cur = next;
    }
    Some(col)
}

fn sign_changes(col: &[f64]) -> usize {
    col.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}s")?,
                _ => write!(f, "{a}s^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + rhs.coeffs.get(k).unwrap_or(&0.0))
                .collect::<Vec<_>>(),
        )
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

/// `num(s) / den(s)` with a monic denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DegenerateInput("rational function with zero denominator"));
        }
        let lead = den.leading();
        Ok(Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            num: Polynomial::constant(c),
            den: Polynomial::constant(1.0),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_strictly_proper(&self) -> bool {
        match (self.num.degree(), self.den.degree()) {
            (None, _) => true,
            (Some(n), Some(d)) => n < d,
            (Some(_), None) => false,
        }
    }

    pub fn reciprocal(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    /// `num(s) / den(s)`, failing when `s` is within tolerance of a pole.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval(s);
        if d.norm() <= POLE_TOL * self.den.eval_abs_bound(s) {
            return Err(Error::PoleAtPoint { s });
        }
        Ok(self.num.eval(s) / d)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn eval_examples() {
        let p = Polynomial::new(vec![40.0, 4.0, 1.0]);
        assert_eq!(p.eval(c(0.0, 0.0)), c(40.0, 0.0));
        assert_eq!(p.eval(c(0.0, 1.0)), c(39.0, 4.0));
        assert_eq!(Polynomial::zero().eval(c(3.0, -2.0)), c(0.0, 0.0));
    }

    #[test]
    fn trimming() {
        let p = Polynomial::new(vec![1.0, 2.0, 1e-13, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert!(Polynomial::new(vec![0.0, 0.0]).is_zero());
        assert_eq!(Polynomial::zero().degree(), None);
    }

    #[test]
    fn roots_examples() {
        let r = sorted(Polynomial::new(vec![-1.0, 0.0, 1.0]).roots().unwrap());
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-12);

        let r = sorted(Polynomial::new(vec![0.0, 1.0, 1.0]).roots().unwrap());
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(r[1], c(0.0, 0.0));

        let r = sorted(Polynomial::new(vec![40.0, 4.0, 1.0]).roots().unwrap());
        assert!((r[0] - c(-2.0, -6.0)).norm() < 1e-12);
        assert!((r[1] - c(-2.0, 6.0)).norm() < 1e-12);
    }

    #[test]
    fn roots_of_degenerate_inputs() {
        assert!(matches!(Polynomial::zero().roots(), Err(Error::DegenerateInput(_))));
        assert!(matches!(
            Polynomial::constant(3.0).roots(),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn shift_examples() {
        let s2 = Polynomial::new(vec![0.0, 0.0, 1.0]);
        assert_eq!(s2.shift(0.0), s2);
        let q = s2.shift(0.35);
        let want = [0.1225, -0.7, 1.0];
        for (a, b) in q.coeffs().iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{q}");
        }
        let q = Polynomial::new(vec![1.0, 1.0]).shift(1.0);
        assert_eq!(q.coeffs(), &[0.0, 1.0]);
    }

    #[test]
    fn routh_examples() {
        assert!(Polynomial::new(vec![40.0, 4.0, 1.0]).is_strictly_hurwitz().unwrap());
        assert!(!Polynomial::new(vec![1.0, -1.0, 1.0]).is_strictly_hurwitz().unwrap());
        let axis = Polynomial::new(vec![1.0, 1.0, 1.0, 1.0]);
        assert!(!axis.is_strictly_hurwitz().unwrap());
        assert_ne!(axis.routh_classify().unwrap(), RouthVerdict::Hurwitz);
        assert!(matches!(
            Polynomial::zero().is_strictly_hurwitz(),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn routh_negative_leading_is_normalized() {
        assert!(Polynomial::new(vec![-40.0, -4.0, -1.0]).is_strictly_hurwitz().unwrap());
    }

    #[test]
    fn routh_detects_rhp_pair_with_positive_coefficients() {
        // (s + 3)(s^2 - 0.5 s + 4) = s^3 + 2.5 s^2 + 2.5 s + 12
        let p = Polynomial::new(vec![12.0, 2.5, 2.5, 1.0]);
        assert_eq!(p.routh_classify().unwrap(), RouthVerdict::NotHurwitz);
    }

    #[test]
    fn routh_zero_pivot_with_rhp_roots() {
        // s^4 + s^3 + 2 s^2 + 2 s + 3: Routh pivot vanishes in row s^2 and
        // the epsilon rule yields two sign changes for both signs.
        let p = Polynomial::new(vec![3.0, 2.0, 2.0, 1.0, 1.0]);
        assert_eq!(p.routh_classify().unwrap(), RouthVerdict::NotHurwitz);
        let max_re = p.roots().unwrap().iter().map(|z| z.re).fold(f64::MIN, f64::max);
        assert!(max_re > 0.0);
    }

    #[test]
    fn rf_eval_examples() {
        let one_over_s = RationalFunction::new(
            Polynomial::constant(1.0),
            Polynomial::new(vec![0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(one_over_s.eval(c(1.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert!(matches!(
            one_over_s.eval(c(0.0, 0.0)),
            Err(Error::PoleAtPoint { .. })
        ));

        let r = RationalFunction::new(Polynomial::constant(-1.0), Polynomial::new(vec![0.0, 1.0, 1.0]))
            .unwrap();
        let v = r.eval(c(0.0, 1.0)).unwrap();
        assert!((v - c(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn rational_is_canonical() {
        let r = RationalFunction::new(Polynomial::new(vec![2.0]), Polynomial::new(vec![4.0, 2.0]))
            .unwrap();
        assert_eq!(r.den().leading(), 1.0);
        assert_eq!(r.num().coeffs(), &[1.0]);
        assert!(r.is_strictly_proper());
        assert!(!r.reciprocal().unwrap().is_strictly_proper());
        assert!(RationalFunction::new(Polynomial::constant(1.0), Polynomial::zero()).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(Polynomial::new(vec![40.0, -4.0, 1.0]).to_string(), "1s^2 - 4s + 40");
    }
}
