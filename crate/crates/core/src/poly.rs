//! Univariate polynomials over the rationals and rational functions in `L`.

use crate::exact::{rat_string, ExactRat};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Dense polynomial `sum c_i L^i` over Q. Trailing zeros are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QPoly {
    coeffs: Vec<ExactRat>,
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render("L"))
    }
}

impl QPoly {
    pub fn new(mut coeffs: Vec<ExactRat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: ExactRat) -> Self {
        QPoly::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(ExactRat::one())
    }

    /// `c * L^k`
    pub fn monomial(c: ExactRat, k: usize) -> Self {
        let mut v = vec![ExactRat::zero(); k + 1];
        v[k] = c;
        QPoly::new(v)
    }

    pub fn coeffs(&self) -> &[ExactRat] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> ExactRat {
        self.coeffs.get(i).cloned().unwrap_or_else(ExactRat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> ExactRat {
        self.coeffs.last().cloned().unwrap_or_else(ExactRat::zero)
    }

    pub fn scale(&self, c: &ExactRat) -> Self {
        QPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Multiplies by `L^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut v = vec![ExactRat::zero(); k];
        v.extend(self.coeffs.iter().cloned());
        QPoly { coeffs: v }
    }

    /// `L d/dL`
    pub fn theta(&self) -> Self {
        QPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * ExactRat::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn derivative(&self) -> Self {
        QPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * ExactRat::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn eval(&self, x: &ExactRat) -> ExactRat {
        self.coeffs
            .iter()
            .rev()
            .fold(ExactRat::zero(), |acc, c| acc * x + c)
    }

    /// Substitutes `L -> L^k`.
    pub fn compose_power(&self, k: usize) -> Self {
        let mut v = vec![ExactRat::zero(); self.coeffs.len().saturating_sub(1) * k + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i * k] = c.clone();
        }
        QPoly::new(v)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.degree().unwrap();
        let lead = d.leading();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (QPoly::zero(), self.clone());
        }
        let mut q = vec![ExactRat::zero(); r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = &r[i + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    r[i + j] = &r[i + j] - &c * dc;
                }
            }
            q[i] = c;
        }
        r.truncate(dd);
        (QPoly::new(q), QPoly::new(r))
    }

    pub fn gcd(&self, other: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.leading();
        self.scale(&(ExactRat::one() / l))
    }

    /// Lowest index with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cs = rat_string(c);
            parts.push(match i {
                0 => cs,
                1 => format!("{cs}*{var}"),
                _ => format!("{cs}*{var}^{i}"),
            });
        }
        parts.join(" + ")
    }
}

impl Add for &QPoly {
    type Output = QPoly;
    fn add(self, o: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        QPoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}

impl Sub for &QPoly {
    type Output = QPoly;
    fn sub(self, o: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        QPoly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}

impl Neg for &QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &QPoly {
    type Output = QPoly;
    fn mul(self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut v = vec![ExactRat::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] = &v[i + j] + a * b;
            }
        }
        QPoly::new(v)
    }
}

/// Reduced fraction of polynomials with a monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: QPoly,
    den: QPoly,
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl RatFunc {
    pub fn new(num: QPoly, den: QPoly) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        if num.is_zero() {
            return RatFunc::zero();
        }
        let g = num.gcd(&den);
        let (mut n, _) = num.div_rem(&g);
        let (mut d, _) = den.div_rem(&g);
        let l = d.leading();
        if !l.is_one() {
            let inv = ExactRat::one() / l;
            n = n.scale(&inv);
            d = d.scale(&inv);
        }
        RatFunc { num: n, den: d }
    }

    pub fn zero() -> Self {
        RatFunc {
            num: QPoly::zero(),
            den: QPoly::one(),
        }
    }

    pub fn one() -> Self {
        Self::constant(ExactRat::one())
    }

    pub fn constant(c: ExactRat) -> Self {
        RatFunc {
            num: QPoly::constant(c),
            den: QPoly::one(),
        }
    }

    pub fn from_poly(p: QPoly) -> Self {
        RatFunc {
            num: p,
            den: QPoly::one(),
        }
    }

    /// `c * L^k` for any integer `k`.
    pub fn laurent_monomial(c: ExactRat, k: i64) -> Self {
        if k >= 0 {
            Self::from_poly(QPoly::monomial(c, k as usize))
        } else {
            RatFunc::new(
                QPoly::constant(c),
                QPoly::monomial(ExactRat::one(), (-k) as usize),
            )
        }
    }

    pub fn num(&self) -> &QPoly {
        &self.num
    }

    pub fn den(&self) -> &QPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The polynomial when the denominator is 1.
    pub fn as_poly(&self) -> Option<&QPoly> {
        (self.den == QPoly::one()).then_some(&self.num)
    }

    pub fn inv(&self) -> Option<RatFunc> {
        (!self.is_zero()).then(|| RatFunc::new(self.den.clone(), self.num.clone()))
    }

    /// `L d/dL` by the quotient rule.
    pub fn theta(&self) -> RatFunc {
        let n = &(&self.num.theta() * &self.den) - &(&self.num * &self.den.theta());
        RatFunc::new(n, &self.den * &self.den)
    }

    pub fn scale(&self, c: &ExactRat) -> RatFunc {
        RatFunc::new(self.num.scale(c), self.den.clone())
    }

    pub fn render(&self) -> String {
        if self.den == QPoly::one() {
            self.num.render("L")
        } else {
            format!("({})/({})", self.num.render("L"), self.den.render("L"))
        }
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::new(&self.num + &o.num, self.den.clone());
        }
        RatFunc::new(
            &(&self.num * &o.den) + &(&o.num * &self.den),
            &self.den * &o.den,
        )
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, o: &RatFunc) -> RatFunc {
        self + &(-o)
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, o: &RatFunc) -> RatFunc {
        RatFunc::new(&self.num * &o.num, &self.den * &o.den)
    }
}

/// Solves `m x = rhs` over Q(L) by Gaussian elimination. `None` when singular.
pub fn solve_ratfunc(m: &[Vec<RatFunc>], rhs: &[RatFunc]) -> Option<Vec<RatFunc>> {
    let n = m.len();
    let mut a: Vec<Vec<RatFunc>> = m
        .iter()
        .zip(rhs)
        .map(|(row, r)| {
            let mut row = row.clone();
            row.push(r.clone());
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = a[col][col].inv()?;
        for j in col..=n {
            a[col][j] = &a[col][j] * &inv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in col..=n {
                let v = &a[r][j] - &(&f * &a[col][j]);
                a[r][j] = v;
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}

/// Determinant over Q(L) by elimination.
pub fn det_ratfunc(m: &[Vec<RatFunc>]) -> RatFunc {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = RatFunc::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return RatFunc::zero();
        };
        if piv != col {
            a.swap(col, piv);
            det = -&det;
        }
        det = &det * &a[col][col];
        let inv = a[col][col].inv().unwrap();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for j in col..n {
                let v = &a[r][j] - &(&f * &a[col][j]);
                a[r][j] = v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};

    fn p(c: &[i64]) -> QPoly {
        QPoly::new(c.iter().map(|&x| rat_int(x)).collect())
    }

    #[test]
    fn poly_arith() {
        let a = p(&[1, 1]);
        let b = p(&[-1, 1]);
        assert_eq!(&a * &b, p(&[-1, 0, 1]));
        let (q, r) = p(&[-1, 0, 1]).div_rem(&a);
        assert_eq!(q, b);
        assert!(r.is_zero());
        assert_eq!(p(&[0, 0, 3]).theta(), p(&[0, 0, 6]));
        assert_eq!(p(&[1, 2]).compose_power(3), p(&[1, 0, 0, 2]));
    }

    #[test]
    fn ratfunc_reduces() {
        let f = RatFunc::new(p(&[-1, 0, 1]), p(&[2, 2]));
        assert_eq!(f.num(), &QPoly::new(vec![rat(-1, 2), rat(1, 2)]));
        assert_eq!(f.den(), &p(&[1]));
        let g = RatFunc::laurent_monomial(rat_int(2), -2);
        assert_eq!(
            (&g * &RatFunc::from_poly(p(&[0, 0, 1]))),
            RatFunc::constant(rat_int(2))
        );
        assert_eq!(g.theta(), RatFunc::laurent_monomial(rat_int(-4), -2));
    }

    #[test]
    fn solve_small_system() {
        let l = RatFunc::from_poly(p(&[0, 1]));
        let one = RatFunc::one();
        let m = vec![
            vec![one.clone(), l.clone()],
            vec![RatFunc::zero(), l.clone()],
        ];
        let x = solve_ratfunc(&m, &[one.clone(), one.clone()]).unwrap();
        assert_eq!(x[0], RatFunc::zero());
        assert_eq!(x[1], l.inv().unwrap());
        assert_eq!(det_ratfunc(&m), &l * &one);
    }
}
