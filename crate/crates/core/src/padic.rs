//! Truncated arithmetic in `Z_p[pi]` with `pi^(p-1) = -p`, and polynomials
//! in one variable over it.

use crate::error::{Error, Result};
use crate::exact::ExactRat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt;

/// `sum_{j<p-1} c_j pi^j`, known modulo `pi^prec`.
///
/// Canonical form reduces `c_j` modulo `p^ceil((prec - j)/(p - 1))`, the
/// smallest power of `p` whose product with `pi^j` lies in `pi^prec`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PiAdicScalar {
    p: u64,
    prec: u32,
    c: Vec<i128>,
}

impl fmt::Debug for PiAdicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} + O(pi^{})", self.c, self.prec)
    }
}

fn pow_i128(p: u64, e: u32) -> i128 {
    (p as i128)
        .checked_pow(e)
        .expect("p-adic modulus overflows i128")
}

fn inv_mod_i128(a: i128, m: i128) -> Option<i128> {
    if m == 1 {
        return Some(0);
    }
    let e = BigInt::from(a).extended_gcd(&BigInt::from(m));
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(&BigInt::from(m)).to_i128().unwrap())
}

impl PiAdicScalar {
    pub fn zero(p: u64, prec: u32) -> Self {
        PiAdicScalar {
            p,
            prec,
            c: vec![0; (p - 1) as usize],
        }
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_int(p, prec, 1)
    }

    pub fn from_int(p: u64, prec: u32, n: i128) -> Self {
        let mut x = Self::zero(p, prec);
        x.c[0] = n;
        x.normalize();
        x
    }

    /// From power-basis coefficients `c_0..c_{p-2}`.
    pub fn from_coeffs(p: u64, prec: u32, c: Vec<i128>) -> Self {
        assert_eq!(c.len(), (p - 1) as usize);
        let mut x = PiAdicScalar { p, prec, c };
        x.normalize();
        x
    }

    /// `pi^e` for `e >= 0`.
    pub fn pi_pow(p: u64, prec: u32, e: u32) -> Self {
        let m = p as u32 - 1;
        let (q, r) = (e / m, e % m);
        let mut x = Self::zero(p, prec);
        if e < prec {
            // pi^(mq) = (-p)^q
            let sign = if q % 2 == 0 { 1 } else { -1 };
            x.c[r as usize] = sign * pow_i128(p, q);
        }
        x.normalize();
        x
    }

    /// `r * pi^e` for a rational `r`; the p-part of `r` is absorbed into the
    /// pi-exponent, which must end up nonnegative.
    pub fn from_rat_pi(p: u64, prec: u32, r: &ExactRat, e: i64) -> Result<Self> {
        if r.is_zero() {
            return Ok(Self::zero(p, prec));
        }
        let pb = BigInt::from(p);
        let (mut num, mut den) = (r.numer().clone(), r.denom().clone());
        let mut k: i64 = 0;
        while (&num % &pb).is_zero() {
            num /= &pb;
            k += 1;
        }
        while (&den % &pb).is_zero() {
            den /= &pb;
            k -= 1;
        }
        // p^k = (-1)^k pi^(k(p-1))
        let total = e + k * (p as i64 - 1);
        if total < 0 {
            return Err(Error::Invariant(format!("negative pi-exponent {total}")));
        }
        let sign: i128 = if k.rem_euclid(2) == 0 { 1 } else { -1 };
        let modulus = BigInt::from(pow_i128(p, prec.div_ceil(p as u32 - 1) + 1));
        let n = num.mod_floor(&modulus).to_i128().unwrap();
        let dinv = inv_mod_i128(
            den.mod_floor(&modulus).to_i128().unwrap(),
            modulus.to_i128().unwrap(),
        )
        .expect("unit denominator");
        let unit = Self::from_int(p, prec, n).mul_int(dinv).mul_int(sign);
        Ok(unit.mul(&Self::pi_pow(p, prec, total.min(u32::MAX as i64) as u32)))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.c
    }

    fn modulus(&self, j: usize) -> i128 {
        let m = self.p as i64 - 1;
        let need = self.prec as i64 - j as i64;
        if need <= 0 {
            1
        } else {
            pow_i128(self.p, ((need + m - 1) / m) as u32)
        }
    }

    fn normalize(&mut self) {
        for j in 0..self.c.len() {
            let m = self.modulus(j);
            self.c[j] = self.c[j].rem_euclid(m);
        }
    }

    /// Same value at a lower precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        let mut x = self.clone();
        x.prec = prec.min(self.prec);
        x.normalize();
        x
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    fn check(&self, o: &Self) {
        assert_eq!(self.p, o.p, "mismatched primes");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        let prec = self.prec.min(o.prec);
        let m = (0..self.c.len()).map(|j| self.c[j] + o.c[j]).collect();
        let mut x = PiAdicScalar {
            p: self.p,
            prec,
            c: m,
        };
        x.normalize();
        x
    }

    pub fn neg(&self) -> Self {
        let mut x = PiAdicScalar {
            p: self.p,
            prec: self.prec,
            c: self.c.iter().map(|v| -v).collect(),
        };
        x.normalize();
        x
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul_int(&self, k: i128) -> Self {
        let mut x = self.clone();
        for j in 0..x.c.len() {
            let m = x.modulus(j);
            x.c[j] = (x.c[j] * k.rem_euclid(m)).rem_euclid(m);
        }
        x
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        let prec = self.prec.min(o.prec);
        let n = self.c.len();
        let top = pow_i128(self.p, prec.div_ceil(self.p as u32 - 1) + 1);
        let mut out = vec![0i128; n];
        for i in 0..n {
            if self.c[i] == 0 {
                continue;
            }
            for j in 0..n {
                if o.c[j] == 0 {
                    continue;
                }
                let t = (self.c[i] * o.c[j]) % top;
                if i + j < n {
                    out[i + j] = (out[i + j] + t) % top;
                } else {
                    // pi^(p-1) = -p
                    out[i + j - n] = (out[i + j - n] - t * self.p as i128) % top;
                }
            }
        }
        let mut x = PiAdicScalar {
            p: self.p,
            prec,
            c: out,
        };
        x.normalize();
        x
    }

    /// `min_j ((p-1) ord_p(c_j) + j)`, `None` when zero to this precision.
    pub fn valuation(&self) -> Option<u32> {
        let m = self.p as u32 - 1;
        self.c
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(j, &v)| {
                let mut v = v;
                let mut k = 0;
                while v % self.p as i128 == 0 {
                    v /= self.p as i128;
                    k += 1;
                }
                m * k + j as u32
            })
            .min()
    }

    /// Exact quotient by `pi`, losing one digit of precision.
    pub fn div_pi(&self) -> Result<Self> {
        if self.c[0] % self.p as i128 != 0 {
            return Err(Error::Invariant("not divisible by pi".into()));
        }
        let n = self.c.len();
        let mut c = vec![0i128; n];
        c[..(n - 1)].copy_from_slice(&self.c[1..n]);
        c[n - 1] = -self.c[0] / self.p as i128;
        let mut x = PiAdicScalar {
            p: self.p,
            prec: self.prec.saturating_sub(1),
            c,
        };
        x.normalize();
        Ok(x)
    }

    /// Inverse of a unit by Newton iteration `y <- y (2 - x y)`.
    pub fn inv(&self) -> Result<Self> {
        let c0 = self.c[0].rem_euclid(self.p as i128);
        if c0 == 0 {
            return Err(Error::Invariant("inverting a non-unit".into()));
        }
        let mut y = Self::from_int(self.p, self.prec, inv_mod_i128(c0, self.p as i128).unwrap());
        let two = Self::from_int(self.p, self.prec, 2);
        for _ in 0..=(32 - self.prec.max(1).leading_zeros()) + 1 {
            y = y.mul(&two.sub(&self.mul(&y)));
        }
        debug_assert!(self.mul(&y).sub(&Self::one(self.p, self.prec)).is_zero());
        Ok(y)
    }

    /// Digits `d_0..d_{prec-1}` in `{0..p-1}` with `x = sum d_i pi^i`.
    pub fn pi_digits(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.prec as usize);
        let mut cur = self.clone();
        while cur.prec > 0 {
            let d = cur.c[0].rem_euclid(self.p as i128);
            out.push(d as u64);
            let mut t = cur.clone();
            t.c[0] -= d;
            cur = t.div_pi().expect("digit removed");
        }
        out
    }
}

/// Polynomial in a variable `L` (degree `< cap`) with π-adic coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LamPoly {
    pub coeffs: Vec<PiAdicScalar>,
}

/// Shape of a [`LamPoly`] ring: prime, π-precision and `L`-degree cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LamPolyRing {
    pub p: u64,
    pub prec: u32,
    pub cap: usize,
}

impl LamPolyRing {
    pub fn zero(&self) -> LamPoly {
        LamPoly { coeffs: Vec::new() }
    }

    pub fn scalar(&self, s: PiAdicScalar) -> LamPoly {
        self.monomial(s, 0)
    }

    pub fn monomial(&self, s: PiAdicScalar, k: usize) -> LamPoly {
        if k >= self.cap || s.is_zero() {
            return self.zero();
        }
        let mut coeffs = vec![PiAdicScalar::zero(self.p, self.prec); k + 1];
        coeffs[k] = s.with_prec(self.prec);
        LamPoly { coeffs }
    }

    fn trim(&self, mut v: Vec<PiAdicScalar>) -> LamPoly {
        v.truncate(self.cap);
        while v.last().is_some_and(|x| x.is_zero()) {
            v.pop();
        }
        LamPoly { coeffs: v }
    }

    pub fn coeff(&self, x: &LamPoly, k: usize) -> PiAdicScalar {
        x.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| PiAdicScalar::zero(self.p, self.prec))
    }

    pub fn add(&self, x: &LamPoly, y: &LamPoly) -> LamPoly {
        let n = x.coeffs.len().max(y.coeffs.len());
        self.trim(
            (0..n)
                .map(|k| self.coeff(x, k).add(&self.coeff(y, k)))
                .collect(),
        )
    }

    pub fn neg(&self, x: &LamPoly) -> LamPoly {
        LamPoly {
            coeffs: x.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn sub(&self, x: &LamPoly, y: &LamPoly) -> LamPoly {
        self.add(x, &self.neg(y))
    }

    pub fn mul(&self, x: &LamPoly, y: &LamPoly) -> LamPoly {
        if x.coeffs.is_empty() || y.coeffs.is_empty() {
            return self.zero();
        }
        let n = (x.coeffs.len() + y.coeffs.len() - 1).min(self.cap);
        let mut out = vec![PiAdicScalar::zero(self.p, self.prec); n];
        for (i, a) in x.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if !b.is_zero() {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        self.trim(out)
    }

    pub fn scale(&self, x: &LamPoly, s: &PiAdicScalar) -> LamPoly {
        self.trim(x.coeffs.iter().map(|c| c.mul(s)).collect())
    }

    /// `L -> L^k`.
    pub fn substitute_power(&self, x: &LamPoly, k: usize) -> LamPoly {
        let mut out =
            vec![PiAdicScalar::zero(self.p, self.prec); self.cap.min(x.coeffs.len() * k + 1)];
        for (i, c) in x.coeffs.iter().enumerate() {
            if i * k < out.len() {
                out[i * k] = c.clone();
            }
        }
        self.trim(out)
    }

    /// `L d/dL`.
    pub fn theta(&self, x: &LamPoly) -> LamPoly {
        self.trim(
            x.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c.mul_int(i as i128))
                .collect(),
        )
    }

    /// Inverse of a power series with unit constant term.
    pub fn inv(&self, x: &LamPoly) -> Result<LamPoly> {
        let c0 = self.coeff(x, 0).inv()?;
        let mut out: Vec<PiAdicScalar> = Vec::with_capacity(self.cap);
        out.push(c0.clone());
        for n in 1..self.cap {
            let mut s = PiAdicScalar::zero(self.p, self.prec);
            for k in 1..=n.min(x.coeffs.len().saturating_sub(1)) {
                s = s.add(&x.coeffs[k].mul(&out[n - k]));
            }
            out.push(s.neg().mul(&c0));
        }
        Ok(self.trim(out))
    }

    /// Sum of coefficients times powers of a scalar.
    pub fn evaluate(&self, x: &LamPoly, at: &PiAdicScalar) -> PiAdicScalar {
        let mut acc = PiAdicScalar::zero(self.p, self.prec);
        for c in x.coeffs.iter().rev() {
            acc = acc.mul(at).add(c);
        }
        acc
    }

    /// Whether every coefficient below `L^cap'` vanishes mod `pi^m`.
    pub fn vanishes_mod(&self, x: &LamPoly, m: u32, lam_cap: usize) -> bool {
        x.coeffs
            .iter()
            .take(lam_cap)
            .all(|c| c.with_prec(m).is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn pi_relation() {
        let p = 3;
        let pi = PiAdicScalar::pi_pow(p, 10, 1);
        assert_eq!(pi.mul(&pi), PiAdicScalar::from_int(p, 10, -3));
        assert_eq!(PiAdicScalar::from_int(p, 10, 3).valuation(), Some(2));
        assert_eq!(PiAdicScalar::pi_pow(5, 10, 7).valuation(), Some(7));
    }

    #[test]
    fn division_by_pi_round_trips() {
        let x = PiAdicScalar::from_coeffs(5, 12, vec![11, 3, -7, 2]);
        let y = x.mul(&PiAdicScalar::pi_pow(5, 12, 1));
        assert_eq!(y.div_pi().unwrap(), x.with_prec(11));
        assert!(x.div_pi().is_err());
    }

    #[test]
    fn inverse_of_unit() {
        let x = PiAdicScalar::from_coeffs(3, 9, vec![2, 5]);
        let y = x.inv().unwrap();
        assert_eq!(x.mul(&y), PiAdicScalar::one(3, 9));
    }

    #[test]
    fn rational_with_p_in_denominator() {
        // 1/3 * pi^4 = -pi^2 at p = 3
        let x = PiAdicScalar::from_rat_pi(3, 8, &rat(1, 3), 4).unwrap();
        assert_eq!(x, PiAdicScalar::pi_pow(3, 8, 2).neg());
        assert!(PiAdicScalar::from_rat_pi(3, 8, &rat(1, 9), 3).is_err());
    }

    #[test]
    fn digits_reconstruct() {
        let x = PiAdicScalar::from_coeffs(3, 7, vec![-4, 11]);
        let d = x.pi_digits();
        let mut acc = PiAdicScalar::zero(3, 7);
        for (i, &di) in d.iter().enumerate() {
            acc = acc.add(&PiAdicScalar::pi_pow(3, 7, i as u32).mul_int(di as i128));
        }
        assert_eq!(acc, x);
    }

    #[test]
    fn lampoly_inverse() {
        let r = LamPolyRing {
            p: 3,
            prec: 6,
            cap: 8,
        };
        let one = r.scalar(PiAdicScalar::one(3, 6));
        let x = r.add(&one, &r.monomial(PiAdicScalar::pi_pow(3, 6, 1), 1));
        assert_eq!(r.mul(&x, &r.inv(&x).unwrap()), one);
    }
}
