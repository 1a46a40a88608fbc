//! Exact arithmetic in `Z[zeta_p]` and `Q(zeta_p)`, with valuations at the
//! prime above `p`.

use crate::exact::ExactRat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycloError {
    #[error("mismatched primes {0} and {1}")]
    MismatchedPrime(u64, u64),
    #[error("coefficient is not integral: denominator {0}")]
    NotIntegral(String),
}

/// `sum a_i zeta^i` over the basis `1, zeta, ..., zeta^(p-2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycloInt {
    p: u64,
    coeffs: Vec<BigInt>,
}

impl fmt::Debug for CycloInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => c.to_string(),
                1 => format!("{c}*z"),
                _ => format!("{c}*z^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl CycloInt {
    pub fn zero(p: u64) -> Self {
        CycloInt {
            p,
            coeffs: vec![BigInt::zero(); (p - 1) as usize],
        }
    }

    pub fn one(p: u64) -> Self {
        Self::from_int(p, BigInt::one())
    }

    pub fn from_int(p: u64, n: BigInt) -> Self {
        let mut z = Self::zero(p);
        z.coeffs[0] = n;
        z
    }

    /// `zeta^k` for any integer `k`.
    pub fn zeta_pow(p: u64, k: i64) -> Self {
        let mut counts = vec![BigInt::zero(); p as usize];
        counts[k.rem_euclid(p as i64) as usize] = BigInt::one();
        Self::from_exponent_counts(p, &counts)
    }

    /// Builds `sum_t counts[t] zeta^t` (`t = 0..p`) in canonical form.
    pub fn from_exponent_counts(p: u64, counts: &[BigInt]) -> Self {
        assert_eq!(counts.len(), p as usize);
        let top = &counts[(p - 1) as usize];
        let coeffs = counts[..(p - 1) as usize].iter().map(|c| c - top).collect();
        CycloInt { p, coeffs }
    }

    /// Builds from power-basis coefficients (length p-1).
    pub fn from_coeffs(p: u64, coeffs: Vec<BigInt>) -> Self {
        assert_eq!(coeffs.len(), (p - 1) as usize);
        CycloInt { p, coeffs }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check(&self, o: &CycloInt) -> Result<(), CycloError> {
        if self.p != o.p {
            Err(CycloError::MismatchedPrime(self.p, o.p))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, o: &CycloInt) -> Result<CycloInt, CycloError> {
        self.check(o)?;
        Ok(CycloInt {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, o: &CycloInt) -> Result<CycloInt, CycloError> {
        self.check(o)?;
        Ok(CycloInt {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn neg(&self) -> CycloInt {
        CycloInt {
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> CycloInt {
        CycloInt {
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| a * k).collect(),
        }
    }

    /// Content: gcd of the coefficients (0 for the zero element).
    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> BigInt {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_default()
    }

    /// Image under `zeta -> 1` reduced mod p.
    pub fn residue_at_one(&self) -> u64 {
        let s: BigInt = self.coeffs.iter().sum();
        s.mod_floor(&BigInt::from(self.p)).to_u64().unwrap()
    }

    /// Substitutes `zeta -> z` in any commutative ring given by closures.
    pub fn evaluate<T: Clone>(
        &self,
        z: &T,
        one: T,
        add: impl Fn(&T, &T) -> T,
        mul: impl Fn(&T, &T) -> T,
        from_int: impl Fn(&BigInt) -> T,
    ) -> T {
        let mut acc: Option<T> = None;
        let mut pw = one;
        for c in &self.coeffs {
            if !c.is_zero() {
                let term = mul(&from_int(c), &pw);
                acc = Some(match acc {
                    None => term,
                    Some(a) => add(&a, &term),
                });
            }
            pw = mul(&pw, z);
        }
        acc.unwrap_or_else(|| from_int(&BigInt::zero()))
    }
}

/// Product in canonical form.
pub fn cyclo_mul(x: &CycloInt, y: &CycloInt) -> Result<CycloInt, CycloError> {
    x.check(y)?;
    let p = x.p as usize;
    // product as exponent counts mod zeta^p = 1, then canonicalise
    let mut counts = vec![BigInt::zero(); p];
    for (i, a) in x.coeffs.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in y.coeffs.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            counts[(i + j) % p] += a * b;
        }
    }
    Ok(CycloInt::from_exponent_counts(x.p, &counts))
}

fn division_matrix(p: u64) -> Arc<Vec<Vec<BigRational>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<Vec<BigRational>>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(p)
        .or_insert_with(|| Arc::new(invert_one_minus_zeta(p)))
        .clone()
}

// Inverse over Q of the matrix of multiplication by (1 - zeta).
fn invert_one_minus_zeta(p: u64) -> Vec<Vec<BigRational>> {
    let n = (p - 1) as usize;
    let u = CycloInt::one(p).sub(&CycloInt::zeta_pow(p, 1)).unwrap();
    // column j = (1 - zeta) * zeta^j
    let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); 2 * n]; n];
    for j in 0..n {
        let col = cyclo_mul(&u, &CycloInt::zeta_pow(p, j as i64)).unwrap();
        for i in 0..n {
            m[i][j] = BigRational::from_integer(col.coeffs[i].clone());
        }
        m[j][n + j] = BigRational::one();
    }
    for c in 0..n {
        let piv = (c..n)
            .find(|&r| !m[r][c].is_zero())
            .expect("1 - zeta is invertible over Q");
        m.swap(c, piv);
        let inv = BigRational::one() / m[c][c].clone();
        for j in 0..2 * n {
            m[c][j] = &m[c][j] * &inv;
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for j in 0..2 * n {
                    let v = &m[r][j] - &f * &m[c][j];
                    m[r][j] = v;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n..].to_vec()).collect()
}

/// Exact quotient by `(1 - zeta)`; `None` if it does not divide `x`.
pub fn divide_by_one_minus_zeta(x: &CycloInt) -> Option<CycloInt> {
    let minv = division_matrix(x.p);
    let mut coeffs = Vec::with_capacity(x.coeffs.len());
    for row in minv.iter() {
        let v: BigRational = row
            .iter()
            .zip(&x.coeffs)
            .map(|(m, c)| m * BigRational::from_integer(c.clone()))
            .sum();
        if !v.is_integer() {
            return None;
        }
        coeffs.push(v.to_integer());
    }
    let y = CycloInt { p: x.p, coeffs };
    let u = CycloInt::one(x.p).sub(&CycloInt::zeta_pow(x.p, 1)).unwrap();
    assert_eq!(
        &cyclo_mul(&u, &y).unwrap(),
        x,
        "exact division check failed"
    );
    Some(y)
}

/// Valuation at `(1 - zeta)`; `None` stands for +infinity.
pub fn pi_valuation(x: &CycloInt) -> Option<u64> {
    if x.is_zero() {
        return None;
    }
    let mut cur = x.clone();
    let mut v = 0;
    // 1 - zeta is a uniformiser with residue field F_p, so zeta -> 1 mod p
    // detects divisibility
    while cur.residue_at_one() == 0 {
        cur = divide_by_one_minus_zeta(&cur).expect("residue zero implies divisibility");
        v += 1;
    }
    Some(v)
}

/// `ord_q(x) = pi_valuation(x) / ((p-1) a)` for `q = p^a`.
pub fn ord_q(x: &CycloInt, q_exp: u64) -> Option<ExactRat> {
    pi_valuation(x).map(|v| BigRational::new(BigInt::from(v), BigInt::from((x.p - 1) * q_exp)))
}

/// Element of `Q(zeta_p)` as a numerator over a positive integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycloRat {
    num: CycloInt,
    den: BigInt,
}

impl CycloRat {
    pub fn new(num: CycloInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (mut num, mut den) = (num, den);
        if den.is_negative() {
            num = num.neg();
            den = -den;
        }
        let g = num.content().gcd(&den);
        if !g.is_zero() && !g.is_one() {
            num = CycloInt {
                p: num.p,
                coeffs: num.coeffs.iter().map(|c| c / &g).collect(),
            };
            den = &den / &g;
        }
        if num.is_zero() {
            den = BigInt::one();
        }
        CycloRat { num, den }
    }

    pub fn from_int(x: CycloInt) -> Self {
        CycloRat {
            num: x,
            den: BigInt::one(),
        }
    }

    pub fn zero(p: u64) -> Self {
        Self::from_int(CycloInt::zero(p))
    }

    pub fn num(&self) -> &CycloInt {
        &self.num
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn add(&self, o: &CycloRat) -> Result<CycloRat, CycloError> {
        let n = self.num.scale(&o.den).add(&o.num.scale(&self.den))?;
        Ok(CycloRat::new(n, &self.den * &o.den))
    }

    pub fn mul(&self, o: &CycloRat) -> Result<CycloRat, CycloError> {
        Ok(CycloRat::new(
            cyclo_mul(&self.num, &o.num)?,
            &self.den * &o.den,
        ))
    }

    pub fn div_int(&self, k: &BigInt) -> CycloRat {
        CycloRat::new(self.num.clone(), &self.den * k)
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    /// The integral element, or an error naming the leftover denominator.
    pub fn to_cyclo_int(&self) -> Result<CycloInt, CycloError> {
        if self.is_integral() {
            Ok(self.num.clone())
        } else {
            Err(CycloError::NotIntegral(self.den.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};

    fn ci(p: u64, c: &[i64]) -> CycloInt {
        CycloInt::from_coeffs(p, c.iter().map(|&x| BigInt::from(x)).collect())
    }

    #[test]
    fn full_zeta_sum_vanishes() {
        for p in [3u64, 5, 7] {
            let counts = vec![BigInt::one(); p as usize];
            assert!(CycloInt::from_exponent_counts(p, &counts).is_zero());
        }
    }

    #[test]
    fn norm_of_one_minus_zeta_p3() {
        let a = CycloInt::one(3).sub(&CycloInt::zeta_pow(3, 1)).unwrap();
        let b = CycloInt::one(3).sub(&CycloInt::zeta_pow(3, 2)).unwrap();
        assert_eq!(
            cyclo_mul(&a, &b).unwrap(),
            CycloInt::from_int(3, BigInt::from(3))
        );
        let x = ci(5, &[3, -1, 4, 1]);
        assert_eq!(cyclo_mul(&x, &CycloInt::one(5)).unwrap(), x);
        assert!(cyclo_mul(&x, &CycloInt::one(3)).is_err());
    }

    #[test]
    fn valuation_examples() {
        let u = CycloInt::one(3).sub(&CycloInt::zeta_pow(3, 1)).unwrap();
        assert_eq!(pi_valuation(&u), Some(1));
        assert_eq!(
            pi_valuation(&CycloInt::from_int(3, BigInt::from(3))),
            Some(2)
        );
        // 1 + 3 zeta^2 = 1 + 3(-1 - zeta) = -2 - 3 zeta
        let x = CycloInt::one(3)
            .add(&CycloInt::zeta_pow(3, 2).scale(&BigInt::from(3)))
            .unwrap();
        assert_eq!(x, ci(3, &[-2, -3]));
        assert_eq!(pi_valuation(&x), Some(0));
        assert_eq!(pi_valuation(&CycloInt::zero(3)), None);
    }

    #[test]
    fn ord_q_examples() {
        assert_eq!(
            ord_q(&CycloInt::from_int(5, BigInt::from(5)), 1),
            Some(rat_int(1))
        );
        assert_eq!(ord_q(&CycloInt::one(7), 2), Some(rat_int(0)));
        let x = ci(3, &[3, 3]);
        assert_eq!(ord_q(&x, 1), Some(rat(1, 1)));
    }

    #[test]
    fn cyclorat_reduces_and_checks_integrality() {
        let x = CycloRat::new(ci(3, &[2, 4]), BigInt::from(2));
        assert!(x.is_integral());
        assert_eq!(x.to_cyclo_int().unwrap(), ci(3, &[1, 2]));
        let y = CycloRat::new(ci(3, &[1, 2]), BigInt::from(-3));
        assert!(!y.is_integral());
        assert_eq!(y.num(), &ci(3, &[-1, -2]));
        assert!(y.to_cyclo_int().is_err());
    }
}
