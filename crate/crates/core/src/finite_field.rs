//! Prime fields and their extensions `F_{p^k}`, traces, and torus enumeration.

use crate::newton_hodge::FamilyParams;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("modulus is not a monic irreducible polynomial of degree {0}")]
    BadModulus(usize),
    #[error("field of size {0} is too large for this implementation")]
    TooLarge(u128),
    #[error("zero coordinate on the torus")]
    ZeroCoordinate,
    #[error("lambda must be a nonzero residue")]
    ZeroLambda,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

// Polynomials over F_p as coefficient vectors, low degree first.
fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = trim(a.to_vec());
    let m = trim(m.to_vec());
    let dm = m.len() - 1;
    let inv_lead = inv_mod(m[dm], p);
    while r.len() > dm {
        let top = r.len() - 1;
        let c = r[top] * inv_lead % p;
        if c != 0 {
            for (j, &mc) in m.iter().enumerate() {
                let idx = top - dm + j;
                r[idx] = (r[idx] + p * p - c * mc % p) % p;
            }
        }
        r = trim(r);
    }
    r
}

fn is_irreducible(f: &[u64], p: u64) -> bool {
    let k = f.len() - 1;
    if k == 0 || f[k] != 1 {
        return false;
    }
    // trial division by every monic polynomial of degree 1..=k/2
    for deg in 1..=k / 2 {
        let count = (p as u128).pow(deg as u32);
        for idx in 0..count {
            let mut g = Vec::with_capacity(deg + 1);
            let mut t = idx;
            for _ in 0..deg {
                g.push((t % p as u128) as u64);
                t /= p as u128;
            }
            g.push(1);
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Least monic irreducible polynomial of degree `k` over `F_p`.
///
/// Candidates `t^k + c_{k-1} t^{k-1} + ... + c_0` are ordered by the tuple
/// `(c_{k-1}, ..., c_0)`; the coefficients are returned low degree first.
pub fn find_irreducible(p: u64, k: usize) -> Result<Vec<u64>, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NotOddPrime(p));
    }
    if k == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let total = (p as u128)
        .checked_pow(k as u32)
        .ok_or(FieldError::TooLarge(u128::MAX))?;
    for idx in 0..total {
        // idx enumerates (c_{k-1}, ..., c_0) with c_0 the fastest digit
        let mut f = vec![0u64; k + 1];
        let mut t = idx;
        for c in f.iter_mut().take(k) {
            *c = (t % p as u128) as u64;
            t /= p as u128;
        }
        f[k] = 1;
        if is_irreducible(&f, p) {
            return Ok(f);
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Element of a [`FieldTower`]: `k` coefficients in the power basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FFElement {
    pub coeffs: Vec<u64>,
}

/// The field `F_p[t]/(modulus)` of size `p^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldTower {
    p: u64,
    k: usize,
    modulus: Vec<u64>,
}

impl FieldTower {
    /// Builds `F_{p^k}` with the deterministic modulus from [`find_irreducible`].
    pub fn new(p: u64, k: usize) -> Result<Self, FieldError> {
        if p == 2 || !is_prime(p) {
            return Err(FieldError::NotOddPrime(p));
        }
        let modulus = find_irreducible(p, k)?;
        Ok(FieldTower { p, k, modulus })
    }

    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<Self, FieldError> {
        if p == 2 || !is_prime(p) {
            return Err(FieldError::NotOddPrime(p));
        }
        let k = modulus.len().saturating_sub(1);
        if k == 0 || !is_irreducible(&modulus, p) {
            return Err(FieldError::BadModulus(k));
        }
        Ok(FieldTower { p, k, modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn size(&self) -> u64 {
        self.p.pow(self.k as u32)
    }

    pub fn zero(&self) -> FFElement {
        FFElement {
            coeffs: vec![0; self.k],
        }
    }

    pub fn one(&self) -> FFElement {
        self.from_prime(1)
    }

    /// Embeds a residue of the prime field.
    pub fn from_prime(&self, c: u64) -> FFElement {
        let mut e = self.zero();
        e.coeffs[0] = c % self.p;
        e
    }

    /// The class of `t`.
    pub fn generator_t(&self) -> FFElement {
        if self.k == 1 {
            // t reduces to -modulus[0] in the prime field
            return self.from_prime((self.p - self.modulus[0]) % self.p);
        }
        let mut e = self.zero();
        e.coeffs[1] = 1;
        e
    }

    pub fn is_zero(&self, x: &FFElement) -> bool {
        x.coeffs.iter().all(|&c| c == 0)
    }

    /// Base-`p` integer encoding in `0..p^k`.
    pub fn encode(&self, x: &FFElement) -> u64 {
        x.coeffs.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn decode(&self, mut n: u64) -> FFElement {
        let mut coeffs = vec![0; self.k];
        for c in coeffs.iter_mut() {
            *c = n % self.p;
            n /= self.p;
        }
        FFElement { coeffs }
    }

    pub fn add(&self, x: &FFElement, y: &FFElement) -> FFElement {
        FFElement {
            coeffs: x
                .coeffs
                .iter()
                .zip(&y.coeffs)
                .map(|(a, b)| (a + b) % self.p)
                .collect(),
        }
    }

    pub fn neg(&self, x: &FFElement) -> FFElement {
        FFElement {
            coeffs: x.coeffs.iter().map(|&a| (self.p - a) % self.p).collect(),
        }
    }

    pub fn mul(&self, x: &FFElement, y: &FFElement) -> FFElement {
        let p = self.p;
        let mut prod = vec![0u64; 2 * self.k - 1];
        for (i, &a) in x.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b) % p;
            }
        }
        let mut r = poly_rem(&prod, &self.modulus, p);
        r.resize(self.k, 0);
        FFElement { coeffs: r }
    }

    pub fn pow(&self, x: &FFElement, mut e: u64) -> FFElement {
        let mut base = x.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Inverse as `x^(p^k - 2)`; zero has no inverse.
    pub fn inv(&self, x: &FFElement) -> Result<FFElement, FieldError> {
        if self.is_zero(x) {
            return Err(FieldError::ZeroCoordinate);
        }
        Ok(self.pow(x, self.size() - 2))
    }

    pub fn frobenius(&self, x: &FFElement) -> FFElement {
        self.pow(x, self.p)
    }

    /// Absolute trace `x + x^p + ... + x^(p^(k-1))` as a residue mod p.
    pub fn trace_to_prime(&self, x: &FFElement) -> u64 {
        let t = self.trace_element(x);
        debug_assert!(t.coeffs.iter().skip(1).all(|&c| c == 0));
        t.coeffs[0]
    }

    /// The trace as a tower element (it lies in the prime field).
    pub fn trace_element(&self, x: &FFElement) -> FFElement {
        let mut acc = x.clone();
        let mut cur = x.clone();
        for _ in 1..self.k {
            cur = self.frobenius(&cur);
            acc = self.add(&acc, &cur);
        }
        acc
    }

    /// Some element of multiplicative order `p^k - 1`.
    pub fn primitive_element(&self) -> FFElement {
        let order = self.size() - 1;
        let factors = prime_factors(order);
        (1..self.size())
            .map(|n| self.decode(n))
            .find(|g| {
                factors
                    .iter()
                    .all(|&r| self.pow(g, order / r) != self.one())
            })
            .expect("multiplicative group is cyclic")
    }

    /// `(p^k - 1)^2`, the number of torus points.
    pub fn torus_size(&self) -> u64 {
        let m = self.size() - 1;
        m * m
    }

    /// Torus points with linear index in `start..end`, ordered by
    /// `(encode(x1) - 1) * (q - 1) + encode(x2) - 1`.
    pub fn torus_range(
        &self,
        start: u64,
        end: u64,
    ) -> impl Iterator<Item = (FFElement, FFElement)> + '_ {
        let m = self.size() - 1;
        (start..end.min(m * m)).map(move |i| (self.decode(i / m + 1), self.decode(i % m + 1)))
    }
}

/// `x1^a + x2^b + lambda * x1^(-c) x2^(-d)` in the tower.
pub fn evaluate_family(
    tower: &FieldTower,
    params: &FamilyParams,
    lambda: u64,
    x1: &FFElement,
    x2: &FFElement,
) -> Result<FFElement, FieldError> {
    if lambda % tower.p() == 0 {
        return Err(FieldError::ZeroLambda);
    }
    let i1 = tower.inv(x1)?;
    let i2 = tower.inv(x2)?;
    let t1 = tower.pow(x1, params.a);
    let t2 = tower.pow(x2, params.b);
    let t3 = tower.mul(
        &tower.from_prime(lambda),
        &tower.mul(&tower.pow(&i1, params.c), &tower.pow(&i2, params.d)),
    );
    Ok(tower.add(&tower.add(&t1, &t2), &t3))
}

/// Discrete-log tables for fast enumeration: `exp[i] = g^i` (encoded) and
/// `trace_of_pow[i] = Tr(g^i)`.
#[derive(Clone, Debug)]
pub struct LogTables {
    pub order: u64,
    pub exp: Vec<u64>,
    pub trace_of_pow: Vec<u8>,
}

impl LogTables {
    pub fn new(tower: &FieldTower) -> Self {
        let g = tower.primitive_element();
        let order = tower.size() - 1;
        let mut exp = Vec::with_capacity(order as usize);
        let mut trace_of_pow = Vec::with_capacity(order as usize);
        let mut cur = tower.one();
        // traces are F_p-linear: precompute the trace of each basis vector
        let basis_tr: Vec<u64> = (0..tower.k())
            .map(|i| {
                let mut e = tower.zero();
                e.coeffs[i] = 1;
                tower.trace_to_prime(&e)
            })
            .collect();
        for _ in 0..order {
            exp.push(tower.encode(&cur));
            let t = cur
                .coeffs
                .iter()
                .zip(&basis_tr)
                .fold(0, |acc, (c, b)| (acc + c * b) % tower.p());
            trace_of_pow.push(t as u8);
            cur = tower.mul(&cur, &g);
        }
        LogTables {
            order,
            exp,
            trace_of_pow,
        }
    }

    /// Index `i` with `g^i` equal to the embedded prime-field residue `c`.
    pub fn log_of_prime(&self, tower: &FieldTower, c: u64) -> Option<u64> {
        let target = tower.encode(&tower.from_prime(c));
        self.exp.iter().position(|&e| e == target).map(|i| i as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irreducible_examples() {
        assert_eq!(find_irreducible(3, 1).unwrap(), vec![0, 1]);
        assert_eq!(find_irreducible(3, 2).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn irreducible_cubic_by_exhaustive_oracle() {
        // oracle: a monic cubic is irreducible iff it has no root in F_3
        let p = 3u64;
        let mut expected = None;
        'outer: for c2 in 0..p {
            for c1 in 0..p {
                for c0 in 0..p {
                    let has_root = (0..p).any(|t| (t * t * t + c2 * t * t + c1 * t + c0) % p == 0);
                    if !has_root {
                        expected = Some(vec![c0, c1, c2, 1]);
                        break 'outer;
                    }
                }
            }
        }
        assert_eq!(find_irreducible(3, 3).unwrap(), expected.unwrap());
        assert_eq!(find_irreducible(3, 3).unwrap(), vec![1, 2, 0, 1]);
    }

    #[test]
    fn trace_examples() {
        let f9 = FieldTower::new(3, 2).unwrap();
        assert_eq!(f9.trace_to_prime(&f9.one()), 2);
        let alpha = f9.generator_t();
        assert_eq!(f9.mul(&alpha, &alpha), f9.from_prime(2));
        assert_eq!(f9.trace_to_prime(&alpha), 0);
        assert_eq!(f9.trace_to_prime(&f9.zero()), 0);
    }

    #[test]
    fn family_values_over_f3() {
        let f3 = FieldTower::new(3, 1).unwrap();
        let params = FamilyParams::new(1, 1, 1, 1).unwrap();
        let v = evaluate_family(&f3, &params, 1, &f3.from_prime(1), &f3.from_prime(1)).unwrap();
        assert_eq!(v, f3.from_prime(0));
        let v = evaluate_family(&f3, &params, 1, &f3.from_prime(1), &f3.from_prime(2)).unwrap();
        assert_eq!(v, f3.from_prime(2));
        assert_eq!(
            evaluate_family(&f3, &params, 1, &f3.zero(), &f3.one()),
            Err(FieldError::ZeroCoordinate)
        );
    }

    #[test]
    fn torus_count_and_partition() {
        let f9 = FieldTower::new(3, 2).unwrap();
        let all: Vec<_> = f9.torus_range(0, f9.torus_size()).collect();
        assert_eq!(all.len(), 64);
        let mut set = std::collections::HashSet::new();
        for (x1, x2) in &all {
            assert!(!f9.is_zero(x1) && !f9.is_zero(x2));
            set.insert((f9.encode(x1), f9.encode(x2)));
        }
        assert_eq!(set.len(), 64);
        let split: Vec<_> = f9
            .torus_range(0, 30)
            .chain(f9.torus_range(30, 64))
            .collect();
        assert_eq!(split, all);
    }

    #[test]
    fn log_tables_consistent() {
        let f27 = FieldTower::new(3, 3).unwrap();
        let t = LogTables::new(&f27);
        assert_eq!(t.exp.len(), 26);
        let distinct: std::collections::HashSet<_> = t.exp.iter().collect();
        assert_eq!(distinct.len(), 26);
        for (i, &e) in t.exp.iter().enumerate() {
            assert_eq!(t.trace_of_pow[i] as u64, f27.trace_to_prime(&f27.decode(e)));
        }
        assert_eq!(t.log_of_prime(&f27, 1), Some(0));
    }

    #[test]
    fn inversion_multiplicative() {
        let f25 = FieldTower::new(5, 2).unwrap();
        for a in 1..25 {
            for b in (1..25).step_by(7) {
                let (x, y) = (f25.decode(a), f25.decode(b));
                let lhs = f25.inv(&f25.mul(&x, &y)).unwrap();
                let rhs = f25.mul(&f25.inv(&x).unwrap(), &f25.inv(&y).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }
}
