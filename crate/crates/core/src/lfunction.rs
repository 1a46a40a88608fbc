//! Exponential sums over the torus, the exact L-polynomial, Newton-identity
//! predictions and q-adic Newton polygons.

use crate::cyclotomic::{cyclo_mul, ord_q, CycloInt, CycloRat};
use crate::error::{Error, Result};
use crate::exact::{lower_convex_hull, rat_int, ExactRat, RationalPolygon};
use crate::finite_field::{is_prime, FieldTower, LogTables};
use crate::newton_hodge::FamilyParams;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

/// Sums `S_1..S_K` for one specialisation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpSumSeries {
    pub params: FamilyParams,
    pub p: u64,
    pub q_exp: u64,
    pub lambda: u64,
    pub sums: Vec<CycloInt>,
}

/// `A_0..A_N` of `L(T)^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LPolynomial {
    pub p: u64,
    pub coeffs: Vec<CycloInt>,
}

impl LPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

fn check_inputs(params: &FamilyParams, p: u64, lambda: u64) -> Result<()> {
    if p == 2 || !is_prime(p) {
        return Err(Error::Precondition(format!("p = {p} is not an odd prime")));
    }
    if params.abcd() % p == 0 {
        return Err(Error::Precondition(format!("p = {p} divides abcd")));
    }
    if lambda % p == 0 {
        return Err(Error::Precondition("lambda must be nonzero mod p".into()));
    }
    Ok(())
}

fn run_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Precondition("workers must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Invariant(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// `S_k = sum over (F_{p^k}^*)^2 of zeta^{Tr F(lambda, x)}`.
///
/// Points are indexed by discrete logs `x1 = g^i, x2 = g^j`, so every
/// monomial of `F` is a single power of `g` and the trace splits as a sum of
/// three table lookups. `workers` bounds the thread count (`None` uses the
/// global pool).
pub fn exp_sum(
    params: &FamilyParams,
    p: u64,
    lambda: u64,
    k: usize,
    workers: Option<usize>,
) -> Result<CycloInt> {
    check_inputs(params, p, lambda)?;
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let tower = FieldTower::new(p, k).map_err(|e| Error::Precondition(e.to_string()))?;
    let tables = LogTables::new(&tower);
    let l = tables
        .log_of_prime(&tower, lambda % p)
        .ok_or_else(|| Error::Invariant("lambda has no discrete log".into()))?;
    let m = tables.order;
    let (a, b, c, d) = (params.a % m, params.b % m, params.c % m, params.d % m);
    let tr = &tables.trace_of_pow;
    let pu = p as usize;
    let counts = run_pool(workers, || {
        (0..m)
            .into_par_iter()
            .map(|i| {
                let mut local = vec![0u64; pu];
                let t1 = tr[((a * i) % m) as usize] as usize;
                let base = (l + m - (c * i) % m) % m;
                for j in 0..m {
                    let t2 = tr[((b * j) % m) as usize] as usize;
                    let e3 = (base + m - (d * j) % m) % m;
                    let t3 = tr[e3 as usize] as usize;
                    local[(t1 + t2 + t3) % pu] += 1;
                }
                local
            })
            .reduce(
                || vec![0u64; pu],
                |mut x, y| {
                    for (u, v) in x.iter_mut().zip(y) {
                        *u += v;
                    }
                    x
                },
            )
    })?;
    let total: u64 = counts.iter().sum();
    if total != m * m {
        return Err(Error::Invariant(format!(
            "visited {total} points, expected {}",
            m * m
        )));
    }
    let counts: Vec<BigInt> = counts.into_iter().map(BigInt::from).collect();
    let s = CycloInt::from_exponent_counts(p, &counts);
    // trivial size bound on coordinates
    let bound = BigInt::from(m) * BigInt::from(m);
    if s.max_abs_coeff() > bound {
        return Err(Error::Invariant(format!("S_{k} exceeds the trivial bound")));
    }
    Ok(s)
}

/// `S_1..S_K`.
pub fn exp_sum_series(
    params: &FamilyParams,
    p: u64,
    lambda: u64,
    kmax: usize,
    workers: Option<usize>,
) -> Result<ExpSumSeries> {
    let sums = (1..=kmax)
        .map(|k| exp_sum(params, p, lambda, k, workers))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpSumSeries {
        params: *params,
        p,
        q_exp: 1,
        lambda: lambda % p,
        sums,
    })
}

fn cyc(e: crate::cyclotomic::CycloError) -> Error {
    Error::Invariant(e.to_string())
}

/// `exp(-sum_{k<=N} S_k T^k / k)` through degree `N`, asserting integrality.
pub fn l_polynomial(series: &ExpSumSeries) -> Result<LPolynomial> {
    let n = series.params.n();
    if series.sums.len() < n {
        return Err(Error::Precondition(format!(
            "need {n} sums, have {}",
            series.sums.len()
        )));
    }
    let p = series.p;
    // n A_n = -sum_{k=1}^n S_k A_{n-k}
    let mut a: Vec<CycloRat> = vec![CycloRat::from_int(CycloInt::one(p))];
    for r in 1..=n {
        let mut acc = CycloRat::zero(p);
        for k in 1..=r {
            let term = CycloRat::from_int(series.sums[k - 1].clone())
                .mul(&a[r - k])
                .map_err(cyc)?;
            acc = acc.add(&term).map_err(cyc)?;
        }
        a.push(acc.div_int(&BigInt::from(-(r as i64))));
    }
    let coeffs = a
        .iter()
        .enumerate()
        .map(|(r, x)| {
            x.to_cyclo_int()
                .map_err(|e| Error::Invariant(format!("A_{r} not integral: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if coeffs[n].is_zero() {
        return Err(Error::Invariant(format!("degree below {n}")));
    }
    Ok(LPolynomial { p, coeffs })
}

/// Coefficient of `T^k` in `-T d/dT log P(T)`.
pub fn predict_sum(poly: &LPolynomial, k: usize) -> Result<CycloInt> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let p = poly.p;
    let coeff = |i: usize| {
        poly.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| CycloInt::zero(p))
    };
    // S_k = -k A_k - sum_{i=1}^{k-1} A_i S_{k-i}
    let mut s: Vec<CycloInt> = Vec::with_capacity(k);
    for r in 1..=k {
        let mut acc = coeff(r).scale(&BigInt::from(-(r as i64)));
        for i in 1..r {
            let ai = coeff(i);
            if ai.is_zero() {
                continue;
            }
            acc = acc
                .sub(&cyclo_mul(&ai, &s[r - i - 1]).map_err(cyc)?)
                .map_err(cyc)?;
        }
        s.push(acc);
    }
    Ok(s.pop().unwrap())
}

/// Lower hull of `(r, ord_q A_r)`.
pub fn newton_polygon(poly: &LPolynomial, q_exp: u64) -> Result<RationalPolygon> {
    let pts: Vec<(ExactRat, Option<ExactRat>)> = poly
        .coeffs
        .iter()
        .enumerate()
        .map(|(r, a)| (rat_int(r as i64), ord_q(a, q_exp)))
        .collect();
    Ok(lower_convex_hull(&pts)?)
}

/// `true` when `coeffs[0] == 1`.
pub fn has_unit_constant(poly: &LPolynomial) -> bool {
    poly.coeffs
        .first()
        .map(|c| c.coeffs()[0].is_one() && c.coeffs()[1..].iter().all(|x| x.is_zero()))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::evaluate_family;

    fn ci(p: u64, c: &[i64]) -> CycloInt {
        CycloInt::from_coeffs(p, c.iter().map(|&x| BigInt::from(x)).collect())
    }

    // independent oracle: field arithmetic on every torus point
    fn brute(params: &FamilyParams, p: u64, lambda: u64, k: usize) -> CycloInt {
        let tower = FieldTower::new(p, k).unwrap();
        let mut counts = vec![BigInt::zero(); p as usize];
        for (x1, x2) in tower.torus_range(0, tower.torus_size()) {
            let v = evaluate_family(&tower, params, lambda, &x1, &x2).unwrap();
            counts[tower.trace_to_prime(&v) as usize] += 1;
        }
        CycloInt::from_exponent_counts(p, &counts)
    }

    #[test]
    fn s1_example() {
        let f = FamilyParams::new(1, 1, 1, 1).unwrap();
        // 1 + 3 zeta^2 = -2 - 3 zeta
        assert_eq!(exp_sum(&f, 3, 1, 1, None).unwrap(), ci(3, &[-2, -3]));
    }

    #[test]
    fn table_enumeration_matches_direct() {
        for (a, b, c, d) in [(1, 1, 1, 1), (2, 1, 1, 1), (1, 1, 2, 1), (2, 3, 1, 1)] {
            let f = FamilyParams::new(a, b, c, d).unwrap();
            for p in [5u64, 7] {
                if f.abcd() % p == 0 {
                    continue;
                }
                for k in 1..=2 {
                    assert_eq!(exp_sum(&f, p, 2, k, Some(2)).unwrap(), brute(&f, p, 2, k));
                }
            }
        }
    }

    #[test]
    fn first_coefficient_and_predictions() {
        let f = FamilyParams::new(1, 1, 1, 1).unwrap();
        let s = exp_sum_series(&f, 3, 1, 3, None).unwrap();
        let l = l_polynomial(&s).unwrap();
        assert!(has_unit_constant(&l));
        assert_eq!(l.coeffs[1], s.sums[0].neg());
        for k in 1..=3 {
            assert_eq!(predict_sum(&l, k).unwrap(), s.sums[k - 1]);
        }
    }

    #[test]
    fn predict_on_one_minus_t() {
        let p = LPolynomial {
            p: 5,
            coeffs: vec![CycloInt::one(5), CycloInt::one(5).neg()],
        };
        for k in 1..6 {
            assert_eq!(predict_sum(&p, k).unwrap(), CycloInt::one(5));
        }
    }

    #[test]
    fn rejects_bad_prime() {
        let f = FamilyParams::new(2, 3, 1, 1).unwrap();
        assert!(exp_sum(&f, 3, 1, 1, None).is_err());
        assert!(exp_sum(&f, 5, 0, 1, None).is_err());
        assert!(exp_sum(&f, 9, 1, 1, None).is_err());
    }
}
