//! Property checks shared by the proptest suite and the acceptance harness.
#![allow(dead_code)]

use kloosterman::dwork::theta_coefficients;
use kloosterman::exact::{integer_kernel, rat, rat_int, smith_normal_form, ExactRat, IntMatrix};
use kloosterman::gkz::{apply_operator, formal_solutions, picard_fuchs_operator, relation_lattice};
use kloosterman::lfunction::{exp_sum_series, l_polynomial, newton_polygon};
use kloosterman::newton_hodge::{hodge_polygon, m_of, weight_of, FamilyParams, LatticePoint};
use kloosterman::poly::RatFunc;
use kloosterman::reduction::{
    reduce_to_basis, verify_certificate, CohomClass, PrimeFieldScalars, RationalFunctionScalars,
    Reducer, ScalarRing,
};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const FLAGSHIP: [(u64, u64, u64, u64); 3] = [(1, 1, 1, 1), (2, 1, 1, 1), (1, 1, 2, 1)];

pub fn family(a: u64, b: u64, c: u64, d: u64) -> FamilyParams {
    FamilyParams::new(a, b, c, d).unwrap()
}

/// Valid tuples with entries in `1..=max`.
pub fn any_family(max: u64) -> impl Strategy<Value = FamilyParams> {
    (1..=max, 1..=max, 1..=max, 1..=max).prop_filter_map("coprimality", |(a, b, c, d)| {
        FamilyParams::new(a, b, c, d).ok()
    })
}

pub fn any_point(r: i64) -> impl Strategy<Value = LatticePoint> {
    (-r..=r, -r..=r).prop_map(|(x, y)| LatticePoint::new(x, y))
}

pub fn m_subadditive(
    f: &FamilyParams,
    u: LatticePoint,
    v: LatticePoint,
) -> Result<(), TestCaseError> {
    prop_assert!(m_of(f, &u.add(v)) <= m_of(f, &u) + m_of(f, &v));
    prop_assert!(weight_of(f, &u.add(v)) <= weight_of(f, &u) + weight_of(f, &v));
    Ok(())
}

/// Certificate check plus `coords(s x^u + t x^v) = s coords(u) + t coords(v)`.
pub fn certificate_linear<R: ScalarRing>(
    ring: &R,
    u: LatticePoint,
    v: LatticePoint,
    s: R::Elem,
    t: R::Elem,
) -> Result<(), TestCaseError> {
    let hu = CohomClass::monomial(ring, u, ring.one());
    let hv = CohomClass::monomial(ring, v, ring.one());
    let cert = reduce_to_basis(&hu, ring).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(verify_certificate(&cert, &hu, ring));
    let mut red = Reducer::new(ring, false);
    let cu = red.coords(&hu).unwrap();
    let cv = red.coords(&hv).unwrap();
    let mut mix = hu.scale(ring, &s);
    mix.add_scaled(ring, &hv, &t);
    let cm = red.coords(&mix).unwrap();
    for i in 0..cu.len() {
        let want = ring.add(&ring.mul(&s, &cu[i]), &ring.mul(&t, &cv[i]));
        prop_assert_eq!(&cm[i], &want);
    }
    Ok(())
}

pub fn certificate_linear_fp(
    f: &FamilyParams,
    p: u64,
    lambda: u64,
    u: LatticePoint,
    v: LatticePoint,
    s: u64,
    t: u64,
) -> Result<(), TestCaseError> {
    let ring = match PrimeFieldScalars::new(f, p, lambda) {
        Ok(r) => r,
        Err(_) => return Ok(()),
    };
    certificate_linear(&ring, u, v, s % p, t % p)
}

pub fn certificate_linear_q(
    f: &FamilyParams,
    u: LatticePoint,
    v: LatticePoint,
    s: i64,
    t: i64,
) -> Result<(), TestCaseError> {
    let ring = RationalFunctionScalars::new(f);
    certificate_linear(
        &ring,
        u,
        v,
        RatFunc::constant(rat_int(s)),
        RatFunc::constant(rat(t, 3)),
    )
}

/// `U M V = S` with unimodular transforms and a divisibility chain; kernel
/// generators are primitive, annihilated, and as many as the nullity.
pub fn snf_and_kernel(rows: usize, cols: usize, entries: &[i64]) -> Result<(), TestCaseError> {
    let m = IntMatrix::from_rows(
        &(0..rows)
            .map(|r| entries[r * cols..(r + 1) * cols].to_vec())
            .collect::<Vec<_>>(),
    );
    let snf = smith_normal_form(&m);
    prop_assert_eq!(snf.u.mul(&m).mul(&snf.v), snf.s.clone());
    prop_assert!(snf.u.is_unimodular() && snf.v.is_unimodular());
    for r in 0..rows {
        for c in 0..cols {
            if r != c {
                prop_assert!(snf.s.get(r, c).is_zero());
            }
        }
    }
    let inv = snf.invariant_factors();
    for w in inv.windows(2) {
        prop_assert!(!w[0].is_negative() && !w[1].is_negative());
        if w[0].is_zero() {
            prop_assert!(w[1].is_zero());
        } else {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
    }
    let rank = m.rank();
    prop_assert_eq!(inv.iter().filter(|x| !x.is_zero()).count(), rank);
    if rank == rows {
        let k = integer_kernel(&m).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(k.len(), cols - rank);
        for g in &k {
            prop_assert!(m.mul_vec(g).iter().all(|x| x.is_zero()));
            let content = g
                .iter()
                .fold(BigInt::zero(), |acc, x| num_integer::Integer::gcd(&acc, x));
            prop_assert_eq!(content, BigInt::from(1));
        }
    } else {
        prop_assert!(integer_kernel(&m).is_err());
    }
    Ok(())
}

pub fn lattice_matches(f: &FamilyParams) -> Result<(), TestCaseError> {
    let (a, b, c, d) = (f.a as i64, f.b as i64, f.c as i64, f.d as i64);
    let want: Vec<BigInt> = [b * c, a * d, a * b]
        .iter()
        .map(|&x| BigInt::from(x))
        .collect();
    prop_assert_eq!(relation_lattice(f).unwrap(), want);
    Ok(())
}

pub fn theta_bound(p: u64, i: usize) -> Result<(), TestCaseError> {
    let s = theta_coefficients(p, i, 40).map_err(|e| TestCaseError::fail(e.to_string()))?;
    if let Some(v) = s.coeffs[i].valuation() {
        // v_pi = (p-1) ord_p
        prop_assert!((v as u64) * p * p >= (i as u64) * (p - 1) * (p - 1));
    }
    Ok(())
}

/// Tuples and primes cheap enough for exact L-polynomials.
pub fn small_case() -> impl Strategy<Value = (FamilyParams, u64, u64)> {
    let tuples = prop::sample::select(vec![
        (1u64, 1u64, 1u64, 1u64),
        (2, 1, 1, 1),
        (1, 1, 2, 1),
        (1, 2, 1, 1),
        (1, 1, 1, 2),
        (1, 1, 3, 1),
    ]);
    (tuples, prop::sample::select(vec![3u64, 5, 7]), 1u64..7).prop_filter_map(
        "small field",
        |((a, b, c, d), p, l)| {
            let f = FamilyParams::new(a, b, c, d).ok()?;
            let size = (p as f64).powi(f.n() as i32);
            if f.abcd() % p == 0 || l % p == 0 || size > 1000.0 {
                return None;
            }
            Some((f, p, l))
        },
    )
}

pub fn newton_above_hodge(f: &FamilyParams, p: u64, l: u64) -> Result<(), TestCaseError> {
    let poly = l_polynomial(&exp_sum_series(f, p, l, f.n(), None).unwrap()).unwrap();
    let np = newton_polygon(&poly, 1).unwrap();
    let hp = hodge_polygon(f);
    let xs: Vec<ExactRat> = np
        .vertices()
        .iter()
        .chain(hp.vertices())
        .map(|v| v.0.clone())
        .collect();
    for x in xs {
        let (n, h) = (np.value_at(&x), hp.value_at(&x));
        prop_assert!(n.is_some() && h.is_some());
        prop_assert!(n.unwrap() >= h.unwrap());
    }
    Ok(())
}

pub fn solutions_vanish(which: usize, order: usize) -> Result<(), TestCaseError> {
    let (a, b, c, d) = FLAGSHIP[which];
    let op = picard_fuchs_operator(&family(a, b, c, d));
    let sols = formal_solutions(&op, order).unwrap();
    prop_assert_eq!(sols.len(), op.order());
    for s in &sols {
        prop_assert!(apply_operator(&op, s).iter().all(|q| q.is_zero()));
    }
    Ok(())
}
