//! Truncated Frobenius matrix of the family (case `c = d = 1`, `q = p`) from
//! the splitting function `theta(t) = exp(pi (t - t^p))`, plus two
//! end-to-end checks: the horizontality identity
//! `L dU/dL = U G - p G(L^p) U` and agreement of `det(1 - U(lambda) T)` with
//! the L-polynomial.
//!
//! Cohomology is handled in rescaled coordinates `e_v = pi^W(v) L^m(v) x^v`
//! (`W` the floor of the weight, `m` the mu-coordinate), in which every
//! reduction rule has π-integral coefficients when `c = d = 1`.

use crate::cyclotomic::CycloInt;
use crate::error::{Error, Result};
use crate::exact::{floor_rat, rat, ExactRat};
use crate::finite_field::is_prime;
use crate::gkz::{companion_matrix, picard_fuchs_operator};
use crate::lfunction::LPolynomial;
use crate::newton_hodge::{basis_set, m_of, weight_of, FamilyParams, LatticePoint};
use crate::padic::{LamPoly, LamPolyRing, PiAdicScalar};
use crate::reduction::{CohomClass, Reducer, ScalarRing};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

/// Coefficients `lambda_i` of `theta(t) = sum lambda_i t^i`.
#[derive(Clone, Debug)]
pub struct SplittingSeries {
    pub p: u64,
    pub prec: u32,
    pub coeffs: Vec<PiAdicScalar>,
}

impl SplittingSeries {
    /// `theta(1) = sum_i lambda_i`, a primitive p-th root of unity.
    pub fn value_at_one(&self) -> PiAdicScalar {
        self.coeffs
            .iter()
            .fold(PiAdicScalar::zero(self.p, self.prec), |acc, c| acc.add(c))
    }
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `lambda_0..lambda_{i_max}` mod `pi^prec`, each checked against
/// `ord_p lambda_i >= i (p-1)/p^2`.
pub fn theta_coefficients(p: u64, i_max: usize, prec: u32) -> Result<SplittingSeries> {
    if p == 2 || !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not an odd prime")));
    }
    let mut coeffs = Vec::with_capacity(i_max + 1);
    for i in 0..=i_max as u64 {
        // exp(pi t) exp(-pi t^p): j copies of t^p, i - pj copies of t
        let mut acc = PiAdicScalar::zero(p, prec);
        let mut j = 0;
        while p * j <= i {
            let r = ExactRat::new(
                if j % 2 == 0 {
                    BigInt::one()
                } else {
                    -BigInt::one()
                },
                factorial(i - p * j) * factorial(j),
            );
            let e = (i - j * (p - 1)) as i64;
            acc = acc.add(&PiAdicScalar::from_rat_pi(p, prec, &r, e)?);
            j += 1;
        }
        if let Some(v) = acc.valuation() {
            // v_pi = (p-1) ord_p
            if (v as u64) * p * p < i * (p - 1) * (p - 1) {
                return Err(Error::Invariant(format!(
                    "lambda_{i} violates the valuation bound"
                )));
            }
        }
        coeffs.push(acc);
    }
    Ok(SplittingSeries { p, prec, coeffs })
}

/// Smallest `i_max` with `ceil(i (p-1)^2 / p^2) >= target` for all `i > i_max`.
pub fn splitting_cutoff(p: u64, target: u32) -> usize {
    ((target as u64 * p * p).div_ceil((p - 1) * (p - 1))) as usize
}

/// Finite Laurent series in `x` with `L`-polynomial coefficients over π-adic
/// scalars, keyed by `(L-exponent, exponent)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TorusSeries {
    pub terms: BTreeMap<(u64, LatticePoint), PiAdicScalar>,
}

impl TorusSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, k: u64, v: LatticePoint, c: PiAdicScalar) {
        if c.is_zero() {
            return;
        }
        let key = (k, v);
        let next = match self.terms.remove(&key) {
            Some(old) => old.add(&c),
            None => c,
        };
        if !next.is_zero() {
            self.terms.insert(key, next);
        }
    }

    pub fn add(&self, o: &TorusSeries) -> TorusSeries {
        let mut out = self.clone();
        for ((k, v), c) in &o.terms {
            out.add_term(*k, *v, c.clone());
        }
        out
    }

    /// Multiplication by `x^u`.
    pub fn shift(&self, u: LatticePoint) -> TorusSeries {
        TorusSeries {
            terms: self
                .terms
                .iter()
                .map(|((k, v), c)| ((*k, v.add(u)), c.clone()))
                .collect(),
        }
    }
}

/// `sum A(v) x^v -> sum A(pv) x^v`; `L`-exponents untouched.
pub fn psi_p(s: &TorusSeries, p: u64) -> TorusSeries {
    let p = p as i64;
    let mut out = TorusSeries::new();
    for ((k, v), c) in &s.terms {
        if v.v1 % p == 0 && v.v2 % p == 0 {
            out.add_term(*k, LatticePoint::new(v.v1 / p, v.v2 / p), c.clone());
        }
    }
    out
}

struct WeightCache {
    params: FamilyParams,
    map: RefCell<HashMap<LatticePoint, (i64, i64)>>,
}

impl WeightCache {
    fn new(params: &FamilyParams) -> Self {
        WeightCache {
            params: *params,
            map: RefCell::new(HashMap::new()),
        }
    }

    /// `(floor w(v), m(v))`; `m` must be integral.
    fn get(&self, v: &LatticePoint) -> Result<(i64, i64)> {
        if let Some(x) = self.map.borrow().get(v) {
            return Ok(*x);
        }
        let w = floor_rat(&weight_of(&self.params, v)).to_i64().unwrap();
        let m = m_of(&self.params, v);
        if !m.is_integer() {
            return Err(Error::Precondition(
                "fractional L-exponent; requires c = d = 1".into(),
            ));
        }
        let r = (w, m.to_integer().to_i64().unwrap());
        self.map.borrow_mut().insert(*v, r);
        Ok(r)
    }

    fn weight(&self, v: &LatticePoint) -> ExactRat {
        weight_of(&self.params, v)
    }
}

/// Polynomials in `L` over `Z_p[pi]` acting on rescaled coordinates.
pub struct TruncatedPadicScalars {
    params: FamilyParams,
    pub ring: LamPolyRing,
    weights: WeightCache,
}

impl TruncatedPadicScalars {
    pub fn new(params: &FamilyParams, p: u64, prec: u32, lam_cap: usize) -> Result<Self> {
        if params.c != 1 || params.d != 1 {
            return Err(Error::Precondition(
                "p-adic reduction requires c = d = 1".into(),
            ));
        }
        Ok(TruncatedPadicScalars {
            params: *params,
            ring: LamPolyRing {
                p,
                prec,
                cap: lam_cap,
            },
            weights: WeightCache::new(params),
        })
    }
}

impl ScalarRing for TruncatedPadicScalars {
    type Elem = LamPoly;

    fn params(&self) -> &FamilyParams {
        &self.params
    }
    fn zero(&self) -> LamPoly {
        self.ring.zero()
    }
    fn one(&self) -> LamPoly {
        self.ring
            .scalar(PiAdicScalar::one(self.ring.p, self.ring.prec))
    }
    fn is_zero(&self, x: &LamPoly) -> bool {
        x.coeffs.is_empty()
    }
    fn add(&self, x: &LamPoly, y: &LamPoly) -> LamPoly {
        self.ring.add(x, y)
    }
    fn neg(&self, x: &LamPoly) -> LamPoly {
        self.ring.neg(x)
    }
    fn mul(&self, x: &LamPoly, y: &LamPoly) -> LamPoly {
        self.ring.mul(x, y)
    }

    fn factor(
        &self,
        num: i64,
        den: i64,
        pi_exp: i64,
        lam_exp: i64,
        src: &LatticePoint,
        dst: &LatticePoint,
    ) -> Result<LamPoly> {
        let (ws, ms) = self.weights.get(src)?;
        let (wd, md) = self.weights.get(dst)?;
        let e = pi_exp + ws - wd;
        let f = lam_exp + ms - md;
        if f < 0 {
            return Err(Error::Invariant(format!(
                "negative L-exponent rewriting ({},{}) to ({},{})",
                src.v1, src.v2, dst.v1, dst.v2
            )));
        }
        let s = PiAdicScalar::from_rat_pi(self.ring.p, self.ring.prec, &rat(num, den), e)?;
        Ok(self.ring.monomial(s, f as usize))
    }
}

/// Truncation policy for [`alpha0_matrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrobeniusPrecision {
    /// Working π-precision `M'`.
    pub pi_prec: u32,
    /// Weight cutoff for monomials after `psi_p`.
    pub w_max: i64,
    /// `L`-degree cutoff.
    pub l_max: usize,
}

impl FrobeniusPrecision {
    /// `M' = 8`, `W_max = 2N + p * max basis weight`, `L_max = 2p ab + 10`.
    pub fn defaults(params: &FamilyParams, p: u64) -> Self {
        let maxw = basis_set(params)
            .points
            .iter()
            .map(|v| weight_of(params, v))
            .max()
            .unwrap_or_default();
        let w = rat(2 * params.n() as i64, 1) + maxw * rat(p as i64, 1);
        FrobeniusPrecision {
            pi_prec: 8,
            w_max: floor_rat(&w).to_i64().unwrap(),
            l_max: (2 * p * params.a * params.b + 10) as usize,
        }
    }
}

/// Basis in which [`FrobMatrix::entries`] is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrobBasis {
    /// `1, D_L(1), ..., D_L^(N-1)(1)`
    Flag,
    /// Rescaled monomials `pi^W(v) x^v`, used when the flag basis is singular at `L = 0`.
    Monomial,
}

/// `U(L)`: column `j` holds the coordinates of the image of the `j`-th basis
/// element, over `Z_p[pi][L] / (pi^certified, L^l_max)`.
#[derive(Clone, Debug)]
pub struct FrobMatrix {
    pub params: FamilyParams,
    pub p: u64,
    pub precision: FrobeniusPrecision,
    /// π-precision the truncations are certified to.
    pub certified_prec: u32,
    pub basis: FrobBasis,
    pub entries: Vec<Vec<LamPoly>>,
    /// The same map on the rescaled monomial basis.
    pub monomial_entries: Vec<Vec<LamPoly>>,
}

impl FrobMatrix {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn ring(&self) -> LamPolyRing {
        LamPolyRing {
            p: self.p,
            prec: self.precision.pi_prec,
            cap: self.precision.l_max,
        }
    }
}

fn check_frobenius_inputs(params: &FamilyParams, p: u64) -> Result<()> {
    if params.c != 1 || params.d != 1 {
        return Err(Error::Precondition(
            "Frobenius matrix requires c = d = 1".into(),
        ));
    }
    if p == 2 || !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not an odd prime")));
    }
    if params.abcd() % p == 0 || p <= params.a.max(params.b) {
        return Err(Error::Precondition(format!(
            "need p > max(a, b) and p not dividing abcd, got p = {p}"
        )));
    }
    Ok(())
}

/// `D_L = L d/dL + pi L x^mu` on a class in rescaled coordinates.
fn apply_connection(
    ring: &TruncatedPadicScalars,
    h: &CohomClass<LamPoly>,
) -> Result<CohomClass<LamPoly>> {
    let mu = ring.params.mu();
    let mut out = CohomClass::new();
    for (v, c) in h.terms() {
        let (_, m) = ring.weights.get(v)?;
        let th = ring.ring.add(
            &ring.ring.theta(c),
            &ring.ring.scale(
                c,
                &PiAdicScalar::from_int(ring.ring.p, ring.ring.prec, m as i128),
            ),
        );
        out.add_term(ring, *v, &th);
        let f = ring.factor(1, 1, 1, 1, v, &v.add(mu))?;
        out.add_term(ring, v.add(mu), &ring.mul(c, &f));
    }
    Ok(out)
}

/// Flag matrix `E(L)`: column `j` is `D_L^j(1)` on the rescaled basis.
fn flag_matrix(ring: &TruncatedPadicScalars) -> Result<Vec<Vec<LamPoly>>> {
    let mut red = Reducer::new(ring, false);
    let n = red.basis().len();
    let one = ring.one();
    let mut cur = CohomClass::monomial(ring, LatticePoint::new(0, 0), one);
    let mut cols = Vec::with_capacity(n);
    for _ in 0..n {
        let c = red.coords(&cur)?;
        cur = apply_connection(ring, &red.class_of(&c))?;
        cols.push(c);
    }
    Ok((0..n)
        .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
        .collect())
}

fn mat_mul(r: &LamPolyRing, x: &[Vec<LamPoly>], y: &[Vec<LamPoly>]) -> Vec<Vec<LamPoly>> {
    let n = x.len();
    let m = y[0].len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..y.len()).fold(r.zero(), |acc, k| r.add(&acc, &r.mul(&x[i][k], &y[k][j])))
                })
                .collect()
        })
        .collect()
}

/// Inverse over `Z_p[pi][[L]]` truncated; pivots need unit constant terms.
fn mat_inv(r: &LamPolyRing, m: &[Vec<LamPoly>]) -> Result<Vec<Vec<LamPoly>>> {
    let n = m.len();
    let one = r.scalar(PiAdicScalar::one(r.p, r.prec));
    let mut a: Vec<Vec<LamPoly>> = m.to_vec();
    let mut inv: Vec<Vec<LamPoly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { one.clone() } else { r.zero() })
                .collect()
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .find(|&i| r.coeff(&a[i][c], 0).valuation() == Some(0))
            .ok_or_else(|| {
                Error::Invariant("flag matrix is not invertible over the π-adic ring".into())
            })?;
        a.swap(c, piv);
        inv.swap(c, piv);
        let s = r.inv(&a[c][c])?;
        for j in 0..n {
            a[c][j] = r.mul(&a[c][j], &s);
            inv[c][j] = r.mul(&inv[c][j], &s);
        }
        for i in 0..n {
            if i != c && !a[i][c].coeffs.is_empty() {
                let f = a[i][c].clone();
                for j in 0..n {
                    a[i][j] = r.sub(&a[i][j], &r.mul(&f, &a[c][j]));
                    inv[i][j] = r.sub(&inv[i][j], &r.mul(&f, &inv[c][j]));
                }
            }
        }
    }
    Ok(inv)
}

/// Frobenius matrix `U(L) = E(L^p)^{-1} A(L) E(L)`, where `A` is
/// `psi_p o (product of theta factors)` on the rescaled monomial basis.
pub fn alpha0_matrix(
    params: &FamilyParams,
    p: u64,
    prec: FrobeniusPrecision,
) -> Result<FrobMatrix> {
    check_frobenius_inputs(params, p)?;
    let mp = prec.pi_prec;
    let wmax = prec.w_max;
    if wmax < 0 || prec.l_max == 0 {
        return Err(Error::Precondition("cutoffs must be positive".into()));
    }
    let carry = mp + wmax as u32;
    let i_max = splitting_cutoff(p, carry);
    let theta = theta_coefficients(p, i_max, carry)?;
    let basis = basis_set(params);
    let n = basis.len();
    let lam_cap_target = prec.l_max.div_ceil(p as usize);
    let target = TruncatedPadicScalars::new(params, p, mp, lam_cap_target)?;
    let mut red = Reducer::new(&target, false);
    let full = LamPolyRing {
        p,
        prec: mp,
        cap: prec.l_max,
    };
    let weights = WeightCache::new(params);
    let (a, b) = (params.a as i64, params.b as i64);
    let pi = p as i64;
    let mut certified = mp;
    let mut amat = vec![vec![full.zero(); n]; n];
    for (col, bv) in basis.points.iter().enumerate() {
        let (wb, mb) = weights.get(bv)?;
        debug_assert_eq!(mb, 0);
        let pref = PiAdicScalar::pi_pow(p, carry, wb as u32);
        // collect psi_p of pi^W(b) x^b * theta(x1^a) theta(x2^b) theta(L x^mu)
        let mut image: BTreeMap<LatticePoint, Vec<PiAdicScalar>> = BTreeMap::new();
        for k in 0..=i_max {
            for i in 0..=(i_max - k) {
                let v1 = bv.v1 + a * i as i64 - k as i64;
                if v1.rem_euclid(pi) != 0 {
                    continue;
                }
                for j in 0..=(i_max - k - i) {
                    let v2 = bv.v2 + b * j as i64 - k as i64;
                    if v2.rem_euclid(pi) != 0 {
                        continue;
                    }
                    let vp = LatticePoint::new(v1 / pi, v2 / pi);
                    let coef = theta.coeffs[i]
                        .mul(&theta.coeffs[j])
                        .mul(&theta.coeffs[k])
                        .mul(&pref);
                    if coef.is_zero() {
                        continue;
                    }
                    if weights.weight(&vp) > rat(wmax, 1) {
                        // dropped: its rescaled contribution has valuation at
                        // least v(coef) - W(v'), and reduction never lowers it
                        let (wv, _) = weights.get(&vp)?;
                        let v = coef.valuation().unwrap_or(carry) as i64 - wv;
                        certified = certified.min(v.max(0) as u32);
                        continue;
                    }
                    let (wv, mv) = weights.get(&vp)?;
                    let mut c = coef;
                    for _ in 0..wv {
                        c = c.div_pi().map_err(|_| {
                            Error::Invariant("image term is not π-integral after rescaling".into())
                        })?;
                    }
                    let c = c.with_prec(mp);
                    let e = k as i64 - pi * mv;
                    if e < 0 {
                        return Err(Error::Invariant("negative L-exponent in the image".into()));
                    }
                    if e as usize >= prec.l_max || c.is_zero() {
                        continue;
                    }
                    let slot = image
                        .entry(vp)
                        .or_insert_with(|| vec![PiAdicScalar::zero(p, mp); prec.l_max]);
                    slot[e as usize] = slot[e as usize].add(&c);
                }
            }
        }
        for (vp, series) in image {
            let poly = LamPoly { coeffs: series };
            let poly = full.add(&poly, &full.zero());
            if poly.coeffs.is_empty() {
                continue;
            }
            let coords = red.coords_of_monomial(vp)?;
            for (row, cf) in coords.iter().enumerate() {
                if cf.coeffs.is_empty() {
                    continue;
                }
                let sub = full.substitute_power(cf, p as usize);
                amat[row][col] = full.add(&amat[row][col], &full.mul(&poly, &sub));
            }
        }
    }
    // terms beyond i_max have valuation >= carry - W_max >= M'
    let source = TruncatedPadicScalars::new(params, p, mp, prec.l_max)?;
    let e = flag_matrix(&source)?;
    let ep: Vec<Vec<LamPoly>> = e
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| full.substitute_power(x, p as usize))
                .collect()
        })
        .collect();
    // the flag basis can degenerate at L = 0 (det E(0) not a unit); U then
    // has a pole there and only the monomial-basis matrix is a power series
    let (basis, entries) = match mat_inv(&full, &ep) {
        Ok(ep_inv) => (
            FrobBasis::Flag,
            mat_mul(&full, &mat_mul(&full, &ep_inv, &amat), &e),
        ),
        Err(_) => (FrobBasis::Monomial, amat.clone()),
    };
    Ok(FrobMatrix {
        params: *params,
        p,
        precision: prec,
        certified_prec: certified,
        basis,
        entries,
        monomial_entries: amat,
    })
}

/// `G` in column convention (`D_L e_j = sum_i G_ij e_i`) for the π-normalised
/// connection: `G_free(pi^s L)` with `s = 1 + c/a + d/b`, which must be an
/// integer.
pub fn scaled_connection(params: &FamilyParams, ring: &LamPolyRing) -> Result<Vec<Vec<LamPoly>>> {
    let s = params.lambda_weight();
    if !s.is_integer() {
        return Err(Error::Precondition(
            "1 + c/a + d/b must be an integer to rescale the connection".into(),
        ));
    }
    let s = s.to_integer().to_i64().unwrap();
    let gt = companion_matrix(&picard_fuchs_operator(params))?;
    let n = gt.len();
    let mut g = vec![vec![ring.zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let q = &gt[j][i];
            let mut coeffs = Vec::new();
            for (k, c) in q.coeffs().iter().enumerate() {
                coeffs.push(PiAdicScalar::from_rat_pi(
                    ring.p,
                    ring.prec,
                    c,
                    s * k as i64,
                )?);
            }
            g[i][j] = ring.add(&LamPoly { coeffs }, &ring.zero());
        }
    }
    Ok(g)
}

/// Which form of the horizontality identity is tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum HorizontalityVariant {
    /// `L U' = U G - p G(L^p) U`
    Stated,
    /// `G` replaced by its transpose
    Transposed,
    /// `L U' = G U - p U G(L^p)`
    Reversed,
    /// reversed and transposed
    ReversedTransposed,
}

impl HorizontalityVariant {
    pub const ALL: [HorizontalityVariant; 4] = [
        HorizontalityVariant::Stated,
        HorizontalityVariant::Transposed,
        HorizontalityVariant::Reversed,
        HorizontalityVariant::ReversedTransposed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HorizontalityVariant::Stated => "stated",
            HorizontalityVariant::Transposed => "transposed",
            HorizontalityVariant::Reversed => "reversed",
            HorizontalityVariant::ReversedTransposed => "reversed_transposed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct HorizontalityReport {
    pub target_prec: u32,
    pub lam_cap: usize,
    /// Minimum π-valuation of the residual per variant; `None` means zero at
    /// working precision.
    pub min_valuation: BTreeMap<HorizontalityVariant, Option<u32>>,
}

impl HorizontalityReport {
    pub fn vanishes(&self, v: HorizontalityVariant) -> bool {
        match self.min_valuation.get(&v) {
            Some(None) => true,
            Some(Some(x)) => *x >= self.target_prec,
            None => false,
        }
    }

    pub fn vanishing_variants(&self) -> Vec<HorizontalityVariant> {
        HorizontalityVariant::ALL
            .into_iter()
            .filter(|v| self.vanishes(*v))
            .collect()
    }
}

fn transpose(m: &[Vec<LamPoly>]) -> Vec<Vec<LamPoly>> {
    let n = m.len();
    (0..n)
        .map(|i| (0..n).map(|j| m[j][i].clone()).collect())
        .collect()
}

/// Residual `L U' - U G + p G(L^p) U` (and its variants) mod `(pi^m, L^l)`.
pub fn horizontality_residual(
    u: &[Vec<LamPoly>],
    g: &[Vec<LamPoly>],
    ring: &LamPolyRing,
    m: u32,
    l: usize,
) -> Result<HorizontalityReport> {
    let n = u.len();
    if g.len() != n || u.iter().chain(g.iter()).any(|r| r.len() != n) {
        return Err(Error::Precondition(
            "U and G must be square of the same size".into(),
        ));
    }
    if l > ring.cap || m > ring.prec {
        return Err(Error::Precondition(
            "requested truncation exceeds the working truncation".into(),
        ));
    }
    let p = ring.p;
    let pscal = PiAdicScalar::from_int(p, ring.prec, p as i128);
    let mut out = BTreeMap::new();
    let theta_u: Vec<Vec<LamPoly>> = u
        .iter()
        .map(|r| r.iter().map(|x| ring.theta(x)).collect())
        .collect();
    for var in HorizontalityVariant::ALL {
        let gg = match var {
            HorizontalityVariant::Stated | HorizontalityVariant::Reversed => g.to_vec(),
            _ => transpose(g),
        };
        let gp: Vec<Vec<LamPoly>> = gg
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| ring.scale(&ring.substitute_power(x, p as usize), &pscal))
                    .collect()
            })
            .collect();
        let (first, second) = match var {
            HorizontalityVariant::Stated | HorizontalityVariant::Transposed => {
                (mat_mul(ring, u, &gg), mat_mul(ring, &gp, u))
            }
            _ => (mat_mul(ring, &gg, u), mat_mul(ring, u, &gp)),
        };
        let mut minv: Option<u32> = None;
        for i in 0..n {
            for j in 0..n {
                let r = ring.add(&ring.sub(&theta_u[i][j], &first[i][j]), &second[i][j]);
                for c in r.coeffs.iter().take(l) {
                    if let Some(v) = c.valuation() {
                        minv = Some(minv.map_or(v, |x: u32| x.min(v)));
                    }
                }
            }
        }
        out.insert(var, minv);
    }
    Ok(HorizontalityReport {
        target_prec: m,
        lam_cap: l,
        min_valuation: out,
    })
}

/// Teichmüller lift of `lambda_bar`: the (p-1)-st root of unity congruent to it.
pub fn teichmuller(p: u64, lambda_bar: u64, prec: u32) -> Result<PiAdicScalar> {
    if lambda_bar % p == 0 {
        return Err(Error::Precondition("lambda must be nonzero mod p".into()));
    }
    let k = prec.div_ceil(p as u32 - 1) + 1;
    let modulus = BigInt::from(p).pow(k);
    let mut x = BigInt::from(lambda_bar % p);
    for _ in 0..k {
        x = x.modpow(&BigInt::from(p), &modulus);
    }
    Ok(PiAdicScalar::from_int(p, prec, x.to_i128().unwrap()))
}

/// `det(1 - M T)` by Berkowitz's division-free recursion, so no π-adic
/// precision is lost.
pub fn det_one_minus(m: &[Vec<PiAdicScalar>], p: u64, prec: u32) -> Vec<PiAdicScalar> {
    let zero = PiAdicScalar::zero(p, prec);
    // coefficients of det(x - A_k), leading first
    let mut poly = vec![PiAdicScalar::one(p, prec)];
    for k in 0..m.len() {
        // A_{k+1} = [[A_k, C], [R, a]]
        let a = &m[k][k];
        let mut t = vec![PiAdicScalar::one(p, prec), a.neg()];
        let mut v: Vec<PiAdicScalar> = (0..k).map(|i| m[i][k].clone()).collect();
        for _ in 0..k {
            let rv = (0..k).fold(zero.clone(), |acc, j| acc.add(&m[k][j].mul(&v[j])));
            t.push(rv.neg());
            v = (0..k)
                .map(|i| (0..k).fold(zero.clone(), |acc, j| acc.add(&m[i][j].mul(&v[j]))))
                .collect();
        }
        poly = (0..=k + 1)
            .map(|i| (0..=i.min(k)).fold(zero.clone(), |acc, j| acc.add(&t[i - j].mul(&poly[j]))))
            .collect();
    }
    poly
}

/// Image of a cyclotomic integer under `zeta_p -> theta(1)`.
pub fn embed_cyclotomic(x: &CycloInt, theta_one: &PiAdicScalar) -> PiAdicScalar {
    let (p, prec) = (theta_one.p(), theta_one.prec());
    x.evaluate(
        theta_one,
        PiAdicScalar::one(p, prec),
        |a, b| a.add(b),
        |a, b| a.mul(b),
        |n| {
            let m = BigInt::from(p).pow(prec.div_ceil(p as u32 - 1) + 1);
            PiAdicScalar::from_int(
                p,
                prec,
                num_integer::Integer::mod_floor(n, &m).to_i128().unwrap(),
            )
        },
    )
}

#[derive(Clone, Debug)]
pub struct DetComparison {
    pub prec: u32,
    pub det: Vec<PiAdicScalar>,
    pub embedded: Vec<PiAdicScalar>,
    pub agree: bool,
}

/// Specialises `U` at the Teichmüller lift of `lambda_bar` and compares
/// `det(1 - U T)` with the L-polynomial under `zeta_p -> theta(1)`.
pub fn specialize_det_compare(
    u: &FrobMatrix,
    lambda_bar: u64,
    lpoly: &LPolynomial,
    m: u32,
) -> Result<DetComparison> {
    let p = u.p;
    if lpoly.p != p {
        return Err(Error::Precondition("prime mismatch".into()));
    }
    if m > u.certified_prec {
        return Err(Error::Starvation(format!(
            "comparison mod pi^{m} requested but U is certified only mod pi^{}",
            u.certified_prec
        )));
    }
    let ring = u.ring();
    let omega = teichmuller(p, lambda_bar, ring.prec)?;
    let at_omega: Vec<Vec<PiAdicScalar>> = u
        .entries
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| ring.evaluate(x, &omega).with_prec(m))
                .collect()
        })
        .collect();
    let det = det_one_minus(&at_omega, p, m);
    let theta = theta_coefficients(p, splitting_cutoff(p, m + 1), m)?;
    let t1 = theta.value_at_one();
    let embedded: Vec<PiAdicScalar> = lpoly
        .coeffs
        .iter()
        .map(|c| embed_cyclotomic(c, &t1))
        .collect();
    let agree =
        det.len() == embedded.len() && det.iter().zip(&embedded).all(|(x, y)| x.sub(y).is_zero());
    Ok(DetComparison {
        prec: m,
        det,
        embedded,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_low_coefficients() {
        let s = theta_coefficients(3, 30, 12).unwrap();
        assert_eq!(s.coeffs[0], PiAdicScalar::one(3, 12));
        assert_eq!(s.coeffs[1], PiAdicScalar::pi_pow(3, 12, 1));
        assert!(theta_coefficients(5, 30, 12).is_ok());
    }

    #[test]
    fn theta_one_is_a_pth_root_of_unity() {
        for p in [3u64, 5] {
            let prec = 10;
            let s = theta_coefficients(p, splitting_cutoff(p, prec + 1), prec).unwrap();
            let t = s.value_at_one();
            let mut pw = PiAdicScalar::one(p, prec);
            for _ in 0..p {
                pw = pw.mul(&t);
            }
            assert_eq!(pw, PiAdicScalar::one(p, prec));
            assert_ne!(t, PiAdicScalar::one(p, prec));
        }
    }

    #[test]
    fn psi_examples() {
        let one = PiAdicScalar::one(3, 4);
        let mut s = TorusSeries::new();
        s.add_term(0, LatticePoint::new(3, 0), one.clone());
        assert_eq!(
            psi_p(&s, 3).terms.keys().collect::<Vec<_>>(),
            vec![&(0, LatticePoint::new(1, 0))]
        );
        let mut t = TorusSeries::new();
        t.add_term(0, LatticePoint::new(2, 0), one);
        assert!(psi_p(&t, 3).terms.is_empty());
    }

    #[test]
    fn teichmuller_lifts() {
        let w = teichmuller(5, 2, 12).unwrap();
        let mut x = PiAdicScalar::one(5, 12);
        for _ in 0..4 {
            x = x.mul(&w);
        }
        assert_eq!(x, PiAdicScalar::one(5, 12));
        assert_eq!(teichmuller(3, 1, 8).unwrap(), PiAdicScalar::one(3, 8));
    }

    #[test]
    fn identity_with_zero_connection() {
        let ring = LamPolyRing {
            p: 3,
            prec: 6,
            cap: 6,
        };
        let one = ring.scalar(PiAdicScalar::one(3, 6));
        let u = vec![vec![one.clone(), ring.zero()], vec![ring.zero(), one]];
        let g = vec![vec![ring.zero(); 2]; 2];
        let rep = horizontality_residual(&u, &g, &ring, 4, 6).unwrap();
        assert!(rep.vanishes(HorizontalityVariant::Stated));
    }

    fn cofactor_det(m: &[Vec<PiAdicScalar>], p: u64, prec: u32) -> PiAdicScalar {
        if m.is_empty() {
            return PiAdicScalar::one(p, prec);
        }
        let mut acc = PiAdicScalar::zero(p, prec);
        for j in 0..m.len() {
            let minor: Vec<Vec<PiAdicScalar>> = m[1..]
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, x)| x.clone())
                        .collect()
                })
                .collect();
            let term = m[0][j].mul(&cofactor_det(&minor, p, prec));
            acc = if j % 2 == 0 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        acc
    }

    #[test]
    fn berkowitz_matches_principal_minors() {
        let (p, prec) = (3, 7);
        let m: Vec<Vec<PiAdicScalar>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        PiAdicScalar::from_coeffs(
                            p,
                            prec,
                            vec![(i * 7 + j * 3) as i128 - 9, (i + 2 * j) as i128],
                        )
                    })
                    .collect()
            })
            .collect();
        let got = det_one_minus(&m, p, prec);
        for k in 0..=4usize {
            let mut want = PiAdicScalar::zero(p, prec);
            for mask in 0u32..16 {
                let idx: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
                if idx.len() != k {
                    continue;
                }
                let sub: Vec<Vec<PiAdicScalar>> = idx
                    .iter()
                    .map(|&i| idx.iter().map(|&j| m[i][j].clone()).collect())
                    .collect();
                want = want.add(&cofactor_det(&sub, p, prec));
            }
            if k % 2 == 1 {
                want = want.neg();
            }
            assert_eq!(got[k], want, "T^{k}");
        }
    }

    #[test]
    fn det_of_diagonal() {
        let p = 5;
        let two = PiAdicScalar::from_int(p, 6, 2);
        let three = PiAdicScalar::from_int(p, 6, 3);
        let z = PiAdicScalar::zero(p, 6);
        let d = det_one_minus(
            &[vec![two.clone(), z.clone()], vec![z, three.clone()]],
            p,
            6,
        );
        assert_eq!(d[1], two.add(&three).neg());
        assert_eq!(d[2], two.mul(&three));
    }
}

#[cfg(test)]
mod flagship {
    use super::*;
    use crate::lfunction::{exp_sum_series, l_polynomial};

    fn flagship() -> (FamilyParams, FrobMatrix) {
        let f = FamilyParams::new(1, 1, 1, 1).unwrap();
        let u = alpha0_matrix(&f, 3, FrobeniusPrecision::defaults(&f, 3)).unwrap();
        (f, u)
    }

    #[test]
    fn unit_column_and_integrality() {
        let (_, u) = flagship();
        assert_eq!(u.n(), 3);
        assert_eq!(u.basis, FrobBasis::Flag);
        assert!(u.certified_prec >= 4);
        let c = u.ring().coeff(&u.monomial_entries[0][0], 0);
        assert!(c
            .sub(&PiAdicScalar::one(3, 8))
            .valuation()
            .is_none_or(|v| v >= 1));
    }

    #[test]
    fn stated_horizontality_vanishes() {
        let (f, u) = flagship();
        let ring = u.ring();
        let g = scaled_connection(&f, &ring).unwrap();
        let rep = horizontality_residual(&u.entries, &g, &ring, 4, 10).unwrap();
        assert!(rep.vanishes(HorizontalityVariant::Stated));
        assert!(!rep.vanishes(HorizontalityVariant::Transposed));
    }

    #[test]
    fn perturbation_shows_up_at_its_order() {
        let (f, u) = flagship();
        let ring = u.ring();
        let g = scaled_connection(&f, &ring).unwrap();
        let mut pert = u.entries.clone();
        let bump = ring.monomial(PiAdicScalar::pi_pow(3, 8, 3), 1);
        pert[1][2] = ring.add(&pert[1][2], &bump);
        let rep = horizontality_residual(&pert, &g, &ring, 8, 10).unwrap();
        assert_eq!(rep.min_valuation[&HorizontalityVariant::Stated], Some(3));
    }

    #[test]
    fn determinant_matches_l_polynomial() {
        let (f, u) = flagship();
        for lb in [1u64, 2] {
            let l = l_polynomial(&exp_sum_series(&f, 3, lb, 3, None).unwrap()).unwrap();
            let c = specialize_det_compare(&u, lb, &l, 4).unwrap();
            assert_eq!(c.det.len(), 4);
            assert!(c.agree, "lambda = {lb}");
        }
    }

    #[test]
    fn rejects_unsupported_inputs() {
        let f = FamilyParams::new(1, 1, 2, 1).unwrap();
        assert!(alpha0_matrix(&f, 5, FrobeniusPrecision::defaults(&f, 5)).is_err());
        let g = FamilyParams::new(3, 1, 1, 1).unwrap();
        assert!(alpha0_matrix(&g, 3, FrobeniusPrecision::defaults(&g, 3)).is_err());
        let h = FamilyParams::new(1, 1, 1, 1).unwrap();
        assert!(alpha0_matrix(&h, 2, FrobeniusPrecision::defaults(&h, 2)).is_err());
        let half = FamilyParams::new(2, 1, 1, 1).unwrap();
        let ring = LamPolyRing {
            p: 3,
            prec: 4,
            cap: 4,
        };
        assert!(scaled_connection(&half, &ring).is_err());
    }
}
