//! Combinatorics of the family: parameters, the monomial basis, weight and
//! m-functions, the Hodge polygon, slope multisets and ordinarity criteria.

use crate::exact::{
    lower_convex_hull, rat, rat_int, smith_normal_form, ExactRat, IntMatrix, RationalPolygon,
};
use crate::finite_field::is_prime;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("exponents must be positive, got ({0},{1},{2},{3})")]
    NonPositive(u64, u64, u64, u64),
    #[error("gcd({0},{1}) = {2} but the family requires coprime {3}")]
    NotCoprime(u64, u64, u64, &'static str),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("operation requires c = d = 1")]
    NeedsUnitCD,
}

/// Exponents `(a, b, c, d)` of `x1^a + x2^b + L / (x1^c x2^d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FamilyParams {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl FamilyParams {
    /// Validates positivity and gcd(a,b) = gcd(a,c) = gcd(b,c) = gcd(b,d) = 1.
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Result<Self, ParamError> {
        if a == 0 || b == 0 || c == 0 || d == 0 {
            return Err(ParamError::NonPositive(a, b, c, d));
        }
        for (x, y, name) in [(a, b, "a,b"), (a, c, "a,c"), (b, c, "b,c"), (b, d, "b,d")] {
            let g = x.gcd(&y);
            if g != 1 {
                return Err(ParamError::NotCoprime(x, y, g, name));
            }
        }
        Ok(FamilyParams { a, b, c, d })
    }

    /// `N = ad + ab + bc`, the degree of the L-polynomial.
    pub fn n(&self) -> usize {
        (self.a * self.d + self.a * self.b + self.b * self.c) as usize
    }

    pub fn mu(&self) -> LatticePoint {
        LatticePoint::new(-(self.c as i64), -(self.d as i64))
    }

    /// `ab * lcm(c, d)`, the common denominator of all weights.
    pub fn hodge_denominator(&self) -> u64 {
        self.a * self.b * self.c.lcm(&self.d)
    }

    pub fn abcd(&self) -> u64 {
        self.a * self.b * self.c * self.d
    }

    /// `1 + c/a + d/b`, the weight of one power of L.
    pub fn lambda_weight(&self) -> ExactRat {
        rat_int(1) + rat(self.c as i64, self.a as i64) + rat(self.d as i64, self.b as i64)
    }
}

/// A point of Z^2, the exponent of a Laurent monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LatticePoint {
    pub v1: i64,
    pub v2: i64,
}

impl LatticePoint {
    pub const fn new(v1: i64, v2: i64) -> Self {
        LatticePoint { v1, v2 }
    }

    pub fn add(self, o: LatticePoint) -> Self {
        LatticePoint::new(self.v1 + o.v1, self.v2 + o.v2)
    }

    pub fn sub(self, o: LatticePoint) -> Self {
        LatticePoint::new(self.v1 - o.v1, self.v2 - o.v2)
    }

    pub fn scale(self, k: i64) -> Self {
        LatticePoint::new(self.v1 * k, self.v2 * k)
    }
}

/// Ordered basis points of the cohomology for given parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisSet {
    pub params: FamilyParams,
    pub points: Vec<LatticePoint>,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, v: &LatticePoint) -> Option<usize> {
        self.points.iter().position(|p| p == v)
    }

    pub fn contains(&self, v: &LatticePoint) -> bool {
        self.index_of(v).is_some()
    }
}

/// Whether `v` lies in the box `-c < v1 <= a, -d < v2 <= b`.
pub fn in_box(params: &FamilyParams, v: &LatticePoint) -> bool {
    let (a, b, c, d) = (
        params.a as i64,
        params.b as i64,
        params.c as i64,
        params.d as i64,
    );
    -c < v.v1 && v.v1 <= a && -d < v.v2 && v.v2 <= b
}

/// Membership test for the basis set (box plus the case-dependent clause).
pub fn in_basis(params: &FamilyParams, v: &LatticePoint) -> bool {
    if !in_box(params, v) {
        return false;
    }
    let (a, b, c, d) = (
        params.a as i64,
        params.b as i64,
        params.c as i64,
        params.d as i64,
    );
    match (c > 1, d > 1) {
        (true, true) => {
            // (d-1)/(c-1) (v1 - a) <= v2 < (d-1)/(c-1) v1 + b
            (d - 1) * (v.v1 - a) <= (c - 1) * v.v2 && (c - 1) * v.v2 < (d - 1) * v.v1 + b * (c - 1)
        }
        (false, true) => !(v.v1 == a && v.v2 <= 0),
        (true, false) => !(v.v2 == b && v.v1 <= 0),
        (false, false) => !(v.v1 == 0 && v.v2 == b),
    }
}

/// Enumerates the box and keeps the basis points, ordered by `(v1, v2)`.
pub fn basis_set(params: &FamilyParams) -> BasisSet {
    let (a, b, c, d) = (
        params.a as i64,
        params.b as i64,
        params.c as i64,
        params.d as i64,
    );
    let mut points = Vec::new();
    for v1 in (1 - c)..=a {
        for v2 in (1 - d)..=b {
            let v = LatticePoint::new(v1, v2);
            if in_basis(params, &v) {
                points.push(v);
            }
        }
    }
    BasisSet {
        params: *params,
        points,
    }
}

/// The three subcones of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Cone {
    /// spanned by (a,0) and (0,b)
    Fbar,
    /// spanned by (a,0) and mu
    AMu,
    /// spanned by (0,b) and mu
    BMu,
}

/// Nonnegative coordinates `(s, t)` of `v` in a cone's generators, if any.
pub fn cone_coordinates(
    params: &FamilyParams,
    cone: Cone,
    v: &LatticePoint,
) -> Option<(ExactRat, ExactRat)> {
    let (a, b, c, d) = (
        params.a as i64,
        params.b as i64,
        params.c as i64,
        params.d as i64,
    );
    let (s, t) = match cone {
        Cone::Fbar => (rat(v.v1, a), rat(v.v2, b)),
        // v = s (a,0) + t (-c,-d)
        Cone::AMu => (rat(d * v.v1 - c * v.v2, a * d), rat(-v.v2, d)),
        // v = s (0,b) + t (-c,-d)
        Cone::BMu => (rat(c * v.v2 - d * v.v1, b * c), rat(-v.v1, c)),
    };
    (!s.is_negative() && !t.is_negative()).then_some((s, t))
}

/// First cone (in the order Fbar, AMu, BMu) containing `v`.
pub fn cone_of(params: &FamilyParams, v: &LatticePoint) -> Cone {
    [Cone::Fbar, Cone::AMu, Cone::BMu]
        .into_iter()
        .find(|&k| cone_coordinates(params, k, v).is_some())
        .expect("the three cones cover the plane")
}

/// Weight function: sum of the cone coordinates, every generator has weight 1.
pub fn weight_of(params: &FamilyParams, v: &LatticePoint) -> ExactRat {
    let (s, t) = cone_coordinates(params, cone_of(params, v), v).unwrap();
    s + t
}

/// The m-function: the mu-coordinate of `v` (zero on the Fbar cone).
pub fn m_of(params: &FamilyParams, v: &LatticePoint) -> ExactRat {
    match cone_of(params, v) {
        Cone::Fbar => ExactRat::zero(),
        k => cone_coordinates(params, k, v).unwrap().1,
    }
}

/// Total weight `W(r; v) = v1/a + v2/b + r (1 + c/a + d/b)`.
pub fn total_weight(params: &FamilyParams, r: &ExactRat, v: &LatticePoint) -> ExactRat {
    rat(v.v1, params.a as i64) + rat(v.v2, params.b as i64) + r * params.lambda_weight()
}

/// Multiplicities of basis weights, keyed by numerator over `ab * lcm(c,d)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightProfile {
    pub denominator: u64,
    pub buckets: BTreeMap<i64, usize>,
}

impl WeightProfile {
    pub fn total(&self) -> usize {
        self.buckets.values().sum()
    }
}

pub fn weight_profile(params: &FamilyParams) -> WeightProfile {
    let den = params.hodge_denominator();
    let mut buckets = BTreeMap::new();
    for v in basis_set(params).points {
        let scaled = weight_of(params, &v) * rat_int(den as i64);
        assert!(
            scaled.is_integer(),
            "weight of {v:?} has denominator not dividing {den}"
        );
        *buckets
            .entry(scaled.to_integer().to_i64().unwrap())
            .or_insert(0) += 1;
    }
    WeightProfile {
        denominator: den,
        buckets,
    }
}

/// Hodge polygon from the weight profile of the basis.
pub fn hodge_polygon(params: &FamilyParams) -> RationalPolygon {
    let profile = weight_profile(params);
    let den = rat_int(profile.denominator as i64);
    let mut pts = vec![(rat_int(0), Some(rat_int(0)))];
    let (mut x, mut y) = (rat_int(0), rat_int(0));
    for (&k, &count) in &profile.buckets {
        x += rat_int(count as i64);
        y += rat_int(k) / &den * rat_int(count as i64);
        pts.push((x.clone(), Some(y.clone())));
    }
    lower_convex_hull(&pts).expect("nonempty")
}

/// `{(ai + bj)/ab : 0 <= i <= b, 0 <= j <= a}` with the repeated value 1 kept once.
pub fn slope_multiset_ab(params: &FamilyParams) -> Result<Vec<ExactRat>, ParamError> {
    if params.c != 1 || params.d != 1 {
        return Err(ParamError::NeedsUnitCD);
    }
    let (a, b) = (params.a as i64, params.b as i64);
    let mut out = Vec::new();
    for i in 0..=b {
        for j in 0..=a {
            // (i,j) = (b,0) and (0,a) both give 1
            if (i, j) == (b, 0) {
                continue;
            }
            out.push(rat(a * i + b * j, a * b));
        }
    }
    out.sort();
    Ok(out)
}

/// Data for one facial simplex of the Newton polygon at infinity.
#[derive(Clone, Debug, Serialize)]
pub struct FaceReport {
    pub name: &'static str,
    pub matrix: Vec<Vec<i64>>,
    pub abs_det: u64,
    pub invariant_factors: Vec<u64>,
    /// gcd(p, det) = 1
    pub nondegenerate: bool,
    /// p = 1 mod (last invariant factor)
    pub congruence_ordinary: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrdinarityReport {
    pub params: FamilyParams,
    pub p: u64,
    pub faces: Vec<FaceReport>,
    pub gcd_a_d: u64,
    pub modulus: u64,
    /// gcd(a,d) = 1 and p = 1 mod ab lcm(c,d)
    pub criterion: bool,
    pub p_divides_abcd: bool,
}

pub fn ordinarity_report(params: &FamilyParams, p: u64) -> Result<OrdinarityReport, ParamError> {
    if !is_prime(p) {
        return Err(ParamError::NotPrime(p));
    }
    let (a, b, c, d) = (
        params.a as i64,
        params.b as i64,
        params.c as i64,
        params.d as i64,
    );
    let face_rows: [(&'static str, Vec<Vec<i64>>); 3] = [
        ("(a,0),(0,b)", vec![vec![a, 0], vec![0, b]]),
        ("(0,b),mu", vec![vec![0, b], vec![-c, -d]]),
        ("(a,0),mu", vec![vec![a, 0], vec![-c, -d]]),
    ];
    let faces = face_rows
        .into_iter()
        .map(|(name, rows)| {
            let m = IntMatrix::from_rows(&rows);
            let abs_det = m.det().abs().to_u64().unwrap();
            let inv: Vec<u64> = smith_normal_form(&m)
                .invariant_factors()
                .iter()
                .map(|x| x.to_u64().unwrap())
                .collect();
            let dn = *inv.last().unwrap();
            FaceReport {
                name,
                matrix: rows,
                abs_det,
                nondegenerate: p.gcd(&abs_det) == 1,
                congruence_ordinary: dn != 0 && p % dn == 1 % dn,
                invariant_factors: inv,
            }
        })
        .collect();
    let gcd_a_d = params.a.gcd(&params.d);
    let modulus = params.hodge_denominator();
    Ok(OrdinarityReport {
        params: *params,
        p,
        faces,
        gcd_a_d,
        modulus,
        criterion: gcd_a_d == 1 && p % modulus == 1 % modulus,
        p_divides_abcd: params.abcd() % p == 0,
    })
}

/// Helper for tests and callers that need integer weights.
pub fn is_integral(r: &ExactRat) -> bool {
    r.denom().is_one()
}
