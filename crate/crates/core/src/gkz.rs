//! The GKZ system of the family, its Picard-Fuchs operator in `theta = L d/dL`
//! form, companion matrices, indicial roots and Frobenius-method solutions at
//! `L = 0`.

use crate::error::{Error, Result};
use crate::exact::{integer_kernel, rat, rat_int, ExactRat, IntMatrix};
use crate::newton_hodge::FamilyParams;
use crate::poly::QPoly;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// The `2 x 3` matrix with columns `(a,0)`, `(0,b)`, `(-c,-d)`.
pub fn a_matrix(params: &FamilyParams) -> IntMatrix {
    let (a, b, c, d) = (
        params.a as i64,
        params.b as i64,
        params.c as i64,
        params.d as i64,
    );
    IntMatrix::from_rows(&[vec![a, 0, -c], vec![0, b, -d]])
}

/// Primitive generator of the relation lattice of [`a_matrix`].
pub fn relation_lattice(params: &FamilyParams) -> Result<Vec<BigInt>> {
    let mut k = integer_kernel(&a_matrix(params))?;
    if k.len() != 1 {
        return Err(Error::Invariant(format!("kernel has rank {}", k.len())));
    }
    Ok(k.remove(0))
}

/// Symbolic GKZ data for `alpha = (0,0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GkzSystem {
    pub a_matrix: IntMatrix,
    /// Exponents `(q1, q2, q3)` of `(D'_1)^q1 (D'_2)^q2 (D'_L)^q3 = id`.
    pub box_exponents: Vec<BigInt>,
    /// `D_1 = (c/a) D_L` and `D_2 = (d/b) D_L` after Euler elimination.
    pub d1_over_dl: ExactRat,
    pub d2_over_dl: ExactRat,
}

pub fn gkz_operators(params: &FamilyParams) -> Result<GkzSystem> {
    Ok(GkzSystem {
        a_matrix: a_matrix(params),
        box_exponents: relation_lattice(params)?,
        d1_over_dl: rat(params.c as i64, params.a as i64),
        d2_over_dl: rat(params.d as i64, params.b as i64),
    })
}

/// `sum_i coeffs[i](L) theta^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaOperator {
    pub coeffs: Vec<QPoly>,
}

impl ThetaOperator {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Highest power of `L` appearing in any coefficient.
    pub fn lambda_degree(&self) -> usize {
        self.coeffs
            .iter()
            .filter_map(|c| c.degree())
            .max()
            .unwrap_or(0)
    }

    /// `P_k(theta)`: the coefficient of `L^k`, as a polynomial in theta.
    pub fn lambda_slice(&self, k: usize) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|c| c.coeff(k)).collect())
    }

    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let th = match i {
                0 => String::new(),
                1 => "theta".into(),
                _ => format!("theta^{i}"),
            };
            let cf = c.render("L");
            parts.push(match (i, cf.as_str()) {
                (0, _) => format!("({cf})"),
                (_, "1") => th,
                _ => format!("({cf})*{th}"),
            });
        }
        parts.join(" + ")
    }
}

fn theta_block(scale: ExactRat, count: u64) -> QPoly {
    let mut out = QPoly::one();
    for i in 0..count {
        out = &out * &QPoly::new(vec![rat_int(-(i as i64)), scale.clone()]);
    }
    out
}

/// `prod_{i<bc}(c theta/a - i) prod_{j<ad}(d theta/b - j) prod_{k<ab}(theta - k) - L^ab`.
pub fn picard_fuchs_operator(params: &FamilyParams) -> ThetaOperator {
    let (a, b, c, d) = (params.a, params.b, params.c, params.d);
    let p0 = &(&theta_block(rat(c as i64, a as i64), b * c)
        * &theta_block(rat(d as i64, b as i64), a * d))
        * &theta_block(rat_int(1), a * b);
    let mut coeffs: Vec<QPoly> = p0
        .coeffs()
        .iter()
        .map(|x| QPoly::constant(x.clone()))
        .collect();
    coeffs[0] = &coeffs[0] - &QPoly::monomial(rat_int(1), (a * b) as usize);
    ThetaOperator { coeffs }
}

/// `G^t` for `theta^N = sum a_i(L) theta^i`: ones on the superdiagonal, last
/// row `(a_0, ..., a_{N-1})`.
pub fn companion_matrix(op: &ThetaOperator) -> Result<Vec<Vec<QPoly>>> {
    let n = op.order();
    let lead = op.coeffs[n].clone();
    if lead.degree() != Some(0) {
        return Err(Error::Precondition(
            "leading theta-coefficient must be a nonzero constant".into(),
        ));
    }
    let inv = rat_int(-1) / lead.coeff(0);
    let mut g = vec![vec![QPoly::zero(); n]; n];
    for (i, row) in g.iter_mut().enumerate().take(n - 1) {
        row[i + 1] = QPoly::one();
    }
    for i in 0..n {
        g[n - 1][i] = op.coeffs[i].scale(&inv);
    }
    Ok(g)
}

/// Roots of the `L^0` slice, read from the factored form.
pub fn indicial_roots(params: &FamilyParams) -> Vec<ExactRat> {
    let (a, b, c, d) = (
        params.a as i64,
        params.b as i64,
        params.c as i64,
        params.d as i64,
    );
    let mut out: Vec<ExactRat> = (0..b * c).map(|i| rat(i * a, c)).collect();
    out.extend((0..a * d).map(|j| rat(j * b, d)));
    out.extend((0..a * b).map(rat_int));
    out.sort();
    out
}

/// `sum_{i<order, j} coeffs[(i,j)] L^(rho+i) log(L)^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogSeries {
    pub rho: ExactRat,
    pub order: usize,
    pub coeffs: BTreeMap<(usize, usize), ExactRat>,
}

impl LogSeries {
    pub fn log_degree(&self) -> usize {
        self.coeffs.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn coeff(&self, i: usize, j: usize) -> ExactRat {
        self.coeffs
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(ExactRat::zero)
    }

    /// Coefficient polynomial in `log L` at `L^(rho+i)`.
    pub fn log_poly(&self, i: usize) -> QPoly {
        let deg = self.log_degree();
        QPoly::new((0..=deg).map(|j| self.coeff(i, j)).collect())
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Taylor coefficients of `P(s + D)` as a polynomial in `D`.
fn shifted(p: &QPoly, s: &ExactRat) -> Vec<ExactRat> {
    let mut out = Vec::new();
    let mut der = p.clone();
    let mut j = 0;
    while !der.is_zero() {
        out.push(der.eval(s) / ExactRat::from_integer(factorial(j)));
        der = der.derivative();
        j += 1;
    }
    out
}

/// `sum q_j D^j u` with `D = d/dlog`.
fn apply_d_poly(q: &[ExactRat], u: &QPoly) -> QPoly {
    let mut out = QPoly::zero();
    let mut du = u.clone();
    for qj in q {
        if du.is_zero() {
            break;
        }
        if !qj.is_zero() {
            out = &out + &du.scale(qj);
        }
        du = du.derivative();
    }
    out
}

fn antiderivative(u: &QPoly) -> QPoly {
    let mut c = vec![ExactRat::zero()];
    for (i, x) in u.coeffs().iter().enumerate() {
        c.push(x / rat_int(i as i64 + 1));
    }
    QPoly::new(c)
}

/// Particular solution of `P(s + D) u = r` with zero coefficients below
/// `log^m`, where `m` is the multiplicity of `s` as a root of `P`.
fn solve_shifted(p: &QPoly, s: &ExactRat, r: &QPoly) -> (QPoly, usize) {
    let q = shifted(p, s);
    let m = q
        .iter()
        .position(|x| !x.is_zero())
        .expect("nonzero operator");
    let rq = &q[m..];
    // R(D)^{-1} as a truncated series; D is nilpotent on r
    let need = r.degree().map(|d| d + 1).unwrap_or(0);
    let mut inv = vec![ExactRat::zero(); need];
    if need > 0 {
        inv[0] = rat_int(1) / rq[0].clone();
        for k in 1..need {
            let mut acc = ExactRat::zero();
            for i in 1..=k.min(rq.len() - 1) {
                acc += &rq[i] * &inv[k - i];
            }
            inv[k] = -acc / rq[0].clone();
        }
    }
    let mut u = apply_d_poly(&inv, r);
    for _ in 0..m {
        u = antiderivative(&u);
    }
    (u, m)
}

/// `op` applied to `y`, as log-polynomials at `L^(rho+n)` for `n < y.order`.
pub fn apply_operator(op: &ThetaOperator, y: &LogSeries) -> Vec<QPoly> {
    let kmax = op.lambda_degree();
    let slices: Vec<QPoly> = (0..=kmax).map(|k| op.lambda_slice(k)).collect();
    let u: Vec<QPoly> = (0..y.order).map(|i| y.log_poly(i)).collect();
    (0..y.order)
        .map(|n| {
            let mut acc = QPoly::zero();
            for (k, pk) in slices.iter().enumerate() {
                if k > n || pk.is_zero() {
                    continue;
                }
                let s = &y.rho + rat_int((n - k) as i64);
                acc = &acc + &apply_d_poly(&shifted(pk, &s), &u[n - k]);
            }
            acc
        })
        .collect()
}

/// Frobenius-method fundamental system: one solution per (root, log power)
/// label, normalised so the coefficient at its own label is 1 and at every
/// other label of the same residue class is 0.
pub fn formal_solutions(op: &ThetaOperator, order: usize) -> Result<Vec<LogSeries>> {
    if order == 0 {
        return Err(Error::Precondition("order must be at least 1".into()));
    }
    let p0 = op.lambda_slice(0);
    let kmax = op.lambda_degree();
    let slices: Vec<QPoly> = (0..=kmax).map(|k| op.lambda_slice(k)).collect();
    let roots = rational_roots(&p0)?;
    // group roots into classes mod Z, keyed by the smallest member
    let mut classes: BTreeMap<ExactRat, BTreeMap<i64, usize>> = BTreeMap::new();
    for (r, m) in &roots {
        let base = classes.keys().find(|b| (r - *b).is_integer()).cloned();
        match base {
            Some(b) if &b > r => {
                let mut shifted_map: BTreeMap<i64, usize> = classes.remove(&b).unwrap();
                let off = (&b - r).to_integer().to_i64().unwrap();
                shifted_map = shifted_map.into_iter().map(|(k, v)| (k + off, v)).collect();
                shifted_map.insert(0, *m);
                classes.insert(r.clone(), shifted_map);
            }
            Some(b) => {
                let off = (r - &b).to_integer().to_i64().unwrap();
                classes.get_mut(&b).unwrap().insert(off, *m);
            }
            None => {
                classes.insert(r.clone(), BTreeMap::from([(0, *m)]));
            }
        }
    }
    let mut out = Vec::new();
    for (rho0, offsets) in &classes {
        for (&n0, &mult) in offsets {
            for j0 in 0..mult {
                let rho = rho0 + rat_int(n0);
                let mut u: Vec<QPoly> = Vec::with_capacity(order);
                for n in 0..order {
                    let s = &rho + rat_int(n as i64);
                    let mut rhs = QPoly::zero();
                    for (k, pk) in slices.iter().enumerate().skip(1) {
                        if k > n || pk.is_zero() {
                            continue;
                        }
                        let sk = &rho + rat_int((n - k) as i64);
                        rhs = &rhs - &apply_d_poly(&shifted(pk, &sk), &u[n - k]);
                    }
                    let (mut un, m) = solve_shifted(&p0, &s, &rhs);
                    // free part: log powers below the multiplicity; only the
                    // label slot is set
                    if n == 0 {
                        if m != mult {
                            return Err(Error::Invariant("multiplicity mismatch".into()));
                        }
                        un = &un + &QPoly::monomial(rat_int(1), j0);
                    }
                    u.push(un);
                }
                let mut coeffs = BTreeMap::new();
                for (i, ui) in u.iter().enumerate() {
                    for (j, c) in ui.coeffs().iter().enumerate() {
                        if !c.is_zero() {
                            coeffs.insert((i, j), c.clone());
                        }
                    }
                }
                out.push(LogSeries { rho, order, coeffs });
            }
        }
    }
    if out.len() != op.order() {
        return Err(Error::Invariant(format!(
            "found {} solutions for an operator of order {}",
            out.len(),
            op.order()
        )));
    }
    Ok(out)
}

/// Rational roots of a polynomial with multiplicities, by rational-root
/// candidates and repeated exact division.
fn rational_roots(p: &QPoly) -> Result<Vec<(ExactRat, usize)>> {
    let mut cur = p.monic();
    let mut out = Vec::new();
    // clear denominators to get integer coefficients
    let lcm = cur
        .coeffs()
        .iter()
        .fold(BigInt::one(), |l, c| num_integer::lcm(l, c.denom().clone()));
    let ints: Vec<BigInt> = cur
        .coeffs()
        .iter()
        .map(|c| (c * ExactRat::from_integer(lcm.clone())).to_integer())
        .collect();
    let lead = ints.last().cloned().unwrap();
    let low = ints
        .iter()
        .find(|c| !c.is_zero())
        .cloned()
        .unwrap_or_else(BigInt::one);
    let divisors = |n: &BigInt| -> Vec<BigInt> {
        let n = n.to_i64().map(|x| x.unsigned_abs()).unwrap_or(0);
        (1..=n).filter(|k| n % k == 0).map(BigInt::from).collect()
    };
    let mut cands = vec![ExactRat::zero()];
    for pn in divisors(&low) {
        for qd in divisors(&lead) {
            let r = ExactRat::new(pn.clone(), qd);
            cands.push(r.clone());
            cands.push(-r);
        }
    }
    cands.sort();
    cands.dedup();
    for r in cands {
        let mut m = 0;
        loop {
            if cur.degree().unwrap_or(0) == 0 || !cur.eval(&r).is_zero() {
                break;
            }
            let (q, rem) = cur.div_rem(&QPoly::new(vec![-r.clone(), rat_int(1)]));
            debug_assert!(rem.is_zero());
            cur = q;
            m += 1;
        }
        if m > 0 {
            out.push((r, m));
        }
    }
    if cur.degree().unwrap_or(0) != 0 {
        return Err(Error::Invariant(
            "indicial polynomial has irrational roots".into(),
        ));
    }
    Ok(out)
}

/// Matrix of coefficients of each solution at every (absolute exponent, log
/// power) label, in solution order.
pub fn leading_coefficient_matrix(sols: &[LogSeries]) -> Vec<Vec<ExactRat>> {
    let labels: Vec<(ExactRat, usize)> = {
        let mut seen: Vec<(ExactRat, usize)> = Vec::new();
        for s in sols {
            let j = (0..=s.log_degree())
                .find(|&j| s.coeff(0, j) == rat_int(1))
                .unwrap_or(0);
            seen.push((s.rho.clone(), j));
        }
        seen
    };
    sols.iter()
        .map(|s| {
            labels
                .iter()
                .map(|(r, j)| {
                    let off = r - &s.rho;
                    if off.is_integer() && off >= ExactRat::zero() {
                        s.coeff(off.to_integer().to_usize().unwrap(), *j)
                    } else {
                        ExactRat::zero()
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat_string;

    fn fp(a: u64, b: u64, c: u64, d: u64) -> FamilyParams {
        FamilyParams::new(a, b, c, d).unwrap()
    }

    #[test]
    fn lattices() {
        let to = |v: Vec<BigInt>| v.iter().map(|x| x.to_i64().unwrap()).collect::<Vec<_>>();
        assert_eq!(
            to(relation_lattice(&fp(1, 1, 1, 1)).unwrap()),
            vec![1, 1, 1]
        );
        assert_eq!(
            to(relation_lattice(&fp(2, 3, 1, 1)).unwrap()),
            vec![3, 2, 6]
        );
        assert_eq!(
            to(gkz_operators(&fp(2, 1, 1, 1)).unwrap().box_exponents),
            vec![1, 2, 2]
        );
        let g = gkz_operators(&fp(2, 3, 1, 1)).unwrap();
        assert_eq!((g.d1_over_dl, g.d2_over_dl), (rat(1, 2), rat(1, 3)));
    }

    #[test]
    fn pf_operator_examples() {
        let op = picard_fuchs_operator(&fp(1, 1, 1, 1));
        assert_eq!(op.render(), "theta^3 + (-1*L)");
        let op = picard_fuchs_operator(&fp(2, 1, 1, 1));
        assert_eq!(op.order(), 5);
        assert_eq!(op.coeffs[5], QPoly::constant(rat(1, 2)));
        // theta/2 * (theta^2 - theta)^2 = (theta^5 - 2 theta^4 + theta^3)/2
        let want = [
            rat(0, 1),
            rat(0, 1),
            rat(0, 1),
            rat(1, 2),
            rat(-1, 1),
            rat(1, 2),
        ];
        for (i, w) in want.iter().enumerate().skip(1) {
            assert_eq!(op.coeffs[i], QPoly::constant(w.clone()));
        }
        assert_eq!(op.coeffs[0], QPoly::monomial(rat(-1, 1), 2));
    }

    #[test]
    fn companion_examples() {
        let g = companion_matrix(&picard_fuchs_operator(&fp(1, 1, 1, 1))).unwrap();
        assert_eq!(
            g[2],
            vec![QPoly::monomial(rat(1, 1), 1), QPoly::zero(), QPoly::zero()]
        );
        let g = companion_matrix(&picard_fuchs_operator(&fp(2, 1, 1, 1))).unwrap();
        assert_eq!(g[4][0], QPoly::monomial(rat(2, 1), 2));
        for (i, row) in g.iter().enumerate().take(4) {
            assert_eq!(row[i + 1], QPoly::one());
        }
    }

    #[test]
    fn indicial_examples() {
        let s = |v: Vec<ExactRat>| v.iter().map(rat_string).collect::<Vec<_>>();
        assert_eq!(s(indicial_roots(&fp(1, 1, 1, 1))), vec!["0", "0", "0"]);
        assert_eq!(
            s(indicial_roots(&fp(2, 1, 1, 1))),
            vec!["0", "0", "0", "1", "1"]
        );
        let f = fp(1, 1, 2, 1);
        assert_eq!(indicial_roots(&f).len(), f.n());
    }

    #[test]
    fn analytic_solution_of_theta_cubed() {
        let op = picard_fuchs_operator(&fp(1, 1, 1, 1));
        let sols = formal_solutions(&op, 8).unwrap();
        assert_eq!(sols.len(), 3);
        let logs: Vec<usize> = sols.iter().map(|s| s.log_degree()).collect();
        assert_eq!(logs, vec![0, 1, 2]);
        for n in 0..8 {
            let f = factorial(n);
            assert_eq!(
                sols[0].coeff(n, 0),
                ExactRat::new(BigInt::one(), &f * &f * &f)
            );
        }
    }

    #[test]
    fn solutions_substitute_to_zero() {
        for f in [
            fp(1, 1, 1, 1),
            fp(2, 1, 1, 1),
            fp(1, 1, 2, 1),
            fp(2, 3, 1, 1),
        ] {
            let op = picard_fuchs_operator(&f);
            let sols = formal_solutions(&op, 4 * f.n()).unwrap();
            for s in &sols {
                assert!(apply_operator(&op, s).iter().all(|q| q.is_zero()), "{f:?}");
            }
            let m = leading_coefficient_matrix(&sols);
            for (i, row) in m.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    assert_eq!(*x, if i == j { rat(1, 1) } else { rat(0, 1) });
                }
            }
        }
    }
}
