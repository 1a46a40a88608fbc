//! Exact integers, rationals, integer matrices and lower convex hulls.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

pub type ExactInt = BigInt;
pub type ExactRat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("matrix has rank {rank}, expected full row rank {rows}")]
    RankDeficient { rank: usize, rows: usize },
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("lower convex hull needs at least one finite point")]
    NoFinitePoints,
    #[error("duplicate abscissa {0}")]
    DuplicateAbscissa(String),
}

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> ExactRat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> ExactRat {
    BigRational::from_integer(BigInt::from(n))
}

/// Renders a rational as `"n"` or `"n/d"`.
pub fn rat_string(r: &ExactRat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn floor_rat(r: &ExactRat) -> BigInt {
    r.floor().to_integer()
}

/// Dense integer matrix stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    /// Builds a matrix from rows of machine integers. All rows must share a length.
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let entries = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| BigInt::from(x)))
            .collect();
        IntMatrix {
            rows: r,
            cols: c,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> Vec<BigInt> {
        self.entries[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn col(&self, c: usize) -> Vec<BigInt> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    /// Determinant by fraction-free (Bareiss) elimination. Square matrices only.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = (0..n).map(|r| self.row(r)).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        let mut a: Vec<Vec<BigInt>> = (0..self.rows).map(|r| self.row(r)).collect();
        let mut rank = 0;
        for c in 0..self.cols {
            let Some(p) = (rank..self.rows).find(|&r| !a[r][c].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            for r in rank + 1..self.rows {
                if a[r][c].is_zero() {
                    continue;
                }
                let f = a[r][c].clone();
                let g = a[rank][c].clone();
                for j in 0..self.cols {
                    a[r][j] = &a[r][j] * &g - &a[rank][j] * &f;
                }
            }
            rank += 1;
        }
        rank
    }

    /// True when the matrix is square with determinant +-1.
    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.det().abs().is_one()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.entries.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    // row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        for c in 0..self.cols {
            let v = self.get(dst, c) + k * self.get(src, c);
            self.set(dst, c, v);
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        for r in 0..self.rows {
            let v = self.get(r, dst) + k * self.get(r, src);
            self.set(r, dst, v);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -self.get(r, c);
            self.set(r, c, v);
        }
    }

    // Replaces rows (i, j) by the unimodular combination
    // [[s, t], [-y, x]] applied to them.
    fn combine_rows(&mut self, i: usize, j: usize, s: &BigInt, t: &BigInt, x: &BigInt, y: &BigInt) {
        for c in 0..self.cols {
            let ri = self.get(i, c).clone();
            let rj = self.get(j, c).clone();
            self.set(i, c, s * &ri + t * &rj);
            self.set(j, c, x * &rj - y * &ri);
        }
    }

    fn combine_cols(&mut self, i: usize, j: usize, s: &BigInt, t: &BigInt, x: &BigInt, y: &BigInt) {
        for r in 0..self.rows {
            let ci = self.get(r, i).clone();
            let cj = self.get(r, j).clone();
            self.set(r, i, s * &ci + t * &cj);
            self.set(r, j, x * &cj - y * &ci);
        }
    }
}

/// Result of a Smith normal form computation: `u * m * v == s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snf {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    /// Diagonal entries of `s`.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.s.rows.min(self.s.cols))
            .map(|i| self.s.get(i, i).clone())
            .collect()
    }
}

/// Smith normal form with unimodular transforms.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let (rows, cols) = (m.rows, m.cols);
    let mut s = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let n = rows.min(cols);

    for t in 0..n {
        // pivot: smallest nonzero absolute value in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for r in t..rows {
            for c in t..cols {
                let e = s.get(r, c);
                if !e.is_zero() {
                    match best {
                        Some((br, bc)) if s.get(br, bc).abs() <= e.abs() => {}
                        _ => best = Some((r, c)),
                    }
                }
            }
        }
        let Some((pr, pc)) = best else { break };
        s.swap_rows(t, pr);
        u.swap_rows(t, pr);
        s.swap_cols(t, pc);
        v.swap_cols(t, pc);

        loop {
            // clear column t below the pivot with gcd steps
            for r in t + 1..rows {
                if s.get(r, t).is_zero() {
                    continue;
                }
                let a = s.get(t, t).clone();
                let b = s.get(r, t).clone();
                if b.is_multiple_of(&a) {
                    let k = -(&b / &a);
                    s.add_row(r, t, &k);
                    u.add_row(r, t, &k);
                    continue;
                }
                let e = a.extended_gcd(&b);
                let (g, x, y) = (e.gcd, e.x, e.y);
                let (a_g, b_g) = (&a / &g, &b / &g);
                s.combine_rows(t, r, &x, &y, &a_g, &b_g);
                u.combine_rows(t, r, &x, &y, &a_g, &b_g);
            }
            for c in t + 1..cols {
                if s.get(t, c).is_zero() {
                    continue;
                }
                let a = s.get(t, t).clone();
                let b = s.get(t, c).clone();
                if b.is_multiple_of(&a) {
                    let k = -(&b / &a);
                    s.add_col(c, t, &k);
                    v.add_col(c, t, &k);
                    continue;
                }
                let e = a.extended_gcd(&b);
                let (g, x, y) = (e.gcd, e.x, e.y);
                let (a_g, b_g) = (&a / &g, &b / &g);
                s.combine_cols(t, c, &x, &y, &a_g, &b_g);
                v.combine_cols(t, c, &x, &y, &a_g, &b_g);
            }
            let col_clear = (t + 1..rows).all(|r| s.get(r, t).is_zero());
            if !col_clear {
                continue;
            }
            // divisibility: pivot must divide the whole trailing block
            let piv = s.get(t, t).clone();
            let bad = (t + 1..rows)
                .flat_map(|r| (t + 1..cols).map(move |c| (r, c)))
                .find(|&(r, c)| !s.get(r, c).is_multiple_of(&piv));
            match bad {
                Some((r, _)) => {
                    let one = BigInt::one();
                    s.add_row(t, r, &one);
                    u.add_row(t, r, &one);
                }
                None => break,
            }
        }
        if s.get(t, t).is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    Snf { u, s, v }
}

/// Primitive generators of the integer kernel `{l : A l = 0}`.
///
/// Each generator has content 1 and its first nonzero entry positive.
pub fn integer_kernel(a: &IntMatrix) -> Result<Vec<Vec<BigInt>>, ExactError> {
    if a.rows == 0 || a.cols == 0 {
        return Err(ExactError::EmptyMatrix);
    }
    let rank = a.rank();
    if rank < a.rows {
        return Err(ExactError::RankDeficient { rank, rows: a.rows });
    }
    let snf = smith_normal_form(a);
    let mut gens = Vec::new();
    for c in rank..a.cols {
        let mut g = snf.v.col(c);
        let content = g.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        if !content.is_zero() && !content.is_one() {
            for x in g.iter_mut() {
                *x = &*x / &content;
            }
        }
        if g.iter()
            .find(|x| !x.is_zero())
            .is_some_and(|x| x.is_negative())
        {
            for x in g.iter_mut() {
                *x = -&*x;
            }
        }
        gens.push(g);
    }
    Ok(gens)
}

/// Lower convex polygon with exact rational vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalPolygon {
    vertices: Vec<(ExactRat, ExactRat)>,
}

impl RationalPolygon {
    pub fn vertices(&self) -> &[(ExactRat, ExactRat)] {
        &self.vertices
    }

    /// Segment slopes paired with their horizontal lengths.
    pub fn slopes(&self) -> Vec<(ExactRat, ExactRat)> {
        self.vertices
            .windows(2)
            .map(|w| {
                let dx = &w[1].0 - &w[0].0;
                ((&w[1].1 - &w[0].1) / &dx, dx)
            })
            .collect()
    }

    /// Slopes repeated by (integral) horizontal length, ascending.
    pub fn slope_multiset(&self) -> Vec<ExactRat> {
        let mut out = Vec::new();
        for (s, len) in self.slopes() {
            let n = len.to_integer();
            let mut k = BigInt::zero();
            while k < n {
                out.push(s.clone());
                k += 1;
            }
        }
        out
    }

    /// Height of the polygon at abscissa `x` (None outside its span).
    pub fn value_at(&self, x: &ExactRat) -> Option<ExactRat> {
        let first = self.vertices.first()?;
        if x < &first.0 || x > &self.vertices.last()?.0 {
            return None;
        }
        if self.vertices.len() == 1 {
            return Some(first.1.clone());
        }
        for w in self.vertices.windows(2) {
            if x >= &w[0].0 && x <= &w[1].0 {
                let t = (x - &w[0].0) / (&w[1].0 - &w[0].0);
                return Some(&w[0].1 + t * (&w[1].1 - &w[0].1));
            }
        }
        None
    }
}

// cross product sign of (b - a) x (c - a)
fn cross(a: &(ExactRat, ExactRat), b: &(ExactRat, ExactRat), c: &(ExactRat, ExactRat)) -> ExactRat {
    (&b.0 - &a.0) * (&c.1 - &a.1) - (&b.1 - &a.1) * (&c.0 - &a.0)
}

/// Lower convex hull of points whose ordinate may be `None` (read as +infinity).
///
/// Collinear interior points are dropped.
pub fn lower_convex_hull(
    points: &[(ExactRat, Option<ExactRat>)],
) -> Result<RationalPolygon, ExactError> {
    let mut pts: Vec<(ExactRat, ExactRat)> = points
        .iter()
        .filter_map(|(x, y)| y.as_ref().map(|y| (x.clone(), y.clone())))
        .collect();
    if pts.is_empty() {
        return Err(ExactError::NoFinitePoints);
    }
    let mut xs: Vec<&ExactRat> = points.iter().map(|(x, _)| x).collect();
    xs.sort();
    if let Some(w) = xs.windows(2).find(|w| w[0] == w[1]) {
        return Err(ExactError::DuplicateAbscissa(rat_string(w[0])));
    }
    pts.sort_by(|a, b| a.0.cmp(&b.0));
    let mut hull: Vec<(ExactRat, ExactRat)> = Vec::new();
    for p in pts {
        while hull.len() >= 2
            && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_positive()
        {
            hull.pop();
        }
        hull.push(p);
    }
    Ok(RationalPolygon { vertices: hull })
}
